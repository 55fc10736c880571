//! Linearization of `Q` around an equilibrium `P` in the weighted
//! coordinates `F = P + R^{1/2} f`, spectral checks of the resulting
//! operator and the signature of `diag(p^1)` on its kernel.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibrium::EquilibriumDistribution;
use crate::error::{Error, Result};
use crate::kinetics::{self, psi, r_weight};
use crate::model::{normality_check, DiscreteModel};

/// Largest detailed-balance mismatch (relative) accepted as an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;
/// Relative eigenvalue threshold for the kernel.
pub const KERNEL_TOL: f64 = 1e-10;
/// Zero threshold for the inertia of the restricted `B`-form.
pub const SIGNATURE_TOL: f64 = 1e-12;

/// `R = P (1 - αP)(1 + (1 - α)P)`.
pub fn r_weights(p: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside [0, 1]")));
    }
    p.iter()
        .map(|&y| {
            let upper = if alpha > 0.0 {
                1.0 / alpha
            } else {
                f64::INFINITY
            };
            if y > 0.0 && y < upper {
                Ok(r_weight(y, alpha))
            } else {
                Err(Error::Domain(format!("P = {y} is not inside (0, {upper})")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedOperator {
    pub matrix: DMatrix<f64>,
    pub equilibrium: Vec<f64>,
    pub r: Vec<f64>,
}

impl LinearizedOperator {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(f))
            .iter()
            .copied()
            .collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

struct Prepared {
    r: Vec<f64>,
    inv_sqrt_r: Vec<f64>,
    psi: Vec<f64>,
}

fn prepare(model: &DiscreteModel, p: &[f64]) -> Result<Prepared> {
    if p.len() != model.len() {
        return Err(Error::Domain(format!(
            "equilibrium has {} components, model has {}",
            p.len(),
            model.len()
        )));
    }
    let alpha = model.alpha();
    let r = r_weights(p, alpha)?;
    let balance = kinetics::detailed_balance(model, p)?;
    if balance.max_rel > EQUILIBRIUM_TOL {
        return Err(Error::NotEquilibrium {
            residual: balance.max_rel,
            tolerance: EQUILIBRIUM_TOL,
        });
    }
    Ok(Prepared {
        inv_sqrt_r: r.iter().map(|x| 1.0 / x.sqrt()).collect(),
        psi: p.iter().map(|&y| psi(y, alpha)).collect(),
        r,
    })
}

/// Calls `visit(weight, v)` for every canonical quadruple, where
/// `weight = γ · multiplicity · P_i P_j Ψ(P_k) Ψ(P_l) / 4` and `v` is the
/// sparse vector `e_i/√R_i + e_j/√R_j - e_k/√R_k - e_l/√R_l`.
fn for_each_term(
    model: &DiscreteModel,
    p: &[f64],
    prep: &Prepared,
    mut visit: impl FnMut(f64, &[(usize, f64)]),
) {
    for q in model.collisions() {
        let [i, j, k, l] = q.indices();
        let w = 0.25 * q.gamma * q.multiplicity() as f64 * p[i] * p[j] * prep.psi[k] * prep.psi[l];
        let mut v: Vec<(usize, f64)> = Vec::with_capacity(4);
        for (idx, sign) in [(i, 1.0), (j, 1.0), (k, -1.0), (l, -1.0)] {
            let c = sign * prep.inv_sqrt_r[idx];
            match v.iter_mut().find(|(n, _)| *n == idx) {
                Some(entry) => entry.1 += c,
                None => v.push((idx, c)),
            }
        }
        visit(w, &v);
    }
}

/// Assembles `L = Σ w v vᵀ`; every rank-one term is symmetric, and upper
/// entries are mirrored so that `L = Lᵀ` holds bitwise.
pub fn assemble_linearized(
    model: &DiscreteModel,
    p: &EquilibriumDistribution,
) -> Result<LinearizedOperator> {
    let p = p.values();
    let prep = prepare(model, p)?;
    let n = model.len();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for_each_term(model, p, &prep, |w, v| {
        for &(a, va) in v {
            for &(b, vb) in v {
                if a <= b {
                    l[(a, b)] += w * va * vb;
                }
            }
        }
    });
    for a in 0..n {
        for b in 0..a {
            l[(a, b)] = l[(b, a)];
        }
    }
    Ok(LinearizedOperator {
        matrix: l,
        equilibrium: p.to_vec(),
        r: prep.r,
    })
}

/// `⟨g, L f⟩` evaluated directly as the quadruple sum `Σ w (v·g)(v·f)`.
pub fn weak_form_linearized(
    model: &DiscreteModel,
    p: &EquilibriumDistribution,
    g: &[f64],
    f: &[f64],
) -> Result<f64> {
    let p = p.values();
    let prep = prepare(model, p)?;
    if g.len() != model.len() || f.len() != model.len() {
        return Err(Error::Domain(
            "test vectors must have one entry per lattice point".into(),
        ));
    }
    let mut total = 0.0;
    for_each_term(model, p, &prep, |w, v| {
        let vg: f64 = v.iter().map(|&(n, c)| c * g[n]).sum();
        let vf: f64 = v.iter().map(|&(n, c)| c * f[n]).sum();
        total += w * vg * vf;
    });
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub plus: usize,
    pub minus: usize,
    pub zero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
    /// Orthonormal kernel basis, one column per kernel eigenvalue.
    #[serde(skip)]
    pub kernel_basis: DMatrix<f64>,
    pub projection_residual: f64,
    pub b_signature: Signature,
    pub operator_norm: f64,
    pub max_asymmetry: f64,
    /// Kernel dimension required by the collision invariants, when the
    /// model is normal.
    pub expected_kernel_dim: Option<usize>,
}

/// Inertia of `Kᵀ diag(b) K`.
pub fn b_signature(kernel: &DMatrix<f64>, b: &[f64]) -> Signature {
    let k = kernel.ncols();
    if k == 0 {
        return Signature {
            plus: 0,
            minus: 0,
            zero: 0,
        };
    }
    let bk = DMatrix::from_fn(kernel.nrows(), k, |r, c| b[r] * kernel[(r, c)]);
    let mut form = kernel.transpose() * bk;
    form = (&form + form.transpose()) * 0.5;
    let eig = SymmetricEigen::new(form).eigenvalues;
    let mut sig = Signature {
        plus: 0,
        minus: 0,
        zero: 0,
    };
    for &e in eig.iter() {
        if e > SIGNATURE_TOL {
            sig.plus += 1;
        } else if e < -SIGNATURE_TOL {
            sig.minus += 1;
        } else {
            sig.zero += 1;
        }
    }
    sig
}

/// Orthonormal basis of the column space of `w` (singular values above a
/// relative cutoff).
fn orthonormal_columns(w: DMatrix<f64>) -> DMatrix<f64> {
    if w.ncols() == 0 || w.nrows() == 0 {
        return DMatrix::zeros(w.nrows(), 0);
    }
    let svd = w.svd(true, false);
    let u = svd.u.expect("requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&c| svd.singular_values[c] > 1e-12 * smax.max(f64::MIN_POSITIVE))
        .collect();
    DMatrix::from_fn(u.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

pub fn spectral_report(op: &LinearizedOperator, model: &DiscreteModel) -> Result<SpectralReport> {
    let n = op.len();
    let eig = SymmetricEigen::new(op.matrix.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let norm = eigenvalues.iter().fold(0.0, |m: f64, e| m.max(e.abs()));
    if let Some(&min) = eigenvalues.first() {
        if min < -KERNEL_TOL * norm.max(1.0) {
            return Err(Error::NotPsd { eigenvalue: min });
        }
    }
    let cutoff = KERNEL_TOL * norm.max(1.0);
    let kernel_cols: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&c| eig.eigenvalues[c].abs() < cutoff)
        .collect();
    let kernel_basis = DMatrix::from_fn(n, kernel_cols.len(), |r, c| {
        eig.eigenvectors[(r, kernel_cols[c])]
    });
    let kernel_dim = kernel_cols.len();

    let report = normality_check(model);
    let expected_kernel_dim = report.is_normal.then_some(report.invariant_nullspace_dim);
    if let Some(expected) = expected_kernel_dim {
        if kernel_dim != expected {
            return Err(Error::KernelMismatch {
                found: kernel_dim,
                expected,
            });
        }
    }

    let rows = model.invariant_rows();
    let w = DMatrix::from_fn(n, rows.len(), |r, c| op.r[r].sqrt() * rows[c][r]);
    let w = orthonormal_columns(w);
    let projected = &kernel_basis * (kernel_basis.transpose() * &w);
    let projection_residual = (&w - projected).norm();

    let b: Vec<f64> = (0..n).map(|i| model.lattice().p1(i)).collect();
    Ok(SpectralReport {
        b_signature: b_signature(&kernel_basis, &b),
        eigenvalues,
        kernel_dim,
        kernel_basis,
        projection_residual,
        operator_norm: norm,
        max_asymmetry: op.max_asymmetry(),
        expected_kernel_dim,
    })
}

/// Number of random directions used by [`finite_difference_check`].
pub const FD_DIRECTIONS: usize = 8;

/// Largest relative mismatch between `-R^{-1/2} Q(P + ε R^{1/2} f) / ε` and
/// `L f` over seeded random directions `f`; kernel-dominated directions
/// (`‖Lf‖` at rounding level) are skipped.
pub fn finite_difference_check(
    model: &DiscreteModel,
    op: &LinearizedOperator,
    epsilon: f64,
    seed: u64,
) -> Result<f64> {
    if !(1e-8..=1e-4).contains(&epsilon) {
        return Err(Error::Domain(format!(
            "epsilon = {epsilon} is outside [1e-8, 1e-4]"
        )));
    }
    let n = op.len();
    let alpha = model.alpha();
    let sqrt_r: Vec<f64> = op.r.iter().map(|x| x.sqrt()).collect();
    let norm = op.matrix.amax().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..FD_DIRECTIONS {
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lf = op.apply(&f);
        let lf_norm = lf.iter().map(|x| x * x).sum::<f64>().sqrt();
        if lf_norm <= 1e-8 * norm {
            continue;
        }
        let perturbed: Vec<f64> = (0..n)
            .map(|i| op.equilibrium[i] + epsilon * sqrt_r[i] * f[i])
            .collect();
        if kinetics::Distribution::new(perturbed.clone(), alpha).is_err() {
            return Err(Error::Domain(format!(
                "perturbation by epsilon = {epsilon} leaves the admissible region"
            )));
        }
        let q = kinetics::collision_operator(model, &perturbed)?;
        let diff: f64 = (0..n)
            .map(|i| {
                let d = -q[i] / (epsilon * sqrt_r[i]) - lf[i];
                d * d
            })
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff / lf_norm);
    }
    Ok(worst)
}
