//! Maxwellians and the equilibria `P / Ψ_α(P) = M` they induce.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::kinetics::{self, ln_psi, psi, r_weight, MomentVector};
use crate::model::{normality_check, physical_invariants, DiscreteModel};

/// `M = exp(-a - b·p - c|p|^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxwellianParams {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: f64,
}

impl MaxwellianParams {
    pub fn new(a: f64, b: Vec<f64>, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(0.0, vec![0.0; dim], 0.0)
    }

    /// Coefficients in the order of the physical invariant rows.
    pub fn to_theta(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.b.len() + 2);
        t.push(self.a);
        t.extend_from_slice(&self.b);
        t.push(self.c);
        t
    }

    pub fn from_theta(theta: &[f64]) -> Self {
        let n = theta.len();
        Self::new(theta[0], theta[1..n - 1].to_vec(), theta[n - 1])
    }
}

pub fn maxwellian(model: &DiscreteModel, params: &MaxwellianParams) -> Result<Vec<f64>> {
    let lat = model.lattice();
    if params.b.len() != lat.dim() {
        return Err(Error::Domain(format!(
            "b has {} components, lattice dimension is {}",
            params.b.len(),
            lat.dim()
        )));
    }
    Ok((0..lat.len())
        .map(|i| {
            let bp: f64 = params
                .b
                .iter()
                .zip(lat.momentum_f64(i))
                .map(|(b, p)| b * p)
                .sum();
            (-params.a - bp - params.c * lat.energy(i)).exp()
        })
        .collect())
}

const BRACKET_EPS: f64 = 1e-15;
const MAX_ROOT_ITERATIONS: usize = 200;

/// Unique `y` in `(0, 1/α)` with `y / Ψ_α(y) = m`.
///
/// Safeguarded Newton on `log y - log Ψ(y) - log m`, whose derivative is
/// `1 / R(y)`; steps leaving the current bracket fall back to bisection.
/// For bosons (`α = 0`) the map `y / (1 + y)` saturates at 1, so `m < 1`
/// is required.
pub fn solve_equilibrium_component(m: f64, alpha: f64) -> Result<f64> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!(
            "Maxwellian value {m} must be positive and finite"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside [0, 1]")));
    }
    if alpha == 0.0 && m >= 1.0 {
        return Err(Error::Domain(format!(
            "no boson equilibrium for Maxwellian value {m} >= 1"
        )));
    }
    let target = m.ln();
    let g = |y: f64| y.ln() - ln_psi(y, alpha) - target;

    let mut lo = BRACKET_EPS.min(0.5 * m);
    while g(lo) > 0.0 {
        lo *= 0.5;
        if lo == 0.0 {
            return Err(Error::Domain(format!("equilibrium for m = {m} underflows")));
        }
    }
    let mut hi = if alpha > 0.0 {
        (1.0 - BRACKET_EPS) / alpha
    } else {
        (2.0 * m / (1.0 - m)).max(1.0)
    };
    while g(hi) < 0.0 {
        if alpha > 0.0 {
            let next = hi + 0.5 * (1.0 / alpha - hi);
            if next == hi {
                return Err(Error::Domain(format!(
                    "equilibrium for m = {m} saturates in double precision"
                )));
            }
            hi = next;
        } else {
            hi *= 2.0;
        }
    }

    let mut y = (m / (1.0 + alpha * m)).clamp(lo, hi);
    let mut located = false;
    for _ in 0..MAX_ROOT_ITERATIONS {
        let gy = g(y);
        if gy == 0.0 {
            located = true;
            break;
        }
        if gy < 0.0 {
            lo = lo.max(y);
        } else {
            hi = hi.min(y);
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            located = true;
            break;
        }
        let newton = y - gy * r_weight(y, alpha);
        let next = if newton > lo && newton < hi {
            newton
        } else if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - y).abs();
        y = next;
        if step <= 2.0 * f64::EPSILON * y {
            located = true;
            break;
        }
    }
    // Close to saturation the ratio is so ill-conditioned that neighbouring
    // floats straddle the root; a root bracketed to a few ulps is accepted.
    let residual = (y / psi(y, alpha) - m).abs();
    if residual > 1e-13 * (1.0 + m) && !located {
        return Err(Error::NoConvergence {
            iterations: MAX_ROOT_ITERATIONS,
            residual,
        });
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumDistribution {
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<MaxwellianParams>,
}

impl EquilibriumDistribution {
    /// Wraps a candidate equilibrium given only by its values.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            values,
            params: None,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn equilibrium_from_maxwellian(
    model: &DiscreteModel,
    params: &MaxwellianParams,
) -> Result<EquilibriumDistribution> {
    let alpha = model.alpha();
    let values = maxwellian(model, params)?
        .into_iter()
        .map(|m| solve_equilibrium_component(m, alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(EquilibriumDistribution {
        values,
        params: Some(params.clone()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentFit {
    pub params: MaxwellianParams,
    pub equilibrium: EquilibriumDistribution,
    pub iterations: usize,
    /// Largest moment mismatch relative to `Σ |φ_i| P_i`.
    pub residual: f64,
    /// The physical invariants are dependent on this lattice; coefficients
    /// of the dependent rows are pinned to zero.
    pub degenerate: bool,
}

const MOMENT_MAX_ITERATIONS: usize = 100;
const MOMENT_TOL: f64 = 1e-13;
const MOMENT_ACCEPT: f64 = 1e-10;
const MAX_HALVINGS: usize = 60;

struct MomentProblem<'a> {
    model: &'a DiscreteModel,
    /// Independent invariant rows (indices into the `d + 2` physical rows).
    kept: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl MomentProblem<'_> {
    fn theta_full(&self, theta: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.rows.len()];
        for (&r, &t) in self.kept.iter().zip(theta) {
            full[r] = t;
        }
        full
    }

    fn equilibrium(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let full = MaxwellianParams::from_theta(&self.theta_full(theta));
        Ok(equilibrium_from_maxwellian(self.model, &full)?.values)
    }

    /// Residuals relative to `Σ |φ_i| P_i`, over all `d + 2` rows.
    fn residual(&self, p: &[f64], target: &[f64]) -> (Vec<f64>, f64) {
        let mut raw = Vec::with_capacity(self.rows.len());
        let mut worst: f64 = 0.0;
        for (row, &t) in self.rows.iter().zip(target) {
            let m: f64 = row.iter().zip(p).map(|(a, b)| a * b).sum();
            let scale: f64 = row
                .iter()
                .zip(p)
                .map(|(a, b)| a.abs() * b)
                .sum::<f64>()
                .max(f64::MIN_POSITIVE);
            raw.push(m - t);
            worst = worst.max((m - t).abs() / scale);
        }
        (raw, worst)
    }

    fn norm(&self, raw: &[f64]) -> f64 {
        self.kept
            .iter()
            .map(|&r| raw[r] * raw[r])
            .sum::<f64>()
            .sqrt()
    }
}

/// The equilibrium whose moments equal `j`.
///
/// Newton iteration on the Maxwellian coefficients with the symmetric
/// Jacobian `-Σ_i φ^r_i φ^s_i R_i`, damped by step halving so that the
/// equilibrium stays interior and the residual decreases.
pub fn equilibrium_from_moments(
    model: &DiscreteModel,
    j: &MomentVector,
    guess: Option<&MaxwellianParams>,
) -> Result<MomentFit> {
    let dim = model.dim();
    let n = model.len();
    if j.0.len() != dim + 2 {
        return Err(Error::Domain(format!(
            "moment vector needs {} components",
            dim + 2
        )));
    }
    let report = normality_check(model);
    if !report.is_normal {
        return Err(Error::NotNormal(format!(
            "{} spurious collision invariant(s)",
            report.spurious_basis.len()
        )));
    }
    if j.0[0].is_nan() || j.0[0] <= 0.0 {
        return Err(Error::Domain(format!(
            "mass moment {} must be positive",
            j.0[0]
        )));
    }

    let physical = physical_invariants(model.lattice());
    let mut kept: Vec<usize> = Vec::new();
    for r in 0..physical.rows.len() {
        let mut trial: Vec<_> = kept.iter().map(|&k| physical.rows[k].clone()).collect();
        trial.push(physical.rows[r].clone());
        if exact::rank_of(&trial, n) > kept.len() {
            kept.push(r);
        }
    }
    let problem = MomentProblem {
        model,
        kept,
        rows: physical.rows_f64(),
    };
    let degenerate = problem.kept.len() < dim + 2;

    let mut theta = initial_theta(&problem, j, guess)?;
    let mut p = problem.equilibrium(&theta)?;
    let (mut raw, mut rel) = problem.residual(&p, &j.0);
    let alpha = model.alpha();

    let mut iterations = 0;
    while rel > MOMENT_TOL {
        if iterations == MOMENT_MAX_ITERATIONS {
            return finish(&problem, theta, p, iterations, rel, degenerate, || {
                Error::NoConvergence {
                    iterations,
                    residual: rel,
                }
            });
        }
        iterations += 1;
        let k = problem.kept.len();
        let r: Vec<f64> = p.iter().map(|&y| r_weight(y, alpha)).collect();
        let a = DMatrix::from_fn(k, k, |s, t| {
            let (rs, rt) = (
                &problem.rows[problem.kept[s]],
                &problem.rows[problem.kept[t]],
            );
            (0..n).map(|i| rs[i] * rt[i] * r[i]).sum()
        });
        let rhs = DVector::from_iterator(k, problem.kept.iter().map(|&s| raw[s]));
        let chol = a.cholesky().ok_or_else(|| {
            Error::DegenerateJacobian("moment Jacobian is not positive definite".into())
        })?;
        let step = chol.solve(&rhs);

        let current = problem.norm(&raw);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(t, s)| t + lambda * s)
                .collect();
            if let Ok(tp) = problem.equilibrium(&trial) {
                let (traw, trel) = problem.residual(&tp, &j.0);
                if problem.norm(&traw) < current {
                    accepted = Some((trial, tp, traw, trel));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((t, tp, traw, trel)) => {
                theta = t;
                p = tp;
                raw = traw;
                rel = trel;
            }
            // Rounding floor: no step decreases the residual any further.
            None => break,
        }
    }
    finish(&problem, theta, p, iterations, rel, degenerate, || {
        Error::NoConvergence {
            iterations,
            residual: rel,
        }
    })
}

fn finish(
    problem: &MomentProblem<'_>,
    theta: Vec<f64>,
    p: Vec<f64>,
    iterations: usize,
    residual: f64,
    degenerate: bool,
    fail: impl FnOnce() -> Error,
) -> Result<MomentFit> {
    if residual > MOMENT_ACCEPT {
        if degenerate {
            return Err(Error::DegenerateJacobian(format!(
                "moments inconsistent with the dependent invariants (residual {residual:e})"
            )));
        }
        return Err(fail());
    }
    let params = MaxwellianParams::from_theta(&problem.theta_full(&theta));
    Ok(MomentFit {
        equilibrium: EquilibriumDistribution {
            values: p,
            params: Some(params.clone()),
        },
        params,
        iterations,
        residual,
        degenerate,
    })
}

/// Starting coefficients: the guess projected onto the kept rows, or the
/// uniform equilibrium carrying the mean occupation `j_1 / N`.
fn initial_theta(
    problem: &MomentProblem<'_>,
    j: &MomentVector,
    guess: Option<&MaxwellianParams>,
) -> Result<Vec<f64>> {
    let n = problem.model.len();
    let k = problem.kept.len();
    let alpha = problem.model.alpha();
    let mut theta = vec![0.0; k];
    let Some(guess) = guess else {
        let mean = j.0[0] / n as f64;
        if alpha * mean >= 1.0 {
            return Err(Error::Domain(format!(
                "mean occupation {mean} is not below 1/alpha"
            )));
        }
        theta[0] = -kinetics::mu_prime(mean, alpha)?;
        return Ok(theta);
    };
    let full = guess.to_theta();
    if full.len() != problem.rows.len() {
        return Err(Error::Domain("guess has the wrong dimension".into()));
    }
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            problem
                .rows
                .iter()
                .zip(&full)
                .map(|(row, t)| row[i] * t)
                .sum()
        })
        .collect();
    let gram = DMatrix::from_fn(k, k, |s, t| {
        let (rs, rt) = (
            &problem.rows[problem.kept[s]],
            &problem.rows[problem.kept[t]],
        );
        (0..n).map(|i| rs[i] * rt[i]).sum()
    });
    let rhs = DVector::from_iterator(
        k,
        problem
            .kept
            .iter()
            .map(|&s| (0..n).map(|i| problem.rows[s][i] * phi[i]).sum()),
    );
    let solved = gram
        .cholesky()
        .ok_or_else(|| Error::DegenerateJacobian("invariant Gram matrix is singular".into()))?
        .solve(&rhs);
    theta.copy_from_slice(solved.as_slice());
    Ok(theta)
}
