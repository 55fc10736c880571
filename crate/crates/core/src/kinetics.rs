//! Collision operator and the quantities built on it.
//!
//! The collision sum runs over the canonical quadruples stored in the model;
//! each one stands for its whole symmetry orbit of ordered index tuples, so
//! the result equals the plain sum over all ordered `(j, k, l)`.

use crate::error::{Error, Result};
use crate::model::DiscreteModel;

/// Occupation numbers `F_i`, strictly inside `(0, 1/alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(values: Vec<f64>, alpha: f64) -> Result<Self> {
        for &y in &values {
            check_open(y, alpha)?;
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Smallest distance of any component to `0` or `1/alpha`.
    pub fn margin(&self, alpha: f64) -> f64 {
        boundary_margin(&self.0, alpha)
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn boundary_margin(f: &[f64], alpha: f64) -> f64 {
    f.iter()
        .map(|&y| {
            if alpha > 0.0 {
                y.min(1.0 / alpha - y)
            } else {
                y
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn check_closed(y: f64, alpha: f64) -> Result<()> {
    if y.is_finite() && y >= 0.0 && alpha * y <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{y} is outside [0, 1/alpha] for alpha = {alpha}"
        )))
    }
}

fn check_open(y: f64, alpha: f64) -> Result<()> {
    if y.is_finite() && y > 0.0 && alpha * y < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{y} is outside (0, 1/alpha) for alpha = {alpha}"
        )))
    }
}

fn check_all_closed(f: &[f64], alpha: f64) -> Result<()> {
    f.iter().try_for_each(|&y| check_closed(y, alpha))
}

fn check_all_open(f: &[f64], alpha: f64) -> Result<()> {
    f.iter().try_for_each(|&y| check_open(y, alpha))
}

fn check_len(model: &DiscreteModel, v: &[f64]) -> Result<()> {
    if v.len() == model.len() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "vector has {} components, model has {}",
            v.len(),
            model.len()
        )))
    }
}

/// `log Ψ_α(y)`; `-inf` at the saturated endpoint.
pub(crate) fn ln_psi(y: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        y.ln_1p()
    } else if alpha == 1.0 {
        (-y).ln_1p()
    } else {
        alpha * (-alpha * y).ln_1p() + (1.0 - alpha) * ((1.0 - alpha) * y).ln_1p()
    }
}

/// Unchecked filling factor.
pub(crate) fn psi(y: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0 + y
    } else if alpha == 1.0 {
        1.0 - y
    } else {
        ln_psi(y, alpha).exp()
    }
}

/// `R(y) = y (1 - alpha y)(1 + (1 - alpha) y)`, the inverse of `μ''`.
pub(crate) fn r_weight(y: f64, alpha: f64) -> f64 {
    y * (1.0 - alpha * y) * (1.0 + (1.0 - alpha) * y)
}

/// `Ψ_α(y) = (1 - αy)^α (1 + (1 - α)y)^(1 - α)` on `[0, 1/α]`.
pub fn filling_factor(y: f64, alpha: f64) -> Result<f64> {
    check_closed(y, alpha)?;
    Ok(psi(y, alpha))
}

pub fn filling_factor_derivative(y: f64, alpha: f64) -> Result<f64> {
    check_open(y, alpha)?;
    let a = 1.0 - alpha * y;
    let b = 1.0 + (1.0 - alpha) * y;
    Ok(psi(y, alpha) * (1.0 - 2.0 * alpha - alpha * (1.0 - alpha) * y) / (a * b))
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Entropy density `μ(y)`, continuous on `[0, 1/α]` and vanishing at both ends.
pub fn mu(y: f64, alpha: f64) -> Result<f64> {
    check_closed(y, alpha)?;
    Ok(mu_unchecked(y, alpha))
}

fn mu_unchecked(y: f64, alpha: f64) -> f64 {
    let a = (1.0 - alpha * y).max(0.0);
    let b = 1.0 + (1.0 - alpha) * y;
    xlnx(y) + xlnx(a) - xlnx(b)
}

/// `μ'(y) = log(y / Ψ_α(y))`.
pub fn mu_prime(y: f64, alpha: f64) -> Result<f64> {
    check_open(y, alpha)?;
    Ok(y.ln() - ln_psi(y, alpha))
}

/// Collision bracket `F_k F_l Ψ_i Ψ_j - F_i F_j Ψ_k Ψ_l` for a quadruple.
#[inline]
fn bracket(f: &[f64], psi: &[f64], [i, j, k, l]: [usize; 4]) -> f64 {
    f[k] * f[l] * psi[i] * psi[j] - f[i] * f[j] * psi[k] * psi[l]
}

fn psi_vec(f: &[f64], alpha: f64) -> Vec<f64> {
    f.iter().map(|&y| psi(y, alpha)).collect()
}

pub fn collision_operator(model: &DiscreteModel, f: &[f64]) -> Result<Vec<f64>> {
    check_len(model, f)?;
    check_all_closed(f, model.alpha())?;
    let psi = psi_vec(f, model.alpha());
    let mut q = vec![0.0; f.len()];
    for (quad, orbit) in model.orbits() {
        let d = quad.gamma * bracket(f, &psi, quad.indices());
        for &(idx, w) in &orbit.weights {
            q[idx] += w * d;
        }
    }
    Ok(q)
}

/// `<H, Q(F)>` through the symmetrized quadruple sum.
pub fn weak_form(model: &DiscreteModel, h: &[f64], f: &[f64]) -> Result<f64> {
    check_len(model, h)?;
    check_len(model, f)?;
    check_all_closed(f, model.alpha())?;
    let psi = psi_vec(f, model.alpha());
    Ok(weak_form_with(model, h, f, &psi))
}

fn weak_form_with(model: &DiscreteModel, h: &[f64], f: &[f64], psi: &[f64]) -> f64 {
    let sum: f64 = model
        .orbits()
        .map(|(quad, orbit)| {
            let [i, j, k, l] = quad.indices();
            let dh = h[i] + h[j] - h[k] - h[l];
            quad.gamma * orbit.multiplicity * dh * bracket(f, psi, quad.indices())
        })
        .sum();
    0.25 * sum
}

/// `log(F / Ψ(F))` evaluated as `log F - log Ψ(F)`.
pub fn log_ratio(f: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_all_open(f, alpha)?;
    Ok(f.iter().map(|&y| y.ln() - ln_psi(y, alpha)).collect())
}

/// `<log(F/Ψ(F)), Q(F)>`, never positive.
pub fn entropy_production(model: &DiscreteModel, f: &[f64]) -> Result<f64> {
    check_len(model, f)?;
    let h = log_ratio(f, model.alpha())?;
    let psi = psi_vec(f, model.alpha());
    Ok(weak_form_with(model, &h, f, &psi))
}

/// Worst violation of `F_i F_j Ψ_k Ψ_l = F_k F_l Ψ_i Ψ_j` over the active
/// collisions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetailedBalance {
    pub max_abs: f64,
    /// Residual divided by the larger of the two products.
    pub max_rel: f64,
    /// Worst `|y_i y_j - y_k y_l|` with `y = F / Ψ(F)`.
    pub max_ratio: f64,
}

pub fn detailed_balance(model: &DiscreteModel, f: &[f64]) -> Result<DetailedBalance> {
    check_len(model, f)?;
    check_all_closed(f, model.alpha())?;
    let alpha = model.alpha();
    let psi = psi_vec(f, alpha);
    let mut out = DetailedBalance::default();
    for q in model.collisions().iter().filter(|q| q.gamma > 0.0) {
        let [i, j, k, l] = q.indices();
        let gain = f[k] * f[l] * psi[i] * psi[j];
        let loss = f[i] * f[j] * psi[k] * psi[l];
        let diff = (gain - loss).abs();
        out.max_abs = out.max_abs.max(diff);
        let scale = gain.abs().max(loss.abs());
        if scale > 0.0 {
            out.max_rel = out.max_rel.max(diff / scale);
        }
        let y = |n: usize| f[n] / psi[n];
        out.max_ratio = out.max_ratio.max((y(i) * y(j) - y(k) * y(l)).abs());
    }
    Ok(out)
}

/// `H[F] = Σ μ(F_i)`.
pub fn h_functional(model: &DiscreteModel, f: &[f64]) -> Result<f64> {
    check_len(model, f)?;
    check_all_closed(f, model.alpha())?;
    Ok(f.iter().map(|&y| mu_unchecked(y, model.alpha())).sum())
}

/// `H~[F] = Σ p_i^1 μ(F_i)`.
pub fn h_tilde_functional(model: &DiscreteModel, f: &[f64]) -> Result<f64> {
    check_len(model, f)?;
    check_all_closed(f, model.alpha())?;
    let lat = model.lattice();
    Ok(f.iter()
        .enumerate()
        .map(|(i, &y)| lat.p1(i) * mu_unchecked(y, model.alpha()))
        .sum())
}

/// Mass, momentum and energy: `(<1,F>, <p^1,F>, .., <p^d,F>, <|p|^2,F>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector(pub Vec<f64>);

/// Moments weighted by `p^1` (the rows of `B = diag(p^1)` applied first).
#[derive(Debug, Clone, PartialEq)]
pub struct FluxVector(pub Vec<f64>);

fn weighted_moments(model: &DiscreteModel, f: &[f64], weight: impl Fn(usize) -> f64) -> Vec<f64> {
    let lat = model.lattice();
    let d = lat.dim();
    let mut j = vec![0.0; d + 2];
    for (i, &y) in f.iter().enumerate() {
        let w = weight(i) * y;
        j[0] += w;
        for (c, &p) in lat.momentum_f64(i).iter().enumerate() {
            j[c + 1] += p * w;
        }
        j[d + 1] += lat.energy(i) * w;
    }
    j
}

pub fn moments(model: &DiscreteModel, f: &[f64]) -> Result<MomentVector> {
    check_len(model, f)?;
    Ok(MomentVector(weighted_moments(model, f, |_| 1.0)))
}

pub fn fluxes(model: &DiscreteModel, f: &[f64]) -> Result<FluxVector> {
    check_len(model, f)?;
    let lat = model.lattice();
    Ok(FluxVector(weighted_moments(model, f, |i| lat.p1(i))))
}
