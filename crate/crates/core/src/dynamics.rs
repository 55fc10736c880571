//! Spatially homogeneous evolution `dF/dt = Q(F)` and planar stationary
//! marching `B dF/dx = Q(F)`, `B = diag(p^1)`, with classical RK4.
//!
//! A nominal step that leaves the admissible box (margin `η/2`) is split in
//! two, recursively, up to [`MAX_HALVINGS`] levels.

use serde::{Deserialize, Serialize};

use crate::equilibrium::equilibrium_from_moments;
use crate::error::{Error, Result};
use crate::kinetics::{self, boundary_margin, MomentVector};
use crate::model::DiscreteModel;

pub const MAX_HALVINGS: usize = 20;

/// H-values may rise by at most this much between samples.
pub const H_MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IntegratorConfig {
    pub step_size: f64,
    pub max_steps: usize,
    /// Minimal distance `η` of every `F_i` to `0` and `1/α`.
    pub bounds_margin: f64,
    pub output_stride: usize,
    /// Stop once `max |dF/ds|` drops below this; exceeding `max_steps`
    /// first is then an error.
    #[serde(default)]
    pub stationary_tol: Option<f64>,
}

impl IntegratorConfig {
    pub fn new(step_size: f64, max_steps: usize, bounds_margin: f64) -> Self {
        Self {
            step_size,
            max_steps,
            bounds_margin,
            output_stride: 1,
            stationary_tol: None,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.output_stride = stride;
        self
    }

    pub fn until_stationary(mut self, tol: f64) -> Self {
        self.stationary_tol = Some(tol);
        self
    }

    fn validate(&self, alpha: f64) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!(
                "step size {} must be positive",
                self.step_size
            )));
        }
        if self.output_stride == 0 {
            return Err(Error::Config("output stride must be at least 1".into()));
        }
        let upper = if alpha > 0.0 {
            0.5 / alpha
        } else {
            f64::INFINITY
        };
        if !(self.bounds_margin > 0.0 && self.bounds_margin < upper) {
            return Err(Error::Config(format!(
                "bounds margin {} must lie in (0, 1/(2 alpha))",
                self.bounds_margin
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Homogeneous,
    Planar,
}

/// One retained state: `s` is time (homogeneous) or `x` (planar); `h` is
/// `H` or `H~`; `invariants` are moments or fluxes respectively.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub s: f64,
    pub f: Vec<f64>,
    pub h: f64,
    pub invariants: Vec<f64>,
}

/// Per-step checks accumulated over the whole run, not only retained samples.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StepDiagnostics {
    pub steps: usize,
    pub halvings: usize,
    /// Largest single-step increase of the H-value.
    pub max_h_increase: f64,
    /// Largest `|inv(s) - inv(0)|` relative to `Σ |φ| F`.
    pub max_invariant_drift: f64,
    /// Largest `drift / s` over all steps.
    pub max_drift_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub mode: Mode,
    pub samples: Vec<Sample>,
    pub diagnostics: StepDiagnostics,
}

impl Trajectory {
    /// Assembles a trajectory from samples, checking that `s` increases.
    pub fn from_samples(mode: Mode, samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("trajectory needs at least one sample".into()));
        }
        if samples
            .windows(2)
            .any(|w| w[1].s.partial_cmp(&w[0].s) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::Config(
                "sample coordinates must increase strictly".into(),
            ));
        }
        Ok(Self {
            mode,
            samples,
            diagnostics: StepDiagnostics::default(),
        })
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }
}

struct System<'a> {
    model: &'a DiscreteModel,
    mode: Mode,
    /// `1 / p^1` for planar marching.
    inv_speed: Vec<f64>,
}

impl<'a> System<'a> {
    fn new(model: &'a DiscreteModel, mode: Mode) -> Result<Self> {
        let lat = model.lattice();
        let inv_speed = match mode {
            Mode::Homogeneous => vec![1.0; model.len()],
            Mode::Planar => (0..model.len())
                .map(|i| {
                    let p = lat.p1(i);
                    if p == 0.0 {
                        Err(Error::SingularB(i + 1))
                    } else {
                        Ok(1.0 / p)
                    }
                })
                .collect::<Result<_>>()?,
        };
        Ok(Self {
            model,
            mode,
            inv_speed,
        })
    }

    fn rhs(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut q = kinetics::collision_operator(self.model, f)?;
        for (x, w) in q.iter_mut().zip(&self.inv_speed) {
            *x *= w;
        }
        Ok(q)
    }

    fn h_value(&self, f: &[f64]) -> Result<f64> {
        match self.mode {
            Mode::Homogeneous => kinetics::h_functional(self.model, f),
            Mode::Planar => kinetics::h_tilde_functional(self.model, f),
        }
    }

    fn invariants(&self, f: &[f64]) -> Result<Vec<f64>> {
        Ok(match self.mode {
            Mode::Homogeneous => kinetics::moments(self.model, f)?.0,
            Mode::Planar => kinetics::fluxes(self.model, f)?.0,
        })
    }

    /// `Σ_i |φ^r_i| |w_i| F_i` for every invariant row.
    fn invariant_scale(&self, f: &[f64]) -> Vec<f64> {
        let abs: Vec<f64> = f
            .iter()
            .zip(&self.inv_speed)
            .map(|(y, w)| match self.mode {
                Mode::Homogeneous => y.abs(),
                Mode::Planar => (y / w).abs(),
            })
            .collect();
        self.model
            .invariant_rows()
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&abs)
                    .map(|(a, b)| a.abs() * b)
                    .sum::<f64>()
                    .max(f64::MIN_POSITIVE)
            })
            .collect()
    }

    fn rk4(&self, f: &[f64], h: f64) -> Result<Vec<f64>> {
        let axpy =
            |a: f64, k: &[f64]| -> Vec<f64> { f.iter().zip(k).map(|(x, d)| x + a * d).collect() };
        let k1 = self.rhs(f)?;
        let k2 = self.rhs(&axpy(0.5 * h, &k1))?;
        let k3 = self.rhs(&axpy(0.5 * h, &k2))?;
        let k4 = self.rhs(&axpy(h, &k3))?;
        Ok((0..f.len())
            .map(|i| f[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }

    /// Advances by `h`, splitting the step while the result violates the margin.
    fn advance(
        &self,
        f: &[f64],
        h: f64,
        min_margin: f64,
        depth: usize,
        halvings: &mut usize,
    ) -> std::result::Result<Vec<f64>, ()> {
        if let Ok(next) = self.rk4(f, h) {
            if boundary_margin(&next, self.model.alpha()) >= min_margin {
                return Ok(next);
            }
        }
        if depth == MAX_HALVINGS {
            return Err(());
        }
        *halvings += 1;
        let mid = self.advance(f, 0.5 * h, min_margin, depth + 1, halvings)?;
        self.advance(&mid, 0.5 * h, min_margin, depth + 1, halvings)
    }
}

/// Integrates `dF/dt = Q(F)`; samples carry `(t, F, H, moments)`.
pub fn integrate_homogeneous(
    model: &DiscreteModel,
    f0: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate(model, f0, config, Mode::Homogeneous)
}

/// Marches `dF/dx = B^{-1} Q(F)`; samples carry `(x, F, H~, fluxes)`.
pub fn integrate_planar(
    model: &DiscreteModel,
    f0: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate(model, f0, config, Mode::Planar)
}

pub fn integrate(
    model: &DiscreteModel,
    f0: &[f64],
    config: &IntegratorConfig,
    mode: Mode,
) -> Result<Trajectory> {
    let alpha = model.alpha();
    config.validate(alpha)?;
    let system = System::new(model, mode)?;
    if f0.len() != model.len() {
        return Err(Error::Domain(format!(
            "initial state has {} components, model has {}",
            f0.len(),
            model.len()
        )));
    }
    let margin0 = boundary_margin(f0, alpha);
    if margin0.is_nan() || margin0 < config.bounds_margin {
        return Err(Error::Domain(format!(
            "initial state is within {margin0:e} of the boundary, margin {} required",
            config.bounds_margin
        )));
    }

    let h0 = system.h_value(f0)?;
    let inv0 = system.invariants(f0)?;
    let scale0 = system.invariant_scale(f0);
    let mut samples = vec![Sample {
        s: 0.0,
        f: f0.to_vec(),
        h: h0,
        invariants: inv0.clone(),
    }];
    let mut diag = StepDiagnostics::default();
    let mut f = f0.to_vec();
    let mut h_prev = h0;
    let dt = config.step_size;
    let min_margin = 0.5 * config.bounds_margin;

    for step in 1..=config.max_steps {
        f = system
            .advance(&f, dt, min_margin, 0, &mut diag.halvings)
            .map_err(|()| Error::BoundsViolation {
                step,
                halvings: MAX_HALVINGS,
            })?;
        let s = step as f64 * dt;
        let h = system.h_value(&f)?;
        let inv = system.invariants(&f)?;
        diag.steps = step;
        diag.max_h_increase = diag.max_h_increase.max(h - h_prev);
        h_prev = h;
        let drift = inv
            .iter()
            .zip(&inv0)
            .zip(&scale0)
            .map(|((a, b), sc)| (a - b).abs() / sc)
            .fold(0.0, f64::max);
        diag.max_invariant_drift = diag.max_invariant_drift.max(drift);
        diag.max_drift_rate = diag.max_drift_rate.max(drift / s);

        let stationary = match config.stationary_tol {
            Some(tol) => system.rhs(&f)?.iter().all(|x| x.abs() <= tol),
            None => false,
        };
        if step % config.output_stride == 0 || step == config.max_steps || stationary {
            samples.push(Sample {
                s,
                f: f.clone(),
                h,
                invariants: inv,
            });
        }
        if stationary {
            return Ok(Trajectory {
                mode,
                samples,
                diagnostics: diag,
            });
        }
    }
    if config.stationary_tol.is_some() {
        return Err(Error::StepLimitExceeded(config.max_steps));
    }
    Ok(Trajectory {
        mode,
        samples,
        diagnostics: diag,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrendReport {
    pub mode: Mode,
    /// Homogeneous: the equilibrium sharing the initial moments, when it
    /// could be computed.
    pub target: Option<Vec<f64>>,
    /// Per sample: max-norm distance to `target` (homogeneous), or
    /// `|entropy production| + detailed-balance residual` (planar, or when
    /// no target is available).
    pub distances: Vec<f64>,
    pub h_violations: usize,
    pub max_h_increase: f64,
    /// First sample index after which distances never increase.
    pub monotone_from: usize,
    pub final_distance: f64,
    /// Entropy production magnitude at the last sample.
    pub final_residual: f64,
    pub max_invariant_drift: f64,
}

fn manifold_proxy(model: &DiscreteModel, f: &[f64]) -> f64 {
    let ep = kinetics::entropy_production(model, f)
        .map(f64::abs)
        .unwrap_or(f64::INFINITY);
    let db = kinetics::detailed_balance(model, f)
        .map(|d| d.max_ratio)
        .unwrap_or(f64::INFINITY);
    ep + db
}

pub fn trend_report(model: &DiscreteModel, traj: &Trajectory) -> TrendReport {
    let first = &traj.samples[0];
    let target = match traj.mode {
        Mode::Homogeneous => kinetics::moments(model, &first.f)
            .and_then(|j| equilibrium_from_moments(model, &MomentVector(j.0), None))
            .ok()
            .map(|fit| fit.equilibrium.values),
        Mode::Planar => None,
    };
    let distances: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| match &target {
            Some(p) => {
                s.f.iter()
                    .zip(p)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            }
            None => manifold_proxy(model, &s.f),
        })
        .collect();

    let mut h_violations = 0;
    let mut max_h_increase: f64 = 0.0;
    for w in traj.samples.windows(2) {
        let rise = w[1].h - w[0].h;
        max_h_increase = max_h_increase.max(rise);
        if rise > H_MONOTONE_TOL {
            h_violations += 1;
        }
    }
    let mut monotone_from = distances.len() - 1;
    while monotone_from > 0 && distances[monotone_from] <= distances[monotone_from - 1] + 1e-15 {
        monotone_from -= 1;
    }
    let last = traj.last();
    let scale: Vec<f64> = {
        let sys = System::new(model, traj.mode);
        sys.map(|s| s.invariant_scale(&first.f)).unwrap_or_default()
    };
    let max_invariant_drift = traj
        .samples
        .iter()
        .flat_map(|s| {
            s.invariants
                .iter()
                .zip(&first.invariants)
                .zip(&scale)
                .map(|((a, b), sc)| (a - b).abs() / sc)
        })
        .fold(0.0, f64::max);

    TrendReport {
        mode: traj.mode,
        target,
        final_distance: *distances.last().expect("nonempty"),
        distances,
        h_violations,
        max_h_increase,
        monotone_from,
        final_residual: kinetics::entropy_production(model, &last.f)
            .map(f64::abs)
            .unwrap_or(f64::NAN),
        max_invariant_drift,
    }
}
