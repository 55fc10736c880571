use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyon_dbe::dynamics::{integrate, trend_report, IntegratorConfig, Mode, Trajectory};
use anyon_dbe::equilibrium::{
    equilibrium_from_maxwellian, equilibrium_from_moments, EquilibriumDistribution,
    MaxwellianParams,
};
use anyon_dbe::kinetics::{self, MomentVector};
use anyon_dbe::linearized::{assemble_linearized, finite_difference_check, spectral_report};
use anyon_dbe::model::{normality_check, DiscreteModel};
use anyon_dbe::{io, Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "anyon-dbe",
    version,
    about = "Discrete Boltzmann equation for anyons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact normality check of a model file.
    ModelCheck {
        #[command(flatten)]
        common: Common,
        /// Write the canonical model file instead of the report.
        #[arg(long)]
        emit_model: bool,
    },
    /// Equilibrium from Maxwellian parameters or from target moments.
    Equilibrium {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        init: Initial,
    },
    /// Homogeneous relaxation dF/dt = Q(F).
    SimulateHom {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        init: Initial,
        #[command(flatten)]
        integ: Integration,
    },
    /// Planar stationary march B dF/dx = Q(F).
    SimulatePlanar {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        init: Initial,
        #[command(flatten)]
        integ: Integration,
    },
    /// Linearized operator around an equilibrium: spectrum, kernel, signature.
    Linearize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        init: Initial,
        /// Finite-difference step for the linearization check.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    model: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the statistics parameter of the model file.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct Initial {
    /// Distribution as a JSON array.
    #[arg(long, group = "source")]
    f0: Option<String>,
    /// Maxwellian parameters as JSON {"a":..,"b":[..],"c":..}.
    #[arg(long, group = "source")]
    theta: Option<String>,
    /// Equilibrium with these moments (JSON array: mass, momentum, energy).
    #[arg(long, group = "source")]
    moments: Option<String>,
    /// Seeded random interior distribution.
    #[arg(long, group = "source")]
    random: bool,
}

#[derive(Args, Debug)]
struct Integration {
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Minimal distance of the initial state to the admissible boundary.
    #[arg(long, default_value_t = 1e-6)]
    eta: f64,
    /// Keep every n-th step.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Stop once max |dF/ds| falls below this value.
    #[arg(long)]
    stationary_tol: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

struct Source {
    values: Vec<f64>,
    params: Option<MaxwellianParams>,
    seed: Option<u64>,
}

fn parse_json<T: serde::de::DeserializeOwned>(flag: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("--{flag}: {e}")))
}

fn load_model(common: &Common) -> Result<DiscreteModel> {
    let text = fs::read_to_string(&common.model)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", common.model.display())))?;
    io::read_model(&text, common.alpha)
}

fn random_state(model: &DiscreteModel, seed: u64, eta: f64) -> Vec<f64> {
    let alpha = model.alpha();
    let hi = if alpha > 0.0 {
        (1.0 / alpha - eta).min(2.0)
    } else {
        2.0
    };
    let lo = eta.max(1e-3).min(0.5 * hi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..model.len()).map(|_| rng.gen_range(lo..hi)).collect()
}

fn resolve(model: &DiscreteModel, init: &Initial, seed: u64, eta: f64) -> Result<Source> {
    if let Some(text) = &init.f0 {
        let values: Vec<f64> = parse_json("f0", text)?;
        if values.len() != model.len() {
            return Err(Error::Domain(format!(
                "--f0 has {} entries, model has {} points",
                values.len(),
                model.len()
            )));
        }
        return Ok(Source {
            values,
            params: None,
            seed: None,
        });
    }
    if let Some(text) = &init.theta {
        let params: MaxwellianParams = parse_json("theta", text)?;
        let p = equilibrium_from_maxwellian(model, &params)?;
        return Ok(Source {
            values: p.values,
            params: Some(params),
            seed: None,
        });
    }
    if let Some(text) = &init.moments {
        let j: Vec<f64> = parse_json("moments", text)?;
        let fit = equilibrium_from_moments(model, &MomentVector(j), None)?;
        return Ok(Source {
            values: fit.equilibrium.values,
            params: Some(fit.params),
            seed: None,
        });
    }
    if init.random {
        return Ok(Source {
            values: random_state(model, seed, eta),
            params: None,
            seed: Some(seed),
        });
    }
    Err(Error::Config(
        "one of --f0, --theta, --moments or --random is required".into(),
    ))
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::Config(e.to_string()))
        }
    }
}

fn to_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

fn require_json(common: &Common, what: &str) -> Result<()> {
    if common.format == Format::Csv {
        return Err(Error::Config(format!("{what} output is JSON only")));
    }
    Ok(())
}

fn trajectory_csv(traj: &Trajectory, seed: Option<u64>) -> String {
    let first = &traj.samples[0];
    let mut out = String::new();
    if let Some(seed) = seed {
        out.push_str(&format!("# seed={seed}\n"));
    }
    let mut header = vec!["s".to_string()];
    header.extend((1..=first.f.len()).map(|i| format!("F{i}")));
    header.push("H".into());
    header.extend((1..=first.invariants.len()).map(|r| format!("inv{r}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for s in &traj.samples {
        let row: Vec<String> = std::iter::once(s.s)
            .chain(s.f.iter().copied())
            .chain(std::iter::once(s.h))
            .chain(s.invariants.iter().copied())
            .map(|x| format!("{x:.16e}"))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn simulate(common: &Common, init: &Initial, integ: &Integration, mode: Mode) -> Result<String> {
    let model = load_model(common)?;
    let source = resolve(&model, init, common.seed, integ.eta)?;
    let mut config =
        IntegratorConfig::new(integ.dt, integ.steps, integ.eta).with_stride(integ.stride);
    config.stationary_tol = integ.stationary_tol;
    let traj = integrate(&model, &source.values, &config, mode)?;
    Ok(match common.format {
        Format::Csv => trajectory_csv(&traj, source.seed),
        Format::Json => to_json(&json!({
            "seed": source.seed,
            "config": config,
            "diagnostics": traj.diagnostics,
            "trend": trend_report(&model, &traj),
            "initial": source.values,
            "final": traj.last().f,
        })),
    })
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::ModelCheck { common, emit_model } => {
            require_json(common, "model-check")?;
            let model = load_model(common)?;
            let text = if *emit_model {
                let mut s = io::write_model(&model);
                s.push('\n');
                s
            } else {
                to_json(&serde_json::to_value(normality_check(&model)).expect("report serializes"))
            };
            emit(common, &text)
        }
        Command::Equilibrium { common, init } => {
            require_json(common, "equilibrium")?;
            let model = load_model(common)?;
            if init.f0.is_some() || init.random {
                return Err(Error::Config(
                    "equilibrium takes --theta or --moments".into(),
                ));
            }
            let source = resolve(&model, init, common.seed, 0.0)?;
            let moments = kinetics::moments(&model, &source.values)?;
            let balance = kinetics::detailed_balance(&model, &source.values)?;
            emit(
                common,
                &to_json(&json!({
                    "params": source.params,
                    "equilibrium": source.values,
                    "moments": moments.0,
                    "detailedBalance": balance.max_rel,
                })),
            )
        }
        Command::SimulateHom {
            common,
            init,
            integ,
        } => emit(common, &simulate(common, init, integ, Mode::Homogeneous)?),
        Command::SimulatePlanar {
            common,
            init,
            integ,
        } => emit(common, &simulate(common, init, integ, Mode::Planar)?),
        Command::Linearize {
            common,
            init,
            epsilon,
        } => {
            require_json(common, "linearize")?;
            let model = load_model(common)?;
            if init.random {
                return Err(Error::Config(
                    "linearize needs an equilibrium: --f0, --theta or --moments".into(),
                ));
            }
            let source = resolve(&model, init, common.seed, 0.0)?;
            let op = assemble_linearized(
                &model,
                &EquilibriumDistribution::from_values(source.values.clone()),
            )?;
            let report = spectral_report(&op, &model)?;
            let fd = finite_difference_check(&model, &op, *epsilon, common.seed)?;
            emit(
                common,
                &to_json(&json!({
                    "equilibrium": source.values,
                    "spectrum": report,
                    "finiteDifferenceResidual": fd,
                    "epsilon": epsilon,
                    "seed": common.seed,
                })),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut err = json!({ "error": e.kind(), "message": e.to_string() });
            if let Some(invariant) = e.invariant() {
                err["invariant"] = json!(invariant);
            }
            eprintln!("{err}");
            ExitCode::FAILURE
        }
    }
}
