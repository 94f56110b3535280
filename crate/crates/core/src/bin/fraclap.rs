use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use fraclap::check::{operator_check, CheckOptions};
use fraclap::config::{load_ic_file_any, parse_config, RunConfig};
use fraclap::evolution::{pressure, run, run_bertozzi_pugh, AbortedRun};
use fraclap::halflap::{quadratic_form_kernel, seminorm, Order};
use fraclap::mobility::{entropy_integral, EntropySpec};
use fraclap::report::{write_reports, write_snapshots};
use fraclap::{Error, MobilityKind, ModelParams, SpectralField, SpectralSpace, Trajectory};

#[derive(Parser)]
#[command(name = "fraclap", version, about = "Thin-film equation with a half-Laplacian pressure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one evolution described by a JSON config.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the operator identities on random band-limited fields.
    OperatorCheck {
        #[arg(long)]
        modes: usize,
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, hide = true)]
        corrupt_transform: bool,
    },
    /// Print mass, semi-norms and entropy of nodal data on the midpoint grid.
    Norms {
        #[arg(long)]
        ic: PathBuf,
        /// Cosine modes; defaults to half the number of rows.
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long, default_value_t = 3.0)]
        n: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// Repeat a run over several values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// key=v1,v2,... with key one of eps, delta, tau, n, modes, horizon.
        #[arg(long)]
        vary: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Solve { config } => solve(&config),
        Command::OperatorCheck {
            modes,
            nodes,
            samples,
            seed,
            corrupt_transform,
        } => check(CheckOptions {
            samples,
            seed,
            corrupt_transform,
            ..CheckOptions::new(modes, nodes)
        }),
        Command::Norms { ic, modes, n, eps } => norms(&ic, modes, n, eps),
        Command::Sweep { config, vary } => sweep(&config, &vary),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn evolve(params: &ModelParams, u0: &SpectralField) -> Result<Trajectory, Box<AbortedRun>> {
    if params.mobility == MobilityKind::BertozziPugh {
        run_bertozzi_pugh(params, u0)
    } else {
        run(params, u0)
    }
}

fn solve(path: &Path) -> Result<u8, Error> {
    let cfg = load_config(path)?;
    let u0 = cfg.initial_state()?;
    let (traj, failure) = match evolve(&cfg.params, &u0) {
        Ok(t) => (t, None),
        Err(aborted) => (aborted.partial, Some(aborted.cause)),
    };
    if let Some(p) = &cfg.outputs.report_csv {
        write_reports(&traj, p)?;
    }
    if let Some(p) = &cfg.outputs.snapshots {
        write_snapshots(&traj, p)?;
    }
    print_summary(&traj);
    if let Some(e_prime) = cfg.e_prime {
        let space = SpectralSpace::new(cfg.params.nodes, cfg.params.modes)?;
        let p = space.to_nodal(&pressure(&traj.final_state, e_prime)?)?;
        println!("pressure_min      {:.10e}", p.min());
        println!("pressure_max      {:.10e}", p.max());
    }
    match failure {
        None => Ok(0),
        Some(e) => Err(e),
    }
}

fn print_summary(traj: &Trajectory) {
    let last = traj.reports.last().unwrap_or(&traj.initial);
    println!("steps             {}", traj.steps());
    println!("t_final           {:.10e}", last.t);
    println!("mass_drift        {:.3e}", traj.max_mass_drift());
    println!("energy_half       {:.10e}", last.energy_half);
    println!("dissipation_cum   {:.10e}", last.dissipation_cum);
    println!("entropy           {:.10e}", last.entropy);
    println!("min_u             {:.10e}", traj.min_u());
    println!(
        "newton_iters      {}",
        traj.reports.iter().map(|r| r.newton_iters).sum::<usize>()
    );
}

fn check(opts: CheckOptions) -> Result<u8, Error> {
    let report = operator_check(&opts)?;
    print!("{}", report.table());
    if report.passed() {
        Ok(0)
    } else {
        eprintln!("failing identities: {}", report.failures().join("; "));
        Ok(2)
    }
}

fn norms(ic: &Path, modes: Option<usize>, n: f64, eps: f64) -> Result<u8, Error> {
    let nodal = load_ic_file_any(ic)?;
    let m = nodal.len();
    let space = SpectralSpace::new(m, modes.unwrap_or((m / 2).max(1)))?;
    let u = space.to_spectral(&nodal)?;
    println!("nodes             {m}");
    println!("modes             {}", space.modes());
    println!("mass              {:.16e}", nodal.integral());
    println!("min               {:.16e}", nodal.min());
    println!("max               {:.16e}", nodal.max());
    for (label, s) in [
        ("h1/2", Order::Half),
        ("h1", Order::One),
        ("h3/2", Order::ThreeHalves),
        ("h2", Order::Two),
    ] {
        println!("{:<18}{:.16e}", format!("{label}^2"), seminorm(&u, s));
    }
    println!("h1/2^2 (kernel)   {:.16e}", quadratic_form_kernel(&nodal));
    let entropy = entropy_integral(&nodal, &EntropySpec::power(n, eps))?;
    println!("entropy           {entropy:.16e}");
    Ok(0)
}

fn apply_override(params: &ModelParams, key: &str, value: f64) -> Result<ModelParams, Error> {
    let mut p = params.clone();
    match key {
        "eps" => p = p.with_eps(value),
        "delta" => p = p.with_delta(value),
        "tau" => p.tau = value,
        "n" => p.n = value,
        "horizon" => p.horizon = value,
        "modes" => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::Config(format!("modes must be a positive integer, got {value}")));
            }
            p.modes = value as usize;
            p.nodes = p.nodes.max(2 * p.modes);
        }
        other => return Err(Error::Config(format!("cannot vary {other:?}"))),
    }
    p.validate()?;
    Ok(p)
}

fn parse_vary(spec: &str) -> Result<(String, Vec<(String, f64)>), Error> {
    let (key, list) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--vary expects key=v1,v2,..., got {spec:?}")))?;
    let values = list
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .map(|v| (s.to_string(), v))
                .map_err(|_| Error::Config(format!("--vary: {s:?} is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(Error::Config("--vary needs at least one value".into()));
    }
    Ok((key.trim().to_string(), values))
}

fn sweep_path(base: &Path, key: &str, label: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_{key}_{label}.{ext}"))
}

fn sweep(path: &Path, vary: &str) -> Result<u8, Error> {
    let cfg = load_config(path)?;
    let (key, values) = parse_vary(vary)?;
    let runs = values
        .iter()
        .map(|(label, v)| apply_override(&cfg.params, &key, *v).map(|p| (label.clone(), p)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = std::env::var("FRACLAP_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        pool = pool.num_threads(t.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let results: Vec<Result<Trajectory, Box<AbortedRun>>> = pool.install(|| {
        runs.par_iter()
            .map(|(_, params)| {
                let probe = RunConfig {
                    params: params.clone(),
                    ..cfg.clone()
                };
                let u0 = probe.initial_state().map_err(|cause| {
                    Box::new(AbortedRun {
                        partial: Trajectory::empty(params, &SpectralField::zeros(params.modes)),
                        cause,
                    })
                })?;
                evolve(params, &u0)
            })
            .collect()
    });

    println!("{key},status,steps,t_final,mass_drift,energy_half,dissipation_cum,entropy,min_u,l2_to_next");
    let finals: Vec<Option<&SpectralField>> = results
        .iter()
        .map(|r| r.as_ref().ok().map(|t| &t.final_state))
        .collect();
    let mut worst = 0u8;
    for (i, ((label, _), result)) in runs.iter().zip(&results).enumerate() {
        let (traj, status) = match result {
            Ok(t) => (t, "ok".to_string()),
            Err(a) => {
                worst = worst.max(a.cause.exit_code() as u8);
                eprintln!("{key}={label}: {}", a.cause);
                (&a.partial, "failed".to_string())
            }
        };
        if let Some(base) = &cfg.outputs.report_csv {
            write_reports(traj, &sweep_path(base, &key, label))?;
        }
        let next = match (finals[i], finals.get(i + 1).copied().flatten()) {
            (Some(a), Some(b)) => {
                let m = a.modes().max(b.modes());
                format!("{:.10e}", a.resized(m).l2_distance(&b.resized(m)))
            }
            _ => String::new(),
        };
        let last = traj.reports.last().unwrap_or(&traj.initial);
        println!(
            "{label},{status},{},{:.10e},{:.3e},{:.10e},{:.10e},{:.10e},{:.10e},{next}",
            traj.steps(),
            last.t,
            traj.max_mass_drift(),
            last.energy_half,
            last.dissipation_cum,
            last.entropy,
            traj.min_u(),
        );
    }
    Ok(worst)
}
