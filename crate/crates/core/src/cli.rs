//! Command-line front end. `run` returns the process exit code so the logic
//! can be driven from tests without spawning a process.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::certification;
use crate::equilibrium::{
    find_equilibrium, NewtonOptions, StationaryReport, DEFAULT_BALANCE_TOLERANCE,
};
use crate::graph;
use crate::kinetics::{drift_scan, drift_slice_csv, DriftError, DriftExponent, DriftParams, LyapunovKind};
use crate::mixing::{self, emit_curves, estimate_mixing_time, MixingError, MixingTimeEstimate};
use crate::network::{parse_network, ReactionNetwork};
use crate::simulation::{
    irreducibility_probe, transient_distribution, SimulationConfig, SimulationError, DEFAULT_MAX_EVENTS,
};
use crate::tiers::{parse_profile, tier_partition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_NOT_CERTIFIED: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "crnmix", version, about = "Ergodicity certificates and mixing-time experiments for stochastic reaction networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Write result files into this directory and print a one-line summary.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print JSON instead of the default text/CSV rendering.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Clone)]
struct Run {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    replicates: u64,
    /// Worker threads (results do not depend on it).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Event cap per trajectory.
    #[arg(long, default_value_t = DEFAULT_MAX_EVENTS, value_parser = clap::value_parser!(u64).range(1..))]
    max_events: u64,
}

impl Run {
    fn config(&self) -> SimulationConfig {
        SimulationConfig {
            seed: self.seed,
            replicates: self.replicates,
            max_events: self.max_events,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Lyapunov {
    /// `V(x) = sum x_i (ln x_i - 1) + 1`
    V,
    /// `W(x) = w . x` with the core conservation vector
    W,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify exponential ergodicity from the reaction graph.
    Certify {
        network: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Tier partition along a growth profile such as "A:n, B:0".
    Tiers {
        network: PathBuf,
        #[arg(long)]
        profile: String,
        #[command(flatten)]
        output: Output,
    },
    /// Exhaustive Foster-Lyapunov drift scan over [0, N]^d.
    Drift {
        network: PathBuf,
        #[arg(long, value_enum, default_value_t = Lyapunov::V)]
        lyapunov: Lyapunov,
        #[arg(long, default_value_t = 0.05)]
        a: f64,
        /// 0 or 0.5
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long = "box", default_value_t = 60)]
        box_radius: u32,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        threads: Option<u64>,
        /// Two species names; writes a 2-D slice CSV (with --out).
        #[arg(long)]
        slice: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Equilibrium, complex-balance residuals and the stationary law kind.
    Stationary {
        network: PathBuf,
        /// Newton starting point (default all ones).
        #[arg(long, value_parser = parse_f64_list)]
        guess: Option<List<f64>>,
        /// Start of the irreducibility probe (default all ones).
        #[arg(long, value_parser = parse_u32_list)]
        x0: Option<List<u32>>,
        /// Probe box radius.
        #[arg(long = "box", default_value_t = 20)]
        box_radius: u32,
        #[arg(long, default_value_t = DEFAULT_BALANCE_TOLERANCE)]
        tolerance: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Empirical law of X(t) from x0.
    Simulate {
        network: PathBuf,
        #[arg(long, value_parser = parse_u32_list)]
        x0: List<u32>,
        #[arg(long)]
        t: f64,
        #[arg(long = "box", default_value_t = 200)]
        box_radius: u32,
        #[command(flatten)]
        run: Run,
        #[command(flatten)]
        output: Output,
    },
    /// TV curve from x0 to the stationary law over a time grid.
    Tv {
        network: PathBuf,
        #[arg(long, value_parser = parse_u32_list)]
        x0: List<u32>,
        /// start:stop:step
        #[arg(long, value_parser = parse_grid, default_value = "0:20:0.25")]
        t_grid: Grid,
        #[arg(long = "box", default_value_t = 200)]
        box_radius: u32,
        #[arg(long, default_value_t = mixing::DEFAULT_EPSILON)]
        eps: f64,
        /// Horizon of the long run used when no product form applies.
        #[arg(long, default_value_t = 100.0)]
        pi_time: f64,
        #[command(flatten)]
        run: Run,
        #[command(flatten)]
        output: Output,
    },
    /// Mixing times from x0 = (m, ..., m) for each m.
    Mixing {
        network: PathBuf,
        #[arg(long, value_parser = parse_u32_list, default_value = "1,10,100")]
        m_list: List<u32>,
        #[arg(long, value_parser = parse_grid, default_value = "0:20:0.25")]
        t_grid: Grid,
        #[arg(long = "box", default_value_t = 200)]
        box_radius: u32,
        #[arg(long, default_value_t = mixing::DEFAULT_EPSILON)]
        eps: f64,
        #[arg(long, default_value_t = 100.0)]
        pi_time: f64,
        #[command(flatten)]
        run: Run,
        #[command(flatten)]
        output: Output,
    },
    /// Run the built-in golden checks.
    Selftest,
}

/// Comma-separated list argument.
#[derive(Debug, Clone)]
struct List<T>(Vec<T>);

/// Expanded `start:stop:step` grid.
#[derive(Debug, Clone)]
struct Grid(Vec<f64>);

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: Display,
{
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", p.trim())))
        .collect()
}

fn parse_u32_list(s: &str) -> Result<List<u32>, String> {
    parse_list(s).map(List)
}

fn parse_f64_list(s: &str) -> Result<List<f64>, String> {
    parse_list(s).map(List)
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err("expected start:stop:step".into());
    };
    if !(start >= 0.0 && step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err("need 0 <= start <= stop and step > 0".into());
    }
    Ok(Grid(mixing::time_grid(start, stop, step)))
}

/// Error carrying the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Display) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }
}

impl From<SimulationError> for Failure {
    fn from(e: SimulationError) -> Self {
        let code = match e {
            SimulationError::InvalidConfig(_) => EXIT_INPUT,
            _ => EXIT_RESOURCE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<MixingError> for Failure {
    fn from(e: MixingError) -> Self {
        match e {
            MixingError::Simulation(s) => s.into(),
            other => Failure::input(other),
        }
    }
}

impl From<DriftError> for Failure {
    fn from(e: DriftError) -> Self {
        let code = match e {
            DriftError::BoxTooLarge { .. } => EXIT_RESOURCE,
            DriftError::InvalidParameter(_) => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load(path: &Path) -> Result<ReactionNetwork, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse_network(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn check_dim(net: &ReactionNetwork, x: &[u32]) -> Result<(), Failure> {
    if x.len() != net.dim() {
        return Err(Failure::input(format!(
            "state has {} coordinates, network has {} species",
            x.len(),
            net.dim()
        )));
    }
    Ok(())
}

/// Either print `stdout_text` or write `files` under `--out` and print `summary`.
fn emit(out: &mut dyn Write, output: &Output, stdout_text: &str, files: &[(&str, &str)], summary: &str) -> Result<(), Failure> {
    match &output.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
            for (name, body) in files {
                let path = dir.join(name);
                std::fs::write(&path, body).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            }
            writeln!(out, "{summary}").ok();
        }
        None => {
            out.write_all(stdout_text.as_bytes()).ok();
            if !stdout_text.ends_with('\n') {
                writeln!(out).ok();
            }
        }
    }
    Ok(())
}

fn with_threads<T: Send>(threads: Option<u64>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Failure {
                code: EXIT_RESOURCE,
                message: e.to_string(),
            }),
    }
}

fn mixing_estimates(
    net: &ReactionNetwork,
    starts: &[Vec<u32>],
    t_grid: &[f64],
    box_radius: u32,
    eps: f64,
    pi_time: f64,
    run: &Run,
) -> Result<(Vec<MixingTimeEstimate>, &'static str), Failure> {
    for x in starts {
        check_dim(net, x)?;
    }
    let config = run.config();
    with_threads(run.threads, || -> Result<_, Failure> {
        let pi = mixing::reference_stationary(net, &starts[0], box_radius, pi_time, &config)?;
        let mut out = Vec::new();
        for x in starts {
            out.push(estimate_mixing_time(net, x, &pi, eps, t_grid, &config, box_radius)?);
        }
        Ok((out, pi.kind()))
    })?
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Certify { network, output } => {
            let net = load(&network)?;
            let cert = certification::certify(&net);
            let json = cert.to_json();
            let summary = format!("{}: {}", network.display(), cert.class_label);
            emit(out, &output, &json, &[("certificate.json", &json)], &summary)?;
            Ok(if cert.is_certified() { EXIT_OK } else { EXIT_NOT_CERTIFIED })
        }
        Command::Tiers { network, profile, output } => {
            let net = load(&network)?;
            let profile = parse_profile(&net, &profile).map_err(Failure::input)?;
            let part = tier_partition(&net, &profile);
            let json = part.to_json(&net);
            let mut text = String::from("tier,exponent,complexes\n");
            for (i, (members, e)) in part.named(&net).iter().zip(&part.exponents).enumerate() {
                text.push_str(&format!("T{},{e},{}\n", i + 1, members.join(" | ")));
            }
            let shown = if output.json { &json } else { &text };
            let summary = format!("{} tiers", part.tiers.len());
            emit(out, &output, shown, &[("tiers.json", &json), ("tiers.csv", &text)], &summary)?;
            Ok(EXIT_OK)
        }
        Command::Drift {
            network,
            lyapunov,
            a,
            delta,
            box_radius,
            threads,
            slice,
            output,
        } => {
            let net = load(&network)?;
            let exponent = DriftExponent::from_delta(delta)
                .ok_or_else(|| Failure::input(format!("delta must be 0 or 0.5, got {delta}")))?;
            let kind = match lyapunov {
                Lyapunov::V => LyapunovKind::LogV,
                Lyapunov::W => {
                    let flows = graph::flow_decomposition(&net);
                    let core: Vec<_> = flows.core_reactions.iter().map(|&i| net.reactions()[i].clone()).collect();
                    let w = graph::find_conservation_vector(net.dim(), &core)
                        .ok_or_else(|| Failure::input("core has no positive conservation vector"))?;
                    LyapunovKind::linear(&w)
                }
            };
            let params = DriftParams::new(a, exponent, box_radius);
            let report = with_threads(threads, || drift_scan(&net, &kind, params))??;
            let json = serde_json::to_string_pretty(&report).expect("serializable");
            let mut files = vec![("drift.json", json.clone())];
            if let Some(axes) = slice {
                let names: Vec<&str> = axes.split(',').map(str::trim).collect();
                let idx: Vec<usize> = names
                    .iter()
                    .map(|n| net.species_index(n).ok_or_else(|| Failure::input(format!("unknown species `{n}`"))))
                    .collect::<Result<_, _>>()?;
                if idx.len() != 2 || idx[0] == idx[1] {
                    return Err(Failure::input("--slice needs two distinct species"));
                }
                let fixed = vec![1; net.dim()];
                files.push(("drift_slice.csv", drift_slice_csv(&net, &kind, params, (idx[0], idx[1]), &fixed)));
            }
            let summary = format!(
                "b={} argmax={:?} interior={} negative_on_shell={}",
                report.b, report.argmax_state, report.argmax_interior, report.negative_on_shell
            );
            let borrowed: Vec<(&str, &str)> = files.iter().map(|(n, b)| (*n, b.as_str())).collect();
            emit(out, &output, &json, &borrowed, &summary)?;
            Ok(EXIT_OK)
        }
        Command::Stationary {
            network,
            guess,
            x0,
            box_radius,
            tolerance,
            output,
        } => {
            let net = load(&network)?;
            let guess = guess.map_or_else(|| vec![1.0; net.dim()], |g| g.0);
            let x0 = x0.map_or_else(|| vec![1; net.dim()], |x| x.0);
            check_dim(&net, &x0)?;
            let eq = find_equilibrium(&net, &guess, NewtonOptions::default()).map_err(Failure::input)?;
            let probe = irreducibility_probe(&net, &x0, box_radius);
            let report = StationaryReport::new(&net, &eq, tolerance, probe);
            let json = report.to_json();
            let summary = format!("equilibrium={:?} pi={}", report.equilibrium, report.pi_kind);
            emit(out, &output, &json, &[("stationary.json", &json)], &summary)?;
            Ok(EXIT_OK)
        }
        Command::Simulate {
            network,
            x0,
            t,
            box_radius,
            run,
            output,
        } => {
            let net = load(&network)?;
            let x0 = x0.0;
            check_dim(&net, &x0)?;
            let config = run.config();
            let dist = with_threads(run.threads, || transient_distribution(&net, &x0, t, &config, box_radius))??;
            let csv = dist.to_csv(&net);
            let json = dist.summary_json();
            let shown = if output.json { &json } else { &csv };
            let summary = format!(
                "mean={:?} out_of_box={} support={}",
                dist.mean(),
                dist.out_of_box_mass(),
                dist.counts.len()
            );
            emit(out, &output, shown, &[("distribution.csv", &csv), ("summary.json", &json)], &summary)?;
            Ok(EXIT_OK)
        }
        Command::Tv {
            network,
            x0,
            t_grid,
            box_radius,
            eps,
            pi_time,
            run,
            output,
        } => {
            let net = load(&network)?;
            let (est, kind) = mixing_estimates(&net, &[x0.0], &t_grid.0, box_radius, eps, pi_time, &run)?;
            let (curve, _) = emit_curves(&est);
            let tau = est[0].tau.map_or("not reached".to_string(), |t| t.to_string());
            let summary = format!("pi={kind} tau={tau}");
            emit(out, &output, &curve, &[("tv_curve.csv", &curve)], &summary)?;
            Ok(EXIT_OK)
        }
        Command::Mixing {
            network,
            m_list,
            t_grid,
            box_radius,
            eps,
            pi_time,
            run,
            output,
        } => {
            let net = load(&network)?;
            let starts: Vec<Vec<u32>> = m_list.0.iter().map(|&m| vec![m; net.dim()]).collect();
            let (est, kind) = mixing_estimates(&net, &starts, &t_grid.0, box_radius, eps, pi_time, &run)?;
            let (curve, table) = emit_curves(&est);
            let taus: Vec<String> = est
                .iter()
                .map(|e| format!("{}:{}", e.label(), e.tau.map_or("-".to_string(), |t| t.to_string())))
                .collect();
            let summary = format!("pi={kind} tau {}", taus.join(" "));
            emit(
                out,
                &output,
                &table,
                &[("mixing_curve.csv", &curve), ("mixing_summary.csv", &table)],
                &summary,
            )?;
            Ok(EXIT_OK)
        }
        Command::Selftest => {
            let results = crate::selftest::run();
            let mut ok = true;
            for (name, passed, detail) in &results {
                ok &= passed;
                writeln!(out, "{} {name}: {detail}", if *passed { "PASS" } else { "FAIL" }).ok();
            }
            Ok(if ok { EXIT_OK } else { EXIT_INPUT })
        }
    }
}

/// Parse `args` (including the program name) and execute.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write!(out, "{rendered}").ok();
                    EXIT_OK
                }
                _ => {
                    write!(err, "{rendered}").ok();
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            writeln!(err, "error: {}", f.message).ok();
            f.code
        }
    }
}
