//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when the analysis itself fails (power flow
//! diverges, no stability margin, ...), 2 for bad arguments or an unusable
//! case file.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use tsbound_core::assess::{
    sweep_point, CctMode, CctResult, MarginIndex, Study, StudyConfig, SweepParameter, SweepRow,
    DEFAULT_CCT_BRACKET, DEFAULT_CCT_TOLERANCE,
};
use tsbound_core::dynamics::{DEFAULT_HORIZON, DEFAULT_STEP};
use tsbound_core::envelope::{verify_envelope, DominanceReport, EnvelopeParams, DEFAULT_EDGES};
use tsbound_core::netmodel::PowerNetwork;

use crate::case::load_case;
use crate::export;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TSBOUND_OUT_DIR";

/// Random configurations per interval in the envelope dominance check.
const DOMINANCE_SAMPLES: usize = 10_000;
const DOMINANCE_SEED: u64 = 0x5eed;

#[derive(Debug, Parser)]
#[command(name = "tsbound", version, about = "Transient-stability bounds for Kron-reduced power networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Case file, or `ieee9` for the bundled WSCC 9-bus system
    #[arg(long)]
    case: String,
    /// Override the damping ratio λ (sets D_i = λ M_i)
    #[arg(long)]
    lambda: Option<f64>,
    /// Integration step (s)
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    /// Post-fault horizon (s)
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: f64,
    /// Envelope interval edges on D (rad), comma separated
    #[arg(long, value_delimiter = ',')]
    edges: Option<Vec<f64>>,
    /// Write artifacts to this directory instead of stdout
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Scenario {
    /// Faulted bus id
    #[arg(long)]
    fault_bus: usize,
    /// Clearing time (s)
    #[arg(long)]
    tc: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Numerical,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the power flow (JSON)
    Pf {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate a fault and write the trajectory (CSV)
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: Scenario,
    },
    /// Bound curve next to the simulated diameter (CSV) and the envelope (JSON)
    Bound {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: Scenario,
    },
    /// Analytic and numerical assessment of one clearing time (JSON)
    Certify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: Scenario,
    },
    /// Critical clearing time by bisection (JSON)
    Cct {
        #[command(flatten)]
        common: Common,
        /// Faulted bus id
        #[arg(long)]
        fault_bus: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        /// Search bracket `lo,hi` (s)
        #[arg(long, value_delimiter = ',', num_args = 1)]
        bracket: Option<Vec<f64>>,
        /// Bisection tolerance (s)
        #[arg(long, default_value_t = DEFAULT_CCT_TOLERANCE)]
        tol: f64,
    },
    /// μ and both CCTs over a parameter sweep (CSV)
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Faulted bus id
        #[arg(long)]
        fault_bus: usize,
        /// `lambda`, or `x:FROM-TO` for a branch reactance
        #[arg(long)]
        param: String,
        /// Parameter values, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Domain(anyhow::Error),
}

type Outcome<T> = Result<T, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn domain<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Domain(e.into())
}

/// Parses `args` (program name first) and runs the subcommand. Artifacts
/// go to `stdout` unless an output directory is configured.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let _ = writeln!(stderr, "error: {e:#}");
            2
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}

fn load(common: &Common) -> Outcome<PowerNetwork> {
    let net = load_case(&common.case).with_context(|| format!("case `{}`", common.case)).map_err(usage)?;
    match common.lambda {
        Some(l) if !(l >= 0.0 && l.is_finite()) => Err(usage(anyhow!("--lambda must be a non-negative number"))),
        Some(l) => net.with_damping_ratio(l).map_err(usage),
        None => Ok(net),
    }
}

fn config(common: &Common) -> Outcome<StudyConfig> {
    if !(common.step > 0.0 && common.step.is_finite()) {
        return Err(usage(anyhow!("--step must be positive")));
    }
    if !(common.horizon > 0.0 && common.horizon.is_finite()) {
        return Err(usage(anyhow!("--horizon must be positive")));
    }
    let edges = common.edges.clone().unwrap_or_else(|| DEFAULT_EDGES.to_vec());
    if edges.len() < 2 || edges[0] != 0.0 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(usage(anyhow!("--edges must start at 0 and increase strictly")));
    }
    Ok(StudyConfig { step: common.step, horizon: common.horizon, edges, ..StudyConfig::default() })
}

fn study(common: &Common) -> Outcome<Study> {
    let net = load(common)?;
    Study::new(net, config(common)?).map_err(domain)
}

fn check_scenario(study: &Study, s: &Scenario) -> Outcome<()> {
    if !(s.tc >= 0.0 && s.tc.is_finite()) {
        return Err(usage(anyhow!("--tc must be a non-negative number")));
    }
    study.fault(s.fault_bus, s.tc).map(|_| ()).map_err(usage)
}

struct Sink<'a> {
    dir: Option<PathBuf>,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Sink<'_> {
    /// Writes an artifact to the output directory, or to stdout when there
    /// is none and `primary` is set.
    fn emit(&mut self, name: &str, body: &str, primary: bool) -> Outcome<()> {
        match &self.dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(domain)?;
                let path = dir.join(name);
                write_file(&path, body).map_err(domain)?;
                let _ = writeln!(self.stderr, "wrote {}", path.display());
            }
            None if primary => self.stdout.write_all(body.as_bytes()).context("writing to stdout").map_err(domain)?,
            None => {}
        }
        Ok(())
    }

    fn emit_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T, primary: bool) -> Outcome<()> {
        let body = export::to_json(value).map_err(domain)?;
        self.emit(name, &body, primary)
    }
}

fn write_file(path: &Path, body: &str) -> anyhow::Result<()> {
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct BusSolution {
    id: usize,
    vm: f64,
    va: f64,
    p_injection: f64,
    q_injection: f64,
}

#[derive(Serialize)]
struct PfReport {
    iterations: usize,
    max_mismatch: f64,
    buses: Vec<BusSolution>,
}

#[derive(Serialize)]
struct EnvelopeReport<'a> {
    lambda: f64,
    envelope: &'a EnvelopeParams,
    margin_index: MarginIndex,
    dominance: DominanceReport,
}

#[derive(Serialize)]
struct CctReport {
    fault_bus: usize,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic: Option<CctResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    numerical: Option<CctResult>,
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome<()> {
    let out_of = |c: &Common| c.out.clone();
    match command {
        Command::Pf { common } => {
            let study = study(&common)?;
            let pf = &study.power_flow;
            let report = PfReport {
                iterations: pf.iterations,
                max_mismatch: pf.max_mismatch,
                buses: study
                    .net
                    .buses()
                    .iter()
                    .enumerate()
                    .map(|(k, b)| BusSolution {
                        id: b.id,
                        vm: pf.voltage[k].norm(),
                        va: pf.voltage[k].arg(),
                        p_injection: pf.p_injection[k],
                        q_injection: pf.q_injection[k],
                    })
                    .collect(),
            };
            Sink { dir: out_of(&common), stdout, stderr }.emit_json("pf.json", &report, true)
        }
        Command::Simulate { common, scenario } => {
            let study = study(&common)?;
            check_scenario(&study, &scenario)?;
            let fault_on = study.fault_on(scenario.fault_bus).map_err(domain)?;
            let on = study.fault_on_trajectory(&fault_on, scenario.tc).map_err(domain)?;
            let post = study.post_fault_trajectory(&on.last_state(), scenario.tc, false).map_err(domain)?;
            let csv = export::trajectory_csv(&[&on, &post]);
            Sink { dir: out_of(&common), stdout, stderr }.emit("trajectory.csv", &csv, true)
        }
        Command::Bound { common, scenario } => {
            let study = study(&common)?;
            check_scenario(&study, &scenario)?;
            let env = study.envelope().map_err(domain)?;
            let fault_on = study.fault_on(scenario.fault_bus).map_err(domain)?;
            let clearing = study.fault_on_trajectory(&fault_on, scenario.tc).map_err(domain)?.last_state();
            let curve = study.bound_from(&clearing).map_err(domain)?;
            let post = study.post_fault_trajectory(&clearing, scenario.tc, false).map_err(domain)?;
            let dominance =
                verify_envelope(env, &study.post_fault, DOMINANCE_SAMPLES, -1e-9, DOMINANCE_SEED).map_err(domain)?;
            let report = EnvelopeReport { lambda: study.lambda(), envelope: env, margin_index: study.margin_index().map_err(domain)?, dominance };
            let mut sink = Sink { dir: out_of(&common), stdout, stderr };
            sink.emit("bound.csv", &export::bound_csv(&curve, &post), true)?;
            sink.emit_json("envelope.json", &report, false)
        }
        Command::Certify { common, scenario } => {
            let study = study(&common)?;
            check_scenario(&study, &scenario)?;
            let assessment = study.certify(scenario.fault_bus, scenario.tc).map_err(domain)?;
            Sink { dir: out_of(&common), stdout, stderr }.emit_json("assessment.json", &assessment, true)
        }
        Command::Cct { common, fault_bus, mode, bracket, tol } => {
            let bracket = match bracket.as_deref() {
                None => DEFAULT_CCT_BRACKET,
                Some(&[lo, hi]) if lo >= 0.0 && hi > lo => (lo, hi),
                Some(_) => return Err(usage(anyhow!("--bracket takes `lo,hi` with 0 <= lo < hi"))),
            };
            if !(tol > 0.0) {
                return Err(usage(anyhow!("--tol must be positive")));
            }
            let study = study(&common)?;
            study.fault(fault_bus, 0.0).map_err(usage)?;
            let run = |m| study.estimate_cct(fault_bus, m, bracket, tol).map_err(domain);
            let (analytic, numerical) = match mode {
                ModeArg::Analytic => (Some(run(CctMode::Analytic)?), None),
                ModeArg::Numerical => (None, Some(run(CctMode::Numerical)?)),
                ModeArg::Both => {
                    let (a, n) = rayon::join(|| run(CctMode::Analytic), || run(CctMode::Numerical));
                    (Some(a?), Some(n?))
                }
            };
            let report = CctReport { fault_bus, lambda: study.lambda(), analytic, numerical };
            Sink { dir: out_of(&common), stdout, stderr }.emit_json("cct.json", &report, true)
        }
        Command::Sweep { common, fault_bus, param, values } => {
            let (parameter, label) = parse_parameter(&param)?;
            let net = load(&common)?;
            let cfg = config(&common)?;
            // validate the fault bus once rather than in every row
            if net.bus_index(fault_bus).is_none() {
                return Err(usage(anyhow!("--fault-bus {fault_bus} is not a bus of the case")));
            }
            let rows: Vec<SweepRow> =
                values.par_iter().map(|&v| sweep_point(&net, fault_bus, parameter, v, &cfg)).collect();
            Sink { dir: out_of(&common), stdout, stderr }.emit("sweep.csv", &export::sweep_csv(&label, &rows), true)
        }
    }
}

fn parse_parameter(s: &str) -> Outcome<(SweepParameter, String)> {
    if s == "lambda" {
        return Ok((SweepParameter::Lambda, "lambda".into()));
    }
    let bad = || usage(anyhow!("--param must be `lambda` or `x:FROM-TO`, got `{s}`"));
    let (from, to) = s.strip_prefix("x:").and_then(|r| r.split_once('-')).ok_or_else(bad)?;
    let from: usize = from.trim().parse().map_err(|_| bad())?;
    let to: usize = to.trim().parse().map_err(|_| bad())?;
    Ok((SweepParameter::BranchReactance { from, to }, format!("x_{from}_{to}")))
}
