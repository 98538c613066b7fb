use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pxe_core::generator::{bootstrap_ledger, bootstrap_ledger_f64, parse_rational};
use pxe_core::lateral_grid::io::{load_field, save_field};
use pxe_core::lateral_grid::sobolev_spectrum;
use pxe_core::medium::Medium;
use pxe_core::propagator::{convergence_study, evolve, EvolutionConfig};
use pxe_core::regularity::{estimate_sobolev_exponent, inverse_regularity_experiment};
use pxe_core::synthesis::{solve_full, FrequencyBundle, SynthesisOptions};
use pxe_core::{Error, Field, LateralGrid};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::{Cli, Command};

const DEFAULT_OUT_DIR: &str = "pxe-out";
const DEPTH_SAMPLES: usize = 9;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Validation(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Validation(_) => 2,
            Self::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Validation(m) | Self::Solver(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::PartialFailure { .. } => {
                let mut msg = e.to_string();
                if let Error::PartialFailure { failures } = &e {
                    for (tau, why) in failures {
                        msg.push_str(&format!("\n  tau = {tau}: {why}"));
                    }
                }
                Self::Solver(msg)
            }
            Error::LowerBound { .. } => Self::Validation(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

#[derive(Serialize)]
struct Stage {
    name: String,
    seconds: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: Option<String>,
    seed: Option<u64>,
    workers: usize,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    timings: Vec<Stage>,
    total_seconds: f64,
    outputs: Vec<String>,
}

struct Session {
    out_dir: PathBuf,
    workers: usize,
    skip_validate: bool,
    stages: Vec<Stage>,
    outputs: Vec<String>,
}

impl Session {
    fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(Stage {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    fn path(&mut self, rel: &str) -> Outcome<PathBuf> {
        let p = self.out_dir.join(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)
                .map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
        }
        self.outputs.push(rel.to_string());
        Ok(p)
    }

    fn write_text(&mut self, rel: &str, text: &str) -> Outcome {
        let p = self.path(rel)?;
        fs::write(&p, text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
    }

    fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Outcome {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Failure::Config(e.to_string()))?;
        text.push('\n');
        self.write_text(rel, &text)
    }

    fn write_field(&mut self, rel: &str, f: &Field) -> Outcome {
        let p = self.path(rel)?;
        save_field(&p, f)?;
        Ok(())
    }

    /// Runs the medium checks unless skipped; a failed check is exit code 2.
    fn validate(
        &mut self,
        medium: &Medium,
        grid: &std::sync::Arc<LateralGrid>,
        zs: &[f64],
        taus: &[f64],
    ) -> Outcome {
        if self.skip_validate {
            return Ok(());
        }
        let report = self.timed("validate", || medium.validate_assumption1(zs, taus, grid));
        self.write_json("reports/validation.json", &report)?;
        if report.passed {
            Ok(())
        } else {
            Err(Failure::Validation(
                "medium fails the coefficient checks; see reports/validation.json".into(),
            ))
        }
    }
}

fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("PXE_WORKERS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
    })
    .filter(|&w| w > 0)
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

fn config_hash(cfg: &RunConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate => "simulate",
        Command::Evolve { .. } => "evolve",
        Command::Analyze { .. } => "analyze",
        Command::Inverse => "inverse",
        Command::Bootstrap { .. } => "bootstrap",
        Command::Convergence { .. } => "convergence",
        Command::Validate => "validate",
    }
}

fn load_config(cli: &Cli) -> Outcome<Option<RunConfig>> {
    let Some(path) = &cli.global.config else {
        if !cli.global.overrides.is_empty() {
            return Err(Failure::Config("--set needs --config".into()));
        }
        return Ok(None);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    RunConfig::parse(&text, &cli.global.overrides)
        .map(Some)
        .map_err(Failure::Config)
}

pub fn run(cli: &Cli) -> u8 {
    let start = Instant::now();
    let workers = resolve_workers(cli.global.workers);
    // Ignored if a pool already exists; only the first call can configure it.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
    let name = command_name(&cli.command);
    let cfg = match load_config(cli) {
        Ok(c) => c,
        Err(f) => {
            eprintln!("pxe {name}: {}", f.message());
            return f.code();
        }
    };
    let out_dir = cli
        .global
        .out_dir
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let mut sess = Session {
        out_dir,
        workers,
        skip_validate: cli.global.skip_validate,
        stages: Vec::new(),
        outputs: Vec::new(),
    };
    let result = dispatch(&mut sess, &cli.command, cfg.as_ref());
    let code = match &result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("pxe {name}: {}", f.message());
            f.code()
        }
    };
    if code == 0 || code == 3 {
        let manifest = Manifest {
            tool: "pxe",
            version: env!("CARGO_PKG_VERSION"),
            command: name,
            config_hash: cfg.as_ref().map(config_hash),
            seed: cfg.as_ref().map(|c| c.seed),
            workers,
            exit_code: code,
            error: result.as_ref().err().map(Failure::message),
            timings: std::mem::take(&mut sess.stages),
            total_seconds: start.elapsed().as_secs_f64(),
            outputs: std::mem::take(&mut sess.outputs),
        };
        let path = sess.out_dir.join("manifest.json");
        let written = fs::create_dir_all(&sess.out_dir).and_then(|_| {
            fs::write(
                &path,
                serde_json::to_string_pretty(&manifest).unwrap() + "\n",
            )
        });
        if let Err(e) = written {
            eprintln!("pxe {name}: cannot write {}: {e}", path.display());
            return 1;
        }
    }
    code
}

fn need(cfg: Option<&RunConfig>) -> Outcome<&RunConfig> {
    cfg.ok_or_else(|| Failure::Config("this command needs --config".into()))
}

fn depth_samples(z0: f64, z1: f64) -> Vec<f64> {
    (0..DEPTH_SAMPLES)
        .map(|i| z0 + (z1 - z0) * i as f64 / (DEPTH_SAMPLES - 1) as f64)
        .collect()
}

fn dispatch(sess: &mut Session, cmd: &Command, cfg: Option<&RunConfig>) -> Outcome {
    match cmd {
        Command::Simulate => simulate(sess, need(cfg)?),
        Command::Evolve {
            tau,
            z_from,
            z_to,
            steps,
            substeps,
        } => {
            let c = need(cfg)?;
            let mut ev = c.evolution_config();
            if let Some(n) = steps {
                ev.macro_steps = *n;
            }
            if let Some(m) = substeps {
                ev.micro_substeps = *m;
            }
            evolve_cmd(sess, c, ev, *tau, *z_from, z_to.unwrap_or(ev.depth_end))
        }
        Command::Analyze { fields } => analyze(sess, cfg, fields),
        Command::Inverse => inverse(sess, need(cfg)?),
        Command::Bootstrap { s, r } => bootstrap(sess, s, r),
        Command::Convergence { tau, n_list } => convergence(sess, need(cfg)?, *tau, n_list),
        Command::Validate => {
            let c = need(cfg)?;
            let grid = c.lateral_grid()?;
            let medium = c.medium.build(c.evolution.z)?;
            let taus = match c.frequency {
                Some(_) => c.tau_grid()?.taus(),
                None => vec![1.0],
            };
            let report = sess.timed("validate", || {
                medium.validate_assumption1(&depth_samples(0.0, c.evolution.z), &taus, &grid)
            });
            sess.write_json("reports/validation.json", &report)?;
            println!(
                "validation {}",
                if report.passed { "passed" } else { "failed" }
            );
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Validation(
                    "medium fails the coefficient checks".into(),
                ))
            }
        }
    }
}

#[derive(Serialize)]
struct TraceSummary {
    tau: f64,
    steps: usize,
    total_iterations: usize,
    final_l2: f64,
}

fn simulate(sess: &mut Session, c: &RunConfig) -> Outcome {
    let grid = c.lateral_grid()?;
    let medium = c.medium.build(c.evolution.z)?;
    medium.check_support(&grid)?;
    let taus = c.tau_grid()?;
    let ev = c.evolution_config();
    ev.validate()?;
    sess.validate(
        &medium,
        &grid,
        &depth_samples(0.0, ev.depth_end),
        &taus.taus(),
    )?;
    let data = c.data()?;
    let profile = data
        .profile
        .unwrap_or(pxe_core::synthesis::FrequencyFilter::None);
    profile.validate()?;
    let init = data.initial.build(&grid, c.seed)?;
    let v0 = FrequencyBundle::from_fn(taus, |tau| init.scaled(profile.eval(tau).into()))?;
    let source_field = data
        .source
        .as_ref()
        .map(|s| {
            s.field
                .build(&grid, c.seed)
                .map(|f| f.scaled(s.amplitude.into()))
        })
        .transpose()?;
    let source = source_field
        .as_ref()
        .map(|f| move |_z: f64, tau: f64| f.scaled(profile.eval(tau).into()));
    let opts = SynthesisOptions {
        workers: sess.workers,
        z_values: c.evolution.outputs.clone().unwrap_or_default(),
        filter: c
            .frequency
            .map(|f| f.filter)
            .unwrap_or(pxe_core::synthesis::FrequencyFilter::None),
    };
    let sol = sess.timed("solve", || {
        solve_full(
            &medium,
            &v0,
            source
                .as_ref()
                .map(|g| g as &pxe_core::synthesis::SourceFn<'_>),
            &ev,
            &opts,
        )
    })?;
    for (i, series) in sol.series.iter().enumerate() {
        for (m, f) in series.fields.iter().enumerate() {
            sess.write_field(&format!("fields/u_z{i:03}_t{m:03}.pxfld"), f)?;
        }
    }
    let traces: Vec<TraceSummary> = sol
        .traces
        .iter()
        .enumerate()
        .map(|(j, t)| TraceSummary {
            tau: taus.tau(j),
            steps: t.len(),
            total_iterations: t.total_iterations(),
            final_l2: t.steps.last().map_or(0.0, |s| s.l2),
        })
        .collect();
    sess.write_json(
        "reports/space_time.json",
        &serde_json::json!({ "manifest": sol.manifest(), "traces": traces }),
    )?;
    println!(
        "simulate: {} depth(s) x {} time slices written",
        sol.z_values.len(),
        taus.len()
    );
    Ok(())
}

fn evolve_cmd(
    sess: &mut Session,
    c: &RunConfig,
    ev: EvolutionConfig,
    tau: f64,
    z_from: f64,
    z_to: f64,
) -> Outcome {
    let grid = c.lateral_grid()?;
    let medium = c.medium.build(ev.depth_end)?;
    medium.check_support(&grid)?;
    ev.validate()?;
    sess.validate(&medium, &grid, &depth_samples(z_from, z_to), &[tau])?;
    let v = c
        .data()?
        .initial
        .build(&grid, c.seed)?
        .with_meta(z_from, tau);
    let (u, trace) = sess.timed("evolve", || evolve(&medium, tau, z_from, z_to, &v, &ev))?;
    let s_values = c.analysis().s_values;
    sess.write_field("fields/evolved.pxfld", &u)?;
    sess.write_json("reports/trace.json", &trace)?;
    sess.write_json(
        "reports/evolve.json",
        &serde_json::json!({
            "tau": tau,
            "z_from": z_from,
            "z_to": z_to,
            "l2_in": v.l2_norm(),
            "l2_out": u.l2_norm(),
            "sobolev": sobolev_spectrum(&u, &s_values)?,
        }),
    )?;
    println!(
        "evolve: |v| = {:.6e}, |U v| = {:.6e}",
        v.l2_norm(),
        u.l2_norm()
    );
    Ok(())
}

fn analyze(sess: &mut Session, cfg: Option<&RunConfig>, paths: &[PathBuf]) -> Outcome {
    let a = cfg.map(RunConfig::analysis).unwrap_or_default();
    a.fit_range.validate()?;
    let mut entries = Vec::new();
    for p in paths {
        let f = load_field(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
        let est = estimate_sobolev_exponent(&f, a.fit_range)?;
        entries.push(serde_json::json!({
            "path": display(p),
            "z": f.z,
            "tau": f.tau,
            "N": f.grid().n(),
            "L": f.grid().length(),
            "sobolev": sobolev_spectrum(&f, &a.s_values)?,
            "estimate": est,
        }));
        println!(
            "{}: exponent {:.3} ({:?})",
            display(p),
            est.exponent,
            est.status
        );
    }
    sess.write_json("reports/analysis.json", &entries)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn inverse(sess: &mut Session, c: &RunConfig) -> Outcome {
    let inv = c.inverse_config()?;
    let report = sess.timed("inverse", || inverse_regularity_experiment(&inv))?;
    sess.write_json("reports/inverse.json", &report)?;
    sess.write_text("tables/inverse.csv", &report.to_csv())?;
    let flag = serde_json::to_value(report.decision).unwrap();
    println!("inverse: decision {}", flag.as_str().unwrap_or_default());
    Ok(())
}

fn bootstrap(sess: &mut Session, s: &str, r: &str) -> Outcome {
    let ledger = match (parse_rational(s), parse_rational(r)) {
        (Some(s), Some(r)) => bootstrap_ledger(s, r)?,
        _ => {
            let parse = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Failure::Config(format!("`{t}` is not a number")))
            };
            bootstrap_ledger_f64(parse(s)?, parse(r)?)?
        }
    };
    let text = serde_json::to_string_pretty(&ledger).map_err(|e| Failure::Config(e.to_string()))?;
    println!("{text}");
    sess.write_json("reports/bootstrap.json", &ledger)
}

fn convergence(sess: &mut Session, c: &RunConfig, tau: f64, n_list: &[usize]) -> Outcome {
    let grid = c.lateral_grid()?;
    let medium = c.medium.build(c.evolution.z)?;
    medium.check_support(&grid)?;
    let ev = c.evolution_config();
    sess.validate(&medium, &grid, &depth_samples(0.0, ev.depth_end), &[tau])?;
    let v = c.data()?.initial.build(&grid, c.seed)?;
    let report = sess.timed("convergence", || {
        convergence_study(&medium, tau, &v, &ev, n_list)
    })?;
    sess.write_json("reports/convergence.json", &report)?;
    match report.order {
        Some(p) => println!("convergence: fitted order {p:.3}"),
        None if report.exact => println!("convergence: exact"),
        None => println!("convergence: order undetermined"),
    }
    Ok(())
}
