use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use safe_embed::analysis::simulate_closed_loop;
use safe_embed::linearize::{cross_check, linearize_at_equilibrium};
use safe_embed::model::{Disturbance, DisturbanceSignal};
use safe_embed::numkit::eigenvalues;
use safe_embed::scenarios::linear::BAS_TOL;
use safe_embed::scenarios::{
    max_bas_gap, report_text, run_scenario, trajectory_csv, write_atomic, Assertion, AssertionReport, Overrides,
    ScenarioId, Verdict,
};
use safe_embed::synthesis::closed_loop_spectrum;
use safe_embed::{Matrix, Spectrum, Vector};

use crate::config::{self, ControllerSpec, RunConfig};
use crate::system::{build_feedback, build_system, pole_values, scenario_design, Design};
use crate::{CliError, Flags};

const DEFAULT_HORIZON: f64 = 10.0;
const DEFAULT_DT: f64 = 1e-3;
const FD_TOL: f64 = 1e-6;

enum Job {
    Scenario { id: ScenarioId, overrides: Overrides },
    Inline { name: String, cfg: Box<RunConfig> },
}

struct Resolved {
    job: Job,
    seed: u64,
    root: PathBuf,
}

fn resolve(flags: &Flags) -> Result<Option<Resolved>, CliError> {
    let cfg = match &flags.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    let seed = flags.seed.or(cfg.seed).unwrap_or(0);
    let root = flags
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os("SAFE_EMBED_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    for (name, v) in [("--dt", flags.dt), ("--horizon", flags.horizon)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
    }

    if cfg.system.is_some() {
        if flags.scenario.is_some() {
            return Err(CliError::Config("--scenario cannot be combined with an inline system config".into()));
        }
        let name = flags
            .config
            .as_deref()
            .and_then(Path::file_stem)
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "config".into());
        let mut cfg = cfg;
        cfg.dt = flags.dt.or(cfg.dt);
        cfg.horizon = flags.horizon.or(cfg.horizon);
        return Ok(Some(Resolved { job: Job::Inline { name, cfg: Box::new(cfg) }, seed, root }));
    }

    let Some(scenario) = flags.scenario.as_ref().or(cfg.scenario.as_ref()) else {
        return Ok(None);
    };
    let id: ScenarioId = scenario.parse()?;
    let mut overrides = cfg.parameters.clone();
    for (key, v) in [("dt", flags.dt.or(cfg.dt)), ("horizon", flags.horizon.or(cfg.horizon))] {
        if let Some(v) = v {
            overrides.insert(key.into(), v.into());
        }
    }
    Ok(Some(Resolved { job: Job::Scenario { id, overrides }, seed, root }))
}

fn nothing_to_do() -> CliError {
    CliError::Config("give --scenario or --config".into())
}

pub fn cmd_run(flags: &Flags) -> Result<Verdict, CliError> {
    let r = resolve(flags)?.ok_or_else(nothing_to_do)?;
    execute(&r)
}

/// Every scenario with its defaults unless one is named.
pub fn cmd_check(flags: &Flags) -> Result<Verdict, CliError> {
    if let Some(r) = resolve(flags)? {
        return execute(&r);
    }
    let mut all = Vec::new();
    for id in ScenarioId::ALL {
        let one = Flags { scenario: Some(id.as_str().into()), ..flags.clone() };
        let r = resolve(&one)?.ok_or_else(nothing_to_do)?;
        all.push(execute(&r)?);
    }
    Ok(worst(all))
}

fn worst(vs: Vec<Verdict>) -> Verdict {
    if vs.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if vs.contains(&Verdict::Degenerate) {
        Verdict::Degenerate
    } else {
        Verdict::Pass
    }
}

fn execute(r: &Resolved) -> Result<Verdict, CliError> {
    match &r.job {
        Job::Scenario { id, overrides } => {
            let outcome = run_scenario(*id, overrides, r.seed)?;
            let paths = outcome.write(&r.root)?;
            summarize(&outcome.report, &paths);
            Ok(outcome.report.verdict())
        }
        Job::Inline { name, cfg } => run_inline(name, cfg, r.seed, &r.root),
    }
}

fn summarize(report: &AssertionReport, paths: &[PathBuf]) {
    let verdict = report.verdict();
    println!("{}\tseed {}\t{verdict}", report.scenario, report.seed);
    for a in report.failures() {
        println!("  {}\t{}\texpected {}\tobserved {}", a.verdict, a.id, a.expected, a.observed);
    }
    for p in paths {
        println!("  wrote {}", p.display());
    }
}

fn run_inline(name: &str, cfg: &RunConfig, seed: u64, root: &Path) -> Result<Verdict, CliError> {
    let spec = cfg.system.as_ref().expect("inline jobs carry a system");
    let emb = build_system(spec)?;
    let (n, m) = (emb.base_state_dim(), emb.input_dim());

    let Some(x0) = &cfg.initial_state else {
        return Err(CliError::Config("an inline run needs 'initial_state'".into()));
    };
    let mut start = Vector::zeros(n);
    if x0.len() == n || (x0.len() == emb.plant_state_dim() && emb.is_input_augmented()) {
        start.rows_mut(0, x0.len()).copy_from_slice(x0);
    } else {
        return Err(CliError::Config(format!("initial_state needs {n} entries, got {}", x0.len())));
    }
    let xbar = emb.consistent_state(&start).map_err(|e| CliError::Config(format!("initial_state: {e}")))?;

    let disturbance = match &cfg.disturbance {
        None => Disturbance::zero(m),
        Some(kinds) if kinds.len() == m => {
            let channels = kinds
                .iter()
                .map(|k| DisturbanceSignal::new(k.clone(), seed))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("disturbance: {e}")))?;
            Disturbance::new(channels)?
        }
        Some(kinds) => return Err(CliError::Config(format!("disturbance needs {m} channels, got {}", kinds.len()))),
    };

    let lin = linearize_at_equilibrium(&emb)?;
    let fb = build_feedback(spec.builtin, &emb, &lin, cfg.controller.as_ref())?;
    let horizon = cfg.horizon.unwrap_or(DEFAULT_HORIZON);
    let dt = cfg.dt.unwrap_or(DEFAULT_DT);
    let traj = simulate_closed_loop(&emb, &fb, &disturbance, &xbar, horizon, dt)?;

    let min_h = (0..traj.labels.len()).map(|i| traj.min_margin(i)).fold(f64::INFINITY, f64::min);
    let assertions = vec![
        Assertion::flag("run.status", "completed", traj.status.to_string(), traj.status.is_completed()),
        Assertion::above("run.min_h", min_h, 0.0),
        Assertion::at_most("run.bas_identity", max_bas_gap(&traj, &emb)?, BAS_TOL),
    ];
    let report = AssertionReport { scenario: name.to_string(), seed, assertions };

    let dir = root.join(name).join(format!("seed-{seed}"));
    let csv = dir.join("trajectory.csv");
    let rep = dir.join("report.txt");
    write_atomic(&csv, trajectory_csv(&traj, 10).as_bytes())?;
    write_atomic(&rep, report_text(&report).as_bytes())?;
    summarize(&report, &[csv, rep]);
    Ok(report.verdict())
}

fn design(flags: &Flags) -> Result<(Design, PathBuf), CliError> {
    let r = resolve(flags)?.ok_or_else(nothing_to_do)?;
    let d = match r.job {
        Job::Scenario { id, overrides } => scenario_design(id, &overrides)?,
        Job::Inline { name, cfg } => {
            let spec = cfg.system.expect("inline jobs carry a system");
            Design { name, builtin: spec.builtin, embedded: build_system(&spec)?, controller: cfg.controller }
        }
    };
    Ok((d, r.root))
}

fn matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("re,im\n");
    for c in s.sorted() {
        let _ = writeln!(out, "{},{}", c.re, c.im);
    }
    out
}

fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::with_capacity(files.len());
    for (file, body) in files {
        let p = dir.join(file);
        write_atomic(&p, body.as_bytes())?;
        paths.push(p);
    }
    Ok(paths)
}

/// Gain, closed-loop spectrum and `(Ā, B̄)` under `root/{name}/synthesis`.
pub fn cmd_synthesize(flags: &Flags) -> Result<Verdict, CliError> {
    let (d, root) = design(flags)?;
    let lin = linearize_at_equilibrium(&d.embedded)?;
    let fb = build_feedback(d.builtin, &d.embedded, &lin, d.controller.as_ref())?;
    let spectrum = closed_loop_spectrum(&lin, &fb)?;

    let mut assertions = vec![Assertion::below("spectrum.max_real", spectrum.max_real(), 0.0)];
    if let Some(ControllerSpec::Ackermann { poles }) = &d.controller {
        let targets = pole_values(poles);
        let scale = targets.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let err = spectrum.greedy_match_error(&targets).unwrap_or(f64::INFINITY);
        assertions.push(Assertion::at_most("spectrum.placement", err, 1e-6 * scale));
    }
    let report = AssertionReport { scenario: d.name.clone(), seed: 0, assertions };

    let dir = root.join(&d.name).join("synthesis");
    let paths = write_all(
        &dir,
        &[
            ("gain.csv", matrix_csv(&fb.negative_gain())),
            ("spectrum.csv", spectrum_csv(&spectrum)),
            ("a_bar.csv", matrix_csv(&lin.a)),
            ("b_bar.csv", matrix_csv(&lin.b)),
            ("report.txt", report_text(&report)),
        ],
    )?;
    summarize(&report, &paths);
    Ok(report.verdict())
}

/// `(Ā, B̄)` at the equilibrium, its open-loop spectrum and the finite-difference gap.
pub fn cmd_linearize(flags: &Flags) -> Result<Verdict, CliError> {
    let (d, root) = design(flags)?;
    let lin = linearize_at_equilibrium(&d.embedded)?;
    let gap = cross_check(&d.embedded, &lin.state, &lin.input)?;
    let spectrum = eigenvalues(&lin.a)?;
    let report = AssertionReport {
        scenario: d.name.clone(),
        seed: 0,
        assertions: vec![
            Assertion::at_most("linearize.fd_gap", gap, FD_TOL),
            Assertion::at_most("linearize.drift", lin.drift_norm(), 1e-9),
        ],
    };
    let dir = root.join(&d.name).join("linearization");
    let paths = write_all(
        &dir,
        &[
            ("a_bar.csv", matrix_csv(&lin.a)),
            ("b_bar.csv", matrix_csv(&lin.b)),
            ("spectrum.csv", spectrum_csv(&spectrum)),
            ("report.txt", report_text(&report)),
        ],
    )?;
    summarize(&report, &paths);
    Ok(report.verdict())
}
