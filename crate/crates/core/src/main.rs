use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use muskat::config::{parse_config_with, ResolvedRun, RunConfig};
use muskat::dno::{dirichlet_neumann, dno_remainder_order, BottomSpec, DnoMethod, EllipticConfig};
use muskat::evolve::{run_simulation, scaling_check, stability_sweep, Termination};
use muskat::io::{emit_snapshot, unix_now, write_run, RunManifest};
use muskat::paradiff::CutoffPair;
use muskat::twophase::solve_traces;
use muskat::verify::{
    find_check, parse_selection, run_check, verify_suite, CheckResult, Module, VerifyReport,
};
use muskat::{Error, Field};

const OUT_ROOT_VAR: &str = "MUSKAT_OUT_ROOT";

#[derive(Parser)]
#[command(
    name = "muskat",
    version,
    about = "Periodic Muskat interfaces with surface tension"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: output.directory, else $MUSKAT_OUT_ROOT/<config name>, else runs/<config name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of a random initial interface.
    #[arg(long)]
    seed: Option<u64>,
    /// Grid override, e.g. 256 or 64x64.
    #[arg(long)]
    resolution: Option<String>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured interface and write snapshots, diagnostics and a manifest.
    Simulate(Common),
    /// Run the verification suite over the selected modules.
    Verify {
        /// Any of dno, paradiff, symbols, geometry, twophase, evolve, all.
        selection: Vec<String>,
        /// Run a single check by id (C1..C11, S1, G1, T1).
        #[arg(long)]
        check: Vec<String>,
        /// Re-validate the checksum index of a finished run directory.
        #[arg(long = "run")]
        runs: Vec<PathBuf>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        /// Also write report.json here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Dirichlet-Neumann diagnostics on the configured interface.
    DnoTest(Common),
    /// Lipschitz ratios for perturbations of the configured interface.
    Stability {
        #[command(flatten)]
        common: Common,
        /// Amplitude of the cos(mode x) perturbation direction.
        #[arg(long, default_value_t = 1e-3)]
        perturbation: f64,
        #[arg(long, default_value_t = 2)]
        mode: i64,
    },
    /// Compare a run with its dilation by an integer factor.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        lambda: usize,
    },
    /// Solve for the interface traces of the configured state.
    Traces(Common),
}

enum Failure {
    Validation(String),
    Numerical(String),
    Monitor(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(c) => simulate(&c),
        Command::Verify {
            selection,
            check,
            runs,
            json,
            out,
            quiet,
        } => verify(&selection, &check, &runs, json, out.as_deref(), quiet),
        Command::DnoTest(c) => dno_test(&c),
        Command::Stability {
            common,
            perturbation,
            mode,
        } => stability(&common, perturbation, mode),
        Command::Scaling { common, lambda } => scaling(&common, lambda),
        Command::Traces(c) => traces(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Monitor(m)) => {
            eprintln!("stopped by monitor: {m}");
            ExitCode::from(3)
        }
    }
}

fn parse_resolution(text: &str) -> Result<Vec<usize>, Error> {
    text.split(['x', ','])
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Error::InvalidArgument(format!("--resolution {text:?}: expected N or NxM")))
}

fn load(c: &Common) -> Result<(ResolvedRun, String), Error> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let resolution = c.resolution.as_deref().map(parse_resolution).transpose()?;
    let cfg = parse_config_with(&text, |cfg: &mut RunConfig| {
        if let Some(r) = resolution {
            cfg.domain.resolution = r;
        }
        if let Some(s) = c.seed {
            cfg.initial.seed = s;
        }
    })?;
    let stem = path
        .file_stem()
        .map_or("run".into(), |s| s.to_string_lossy().into_owned());
    Ok((cfg.resolve()?, stem))
}

fn out_dir(c: &Common, run: &ResolvedRun, name: &str) -> PathBuf {
    if let Some(d) = &c.out {
        return d.clone();
    }
    if let Some(d) = &run.config.output.directory {
        return d.clone();
    }
    let root = std::env::var_os(OUT_ROOT_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(name)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

fn simulate(c: &Common) -> Outcome {
    let (run, stem) = load(c)?;
    let dir = out_dir(c, &run, &stem);
    let started = unix_now();
    let out = run_simulation(&run.spec)?;
    let manifest = write_run(&dir, &run.config.to_toml(), &out, started)?;
    if !c.quiet {
        println!(
            "{} steps ({} rejected) to t = {:.6e}; {} files in {}",
            out.steps,
            out.rejected_steps,
            out.final_state.t,
            manifest.files.len(),
            dir.display()
        );
    }
    match out.termination {
        Termination::Completed => Ok(()),
        Termination::Monitor {
            kind,
            t,
            value,
            threshold,
        } => Err(Failure::Monitor(format!(
            "{kind:?} at t = {t:.6e} (value {value:.3e}, threshold {threshold:.3e})"
        ))),
    }
}

fn print_check(c: &CheckResult) {
    let status = if c.passed { "PASS" } else { "FAIL" };
    println!(
        "{status} {:<4} {:<9} {:>7.2}s  {}",
        c.id,
        c.module.name(),
        c.seconds,
        c.title
    );
    for (name, v) in &c.measured {
        println!("       {name} = {v:.6e}");
    }
    println!("       bound: {}", c.bound);
    if !c.detail.is_empty() {
        println!("       {}", c.detail);
    }
}

#[derive(Serialize)]
struct RunIndexCheck {
    directory: PathBuf,
    stale: Vec<String>,
}

fn verify(
    selection: &[String],
    ids: &[String],
    runs: &[PathBuf],
    json: bool,
    out: Option<&Path>,
    quiet: bool,
) -> Outcome {
    let report = if ids.is_empty() {
        let modules: Vec<Module> = parse_selection(selection)?;
        verify_suite(&modules)
    } else {
        let start = std::time::Instant::now();
        let mut checks = Vec::new();
        for id in ids {
            let c = find_check(id)
                .ok_or_else(|| Failure::Validation(format!("no check with id {id:?}")))?;
            checks.push(run_check(c));
        }
        VerifyReport {
            passed: checks.iter().all(|c| c.passed),
            checks,
            seconds: start.elapsed().as_secs_f64(),
        }
    };
    let mut indices = Vec::new();
    for dir in runs {
        let m = RunManifest::load(dir)?;
        indices.push(RunIndexCheck {
            directory: dir.clone(),
            stale: m.stale_files(dir)?,
        });
    }
    let indices_ok = indices.iter().all(|i| i.stale.is_empty());
    if json {
        #[derive(Serialize)]
        struct Full<'a> {
            report: &'a VerifyReport,
            runs: &'a [RunIndexCheck],
        }
        let text = serde_json::to_string_pretty(&Full {
            report: &report,
            runs: &indices,
        })
        .map_err(|e| Failure::Validation(e.to_string()))?;
        println!("{text}");
    } else if !quiet {
        for c in &report.checks {
            print_check(c);
        }
        for i in &indices {
            if i.stale.is_empty() {
                println!("PASS run index {}", i.directory.display());
            } else {
                println!(
                    "FAIL run index {}: stale {:?}",
                    i.directory.display(),
                    i.stale
                );
            }
        }
        println!(
            "{} of {} checks passed in {:.1}s",
            report.checks.iter().filter(|c| c.passed).count(),
            report.checks.len(),
            report.seconds
        );
    }
    if let Some(dir) = out {
        write_json(dir, "report.json", &report)?;
    }
    if report.passed && indices_ok {
        Ok(())
    } else {
        let failed: Vec<&str> = report.failures().map(|c| c.id).collect();
        Err(Failure::Numerical(format!(
            "failed checks {failed:?}{}",
            if indices_ok { "" } else { "; stale run files" }
        )))
    }
}

#[derive(Serialize)]
struct DnoTestReport {
    method: String,
    remainder_order: f64,
    remainder_defects: Vec<(i64, f64)>,
    /// L^2 distance between series and elliptic G(eta) eta.
    series_elliptic_gap: Option<f64>,
}

fn dno_test(c: &Common) -> Outcome {
    if c.config.is_none() {
        // no interface given: run the DN checks of the suite
        return verify(&["dno".into()], &[], &[], false, c.out.as_deref(), c.quiet);
    }
    let (run, stem) = load(c)?;
    let eta = &run.spec.initial;
    let bottom = &run.spec.params.bottom_minus;
    let method = run.spec.scheme.dno;
    let probes: Vec<i64> = [2i64, 4, 8, 16, 32]
        .into_iter()
        .filter(|&k| (k as f64) < eta.grid().n()[0] as f64 / 3.0)
        .collect();
    let fit = dno_remainder_order(eta, bottom, &probes, &method, CutoffPair::default())?;
    let gap = if eta.grid().dim() == 1 {
        let series = dirichlet_neumann(eta, eta, bottom, &DnoMethod::default())?;
        let elliptic = dirichlet_neumann(
            eta,
            eta,
            bottom,
            &DnoMethod::Elliptic(EllipticConfig::default()),
        )?;
        Some((&series - &elliptic).l2_norm())
    } else {
        None
    };
    let report = DnoTestReport {
        method: format!("{method:?}"),
        remainder_order: fit.slope,
        remainder_defects: fit.samples.iter().map(|s| (s.k, s.defect)).collect(),
        series_elliptic_gap: gap,
    };
    if !c.quiet {
        println!("remainder order {:.3}", report.remainder_order);
        for (k, d) in &report.remainder_defects {
            println!("  k = {k:>3}  defect {d:.3e}");
        }
        if let Some(g) = gap {
            println!("series vs elliptic |G(eta)eta| gap {g:.3e}");
        }
    }
    write_json(&out_dir(c, &run, &stem), "dno_test.json", &report)?;
    Ok(())
}

fn steps_for(run: &ResolvedRun) -> usize {
    (run.spec.t_end / run.spec.scheme.dt).ceil().max(1.0) as usize
}

fn stability(c: &Common, amplitude: f64, mode: i64) -> Outcome {
    let (run, stem) = load(c)?;
    let g = run.grid.clone();
    let kx = 2.0 * std::f64::consts::PI * mode as f64 / g.periods()[0];
    let direction = Field::from_fn(&g, |x| amplitude * (kx * x[0]).cos())?;
    let r = stability_sweep(
        &run.spec.initial,
        &direction,
        &[1.0, 0.5, 0.25],
        &run.spec.params,
        run.spec.model,
        &run.spec.scheme,
        run.spec.t_end,
        steps_for(&run),
    )?;
    if !c.quiet {
        for (s, x) in r.scales.iter().zip(&r.runs) {
            println!(
                "scale {s:<5} final ratio {:.6e}",
                x.final_ratio().unwrap_or(f64::NAN)
            );
        }
        println!("spread {:.3e}", r.spread);
    }
    write_json(&out_dir(c, &run, &stem), "stability.json", &r)?;
    Ok(())
}

fn scaling(c: &Common, lambda: usize) -> Outcome {
    let (run, stem) = load(c)?;
    if !matches!(run.spec.params.bottom_minus, BottomSpec::Infinite) {
        return Err(Failure::Validation("scaling needs infinite depth".into()));
    }
    let r = scaling_check(
        &run.spec.initial,
        &run.spec.params,
        lambda,
        run.spec.t_end,
        steps_for(&run),
        &run.spec.scheme,
    )?;
    if !c.quiet {
        println!(
            "lambda {} discrepancy {:.3e}, self-convergence {:.3e}",
            r.lambda, r.discrepancy, r.self_convergence
        );
    }
    write_json(&out_dir(c, &run, &stem), "scaling.json", &r)?;
    Ok(())
}

#[derive(Serialize)]
struct TracesReport {
    iterations: usize,
    residual_l2: f64,
    residual_h_minus_half: f64,
    jump_residual: f64,
    history: Vec<f64>,
}

fn traces(c: &Common) -> Outcome {
    let (run, stem) = load(c)?;
    let s = solve_traces(
        &run.spec.initial,
        &run.spec.params,
        &run.spec.scheme.dno,
        run.spec.scheme.trace_tol,
    )?;
    let dir = out_dir(c, &run, &stem);
    let report = TracesReport {
        iterations: s.iterations,
        residual_l2: s.residual_l2,
        residual_h_minus_half: s.residual_h_minus_half,
        jump_residual: s.jump_residual,
        history: s.history.clone(),
    };
    write_json(&dir, "traces.json", &report)?;
    emit_snapshot(0.0, &s.f_minus, &dir.join("f_minus.bin"))?;
    emit_snapshot(0.0, &s.f_plus, &dir.join("f_plus.bin"))?;
    if !c.quiet {
        println!(
            "{} iterations, residual {:.3e} (H^-1/2 {:.3e})",
            s.iterations, s.residual_l2, s.residual_h_minus_half
        );
    }
    Ok(())
}
