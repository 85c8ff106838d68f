use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riemext::geodesics::{integrate_geodesic, GeodesicState};
use riemext::report::{curvature_dump, run_scenario, to_json};
use riemext::scenario::{Format, Overrides, Scenario};
use riemext::selftest::selftest_with_determinism;

/// Checks curvature, soliton and duality conditions of Walker metrics
/// described by scenario files.
#[derive(Debug, Parser)]
#[command(name = "riemext", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Sampling seed, overriding `sampling.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Number of sample points, overriding `sampling.count`.
    #[arg(long, global = true, value_name = "N")]
    samples: Option<usize>,
    /// Absolute tolerance, overriding `sampling.atol`.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
    /// Print the full JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Suppress the human-readable summary.
    #[arg(long, global = true)]
    quiet: bool,
    /// Record per-check wall time in reports (makes them non-reproducible).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario's checks and write its report files.
    Check { scenario: PathBuf },
    /// Dump the full curvature data at the scenario's points.
    Report {
        scenario: PathBuf,
        /// Write the dump here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Complete a Phi builder and write the resulting scenario.
    BuildSoliton {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Integrate the scenario's geodesic and export the trajectory.
    Geodesics {
        scenario: PathBuf,
        #[arg(long, value_name = "FILE")]
        csv: PathBuf,
    },
    /// Run every fixture and acceptance criterion.
    Selftest,
}

/// Outcome of a command; `Input` maps to exit code 2.
enum Failure {
    Checks,
    Input(String),
}

type Outcome = Result<(), Failure>;

fn input<E: std::fmt::Display>(context: &Path) -> impl Fn(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", context.display()))
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(input(path))?;
    Scenario::from_json(&text).map_err(input(path))
}

fn write(path: &Path, text: &str) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(input(dir))?;
    }
    fs::write(path, text).map_err(input(path))
}

impl Global {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            samples: self.samples,
            atol: self.tol,
        }
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", line.as_ref());
        }
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn check(g: &Global, path: &Path) -> Outcome {
    let s = load(path)?;
    let report = run_scenario(&s, &g.overrides(), g.timings).map_err(input(path))?;
    for c in &report.checks {
        let mut line = format!(
            "{} {}: residual {:e}, tolerance {:e}",
            verdict(c.passed()),
            c.key(),
            c.residual,
            c.tolerance
        );
        if let (false, Some(w)) = (c.passed(), c.witness) {
            line.push_str(&format!(", witness {w:?}"));
        }
        if let Some(e) = &c.error {
            line.push_str(&format!(" ({e})"));
        }
        g.say(line);
    }
    if let Some(out) = &s.output {
        let stem = path.parent().unwrap_or(Path::new(".")).join(&out.path);
        for f in &out.formats {
            let (ext, text) = match f {
                Format::Json => ("json", report.to_json()),
                Format::Csv => ("csv", report.to_csv()),
            };
            let file = stem.with_extension(ext);
            write(&file, &text)?;
            g.say(format!("wrote {}", file.display()));
        }
    }
    if g.json {
        print!("{}", report.to_json());
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn report(g: &Global, path: &Path, output: Option<&Path>) -> Outcome {
    let s = load(path)?;
    let dump = curvature_dump(&s, &g.overrides()).map_err(input(path))?;
    let text = to_json(&dump);
    match output {
        Some(o) => {
            write(o, &text)?;
            g.say(format!(
                "wrote {} points to {}",
                dump.points.len(),
                o.display()
            ));
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn build_soliton(g: &Global, path: &Path, output: &Path) -> Outcome {
    let s = load(path)?;
    let model = s.resolve(&g.overrides()).map_err(input(path))?;
    let done = s.completed(&model);
    let text = done.to_json();
    write(output, &text)?;
    let phi = &model.phi;
    g.say(format!(
        "Phi = [[{}, {}], [{}, {}]]",
        phi.get(0, 0),
        phi.get(0, 1),
        phi.get(1, 0),
        phi.get(1, 1)
    ));
    g.say(format!("wrote {}", output.display()));
    if g.json {
        print!("{text}");
    }
    Ok(())
}

fn geodesics(g: &Global, path: &Path, csv: &Path) -> Outcome {
    let s = load(path)?;
    let spec = s.geodesic.clone().ok_or_else(|| {
        Failure::Input(format!(
            "{}: scenario has no `geodesic` entry",
            path.display()
        ))
    })?;
    let model = s.resolve(&g.overrides()).map_err(input(path))?;
    let init = GeodesicState::new(spec.x, spec.v);
    let run = match integrate_geodesic(&model.metric, init, spec.t_end, spec.tol) {
        Ok(run) => run,
        Err(e) => {
            g.say(format!("FAIL geodesic: {e}"));
            return Err(Failure::Checks);
        }
    };
    let mut buf = Vec::new();
    run.write_csv(&mut buf).map_err(input(csv))?;
    fs::write(csv, buf).map_err(input(csv))?;
    let r = &run.report;
    g.say(format!(
        "{} geodesic to t = {}: {} steps, |E - E0| <= {:e} (relative {:e}){}",
        verdict(r.reached),
        r.t_final,
        r.accepted,
        r.max_drift,
        r.max_relative_drift,
        r.blowup_at
            .map(|t| format!(", |state| > 1e12 from t = {t}"))
            .unwrap_or_default()
    ));
    g.say(format!(
        "wrote {} rows to {}",
        run.points.len(),
        csv.display()
    ));
    if r.reached {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn selftest(g: &Global) -> Outcome {
    let report = selftest_with_determinism().map_err(|e| Failure::Input(e.to_string()))?;
    for f in &report.fixtures {
        for e in &f.expectations {
            g.say(format!(
                "{} {} {}: expected {:?}, got {:?}",
                verdict(e.matches),
                f.id,
                e.check,
                e.expected,
                e.actual
            ));
        }
    }
    for c in &report.criteria {
        g.say(c.line());
    }
    if g.json {
        print!("{}", report.to_json());
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let outcome = match &cli.command {
        Command::Check { scenario } => check(g, scenario),
        Command::Report { scenario, output } => report(g, scenario, output.as_deref()),
        Command::BuildSoliton { scenario, output } => build_soliton(g, scenario, output),
        Command::Geodesics { scenario, csv } => geodesics(g, scenario, csv),
        Command::Selftest => selftest(g),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
