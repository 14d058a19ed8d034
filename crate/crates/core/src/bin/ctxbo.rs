use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use ctxbo::acquisition::{expected_improvement, normal_cdf, PosteriorSummary};
use ctxbo::config::{load_config, Overrides, ResolvedConfig};
use ctxbo::report::{
    emit_summary, emit_sweep_summary, emit_trace_csv, read_trace_csv, render_plot,
    render_sweep_plot, ReportView, RunManifest,
};
use ctxbo::runner::{full_epsilon_grid, run_study, Study};
use ctxbo::{epsilon_sweep, AcquisitionSpec, Bounds, Objective, SobolStream};

#[derive(Parser)]
#[command(name = "ctxbo", version, about = "Bayesian optimization with contextual improvement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured strategy for every repeat.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        objective: Option<String>,
        #[arg(long, value_parser = ["pi", "ei", "aei"])]
        acquisition: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "ctxbo-out")]
        out: PathBuf,
    },
    /// Compare fixed-margin EI over a grid of margins with AEI.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, conflicts_with = "full_paper_grid")]
        eps_grid: Option<String>,
        /// Margins 0.00 to 0.99 in steps of 0.01.
        #[arg(long)]
        full_paper_grid: bool,
        #[arg(long, default_value = "ctxbo-sweep")]
        out: PathBuf,
    },
    /// Rebuild the summary and plot from a trace CSV.
    Report {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check benchmark optima and numerical building blocks.
    Selftest,
}

enum Failure {
    Usage(String),
    Runtime(String),
    SelfTest,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn write(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_study(out: &Path, study: &Study) -> Result<(), Failure> {
    let mut csv = Vec::new();
    emit_trace_csv(&mut csv, study).map_err(|e| Failure::Runtime(e.to_string()))?;
    write(&out.join("traces.csv"), &csv)?;
    let view = ReportView::from_study(study);
    let mut summary = emit_summary(&view);
    for o in &study.outcomes {
        for d in &o.dropped {
            summary.push_str(&format!(
                "dropped: {} repeat {}: {}\n",
                o.summary.label, d.repeat, d.error
            ));
        }
    }
    write(&out.join("summary.txt"), summary.as_bytes())?;
    Ok(())
}

fn write_manifest(out: &Path, command: &str, config: &ResolvedConfig, seeds: Vec<u64>, started: u64) -> Result<(), Failure> {
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        master_seed: config.seed,
        repeat_seeds: seeds,
        started_unix: started,
        finished_unix: unix_now(),
        config_echo: config.to_string(),
    };
    write(&out.join("config.txt"), config.to_string().as_bytes())?;
    write(&out.join("manifest.txt"), manifest.to_string().as_bytes())
}

fn load(path: &Path, overrides: &Overrides) -> Result<ResolvedConfig, Failure> {
    load_config(path, overrides).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run(config: &ResolvedConfig, out: &Path) -> Result<(), Failure> {
    let started = unix_now();
    prepare_out(out)?;
    let study = run_study(&config.experiments()).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_study(out, &study)?;
    write(&out.join("plot.svg"), render_plot(&ReportView::from_study(&study)).as_bytes())?;
    write_manifest(out, "run", config, study.repeat_seeds.clone(), started)?;
    print!("{}", emit_summary(&ReportView::from_study(&study)));
    Ok(())
}

fn sweep(config: &ResolvedConfig, full: bool, out: &Path) -> Result<(), Failure> {
    let started = unix_now();
    prepare_out(out)?;
    let grid = if full { full_epsilon_grid() } else { config.sweep_epsilons() };
    let base = config.sweep_base();
    let result = epsilon_sweep(&base, &grid, config.sweep_repeats).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_study(out, &result.study)?;
    let objective = result.study.objective.clone();
    let text = emit_sweep_summary(&result, &objective);
    write(&out.join("sweep.txt"), text.as_bytes())?;
    write(&out.join("plot.svg"), render_sweep_plot(&result, &objective).as_bytes())?;
    write_manifest(out, "sweep", config, result.study.repeat_seeds.clone(), started)?;
    print!("{text}");
    Ok(())
}

fn report(traces: &Path, out: &Path) -> Result<(), Failure> {
    let file = fs::File::open(traces).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", traces.display())))?;
    let rows = read_trace_csv(file).map_err(|e| Failure::Usage(format!("{}: {e}", traces.display())))?;
    let name = traces
        .file_stem()
        .map_or_else(|| "traces".to_string(), |s| s.to_string_lossy().into_owned());
    let view = ReportView::from_rows(&name, &rows, 1000, 0);
    prepare_out(out)?;
    let summary = emit_summary(&view);
    write(&out.join("summary.txt"), summary.as_bytes())?;
    write(&out.join("plot.svg"), render_plot(&view).as_bytes())?;
    print!("{summary}");
    Ok(())
}

fn check(name: &str, ok: bool, detail: String) -> bool {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn selftest() -> Result<(), Failure> {
    let mut all = true;
    for name in Objective::builtin_names() {
        let objective = Objective::builtin(name).expect("listed builtin");
        for r in objective.self_test().unwrap_or_default() {
            all &= check(
                name,
                r.passed,
                format!("f({:?}) = {:.7} (expected {:.7})", r.location, r.value, r.expected),
            );
        }
    }

    let phi = normal_cdf(1.96);
    all &= check(
        "normal cdf",
        (phi - 0.975_002_104_851_779_5).abs() < 1e-12,
        format!("Phi(1.96) = {phi:.16}"),
    );
    let ei = expected_improvement(
        &PosteriorSummary {
            mean: 1.0,
            sigma: 1.0,
            incumbent: 0.5,
            mean_posterior_variance: 0.0,
        },
        &AcquisitionSpec::ei(0.0).expect("valid margin"),
    );
    all &= check(
        "expected improvement",
        (ei - 0.697_796_557_401_306_1).abs() < 1e-12,
        format!("EI(mu=1, sigma=1, f*=0.5) = {ei:.16}"),
    );
    let mut stream = SobolStream::new(2).expect("2-D stream");
    let pts: Vec<Vec<f64>> = (0..3).map(|_| stream.next_unit().expect("point")).collect();
    all &= check(
        "sobol",
        pts == [vec![0.5, 0.5], vec![0.75, 0.25], vec![0.25, 0.75]],
        format!("first points {pts:?}"),
    );
    let bounds = Bounds::unit(1);
    let data = ctxbo::Dataset::from_observations(vec![vec![0.2], vec![0.7]], vec![1.0, -1.0], bounds.clone())
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let params = ctxbo::KernelParams::new(vec![0.3], 1.0, 1e-10).map_err(|e| Failure::Runtime(e.to_string()))?;
    let gp = ctxbo::gp::fit_posterior(&data, &params).map_err(|e| Failure::Runtime(e.to_string()))?;
    let p = gp
        .predict(&[vec![0.2], vec![0.7]])
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    all &= check(
        "gp interpolation",
        (p.means[0] - 1.0).abs() < 1e-6 && (p.means[1] + 1.0).abs() < 1e-6,
        format!("means at training points {:?}", p.means),
    );

    if all {
        Ok(())
    } else {
        Err(Failure::SelfTest)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            objective,
            acquisition,
            epsilon,
            budget,
            repeats,
            seed,
            out,
        } => {
            let overrides = Overrides {
                objective,
                acquisition,
                epsilon,
                budget,
                repeats,
                seed,
                eps_grid: None,
            };
            load(&config, &overrides).and_then(|c| run(&c, &out))
        }
        Command::Sweep {
            config,
            eps_grid,
            full_paper_grid,
            out,
        } => {
            let overrides = Overrides {
                eps_grid,
                ..Default::default()
            };
            load(&config, &overrides).and_then(|c| sweep(&c, full_paper_grid, &out))
        }
        Command::Report { traces, out } => report(&traces, &out),
        Command::Selftest => selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::SelfTest) => {
            eprintln!("selftest failed");
            ExitCode::from(3)
        }
    }
}
