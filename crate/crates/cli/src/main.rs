use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use perfhom::study::report::{render, write_file};
use perfhom::study::{
    run_accept, run_cell, run_green, run_problem, run_study, AcceptConfig, CellJob, CorrectorCache, ProblemJob,
    ReportFormat, RunContext, StudyConfig, StudyKind,
};

#[derive(Parser)]
#[command(name = "perfhom", version, about = "High-contrast homogenization in perforated domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, or a file path with the expected extension.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweep points (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomized fixtures; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Cell correctors and homogenized tensors over a δ grid.
    Cell,
    /// Solve one boundary value problem and write the nodal solution.
    Solve,
    /// Discrete Green's function columns.
    Green {
        /// Source point `x,y`; may be repeated.
        #[arg(long, value_parser = parse_point)]
        source: Vec<[f64; 2]>,
    },
    /// Run a rate study and check its thresholds.
    Rates {
        #[arg(long)]
        study: Option<String>,
    },
    /// Run the full acceptance suite.
    Accept,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => Ok([
            x.parse().map_err(|e| format!("bad x in '{s}': {e}"))?,
            y.parse().map_err(|e| format!("bad y in '{s}': {e}"))?,
        ]),
        _ => Err(format!("expected x,y, got '{s}'")),
    }
}

fn read_config(path: Option<&Path>) -> anyhow::Result<Option<String>> {
    path.map(|p| fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
        .transpose()
}

fn parse_or_default<T: serde::de::DeserializeOwned + Default>(text: Option<&str>) -> anyhow::Result<T> {
    Ok(match text {
        Some(t) => serde_json::from_str(t).context("parsing config")?,
        None => T::default(),
    })
}

/// `out` itself when it already names a file with extension `ext`, otherwise
/// `out/name`.
fn output_path(out: &Path, name: &str, ext: &str) -> PathBuf {
    if out.extension().is_some_and(|e| e == ext) {
        out.to_path_buf()
    } else {
        out.join(name)
    }
}

fn context() -> anyhow::Result<RunContext> {
    let cache = CorrectorCache::from_env()?;
    if let Some(c) = &cache {
        log::info!("corrector cache at {}", c.dir.display());
    }
    Ok(RunContext { cache })
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    write_file(path, text)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn cell(common: &Common, text: Option<&str>) -> anyhow::Result<bool> {
    let job: CellJob = parse_or_default(text)?;
    let report = run_cell(&job, &context()?)?;
    let path = output_path(&common.out, "cell_report.json", "json");
    write(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    for e in &report.entries {
        let a = e.tensor.a_hat;
        println!(
            "delta {:<6} A = [[{:.6}, {:.6}], [{:.6}, {:.6}]]  lambda = ({:.6}, {:.6})  deviation {:.3e}",
            e.tensor.delta, a[0][0], a[0][1], a[1][0], a[1][1], e.tensor.lambda_min, e.tensor.lambda_max, e.deviation
        );
    }
    Ok(true)
}

fn solve(common: &Common, text: Option<&str>) -> anyhow::Result<bool> {
    let job: ProblemJob = parse_or_default(text)?;
    let out = run_problem(&job)?;
    write(&output_path(&common.out, "solution.csv", "csv"), &out.csv())?;
    let e = out.energy;
    println!(
        "{:?} problem, {} vertices, {} CG iterations: |grad u| = {:.6e}, weighted {:.6e}, data norm {:.6e}",
        out.problem,
        out.field.mesh.n_vertices(),
        out.iterations,
        e.gradient,
        e.weighted_gradient,
        e.data_norm
    );
    Ok(true)
}

fn green(common: &Common, text: Option<&str>, sources: &[[f64; 2]]) -> anyhow::Result<bool> {
    let mut job: ProblemJob = parse_or_default(text)?;
    if !sources.is_empty() {
        job.sources = sources.to_vec();
    }
    let out = run_green(&job)?;
    write(&output_path(&common.out, "green.csv", "csv"), &out.csv())?;
    for (i, j, s) in &out.symmetry {
        println!("symmetry g{i}/g{j}: {s:.3e}");
    }
    Ok(true)
}

fn rates(common: &Common, text: Option<&str>, study: Option<&str>) -> anyhow::Result<bool> {
    let mut cfg = match (text, study) {
        (Some(t), _) => StudyConfig::from_json(t)?,
        (None, Some(s)) => StudyConfig::preset(s.parse::<StudyKind>()?),
        (None, None) => bail!("rates needs --study or --config"),
    };
    if let Some(s) = study {
        let kind: StudyKind = s.parse()?;
        if kind != cfg.study {
            bail!("--study {s} disagrees with the config study '{}'", cfg.study.name());
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let result = run_study(&cfg, &context()?)?;
    let results = [result];
    let csv = output_path(&common.out, &cfg.outputs.csv, "csv");
    let dir = csv.parent().map(Path::to_path_buf).unwrap_or_default();
    write(&csv, &render(&results, ReportFormat::Csv)?)?;
    write(&dir.join(&cfg.outputs.json), &render(&results, ReportFormat::Json)?)?;
    write(&dir.join(&cfg.outputs.markdown), &render(&results, ReportFormat::MarkdownSummary)?)?;
    for v in &results[0].verdicts {
        let value = v.value.map_or("missing".to_string(), |x| format!("{x:.6e}"));
        println!(
            "{} {}: {} = {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            cfg.study.name(),
            v.metric,
            value,
            v.threshold.describe()
        );
    }
    Ok(results[0].passed())
}

fn accept(common: &Common, text: Option<&str>) -> anyhow::Result<bool> {
    let mut cfg = match text {
        Some(t) => AcceptConfig::from_json(t)?,
        None => AcceptConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let report = run_accept(&cfg, &context()?)?;
    let csv = output_path(&common.out, "accept.csv", "csv");
    let dir = csv.parent().map(Path::to_path_buf).unwrap_or_default();
    write(&csv, &report.csv())?;
    write(&dir.join("accept.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    write(&dir.join("summary.md"), &report.markdown())?;
    for c in &report.criteria {
        println!("{}", c.line());
    }
    Ok(report.passed())
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.common.jobs {
        if n == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let text = read_config(cli.common.config.as_deref())?;
    let text = text.as_deref();
    match &cli.command {
        Command::Cell => cell(&cli.common, text),
        Command::Solve => solve(&cli.common, text),
        Command::Green { source } => green(&cli.common, text, source),
        Command::Rates { study } => rates(&cli.common, text, study.as_deref()),
        Command::Accept => accept(&cli.common, text),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
