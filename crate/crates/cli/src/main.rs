use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use pseudobosons_cli::config::{parse_assignment, parse_value, Check, RunConfig};
use pseudobosons_cli::demo::run_demo;
use pseudobosons_cli::report::{emit, Report, Status};
use pseudobosons_cli::run_checks;
use pseudobosons::Tolerances;
use toml::{Table, Value};

const OUT_ENV: &str = "PBOSONS_OUT";
const DEFAULT_OUT: &str = "pbosons-out";

#[derive(Parser)]
#[command(name = "pbosons", version, about = "Checks, sweeps and reports for pseudo-boson models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured checks and write a report.
    Check(RunArgs),
    /// Run a grid of configurations, one report per grid point.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `KEY=V1,V2,...`; repeat for a product grid.
        #[arg(long = "param", value_name = "KEY=VALUES", required = true)]
        params: Vec<String>,
    },
    /// Run the bundled configurations.
    Demo {
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with dotted keys.
    config: Option<PathBuf>,
    /// Model kind; resets the model parameters, set them with `--set model.KEY=VAL`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_delimiter = ',')]
    dim: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',')]
    check: Vec<Check>,
    /// Tolerance override.
    #[arg(long, value_name = "KEY=VAL")]
    tol: Vec<String>,
    /// Any config key.
    #[arg(long, value_name = "KEY=VAL")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Skip the CSV tables.
    #[arg(long)]
    no_csv: bool,
}

impl RunArgs {
    fn overrides(&self) -> anyhow::Result<Vec<(String, Value)>> {
        let mut out = Vec::new();
        if let Some(kind) = &self.model {
            let mut t = Table::new();
            t.insert("kind".into(), Value::String(kind.clone()));
            out.push(("model".into(), Value::Table(t)));
        }
        for s in &self.set {
            out.push(parse_assignment(s)?);
        }
        if !self.dim.is_empty() {
            out.push(("dims".into(), Value::Array(self.dim.iter().map(|&d| Value::Integer(d as i64)).collect())));
        }
        if !self.check.is_empty() {
            out.push(("checks".into(), Value::Array(self.check.iter().map(|c| Value::String(c.name().into())).collect())));
        }
        for t in &self.tol {
            let (key, value) = parse_assignment(t)?;
            if !Tolerances::default().set(&key, 1.0) {
                bail!("unknown tolerance `{key}`");
            }
            out.push((format!("tolerances.{key}"), value));
        }
        if let Some(seed) = self.seed {
            out.push(("seed".into(), Value::Integer(seed as i64)));
        }
        Ok(out)
    }

    fn out_dir(&self, config: &RunConfig) -> PathBuf {
        self.out.clone().or_else(|| config.output.dir.clone()).unwrap_or_else(default_out)
    }
}

fn default_out() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.3e}"))
}

fn print_report(report: &Report) {
    for r in &report.records {
        println!(
            "dim {:>4}  {:<12} {:<15} {:>10} / {:<10} {}",
            r.dim,
            r.check.name(),
            r.status.as_str(),
            fmt_opt(r.residual),
            fmt_opt(r.threshold),
            r.cause.as_deref().unwrap_or("")
        );
    }
    if let Some(c) = &report.classification {
        match (c.regularity, &c.note) {
            (Some(r), _) => println!("classification: {r}"),
            (None, Some(note)) => println!("classification: none ({note})"),
            (None, None) => {}
        }
    }
    println!(
        "{} pass, {} fail, {} error, {} not applicable",
        report.count(Status::Pass),
        report.count(Status::Fail),
        report.count(Status::Error),
        report.count(Status::NotApplicable)
    );
}

fn run_one(args: &RunArgs, extra: &[(String, Value)], out: Option<&Path>) -> anyhow::Result<Report> {
    let mut overrides = args.overrides()?;
    overrides.extend_from_slice(extra);
    let config = RunConfig::load(args.config.as_deref(), &overrides)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| args.out_dir(&config));
    let report = run_checks(&config);
    print_report(&report);
    let written = emit(&report, &dir, config.output.csv && !args.no_csv)?;
    println!("wrote {} files to {}", written.len(), dir.display());
    Ok(report)
}

/// `KEY=V1,V2` into `(KEY, [V1, V2])`.
fn parse_param(raw: &str) -> anyhow::Result<(String, Vec<String>)> {
    let (key, values) = raw.split_once('=').with_context(|| format!("bad --param `{raw}`: expected KEY=V1,V2,..."))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if key.trim().is_empty() || values.is_empty() {
        bail!("bad --param `{raw}`: expected KEY=V1,V2,...");
    }
    Ok((key.trim().to_string(), values))
}

fn sweep(args: &RunArgs, params: &[String]) -> anyhow::Result<bool> {
    let axes = params.iter().map(|p| parse_param(p)).collect::<anyhow::Result<Vec<_>>>()?;
    let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in &axes {
        points = points
            .into_iter()
            .flat_map(|p| values.iter().map(move |v| [p.clone(), vec![(key.clone(), v.clone())]].concat()))
            .collect();
    }
    let probe = RunConfig::load(args.config.as_deref(), &args.overrides()?);
    let root = match &probe {
        Ok(c) => args.out_dir(c),
        Err(_) => args.out.clone().unwrap_or_else(default_out),
    };
    std::fs::create_dir_all(&root).with_context(|| format!("cannot create {}", root.display()))?;
    let summary_path = root.join("sweep_summary.csv");
    let mut summary = csv::Writer::from_path(&summary_path).with_context(|| format!("cannot write {}", summary_path.display()))?;
    summary.write_record(["point", "dim", "check", "status", "residual", "threshold", "classification"])?;
    let mut all_ok = true;
    for point in &points {
        let label = point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join("_").replace(['/', '\\', ' '], "_");
        println!("== {label}");
        let extra: Vec<(String, Value)> = point.iter().map(|(k, v)| (k.clone(), parse_value(v))).collect();
        let report = run_one(args, &extra, Some(&root.join(&label)))?;
        all_ok &= report.ok();
        let class = report.classification.as_ref().and_then(|c| c.regularity).map(|r| r.to_string()).unwrap_or_default();
        for r in &report.records {
            let num = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            summary.write_record([&label, &r.dim.to_string(), r.check.name(), r.status.as_str(), &num(r.residual), &num(r.threshold), &class])?;
        }
    }
    summary.flush()?;
    Ok(all_ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Check(args) => run_one(args, &[], None).map(|r| r.ok()),
        Command::Sweep { run, params } => sweep(run, params),
        Command::Demo { out } => {
            let dir = out.clone().unwrap_or_else(default_out);
            run_demo(&dir).map_err(anyhow::Error::from).map(|outcomes| {
                for o in &outcomes {
                    let class = o.classification.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
                    let verdict = if o.as_expected { "as expected" } else { "UNEXPECTED" };
                    println!("{:<32} ok={:<5} classification={:<26} {verdict}", o.name, o.ok, class);
                }
                println!("wrote reports to {}", dir.display());
                outcomes.iter().all(|o| o.as_expected)
            })
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
