//! `vesd` command-line front end.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use vesd::estimators::{
    estimate_mcc, estimate_sharpe, estimate_tau, pseudo_r2_degenerate, pseudoinverse_quadratic,
    EstimatorConfig, EstimatorReport,
};
use vesd::sim::{run_replications, BatchConfig, BiasVarianceRow};
use vesd::{DataMatrix, Error};

use manifest::{config_hash, write_manifest, RunManifest, Staged};

#[derive(Parser)]
#[command(
    name = "vesd",
    version,
    about = "Estimate aᵀΣ⁻¹a and related quantities when p may exceed n"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quadratic form aᵀΣ⁻¹a for a known vector.
    Tau {
        #[command(flatten)]
        common: EstimateArgs,
        /// CSV file holding the vector a.
        #[arg(long)]
        vector: PathBuf,
    },
    /// Squared optimal Sharpe ratio μᵀΣ⁻¹μ.
    Sharpe {
        #[command(flatten)]
        common: EstimateArgs,
    },
    /// Squared multiple correlation between one column and the rest.
    Mcc {
        #[command(flatten)]
        common: EstimateArgs,
        /// Zero-based index of the response column.
        #[arg(long)]
        response_column: usize,
    },
    /// Pseudoinverse statistics: aᵀS⁺a, or the degenerate R² when p > n.
    #[command(group(ArgGroup::new("what").required(true).args(["vector", "response_column"])))]
    DiagnosePinv {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        vector: Option<PathBuf>,
        #[arg(long)]
        response_column: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a batch of simulation cells.
    Simulate {
        /// Batch configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the batch seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the replication count of every cell.
        #[arg(long)]
        reps: Option<usize>,
        /// Worker threads.
        #[arg(long, env = "VESD_JOBS")]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Observations, one row each: CSV, or `.bin` for the binary layout.
    #[arg(long)]
    data: PathBuf,
    /// The CSV data file starts with a header row.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Estimator configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_data(args: &DataArgs) -> Result<DataMatrix, Error> {
    DataMatrix::load(&args.data, args.header)
}

fn load_vector(path: &Path) -> Result<nalgebra::DVector<f64>, Error> {
    vesd::data::read_vector_csv(fs::File::open(path)?)
}

fn load_config(args: &EstimateArgs, manifest: &mut RunManifest) -> Result<EstimatorConfig, Error> {
    let cfg: EstimatorConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => EstimatorConfig::default(),
    };
    cfg.validate()?;
    manifest.config_hash = Some(config_hash(&cfg)?);
    Ok(cfg)
}

fn report_csv(report: &EstimatorReport) -> Result<Vec<u8>, Error> {
    let d = &report.diagnostics;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["field", "value"])?;
    let target = serde_json::to_value(report.target)?;
    let mut rows: Vec<(String, String)> = vec![
        (
            "target".into(),
            target.as_str().unwrap_or_default().to_string(),
        ),
        ("estimate".into(), format!("{:?}", report.estimate)),
        ("raw_estimate".into(), format!("{:?}", d.raw_estimate)),
        ("kappa".into(), format!("{:?}", report.kappa)),
        ("n".into(), d.n.to_string()),
        ("p".into(), d.p.to_string()),
        ("psi".into(), d.psi.to_string()),
        ("a0".into(), format!("{:?}", d.a0)),
        ("b0".into(), format!("{:?}", d.b0)),
        ("negative_moments".into(), d.negative_moments.to_string()),
        ("lp_residual".into(), format!("{:?}", d.lp_residual)),
        ("lp_iterations".into(), d.lp_iterations.to_string()),
    ];
    for (j, (raw, used)) in report
        .moments
        .raw
        .iter()
        .zip(&report.moments.values)
        .enumerate()
    {
        rows.push((format!("raw_moment_{}", j + 1), format!("{raw:?}")));
        rows.push((format!("moment_{}", j + 1), format!("{used:?}")));
    }
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn stage_report(
    report: &EstimatorReport,
    format: Format,
    staged: &mut Staged,
) -> Result<(), Error> {
    match format {
        Format::Json => staged.add("report.json", serde_json::to_vec_pretty(report)?),
        Format::Csv => staged.add("report.csv", report_csv(report)?),
    }
    staged.add("summary.txt", report.summary().into_bytes());
    let mut vesd_csv = Vec::new();
    report.vesd.write_csv(&mut vesd_csv)?;
    staged.add("vesd.csv", vesd_csv);
    print!("{}", report.summary());
    Ok(())
}

fn estimate(
    common: &EstimateArgs,
    manifest: &mut RunManifest,
    run: impl FnOnce(&DataMatrix, &EstimatorConfig) -> Result<EstimatorReport, Error>,
) -> Result<Staged, Error> {
    let cfg = load_config(common, manifest)?;
    let data = load_data(&common.data)?;
    let report = run(&data, &cfg)?;
    let mut staged = Staged::default();
    stage_report(&report, common.format, &mut staged)?;
    Ok(staged)
}

fn simulate(
    config: &Path,
    seed: Option<u64>,
    reps: Option<usize>,
    jobs: Option<usize>,
    format: Format,
    manifest: &mut RunManifest,
) -> Result<Staged, Error> {
    let mut batch: BatchConfig = read_json(config)?;
    if let Some(s) = seed {
        batch.seed = s;
    }
    if let Some(r) = reps {
        batch.reps = r;
        batch.scenarios.iter_mut().for_each(|t| t.reps = None);
    }
    manifest.seed = Some(batch.seed);
    manifest.config_hash = Some(config_hash(&batch)?);
    let cells = batch.expand()?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidInput("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    manifest.jobs = Some(pool.current_num_threads());

    let mut staged = Staged::default();
    let mut rows: Vec<BiasVarianceRow> = Vec::with_capacity(cells.len());
    for (i, cell) in cells.iter().enumerate() {
        let result = pool.install(|| run_replications(cell, None))?;
        eprintln!(
            "cell {}/{} {}: bias {:.4} variance {:.4} failed {} ({:.1}s)",
            i + 1,
            cells.len(),
            result.row.cell,
            result.row.bias,
            result.row.variance,
            result.row.failed,
            result.row.wall_time_s
        );
        staged.add(
            format!("logs/cell-{i:03}.json"),
            serde_json::to_vec_pretty(&result)?,
        );
        rows.push(result.row);
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(BiasVarianceRow::CSV_HEADER)?;
            for row in &rows {
                w.write_record(row.csv_record())?;
            }
            staged.add(
                "results.csv",
                w.into_inner().map_err(|e| Error::Io(e.into_error()))?,
            );
        }
        Format::Json => {
            // Same columns as the CSV table; wall time lives in the logs.
            let table: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    let mut v = serde_json::to_value(r)?;
                    if let Some(obj) = v.as_object_mut() {
                        obj.remove("wall_time_s");
                    }
                    Ok(v)
                })
                .collect::<Result<_, Error>>()?;
            staged.add("results.json", serde_json::to_vec_pretty(&table)?);
        }
    }
    Ok(staged)
}

fn diagnose(
    data: &DataArgs,
    vector: Option<&Path>,
    response: Option<usize>,
    manifest: &mut RunManifest,
) -> Result<Staged, Error> {
    let x = load_data(data)?;
    let report = match (vector, response) {
        (Some(path), _) => {
            let a = load_vector(path)?;
            json!({
                "statistic": "a'S+a",
                "value": pseudoinverse_quadratic(&x, &a)?,
                "n": x.n(),
                "p": x.p(),
            })
        }
        (None, Some(col)) => {
            let (xs, y) = x.split_column(col)?;
            json!({
                "statistic": "pseudo-R2",
                "value": pseudo_r2_degenerate(&xs, &y)?,
                "n": xs.n(),
                "p": xs.p(),
            })
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "need --vector or --response-column".into(),
            ))
        }
    };
    manifest.config_hash = Some(config_hash(
        &json!({ "vector": vector, "response_column": response }),
    )?);
    println!(
        "{} = {}",
        report["statistic"].as_str().unwrap_or_default(),
        report["value"]
    );
    let mut staged = Staged::default();
    staged.add("report.json", serde_json::to_vec_pretty(&report)?);
    Ok(staged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (name, out) = match &cli.command {
        Command::Tau { common, .. } => ("tau", common.out.clone()),
        Command::Sharpe { common } => ("sharpe", common.out.clone()),
        Command::Mcc { common, .. } => ("mcc", common.out.clone()),
        Command::DiagnosePinv { out, .. } => ("diagnose-pinv", out.clone()),
        Command::Simulate { out, .. } => ("simulate", out.clone()),
    };
    let mut manifest = RunManifest::new(name);
    let staged = match &cli.command {
        Command::Tau { common, vector } => estimate(common, &mut manifest, |x, cfg| {
            let a = load_vector(vector)?;
            estimate_tau(x, &a, cfg)
        }),
        Command::Sharpe { common } => estimate(common, &mut manifest, estimate_sharpe),
        Command::Mcc {
            common,
            response_column,
        } => estimate(common, &mut manifest, |data, cfg| {
            let (x, y) = data.split_column(*response_column)?;
            estimate_mcc(&x, &y, cfg)
        }),
        Command::DiagnosePinv {
            data,
            vector,
            response_column,
            ..
        } => diagnose(data, vector.as_deref(), *response_column, &mut manifest),
        Command::Simulate {
            config,
            seed,
            reps,
            jobs,
            format,
            ..
        } => simulate(config, *seed, *reps, *jobs, *format, &mut manifest),
    };
    let outcome = staged.and_then(|s| s.commit(&out, &mut manifest));
    if let Err(e) = &outcome {
        eprintln!("error ({}): {e}", e.class());
        manifest.fail(e);
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    if let Err(e) = write_manifest(&out, &manifest) {
        eprintln!("error: cannot write manifest: {e}");
        if manifest.exit_code == 0 {
            manifest.exit_code = 2;
        }
    }
    ExitCode::from(manifest.exit_code as u8)
}
