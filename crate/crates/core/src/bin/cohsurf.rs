use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cohsurf::channel::{CouplingTable, ErrorChannelParams};
use cohsurf::circuit::ContractionMethod;
use cohsurf::experiment::{read_metrics, run, RunConfig, METRICS_FILE};
use cohsurf::lattice::CodeLayout;
use cohsurf::mps::MpsConfig;
use cohsurf::oracle::compare_with_circuit;
use cohsurf::sampler::{sample_batch, write_json_lines, SamplerConfig};
use cohsurf::threshold::{threshold_scan, Metric};
use cohsurf::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser)]
#[command(name = "cohsurf", version, about = "Surface code under coherent and incoherent X errors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory (overrides `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Bond dimension cap (overrides `chi_max`).
    #[arg(long)]
    chi: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> cohsurf::Result<RunConfig> {
        let mut c = RunConfig::from_path(&self.config)?;
        if let Some(o) = &self.out {
            c.output = o.clone();
        }
        if let Some(w) = self.workers {
            c.workers = w;
        }
        if let Some(chi) = self.chi {
            c.chi_max = chi;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Pl,
    Mwpm,
}

#[derive(Subcommand)]
enum Command {
    /// Run every grid point of a config; resumes a partial run in the same output directory.
    Run(RunArgs),
    /// Run a config, then locate the P_L curve crossing for every gamma.
    Threshold {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "pl")]
        metric: MetricArg,
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        /// Analyse the existing metrics.csv without computing missing points.
        #[arg(long)]
        no_run: bool,
    },
    /// Compare transfer-circuit blocks against the exact density-matrix oracle at d = 3.
    OracleCheck {
        #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.05, 0.1, 0.2, 0.3])]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 0.9, 0.99, 1.0])]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        /// Also check the MPS contraction with this bond cap.
        #[arg(long)]
        chi: Option<usize>,
    },
    /// Draw error strings and write them as JSON lines.
    SampleDump {
        #[arg(long, short)]
        d: usize,
        #[arg(long, short)]
        p: f64,
        #[arg(long, short)]
        gamma: f64,
        #[arg(long, short, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        chi: usize,
        #[arg(long)]
        workers: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::Domain(_) | Error::TooLarge(_) => EXIT_CONFIG,
        Error::Numerical(_) | Error::Linalg(_) | Error::Annihilated { .. } | Error::NonInvertible(_) => EXIT_NUMERICAL,
        _ => 1,
    }
}

fn run_verb(args: &RunArgs) -> cohsurf::Result<u8> {
    let config = args.load()?;
    let report = run(&config)?;
    println!(
        "{} points done ({} reused), {} failed -> {}",
        report.rows.len(),
        report.reused.len(),
        report.failed(),
        report.output.join(METRICS_FILE).display()
    );
    for f in report.manifest.failures() {
        eprintln!("d={} p={} gamma={}: {}", f.point.d, f.point.p, f.point.gamma, f.error.as_deref().unwrap_or(""));
    }
    Ok(if report.failed() > 0 { EXIT_PARTIAL } else { 0 })
}

fn threshold_verb(args: &RunArgs, metric: MetricArg, bootstrap: usize, no_run: bool) -> cohsurf::Result<u8> {
    let config = args.load()?;
    let (rows, code) = if no_run {
        (read_metrics(&config.output.join(METRICS_FILE))?, 0)
    } else {
        let r = run(&config)?;
        let code = if r.failed() > 0 { EXIT_PARTIAL } else { 0 };
        (r.rows, code)
    };
    let metric = match metric {
        MetricArg::Pl => Metric::LogicalError,
        MetricArg::Mwpm => Metric::Mwpm,
    };
    let mut out = io::stdout().lock();
    for &gamma in &config.gamma {
        let t = threshold_scan(&rows, gamma, metric, bootstrap, config.master_seed)?;
        writeln!(out, "{}", serde_json::json!({ "gamma": gamma, "metric": metric, "threshold": t }))?;
    }
    Ok(code)
}

fn oracle_verb(p: &[f64], gamma: &[f64], tolerance: f64, chi: Option<usize>) -> cohsurf::Result<u8> {
    let layout = CodeLayout::square(3)?;
    let mut methods = vec![("dense", ContractionMethod::Dense)];
    if let Some(chi) = chi {
        methods.push(("mps", ContractionMethod::mps(MpsConfig { chi_max: chi, ..MpsConfig::default() })));
    }
    let mut worst: f64 = 0.0;
    println!("{:>6} {:>6} {:>6} {:>12} {:>12}", "method", "p", "gamma", "max_dev", "max_re_z01");
    for &pp in p {
        for &g in gamma {
            let params = ErrorChannelParams::uniform(layout.n_qubits(), pp, g)?;
            for (name, m) in &methods {
                let c = compare_with_circuit(&layout, &params, m)?;
                worst = worst.max(c.max_deviation);
                println!("{name:>6} {pp:>6} {g:>6} {:>12.3e} {:>12.3e}", c.max_deviation, c.max_re_z01);
            }
        }
    }
    let ok = worst < tolerance;
    println!("{} worst deviation {worst:.3e} (tolerance {tolerance:e})", if ok { "PASS" } else { "FAIL" });
    Ok(if ok { 0 } else { EXIT_NUMERICAL })
}

#[allow(clippy::too_many_arguments)]
fn sample_verb(
    d: usize,
    p: f64,
    gamma: f64,
    n: usize,
    seed: u64,
    chi: usize,
    workers: Option<usize>,
    out: Option<&PathBuf>,
) -> cohsurf::Result<u8> {
    let layout = CodeLayout::square(d)?;
    let couplings = CouplingTable::uniform(layout.n_qubits(), p, gamma)?;
    let config = SamplerConfig { mps: MpsConfig { chi_max: chi, ..MpsConfig::default() }, ..SamplerConfig::default() };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let batch = pool.install(|| sample_batch(&layout, &couplings, n, seed, &config))?;
    match out {
        Some(path) => write_json_lines(BufWriter::new(File::create(path)?), &batch.records)?,
        None => write_json_lines(io::stdout().lock(), &batch.records)?,
    }
    eprintln!("{}", serde_json::to_string(&batch.stats)?);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run_verb(args),
        Command::Threshold { run, metric, bootstrap, no_run } => threshold_verb(run, *metric, *bootstrap, *no_run),
        Command::OracleCheck { p, gamma, tolerance, chi } => oracle_verb(p, gamma, *tolerance, *chi),
        Command::SampleDump { d, p, gamma, n, seed, chi, workers, out } => {
            sample_verb(*d, *p, *gamma, *n, *seed, *chi, *workers, out.as_ref())
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
