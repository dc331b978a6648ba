use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use ssigmm::data::{generate_synthetic, write_dataset_csv};
use ssigmm::experiment::{
    load_synth_spec, run_crossval, run_fit, write_crossval_outputs, write_fit_outputs, Method, RunConfig,
};
use ssigmm::metrics::ari;
use ssigmm::Error;

/// Semi-supervised infinite Gaussian mixture clustering.
#[derive(Parser)]
#[command(name = "ssigmm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic dataset (with a `true_class` column) to CSV.
    Generate {
        /// Layout JSON file, or a shipped layout name (`default`, `mouse-surrogate`).
        #[arg(long, default_value = "default")]
        config: String,
        #[arg(long)]
        out: PathBuf,
        /// Override every component's point count.
        #[arg(long)]
        count: Option<usize>,
        /// Override the layout's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit one method on the whole dataset and write assignments and a report.
    Fit(RunArgs),
    /// Transductive k-fold cross-validation; scores on held-out folds.
    ///
    /// ARI for igmm is computed directly between raw cluster ids and true
    /// classes (ARI is invariant to relabeling, so no mapping is needed).
    /// For ssigmm and ssgmm, clusters sharing a label tag count as one
    /// predicted class and untagged clusters stay separate.
    Crossval(RunArgs),
    /// Adjusted Rand index between two label files.
    ///
    /// Each file is either a plain list (one label per line) or a CSV with a
    /// header, read from the named column.
    Ari {
        truth: PathBuf,
        pred: PathBuf,
        #[arg(long, default_value = "true_class")]
        true_column: String,
        #[arg(long, default_value = "cluster_id")]
        pred_column: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Run config JSON. Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed. Drawn at random (and echoed) when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    label_fraction: Option<f64>,
    /// Dataset CSV (feature columns, optional `label` and `true_class`).
    #[arg(long, conflicts_with = "synth")]
    data: Option<PathBuf>,
    /// Synthetic layout name or JSON path.
    #[arg(long)]
    synth: Option<String>,
    /// Refuse to run without an explicit seed.
    #[arg(long)]
    strict_repro: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Ssigmm,
    Igmm,
    Ssgmm,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ssigmm => Method::Ssigmm,
            MethodArg::Igmm => Method::Igmm,
            MethodArg::Ssgmm => Method::Ssgmm,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) => 3,
        Error::NotPositiveDefinite { .. }
        | Error::AllNegInfinite
        | Error::EmptyCluster
        | Error::ConstraintViolation { .. }
        | Error::DegenerateComponent { .. } => 4,
        _ => 2,
    }
}

fn resolve(args: RunArgs) -> Result<(RunConfig, u64), Error> {
    let mut c = match &args.config {
        Some(path) => RunConfig::load(path).map_err(|e| match e {
            Error::Json(j) => Error::InvalidConfig(format!("{}: {j}", path.display())),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    if let Some(m) = args.method {
        c.method = m.into();
    }
    if args.data.is_some() {
        c.data_csv = args.data;
        c.synth = None;
    }
    if args.synth.is_some() {
        c.synth = args.synth;
        c.data_csv = None;
    }
    if args.out.is_some() {
        c.out = args.out;
    }
    if args.seed.is_some() {
        c.seed = args.seed;
    }
    if let Some(n) = args.chains {
        c.n_chains = n;
    }
    if let Some(n) = args.iterations {
        c.sampler.n_iterations = n;
    }
    if let Some(n) = args.burn_in {
        c.sampler.n_burn_in = n;
    }
    if let Some(a) = args.alpha {
        c.sampler.alpha = a;
    }
    if let Some(f) = args.label_fraction {
        c.cv.label_fraction = f;
    }
    c.strict_repro |= args.strict_repro;
    c.validate()?;
    let seed = match c.seed {
        Some(s) => s,
        None => {
            let s = rand::rng().random();
            eprintln!("seed: {s}");
            s
        }
    };
    Ok((c, seed))
}

fn cmd_generate(config: &str, out: &Path, count: Option<usize>, seed: Option<u64>) -> Result<(), Error> {
    let mut spec = load_synth_spec(config).map_err(|e| match e {
        Error::Json(j) => Error::InvalidConfig(format!("{config}: {j}")),
        other => other,
    })?;
    if let Some(n) = count {
        for c in &mut spec.components {
            c.count = n;
        }
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    let data = generate_synthetic::<f64>(&spec)?;
    write_dataset_csv(out, &data)?;
    eprintln!("wrote {} rows to {}", data.n(), out.display());
    Ok(())
}

fn cmd_fit(args: RunArgs) -> Result<(), Error> {
    let (config, seed) = resolve(args)?;
    let run = run_fit(&config, seed)?;
    if let Some(dir) = &config.out {
        write_fit_outputs(dir, &run)?;
    }
    print!("{}", run.report.to_json()?);
    Ok(())
}

fn cmd_crossval(args: RunArgs) -> Result<(), Error> {
    let (config, seed) = resolve(args)?;
    let run = run_crossval(&config, seed)?;
    if let Some(dir) = &config.out {
        write_crossval_outputs(dir, &run)?;
    }
    print!("{}", run.report.to_json()?);
    Ok(())
}

/// Reads labels from a plain list or from column `column` of a CSV.
fn read_label_file(path: &Path, column: &str) -> Result<Vec<String>, Error> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).peekable();
    let first = lines.peek().copied().unwrap_or_default();
    let header: Vec<&str> = first.split(',').map(str::trim).collect();
    if let Some(j) = header.iter().position(|h| *h == column) {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut out = Vec::new();
        for record in rdr.records() {
            let record = record?;
            out.push(record.get(j).unwrap_or_default().to_owned());
        }
        return Ok(out);
    }
    if header.len() == 1 {
        return Ok(lines.map(str::to_owned).collect());
    }
    Err(Error::Parse {
        row: 1,
        column: column.to_owned(),
        message: format!("{}: column not found", path.display()),
    })
}

fn cmd_ari(truth: &Path, pred: &Path, true_column: &str, pred_column: &str) -> Result<(), Error> {
    let t = read_label_file(truth, true_column)?;
    let p = read_label_file(pred, pred_column)?;
    println!("{}", ari(&t, &p)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Generate {
            config,
            out,
            count,
            seed,
        } => cmd_generate(&config, &out, count, seed),
        Command::Fit(args) => cmd_fit(args),
        Command::Crossval(args) => cmd_crossval(args),
        Command::Ari {
            truth,
            pred,
            true_column,
            pred_column,
        } => cmd_ari(&truth, &pred, &true_column, &pred_column),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
