use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use slc::codec::{Codec, CompressedBlob, DEFAULT_TAU};
use slc::data::{gen_sas, load_idx, load_params, save_params, write_idx_f64, write_idx_matrix};
use slc::eval::evaluate_with_blobs;
use slc::knn::{knn_benchmark, Representation, DEFAULT_K};
use slc::train::{train_with_observer, AdamConfig, LambdaSchedule, TrainConfig};
use slc::{Error, NetworkSpec, Result, SelectorKind};

/// Sparse overcomplete autoencoder compression.
#[derive(Parser)]
#[command(name = "slc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    GenData(GenData),
    /// Train a network and write its parameters.
    Train(Train),
    /// Compress every sample of a dataset into concatenated SLC1 blobs.
    Compress(Compress),
    /// Decompress a blob file into an f64 IDX image file.
    Decompress(Decompress),
    /// Compress and decompress a dataset and report per-sample metrics.
    Eval(Eval),
    /// Cosine KNN accuracy in pixel space and in each network's latent space.
    Knn(Knn),
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    Sas,
}

#[derive(Args)]
struct GenData {
    #[arg(long, value_enum)]
    kind: DataKind,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 64)]
    side: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Train {
    /// IDX image file (u8 or f64, optionally gzipped).
    #[arg(long)]
    data: PathBuf,
    /// `m_ratio,latent_ratio,lambda,selector` with selector `z` or `dz`.
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 512)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Ramp λ linearly from 0 over this many epochs.
    #[arg(long)]
    warmup: Option<usize>,
    /// Seeds both initialisation and shuffling.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_params: PathBuf,
    #[arg(long)]
    history_csv: Option<PathBuf>,
}

#[derive(Args)]
struct Compress {
    #[arg(long)]
    params: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Decompress {
    #[arg(long)]
    params: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Eval {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Per-sample rows; summaries and histograms go next to it as
    /// `<stem>.summary.csv` and `<stem>.hist.csv`.
    #[arg(long)]
    report_csv: Option<PathBuf>,
}

#[derive(Args)]
struct Knn {
    /// Repeat for several networks.
    #[arg(long, num_args = 1..)]
    params: Vec<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Fraction used as the labelled reference set.
    #[arg(long, default_value_t = 0.2)]
    split: f64,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

fn parse_spec(text: &str, n: usize, seed: u64) -> Result<NetworkSpec> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || {
        Error::InvalidArgument(format!(
            "--spec {text:?}: expected m_ratio,latent_ratio,lambda,selector"
        ))
    };
    if parts.len() != 4 {
        return Err(bad());
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let selector = match parts[3] {
        "z" | "id" | "identity" => SelectorKind::Identity,
        "dz" | "gradz" | "∇z" | "diff" => SelectorKind::ForwardDifference,
        _ => return Err(bad()),
    };
    NetworkSpec::from_ratios(n, num(parts[0])?, num(parts[1])?, num(parts[2])?, selector, seed)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn read_blobs(bytes: &[u8]) -> Result<Vec<CompressedBlob>> {
    let mut blobs = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let (blob, used) = CompressedBlob::read_prefix(&bytes[pos..]).map_err(|e| match e {
            Error::Format { offset, msg } => Error::Format {
                offset: pos + offset,
                msg,
            },
            other => other,
        })?;
        blobs.push(blob);
        pos += used;
    }
    Ok(blobs)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => {
            let DataKind::Sas = a.kind;
            let d = gen_sas(a.count, a.side, a.seed)?;
            write_idx_f64(&d, create(&a.out)?)?;
            eprintln!("wrote {} {}x{} images to {}", d.len(), a.side, a.side, a.out.display());
        }
        Command::Train(a) => {
            let data = load_idx(&a.data, None)?;
            let spec = parse_spec(&a.spec, data.dim(), a.seed)?;
            let config = TrainConfig {
                epochs: a.epochs,
                batch_size: a.batch,
                learning_rate: a.lr,
                adam: AdamConfig::default(),
                lambda_schedule: match a.warmup {
                    Some(w) => LambdaSchedule::LinearWarmup { warmup_epochs: w },
                    None => LambdaSchedule::Fixed,
                },
                shuffle_seed: a.seed,
                tau: DEFAULT_TAU,
            };
            let (params, history) = train_with_observer(&data, &spec, &config, |r| {
                eprintln!(
                    "epoch {:>5}  loss {:.6e}  recon {:.6e}  l1 {:.4e}  l0 {:.2}",
                    r.epoch, r.total, r.reconstruction, r.l1, r.l0
                );
            })?;
            save_params(&params, &spec, &a.out_params)?;
            if let Some(path) = a.history_csv {
                history.write_csv(create(&path)?)?;
            }
        }
        Command::Compress(a) => {
            let (params, spec) = load_params(&a.params)?;
            let data = load_idx(&a.input, None)?;
            let codec = Codec::with_tau(a.tau);
            let all: Vec<usize> = (0..data.len()).collect();
            let mut out = create(&a.out)?;
            let mut total = 0;
            for chunk in all.chunks(512) {
                for blob in codec.compress_batch(&data.batch(chunk), &params, &spec)? {
                    let bytes = blob.to_bytes();
                    total += bytes.len();
                    out.write_all(&bytes)?;
                }
            }
            out.flush()?;
            eprintln!(
                "{} samples, {} bytes ({} raw f64 bytes)",
                data.len(),
                total,
                data.len() * data.dim() * 8
            );
        }
        Command::Decompress(a) => {
            let (params, _) = load_params(&a.params)?;
            let blobs = read_blobs(&fs::read(&a.input)?)?;
            let x = Codec::default().decompress_batch(&blobs, &params)?;
            let n = params.input_dim();
            let side = (n as f64).sqrt().round() as usize;
            let (rows, cols) = if side * side == n { (side, side) } else { (1, n) };
            write_idx_matrix(&x.transpose(), rows, cols, create(&a.out)?)?;
            eprintln!("wrote {} samples to {}", blobs.len(), a.out.display());
        }
        Command::Eval(a) => {
            let (params, spec) = load_params(&a.params)?;
            let data = load_idx(&a.data, None)?;
            let (_, report) = evaluate_with_blobs(&data, &params, &spec, a.tau)?;
            println!("samples        {}", report.rows.len());
            println!(
                "error          mean {:.6e}  min {:.6e}  max {:.6e}",
                report.error.mean, report.error.min, report.error.max
            );
            println!(
                "l0             mean {:.3}  min {}  max {}",
                report.l0.mean, report.l0.min, report.l0.max
            );
            println!(
                "ratio          mean {:.2}  min {:.2}  max {:.2}  empty codes {}",
                report.ratio.mean, report.ratio.min, report.ratio.max, report.empty_codes
            );
            println!("blob bytes     mean {:.2}", report.blob_bytes.mean);
            println!("bit ratio      {:.4}", report.bit_ratio());
            if let Some(path) = a.report_csv {
                report.write_samples_csv(create(&path)?)?;
                report.write_summary_csv(create(&with_suffix(&path, ".summary.csv"))?)?;
                report.write_histograms_csv(create(&with_suffix(&path, ".hist.csv"))?)?;
            }
        }
        Command::Knn(a) => {
            let data = load_idx(&a.data, Some(&a.labels))?;
            let loaded = a
                .params
                .iter()
                .map(|p| load_params(p).map(|(params, _)| (p.display().to_string(), params)))
                .collect::<Result<Vec<_>>>()?;
            let mut reps = vec![("pixels".to_string(), Representation::Pixels)];
            reps.extend(loaded.iter().map(|(name, p)| (name.clone(), Representation::Latent(p))));
            let table = knn_benchmark(&data, &reps, a.split, a.repeats, a.k, a.seed)?;
            print!("{table}");
            if let Some(path) = a.out_csv {
                table.write_csv(create(&path)?)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
