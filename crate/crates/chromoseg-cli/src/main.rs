//! Command-line front end: decode SNP tables into alteration segments, run
//! the simulators, benchmark vanilla against ICE, and train reference score
//! models.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chromoseg", version, about = "HMM segmentation of SNP-array tracks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode an input table into per-chromosome segments.
    Segment(SegmentArgs),
    /// Generate the reference chromosome with planted features.
    Simulate(SimulateArgs),
    /// Run the small-deletion sweep and the null arms, vanilla vs. ICE.
    Bench(BenchArgs),
    /// Fit a reference score model from labeled triples.
    TrainRef(TrainRefArgs),
}

#[derive(Parser, Debug)]
struct SegmentArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input SNP table (TSV).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// State space: gt | cn | joint.
    #[arg(long)]
    model: Option<String>,
    /// Weigh emissions by per-SNP confidence scores.
    #[arg(long, action = ArgAction::SetTrue)]
    ice: bool,
    /// Reference score model (required for ICE with genotype scores).
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    distance_scale_bp: Option<f64>,
    #[arg(long)]
    theta_rate: Option<f64>,
    /// Comma-separated initial state probabilities.
    #[arg(long)]
    initial_probs: Option<String>,
    #[arg(long)]
    p_hom_loss: Option<f64>,
    #[arg(long)]
    p_hom_ret: Option<f64>,
    /// Copy-number scale; estimated robustly from the data when absent.
    #[arg(long)]
    cn_sigma: Option<f64>,
    #[arg(long)]
    density_floor: Option<f64>,
    /// Refit learnable parameters by EM before decoding.
    #[arg(long, action = ArgAction::SetTrue)]
    em: bool,
    #[arg(long)]
    em_max_iter: Option<usize>,
    #[arg(long)]
    em_tol: Option<f64>,
    /// Comma list from {initial, p_hom_loss, p_hom_ret, cn_sigma, cn_means}.
    #[arg(long)]
    em_learn: Option<String>,
}

#[derive(Parser, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_snps: Option<usize>,
    #[arg(long)]
    chrom_len_bp: Option<u64>,
    #[arg(long)]
    p_hom: Option<f64>,
    /// Background log2 copy-number standard deviation.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    high_conf_scale: Option<f64>,
    #[arg(long)]
    low_conf_scale: Option<f64>,
    #[arg(long)]
    gt_high_conf_quantile: Option<f64>,
    #[arg(long)]
    chromosome: Option<String>,
    /// Reference score model for drawing genotype scores; the default
    /// synthetic model is used (and written alongside) when absent.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
}

#[derive(Parser, Debug)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated deletion sizes in [2, 10].
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    datasets_per_size: Option<usize>,
    /// Comma-separated precision factors K.
    #[arg(long)]
    k_values: Option<String>,
    #[arg(long)]
    null_arms: Option<usize>,
    #[arg(long)]
    null_k: Option<f64>,
    #[arg(long)]
    n_snps: Option<usize>,
    #[arg(long)]
    chrom_len_bp: Option<u64>,
    #[arg(long)]
    null_n_snps: Option<usize>,
    #[arg(long)]
    null_chrom_len_bp: Option<u64>,
    #[arg(long)]
    p_hom: Option<f64>,
    #[arg(long)]
    background_sigma: Option<f64>,
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
}

#[derive(Parser, Debug)]
struct TrainRefArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Labeled triples TSV with columns: called, truth, score.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(args) => commands::segment::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Bench(args) => commands::bench::run(args),
        Command::TrainRef(args) => commands::train_ref::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("chromoseg: {err:#}");
            ExitCode::FAILURE
        }
    }
}
