use std::fmt::Write as _;
use std::io::Write as _;
use std::sync::Arc;

use anyhow::{bail, Result};
use chromoseg::{
    deletion_delta_loglik, path_to_segments, robust_sigma, CopyNumberEmissionParams,
    GenotypeEmissionParams, HmmModel, ReferenceModel, SnpTrack, StateSpace, SweepConfig,
    STATE_NORMAL,
};
use rayon::prelude::*;

use crate::config::{parse_f64_list, parse_usize_list, FileConfig};
use crate::output::{header, OutputSet};
use crate::BenchArgs;

const KEYS: &[&str] = &[
    "out",
    "seed",
    "sizes",
    "datasets_per_size",
    "k_values",
    "null_arms",
    "null_k",
    "n_snps",
    "chrom_len_bp",
    "null_n_snps",
    "null_chrom_len_bp",
    "p_hom",
    "background_sigma",
    "ref",
];

/// Vanilla and ICE joint models with sigma estimated from the given track.
fn joint_models(track: &SnpTrack, reference: Arc<ReferenceModel>) -> Result<(HmmModel, HmmModel)> {
    let sigma = robust_sigma(track.observations.iter().filter_map(|o| o.cn_log2))?;
    let cn = CopyNumberEmissionParams::with_sigma(sigma)?;
    let gt = GenotypeEmissionParams::default();
    let transition = HmmModel::default_transition(StateSpace::Joint);
    let vanilla =
        HmmModel::new(StateSpace::Joint, transition.clone(), gt.clone(), cn.clone(), None, false)?;
    let ice = HmmModel::new(StateSpace::Joint, transition, gt, cn, Some(reference), true)?;
    Ok((vanilla, ice))
}

pub fn run(args: BenchArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    file.assert_known(KEYS)?;
    super::configure_threads();

    let out = match args.out.or(file.get("out")?) {
        Some(p) => p,
        None => bail!("missing required --out directory"),
    };
    let seed = args.seed.or(file.get("seed")?).unwrap_or(0);
    let reference_path = args.reference.or(file.get("ref")?);
    let reference = super::load_reference(reference_path.as_deref())?;

    let mut config = SweepConfig::with_seed(seed);
    if let Some(raw) = args.sizes.or(file.get("sizes")?) {
        config.sizes = parse_usize_list(&raw)?;
    }
    if let Some(v) = args.datasets_per_size.or(file.get("datasets_per_size")?) {
        config.datasets_per_size = v;
    }
    if let Some(raw) = args.k_values.or(file.get("k_values")?) {
        config.k_values = parse_f64_list(&raw)?;
    }
    if let Some(v) = args.null_arms.or(file.get("null_arms")?) {
        config.null_arms = v;
    }
    if let Some(v) = args.null_k.or(file.get("null_k")?) {
        config.null_k = v;
    }
    if let Some(v) = args.n_snps.or(file.get("n_snps")?) {
        config.n_snps = v;
    }
    if let Some(v) = args.chrom_len_bp.or(file.get("chrom_len_bp")?) {
        config.chrom_len_bp = v;
    }
    if let Some(v) = args.null_n_snps.or(file.get("null_n_snps")?) {
        config.null_n_snps = v;
    }
    if let Some(v) = args.null_chrom_len_bp.or(file.get("null_chrom_len_bp")?) {
        config.null_chrom_len_bp = v;
    }
    if let Some(v) = args.p_hom.or(file.get("p_hom")?) {
        config.p_hom = v;
    }
    if let Some(v) = args.background_sigma.or(file.get("background_sigma")?) {
        config.background_sigma = v;
    }

    let resolved = [
        ("sizes", config.sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")),
        ("datasets_per_size", config.datasets_per_size.to_string()),
        ("k_values", config.k_values.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")),
        ("null_arms", config.null_arms.to_string()),
        ("null_k", config.null_k.to_string()),
        ("n_snps", config.n_snps.to_string()),
        ("null_n_snps", config.null_n_snps.to_string()),
        ("background_sigma", config.background_sigma.to_string()),
        (
            "ref",
            reference_path
                .as_deref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "synthetic-default".into()),
        ),
    ];
    let head = header("bench", seed, &resolved);

    eprintln!(
        "sweep: {} sizes x {} datasets x {} K values",
        config.sizes.len(),
        config.datasets_per_size,
        config.k_values.len()
    );
    let datasets = chromoseg::simulate_deletion_sweep(&config, &reference)?;
    let delta_rows: Vec<String> = datasets
        .par_iter()
        .map(|d| -> Result<String> {
            let (vanilla, ice) = joint_models(&d.track, reference.clone())?;
            let v = deletion_delta_loglik(&vanilla, &d.track, d.window.clone())?;
            let i = deletion_delta_loglik(&ice, &d.track, d.window.clone())?;
            let mut rows = String::new();
            writeln!(rows, "vanilla,{},{},{},{v}", d.k, d.size, d.replicate)?;
            writeln!(rows, "ice,{},{},{},{i}", d.k, d.size, d.replicate)?;
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    eprintln!("null arms: {} at K = {}", config.null_arms, config.null_k);
    let arms = chromoseg::simulate_null_arms(&config, &reference)?;
    let fp_rows: Vec<String> = arms
        .par_iter()
        .map(|arm| -> Result<String> {
            let (vanilla, ice) = joint_models(&arm.track, reference.clone())?;
            let mut rows = String::new();
            for (name, model) in [("vanilla", &vanilla), ("ice", &ice)] {
                let path = model.viterbi(&arm.track)?.path;
                let segments = path_to_segments(&arm.track, &path, StateSpace::Joint)?;
                let spurious_segments =
                    segments.iter().filter(|s| s.state != STATE_NORMAL).count();
                let spurious_snps: usize = segments
                    .iter()
                    .filter(|s| s.state != STATE_NORMAL)
                    .map(|s| s.n_snps)
                    .sum();
                writeln!(rows, "{name},{},{spurious_segments},{spurious_snps}", arm.index)?;
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut delta_csv = format!("# {head}\nmethod,k,size,replicate,delta\n");
    delta_csv.extend(delta_rows);
    let mut fp_csv = format!("# {head}\nmethod,arm,spurious_segments,spurious_snps\n");
    fp_csv.extend(fp_rows);

    let mut outputs = OutputSet::new(&out);
    outputs.add("delta_loglik.csv", delta_csv.into_bytes());
    outputs.add("fp_counts.csv", fp_csv.into_bytes());
    for path in outputs.flush()? {
        writeln!(std::io::stderr(), "wrote {}", path.display())?;
    }
    Ok(())
}
