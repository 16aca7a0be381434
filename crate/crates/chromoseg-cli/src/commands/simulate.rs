use std::io::Write;

use anyhow::{bail, Result};
use chromoseg::{simulate_chr1, write_reference, write_snp_table, write_truth, SimConfig};

use crate::config::FileConfig;
use crate::output::{header, OutputSet};
use crate::SimulateArgs;

const KEYS: &[&str] = &[
    "out",
    "seed",
    "n_snps",
    "chrom_len_bp",
    "p_hom",
    "epsilon",
    "high_conf_scale",
    "low_conf_scale",
    "gt_high_conf_quantile",
    "chromosome",
    "ref",
];

pub fn run(args: SimulateArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    file.assert_known(KEYS)?;

    let out = match args.out.or(file.get("out")?) {
        Some(out) => out,
        None => bail!("missing required --out directory"),
    };
    let seed = args.seed.or(file.get("seed")?).unwrap_or(0);
    let reference_path = args.reference.or(file.get("ref")?);
    let reference = super::load_reference(reference_path.as_deref())?;

    let mut config = SimConfig::with_seed(seed);
    config.reference = reference.clone();
    if let Some(v) = args.n_snps.or(file.get("n_snps")?) {
        config.n_snps = v;
    }
    if let Some(v) = args.chrom_len_bp.or(file.get("chrom_len_bp")?) {
        config.chrom_len_bp = v;
    }
    if let Some(v) = args.p_hom.or(file.get("p_hom")?) {
        config.p_hom = v;
    }
    if let Some(v) = args.epsilon.or(file.get("epsilon")?) {
        config.epsilon = v;
    }
    if let Some(v) = args.high_conf_scale.or(file.get("high_conf_scale")?) {
        config.high_conf_scale = v;
    }
    if let Some(v) = args.low_conf_scale.or(file.get("low_conf_scale")?) {
        config.low_conf_scale = v;
    }
    if let Some(v) = args.gt_high_conf_quantile.or(file.get("gt_high_conf_quantile")?) {
        config.gt_high_conf_quantile = v;
    }
    if let Some(v) = args.chromosome.or(file.get("chromosome")?) {
        config.chromosome = v;
    }

    let resolved = [
        ("n_snps", config.n_snps.to_string()),
        ("chrom_len_bp", config.chrom_len_bp.to_string()),
        ("p_hom", config.p_hom.to_string()),
        ("epsilon", config.epsilon.to_string()),
        ("high_conf_scale", config.high_conf_scale.to_string()),
        ("low_conf_scale", config.low_conf_scale.to_string()),
        ("gt_high_conf_quantile", config.gt_high_conf_quantile.to_string()),
        ("chromosome", config.chromosome.clone()),
        (
            "ref",
            reference_path
                .as_deref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "synthetic-default".into()),
        ),
    ];
    let head = header("simulate", seed, &resolved);

    eprintln!("simulating {} SNPs on {}", config.n_snps, config.chromosome);
    let sim = simulate_chr1(&config)?;

    let mut dataset = Vec::new();
    write_snp_table(&mut dataset, std::slice::from_ref(&sim.track), &[head.clone()])?;
    let mut truth = Vec::new();
    write_truth(&mut truth, &sim, &[head.clone()])?;

    let mut outputs = OutputSet::new(&out);
    outputs.add("dataset.tsv", dataset);
    outputs.add("truth.tsv", truth);
    if reference_path.is_none() {
        // ship the synthetic reference so ICE decoding of this dataset is
        // self-contained
        let mut buf = Vec::new();
        write_reference(&mut buf, &reference, &[head])?;
        outputs.add("reference.tsv", buf);
    }
    for path in outputs.flush()? {
        writeln!(std::io::stderr(), "wrote {}", path.display())?;
    }
    Ok(())
}
