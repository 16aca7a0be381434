//! Deterministic-seeded generators: a reference chromosome with five planted
//! features (regions A-E), a small-deletion sweep over sizes and precision
//! factors, and synthetic null arms for false-positive counting.
//!
//! All draws come from a ChaCha stream derived from the config seed, so any
//! config reproduces bit-identically. Feature geometry (spans, separator
//! widths, SNP counts) is fixed; only background positions and the observation
//! draws vary by seed.

use std::collections::BTreeSet;
use std::io::Write;
use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::emissions::robust_sigma;
use crate::error::{Error, Result};
use crate::reference::{synthetic_reference, GenotypeClass, ReferenceModel, SyntheticSpec};
use crate::snp_data::{GenotypeCall, SnpObservation, SnpTrack};

/// Joint-space state indices used for truth paths.
pub const STATE_DELETION: usize = 0;
pub const STATE_CN_LOH: usize = 1;
pub const STATE_NORMAL: usize = 2;
pub const STATE_AMPLIFICATION: usize = 3;

/// Feature tag of a simulated SNP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    A,
    B,
    C,
    D,
    E,
    Background,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Region::A => "A",
            Region::B => "B",
            Region::C => "C",
            Region::D => "D",
            Region::E => "E",
            Region::Background => "background",
        };
        f.write_str(s)
    }
}

/// Configuration for the reference-chromosome generator.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub seed: u64,
    pub n_snps: usize,
    pub chrom_len_bp: u64,
    /// Background probability of a homozygous call.
    pub p_hom: f64,
    /// Log2 copy-number standard deviation of the background.
    pub epsilon: f64,
    /// Scale factor applied where high confidence is assigned.
    pub high_conf_scale: f64,
    /// Scale factor applied where low confidence is assigned.
    pub low_conf_scale: f64,
    /// Shifted-gamma parameters for the decorative per-SNP standard errors.
    pub se_shape: f64,
    pub se_rate: f64,
    pub se_shift: f64,
    /// High-confidence genotype scores are drawn from the correct cell above
    /// this quantile.
    pub gt_high_conf_quantile: f64,
    pub chromosome: String,
    /// Reference model used to draw genotype confidence scores.
    pub reference: Arc<ReferenceModel>,
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> SimConfig {
        let reference =
            Arc::new(synthetic_reference(&SyntheticSpec::default()).expect("default reference"));
        SimConfig {
            seed,
            n_snps: 9165,
            chrom_len_bp: 245_000_000,
            p_hom: 0.7,
            epsilon: 0.18,
            high_conf_scale: 0.5,
            low_conf_scale: 2.0,
            se_shape: 1.0,
            se_rate: 2.0,
            se_shift: 0.3,
            gt_high_conf_quantile: 0.97,
            chromosome: "chr1".into(),
            reference,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_snps < FEATURE_SNPS + 42 {
            return Err(Error::Simulation(format!(
                "n_snps = {} cannot host the {} feature SNPs plus background",
                self.n_snps, FEATURE_SNPS
            )));
        }
        if self.chrom_len_bp < 20_000_000 {
            return Err(Error::Simulation("chromosome too short for the feature layout".into()));
        }
        if !(self.epsilon > 0.0 && self.high_conf_scale > 0.0 && self.low_conf_scale > 0.0) {
            return Err(Error::Simulation("scales must be positive".into()));
        }
        if !(0.0 < self.p_hom && self.p_hom < 1.0) {
            return Err(Error::Simulation("p_hom must lie in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.gt_high_conf_quantile) {
            return Err(Error::Simulation("gt_high_conf_quantile must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// A generated chromosome with its hidden truth.
#[derive(Debug, Clone)]
pub struct SimulatedChromosome {
    pub track: SnpTrack,
    /// True joint-space state per SNP.
    pub true_path: Vec<usize>,
    pub regions: Vec<Region>,
}

impl SimulatedChromosome {
    /// Indices of SNPs in `region` whose true state is `state`.
    pub fn indices_of(&self, region: Region, state: usize) -> Vec<usize> {
        self.regions
            .iter()
            .zip(&self.true_path)
            .enumerate()
            .filter(|(_, (r, s))| **r == region && **s == state)
            .map(|(i, _)| i)
            .collect()
    }
}

const FEATURE_SNPS: usize = 608;

#[derive(Debug, Clone, Copy)]
enum GtPlan {
    /// Bernoulli background call with a correct-cell score.
    Draw,
    /// Homozygous call with a correct-cell score.
    Hom,
    /// Heterozygous call with a high-confidence correct-cell score.
    HetHighConf,
    /// Heterozygous call whose truth is homozygous; score from the miscall cell.
    HetMiscalled,
}

#[derive(Debug, Clone, Copy)]
enum CnPlan {
    /// Mean at the given log2 level, background scale, decorative SE draw.
    Plain { mean: f64 },
    /// Mean at the given level, scale shrunk and reported as high confidence.
    HighConf { mean: f64 },
    /// Mean at the given level, scale inflated and reported as low confidence.
    LowConf { mean: f64 },
}

#[derive(Debug, Clone, Copy)]
struct SnpPlan {
    pos: u64,
    region: Region,
    true_state: usize,
    gt: GtPlan,
    cn: CnPlan,
}

struct Layout {
    plans: Vec<SnpPlan>,
    intervals: Vec<(u64, u64)>,
}

fn push_run(
    plans: &mut Vec<SnpPlan>,
    start: u64,
    count: usize,
    spacing: u64,
    region: Region,
    true_state: usize,
    gt: GtPlan,
    cn: CnPlan,
) -> u64 {
    let mut last = start;
    for i in 0..count {
        last = start + i as u64 * spacing;
        plans.push(SnpPlan { pos: last, region, true_state, gt, cn });
    }
    last
}

fn feature_layout(config: &SimConfig) -> Layout {
    let amp_mean = 3f64.log2();
    let frac = |mb_on_chr1: f64| (config.chrom_len_bp as f64 * mb_on_chr1 / 245.0) as u64;
    let mut plans = Vec::with_capacity(FEATURE_SNPS);
    let mut intervals = Vec::new();

    // Region A: 200 SNPs over ~5 Mb; two 99-SNP homozygous (copy-neutral LOH)
    // flanks around a 14 kb separator holding two high-confidence hets.
    let a0 = frac(50.3);
    let last = push_run(&mut plans, a0, 99, 25_181, Region::A, STATE_CN_LOH, GtPlan::Hom, CnPlan::Plain { mean: 1.0 });
    let het1 = last + 6_900;
    plans.push(SnpPlan { pos: het1, region: Region::A, true_state: STATE_NORMAL, gt: GtPlan::HetHighConf, cn: CnPlan::HighConf { mean: 1.0 } });
    plans.push(SnpPlan { pos: het1 + 200, region: Region::A, true_state: STATE_NORMAL, gt: GtPlan::HetHighConf, cn: CnPlan::HighConf { mean: 1.0 } });
    let last = push_run(&mut plans, het1 + 200 + 6_900, 99, 25_181, Region::A, STATE_CN_LOH, GtPlan::Hom, CnPlan::Plain { mean: 1.0 });
    intervals.push((a0, last));

    // Region B: 100 SNPs over ~2 Mb; two 49-SNP hemizygous deletions around a
    // 360 bp diploid separator whose two SNPs are miscalled het with high
    // copy-number confidence.
    let b0 = frac(90.0);
    let last = push_run(&mut plans, b0, 49, 20_400, Region::B, STATE_DELETION, GtPlan::Hom, CnPlan::Plain { mean: 0.0 });
    let s1 = last + 179;
    plans.push(SnpPlan { pos: s1, region: Region::B, true_state: STATE_NORMAL, gt: GtPlan::HetMiscalled, cn: CnPlan::HighConf { mean: 1.0 } });
    plans.push(SnpPlan { pos: s1 + 2, region: Region::B, true_state: STATE_NORMAL, gt: GtPlan::HetMiscalled, cn: CnPlan::HighConf { mean: 1.0 } });
    let last = push_run(&mut plans, s1 + 2 + 179, 49, 20_400, Region::B, STATE_DELETION, GtPlan::Hom, CnPlan::Plain { mean: 0.0 });
    intervals.push((b0, last));

    // Region C: a 100-SNP hemizygous deletion under 2 Mb; two mid-region SNPs
    // show copy number near two with low confidence.
    let c0 = frac(120.0);
    let mut last = c0;
    for i in 0..100usize {
        let pos = c0 + i as u64 * 19_200;
        let cn = if i == 49 || i == 50 {
            CnPlan::LowConf { mean: 1.0 }
        } else {
            CnPlan::Plain { mean: 0.0 }
        };
        plans.push(SnpPlan { pos, region: Region::C, true_state: STATE_DELETION, gt: GtPlan::Hom, cn });
        last = pos;
    }
    intervals.push((c0, last));

    // Region D: two 99-SNP copy-3 segments under 1 Mb each around a 9.8 kb
    // diploid separator with two high-confidence SNPs.
    let d0 = frac(150.0);
    let last = push_run(&mut plans, d0, 99, 9_690, Region::D, STATE_AMPLIFICATION, GtPlan::Draw, CnPlan::Plain { mean: amp_mean });
    let s1 = last + 4_850;
    plans.push(SnpPlan { pos: s1, region: Region::D, true_state: STATE_NORMAL, gt: GtPlan::Draw, cn: CnPlan::HighConf { mean: 1.0 } });
    plans.push(SnpPlan { pos: s1 + 100, region: Region::D, true_state: STATE_NORMAL, gt: GtPlan::Draw, cn: CnPlan::HighConf { mean: 1.0 } });
    let last = push_run(&mut plans, s1 + 100 + 4_850, 99, 9_690, Region::D, STATE_AMPLIFICATION, GtPlan::Draw, CnPlan::Plain { mean: amp_mean });
    intervals.push((d0, last));

    // Region E: a 5-SNP microdeletion spanning 94 kb and a 3-SNP
    // microamplification spanning 294 kb, both with high confidence.
    let e0 = frac(180.0);
    let last = push_run(&mut plans, e0, 5, 23_500, Region::E, STATE_DELETION, GtPlan::Hom, CnPlan::HighConf { mean: 0.0 });
    intervals.push((e0, last));
    let ea0 = e0 + 2_500_000;
    let last = push_run(&mut plans, ea0, 3, 147_000, Region::E, STATE_AMPLIFICATION, GtPlan::Draw, CnPlan::HighConf { mean: amp_mean });
    intervals.push((ea0, last));

    Layout { plans, intervals }
}

fn draw_genotype(
    plan: GtPlan,
    config: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> (GenotypeCall, f64) {
    let reference = config.reference.as_ref();
    match plan {
        GtPlan::Draw => {
            if rng.random_bool(config.p_hom) {
                let score = reference.table(GenotypeClass::Hom, GenotypeClass::Hom).sample(rng);
                (GenotypeCall::Hom, score)
            } else {
                let score = reference.table(GenotypeClass::Het, GenotypeClass::Het).sample(rng);
                (GenotypeCall::Het, score)
            }
        }
        GtPlan::Hom => {
            let score = reference.table(GenotypeClass::Hom, GenotypeClass::Hom).sample(rng);
            (GenotypeCall::Hom, score)
        }
        GtPlan::HetHighConf => {
            let score = reference
                .table(GenotypeClass::Het, GenotypeClass::Het)
                .sample_above(config.gt_high_conf_quantile, rng);
            (GenotypeCall::Het, score)
        }
        GtPlan::HetMiscalled => {
            let score = reference.table(GenotypeClass::Het, GenotypeClass::Hom).sample(rng);
            (GenotypeCall::Het, score)
        }
    }
}

/// Generate the reference chromosome.
pub fn simulate_chr1(config: &SimConfig) -> Result<SimulatedChromosome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let Layout { mut plans, intervals } = feature_layout(config);

    if let Some(&(_, end)) = intervals.last() {
        if end >= config.chrom_len_bp {
            return Err(Error::Simulation("feature layout exceeds chromosome length".into()));
        }
    }

    let mut taken: BTreeSet<u64> = plans.iter().map(|p| p.pos).collect();
    if taken.len() != plans.len() {
        return Err(Error::Simulation("feature layout produced duplicate positions".into()));
    }
    let n_background = config.n_snps - plans.len();
    let mut placed = 0;
    while placed < n_background {
        let pos = rng.random_range(1..=config.chrom_len_bp);
        if intervals.iter().any(|&(lo, hi)| pos >= lo && pos <= hi) {
            continue;
        }
        if taken.insert(pos) {
            plans.push(SnpPlan {
                pos,
                region: Region::Background,
                true_state: STATE_NORMAL,
                gt: GtPlan::Draw,
                cn: CnPlan::Plain { mean: 1.0 },
            });
            placed += 1;
        }
    }
    plans.sort_by_key(|p| p.pos);

    let se_gamma = Gamma::new(config.se_shape, 1.0 / config.se_rate)
        .map_err(|e| Error::Simulation(format!("invalid SE gamma: {e}")))?;
    let mut observations = Vec::with_capacity(plans.len());
    let mut true_path = Vec::with_capacity(plans.len());
    let mut regions = Vec::with_capacity(plans.len());
    for plan in &plans {
        let (call, score) = draw_genotype(plan.gt, config, &mut rng);
        let (mean, sd, scale) = match plan.cn {
            CnPlan::Plain { mean } => {
                let se = config.se_shift + se_gamma.sample(&mut rng);
                (mean, config.epsilon, se)
            }
            CnPlan::HighConf { mean } => {
                (mean, config.epsilon * config.high_conf_scale, config.high_conf_scale)
            }
            CnPlan::LowConf { mean } => {
                (mean, config.epsilon * config.low_conf_scale, config.low_conf_scale)
            }
        };
        let normal = Normal::new(mean, sd).map_err(|e| Error::Simulation(e.to_string()))?;
        let cn_log2 = normal.sample(&mut rng);
        observations.push(SnpObservation::from_log2_cn(
            plan.pos,
            Some(call),
            Some(score),
            Some(cn_log2),
            Some(scale),
        )?);
        true_path.push(plan.true_state);
        regions.push(plan.region);
    }
    Ok(SimulatedChromosome {
        track: SnpTrack::new(config.chromosome.clone(), observations)?,
        true_path,
        regions,
    })
}

/// Write the truth sidecar table for a simulated chromosome.
pub fn write_truth<W: Write>(
    writer: &mut W,
    sim: &SimulatedChromosome,
    header_comment: &[String],
) -> Result<()> {
    for line in header_comment {
        writeln!(writer, "# {line}")?;
    }
    writeln!(writer, "chrom\tpos\ttrue_state\tregion")?;
    let space = crate::emissions::StateSpace::Joint;
    for ((obs, &state), region) in
        sim.track.observations.iter().zip(&sim.true_path).zip(&sim.regions)
    {
        writeln!(
            writer,
            "{}\t{}\t{}\t{}",
            sim.track.chromosome,
            obs.position,
            space.label(state),
            region
        )?;
    }
    Ok(())
}

/// Per-SNP relative variability: a shifted gamma normalized to unit mean.
#[derive(Debug, Clone, PartialEq)]
pub struct VariabilitySpec {
    pub shape: f64,
    pub rate: f64,
    pub shift: f64,
}

impl Default for VariabilitySpec {
    fn default() -> Self {
        VariabilitySpec { shape: 1.0, rate: 2.0, shift: 0.3 }
    }
}

impl VariabilitySpec {
    fn mean(&self) -> f64 {
        self.shift + self.shape / self.rate
    }

    fn sampler(&self) -> Result<Gamma<f64>> {
        Gamma::new(self.shape, 1.0 / self.rate)
            .map_err(|e| Error::Simulation(format!("invalid variability gamma: {e}")))
    }
}

/// Configuration for the small-deletion sweep and the null arms.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub datasets_per_size: usize,
    pub k_values: Vec<f64>,
    pub null_arms: usize,
    pub null_k: f64,
    pub n_snps: usize,
    pub chrom_len_bp: u64,
    pub null_n_snps: usize,
    pub null_chrom_len_bp: u64,
    pub p_hom: f64,
    /// Baseline log2 standard deviation multiplying the per-SNP variability.
    pub background_sigma: f64,
    pub variability: VariabilitySpec,
    pub chromosome: String,
}

impl SweepConfig {
    pub fn with_seed(seed: u64) -> SweepConfig {
        SweepConfig {
            seed,
            sizes: (2..=10).collect(),
            datasets_per_size: 50,
            k_values: vec![0.4, 0.7, 1.0, 1.3],
            null_arms: 200,
            null_k: 1.3,
            n_snps: 9165,
            chrom_len_bp: 245_000_000,
            null_n_snps: 4500,
            null_chrom_len_bp: 125_000_000,
            p_hom: 0.7,
            background_sigma: 0.36,
            variability: VariabilitySpec::default(),
            chromosome: "chr1".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.iter().any(|&s| !(2..=10).contains(&s)) {
            return Err(Error::Simulation("deletion sizes must lie within [2, 10]".into()));
        }
        if self.k_values.is_empty() || self.k_values.iter().any(|&k| !k.is_finite() || k <= 0.0) {
            return Err(Error::Simulation("K values must be positive".into()));
        }
        if self.null_k <= 0.0 || self.background_sigma <= 0.0 {
            return Err(Error::Simulation("scales must be positive".into()));
        }
        if self.datasets_per_size == 0 {
            return Err(Error::Simulation("datasets_per_size must be at least 1".into()));
        }
        if self.n_snps < 100 || self.null_n_snps < 100 {
            return Err(Error::Simulation("tracks need at least 100 SNPs".into()));
        }
        Ok(())
    }
}

/// One sweep dataset: a background track with a deletion planted in `window`.
#[derive(Debug, Clone)]
pub struct SweepDataset {
    pub track: SnpTrack,
    pub window: Range<usize>,
    pub k: f64,
    pub size: usize,
    pub replicate: usize,
}

/// A synthetic normal arm with no planted features.
#[derive(Debug, Clone)]
pub struct NullArm {
    pub index: usize,
    pub track: SnpTrack,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(base), |acc, &p| splitmix64(acc ^ p))
}

fn random_positions(rng: &mut ChaCha8Rng, count: usize, len: u64) -> Vec<u64> {
    let mut taken = BTreeSet::new();
    while taken.len() < count {
        taken.insert(rng.random_range(1..=len));
    }
    taken.into_iter().collect()
}

struct ArmDraws {
    positions: Vec<u64>,
    calls: Vec<GenotypeCall>,
    scores: Vec<f64>,
    cn_values: Vec<f64>,
    sds: Vec<f64>,
}

/// Draw a full track where SNP `i` has log2 mean `means[i]` and standard
/// deviation `sd_factor[i] * background_sigma * r_i`.
fn draw_arm(
    rng: &mut ChaCha8Rng,
    config: &SweepConfig,
    reference: &ReferenceModel,
    n: usize,
    chrom_len: u64,
    mean_at: impl Fn(usize) -> f64,
    k_at: impl Fn(usize) -> f64,
) -> Result<ArmDraws> {
    let positions = random_positions(rng, n, chrom_len);
    let gamma = config.variability.sampler()?;
    let var_mean = config.variability.mean();
    let mut calls = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    let mut cn_values = Vec::with_capacity(n);
    let mut sds = Vec::with_capacity(n);
    for i in 0..n {
        let r = (config.variability.shift + gamma.sample(rng)) / var_mean;
        let sd = k_at(i) * config.background_sigma * r;
        let normal = Normal::new(mean_at(i), sd).map_err(|e| Error::Simulation(e.to_string()))?;
        cn_values.push(normal.sample(rng));
        sds.push(sd);
        if rng.random_bool(config.p_hom) {
            calls.push(GenotypeCall::Hom);
            scores.push(reference.table(GenotypeClass::Hom, GenotypeClass::Hom).sample(rng));
        } else {
            calls.push(GenotypeCall::Het);
            scores.push(reference.table(GenotypeClass::Het, GenotypeClass::Het).sample(rng));
        }
    }
    Ok(ArmDraws { positions, calls, scores, cn_values, sds })
}

fn draws_to_track(chromosome: &str, draws: ArmDraws) -> Result<SnpTrack> {
    let sigma_hat = robust_sigma(draws.cn_values.iter().copied())?;
    let observations = (0..draws.positions.len())
        .map(|i| {
            SnpObservation::from_log2_cn(
                draws.positions[i],
                Some(draws.calls[i]),
                Some(draws.scores[i]),
                Some(draws.cn_values[i]),
                Some(draws.sds[i] / sigma_hat),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    SnpTrack::new(chromosome, observations)
}

/// Generate the deletion sweep: for every (K, size, replicate), a background
/// track with one deletion window planted at a seeded-random location. The
/// reported per-SNP scale factors are the true generative standard deviations
/// divided by the track's robust sigma estimate, so a confidence-aware
/// decoder sees calibrated scores.
pub fn simulate_deletion_sweep(
    config: &SweepConfig,
    reference: &ReferenceModel,
) -> Result<Vec<SweepDataset>> {
    config.validate()?;
    let mut out = Vec::new();
    for (ki, &k) in config.k_values.iter().enumerate() {
        for &size in &config.sizes {
            for replicate in 0..config.datasets_per_size {
                let seed = derive_seed(
                    config.seed,
                    &[1, ki as u64, size as u64, replicate as u64],
                );
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let start = rng.random_range(5..config.n_snps - size - 5);
                let window = start..start + size;
                let w = window.clone();
                let draws = draw_arm(
                    &mut rng,
                    config,
                    reference,
                    config.n_snps,
                    config.chrom_len_bp,
                    |i| if w.contains(&i) { 0.0 } else { 1.0 },
                    |i| if w.contains(&i) { k } else { 1.0 },
                )?;
                out.push(SweepDataset {
                    track: draws_to_track(&config.chromosome, draws)?,
                    window,
                    k,
                    size,
                    replicate,
                });
            }
        }
    }
    Ok(out)
}

/// Generate all-normal arms with the per-SNP variability inflated by
/// `null_k` across every SNP.
pub fn simulate_null_arms(
    config: &SweepConfig,
    reference: &ReferenceModel,
) -> Result<Vec<NullArm>> {
    config.validate()?;
    let chromosome = format!("{}q", config.chromosome);
    let mut out = Vec::with_capacity(config.null_arms);
    for index in 0..config.null_arms {
        let seed = derive_seed(config.seed, &[2, index as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = draw_arm(
            &mut rng,
            config,
            reference,
            config.null_n_snps,
            config.null_chrom_len_bp,
            |_| 1.0,
            |_| config.null_k,
        )?;
        out.push(NullArm { index, track: draws_to_track(&chromosome, draws)? });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(seed: u64) -> SimConfig {
        let mut config = SimConfig::with_seed(seed);
        config.n_snps = 2000;
        config
    }

    fn region_state_runs(sim: &SimulatedChromosome, region: Region) -> Vec<(usize, usize)> {
        let states: Vec<usize> = sim
            .regions
            .iter()
            .zip(&sim.true_path)
            .filter(|(r, _)| **r == region)
            .map(|(_, &s)| s)
            .collect();
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=states.len() {
            if i == states.len() || states[i] != states[start] {
                runs.push((states[start], i - start));
                start = i;
            }
        }
        runs
    }

    #[test]
    fn region_snp_counts_are_exact() {
        for seed in [0, 1, 7] {
            let sim = simulate_chr1(&small_config(seed)).unwrap();
            let count =
                |r: Region| sim.regions.iter().filter(|&&x| x == r).count();
            assert_eq!(count(Region::A), 200);
            assert_eq!(count(Region::B), 100);
            assert_eq!(count(Region::C), 100);
            assert_eq!(count(Region::D), 200);
            assert_eq!(count(Region::E), 8);
            assert_eq!(count(Region::Background), sim.track.len() - 608);
        }
    }

    #[test]
    fn default_snp_count() {
        let sim = simulate_chr1(&SimConfig::with_seed(3)).unwrap();
        assert_eq!(sim.track.len(), 9165);
    }

    #[test]
    fn true_state_runs_match_feature_design() {
        let sim = simulate_chr1(&small_config(5)).unwrap();
        assert_eq!(
            region_state_runs(&sim, Region::B),
            vec![(STATE_DELETION, 49), (STATE_NORMAL, 2), (STATE_DELETION, 49)]
        );
        assert_eq!(
            region_state_runs(&sim, Region::A),
            vec![(STATE_CN_LOH, 99), (STATE_NORMAL, 2), (STATE_CN_LOH, 99)]
        );
        assert_eq!(
            region_state_runs(&sim, Region::D),
            vec![(STATE_AMPLIFICATION, 99), (STATE_NORMAL, 2), (STATE_AMPLIFICATION, 99)]
        );
        assert_eq!(region_state_runs(&sim, Region::C), vec![(STATE_DELETION, 100)]);
        assert_eq!(
            region_state_runs(&sim, Region::E),
            vec![(STATE_DELETION, 5), (STATE_AMPLIFICATION, 3)]
        );
    }

    #[test]
    fn background_hom_fraction_in_band() {
        let sim = simulate_chr1(&SimConfig::with_seed(11)).unwrap();
        let background: Vec<_> = sim
            .regions
            .iter()
            .zip(&sim.track.observations)
            .filter(|(r, _)| **r == Region::Background)
            .map(|(_, o)| o.gt.unwrap())
            .collect();
        let hom = background.iter().filter(|&&c| c == GenotypeCall::Hom).count();
        let fraction = hom as f64 / background.len() as f64;
        assert!((0.67..=0.73).contains(&fraction), "hom fraction {fraction}");
    }

    #[test]
    fn all_scale_factors_at_least_the_shift() {
        let sim = simulate_chr1(&small_config(13)).unwrap();
        for obs in &sim.track.observations {
            let scale = obs.cn_scale.unwrap();
            assert!(scale >= 0.3, "scale {scale}");
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let a = simulate_chr1(&small_config(21)).unwrap();
        let b = simulate_chr1(&small_config(21)).unwrap();
        assert_eq!(a.track, b.track);
        assert_eq!(a.true_path, b.true_path);
        let c = simulate_chr1(&small_config(22)).unwrap();
        assert_ne!(a.track, c.track);
    }

    #[test]
    fn too_few_snps_is_error() {
        let mut config = SimConfig::with_seed(1);
        config.n_snps = 620;
        assert!(simulate_chr1(&config).is_err());
    }

    fn small_sweep(seed: u64) -> SweepConfig {
        let mut config = SweepConfig::with_seed(seed);
        config.sizes = vec![2, 3];
        config.datasets_per_size = 2;
        config.k_values = vec![0.4];
        config.n_snps = 800;
        config.null_arms = 3;
        config.null_n_snps = 400;
        config
    }

    #[test]
    fn sweep_produces_expected_grid() {
        let reference = synthetic_reference(&SyntheticSpec::default()).unwrap();
        let datasets = simulate_deletion_sweep(&small_sweep(31), &reference).unwrap();
        assert_eq!(datasets.len(), 2 * 2);
        for d in &datasets {
            assert_eq!(d.window.len(), d.size);
            assert_eq!(d.track.len(), 800);
            // planted deletion is centered at log2 zero
            for i in d.window.clone() {
                assert!(d.track.observations[i].cn_log2.unwrap().abs() < 2.0);
            }
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let reference = synthetic_reference(&SyntheticSpec::default()).unwrap();
        let a = simulate_deletion_sweep(&small_sweep(37), &reference).unwrap();
        let b = simulate_deletion_sweep(&small_sweep(37), &reference).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.track, y.track);
            assert_eq!(x.window, y.window);
        }
    }

    #[test]
    fn planted_deletion_mean_is_centered() {
        let reference = synthetic_reference(&SyntheticSpec::default()).unwrap();
        let mut config = SweepConfig::with_seed(41);
        config.sizes = vec![4];
        config.datasets_per_size = 30;
        config.k_values = vec![1.0];
        config.n_snps = 500;
        let datasets = simulate_deletion_sweep(&config, &reference).unwrap();
        let values: Vec<f64> = datasets
            .iter()
            .flat_map(|d| {
                d.window.clone().map(|i| d.track.observations[i].cn_log2.unwrap())
            })
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert!(mean.abs() < 0.15, "window mean {mean}");
    }

    #[test]
    fn null_arms_are_all_normal_and_reproducible() {
        let reference = synthetic_reference(&SyntheticSpec::default()).unwrap();
        let config = small_sweep(43);
        let arms = simulate_null_arms(&config, &reference).unwrap();
        assert_eq!(arms.len(), 3);
        for arm in &arms {
            assert_eq!(arm.track.len(), 400);
            assert!(arm.track.chromosome.ends_with('q'));
        }
        let again = simulate_null_arms(&config, &reference).unwrap();
        for (a, b) in arms.iter().zip(&again) {
            assert_eq!(a.track, b.track);
        }
    }

    #[test]
    fn invalid_sweep_sizes_rejected() {
        let mut config = small_sweep(1);
        config.sizes = vec![1];
        let reference = synthetic_reference(&SyntheticSpec::default()).unwrap();
        assert!(simulate_deletion_sweep(&config, &reference).is_err());
        config.sizes = vec![11];
        assert!(simulate_deletion_sweep(&config, &reference).is_err());
    }
}
