//! Emission log-likelihoods for the three state spaces, in vanilla and
//! confidence-weighted (ICE) variants.
//!
//! Genotype calls are Bernoulli over {Hom, Het} with a regime-specific
//! homozygosity rate; under ICE the call is additionally weighted by the
//! reference density of its confidence score given the called and true
//! genotype. Copy-number estimates are Gaussian on the log2 scale around a
//! per-level mean; under ICE the scale is stretched by the SNP-specific
//! standard-error factor. Joint-space emissions multiply the two channels
//! (conditional independence given the hidden state).
//!
//! Every probability or density is floored before taking logs so that no
//! single SNP can contribute an infinite log-odds against a path.

use crate::error::{Error, Result};
use crate::reference::{GenotypeClass, ReferenceModel};
use crate::snp_data::{GenotypeCall, SnpObservation};

/// Floor applied to emission probabilities and densities before `ln`.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-10;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Genotype regime of a hidden state: loss or retention of heterozygosity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenotypeRegime {
    Loss,
    Ret,
}

/// Integer copy-number level of a hidden state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnLevel {
    One,
    Two,
    Three,
}

impl CnLevel {
    pub fn index(self) -> usize {
        match self {
            CnLevel::One => 0,
            CnLevel::Two => 1,
            CnLevel::Three => 2,
        }
    }
}

/// Hidden state space of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSpace {
    /// Loss (index 0) and retention (index 1) of heterozygosity.
    GenotypeOnly,
    /// Deletion (0), normal (1), amplification (2).
    CopyNumberOnly,
    /// Deletion (0), copy-neutral LOH (1), normal (2), amplification (3).
    Joint,
}

impl StateSpace {
    pub fn n_states(self) -> usize {
        match self {
            StateSpace::GenotypeOnly => 2,
            StateSpace::CopyNumberOnly => 3,
            StateSpace::Joint => 4,
        }
    }

    /// Genotype regime of a state, if the space models genotypes.
    pub fn regime(self, state: usize) -> Option<GenotypeRegime> {
        match self {
            StateSpace::GenotypeOnly => match state {
                0 => Some(GenotypeRegime::Loss),
                _ => Some(GenotypeRegime::Ret),
            },
            StateSpace::CopyNumberOnly => None,
            StateSpace::Joint => match state {
                0 | 1 => Some(GenotypeRegime::Loss),
                _ => Some(GenotypeRegime::Ret),
            },
        }
    }

    /// Copy-number level of a state, if the space models copy number.
    pub fn cn_level(self, state: usize) -> Option<CnLevel> {
        match self {
            StateSpace::GenotypeOnly => None,
            StateSpace::CopyNumberOnly => match state {
                0 => Some(CnLevel::One),
                1 => Some(CnLevel::Two),
                _ => Some(CnLevel::Three),
            },
            StateSpace::Joint => match state {
                0 => Some(CnLevel::One),
                1 | 2 => Some(CnLevel::Two),
                _ => Some(CnLevel::Three),
            },
        }
    }

    pub fn label(self, state: usize) -> &'static str {
        match self {
            StateSpace::GenotypeOnly => ["loss", "retention"][state],
            StateSpace::CopyNumberOnly => ["deletion", "normal", "amplification"][state],
            StateSpace::Joint => ["deletion", "cn_loh", "normal", "amplification"][state],
        }
    }

    pub fn labels(self) -> Vec<&'static str> {
        (0..self.n_states()).map(|s| self.label(s)).collect()
    }

    /// Index of the a-priori common state.
    pub fn normal_state(self) -> usize {
        match self {
            StateSpace::GenotypeOnly => 1,
            StateSpace::CopyNumberOnly => 1,
            StateSpace::Joint => 2,
        }
    }

    /// Index of the hemizygous-deletion state, where one exists.
    pub fn deletion_state(self) -> Option<usize> {
        match self {
            StateSpace::GenotypeOnly => None,
            StateSpace::CopyNumberOnly | StateSpace::Joint => Some(0),
        }
    }
}

/// Bernoulli homozygosity rates of the genotype channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeEmissionParams {
    pub p_hom_loss: f64,
    pub p_hom_ret: f64,
    pub density_floor: f64,
}

impl GenotypeEmissionParams {
    pub fn new(p_hom_loss: f64, p_hom_ret: f64) -> Result<GenotypeEmissionParams> {
        if !(0.0 < p_hom_ret && p_hom_ret < 1.0 && 0.0 < p_hom_loss && p_hom_loss < 1.0) {
            return Err(Error::Model("homozygosity rates must lie in (0, 1)".into()));
        }
        if p_hom_loss <= p_hom_ret {
            return Err(Error::Model(format!(
                "p_hom_loss ({p_hom_loss}) must exceed p_hom_ret ({p_hom_ret})"
            )));
        }
        Ok(GenotypeEmissionParams { p_hom_loss, p_hom_ret, density_floor: DEFAULT_DENSITY_FLOOR })
    }

    fn p_call(&self, call: GenotypeCall, regime: GenotypeRegime) -> f64 {
        let p_hom = match regime {
            GenotypeRegime::Loss => self.p_hom_loss,
            GenotypeRegime::Ret => self.p_hom_ret,
        };
        match call {
            GenotypeCall::Hom => p_hom,
            GenotypeCall::Het => 1.0 - p_hom,
            GenotypeCall::NoCall => 1.0,
        }
    }
}

impl Default for GenotypeEmissionParams {
    fn default() -> Self {
        GenotypeEmissionParams::new(0.99, 0.7).unwrap()
    }
}

/// Gaussian parameters of the copy-number channel on the log2 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyNumberEmissionParams {
    /// Per-level means; two copies sit at 1.0.
    pub means: [f64; 3],
    pub sigma: f64,
    pub density_floor: f64,
}

impl CopyNumberEmissionParams {
    pub fn new(means: [f64; 3], sigma: f64) -> Result<CopyNumberEmissionParams> {
        if !(means[0] < means[1] && means[1] < means[2]) {
            return Err(Error::Model("copy-number means must be strictly increasing".into()));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::Model(format!("sigma must be positive, got {sigma}")));
        }
        Ok(CopyNumberEmissionParams { means, sigma, density_floor: DEFAULT_DENSITY_FLOOR })
    }

    /// Default means (one, two, three copies on log2) with the given scale.
    pub fn with_sigma(sigma: f64) -> Result<CopyNumberEmissionParams> {
        CopyNumberEmissionParams::new([0.0, 1.0, 3f64.log2()], sigma)
    }
}

impl Default for CopyNumberEmissionParams {
    fn default() -> Self {
        CopyNumberEmissionParams::with_sigma(0.25).unwrap()
    }
}

#[inline]
fn floored_ln(value: f64, floor: f64) -> f64 {
    value.max(floor).ln()
}

#[inline]
fn gaussian_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
}

fn called_class(call: GenotypeCall) -> Option<GenotypeClass> {
    match call {
        GenotypeCall::Hom => Some(GenotypeClass::Hom),
        GenotypeCall::Het => Some(GenotypeClass::Het),
        GenotypeCall::NoCall => None,
    }
}

/// Log-probability of a genotype call given the regime. No-calls contribute
/// likelihood one to every state.
pub fn genotype_loglik_vanilla(
    call: GenotypeCall,
    regime: GenotypeRegime,
    params: &GenotypeEmissionParams,
) -> f64 {
    match call {
        GenotypeCall::NoCall => 0.0,
        _ => floored_ln(params.p_call(call, regime), params.density_floor),
    }
}

/// Log-probability of a (call, score) pair given the regime.
///
/// Under loss the true genotype is homozygous, so the score is weighed by the
/// density for the called class against a homozygous truth. Under retention
/// the truth may be either class; the score density is the mixture weighted
/// by the call-conditional truth probabilities. No-calls and absent scores
/// fall back to the vanilla value.
pub fn genotype_loglik_ice(
    call: GenotypeCall,
    score: Option<f64>,
    regime: GenotypeRegime,
    params: &GenotypeEmissionParams,
    reference: &ReferenceModel,
) -> f64 {
    let (called, score) = match (called_class(call), score) {
        (Some(c), Some(s)) => (c, s),
        _ => return genotype_loglik_vanilla(call, regime, params),
    };
    let p_call = params.p_call(call, regime);
    let value = match regime {
        GenotypeRegime::Loss => {
            p_call * reference.score_density(called, GenotypeClass::Hom, score)
        }
        GenotypeRegime::Ret => {
            let f_hom = reference.score_density(called, GenotypeClass::Hom, score);
            let f_het = reference.score_density(called, GenotypeClass::Het, score);
            p_call
                * (f_hom * reference.prob_hom_given_called(called)
                    + f_het * reference.prob_het_given_called(called))
        }
    };
    floored_ln(value, params.density_floor)
}

/// Gaussian log-density of a log2 copy-number estimate at the given level.
pub fn cn_loglik_vanilla(cn_log2: f64, level: CnLevel, params: &CopyNumberEmissionParams) -> f64 {
    let ll = gaussian_logpdf(cn_log2, params.means[level.index()], params.sigma);
    ll.max(params.density_floor.ln())
}

/// As [`cn_loglik_vanilla`] but with the scale stretched by the SNP-specific
/// standard-error factor. An absent factor falls back to the vanilla value.
pub fn cn_loglik_ice(
    cn_log2: f64,
    cn_scale: Option<f64>,
    level: CnLevel,
    params: &CopyNumberEmissionParams,
) -> Result<f64> {
    let scale = match cn_scale {
        None => return Ok(cn_loglik_vanilla(cn_log2, level, params)),
        Some(s) if s > 0.0 => s,
        Some(s) => return Err(Error::Model(format!("cn scale must be positive, got {s}"))),
    };
    let sd = params.sigma * scale;
    let ll = gaussian_logpdf(cn_log2, params.means[level.index()], sd);
    Ok(ll.max(params.density_floor.ln()))
}

/// Joint-space emission: the sum of the copy-number term at the state's level
/// and the genotype term at the state's regime. ICE variants are used for a
/// channel when its score is present and (for genotypes) a reference model is
/// supplied; an absent channel contributes zero.
pub fn joint_loglik(
    obs: &SnpObservation,
    state: usize,
    gt_params: &GenotypeEmissionParams,
    cn_params: &CopyNumberEmissionParams,
    reference: Option<&ReferenceModel>,
) -> Result<f64> {
    let space = StateSpace::Joint;
    if state >= space.n_states() {
        return Err(Error::Model(format!("joint state index {state} out of range")));
    }
    let mut ll = 0.0;
    if let (Some(level), Some(cn)) = (space.cn_level(state), obs.cn_log2) {
        ll += cn_loglik_ice(cn, obs.cn_scale, level, cn_params)?;
    }
    if let (Some(regime), Some(call)) = (space.regime(state), obs.gt) {
        ll += match reference {
            Some(r) => genotype_loglik_ice(call, obs.gt_score, regime, gt_params, r),
            None => genotype_loglik_vanilla(call, regime, gt_params),
        };
    }
    Ok(ll)
}

/// Robust scale estimate: half the spread between the 16th and 84th
/// percentiles (one standard deviation around the median for Gaussian data).
/// Non-finite values are ignored; at least 10 finite values are required.
pub fn robust_sigma(values: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mut finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
    if finite.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "robust sigma needs at least 10 finite values, got {}",
            finite.len()
        )));
    }
    finite.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let h = (finite.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        finite[lo] + (h - lo as f64) * (finite[hi] - finite[lo])
    };
    let sigma = (quantile(0.84) - quantile(0.16)) / 2.0;
    if sigma <= 1e-6 {
        return Err(Error::InvalidInput(format!(
            "degenerate scale {sigma}: input is near constant"
        )));
    }
    Ok(sigma)
}
