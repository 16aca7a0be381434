//! Log-space inference over SNP tracks: forward likelihood, Viterbi decoding,
//! forward-backward smoothing, fixed-path likelihood, and restricted
//! Baum-Welch parameter fitting.
//!
//! All recursions run in natural-log space with per-step log-sum-exp; no
//! scaling-coefficient variant is kept. Each chromosome track is decoded as an
//! independent chain started from the initial distribution. Viterbi ties are
//! broken toward the lower state index at every backtrack step, so decoding is
//! fully deterministic.

use std::sync::Arc;

use crate::emissions::{
    cn_loglik_ice, cn_loglik_vanilla, genotype_loglik_ice, genotype_loglik_vanilla,
    CopyNumberEmissionParams, GenotypeEmissionParams, StateSpace,
};
use crate::error::{Error, Result};
use crate::reference::ReferenceModel;
use crate::snp_data::{adjacent_distances, SnpTrack};
use crate::transition::{theta, TransitionParams};

/// A fully specified model: state space, transition family, emission
/// parameters, and (for ICE decoding) the reference score densities.
#[derive(Debug, Clone)]
pub struct HmmModel {
    pub state_space: StateSpace,
    pub transition: TransitionParams,
    pub gt_params: GenotypeEmissionParams,
    pub cn_params: CopyNumberEmissionParams,
    pub reference: Option<Arc<ReferenceModel>>,
    pub ice_enabled: bool,
}

impl HmmModel {
    pub fn new(
        state_space: StateSpace,
        transition: TransitionParams,
        gt_params: GenotypeEmissionParams,
        cn_params: CopyNumberEmissionParams,
        reference: Option<Arc<ReferenceModel>>,
        ice_enabled: bool,
    ) -> Result<HmmModel> {
        if transition.n_states() != state_space.n_states() {
            return Err(Error::Model(format!(
                "initial distribution has {} entries but the state space has {} states",
                transition.n_states(),
                state_space.n_states()
            )));
        }
        Ok(HmmModel { state_space, transition, gt_params, cn_params, reference, ice_enabled })
    }

    /// Default transition parameters for a state space: the normal-like state
    /// gets prior 0.97, the remainder is split evenly.
    pub fn default_transition(space: StateSpace) -> TransitionParams {
        TransitionParams::with_default_initial(space.n_states(), space.normal_state(), 0.97)
            .expect("valid default initial distribution")
    }

    pub fn n_states(&self) -> usize {
        self.state_space.n_states()
    }

    /// Per-SNP, per-state emission log-likelihoods (row-major `n x K`).
    ///
    /// A channel contributes only when the state space models it and the
    /// observation carries it; ICE variants apply when the model has ICE
    /// enabled and the per-SNP score is present.
    pub fn emission_logliks(&self, track: &SnpTrack) -> Result<Vec<f64>> {
        let k = self.n_states();
        let mut out = Vec::with_capacity(track.len() * k);
        for (index, obs) in track.observations.iter().enumerate() {
            for state in 0..k {
                let mut ll = 0.0;
                if let (Some(level), Some(cn)) = (self.state_space.cn_level(state), obs.cn_log2) {
                    ll += if self.ice_enabled {
                        cn_loglik_ice(cn, obs.cn_scale, level, &self.cn_params)
                            .map_err(|e| Error::Emission { index, message: e.to_string() })?
                    } else {
                        cn_loglik_vanilla(cn, level, &self.cn_params)
                    };
                }
                if let (Some(regime), Some(call)) = (self.state_space.regime(state), obs.gt) {
                    ll += if self.ice_enabled && obs.gt_score.is_some() {
                        let reference = self.reference.as_deref().ok_or_else(|| Error::Emission {
                            index,
                            message: "genotype score present but no reference model loaded".into(),
                        })?;
                        genotype_loglik_ice(call, obs.gt_score, regime, &self.gt_params, reference)
                    } else {
                        genotype_loglik_vanilla(call, regime, &self.gt_params)
                    };
                }
                out.push(ll);
            }
        }
        Ok(out)
    }

    /// Log transition matrix for one gap, written into `buf` (row-major).
    fn ln_trans(&self, gap_bp: f64, buf: &mut [f64]) -> Result<()> {
        let k = self.n_states();
        let th = theta(gap_bp, self.transition.distance_scale_bp, self.transition.theta_rate)?;
        let initial = self.transition.initial();
        for j in 0..k {
            for target in 0..k {
                let mut p = initial[target] * th;
                if j == target {
                    p += 1.0 - th;
                }
                buf[j * k + target] = p.ln();
            }
        }
        Ok(())
    }

    /// Log-likelihood of the observations under the model (forward algorithm).
    pub fn forward_loglik(&self, track: &SnpTrack) -> Result<f64> {
        let k = self.n_states();
        let e = self.emission_logliks(track)?;
        let gaps = adjacent_distances(track);
        let mut prev: Vec<f64> = (0..k)
            .map(|j| self.transition.initial()[j].ln() + e[j])
            .collect();
        let mut next = vec![0.0; k];
        let mut trans = vec![0.0; k * k];
        let mut scratch = vec![0.0; k];
        for (t, &gap) in gaps.iter().enumerate() {
            self.ln_trans(gap as f64, &mut trans)?;
            let et = &e[(t + 1) * k..(t + 2) * k];
            for j in 0..k {
                for (i, s) in scratch.iter_mut().enumerate() {
                    *s = prev[i] + trans[i * k + j];
                }
                next[j] = log_sum_exp(&scratch) + et[j];
            }
            std::mem::swap(&mut prev, &mut next);
        }
        Ok(log_sum_exp(&prev))
    }

    /// Most probable state path, its log-likelihood, and the forward
    /// log-likelihood of the track.
    pub fn viterbi(&self, track: &SnpTrack) -> Result<DecodeResult> {
        let k = self.n_states();
        debug_assert!(k <= u8::MAX as usize);
        let n = track.len();
        let e = self.emission_logliks(track)?;
        let gaps = adjacent_distances(track);
        let mut prev: Vec<f64> = (0..k)
            .map(|j| self.transition.initial()[j].ln() + e[j])
            .collect();
        let mut next = vec![0.0; k];
        let mut trans = vec![0.0; k * k];
        let mut backptr = vec![0u8; n * k];
        for (t, &gap) in gaps.iter().enumerate() {
            self.ln_trans(gap as f64, &mut trans)?;
            let et = &e[(t + 1) * k..(t + 2) * k];
            for j in 0..k {
                let mut best = f64::NEG_INFINITY;
                let mut best_i = 0u8;
                for i in 0..k {
                    let v = prev[i] + trans[i * k + j];
                    if v > best {
                        best = v;
                        best_i = i as u8;
                    }
                }
                next[j] = best + et[j];
                backptr[(t + 1) * k + j] = best_i;
            }
            std::mem::swap(&mut prev, &mut next);
        }
        let mut best = f64::NEG_INFINITY;
        let mut last = 0usize;
        for (j, &v) in prev.iter().enumerate() {
            if v > best {
                best = v;
                last = j;
            }
        }
        let mut path = vec![0usize; n];
        path[n - 1] = last;
        for t in (0..n - 1).rev() {
            path[t] = backptr[(t + 1) * k + path[t + 1]] as usize;
        }
        let total_loglik = self.forward_loglik(track)?;
        Ok(DecodeResult { path, path_loglik: best, total_loglik })
    }

    /// Joint log-likelihood of the observations and a fixed state path.
    pub fn path_loglik(&self, track: &SnpTrack, path: &[usize]) -> Result<f64> {
        let k = self.n_states();
        if path.len() != track.len() {
            return Err(Error::Model(format!(
                "path length {} does not match track length {}",
                path.len(),
                track.len()
            )));
        }
        if let Some(&bad) = path.iter().find(|&&s| s >= k) {
            return Err(Error::Model(format!("state index {bad} out of range for {k} states")));
        }
        let e = self.emission_logliks(track)?;
        let gaps = adjacent_distances(track);
        let mut ll = self.transition.initial()[path[0]].ln() + e[path[0]];
        let mut trans = vec![0.0; k * k];
        for (t, &gap) in gaps.iter().enumerate() {
            self.ln_trans(gap as f64, &mut trans)?;
            ll += trans[path[t] * k + path[t + 1]] + e[(t + 1) * k + path[t + 1]];
        }
        Ok(ll)
    }

    /// Forward-backward smoothing probabilities, one row per SNP.
    ///
    /// These are per-SNP posterior state probabilities given the whole track,
    /// not path probabilities.
    pub fn posterior_probs(&self, track: &SnpTrack) -> Result<Vec<Vec<f64>>> {
        let (gamma, _) = self.forward_backward(track)?;
        Ok(gamma)
    }

    /// Shared E-step machinery: posterior rows and the track log-likelihood.
    fn forward_backward(&self, track: &SnpTrack) -> Result<(Vec<Vec<f64>>, f64)> {
        let k = self.n_states();
        let n = track.len();
        let e = self.emission_logliks(track)?;
        let gaps = adjacent_distances(track);
        let mut alpha = vec![0.0; n * k];
        let mut trans = vec![0.0; k * k];
        let mut scratch = vec![0.0; k];
        for j in 0..k {
            alpha[j] = self.transition.initial()[j].ln() + e[j];
        }
        for (t, &gap) in gaps.iter().enumerate() {
            self.ln_trans(gap as f64, &mut trans)?;
            for j in 0..k {
                for (i, s) in scratch.iter_mut().enumerate() {
                    *s = alpha[t * k + i] + trans[i * k + j];
                }
                alpha[(t + 1) * k + j] = log_sum_exp(&scratch) + e[(t + 1) * k + j];
            }
        }
        let ll = log_sum_exp(&alpha[(n - 1) * k..n * k]);
        if !ll.is_finite() {
            return Err(Error::Model(format!("non-finite track log-likelihood {ll}")));
        }

        let mut gamma = vec![vec![0.0; k]; n];
        let mut beta = vec![0.0; k];
        let mut beta_prev = vec![0.0; k];
        for j in 0..k {
            gamma[n - 1][j] = (alpha[(n - 1) * k + j] - ll).exp();
        }
        for t in (0..n - 1).rev() {
            self.ln_trans(gaps[t] as f64, &mut trans)?;
            for i in 0..k {
                for (j, s) in scratch.iter_mut().enumerate() {
                    *s = trans[i * k + j] + e[(t + 1) * k + j] + beta_prev[j];
                }
                beta[i] = log_sum_exp(&scratch);
            }
            for j in 0..k {
                gamma[t][j] = (alpha[t * k + j] + beta[j] - ll).exp();
            }
            std::mem::swap(&mut beta, &mut beta_prev);
        }
        Ok((gamma, ll))
    }
}

/// Result of Viterbi decoding.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub path: Vec<usize>,
    pub path_loglik: f64,
    pub total_loglik: f64,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Which parameters Baum-Welch may update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LearnSet {
    pub initial: bool,
    pub p_hom_loss: bool,
    pub p_hom_ret: bool,
    pub cn_sigma: bool,
    pub cn_means: bool,
}

impl LearnSet {
    pub fn any(&self) -> bool {
        self.initial || self.p_hom_loss || self.p_hom_ret || self.cn_sigma || self.cn_means
    }
}

#[derive(Debug, Clone)]
pub struct EmOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub learn: LearnSet,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { max_iter: 50, tol: 1e-4, learn: LearnSet::default() }
    }
}

const PROB_CLAMP: f64 = 1e-4;

#[derive(Default)]
struct EmStats {
    init: Vec<f64>,
    n_tracks: f64,
    hom_w: [f64; 2],  // by regime: 0 = loss, 1 = ret
    call_w: [f64; 2],
    sigma_num: f64,
    sigma_den: f64,
    mean_num: [f64; 3],
    mean_den: [f64; 3],
}

/// Baum-Welch updates restricted to the requested parameter subset, pooling
/// sufficient statistics over all tracks.
///
/// Returns the fitted model and the per-iteration log-likelihood trace
/// (initial value first). Stops after `max_iter` iterations or when the gain
/// drops below `tol`. Learned probabilities are kept inside
/// `[1e-4, 1 - 1e-4]` and sigma at or above `1e-4`.
pub fn em_fit(
    model: &HmmModel,
    tracks: &[SnpTrack],
    options: &EmOptions,
) -> Result<(HmmModel, Vec<f64>)> {
    if tracks.is_empty() {
        return Err(Error::Em("no tracks supplied".into()));
    }
    let mut model = model.clone();
    let (mut stats, ll0) = e_step(&model, tracks)?;
    let mut trace = vec![ll0];
    if !options.learn.any() || options.max_iter == 0 {
        return Ok((model, trace));
    }
    let mut ll_prev = ll0;
    for _ in 0..options.max_iter {
        m_step(&mut model, &stats, options.learn)?;
        let (new_stats, ll) = e_step(&model, tracks)?;
        if !ll.is_finite() {
            return Err(Error::Em(format!("non-finite log-likelihood {ll}")));
        }
        trace.push(ll);
        stats = new_stats;
        let gain = ll - ll_prev;
        ll_prev = ll;
        if gain < options.tol {
            break;
        }
    }
    Ok((model, trace))
}

fn e_step(model: &HmmModel, tracks: &[SnpTrack]) -> Result<(EmStats, f64)> {
    let k = model.n_states();
    let space = model.state_space;
    let mut stats = EmStats { init: vec![0.0; k], n_tracks: tracks.len() as f64, ..Default::default() };
    let mut total_ll = 0.0;
    for track in tracks {
        let (gamma, ll) = model.forward_backward(track)?;
        total_ll += ll;
        for (acc, &g0) in stats.init.iter_mut().zip(&gamma[0]) {
            *acc += g0;
        }
        for (t, obs) in track.observations.iter().enumerate() {
            let weight_scale = match (model.ice_enabled, obs.cn_scale) {
                (true, Some(c)) => c,
                _ => 1.0,
            };
            let inv_c2 = 1.0 / (weight_scale * weight_scale);
            for (j, &g) in gamma[t].iter().enumerate() {
                if let Some(regime) = space.regime(j) {
                    let r = regime as usize;
                    match obs.gt {
                        Some(crate::snp_data::GenotypeCall::Hom) => {
                            stats.hom_w[r] += g;
                            stats.call_w[r] += g;
                        }
                        Some(crate::snp_data::GenotypeCall::Het) => {
                            stats.call_w[r] += g;
                        }
                        _ => {}
                    }
                }
                if let (Some(level), Some(x)) = (space.cn_level(j), obs.cn_log2) {
                    let li = level.index();
                    let mu = model.cn_params.means[li];
                    stats.sigma_num += g * (x - mu) * (x - mu) * inv_c2;
                    stats.sigma_den += g;
                    stats.mean_num[li] += g * x * inv_c2;
                    stats.mean_den[li] += g * inv_c2;
                }
            }
        }
    }
    Ok((stats, total_ll))
}

fn m_step(model: &mut HmmModel, stats: &EmStats, learn: LearnSet) -> Result<()> {
    if learn.initial {
        let mut initial: Vec<f64> = stats.init.iter().map(|v| (v / stats.n_tracks).max(1e-8)).collect();
        let sum: f64 = initial.iter().sum();
        initial.iter_mut().for_each(|p| *p /= sum);
        // absorb normalization residue so the sum check passes exactly
        let residue = 1.0 - initial.iter().sum::<f64>();
        if let Some(first) = initial.first_mut() {
            *first += residue;
        }
        model.transition.set_initial(initial)?;
    }
    let regime_p = |r: usize| -> Option<f64> {
        if stats.call_w[r] > 0.0 {
            Some((stats.hom_w[r] / stats.call_w[r]).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
        } else {
            None
        }
    };
    let mut p_loss = model.gt_params.p_hom_loss;
    let mut p_ret = model.gt_params.p_hom_ret;
    if learn.p_hom_loss {
        if let Some(p) = regime_p(crate::emissions::GenotypeRegime::Loss as usize) {
            p_loss = p;
        }
    }
    if learn.p_hom_ret {
        if let Some(p) = regime_p(crate::emissions::GenotypeRegime::Ret as usize) {
            p_ret = p;
        }
    }
    if learn.p_hom_loss || learn.p_hom_ret {
        let floor = model.gt_params.density_floor;
        model.gt_params = GenotypeEmissionParams::new(p_loss, p_ret)
            .map_err(|e| Error::Em(format!("genotype update rejected: {e}")))?;
        model.gt_params.density_floor = floor;
    }
    if (learn.cn_sigma || learn.cn_means) && stats.sigma_den > 0.0 {
        let mut means = model.cn_params.means;
        if learn.cn_means {
            for (li, mean) in means.iter_mut().enumerate() {
                if stats.mean_den[li] > 0.0 {
                    *mean = stats.mean_num[li] / stats.mean_den[li];
                }
            }
        }
        let sigma = if learn.cn_sigma {
            (stats.sigma_num / stats.sigma_den).sqrt().max(PROB_CLAMP)
        } else {
            model.cn_params.sigma
        };
        let floor = model.cn_params.density_floor;
        model.cn_params = CopyNumberEmissionParams::new(means, sigma)
            .map_err(|e| Error::Em(format!("copy-number update rejected: {e}")))?;
        model.cn_params.density_floor = floor;
    }
    Ok(())
}
