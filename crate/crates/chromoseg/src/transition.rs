//! Distance-dependent transition probabilities under the
//! instability-selection model.
//!
//! An adjacent SNP is informative for its neighbor with probability
//! `1 - theta(d)`, in which case the hidden state is carried over unchanged;
//! otherwise the state is redrawn from the initial distribution. Marginalizing
//! the informativeness indicator gives the closed-form row-stochastic matrix
//! built by [`transition_matrix`].

use crate::error::{Error, Result};

pub const DEFAULT_DISTANCE_SCALE_BP: f64 = 1e8;
pub const DEFAULT_THETA_RATE: f64 = 2.0;

/// Initial state distribution plus the distance model for `theta(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionParams {
    initial: Vec<f64>,
    /// Base pairs per distance unit (default 100 Mb).
    pub distance_scale_bp: f64,
    /// Rate constant in `theta(d) = 1 - exp(-rate * d)`.
    pub theta_rate: f64,
}

impl TransitionParams {
    pub fn new(initial: Vec<f64>, distance_scale_bp: f64, theta_rate: f64) -> Result<TransitionParams> {
        if initial.len() < 2 {
            return Err(Error::Model(format!(
                "need at least 2 states, got {}",
                initial.len()
            )));
        }
        if initial.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Model("initial probabilities must lie in [0, 1]".into()));
        }
        let sum: f64 = initial.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Model(format!(
                "initial probabilities sum to {sum}, expected 1"
            )));
        }
        if !distance_scale_bp.is_finite() || distance_scale_bp <= 0.0 {
            return Err(Error::Model("distance scale must be positive".into()));
        }
        if !theta_rate.is_finite() || theta_rate <= 0.0 {
            return Err(Error::Model("theta rate must be positive".into()));
        }
        Ok(TransitionParams { initial, distance_scale_bp, theta_rate })
    }

    /// Uniform-over-abnormal defaults: the normal-like state receives
    /// `p_normal` and the rest is split evenly.
    pub fn with_default_initial(
        n_states: usize,
        normal_index: usize,
        p_normal: f64,
    ) -> Result<TransitionParams> {
        let rest = (1.0 - p_normal) / (n_states as f64 - 1.0);
        let initial = (0..n_states)
            .map(|i| if i == normal_index { p_normal } else { rest })
            .collect();
        TransitionParams::new(initial, DEFAULT_DISTANCE_SCALE_BP, DEFAULT_THETA_RATE)
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn set_initial(&mut self, initial: Vec<f64>) -> Result<()> {
        let replacement = TransitionParams::new(initial, self.distance_scale_bp, self.theta_rate)?;
        self.initial = replacement.initial;
        Ok(())
    }
}

/// Row-stochastic transition matrix for one inter-SNP gap.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    values: Vec<f64>,
}

impl TransitionMatrix {
    pub fn n_states(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.values[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.values[from * self.n..(from + 1) * self.n]
    }
}

/// Probability that a SNP is uninformative for its neighbor at the given gap.
pub fn theta(gap_bp: f64, scale_bp: f64, rate: f64) -> Result<f64> {
    if !gap_bp.is_finite() || gap_bp < 0.0 {
        return Err(Error::Model(format!("negative gap {gap_bp}")));
    }
    if !scale_bp.is_finite() || scale_bp <= 0.0 {
        return Err(Error::Model("distance scale must be positive".into()));
    }
    Ok(-(-rate * gap_bp / scale_bp).exp_m1())
}

/// Transition matrix for one gap: stay with probability `1 - theta`, else
/// redraw from the initial distribution.
pub fn transition_matrix(gap_bp: f64, params: &TransitionParams) -> Result<TransitionMatrix> {
    let th = theta(gap_bp, params.distance_scale_bp, params.theta_rate)?;
    let n = params.n_states();
    let mut values = vec![0.0; n * n];
    for (j, row) in values.chunks_mut(n).enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = params.initial[k] * th;
        }
        row[j] += 1.0 - th;
    }
    Ok(TransitionMatrix { n, values })
}
