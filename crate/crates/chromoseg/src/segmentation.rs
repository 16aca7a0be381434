//! Collapse decoded state paths into genomic segments and compute the
//! fixed-path deletion detection statistic.

use std::ops::Range;

use crate::emissions::StateSpace;
use crate::error::{Error, Result};
use crate::hmm::HmmModel;
use crate::snp_data::{GenotypeCall, SnpTrack};

/// A maximal run of SNPs sharing one decoded state.
///
/// Boundaries are the positions of the first and last member SNP; the data
/// cannot localize breakpoints beyond observed SNPs. `het_fraction` counts
/// heterozygous calls among called SNPs and is absent when the segment has
/// none; `mean_cn_log2` is absent when no member SNP carries a copy-number
/// estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub chromosome: String,
    pub start_bp: u64,
    pub end_bp: u64,
    pub state: usize,
    pub label: &'static str,
    pub n_snps: usize,
    pub mean_cn_log2: Option<f64>,
    pub het_fraction: Option<f64>,
}

/// Run-length encode a decoded path into segments with summary statistics.
pub fn path_to_segments(
    track: &SnpTrack,
    path: &[usize],
    space: StateSpace,
) -> Result<Vec<Segment>> {
    if path.len() != track.len() {
        return Err(Error::Model(format!(
            "path length {} does not match track length {}",
            path.len(),
            track.len()
        )));
    }
    if let Some(&bad) = path.iter().find(|&&s| s >= space.n_states()) {
        return Err(Error::Model(format!("state index {bad} out of range")));
    }
    let mut segments = Vec::new();
    let mut start = 0usize;
    for i in 1..=path.len() {
        if i < path.len() && path[i] == path[start] {
            continue;
        }
        let members = &track.observations[start..i];
        let cn: Vec<f64> = members.iter().filter_map(|o| o.cn_log2).collect();
        let mean_cn_log2 =
            (!cn.is_empty()).then(|| cn.iter().sum::<f64>() / cn.len() as f64);
        let called = members
            .iter()
            .filter(|o| matches!(o.gt, Some(GenotypeCall::Hom) | Some(GenotypeCall::Het)))
            .count();
        let het =
            members.iter().filter(|o| o.gt == Some(GenotypeCall::Het)).count();
        let het_fraction = (called > 0).then(|| het as f64 / called as f64);
        segments.push(Segment {
            chromosome: track.chromosome.clone(),
            start_bp: members[0].position,
            end_bp: members[members.len() - 1].position,
            state: path[start],
            label: space.label(path[start]),
            n_snps: i - start,
            mean_cn_log2,
            het_fraction,
        });
        start = i;
    }
    Ok(segments)
}

/// Difference in fixed-path log-likelihoods between placing the deletion
/// state inside `window` (normal elsewhere) and the all-normal path. Positive
/// values favor the deletion call. Both boundary transitions are included.
pub fn deletion_delta_loglik(
    model: &HmmModel,
    track: &SnpTrack,
    window: Range<usize>,
) -> Result<f64> {
    let space = model.state_space;
    let deletion = space.deletion_state().ok_or_else(|| {
        Error::Model("deletion statistic needs a copy-number-aware state space".into())
    })?;
    let normal = space.normal_state();
    if window.start >= window.end || window.end > track.len() {
        return Err(Error::Model(format!(
            "window {}..{} invalid for track of length {}",
            window.start,
            window.end,
            track.len()
        )));
    }
    let mut with_deletion = vec![normal; track.len()];
    with_deletion[window].fill(deletion);
    let null = vec![normal; track.len()];
    Ok(model.path_loglik(track, &with_deletion)? - model.path_loglik(track, &null)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emissions::{CopyNumberEmissionParams, GenotypeEmissionParams};
    use crate::hmm::HmmModel;
    use crate::snp_data::SnpObservation;
    use crate::transition::TransitionParams;

    fn track_with(calls: &[(GenotypeCall, f64)]) -> SnpTrack {
        let observations = calls
            .iter()
            .enumerate()
            .map(|(i, &(call, cn))| {
                SnpObservation::from_log2_cn(1 + i as u64 * 20_000, Some(call), None, Some(cn), None)
                    .unwrap()
            })
            .collect();
        SnpTrack::new("chr1", observations).unwrap()
    }

    #[test]
    fn constant_path_is_one_segment() {
        let track = track_with(&[(GenotypeCall::Hom, 1.0); 100]);
        let segments = path_to_segments(&track, &vec![2; 100], StateSpace::Joint).unwrap();
        assert_eq!(segments.len(), 1);
        assert_eq!(segments[0].n_snps, 100);
        assert_eq!(segments[0].label, "normal");
    }

    #[test]
    fn run_lengths_match_region_layout() {
        let mut path = vec![0usize; 99];
        path.extend(vec![1; 2]);
        path.extend(vec![0; 99]);
        let track = track_with(&[(GenotypeCall::Hom, 0.0); 200]);
        let segments = path_to_segments(&track, &path, StateSpace::GenotypeOnly).unwrap();
        let sizes: Vec<usize> = segments.iter().map(|s| s.n_snps).collect();
        let labels: Vec<&str> = segments.iter().map(|s| s.label).collect();
        assert_eq!(sizes, vec![99, 2, 99]);
        assert_eq!(labels, vec!["loss", "retention", "loss"]);
    }

    #[test]
    fn alternating_path_yields_one_segment_each() {
        let n = 17;
        let path: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let track = track_with(&[(GenotypeCall::Hom, 1.0); 17]);
        let segments = path_to_segments(&track, &path, StateSpace::GenotypeOnly).unwrap();
        assert_eq!(segments.len(), n);
        assert!(segments.iter().all(|s| s.n_snps == 1));
    }

    #[test]
    fn segments_partition_track_and_rebuild_path() {
        let path = vec![2, 2, 0, 0, 0, 3, 2, 2, 1, 1];
        let track = track_with(&[(GenotypeCall::Hom, 1.0); 10]);
        let segments = path_to_segments(&track, &path, StateSpace::Joint).unwrap();
        assert_eq!(segments.iter().map(|s| s.n_snps).sum::<usize>(), track.len());
        let mut rebuilt = Vec::new();
        for s in &segments {
            rebuilt.extend(std::iter::repeat_n(s.state, s.n_snps));
        }
        assert_eq!(rebuilt, path);
        for w in segments.windows(2) {
            assert_ne!(w[0].state, w[1].state);
        }
    }

    #[test]
    fn summary_statistics() {
        let track = track_with(&[
            (GenotypeCall::Hom, 0.2),
            (GenotypeCall::Het, 0.4),
            (GenotypeCall::NoCall, 0.6),
        ]);
        let segments = path_to_segments(&track, &[2, 2, 2], StateSpace::Joint).unwrap();
        let s = &segments[0];
        assert!((s.mean_cn_log2.unwrap() - 0.4).abs() < 1e-12);
        // NoCall excluded from the denominator
        assert!((s.het_fraction.unwrap() - 0.5).abs() < 1e-12);
    }

    fn cn_model() -> HmmModel {
        HmmModel::new(
            StateSpace::CopyNumberOnly,
            HmmModel::default_transition(StateSpace::CopyNumberOnly),
            GenotypeEmissionParams::default(),
            CopyNumberEmissionParams::default(),
            None,
            true,
        )
        .unwrap()
    }

    #[test]
    fn delta_is_antisymmetric() {
        let track = track_with(&[(GenotypeCall::Hom, 0.9); 30]);
        let model = cn_model();
        let delta = deletion_delta_loglik(&model, &track, 10..14).unwrap();
        let mut del_path = vec![1usize; 30];
        del_path[10..14].fill(0);
        let null = vec![1usize; 30];
        let reversed = model.path_loglik(&track, &null).unwrap()
            - model.path_loglik(&track, &del_path).unwrap();
        assert!((delta + reversed).abs() < 1e-12);
    }

    #[test]
    fn delta_with_uninformative_emissions_is_transition_cost() {
        // enormous scale factors flatten the copy-number channel
        let observations: Vec<SnpObservation> = (0..20)
            .map(|i| {
                SnpObservation::from_log2_cn(
                    1 + i as u64 * 20_000,
                    None,
                    None,
                    Some(1.0),
                    Some(1e6),
                )
                .unwrap()
            })
            .collect();
        let track = SnpTrack::new("chr1", observations).unwrap();
        let model = cn_model();
        let delta = deletion_delta_loglik(&model, &track, 8..11).unwrap();
        assert!(delta < 0.0, "pure transition cost must disfavor the deletion, got {delta}");
        // emission terms cancel to within the flattened channel's resolution
        let th = |gap: f64| {
            crate::transition::theta(gap, 1e8, 2.0).unwrap()
        };
        let pi = model.transition.initial();
        let gap = 20_000.0;
        let stay = (1.0 - th(gap) + pi[1] * th(gap)).ln();
        let expected = (pi[0] * th(gap)).ln() + (1.0 - th(gap) + pi[0] * th(gap)).ln() * 2.0
            + (pi[1] * th(gap)).ln()
            - 4.0 * stay;
        assert!((delta - expected).abs() < 1e-4, "delta {delta} expected {expected}");
    }

    #[test]
    fn whole_track_window_compares_single_state_paths() {
        let track = track_with(&[(GenotypeCall::Hom, 0.1); 12]);
        let model = cn_model();
        let delta = deletion_delta_loglik(&model, &track, 0..12).unwrap();
        let del = model.path_loglik(&track, &vec![0; 12]).unwrap();
        let null = model.path_loglik(&track, &vec![1; 12]).unwrap();
        assert!((delta - (del - null)).abs() < 1e-12);
        assert!(delta > 0.0, "deletion-like data must favor the deletion path");
    }

    #[test]
    fn invalid_window_is_error() {
        let track = track_with(&[(GenotypeCall::Hom, 1.0); 5]);
        let model = cn_model();
        assert!(deletion_delta_loglik(&model, &track, 3..3).is_err());
        assert!(deletion_delta_loglik(&model, &track, 2..9).is_err());
    }

    #[test]
    fn genotype_space_has_no_deletion_statistic() {
        let track = track_with(&[(GenotypeCall::Hom, 1.0); 5]);
        let model = HmmModel::new(
            StateSpace::GenotypeOnly,
            TransitionParams::new(vec![0.5, 0.5], 1e8, 2.0).unwrap(),
            GenotypeEmissionParams::default(),
            CopyNumberEmissionParams::default(),
            None,
            false,
        )
        .unwrap();
        assert!(deletion_delta_loglik(&model, &track, 1..3).is_err());
    }
}
