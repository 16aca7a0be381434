//! Property tests over randomly generated inputs.

use chromoseg::*;
use proptest::prelude::*;

fn arb_call() -> impl Strategy<Value = Option<GenotypeCall>> {
    prop_oneof![
        Just(None),
        Just(Some(GenotypeCall::Hom)),
        Just(Some(GenotypeCall::Het)),
        Just(Some(GenotypeCall::NoCall)),
    ]
}

prop_compose! {
    fn arb_observation()(
        call in arb_call(),
        gt_score in proptest::option::of(0.0f64..50.0),
        cn in proptest::option::of(0.01f64..12.0),
        cn_scale in proptest::option::of(0.05f64..5.0),
    ) -> (Option<GenotypeCall>, Option<f64>, Option<f64>, Option<f64>) {
        // keep the per-observation invariants satisfiable
        let gt_score = match call {
            Some(GenotypeCall::Hom) | Some(GenotypeCall::Het) => gt_score,
            _ => None,
        };
        let call = if cn.is_none() && call.is_none() { Some(GenotypeCall::Hom) } else { call };
        let cn_scale = if cn.is_some() { cn_scale } else { None };
        (call, gt_score, cn, cn_scale)
    }
}

prop_compose! {
    fn arb_track()(
        raw in proptest::collection::vec((1u64..1_000_000_000, arb_observation()), 1..40)
    ) -> SnpTrack {
        let mut seen = std::collections::BTreeMap::new();
        for (pos, obs) in raw {
            seen.entry(pos).or_insert(obs);
        }
        let observations = seen
            .into_iter()
            .map(|(pos, (call, gt_score, cn, cn_scale))| {
                SnpObservation::from_linear_cn(pos, call, gt_score, cn, cn_scale).unwrap()
            })
            .collect();
        SnpTrack::new("chrP", observations).unwrap()
    }
}

proptest! {
    #[test]
    fn serialize_parse_round_trip(track in arb_track()) {
        let mut buf = Vec::new();
        write_snp_table(&mut buf, std::slice::from_ref(&track), &["prop".into()]).unwrap();
        let reparsed = parse_snp_table(buf.as_slice(), &ParseOptions::default()).unwrap();
        prop_assert_eq!(reparsed.len(), 1);
        prop_assert_eq!(&reparsed[0], &track);
    }

    #[test]
    fn parsed_gaps_are_strictly_positive(track in arb_track()) {
        for gap in adjacent_distances(&track) {
            prop_assert!(gap > 0);
        }
    }

    #[test]
    fn genotype_vanilla_sums_to_one(
        p_loss in 0.86f64..0.999,
        p_ret in 0.2f64..0.85,
    ) {
        let params = GenotypeEmissionParams::new(p_loss, p_ret).unwrap();
        for regime in [GenotypeRegime::Loss, GenotypeRegime::Ret] {
            let total = genotype_loglik_vanilla(GenotypeCall::Hom, regime, &params).exp()
                + genotype_loglik_vanilla(GenotypeCall::Het, regime, &params).exp();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_is_sum_of_channel_terms(
        obs in arb_observation(),
        sigma in 0.05f64..0.8,
        state in 0usize..4,
    ) {
        let (call, gt_score, cn, cn_scale) = obs;
        let obs = SnpObservation::from_linear_cn(1, call, gt_score, cn, cn_scale).unwrap();
        let gt_params = GenotypeEmissionParams::default();
        let cn_params = CopyNumberEmissionParams::with_sigma(sigma).unwrap();
        let joint = joint_loglik(&obs, state, &gt_params, &cn_params, None).unwrap();
        let space = StateSpace::Joint;
        let mut expected = 0.0;
        if let (Some(level), Some(x)) = (space.cn_level(state), obs.cn_log2) {
            expected += cn_loglik_ice(x, obs.cn_scale, level, &cn_params).unwrap();
        }
        if let (Some(regime), Some(c)) = (space.regime(state), obs.gt) {
            expected += genotype_loglik_vanilla(c, regime, &gt_params);
        }
        prop_assert_eq!(joint, expected);
    }

    #[test]
    fn viterbi_never_beats_forward(track in arb_track(), seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut initial: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = initial.iter().sum();
        initial.iter_mut().for_each(|p| *p /= sum);
        let residue = 1.0 - initial.iter().sum::<f64>();
        initial[0] += residue;
        let model = HmmModel::new(
            StateSpace::Joint,
            TransitionParams::new(initial, 1e8, 2.0).unwrap(),
            GenotypeEmissionParams::default(),
            CopyNumberEmissionParams::default(),
            None,
            false,
        )
        .unwrap();
        let decoded = model.viterbi(&track).unwrap();
        prop_assert!(decoded.path_loglik <= decoded.total_loglik + 1e-9);
        prop_assert!(decoded.total_loglik.is_finite());
    }
}
