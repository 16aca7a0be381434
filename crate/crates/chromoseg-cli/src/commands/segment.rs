use std::fmt::Write as _;
use std::io::Write as _;

use anyhow::{bail, Context, Result};
use chromoseg::{
    em_fit, parse_snp_table, path_to_segments, robust_sigma, CopyNumberEmissionParams, EmOptions,
    GenotypeEmissionParams, HmmModel, LearnSet, ParseOptions, SnpTrack, StateSpace,
    TransitionParams,
};

use crate::config::{parse_f64_list, FileConfig};
use crate::output::{header, OutputSet};
use crate::SegmentArgs;

const KEYS: &[&str] = &[
    "input",
    "out",
    "model",
    "ice",
    "ref",
    "seed",
    "distance_scale_bp",
    "theta_rate",
    "initial_probs",
    "p_hom_loss",
    "p_hom_ret",
    "cn_sigma",
    "density_floor",
    "em",
    "em_max_iter",
    "em_tol",
    "em_learn",
];

fn parse_space(token: &str) -> Result<StateSpace> {
    match token {
        "gt" => Ok(StateSpace::GenotypeOnly),
        "cn" => Ok(StateSpace::CopyNumberOnly),
        "joint" => Ok(StateSpace::Joint),
        other => bail!("unknown model '{other}' (expected gt, cn, or joint)"),
    }
}

fn parse_learn_set(raw: &str) -> Result<LearnSet> {
    let mut learn = LearnSet::default();
    for item in raw.split(',') {
        match item.trim() {
            "initial" => learn.initial = true,
            "p_hom_loss" => learn.p_hom_loss = true,
            "p_hom_ret" => learn.p_hom_ret = true,
            "cn_sigma" => learn.cn_sigma = true,
            "cn_means" => learn.cn_means = true,
            other => bail!("unknown EM-learnable parameter '{other}'"),
        }
    }
    Ok(learn)
}

pub fn run(args: SegmentArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    file.assert_known(KEYS)?;

    let input = match args.input.or(file.get("input")?) {
        Some(p) => p,
        None => bail!("missing required --input table"),
    };
    let out = match args.out.or(file.get("out")?) {
        Some(p) => p,
        None => bail!("missing required --out directory"),
    };
    let space = parse_space(&args.model.or(file.get("model")?).unwrap_or_else(|| "joint".into()))?;
    let ice = args.ice || file.get_bool("ice")?;
    let reference_path = args.reference.or(file.get("ref")?);
    let seed = args.seed.or(file.get("seed")?).unwrap_or(0);

    let reader = std::fs::File::open(&input)
        .with_context(|| format!("cannot open input {}", input.display()))?;
    let tracks = parse_snp_table(std::io::BufReader::new(reader), &ParseOptions::default())?;

    let has_gt = tracks.iter().any(|t| t.observations.iter().any(|o| o.gt.is_some()));
    let has_gt_scores =
        tracks.iter().any(|t| t.observations.iter().any(|o| o.gt_score.is_some()));
    let has_cn = tracks.iter().any(|t| t.observations.iter().any(|o| o.cn_log2.is_some()));
    match space {
        StateSpace::GenotypeOnly if !has_gt => {
            bail!("model gt requires a genotype column with calls")
        }
        StateSpace::CopyNumberOnly | StateSpace::Joint if !has_cn => {
            if space == StateSpace::CopyNumberOnly {
                bail!("model cn requires a copy-number column with values");
            }
            if !has_gt {
                bail!("model joint requires genotype or copy-number data");
            }
        }
        _ => {}
    }
    if ice && has_gt_scores && reference_path.is_none() {
        bail!("--ice with genotype confidence scores requires --ref");
    }
    let reference = if ice && reference_path.is_some() {
        Some(super::load_reference(reference_path.as_deref())?)
    } else {
        None
    };

    // transition parameters
    let mut transition = HmmModel::default_transition(space);
    if let Some(raw) = args.initial_probs.or(file.get("initial_probs")?) {
        let probs = parse_f64_list(&raw)?;
        if probs.len() != space.n_states() {
            bail!("initial_probs has {} entries, model needs {}", probs.len(), space.n_states());
        }
        transition = TransitionParams::new(
            probs,
            transition.distance_scale_bp,
            transition.theta_rate,
        )?;
    }
    if let Some(v) = args.distance_scale_bp.or(file.get("distance_scale_bp")?) {
        transition.distance_scale_bp = v;
    }
    if let Some(v) = args.theta_rate.or(file.get("theta_rate")?) {
        transition.theta_rate = v;
    }

    // emission parameters
    let p_hom_loss = args.p_hom_loss.or(file.get("p_hom_loss")?).unwrap_or(0.99);
    let p_hom_ret = args.p_hom_ret.or(file.get("p_hom_ret")?).unwrap_or(0.7);
    let mut gt_params = GenotypeEmissionParams::new(p_hom_loss, p_hom_ret)?;
    let cn_sigma_config = args.cn_sigma.or(file.get("cn_sigma")?);
    let uses_cn = space != StateSpace::GenotypeOnly && has_cn;
    let (sigma, sigma_source) = match (cn_sigma_config, uses_cn) {
        (Some(v), _) => (v, "config"),
        (None, true) => {
            let values = tracks
                .iter()
                .flat_map(|t| t.observations.iter().filter_map(|o| o.cn_log2));
            (robust_sigma(values)?, "robust-estimate")
        }
        (None, false) => (0.25, "unused-default"),
    };
    let mut cn_params = CopyNumberEmissionParams::with_sigma(sigma)?;
    if let Some(floor) = args.density_floor.or(file.get("density_floor")?) {
        if !floor.is_finite() || floor <= 0.0 {
            bail!("density_floor must be positive");
        }
        gt_params.density_floor = floor;
        cn_params.density_floor = floor;
    }

    let mut model = HmmModel::new(space, transition, gt_params, cn_params, reference, ice)?;

    // optional EM refit
    let em_enabled = args.em || file.get_bool("em")?;
    let mut em_trace = None;
    if em_enabled {
        let learn = match args.em_learn.or(file.get("em_learn")?) {
            Some(raw) => parse_learn_set(&raw)?,
            None => LearnSet {
                p_hom_loss: space != StateSpace::CopyNumberOnly,
                p_hom_ret: space != StateSpace::CopyNumberOnly,
                cn_sigma: uses_cn,
                ..Default::default()
            },
        };
        let options = EmOptions {
            max_iter: args.em_max_iter.or(file.get("em_max_iter")?).unwrap_or(50),
            tol: args.em_tol.or(file.get("em_tol")?).unwrap_or(1e-4),
            learn,
        };
        eprintln!("refitting parameters by EM (max {} iterations)", options.max_iter);
        let (fitted, trace) = em_fit(&model, &tracks, &options)?;
        model = fitted;
        em_trace = Some(trace);
    }

    let resolved = [
        ("input", input.display().to_string()),
        ("model", format!("{space:?}")),
        ("ice", ice.to_string()),
        (
            "ref",
            reference_path
                .as_deref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "none".into()),
        ),
        ("distance_scale_bp", model.transition.distance_scale_bp.to_string()),
        ("theta_rate", model.transition.theta_rate.to_string()),
        (
            "initial_probs",
            model
                .transition
                .initial()
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("p_hom_loss", model.gt_params.p_hom_loss.to_string()),
        ("p_hom_ret", model.gt_params.p_hom_ret.to_string()),
        ("cn_sigma", format!("{}({sigma_source})", model.cn_params.sigma)),
        ("density_floor", model.gt_params.density_floor.to_string()),
        ("em", em_enabled.to_string()),
    ];
    let head = header("segment", seed, &resolved);

    let mut segments_out = String::new();
    writeln!(segments_out, "# {head}")?;
    writeln!(segments_out, "chrom\tstart\tend\tstate\tn_snps\tmean_cn_log2\thet_fraction")?;
    let mut per_snp_out = String::new();
    writeln!(per_snp_out, "# {head}")?;
    let posterior_cols: Vec<String> =
        space.labels().iter().map(|l| format!("posterior_{l}")).collect();
    writeln!(per_snp_out, "chrom\tpos\tstate\t{}", posterior_cols.join("\t"))?;
    let mut summary = String::new();
    writeln!(summary, "# {head}")?;
    writeln!(summary, "tracks\t{}", tracks.len())?;
    writeln!(summary, "cn_sigma\t{}\t{sigma_source}", model.cn_params.sigma)?;
    if let Some(trace) = &em_trace {
        let rendered: Vec<String> = trace.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(summary, "em_loglik_trace\t{}", rendered.join(","))?;
        writeln!(summary, "em_p_hom_loss\t{}", model.gt_params.p_hom_loss)?;
        writeln!(summary, "em_p_hom_ret\t{}", model.gt_params.p_hom_ret)?;
    }

    for track in &tracks {
        decode_track(&model, track, &mut segments_out, &mut per_snp_out, &mut summary)?;
    }

    let mut outputs = OutputSet::new(&out);
    outputs.add("segments.tsv", segments_out.into_bytes());
    outputs.add("per_snp.tsv", per_snp_out.into_bytes());
    outputs.add("run_summary.txt", summary.into_bytes());
    for path in outputs.flush()? {
        writeln!(std::io::stderr(), "wrote {}", path.display())?;
    }
    Ok(())
}

fn decode_track(
    model: &HmmModel,
    track: &SnpTrack,
    segments_out: &mut String,
    per_snp_out: &mut String,
    summary: &mut String,
) -> Result<()> {
    eprintln!("decoding {} ({} SNPs)", track.chromosome, track.len());
    let decoded = model.viterbi(track)?;
    let posteriors = model.posterior_probs(track)?;
    let segments = path_to_segments(track, &decoded.path, model.state_space)?;
    for s in &segments {
        writeln!(
            segments_out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.chromosome,
            s.start_bp,
            s.end_bp,
            s.label,
            s.n_snps,
            super::na(s.mean_cn_log2),
            super::na(s.het_fraction)
        )?;
    }
    for ((obs, &state), row) in
        track.observations.iter().zip(&decoded.path).zip(&posteriors)
    {
        let rendered: Vec<String> = row.iter().map(|p| format!("{p:.6}")).collect();
        writeln!(
            per_snp_out,
            "{}\t{}\t{}\t{}",
            track.chromosome,
            obs.position,
            model.state_space.label(state),
            rendered.join("\t")
        )?;
    }
    writeln!(
        summary,
        "track\t{}\tn_snps\t{}\tsegments\t{}\tpath_loglik\t{:.6}\ttotal_loglik\t{:.6}",
        track.chromosome,
        track.len(),
        segments.len(),
        decoded.path_loglik,
        decoded.total_loglik
    )?;
    Ok(())
}
