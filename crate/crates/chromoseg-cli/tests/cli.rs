//! End-to-end tests of the binary: subcommand wiring, config precedence,
//! validation failures, and byte-level reproducibility of simulate and bench.

use std::path::Path;
use std::process::{Command, Output};

fn chromoseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chromoseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    for out in [&out1, &out2] {
        let status = chromoseg(&[
            "simulate",
            "--seed",
            "7",
            "--n-snps",
            "1500",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    }
    for name in ["dataset.tsv", "truth.tsv", "reference.tsv"] {
        assert_eq!(read(&out1.join(name)), read(&out2.join(name)), "{name} differs");
    }
}

#[test]
fn segment_recovers_region_b_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let sim_out = dir.path().join("sim");
    let seg_out = dir.path().join("seg");
    let status = chromoseg(&["simulate", "--seed", "7", "--out", sim_out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    let status = chromoseg(&[
        "segment",
        "--model",
        "joint",
        "--ice",
        "--input",
        sim_out.join("dataset.tsv").to_str().unwrap(),
        "--ref",
        sim_out.join("reference.tsv").to_str().unwrap(),
        "--out",
        seg_out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    let segments = String::from_utf8(read(&seg_out.join("segments.tsv"))).unwrap();
    let rows: Vec<(String, usize)> = segments
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("chrom"))
        .map(|l| {
            let fields: Vec<&str> = l.split('\t').collect();
            (fields[3].to_string(), fields[4].parse().unwrap())
        })
        .collect();
    let pattern_found = rows.windows(3).any(|w| {
        w[0] == ("deletion".to_string(), 49)
            && w[1] == ("normal".to_string(), 2)
            && w[2] == ("deletion".to_string(), 49)
    });
    assert!(pattern_found, "region-B pattern not found in: {rows:?}");

    // per-SNP output carries one posterior column per joint state
    let per_snp = String::from_utf8(read(&seg_out.join("per_snp.tsv"))).unwrap();
    let head = per_snp.lines().nth(1).unwrap();
    assert_eq!(
        head,
        "chrom\tpos\tstate\tposterior_deletion\tposterior_cn_loh\tposterior_normal\tposterior_amplification"
    );
}

#[test]
fn ice_without_reference_fails_when_scores_present() {
    let dir = tempfile::tempdir().unwrap();
    let sim_out = dir.path().join("sim");
    let status = chromoseg(&[
        "simulate",
        "--seed",
        "3",
        "--n-snps",
        "800",
        "--out",
        sim_out.to_str().unwrap(),
    ]);
    assert!(status.status.success());

    let status = chromoseg(&[
        "segment",
        "--model",
        "joint",
        "--ice",
        "--input",
        sim_out.join("dataset.tsv").to_str().unwrap(),
        "--out",
        dir.path().join("seg").to_str().unwrap(),
    ]);
    assert!(!status.status.success());
    let message = String::from_utf8_lossy(&status.stderr);
    assert!(message.contains("requires --ref"), "stderr: {message}");
    assert!(!dir.path().join("seg").join("segments.tsv").exists(), "no partial outputs");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "n_snps = 1200\nseed = 5\n").unwrap();
    let out = dir.path().join("sim");
    let status = chromoseg(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--n-snps",
        "1500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let dataset = String::from_utf8(read(&out.join("dataset.tsv"))).unwrap();
    let rows = dataset.lines().filter(|l| !l.starts_with('#') && !l.starts_with("chrom")).count();
    assert_eq!(rows, 1500);
    // the seed still comes from the file
    let header = dataset.lines().next().unwrap();
    assert!(header.contains("seed=5"), "header: {header}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "n_snsp = 1200\n").unwrap();
    let status = chromoseg(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("sim").to_str().unwrap(),
    ]);
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("unknown config key"));
}

#[test]
fn bench_row_counts_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("b1");
    let out2 = dir.path().join("b2");
    for out in [&out1, &out2] {
        let status = chromoseg(&[
            "bench",
            "--seed",
            "11",
            "--sizes",
            "2,3",
            "--datasets-per-size",
            "2",
            "--k-values",
            "0.4,1.3",
            "--n-snps",
            "600",
            "--null-arms",
            "2",
            "--null-n-snps",
            "300",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    }
    let delta = String::from_utf8(read(&out1.join("delta_loglik.csv"))).unwrap();
    let rows = delta.lines().filter(|l| !l.starts_with('#') && !l.starts_with("method")).count();
    // sizes x datasets x methods x K
    assert_eq!(rows, 2 * 2 * 2 * 2);
    let fp = String::from_utf8(read(&out1.join("fp_counts.csv"))).unwrap();
    let fp_rows = fp.lines().filter(|l| !l.starts_with('#') && !l.starts_with("method")).count();
    assert_eq!(fp_rows, 2 * 2);

    for name in ["delta_loglik.csv", "fp_counts.csv"] {
        assert_eq!(read(&out1.join(name)), read(&out2.join(name)), "{name} differs");
    }
}

#[test]
fn train_ref_produces_readable_model() {
    let dir = tempfile::tempdir().unwrap();
    let triples = dir.path().join("triples.tsv");
    let mut body = String::from("called\ttruth\tscore\n");
    for i in 0..120 {
        let jitter = (i % 17) as f64 * 0.13;
        body += &format!("HOM\tHOM\t{}\n", 3.0 + jitter);
        body += &format!("HET\tHET\t{}\n", 2.5 + jitter);
        body += &format!("HOM\tHET\t{}\n", 0.4 + jitter * 0.2);
        body += &format!("HET\tHOM\t{}\n", 0.5 + jitter * 0.2);
    }
    std::fs::write(&triples, body).unwrap();
    let out = dir.path().join("model");
    let status = chromoseg(&[
        "train-ref",
        "--input",
        triples.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let file = std::fs::File::open(out.join("reference.tsv")).unwrap();
    let model = chromoseg::read_reference(std::io::BufReader::new(file)).unwrap();
    assert!((model.prob_hom_given_called(chromoseg::GenotypeClass::Hom) - 0.5).abs() < 1e-12);
}

#[test]
fn missing_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let status = chromoseg(&[
        "segment",
        "--input",
        dir.path().join("nope.tsv").to_str().unwrap(),
        "--out",
        dir.path().join("seg").to_str().unwrap(),
    ]);
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("cannot open input"));
}

#[test]
fn segment_runs_vanilla_genotype_model() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("gt.tsv");
    let mut body = String::from("chrom\tpos\tgt\tgt_conf\tcn\tcn_se\n");
    for i in 0..60 {
        let call = if i >= 20 && i < 40 { "AA" } else if i % 3 == 0 { "AB" } else { "BB" };
        body += &format!("chr2\t{}\t{call}\tNA\tNA\tNA\n", 1000 + i * 25_000);
    }
    std::fs::write(&input, body).unwrap();
    let out = dir.path().join("seg");
    let status = chromoseg(&[
        "segment",
        "--model",
        "gt",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let segments = String::from_utf8(read(&out.join("segments.tsv"))).unwrap();
    assert!(segments.lines().any(|l| l.contains("retention") || l.contains("loss")));
}
