//! Domain types for SNP observations and ingestion of ordered per-chromosome
//! SNP tables.
//!
//! The on-disk format is tab-separated with a header row. Required columns are
//! `chrom` and `pos`; optional columns are `gt`, `gt_conf`, `cn`, `cn_se`.
//! Genotype tokens are `AA`, `AB`, `BB`, `NC` (biallelic homozygous calls
//! collapse to [`GenotypeCall::Hom`], `AB` to [`GenotypeCall::Het`]). Missing
//! optional cells are encoded as `NA`. The `cn` column is a linear-scale
//! copy-number estimate; it is converted to log2 internally (two copies map
//! to 1.0).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Biallelic genotype call with the allele identity collapsed away.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenotypeCall {
    Hom,
    Het,
    NoCall,
}

impl GenotypeCall {
    /// Parse one of the four accepted tokens.
    pub fn from_token(token: &str) -> Option<GenotypeCall> {
        match token {
            "AA" | "BB" => Some(GenotypeCall::Hom),
            "AB" => Some(GenotypeCall::Het),
            "NC" => Some(GenotypeCall::NoCall),
            _ => None,
        }
    }

    /// Canonical token used when writing tables (`Hom` serializes as `AA`).
    pub fn token(self) -> &'static str {
        match self {
            GenotypeCall::Hom => "AA",
            GenotypeCall::Het => "AB",
            GenotypeCall::NoCall => "NC",
        }
    }
}

/// One SNP's observed summaries.
///
/// At least one of the genotype call or the copy-number estimate is present.
/// The copy number is kept both as the linear value as ingested (`cn_linear`,
/// serialized verbatim so tables round-trip exactly) and as its log2
/// transform (`cn_log2`, the scale all emission models work on).
#[derive(Debug, Clone, PartialEq)]
pub struct SnpObservation {
    pub position: u64,
    pub gt: Option<GenotypeCall>,
    pub gt_score: Option<f64>,
    pub cn_linear: Option<f64>,
    pub cn_log2: Option<f64>,
    pub cn_scale: Option<f64>,
}

impl SnpObservation {
    /// Build an observation from a linear-scale copy-number estimate.
    pub fn from_linear_cn(
        position: u64,
        gt: Option<GenotypeCall>,
        gt_score: Option<f64>,
        cn_linear: Option<f64>,
        cn_scale: Option<f64>,
    ) -> Result<SnpObservation> {
        let cn_log2 = match cn_linear {
            Some(c) if c > 0.0 => Some(c.log2()),
            Some(c) => {
                return Err(Error::InvalidInput(format!(
                    "nonpositive copy-number estimate {c} (log2 undefined)"
                )))
            }
            None => None,
        };
        let obs = SnpObservation { position, gt, gt_score, cn_linear, cn_log2, cn_scale };
        obs.validate()?;
        Ok(obs)
    }

    /// Build an observation from a log2-scale copy-number estimate.
    pub fn from_log2_cn(
        position: u64,
        gt: Option<GenotypeCall>,
        gt_score: Option<f64>,
        cn_log2: Option<f64>,
        cn_scale: Option<f64>,
    ) -> Result<SnpObservation> {
        let cn_linear = cn_log2.map(f64::exp2);
        let obs = SnpObservation { position, gt, gt_score, cn_linear, cn_log2, cn_scale };
        obs.validate()?;
        Ok(obs)
    }

    fn validate(&self) -> Result<()> {
        if self.gt.is_none() && self.cn_log2.is_none() {
            return Err(Error::InvalidInput(
                "observation has neither a genotype call nor a copy-number estimate".into(),
            ));
        }
        if self.cn_scale.is_some() && self.cn_log2.is_none() {
            return Err(Error::InvalidInput(
                "cn_se present without a copy-number estimate".into(),
            ));
        }
        if let Some(s) = self.cn_scale {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::InvalidInput(format!("cn_se must be positive, got {s}")));
            }
        }
        if let Some(s) = self.gt_score {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "gt_conf must be nonnegative, got {s}"
                )));
            }
            match self.gt {
                Some(GenotypeCall::Hom) | Some(GenotypeCall::Het) => {}
                _ => {
                    return Err(Error::InvalidInput(
                        "gt_conf present without a called genotype".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// Ordered observations for one chromosome.
#[derive(Debug, Clone, PartialEq)]
pub struct SnpTrack {
    pub chromosome: String,
    pub observations: Vec<SnpObservation>,
}

impl SnpTrack {
    /// Construct after checking ordering invariants.
    pub fn new(chromosome: impl Into<String>, observations: Vec<SnpObservation>) -> Result<SnpTrack> {
        let chromosome = chromosome.into();
        if observations.is_empty() {
            return Err(Error::InvalidInput(format!("track {chromosome} is empty")));
        }
        for w in observations.windows(2) {
            if w[1].position <= w[0].position {
                return Err(Error::InvalidInput(format!(
                    "track {chromosome}: positions not strictly increasing at {}",
                    w[1].position
                )));
            }
        }
        Ok(SnpTrack { chromosome, observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Track with observations (and gaps) in reverse genomic order, mirrored
    /// around the original span.
    pub fn reversed(&self) -> SnpTrack {
        let lo = self.observations.first().map(|o| o.position).unwrap_or(0);
        let hi = self.observations.last().map(|o| o.position).unwrap_or(0);
        let observations = self
            .observations
            .iter()
            .rev()
            .map(|o| {
                let mut o = o.clone();
                o.position = hi - (o.position - lo);
                o
            })
            .collect();
        SnpTrack { chromosome: self.chromosome.clone(), observations }
    }
}

/// Base-pair gaps between adjacent SNPs (length `n - 1`; empty for a single SNP).
pub fn adjacent_distances(track: &SnpTrack) -> Vec<u64> {
    track
        .observations
        .windows(2)
        .map(|w| w[1].position - w[0].position)
        .collect()
}

/// Column-name overrides for [`parse_snp_table`].
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub chrom: String,
    pub pos: String,
    pub gt: String,
    pub gt_conf: String,
    pub cn: String,
    pub cn_se: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            chrom: "chrom".into(),
            pos: "pos".into(),
            gt: "gt".into(),
            gt_conf: "gt_conf".into(),
            cn: "cn".into(),
            cn_se: "cn_se".into(),
        }
    }
}

struct ColumnIndices {
    chrom: usize,
    pos: usize,
    gt: Option<usize>,
    gt_conf: Option<usize>,
    cn: Option<usize>,
    cn_se: Option<usize>,
    width: usize,
}

fn parse_header(line: &str, lineno: usize, options: &ParseOptions) -> Result<ColumnIndices> {
    let names: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
    let find = |name: &str| names.iter().position(|n| *n == name);
    let chrom = find(&options.chrom).ok_or_else(|| Error::Parse {
        line: lineno,
        message: format!("missing required column '{}'", options.chrom),
    })?;
    let pos = find(&options.pos).ok_or_else(|| Error::Parse {
        line: lineno,
        message: format!("missing required column '{}'", options.pos),
    })?;
    Ok(ColumnIndices {
        chrom,
        pos,
        gt: find(&options.gt),
        gt_conf: find(&options.gt_conf),
        cn: find(&options.cn),
        cn_se: find(&options.cn_se),
        width: names.len(),
    })
}

fn parse_opt_f64(field: &str, lineno: usize, what: &str) -> Result<Option<f64>> {
    if field == "NA" {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Parse { line: lineno, message: format!("unparseable {what} '{field}'") })
}

/// Parse a tab-separated SNP table into one track per chromosome.
///
/// Leading lines starting with `#` are skipped. Rows may arrive unsorted;
/// each track is sorted by position. Duplicate (chrom, pos) pairs, genotype
/// tokens outside `{AA, AB, BB, NC}`, nonpositive `cn` values, and rows with
/// neither a genotype nor a copy-number estimate are errors. Tracks are
/// returned in lexicographic chromosome order.
pub fn parse_snp_table<R: BufRead>(reader: R, options: &ParseOptions) -> Result<Vec<SnpTrack>> {
    let mut lines = reader.lines().enumerate();
    let cols = loop {
        match lines.next() {
            Some((idx, line)) => {
                let line = line?;
                if line.starts_with('#') || line.trim().is_empty() {
                    continue;
                }
                break parse_header(&line, idx + 1, options)?;
            }
            None => {
                return Err(Error::Parse { line: 0, message: "empty input: no header row".into() })
            }
        }
    };

    let mut per_chrom: BTreeMap<String, Vec<SnpObservation>> = BTreeMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
        if fields.len() != cols.width {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} columns, found {}", cols.width, fields.len()),
            });
        }
        let chrom = fields[cols.chrom].to_string();
        let position: u64 = fields[cols.pos].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("unparseable position '{}'", fields[cols.pos]),
        })?;
        let gt = match cols.gt.map(|i| fields[i]) {
            None | Some("NA") => None,
            Some(token) => Some(GenotypeCall::from_token(token).ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("unknown genotype token '{token}'"),
            })?),
        };
        let gt_score = match cols.gt_conf {
            Some(i) => parse_opt_f64(fields[i], lineno, "gt_conf")?,
            None => None,
        };
        let cn_linear = match cols.cn {
            Some(i) => parse_opt_f64(fields[i], lineno, "cn")?,
            None => None,
        };
        let cn_scale = match cols.cn_se {
            Some(i) => parse_opt_f64(fields[i], lineno, "cn_se")?,
            None => None,
        };
        let obs = SnpObservation::from_linear_cn(position, gt, gt_score, cn_linear, cn_scale)
            .map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        per_chrom.entry(chrom).or_default().push(obs);
    }

    let mut tracks = Vec::with_capacity(per_chrom.len());
    for (chromosome, mut observations) in per_chrom {
        observations.sort_by_key(|o| o.position);
        for w in observations.windows(2) {
            if w[0].position == w[1].position {
                return Err(Error::InvalidInput(format!(
                    "duplicate position {} on chromosome {chromosome}",
                    w[0].position
                )));
            }
        }
        tracks.push(SnpTrack::new(chromosome, observations)?);
    }
    if tracks.is_empty() {
        return Err(Error::InvalidInput("input contains no data rows".into()));
    }
    Ok(tracks)
}

/// Write tracks in the input TSV format. `header_comment` lines, if any, are
/// emitted first, each prefixed with `#`.
pub fn write_snp_table<W: Write>(
    writer: &mut W,
    tracks: &[SnpTrack],
    header_comment: &[String],
) -> Result<()> {
    for line in header_comment {
        writeln!(writer, "# {line}")?;
    }
    writeln!(writer, "chrom\tpos\tgt\tgt_conf\tcn\tcn_se")?;
    for track in tracks {
        for obs in &track.observations {
            let gt = obs.gt.map(GenotypeCall::token).unwrap_or("NA");
            let gt_conf = obs.gt_score.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
            let cn = obs.cn_linear.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
            let cn_se = obs.cn_scale.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
            writeln!(
                writer,
                "{}\t{}\t{}\t{}\t{}\t{}",
                track.chromosome, obs.position, gt, gt_conf, cn, cn_se
            )?;
        }
    }
    Ok(())
}
