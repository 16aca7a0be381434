//! Reference score distributions for confidence-weighted genotype emissions.
//!
//! A [`ReferenceModel`] holds, for each combination of called and true
//! genotype class, a tabulated density of the confidence score, plus the two
//! per-called-class probabilities that the underlying truth is homozygous.
//! Models are trained from labeled (called, truth, score) triples by Gaussian
//! kernel density estimation, or tabulated from closed-form families when no
//! labeled data is available.

use std::io::{BufRead, Write};

use statrs::distribution::{ContinuousCDF, Gamma, Normal};
use statrs::distribution::Continuous;

use crate::emissions::DEFAULT_DENSITY_FLOOR;
use crate::error::{Error, Result};

pub const GRID_SIZE: usize = 512;
const GRID_MIN: usize = 64;

/// Genotype class with the allele identity collapsed away; used for both the
/// called and the true genotype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenotypeClass {
    Hom,
    Het,
}

impl GenotypeClass {
    pub fn token(self) -> &'static str {
        match self {
            GenotypeClass::Hom => "HOM",
            GenotypeClass::Het => "HET",
        }
    }

    pub fn from_token(token: &str) -> Option<GenotypeClass> {
        match token {
            "HOM" => Some(GenotypeClass::Hom),
            "HET" => Some(GenotypeClass::Het),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            GenotypeClass::Hom => 0,
            GenotypeClass::Het => 1,
        }
    }
}

/// Alias kept for call sites that distinguish the roles.
pub type CalledClass = GenotypeClass;

const CELLS: [(GenotypeClass, GenotypeClass); 4] = [
    (GenotypeClass::Hom, GenotypeClass::Hom),
    (GenotypeClass::Hom, GenotypeClass::Het),
    (GenotypeClass::Het, GenotypeClass::Hom),
    (GenotypeClass::Het, GenotypeClass::Het),
];

fn cell_index(called: GenotypeClass, truth: GenotypeClass) -> usize {
    called.index() * 2 + truth.index()
}

/// Tabulated score density on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeTable {
    grid: Vec<f64>,
    density: Vec<f64>,
    cumulative: Vec<f64>,
    pub bandwidth: f64,
    pub sample_count: usize,
}

impl KdeTable {
    pub fn new(grid: Vec<f64>, density: Vec<f64>, bandwidth: f64, sample_count: usize) -> Result<KdeTable> {
        if grid.len() < GRID_MIN || grid.len() != density.len() {
            return Err(Error::Reference(format!(
                "table needs >= {GRID_MIN} grid points with matching densities, got {} / {}",
                grid.len(),
                density.len()
            )));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Reference("grid must be strictly increasing".into()));
        }
        if density.iter().any(|&d| !d.is_finite() || d < 0.0) {
            return Err(Error::Reference("densities must be finite and nonnegative".into()));
        }
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(Error::Reference("bandwidth must be positive".into()));
        }
        let mut cumulative = Vec::with_capacity(grid.len());
        cumulative.push(0.0);
        for i in 1..grid.len() {
            let seg = 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
            cumulative.push(cumulative[i - 1] + seg);
        }
        let integral = *cumulative.last().unwrap();
        if !(0.999..=1.001).contains(&integral) {
            return Err(Error::Reference(format!(
                "table integrates to {integral}, expected 1 within 1e-3"
            )));
        }
        Ok(KdeTable { grid, density, cumulative, bandwidth, sample_count })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Linearly interpolated density, floored at the global density floor and
    /// equal to the floor outside the grid.
    pub fn density_at(&self, score: f64) -> f64 {
        let lo = self.grid[0];
        let hi = *self.grid.last().unwrap();
        if !score.is_finite() || score < lo || score > hi {
            return DEFAULT_DENSITY_FLOOR;
        }
        let idx = match self.grid.binary_search_by(|g| g.total_cmp(&score)) {
            Ok(i) => return self.density[i].max(DEFAULT_DENSITY_FLOOR),
            Err(i) => i,
        };
        let (g0, g1) = (self.grid[idx - 1], self.grid[idx]);
        let (d0, d1) = (self.density[idx - 1], self.density[idx]);
        let t = (score - g0) / (g1 - g0);
        (d0 + t * (d1 - d0)).max(DEFAULT_DENSITY_FLOOR)
    }

    /// Score at the given cumulative probability (piecewise-linear inverse CDF).
    pub fn quantile(&self, p: f64) -> f64 {
        let target = p.clamp(0.0, 1.0) * self.integral();
        let idx = match self.cumulative.binary_search_by(|c| c.total_cmp(&target)) {
            Ok(i) => return self.grid[i],
            Err(0) => return self.grid[0],
            Err(i) if i >= self.cumulative.len() => return *self.grid.last().unwrap(),
            Err(i) => i,
        };
        let (c0, c1) = (self.cumulative[idx - 1], self.cumulative[idx]);
        let (g0, g1) = (self.grid[idx - 1], self.grid[idx]);
        if c1 - c0 <= 0.0 {
            return g0;
        }
        g0 + (target - c0) / (c1 - c0) * (g1 - g0)
    }

    /// Draw a score from the tabulated density.
    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Draw a score conditioned on lying above the given quantile.
    pub fn sample_above<R: rand::Rng>(&self, quantile: f64, rng: &mut R) -> f64 {
        let u = quantile + rng.random::<f64>() * (1.0 - quantile);
        self.quantile(u)
    }
}

/// The four conditional score densities plus the call-conditional truth
/// probabilities under retention.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    tables: [KdeTable; 4],
    prob_hom_given_called: [f64; 2],
}

impl ReferenceModel {
    pub fn new(
        tables: [KdeTable; 4],
        prob_hom_given_called_hom: f64,
        prob_hom_given_called_het: f64,
    ) -> Result<ReferenceModel> {
        for p in [prob_hom_given_called_hom, prob_hom_given_called_het] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Reference(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(ReferenceModel {
            tables,
            prob_hom_given_called: [prob_hom_given_called_hom, prob_hom_given_called_het],
        })
    }

    pub fn table(&self, called: GenotypeClass, truth: GenotypeClass) -> &KdeTable {
        &self.tables[cell_index(called, truth)]
    }

    /// Density of the score given the called and true genotype classes.
    pub fn score_density(&self, called: GenotypeClass, truth: GenotypeClass, score: f64) -> f64 {
        self.table(called, truth).density_at(score)
    }

    /// Probability that the truth is homozygous given the call, under retention.
    pub fn prob_hom_given_called(&self, called: GenotypeClass) -> f64 {
        self.prob_hom_given_called[called.index()]
    }

    pub fn prob_het_given_called(&self, called: GenotypeClass) -> f64 {
        1.0 - self.prob_hom_given_called(called)
    }
}

fn standard_deviation(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Linear-interpolation quantile on sorted data.
fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule-of-thumb bandwidth.
fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let sd = standard_deviation(sorted);
    let iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (sorted.len() as f64).powf(-0.2)
}

/// Gaussian KDE evaluated on a regular grid spanning the data range extended
/// by three bandwidths, renormalized to integrate to one.
fn kde_table(scores: &mut [f64]) -> Result<KdeTable> {
    scores.sort_by(f64::total_cmp);
    let sd = standard_deviation(scores);
    if !sd.is_finite() || sd <= 0.0 {
        return Err(Error::Reference("zero score variance".into()));
    }
    let h = silverman_bandwidth(scores);
    let lo = scores[0] - 3.0 * h;
    let hi = scores[scores.len() - 1] + 3.0 * h;
    let step = (hi - lo) / (GRID_SIZE - 1) as f64;
    let norm = 1.0 / (scores.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..GRID_SIZE).map(|i| lo + i as f64 * step).collect();
    let mut density: Vec<f64> = grid
        .iter()
        .map(|&g| {
            norm * scores
                .iter()
                .map(|&x| (-0.5 * ((g - x) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    // Edge kernels lose tail mass beyond the 3h extension; rescale so the
    // tabulated density integrates to one exactly.
    let mut integral = 0.0;
    for i in 1..GRID_SIZE {
        integral += 0.5 * (density[i] + density[i - 1]) * step;
    }
    density.iter_mut().for_each(|d| *d /= integral);
    KdeTable::new(grid, density, h, scores.len())
}

/// Fit a reference model from labeled (called, truth, score) triples.
///
/// Every (called, truth) cell needs at least 30 triples with finite,
/// nonnegative scores.
pub fn train_reference(
    triples: &[(GenotypeClass, GenotypeClass, f64)],
) -> Result<ReferenceModel> {
    let mut cells: [Vec<f64>; 4] = Default::default();
    let mut called_counts = [0usize; 2];
    let mut hom_truth_counts = [0usize; 2];
    for &(called, truth, score) in triples {
        if !score.is_finite() || score < 0.0 {
            return Err(Error::Reference(format!("invalid score {score}")));
        }
        cells[cell_index(called, truth)].push(score);
        called_counts[called.index()] += 1;
        if truth == GenotypeClass::Hom {
            hom_truth_counts[called.index()] += 1;
        }
    }
    let mut tables = Vec::with_capacity(4);
    for (i, (called, truth)) in CELLS.iter().enumerate() {
        if cells[i].len() < 30 {
            return Err(Error::Reference(format!(
                "cell (called={}, true={}) has {} triples, need at least 30",
                called.token(),
                truth.token(),
                cells[i].len()
            )));
        }
        let table = kde_table(&mut cells[i]).map_err(|e| {
            Error::Reference(format!(
                "cell (called={}, true={}): {e}",
                called.token(),
                truth.token()
            ))
        })?;
        tables.push(table);
    }
    let prob = |i: usize| hom_truth_counts[i] as f64 / called_counts[i] as f64;
    let tables: [KdeTable; 4] = tables.try_into().expect("four cells");
    ReferenceModel::new(tables, prob(0), prob(1))
}

/// Closed-form density family for one synthetic cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellSpec {
    /// Gamma(shape, rate) shifted right by `shift`.
    ShiftedGamma { shape: f64, rate: f64, shift: f64 },
    /// Gaussian truncated at zero.
    TruncatedGaussian { mean: f64, sd: f64 },
}

impl CellSpec {
    fn tabulate(&self) -> Result<KdeTable> {
        match *self {
            CellSpec::ShiftedGamma { shape, rate, shift } => {
                let gamma = Gamma::new(shape, rate)
                    .map_err(|e| Error::Reference(format!("invalid gamma parameters: {e}")))?;
                if shift < 0.0 {
                    return Err(Error::Reference("gamma shift must be nonnegative".into()));
                }
                let hi = shift + gamma.inverse_cdf(1.0 - 1e-5);
                let grid: Vec<f64> = regular_grid(shift, hi);
                let density = grid.iter().map(|&x| gamma.pdf(x - shift)).collect();
                KdeTable::new(grid, density, effective_bandwidth(shift, hi), 0)
            }
            CellSpec::TruncatedGaussian { mean, sd } => {
                let normal = Normal::new(mean, sd)
                    .map_err(|e| Error::Reference(format!("invalid gaussian parameters: {e}")))?;
                let z = 1.0 - normal.cdf(0.0);
                if z <= 1e-6 {
                    return Err(Error::Reference(
                        "truncated gaussian has negligible mass above zero".into(),
                    ));
                }
                let lo = (mean - 6.0 * sd).max(0.0);
                let hi = mean + 6.0 * sd;
                let grid: Vec<f64> = regular_grid(lo, hi);
                let density = grid.iter().map(|&x| normal.pdf(x) / z).collect();
                KdeTable::new(grid, density, effective_bandwidth(lo, hi), 0)
            }
        }
    }
}

fn regular_grid(lo: f64, hi: f64) -> Vec<f64> {
    let step = (hi - lo) / (GRID_SIZE - 1) as f64;
    (0..GRID_SIZE).map(|i| lo + i as f64 * step).collect()
}

fn effective_bandwidth(lo: f64, hi: f64) -> f64 {
    (hi - lo) / (GRID_SIZE - 1) as f64
}

/// Parametric stand-in for a trained reference model.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Score densities for correct calls (called class equals true class).
    pub correct: CellSpec,
    /// Score densities for miscalls.
    pub miscall: CellSpec,
    pub prob_hom_given_called_hom: f64,
    pub prob_hom_given_called_het: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            correct: CellSpec::ShiftedGamma { shape: 2.0, rate: 1.0, shift: 2.0 },
            miscall: CellSpec::ShiftedGamma { shape: 1.0, rate: 2.0, shift: 0.3 },
            prob_hom_given_called_hom: 0.97,
            prob_hom_given_called_het: 0.03,
        }
    }
}

/// Tabulate a reference model from closed-form cell densities.
pub fn synthetic_reference(spec: &SyntheticSpec) -> Result<ReferenceModel> {
    let tables = [
        spec.correct.tabulate()?, // called HOM, true HOM
        spec.miscall.tabulate()?, // called HOM, true HET
        spec.miscall.tabulate()?, // called HET, true HOM
        spec.correct.tabulate()?, // called HET, true HET
    ];
    ReferenceModel::new(tables, spec.prob_hom_given_called_hom, spec.prob_hom_given_called_het)
}

/// Write a reference model as sectioned TSV. Floats use the shortest
/// representation that round-trips exactly.
pub fn write_reference<W: Write>(
    writer: &mut W,
    model: &ReferenceModel,
    header_comment: &[String],
) -> Result<()> {
    for line in header_comment {
        writeln!(writer, "# {line}")?;
    }
    for (called, truth) in CELLS {
        let table = model.table(called, truth);
        writeln!(
            writer,
            "#cell called={} true={} bandwidth={} n={}",
            called.token(),
            truth.token(),
            table.bandwidth,
            table.sample_count
        )?;
        for (g, d) in table.grid.iter().zip(&table.density) {
            writeln!(writer, "{g}\t{d}")?;
        }
    }
    writeln!(writer, "#probs")?;
    for called in [GenotypeClass::Hom, GenotypeClass::Het] {
        writeln!(
            writer,
            "probHomGivenCalled\t{}\t{}",
            called.token(),
            model.prob_hom_given_called(called)
        )?;
    }
    Ok(())
}

/// Read a reference model written by [`write_reference`].
pub fn read_reference<R: BufRead>(reader: R) -> Result<ReferenceModel> {
    let mut tables: [Option<KdeTable>; 4] = Default::default();
    let mut probs: [Option<f64>; 2] = [None, None];
    let mut current: Option<(usize, f64, usize, Vec<f64>, Vec<f64>)> = None;
    let mut in_probs = false;

    let finish =
        |cur: &mut Option<(usize, f64, usize, Vec<f64>, Vec<f64>)>, tables: &mut [Option<KdeTable>; 4]| -> Result<()> {
            if let Some((idx, bw, n, grid, density)) = cur.take() {
                tables[idx] = Some(KdeTable::new(grid, density, bw, n)?);
            }
            Ok(())
        };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#cell ") {
            finish(&mut current, &mut tables)?;
            in_probs = false;
            let mut called = None;
            let mut truth = None;
            let mut bandwidth = None;
            let mut n = None;
            for part in rest.split_whitespace() {
                let (key, value) = part.split_once('=').ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("malformed cell attribute '{part}'"),
                })?;
                match key {
                    "called" => called = GenotypeClass::from_token(value),
                    "true" => truth = GenotypeClass::from_token(value),
                    "bandwidth" => bandwidth = value.parse().ok(),
                    "n" => n = value.parse().ok(),
                    _ => {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("unknown cell attribute '{key}'"),
                        })
                    }
                }
            }
            match (called, truth, bandwidth, n) {
                (Some(c), Some(t), Some(b), Some(n)) => {
                    current = Some((cell_index(c, t), b, n, Vec::new(), Vec::new()));
                }
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "cell header needs called=, true=, bandwidth=, n=".into(),
                    })
                }
            }
            continue;
        }
        if line == "#probs" {
            finish(&mut current, &mut tables)?;
            in_probs = true;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if in_probs {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields[0] != "probHomGivenCalled" {
                return Err(Error::Parse { line: lineno, message: "malformed probs row".into() });
            }
            let called = GenotypeClass::from_token(fields[1]).ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("unknown called class '{}'", fields[1]),
            })?;
            let p: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("unparseable probability '{}'", fields[2]),
            })?;
            probs[called.index()] = Some(p);
            continue;
        }
        let (idx, _, _, grid, density) = current.as_mut().ok_or_else(|| Error::Parse {
            line: lineno,
            message: "data row outside any #cell section".into(),
        })?;
        let _ = idx;
        let (g, d) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: lineno,
            message: "expected grid<TAB>density".into(),
        })?;
        grid.push(g.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("unparseable grid value '{g}'"),
        })?);
        density.push(d.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("unparseable density value '{d}'"),
        })?);
    }
    finish(&mut current, &mut tables)?;

    let tables: Vec<KdeTable> = tables
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            t.ok_or_else(|| {
                Error::Reference(format!(
                    "missing cell (called={}, true={})",
                    CELLS[i].0.token(),
                    CELLS[i].1.token()
                ))
            })
        })
        .collect::<Result<_>>()?;
    let tables: [KdeTable; 4] = tables.try_into().expect("four cells");
    let p_hom = probs[0].ok_or_else(|| Error::Reference("missing probHomGivenCalled HOM".into()))?;
    let p_het = probs[1].ok_or_else(|| Error::Reference("missing probHomGivenCalled HET".into()))?;
    ReferenceModel::new(tables, p_hom, p_het)
}
