//! Histogram and frequency-polygon density estimators.
//!
//! Counts are stored sparsely: only occupied cells are kept and every
//! unlisted cell reads as zero, which realizes the infinite integer-indexed
//! partition with bounded memory. Heights are `count / (n h^d)`.

use std::borrow::Borrow;
use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{BinIndex, Partition};
use crate::quad::GaussLegendre;

impl Borrow<[i64]> for BinIndex {
    fn borrow(&self) -> &[i64] {
        &self.0
    }
}

/// Which of the two estimators to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Histogram,
    FrequencyPolygon,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Histogram => "histogram",
            EstimatorKind::FrequencyPolygon => "frequency_polygon",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "histogram" => Ok(EstimatorKind::Histogram),
            "frequency_polygon" => Ok(EstimatorKind::FrequencyPolygon),
            other => Err(Error::invalid(format!(
                "unknown estimator '{other}' (expected histogram or frequency_polygon)"
            ))),
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fitted multivariate histogram.
#[derive(Debug, Clone)]
pub struct HistogramEstimate {
    partition: Partition,
    counts: HashMap<BinIndex, u64>,
    sample_count: u64,
}

impl HistogramEstimate {
    /// Bin the samples, given as a flat row-major array of
    /// `n * partition.dim()` coordinates.
    pub fn fit(partition: &Partition, samples: &[f64]) -> Result<Self> {
        let d = partition.dim();
        if samples.is_empty() {
            return Err(Error::invalid("cannot fit an estimate to an empty sample"));
        }
        if !samples.len().is_multiple_of(d) {
            return Err(Error::invalid(format!(
                "sample array of length {} is not a multiple of the dimension {d}",
                samples.len()
            )));
        }
        let n = (samples.len() / d) as u64;
        let mut counts: HashMap<BinIndex, u64> = HashMap::new();
        if d == 1 {
            // the univariate fit dominates every Monte Carlo experiment, so
            // it gets an index buffer-free path
            let mut flat: HashMap<i64, u64> = HashMap::new();
            for &x in samples {
                *flat.entry(partition.axis_bin(0, x)?).or_insert(0) += 1;
            }
            counts.reserve(flat.len());
            for (j, c) in flat {
                counts.insert(BinIndex(vec![j]), c);
            }
        } else {
            let mut buf = vec![0i64; d];
            for chunk in samples.chunks_exact(d) {
                for (k, &x) in chunk.iter().enumerate() {
                    buf[k] = partition.axis_bin(k, x)?;
                }
                if let Some(c) = counts.get_mut(buf.as_slice()) {
                    *c += 1;
                } else {
                    counts.insert(BinIndex(buf.clone()), 1);
                }
            }
        }
        Ok(HistogramEstimate { partition: partition.clone(), counts, sample_count: n })
    }

    /// Build an estimate from precomputed cell counts.
    pub fn from_counts(
        partition: &Partition,
        counts: HashMap<BinIndex, u64>,
        sample_count: u64,
    ) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::invalid("sample count must be positive"));
        }
        if counts.keys().any(|j| j.dim() != partition.dim()) {
            return Err(Error::invalid("cell index dimension mismatch"));
        }
        let total: u64 = counts.values().sum();
        if total != sample_count {
            return Err(Error::invalid(format!(
                "counts sum to {total} but the sample count is {sample_count}"
            )));
        }
        Ok(HistogramEstimate { partition: partition.clone(), counts, sample_count })
    }

    /// The degenerate estimate with no samples; evaluates to zero
    /// everywhere and integrates to zero. Useful as a synthetic reference,
    /// never produced by fitting.
    pub fn zero(partition: &Partition) -> Self {
        HistogramEstimate {
            partition: partition.clone(),
            counts: HashMap::new(),
            sample_count: 0,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn occupied(&self) -> impl Iterator<Item = (&BinIndex, u64)> {
        self.counts.iter().map(|(j, &c)| (j, c))
    }

    pub fn count(&self, j: &BinIndex) -> u64 {
        self.counts.get(j).copied().unwrap_or(0)
    }

    pub(crate) fn count_slice(&self, j: &[i64]) -> u64 {
        self.counts.get(j).copied().unwrap_or(0)
    }

    /// Height `count_j / (n h^d)` of cell `j`; zero off the occupied set.
    pub fn height(&self, j: &BinIndex) -> f64 {
        self.height_of_count(self.count(j))
    }

    pub(crate) fn height_of_count(&self, count: u64) -> f64 {
        if self.sample_count == 0 {
            return 0.0;
        }
        count as f64 / (self.sample_count as f64 * self.partition.cell_volume())
    }

    pub(crate) fn height_at_axis1(&self, j: i64) -> f64 {
        debug_assert_eq!(self.partition.dim(), 1);
        self.height_of_count(self.count_slice(&[j]))
    }

    /// The estimated density at `x`. Points outside the indexable range
    /// (or with non-finite coordinates) lie in no occupied cell and read
    /// as zero.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.partition.dim(), "point dimension mismatch");
        match self.partition.bin_of(x) {
            Ok(j) => self.height(&j),
            Err(_) => 0.0,
        }
    }

    /// Exact integral over R^d: the telescoped cell sum `sum_j count_j / n`,
    /// accumulated in integer arithmetic, so a fitted histogram integrates
    /// to exactly one.
    pub fn integral(&self) -> f64 {
        if self.sample_count == 0 {
            return 0.0;
        }
        let total: u64 = self.counts.values().sum();
        total as f64 / self.sample_count as f64
    }

    /// Occupied cells in lexicographic index order.
    pub fn sorted_counts(&self) -> Vec<(BinIndex, u64)> {
        let mut rows: Vec<(BinIndex, u64)> = self
            .counts
            .iter()
            .map(|(j, &c)| (j.clone(), c))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        rows
    }

    /// Serialize to the text-table interchange format: one metadata line,
    /// a header, and one occupied cell per row.
    pub fn to_table(&self) -> String {
        let p = &self.partition;
        let origin = p
            .origin()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut out = String::new();
        writeln!(
            out,
            "# n={} h={} d={} origin={}",
            self.sample_count,
            p.bin_width(),
            p.dim(),
            origin
        )
        .unwrap();
        let header: Vec<String> = (1..=p.dim()).map(|k| format!("j_{k}")).collect();
        writeln!(out, "{},count", header.join(",")).unwrap();
        for (j, c) in self.sorted_counts() {
            let coords = j
                .coords()
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            writeln!(out, "{coords},{c}").unwrap();
        }
        out
    }

    /// Parse the format produced by [`to_table`](Self::to_table).
    pub fn from_table(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let meta = lines
            .next()
            .ok_or_else(|| Error::invalid("empty estimate table"))?;
        let meta = meta
            .strip_prefix("# ")
            .ok_or_else(|| Error::invalid("estimate table must start with a '# ' metadata line"))?;
        let mut n = None;
        let mut h = None;
        let mut d = None;
        let mut origin = None;
        for field in meta.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("bad metadata field '{field}'")))?;
            match key {
                "n" => n = Some(value.parse::<u64>().map_err(|e| Error::invalid(format!("bad n: {e}")))?),
                "h" => h = Some(value.parse::<f64>().map_err(|e| Error::invalid(format!("bad h: {e}")))?),
                "d" => d = Some(value.parse::<usize>().map_err(|e| Error::invalid(format!("bad d: {e}")))?),
                "origin" => {
                    let coords: std::result::Result<Vec<f64>, _> =
                        value.split(',').map(str::parse::<f64>).collect();
                    origin = Some(coords.map_err(|e| Error::invalid(format!("bad origin: {e}")))?);
                }
                other => return Err(Error::invalid(format!("unknown metadata key '{other}'"))),
            }
        }
        let (n, h, d, origin) = match (n, h, d, origin) {
            (Some(n), Some(h), Some(d), Some(o)) => (n, h, d, o),
            _ => return Err(Error::invalid("metadata must define n, h, d and origin")),
        };
        let partition = Partition::new(d, h, origin)?;
        lines.next(); // column header
        let mut counts = HashMap::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d + 1 {
                return Err(Error::invalid(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 3,
                    fields.len(),
                    d + 1
                )));
            }
            let coords: std::result::Result<Vec<i64>, _> =
                fields[..d].iter().map(|f| f.parse::<i64>()).collect();
            let coords = coords.map_err(|e| Error::invalid(format!("row {}: {e}", lineno + 3)))?;
            let count: u64 = fields[d]
                .parse()
                .map_err(|e| Error::invalid(format!("row {}: {e}", lineno + 3)))?;
            counts.insert(BinIndex(coords), count);
        }
        HistogramEstimate::from_counts(&partition, counts, n)
    }
}

/// A univariate frequency polygon: the continuous, piecewise linear
/// interpolant of the histogram heights at the cell centers.
#[derive(Debug, Clone)]
pub struct FrequencyPolygonEstimate {
    base: HistogramEstimate,
}

impl FrequencyPolygonEstimate {
    pub fn fit(partition: &Partition, samples: &[f64]) -> Result<Self> {
        let base = HistogramEstimate::fit(partition, samples)?;
        Self::from_histogram(base)
    }

    pub fn from_histogram(base: HistogramEstimate) -> Result<Self> {
        if base.partition().dim() != 1 {
            return Err(Error::Unsupported(
                "frequency polygons are defined for dimension 1 only".into(),
            ));
        }
        Ok(FrequencyPolygonEstimate { base })
    }

    pub fn zero(partition: &Partition) -> Result<Self> {
        Self::from_histogram(HistogramEstimate::zero(partition))
    }

    pub fn base(&self) -> &HistogramEstimate {
        &self.base
    }

    pub fn partition(&self) -> &Partition {
        self.base.partition()
    }

    /// Index of the inter-center segment containing `x`: the `j` with
    /// `c_j <= x < c_{j+1}`.
    pub fn segment_of(&self, x: f64) -> Result<i64> {
        let p = self.base.partition();
        p.axis_bin(0, x - 0.5 * p.bin_width())
    }

    /// The interpolated density at `x`: on `[c_j, c_{j+1})` the value is
    /// `((x - c_j)/h) fhat_{j+1} + ((c_{j+1} - x)/h) fhat_j`, with height
    /// zero on unoccupied cells.
    pub fn eval(&self, x: f64) -> f64 {
        let p = self.base.partition();
        let j = match self.segment_of(x) {
            Ok(j) => j,
            Err(_) => return 0.0,
        };
        let h = p.bin_width();
        let c_j = p.axis_center(0, j);
        let c_j1 = p.axis_center(0, j + 1);
        let lo = self.base.height_at_axis1(j);
        let hi = self.base.height_at_axis1(j + 1);
        ((x - c_j) / h) * hi + ((c_j1 - x) / h) * lo
    }

    /// Exact integral over R: the trapezoid areas telescope, and the count
    /// accumulation is integer arithmetic, so a fitted polygon integrates
    /// to exactly one.
    pub fn integral(&self) -> f64 {
        if self.base.sample_count == 0 {
            return 0.0;
        }
        // every segment adjacent to an occupied cell contributes
        // (count_j + count_{j+1}) / (2n)
        let mut segments: Vec<i64> = Vec::with_capacity(2 * self.base.counts.len());
        for j in self.base.counts.keys() {
            segments.push(j.0[0] - 1);
            segments.push(j.0[0]);
        }
        segments.sort_unstable();
        segments.dedup();
        let total: u64 = segments
            .iter()
            .map(|&j| self.base.count_slice(&[j]) + self.base.count_slice(&[j + 1]))
            .sum();
        total as f64 / (2.0 * self.base.sample_count as f64)
    }
}

/// Either fitted estimator behind one evaluation surface.
#[derive(Debug, Clone)]
pub enum Estimate {
    Histogram(HistogramEstimate),
    FrequencyPolygon(FrequencyPolygonEstimate),
}

impl Estimate {
    pub fn fit(kind: EstimatorKind, partition: &Partition, samples: &[f64]) -> Result<Self> {
        match kind {
            EstimatorKind::Histogram => {
                Ok(Estimate::Histogram(HistogramEstimate::fit(partition, samples)?))
            }
            EstimatorKind::FrequencyPolygon => Ok(Estimate::FrequencyPolygon(
                FrequencyPolygonEstimate::fit(partition, samples)?,
            )),
        }
    }

    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimate::Histogram(_) => EstimatorKind::Histogram,
            Estimate::FrequencyPolygon(_) => EstimatorKind::FrequencyPolygon,
        }
    }

    pub fn histogram(&self) -> &HistogramEstimate {
        match self {
            Estimate::Histogram(h) => h,
            Estimate::FrequencyPolygon(fp) => fp.base(),
        }
    }

    pub fn partition(&self) -> &Partition {
        self.histogram().partition()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Estimate::Histogram(h) => h.eval(x),
            Estimate::FrequencyPolygon(fp) => {
                assert_eq!(x.len(), 1, "point dimension mismatch");
                fp.eval(x[0])
            }
        }
    }

    pub fn integral(&self) -> f64 {
        match self {
            Estimate::Histogram(h) => h.integral(),
            Estimate::FrequencyPolygon(fp) => fp.integral(),
        }
    }
}

/// An axis-aligned integration box.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid("domain bounds must be non-empty and of equal length"));
        }
        for k in 0..lo.len() {
            if !(lo[k].is_finite() && hi[k].is_finite()) {
                return Err(Error::invalid("domain bounds must be finite"));
            }
            if lo[k] >= hi[k] {
                return Err(Error::invalid(format!(
                    "domain has no volume on axis {k}: [{}, {}]",
                    lo[k], hi[k]
                )));
            }
        }
        Ok(DomainBox { lo, hi })
    }

    /// The symmetric box `[-w_k, w_k]` per axis.
    pub fn centered(halfwidths: &[f64]) -> Result<Self> {
        DomainBox::new(
            halfwidths.iter().map(|w| -w).collect(),
            halfwidths.to_vec(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.lo.len()).all(|k| self.lo[k] <= x[k] && x[k] <= self.hi[k])
    }
}

/// Visit every integer box in the inclusive index ranges.
pub(crate) fn for_each_box<F>(lo: &[i64], hi: &[i64], mut visit: F) -> Result<()>
where
    F: FnMut(&[i64]) -> Result<()>,
{
    let d = lo.len();
    let mut idx: Vec<i64> = lo.to_vec();
    loop {
        visit(&idx)?;
        let mut axis = 0;
        loop {
            if axis == d {
                return Ok(());
            }
            idx[axis] += 1;
            if idx[axis] <= hi[axis] {
                break;
            }
            idx[axis] = lo[axis];
            axis += 1;
        }
    }
}

/// Tensor-product Gauss-Legendre integral of `f` over the box `[lo, hi]`.
pub(crate) fn tensor_integrate<F>(gl: &GaussLegendre, lo: &[f64], hi: &[f64], f: &mut F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let d = lo.len();
    let mut point = vec![0.0; d];
    fn rec<F: FnMut(&[f64]) -> f64>(
        gl: &GaussLegendre,
        lo: &[f64],
        hi: &[f64],
        axis: usize,
        point: &mut Vec<f64>,
        f: &mut F,
    ) -> f64 {
        if axis == lo.len() {
            return f(point);
        }
        let mid = 0.5 * (lo[axis] + hi[axis]);
        let half = 0.5 * (hi[axis] - lo[axis]);
        let mut acc = 0.0;
        for (&x, &w) in gl.nodes().iter().zip(gl.weights()) {
            point[axis] = mid + half * x;
            acc += w * rec(gl, lo, hi, axis + 1, point, f);
        }
        acc * half
    }
    rec(gl, lo, hi, 0, &mut point, f)
}

/// `int_domain (estimate(x) - density(x))^2 dx` by per-cell Gauss-Legendre
/// quadrature.
///
/// Cells are the partition hypercubes for the histogram and the
/// inter-center segments for the frequency polygon, so the integrand is
/// smooth on every quadrature panel; with order `q` per axis the rule is
/// exact for per-cell polynomial integrands up to degree `2q - 1`. Cells
/// straddling the domain boundary are clipped.
pub fn l2_distance_sq<F>(
    estimate: &Estimate,
    density: F,
    domain: &DomainBox,
    quad_order: usize,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let hist = estimate.histogram();
    let p = hist.partition();
    let d = p.dim();
    if domain.dim() != d {
        return Err(Error::invalid(format!(
            "domain dimension {} does not match estimate dimension {d}",
            domain.dim()
        )));
    }
    let gl = GaussLegendre::new(quad_order)?;
    match estimate {
        Estimate::Histogram(h) => {
            let mut j_lo = Vec::with_capacity(d);
            let mut j_hi = Vec::with_capacity(d);
            for k in 0..d {
                j_lo.push(p.axis_bin(k, domain.lo[k])?);
                j_hi.push(p.axis_bin(k, domain.hi[k])?);
            }
            let mut total = 0.0;
            for_each_box(&j_lo, &j_hi, |j| {
                let mut cell_lo = Vec::with_capacity(d);
                let mut cell_hi = Vec::with_capacity(d);
                for (k, &jk) in j.iter().enumerate() {
                    let (a, b) = p.axis_edges(k, jk);
                    cell_lo.push(a.max(domain.lo[k]));
                    cell_hi.push(b.min(domain.hi[k]));
                }
                if (0..d).any(|k| cell_lo[k] >= cell_hi[k]) {
                    return Ok(());
                }
                let height = h.height_of_count(h.count_slice(j));
                total += tensor_integrate(&gl, &cell_lo, &cell_hi, &mut |x| {
                    let diff = height - density(x);
                    diff * diff
                });
                Ok(())
            })?;
            Ok(total)
        }
        Estimate::FrequencyPolygon(fp) => {
            let h = p.bin_width();
            let seg_lo = fp.segment_of(domain.lo[0])?;
            let seg_hi = fp.segment_of(domain.hi[0])?;
            let mut total = 0.0;
            for j in seg_lo..=seg_hi {
                let c_j = p.axis_center(0, j);
                let a = c_j.max(domain.lo[0]);
                let b = (c_j + h).min(domain.hi[0]);
                if a >= b {
                    continue;
                }
                let y0 = fp.base.height_at_axis1(j);
                let y1 = fp.base.height_at_axis1(j + 1);
                total += gl.integrate(a, b, |x| {
                    let v = y0 + (y1 - y0) * (x - c_j) / h;
                    let diff = v - density(&[x]);
                    diff * diff
                });
            }
            Ok(total)
        }
    }
}
