//! Regular partition of R^d into half-open hypercubes.
//!
//! The partition tiles R^d with cubes of edge `bin_width`; cell `j` on axis
//! `k` covers `[origin_k + j_k*h, origin_k + (j_k+1)*h)`. Ties at a cell
//! boundary always belong to the cell on the right.

use crate::error::{Error, Result};

/// Largest coordinate-to-width ratio accepted by [`Partition::bin_of`].
///
/// Beyond 2^52 the spacing of f64 values exceeds 1, so integer cell
/// indices can no longer be recovered reliably; such inputs are rejected
/// instead of silently wrapping.
const MAX_INDEX_MAGNITUDE: f64 = 4_503_599_627_370_496.0; // 2^52

/// An integer cell index, one coordinate per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinIndex(pub Vec<i64>);

impl BinIndex {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// The index shifted by `step` along axis `axis`.
    pub fn shifted(&self, axis: usize, step: i64) -> BinIndex {
        let mut c = self.0.clone();
        c[axis] += step;
        BinIndex(c)
    }
}

impl From<Vec<i64>> for BinIndex {
    fn from(v: Vec<i64>) -> Self {
        BinIndex(v)
    }
}

/// A regular grid partition of R^d, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    dim: usize,
    bin_width: f64,
    origin: Vec<f64>,
}

impl Partition {
    pub fn new(dim: usize, bin_width: f64, origin: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("partition dimension must be at least 1"));
        }
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(Error::invalid(format!(
                "bin width must be positive and finite, got {bin_width}"
            )));
        }
        if origin.len() != dim {
            return Err(Error::invalid(format!(
                "origin has length {}, expected {dim}",
                origin.len()
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::invalid("origin coordinates must be finite"));
        }
        Ok(Partition { dim, bin_width, origin })
    }

    /// One-dimensional partition anchored at zero.
    pub fn univariate(bin_width: f64) -> Result<Self> {
        Partition::new(1, bin_width, vec![0.0])
    }

    /// d-dimensional partition anchored at the zero vector.
    pub fn anchored_at_zero(dim: usize, bin_width: f64) -> Result<Self> {
        Partition::new(dim, bin_width, vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Cell volume h^d.
    pub fn cell_volume(&self) -> f64 {
        self.bin_width.powi(self.dim as i32)
    }

    /// Index of the cell containing `x` along a single axis.
    ///
    /// The returned `j` satisfies, in f64 arithmetic,
    /// `origin + j*h <= x < origin + (j+1)*h`; a rounding-induced
    /// off-by-one from the floor division is corrected against the edge
    /// comparisons so the half-open contract holds exactly.
    pub fn axis_bin(&self, axis: usize, x: f64) -> Result<i64> {
        if !x.is_finite() {
            return Err(Error::invalid(format!("non-finite coordinate {x} on axis {axis}")));
        }
        let o = self.origin[axis];
        let h = self.bin_width;
        let ratio = (x - o) / h;
        if ratio.abs() > MAX_INDEX_MAGNITUDE {
            return Err(Error::invalid(format!(
                "coordinate {x} lies {ratio:.3e} bin widths from the origin, beyond the representable index range"
            )));
        }
        let mut j = ratio.floor() as i64;
        // Edge fixup: the division may land a boundary value one cell off.
        while x < o + (j as f64) * h {
            j -= 1;
        }
        while x >= o + ((j + 1) as f64) * h {
            j += 1;
        }
        Ok(j)
    }

    /// Index of the cell containing `x`.
    pub fn bin_of(&self, x: &[f64]) -> Result<BinIndex> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has dimension {}, partition has {}",
                x.len(),
                self.dim
            )));
        }
        let mut coords = Vec::with_capacity(self.dim);
        for (k, &xk) in x.iter().enumerate() {
            coords.push(self.axis_bin(k, xk)?);
        }
        Ok(BinIndex(coords))
    }

    /// Center of cell `j`: `origin_k + (j_k + 1/2) * h` on every axis.
    pub fn center_of(&self, j: &BinIndex) -> Vec<f64> {
        assert_eq!(j.dim(), self.dim, "index dimension mismatch");
        j.0
            .iter()
            .enumerate()
            .map(|(k, &jk)| self.origin[k] + (jk as f64 + 0.5) * self.bin_width)
            .collect()
    }

    /// Center coordinate of cell `j` along one axis.
    pub fn axis_center(&self, axis: usize, j: i64) -> f64 {
        self.origin[axis] + (j as f64 + 0.5) * self.bin_width
    }

    /// Lower and upper edges of cell `j` along one axis.
    pub fn axis_edges(&self, axis: usize, j: i64) -> (f64, f64) {
        let o = self.origin[axis];
        (o + (j as f64) * self.bin_width, o + ((j + 1) as f64) * self.bin_width)
    }

    /// Half-open bounding box `[lower, upper)` of cell `j`.
    pub fn bin_range(&self, j: &BinIndex) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(j.dim(), self.dim, "index dimension mismatch");
        let mut lower = Vec::with_capacity(self.dim);
        let mut upper = Vec::with_capacity(self.dim);
        for (k, &jk) in j.0.iter().enumerate() {
            let (lo, hi) = self.axis_edges(k, jk);
            lower.push(lo);
            upper.push(hi);
        }
        (lower, upper)
    }
}
