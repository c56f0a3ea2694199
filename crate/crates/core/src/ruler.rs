//! Sparse observation index sets ("rulers").
//!
//! A ruler for dimension `d` is a set of 1-based sensor indices in `[1, d]`
//! whose ordered pairwise differences `k - j` cover every lag `0..d`. The
//! lag-pair sets and the coverage coefficient `sum_s 1 / |pairs at lag s|`
//! drive both the Toeplitz-projected estimators and their error behaviour.

// Needed without std; shadowed by inherent methods when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;


use crate::error::{Error, Result};

/// A validated ruler. Indices are 1-based and strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ruler {
    dim: usize,
    indices: Vec<usize>,
    lag_counts: Vec<usize>,
}

/// Ordered index pairs `(j, k)` with `k - j = lag`, `j <= k`, sorted by `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagPairs {
    pub lag: usize,
    pub pairs: Vec<(usize, usize)>,
}

fn lag_counts(dim: usize, indices: &[usize]) -> Vec<usize> {
    let mut counts = alloc::vec![0usize; dim];
    for (a, &j) in indices.iter().enumerate() {
        for &k in &indices[a..] {
            counts[k - j] += 1;
        }
    }
    counts
}

impl Ruler {
    /// Validates `indices` (any order) as a ruler for dimension `dim`.
    pub fn new(mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("ruler dimension must be positive"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > dim) {
            return Err(Error::OutOfRange { index: bad, dim });
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Duplicate(w[0]));
        }
        let lag_counts = lag_counts(dim, &indices);
        if let Some(missing) = lag_counts.iter().position(|&c| c == 0) {
            return Err(Error::MissingLag(missing));
        }
        Ok(Self {
            dim,
            indices,
            lag_counts,
        })
    }

    /// The complete array `{1, ..., d}`.
    pub fn full(dim: usize) -> Self {
        assert!(dim > 0, "ruler dimension must be positive");
        let indices: Vec<usize> = (1..=dim).collect();
        let lag_counts = (0..dim).map(|s| dim - s).collect();
        Self {
            dim,
            indices,
            lag_counts,
        }
    }

    /// The two-branch family `{1..a} ∪ {d, d - r, ..., d - (a - 1) r}` with
    /// `a = round(d^alpha)` and `r = round(d^(1 - alpha))`, both rounded half-up.
    ///
    /// Elements that fall below 1 are dropped. If rounding leaves a lag
    /// uncovered the result is an error, never a patched set.
    pub fn alpha(dim: usize, alpha: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("alpha rulers need d >= 2"));
        }
        if !(0.5..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument("alpha must lie in [1/2, 1]"));
        }
        let d = dim as f64;
        let head = round_half_up(d.powf(alpha)).clamp(1, dim);
        let step = round_half_up(d.powf(1.0 - alpha)).max(1);
        let mut indices: Vec<usize> = (1..=head).collect();
        for m in 0..head {
            let offset = m * step;
            if offset < dim {
                indices.push(dim - offset);
            }
        }
        indices.sort_unstable();
        indices.dedup();
        match Self::new(indices, dim) {
            Ok(r) => Ok(r),
            Err(Error::MissingLag(s)) => Err(Error::NotARuler { missing_lag: s }),
            Err(e) => Err(e),
        }
    }

    /// Parses a comma-separated list of 1-based indices, e.g. `"1,2,3,4,8,12,16"`.
    pub fn parse(list: &str, dim: usize) -> Result<Self> {
        let mut indices = Vec::new();
        for tok in list.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            let v: usize = tok
                .parse()
                .map_err(|_| Error::InvalidArgument("ruler index is not a positive integer"))?;
            indices.push(v);
        }
        Self::new(indices, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// 1-based indices, strictly increasing.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of observed coordinates `|Ω|`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.dim
    }

    /// 0-based row positions into the full `d`-dimensional vector.
    pub fn zero_based(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().map(|i| i - 1)
    }

    /// `|Ω_s|` for every lag, always nonzero.
    pub fn lag_counts(&self) -> &[usize] {
        &self.lag_counts
    }

    pub fn lag_pairs(&self, lag: usize) -> Result<LagPairs> {
        if lag >= self.dim {
            return Err(Error::LagOutOfRange { lag, dim: self.dim });
        }
        let mut pairs = Vec::with_capacity(self.lag_counts[lag]);
        for &j in &self.indices {
            if self.indices.binary_search(&(j + lag)).is_ok() {
                pairs.push((j, j + lag));
            }
        }
        Ok(LagPairs { lag, pairs })
    }

    /// Position pairs `(a, b)` into the ruler (0-based rows of an `|Ω|×|Ω|`
    /// matrix) grouped by lag; `a <= b` always.
    pub fn position_pairs(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out: Vec<Vec<(usize, usize)>> = self
            .lag_counts
            .iter()
            .map(|&c| Vec::with_capacity(c))
            .collect();
        for (a, &j) in self.indices.iter().enumerate() {
            for (b, &k) in self.indices.iter().enumerate().skip(a) {
                out[k - j].push((a, b));
            }
        }
        out
    }

    /// Coverage coefficient `φ(Ω) = Σ_s 1 / |Ω_s|`.
    pub fn coverage_coefficient(&self) -> f64 {
        self.lag_counts.iter().map(|&c| 1.0 / c as f64).sum()
    }

    /// Comma-separated index list, the on-disk representation.
    pub fn to_list_string(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        for (i, idx) in self.indices.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{idx}");
        }
        s
    }
}

impl fmt::Display for Ruler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_list_string())
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}
