//! Histogram entropy, segment-set entropy, and the noise-tolerant stopping
//! bound used by the decomposition.
//!
//! All logarithms are natural; `0 ln 0` is taken as 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{LabelMap, Window};

/// Uniform-width histogram over feature values in `[0, 255]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn new(bins: usize) -> Result<Self> {
        if bins == 0 || bins > 256 {
            return Err(Error::InvalidArgument(format!(
                "bin count must be in 1..=256, got {bins}"
            )));
        }
        Ok(Histogram {
            counts: vec![0; bins],
            total: 0,
        })
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
        }
        let total = counts.iter().sum();
        Ok(Histogram { counts, total })
    }

    /// Bin index of an 8-bit value under `bins` uniform bins.
    #[inline]
    pub fn bin_of(value: u8, bins: usize) -> usize {
        value as usize * bins / 256
    }

    #[inline]
    pub fn add(&mut self, value: u8) {
        let b = Self::bin_of(value, self.counts.len());
        self.counts[b] += 1;
        self.total += 1;
    }

    /// Histogram of a window over a row-major feature plane of `stride` columns.
    pub fn of_window(plane: &[u8], stride: usize, win: Window, bins: usize) -> Result<Self> {
        let mut h = Histogram::new(bins)?;
        for y in win.y0..win.y1() {
            for &v in &plane[y * stride + win.x0..y * stride + win.x1()] {
                h.add(v);
            }
        }
        Ok(h)
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Folds bin `j` into bin `i`, leaving `j` empty.
    pub fn merge_bins(&mut self, i: usize, j: usize) {
        if i != j {
            self.counts[i] += self.counts[j];
            self.counts[j] = 0;
        }
    }
}

/// `-sum p ln p` over a sequence of non-negative counts with the given total.
pub(crate) fn entropy_of_counts(counts: impl IntoIterator<Item = u64>, total: u64) -> f64 {
    let n = total as f64;
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .fold(0.0, |acc, c| {
            let p = c as f64 / n;
            acc - p * p.ln()
        })
}

/// Approximate image entropy H(V) of a feature histogram, in nats.
pub fn approx_entropy(hist: &Histogram) -> Result<f64> {
    if hist.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    Ok(entropy_of_counts(hist.counts.iter().copied(), hist.total))
}

/// Entropy of a segment set: each label is one region, weighted by area.
///
/// Callers pass a connected-component labelling when they want H(X) in the
/// strict sense; the function itself only counts areas.
pub fn segment_entropy(labels: &LabelMap) -> Result<f64> {
    let total = labels.labels().len() as u64;
    if total == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(entropy_of_counts(
        labels.areas().into_iter().map(|a| a as u64),
        total,
    ))
}

/// Dominant/noise segment model behind the stopping bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Number of dominant segments tolerated per window.
    pub k: u64,
    /// Area fraction covered by dominant segments.
    pub a: f64,
    /// Number of noise segments.
    pub k_prime: u64,
    /// Noise probability threshold. Informational; the bound uses `a` and `k_prime`.
    pub t_noise: f64,
}

impl NoiseModel {
    pub fn new(k: u64, a: f64, k_prime: u64) -> Result<Self> {
        let m = NoiseModel {
            k,
            a,
            k_prime,
            t_noise: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k_prime == 0 {
            return Err(Error::InvalidArgument("k and k' must be at least 1".into()));
        }
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "dominant fraction a must lie in (0, 1], got {}",
                self.a
            )));
        }
        if !(0.0..=1.0).contains(&self.t_noise) {
            return Err(Error::InvalidArgument("t_noise must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn with_k(self, k: u64) -> Self {
        NoiseModel { k, ..self }
    }
}

/// Upper bound on H(V) for a window with `k` dominant segments covering a
/// fraction `a` and `k'` noise segments sharing the rest:
/// `-(a ln(a/k) + (1-a) ln((1-a)/k'))`.
pub fn noise_bound(model: &NoiseModel) -> f64 {
    let k = model.k as f64;
    let a = model.a;
    let dominant = a * (a / k).ln();
    let rest = 1.0 - a;
    let noise = if rest > 0.0 {
        rest * (rest / model.k_prime as f64).ln()
    } else {
        0.0
    };
    -(dominant + noise)
}

/// Allowance added to `ln k` by the noise segments.
///
/// Non-negative whenever the binary entropy of `a` covers
/// `(1-a) ln(k/k')`, which includes every model with `k' >= k` and the
/// usual `a` close to 1. Outside that regime the value is negative and the
/// bound is stricter than `ln k`.
pub fn noise_redundancy(model: &NoiseModel) -> f64 {
    noise_bound(model) - (model.k as f64).ln()
}

/// True when the window may stop splitting: `H(V) <= bound`.
pub fn stopping_holds(hist: &Histogram, model: &NoiseModel) -> bool {
    match approx_entropy(hist) {
        Ok(h) => h <= noise_bound(model),
        Err(_) => true,
    }
}
