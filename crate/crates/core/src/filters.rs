//! Visual-hint boundary filters.
//!
//! `f1` rewards boundaries that live at large scales, `f2` rewards
//! boundaries between dissimilar regions; a boundary's confidence is their
//! product. The logistic form `2 / (1 + e^{-v}) - 1` is evaluated as the
//! equivalent `tanh(v / 2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leafseg::FeatureDescriptor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMeasure {
    #[default]
    Cosine,
    Dice,
    Jaccard,
    Overlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    /// Scale damping coefficient.
    pub beta1: f64,
    /// Similarity damping coefficient.
    pub beta2: f64,
    /// Amplitude modulation of the scale-dependent steepness.
    pub alpha: f64,
    /// Similarity at or above which two regions are indistinguishable.
    pub t: f64,
    pub measure: SimilarityMeasure,
}

impl FilterParams {
    /// α=1, β1=8, β2=3, t=0.994.
    pub const EVAL: FilterParams = FilterParams {
        beta1: 8.0,
        beta2: 3.0,
        alpha: 1.0,
        t: 0.994,
        measure: SimilarityMeasure::Cosine,
    };

    /// Steeper similarity response used for rendering filter surfaces:
    /// β1=8, β2=10, α=20.
    pub const FIGURES: FilterParams = FilterParams {
        beta1: 8.0,
        beta2: 10.0,
        alpha: 20.0,
        t: 0.994,
        measure: SimilarityMeasure::Cosine,
    };

    pub fn validate(&self) -> Result<()> {
        let positive = [self.beta1, self.beta2, self.alpha]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive {
            return Err(Error::InvalidArgument(
                "beta1, beta2 and alpha must be positive".into(),
            ));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "similarity threshold t must lie in (0, 1], got {}",
                self.t
            )));
        }
        Ok(())
    }
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams::EVAL
    }
}

/// Relative scale `z / L` of a partition of size `z` in an image of size `L`.
pub fn scale_descriptor(z: usize, l: usize) -> Result<f64> {
    if z == 0 || l == 0 || z > l {
        return Err(Error::InvalidArgument(format!(
            "partition size {z} must lie in 1..={l}"
        )));
    }
    Ok(z as f64 / l as f64)
}

#[inline]
fn logistic(v: f64) -> f64 {
    (0.5 * v).tanh()
}

/// Scale filter: `2 / (1 + e^{-β1 s}) - 1`.
pub fn f1(s: f64, params: &FilterParams) -> f64 {
    logistic(params.beta1 * s)
}

/// Scale-independent similarity filter, normalised so `f2(0) = 1`.
pub fn f2_plain(x: f64, beta2: f64) -> f64 {
    logistic(beta2 * (1.0 - x)) / logistic(beta2)
}

/// Scale-dependent steepness `y = α · f(β2 s) / f(β2)`.
pub fn steepness(s: f64, params: &FilterParams) -> f64 {
    params.alpha * logistic(params.beta2 * s) / logistic(params.beta2)
}

/// Similarity filter with scale-dependent steepness; zero once `x >= t`.
///
/// At `s = 0` the steepness vanishes and the ratio is taken at its limit
/// `1 - x`.
pub fn f2(x: f64, s: f64, params: &FilterParams) -> f64 {
    if x >= params.t {
        return 0.0;
    }
    let y = steepness(s, params);
    let denom = logistic(y);
    if denom == 0.0 {
        return 1.0 - x;
    }
    logistic(y * (1.0 - x)) / denom
}

/// Boundary confidence `f1(s) · f2(x, s)`.
pub fn cnf(s: f64, x: f64, params: &FilterParams) -> f64 {
    f1(s, params) * f2(x, s, params)
}

/// Similarity in `[0, 1]` of two regions' mean colors. Two black regions
/// are identical; black against any color is fully dissimilar.
pub fn similarity(a: &FeatureDescriptor, b: &FeatureDescriptor, measure: SimilarityMeasure) -> f64 {
    let (u, v) = (a.mean(), b.mean());
    let dot: f64 = (0..3).map(|c| u[c] * v[c]).sum();
    let nu: f64 = u.iter().map(|c| c * c).sum();
    let nv: f64 = v.iter().map(|c| c * c).sum();
    if nu == 0.0 && nv == 0.0 {
        return 1.0;
    }
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let x = match measure {
        SimilarityMeasure::Cosine => dot / (nu.sqrt() * nv.sqrt()),
        SimilarityMeasure::Dice => 2.0 * dot / (nu + nv),
        SimilarityMeasure::Jaccard => dot / (nu + nv - dot),
        SimilarityMeasure::Overlap => {
            let mins: f64 = (0..3).map(|c| u[c].min(v[c])).sum();
            mins / u.iter().sum::<f64>().min(v.iter().sum())
        }
    };
    x.clamp(0.0, 1.0)
}
