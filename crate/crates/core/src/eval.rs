//! Unsupervised segmentation evaluators.

use serde::{Deserialize, Serialize};

use crate::entropy::{entropy_of_counts, Histogram};
use crate::error::{Error, Result};
use crate::raster::{luminance, LabelMap, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Luminance bins for the intra-region entropy.
    pub bins: usize,
    /// Base of the logarithm damping the color error in `q`.
    pub q_log_base: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            bins: 64,
            q_log_base: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub q: f64,
    pub h_r: f64,
    pub h_l: f64,
    pub e: f64,
    pub r: usize,
}

impl EvalReport {
    pub fn csv_header() -> &'static str {
        "q,h_r,h_l,e"
    }

    pub fn csv_line(&self) -> String {
        format!("{:e},{},{},{}", self.q, self.h_r, self.h_l, self.e)
    }
}

fn check(img: &Raster, labels: &LabelMap) -> Result<()> {
    if img.width() != labels.width() || img.height() != labels.height() {
        return Err(Error::DimensionMismatch {
            image_w: img.width(),
            image_h: img.height(),
            labels_w: labels.width(),
            labels_h: labels.height(),
        });
    }
    Ok(())
}

/// Borsotti score: penalises color error and many small equal-sized segments.
pub fn q_metric(img: &Raster, labels: &LabelMap, cfg: &EvalConfig) -> Result<f64> {
    check(img, labels)?;
    let r = labels.count();
    let areas = labels.areas();
    let mut sums = vec![[0u64; 3]; r];
    for (p, &l) in img.pixels().iter().zip(labels.labels()) {
        for c in 0..3 {
            sums[l as usize][c] += p[c] as u64;
        }
    }
    let means: Vec<[f64; 3]> = sums
        .iter()
        .zip(&areas)
        .map(|(s, &a)| s.map(|v| v as f64 / a as f64))
        .collect();
    let mut err = vec![0.0f64; r];
    for (p, &l) in img.pixels().iter().zip(labels.labels()) {
        let m = &means[l as usize];
        err[l as usize] += (0..3).map(|c| (p[c] as f64 - m[c]).powi(2)).sum::<f64>();
    }
    let mut same_area = std::collections::HashMap::new();
    for &a in &areas {
        *same_area.entry(a).or_insert(0usize) += 1;
    }
    let total: f64 = (0..r)
        .map(|i| {
            let s = areas[i] as f64;
            let rs = same_area[&areas[i]] as f64;
            err[i] / (1.0 + s.log(cfg.q_log_base)) + (rs / s).powi(2)
        })
        .sum();
    let nm = (img.width() * img.height()) as f64;
    Ok((r as f64).sqrt() / (1000.0 * nm) * total)
}

/// Area-weighted entropy of quantized luminance within each segment.
pub fn h_r(img: &Raster, labels: &LabelMap, cfg: &EvalConfig) -> Result<f64> {
    check(img, labels)?;
    let mut hists = vec![Histogram::new(cfg.bins)?; labels.count()];
    for (p, &l) in img.pixels().iter().zip(labels.labels()) {
        hists[l as usize].add(luminance(*p));
    }
    let total = labels.labels().len() as f64;
    Ok(hists
        .iter()
        .map(|h| h.total() as f64 / total * entropy_of_counts(h.counts().iter().copied(), h.total()))
        .sum())
}

/// Entropy of the segment-area distribution.
pub fn h_l(labels: &LabelMap) -> f64 {
    let total = labels.labels().len() as u64;
    entropy_of_counts(labels.areas().into_iter().map(|a| a as u64), total)
}

pub fn e_metric(img: &Raster, labels: &LabelMap, cfg: &EvalConfig) -> Result<f64> {
    Ok(h_r(img, labels, cfg)? + h_l(labels))
}

pub fn evaluate(img: &Raster, labels: &LabelMap, cfg: &EvalConfig) -> Result<EvalReport> {
    let q = q_metric(img, labels, cfg)?;
    let h_r = h_r(img, labels, cfg)?;
    let h_l = h_l(labels);
    Ok(EvalReport {
        q,
        h_r,
        h_l,
        e: h_r + h_l,
        r: labels.count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn halves(w: usize, h: usize) -> LabelMap {
        LabelMap::new(w, h, (0..w * h).map(|i| ((i % w) * 2 / w) as u32).collect()).unwrap()
    }

    #[test]
    fn q_flat_single_segment() {
        let img = Raster::filled(4, 4, [9, 9, 9]).unwrap();
        let q = q_metric(&img, &LabelMap::uniform(4, 4).unwrap(), &EvalConfig::default()).unwrap();
        assert!((q - 1.0 / (1000.0 * 16.0) / 256.0).abs() < 1e-15);
        assert!((q - 2.4414e-7).abs() < 1e-11);
    }

    #[test]
    fn q_two_flat_halves() {
        let img = Raster::from_fn(4, 4, |x, _| if x < 2 { [255, 0, 0] } else { [0, 0, 255] }).unwrap();
        let q = q_metric(&img, &halves(4, 4), &EvalConfig::default()).unwrap();
        let want = 2f64.sqrt() / 16000.0 * 2.0 * (2.0f64 / 8.0).powi(2);
        assert!((q - want).abs() < 1e-15);
    }

    #[test]
    fn q_counts_color_error() {
        let img = Raster::from_fn(2, 1, |x, _| [x as u8 * 2, 0, 0]).unwrap();
        let q = q_metric(&img, &LabelMap::uniform(2, 1).unwrap(), &EvalConfig::default()).unwrap();
        let want = 1.0 / 2000.0 * (2.0 / (1.0 + 2f64.log10()) + 0.25);
        assert!((q - want).abs() < 1e-15);
    }

    #[test]
    fn q_shrinks_with_area() {
        let cfg = EvalConfig::default();
        let q4 = q_metric(&Raster::filled(4, 4, [1, 2, 3]).unwrap(), &LabelMap::uniform(4, 4).unwrap(), &cfg).unwrap();
        let q8 = q_metric(&Raster::filled(8, 8, [1, 2, 3]).unwrap(), &LabelMap::uniform(8, 8).unwrap(), &cfg).unwrap();
        assert!(q8 < q4);
        assert!((q4 / q8 - 64.0).abs() < 1e-9);
    }

    #[test]
    fn h_r_examples() {
        let cfg = EvalConfig::default();
        let flat = Raster::from_fn(4, 4, |x, _| if x < 2 { [255, 0, 0] } else { [0, 0, 255] }).unwrap();
        assert_eq!(h_r(&flat, &halves(4, 4), &cfg).unwrap(), 0.0);
        let one = LabelMap::uniform(4, 4).unwrap();
        assert!((h_r(&flat, &one, &cfg).unwrap() - LN_2).abs() < 1e-12);
        let quarter = Raster::from_fn(4, 4, |x, _| if x < 3 { [0, 0, 0] } else { [255, 255, 255] }).unwrap();
        assert!((h_r(&quarter, &one, &cfg).unwrap() - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn h_l_examples() {
        assert_eq!(h_l(&LabelMap::uniform(3, 3).unwrap()), 0.0);
        assert!((h_l(&halves(4, 4)) - LN_2).abs() < 1e-12);
        let m = LabelMap::new(4, 1, vec![0, 0, 1, 2]).unwrap();
        assert!((h_l(&m) - 1.5 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn e_is_the_sum() {
        let img = Raster::from_fn(4, 4, |x, _| if x < 2 { [255, 0, 0] } else { [0, 0, 255] }).unwrap();
        let r = evaluate(&img, &halves(4, 4), &EvalConfig::default()).unwrap();
        assert!((r.e - LN_2).abs() < 1e-12);
        assert_eq!(r.e, r.h_r + r.h_l);
        assert_eq!(r.r, 2);
        let flat = Raster::filled(4, 4, [0, 0, 0]).unwrap();
        let one = evaluate(&flat, &LabelMap::uniform(4, 4).unwrap(), &EvalConfig::default()).unwrap();
        assert_eq!((one.h_r, one.h_l, one.e), (0.0, 0.0, 0.0));
    }

    #[test]
    fn mismatched_dimensions() {
        let img = Raster::filled(4, 4, [0, 0, 0]).unwrap();
        let labels = LabelMap::uniform(4, 3).unwrap();
        let cfg = EvalConfig::default();
        assert!(matches!(q_metric(&img, &labels, &cfg), Err(Error::DimensionMismatch { .. })));
        assert!(h_r(&img, &labels, &cfg).is_err());
        assert!(e_metric(&img, &labels, &cfg).is_err());
    }

    #[test]
    fn csv_line_has_four_fields() {
        let r = EvalReport { q: 2.4414e-7, h_r: 0.0, h_l: 0.0, e: 0.0, r: 1 };
        assert_eq!(r.csv_line().split(',').count(), 4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_case() -> impl Strategy<Value = (Raster, Vec<u32>, usize)> {
            (1usize..10, 1usize..10, 1u32..6).prop_flat_map(|(w, h, r)| {
                (
                    prop::collection::vec(any::<[u8; 3]>(), w * h),
                    prop::collection::vec(0..r, w * h),
                    Just(w),
                    Just(h),
                )
                    .prop_map(|(px, raw, w, h)| (Raster::new(w, h, px).unwrap(), raw, w))
            })
        }

        proptest! {
            #[test]
            fn h_l_bounded_by_log_count((img, raw, _w) in arb_case()) {
                let labels = LabelMap::compacted(img.width(), img.height(), &raw).unwrap();
                prop_assert!(h_l(&labels) <= (labels.count() as f64).ln() + 1e-12);
            }

            #[test]
            fn refinement_moves_entropies_apart((img, raw, _w) in arb_case(), pick in any::<u64>()) {
                let cfg = EvalConfig::default();
                let coarse = LabelMap::compacted(img.width(), img.height(), &raw).unwrap();
                // split one segment by pixel parity into a fresh id
                let target = (pick % coarse.count() as u64) as u32;
                let fresh = coarse.count() as u32;
                let fine_raw: Vec<u32> = coarse
                    .labels()
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| if l == target && i % 2 == 1 { fresh } else { l })
                    .collect();
                let fine = LabelMap::compacted(img.width(), img.height(), &fine_raw).unwrap();
                prop_assert!(h_r(&img, &fine, &cfg).unwrap() <= h_r(&img, &coarse, &cfg).unwrap() + 1e-9);
                prop_assert!(h_l(&fine) >= h_l(&coarse) - 1e-9);
            }

            #[test]
            fn report_fields_consistent((img, raw, _w) in arb_case()) {
                let labels = LabelMap::compacted(img.width(), img.height(), &raw).unwrap();
                let r = evaluate(&img, &labels, &EvalConfig::default()).unwrap();
                prop_assert!(r.q >= 0.0 && r.h_r >= 0.0 && r.h_l >= 0.0);
                prop_assert_eq!(r.e, r.h_r + r.h_l);
            }
        }
    }
}
