//! Deterministic test images.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::raster::{Raster, Rgb};

pub const BAND_COLORS: [Rgb; 3] = [[200, 40, 40], [40, 160, 60], [30, 40, 200]];

/// Vertical bands of equal width (up to rounding), one per color.
pub fn vertical_bands(width: usize, height: usize, colors: &[Rgb]) -> Raster {
    let n = colors.len().max(1);
    Raster::from_fn(width, height, |x, _| colors[(x * n / width).min(n - 1)]).expect("non-empty size")
}

pub fn three_bands(width: usize, height: usize) -> Raster {
    vertical_bands(width, height, &BAND_COLORS)
}

/// Left half `left`, right half `right`.
pub fn halves(width: usize, height: usize, left: Rgb, right: Rgb) -> Raster {
    vertical_bands(width, height, &[left, right])
}

/// Two-tone checkerboard of `cell`-sized squares with uniform per-pixel noise
/// of the given amplitude.
pub fn checkerboard_noise(width: usize, height: usize, cell: usize, amplitude: u8, seed: u64) -> Raster {
    let mut rng = StdRng::seed_from_u64(seed);
    let cell = cell.max(1);
    Raster::from_fn(width, height, |x, y| {
        let base: i32 = if (x / cell + y / cell).is_multiple_of(2) { 60 } else { 190 };
        let mut px = [0u8; 3];
        for c in &mut px {
            let d = rng.random_range(-(amplitude as i32)..=amplitude as i32);
            *c = (base + d).clamp(0, 255) as u8;
        }
        px
    })
    .expect("non-empty size")
}

/// Smooth sky-like gradient, a few flat shapes and light sensor noise.
pub fn natural_like(width: usize, height: usize, seed: u64) -> Raster {
    let mut rng = StdRng::seed_from_u64(seed);
    let shapes: Vec<(f64, f64, f64, Rgb)> = (0..6)
        .map(|_| {
            let cx = rng.random_range(0.0..width as f64);
            let cy = rng.random_range(0.0..height as f64);
            let r = rng.random_range(0.05..0.25) * width.min(height) as f64;
            (cx, cy, r, [rng.random(), rng.random(), rng.random()])
        })
        .collect();
    let horizon = height * 3 / 5;
    Raster::from_fn(width, height, |x, y| {
        let mut px: Rgb = if y < horizon {
            let t = y as f64 / horizon as f64;
            [(90.0 + 80.0 * t) as u8, (140.0 + 60.0 * t) as u8, 230]
        } else {
            let t = (y - horizon) as f64 / (height - horizon).max(1) as f64;
            [(70.0 + 40.0 * t) as u8, (120.0 - 30.0 * t) as u8, 50]
        };
        for &(cx, cy, r, color) in &shapes {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r * r {
                px = color;
            }
        }
        let n: i32 = rng.random_range(-3..=3);
        px.map(|c| (c as i32 + n).clamp(0, 255) as u8)
    })
    .expect("non-empty size")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_widths() {
        let img = three_bands(64, 4);
        let widths: Vec<usize> = BAND_COLORS
            .iter()
            .map(|c| (0..64).filter(|&x| img.get(x, 0) == *c).count())
            .collect();
        assert_eq!(widths, vec![22, 21, 21]);
    }

    #[test]
    fn seeded_generators_are_reproducible() {
        assert_eq!(natural_like(40, 30, 7), natural_like(40, 30, 7));
        assert_ne!(natural_like(40, 30, 7), natural_like(40, 30, 8));
        assert_eq!(checkerboard_noise(16, 16, 4, 20, 1), checkerboard_noise(16, 16, 4, 20, 1));
    }
}
