//! Finds the smallest k that leaves no chaos leaves.

use hintseg::cli::{chaos_leaves, find_optimization_point};
use hintseg::quadtree::DecompParams;
use hintseg::synthetic::{checkerboard_noise, natural_like, three_bands};

fn main() -> hintseg::Result<()> {
    let params = DecompParams::default();
    let images = [
        ("three bands", three_bands(64, 64)),
        ("checkerboard noise", checkerboard_noise(32, 32, 4, 40, 9)),
        ("natural-like", natural_like(96, 96, 2)),
    ];
    for (name, img) in &images {
        let k = find_optimization_point(img, &params)?;
        let before = if k > 3 { chaos_leaves(img, &params, k - 1)? } else { 0 };
        println!("{name:<20} k={k:<4} chaos at k-1: {before}");
    }
    Ok(())
}
