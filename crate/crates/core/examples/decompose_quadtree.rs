//! Decomposes a synthetic scene and prints the leaf windows.
//!
//! cargo run --example decompose_quadtree -- [k]

use hintseg::entropy::noise_bound;
use hintseg::quadtree::{decompose, DecompParams, NodeKind};
use hintseg::synthetic::natural_like;

fn main() -> hintseg::Result<()> {
    let k = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let params = DecompParams::default().with_k(k);
    let img = natural_like(128, 96, 1);
    let tree = decompose(&img, &params)?;
    let (non_chaos, chaos) = tree.count_leaves();
    println!("k={k} bound={:.4} depth={} leaves={non_chaos} chaos={chaos}", noise_bound(&params.model), tree.depth());
    for leaf in tree.leaves().take(12) {
        let w = leaf.window;
        let tag = if leaf.kind == NodeKind::Chaos { "chaos" } else { "" };
        println!("  ({:3},{:3}) {:3}x{:<3} H={:.3} {tag}", w.x0, w.y0, w.w, w.h, leaf.entropy);
    }
    Ok(())
}
