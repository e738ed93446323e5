//! Cuts the probability tree at several levels and writes mean-color renders.

use hintseg::pbt::render_mean_colors;
use hintseg::pipeline::{run, Params};
use hintseg::synthetic::natural_like;

fn main() -> hintseg::Result<()> {
    let img = natural_like(160, 120, 3);
    let seg = run(&img, &Params::default())?;
    let n = seg.graph.segment_count();
    println!("{n} initial segments, root weight {:?}", seg.pbt.nodes[seg.pbt.root].weight);
    for t in [0.0, 0.5, 0.9, 0.99, 1.0] {
        println!("t_visual={t:<4} -> {} segments", seg.pbt.cut_by_threshold(t).count);
    }
    for n_visual in [2, 4, 8].into_iter().filter(|&v| v <= n) {
        let labels = seg.pbt.cut_by_count(n_visual)?.apply(&seg.graph.labels)?;
        let path = format!("render_{n_visual}.ppm");
        render_mean_colors(&img, &labels)?.save(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}
