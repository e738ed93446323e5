//! Full pipeline on an image file.
//!
//! cargo run --example segment_image -- input.ppm 6

use hintseg::pbt::render_mean_colors;
use hintseg::pipeline::{run, Params};
use hintseg::raster::Raster;

fn main() -> hintseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(path) = args.next() else {
        eprintln!("usage: segment_image <input.ppm|pgm> [n_visual]");
        std::process::exit(2);
    };
    let n_visual: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(6);
    let img = Raster::load(&path)?;
    let seg = run(&img, &Params::default())?;
    let labels = seg
        .pbt
        .cut_by_count(n_visual.min(seg.graph.segment_count()))?
        .apply(&seg.graph.labels)?;
    labels.save("labels.pgm")?;
    render_mean_colors(&img, &labels)?.save("render.ppm")?;
    std::fs::write("tree.json", seg.pbt.to_json()?)?;
    println!("{} initial segments, {} shown", seg.graph.segment_count(), labels.count());
    Ok(())
}
