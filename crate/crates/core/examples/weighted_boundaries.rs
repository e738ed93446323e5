//! Builds the initial segmentation and writes the weighted boundary map.
//!
//! cargo run --example weighted_boundaries -- [input.ppm] [out.pgm]

use hintseg::pipeline::{run, Params};
use hintseg::raster::Raster;
use hintseg::synthetic::natural_like;

fn main() -> hintseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let img = match args.next() {
        Some(path) => Raster::load(path)?,
        None => natural_like(160, 120, 7),
    };
    let out = args.next().unwrap_or_else(|| "boundaries.pgm".into());
    let seg = run(&img, &Params::default())?;
    let g = &seg.graph;
    println!("{} segments, {} boundaries", g.segment_count(), g.boundaries.len());
    let mut strongest: Vec<_> = g.boundaries.iter().collect();
    strongest.sort_by(|a, b| b.1.cnf.total_cmp(&a.1.cnf));
    for (&(i, j), b) in strongest.iter().take(5) {
        println!("  {i:3} | {j:<3} cnf={:.4} length={}", b.cnf, b.length);
    }
    g.save_boundary_pgm(&out)?;
    println!("wrote {out}");
    Ok(())
}
