//! Scores cuts of the hierarchy with the unsupervised evaluators.

use hintseg::eval::{evaluate, EvalConfig, EvalReport};
use hintseg::pipeline::{run, Params};
use hintseg::synthetic::natural_like;

fn main() -> hintseg::Result<()> {
    let img = natural_like(128, 128, 5);
    let seg = run(&img, &Params::default())?;
    println!("{:>4} {}", "n", EvalReport::csv_header());
    for n in [1, 2, 4, 8, 16, 32].into_iter().filter(|&n| n <= seg.graph.segment_count()) {
        let labels = seg.pbt.cut_by_count(n)?.apply(&seg.graph.labels)?;
        let r = evaluate(&img, &labels, &EvalConfig::default())?;
        println!("{n:>4} {}", r.csv_line());
    }
    Ok(())
}
