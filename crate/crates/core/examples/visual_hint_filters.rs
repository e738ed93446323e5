//! Tabulates the scale and similarity filters and their product.

use hintseg::filters::{cnf, f1, f2, FilterParams};

fn main() {
    for (name, p) in [("eval", FilterParams::EVAL), ("figures", FilterParams::FIGURES)] {
        println!("{name}: beta1={} beta2={} alpha={} t={}", p.beta1, p.beta2, p.alpha, p.t);
        print!("{:>6}", "s\\x");
        let xs = [0.0, 0.25, 0.5, 0.75, 0.95, 0.99];
        for x in xs {
            print!("{x:>8.2}");
        }
        println!("{:>8}", "f1");
        for s in [0.05, 0.1, 0.25, 0.5, 1.0] {
            print!("{s:>6.2}");
            for x in xs {
                print!("{:>8.4}", cnf(s, x, &p));
            }
            println!("{:>8.4}", f1(s, &p));
        }
        println!("f2(0.5, s=1) = {:.6}\n", f2(0.5, 1.0, &p));
    }
}
