//! Leading eigenvalues of the three reference cases as the truncation depth grows.

use selfsim_spectrum::presets::table;
use selfsim_spectrum::{DiscreteProblem, SimilarityParams};

fn main() {
    for id in 1..=3 {
        let t = table(id).unwrap();
        let p = SimilarityParams::validate(t.n, &t.a, &t.beta, &t.d).unwrap();
        println!("table {id}");
        for depth in (4..=t.depth).step_by(2) {
            let problem = DiscreteProblem::at_depth(&p, depth).unwrap();
            match problem.spectrum(t.pos_count, t.neg_count, 1e-10) {
                Ok(eigs) => {
                    let pos: Vec<String> =
                        eigs.positive.iter().map(|v| format!("{v:.6e}")).collect();
                    let neg: Vec<String> =
                        eigs.negative.iter().map(|v| format!("{v:.6e}")).collect();
                    println!(
                        "  depth {depth:>2} dim {:>2}  pos [{}]  neg [{}]",
                        problem.dim(),
                        pos.join(" "),
                        neg.join(" ")
                    );
                }
                Err(e) => println!("  depth {depth:>2} dim {:>2}  {e}", problem.dim()),
            }
        }
    }
}
