//! Optimal offset `d` of Bob's settings as the swapped pair becomes less
//! entangled.

use prbox::{d_alpha, ChshConfig};

fn main() -> prbox::Result<()> {
    let cfg = ChshConfig::default();
    println!(
        "{:>6} {:>9} {:>9} {:>13}",
        "alpha", "d", "B family", "B free"
    );
    for alpha in [0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.04, 0.01] {
        let p = d_alpha(alpha, &cfg)?;
        println!(
            "{alpha:>6} {:>9.5} {:>9.5} {:>13.5}",
            p.d, p.b_max, p.unconstrained
        );
    }
    Ok(())
}
