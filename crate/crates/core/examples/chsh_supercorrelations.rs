//! CHSH values beyond Tsirelson's bound on pre- and post-selected pairs.

use prbox::{
    chsh_value, correlation, maximize_chsh, presets, ChshConfig, ChshSettings, MeasurementDirection,
};

fn main() -> prbox::Result<()> {
    let ens = presets::pr_box_pair();
    let (x, z) = (MeasurementDirection::x(), MeasurementDirection::z());
    for (name, a, b) in [("ZZ", z, z), ("XX", x, x), ("ZX", z, x), ("XZ", x, z)] {
        println!("C({name}) = {:+.6}", correlation(&ens, &a, &b)?);
    }
    let s = ChshSettings {
        a: x,
        a_prime: z,
        b: x,
        b_prime: z,
    };
    println!("B at x/z settings = {:.6}", chsh_value(&ens, &s)?);

    let cfg = ChshConfig::default();
    for alpha in [0.5, 0.2, 0.04] {
        let r = maximize_chsh(&presets::swapped_z(alpha, 0.0)?, &cfg)?;
        println!(
            "swapped pair alpha = {alpha:<5} max B = {:.6} ({} evaluations)",
            r.value, r.optimizer.evaluations
        );
    }
    Ok(())
}
