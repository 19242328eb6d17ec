//! Attempts to signal by acting after a measurement: a conditional spin
//! flip, a bare rotation, and a partially entangled swapping basis.

use prbox::nosignal::unitary_attack_demo;
use prbox::presets;
use prbox::swapping::non_maximal_attack;

fn main() -> prbox::Result<()> {
    let demo = unitary_attack_demo()?;
    println!(
        "singlet, Alice flips on down: P_B(down_z) = {:.6}",
        demo.with_flip
    );
    println!(
        "singlet, no flip:             P_B(down_z) = {:.6}",
        demo.without_flip
    );
    let s = &demo.swapped;
    println!(
        "swapped pair (alpha {}, theta {}): baseline {:.6}, largest shift from a rotation {:.3e}",
        s.alpha, s.theta, s.baseline, s.max_shift
    );

    let pair = presets::pr_box_pair();
    for eta in [0.3, std::f64::consts::FRAC_PI_6, 0.7] {
        let r = non_maximal_attack(&pair, &pair, eta, 2000, 0)?;
        println!(
            "non-maximal basis eta = {eta:.4}: worst deviation {:.4} on outcome {}",
            r.worst.max_deviation, r.worst_label
        );
    }
    Ok(())
}
