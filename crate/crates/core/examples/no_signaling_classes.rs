//! Classifies a few ensembles and searches each one for signaling.

use prbox::{classify, presets, scan_no_signaling};

fn main() -> prbox::Result<()> {
    let cases = [
        ("singlet-xy", presets::singlet_xy()),
        ("eq2-generic", presets::generic_max_entangled()),
        ("eq3-swapped(0.3,0.4)", presets::swapped_z(0.3, 0.4)?),
        ("eq9", presets::pr_box_pair()),
        ("equal(0.9)", presets::equal_pair(0.9)),
    ];
    println!(
        "{:<22} {:<18} {:>12}  signals",
        "ensemble", "class", "max dev"
    );
    for (name, ens) in cases {
        let class = classify(&ens, 1e-8)?;
        let scan = scan_no_signaling(&ens, 2000, 1)?;
        println!(
            "{name:<22} {:<18} {:>12.3e}  {}",
            class.name(),
            scan.max_deviation,
            scan.signals()
        );
    }
    Ok(())
}
