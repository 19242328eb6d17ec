//! Bob's statistics on a singlet post-selected in `|↑x⟩|↑y⟩` depend on
//! whether Alice measures.

use prbox::{joint_local_abl, presets, MeasurementDirection};

fn main() -> prbox::Result<()> {
    let ens = presets::singlet_xy();
    let (x, y) = (MeasurementDirection::x(), MeasurementDirection::y());

    let alone = joint_local_abl(&ens, &[None, Some(x)])?;
    println!(
        "Alice idle:        P_B(up_x) = {:.6}, P_B(down_x) = {:.6}",
        alone.get("u"),
        alone.get("d")
    );

    let joint = joint_local_abl(&ens, &[Some(y), Some(x)])?;
    println!(
        "Alice measures y:  P_B(down_x) = {:.6}",
        joint.marginal(1, "d")
    );
    for (outcome, p) in joint.iter() {
        println!("  {:<3} {p:.6}", outcome.concat());
    }
    Ok(())
}
