//! Swaps two copies of a maximally correlated ensemble through a Bell
//! measurement and inspects the Alice–Clare branches.

use prbox::presets;
use prbox::swapping::{swap_protocol, MeasurementBasis, SwapConfig};
use prbox::Unitary2;

fn main() -> prbox::Result<()> {
    let ens = presets::pr_box_pair();
    let h = Unitary2::hadamard();
    let report = swap_protocol(
        &ens,
        &ens,
        &MeasurementBasis::bell(),
        Some(&h),
        &SwapConfig::default(),
    )?;
    for o in &report.outcomes {
        let chsh = o.chsh.as_ref().map_or(f64::NAN, |c| c.value);
        let dev = o.scan.as_ref().map_or(f64::NAN, |s| s.max_deviation);
        let class = o.class.as_ref().map_or("impossible", |c| c.name());
        println!(
            "{:<5} p = {:.3}  {class:<18} B = {chsh:.6}  no-signal deviation {dev:.1e}",
            o.label, o.probability
        );
    }
    println!("total probability {:.12}", report.total_probability);
    Ok(())
}
