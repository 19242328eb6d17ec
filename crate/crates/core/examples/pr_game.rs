//! The PR-box game played on a post-selected ensemble.

use prbox::{pr_game, presets, PrMapping};

fn main() -> prbox::Result<()> {
    let report = pr_game(&presets::pr_box_pair(), &PrMapping::standard())?;
    for pair in report.pairs {
        println!(
            "x = {}, y = {}: P(a xor b = xy) = {:.6}",
            pair.x, pair.y, pair.success
        );
    }
    println!(
        "mean success {:.6} (classical limit 0.75)",
        report.mean_success
    );

    let singlet = presets::singlet();
    let plain = prbox::PrePostEnsemble::new(singlet.clone(), singlet)?;
    let r = pr_game(&plain, &PrMapping::standard())?;
    println!(
        "singlet post-selected on itself: mean success {:.6}",
        r.mean_success
    );
    Ok(())
}
