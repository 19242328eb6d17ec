//! A three-party ensemble where Bob's choice to measure x changes Alice's
//! result.

use prbox::nosignal::ghz_demo;

fn main() -> prbox::Result<()> {
    let demo = ghz_demo()?;
    println!(
        "Bob and Clare idle:  P_A(down_z) = {:.6}",
        demo.alice_down_alone
    );
    println!(
        "Bob measures x:      P_A(up_z)   = {:.6}",
        demo.alice_up_with_bob_x
    );
    println!("joint outcomes with Bob on x:");
    for (outcome, p) in demo.with_bob_x.iter() {
        println!("  {:<3} {p:.6}", outcome.concat());
    }
    Ok(())
}
