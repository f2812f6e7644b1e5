//! Four neurons, two digit sentences that are reversals of each other.
//!
//! ```text
//! cargo run --release --example toy
//! ```

use comply::toy::{self, ToyConfig};

fn main() -> comply::Result<()> {
    let report = toy::run(&ToyConfig::default())?;
    print!("{}", report.render());

    let w = &report.trained.weights;
    for (label, mu) in ["1..9", "9..1"].iter().zip(report.winners) {
        println!("\n{label} lives in neuron {mu}:");
        for d in 0..10 {
            let z = w.get(mu, d);
            println!(
                "  token {d}: |w| = {:.3}  arg/pi = {:+.3}",
                z.norm(),
                z.arg() / std::f64::consts::PI
            );
        }
    }
    Ok(())
}
