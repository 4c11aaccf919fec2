//! Verifying the convolution theorems, with a custom instance and the
//! closure theorem for mixtures.
//!
//! ```text
//! cargo run --release --example theorems
//! ```

use heavytail::classify::LabConfig;
use heavytail::families::parse_measure;
use heavytail::lemmas::Inputs;
use heavytail::theorems::{closure_s, verify_theorem, InstanceConfig, THEOREM_IDS};

fn main() -> heavytail::Result<()> {
    let cfg = LabConfig::default();
    for id in THEOREM_IDS {
        let r = verify_theorem(id, &InstanceConfig::default(), &cfg)?;
        println!("{id:<16} {}", r.verdict);
    }
    let instance = InstanceConfig {
        inputs: Inputs::new().with("F", "lognormal(mu=0, sigma=1)")?,
        n: Some(3),
        ..InstanceConfig::default()
    };
    print!("{}", verify_theorem("nfold.liminf", &instance, &cfg)?.summary());

    let f = parse_measure("pareto(alpha=1)")?;
    let g = parse_measure("lognormal(mu=0, sigma=1)")?;
    let r = closure_s(f, g, 0.3, None, &cfg)?;
    println!("closure: {} (agreement {:?})", r.verdict, r.agreement);
    Ok(())
}
