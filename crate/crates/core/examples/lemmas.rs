//! The decomposition lemmas on their default instances and on a user
//! instance.
//!
//! ```text
//! cargo run --release --example lemmas
//! ```

use heavytail::classify::LabConfig;
use heavytail::hfunc::HFunction;
use heavytail::lemmas::{lemma_defaults, lemma_probe, LEMMA_IDS};

fn main() -> heavytail::Result<()> {
    let cfg = LabConfig::default();
    let h = HFunction::sqrt();
    for id in LEMMA_IDS {
        let r = lemma_probe(id, &lemma_defaults(id)?, &h, &cfg)?;
        println!("{id}: {}", r.verdict);
    }
    let inputs = lemma_defaults("h1")?.with("G", "weibull(k=0.5)")?;
    print!("{}", lemma_probe("h1", &inputs, &h, &cfg)?.summary());
    Ok(())
}
