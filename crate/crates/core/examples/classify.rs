//! Class-membership verdicts: long-tailed, subexponential, tail equivalent.
//!
//! ```text
//! cargo run --release --example classify
//! ```

use std::sync::Arc;

use heavytail::classify::{test_long_tailed, test_subexponential, test_tail_equivalence, test_weak_tail_equivalence, LabConfig};
use heavytail::families::{parse_law, AnalyticLaw};
use heavytail::measure::Mixture;

fn main() -> heavytail::Result<()> {
    let cfg = LabConfig::default();
    for spec in ["pareto(alpha=1)", "lognormal(mu=0, sigma=1)", "weibull(k=0.5)", "weibull(k=1.5)", "exponential(lambda=1)"] {
        let law = parse_law(spec)?;
        println!("{spec}: long-tailed {}, subexponential {}", test_long_tailed(&law, &cfg)?.verdict, test_subexponential(&law, &cfg)?.verdict);
    }

    let g = AnalyticLaw::counterexample(1.0)?;
    print!("{}", test_long_tailed(&g, &cfg)?.summary());
    let mix = Mixture::pair(0.5, AnalyticLaw::pareto(1.0)?.into_shared(), 0.5, Arc::new(g))?;
    print!("{}", test_long_tailed(&mix, &cfg)?.summary());

    let p1 = parse_law("pareto(alpha=1)")?;
    let two = parse_law("regvarying(alpha=1, c=2)")?;
    println!("pareto(1) vs 2/x: equivalent {}, weakly equivalent {}", test_tail_equivalence(&p1, &two, &cfg)?.verdict, test_weak_tail_equivalence(&p1, &two, &cfg)?.verdict);
    Ok(())
}
