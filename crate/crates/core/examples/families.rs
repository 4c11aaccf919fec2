//! The parametric families: tails, quantiles, sampling, the law grammar and
//! the breakpoints of the law whose tail halves at `y_n`.
//!
//! ```text
//! cargo run --release --example families
//! ```

use heavytail::families::{family_catalogue, parse_law, parse_measure, CounterexampleLaw};
use heavytail::measure::{Measure, TailCurve};

fn main() -> heavytail::Result<()> {
    for (name, params, tail) in family_catalogue() {
        println!("{name:<15} {params:<45} {tail}");
    }
    for spec in ["pareto(alpha=1.5)", "lognormal(mu=0, sigma=1)", "weibull(k=0.5)", "regvarying(alpha=1, beta=0.5)"] {
        let law = parse_law(spec)?;
        let sample = law.sample(5, 42)?;
        println!("{spec}: tail(10) = {:.6e}, Q(0.01) = {:.4}, draws {sample:.3?}", law.tail(10.0), law.upper_quantile(0.01));
    }
    let mix = parse_measure("mix(0.5*pareto(alpha=1), 0.5*exponential(lambda=1, offset=2))")?;
    println!("{}: mass {}, tail(3) = {:.6}", mix.label(), mix.mass(), mix.tail(3.0));

    let g = CounterexampleLaw::new(1.0)?;
    print!("{}", g.breakpoints_csv(5)?);
    let law = parse_law("counterexample(alpha=1)")?;
    for b in g.breakpoints(4)? {
        println!("n = {}: G(y_n)/G(y_n-) = {}", b.n, law.tail(b.y) / law.tail_left(b.y));
    }
    Ok(())
}
