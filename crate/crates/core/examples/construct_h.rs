//! Building an insensitivity scale `h` from tails and checking it.
//!
//! ```text
//! cargo run --release --example construct_h
//! ```

use heavytail::classify::{check_h_insensitive, LabConfig};
use heavytail::families::AnalyticLaw;
use heavytail::hfunc::{construct_h, HConfig, HFunction};
use heavytail::measure::TailCurve;

fn main() -> heavytail::Result<()> {
    let cfg = LabConfig::default();
    let p = AnalyticLaw::pareto(1.0)?;
    let ln = AnalyticLaw::lognormal(0.0, 1.0)?;
    let h = construct_h(&[&p as &dyn TailCurve, &ln], &HConfig::default())?;
    println!("{}", h.describe());
    println!("first breakpoints: {:?}", &h.breakpoints()[..5]);
    for x in [10.0, 1e3, 1e5, 1e7] {
        println!("h({x}) = {}", h.eval(x));
    }
    print!("{}", check_h_insensitive(&p, &h, &cfg)?.summary());
    print!("{}", check_h_insensitive(&ln, &h, &cfg)?.summary());
    print!("{}", check_h_insensitive(&p, &HFunction::half(), &cfg)?.summary());
    Ok(())
}
