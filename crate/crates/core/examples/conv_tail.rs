//! Convolution tails by quadrature against two closed forms.
//!
//! For two Pareto(1) variables on `[1, ∞)`,
//! `Pr(S > x) = 1/(x−1) + 2ln(x−1)/x² + (x−2)/(x(x−1))`; for two
//! Exponential(1) variables, `Pr(S > x) = (1 + x)e^{−x}`.
//!
//! ```text
//! cargo run --release --example conv_tail
//! ```

use heavytail::decomp::conv_tail;
use heavytail::families::AnalyticLaw;
use heavytail::quad::QuadConfig;
use heavytail::suite::{exponential_pair_tail, pareto_pair_tail};

fn main() -> heavytail::Result<()> {
    let cfg = QuadConfig::default();
    let pareto = AnalyticLaw::pareto(1.0)?;
    let expo = AnalyticLaw::exponential(1.0)?;
    println!("{:>10} {:>22} {:>22} {:>10}", "x", "quadrature", "closed form", "rel err");
    for x in [10.0, 100.0, 1e4, 1e6] {
        let v = conv_tail(&pareto, &pareto, x, &cfg)?;
        let exact = pareto_pair_tail(x);
        println!("{x:>10} {:>22.15e} {exact:>22.15e} {:>10.1e}", v.value(), (v.value() - exact).abs() / exact);
    }
    for x in [1.0, 5.0, 10.0, 50.0] {
        let v = conv_tail(&expo, &expo, x, &cfg)?;
        let exact = exponential_pair_tail(x);
        println!("{x:>10} {:>22.15e} {exact:>22.15e} {:>10.1e}", v.value(), (v.value() - exact).abs() / exact);
    }
    Ok(())
}
