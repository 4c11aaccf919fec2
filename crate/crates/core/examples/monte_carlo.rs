//! Monte Carlo cross-checks: convolution tail, decomposition terms from
//! shared samples, and the single-big-jump ratio.
//!
//! ```text
//! cargo run --release --example monte_carlo
//! ```

use heavytail::families::AnalyticLaw;
use heavytail::hfunc::HFunction;
use heavytail::montecarlo::{big_jump_report, mc_conv_tail, mc_decomposition, mc_grid};
use heavytail::probe::Thresholds;
use heavytail::suite::pareto_pair_tail;

fn main() -> heavytail::Result<()> {
    let p = AnalyticLaw::pareto(1.0)?;
    let e = mc_conv_tail(&p, &p, 100.0, 10_000_000, 7)?;
    println!("Pr(S > 100) = {:.7} +- {:.1e}, exact {:.7}, z = {:.2}", e.value, e.std_error, pareto_pair_tail(100.0), e.z_score(pareto_pair_tail(100.0)));

    let d = mc_decomposition(&p, &p, &HFunction::constant(10.0), 100.0, 1_000_000, 7)?;
    println!(
        "hits: total {} = le_h {} + gt_h {}; three-term exact {:?}",
        d.total.hits, d.le_h.hits, d.gt_h.hits, d.three_term_exact()
    );

    for law in [p, AnalyticLaw::weibull(0.5)?, AnalyticLaw::exponential(1.0)?] {
        let xs = mc_grid(&law, 1_000_000, 10);
        let (report, est) = big_jump_report(&law, &xs, 1_000_000, 7, &Thresholds::default())?;
        let shown: Vec<String> = est.iter().map(|b| format!("{:.0}:{:.3}", b.x, b.ratio)).collect();
        println!("{}: {} [{}]", report.subject, report.verdict, shown.join(" "));
    }
    Ok(())
}
