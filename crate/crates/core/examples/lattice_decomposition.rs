//! Exact convolution algebra on lattice measures and the tail decomposition
//! at a level `h`.
//!
//! ```text
//! cargo run --release --example lattice_decomposition
//! ```

use heavytail::decomp::{conv_tail, decomposition_at_level};
use heavytail::lattice::LatticeMeasure;
use heavytail::measure::Window;
use heavytail::quad::QuadConfig;

fn main() -> heavytail::Result<()> {
    let f = LatticeMeasure::new(0.0, 1.0, vec![0.2, 0.3, 0.0, 0.5])?;
    let g = LatticeMeasure::new(1.0, 1.0, vec![0.6, 0.4])?;
    let fg = f.convolve(&g)?;
    println!("F * G = {}", fg.to_text().trim());
    println!("F restricted to [0, 1]: {:?}", f.restrict(&Window::Closed(0.0, 1.0)).masses());

    let cfg = QuadConfig::default();
    let x = 4.0;
    println!("(F * G)(4, ∞) = {} by summation, {} from the product", conv_tail(&f, &g, x, &cfg)?.value(), fg.tail_at(x));
    for level in [0.5, 1.0, 2.0, 3.0] {
        let r = decomposition_at_level(&f, &g, level, x, &cfg)?;
        println!(
            "h = {level}: le_h {:.3} + gt_h {:.3} = {:.3}; upper bound slack {:.3}; three-term residual {:?}",
            r.le_h, r.gt_h, r.total, r.upper_slack, r.three_term_residual
        );
    }
    Ok(())
}
