//! Writing a verdict as JSON, CSV and an SVG ratio plot with a config header.
//!
//! ```text
//! cargo run --release --example artifacts -- /tmp/heavytail-demo
//! ```

use heavytail::classify::{test_subexponential, LabConfig};
use heavytail::families::parse_law;
use heavytail::output::{probes_csv, svg_plot, to_json, Header, OutputDir};

fn main() -> heavytail::Result<()> {
    let dir = OutputDir::resolve(std::env::args_os().nth(1).map(Into::into));
    let spec = "weibull(k=0.5)";
    let report = test_subexponential(&parse_law(spec)?, &LabConfig::default())?;
    let header = Header::new("example artifacts").with("law", spec);
    let probes = report.probes();
    for (name, body) in [
        ("subexp.json", to_json(&header, &report)?),
        ("subexp.csv", probes_csv(&header, &probes)),
        ("subexp.svg", svg_plot(&report.subject, &probes, Some(1.0))),
    ] {
        println!("wrote {}", dir.save(name, &body)?.display());
    }
    Ok(())
}
