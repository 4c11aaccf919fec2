//! One line per acceptance criterion; exits nonzero when any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use heavytail::classify::{check_h_insensitive, test_long_tailed, test_subexponential, LabConfig};
use heavytail::decomp::{conv_tail, decomposition_at_level};
use heavytail::families::{parse_law, parse_measure, AnalyticLaw, CounterexampleLaw};
use heavytail::hfunc::{construct_h, HConfig, HFunction};
use heavytail::measure::{Measure, Mixture, TailCurve};
use heavytail::montecarlo::{big_jump_estimates, mc_conv_tail};
use heavytail::probe::Verdict;
use heavytail::suite::random_lattice_pair;
use heavytail::theorems::{closure_s, verify_theorem, InstanceConfig, THEOREM_IDS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn pareto1_pair(x: f64) -> f64 {
    1.0 / (x - 1.0) + 2.0 / (x * x) * (x - 1.0).ln() + (x - 2.0) / (x * (x - 1.0))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let f = AnalyticLaw::pareto(1.0).map_err(err)?;
    let v = conv_tail(&f, &f, 100.0, &LabConfig::default().quad).map_err(err)?.value();
    let secs = start.elapsed().as_secs_f64();
    let exact = pareto1_pair(100.0);
    Ok((
        (v - 0.0209194).abs() <= 1e-5 && (v - exact).abs() <= 1e-5 && secs < 1.0,
        format!("{v:.8} vs closed form {exact:.8} in {secs:.3} s"),
    ))
}

fn criterion2() -> Outcome {
    let e = AnalyticLaw::exponential(1.0).map_err(err)?;
    let cfg = LabConfig::default();
    let mut worst = 0.0f64;
    for x in [1.0f64, 5.0, 10.0] {
        let exact = (1.0 + x) * (-x).exp();
        worst = worst.max((conv_tail(&e, &e, x, &cfg.quad).map_err(err)?.value() / exact - 1.0).abs());
    }
    let v = test_subexponential(&e, &cfg).map_err(err)?.verdict;
    Ok((worst <= 1e-9 && v == Verdict::Fails, format!("max relative error {worst:.1e}, subexponential test {v}")))
}

fn criterion3() -> Outcome {
    let start = Instant::now();
    let cfg = LabConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (spec, want) in [
        ("pareto(alpha=1)", Verdict::Holds),
        ("pareto(alpha=1.5)", Verdict::Holds),
        ("lognormal(mu=0, sigma=1)", Verdict::Holds),
        ("weibull(k=0.5)", Verdict::Holds),
        ("exponential(lambda=1)", Verdict::Fails),
        ("weibull(k=1.5)", Verdict::Fails),
    ] {
        let r = test_subexponential(&parse_law(spec).map_err(err)?, &cfg).map_err(err)?;
        let top = r.probes().iter().flat_map(|p| p.points.last()).map(|p| p.x).fold(0.0, f64::max);
        ok &= r.verdict == want && top >= 1e6;
        parts.push(format!("{spec} {}", r.verdict));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((ok && secs < 120.0, format!("{} in {secs:.1} s", parts.join("; "))))
}

fn criterion4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = LabConfig::default().quad;
    let (mut split, mut three, mut slack) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let (f, g, x, level) = random_lattice_pair(&mut rng);
        let r = decomposition_at_level(&f, &g, level, x, &cfg).map_err(err)?;
        split = split.max(r.split_residual.abs());
        three = three.max(r.three_term_residual.ok_or("level above x/2")?.abs());
        slack = slack.min(r.upper_slack);
    }
    Ok((
        split <= 1e-12 && three <= 1e-12 && slack >= -1e-12,
        format!("100 pairs: split {split:.1e}, three-term {three:.1e}, min slack {slack:.1e}"),
    ))
}

fn criterion5() -> Outcome {
    let cx = CounterexampleLaw::new(1.0).map_err(err)?;
    let g = AnalyticLaw::counterexample(1.0).map_err(err)?;
    let (mut x, mut worst, mut halves) = (1.0f64, 0.0f64, true);
    for n in 1..=8 {
        let (bx, by) = cx.breakpoint(n).map_err(err)?;
        let y = x * (2f64.powi(n as i32) - 1.0).exp();
        worst = worst.max((bx / x - 1.0).abs()).max((by / y - 1.0).abs());
        halves &= g.tail(by) / g.tail_left(by) == 0.5;
        x = y * 2f64.powi(n as i32 + 1);
    }
    let cfg = LabConfig::default();
    let lone = test_long_tailed(&g, &cfg).map_err(err)?.verdict;
    let f = AnalyticLaw::pareto(1.0).map_err(err)?;
    let mix = Mixture::pair(0.5, f.into_shared(), 0.5, Arc::new(g)).map_err(err)?;
    let mixed = test_long_tailed(&mix, &cfg).map_err(err)?.verdict;
    Ok((
        worst <= 1e-10 && halves && lone == Verdict::Fails && mixed == Verdict::Holds,
        format!("recurrence deviation {worst:.1e}, halving {halves}, G {lone}, mixture {mixed}"),
    ))
}

fn criterion6() -> Outcome {
    let cfg = LabConfig::default();
    let mut missed = Vec::new();
    for id in THEOREM_IDS {
        let r = verify_theorem(id, &InstanceConfig::default(), &cfg).map_err(err)?;
        if r.verdict != Verdict::Holds {
            missed.push(format!("{id} {}", r.verdict));
        }
    }
    let mut agree = 0;
    for (f, g, p) in [
        ("pareto(alpha=1)", "pareto(alpha=1)", 0.5),
        ("pareto(alpha=1)", "lognormal(mu=0, sigma=1)", 0.5),
        ("pareto(alpha=1)", "lognormal(mu=0, sigma=1)", 0.1),
        ("pareto(alpha=1.5)", "weibull(k=0.5)", 0.9),
        ("pareto(alpha=1)", "regvarying(alpha=1, c=2)", 0.5),
    ] {
        let r = closure_s(parse_measure(f).map_err(err)?, parse_measure(g).map_err(err)?, p, None, &cfg).map_err(err)?;
        let first = r.parts.first().map(|q| q.verdict);
        if r.parts.len() == 4 && r.parts.iter().all(|q| Some(q.verdict) == first) {
            agree += 1;
        } else {
            missed.push(format!("closure.S parts disagree on [{f}, {g}, p={p}]"));
        }
    }
    Ok((
        missed.is_empty(),
        format!("{} theorems hold, closure parts agree on {agree}/5 {}", THEOREM_IDS.len(), missed.join("; ")),
    ))
}

fn criterion7() -> Outcome {
    let f = AnalyticLaw::pareto(1.0).map_err(err)?;
    let r = conv_tail(&f, &f, 100.0, &LabConfig::default().quad).map_err(err)?.value() / f.tail(100.0);
    let oracle = pareto1_pair(100.0) * 100.0;
    Ok(((r - 2.0919).abs() <= 1e-3 && (r - oracle).abs() <= 1e-3, format!("ratio {r:.5}, oracle {oracle:.5}")))
}

fn cli_csv(seed: &str) -> Result<Vec<u8>, String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let args = [
        "heavytail", "--out", dir.path().to_str().ok_or("path")?, "--seed", seed, "-q", "mc", "conv-tail",
        "--F", "pareto(alpha=1)", "--G", "pareto(alpha=1)", "--x", "100", "--n", "100000",
    ];
    let (mut out, mut e) = (Vec::new(), Vec::new());
    let code = heavytail::cli::run_with(args, &mut out, &mut e);
    if code != 0 {
        return Err(format!("exit {code}: {}", String::from_utf8_lossy(&e)));
    }
    std::fs::read(dir.path().join("mc_conv_tail.csv")).map_err(err)
}

fn criterion8() -> Outcome {
    let f = AnalyticLaw::pareto(1.0).map_err(err)?;
    let e = mc_conv_tail(&f, &f, 100.0, 10_000_000, 1).map_err(err)?;
    let z = (e.value - 0.0209194) / e.std_error;
    let b = big_jump_estimates(&f, &[100.0], 1_000_000, 1).map_err(err)?[0];
    let oracle = pareto1_pair(100.0) / (1.0 - 0.99 * 0.99);
    let zb = (b.ratio - 1.0513) / b.std_error;
    let same = cli_csv("11")? == cli_csv("11")?;
    Ok((
        z.abs() <= 3.0 && zb.abs() <= 3.0 && same,
        format!(
            "mc {:.6} (z = {z:.2}); big jump {:.5} +- {:.1e} (z = {zb:.2}, oracle {oracle:.5}); csv identical {same}",
            e.value, b.ratio, b.std_error
        ),
    ))
}

fn criterion9() -> Outcome {
    let cfg = LabConfig::default();
    let f = AnalyticLaw::pareto(1.0).map_err(err)?;
    let h = construct_h(&[&f as &dyn TailCurve], &HConfig::default()).map_err(err)?.capped();
    let built = check_h_insensitive(&f, &h, &cfg).map_err(err)?.verdict;
    let half = check_h_insensitive(&f, &HFunction::half(), &cfg).map_err(err)?;
    let ls: Vec<f64> = half.claims.iter().filter_map(|c| c.probe.trend.map(|t| t.limit)).collect();
    let limits = ls.len() == 2 && (ls[0] - 2.0).abs() <= 0.02 && (ls[1] - 2.0 / 3.0).abs() <= 0.02;
    Ok((
        built == Verdict::Holds && half.verdict == Verdict::Fails && limits,
        format!("constructed h {built}; h = x/2 {} with limits {ls:.4?}", half.verdict),
    ))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion1),
        (2, criterion2),
        (3, criterion3),
        (4, criterion4),
        (5, criterion5),
        (6, criterion6),
        (7, criterion7),
        (8, criterion8),
        (9, criterion9),
    ];
    let mut failed = 0;
    for (n, run) in criteria {
        let start = Instant::now();
        let (ok, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!ok);
        println!(
            "criterion {n}: {} {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
