//! The acceptance battery: closed-form oracles, class verdicts, exact
//! decomposition identities, the counterexample law, every lemma and theorem,
//! Monte Carlo cross-checks and the level-function machinery.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{check_h_insensitive, test_long_tailed, test_subexponential, LabConfig};
use crate::decomp::{conv_tail, decomposition_at_level, DecompositionReport};
use crate::families::{parse_law, parse_measure, AnalyticLaw, CounterexampleLaw};
use crate::hfunc::{construct_h, HConfig, HFunction};
use crate::lattice::LatticeMeasure;
use crate::lemmas::{lemma_defaults, lemma_probe, LEMMA_IDS};
use crate::measure::{Measure, Mixture, TailCurve};
use crate::montecarlo::{big_jump_estimates, mc_conv_tail, MCEstimate, MIN_HITS};
use crate::output::{mc_csv, Header, McRow};
use crate::probe::Verdict;
use crate::theorems::{closure_s, verify_theorem, InstanceConfig, THEOREM_IDS};
use crate::Result;

/// `Pr(S > x)` for the sum of two independent Pareto(1) variables on `[1, ∞)`.
pub fn pareto_pair_tail(x: f64) -> f64 {
    1.0 / (x - 1.0) + 2.0 / (x * x) * (x - 1.0).ln() + (x - 2.0) / (x * (x - 1.0))
}

/// `Pr(S > x) = (1 + x)e^{-x}` for two independent Exponential(1) variables.
pub fn exponential_pair_tail(x: f64) -> f64 {
    (1.0 + x) * (-x).exp()
}

/// Parameters of a suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Caps the top of every verdict grid.
    pub grid_top: Option<f64>,
    /// Master seed of the Monte Carlo and randomized sections.
    pub seed: u64,
    /// Sample size of the Monte Carlo agreement checks.
    pub mc_n: usize,
    /// Sample size of the Pareto pair cross-check.
    pub mc_n_large: usize,
    /// Number of random lattice pairs for the decomposition identities.
    pub lattice_pairs: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            grid_top: None,
            seed: 1,
            mc_n: 1_000_000,
            mc_n_large: 10_000_000,
            lattice_pairs: 100,
        }
    }
}

impl SuiteConfig {
    pub fn lab(&self) -> LabConfig {
        match self.grid_top {
            Some(t) => LabConfig::default().with_grid_top(t),
            None => LabConfig::default(),
        }
    }

    pub fn header(&self) -> Header {
        Header::new("suite all")
            .with("grid_top", self.grid_top.map_or("default".into(), |t| t.to_string()))
            .with("seed", self.seed)
            .with("mc_n", self.mc_n)
            .with("mc_n_large", self.mc_n_large)
            .with("lattice_pairs", self.lattice_pairs)
    }
}

/// One row of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteItem {
    /// Acceptance criterion number, or `lemma`.
    pub criterion: String,
    pub id: String,
    pub expected: Verdict,
    pub verdict: Verdict,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

impl SuiteItem {
    pub fn met(&self) -> bool {
        self.verdict == self.expected
    }
}

/// Monte Carlo estimates of one section, written as a CSV table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSection {
    pub name: String,
    pub rows: Vec<McRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub items: Vec<SuiteItem>,
    #[serde(skip)]
    pub mc: Vec<McSection>,
}

impl SuiteReport {
    /// 0 when every item meets its expectation; 1 when an item reached the
    /// opposite definite verdict; 2 when the only misses are inconclusive.
    pub fn exit_code(&self) -> i32 {
        let missed: Vec<&SuiteItem> = self.items.iter().filter(|i| !i.met()).collect();
        if missed.is_empty() {
            0
        } else if missed.iter().any(|i| i.verdict != Verdict::Inconclusive) {
            1
        } else {
            2
        }
    }

    /// Fixed-width table, one line per item.
    pub fn table(&self) -> String {
        let w = self.items.iter().map(|i| i.id.len()).max().unwrap_or(2).max(2);
        let mut s = format!("{:<6} {:<w$} {:<12} {:<12} {:>8}  detail\n", "crit", "id", "expected", "verdict", "seconds");
        for i in &self.items {
            let mark = if i.met() { "" } else { "  <-- MISSED" };
            s.push_str(&format!(
                "{:<6} {:<w$} {:<12} {:<12} {:>8.2}  {}{mark}\n",
                i.criterion,
                i.id,
                i.expected.to_string(),
                i.verdict.to_string(),
                i.seconds,
                i.detail
            ));
        }
        let met = self.items.iter().filter(|i| i.met()).count();
        s.push_str(&format!("{met}/{} items met their expected verdict\n", self.items.len()));
        s
    }

    /// CSV of each Monte Carlo section, keyed by section name.
    pub fn mc_csvs(&self) -> Vec<(String, String)> {
        self.mc
            .iter()
            .map(|sec| {
                let h = self.config.header().with("section", &sec.name);
                (sec.name.clone(), mc_csv(&h, &sec.rows))
            })
            .collect()
    }
}

fn holds_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Holds
    } else {
        Verdict::Fails
    }
}

struct Items {
    items: Vec<SuiteItem>,
    log: Option<Box<dyn FnMut(&SuiteItem)>>,
}

impl Items {
    fn push(&mut self, criterion: &str, id: &str, expected: Verdict, run: impl FnOnce() -> Result<(Verdict, String)>) {
        let start = Instant::now();
        let (verdict, detail) = run().unwrap_or_else(|e| (Verdict::Inconclusive, format!("error: {e}")));
        let item = SuiteItem {
            criterion: criterion.into(),
            id: id.into(),
            expected,
            verdict,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        };
        if let Some(log) = self.log.as_mut() {
            log(&item);
        }
        self.items.push(item);
    }
}

/// A random pair of lattice measures on a common lattice, a point `x ≥ 0`
/// inside the support of the sum and a level in `[0, x/2]`.
pub fn random_lattice_pair<R: Rng>(rng: &mut R) -> (LatticeMeasure, LatticeMeasure, f64, f64) {
    let step = [0.25, 0.5, 1.0][rng.random_range(0..3)];
    let side = |rng: &mut R| {
        let origin = step * rng.random_range(0..8) as f64;
        let len = rng.random_range(1..40);
        let masses: Vec<f64> = (0..len)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
            .collect();
        LatticeMeasure::new(origin, step, masses).expect("valid lattice")
    };
    let f = side(rng);
    let g = side(rng);
    let top = f.position(f.len() - 1) + g.position(g.len() - 1);
    let x = rng.random::<f64>() * top;
    let level = rng.random::<f64>() * x / 2.0;
    (f, g, x, level)
}

/// Worst residuals of the decomposition identities over `count` random pairs.
pub fn decomposition_battery(seed: u64, count: usize) -> Result<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = crate::quad::QuadConfig::default();
    let (mut split, mut three, mut slack) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..count {
        let (f, g, x, level) = random_lattice_pair(&mut rng);
        let r: DecompositionReport = decomposition_at_level(&f, &g, level, x, &cfg)?;
        split = split.max(r.split_residual.abs());
        three = three.max(r.three_term_residual.map_or(f64::INFINITY, f64::abs));
        slack = slack.min(r.upper_slack);
        let above = decomposition_at_level(&f, &g, x / 2.0 + rng.random::<f64>() * x, x, &cfg)?;
        split = split.max(above.split_residual.abs());
        slack = slack.min(above.upper_slack);
    }
    Ok((split, three, slack))
}

/// MC against quadrature on the points of `xs` with probability at least `1e-4`.
fn agreement_rows(f: &AnalyticLaw, g: &AnalyticLaw, n: usize, seed: u64, lab: &LabConfig) -> Result<(Vec<McRow>, usize, f64)> {
    let mut rows = Vec::new();
    let (mut checked, mut worst) = (0, 0.0f64);
    let xs: Vec<f64> = (0..16).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
    for (i, &x) in xs.iter().enumerate() {
        let exact = conv_tail(f, g, x, &lab.quad)?.value();
        if exact < 1e-4 {
            break;
        }
        let e = mc_conv_tail(f, g, x, n, crate::montecarlo::derive_seed(seed, i as u64))?;
        rows.push(McRow::from_estimate(x, &e));
        if e.hits >= MIN_HITS {
            checked += 1;
            worst = worst.max(e.z_score(exact).abs());
        }
    }
    Ok((rows, checked, worst))
}

/// Runs the battery; `log` sees each item as soon as it is decided.
pub fn run_suite(cfg: &SuiteConfig, log: Option<Box<dyn FnMut(&SuiteItem)>>) -> Result<SuiteReport> {
    let lab = cfg.lab();
    let mut it = Items { items: Vec::new(), log };
    let mut mc = Vec::new();
    let p1 = AnalyticLaw::pareto(1.0)?;

    it.push("1", "oracle.pareto", Verdict::Holds, || {
        let v = conv_tail(&p1, &p1, 100.0, &lab.quad)?.value();
        let exact = pareto_pair_tail(100.0);
        Ok((holds_if((v - exact).abs() <= 1e-5), format!("conv tail {v:.9} vs closed form {exact:.9}")))
    });

    it.push("2", "oracle.exponential", Verdict::Holds, || {
        let e = AnalyticLaw::exponential(1.0)?;
        let mut worst = 0.0f64;
        for x in [1.0, 5.0, 10.0] {
            let exact = exponential_pair_tail(x);
            worst = worst.max((conv_tail(&e, &e, x, &lab.quad)?.value() - exact).abs() / exact);
        }
        Ok((holds_if(worst <= 1e-9), format!("max relative error {worst:.2e} at x in {{1, 5, 10}}")))
    });

    for (spec, expected) in [
        ("pareto(alpha=1)", Verdict::Holds),
        ("pareto(alpha=1.5)", Verdict::Holds),
        ("lognormal(mu=0, sigma=1)", Verdict::Holds),
        ("weibull(k=0.5)", Verdict::Holds),
        ("exponential(lambda=1)", Verdict::Fails),
        ("weibull(k=1.5)", Verdict::Fails),
    ] {
        it.push("2,3", &format!("subexp {spec}"), expected, || {
            let law = parse_law(spec)?;
            let r = test_subexponential(&law, &lab)?;
            let top = r.probes().iter().flat_map(|p| p.points.last()).map(|q| q.x).fold(0.0, f64::max);
            Ok((r.verdict, format!("grid top {top:.0e}")))
        });
    }

    it.push("4", "decomposition.lattice", Verdict::Holds, || {
        let (split, three, slack) = decomposition_battery(cfg.seed, cfg.lattice_pairs)?;
        Ok((
            holds_if(split <= 1e-12 && three <= 1e-12 && slack >= -1e-12),
            format!("{} pairs: split {split:.1e}, three-term {three:.1e}, min slack {slack:.1e}", cfg.lattice_pairs),
        ))
    });

    let cx = CounterexampleLaw::new(1.0)?;
    it.push("5", "counterexample.breakpoints", Verdict::Holds, || {
        let (mut x, mut worst) = (1.0f64, 0.0f64);
        for b in cx.breakpoints(8)? {
            let y = x * (2f64.powi(b.n as i32) - 1.0).exp();
            worst = worst.max(((b.x - x) / x).abs()).max(((b.y - y) / y).abs());
            x = y * 2f64.powi(b.n as i32 + 1);
        }
        Ok((holds_if(worst <= 1e-10), format!("max relative deviation {worst:.1e} for n <= 8")))
    });
    let g = AnalyticLaw::counterexample(1.0)?;
    it.push("5", "counterexample.jumps", Verdict::Holds, || {
        let ratios: Vec<f64> = cx.breakpoints(8)?.iter().map(|b| g.tail(b.y) / g.tail_left(b.y)).collect();
        Ok((holds_if(ratios.iter().all(|r| *r == 0.5)), format!("G(y_n)/G(y_n-) = {:?}", ratios[0])))
    });
    it.push("5", "counterexample.longtail", Verdict::Fails, || {
        Ok((test_long_tailed(&g, &lab)?.verdict, "G is not long-tailed".into()))
    });
    it.push("5", "counterexample.mixture", Verdict::Holds, || {
        let mix = Mixture::pair(0.5, p1.clone().into_shared(), 0.5, Arc::new(g.clone()))?;
        Ok((test_long_tailed(&mix, &lab)?.verdict, "(F + G)/2 is long-tailed".into()))
    });

    for id in LEMMA_IDS {
        it.push("lemma", id, Verdict::Holds, || {
            let r = lemma_probe(id, &lemma_defaults(id)?, &HFunction::sqrt(), &lab)?;
            Ok((r.verdict, r.subject.clone()))
        });
    }

    for id in THEOREM_IDS {
        it.push("6", id, Verdict::Holds, || {
            let r = verify_theorem(id, &InstanceConfig::default(), &lab)?;
            Ok((r.verdict, r.subject.clone()))
        });
    }
    for (f, g, p) in [
        ("pareto(alpha=1)", "pareto(alpha=1)", 0.5),
        ("pareto(alpha=1)", "lognormal(mu=0, sigma=1)", 0.5),
        ("pareto(alpha=1)", "lognormal(mu=0, sigma=1)", 0.1),
        ("pareto(alpha=1.5)", "weibull(k=0.5)", 0.9),
        ("pareto(alpha=1)", "regvarying(alpha=1, c=2)", 0.5),
    ] {
        it.push("6", &format!("closure.S agree [{f}, {g}, p={p}]"), Verdict::Holds, || {
            let r = closure_s(parse_measure(f)?, parse_measure(g)?, p, None, &lab)?;
            let verdicts: Vec<String> = r.parts.iter().map(|q| q.verdict.to_string()).collect();
            let v = match r.agreement {
                Some(true) => Verdict::Holds,
                _ if r.parts.iter().any(|q| q.verdict == Verdict::Inconclusive) => Verdict::Inconclusive,
                _ => Verdict::Fails,
            };
            Ok((v, format!("parts: {}", verdicts.join(", "))))
        });
    }

    it.push("7", "nfold.spot", Verdict::Holds, || {
        let r = conv_tail(&p1, &p1, 100.0, &lab.quad)?.value() / p1.tail(100.0);
        Ok((holds_if((r - 2.0919).abs() <= 1e-3), format!("tail(F*F, 100)/F(100) = {r:.5}")))
    });

    let mut large: Option<MCEstimate> = None;
    it.push("8", "mc.pareto", Verdict::Holds, || {
        let e = mc_conv_tail(&p1, &p1, 100.0, cfg.mc_n_large, cfg.seed)?;
        large = Some(e);
        Ok((
            holds_if(e.within(0.020_919_4, 3.0)),
            format!("{:.7} +- {:.1e} (z = {:.2})", e.value, e.std_error, e.z_score(0.020_919_4)),
        ))
    });
    if let Some(e) = large {
        mc.push(McSection {
            name: "pareto_pair".into(),
            rows: vec![McRow::from_estimate(100.0, &e)],
        });
    }
    let mut jump_rows = Vec::new();
    it.push("8", "mc.big_jump", Verdict::Holds, || {
        let b = big_jump_estimates(&p1, &[100.0], cfg.mc_n, cfg.seed)?[0];
        let target = pareto_pair_tail(100.0) / (0.02 - 0.0001);
        jump_rows.push(McRow {
            x: b.x,
            estimate: b.ratio,
            std_error: b.std_error,
            n: b.sum.n,
            hits: b.sum.hits,
        });
        let z = (b.ratio - target) / b.std_error;
        Ok((holds_if(z.abs() <= 3.0), format!("{:.5} +- {:.1e} vs {target:.5} (z = {z:.2})", b.ratio, b.std_error)))
    });
    mc.push(McSection {
        name: "big_jump".into(),
        rows: jump_rows,
    });
    it.push("8", "mc.reproducible", Verdict::Holds, || {
        let h = Header::new("mc conv-tail").with("seed", cfg.seed);
        let run = || -> Result<String> {
            let e = mc_conv_tail(&p1, &p1, 100.0, cfg.mc_n, cfg.seed)?;
            Ok(mc_csv(&h, &[McRow::from_estimate(100.0, &e)]))
        };
        Ok((holds_if(run()? == run()?), "two runs with the same seed give identical CSV".into()))
    });
    for (f, g) in [
        ("pareto(alpha=1)", "pareto(alpha=1)"),
        ("pareto(alpha=1)", "lognormal(mu=0, sigma=1)"),
        ("lognormal(mu=0, sigma=1)", "weibull(k=0.5)"),
        ("pareto(alpha=1.5)", "pareto(alpha=1.5)"),
        ("exponential(lambda=1)", "exponential(lambda=1)"),
        ("weibull(k=1.5)", "weibull(k=1.5)"),
    ] {
        let mut rows = Vec::new();
        it.push("8", &format!("mc.agree [{f}, {g}]"), Verdict::Holds, || {
            let (r, checked, worst) = agreement_rows(&parse_law(f)?, &parse_law(g)?, cfg.mc_n, cfg.seed, &lab)?;
            rows = r;
            Ok((holds_if(worst <= 3.0), format!("{checked} points, max |z| = {worst:.2}")))
        });
        mc.push(McSection {
            name: format!("agree_{}_{}", slug(f), slug(g)),
            rows,
        });
    }

    it.push("9", "h.construct", Verdict::Holds, || {
        let h = construct_h(
            &[&p1 as &dyn TailCurve],
            &HConfig {
                horizon: lab.analytic.top,
                ..HConfig::default()
            },
        )?;
        let r = check_h_insensitive(&p1, &h, &lab)?;
        Ok((r.verdict, h.describe()))
    });
    it.push("9", "h.half", Verdict::Fails, || {
        let r = check_h_insensitive(&p1, &HFunction::half(), &lab)?;
        let ls: Vec<String> = r.claims.iter().map(|c| c.probe.trend.map_or("-".into(), |t| format!("{:.4}", t.limit))).collect();
        Ok((r.verdict, format!("limits {}", ls.join(", "))))
    });
    it.push("9", "h.half.limits", Verdict::Holds, || {
        let r = check_h_insensitive(&p1, &HFunction::half(), &lab)?;
        let ls: Vec<f64> = r.claims.iter().filter_map(|c| c.probe.trend.map(|t| t.limit)).collect();
        let ok = ls.len() == 2 && (ls[0] - 2.0).abs() <= 0.02 && (ls[1] - 2.0 / 3.0).abs() <= 0.02;
        Ok((holds_if(ok), format!("fitted {ls:.4?} vs [2, 0.6667]")))
    });

    Ok(SuiteReport {
        config: cfg.clone(),
        items: it.items,
        mc,
    })
}

fn slug(spec: &str) -> String {
    spec.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect::<String>()
        .split('_')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert!((pareto_pair_tail(100.0) - 0.020_919_024).abs() < 1e-9);
        assert!((exponential_pair_tail(10.0) - 11.0 * (-10f64).exp()).abs() < 1e-18);
    }

    #[test]
    fn lattice_battery_is_exact() {
        let (split, three, slack) = decomposition_battery(3, 20).unwrap();
        assert!(split <= 1e-12 && three <= 1e-12 && slack >= -1e-12, "{split} {three} {slack}");
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("lognormal(mu=0, sigma=1)"), "lognormal_mu_0_sigma_1");
    }
}
