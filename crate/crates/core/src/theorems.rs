//! Numerical verification of the convolution theorems for long-tailed and
//! subexponential distributions.
//!
//! Every theorem runs its hypothesis checks first. A hypothesis that fails
//! is an error ([`Error::Hypothesis`]); one that is inconclusive caps the
//! overall verdict at `inconclusive`. Conclusions are evaluated as ratio
//! probes on the grids of the supplied [`LabConfig`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classify::{check_h_insensitive, tail_ratio, test_long_tailed, test_subexponential, test_tail_equivalence, test_weak_tail_equivalence, LabConfig};
use crate::decomp::{conv_tail, conv_tail_gt_gt_h, tail_value, Convolution};
use crate::hfunc::{construct_h, HConfig, HFunction};
use crate::lemmas::{quad_probe, settled_limit, tail_probe, value_ratio, weighted_tails, Inputs};
use crate::measure::{Measure, Mixture, SharedMeasure, TailCurve};
use crate::probe::{Claim, Verdict, VerdictReport};
use crate::{Error, Result};

/// Accepted theorem ids.
pub const THEOREM_IDS: [&str; 13] = [
    "long.add.5",
    "long.add.5.plus",
    "cor.l2",
    "cor.l1",
    "lower.bound",
    "nfold.liminf",
    "light.shift",
    "thm.s1",
    "thm.s2",
    "cor.s0",
    "cor.14",
    "cor.15",
    "closure.S",
];

/// A concrete instance of a theorem: its input laws and parameters.
#[derive(Clone, Debug, Default)]
pub struct InstanceConfig {
    pub inputs: Inputs,
    /// Number of convolution factors; `None` runs the default set.
    pub n: Option<usize>,
    /// Mixture weight for the closure theorem.
    pub p: Option<f64>,
    /// Level function; `None` uses the theorem's default.
    pub h: Option<HFunction>,
}

/// Summary of an instance for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub laws: Vec<(String, String)>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub h: Option<String>,
}

impl InstanceConfig {
    pub fn summary(&self) -> InstanceSummary {
        InstanceSummary {
            laws: self.inputs.specs().iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            n: self.n,
            p: self.p,
            h: self.h.as_ref().map(|h| h.describe()),
        }
    }
}

fn unknown_theorem(given: &str) -> Error {
    Error::UnknownId {
        kind: "theorem",
        given: given.into(),
        valid: THEOREM_IDS.join(", "),
    }
}

/// Default input laws of theorem `id`.
pub fn theorem_defaults(id: &str) -> Result<Inputs> {
    let i = Inputs::new();
    match id {
        "long.add.5" => i
            .with("F1", "pareto(alpha=1)")?
            .with("F2", "pareto(alpha=1, offset=2)")?
            .with("G", "lognormal(mu=0, sigma=1)"),
        "long.add.5.plus" => i
            .with("F1", "pareto(alpha=1)")?
            .with("F2", "pareto(alpha=1, offset=2)")?
            .with("G1", "exponential(lambda=1)")?
            .with("G2", "exponential(lambda=1, floor=0.5)"),
        "cor.l2" => i.with("F", "pareto(alpha=1)")?.with("G", "pareto(alpha=1)"),
        "cor.l1" => i.with("F", "pareto(alpha=1)")?.with("G", "counterexample(alpha=1)"),
        "lower.bound" => i
            .with("F1", "pareto(alpha=1)")?
            .with("F2", "lognormal(mu=0, sigma=1)")?
            .with("F3", "weibull(k=0.5)"),
        "nfold.liminf" => i.with("F", "pareto(alpha=1)"),
        "light.shift" => i.with("F", "pareto(alpha=1)")?.with("G", "exponential(lambda=1)"),
        "thm.s1" | "thm.s2" => i
            .with("F", "pareto(alpha=1)")?
            .with("G1", "regvarying(alpha=1, c=2)")?
            .with("G2", "exponential(lambda=1)")?
            .with("G3", "lognormal(mu=0, sigma=1)"),
        "cor.s0" => i
            .with("F", "pareto(alpha=1)")?
            .with("G", "mix(0.5*pareto(alpha=1), 0.5*weibull(k=0.5))"),
        "cor.14" => i.with("F", "pareto(alpha=1)")?.with("G", "counterexample(alpha=1)"),
        "cor.15" => i
            .with("F", "pareto(alpha=1)")?
            .with("G1", "regvarying(alpha=1, c=2)")?
            .with("G2", "pareto(alpha=1)"),
        "closure.S" => i.with("F", "pareto(alpha=1)")?.with("G", "pareto(alpha=1)"),
        other => Err(unknown_theorem(other)),
    }
}

/// Numbers of factors run when the instance does not fix `n`.
fn default_ns(id: &str) -> Vec<usize> {
    match id {
        "lower.bound" | "nfold.liminf" | "thm.s1" => vec![2, 3],
        _ => vec![2],
    }
}

struct Run<'a> {
    id: &'static str,
    cfg: &'a LabConfig,
    report: VerdictReport,
}

impl<'a> Run<'a> {
    fn new(id: &'static str, subject: String, cfg: &'a LabConfig) -> Self {
        Self {
            id,
            cfg,
            report: VerdictReport::new(subject, cfg.thresholds),
        }
    }

    /// Records a hypothesis check; a failed one aborts the theorem.
    fn hypothesis(&mut self, what: &str, mut check: VerdictReport) -> Result<()> {
        check.subject = format!("{what}: {}", check.subject);
        if check.verdict == Verdict::Fails {
            return Err(Error::Hypothesis {
                theorem: self.id.to_string(),
                hypothesis: check.subject,
                verdict: check.verdict,
            });
        }
        self.report.preconditions.push(check);
        Ok(())
    }

    /// `Ḡ = O(F̄)` as a hypothesis.
    fn big_o(&mut self, gname: &str, g: &dyn Measure, f: &dyn Measure) -> Result<()> {
        let mut b = VerdictReport::new(format!("{gname}(x, inf) / F(x, inf) bounded"), self.cfg.thresholds);
        let p = tail_probe(self.cfg, &[g, f], &format!("{gname} / F"), &format!("{gname}(x, inf)"), "F(x, inf)", |x| {
            tail_ratio(g, x, f, x)
        })?;
        b.push_claim(p, Claim::BoundedAbove);
        self.hypothesis(&format!("{gname} = O(F)"), b.conclude())
    }

    fn finish(self) -> VerdictReport {
        let mut r = self.report.conclude();
        if r.preconditions.iter().any(|p| p.verdict == Verdict::Inconclusive) {
            r.verdict = Verdict::all([r.verdict, Verdict::Inconclusive]);
            r.notes.push("a hypothesis could not be confirmed numerically".into());
        }
        r
    }
}

fn sum_measure(parts: &[&SharedMeasure]) -> Result<SharedMeasure> {
    Ok(Arc::new(Mixture::new(parts.iter().map(|m| (1.0, (*m).clone())).collect())?))
}

fn conv(f: &SharedMeasure, g: &SharedMeasure) -> SharedMeasure {
    Arc::new(Convolution::new(f.clone(), g.clone()))
}

fn auto_h(tails: &[&dyn TailCurve], cfg: &LabConfig) -> Result<HFunction> {
    Ok(construct_h(
        tails,
        &HConfig {
            horizon: cfg.analytic.top,
            ..HConfig::default()
        },
    )?
    .capped())
}

/// Verifies theorem `id` on `instance`, filling unset inputs with defaults.
pub fn verify_theorem(id: &str, instance: &InstanceConfig, cfg: &LabConfig) -> Result<VerdictReport> {
    let id: &'static str = THEOREM_IDS.iter().find(|t| **t == id).ok_or_else(|| unknown_theorem(id))?;
    let mut inputs = instance.inputs.clone();
    for (slot, spec) in theorem_defaults(id)?.specs() {
        inputs = inputs.or_default(slot, spec)?;
    }
    let inst = InstanceConfig {
        inputs,
        ..instance.clone()
    };
    let ns = match inst.n {
        Some(n) => vec![n],
        None => default_ns(id),
    };
    if ns.len() == 1 {
        return verify_once(id, &inst, ns[0], cfg);
    }
    let mut top = VerdictReport::new(format!("{id}: n in {ns:?}"), cfg.thresholds);
    for n in ns {
        top.parts.push(verify_once(id, &inst, n, cfg)?);
    }
    Ok(top.conclude())
}

fn verify_once(id: &'static str, inst: &InstanceConfig, n: usize, cfg: &LabConfig) -> Result<VerdictReport> {
    let i = &inst.inputs;
    let q = cfg.quad;
    let th = cfg.thresholds;
    match id {
        "long.add.5" => {
            let (f1, f2, g) = (i.get("F1")?, i.get("F2")?, i.get("G")?);
            let mut run = Run::new(id, format!("{id}: F1 = {}, F2 = {}, G = {}", f1.label(), f2.label(), g.label()), cfg);
            run.hypothesis("F1 ~ F2", test_tail_equivalence(f1.as_ref(), f2.as_ref(), cfg)?)?;
            run.hypothesis("G long-tailed", test_long_tailed(g.as_ref(), cfg)?)?;
            let p = quad_probe(cfg, "F1 * G / F2 * G", "tail(F1 * G, x)", "tail(F2 * G, x)", |x| {
                value_ratio(conv_tail(f1.as_ref(), g.as_ref(), x, &q), conv_tail(f2.as_ref(), g.as_ref(), x, &q))
            })?;
            run.report.push_claim(p, Claim::Limit { target: 1.0 });
            Ok(run.finish())
        }
        "long.add.5.plus" => {
            let (f1, f2, g1, g2) = (i.get("F1")?, i.get("F2")?, i.get("G1")?, i.get("G2")?);
            let mut run = Run::new(
                id,
                format!("{id}: F1 = {}, F2 = {}, G1 = {}, G2 = {}", f1.label(), f2.label(), g1.label(), g2.label()),
                cfg,
            );
            run.hypothesis("F1 ~ F2", test_tail_equivalence(f1.as_ref(), f2.as_ref(), cfg)?)?;
            run.hypothesis("G1 ~ G2", test_tail_equivalence(g1.as_ref(), g2.as_ref(), cfg)?)?;
            let s = sum_measure(&[&f1, &g1])?;
            run.hypothesis("F1 + G1 long-tailed", test_long_tailed(s.as_ref(), cfg)?)?;
            let p = quad_probe(cfg, "F1 * G1 / F2 * G2", "tail(F1 * G1, x)", "tail(F2 * G2, x)", |x| {
                value_ratio(conv_tail(f1.as_ref(), g1.as_ref(), x, &q), conv_tail(f2.as_ref(), g2.as_ref(), x, &q))
            })?;
            run.report.push_claim(p, Claim::Limit { target: 1.0 });
            Ok(run.finish())
        }
        "cor.l2" | "cor.l1" => {
            let (f, g) = (i.get("F")?, i.get("G")?);
            let mut run = Run::new(id, format!("{id}: F = {}, G = {}", f.label(), g.label()), cfg);
            run.hypothesis("F long-tailed", test_long_tailed(f.as_ref(), cfg)?)?;
            if id == "cor.l2" {
                run.hypothesis("G long-tailed", test_long_tailed(g.as_ref(), cfg)?)?;
            } else {
                let s = sum_measure(&[&f, &g])?;
                run.hypothesis("F + G long-tailed", test_long_tailed(s.as_ref(), cfg)?)?;
            }
            let fg = conv(&f, &g);
            let lagged = LabConfig {
                lags: vec![1.0, 5.0],
                ..cfg.clone()
            };
            run.report.parts.push(test_long_tailed(fg.as_ref(), &lagged)?);
            Ok(run.finish())
        }
        "lower.bound" => {
            let slots = ["F1", "F2", "F3", "F4", "F5", "F6"];
            if n < 2 || n > slots.len() {
                return Err(Error::InvalidParameter(format!("lower.bound needs 2 <= n <= {}, got {n}", slots.len())));
            }
            let fs: Vec<SharedMeasure> = slots[..n].iter().map(|s| i.get(s)).collect::<Result<_>>()?;
            let labels: Vec<String> = fs.iter().map(|f| f.label()).collect();
            let mut run = Run::new(id, format!("{id}: n = {n}, F = {}", labels.join(", ")), cfg);
            for (k, f) in fs.iter().enumerate() {
                run.hypothesis(&format!("F{} long-tailed", k + 1), test_long_tailed(f.as_ref(), cfg)?)?;
            }
            let chain = Convolution::chain(&fs)?;
            let refs: Vec<(f64, &dyn Measure)> = fs.iter().map(|f| (1.0, f.as_ref() as &dyn Measure)).collect();
            let p = quad_probe(cfg, "F1 * ... * Fn / sum Fk", "tail(F1 * ... * Fn, x)", "sum_k Fk(x, inf)", |x| {
                value_ratio(tail_value(chain.as_ref(), x), weighted_tails(&refs, x))
            })?;
            run.report.push_claim(p, Claim::LiminfAtLeast { bound: 1.0 });
            Ok(run.finish())
        }
        "nfold.liminf" => {
            if n < 2 {
                return Err(Error::InvalidParameter(format!("nfold.liminf needs n >= 2, got {n}")));
            }
            let f = i.get("F")?;
            let mut run = Run::new(id, format!("{id}: n = {n}, F = {}", f.label()), cfg);
            run.hypothesis("F long-tailed", test_long_tailed(f.as_ref(), cfg)?)?;
            let chain = Convolution::chain(&vec![f.clone(); n])?;
            let p = quad_probe(cfg, "F^{*n} / F", "tail(F^{*n}, x)", "F(x, inf)", |x| {
                value_ratio(tail_value(chain.as_ref(), x), tail_value(f.as_ref(), x))
            })?;
            run.report.push_claim(p, Claim::LiminfAtLeast { bound: n as f64 });
            Ok(run.finish())
        }
        "light.shift" => {
            let (f, g) = (i.get("F")?, i.get("G")?);
            let h = inst.h.clone().unwrap_or_else(HFunction::sqrt);
            let mut run = Run::new(id, format!("{id}: F = {}, G = {}, h = {}", f.label(), g.label(), h.describe()), cfg);
            run.hypothesis("F long-tailed", test_long_tailed(f.as_ref(), cfg)?)?;
            run.hypothesis("F h-insensitive", check_h_insensitive(f.as_ref(), &h, cfg)?)?;
            let mut small = VerdictReport::new("G(h(x), inf) = o(F(x, inf))", th);
            let p = tail_probe(cfg, &[g.as_ref(), f.as_ref()], "G(h) / F", "G(h(x), inf)", "F(x, inf)", |x| {
                tail_ratio(g.as_ref(), h.eval(x), f.as_ref(), x)
            })?;
            small.push_claim(p, Claim::Limit { target: 0.0 });
            run.hypothesis("G(h) negligible", small.conclude())?;
            let p = quad_probe(cfg, "F * G / F", "tail(F * G, x)", "F(x, inf)", |x| {
                value_ratio(conv_tail(f.as_ref(), g.as_ref(), x, &q), tail_value(f.as_ref(), x))
            })?;
            run.report.push_claim(p.clone(), Claim::LiminfAtLeast { bound: 1.0 });
            run.report.push_claim(p, Claim::Limit { target: 1.0 });
            Ok(run.finish())
        }
        "thm.s1" | "thm.s2" => {
            let f = i.get("F")?;
            let slots = ["G1", "G2", "G3", "G4", "G5", "G6"];
            if n < 2 || n > slots.len() {
                return Err(Error::InvalidParameter(format!("{id} needs 2 <= n <= {}, got {n}", slots.len())));
            }
            let gs: Vec<SharedMeasure> = slots[..n].iter().map(|s| i.get(s)).collect::<Result<_>>()?;
            let labels: Vec<String> = gs.iter().map(|g| g.label()).collect();
            let mut run = Run::new(id, format!("{id}: n = {n}, F = {}, G = {}", f.label(), labels.join(", ")), cfg);
            run.hypothesis("F subexponential", test_subexponential(f.as_ref(), cfg)?)?;
            for (k, g) in gs.iter().enumerate() {
                let name = format!("G{}", k + 1);
                let s = sum_measure(&[&f, g])?;
                run.hypothesis(&format!("F + {name} long-tailed"), test_long_tailed(s.as_ref(), cfg)?)?;
                run.big_o(&name, g.as_ref(), f.as_ref())?;
            }
            if id == "thm.s2" {
                run.hypothesis("G1 long-tailed", test_long_tailed(gs[0].as_ref(), cfg)?)?;
                run.hypothesis("G1 weakly equivalent to F", test_weak_tail_equivalence(gs[0].as_ref(), f.as_ref(), cfg)?)?;
            }
            let chain = Convolution::chain(&gs)?;
            if id == "thm.s1" {
                let refs: Vec<(f64, &dyn Measure)> = gs.iter().map(|g| (1.0, g.as_ref() as &dyn Measure)).collect();
                let p = quad_probe(cfg, "(G1 * ... * Gn - sum Gi) / F", "tail(G1 * ... * Gn, x) - sum_i Gi(x, inf)", "F(x, inf)", |x| {
                    let t = tail_value(chain.as_ref(), x)?;
                    let s = weighted_tails(&refs, x)?;
                    Ok(t.diff_ratio(&s, &tail_value(f.as_ref(), x)?))
                })?;
                run.report.push_claim(p, Claim::Limit { target: 0.0 });
            } else {
                run.report.parts.push(test_subexponential(chain.as_ref(), cfg)?);
                run.report.parts.push(weak_equivalence_quad(chain.as_ref(), f.as_ref(), cfg)?);
            }
            Ok(run.finish())
        }
        "cor.s0" => {
            let (f, g) = (i.get("F")?, i.get("G")?);
            let mut run = Run::new(id, format!("{id}: F = {}, G = {}", f.label(), g.label()), cfg);
            run.hypothesis("F subexponential", test_subexponential(f.as_ref(), cfg)?)?;
            run.hypothesis("G long-tailed", test_long_tailed(g.as_ref(), cfg)?)?;
            run.hypothesis("F, G weakly equivalent", test_weak_tail_equivalence(f.as_ref(), g.as_ref(), cfg)?)?;
            run.report.parts.push(test_subexponential(g.as_ref(), cfg)?);
            Ok(run.finish())
        }
        "cor.14" => {
            let (f, g) = (i.get("F")?, i.get("G")?);
            let mut run = Run::new(id, format!("{id}: F = {}, G = {}", f.label(), g.label()), cfg);
            run.hypothesis("F subexponential", test_subexponential(f.as_ref(), cfg)?)?;
            let s = sum_measure(&[&f, &g])?;
            run.hypothesis("F + G long-tailed", test_long_tailed(s.as_ref(), cfg)?)?;
            run.big_o("G", g.as_ref(), f.as_ref())?;
            let fg = conv(&f, &g);
            let p = quad_probe(cfg, "(F * G - F - G) / F", "tail(F * G, x) - F(x, inf) - G(x, inf)", "F(x, inf)", |x| {
                let t = conv_tail(f.as_ref(), g.as_ref(), x, &q)?;
                let s = weighted_tails(&[(1.0, f.as_ref()), (1.0, g.as_ref())], x)?;
                Ok(t.diff_ratio(&s, &tail_value(f.as_ref(), x)?))
            })?;
            run.report.push_claim(p, Claim::Limit { target: 0.0 });
            run.report.parts.push(test_subexponential(fg.as_ref(), cfg)?);
            Ok(run.finish())
        }
        "cor.15" => {
            let f = i.get("F")?;
            let slots = ["G1", "G2", "G3", "G4", "G5", "G6"];
            if n < 1 || n > slots.len() {
                return Err(Error::InvalidParameter(format!("cor.15 needs 1 <= n <= {}, got {n}", slots.len())));
            }
            let gs: Vec<SharedMeasure> = slots[..n].iter().map(|s| i.get(s)).collect::<Result<_>>()?;
            let labels: Vec<String> = gs.iter().map(|g| g.label()).collect();
            let mut run = Run::new(id, format!("{id}: n = {n}, F = {}, G = {}", f.label(), labels.join(", ")), cfg);
            run.hypothesis("F subexponential", test_subexponential(f.as_ref(), cfg)?)?;
            let mut total = 0.0;
            let mut all_settled = true;
            for (k, g) in gs.iter().enumerate() {
                let name = format!("G{}", k + 1);
                let mut b = VerdictReport::new(format!("{name}(x, inf) / F(x, inf) converges"), th);
                let p = tail_probe(cfg, &[g.as_ref(), f.as_ref()], &format!("{name} / F"), &format!("{name}(x, inf)"), "F(x, inf)", |x| {
                    tail_ratio(g.as_ref(), x, f.as_ref(), x)
                })?;
                match settled_limit(&p, cfg) {
                    Some(c) => {
                        total += c;
                        b.push_claim(p, Claim::Limit { target: c });
                    }
                    None => {
                        all_settled = false;
                        b.push_claim(p, Claim::BoundedAbove);
                        b = b.note("ratio has no settled limit on the grid");
                    }
                }
                let mut b = b.conclude();
                if !all_settled && b.verdict == Verdict::Holds {
                    b.verdict = Verdict::Inconclusive;
                }
                run.hypothesis(&format!("{name} / F -> c{}", k + 1), b)?;
            }
            let chain = Convolution::chain(&gs)?;
            let p = quad_probe(cfg, "G1 * ... * Gn / F", "tail(G1 * ... * Gn, x)", "F(x, inf)", |x| {
                value_ratio(tail_value(chain.as_ref(), x), tail_value(f.as_ref(), x))
            })?;
            run.report.push_claim(p, Claim::Limit { target: total });
            run.report.notes.push(format!("sum of fitted limits c_i = {total:.6}"));
            if total > 0.0 && all_settled {
                run.report.parts.push(test_subexponential(chain.as_ref(), cfg)?);
            }
            Ok(run.finish())
        }
        "closure.S" => {
            let (f, g) = (i.get("F")?, i.get("G")?);
            let p = inst.p.unwrap_or(0.5);
            closure_s(f, g, p, inst.h.clone(), cfg)
        }
        other => Err(unknown_theorem(other)),
    }
}

/// Weak tail equivalence for a tail that needs quadrature.
fn weak_equivalence_quad(a: &dyn Measure, b: &dyn Measure, cfg: &LabConfig) -> Result<VerdictReport> {
    let mut r = VerdictReport::new(format!("weakly tail equivalent: {} vs {}", a.label(), b.label()), cfg.thresholds);
    let p = quad_probe(cfg, "tail ratio", &a.label(), &b.label(), |x| value_ratio(tail_value(a, x), tail_value(b, x)))?;
    r.push_claim(p, Claim::Bounded);
    Ok(r.conclude())
}

/// The four equivalent conditions of the closure theorem for `F, G ∈ S`.
pub fn closure_s(f: SharedMeasure, g: SharedMeasure, p: f64, h: Option<HFunction>, cfg: &LabConfig) -> Result<VerdictReport> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("closure.S needs 0 < p < 1, got {p}")));
    }
    let id = "closure.S";
    let q = cfg.quad;
    let th = cfg.thresholds;
    let h = match h {
        Some(h) => h.capped(),
        None => auto_h(&[f.as_ref(), g.as_ref()], cfg)?,
    };
    let mut run = Run::new(id, format!("{id}: F = {}, G = {}, p = {p}, h = {}", f.label(), g.label(), h.describe()), cfg);
    run.hypothesis("F subexponential", test_subexponential(f.as_ref(), cfg)?)?;
    run.hypothesis("G subexponential", test_subexponential(g.as_ref(), cfg)?)?;
    run.hypothesis("F h-insensitive", check_h_insensitive(f.as_ref(), &h, cfg)?)?;
    run.hypothesis("G h-insensitive", check_h_insensitive(g.as_ref(), &h, cfg)?)?;

    let sum = |x: f64| weighted_tails(&[(1.0, f.as_ref()), (1.0, g.as_ref())], x);
    let mut c1 = VerdictReport::new("(i) tail(F * G) ~ F + G", th);
    let p1 = quad_probe(cfg, "F * G / (F + G)", "tail(F * G, x)", "F(x, inf) + G(x, inf)", |x| {
        value_ratio(conv_tail(f.as_ref(), g.as_ref(), x, &q), sum(x))
    })?;
    c1.push_claim(p1, Claim::Limit { target: 1.0 });

    let fg = conv(&f, &g);
    let mut c2 = test_subexponential(fg.as_ref(), cfg)?;
    c2.subject = format!("(ii) {}", c2.subject);

    let mix: SharedMeasure = Arc::new(Mixture::pair(p, f.clone(), 1.0 - p, g.clone())?);
    let mut c3 = test_subexponential(mix.as_ref(), cfg)?;
    c3.subject = format!("(iii) {}", c3.subject);

    let mut c4 = VerdictReport::new("(iv) F_{>h} * G_{>h} = o(F + G)", th);
    let p4 = quad_probe(cfg, "F_{>h} * G_{>h} / (F + G)", "tail(F_{>h} * G_{>h}, x)", "F(x, inf) + G(x, inf)", |x| {
        value_ratio(conv_tail_gt_gt_h(f.as_ref(), g.as_ref(), &h, x, &q), sum(x))
    })?;
    c4.push_claim(p4, Claim::Limit { target: 0.0 });

    let parts = vec![c1.conclude(), c2, c3, c4.conclude()];
    let verdicts: Vec<Verdict> = parts.iter().map(|r| r.verdict).collect();
    let agree = verdicts.iter().all(|v| *v == verdicts[0]);
    let mut r = run.finish();
    r.parts = parts;
    r.agreement = Some(agree);
    // the theorem asserts that the four conditions are equivalent
    let base = if verdicts.contains(&Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else if agree {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    r.verdict = if r.preconditions.iter().any(|p| p.verdict == Verdict::Inconclusive) {
        Verdict::all([base, Verdict::Inconclusive])
    } else {
        base
    };
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> LabConfig {
        LabConfig::default()
    }

    #[test]
    fn unknown_theorem_is_reported() {
        match verify_theorem("thm.zz", &InstanceConfig::default(), &cfg()) {
            Err(Error::UnknownId { valid, .. }) => assert!(valid.contains("closure.S")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn failed_hypothesis_is_an_error() {
        let inst = InstanceConfig {
            inputs: Inputs::new().with("G", "exponential(lambda=1)").unwrap(),
            ..Default::default()
        };
        match verify_theorem("long.add.5", &inst, &cfg()) {
            Err(Error::Hypothesis { theorem, .. }) => assert_eq!(theorem, "long.add.5"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn long_add_5_default() {
        let r = verify_theorem("long.add.5", &InstanceConfig::default(), &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{}", r.summary());
    }

    #[test]
    fn nfold_spot_value() {
        let inst = InstanceConfig {
            n: Some(2),
            ..Default::default()
        };
        let r = verify_theorem("nfold.liminf", &inst, &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{}", r.summary());
        let at100 = r.claims[0].probe.points.iter().find(|p| p.x == 100.0).unwrap().ratio;
        assert!((at100 - 2.0919).abs() < 1e-3, "{at100}");
    }
}
