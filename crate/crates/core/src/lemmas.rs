//! Numerical probes of the four key lemmas on the tail decomposition, the
//! subexponential reduction lemma and the equivalence of the three
//! characterisations of subexponentiality.
//!
//! Hypotheses are checked with the testers in [`crate::classify`]; a failed
//! hypothesis turns the lemma verdict into `inconclusive` with a note, it
//! never raises an error.

use std::collections::BTreeMap;

use crate::classify::{check_h_insensitive, test_long_tailed, test_subexponential, tail_ratio, LabConfig};
use crate::decomp::{conv_tail_gt_gt_h, conv_tail_gt_h, conv_tail_le_h, tail_value};
use crate::families::parse_measure;
use crate::hfunc::HFunction;
use crate::measure::{Measure, Mixture, SharedMeasure, TailCurve};
use crate::probe::{Claim, RatioProbe, Verdict, VerdictReport};
use crate::quad::TailValue;
use crate::{Error, Result};

/// Accepted lemma ids.
pub const LEMMA_IDS: [&str; 6] = ["h1", "h2", "h3", "h3plus", "s1", "eq14"];

/// Named input laws (`F`, `G`, `F1`, `G2`, …) together with their specs.
#[derive(Clone, Default)]
pub struct Inputs {
    laws: BTreeMap<String, SharedMeasure>,
    specs: BTreeMap<String, String>,
}

impl Inputs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a law parsed from `spec`, replacing any previous one in `slot`.
    pub fn with(mut self, slot: &str, spec: &str) -> Result<Self> {
        let m = parse_measure(spec)?;
        self.laws.insert(slot.to_string(), m);
        self.specs.insert(slot.to_string(), spec.to_string());
        Ok(self)
    }

    pub fn with_measure(mut self, slot: &str, m: SharedMeasure) -> Self {
        self.specs.insert(slot.to_string(), m.label());
        self.laws.insert(slot.to_string(), m);
        self
    }

    /// Fills `slot` from `spec` unless it is already set.
    pub fn or_default(self, slot: &str, spec: &str) -> Result<Self> {
        if self.laws.contains_key(slot) {
            Ok(self)
        } else {
            self.with(slot, spec)
        }
    }

    pub fn get(&self, slot: &str) -> Result<SharedMeasure> {
        self.laws
            .get(slot)
            .cloned()
            .ok_or_else(|| Error::InvalidParameter(format!("input `{slot}` is missing")))
    }

    pub fn contains(&self, slot: &str) -> bool {
        self.laws.contains_key(slot)
    }

    pub fn specs(&self) -> &BTreeMap<String, String> {
        &self.specs
    }
}

impl std::fmt::Debug for Inputs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map().entries(self.specs.iter()).finish()
    }
}

/// Default inputs of a lemma probe.
pub fn lemma_defaults(id: &str) -> Result<Inputs> {
    let i = Inputs::new();
    match id {
        "h1" => i.with("F", "pointmass(a=0)")?.with("G", "pareto(alpha=1)"),
        "h2" => i.with("F", "pareto(alpha=1)")?.with("G", "exponential(lambda=1)"),
        "h3" => i
            .with("F1", "regvarying(alpha=1, c=2)")?
            .with("F2", "pareto(alpha=1)")?
            .with("G", "lognormal(mu=0, sigma=1)"),
        "h3plus" => i
            .with("F1", "regvarying(alpha=1, c=2)")?
            .with("F2", "pareto(alpha=1)")?
            .with("G1", "pareto(alpha=1.5)")?
            .with("G2", "pareto(alpha=1.5, offset=1)"),
        "s1" => i
            .with("F", "pareto(alpha=1)")?
            .with("G1", "regvarying(alpha=1, c=2)")?
            .with("G2", "exponential(lambda=1)"),
        "eq14" => i.with("F", "pareto(alpha=1)"),
        other => Err(unknown_lemma(other)),
    }
}

fn unknown_lemma(given: &str) -> Error {
    Error::UnknownId {
        kind: "lemma",
        given: given.into(),
        valid: LEMMA_IDS.join(", "),
    }
}

/// Probe on the quadrature grid.
pub(crate) fn quad_probe<F>(cfg: &LabConfig, label: &str, num: &str, den: &str, ratio: F) -> Result<RatioProbe>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (grid, points) = cfg.points_for(&[], false);
    RatioProbe::evaluate(label, num, den, &points, grid.middle(), ratio)
}

/// Probe on the grid matching `curves` (analytic grid when all are closed form).
pub(crate) fn tail_probe<F>(
    cfg: &LabConfig,
    curves: &[&dyn TailCurve],
    label: &str,
    num: &str,
    den: &str,
    ratio: F,
) -> Result<RatioProbe>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (grid, points) = cfg.points_for(curves, true);
    RatioProbe::evaluate(label, num, den, &points, grid.middle(), ratio)
}

/// `Σ wᵢ T̄ᵢ(x)` as a [`TailValue`].
pub(crate) fn weighted_tails(parts: &[(f64, &dyn Measure)], x: f64) -> Result<TailValue> {
    let mut acc = TailValue::zero();
    for (w, m) in parts {
        let t = tail_value(*m, x)?;
        acc = acc.add(&TailValue {
            ln_scale: t.ln_scale,
            scaled: w * t.scaled,
            scaled_err: w * t.scaled_err,
        });
    }
    Ok(acc)
}

/// `ratio` with `x ↦ a(x) / b(x)` both computed as [`TailValue`]s.
pub(crate) fn value_ratio(a: Result<TailValue>, b: Result<TailValue>) -> Result<f64> {
    Ok(a?.ratio(&b?))
}

/// The largest ratio on the upper half of a probe's regular points.
pub(crate) fn upper_sup(p: &RatioProbe) -> f64 {
    p.points
        .iter()
        .filter(|q| !q.jump && q.x >= p.middle * (1.0 - 1e-12))
        .map(|q| q.ratio)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The fitted limit of a probe when it converged, for use as a target.
pub(crate) fn settled_limit(p: &RatioProbe, cfg: &LabConfig) -> Option<f64> {
    p.trend
        .filter(|t| !t.diverging && t.limit.is_finite() && t.band <= cfg.thresholds.band_tol)
        .map(|t| t.limit)
}

/// Attaches a hypothesis check to a lemma report.
fn precondition(report: &mut VerdictReport, what: &str, mut check: VerdictReport) {
    check.subject = format!("{what}: {}", check.subject);
    report.preconditions.push(check);
}

/// Caps the verdict by the preconditions: a violated one yields inconclusive.
fn settle(report: VerdictReport) -> VerdictReport {
    let r = report.conclude();
    let v = r.verdict;
    settle_with(r, v)
}

fn settle_with(mut r: VerdictReport, base: Verdict) -> VerdictReport {
    r.verdict = base;
    let violated: Vec<String> = r
        .preconditions
        .iter()
        .filter(|p| p.verdict == Verdict::Fails)
        .map(|p| p.subject.clone())
        .collect();
    if !violated.is_empty() {
        r.verdict = Verdict::Inconclusive;
        for v in violated {
            r.notes.push(format!("precondition violated: {v}"));
        }
    } else if r.preconditions.iter().any(|p| p.verdict == Verdict::Inconclusive) {
        r.verdict = Verdict::all([r.verdict, Verdict::Inconclusive]);
        r.notes.push("a precondition could not be confirmed".into());
    }
    r
}

/// Runs the probe for lemma `id` on `inputs` with the function `h`.
pub fn lemma_probe(id: &str, inputs: &Inputs, h: &HFunction, cfg: &LabConfig) -> Result<VerdictReport> {
    let defaults = lemma_defaults(id)?;
    let mut inputs = inputs.clone();
    for (slot, spec) in defaults.specs() {
        inputs = inputs.or_default(slot, spec)?;
    }
    let q = cfg.quad;
    let th = cfg.thresholds;
    let report = match id {
        "h1" => {
            let (f, g) = (inputs.get("F")?, inputs.get("G")?);
            let mut r = VerdictReport::new(format!("lemma h1: F = {}, G = {}, h = {}", f.label(), g.label(), h.describe()), th);
            precondition(&mut r, "G long-tailed", test_long_tailed(g.as_ref(), cfg)?);
            precondition(&mut r, "G h-insensitive", check_h_insensitive(g.as_ref(), h, cfg)?);
            let fm = f.mass();
            let probe = quad_probe(cfg, "F_{<=h} * G", "tail(F_{<=h} * G, x)", "|F| G(x, inf)", |x| {
                Ok(value_ratio(conv_tail_le_h(f.as_ref(), g.as_ref(), h, x, &q), tail_value(g.as_ref(), x))? / fm)
            })?;
            r.push_claim(probe, Claim::Limit { target: 1.0 });
            r
        }
        "h2" => {
            let (f, g) = (inputs.get("F")?, inputs.get("G")?);
            let mut r = VerdictReport::new(format!("lemma h2: F = {}, G = {}, h = {}", f.label(), g.label(), h.describe()), th);
            let combo: SharedMeasure =
                std::sync::Arc::new(Mixture::pair(f.mass(), g.clone(), g.mass(), f.clone())?);
            precondition(&mut r, "|F|G + |G|F long-tailed", test_long_tailed(combo.as_ref(), cfg)?);
            precondition(&mut r, "|F|G + |G|F h-insensitive", check_h_insensitive(combo.as_ref(), h, cfg)?);
            let probe = quad_probe(
                cfg,
                "F_{<=h} * G + F * G_{<=h}",
                "tail(F_{<=h} * G, x) + tail(F * G_{<=h}, x)",
                "|F| G(x, inf) + |G| F(x, inf)",
                |x| {
                    let a = conv_tail_le_h(f.as_ref(), g.as_ref(), h, x, &q)?;
                    let b = conv_tail_le_h(g.as_ref(), f.as_ref(), h, x, &q)?;
                    let d = weighted_tails(&[(f.mass(), g.as_ref()), (g.mass(), f.as_ref())], x)?;
                    Ok(a.add(&b).ratio(&d))
                },
            )?;
            r.push_claim(probe, Claim::Limit { target: 1.0 });
            r
        }
        "h3" => {
            let (f1, f2, g) = (inputs.get("F1")?, inputs.get("F2")?, inputs.get("G")?);
            let mut r = VerdictReport::new(
                format!("lemma h3: F1 = {}, F2 = {}, G = {}, h = {}", f1.label(), f2.label(), g.label(), h.describe()),
                th,
            );
            precondition(&mut r, "h unbounded", h_unbounded(h, cfg));
            let base = quad_probe(cfg, "F1 / F2", "F1(x, inf)", "F2(x, inf)", |x| {
                tail_ratio(f1.as_ref(), x, f2.as_ref(), x)
            })?;
            let conv = quad_probe(cfg, "(F1)_{>h} * G / (F2)_{>h} * G", "tail((F1)_{>h} * G, x)", "tail((F2)_{>h} * G, x)", |x| {
                value_ratio(
                    conv_tail_gt_h(f1.as_ref(), g.as_ref(), h, x, &q),
                    conv_tail_gt_h(f2.as_ref(), g.as_ref(), h, x, &q),
                )
            })?;
            limsup_comparison(&mut r, conv, &[&base], cfg);
            r.parts.push(context_report("tail ratio F1 / F2", base, cfg));
            r
        }
        "h3plus" => {
            let (f1, f2) = (inputs.get("F1")?, inputs.get("F2")?);
            let (g1, g2) = (inputs.get("G1")?, inputs.get("G2")?);
            let mut r = VerdictReport::new(
                format!(
                    "lemma h3plus: F1 = {}, F2 = {}, G1 = {}, G2 = {}, h = {}",
                    f1.label(),
                    f2.label(),
                    g1.label(),
                    g2.label(),
                    h.describe()
                ),
                th,
            );
            precondition(&mut r, "h unbounded", h_unbounded(h, cfg));
            let bf = quad_probe(cfg, "F1 / F2", "F1(x, inf)", "F2(x, inf)", |x| tail_ratio(f1.as_ref(), x, f2.as_ref(), x))?;
            let bg = quad_probe(cfg, "G1 / G2", "G1(x, inf)", "G2(x, inf)", |x| tail_ratio(g1.as_ref(), x, g2.as_ref(), x))?;
            let conv = quad_probe(
                cfg,
                "(F1)_{>h} * (G1)_{>h} / (F2)_{>h} * (G2)_{>h}",
                "tail((F1)_{>h} * (G1)_{>h}, x)",
                "tail((F2)_{>h} * (G2)_{>h}, x)",
                |x| {
                    value_ratio(
                        conv_tail_gt_gt_h(f1.as_ref(), g1.as_ref(), h, x, &q),
                        conv_tail_gt_gt_h(f2.as_ref(), g2.as_ref(), h, x, &q),
                    )
                },
            )?;
            limsup_comparison(&mut r, conv, &[&bf, &bg], cfg);
            r.parts.push(context_report("tail ratio F1 / F2", bf, cfg));
            r.parts.push(context_report("tail ratio G1 / G2", bg, cfg));
            r
        }
        "s1" => {
            let f = inputs.get("F")?;
            let (g1, g2) = (inputs.get("G1")?, inputs.get("G2")?);
            let mut r = VerdictReport::new(
                format!("lemma s1: F = {}, G1 = {}, G2 = {}, h = {}", f.label(), g1.label(), g2.label(), h.describe()),
                th,
            );
            precondition(&mut r, "F subexponential", test_subexponential(f.as_ref(), cfg)?);
            precondition(&mut r, "h unbounded", h_unbounded(h, cfg));
            for (name, g) in [("G1", &g1), ("G2", &g2)] {
                let mut b = VerdictReport::new(format!("{name}(x, inf) = O(F(x, inf))"), th);
                let p = tail_probe(cfg, &[g.as_ref(), f.as_ref()], "G / F", "G(x, inf)", "F(x, inf)", |x| {
                    tail_ratio(g.as_ref(), x, f.as_ref(), x)
                })?;
                b.push_claim(p, Claim::BoundedAbove);
                precondition(&mut r, name, b.conclude());
            }
            let probe = quad_probe(cfg, "(G1)_{>h} * (G2)_{>h} / F", "tail((G1)_{>h} * (G2)_{>h}, x)", "F(x, inf)", |x| {
                value_ratio(conv_tail_gt_gt_h(g1.as_ref(), g2.as_ref(), h, x, &q), tail_value(f.as_ref(), x))
            })?;
            r.push_claim(probe, Claim::Limit { target: 0.0 });
            r
        }
        "eq14" => {
            let f = inputs.get("F")?;
            let mut r = VerdictReport::new(format!("lemma eq14: F = {}, h = {}", f.label(), h.describe()), th);
            precondition(&mut r, "F long-tailed", test_long_tailed(f.as_ref(), cfg)?);
            let hi = check_h_insensitive(f.as_ref(), h, cfg)?;
            precondition(&mut r, "F h-insensitive", hi);
            let parts = eq14_parts(f.as_ref(), h, cfg)?;
            let verdicts: Vec<Verdict> = parts.iter().map(|p| p.verdict).collect();
            r.parts = parts;
            let agree = verdicts.iter().all(|v| *v == verdicts[0]);
            r.agreement = Some(agree);
            let v = if verdicts.contains(&Verdict::Inconclusive) {
                Verdict::Inconclusive
            } else if agree {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            // the lemma asserts an equivalence, so its verdict is the agreement
            // of the three conditions rather than their conjunction
            return Ok(settle_with(r, v));
        }
        other => return Err(unknown_lemma(other)),
    };
    Ok(settle(report))
}

/// Unbounded functions probed for condition (ii) of the equivalence lemma.
pub fn eq14_family() -> Vec<HFunction> {
    vec![HFunction::power(1.0, 0.25), HFunction::sqrt(), HFunction::half()]
}

/// Conditions (i), (ii) and (iii) of the equivalence lemma, each as its own report.
pub fn eq14_parts(f: &dyn Measure, h: &HFunction, cfg: &LabConfig) -> Result<Vec<VerdictReport>> {
    let q = cfg.quad;
    let th = cfg.thresholds;
    let mut i = test_subexponential(f, cfg)?;
    i.subject = format!("(i) {}", i.subject);
    let gtgt = |hh: &HFunction| -> Result<RatioProbe> {
        quad_probe(cfg, &format!("F_{{>h}} * F_{{>h}} / F, h = {}", hh.describe()), "tail(F_{>h} * F_{>h}, x)", "F(x, inf)", |x| {
            value_ratio(conv_tail_gt_gt_h(f, f, hh, x, &q), tail_value(f, x))
        })
    };
    let mut ii = VerdictReport::new("(ii) F_{>h} * F_{>h} = o(F) for every probed unbounded h", th);
    for hh in eq14_family() {
        ii.push_claim(gtgt(&hh)?, Claim::Limit { target: 0.0 });
    }
    let mut iii = VerdictReport::new(format!("(iii) F_{{>h}} * F_{{>h}} = o(F) for h = {}", h.describe()), th);
    iii.push_claim(gtgt(h)?, Claim::Limit { target: 0.0 });
    Ok(vec![i, ii.conclude(), iii.conclude()])
}

fn h_unbounded(h: &HFunction, cfg: &LabConfig) -> VerdictReport {
    let top = cfg.quadrature.top;
    let mid = cfg.quadrature.middle();
    let (a, b) = (h.eval(mid), h.eval(top));
    let r = VerdictReport::new(format!("h grows: h({mid:e}) = {a}, h({top:e}) = {b}"), cfg.thresholds);
    if b > a && b > 0.0 {
        r.with_verdict(Verdict::Holds)
    } else {
        r.with_verdict(Verdict::Fails).note("h does not grow on the probed range")
    }
}

fn context_report(subject: &str, probe: RatioProbe, cfg: &LabConfig) -> VerdictReport {
    let mut r = VerdictReport::new(subject, cfg.thresholds);
    r.push_claim(probe, Claim::BoundedAbove);
    r.conclude()
}

/// `limsup conv ≤ Π limsup base`, plus the limit form when every base settled.
fn limsup_comparison(r: &mut VerdictReport, conv: RatioProbe, bases: &[&RatioProbe], cfg: &LabConfig) {
    let bound: f64 = bases.iter().map(|b| upper_sup(b)).product();
    let limits: Option<Vec<f64>> = bases.iter().map(|b| settled_limit(b, cfg)).collect();
    if let Some(ls) = limits {
        let target: f64 = ls.iter().product();
        r.push_claim(conv.clone(), Claim::Limit { target });
    }
    r.push_claim(conv, Claim::LimsupAtMost { bound });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> LabConfig {
        LabConfig::default()
    }

    #[test]
    fn h1_with_point_mass_is_exact() {
        let r = lemma_probe("h1", &Inputs::new(), &HFunction::sqrt(), &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{}", r.summary());
        assert!(r.claims[0].probe.points.iter().all(|p| (p.ratio - 1.0).abs() < 1e-12));
    }

    #[test]
    fn h3_identical_inputs_give_one() {
        let i = Inputs::new().with("F1", "pareto(alpha=1)").unwrap().with("F2", "pareto(alpha=1)").unwrap();
        let r = lemma_probe("h3", &i, &HFunction::sqrt(), &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{}", r.summary());
        assert!(r.claims[0].probe.points.iter().all(|p| (p.ratio - 1.0).abs() < 1e-9));
    }

    #[test]
    fn h2_light_second_input() {
        let r = lemma_probe("h2", &Inputs::new(), &HFunction::sqrt().capped(), &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{}", r.summary());
    }

    #[test]
    fn failed_precondition_is_inconclusive() {
        let i = Inputs::new().with("G", "exponential(lambda=1)").unwrap();
        let r = lemma_probe("h1", &i, &HFunction::sqrt(), &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.notes.iter().any(|n| n.starts_with("precondition violated")));
    }

    #[test]
    fn unknown_lemma_lists_ids() {
        match lemma_probe("h9", &Inputs::new(), &HFunction::sqrt(), &cfg()) {
            Err(Error::UnknownId { valid, .. }) => assert_eq!(valid, LEMMA_IDS.join(", ")),
            other => panic!("{other:?}"),
        }
    }
}
