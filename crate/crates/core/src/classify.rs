//! Class-membership tests: long-tailedness, h-insensitivity, (weak) tail
//! equivalence and subexponentiality.

use serde::{Deserialize, Serialize};

use crate::decomp::{conv_tail, tail_value};
use crate::hfunc::HFunction;
use crate::measure::{Measure, TailCurve};
use crate::probe::{Claim, GridPoint, GridSpec, RatioProbe, Thresholds, Verdict, VerdictReport};
use crate::quad::QuadConfig;
use crate::Result;

/// Grids, thresholds and quadrature settings shared by every test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub thresholds: Thresholds,
    /// Grid for closed-form tails.
    pub analytic: GridSpec,
    /// Grid for probes that integrate at every point.
    pub quadrature: GridSpec,
    pub quad: QuadConfig,
    /// Lags `a` probed by [`test_long_tailed`].
    pub lags: Vec<f64>,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            analytic: GridSpec::analytic(),
            quadrature: GridSpec::quadrature(),
            quad: QuadConfig::default(),
            lags: vec![1.0, 2.0, 5.0],
        }
    }
}

impl LabConfig {
    /// Caps the top of both grids.
    pub fn with_grid_top(mut self, top: f64) -> Self {
        self.analytic.top = self.analytic.top.min(top);
        self.quadrature.top = self.quadrature.top.min(top);
        self
    }

    pub(crate) fn grid_for(&self, analytic: bool) -> GridSpec {
        if analytic {
            self.analytic
        } else {
            self.quadrature
        }
    }

    /// Grid points for probes of `curves`, including the points before their jumps.
    pub(crate) fn points_for(&self, curves: &[&dyn TailCurve], analytic: bool) -> (GridSpec, Vec<GridPoint>) {
        let g = self.grid_for(analytic && curves.iter().all(|c| c.is_analytic()));
        let mut jumps: Vec<f64> = curves.iter().flat_map(|c| c.jumps(g.x0, g.top)).collect();
        jumps.sort_by(f64::total_cmp);
        (g, g.with_jumps(&jumps))
    }
}

/// `T̄1(a) / T̄2(b)` from log tails.
pub(crate) fn tail_ratio(num: &dyn TailCurve, a: f64, den: &dyn TailCurve, b: f64) -> Result<f64> {
    let ln = num.try_ln_tail(a)? - den.try_ln_tail(b)?;
    Ok(if ln.is_nan() { f64::NAN } else { ln.exp() })
}

fn vanishing(curves: &[&dyn TailCurve], top: f64) -> Result<Option<String>> {
    for c in curves {
        if c.try_ln_tail(top)? == f64::NEG_INFINITY {
            return Ok(Some(format!("tail of {} vanishes at x = {top:e}", c.label())));
        }
    }
    Ok(None)
}

/// Probes `F̄(x + a) / F̄(x)` for every configured lag `a`; holds iff all tend to 1.
pub fn test_long_tailed(f: &dyn TailCurve, cfg: &LabConfig) -> Result<VerdictReport> {
    let mut report = VerdictReport::new(format!("long-tailed: {}", f.label()), cfg.thresholds);
    let (grid, points) = cfg.points_for(&[f], true);
    if let Some(why) = vanishing(&[f], grid.top)? {
        return Ok(report.with_verdict(Verdict::Fails).note(why));
    }
    for &a in &cfg.lags {
        let probe = RatioProbe::evaluate(
            format!("lag {a}"),
            format!("F(x+{a}, inf)"),
            "F(x, inf)",
            &points,
            grid.middle(),
            |x| tail_ratio(f, x + a, f, x),
        )?;
        report.push_claim(probe, Claim::Limit { target: 1.0 });
    }
    Ok(report.conclude())
}

/// Probes `F̄(x ∓ h(x)) / F̄(x)`; holds iff both tend to 1.
pub fn check_h_insensitive(f: &dyn TailCurve, h: &HFunction, cfg: &LabConfig) -> Result<VerdictReport> {
    let mut report = VerdictReport::new(format!("h-insensitive: {} with h = {}", f.label(), h.describe()), cfg.thresholds);
    let (grid, points) = cfg.points_for(&[f], true);
    if h.is_zero() {
        let mut r = report.with_verdict(Verdict::Inconclusive).note("h vanishes on the probed range");
        r.notes.extend(h.notes.iter().cloned());
        return Ok(r);
    }
    if let Some(why) = vanishing(&[f], grid.top + h.eval(grid.top))? {
        return Ok(report.with_verdict(Verdict::Fails).note(why));
    }
    let minus = RatioProbe::evaluate("x - h(x)", "F(x-h(x), inf)", "F(x, inf)", &points, grid.middle(), |x| {
        tail_ratio(f, x - h.eval(x), f, x)
    })?;
    let plus = RatioProbe::evaluate("x + h(x)", "F(x+h(x), inf)", "F(x, inf)", &points, grid.middle(), |x| {
        tail_ratio(f, x + h.eval(x), f, x)
    })?;
    report.push_claim(minus, Claim::Limit { target: 1.0 });
    report.push_claim(plus, Claim::Limit { target: 1.0 });
    if h.truncated {
        report.notes.push(format!("h is constant beyond its horizon {:e}", h.horizon.unwrap_or(f64::NAN)));
    }
    Ok(report.conclude())
}

fn equivalence_probe(f1: &dyn TailCurve, f2: &dyn TailCurve, cfg: &LabConfig) -> Result<(RatioProbe, Option<String>)> {
    let (grid, points) = cfg.points_for(&[f1, f2], true);
    let gone = vanishing(&[f1, f2], grid.top)?;
    let probe = RatioProbe::evaluate("tail ratio", f1.label(), f2.label(), &points, grid.middle(), |x| {
        tail_ratio(f1, x, f2, x)
    })?;
    Ok((probe, gone))
}

/// `F̄1(x) / F̄2(x) → 1`.
pub fn test_tail_equivalence(f1: &dyn TailCurve, f2: &dyn TailCurve, cfg: &LabConfig) -> Result<VerdictReport> {
    let mut report = VerdictReport::new(format!("tail equivalent: {} vs {}", f1.label(), f2.label()), cfg.thresholds);
    let (probe, gone) = equivalence_probe(f1, f2, cfg)?;
    if let Some(why) = gone {
        return Ok(report.with_verdict(Verdict::Fails).note(why));
    }
    report.push_claim(probe, Claim::Limit { target: 1.0 });
    Ok(report.conclude())
}

/// `F̄1(x) / F̄2(x)` bounded above and away from zero.
pub fn test_weak_tail_equivalence(f1: &dyn TailCurve, f2: &dyn TailCurve, cfg: &LabConfig) -> Result<VerdictReport> {
    let mut report =
        VerdictReport::new(format!("weakly tail equivalent: {} vs {}", f1.label(), f2.label()), cfg.thresholds);
    let (probe, gone) = equivalence_probe(f1, f2, cfg)?;
    if let Some(why) = gone {
        return Ok(report.with_verdict(Verdict::Fails).note(why));
    }
    report.push_claim(probe, Claim::Bounded);
    Ok(report.conclude())
}

/// `tail(F*F, x) / (2‖F‖F̄(x))` as a probe on the quadrature grid.
pub fn self_convolution_probe(f: &dyn Measure, cfg: &LabConfig) -> Result<RatioProbe> {
    let (grid, points) = cfg.points_for(&[f], false);
    let two_mass = 2.0 * f.mass();
    RatioProbe::evaluate("self convolution", "tail(F*F, x)", "2 |F| F(x, inf)", &points, grid.middle(), |x| {
        let conv = conv_tail(f, f, x, &cfg.quad)?;
        let base = tail_value(f, x)?;
        Ok(conv.ratio(&base) / two_mass)
    })
}

/// Long-tailedness together with `tail(F*F, x) ∼ 2‖F‖F̄(x)`.
pub fn test_subexponential(f: &dyn Measure, cfg: &LabConfig) -> Result<VerdictReport> {
    let mut report = VerdictReport::new(format!("subexponential: {}", f.label()), cfg.thresholds);
    report.parts.push(test_long_tailed(f, cfg)?);
    let grid = cfg.quadrature;
    if let Some(why) = vanishing(&[f], grid.top)? {
        return Ok(report.with_verdict(Verdict::Fails).note(why));
    }
    let probe = self_convolution_probe(f, cfg)?;
    report.push_claim(probe, Claim::Limit { target: 1.0 });
    Ok(report.conclude())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::AnalyticLaw;
    use crate::measure::Mixture;
    use std::sync::Arc;

    fn cfg() -> LabConfig {
        LabConfig::default()
    }

    #[test]
    fn long_tailed_verdicts() {
        let p = AnalyticLaw::pareto(1.5).unwrap();
        assert_eq!(test_long_tailed(&p, &cfg()).unwrap().verdict, Verdict::Holds);
        let e = AnalyticLaw::exponential(1.0).unwrap();
        assert_eq!(test_long_tailed(&e, &cfg()).unwrap().verdict, Verdict::Fails);
    }

    #[test]
    fn counterexample_is_caught_at_jumps() {
        let g = AnalyticLaw::counterexample(1.0).unwrap();
        let r = test_long_tailed(&g, &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Fails, "{}", r.summary());
        let f = AnalyticLaw::pareto(1.0).unwrap().into_shared();
        let mix = Mixture::pair(0.5, f, 0.5, Arc::new(g)).unwrap();
        let r = test_long_tailed(&mix, &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{}", r.summary());
    }

    #[test]
    fn h_insensitivity() {
        let p = AnalyticLaw::pareto(1.0).unwrap();
        assert_eq!(check_h_insensitive(&p, &HFunction::sqrt(), &cfg()).unwrap().verdict, Verdict::Holds);
        let r = check_h_insensitive(&p, &HFunction::half(), &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        let l: Vec<f64> = r.claims.iter().map(|c| c.probe.trend.unwrap().limit).collect();
        assert!((l[0] - 2.0).abs() < 0.02 && (l[1] - 2.0 / 3.0).abs() < 0.02, "{l:?}");
    }

    #[test]
    fn constant_h_matches_long_tailed() {
        let c = LabConfig {
            lags: vec![3.0],
            ..cfg()
        };
        for law in [AnalyticLaw::pareto(1.0).unwrap(), AnalyticLaw::exponential(1.0).unwrap()] {
            let a = check_h_insensitive(&law, &HFunction::constant(3.0), &c).unwrap().verdict;
            let b = test_long_tailed(&law, &c).unwrap().verdict;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn equivalences() {
        let p1 = AnalyticLaw::pareto(1.0).unwrap();
        let p15 = AnalyticLaw::pareto(1.5).unwrap();
        let two = crate::families::parse_law("regvarying(alpha=1, c=2)").unwrap();
        assert_eq!(test_tail_equivalence(&p1, &p1, &cfg()).unwrap().verdict, Verdict::Holds);
        assert_eq!(test_weak_tail_equivalence(&p1, &two, &cfg()).unwrap().verdict, Verdict::Holds);
        assert_eq!(test_tail_equivalence(&p1, &two, &cfg()).unwrap().verdict, Verdict::Fails);
        assert_eq!(test_tail_equivalence(&p1, &p15, &cfg()).unwrap().verdict, Verdict::Fails);
        assert_eq!(test_weak_tail_equivalence(&p1, &p15, &cfg()).unwrap().verdict, Verdict::Fails);
    }

    #[test]
    fn subexponential_pareto_spot_value() {
        let p = AnalyticLaw::pareto(1.0).unwrap();
        let probe = self_convolution_probe(&p, &cfg()).unwrap();
        let at100 = probe.points.iter().find(|q| q.x == 100.0).unwrap().ratio;
        assert!((at100 - 1.0460).abs() < 1e-4, "{at100}");
        assert_eq!(test_subexponential(&p, &cfg()).unwrap().verdict, Verdict::Holds);
        let e = AnalyticLaw::exponential(1.0).unwrap();
        let r = test_subexponential(&e, &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!((r.claims[0].probe.points[0].ratio - 5.5).abs() < 1e-9);
    }
}
