//! Ratio probes on geometric grids and the verdicts derived from them.
//!
//! Asymptotic statements (`∼`, `o(·)`, `O(·)`, `liminf`, `limsup`) are
//! checked by evaluating a ratio on a geometric grid `x = x₀ rᵏ`, fitting
//! `ratio(x) ≈ L + c·x^{-β}` on the upper half of the grid and comparing the
//! fitted limit `L` and its uncertainty band with fixed thresholds.
//!
//! Grid points placed just before a jump of a tail are marked and assessed
//! separately: the deviations seen there must shrink from one jump to the
//! next, otherwise the claim fails.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    /// `fails` dominates `inconclusive`, which dominates `holds`.
    pub fn all<I: IntoIterator<Item = Verdict>>(verdicts: I) -> Verdict {
        let mut out = Verdict::Holds;
        for v in verdicts {
            match v {
                Verdict::Fails => return Verdict::Fails,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Holds => {}
            }
        }
        out
    }

    /// Process exit status: 0 holds, 1 fails, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Geometric grid `x₀, x₀r, x₀r², …` up to `top`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub ratio: f64,
    pub top: f64,
}

impl GridSpec {
    /// Grid for probes built from closed-form tails.
    pub fn analytic() -> Self {
        Self {
            x0: 10.0,
            ratio: 10f64.sqrt(),
            top: 1e8,
        }
    }

    /// Grid for probes that need a quadrature per point.
    pub fn quadrature() -> Self {
        Self {
            x0: 10.0,
            ratio: 10f64.sqrt(),
            top: 1e6,
        }
    }

    pub fn with_top(self, top: f64) -> Self {
        Self { top, ..self }
    }

    pub fn points(&self) -> Vec<f64> {
        let l0 = self.x0.log10();
        let lr = self.ratio.log10();
        let lt = self.top.log10();
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let e = l0 + k as f64 * lr;
            if e > lt + 1e-9 {
                break;
            }
            // round exponents so that decades land exactly on powers of ten
            let e = (e * 1e9).round() / 1e9;
            out.push(10f64.powf(e));
            k += 1;
        }
        out
    }

    /// Regular points plus a marked point `y - 1/2` before every jump `y`
    /// inside the grid range (and `y` itself as a regular point).
    pub fn with_jumps(&self, jumps: &[f64]) -> Vec<GridPoint> {
        let mut pts: Vec<GridPoint> = self.points().into_iter().map(|x| GridPoint { x, jump: false }).collect();
        for &y in jumps {
            if y - 0.5 >= self.x0 && y <= self.top {
                pts.push(GridPoint { x: y - 0.5, jump: true });
                pts.push(GridPoint { x: y, jump: false });
            }
        }
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        pts.dedup_by(|a, b| a.x == b.x);
        pts
    }

    /// Geometric middle of the grid; points at or above it form the upper half.
    pub fn middle(&self) -> f64 {
        (self.x0 * self.top).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub jump: bool,
}

/// Thresholds shared by every verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `|L - target| <= hold_tol` is required for `holds`.
    pub hold_tol: f64,
    /// The uncertainty band of `L` must not exceed this for `holds`.
    pub band_tol: f64,
    /// Deviations at successive jump points must shrink at least by this factor.
    pub jump_decay: f64,
    /// Ratios bounded by this on the upper grid count as bounded.
    pub weak_bound: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            hold_tol: 0.02,
            band_tol: 0.02,
            jump_decay: 0.75,
            weak_bound: 100.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub x: f64,
    pub ratio: f64,
    /// Placed just before a jump of one of the tails involved.
    pub jump: bool,
    /// Sampling error of `ratio`, for Monte Carlo probes.
    pub std_error: Option<f64>,
    pub low_confidence: bool,
}

/// Limit estimate of a ratio sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    pub band: f64,
    /// Fitted `β` of `L + c·x^{-β}`; `None` for a constant fit.
    pub exponent: Option<f64>,
    pub coefficient: f64,
    /// The sequence moves monotonically without slowing down.
    pub diverging: bool,
    pub points_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioProbe {
    pub label: String,
    pub numerator: String,
    pub denominator: String,
    /// Geometric middle of the grid.
    pub middle: f64,
    pub points: Vec<ProbePoint>,
    pub trend: Option<Extrapolation>,
}

impl RatioProbe {
    /// Evaluates `ratio(x)` at every grid point in parallel; the order of the
    /// result follows the grid.
    pub fn evaluate<F>(
        label: impl Into<String>,
        numerator: impl Into<String>,
        denominator: impl Into<String>,
        grid: &[GridPoint],
        middle: f64,
        ratio: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let values: Vec<Result<f64>> = grid.par_iter().map(|p| ratio(p.x)).collect();
        let mut points = Vec::with_capacity(grid.len());
        for (p, v) in grid.iter().zip(values) {
            points.push(ProbePoint {
                x: p.x,
                ratio: v?,
                jump: p.jump,
                std_error: None,
                low_confidence: false,
            });
        }
        Ok(Self::from_points(label, numerator, denominator, middle, points))
    }

    pub fn from_points(
        label: impl Into<String>,
        numerator: impl Into<String>,
        denominator: impl Into<String>,
        middle: f64,
        points: Vec<ProbePoint>,
    ) -> Self {
        let mut probe = Self {
            label: label.into(),
            numerator: numerator.into(),
            denominator: denominator.into(),
            middle,
            points,
            trend: None,
        };
        probe.trend = single_index_extrapolate(&probe).ok();
        probe
    }

    fn regular(&self) -> impl Iterator<Item = &ProbePoint> {
        self.points.iter().filter(|p| !p.jump && !p.low_confidence)
    }

    fn upper(&self) -> Vec<&ProbePoint> {
        self.regular().filter(|p| p.x >= self.middle * (1.0 - 1e-12)).collect()
    }
}

fn fit_power(xs: &[f64], rs: &[f64], beta: f64) -> (f64, f64, f64, f64) {
    // normalise the regressor by its first value for conditioning
    let u0 = xs[0].powf(-beta);
    let us: Vec<f64> = xs.iter().map(|x| x.powf(-beta) / u0).collect();
    let n = xs.len() as f64;
    let su: f64 = us.iter().sum();
    let suu: f64 = us.iter().map(|u| u * u).sum();
    let sr: f64 = rs.iter().sum();
    let sur: f64 = us.iter().zip(rs).map(|(u, r)| u * r).sum();
    let det = n * suu - su * su;
    if det.abs() < 1e-300 {
        return (f64::NAN, 0.0, f64::INFINITY, f64::INFINITY);
    }
    let c = (n * sur - su * sr) / det;
    let l = (sr - c * su) / n;
    let ss: f64 = us.iter().zip(rs).map(|(u, r)| (r - l - c * u).powi(2)).sum();
    // (XᵀX)⁻¹ entry for the intercept
    let v00 = suu / det;
    (l, c / u0, ss, v00)
}

/// Smallest relative change over the upper grid that can count as divergence.
const MIN_DIVERGENT_MOVE: f64 = 1e-3;

fn extrapolate(xs: &[f64], rs: &[f64]) -> Extrapolation {
    let n = xs.len();
    let last = rs[n - 1];
    if rs.iter().any(|r| !r.is_finite()) {
        return Extrapolation {
            limit: if last.is_nan() { f64::NAN } else { f64::INFINITY },
            band: f64::INFINITY,
            exponent: None,
            coefficient: 0.0,
            diverging: true,
            points_used: n,
        };
    }
    let incs: Vec<f64> = rs.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = rs.iter().fold(0.0f64, |m, r| m.max(r.abs())).max(1e-300);
    let monotone = incs.iter().all(|d| *d > 0.0) || incs.iter().all(|d| *d < 0.0);
    let moved = (last - rs[0]).abs() >= MIN_DIVERGENT_MOVE * rs[0].abs().max(1.0);
    let diverging = monotone
        && moved
        && incs.len() >= 2
        && incs[incs.len() - 1].abs() > 1e-9 * scale
        && incs[incs.len() - 1].abs() >= 0.98 * incs[incs.len() - 2].abs();

    let mean = rs.iter().sum::<f64>() / n as f64;
    let ss0: f64 = rs.iter().map(|r| (r - mean).powi(2)).sum();
    if ss0 <= (1e-12 * scale).powi(2) * n as f64 {
        return Extrapolation {
            limit: mean,
            band: 0.0,
            exponent: None,
            coefficient: 0.0,
            diverging: false,
            points_used: n,
        };
    }
    let constant = Extrapolation {
        limit: mean,
        band: 2.0 * (ss0 / (n as f64 * (n as f64 - 1.0).max(1.0))).sqrt(),
        exponent: None,
        coefficient: 0.0,
        diverging,
        points_used: n,
    };
    if n < 4 {
        return constant;
    }
    let betas: Vec<f64> = (1..=200).map(|k| 0.02 * k as f64).collect();
    let fits: Vec<(f64, f64, f64, f64, f64)> = betas
        .iter()
        .map(|&b| {
            let (l, c, ss, v00) = fit_power(xs, rs, b);
            (b, l, c, ss, v00)
        })
        .filter(|f| f.1.is_finite())
        .collect();
    let Some(best) = fits.iter().cloned().min_by(|a, b| a.3.total_cmp(&b.3)) else {
        return constant;
    };
    let (beta, l, c, ss, v00) = best;
    let dof = (n as f64 - 3.0).max(1.0);
    if ss / dof >= ss0 / (n as f64 - 1.0) {
        return constant;
    }
    let se = (ss / dof * v00).sqrt();
    // spread of the limit over exponents that fit about as well
    let cutoff = 2.0 * ss + (1e-14 * scale).powi(2);
    let (lo, hi) = fits
        .iter()
        .filter(|f| f.3 <= cutoff)
        .fold((l, l), |(lo, hi), f| (lo.min(f.1), hi.max(f.1)));
    Extrapolation {
        limit: l,
        band: 2.0 * se + 0.5 * (hi - lo),
        exponent: Some(beta),
        coefficient: c,
        diverging,
        points_used: n,
    }
}

/// Fits `ratio(x) ≈ L + c·x^{-β}` on the upper half of the grid.
///
/// Requires at least five regular points overall; the fit itself uses those
/// at or above the geometric middle of the grid.
pub fn single_index_extrapolate(probe: &RatioProbe) -> Result<Extrapolation> {
    let regular: Vec<&ProbePoint> = probe.regular().collect();
    if regular.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "extrapolation needs at least 5 grid points, probe `{}` has {}",
            probe.label,
            regular.len()
        )));
    }
    let mut upper = probe.upper();
    if upper.len() < 3 {
        upper = regular[regular.len() - 3..].to_vec();
    }
    let xs: Vec<f64> = upper.iter().map(|p| p.x).collect();
    let rs: Vec<f64> = upper.iter().map(|p| p.ratio).collect();
    let mut ex = extrapolate(&xs, &rs);
    let noise = upper.iter().filter_map(|p| p.std_error).fold(0.0f64, f64::max);
    if noise > 0.0 {
        ex.band = ex.band.max(2.0 * noise);
    }
    Ok(ex)
}

/// The asymptotic statement a probe is meant to support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Claim {
    /// `ratio → target`
    Limit { target: f64 },
    /// `liminf ratio >= bound`
    LiminfAtLeast { bound: f64 },
    /// `limsup ratio <= bound`
    LimsupAtMost { bound: f64 },
    /// `ratio` and `1/ratio` both bounded
    Bounded,
    /// `ratio` bounded above
    BoundedAbove,
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Claim::Limit { target } => write!(f, "ratio -> {target}"),
            Claim::LiminfAtLeast { bound } => write!(f, "liminf ratio >= {bound}"),
            Claim::LimsupAtMost { bound } => write!(f, "limsup ratio <= {bound}"),
            Claim::Bounded => f.write_str("ratio bounded above and away from 0"),
            Claim::BoundedAbove => f.write_str("ratio bounded above"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimOutcome {
    pub claim: Claim,
    pub verdict: Verdict,
    pub reason: String,
    pub probe: RatioProbe,
}

/// A verdict with everything that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub subject: String,
    pub verdict: Verdict,
    pub thresholds: Thresholds,
    pub claims: Vec<ClaimOutcome>,
    /// Hypothesis checks run before the claims.
    pub preconditions: Vec<VerdictReport>,
    /// Sub-verdicts that feed into this one.
    pub parts: Vec<VerdictReport>,
    /// For equivalence statements: whether all parts reached the same verdict.
    pub agreement: Option<bool>,
    pub notes: Vec<String>,
}

impl VerdictReport {
    pub fn new(subject: impl Into<String>, thresholds: Thresholds) -> Self {
        Self {
            subject: subject.into(),
            verdict: Verdict::Inconclusive,
            thresholds,
            claims: Vec::new(),
            preconditions: Vec::new(),
            parts: Vec::new(),
            agreement: None,
            notes: Vec::new(),
        }
    }

    /// Sets the verdict from the claims and the parts.
    pub fn conclude(mut self) -> Self {
        self.verdict = Verdict::all(
            self.claims
                .iter()
                .map(|c| c.verdict)
                .chain(self.parts.iter().map(|p| p.verdict)),
        );
        self
    }

    pub fn with_verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn push_claim(&mut self, probe: RatioProbe, claim: Claim) {
        let outcome = assess(probe, claim, &self.thresholds);
        self.claims.push(outcome);
    }

    /// Every probe in this report and its parts, depth first.
    pub fn probes(&self) -> Vec<&RatioProbe> {
        let mut out: Vec<&RatioProbe> = self.claims.iter().map(|c| &c.probe).collect();
        for p in self.preconditions.iter().chain(&self.parts) {
            out.extend(p.probes());
        }
        out
    }

    /// One line per report and sub-report.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        self.summarise(0, &mut s);
        s
    }

    fn summarise(&self, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        out.push_str(&format!("{pad}{}: {}", self.subject, self.verdict));
        if let Some(a) = self.agreement {
            out.push_str(if a { " (all parts agree)" } else { " (parts disagree)" });
        }
        out.push('\n');
        for c in &self.claims {
            let fit = c
                .probe
                .trend
                .map(|t| format!(" [L={:.6}, band={:.2e}]", t.limit, t.band))
                .unwrap_or_default();
            out.push_str(&format!("{pad}  - {} {}: {}{}; {}\n", c.probe.label, c.claim, c.verdict, fit, c.reason));
        }
        for n in &self.notes {
            out.push_str(&format!("{pad}  note: {n}\n"));
        }
        for p in &self.preconditions {
            out.push_str(&format!("{pad}  hypothesis:\n"));
            p.summarise(depth + 2, out);
        }
        for p in &self.parts {
            p.summarise(depth + 1, out);
        }
    }
}

fn jump_check(probe: &RatioProbe, dev: impl Fn(f64) -> f64, th: &Thresholds) -> Option<(Verdict, String)> {
    let devs: Vec<f64> = probe.points.iter().filter(|p| p.jump).map(|p| dev(p.ratio)).collect();
    match devs.len() {
        0 => None,
        1 if devs[0] > th.hold_tol => Some((
            Verdict::Inconclusive,
            format!("single jump point with deviation {:.4}; decay cannot be assessed", devs[0]),
        )),
        1 => None,
        _ => {
            let decays = devs
                .windows(2)
                .all(|w| w[1] <= th.hold_tol || w[1] <= th.jump_decay * w[0]);
            if decays {
                None
            } else {
                Some((
                    Verdict::Fails,
                    format!("deviations at successive jumps do not decay: {devs:.4?}"),
                ))
            }
        }
    }
}

/// Applies the verdict rules to one probe.
pub fn assess(probe: RatioProbe, claim: Claim, th: &Thresholds) -> ClaimOutcome {
    let (verdict, reason) = decide(&probe, claim, th);
    ClaimOutcome {
        claim,
        verdict,
        reason,
        probe,
    }
}

fn decide(probe: &RatioProbe, claim: Claim, th: &Thresholds) -> (Verdict, String) {
    let Some(ex) = probe.trend else {
        return (Verdict::Inconclusive, "fewer than 5 usable grid points".into());
    };
    let upper = probe.upper();
    let first = upper.first().map_or(f64::NAN, |p| p.ratio);
    let last = upper.last().map_or(f64::NAN, |p| p.ratio);
    let (base, base_reason) = match claim {
        Claim::Limit { target } => {
            let dl = (ex.limit - target).abs();
            if ex.diverging {
                if (last - target).abs() > (first - target).abs() {
                    (Verdict::Fails, format!("trend moves away from {target} without slowing down"))
                } else {
                    (Verdict::Inconclusive, "monotone trend without visible convergence".into())
                }
            } else if dl <= th.hold_tol && ex.band <= th.band_tol {
                (Verdict::Holds, format!("fitted limit within {} of {target}", th.hold_tol))
            } else if dl > th.hold_tol + ex.band && (last - ex.limit).abs() > dl {
                (
                    Verdict::Inconclusive,
                    format!(
                        "fitted limit {:.6} lies further from the last ratio {last:.6} than from {target}",
                        ex.limit
                    ),
                )
            } else if dl > th.hold_tol + ex.band {
                (Verdict::Fails, format!("fitted limit {:.6} differs from {target} beyond tolerance and band", ex.limit))
            } else {
                (Verdict::Inconclusive, "fitted limit not separated from the target by its band".into())
            }
        }
        Claim::LiminfAtLeast { bound } => {
            let inf = upper.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
            let upward = ex.diverging && last > first;
            if inf >= bound - th.hold_tol && (upward || ex.limit >= bound - th.hold_tol - ex.band) {
                (Verdict::Holds, format!("upper-grid infimum {inf:.6} >= {bound} - {}", th.hold_tol))
            } else if inf < bound - th.hold_tol && !upward && ex.limit + ex.band < bound - th.hold_tol {
                (Verdict::Fails, format!("upper-grid infimum {inf:.6} and fitted limit {:.6} below {bound}", ex.limit))
            } else {
                (Verdict::Inconclusive, format!("upper-grid infimum {inf:.6} and trend disagree"))
            }
        }
        Claim::LimsupAtMost { bound } => {
            let sup = upper.iter().map(|p| p.ratio).fold(f64::NEG_INFINITY, f64::max);
            let downward = ex.diverging && last < first;
            if sup <= bound + th.hold_tol && (downward || ex.limit <= bound + th.hold_tol + ex.band) {
                (Verdict::Holds, format!("upper-grid supremum {sup:.6} <= {bound} + {}", th.hold_tol))
            } else if sup > bound + th.hold_tol && !downward && ex.limit - ex.band > bound + th.hold_tol {
                (Verdict::Fails, format!("upper-grid supremum {sup:.6} and fitted limit {:.6} above {bound}", ex.limit))
            } else {
                (Verdict::Inconclusive, format!("upper-grid supremum {sup:.6} and trend disagree"))
            }
        }
        Claim::Bounded => {
            let worst = upper
                .iter()
                .map(|p| if p.ratio > 0.0 { p.ratio.max(1.0 / p.ratio) } else { f64::INFINITY })
                .fold(0.0f64, f64::max);
            if ex.diverging {
                (Verdict::Fails, "ratio or its inverse grows without slowing down".into())
            } else if worst <= th.weak_bound {
                (Verdict::Holds, format!("max(ratio, 1/ratio) = {worst:.4} <= {}", th.weak_bound))
            } else {
                (Verdict::Fails, format!("max(ratio, 1/ratio) = {worst:.4e} exceeds {}", th.weak_bound))
            }
        }
        Claim::BoundedAbove => {
            let sup = upper.iter().map(|p| p.ratio).fold(f64::NEG_INFINITY, f64::max);
            if ex.diverging && last > first {
                (Verdict::Fails, "ratio grows without slowing down".into())
            } else if sup <= th.weak_bound {
                (Verdict::Holds, format!("upper-grid supremum {sup:.4} <= {}", th.weak_bound))
            } else {
                (Verdict::Fails, format!("upper-grid supremum {sup:.4e} exceeds {}", th.weak_bound))
            }
        }
    };
    let dev: Box<dyn Fn(f64) -> f64> = match claim {
        Claim::Limit { target } => Box::new(move |r| (r - target).abs()),
        Claim::LiminfAtLeast { bound } => Box::new(move |r| (bound - r).max(0.0)),
        Claim::LimsupAtMost { bound } => Box::new(move |r| (r - bound).max(0.0)),
        Claim::Bounded | Claim::BoundedAbove => return (base, base_reason),
    };
    match jump_check(probe, dev, th) {
        Some((v, why)) => (Verdict::all([base, v]), format!("{base_reason}; {why}")),
        None => (base, base_reason),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe_from(f: impl Fn(f64) -> f64 + Sync) -> RatioProbe {
        let g = GridSpec::analytic();
        let pts = g.with_jumps(&[]);
        RatioProbe::evaluate("t", "n", "d", &pts, g.middle(), |x| Ok(f(x))).unwrap()
    }

    #[test]
    fn grid_hits_decades_exactly() {
        let p = GridSpec::quadrature().points();
        assert_eq!(p.len(), 11);
        assert_eq!(p[0], 10.0);
        assert_eq!(p[2], 100.0);
        assert_eq!(p[10], 1e6);
    }

    #[test]
    fn constant_probe() {
        let p = probe_from(|_| 1.0);
        let t = p.trend.unwrap();
        assert_eq!(t.limit, 1.0);
        assert_eq!(t.band, 0.0);
    }

    #[test]
    fn slowly_converging_probe() {
        let p = probe_from(|x| 1.0 + x.ln() / x);
        let t = p.trend.unwrap();
        assert!((t.limit - 1.0).abs() < 0.01, "{t:?}");
        let out = assess(p, Claim::Limit { target: 1.0 }, &Thresholds::default());
        assert_eq!(out.verdict, Verdict::Holds);
    }

    #[test]
    fn diverging_probe_fails() {
        let p = probe_from(|x| (1.0 + x) / 2.0);
        assert!(p.trend.unwrap().diverging);
        let out = assess(p, Claim::Limit { target: 1.0 }, &Thresholds::default());
        assert_eq!(out.verdict, Verdict::Fails);
    }

    #[test]
    fn settled_elsewhere_fails() {
        let p = probe_from(|_| 2.0);
        let out = assess(p, Claim::Limit { target: 1.0 }, &Thresholds::default());
        assert_eq!(out.verdict, Verdict::Fails);
    }

    #[test]
    fn non_decaying_jumps_fail() {
        let g = GridSpec::analytic();
        let pts = g.with_jumps(&[218.0, 1.9e6]);
        let p = RatioProbe::evaluate("t", "n", "d", &pts, g.middle(), |x| {
            Ok(if (x - 217.5).abs() < 1e-9 || (x - (1.9e6 - 0.5)).abs() < 1e-3 { 0.5 } else { 1.0 })
        })
        .unwrap();
        let out = assess(p, Claim::Limit { target: 1.0 }, &Thresholds::default());
        assert_eq!(out.verdict, Verdict::Fails);
    }

    #[test]
    fn verdict_display_and_order() {
        assert_eq!(Verdict::Inconclusive.to_string(), "inconclusive");
        assert_eq!(Verdict::all([Verdict::Holds, Verdict::Inconclusive]), Verdict::Inconclusive);
        assert_eq!(Verdict::all([Verdict::Inconclusive, Verdict::Fails]), Verdict::Fails);
        assert_eq!(serde_json::to_string(&Verdict::Holds).unwrap(), "\"holds\"");
    }
}
