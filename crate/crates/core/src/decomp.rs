//! Convolution tails and their decompositions at a level `h = h(x)`.
//!
//! Every function here integrates a shifted tail against one of the two
//! measures. For lattice measures the integrals reduce to finite sums over
//! atoms; for measures with a density they are evaluated by adaptive
//! quadrature. Results are [`TailValue`]s so that light tails stay
//! representable far beyond the underflow threshold of `f64`.
//!
//! Notation: `F_{≤h}` and `F_{>h}` are the restrictions of `F` to `(-∞, h]`
//! and `(h, ∞)`, and `T̄(x)` is the tail of `T` on the open interval `(x, ∞)`.

use serde::{Deserialize, Serialize};

use crate::hfunc::HFunction;
use crate::measure::{merge_atoms, sort_dedup, Atom, Measure, SharedMeasure, Support, TailCurve, Window};
use crate::quad::{integrate_against, Kernel, QuadConfig, TailValue};
use crate::{Error, Result};

/// `T̄(t)` as a [`TailValue`]; linear for cheap tails, log-scaled otherwise.
pub(crate) fn tail_value(curve: &dyn Measure, t: f64) -> Result<TailValue> {
    if curve.is_analytic() {
        let lin = curve.tail(t);
        if lin > 1e-280 {
            return Ok(TailValue::exact(lin));
        }
    }
    Ok(TailValue::from_ln(curve.try_ln_tail(t)?))
}

/// `T[t, ∞)` as a [`TailValue`].
fn tail_left_value(curve: &dyn Measure, t: f64) -> Result<TailValue> {
    let at: f64 = curve
        .atoms(&Window::Closed(t, t))
        .iter()
        .map(|a| a.mass)
        .sum();
    Ok(tail_value(curve, t)?.add(&TailValue::exact(at)))
}

fn scaled(c: f64, v: TailValue) -> TailValue {
    TailValue {
        ln_scale: v.ln_scale,
        scaled: c * v.scaled,
        scaled_err: c * v.scaled_err,
    }
}

/// Points in `y ∈ [lo, hi]` where `y ↦ T̄(x - y)` is not smooth.
fn tail_kernel_breaks(curve: &dyn Measure, x: f64, lo: f64, hi: f64) -> Vec<f64> {
    let (tlo, thi) = (x - hi, x - lo);
    if !(tlo.is_finite() && thi.is_finite()) {
        return vec![x - curve.support().lo];
    }
    let mut pts = curve.jumps(tlo, thi);
    pts.extend(curve.kinks(tlo, thi));
    pts.push(curve.support().lo);
    let mut out: Vec<f64> = pts.into_iter().map(|t| x - t).collect();
    sort_dedup(&mut out);
    out
}

/// `∫_window F̄(x - y) G(dy)`.
fn shifted_tail_integral(
    f: &dyn Measure,
    g: &dyn Measure,
    window: Window,
    x: f64,
    cfg: &QuadConfig,
) -> Result<TailValue> {
    let sup = g.support();
    let (wlo, whi) = window.hull();
    let lo = wlo.max(sup.lo);
    let hi = whi.min(sup.hi);
    if lo > hi {
        return Ok(TailValue::zero());
    }
    let breaks = tail_kernel_breaks(f, x, lo, hi);
    let kernel = Kernel::Tail {
        curve: f,
        x,
        floor: None,
    };
    integrate_against(g, &window, &kernel, &breaks, cfg)
}

/// Tail of `F * G` at `x`: `∫ F̄(x - y) G(dy)`.
///
/// The range `y > x - inf supp F`, where the kernel equals `‖F‖`, is
/// handled in closed form as `‖F‖ · Ḡ(x - inf supp F)`.
pub fn conv_tail(f: &dyn Measure, g: &dyn Measure, x: f64, cfg: &QuadConfig) -> Result<TailValue> {
    let a = x - f.support().lo;
    let body = shifted_tail_integral(f, g, Window::Le(a), x, cfg)?;
    let rest = scaled(f.mass(), tail_value(g, a)?);
    Ok(body.add(&rest))
}

/// Tail of `F_{≤level} * G` at `x`: `∫_{(-∞, level]} Ḡ(x - y) F(dy)`.
pub fn conv_tail_le(
    f: &dyn Measure,
    g: &dyn Measure,
    level: f64,
    x: f64,
    cfg: &QuadConfig,
) -> Result<TailValue> {
    shifted_tail_integral(g, f, Window::Le(level), x, cfg)
}

/// Tail of `F_{>level} * G` at `x`: `∫ F̄(max(level, x - y)) G(dy)`.
pub fn conv_tail_gt(
    f: &dyn Measure,
    g: &dyn Measure,
    level: f64,
    x: f64,
    cfg: &QuadConfig,
) -> Result<TailValue> {
    let cut = x - level;
    let body = shifted_tail_integral(f, g, Window::Lt(cut), x, cfg)?;
    let rest = tail_value(f, level)?.scaled_by(&tail_left_value(g, cut)?);
    Ok(body.add(&rest))
}

/// Tail of `F_{>level} * G_{>level}` at `x`, integrated against `G`:
/// `∫_{(level, ∞)} F̄(max(level, x - y)) G(dy)`.
pub fn conv_tail_gt_gt(
    f: &dyn Measure,
    g: &dyn Measure,
    level: f64,
    x: f64,
    cfg: &QuadConfig,
) -> Result<TailValue> {
    let f_level = tail_value(f, level)?;
    let cut = x - level;
    if cut > level {
        let body = shifted_tail_integral(f, g, Window::Open(level, cut), x, cfg)?;
        Ok(body.add(&f_level.scaled_by(&tail_left_value(g, cut)?)))
    } else {
        Ok(f_level.scaled_by(&tail_value(g, level)?))
    }
}

/// The same quantity as [`conv_tail_gt_gt`], integrated against `F` instead.
pub fn conv_tail_gt_gt_swapped(
    f: &dyn Measure,
    g: &dyn Measure,
    level: f64,
    x: f64,
    cfg: &QuadConfig,
) -> Result<TailValue> {
    conv_tail_gt_gt(g, f, level, x, cfg)
}

fn level_at(h: &HFunction, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "decompositions are defined for x >= 0, got {x}"
        )));
    }
    Ok(h.eval(x))
}

/// [`conv_tail_le`] at level `h(x)`.
pub fn conv_tail_le_h(f: &dyn Measure, g: &dyn Measure, h: &HFunction, x: f64, cfg: &QuadConfig) -> Result<TailValue> {
    conv_tail_le(f, g, level_at(h, x)?, x, cfg)
}

/// [`conv_tail_gt`] at level `h(x)`.
pub fn conv_tail_gt_h(f: &dyn Measure, g: &dyn Measure, h: &HFunction, x: f64, cfg: &QuadConfig) -> Result<TailValue> {
    conv_tail_gt(f, g, level_at(h, x)?, x, cfg)
}

/// [`conv_tail_gt_gt`] at level `h(x)`.
pub fn conv_tail_gt_gt_h(f: &dyn Measure, g: &dyn Measure, h: &HFunction, x: f64, cfg: &QuadConfig) -> Result<TailValue> {
    conv_tail_gt_gt(f, g, level_at(h, x)?, x, cfg)
}

/// All terms of the decompositions of `(F * G)(x, ∞)` at level `h(x)`, with
/// residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub x: f64,
    pub level: f64,
    /// `(F * G)(x, ∞)`
    pub total: f64,
    /// `(F_{≤h} * G)(x, ∞)`
    pub le_h: f64,
    /// `(F * G_{≤h})(x, ∞)`
    pub le_h_swapped: f64,
    /// `(F_{>h} * G)(x, ∞)`
    pub gt_h: f64,
    /// `(F_{>h} * G_{>h})(x, ∞)` integrated against `G`
    pub gt_gt: f64,
    /// The same term integrated against `F`
    pub gt_gt_swapped: f64,
    /// `total - le_h - gt_h`
    pub split_residual: f64,
    /// `le_h + le_h_swapped + gt_gt - total`, never negative
    pub upper_slack: f64,
    /// Whether `h(x) <= x/2`
    pub within_half: bool,
    /// `total - le_h - le_h_swapped - gt_gt`, reported when `within_half`
    pub three_term_residual: Option<f64>,
    /// Residual threshold: `1e-12 · max(1, ‖F‖‖G‖)` plus the quadrature error bounds
    pub tolerance: f64,
}

impl DecompositionReport {
    pub fn identities_hold(&self) -> bool {
        self.split_residual.abs() <= self.tolerance
            && self.upper_slack >= -self.tolerance
            && self.three_term_residual.is_none_or(|r| r.abs() <= self.tolerance)
            && (self.gt_gt - self.gt_gt_swapped).abs() <= self.tolerance
    }
}

/// Evaluates every term of the decompositions at `x` with level `h(x)`.
pub fn decomposition_report(
    f: &dyn Measure,
    g: &dyn Measure,
    h: &HFunction,
    x: f64,
    cfg: &QuadConfig,
) -> Result<DecompositionReport> {
    let level = level_at(h, x)?;
    decomposition_at_level(f, g, level, x, cfg)
}

/// [`decomposition_report`] with the level given directly.
pub fn decomposition_at_level(
    f: &dyn Measure,
    g: &dyn Measure,
    level: f64,
    x: f64,
    cfg: &QuadConfig,
) -> Result<DecompositionReport> {
    let total = conv_tail(f, g, x, cfg)?;
    let le = conv_tail_le(f, g, level, x, cfg)?;
    let le_sw = conv_tail_le(g, f, level, x, cfg)?;
    let gt = conv_tail_gt(f, g, level, x, cfg)?;
    let gg = conv_tail_gt_gt(f, g, level, x, cfg)?;
    let gg_sw = conv_tail_gt_gt_swapped(f, g, level, x, cfg)?;
    let err: f64 = [total, le, le_sw, gt, gg, gg_sw].iter().map(|v| v.abs_err()).sum();
    let tolerance = 1e-12 * (f.mass() * g.mass()).max(1.0) + 2.0 * err;
    let (t, l, ls, gv, ggv) = (total.value(), le.value(), le_sw.value(), gt.value(), gg.value());
    let within_half = level <= x / 2.0;
    Ok(DecompositionReport {
        x,
        level,
        total: t,
        le_h: l,
        le_h_swapped: ls,
        gt_h: gv,
        gt_gt: ggv,
        gt_gt_swapped: gg_sw.value(),
        split_residual: t - l - gv,
        upper_slack: l + ls + ggv - t,
        within_half,
        three_term_residual: within_half.then(|| t - l - ls - ggv),
        tolerance,
    })
}

/// The convolution `F * G` as a measure in its own right.
///
/// Tails, densities and atoms are computed on demand by quadrature against
/// the second factor, so chains such as `F₁ * F₂ * F₃` nest one quadrature
/// per factor. Inner integrals use a tighter tolerance than the default so
/// that an outer quadrature sees a smooth integrand.
#[derive(Clone)]
pub struct Convolution {
    f: SharedMeasure,
    g: SharedMeasure,
    cfg: QuadConfig,
}

impl Convolution {
    pub fn new(f: SharedMeasure, g: SharedMeasure) -> Self {
        Self::with_config(
            f,
            g,
            QuadConfig {
                rel_tol: 1e-11,
                ..QuadConfig::default()
            },
        )
    }

    pub fn with_config(f: SharedMeasure, g: SharedMeasure, cfg: QuadConfig) -> Self {
        Self { f, g, cfg }
    }

    /// `F₁ * F₂ * … * Fₙ`, folded from the left.
    pub fn chain(factors: &[SharedMeasure]) -> Result<SharedMeasure> {
        let mut it = factors.iter();
        let first = it
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty convolution chain".into()))?;
        let mut acc = first.clone();
        for next in it {
            acc = std::sync::Arc::new(Convolution::new(acc, next.clone()));
        }
        Ok(acc)
    }

    fn tail_result(&self, x: f64) -> Result<TailValue> {
        conv_tail(self.f.as_ref(), self.g.as_ref(), x, &self.cfg)
    }

    /// Points relevant for kinks of `T`: its kinks, atoms and lower edge within `[lo, hi]`.
    fn features(m: &dyn Measure, lo: f64, hi: f64) -> Vec<f64> {
        let s = m.support();
        let lo = lo.max(s.lo);
        let hi = hi.min(s.hi);
        let mut out = vec![s.lo];
        if lo <= hi && hi.is_finite() {
            out.extend(m.kinks(lo, hi));
            out.extend(m.atoms(&Window::Closed(lo, hi)).iter().map(|a| a.at));
        }
        sort_dedup(&mut out);
        out
    }
}

fn ln_of(r: Result<TailValue>) -> f64 {
    match r {
        Ok(v) => v.ln(),
        Err(Error::Accuracy { value, .. }) => value.ln(),
        Err(_) => f64::NAN,
    }
}

impl TailCurve for Convolution {
    fn mass(&self) -> f64 {
        self.f.mass() * self.g.mass()
    }

    fn ln_tail(&self, x: f64) -> f64 {
        ln_of(self.tail_result(x))
    }

    fn try_ln_tail(&self, x: f64) -> Result<f64> {
        Ok(self.tail_result(x)?.ln())
    }

    fn support(&self) -> Support {
        let (a, b) = (self.f.support(), self.g.support());
        Support::new(a.lo + b.lo, a.hi + b.hi)
    }

    fn jumps(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.atoms(&Window::Closed(lo, hi)).iter().map(|a| a.at).collect()
    }

    fn is_analytic(&self) -> bool {
        false
    }

    fn label(&self) -> String {
        format!("({} * {})", self.f.label(), self.g.label())
    }
}

impl Measure for Convolution {
    fn has_density(&self) -> bool {
        self.f.has_density() || self.g.has_density()
    }

    fn ln_density(&self, y: f64) -> f64 {
        let (f, g) = (self.f.as_ref(), self.g.as_ref());
        let mut total = TailValue::zero();
        if f.has_density() {
            let fs = f.support();
            let window = Window::Closed(y - fs.hi, y - fs.lo);
            let gs = g.support();
            let lo = (y - fs.hi).max(gs.lo);
            let hi = (y - fs.lo).min(gs.hi);
            if lo <= hi {
                let mut breaks: Vec<f64> = f.kinks(y - hi, y - lo).into_iter().map(|t| y - t).collect();
                breaks.push(y - fs.lo);
                let kernel = Kernel::Density { curve: f, x: y };
                match integrate_against(g, &window, &kernel, &breaks, &self.cfg) {
                    Ok(v) => total = total.add(&v),
                    Err(Error::Accuracy { value, .. }) => total = total.add(&TailValue::exact(value)),
                    Err(_) => return f64::NAN,
                }
            }
        }
        if g.has_density() {
            let gs = g.support();
            for a in f.atoms(&Window::Closed(y - gs.hi, y - gs.lo)) {
                let t = a.mass.ln() + g.ln_density(y - a.at);
                total = total.add(&TailValue::from_ln(t));
            }
        }
        total.ln()
    }

    fn atoms(&self, window: &Window) -> Vec<Atom> {
        let (f, g) = (self.f.as_ref(), self.g.as_ref());
        let (fs, gs) = (f.support(), g.support());
        let (wlo, whi) = window.hull();
        let f_atoms = f.atoms(&Window::Closed(fs.lo.max(wlo - gs.hi), whi - gs.lo));
        if f_atoms.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for a in f_atoms {
            for b in g.atoms(&window.shifted(-a.at)) {
                out.push(Atom {
                    at: a.at + b.at,
                    mass: a.mass * b.mass,
                });
            }
        }
        merge_atoms(out)
    }

    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (fs, gs) = (self.f.support(), self.g.support());
        let fp = Self::features(self.f.as_ref(), lo - gs.hi, hi - gs.lo);
        let gp = Self::features(self.g.as_ref(), lo - fs.hi, hi - fs.lo);
        let mut out = Vec::new();
        for a in &fp {
            for b in &gp {
                let s = a + b;
                if s >= lo && s <= hi {
                    out.push(s);
                }
            }
        }
        sort_dedup(&mut out);
        out
    }
}

impl TailValue {
    /// Product of two values.
    pub fn scaled_by(&self, other: &TailValue) -> TailValue {
        if self.scaled == 0.0 || other.scaled == 0.0 {
            return TailValue::zero();
        }
        TailValue {
            ln_scale: self.ln_scale + other.ln_scale,
            scaled: self.scaled * other.scaled,
            scaled_err: self.scaled_err * other.scaled.abs() + other.scaled_err * self.scaled.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeMeasure;

    fn bernoulli() -> LatticeMeasure {
        LatticeMeasure::new(0.0, 1.0, vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn lattice_conv_tail_matches_direct_convolution() {
        let f = LatticeMeasure::new(0.0, 1.0, vec![0.2, 0.3, 0.1, 0.4]).unwrap();
        let g = LatticeMeasure::new(1.0, 1.0, vec![0.6, 0.0, 0.4]).unwrap();
        let direct = f.convolve(&g).unwrap();
        let cfg = QuadConfig::default();
        for x in [-1.0, 0.5, 1.0, 2.0, 3.5, 4.0, 5.0, 6.0] {
            let v = conv_tail(&f, &g, x, &cfg).unwrap().value();
            assert!((v - direct.tail_at(x)).abs() < 1e-15, "x={x}");
        }
    }

    #[test]
    fn bernoulli_split_is_exact_for_every_level() {
        let b = bernoulli();
        let cfg = QuadConfig::default();
        for level in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            for x in [0.0, 0.5, 1.0, 1.5] {
                let r = decomposition_at_level(&b, &b, level, x, &cfg).unwrap();
                assert_eq!(r.split_residual, 0.0, "level={level} x={x}");
                assert!(r.upper_slack >= 0.0);
            }
        }
    }

    #[test]
    fn point_mass_at_zero_reproduces_the_other_tail() {
        let f = LatticeMeasure::point_mass(0.0, 1.0, 0.5).unwrap();
        let g = LatticeMeasure::new(0.0, 0.5, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let cfg = QuadConfig::default();
        for x in [0.0, 0.5, 1.0, 1.25] {
            let v = conv_tail_le(&f, &g, 3.0, x, &cfg).unwrap().value();
            assert!((v - g.tail_at(x)).abs() < 1e-15);
        }
        assert_eq!(conv_tail_le(&f, &g, -1.0, 1.0, &cfg).unwrap().value(), 0.0);
        assert_eq!(conv_tail_gt(&f, &g, 3.0, 1.0, &cfg).unwrap().value(), 0.0);
        assert_eq!(conv_tail_gt_gt(&g, &g, 5.0, 1.0, &cfg).unwrap().value(), 0.0);
    }

    #[test]
    fn negative_x_is_rejected() {
        let b = bernoulli();
        let h = HFunction::constant(1.0);
        let err = decomposition_report(&b, &b, &h, -1.0, &QuadConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }
}
