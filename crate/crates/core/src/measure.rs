//! Tail curves and finite measures on the real line.
//!
//! A [`TailCurve`] is anything that can report `x ↦ F(x, ∞)`. A [`Measure`]
//! additionally exposes enough structure (density, atoms, kinks) for the
//! quadrature engine to integrate against `F(dy)`.
//!
//! Tails are reported both linearly and on the log scale; the log form keeps
//! light tails meaningful far beyond the point where `exp` underflows.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Shared handle to a measure, used wherever measures are composed.
pub type SharedMeasure = Arc<dyn Measure>;

/// Closed hull of the support. `hi` may be `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub at: f64,
    pub mass: f64,
}

/// A subset of the line used for restrictions `F_B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Window {
    All,
    /// `(-∞, t]`
    Le(f64),
    /// `(-∞, t)`
    Lt(f64),
    /// `(t, ∞)`
    Gt(f64),
    /// `[t, ∞)`
    Ge(f64),
    /// `[a, b]`
    Closed(f64, f64),
    /// `(a, b)`
    Open(f64, f64),
}

impl Window {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Window::All => true,
            Window::Le(t) => x <= t,
            Window::Lt(t) => x < t,
            Window::Gt(t) => x > t,
            Window::Ge(t) => x >= t,
            Window::Closed(a, b) => a <= x && x <= b,
            Window::Open(a, b) => a < x && x < b,
        }
    }

    /// Closure of the window as `(lo, hi)`.
    pub fn hull(&self) -> (f64, f64) {
        match *self {
            Window::All => (f64::NEG_INFINITY, f64::INFINITY),
            Window::Le(t) | Window::Lt(t) => (f64::NEG_INFINITY, t),
            Window::Gt(t) | Window::Ge(t) => (t, f64::INFINITY),
            Window::Closed(a, b) | Window::Open(a, b) => (a, b),
        }
    }

    pub fn shifted(&self, d: f64) -> Window {
        match *self {
            Window::All => Window::All,
            Window::Le(t) => Window::Le(t + d),
            Window::Lt(t) => Window::Lt(t + d),
            Window::Gt(t) => Window::Gt(t + d),
            Window::Ge(t) => Window::Ge(t + d),
            Window::Closed(a, b) => Window::Closed(a + d, b + d),
            Window::Open(a, b) => Window::Open(a + d, b + d),
        }
    }

    pub fn is_empty(&self) -> bool {
        match *self {
            Window::Closed(a, b) => a > b,
            Window::Open(a, b) => a >= b,
            _ => false,
        }
    }
}

/// A right-continuous non-increasing tail function `x ↦ F(x, ∞)`.
pub trait TailCurve: Send + Sync {
    /// Total mass `‖F‖`, the limit of the tail at `-∞`.
    fn mass(&self) -> f64;

    /// `ln F(x, ∞)`; `-∞` where the tail vanishes.
    fn ln_tail(&self, x: f64) -> f64;

    fn tail(&self, x: f64) -> f64 {
        self.ln_tail(x).exp()
    }

    /// Fallible form of [`TailCurve::ln_tail`], overridden by tails that are
    /// themselves computed numerically.
    fn try_ln_tail(&self, x: f64) -> crate::Result<f64> {
        Ok(self.ln_tail(x))
    }

    fn support(&self) -> Support;

    /// Discontinuities of the tail inside `[lo, hi]`.
    fn jumps(&self, _lo: f64, _hi: f64) -> Vec<f64> {
        Vec::new()
    }

    /// `true` when evaluating the tail is cheap (closed form). Tails backed by
    /// quadrature report `false` and are probed on a shorter grid.
    fn is_analytic(&self) -> bool {
        true
    }

    fn label(&self) -> String;
}

/// A finite non-negative measure with an absolutely continuous part and
/// countably many atoms.
pub trait Measure: TailCurve {
    fn has_density(&self) -> bool {
        false
    }

    /// Log-density of the absolutely continuous part.
    fn ln_density(&self, _y: f64) -> f64 {
        f64::NEG_INFINITY
    }

    /// Atoms lying in `window`, in increasing position.
    fn atoms(&self, _window: &Window) -> Vec<Atom> {
        Vec::new()
    }

    /// Points in `[lo, hi]` where the density is not smooth.
    fn kinks(&self, _lo: f64, _hi: f64) -> Vec<f64> {
        Vec::new()
    }

    /// `F[x, ∞)`, the left limit of the tail at `x`.
    fn tail_left(&self, x: f64) -> f64 {
        let at: f64 = self
            .atoms(&Window::Closed(x, x))
            .iter()
            .map(|a| a.mass)
            .sum();
        self.tail(x) + at
    }

    fn ln_tail_left(&self, x: f64) -> f64 {
        let at: f64 = self
            .atoms(&Window::Closed(x, x))
            .iter()
            .map(|a| a.mass)
            .sum();
        if at > 0.0 {
            log_add(self.ln_tail(x), at.ln())
        } else {
            self.ln_tail(x)
        }
    }
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn log_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Non-negative combination `Σ wᵢ Fᵢ`.
#[derive(Clone)]
pub struct Mixture {
    parts: Vec<(f64, SharedMeasure)>,
}

impl Mixture {
    pub fn new(parts: Vec<(f64, SharedMeasure)>) -> crate::Result<Self> {
        if parts.is_empty() {
            return Err(crate::Error::InvalidParameter(
                "mixture needs at least one component".into(),
            ));
        }
        if let Some((w, _)) = parts.iter().find(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(crate::Error::InvalidParameter(format!(
                "mixture weight {w} must be finite and non-negative"
            )));
        }
        Ok(Self { parts })
    }

    /// `pF + qG`.
    pub fn pair(p: f64, f: SharedMeasure, q: f64, g: SharedMeasure) -> crate::Result<Self> {
        Self::new(vec![(p, f), (q, g)])
    }

    /// `c·F`.
    pub fn scaled(c: f64, f: SharedMeasure) -> crate::Result<Self> {
        Self::new(vec![(c, f)])
    }

    fn live(&self) -> impl Iterator<Item = &(f64, SharedMeasure)> {
        self.parts.iter().filter(|(w, _)| *w > 0.0)
    }
}

impl TailCurve for Mixture {
    fn mass(&self) -> f64 {
        self.live().map(|(w, m)| w * m.mass()).sum()
    }

    fn ln_tail(&self, x: f64) -> f64 {
        log_sum(self.live().map(|(w, m)| w.ln() + m.ln_tail(x)))
    }

    fn tail(&self, x: f64) -> f64 {
        self.live().map(|(w, m)| w * m.tail(x)).sum()
    }

    fn try_ln_tail(&self, x: f64) -> crate::Result<f64> {
        let mut terms = Vec::new();
        for (w, m) in self.live() {
            terms.push(w.ln() + m.try_ln_tail(x)?);
        }
        Ok(log_sum(terms))
    }

    fn support(&self) -> Support {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, m) in self.live() {
            let s = m.support();
            lo = lo.min(s.lo);
            hi = hi.max(s.hi);
        }
        Support { lo, hi }
    }

    fn jumps(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.live().flat_map(|(_, m)| m.jumps(lo, hi)).collect();
        sort_dedup(&mut out);
        out
    }

    fn is_analytic(&self) -> bool {
        self.live().all(|(_, m)| m.is_analytic())
    }

    fn label(&self) -> String {
        let terms: Vec<String> = self
            .parts
            .iter()
            .map(|(w, m)| format!("{w}*{}", m.label()))
            .collect();
        format!("mix({})", terms.join(" + "))
    }
}

impl Measure for Mixture {
    fn has_density(&self) -> bool {
        self.live().any(|(_, m)| m.has_density())
    }

    fn ln_density(&self, y: f64) -> f64 {
        log_sum(
            self.live()
                .filter(|(_, m)| m.has_density())
                .map(|(w, m)| w.ln() + m.ln_density(y)),
        )
    }

    fn atoms(&self, window: &Window) -> Vec<Atom> {
        let mut all: Vec<Atom> = Vec::new();
        for (w, m) in self.live() {
            for a in m.atoms(window) {
                all.push(Atom {
                    at: a.at,
                    mass: w * a.mass,
                });
            }
        }
        merge_atoms(all)
    }

    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.live().flat_map(|(_, m)| m.kinks(lo, hi)).collect();
        sort_dedup(&mut out);
        out
    }
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.retain(|x| x.is_finite());
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
}

pub(crate) fn merge_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| a.at.total_cmp(&b.at));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if last.at == a.at => last.mass += a.mass,
            _ => out.push(a),
        }
    }
    out
}

/// Tail curve given by a closure. Useful for ad hoc comparisons.
pub struct FnTail<F> {
    label: String,
    mass: f64,
    support: Support,
    ln_tail: F,
}

impl<F> FnTail<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    /// `ln_tail` must be the log of a non-increasing function with limit `ln mass` at `-∞`.
    pub fn new(label: impl Into<String>, mass: f64, support: Support, ln_tail: F) -> Self {
        Self {
            label: label.into(),
            mass,
            support,
            ln_tail,
        }
    }
}

impl<F> TailCurve for FnTail<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn mass(&self) -> f64 {
        self.mass
    }

    fn ln_tail(&self, x: f64) -> f64 {
        (self.ln_tail)(x)
    }

    fn support(&self) -> Support {
        self.support
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}
