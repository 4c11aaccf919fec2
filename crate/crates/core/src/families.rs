//! Parametric laws with closed-form tails, quantiles and samplers.
//!
//! An [`AnalyticLaw`] is the distribution of `max(ξ + offset, floor)` where
//! `ξ` follows one of the [`Family`] members. Shifting changes `offset` and
//! `floor` together; taking the positive part raises `floor` to zero.
//!
//! Laws are written in configuration files and on the command line as
//! `name(key=value, …)`; see [`parse_law`] and [`FAMILY_NAMES`].

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::lattice::LatticeMeasure;
use crate::measure::{log_add, sort_dedup, Atom, Measure, Mixture, SharedMeasure, Support, TailCurve, Window};
use crate::{Error, Result};

const LN_2PI_HALF: f64 = 0.918_938_533_204_672_8;
const LN_F64_MAX: f64 = 709.782_712_893_384;

/// Slowly varying factor `l` of a regularly varying tail `x^{-α} l(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlowlyVarying {
    /// `F̄(x) = min(1, c·x^{-α})`
    Constant { c: f64 },
    /// `F̄(x) = x^{-α} (1 + ln x)^β` for `x >= 1`, `1` below
    Log { beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `F̄(x) = (x/scale)^{-α}` for `x >= scale`, `1` below.
    Pareto { alpha: f64, scale: f64 },
    /// `F̄(x) = Φ̄((ln x - μ)/σ)`
    Lognormal { mu: f64, sigma: f64 },
    /// `F̄(x) = exp(-(x/scale)^k)` for `x >= 0`.
    Weibull { shape: f64, scale: f64 },
    /// `F̄(x) = e^{-λx}` for `x >= 0`.
    Exponential { rate: f64 },
    RegVarying { alpha: f64, slow: SlowlyVarying },
    PointMass { at: f64 },
    Counterexample(CounterexampleLaw),
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

/// `ln Φ̄(z)` for the standard normal, accurate in both tails.
pub fn ln_normal_tail(z: f64) -> f64 {
    if z < 0.0 {
        (-0.5 * erfc(-z * std::f64::consts::FRAC_1_SQRT_2)).ln_1p()
    } else if z < 35.0 {
        (0.5 * erfc(z * std::f64::consts::FRAC_1_SQRT_2)).ln()
    } else {
        let z2 = 1.0 / (z * z);
        let series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
        -0.5 * z * z - z.ln() - LN_2PI_HALF + series.ln()
    }
}

impl Family {
    pub fn pareto(alpha: f64) -> Result<Self> {
        Ok(Family::Pareto {
            alpha: positive("alpha", alpha)?,
            scale: 1.0,
        })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Ok(Family::Lognormal {
            mu: finite("mu", mu)?,
            sigma: positive("sigma", sigma)?,
        })
    }

    pub fn weibull(shape: f64) -> Result<Self> {
        Ok(Family::Weibull {
            shape: positive("k", shape)?,
            scale: 1.0,
        })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(Family::Exponential {
            rate: positive("lambda", rate)?,
        })
    }

    pub fn reg_varying(alpha: f64, slow: SlowlyVarying) -> Result<Self> {
        let alpha = positive("alpha", alpha)?;
        match slow {
            SlowlyVarying::Constant { c } => {
                positive("c", c)?;
            }
            SlowlyVarying::Log { beta } => {
                if !(beta.is_finite() && beta <= alpha) {
                    return Err(Error::InvalidParameter(format!(
                        "beta must be finite and <= alpha = {alpha} for a monotone tail, got {beta}"
                    )));
                }
            }
        }
        Ok(Family::RegVarying { alpha, slow })
    }

    pub fn point_mass(at: f64) -> Result<Self> {
        Ok(Family::PointMass { at: finite("a", at)? })
    }

    pub fn counterexample(alpha: f64) -> Result<Self> {
        Ok(Family::Counterexample(CounterexampleLaw::new(alpha)?))
    }

    fn validate(&self) -> Result<()> {
        match self {
            Family::Pareto { alpha, scale } => {
                positive("alpha", *alpha)?;
                positive("scale", *scale)?;
            }
            Family::Lognormal { mu, sigma } => {
                finite("mu", *mu)?;
                positive("sigma", *sigma)?;
            }
            Family::Weibull { shape, scale } => {
                positive("k", *shape)?;
                positive("scale", *scale)?;
            }
            Family::Exponential { rate } => {
                positive("lambda", *rate)?;
            }
            Family::RegVarying { alpha, slow } => {
                Family::reg_varying(*alpha, *slow)?;
            }
            Family::PointMass { at } => {
                finite("a", *at)?;
            }
            Family::Counterexample(c) => {
                positive("alpha", c.alpha)?;
            }
        }
        Ok(())
    }

    fn support(&self) -> (f64, f64) {
        match self {
            Family::Pareto { scale, .. } => (*scale, f64::INFINITY),
            Family::Lognormal { .. } | Family::Weibull { .. } | Family::Exponential { .. } => (0.0, f64::INFINITY),
            Family::RegVarying { alpha, slow } => match slow {
                SlowlyVarying::Constant { c } => (c.powf(1.0 / alpha), f64::INFINITY),
                SlowlyVarying::Log { .. } => (1.0, f64::INFINITY),
            },
            Family::PointMass { at } => (*at, *at),
            Family::Counterexample(_) => (1.0, f64::INFINITY),
        }
    }

    fn ln_tail(&self, t: f64) -> f64 {
        match self {
            Family::Pareto { alpha, scale } => {
                if t <= *scale {
                    0.0
                } else {
                    -alpha * (t / scale).ln()
                }
            }
            Family::Lognormal { mu, sigma } => {
                if t <= 0.0 {
                    0.0
                } else {
                    ln_normal_tail((t.ln() - mu) / sigma)
                }
            }
            Family::Weibull { shape, scale } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(t / scale).powf(*shape)
                }
            }
            Family::Exponential { rate } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -rate * t
                }
            }
            Family::RegVarying { alpha, slow } => match slow {
                SlowlyVarying::Constant { c } => {
                    let v = c.ln() - alpha * t.ln();
                    if t <= 0.0 {
                        0.0
                    } else {
                        v.min(0.0)
                    }
                }
                SlowlyVarying::Log { beta } => {
                    if t <= 1.0 {
                        0.0
                    } else {
                        let l = t.ln();
                        -alpha * l + beta * l.ln_1p()
                    }
                }
            },
            Family::PointMass { at } => {
                if t < *at {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Counterexample(c) => c.tail(t).ln(),
        }
    }

    fn tail(&self, t: f64) -> f64 {
        match self {
            Family::Pareto { alpha, scale } => {
                if t <= *scale {
                    1.0
                } else {
                    (t / scale).powf(-alpha)
                }
            }
            Family::PointMass { at } => {
                if t < *at {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Counterexample(c) => c.tail(t),
            _ => self.ln_tail(t).exp(),
        }
    }

    fn ln_density(&self, t: f64) -> f64 {
        match self {
            Family::Pareto { alpha, scale } => {
                if t < *scale {
                    f64::NEG_INFINITY
                } else {
                    alpha.ln() - (alpha + 1.0) * t.ln() + alpha * scale.ln()
                }
            }
            Family::Lognormal { mu, sigma } => {
                if t <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let lt = t.ln();
                    let z = (lt - mu) / sigma;
                    -0.5 * z * z - lt - sigma.ln() - LN_2PI_HALF
                }
            }
            Family::Weibull { shape, scale } => {
                if t <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let u = t / scale;
                    shape.ln() - scale.ln() + (shape - 1.0) * u.ln() - u.powf(*shape)
                }
            }
            Family::Exponential { rate } => {
                if t < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * t
                }
            }
            Family::RegVarying { alpha, slow } => match slow {
                SlowlyVarying::Constant { c } => {
                    if t < c.powf(1.0 / alpha) {
                        f64::NEG_INFINITY
                    } else {
                        (alpha * c).ln() - (alpha + 1.0) * t.ln()
                    }
                }
                SlowlyVarying::Log { beta } => {
                    if t < 1.0 {
                        f64::NEG_INFINITY
                    } else {
                        let l = t.ln();
                        let g = l.ln_1p();
                        let factor = alpha - beta / (1.0 + l);
                        -(alpha + 1.0) * l + beta * g + factor.ln()
                    }
                }
            },
            Family::PointMass { .. } => f64::NEG_INFINITY,
            Family::Counterexample(c) => c.ln_density(t),
        }
    }

    fn has_density(&self) -> bool {
        !matches!(self, Family::PointMass { .. })
    }

    fn atoms(&self, lo: f64, hi: f64) -> Vec<Atom> {
        match self {
            Family::PointMass { at } if lo <= *at && *at <= hi => vec![Atom { at: *at, mass: 1.0 }],
            Family::Counterexample(c) => c.atoms(lo, hi),
            _ => Vec::new(),
        }
    }

    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = match self {
            Family::Counterexample(c) => c.kinks(lo, hi),
            _ => Vec::new(),
        };
        let (s, _) = self.support();
        if lo <= s && s <= hi {
            out.push(s);
        }
        out
    }

    /// Upper quantile: `Q(u)` with `F̄(Q(u)) = u` for `u ∈ (0, 1]`.
    fn upper_quantile(&self, u: f64) -> f64 {
        match self {
            Family::Pareto { alpha, scale } => scale * u.powf(-1.0 / alpha),
            Family::Lognormal { mu, sigma } => {
                let z = std::f64::consts::SQRT_2 * erfc_inv(2.0 * u);
                (mu + sigma * z).exp()
            }
            Family::Weibull { shape, scale } => scale * (-u.ln()).powf(1.0 / shape),
            Family::Exponential { rate } => -u.ln() / rate,
            Family::RegVarying {
                alpha,
                slow: SlowlyVarying::Constant { c },
            } => (c / u).powf(1.0 / alpha),
            Family::PointMass { at } => *at,
            _ => self.numeric_quantile(u),
        }
    }

    /// Generalised inverse `inf{t : F̄(t) <= u}` by bisection on `ln t`.
    fn numeric_quantile(&self, u: f64) -> f64 {
        let (lo_edge, _) = self.support();
        let target = u.ln();
        if self.ln_tail(lo_edge) <= target {
            return lo_edge;
        }
        let mut lo = lo_edge.max(f64::MIN_POSITIVE).ln();
        let mut hi = lo.max(0.0) + 1.0;
        while self.ln_tail(hi.exp()) > target {
            hi = 2.0 * hi + 1.0;
            if hi > LN_F64_MAX {
                return f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ln_tail(mid.exp()) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi.exp()
    }

    /// Canonical `name(key=value, …)` form.
    pub fn spec(&self) -> String {
        match self {
            Family::Pareto { alpha, scale } if *scale == 1.0 => format!("pareto(alpha={alpha})"),
            Family::Pareto { alpha, scale } => format!("pareto(alpha={alpha}, scale={scale})"),
            Family::Lognormal { mu, sigma } => format!("lognormal(mu={mu}, sigma={sigma})"),
            Family::Weibull { shape, scale } if *scale == 1.0 => format!("weibull(k={shape})"),
            Family::Weibull { shape, scale } => format!("weibull(k={shape}, scale={scale})"),
            Family::Exponential { rate } => format!("exponential(lambda={rate})"),
            Family::RegVarying {
                alpha,
                slow: SlowlyVarying::Constant { c },
            } => format!("regvarying(alpha={alpha}, c={c})"),
            Family::RegVarying {
                alpha,
                slow: SlowlyVarying::Log { beta },
            } => format!("regvarying(alpha={alpha}, beta={beta})"),
            Family::PointMass { at } => format!("pointmass(a={at})"),
            Family::Counterexample(c) => format!("counterexample(alpha={})", c.alpha),
        }
    }
}

/// The law of `max(ξ + offset, floor)` with `ξ ~ family`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticLaw {
    pub family: Family,
    pub offset: f64,
    pub floor: Option<f64>,
}

impl AnalyticLaw {
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(Self {
            family,
            offset: 0.0,
            floor: None,
        })
    }

    pub fn pareto(alpha: f64) -> Result<Self> {
        Self::new(Family::pareto(alpha)?)
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::lognormal(mu, sigma)?)
    }

    pub fn weibull(shape: f64) -> Result<Self> {
        Self::new(Family::weibull(shape)?)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::exponential(rate)?)
    }

    pub fn point_mass(at: f64) -> Result<Self> {
        Self::new(Family::point_mass(at)?)
    }

    pub fn counterexample(alpha: f64) -> Result<Self> {
        Self::new(Family::counterexample(alpha)?)
    }

    /// The law shifted right by `y`: its tail at `x + y` equals the original tail at `x`.
    ///
    /// Note the sign: `shift(F, y)` in the sense `F̄_y(x) = F̄(x + y)` is `self.shifted(-y)`.
    pub fn shifted(&self, y: f64) -> Self {
        Self {
            family: self.family.clone(),
            offset: self.offset + y,
            floor: self.floor.map(|f| f + y),
        }
    }

    /// `F_y` with tail `F̄_y(x) = F̄(x + y)`.
    pub fn shift(&self, y: f64) -> Self {
        self.shifted(-y)
    }

    /// `F⁺`: the law of `max(ξ, 0)`, with tail `F̄(x)` for `x >= 0` and `1` below.
    pub fn positive_part(&self) -> Self {
        Self {
            family: self.family.clone(),
            offset: self.offset,
            floor: Some(self.floor.map_or(0.0, |f| f.max(0.0))),
        }
    }

    pub fn into_shared(self) -> SharedMeasure {
        Arc::new(self)
    }

    fn floor_mass(&self) -> f64 {
        match self.floor {
            Some(f) => 1.0 - self.family.tail(f - self.offset),
            None => 0.0,
        }
    }

    fn above_floor(&self, t: f64) -> bool {
        self.floor.is_none_or(|f| t >= f)
    }

    /// `Q(u)` with `F̄(Q(u)) = u` for continuous laws; the generalised inverse otherwise.
    pub fn upper_quantile(&self, u: f64) -> f64 {
        let q = self.family.upper_quantile(u) + self.offset;
        match self.floor {
            Some(f) => q.max(f),
            None => q,
        }
    }

    /// One variate from `rng` by inverse transform.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = 1.0 - rng.random::<f64>();
        self.upper_quantile(u)
    }

    /// `n` independent variates, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n).map(|_| self.draw(&mut rng)).collect())
    }

    /// Canonical textual form accepted by [`parse_law`].
    pub fn spec(&self) -> String {
        let base = self.family.spec();
        let mut extra = Vec::new();
        if self.offset != 0.0 {
            extra.push(format!("offset={}", self.offset));
        }
        if let Some(f) = self.floor {
            extra.push(format!("floor={f}"));
        }
        if extra.is_empty() {
            base
        } else {
            format!("{}, {})", &base[..base.len() - 1], extra.join(", "))
        }
    }
}

impl TailCurve for AnalyticLaw {
    fn mass(&self) -> f64 {
        1.0
    }

    fn ln_tail(&self, x: f64) -> f64 {
        if !self.above_floor(x) {
            return 0.0;
        }
        self.family.ln_tail(x - self.offset)
    }

    fn tail(&self, x: f64) -> f64 {
        if !self.above_floor(x) {
            return 1.0;
        }
        self.family.tail(x - self.offset)
    }

    fn support(&self) -> Support {
        let (lo, hi) = self.family.support();
        let (lo, hi) = (lo + self.offset, hi + self.offset);
        match self.floor {
            Some(f) => Support::new(lo.max(f), hi.max(f)),
            None => Support::new(lo, hi),
        }
    }

    fn jumps(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.atoms(&Window::Closed(lo, hi)).iter().map(|a| a.at).collect()
    }

    fn label(&self) -> String {
        self.spec()
    }
}

impl Measure for AnalyticLaw {
    fn has_density(&self) -> bool {
        self.family.has_density()
    }

    fn ln_density(&self, y: f64) -> f64 {
        match self.floor {
            Some(f) if y <= f => f64::NEG_INFINITY,
            _ => self.family.ln_density(y - self.offset),
        }
    }

    fn atoms(&self, window: &Window) -> Vec<Atom> {
        let (wlo, whi) = window.hull();
        let mut out: Vec<Atom> = self
            .family
            .atoms(wlo - self.offset, whi - self.offset)
            .into_iter()
            .map(|a| Atom {
                at: a.at + self.offset,
                mass: a.mass,
            })
            .filter(|a| window.contains(a.at) && self.floor.is_none_or(|f| a.at > f))
            .collect();
        if let Some(f) = self.floor {
            let m = self.floor_mass();
            if m > 0.0 && window.contains(f) {
                out.insert(0, Atom { at: f, mass: m });
            }
        }
        out
    }

    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .family
            .kinks(lo - self.offset, hi - self.offset)
            .into_iter()
            .map(|t| t + self.offset)
            .collect();
        if let Some(f) = self.floor {
            out.retain(|&t| t > f);
            if lo <= f && f <= hi {
                out.push(f);
            }
        }
        sort_dedup(&mut out);
        out
    }

    fn ln_tail_left(&self, x: f64) -> f64 {
        let at: f64 = self.atoms(&Window::Closed(x, x)).iter().map(|a| a.mass).sum();
        if at > 0.0 {
            log_add(self.ln_tail(x), at.ln())
        } else {
            self.ln_tail(x)
        }
    }
}

/// The law `G` whose tail agrees with `F̄(x) = x^{-α}` at the points `x_n`
/// but halves at the points `y_n`, so that `G` is not long-tailed while
/// `F + G` is.
///
/// With `x_1 = 1`: `Ḡ(x) = F̄(x) / (1 + ln(x/x_n))` on `[x_n, y_n)`, where
/// `y_n = x_n e^{2^n - 1}`; `Ḡ(y_n) = F̄(y_n) 2^{-(n+1)}`; `Ḡ` is constant on
/// `[y_n, x_{n+1}]` with `x_{n+1} = y_n 2^{(n+1)/α}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleLaw {
    pub alpha: f64,
    #[serde(skip)]
    table: Vec<Segment>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Segment {
    ln_x: f64,
    x: f64,
    y: f64,
    /// `Ḡ(y_n)`
    plateau: f64,
}

/// One row of the breakpoint table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub n: usize,
    pub x: f64,
    pub y: f64,
    pub tail_at_y: f64,
}

impl CounterexampleLaw {
    pub fn new(alpha: f64) -> Result<Self> {
        let alpha = positive("alpha", alpha)?;
        let mut table = Vec::new();
        let mut n = 1;
        loop {
            let (ln_x, ln_y) = Self::ln_breakpoints(alpha, n);
            if ln_x > LN_F64_MAX {
                break;
            }
            let x = ln_x.exp();
            let y = ln_y.exp();
            let plateau = if y.is_finite() {
                y.powf(-alpha) * 0.5f64.powi(n as i32 + 1)
            } else {
                0.0
            };
            table.push(Segment { ln_x, x, y, plateau });
            n += 1;
        }
        Ok(Self { alpha, table })
    }

    /// `(ln x_n, ln y_n)` in closed form.
    pub fn ln_breakpoints(alpha: f64, n: usize) -> (f64, f64) {
        let mut ln_x = 0.0;
        for k in 1..n {
            ln_x += 2f64.powi(k as i32) - 1.0 + (k as f64 + 1.0) * std::f64::consts::LN_2 / alpha;
        }
        (ln_x, ln_x + 2f64.powi(n as i32) - 1.0)
    }

    /// `(x_n, y_n)`, or a range error when `y_n` is not representable.
    pub fn breakpoint(&self, n: usize) -> Result<(f64, f64)> {
        if n == 0 {
            return Err(Error::InvalidParameter("breakpoints are numbered from 1".into()));
        }
        let (ln_x, ln_y) = Self::ln_breakpoints(self.alpha, n);
        if ln_y > LN_F64_MAX {
            return Err(Error::Range { index: n, ln_value: ln_y });
        }
        Ok((ln_x.exp(), ln_y.exp()))
    }

    /// Rows `1..=n` of the breakpoint table.
    pub fn breakpoints(&self, n: usize) -> Result<Vec<Breakpoint>> {
        (1..=n)
            .map(|k| {
                let (x, y) = self.breakpoint(k)?;
                Ok(Breakpoint {
                    n: k,
                    x,
                    y,
                    tail_at_y: self.tail(y),
                })
            })
            .collect()
    }

    /// CSV with columns `n,x_n,y_n,G_tail_at_y_n`.
    pub fn breakpoints_csv(&self, n: usize) -> Result<String> {
        let mut s = String::from("n,x_n,y_n,G_tail_at_y_n\n");
        for b in self.breakpoints(n)? {
            s.push_str(&format!("{},{:.17e},{:.17e},{:.17e}\n", b.n, b.x, b.y, b.tail_at_y));
        }
        Ok(s)
    }

    fn table(&self) -> std::borrow::Cow<'_, [Segment]> {
        if self.table.is_empty() {
            // deserialized without its cache
            std::borrow::Cow::Owned(Self::new(self.alpha).map(|c| c.table).unwrap_or_default())
        } else {
            std::borrow::Cow::Borrowed(&self.table)
        }
    }

    fn segment(&self, t: f64) -> Option<(usize, Segment)> {
        let table = self.table();
        let k = table.partition_point(|s| s.x <= t);
        if k == 0 {
            None
        } else {
            Some((k, table[k - 1]))
        }
    }

    pub fn tail(&self, t: f64) -> f64 {
        if t <= 1.0 {
            return 1.0;
        }
        match self.segment(t) {
            None => 1.0,
            Some((_, s)) => {
                if t < s.y {
                    t.powf(-self.alpha) / (1.0 + (t.ln() - s.ln_x))
                } else {
                    s.plateau
                }
            }
        }
    }

    fn ln_density(&self, t: f64) -> f64 {
        if t < 1.0 {
            return f64::NEG_INFINITY;
        }
        match self.segment(t) {
            Some((_, s)) if t < s.y => {
                let l = 1.0 + (t.ln() - s.ln_x);
                let a = self.alpha;
                -(a + 1.0) * t.ln() + (a / l + 1.0 / (l * l)).ln()
            }
            _ => f64::NEG_INFINITY,
        }
    }

    fn atoms(&self, lo: f64, hi: f64) -> Vec<Atom> {
        self.table()
            .iter()
            .filter(|s| s.y.is_finite() && lo <= s.y && s.y <= hi)
            .map(|s| Atom { at: s.y, mass: s.plateau })
            .collect()
    }

    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.table()
            .iter()
            .flat_map(|s| [s.x, s.y])
            .filter(|t| t.is_finite() && lo <= *t && *t <= hi)
            .collect()
    }
}

/// A discretised law: a lattice measure plus the mass beyond the window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Discretized {
    pub measure: LatticeMeasure,
    /// Mass of `(b, ∞)`.
    pub right_residual: f64,
    pub warnings: Vec<String>,
}

/// Lattice on `a, a + δ, …, b`: the atom at `g > a` carries the mass of
/// `(g - δ, g]`, the atom at `a` carries the mass of `(-∞, a]`, and the mass
/// of `(b, ∞)` is returned as `right_residual`.
pub fn discretize(law: &dyn Measure, a: f64, b: f64, step: f64) -> Result<Discretized> {
    if !(a < b) || !(step > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "discretize needs a < b and step > 0, got [{a}, {b}] with step {step}"
        )));
    }
    let mut warnings = Vec::new();
    let ratio = (b - a) / step;
    let count = ratio.round();
    let (count, step) = if (ratio - count).abs() <= 1e-9 * ratio.max(1.0) {
        (count as usize, step)
    } else {
        let c = ratio.ceil();
        let adjusted = (b - a) / c;
        warnings.push(format!(
            "step {step} does not divide [{a}, {b}]; using {adjusted} ({} cells)",
            c as usize
        ));
        (c as usize, adjusted)
    };
    let total = law.mass();
    let mut masses = Vec::with_capacity(count + 1);
    let mut prev = law.tail(a);
    masses.push((total - prev).max(0.0));
    for i in 1..=count {
        let g = if i == count { b } else { a + i as f64 * step };
        let t = law.tail(g);
        masses.push((prev - t).max(0.0));
        prev = t;
    }
    Ok(Discretized {
        measure: LatticeMeasure::new(a, step, masses)?,
        right_residual: prev,
        warnings,
    })
}

/// Accepted family names.
pub const FAMILY_NAMES: [&str; 7] = [
    "pareto",
    "lognormal",
    "weibull",
    "exponential",
    "regvarying",
    "pointmass",
    "counterexample",
];

/// One line per family: name, parameters and tail.
pub fn family_catalogue() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("pareto", "alpha>0, scale>0 (default 1)", "(x/scale)^-alpha for x>=scale, 1 below"),
        ("lognormal", "mu (default 0), sigma>0 (default 1)", "normal tail of (ln x - mu)/sigma"),
        ("weibull", "k>0, scale>0 (default 1)", "exp(-(x/scale)^k) for x>=0"),
        ("exponential", "lambda>0", "exp(-lambda x) for x>=0"),
        ("regvarying", "alpha>0 and either c>0 (default 1) or beta<=alpha", "min(1, c x^-alpha) or x^-alpha (1+ln x)^beta for x>=1"),
        ("pointmass", "a", "1 for x<a, 0 from a on"),
        ("counterexample", "alpha>0 (default 1)", "x^-alpha/(1+ln(x/x_n)) on [x_n,y_n), halved at y_n"),
    ]
}

pub(crate) fn split_top_level(s: &str) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Parse(format!("unbalanced `)` in `{s}`")));
                }
            }
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced `(` in `{s}`")));
    }
    let last = s[start..].trim();
    if !last.is_empty() || !parts.is_empty() {
        parts.push(last);
    }
    Ok(parts)
}

pub(crate) fn call_parts(s: &str) -> Result<(&str, &str)> {
    let s = s.trim();
    let open = s
        .find('(')
        .ok_or_else(|| Error::Parse(format!("expected `name(key=value, ...)`, got `{s}`")))?;
    if !s.ends_with(')') {
        return Err(Error::Parse(format!("missing closing `)` in `{s}`")));
    }
    Ok((s[..open].trim(), &s[open + 1..s.len() - 1]))
}

pub(crate) fn parse_number(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("value of `{key}` is not a number: `{}`", v.trim())))
}

/// Parses `name(key=value, …)` into a law.
///
/// Every family also accepts `offset=` (added to the variate) and `floor=`
/// (the variate is replaced by `max(variate, floor)`).
pub fn parse_law(spec: &str) -> Result<AnalyticLaw> {
    let (name, body) = call_parts(spec)?;
    let mut params: Vec<(String, f64)> = Vec::new();
    for p in split_top_level(body)? {
        if p.is_empty() {
            continue;
        }
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("parameter `{p}` is not of the form key=value")))?;
        let k = k.trim().to_ascii_lowercase();
        if params.iter().any(|(q, _)| *q == k) {
            return Err(Error::Parse(format!("parameter `{k}` given twice")));
        }
        let v = parse_number(&k, v)?;
        params.push((k, v));
    }
    let mut take = |keys: &[&str]| -> Option<f64> {
        let i = params.iter().position(|(k, _)| keys.contains(&k.as_str()))?;
        Some(params.remove(i).1)
    };
    let need = |v: Option<f64>, key: &str| -> Result<f64> {
        v.ok_or_else(|| Error::Parse(format!("`{name}` requires parameter `{key}`")))
    };
    let lname = name.to_ascii_lowercase();
    let family = match lname.as_str() {
        "pareto" => Family::Pareto {
            alpha: need(take(&["alpha"]), "alpha")?,
            scale: take(&["scale"]).unwrap_or(1.0),
        },
        "lognormal" => Family::Lognormal {
            mu: take(&["mu"]).unwrap_or(0.0),
            sigma: take(&["sigma"]).unwrap_or(1.0),
        },
        "weibull" => Family::Weibull {
            shape: need(take(&["k", "shape"]), "k")?,
            scale: take(&["scale"]).unwrap_or(1.0),
        },
        "exponential" => Family::Exponential {
            rate: need(take(&["lambda", "rate"]), "lambda")?,
        },
        "regvarying" => {
            let alpha = need(take(&["alpha"]), "alpha")?;
            let c = take(&["c"]);
            let beta = take(&["beta"]);
            let slow = match (c, beta) {
                (Some(_), Some(_)) => {
                    return Err(Error::Parse("regvarying takes either `c` or `beta`, not both".into()))
                }
                (_, Some(beta)) => SlowlyVarying::Log { beta },
                (c, None) => SlowlyVarying::Constant { c: c.unwrap_or(1.0) },
            };
            Family::reg_varying(alpha, slow)?
        }
        "pointmass" => Family::PointMass {
            at: need(take(&["a", "at"]), "a")?,
        },
        "counterexample" => Family::counterexample(take(&["alpha"]).unwrap_or(1.0))?,
        _ => {
            return Err(Error::UnknownId {
                kind: "family",
                given: name.to_string(),
                valid: FAMILY_NAMES.join(", "),
            })
        }
    };
    let offset = take(&["offset"]).unwrap_or(0.0);
    let floor = take(&["floor"]);
    if let Some((k, _)) = params.first() {
        return Err(Error::Parse(format!("`{lname}` has no parameter `{k}`")));
    }
    let mut law = AnalyticLaw::new(family)?.shifted(finite("offset", offset)?);
    if let Some(f) = floor {
        law.floor = Some(finite("floor", f)?);
    }
    Ok(law)
}

/// Parses a law or a non-negative combination `mix(w1*law1, w2*law2, …)`.
pub fn parse_measure(spec: &str) -> Result<SharedMeasure> {
    let (name, body) = call_parts(spec)?;
    if name.eq_ignore_ascii_case("mix") {
        let mut parts: Vec<(f64, SharedMeasure)> = Vec::new();
        for term in split_top_level(body)? {
            let (w, law) = term
                .split_once('*')
                .ok_or_else(|| Error::Parse(format!("mixture term `{term}` is not of the form weight*law")))?;
            parts.push((parse_number("weight", w)?, parse_measure(law)?));
        }
        return Ok(Arc::new(Mixture::new(parts)?));
    }
    Ok(parse_law(spec)?.into_shared())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_tails() {
        assert_eq!(AnalyticLaw::pareto(1.0).unwrap().tail(2.0), 0.5);
        assert_eq!(AnalyticLaw::exponential(1.0).unwrap().tail(0.0), 1.0);
        let w = AnalyticLaw::weibull(0.5).unwrap().tail(4.0);
        assert!((w - (-2f64).exp()).abs() < 1e-15);
        assert!((w - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn shift_examples() {
        let p = AnalyticLaw::pareto(1.0).unwrap();
        assert_eq!(p.shift(1.0).tail(1.0), 0.5);
        assert_eq!(p.shift(0.0).tail(3.0), p.tail(3.0));
        let back = p.shift(2.5).shift(-2.5);
        for x in [0.5, 1.0, 2.0, 7.5, 100.0] {
            assert_eq!(back.tail(x), p.tail(x));
        }
    }

    #[test]
    fn positive_part_examples() {
        let p = AnalyticLaw::pareto(1.0).unwrap();
        let pp = p.positive_part();
        for x in [-3.0, 0.0, 1.0, 5.0] {
            assert_eq!(pp.tail(x), p.tail(x));
        }
        let centred = AnalyticLaw::lognormal(0.0, 1.0).unwrap().shifted(-2.0);
        let plus = centred.positive_part();
        assert_eq!(plus.tail(-1.0), 1.0);
        assert_eq!(plus.tail(3.0), centred.tail(3.0));
        let atom = plus.atoms(&Window::All);
        assert_eq!(atom.len(), 1);
        assert_eq!(atom[0].at, 0.0);
        assert!((atom[0].mass - (1.0 - centred.tail(0.0))).abs() < 1e-15);
    }

    #[test]
    fn quantile_round_trip() {
        let laws = [
            AnalyticLaw::pareto(1.5).unwrap(),
            AnalyticLaw::lognormal(0.3, 1.2).unwrap(),
            AnalyticLaw::weibull(0.5).unwrap(),
            AnalyticLaw::weibull(1.5).unwrap(),
            AnalyticLaw::exponential(2.0).unwrap(),
            parse_law("regvarying(alpha=1, c=2)").unwrap(),
            parse_law("regvarying(alpha=2, beta=1)").unwrap(),
        ];
        for law in &laws {
            for u in [1e-6, 1e-4, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-6] {
                let q = law.upper_quantile(u);
                assert!((law.tail(q) - u).abs() < 1e-9, "{} u={u}", law.spec());
            }
        }
    }

    #[test]
    fn counterexample_first_breakpoints() {
        let g = CounterexampleLaw::new(1.0).unwrap();
        let (x1, y1) = g.breakpoint(1).unwrap();
        assert_eq!(x1, 1.0);
        let e = std::f64::consts::E;
        assert!((y1 - e).abs() < 1e-12);
        assert!((g.tail(y1) - (-1f64).exp() / 4.0).abs() < 1e-12);
        let (x2, _) = g.breakpoint(2).unwrap();
        assert!((x2 - 4.0 * e).abs() < 1e-12);
        assert!(matches!(g.breakpoint(40), Err(Error::Range { .. })));
    }

    #[test]
    fn counterexample_density_integrates_to_the_tail_drop() {
        let g = AnalyticLaw::counterexample(1.0).unwrap();
        let cfg = crate::quad::QuadConfig::default();
        let (x2, y2) = match &g.family {
            Family::Counterexample(c) => c.breakpoint(2).unwrap(),
            _ => unreachable!(),
        };
        let lnd = |t: f64| g.ln_density(t);
        let v = crate::quad::integrate_log(&lnd, x2, y2, &[], &cfg).unwrap().value();
        let drop = g.tail(x2) - g.tail(y2 * (1.0 - 1e-15)) ;
        assert!((v - drop).abs() < 1e-9 * drop);
    }

    #[test]
    fn discretize_conserves_mass() {
        let p = AnalyticLaw::pareto(1.0).unwrap();
        let d = discretize(&p, 1.0, 1000.0, 0.25).unwrap();
        assert!(d.warnings.is_empty());
        assert!((d.measure.total_mass() + d.right_residual - 1.0).abs() < 1e-12);
        // (100, 1000] stays on the lattice, (1000, ∞) is the residual
        assert!((d.measure.tail_at(100.0) - 0.009).abs() < 1e-12);
        let pm = discretize(&AnalyticLaw::point_mass(2.0).unwrap(), 0.0, 4.0, 0.5).unwrap();
        assert_eq!(pm.right_residual, 0.0);
        assert_eq!(pm.measure.trimmed().len(), 1);
        let odd = discretize(&p, 1.0, 2.0, 0.3).unwrap();
        assert_eq!(odd.warnings.len(), 1);
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = AnalyticLaw::pareto(1.0).unwrap();
        assert!(p.sample(0, 1).is_err());
        let one = p.sample(1, 3).unwrap();
        assert!(one[0] >= 1.0);
        assert_eq!(p.sample(100, 42).unwrap(), p.sample(100, 42).unwrap());
    }

    #[test]
    fn grammar() {
        let l = parse_law("pareto(alpha=1.5)").unwrap();
        assert_eq!(l, AnalyticLaw::pareto(1.5).unwrap());
        let s = parse_law("pareto(alpha=1, offset=2)").unwrap();
        assert_eq!(s.tail(3.0), 1.0);
        assert_eq!(s.tail(4.0), 0.5);
        assert_eq!(parse_law(&s.spec()).unwrap(), s);
        assert!(matches!(parse_law("cauchy(x=1)"), Err(Error::UnknownId { .. })));
        assert!(matches!(parse_law("pareto(alpha=-1)"), Err(Error::InvalidParameter(_))));
        assert!(matches!(parse_law("pareto(beta=1)"), Err(Error::Parse(_))));
        let m = parse_measure("mix(0.5*pareto(alpha=1), 0.5*weibull(k=0.5))").unwrap();
        assert!((m.tail(4.0) - 0.5 * (0.25 + (-2f64).exp())).abs() < 1e-15);
    }
}
