//! Insensitivity scales `h` and their construction from tails.
//!
//! [`construct_h`] follows the sequence procedure: for `n = 1, 2, …` pick
//! `x_n` so that `|F̄(x ± n) - F̄(x)| ≤ F̄(x)/n` for every probed `x > x_n`,
//! then set `h(x) = n` on `(x_n, x_{n+1}]`. The quantifier "for all `x`" is
//! checked on a finite geometric probe set, so the result is only certified
//! up to its recorded horizon.

use serde::{Deserialize, Serialize};

use crate::families::{call_parts, parse_number, split_top_level};
use crate::measure::TailCurve;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HShape {
    /// `h(x) = values[k]` on `(breakpoints[k], breakpoints[k+1]]`, `0` for
    /// `x <= breakpoints[0]`, and `values.last()` beyond the last breakpoint.
    Steps { breakpoints: Vec<f64>, values: Vec<f64> },
    /// `h(x) = scale · x^exponent` for `x >= 0`.
    Power { scale: f64, exponent: f64 },
    Constant { value: f64 },
}

/// A non-decreasing function `h` on `[0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HFunction {
    pub shape: HShape,
    /// Apply `h(x) <= x/2`.
    pub cap_half: bool,
    /// Largest `x` at which the construction was checked.
    pub horizon: Option<f64>,
    /// Set when the construction stopped at the horizon rather than at `max_n`.
    pub truncated: bool,
    pub notes: Vec<String>,
}

impl HFunction {
    fn from_shape(shape: HShape) -> Self {
        Self {
            shape,
            cap_half: false,
            horizon: None,
            truncated: false,
            notes: Vec::new(),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::from_shape(HShape::Constant { value })
    }

    pub fn power(scale: f64, exponent: f64) -> Self {
        Self::from_shape(HShape::Power { scale, exponent })
    }

    /// `h(x) = √x`.
    pub fn sqrt() -> Self {
        Self::power(1.0, 0.5)
    }

    /// `h(x) = x/2`.
    pub fn half() -> Self {
        Self::power(0.5, 1.0)
    }

    /// Step function with `h = values[k]` on `(breakpoints[k], breakpoints[k+1]]`.
    pub fn steps(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidParameter(
                "step function needs one value per breakpoint".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] > w[1]) || values.first().is_some_and(|v| *v < 0.0) {
            return Err(Error::InvalidParameter(
                "step values must be non-negative and non-decreasing".into(),
            ));
        }
        Ok(Self::from_shape(HShape::Steps { breakpoints, values }))
    }

    pub fn capped(mut self) -> Self {
        self.cap_half = true;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        let raw = match &self.shape {
            HShape::Constant { value } => *value,
            HShape::Power { scale, exponent } => {
                if x <= 0.0 {
                    0.0
                } else {
                    scale * x.powf(*exponent)
                }
            }
            HShape::Steps { breakpoints, values } => {
                // number of breakpoints strictly below x
                let k = breakpoints.partition_point(|&b| b < x);
                if k == 0 {
                    0.0
                } else {
                    values[k - 1]
                }
            }
        };
        if self.cap_half {
            raw.min(x / 2.0)
        } else {
            raw
        }
    }

    /// Breakpoints `x_n` of a step function; empty for the other shapes.
    pub fn breakpoints(&self) -> &[f64] {
        match &self.shape {
            HShape::Steps { breakpoints, .. } => breakpoints,
            _ => &[],
        }
    }

    /// `true` when `h` is identically zero.
    pub fn is_zero(&self) -> bool {
        match &self.shape {
            HShape::Constant { value } => *value == 0.0,
            HShape::Power { scale, .. } => *scale == 0.0,
            HShape::Steps { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Pointwise minimum.
    pub fn min(&self, other: &HFunction) -> HFunction {
        let mut cuts: Vec<f64> = self.breakpoints().iter().chain(other.breakpoints()).copied().collect();
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();
        let both_steps = matches!(self.shape, HShape::Steps { .. }) && matches!(other.shape, HShape::Steps { .. });
        let mut out = if both_steps {
            let mut bps = Vec::new();
            let mut vals: Vec<f64> = Vec::new();
            for (i, &c) in cuts.iter().enumerate() {
                let probe = match cuts.get(i + 1) {
                    Some(&next) => 0.5 * (c + next),
                    None => c + c.abs().max(1.0),
                };
                let v = self.raw(probe).min(other.raw(probe));
                if vals.last() == Some(&v) {
                    continue;
                }
                bps.push(c);
                vals.push(v);
            }
            Self::from_shape(HShape::Steps {
                breakpoints: bps,
                values: vals,
            })
        } else {
            // mixed shapes: tabulate on the union of breakpoints and a geometric grid
            let mut grid: Vec<f64> = cuts.clone();
            let mut t = 1.0;
            while t <= 1e12 {
                grid.push(t);
                t *= 10f64.powf(0.05);
            }
            grid.sort_by(|a, b| a.total_cmp(b));
            grid.dedup();
            let mut bps = Vec::new();
            let mut vals: Vec<f64> = Vec::new();
            for (i, &c) in grid.iter().enumerate() {
                let right = grid.get(i + 1).copied().unwrap_or(c * 2.0);
                let v = self.raw(right).min(other.raw(right));
                let v = vals.last().map_or(v, |&p: &f64| p.max(v));
                if vals.last() == Some(&v) {
                    continue;
                }
                bps.push(c);
                vals.push(v);
            }
            Self::from_shape(HShape::Steps {
                breakpoints: bps,
                values: vals,
            })
        };
        out.cap_half = self.cap_half || other.cap_half;
        out.horizon = match (self.horizon, other.horizon) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        out.truncated = self.truncated || other.truncated;
        out.notes = self.notes.iter().chain(&other.notes).cloned().collect();
        out
    }

    fn raw(&self, x: f64) -> f64 {
        let mut u = self.clone();
        u.cap_half = false;
        u.eval(x)
    }

    /// Compact textual form for output headers.
    pub fn describe(&self) -> String {
        let body = match &self.shape {
            HShape::Constant { value } => format!("const(c={value})"),
            HShape::Power { scale, exponent } => format!("power(scale={scale}, exponent={exponent})"),
            HShape::Steps { breakpoints, values } => format!(
                "steps(n={}, top={})",
                breakpoints.len(),
                values.last().copied().unwrap_or(0.0)
            ),
        };
        if self.cap_half {
            format!("min({body}, x/2)")
        } else {
            body
        }
    }
}

/// Parameters of [`construct_h`].
/// Textual form of a level function: `sqrt`, `half`, `const(c=…)`,
/// `power(scale=…, exponent=…)` or `auto` (constructed from the tails).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HSpec {
    Sqrt,
    Half,
    Const(f64),
    Power { scale: f64, exponent: f64 },
    Auto,
}

impl std::str::FromStr for HSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, body) = if s.contains('(') { call_parts(s)? } else { (s, "") };
        let mut params = Vec::new();
        for p in split_top_level(body)? {
            if p.is_empty() {
                continue;
            }
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("parameter `{p}` is not of the form key=value")))?;
            let k = k.trim().to_ascii_lowercase();
            params.push((k.clone(), parse_number(&k, v)?));
        }
        let get = |key: &str| params.iter().find(|(k, _)| k == key).map(|(_, v)| *v);
        let known: &[&str] = match name.to_ascii_lowercase().as_str() {
            "sqrt" => &[],
            "half" => &[],
            "auto" => &[],
            "const" => &["c"],
            "power" => &["scale", "exponent"],
            _ => {
                return Err(Error::UnknownId {
                    kind: "h function",
                    given: name.to_string(),
                    valid: "sqrt, half, const(c=…), power(scale=…, exponent=…), auto".into(),
                })
            }
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::Parse(format!("`{name}` has no parameter `{k}`")));
        }
        let need = |key: &str| get(key).ok_or_else(|| Error::Parse(format!("`{name}` requires parameter `{key}`")));
        let spec = match name.to_ascii_lowercase().as_str() {
            "sqrt" => HSpec::Sqrt,
            "half" => HSpec::Half,
            "auto" => HSpec::Auto,
            "const" => HSpec::Const(need("c")?),
            _ => HSpec::Power {
                scale: get("scale").unwrap_or(1.0),
                exponent: need("exponent")?,
            },
        };
        match spec {
            HSpec::Const(c) if !(c >= 0.0 && c.is_finite()) => {
                Err(Error::InvalidParameter(format!("const level must be finite and >= 0, got {c}")))
            }
            HSpec::Power { scale, exponent } if !(scale > 0.0 && (0.0..=1.0).contains(&exponent)) => Err(
                Error::InvalidParameter(format!("power needs scale > 0 and exponent in [0, 1], got {scale}, {exponent}")),
            ),
            s => Ok(s),
        }
    }
}

impl HSpec {
    /// The level function; `auto` runs [`construct_h`] on `tails` up to
    /// `horizon` and caps the result at `x/2`.
    pub fn build(&self, tails: &[&dyn TailCurve], horizon: f64) -> Result<HFunction> {
        Ok(match *self {
            HSpec::Sqrt => HFunction::sqrt(),
            HSpec::Half => HFunction::half(),
            HSpec::Const(c) => HFunction::constant(c),
            HSpec::Power { scale, exponent } => HFunction::power(scale, exponent),
            HSpec::Auto => construct_h(
                tails,
                &HConfig {
                    horizon,
                    ..HConfig::default()
                },
            )?
            .capped(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HConfig {
    /// Lower end of the probe set.
    pub start: f64,
    /// Horizon: largest probed `x`.
    pub horizon: f64,
    pub points_per_decade: usize,
    pub max_n: usize,
}

impl Default for HConfig {
    fn default() -> Self {
        Self {
            start: 1.0,
            horizon: 1e8,
            points_per_decade: 40,
            max_n: 1_000_000,
        }
    }
}

fn probe_set(cfg: &HConfig) -> Vec<f64> {
    let decades = (cfg.horizon / cfg.start).log10();
    let count = (decades * cfg.points_per_decade as f64).ceil() as usize;
    (0..=count)
        .map(|k| cfg.start * 10f64.powf(decades * k as f64 / count.max(1) as f64))
        .collect()
}

fn within(curve: &dyn TailCurve, x: f64, n: f64) -> Result<bool> {
    let base = curve.try_ln_tail(x)?;
    if base == f64::NEG_INFINITY {
        return Err(Error::VanishingTail { x });
    }
    let tol = (1.0 / n).ln_1p();
    let lower = (1.0 - 1.0 / n).max(0.0).ln();
    let up = curve.try_ln_tail(x - n)? - base;
    let down = curve.try_ln_tail(x + n)? - base;
    // |T̄(x ± n) / T̄(x) - 1| <= 1/n, on the log scale
    Ok(up <= tol && up >= lower && down <= tol && down >= lower)
}

fn construct_single(curve: &dyn TailCurve, cfg: &HConfig) -> Result<HFunction> {
    let probes = probe_set(cfg);
    for &x in &probes {
        if curve.try_ln_tail(x)? == f64::NEG_INFINITY {
            return Err(Error::VanishingTail { x });
        }
    }
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    let mut prev = probes[0];
    let mut truncated = false;
    for n in 1..=cfg.max_n {
        let nf = n as f64;
        // first probe point above the last one that violates the bound
        let mut last_bad = None;
        for (i, &x) in probes.iter().enumerate().rev() {
            if x < prev {
                break;
            }
            if !within(curve, x, nf)? {
                last_bad = Some(i);
                break;
            }
        }
        let xn = match last_bad {
            Some(i) if i + 1 < probes.len() => probes[i + 1],
            Some(_) => {
                truncated = true;
                break;
            }
            None => prev,
        };
        if xn >= *probes.last().unwrap() {
            truncated = true;
            break;
        }
        breakpoints.push(xn);
        values.push(nf);
        prev = xn;
    }
    // equal breakpoints collapse to the largest value
    let mut bps: Vec<f64> = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    for (b, v) in breakpoints.into_iter().zip(values) {
        if bps.last() == Some(&b) {
            *vals.last_mut().unwrap() = v;
        } else {
            bps.push(b);
            vals.push(v);
        }
    }
    let mut h = HFunction::steps(bps, vals)?;
    h.horizon = Some(cfg.horizon);
    h.truncated = truncated;
    if h.is_zero() {
        h.notes.push(format!(
            "{}: no n >= 1 satisfies the insensitivity bound below x = {:e}; h stays 0, the tail is not h-insensitive for any unbounded h on this horizon",
            curve.label(),
            cfg.horizon
        ));
    }
    Ok(h)
}

/// Builds `h` for one or more tails; several tails give the pointwise minimum.
pub fn construct_h(tails: &[&dyn TailCurve], cfg: &HConfig) -> Result<HFunction> {
    let mut it = tails.iter();
    let first = it
        .next()
        .ok_or_else(|| Error::InvalidParameter("construct_h needs at least one tail".into()))?;
    let mut h = construct_single(*first, cfg)?;
    for t in it {
        h = h.min(&construct_single(*t, cfg)?);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{FnTail, Support};

    fn pareto(alpha: f64) -> FnTail<impl Fn(f64) -> f64 + Send + Sync> {
        FnTail::new("pareto", 1.0, Support::new(1.0, f64::INFINITY), move |x: f64| {
            if x <= 1.0 {
                0.0
            } else {
                -alpha * x.ln()
            }
        })
    }

    #[test]
    fn steps_are_left_open_right_closed() {
        let h = HFunction::steps(vec![2.0, 6.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(h.eval(2.0), 0.0);
        assert_eq!(h.eval(2.5), 1.0);
        assert_eq!(h.eval(6.0), 1.0);
        assert_eq!(h.eval(6.1), 2.0);
        assert_eq!(h.capped().eval(3.0), 1.0);
        assert_eq!(HFunction::half().eval(10.0), 5.0);
    }

    #[test]
    fn pareto_breakpoints_follow_n_squared() {
        // |x/(x-n) - 1| <= 1/n iff x >= n² + n, so h(x) ≈ √x
        let f = pareto(1.0);
        let cfg = HConfig {
            horizon: 1e6,
            ..HConfig::default()
        };
        let h = construct_h(&[&f], &cfg).unwrap();
        for x in [1e3, 1e4, 1e5, 9e5] {
            let v = h.eval(x);
            let exact = ((4.0 * x + 1.0).sqrt() - 1.0) / 2.0;
            assert!(v <= exact + 1.0 && v >= 0.85 * exact - 1.0, "x={x} h={v} vs {exact}");
        }
        assert!(h.truncated);
    }

    #[test]
    fn exponential_gives_zero_h() {
        let e = FnTail::new("exp", 1.0, Support::new(0.0, f64::INFINITY), |x: f64| -x.max(0.0));
        let h = construct_h(&[&e], &HConfig::default()).unwrap();
        assert!(h.is_zero());
        assert!(!h.notes.is_empty());
    }

    #[test]
    fn several_tails_give_the_pointwise_minimum() {
        let a = pareto(1.0);
        let b = pareto(3.0);
        let cfg = HConfig {
            horizon: 1e5,
            ..HConfig::default()
        };
        let ha = construct_h(&[&a], &cfg).unwrap();
        let hb = construct_h(&[&b], &cfg).unwrap();
        let h = construct_h(&[&a, &b], &cfg).unwrap();
        for k in 0..200 {
            let x = 1.07f64.powi(k);
            assert_eq!(h.eval(x), ha.eval(x).min(hb.eval(x)), "x={x}");
        }
    }

    #[test]
    fn vanishing_tail_is_an_error() {
        let z = FnTail::new("bounded", 1.0, Support::new(0.0, 5.0), |x: f64| {
            if x < 5.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        });
        assert!(matches!(
            construct_h(&[&z], &HConfig::default()),
            Err(Error::VanishingTail { .. })
        ));
    }

    #[test]
    fn h_specs_parse() {
        assert_eq!("sqrt".parse::<HSpec>().unwrap(), HSpec::Sqrt);
        assert_eq!("const(c=3)".parse::<HSpec>().unwrap(), HSpec::Const(3.0));
        assert_eq!(
            "power(scale=2, exponent=0.25)".parse::<HSpec>().unwrap(),
            HSpec::Power { scale: 2.0, exponent: 0.25 }
        );
        assert!("power(scale=2)".parse::<HSpec>().is_err());
        assert!("const(c=-1)".parse::<HSpec>().is_err());
        assert!(matches!("cube".parse::<HSpec>(), Err(Error::UnknownId { .. })));
        let h = HSpec::Half.build(&[], 1e8).unwrap();
        assert_eq!(h.eval(10.0), 5.0);
    }
}
