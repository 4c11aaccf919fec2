//! Adaptive Gauss–Kronrod quadrature against finite measures.
//!
//! Integrands are supplied on the log scale and integrated as
//! `exp(ln f(y) - s)` for a scale `s` picked from a prescan, so tails far
//! below `f64::MIN_POSITIVE` still integrate to meaningful values. Results
//! carry that scale in a [`TailValue`].
//!
//! Each integration range is cut at the supplied breakpoints (kinks and
//! jumps of the kernel and the measure), at an interior maximum found by a
//! coarse scan, and then geometrically towards every cut so that integrands
//! concentrated near an endpoint are resolved before adaptive bisection
//! starts.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::measure::{sort_dedup, Measure, Window};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Target relative error of the whole integral.
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Geometric refinement towards a cut stops at this panel width.
    pub min_panel: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_panels: 6000,
            min_panel: 1.0 / 16.0,
        }
    }
}

/// A non-negative number stored as `scaled · e^{ln_scale}`, with an absolute
/// error bound on the same scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailValue {
    pub ln_scale: f64,
    pub scaled: f64,
    pub scaled_err: f64,
}

impl TailValue {
    pub fn zero() -> Self {
        Self {
            ln_scale: 0.0,
            scaled: 0.0,
            scaled_err: 0.0,
        }
    }

    /// Exact linear value.
    pub fn exact(v: f64) -> Self {
        Self {
            ln_scale: 0.0,
            scaled: v,
            scaled_err: 0.0,
        }
    }

    pub fn from_ln(ln_v: f64) -> Self {
        if ln_v == f64::NEG_INFINITY {
            return Self::zero();
        }
        Self {
            ln_scale: ln_v,
            scaled: 1.0,
            scaled_err: 0.0,
        }
    }

    pub fn value(&self) -> f64 {
        if self.ln_scale == 0.0 {
            self.scaled
        } else {
            self.scaled * self.ln_scale.exp()
        }
    }

    pub fn abs_err(&self) -> f64 {
        if self.ln_scale == 0.0 {
            self.scaled_err
        } else {
            self.scaled_err * self.ln_scale.exp()
        }
    }

    pub fn ln(&self) -> f64 {
        if self.scaled <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.scaled.ln() + self.ln_scale
    }

    /// Relative error bound; zero for exact zeros.
    pub fn rel_err(&self) -> f64 {
        if self.scaled == 0.0 {
            if self.scaled_err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.scaled_err / self.scaled.abs()
        }
    }

    fn is_null(&self) -> bool {
        self.scaled == 0.0 && self.scaled_err == 0.0
    }

    fn rescaled(&self, s: f64) -> (f64, f64) {
        if self.ln_scale == s {
            (self.scaled, self.scaled_err)
        } else {
            let f = (self.ln_scale - s).exp();
            (self.scaled * f, self.scaled_err * f)
        }
    }

    pub fn add(&self, other: &TailValue) -> TailValue {
        if self.is_null() {
            return *other;
        }
        if other.is_null() {
            return *self;
        }
        let s = self.ln_scale.max(other.ln_scale);
        let (a, ea) = self.rescaled(s);
        let (b, eb) = other.rescaled(s);
        TailValue {
            ln_scale: s,
            scaled: a + b,
            scaled_err: ea + eb,
        }
    }

    pub fn sum<'a>(values: impl IntoIterator<Item = &'a TailValue>) -> TailValue {
        values
            .into_iter()
            .fold(TailValue::zero(), |acc, v| acc.add(v))
    }

    /// `self / other` evaluated without forming either value linearly.
    pub fn ratio(&self, other: &TailValue) -> f64 {
        if other.scaled == 0.0 {
            return if self.scaled == 0.0 { f64::NAN } else { f64::INFINITY };
        }
        (self.scaled / other.scaled) * (self.ln_scale - other.ln_scale).exp()
    }

    /// `(self - other) / denom`, all on their own scales.
    pub fn diff_ratio(&self, other: &TailValue, denom: &TailValue) -> f64 {
        let s = self.ln_scale.max(other.ln_scale);
        let (a, _) = self.rescaled(s);
        let (b, _) = other.rescaled(s);
        let d = TailValue {
            ln_scale: s,
            scaled: a - b,
            scaled_err: 0.0,
        };
        if denom.scaled == 0.0 {
            return f64::NAN;
        }
        (d.scaled / denom.scaled) * (d.ln_scale - denom.ln_scale).exp()
    }
}

/// Something integrated against `F(dy)`: a shifted tail `K(y) = T̄(max(floor, x - y))`
/// or a shifted density `K(y) = t(x - y)`.
pub(crate) enum Kernel<'a> {
    Tail {
        curve: &'a dyn Measure,
        x: f64,
        floor: Option<f64>,
    },
    Density {
        curve: &'a dyn Measure,
        x: f64,
    },
}

impl Kernel<'_> {
    fn arg(&self, y: f64) -> f64 {
        match *self {
            Kernel::Tail { x, floor, .. } => match floor {
                Some(h) => (x - y).max(h),
                None => x - y,
            },
            Kernel::Density { x, .. } => x - y,
        }
    }

    pub(crate) fn ln(&self, y: f64) -> f64 {
        match self {
            Kernel::Tail { curve, .. } => curve.ln_tail(self.arg(y)),
            Kernel::Density { curve, .. } => curve.ln_density(self.arg(y)),
        }
    }

    pub(crate) fn lin(&self, y: f64) -> f64 {
        match self {
            Kernel::Tail { curve, .. } => curve.tail(self.arg(y)),
            Kernel::Density { curve, .. } => curve.ln_density(self.arg(y)).exp(),
        }
    }
}

/// `∫_window K(y) F(dy)`: quadrature over the absolutely continuous part
/// plus an exact sum over atoms.
pub(crate) fn integrate_against(
    measure: &dyn Measure,
    window: &Window,
    kernel: &Kernel<'_>,
    kernel_breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<TailValue> {
    if window.is_empty() {
        return Ok(TailValue::zero());
    }
    let atoms = measure.atoms(window);
    let mut total = atom_sum(&atoms, kernel);

    if measure.has_density() {
        let sup = measure.support();
        let (wlo, whi) = window.hull();
        let lo = wlo.max(sup.lo);
        let hi = whi.min(sup.hi);
        if hi > lo {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::Unsupported(format!(
                    "density integral over unbounded range [{lo}, {hi}] for {}",
                    measure.label()
                )));
            }
            let mut breaks: Vec<f64> = measure.kinks(lo, hi);
            breaks.extend(kernel_breaks.iter().copied());
            let ln_f = |y: f64| kernel.ln(y) + measure.ln_density(y);
            let part = integrate_log(&ln_f, lo, hi, &breaks, cfg)?;
            total = total.add(&part);
        }
    }
    Ok(total)
}

fn atom_sum(atoms: &[crate::measure::Atom], kernel: &Kernel<'_>) -> TailValue {
    if atoms.is_empty() {
        return TailValue::zero();
    }
    let lns: Vec<f64> = atoms.iter().map(|a| a.mass.ln() + kernel.ln(a.at)).collect();
    let max = lns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return TailValue::zero();
    }
    let min_live = lns
        .iter()
        .cloned()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    if min_live > -640.0 && max < 640.0 {
        // every term representable: plain linear sum
        let s: f64 = atoms.iter().map(|a| a.mass * kernel.lin(a.at)).sum();
        return TailValue::exact(s);
    }
    let s: f64 = lns.iter().map(|v| (v - max).exp()).sum();
    TailValue {
        ln_scale: max,
        scaled: s,
        scaled_err: 0.0,
    }
}

// Gauss–Kronrod 7/15 nodes and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Raised inside a panel when the integrand exceeds the current scale by too much.
struct Overflow(f64);

fn gk15<F: Fn(f64) -> f64>(ln_f: &F, a: f64, b: f64, scale: f64) -> std::result::Result<Panel, Overflow> {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let mut lns = [0.0f64; 15];
    let mut xs = [0.0f64; 15];
    xs[7] = c;
    for j in 0..7 {
        xs[j] = c - hl * XGK[j];
        xs[14 - j] = c + hl * XGK[j];
    }
    let mut peak = f64::NEG_INFINITY;
    for k in 0..15 {
        let v = ln_f(xs[k]);
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        lns[k] = v;
        peak = peak.max(v);
    }
    if peak - scale > 650.0 {
        return Err(Overflow(peak));
    }
    let f: Vec<f64> = lns.iter().map(|v| (v - scale).exp()).collect();
    let fc = f[7];
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    for j in 0..7 {
        let s = f[j] + f[14 - j];
        res_k += WGK[j] * s;
        res_abs += WGK[j] * (f[j].abs() + f[14 - j].abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * s;
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((f[j] - mean).abs() + (f[14 - j] - mean).abs());
    }
    let hl_abs = hl.abs();
    let value = res_k * hl;
    res_abs *= hl_abs;
    res_asc *= hl_abs;
    let mut err = ((res_k - res_g) * hl).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel { a, b, value, err })
}

/// Golden-section maximisation of `g` on `[a, b]`.
fn golden_max<F: Fn(f64) -> f64>(g: &F, mut a: f64, mut b: f64) -> f64 {
    const R: f64 = 0.618_033_988_749_894_8;
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    for _ in 0..60 {
        if (b - a).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - R * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + R * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

const PRESCAN: usize = 17;

/// `∫_a^b exp(ln_f(y)) dy` for finite `a < b`.
pub(crate) fn integrate_log<F: Fn(f64) -> f64>(
    ln_f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<TailValue> {
    if !(b > a) {
        return Ok(TailValue::zero());
    }
    let mut cuts: Vec<f64> = vec![a, b];
    cuts.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
    sort_dedup(&mut cuts);

    // Coarse scan: locate interior maxima and pick the working scale.
    let mut scale = f64::NEG_INFINITY;
    let mut peaks: Vec<f64> = Vec::new();
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        let width = e - s;
        let ys: Vec<f64> = (0..PRESCAN)
            .map(|j| s + width * (j as f64 + 0.5) / PRESCAN as f64)
            .collect();
        let vals: Vec<f64> = ys.iter().map(|&y| ln_f(y)).collect();
        let (jmax, vmax) = vals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        if vmax == f64::NEG_INFINITY {
            continue;
        }
        let mut seg_peak = vmax;
        if jmax > 0 && jmax + 1 < PRESCAN {
            let p = golden_max(ln_f, ys[jmax - 1], ys[jmax + 1]);
            let vp = ln_f(p);
            if vp.is_finite() {
                seg_peak = seg_peak.max(vp);
            }
            peaks.push(p);
        }
        scale = scale.max(seg_peak + width.ln());
    }
    if scale == f64::NEG_INFINITY {
        // integrand vanishes on every scanned point; fall back to unit scale
        scale = 0.0;
    }
    cuts.extend(peaks);
    sort_dedup(&mut cuts);

    let mut nodes: Vec<f64> = cuts.clone();
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        let width = e - s;
        let depth = ((width / cfg.min_panel).log2().ceil()).clamp(0.0, 40.0) as i32;
        for k in 1..=depth {
            let d = width * 0.5f64.powi(k);
            nodes.push(s + d);
            nodes.push(e - d);
        }
    }
    sort_dedup(&mut nodes);

    for _attempt in 0..6 {
        // ln f carries an absolute rounding error of about ε·|ln f|, which
        // bounds the relative accuracy any quadrature can reach
        let floor = 16.0 * f64::EPSILON * scale.abs();
        let eff = QuadConfig {
            rel_tol: cfg.rel_tol.max(floor),
            ..*cfg
        };
        match adaptive(ln_f, &nodes, scale, &eff) {
            Ok(v) => return v,
            Err(Overflow(peak)) => scale = peak + 8.0,
        }
    }
    Err(Error::Unsupported(
        "integrand scale could not be stabilised".into(),
    ))
}

fn adaptive<F: Fn(f64) -> f64>(
    ln_f: &F,
    nodes: &[f64],
    scale: f64,
    cfg: &QuadConfig,
) -> std::result::Result<Result<TailValue>, Overflow> {
    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    for w in nodes.windows(2) {
        heap.push(gk15(ln_f, w[0], w[1], scale)?);
    }
    let totals = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        let mut v = 0.0;
        let mut e = 0.0;
        for p in heap.iter().chain(frozen.iter()) {
            v += p.value;
            e += p.err;
        }
        (v, e)
    };
    let (mut value, mut err) = totals(&heap, &frozen);
    let mut count = heap.len();
    while err > cfg.rel_tol * value.abs() && err > 1e-300 {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b)
            || (worst.b - worst.a) <= 1e-13 * worst.a.abs().max(worst.b.abs()).max(1e-300)
        {
            frozen.push(worst);
            continue;
        }
        if count >= cfg.max_panels {
            heap.push(worst);
            break;
        }
        let left = gk15(ln_f, worst.a, mid, scale)?;
        let right = gk15(ln_f, mid, worst.b, scale)?;
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        count += 1;
        if count % 256 == 0 {
            (value, err) = totals(&heap, &frozen);
        }
    }
    let (value, err) = totals(&heap, &frozen);
    let achieved = if value == 0.0 { if err == 0.0 { 0.0 } else { f64::INFINITY } } else { err / value.abs() };
    if achieved > cfg.rel_tol && err > 1e-300 {
        let frozen_err: f64 = frozen.iter().map(|p| p.err).sum();
        // panels too narrow to split carry the residual error: accept if small
        if !(heap.is_empty() && frozen_err <= 10.0 * cfg.rel_tol * value.abs()) {
            return Ok(Err(Error::Accuracy {
                value: value * scale.exp(),
                achieved,
                target: cfg.rel_tol,
            }));
        }
    }
    Ok(Ok(TailValue {
        ln_scale: scale,
        scaled: value,
        scaled_err: err,
    }))
}

/// `∫_a^b f(y) dy` for an ordinary integrand, used by tests and by callers
/// that do not need log scaling.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    let ln_f = |y: f64| {
        let v = f(y);
        if v > 0.0 {
            v.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    Ok(integrate_log(&ln_f, a, b, &[], cfg)?.value())
}
