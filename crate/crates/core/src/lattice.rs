//! Finite atomic measures on a uniform grid.
//!
//! Atom `i` sits at `origin + i·step`. All position comparisons go through
//! index arithmetic with a small snapping tolerance, so the tail at a lattice
//! point excludes that point's own atom (`F̄(x) = F(x, ∞)`) regardless of how
//! `x` was produced in floating point.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::measure::{Atom, Measure, Support, TailCurve, Window};
use crate::{Error, Result};

/// Index offsets within this distance of an integer are treated as lattice points.
const SNAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeMeasure {
    origin: f64,
    step: f64,
    masses: Vec<f64>,
    #[serde(skip)]
    suffix: Vec<f64>,
}

impl LatticeMeasure {
    pub fn new(origin: f64, step: f64, masses: Vec<f64>) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::InvalidParameter(format!("origin {origin} is not finite")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!("step {step} must be positive")));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "atom mass {m} must be finite and non-negative"
            )));
        }
        let mut suffix = vec![0.0; masses.len() + 1];
        for i in (0..masses.len()).rev() {
            suffix[i] = suffix[i + 1] + masses[i];
        }
        Ok(Self {
            origin,
            step,
            masses,
            suffix,
        })
    }

    pub fn point_mass(at: f64, mass: f64, step: f64) -> Result<Self> {
        Self::new(at, step, vec![mass])
    }

    pub fn zero(origin: f64, step: f64) -> Result<Self> {
        Self::new(origin, step, Vec::new())
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn position(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    /// `‖F‖`.
    pub fn total_mass(&self) -> f64 {
        self.suffix[0]
    }

    /// Canonical form: leading and trailing zero atoms removed.
    pub fn trimmed(&self) -> LatticeMeasure {
        let first = self.masses.iter().position(|&m| m > 0.0);
        let last = self.masses.iter().rposition(|&m| m > 0.0);
        match (first, last) {
            (Some(a), Some(b)) => {
                LatticeMeasure::new(self.position(a), self.step, self.masses[a..=b].to_vec())
                    .expect("sub-slice of a valid lattice")
            }
            _ => LatticeMeasure::new(self.origin, self.step, Vec::new()).expect("valid step"),
        }
    }

    fn fractional_index(&self, x: f64) -> f64 {
        let t = (x - self.origin) / self.step;
        let r = t.round();
        if (t - r).abs() <= SNAP {
            r
        } else {
            t
        }
    }

    /// Largest index whose position is `<= x`, clamped to `[-1, len-1]`.
    fn last_le(&self, x: f64) -> isize {
        if x == f64::INFINITY {
            return self.masses.len() as isize - 1;
        }
        if x == f64::NEG_INFINITY {
            return -1;
        }
        let t = self.fractional_index(x).floor();
        t.clamp(-1.0, self.masses.len() as f64 - 1.0) as isize
    }

    /// Largest index whose position is `< x`.
    fn last_lt(&self, x: f64) -> isize {
        if x == f64::INFINITY {
            return self.masses.len() as isize - 1;
        }
        if x == f64::NEG_INFINITY {
            return -1;
        }
        let t = self.fractional_index(x).ceil() - 1.0;
        t.clamp(-1.0, self.masses.len() as f64 - 1.0) as isize
    }

    /// Inclusive index range covered by `window`, or `None` when empty.
    fn index_range(&self, window: &Window) -> Option<(usize, usize)> {
        let n = self.masses.len() as isize;
        if n == 0 {
            return None;
        }
        let (lo, hi) = match *window {
            Window::All => (0, n - 1),
            Window::Le(t) => (0, self.last_le(t)),
            Window::Lt(t) => (0, self.last_lt(t)),
            Window::Gt(t) => (self.last_le(t) + 1, n - 1),
            Window::Ge(t) => (self.last_lt(t) + 1, n - 1),
            Window::Closed(a, b) => (self.last_lt(a) + 1, self.last_le(b)),
            Window::Open(a, b) => (self.last_le(a) + 1, self.last_lt(b)),
        };
        if lo > hi || hi < 0 || lo >= n {
            None
        } else {
            Some((lo.max(0) as usize, hi.min(n - 1) as usize))
        }
    }

    /// `F(x, ∞)`.
    pub fn tail_at(&self, x: f64) -> f64 {
        let k = self.last_le(x);
        self.suffix[(k + 1) as usize]
    }

    /// `F[x, ∞)`.
    pub fn tail_left_at(&self, x: f64) -> f64 {
        let k = self.last_lt(x);
        self.suffix[(k + 1) as usize]
    }

    /// `F_B`: atoms outside the window set to zero, grid unchanged.
    pub fn restrict(&self, window: &Window) -> LatticeMeasure {
        let mut masses = vec![0.0; self.masses.len()];
        if let Some((a, b)) = self.index_range(window) {
            masses[a..=b].copy_from_slice(&self.masses[a..=b]);
        }
        LatticeMeasure::new(self.origin, self.step, masses).expect("restriction of a valid lattice")
    }

    /// Integer offset `k` with `other.origin = self.origin + k·step`.
    pub fn offset_to(&self, other: &LatticeMeasure) -> Result<i64> {
        let rel = (self.step - other.step).abs() / self.step.max(other.step);
        if rel > 1e-12 {
            return Err(Error::IncompatibleLattice(format!(
                "steps differ: {} vs {}",
                self.step, other.step
            )));
        }
        let t = (other.origin - self.origin) / self.step;
        let k = t.round();
        if (t - k).abs() > SNAP {
            return Err(Error::IncompatibleLattice(format!(
                "origins {} and {} are not an integer number of steps apart",
                self.origin, other.origin
            )));
        }
        Ok(k as i64)
    }

    /// `pF + qG` on the union grid.
    pub fn mixture(p: f64, f: &LatticeMeasure, q: f64, g: &LatticeMeasure) -> Result<LatticeMeasure> {
        if !(p.is_finite() && p >= 0.0 && q.is_finite() && q >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mixture weights must be non-negative, got {p} and {q}"
            )));
        }
        let k = f.offset_to(g)?;
        let start = k.min(0);
        let end = (f.len() as i64).max(k + g.len() as i64);
        let mut masses = vec![0.0; (end - start).max(0) as usize];
        for (i, m) in f.masses.iter().enumerate() {
            masses[(i as i64 - start) as usize] += p * m;
        }
        for (j, m) in g.masses.iter().enumerate() {
            masses[(j as i64 + k - start) as usize] += q * m;
        }
        LatticeMeasure::new(f.origin + start as f64 * f.step, f.step, masses)
    }

    /// Exact discrete convolution of the atom sequences.
    pub fn convolve(&self, other: &LatticeMeasure) -> Result<LatticeMeasure> {
        self.offset_to(other)?;
        let origin = self.origin + other.origin;
        if self.is_empty() || other.is_empty() {
            return LatticeMeasure::new(origin, self.step, Vec::new());
        }
        let mut masses = vec![0.0; self.len() + other.len() - 1];
        for (i, a) in self.masses.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.masses.iter().enumerate() {
                masses[i + j] += a * b;
            }
        }
        LatticeMeasure::new(origin, self.step, masses)
    }

    /// Controlled resampling onto another grid. Each atom moves to the first
    /// target point at or to the right of it; atoms left of `origin` are
    /// lumped at `origin`.
    pub fn regrid(&self, origin: f64, step: f64) -> Result<LatticeMeasure> {
        let target = LatticeMeasure::new(origin, step, Vec::new())?;
        let mut masses: Vec<f64> = Vec::new();
        for (i, &m) in self.masses.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let t = target.fractional_index(self.position(i)).ceil().max(0.0) as usize;
            if masses.len() <= t {
                masses.resize(t + 1, 0.0);
            }
            masses[t] += m;
        }
        LatticeMeasure::new(origin, step, masses)
    }

    /// Columnar text form: a header `origin step count`, then one mass per
    /// line, every number with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:.16e} {:.16e} {}", self.origin, self.step, self.masses.len());
        for m in &self.masses {
            let _ = writeln!(s, "{m:.16e}");
        }
        s
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<LatticeMeasure> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "header must be `origin step count`, got `{header}`"
            )));
        }
        let origin = parse_f64(fields[0])?;
        let step = parse_f64(fields[1])?;
        let count: usize = fields[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad atom count `{}`", fields[2])))?;
        let mut masses = Vec::with_capacity(count);
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            masses.push(parse_f64(t)?);
        }
        if masses.len() != count {
            return Err(Error::Parse(format!(
                "header announces {count} atoms, found {}",
                masses.len()
            )));
        }
        LatticeMeasure::new(origin, step, masses)
    }

    pub fn from_text(s: &str) -> Result<LatticeMeasure> {
        Self::read_text(s.as_bytes())
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{s}` is not a number")))
}

impl TailCurve for LatticeMeasure {
    fn mass(&self) -> f64 {
        self.total_mass()
    }

    fn ln_tail(&self, x: f64) -> f64 {
        self.tail_at(x).ln()
    }

    fn tail(&self, x: f64) -> f64 {
        self.tail_at(x)
    }

    fn support(&self) -> Support {
        let t = self.trimmed();
        if t.is_empty() {
            return Support::new(self.origin, self.origin);
        }
        Support::new(t.origin, t.position(t.len() - 1))
    }

    fn jumps(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.atoms(&Window::Closed(lo, hi))
            .into_iter()
            .map(|a| a.at)
            .collect()
    }

    fn label(&self) -> String {
        format!(
            "lattice(origin={}, step={}, atoms={})",
            self.origin,
            self.step,
            self.masses.len()
        )
    }
}

impl Measure for LatticeMeasure {
    fn atoms(&self, window: &Window) -> Vec<Atom> {
        match self.index_range(window) {
            None => Vec::new(),
            Some((a, b)) => (a..=b)
                .filter(|&i| self.masses[i] > 0.0)
                .map(|i| Atom {
                    at: self.position(i),
                    mass: self.masses[i],
                })
                .collect(),
        }
    }

    fn tail_left(&self, x: f64) -> f64 {
        self.tail_left_at(x)
    }

    fn ln_tail_left(&self, x: f64) -> f64 {
        self.tail_left_at(x).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_ten() -> LatticeMeasure {
        LatticeMeasure::new(1.0, 1.0, vec![0.1; 10]).unwrap()
    }

    #[test]
    fn total_mass_examples() {
        assert_eq!(LatticeMeasure::point_mass(0.0, 1.0, 1.0).unwrap().total_mass(), 1.0);
        let f = LatticeMeasure::new(0.0, 1.0, vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(f.total_mass(), 1.0);
        let g = LatticeMeasure::new(2.0, 1.0, vec![1.0]).unwrap();
        let m = LatticeMeasure::mixture(0.3, &f, 0.7, &g).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tail_excludes_the_atom_at_x() {
        let p = LatticeMeasure::point_mass(5.0, 1.0, 1.0).unwrap();
        assert_eq!(p.tail_at(5.0), 0.0);
        assert_eq!(p.tail_at(4.999), 1.0);
        assert_eq!(p.tail_left_at(5.0), 1.0);
        assert_eq!(p.tail_at(f64::NEG_INFINITY), 1.0);
        let u = uniform_ten();
        // atoms 8, 9, 10
        assert!((u.tail_at(7.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn snapping_absorbs_rounding_in_x() {
        let u = LatticeMeasure::new(0.0, 0.1, vec![1.0; 11]).unwrap();
        // 0.1 * 3 is not exactly 0.3 in binary
        assert_eq!(u.tail_at(0.1 * 3.0), u.tail_at(0.3));
        assert_eq!(u.tail_at(0.3), 7.0);
    }

    #[test]
    fn mixture_examples() {
        let f = LatticeMeasure::new(0.0, 1.0, vec![0.2, 0.8]).unwrap();
        let g = LatticeMeasure::new(3.0, 1.0, vec![1.0]).unwrap();
        assert_eq!(LatticeMeasure::mixture(1.0, &f, 0.0, &g).unwrap().trimmed(), f);
        assert_eq!(LatticeMeasure::mixture(0.5, &f, 0.5, &f).unwrap(), f);
        let a = LatticeMeasure::point_mass(0.0, 1.0, 1.0).unwrap();
        let b = LatticeMeasure::point_mass(1.0, 1.0, 1.0).unwrap();
        let m = LatticeMeasure::mixture(0.5, &a, 0.5, &b).unwrap();
        assert_eq!(m.masses(), &[0.5, 0.5]);
        assert_eq!(m.origin(), 0.0);
    }

    #[test]
    fn incompatible_lattices_are_rejected() {
        let f = LatticeMeasure::new(0.0, 1.0, vec![1.0]).unwrap();
        let g = LatticeMeasure::new(0.5, 1.0, vec![1.0]).unwrap();
        let h = LatticeMeasure::new(0.0, 0.5, vec![1.0]).unwrap();
        assert!(matches!(f.convolve(&g), Err(Error::IncompatibleLattice(_))));
        assert!(matches!(
            LatticeMeasure::mixture(0.5, &f, 0.5, &h),
            Err(Error::IncompatibleLattice(_))
        ));
    }

    #[test]
    fn restrict_examples() {
        let u = uniform_ten();
        assert_eq!(u.restrict(&Window::Le(10.0)), u);
        let p = LatticeMeasure::point_mass(5.0, 1.0, 1.0).unwrap();
        assert_eq!(p.restrict(&Window::Gt(5.0)).total_mass(), 0.0);
        let r = u.restrict(&Window::Gt(7.0));
        let atoms: Vec<f64> = r.atoms(&Window::All).iter().map(|a| a.at).collect();
        assert_eq!(atoms, vec![8.0, 9.0, 10.0]);
        assert!((r.total_mass() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn convolve_examples() {
        let f = LatticeMeasure::new(-1.0, 0.5, vec![0.1, 0.0, 0.6, 0.3]).unwrap();
        let delta = LatticeMeasure::point_mass(0.0, 1.0, 0.5).unwrap();
        assert_eq!(f.convolve(&delta).unwrap(), f);
        let a = LatticeMeasure::point_mass(2.0, 1.0, 1.0).unwrap();
        let b = LatticeMeasure::point_mass(3.0, 1.0, 1.0).unwrap();
        let ab = a.convolve(&b).unwrap();
        assert_eq!((ab.origin(), ab.masses()), (5.0, &[1.0][..]));
        // four equally likely outcomes 0+0, 0+1, 1+0, 1+1
        let bern = LatticeMeasure::new(0.0, 1.0, vec![0.5, 0.5]).unwrap();
        assert_eq!(bern.convolve(&bern).unwrap().masses(), &[0.25, 0.5, 0.25]);
        let zero = LatticeMeasure::zero(0.0, 1.0).unwrap();
        assert_eq!(bern.convolve(&zero).unwrap().total_mass(), 0.0);
    }

    #[test]
    fn trimming_and_support() {
        let f = LatticeMeasure::new(0.0, 1.0, vec![0.0, 0.0, 0.4, 0.6, 0.0]).unwrap();
        let t = f.trimmed();
        assert_eq!((t.origin(), t.masses()), (2.0, &[0.4, 0.6][..]));
        assert_eq!(f.support(), Support::new(2.0, 3.0));
    }

    #[test]
    fn regrid_moves_mass_rightwards() {
        let f = LatticeMeasure::new(0.0, 0.25, vec![0.25; 4]).unwrap();
        let g = f.regrid(0.0, 0.5).unwrap();
        // atoms at 0, .25, .5, .75 -> 0, .5, .5, 1.0
        assert_eq!(g.masses(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn text_format_round_trips_exactly() {
        let f = LatticeMeasure::new(0.1, 1.0 / 3.0, vec![1.0 / 7.0, 0.0, 2.0f64.sqrt() / 10.0]).unwrap();
        let text = f.to_text();
        assert!(text.starts_with("1.0000000000000001e-1 3.3333333333333331e-1 3\n"));
        assert_eq!(LatticeMeasure::from_text(&text).unwrap(), f);
        assert!(matches!(
            LatticeMeasure::from_text("0 1 2\n0.5\n"),
            Err(Error::Parse(_))
        ));
    }
}
