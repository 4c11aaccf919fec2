//! Plain Monte Carlo estimates of convolution tails, of the decomposition
//! terms and of the single-big-jump ratio, used to cross-check quadrature.
//!
//! Samples are drawn in chunks of [`CHUNK`] pairs. Chunk `k` of a stream with
//! seed `s` uses a ChaCha8 generator seeded with [`derive_seed`]`(s, k)`, and
//! grid point `i` of a probe with master seed `m` uses the stream seed
//! `derive_seed(m, i)`. Chunks are evaluated in parallel and their integer
//! counts summed, so results depend on the seed only.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::families::AnalyticLaw;
use crate::hfunc::HFunction;
use crate::measure::TailCurve;
use crate::probe::{Claim, ProbePoint, RatioProbe, Thresholds, VerdictReport};
use crate::{Error, Result};

/// Smallest accepted sample size.
pub const MIN_SAMPLES: usize = 1000;
/// Grid points whose event was hit fewer times are flagged low-confidence.
pub const MIN_HITS: u64 = 50;
/// Pairs drawn per generator.
pub const CHUNK: usize = 1 << 15;

/// One step of the splitmix64 generator.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `index` of the stream `master`:
/// `splitmix64(master ^ splitmix64(index))`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// An indicator-based probability estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    /// `√(value(1 − value)/n)`
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
    /// Number of samples in the event.
    pub hits: u64,
}

impl MCEstimate {
    pub fn from_hits(hits: u64, n: usize, seed: u64) -> Self {
        let value = hits as f64 / n as f64;
        Self {
            value,
            std_error: (value * (1.0 - value) / n as f64).sqrt(),
            n,
            seed,
            hits,
        }
    }

    /// `(value − reference)/std_error`; zero or infinite when the standard
    /// error vanishes.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = self.value - reference;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY * d.signum()
        }
    }

    /// `|value − reference| ≤ k·std_error`.
    pub fn within(&self, reference: f64, k: f64) -> bool {
        self.z_score(reference).abs() <= k
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo sample size must be at least {MIN_SAMPLES}, got {n}"
        )));
    }
    Ok(())
}

/// Counts, for `n` independent pairs `(ξ, η)` with `ξ ~ F` and `η ~ G`, how
/// often each of the `K` events reported by `events` occurs.
fn tally<const K: usize, E>(f: &AnalyticLaw, g: &AnalyticLaw, n: usize, seed: u64, events: E) -> [u64; K]
where
    E: Fn(f64, f64) -> [bool; K] + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let len = CHUNK.min(n - k * CHUNK);
            let mut counts = [0u64; K];
            for _ in 0..len {
                let xi = f.draw(&mut rng);
                let eta = g.draw(&mut rng);
                for (c, hit) in counts.iter_mut().zip(events(xi, eta)) {
                    *c += hit as u64;
                }
            }
            counts
        })
        .reduce(
            || [0u64; K],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Estimate of `Pr(ξ + η > x)` for independent `ξ ~ F`, `η ~ G`.
pub fn mc_conv_tail(f: &AnalyticLaw, g: &AnalyticLaw, x: f64, n: usize, seed: u64) -> Result<MCEstimate> {
    check_n(n)?;
    let [hits] = tally(f, g, n, seed, |a, b| [a + b > x]);
    Ok(MCEstimate::from_hits(hits, n, seed))
}

/// Terms of the decomposition of `Pr(ξ + η > x)` at level `h(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McTerm {
    /// `Pr(ξ + η > x, ξ ≤ h)`
    LeH,
    /// `Pr(ξ + η > x, η ≤ h)`
    LeHSwapped,
    /// `Pr(ξ + η > x, ξ > h)`
    GtH,
    /// `Pr(ξ + η > x, ξ > h, η > h)`
    GtGt,
}

impl McTerm {
    pub const ALL: [McTerm; 4] = [McTerm::LeH, McTerm::LeHSwapped, McTerm::GtH, McTerm::GtGt];

    pub fn name(self) -> &'static str {
        match self {
            McTerm::LeH => "le_h",
            McTerm::LeHSwapped => "le_h_swapped",
            McTerm::GtH => "gt_h",
            McTerm::GtGt => "gt_gt",
        }
    }
}

impl fmt::Display for McTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for McTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        McTerm::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownId {
                kind: "term",
                given: s.to_string(),
                valid: McTerm::ALL.map(McTerm::name).join(", "),
            })
    }
}

/// All decomposition terms estimated from one set of sample pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McDecomposition {
    pub x: f64,
    pub level: f64,
    pub total: MCEstimate,
    pub le_h: MCEstimate,
    pub le_h_swapped: MCEstimate,
    pub gt_h: MCEstimate,
    pub gt_gt: MCEstimate,
    /// Whether `h(x) ≤ x/2`
    pub within_half: bool,
}

impl McDecomposition {
    pub fn term(&self, t: McTerm) -> MCEstimate {
        match t {
            McTerm::LeH => self.le_h,
            McTerm::LeHSwapped => self.le_h_swapped,
            McTerm::GtH => self.gt_h,
            McTerm::GtGt => self.gt_gt,
        }
    }

    /// `le_h + gt_h = total` in hit counts.
    pub fn split_exact(&self) -> bool {
        self.le_h.hits + self.gt_h.hits == self.total.hits
    }

    /// `le_h + le_h_swapped + gt_gt = total` in hit counts; `None` unless
    /// `h(x) ≤ x/2`.
    pub fn three_term_exact(&self) -> Option<bool> {
        self.within_half
            .then(|| self.le_h.hits + self.le_h_swapped.hits + self.gt_gt.hits == self.total.hits)
    }
}

/// Estimates every decomposition term at level `h(x)` from shared samples.
pub fn mc_decomposition(
    f: &AnalyticLaw,
    g: &AnalyticLaw,
    h: &HFunction,
    x: f64,
    n: usize,
    seed: u64,
) -> Result<McDecomposition> {
    check_n(n)?;
    let level = h.eval(x);
    let [total, le, le_sw, gt, gg] = tally(f, g, n, seed, |a, b| {
        let s = a + b > x;
        [s, s && a <= level, s && b <= level, s && a > level, s && a > level && b > level]
    });
    let est = |hits| MCEstimate::from_hits(hits, n, seed);
    Ok(McDecomposition {
        x,
        level,
        total: est(total),
        le_h: est(le),
        le_h_swapped: est(le_sw),
        gt_h: est(gt),
        gt_gt: est(gg),
        within_half: level <= x / 2.0,
    })
}

/// One decomposition term; the same seed yields the same sample pairs for
/// every term.
pub fn mc_term(
    f: &AnalyticLaw,
    g: &AnalyticLaw,
    h: &HFunction,
    x: f64,
    n: usize,
    seed: u64,
    term: McTerm,
) -> Result<MCEstimate> {
    Ok(mc_decomposition(f, g, h, x, n, seed)?.term(term))
}

/// Single-big-jump estimate at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BigJumpEstimate {
    pub x: f64,
    /// Estimate of `Pr(ξ₁ + ξ₂ > x) / Pr(max(ξ₁, ξ₂) > x)`
    pub ratio: f64,
    pub std_error: f64,
    /// `Pr(max(ξ₁, ξ₂) > x) = 2F̄(x) − F̄(x)²`
    pub max_exact: f64,
    /// Plain estimate of `Pr(ξ₁ + ξ₂ > x)` from the same samples.
    pub sum: MCEstimate,
}

impl BigJumpEstimate {
    pub fn low_confidence(&self) -> bool {
        self.sum.hits < MIN_HITS || self.max_exact <= 0.0
    }
}

/// Ratio estimates on `xs`. Both events are counted on the same pairs and the
/// ratio is `1 + (p̂_sum − p̂_max)/p_max` with the exact `p_max`, so the noise of
/// the common part of the two events cancels.
pub fn big_jump_estimates(f: &AnalyticLaw, xs: &[f64], n: usize, seed: u64) -> Result<Vec<BigJumpEstimate>> {
    check_n(n)?;
    Ok(xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let s = derive_seed(seed, i as u64);
            let [sum, only_sum, only_max] = tally(f, f, n, s, |a, b| {
                let sum = a + b > x;
                let max = a > x || b > x;
                [sum, sum && !max, max && !sum]
            });
            let t = f.tail(x);
            let max_exact = t * (2.0 - t);
            let nf = n as f64;
            let d = (only_sum as f64 - only_max as f64) / nf;
            let d2 = (only_sum + only_max) as f64 / nf;
            let (ratio, std_error) = if max_exact > 0.0 {
                (1.0 + d / max_exact, ((d2 - d * d).max(0.0) / nf).sqrt() / max_exact)
            } else {
                (f64::NAN, f64::NAN)
            };
            BigJumpEstimate {
                x,
                ratio,
                std_error,
                max_exact,
                sum: MCEstimate::from_hits(sum, n, s),
            }
        })
        .collect())
}

fn grid_middle(xs: &[f64]) -> f64 {
    match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) if a > 0.0 && b > 0.0 => (a * b).sqrt(),
        (Some(&a), Some(&b)) => 0.5 * (a + b),
        _ => 0.0,
    }
}

/// [`big_jump_estimates`] as a ratio probe.
pub fn big_jump_probe(f: &AnalyticLaw, xs: &[f64], n: usize, seed: u64) -> Result<RatioProbe> {
    let est = big_jump_estimates(f, xs, n, seed)?;
    Ok(probe_from(f, xs, &est))
}

fn probe_from(f: &AnalyticLaw, xs: &[f64], est: &[BigJumpEstimate]) -> RatioProbe {
    let points = est
        .iter()
        .map(|e| ProbePoint {
            x: e.x,
            ratio: e.ratio,
            jump: false,
            std_error: Some(e.std_error),
            low_confidence: e.low_confidence(),
        })
        .collect();
    let label = f.label();
    RatioProbe::from_points(
        format!("big jump {label}"),
        format!("Pr(ξ₁+ξ₂>x), ξᵢ ~ {label}"),
        "Pr(max(ξ₁,ξ₂)>x)",
        grid_middle(xs),
        points,
    )
}

/// Default grid for sampling `F`: `points` geometric points from the level
/// where `F̄ = 1/4` up to the level where `Pr(max(ξ₁, ξ₂) > x) = 100/n`.
pub fn mc_grid(f: &AnalyticLaw, n: usize, points: usize) -> Vec<f64> {
    let p_max = (100.0 / n as f64).min(1.0);
    let u_top = 1.0 - (1.0 - p_max).sqrt();
    let hi = f.upper_quantile(u_top);
    let lo = f.upper_quantile(0.25).max(hi * 1e-6).max(f64::MIN_POSITIVE);
    if !(hi > lo) || points < 2 {
        return vec![hi];
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    (0..points).map(|i| lo * (step * i as f64).exp()).collect()
}

/// Subexponentiality of `F` by sampling: the ratio must tend to 1.
pub fn big_jump_report(
    f: &AnalyticLaw,
    xs: &[f64],
    n: usize,
    seed: u64,
    th: &Thresholds,
) -> Result<(VerdictReport, Vec<BigJumpEstimate>)> {
    let est = big_jump_estimates(f, xs, n, seed)?;
    let probe = probe_from(f, xs, &est);
    let mut report = VerdictReport::new(format!("single big jump for {}", f.label()), *th)
        .note(format!("n={n}, seed={seed}"));
    report.push_claim(probe, Claim::Limit { target: 1.0 });
    Ok((report.conclude(), est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::parse_law;

    fn law(s: &str) -> AnalyticLaw {
        parse_law(s).unwrap()
    }

    #[test]
    fn certain_and_impossible_events() {
        let p = law("pointmass(a=1)");
        assert_eq!(mc_conv_tail(&p, &p, 1.5, 1000, 1).unwrap().value, 1.0);
        assert_eq!(mc_conv_tail(&p, &p, 2.5, 1000, 1).unwrap().value, 0.0);
        let e = mc_conv_tail(&law("pareto(alpha=1)"), &p, 0.5, 5000, 3).unwrap();
        assert_eq!((e.value, e.std_error), (1.0, 0.0));
    }

    #[test]
    fn small_samples_are_rejected() {
        let p = law("pareto(alpha=1)");
        assert!(mc_conv_tail(&p, &p, 10.0, 999, 0).is_err());
    }

    #[test]
    fn pareto_pair_matches_closed_form() {
        let p = law("pareto(alpha=1)");
        let e = mc_conv_tail(&p, &p, 100.0, 1_000_000, 7).unwrap();
        assert!(e.within(0.020_919_024, 3.0), "{e:?}");
    }

    #[test]
    fn terms_add_up_exactly() {
        let p = law("pareto(alpha=1)");
        let d = mc_decomposition(&p, &p, &HFunction::constant(10.0), 100.0, 200_000, 11).unwrap();
        assert!(d.split_exact());
        assert_eq!(d.three_term_exact(), Some(true));
        let high = mc_decomposition(&p, &p, &HFunction::constant(1e300), 100.0, 2000, 1).unwrap();
        assert_eq!(high.gt_gt.hits, 0);
        let zero = mc_decomposition(&p, &p, &HFunction::constant(0.0), 100.0, 2000, 1).unwrap();
        assert_eq!(zero.le_h.hits, 0);
    }

    #[test]
    fn term_by_name() {
        assert_eq!("gt_gt".parse::<McTerm>().unwrap(), McTerm::GtGt);
        assert!("nope".parse::<McTerm>().is_err());
    }

    #[test]
    fn big_jump_ratios() {
        let p = law("pareto(alpha=1)");
        let est = big_jump_estimates(&p, &[0.5, 100.0], 1_000_000, 5).unwrap();
        assert_eq!(est[0].ratio, 1.0);
        let z = (est[1].ratio - 0.020_919_024 / (0.02 - 0.0001)) / est[1].std_error;
        assert!(z.abs() <= 3.0, "{:?}", est[1]);
        let e = law("exponential(lambda=1)");
        let est = big_jump_estimates(&e, &[10.0], 1_000_000, 5).unwrap();
        let exact = 11.0 * (-10.0f64).exp() / (2.0 * (-10.0f64).exp() - (-20.0f64).exp());
        assert!((est[0].ratio - exact).abs() <= 3.0 * est[0].std_error + 1e-12);
    }

    #[test]
    fn seeds_are_deterministic_across_thread_counts() {
        let p = law("lognormal(mu=0, sigma=1)");
        let a = mc_conv_tail(&p, &p, 20.0, 100_000, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mc_conv_tail(&p, &p, 20.0, 100_000, 42).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, mc_conv_tail(&p, &p, 20.0, 100_000, 43).unwrap());
    }

    #[test]
    fn default_grid_respects_the_hit_floor() {
        let p = law("pareto(alpha=1)");
        let xs = mc_grid(&p, 1_000_000, 10);
        assert_eq!(xs.len(), 10);
        assert!((xs[0] - 4.0).abs() < 1e-9);
        let t = p.tail(*xs.last().unwrap());
        assert!((t * (2.0 - t) - 1e-4).abs() < 1e-9);
    }
}
