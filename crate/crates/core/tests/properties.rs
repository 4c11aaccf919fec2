use std::sync::Arc;

use heavytail::classify::{check_h_insensitive, test_long_tailed, test_subexponential, test_tail_equivalence, LabConfig};
use heavytail::decomp::{conv_tail, decomposition_at_level};
use heavytail::families::{discretize, AnalyticLaw, Family, SlowlyVarying};
use heavytail::hfunc::{construct_h, HConfig, HFunction};
use heavytail::lattice::LatticeMeasure;
use heavytail::lemmas::eq14_parts;
use heavytail::measure::{Measure, Mixture, SharedMeasure, TailCurve, Window};
use heavytail::montecarlo::{mc_conv_tail, mc_decomposition};
use heavytail::probe::Verdict;
use heavytail::quad::QuadConfig;
use heavytail::suite::random_lattice_pair;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lattice_pair(seed: u64) -> (LatticeMeasure, LatticeMeasure, f64, f64) {
    random_lattice_pair(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn long_tailed_law(k: usize) -> AnalyticLaw {
    match k % 5 {
        0 => AnalyticLaw::pareto(1.0).unwrap(),
        1 => AnalyticLaw::pareto(1.5).unwrap(),
        2 => AnalyticLaw::lognormal(0.0, 1.0).unwrap(),
        3 => AnalyticLaw::weibull(0.5).unwrap(),
        _ => AnalyticLaw::new(Family::reg_varying(1.0, SlowlyVarying::Constant { c: 2.0 }).unwrap()).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn restriction_partitions_the_lattice(seed in any::<u64>(), t in -2.0f64..20.0) {
        let (f, _, _, _) = lattice_pair(seed);
        let le = f.restrict(&Window::Le(t));
        let gt = f.restrict(&Window::Gt(t));
        prop_assert_eq!(le.origin(), f.origin());
        prop_assert_eq!(gt.origin(), f.origin());
        for i in 0..f.len() {
            let (a, b) = (le.masses()[i], gt.masses()[i]);
            prop_assert!(a == 0.0 || b == 0.0);
            prop_assert_eq!(a + b, f.masses()[i]);
            prop_assert_eq!(a > 0.0, f.masses()[i] > 0.0 && f.position(i) <= t);
        }
        prop_assert!((le.total_mass() + gt.total_mass() - f.total_mass()).abs() <= 1e-12 * f.total_mass().max(1.0));
    }

    #[test]
    fn convolution_mass_is_product(seed in any::<u64>()) {
        let (f, g, _, _) = lattice_pair(seed);
        let c = f.convolve(&g).unwrap();
        let want = f.total_mass() * g.total_mass();
        prop_assert!((c.total_mass() - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn decomposition_identities_on_lattices(seed in any::<u64>(), above in 0.0f64..1.0) {
        let (f, g, x, level) = lattice_pair(seed);
        let cfg = QuadConfig::default();
        let r = decomposition_at_level(&f, &g, level, x, &cfg).unwrap();
        prop_assert!(r.split_residual.abs() <= 1e-12 * (f.total_mass() * g.total_mass()).max(1.0));
        let three = r.three_term_residual.unwrap();
        prop_assert!(three.abs() <= 1e-12 * (f.total_mass() * g.total_mass()).max(1.0));
        prop_assert!(r.upper_slack >= -1e-12);
        let high = decomposition_at_level(&f, &g, x / 2.0 + above * x, x, &cfg).unwrap();
        prop_assert!(high.split_residual.abs() <= 1e-12 * (f.total_mass() * g.total_mass()).max(1.0));
        prop_assert!(high.upper_slack >= -1e-12);
    }

    #[test]
    fn lattice_tail_is_monotone_and_right_continuous(seed in any::<u64>()) {
        let (f, _, _, _) = lattice_pair(seed);
        let lo = f.position(0) - 1.0;
        let hi = f.position(f.len() - 1) + 1.0;
        let mut prev = f64::INFINITY;
        for k in 0..=400 {
            let x = lo + (hi - lo) * k as f64 / 400.0;
            let t = f.tail_at(x);
            prop_assert!(t <= prev);
            prev = t;
        }
        for i in 0..f.len() {
            let x = f.position(i);
            prop_assert_eq!(f.tail_at(x), f.tail_at(x + 1e-9 * f.step()));
        }
    }

    #[test]
    fn quantile_inverts_tail(k in 0usize..6, p in 0.3f64..3.0, u in 1e-6f64..(1.0 - 1e-6)) {
        let law = match k {
            0 => AnalyticLaw::pareto(p).unwrap(),
            1 => AnalyticLaw::lognormal(p - 1.0, p).unwrap(),
            2 => AnalyticLaw::weibull(p).unwrap(),
            3 => AnalyticLaw::exponential(p).unwrap(),
            4 => AnalyticLaw::new(Family::reg_varying(p, SlowlyVarying::Constant { c: 1.0 + p }).unwrap()).unwrap(),
            _ => AnalyticLaw::new(Family::reg_varying(p, SlowlyVarying::Log { beta: p.min(1.0) / 2.0 }).unwrap()).unwrap(),
        };
        let q = law.upper_quantile(u);
        prop_assert!((law.tail(q) - u).abs() <= 1e-9, "{}: tail(Q({u})) = {}", law.spec(), law.tail(q));
    }

    #[test]
    fn regularly_varying_index(alpha in 0.2f64..4.0, c in 0.5f64..5.0, beta_frac in -1.0f64..1.0) {
        let want = 2f64.powf(-alpha);
        let constant = AnalyticLaw::new(Family::reg_varying(alpha, SlowlyVarying::Constant { c }).unwrap()).unwrap();
        let log = AnalyticLaw::new(Family::reg_varying(alpha, SlowlyVarying::Log { beta: beta_frac * alpha }).unwrap()).unwrap();
        let x = 1e200f64.powf(1.0 / alpha.max(1.0));
        prop_assert!((constant.tail(2.0 * x) / constant.tail(x) - want).abs() <= 1e-12);
        let beta = beta_frac * alpha;
        let dev = |x: f64| (log.tail(2.0 * x) / log.tail(x) - want).abs();
        let closed = want * ((1.0 + (2.0 * x).ln()) / (1.0 + x.ln())).powf(beta);
        prop_assert!((log.tail(2.0 * x) / log.tail(x) - closed).abs() <= 1e-9 * want);
        let xs = [1e2, 1e4, 1e8, 1e16, 1e32].map(|t: f64| t.min(x));
        for w in xs.windows(2) {
            prop_assert!(dev(w[1]) <= dev(w[0]) + 1e-12);
        }
        prop_assert!(dev(x) <= 0.02 * want * beta.abs().max(1.0));
    }

    #[test]
    fn scaling_leaves_verdicts_unchanged(k in 0usize..7, c in 0.1f64..10.0) {
        let base = match k {
            5 => AnalyticLaw::exponential(1.0).unwrap(),
            6 => AnalyticLaw::weibull(1.5).unwrap(),
            _ => long_tailed_law(k),
        };
        let cfg = LabConfig::default().with_grid_top(1e6);
        let shared: SharedMeasure = Arc::new(base.clone());
        let scaled = Mixture::scaled(c, shared.clone()).unwrap();
        prop_assert_eq!(
            test_long_tailed(&base, &cfg).unwrap().verdict,
            test_long_tailed(&scaled, &cfg).unwrap().verdict
        );
        let other = Mixture::scaled(c, Arc::new(long_tailed_law(k + 1))).unwrap();
        prop_assert_eq!(
            test_tail_equivalence(&base, &long_tailed_law(k + 1), &cfg).unwrap().verdict,
            test_tail_equivalence(&scaled, &other, &cfg).unwrap().verdict
        );
    }

    #[test]
    fn monte_carlo_is_seed_deterministic(seed in any::<u64>(), x in 1.0f64..50.0) {
        let f = AnalyticLaw::pareto(1.5).unwrap();
        let g = AnalyticLaw::lognormal(0.0, 1.0).unwrap();
        let a = mc_conv_tail(&f, &g, x, 40_000, seed).unwrap();
        let b = mc_conv_tail(&f, &g, x, 40_000, seed).unwrap();
        prop_assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| mc_conv_tail(&f, &g, x, 40_000, seed).unwrap());
        prop_assert_eq!(a, c);
    }

    #[test]
    fn monte_carlo_decomposition_is_additive(seed in any::<u64>(), x in 2.0f64..100.0, frac in 0.0f64..1.5) {
        let f = AnalyticLaw::pareto(1.0).unwrap();
        let g = AnalyticLaw::weibull(0.5).unwrap();
        let h = HFunction::power(frac, 1.0);
        let d = mc_decomposition(&f, &g, &h, x, 20_000, seed).unwrap();
        prop_assert!(d.split_exact());
        prop_assert_eq!(d.within_half, frac <= 0.5);
        if let Some(exact) = d.three_term_exact() {
            prop_assert!(exact);
        }
        prop_assert!(d.le_h.hits + d.le_h_swapped.hits + d.gt_gt.hits >= d.total.hits);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quadrature_terms_resum_to_total(k in 0usize..5, j in 0usize..5, x in 2.0f64..1e4, frac in 0.01f64..0.5) {
        let f = long_tailed_law(k);
        let g = long_tailed_law(j);
        let cfg = QuadConfig::default();
        let r = decomposition_at_level(&f, &g, frac * x, x, &cfg).unwrap();
        prop_assert!(r.identities_hold(), "{r:?}");
        let total = conv_tail(&f, &g, x, &cfg).unwrap().value();
        prop_assert!((r.le_h + r.le_h_swapped + r.gt_gt - total).abs() <= r.tolerance);
        prop_assert!((r.gt_gt - r.gt_gt_swapped).abs() <= r.tolerance);
    }

    #[test]
    fn counterexample_jump_is_dyadic(alpha in 0.3f64..3.0, n in 1usize..5) {
        let law = AnalyticLaw::counterexample(alpha).unwrap();
        let (_, y) = match &law.family {
            Family::Counterexample(c) => c.breakpoint(n).unwrap(),
            _ => unreachable!(),
        };
        let jump: f64 = law.atoms(&Window::Closed(y, y)).iter().map(|a| a.mass).sum();
        let rel = jump / y.powf(-alpha);
        let want = 0.5f64.powi(n as i32 + 1);
        prop_assert!((rel / want - 1.0).abs() <= 1e-9, "n = {n}: {rel} vs {want}");
        prop_assert!((law.tail_left(y) - law.tail(y) - jump).abs() <= 1e-12 * jump.max(f64::MIN_POSITIVE));
    }
}

#[test]
fn discretisation_error_is_first_order() {
    let law = AnalyticLaw::exponential(1.0).unwrap();
    let exact = |x: f64| (1.0 + x) * (-x).exp();
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&step| {
            let d = discretize(&law, 0.0, 40.0, step).unwrap();
            let c = d.measure.convolve(&d.measure).unwrap();
            let x = 3.0 + step / 2.0;
            (c.tail_at(x) - exact(x)).abs()
        })
        .collect();
    for w in errs.windows(2) {
        let r = w[1] / w[0];
        assert!((0.35..=0.65).contains(&r), "error ratio {r} in {errs:?}");
    }
}

#[test]
fn constructed_h_passes_its_own_check() {
    let cfg = LabConfig::default();
    for k in 0..5 {
        let f = long_tailed_law(k);
        let h = construct_h(&[&f], &HConfig::default()).unwrap().capped();
        let r = check_h_insensitive(&f, &h, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{}: {}", f.spec(), r.summary());
    }
}

#[test]
fn lower_bound_deficit_vanishes() {
    let cfg = QuadConfig::default();
    for (k, j) in [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)] {
        let f = long_tailed_law(k);
        let g = long_tailed_law(j);
        let deficits: Vec<f64> = (2..=12)
            .map(|e| {
                let x = 10f64.powf(e as f64 / 2.0);
                let r = conv_tail(&f, &g, x, &cfg).unwrap().value() / (f.tail(x) + g.tail(x));
                (1.0 - r).max(0.0)
            })
            .collect();
        assert!(deficits[deficits.len() - 1] <= 0.02, "{} + {}: {deficits:?}", f.spec(), g.spec());
        for w in deficits[4..].windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} + {}: {deficits:?}", f.spec(), g.spec());
        }
    }
}

#[test]
fn equivalence_conditions_agree() {
    let cfg = LabConfig::default();
    let laws = [
        AnalyticLaw::pareto(1.5).unwrap(),
        AnalyticLaw::lognormal(0.0, 1.0).unwrap(),
        AnalyticLaw::weibull(0.5).unwrap(),
        AnalyticLaw::exponential(1.0).unwrap(),
    ];
    for f in &laws {
        let h = construct_h(&[f as &dyn TailCurve], &HConfig::default()).unwrap().capped();
        let parts = eq14_parts(f, &h, &cfg).unwrap();
        let v: Vec<Verdict> = parts.iter().map(|p| p.verdict).collect();
        assert!(v.iter().all(|x| *x == v[0]), "{}: {v:?}", f.spec());
        assert_ne!(v[0], Verdict::Inconclusive, "{}", f.spec());
    }
}

#[test]
fn subexponential_verdicts_ignore_scale() {
    let cfg = LabConfig::default().with_grid_top(1e5);
    for f in [AnalyticLaw::pareto(1.5).unwrap(), AnalyticLaw::exponential(1.0).unwrap()] {
        let scaled = Mixture::scaled(3.0, Arc::new(f.clone())).unwrap();
        assert_eq!(
            test_subexponential(&f, &cfg).unwrap().verdict,
            test_subexponential(&scaled, &cfg).unwrap().verdict
        );
    }
}
