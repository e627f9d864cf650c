use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use proptest::prelude::*;
use qtzopt::gradopt::{enforcement, enforcement_decay, quantized_step, EnforcementConfig, QuantizedStepConfig};
use qtzopt::harness::{summarize, ExperimentConfig, ExperimentKind};
use qtzopt::metaheur::{metropolis_accept, AdiabaticForm, QiaConfig};
use qtzopt::quantize::{quantize, QuantizerState};
use qtzopt::schedule::{AdiabaticSchedule, CoolingSchedule, LogLogPowerSchedule};
use qtzopt::theory;
use qtzopt::tsp::{generate_instance, is_permutation, nearest_neighbor, Neighborhood};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

fn qp_strategy() -> impl Strategy<Value = f64> {
    (-20.0f64..30.0).prop_map(|e| 2f64.powf(e))
}

fn f_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, -1.0f64..1.0, (-30.0f64..6.0, any::<bool>()).prop_map(|(e, s)| if s { 10f64.powf(e) } else { -10f64.powf(e) })]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn quantize_band_is_exact(f in f_strategy(), qp in qp_strategy()) {
        let q = quantize(f, qp).unwrap();
        let d = (exact(q) - exact(f)).abs() * exact(qp);
        prop_assert!(d <= BigRational::new(BigInt::one(), BigInt::from(2)));
    }

    #[test]
    fn quantize_lands_on_grid_for_power_of_two(f in f_strategy(), k in -20i32..30) {
        let qp = 2f64.powi(k);
        let q = quantize(f, qp).unwrap();
        let n = q * qp;
        prop_assert_eq!(n, n.round());
        prop_assert_eq!(quantize(q, qp).unwrap(), q);
    }

    #[test]
    fn quantize_idempotent_within_an_ulp(f in f_strategy(), qp in 1e-3f64..1e9) {
        let q = quantize(f, qp).unwrap();
        let q2 = quantize(q, qp).unwrap();
        prop_assert!(q2 == q || q2 == q.next_up() || q2 == q.next_down());
    }

    #[test]
    fn quantize_monotone(a in f_strategy(), b in f_strategy(), qp in 1e-3f64..1e9) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assume!((hi * qp).abs() < 2f64.powi(50) && (lo * qp).abs() < 2f64.powi(50));
        prop_assert!(quantize(lo, qp).unwrap() <= quantize(hi, qp).unwrap());
    }

    #[test]
    fn quantizer_state_refines_by_base(f0 in 1e-3f64..1e6, base in 2u32..11, k in 0usize..20) {
        let mut s = QuantizerState::for_initial(f0, base, 0).unwrap();
        let q0 = s.qp();
        for _ in 0..k {
            s = s.advance().unwrap();
        }
        let expect = q0 * (base as f64).powi(k as i32);
        prop_assert!((s.qp() - expect).abs() <= 1e-12 * expect);
        prop_assert!((s.step() * s.qp() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cooling_and_beta_decrease(t0 in 1.0f64..1e4, alpha in 0.9f64..0.99999, tau in 0u64..100_000, tf in 1u64..100_000) {
        let c = CoolingSchedule::new(t0, alpha).unwrap();
        prop_assert!(c.temperature(tau + 1) <= c.temperature(tau));
        prop_assert!(c.temperature(tau) > 0.0 || tau > 0);
        let s = AdiabaticSchedule::new(tf).unwrap();
        let t = tau.min(tf);
        let b = s.beta(t).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
        if t < tf {
            prop_assert!(s.beta(t + 1).unwrap() <= b);
        }
        for form in [AdiabaticForm::Sqrt, AdiabaticForm::Linear] {
            let q = QiaConfig { cooling: c, t_final: tf, form };
            prop_assert!((0.0..=1.0).contains(&q.beta(tau)));
            prop_assert!(q.beta(tau + 1) <= q.beta(tau));
        }
    }

    #[test]
    fn ml_power_nondecreasing(tau in 0u64..10_000_000, base in 2u32..5) {
        let s = LogLogPowerSchedule { base, ..Default::default() };
        prop_assert!(s.power(tau + 1) >= s.power(tau));
        prop_assert!(s.qp(tau) > 0.0);
    }

    #[test]
    fn metropolis_accepts_downhill(inc in -1e3f64..1e3, delta in 0.0f64..1e3, t in 1e-6f64..1e3, r in 0.0f64..1.0) {
        prop_assert!(metropolis_accept(inc - delta, inc, t, r));
    }

    #[test]
    fn tour_moves_keep_permutation_and_cost(n in 5usize..60, seed in 0u64..1000, moves in 1usize..50, two_opt in any::<bool>()) {
        let inst = generate_instance(n, 100.0, seed).unwrap();
        let mut t = nearest_neighbor(&inst, 0).unwrap();
        let nb = if two_opt { Neighborhood::TwoOpt } else { Neighborhood::Swap };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..moves {
            t = t.neighbor(&inst, nb, &mut rng);
            prop_assert!(is_permutation(&t.order, n));
            let full = inst.tour_cost(&t.order);
            prop_assert!((t.cost - full).abs() <= 1e-9 * full.max(1.0));
        }
    }

    #[test]
    fn swap_and_two_opt_deltas(n in 5usize..40, seed in 0u64..500, i in 0usize..40, j in 0usize..40) {
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j);
        let inst = generate_instance(n, 50.0, seed).unwrap();
        let t = nearest_neighbor(&inst, seed as usize % n).unwrap();
        let s = t.swapped(&inst, i, j);
        prop_assert!((t.swap_delta(&inst, i, j) - (inst.tour_cost(&s.order) - t.cost)).abs() < 1e-9);
        let (a, b) = (i.min(j), i.max(j));
        let r = t.reversed_segment(&inst, a, b);
        prop_assert!((t.two_opt_delta(&inst, a, b) - (inst.tour_cost(&r.order) - t.cost)).abs() < 1e-9);
    }

    #[test]
    fn quantized_step_band(h in prop::collection::vec(-10.0f64..10.0, 1..8), eta in 1e-4f64..2.0, bits in 0i32..40) {
        let x = vec![0.25; h.len()];
        let cfg = QuantizedStepConfig::new(2f64.powi(bits), eta);
        let y = quantized_step(&x, &h, &cfg);
        for i in 0..h.len() {
            prop_assert!((y[i] - (x[i] + eta * h[i])).abs() <= 0.5 / cfg.qbar + 1e-15);
        }
    }

    #[test]
    fn enforcement_bounded(h in prop::collection::vec(-5.0f64..5.0, 1..8), tau in 0u64..2000, bits in 4i32..30) {
        let c = EnforcementConfig::default();
        let qp = 2f64.powi(bits);
        let r = enforcement(tau, &h, &c, qp);
        let scale = c.lambda * enforcement_decay(tau, &c);
        for v in r {
            prop_assert!(v.abs() <= scale + 0.5 / qp);
        }
    }

    #[test]
    fn adiabatic_bound(f in 0.0f64..1e4, b in 2u32..11, t in 1u32..15) {
        let r = theory::adiabatic_residual(f, b, t).unwrap();
        prop_assert!(r.abs() < (b as f64).powi(-(t as i32)));
    }

    #[test]
    fn sup_recursion_decreases_to_limit(fq in -10.0f64..10.0, q in 1e-3f64..1.0, b in 2u32..9) {
        let seq = theory::sup_recursion(fq, q, b, 60).unwrap();
        prop_assert!(seq.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!((seq[59] - theory::sup_limit(fq, q, b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tunneling_in_unit_interval_and_decreasing(dv in 0.0f64..5.0, d in 0.01f64..3.0, m in 0.01f64..3.0) {
        let p = theory::TunnelingParams { hbar: 1.0, mass: m, v0: 1.0 + dv, e: 1.0, width: d };
        let t = theory::tunneling_factor(&p).unwrap();
        prop_assert!(t > 0.0 && t <= 1.0);
        prop_assert_eq!(t == 1.0, dv == 0.0);
        let wider = theory::tunneling_factor(&theory::TunnelingParams { width: d * 1.5, ..p }).unwrap();
        prop_assert!(wider <= t);
    }

    #[test]
    fn two_level_invariants(e1 in -10.0f64..10.0, e2 in -10.0f64..10.0, d in -5.0f64..5.0) {
        let (lo, hi) = theory::two_level_eigs(e1, e2, d);
        prop_assert!(lo <= hi);
        prop_assert!((lo + hi - (e1 + e2)).abs() < 1e-12);
        prop_assert!((lo * hi - (e1 * e2 - d * d / 4.0)).abs() < 1e-10);
    }

    #[test]
    fn summarize_shift_invariant(xs in prop::collection::vec(-1e3f64..1e3, 1..50), c in -1e3f64..1e3) {
        let a = summarize("a", &xs, &[]).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let b = summarize("b", &shifted, &[]).unwrap();
        prop_assert!(a.stddev >= 0.0);
        prop_assert!(a.min <= a.mean + 1e-9 && a.mean <= a.max + 1e-9);
        prop_assert!((a.stddev - b.stddev).abs() <= 1e-9 * (1.0 + a.stddev));
    }

    #[test]
    fn config_round_trip(trials in 1u64..50, budget in 1u64..1_000_000, alpha in 0.5f64..0.99999, kind in 0usize..6) {
        let kinds = [
            ExperimentKind::Tsp,
            ExperimentKind::Bench,
            ExperimentKind::Washboard,
            ExperimentKind::Gradopt,
            ExperimentKind::Mltoy,
            ExperimentKind::Theory,
        ];
        let mut c = ExperimentConfig::new(kinds[kind]);
        c.set("trials", &trials.to_string()).unwrap();
        c.set("budget", &budget.to_string()).unwrap();
        c.set("sa.alpha", &alpha.to_string()).unwrap();
        let back = ExperimentConfig::from_text(&c.to_text(), None).unwrap();
        prop_assert_eq!(back, c);
    }
}
