use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use qtzopt::benchfns::{by_name, washboard, washboard_min};
use qtzopt::gradopt::{
    minimize, step, DiagQuadratic, LeastSquares, LineSearchParams, Method, MinimizeConfig, Objective, OptState,
    QuantizedStepConfig, quantized_step, Termination,
};
use qtzopt::harness::{improvement_ratio, run_experiment, summarize, summary_json, ExperimentConfig, ExperimentKind, SUMMARY_SCHEMA};
use qtzopt::tsp::{generate_instance, nearest_neighbor, TspInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

#[test]
fn summarize_matches_rational_two_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let n = rng.gen_range(2..30);
        let scale = 10f64.powi(rng.gen_range(-3..5));
        let xs: Vec<f64> = (0..n).map(|_| scale * rng.gen_range(-1.0..1.0) + rng.gen_range(0.0..3.0) * scale).collect();
        let s = summarize("x", &xs, &[]).unwrap();
        let nn = BigRational::from_integer(BigInt::from(n));
        let mean = xs.iter().map(|x| exact(*x)).fold(BigRational::zero(), |a, b| a + b) / &nn;
        let ss = xs
            .iter()
            .map(|x| {
                let d = exact(*x) - &mean;
                &d * &d
            })
            .fold(BigRational::zero(), |a, b| a + b);
        let var = ss / BigRational::from_integer(BigInt::from(n - 1));
        let m = mean.to_f64().unwrap();
        let sd = var.to_f64().unwrap().sqrt();
        assert!((s.mean - m).abs() <= 1e-12 * m.abs().max(f64::MIN_POSITIVE), "{} vs {m}", s.mean);
        assert!((s.stddev - sd).abs() <= 1e-12 * sd, "{} vs {sd}", s.stddev);
    }
}

#[test]
fn table_one_ratios() {
    assert!((improvement_ratio(1732.16, 1691.76) - 2.33).abs() < 0.005);
    assert!((improvement_ratio(2159.27, 1691.76) - 21.65).abs() < 0.005);
}

#[test]
fn two_level_matches_symmetric_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let (e1, e2, d) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let (lo, hi) = qtzopt::theory::two_level_eigs(e1, e2, d);
        let eig = SymmetricEigen::new(Matrix2::new(e1, d / 2.0, d / 2.0, e2));
        let mut v = [eig.eigenvalues[0], eig.eigenvalues[1]];
        v.sort_by(f64::total_cmp);
        assert!((lo - v[0]).abs() < 1e-12 && (hi - v[1]).abs() < 1e-12, "{e1} {e2} {d}");
    }
}

#[test]
fn bfgs_inverse_hessian_stays_positive_definite() {
    let f = by_name("rosenbrock2d", None).unwrap();
    let ls = LineSearchParams::default();
    let mut s = OptState::new(&f, vec![-1.2, 1.0]).unwrap();
    for _ in 0..30 {
        let (next, rec) = step(Method::Bfgs, &f, &s, &ls, None).unwrap();
        if let Some(h) = &next.h_inv {
            let m = DMatrix::from_row_slice(2, 2, h);
            assert!((&m - m.transpose()).abs().max() < 1e-9);
            assert!(m.clone().cholesky().is_some(), "H not SPD at k={}", next.k);
            if rec.h_updated {
                // Secant condition H⁺ y = s.
                let y: Vec<f64> = next.g.iter().zip(&s.g).map(|(a, b)| a - b).collect();
                let hy = &m * nalgebra::DVector::from_vec(y);
                for i in 0..2 {
                    assert!((hy[i] - rec.taken[i]).abs() <= 1e-8 * (1.0 + rec.taken[i].abs()));
                }
            }
        }
        if next.g.iter().all(|g| g.abs() < 1e-10) {
            break;
        }
        s = next;
    }
}

#[test]
fn cg_terminates_on_quadratic() {
    let q = DiagQuadratic((1..=10).map(|i| i as f64 * 10.0).collect());
    let mut cfg = MinimizeConfig::new(Method::Cg);
    cfg.gtol = 1e-8;
    let r = minimize(&q, vec![1.0; 10], &cfg).unwrap();
    assert_eq!(r.termination, Termination::Gradient);
    assert!(r.iterations <= 12, "{} iterations", r.iterations);
}

#[test]
fn bfgs_solves_rosenbrock() {
    let f = by_name("rosenbrock2d", None).unwrap();
    let r = minimize(&f, vec![-1.2, 1.0], &MinimizeConfig::new(Method::Bfgs)).unwrap();
    assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
}

#[test]
fn quantized_step_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100_000 {
        let d = rng.gen_range(1..6);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let h: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let eta = rng.gen_range(1e-3..1.0);
        let cfg = QuantizedStepConfig::new(2f64.powi(rng.gen_range(0..34)), eta);
        let y = quantized_step(&x, &h, &cfg);
        for i in 0..d {
            assert!((y[i] - (x[i] + eta * h[i])).abs() <= 0.5 / cfg.qbar + 1e-15);
        }
        let fine = QuantizedStepConfig { qp: 2f64.powi(80), qbar: 2f64.powi(40), eta };
        let z = quantized_step(&x, &h, &fine);
        for i in 0..d {
            assert!((z[i] - (x[i] + eta * h[i])).abs() <= 1e-9);
        }
    }
}

#[test]
fn nearest_neighbor_matches_brute_force() {
    for seed in 0..20 {
        let inst = generate_instance(60, 300.0, seed).unwrap();
        let t = nearest_neighbor(&inst, 0).unwrap();
        let d = |a: usize, b: usize| {
            let (p, q) = (inst.cities[a], inst.cities[b]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        };
        let mut seen = [false; 60];
        let mut cur = 0;
        seen[0] = true;
        let mut order = vec![0];
        let mut cost = 0.0;
        for _ in 1..60 {
            let (nxt, dist) = (0..60)
                .filter(|k| !seen[*k])
                .map(|k| (k, d(cur, k)))
                .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            seen[nxt] = true;
            order.push(nxt);
            cost += dist;
            cur = nxt;
        }
        cost += d(cur, 0);
        assert_eq!(t.order, order);
        assert!((t.cost - cost).abs() < 1e-9);
    }
}

#[test]
fn instance_csv_round_trip() {
    let inst = generate_instance(25, 300.0, 9).unwrap();
    assert!(inst.cities.iter().all(|c| (0.0..=300.0).contains(&c[0]) && (0.0..=300.0).contains(&c[1])));
    let mut buf = Vec::new();
    inst.write_csv(&mut buf).unwrap();
    let back = TspInstance::read_csv(&buf[..]).unwrap();
    assert_eq!(back.cities, inst.cities);
    assert_eq!(generate_instance(25, 300.0, 9).unwrap().cities, inst.cities);
}

#[test]
fn washboard_minimum_against_fine_scan() {
    for alpha in [3.0, 10.0] {
        let (x, f) = washboard_min(alpha);
        let mut best = f64::INFINITY;
        let n = 2_000_000;
        for k in 0..=n {
            let t = -10.0 + 20.0 * k as f64 / n as f64;
            best = best.min(washboard(alpha, t));
        }
        assert!(f <= best + 1e-12, "alpha {alpha}: {f} vs scan {best}");
        assert!(best - f < 1e-8);
        assert!((-10.0..=10.0).contains(&x));
    }
}

#[test]
fn least_squares_gradient_matches_differences() {
    let p = LeastSquares::synthetic(20, 200, 100.0, 1).unwrap();
    let all: Vec<usize> = (0..200).collect();
    let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
    let g = p.batch_gradient(&x, &all);
    for i in 0..20 {
        let h = 1e-5;
        let (mut a, mut b) = (x.clone(), x.clone());
        a[i] += h;
        b[i] -= h;
        let fd = (p.loss(&a) - p.loss(&b)) / (2.0 * h);
        assert!((g[i] - fd).abs() < 1e-6 * g[i].abs().max(1.0));
    }
    assert!(p.loss(&p.x_true) < 1e-20);
}

#[test]
fn objective_trait_for_benchmarks() {
    let f = by_name("ackley", Some(3)).unwrap();
    assert_eq!(Objective::dim(&f), 3);
    assert_eq!(Objective::value(&f, &[0.0; 3]), f.eval(&[0.0; 3]));
}

#[test]
fn summary_json_validates_against_schema() {
    let schema: serde_json::Value = serde_json::from_str(SUMMARY_SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let mut cfgs = Vec::new();
    let mut c = ExperimentConfig::new(ExperimentKind::Tsp);
    c.tsp.cities = 20;
    c.budget = 500;
    c.seeds = vec![0];
    cfgs.push(c);
    let mut c = ExperimentConfig::new(ExperimentKind::Bench);
    c.budget = 500;
    c.seeds = vec![0, 1];
    cfgs.push(c);
    let mut c = ExperimentConfig::new(ExperimentKind::Washboard);
    c.budget = 500;
    c.seeds = vec![0, 1];
    cfgs.push(c);
    cfgs.push(ExperimentConfig::new(ExperimentKind::Gradopt));
    let mut c = ExperimentConfig::new(ExperimentKind::Mltoy);
    c.mltoy.steps = 200;
    cfgs.push(c);
    cfgs.push(ExperimentConfig::new(ExperimentKind::Theory));
    for cfg in cfgs {
        let out = run_experiment(&cfg).unwrap();
        let v: serde_json::Value = serde_json::from_str(&summary_json(&out).unwrap()).unwrap();
        if let Err(errs) = compiled.validate(&v) {
            let msgs: Vec<String> = errs.map(|e| format!("{} at {}", e, e.instance_path)).collect();
            panic!("{}: {msgs:?}", cfg.kind);
        };
    }
}
