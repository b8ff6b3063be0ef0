use proptest::prelude::*;
use queuegrad::diagnostics::check_trace;
use queuegrad::instances::{random_instance, Family, ProblemSpec};
use queuegrad::linalg::{distance, dot, norm};
use queuegrad::problem::{check_gradient, BoxSet};
use queuegrad::solvers::{run, AlgorithmId, RunConfig, VirtualQueue};

/// Point inside `[lower, upper]` at relative position `frac` per coordinate.
fn inside(lower: &[f64], upper: &[f64], frac: &[f64]) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .zip(frac)
        .map(|((l, u), f)| l + (u - l) * f)
        .collect()
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Lp), Just(Family::Qp)]
}

fn box_and_points() -> impl Strategy<Value = (BoxSet, Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(0.1f64..10.0, n),
            prop::collection::vec(-30.0f64..30.0, n),
            prop::collection::vec(-30.0f64..30.0, n),
        )
            .prop_map(|(lo, width, x, y)| {
                let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
                (BoxSet::new(lo, hi).unwrap(), x, y)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_nonexpansive((set, x, y) in box_and_points()) {
        let px = set.project(&x).unwrap();
        let py = set.project(&y).unwrap();
        prop_assert!(set.contains(&px));
        prop_assert_eq!(set.project(&px).unwrap(), px.clone());
        prop_assert!(distance(&px, &py) <= distance(&x, &y) + 1e-12);
    }

    #[test]
    fn queue_update_keeps_both_nonnegativity_properties(
        q in prop::collection::vec(0.0f64..100.0, 1..6),
        g_seed in prop::collection::vec(-100.0f64..100.0, 6),
    ) {
        let g = &g_seed[..q.len()];
        let mut queue = VirtualQueue::from_values(q.clone()).unwrap();
        queue.update(g);
        for (k, qk) in queue.as_slice().iter().enumerate() {
            prop_assert!(*qk >= 0.0);
            prop_assert!(qk + g[k] >= 0.0);
        }
        prop_assert!(queue.norm() >= norm(g) * (1.0 - 1e-15));
        // one-step drift bound
        let drift = 0.5 * (queue.norm().powi(2) - norm(&q).powi(2));
        let bound = dot(&q, g) + dot(g, g);
        prop_assert!(drift <= bound + 1e-9 * (1.0 + norm(&q).powi(2) + dot(g, g)));
    }

    #[test]
    fn instance_constants_hold_at_random_points(
        fam in family(),
        n in 1usize..5,
        m in 1usize..5,
        seed in any::<u64>(),
        fx in prop::collection::vec(0.0f64..=1.0, 4),
        fy in prop::collection::vec(0.0f64..=1.0, 4),
    ) {
        let spec = random_instance(fam, n, m, seed).unwrap();
        let (p, k) = spec.build().unwrap();
        let x = inside(spec.lower(), spec.upper(), &fx[..n]);
        let y = inside(spec.lower(), spec.upper(), &fy[..n]);
        let d = distance(&x, &y);
        let gx = p.constraint_values(&x).unwrap();
        let gy = p.constraint_values(&y).unwrap();
        let scale = 1e-9 * (1.0 + norm(&gx) + norm(&gy));
        prop_assert!(norm(&gx) <= k.constraint_bound + scale);
        let diff: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&diff) <= k.lipschitz * d + scale);
        prop_assert!(distance(&x, &y) <= k.diameter + 1e-12);
        let dfx = p.objective_gradient(&x).unwrap();
        let dfy = p.objective_gradient(&y).unwrap();
        prop_assert!(distance(&dfx, &dfy) <= k.objective_smoothness * d + 1e-9 * (1.0 + norm(&dfx)));
        for (g, lk) in p.constraints().iter().zip(&k.constraint_smoothness) {
            let a = g.gradient(&x);
            let b = g.gradient(&y);
            prop_assert!(distance(&a, &b) <= lk * d + 1e-9 * (1.0 + norm(&a)));
        }
    }

    #[test]
    fn gradients_match_finite_differences(
        fam in family(),
        n in 1usize..5,
        m in 1usize..5,
        seed in any::<u64>(),
        frac in prop::collection::vec(0.01f64..0.99, 4),
    ) {
        let spec = random_instance(fam, n, m, seed).unwrap();
        let (p, _) = spec.build().unwrap();
        let x = inside(spec.lower(), spec.upper(), &frac[..n]);
        prop_assert!(check_gradient(p.objective(), &x) <= 1e-6);
        for g in p.constraints() {
            prop_assert!(check_gradient(g.as_ref(), &x) <= 1e-6);
        }
    }

    #[test]
    fn short_runs_satisfy_the_queue_invariants(
        fam in family(),
        n in 1usize..4,
        m in 1usize..4,
        seed in any::<u64>(),
        frac in prop::collection::vec(0.0f64..=1.0, 3),
    ) {
        let spec = random_instance(fam, n, m, seed).unwrap();
        let (p, k) = spec.build().unwrap();
        let k = queuegrad::sweep::with_slater_bound(&spec, &p, k);
        let x0 = inside(spec.lower(), spec.upper(), &frac[..n]);
        let trace = run(AlgorithmId::New, &p, &k, &RunConfig::new(300, x0)).unwrap();
        prop_assert_eq!(trace.records.len(), 301);
        let report = check_trace(&trace, &p, &k, None, None).unwrap();
        prop_assert!(report.all_passed(), "{}", report);
    }

    #[test]
    fn identical_configs_give_identical_traces(seed in any::<u64>(), fam in family()) {
        let spec = random_instance(fam, 3, 3, seed).unwrap();
        let (p, k) = spec.build().unwrap();
        let k = queuegrad::sweep::with_slater_bound(&spec, &p, k);
        let cfg = RunConfig::new(200, spec.default_start());
        let a = run(AlgorithmId::New, &p, &k, &cfg).unwrap();
        let b = run(AlgorithmId::New, &p, &k, &cfg).unwrap();
        prop_assert_eq!(a.records, b.records);
    }
}

#[test]
fn random_instances_are_reproducible_from_the_seed() {
    for fam in [Family::Lp, Family::Qp] {
        let a = random_instance(fam, 4, 3, 42).unwrap();
        let b = random_instance(fam, 4, 3, 42).unwrap();
        let c = random_instance(fam, 4, 3, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(matches!(
            (fam, &a),
            (Family::Lp, ProblemSpec::Lp(_)) | (Family::Qp, ProblemSpec::Qp(_))
        ));
    }
}
