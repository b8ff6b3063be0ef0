//! End-to-end runs on the two reference instances and cross-checks between
//! the methods and the reference solvers.

use approx::assert_abs_diff_eq;
use queuegrad::diagnostics::{check_trace, fit_rate};
use queuegrad::instances::{
    build_lp, build_qp, example_lp_instance, example_qp_instance, random_instance, Family, LpSpec, ProblemSpec,
    EXAMPLE_QP_LAMBDA_BOUND,
};
use queuegrad::oracle::{lp_vertex_solve, qp_grid_polish};
use queuegrad::solvers::{multiplier_bound, run, run_summary, AlgorithmId, RunConfig, Step};
use queuegrad::sweep::{self, BatchJob};

fn random_lp(seed: u64, n: usize, m: usize) -> LpSpec {
    match random_instance(Family::Lp, n, m, seed).unwrap() {
        ProblemSpec::Lp(s) => s,
        ProblemSpec::Qp(_) => unreachable!(),
    }
}

fn magnitude(series: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    series.into_iter().map(|(t, e)| (t, e.abs())).collect()
}

#[test]
fn lp_run_meets_the_objective_bound_and_rate() {
    let spec = example_lp_instance();
    let (p, k) = build_lp(&spec).unwrap();
    let trace = run(AlgorithmId::New, &p, &k, &RunConfig::new(100_000, vec![10.0; 4])).unwrap();
    assert_abs_diff_eq!(trace.step, 1.0 / 257.0, epsilon = 1e-17);
    let f_star = lp_vertex_solve(&spec).unwrap().f_star;
    let r2 = k.diameter.powi(2);
    for r in &trace.records[1..] {
        assert!(r.f_avg - f_star <= r2 / (2.0 * trace.step * r.t as f64) + 1e-9);
    }
    for onset in trace.constraint_onsets() {
        assert!(onset.unwrap() <= 10);
    }
    let fit = fit_rate(&magnitude(trace.gap_series(f_star)), (1e3, 1e5)).unwrap();
    assert!((-1.25..=-0.75).contains(&fit.slope), "slope {}", fit.slope);
}

#[test]
fn qp_run_with_the_override_step() {
    let spec = example_qp_instance();
    let (p, k) = build_qp(&spec).unwrap();
    let k = k.with_lambda_bound(EXAMPLE_QP_LAMBDA_BOUND);
    let cfg = RunConfig::new(100_000, vec![0.0; 2]).with_step(Step::Explicit(0.1395));
    let trace = run(AlgorithmId::New, &p, &k, &cfg).unwrap();
    assert!((trace.last().f_avg + 3.75).abs() <= 0.01);
    let onsets = trace.constraint_onsets();
    assert_eq!((onsets[0], onsets[2]), (Some(1), Some(1)));
    let fit = fit_rate(&magnitude(trace.gap_series(-3.75)), (1e3, 1e5)).unwrap();
    assert!((-1.25..=-0.75).contains(&fit.slope));
    // the override exceeds the admissible step, so the step-dependent bounds are skipped
    let report = check_trace(&trace, &p, &k, Some(-3.75), None).unwrap();
    assert!(report.all_passed(), "{report}");
}

#[test]
fn dual_type_equals_queue_gradient_on_lps() {
    let mut specs = vec![example_lp_instance()];
    specs.extend((0..10).map(|s| random_lp(s, 4, 3)));
    for spec in specs {
        let (p, k) = build_lp(&spec).unwrap();
        let cfg = RunConfig::new(10_000, spec.upper.clone());
        let a = run(AlgorithmId::New, &p, &k, &cfg).unwrap();
        let b = run(AlgorithmId::DualType, &p, &k, &cfg).unwrap();
        assert_abs_diff_eq!(b.step, 1.0 / (2.0 * a.step), epsilon = 1e-9 * b.step);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            for (x, y) in ra.x.iter().zip(&rb.x) {
                assert!((x - y).abs() <= 1e-12, "t = {}: {x} vs {y}", ra.t);
            }
        }
    }
}

#[test]
fn multiplier_bound_for_the_qp() {
    let (p, _) = build_qp(&example_qp_instance()).unwrap();
    assert_eq!(multiplier_bound(&p, &[0.0, 0.0], -50.0).unwrap(), 50.0);
    assert_eq!(example_qp_instance().objective_lower_bound(), -50.0);
}

#[test]
fn iterative_and_reference_solutions_agree_on_random_lps() {
    let specs: Vec<LpSpec> = (0..20)
        .map(|s| random_lp(100 + s, 1 + s as usize % 4, 1 + (s as usize / 4) % 4))
        .collect();
    let jobs: Vec<BatchJob> = specs
        .iter()
        .map(|s| BatchJob {
            algorithm: AlgorithmId::New,
            spec: ProblemSpec::Lp(s.clone()),
            config: RunConfig::new(1_000_000, s.upper.clone()),
        })
        .collect();
    let results = sweep::run_batch(&jobs);
    for (spec, result) in specs.iter().zip(results) {
        let summary = result.unwrap();
        let (_, k) = build_lp(spec).unwrap();
        let exact = lp_vertex_solve(spec).unwrap();
        let tol = (k.diameter.powi(2) / (2.0 * summary.step * 1e6)).max(1e-3);
        assert!((summary.last.f_avg - exact.f_star).abs() <= tol);
    }
}

#[test]
fn reference_solvers_on_the_example_instances() {
    let lp = lp_vertex_solve(&example_lp_instance()).unwrap();
    assert_abs_diff_eq!(lp.f_star, -5.73333, epsilon = 1e-5);
    let qp = qp_grid_polish(&example_qp_instance(), 200).unwrap();
    assert_abs_diff_eq!(qp.f_star, -3.75, epsilon = 1e-6);
}

#[test]
fn subgradient_baseline_runs_and_moves_toward_the_optimum() {
    let spec = example_lp_instance();
    let (p, k) = build_lp(&spec).unwrap();
    let k = k.with_lambda_bound(25.0);
    let s = run_summary(
        AlgorithmId::PdSubgradient,
        &p,
        &k,
        &RunConfig::new(100_000, vec![10.0; 4]),
    )
    .unwrap();
    assert!(s.aborted.is_none());
    assert!((s.last.f_avg + 86.0 / 15.0).abs() < 0.5, "{}", s.last.f_avg);

    let mut literal = RunConfig::new(10, vec![10.0; 4]);
    literal.include_objective_gradient = false;
    let t = run(AlgorithmId::PdSubgradient, &p, &k, &literal).unwrap();
    // zero multipliers and no objective term: the first step stays put
    assert_eq!(t.records[1].x, vec![10.0; 4]);
}
