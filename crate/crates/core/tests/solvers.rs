mod common;

use bpo_core::baselines::{solve_mirror_descent, solve_projected_subgradient, DescentConfig};
use bpo_core::fw::{
    estimate_curvature, heuristic_rule_of_thumb, solve_fw, Init, SolverConfig, StepRule,
    GAP_BOUND_BETA,
};
use bpo_core::utility::{gradient, total_utility};
use bpo_core::UtilitySpec;
use common::*;
use rand::Rng;

fn specs() -> [UtilitySpec; 4] {
    [
        UtilitySpec::Log { delta: 1.0 },
        UtilitySpec::Log { delta: 4.0 },
        UtilitySpec::AlphaFair { alpha: 0.5 },
        UtilitySpec::AlphaFair { alpha: 2.0 },
    ]
}

#[test]
fn sparse_kernels_match_dense_recomputation() {
    let mut r = rng(1);
    for case in 0..30 {
        let n = r.gen_range(2..12);
        let inst = random_instance(&mut r, n, 0.5);
        let a: Vec<f64> = Box1::of(&inst)
            .r
            .iter()
            .map(|&c| c * r.gen_range(0.0..1.0))
            .collect();
        let spec = specs()[case % 4];
        let v = total_utility(&inst, &spec, &a).unwrap();
        assert!((v - dense_value(&inst, &spec, &a)).abs() <= 1e-12 * (1.0 + v.abs()));
        let g = gradient(&inst, &spec, &a).unwrap();
        for (x, y) in g.iter().zip(dense_gradient(&inst, &spec, &a)) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}

#[test]
fn fw_reaches_the_dense_optimum() {
    let mut r = rng(2);
    for case in 0..16 {
        let n = r.gen_range(3..8);
        let inst = random_instance(&mut r, n, 0.6);
        let spec = specs()[case % 4];
        let (lo, hi) = dense_optimum(&inst, &spec, 20_000);
        let cfg = SolverConfig {
            max_iters: 500,
            gap_tolerance: 1e-10,
            ..SolverConfig::default()
        };
        let fw = solve_fw(&inst, &spec, &cfg).unwrap();
        assert!(
            fw.objective <= hi + 1e-9,
            "case {case}: {} > {hi}",
            fw.objective
        );
        assert!(
            fw.objective >= lo - 1e-7,
            "case {case}: {} < {lo}",
            fw.objective
        );
    }
}

#[test]
fn harmonic_steps_respect_the_convergence_bounds() {
    let mut r = rng(3);
    for case in 0..8 {
        let n = r.gen_range(3..8);
        let inst = random_instance(&mut r, n, 0.6);
        let spec = specs()[case % 4];
        let (_, u_star) = dense_optimum(&inst, &spec, 20_000);
        let c = 2.0 * estimate_curvature(&inst, &spec, 64, case as u64).unwrap();
        let cfg = SolverConfig {
            max_iters: 200,
            gap_tolerance: 1e-300,
            step_rule: StepRule::Harmonic,
            ..SolverConfig::default()
        };
        let fw = solve_fw(&inst, &spec, &cfg).unwrap();
        let mut min_gap = f64::INFINITY;
        for (t, (&u, &g)) in fw.objective_trace.iter().zip(&fw.gap_trace).enumerate() {
            min_gap = min_gap.min(g);
            let tt = t as f64;
            if t >= 1 {
                assert!(
                    u_star - u <= 2.0 * c / (tt + 2.0) + 1e-12,
                    "case {case} t {t}"
                );
            }
            if t >= 2 {
                assert!(
                    min_gap <= 2.0 * GAP_BOUND_BETA * c / (tt + 2.0) + 1e-12,
                    "case {case} t {t}"
                );
            }
        }
    }
}

#[test]
fn finite_differences_agree_with_gradients() {
    let mut r = rng(4);
    let h = 1e-6;
    for case in 0..20 {
        let n = r.gen_range(3..20);
        let inst = random_instance(&mut r, n, 0.4);
        let spec = [
            UtilitySpec::Log { delta: 2.0 },
            UtilitySpec::AlphaFair { alpha: 0.5 },
            UtilitySpec::AlphaFair { alpha: 2.0 },
            UtilitySpec::AlphaFair { alpha: 8.0 },
        ][case % 4];
        let a: Vec<f64> = (0..inst.dim()).map(|_| r.gen_range(0.1..0.9)).collect();
        let g = gradient(&inst, &spec, &a).unwrap();
        for k in 0..a.len() {
            let (mut up, mut dn) = (a.clone(), a.clone());
            up[k] += h;
            dn[k] -= h;
            let fd = (total_utility(&inst, &spec, &up).unwrap()
                - total_utility(&inst, &spec, &dn).unwrap())
                / (2.0 * h);
            let err = (fd - g[k]).abs() / g[k].abs().max(1e-3);
            assert!(err <= 1e-5, "case {case} k {k}: {fd} vs {}", g[k]);
        }
    }
}

#[test]
fn every_iterate_is_feasible() {
    let mut r = rng(5);
    for case in 0..12 {
        let n = r.gen_range(3..15);
        let inst = random_instance(&mut r, n, 0.5);
        let spec = specs()[case % 4];
        let reports = [
            solve_fw(&inst, &spec, &SolverConfig::default()).unwrap(),
            solve_fw(
                &inst,
                &spec,
                &SolverConfig {
                    step_rule: StepRule::GapOverCurvature,
                    ..SolverConfig::default()
                },
            )
            .unwrap(),
            solve_projected_subgradient(&inst, &spec, &DescentConfig::default()).unwrap(),
            solve_mirror_descent(&inst, &spec, &DescentConfig::default()).unwrap(),
        ];
        for rep in reports {
            assert!(
                rep.budget_excess <= 1e-9,
                "{} {}",
                rep.solver,
                rep.budget_excess
            );
            assert!(rep.box_excess <= 1e-12, "{} {}", rep.solver, rep.box_excess);
            assert_eq!(rep.objective_trace.len(), rep.gap_trace.len());
        }
    }
}

#[test]
fn linear_utility_is_solved_by_the_rule_of_thumb() {
    let mut r = rng(6);
    for _ in 0..20 {
        let n = r.gen_range(2..30);
        let inst = random_instance(&mut r, n, 0.3);
        let spec = UtilitySpec::Linear {
            delta: r.gen_range(0.5..5.0),
        };
        let fw = solve_fw(&inst, &spec, &SolverConfig::default()).unwrap();
        let h = heuristic_rule_of_thumb(&inst).unwrap();
        assert!(fw.iterations <= 1);
        assert_eq!(fw.participation, h.0);
    }
}

#[test]
fn warm_start_from_the_optimum_stops_immediately() {
    let mut r = rng(7);
    let inst = random_instance(&mut r, 6, 0.6);
    let spec = UtilitySpec::Log { delta: 2.0 };
    let cfg = SolverConfig {
        max_iters: 500,
        gap_tolerance: 1e-9,
        ..SolverConfig::default()
    };
    let first = solve_fw(&inst, &spec, &cfg).unwrap();
    let again = solve_fw(
        &inst,
        &spec,
        &SolverConfig {
            init: Init::Given(first.participation.clone()),
            gap_tolerance: 1e-6,
            ..cfg
        },
    )
    .unwrap();
    assert_eq!(again.iterations, 0);
}

#[test]
fn single_precision_tracks_double() {
    let mut r = rng(8);
    let inst = random_instance(&mut r, 10, 0.4);
    let spec = UtilitySpec::Log { delta: 3.0 };
    let cfg = SolverConfig::default();
    let d = solve_fw(&inst, &spec, &cfg).unwrap();
    let s = solve_fw(
        &inst.cast::<f32>(),
        &spec,
        &SolverConfig {
            max_iters: cfg.max_iters,
            gap_tolerance: cfg.gap_tolerance,
            step_rule: cfg.step_rule,
            curvature: None,
            seed: 0,
            init: Init::Zeros,
        },
    )
    .unwrap();
    assert!((d.objective - s.objective as f64).abs() <= 1e-3 * d.objective.abs().max(1.0));
}
