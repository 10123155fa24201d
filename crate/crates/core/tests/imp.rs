//! Inventory subproblems, master, extensive form and Benders against
//! direct simulation and grid enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smp_core::imp::{
    build_master, expected_cost, generate_instance, run_benders, scenario_cost, solve_dual_sp, solve_extensive,
    CostParams, ImpInstance, ImpMasterDecision, Schedule, Subproblem,
};
use smp_core::ledger::{Cut, CutLedger};
use smp_core::lp::{solve_mip, MipStatus};

fn tiny_params() -> CostParams {
    CostParams {
        mean_min: 2.0,
        mean_max: 5.0,
        ..Default::default()
    }
}

fn random_decision(inst: &ImpInstance, rng: &mut ChaCha8Rng) -> ImpMasterDecision {
    let s = rng.gen_range(0..inst.n_schedules());
    let a = (0..inst.horizon)
        .map(|t| if inst.orders_on(s, t) { rng.gen_range(0..=inst.capacity) } else { 0 })
        .collect();
    ImpMasterDecision::new(inst, s, a).unwrap()
}

#[test]
fn subproblem_lp_matches_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..10 {
        let inst = generate_instance(seed, 6, 4, 4, &tiny_params()).unwrap();
        for _ in 0..20 {
            let d = random_decision(&inst, &mut rng);
            for r in 0..inst.n_scenarios() {
                let mut sp = Subproblem::new(&inst, r);
                let sol = sp.solve(&d.column(&inst)).unwrap();
                let sim = scenario_cost(&inst, &d, r);
                assert!((sol.primal.objective - sim).abs() <= 1e-6, "lp {} sim {}", sol.primal.objective, sim);
            }
        }
    }
}

#[test]
fn strong_duality_and_dual_signs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut pairs = 0;
    for seed in 0..10 {
        let inst = generate_instance(100 + seed, 5, 3, 3, &CostParams::default()).unwrap();
        for _ in 0..10 {
            let d = random_decision(&inst, &mut rng);
            let r = rng.gen_range(0..inst.n_scenarios());
            let (dual, cut) = solve_dual_sp(&inst, &d, r).unwrap();
            pairs += 1;
            let tol = 1e-6 * (1.0 + dual.primal_objective.abs());
            assert!((dual.objective - dual.primal_objective).abs() <= tol);
            // the cut reproduces the dual objective at its generating point
            assert!((cut.evaluate(&d.column(&inst)) - dual.primal_objective).abs() <= tol);
            let eps = 1e-7;
            for t in 0..inst.horizon {
                assert!(dual.gamma[t] >= -eps && dual.omega[t] >= -eps && dual.xi_lb[t] >= -eps);
                assert!(dual.pi[t] >= -eps);
                assert!(dual.phi[t] <= eps && dual.xi_ub[t] <= eps && dual.sigma[t] <= eps && dual.rho[t] <= eps);
            }
        }
    }
    assert_eq!(pairs, 100);
}

#[test]
fn cuts_bound_the_recourse_cost_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inst = generate_instance(7, 4, 3, 3, &CostParams::default()).unwrap();
    for _ in 0..10 {
        let d = random_decision(&inst, &mut rng);
        for r in 0..inst.n_scenarios() {
            let (_, cut) = solve_dual_sp(&inst, &d, r).unwrap();
            for _ in 0..100 {
                let other = random_decision(&inst, &mut rng);
                let value = cut.evaluate(&other.column(&inst));
                assert!(value <= scenario_cost(&inst, &other, r) + 1e-6);
            }
        }
    }
}

#[test]
fn zero_demand_without_stock_costs_nothing() {
    let inst = ImpInstance {
        horizon: 3,
        schedules: vec![Schedule {
            days: vec![true, false, true],
            cost: 0.0,
        }],
        holding: 1.0,
        emergency: 20.0,
        overfill: 4.0,
        capacity: 10,
        initial: 0,
        demand: vec![vec![0, 0, 0]],
        forecast_mean: vec![0.0; 3],
        forecast_std: vec![0.0; 3],
    };
    let d = ImpMasterDecision::new(&inst, 0, vec![0, 0, 0]).unwrap();
    let (dual, cut) = solve_dual_sp(&inst, &d, 0).unwrap();
    assert!(dual.primal_objective.abs() < 1e-9);
    assert!(cut.evaluate(&d.column(&inst)).abs() < 1e-9);
    let (obj, _) = solve_extensive(&inst, 0.0).unwrap();
    assert!(obj.abs() < 1e-9);
    let out = run_benders(&inst, 1e-6, None).unwrap();
    assert!(out.converged() && out.objective.abs() < 1e-9);
    assert!(out.trace.len() <= 2);
}

#[test]
fn unscheduled_start_holds_initial_stock() {
    // no order on day 0: the starting stock is held and consumed
    let inst = ImpInstance {
        horizon: 2,
        schedules: vec![Schedule {
            days: vec![false, true],
            cost: 5.0,
        }],
        holding: 1.0,
        emergency: 20.0,
        overfill: 4.0,
        capacity: 9,
        initial: 3,
        demand: vec![vec![3, 0]],
        forecast_mean: vec![3.0, 0.0],
        forecast_std: vec![0.0; 2],
    };
    let d = ImpMasterDecision::new(&inst, 0, vec![0, 0]).unwrap();
    // day 0 holds 3 units, day 1 holds max(0, 3 - 0)
    assert_eq!(scenario_cost(&inst, &d, 0), 6.0);
    let (obj, best) = solve_extensive(&inst, 0.0).unwrap();
    // a_1 = 2 gives p_1 = max(2, 1) = 2
    assert!((obj - (5.0 + 3.0 + 2.0)).abs() < 1e-9, "{obj}");
    assert!((expected_cost(&inst, &best) - obj).abs() < 1e-9);
}

fn grid_optimum(inst: &ImpInstance) -> f64 {
    let mut best = f64::INFINITY;
    for s in 0..inst.n_schedules() {
        let days: Vec<usize> = (0..inst.horizon).filter(|&t| inst.orders_on(s, t)).collect();
        let mut levels = vec![0u32; days.len()];
        loop {
            let mut a = vec![0u32; inst.horizon];
            for (&t, &l) in days.iter().zip(&levels) {
                a[t] = l;
            }
            let d = ImpMasterDecision::new(inst, s, a).unwrap();
            best = best.min(expected_cost(inst, &d));
            let mut i = 0;
            while i < levels.len() && levels[i] == inst.capacity {
                levels[i] = 0;
                i += 1;
            }
            if i == levels.len() {
                break;
            }
            levels[i] += 1;
        }
    }
    best
}

fn tiny_instance(seed: u64) -> ImpInstance {
    let mut inst = generate_instance(seed, 3, 2, 2, &tiny_params()).unwrap();
    inst.capacity = 15;
    inst
}

#[test]
fn extensive_form_matches_grid_enumeration() {
    for seed in 0..6 {
        let inst = tiny_instance(seed);
        let (obj, decision) = solve_extensive(&inst, 0.0).unwrap();
        let oracle = grid_optimum(&inst);
        assert!((obj - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()), "seed {seed}: {obj} vs {oracle}");
        assert!((expected_cost(&inst, &decision) - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()));
    }
}

#[test]
fn benders_matches_extensive_form() {
    for seed in 0..6 {
        let inst = tiny_instance(seed);
        let (oracle, _) = solve_extensive(&inst, 0.0).unwrap();
        let out = run_benders(&inst, 1e-8, None).unwrap();
        assert!(out.converged());
        assert!((out.objective - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()), "{} vs {oracle}", out.objective);
        assert!(out.lower_bound <= oracle + 1e-6);
        // lower bounds never decrease
        let exact: Vec<f64> = out.trace.records.iter().filter(|r| !r.used_surrogate).map(|r| r.lower_bound).collect();
        assert!(exact.windows(2).all(|w| w[1] >= w[0]));
        // stored cuts reproduce the subproblem value at their generating point and stay valid
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for cut in out.ledger.cuts() {
            for _ in 0..20 {
                let d = random_decision(&inst, &mut rng);
                assert!(cut.evaluate(&d.column(&inst)) <= scenario_cost(&inst, &d, cut.scenario) + 1e-6);
            }
        }
    }
}

#[test]
fn empty_master_picks_cheapest_schedule() {
    let inst = generate_instance(4, 4, 2, 3, &CostParams::default()).unwrap();
    let ledger = CutLedger::new(inst.n_scenarios(), inst.dim());
    let mip = build_master(&inst, &ledger).unwrap();
    let sol = solve_mip(&mip, 0.0).unwrap();
    assert_eq!(sol.status, MipStatus::Optimal);
    let cheapest = inst.schedules.iter().map(|s| s.cost).fold(f64::INFINITY, f64::min);
    assert!((sol.objective - cheapest).abs() < 1e-9);

    let mut ledger = ledger;
    for r in 0..inst.n_scenarios() {
        ledger
            .add_cut(Cut {
                scenario: r,
                coeffs: vec![0.0; inst.dim()],
                constant: 10.0,
            })
            .unwrap();
    }
    let sol = solve_mip(&build_master(&inst, &ledger).unwrap(), 0.0).unwrap();
    assert!((sol.objective - (cheapest + 10.0)).abs() < 1e-9);
    assert!(build_master(&inst, &CutLedger::new(1, 3)).is_err());
}

#[test]
fn demand_sample_mean_tracks_forecast() {
    let inst = generate_instance(9, 3, 100_000, 1, &CostParams::default()).unwrap();
    for t in 0..3 {
        let mu = inst.forecast_mean[t];
        let mean = inst.demand.iter().map(|d| f64::from(d[t])).sum::<f64>() / inst.n_scenarios() as f64;
        if mu >= 10.0 {
            assert!((mean - mu).abs() <= 0.01 * mu, "day {t}: {mean} vs {mu}");
        }
    }
}

#[test]
fn decision_columns_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = generate_instance(5, 6, 2, 5, &CostParams::default()).unwrap();
    for _ in 0..50 {
        let d = random_decision(&inst, &mut rng);
        assert_eq!(ImpMasterDecision::from_column(&inst, &d.column(&inst)).unwrap(), d);
    }
    let mut bad = random_decision(&inst, &mut rng).column(&inst);
    bad[0] = 0.5;
    assert!(ImpMasterDecision::from_column(&inst, &bad).is_err());
}
