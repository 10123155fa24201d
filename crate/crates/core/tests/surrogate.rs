//! Gating, selection and end-to-end behaviour of surrogate proposals.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smp_core::cutplane::SurrogateHook;
use smp_core::imp::{generate_instance, run_benders, solve_extensive, CostParams, ImpInstance};
use smp_core::l0::{enumerate_best_subset, generate_rr_data_with, run_l0_cutplane, RrParams};
use smp_core::ledger::{Cut, CutLedger};
use smp_core::rl::{surrogate_step, ActMode, Architecture, Env, ImpEnv, Policy, PolicyNet, PolicyProposer, RrEnv};
use smp_core::rng::{stream, Stream};
use smp_core::surrogate::{
    gate, select_greedy, select_informed, select_weighted, weighted_probabilities, Proposer, RolloutBatch,
    Selection, SurrogateConfig,
};
use smp_core::Result;

fn batch(losses: Vec<f64>) -> RolloutBatch {
    let n = losses.len();
    RolloutBatch {
        decisions: vec![vec![0.0]; n],
        losses,
        fixed_costs: vec![0.0; n],
    }
}

#[test]
fn gate_frequency() {
    let cfg = SurrogateConfig {
        gamma: 0.75,
        ..SurrogateConfig::default()
    };
    let mut rng = stream(1, Stream::Gate);
    let hits = (0..100_000).filter(|_| gate(&cfg, &mut rng, f64::INFINITY)).count();
    assert!((hits as f64 / 1e5 - 0.75).abs() <= 0.01);
    // below the deactivation gap the surrogate never fires
    assert!((0..1000).all(|_| !gate(&cfg, &mut rng, 0.049)));
}

#[test]
fn greedy_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let n = rng.gen_range(1..20);
        // coarse values force ties
        let losses: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..6))).collect();
        let mut best = 0;
        for i in 0..n {
            if losses[i] < losses[best] {
                best = i;
            }
        }
        assert_eq!(select_greedy(&batch(losses)).unwrap(), best);
    }
}

#[test]
fn weighted_frequencies_match_mass() {
    let losses = vec![1.0, 2.0, 4.0, 0.5];
    let p = weighted_probabilities(&losses).unwrap();
    let b = batch(losses);
    let mut rng = stream(3, Stream::Selection);
    let mut counts = [0usize; 4];
    let n = 1_000_000;
    for _ in 0..n {
        counts[select_weighted(&b, &mut rng).unwrap()] += 1;
    }
    for (c, pi) in counts.iter().zip(&p) {
        assert!((*c as f64 / n as f64 - pi).abs() <= 0.005);
    }
    assert_eq!(weighted_probabilities(&[1.0, 2.0]).unwrap(), vec![2.0 / 3.0, 1.0 / 3.0]);
    assert_eq!(weighted_probabilities(&[3.0, 0.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
    assert!(weighted_probabilities(&[1.0, -1.0]).is_err());
}

/// `ℓ̂_b = f_b + (1/R) Σ_r max(0, max_i A_r[i]·D_b + c_r[i])` with plain loops.
fn triple_loop(ledger: &CutLedger, decisions: &[Vec<f64>], fixed: &[f64]) -> Vec<f64> {
    let r_count = ledger.n_scenarios();
    let mut out = Vec::new();
    for (b, d) in decisions.iter().enumerate() {
        let mut total = 0.0;
        for r in 0..r_count {
            let s = ledger.scenario(r);
            let mut best = 0.0_f64;
            for i in 0..s.len() {
                let mut v = s.constants[i];
                for n in 0..ledger.dim() {
                    v += s.rows[i][n] * d[n];
                }
                best = best.max(v);
            }
            total += best;
        }
        out.push(fixed[b] + total / r_count as f64);
    }
    out
}

fn random_ledger(rng: &mut ChaCha8Rng, r: usize, n: usize, cuts: usize) -> CutLedger {
    let mut ledger = CutLedger::new(r, n);
    for _ in 0..cuts {
        ledger
            .add_cut(Cut {
                scenario: rng.gen_range(0..r),
                coeffs: (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                constant: rng.gen_range(-5.0..5.0),
            })
            .unwrap();
    }
    ledger
}

#[test]
fn informed_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let (r, n, b) = (rng.gen_range(1..5), rng.gen_range(1..8), rng.gen_range(1..7));
        let cuts = rng.gen_range(0..15);
        let ledger = random_ledger(&mut rng, r, n, cuts);
        let decisions: Vec<Vec<f64>> = (0..b).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let fixed: Vec<f64> = (0..b).map(|_| rng.gen_range(0.0..3.0)).collect();
        let want = triple_loop(&ledger, &decisions, &fixed);
        let got = ledger.approx_losses(&decisions, &fixed).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9);
        }
        let mut best = 0;
        for i in 0..b {
            if want[i] < want[best] {
                best = i;
            }
        }
        let picked = select_informed(
            &RolloutBatch {
                decisions,
                losses: vec![1.0; b],
                fixed_costs: fixed,
            },
            &ledger,
        )
        .unwrap();
        assert_eq!(picked, best);
    }
}

#[test]
fn informed_special_ledgers() {
    let decisions = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]];
    let fixed = vec![3.0, 1.0, 2.0];
    let b = RolloutBatch {
        decisions: decisions.clone(),
        losses: vec![1.0, 1.0, 1.0],
        fixed_costs: fixed.clone(),
    };
    let floor = CutLedger::new(2, 2);
    assert_eq!(select_informed(&b, &floor).unwrap(), 1);
    let mut constant = CutLedger::new(2, 2);
    for r in 0..2 {
        constant
            .add_cut(Cut {
                scenario: r,
                coeffs: vec![0.0, 0.0],
                constant: 7.0,
            })
            .unwrap();
    }
    assert_eq!(select_informed(&b, &constant).unwrap(), select_greedy(&batch(fixed)).unwrap());
    assert!(select_informed(&b, &CutLedger::new(2, 3)).is_err());
}

proptest! {
    #[test]
    fn adding_cuts_never_lowers_estimates(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ledger = random_ledger(&mut rng, 3, 4, 5);
        let d: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let f = vec![0.0; 4];
        let before = ledger.approx_losses(&d, &f).unwrap();
        ledger.add_cut(Cut { scenario: rng.gen_range(0..3), coeffs: (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect(), constant: rng.gen_range(-5.0..5.0) }).unwrap();
        let after = ledger.approx_losses(&d, &f).unwrap();
        for (a, b) in after.iter().zip(&before) {
            prop_assert!(a >= b);
        }
        // a common shift leaves the informed choice unchanged
        let shifted: Vec<f64> = f.iter().map(|v| v + 12.5).collect();
        let base = RolloutBatch { decisions: d.clone(), losses: vec![1.0; 4], fixed_costs: f };
        let moved = RolloutBatch { decisions: d, losses: vec![1.0; 4], fixed_costs: shifted };
        prop_assert_eq!(select_informed(&base, &ledger).unwrap(), select_informed(&moved, &ledger).unwrap());
    }
}

fn tiny_imp(seed: u64) -> ImpInstance {
    let params = CostParams {
        mean_min: 2.0,
        mean_max: 6.0,
        ..CostParams::default()
    };
    generate_instance(seed, 4, 3, 3, &params).unwrap()
}

fn random_policy<E: Env>(env: &E, seed: u64) -> Policy {
    let arch = Architecture::imp(env.obs_dim(), env.n_actions());
    Policy::new(PolicyNet::random(arch, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap())
}

#[test]
fn greedy_rollouts_repeat_and_stay_feasible() {
    let inst = tiny_imp(5);
    let mut env = ImpEnv::new(vec![inst.clone()], 16).unwrap();
    let mut policy = random_policy(&env, 6);
    let cfg = SurrogateConfig {
        batch_size: 8,
        ..SurrogateConfig::default()
    };
    let b = surrogate_step(&mut policy, &mut env, &cfg, 0, ActMode::Greedy).unwrap();
    assert!(b.decisions.iter().all(|d| *d == b.decisions[0]));
    let b = surrogate_step(&mut policy, &mut env, &cfg, 1, ActMode::Sample).unwrap();
    let s = inst.n_schedules();
    for col in &b.decisions {
        let chosen: Vec<usize> = (0..s).filter(|&j| col[j] == 1.0).collect();
        assert_eq!(chosen.len(), 1);
        assert!(col[..s].iter().all(|&u| u == 0.0 || u == 1.0));
        for t in 0..inst.horizon {
            if !inst.orders_on(chosen[0], t) {
                assert_eq!(col[s + t], 0.0);
            }
        }
    }
    // mismatched action space
    let mut other = ImpEnv::with_capacity(vec![inst], 16, 99).unwrap();
    assert!(surrogate_step(&mut policy, &mut other, &cfg, 0, ActMode::Sample).is_err());
}

#[test]
fn closed_gate_reproduces_baseline_traces() {
    let inst = tiny_imp(7);
    let base = run_benders(&inst, 1e-6, None).unwrap();
    let env = ImpEnv::new(vec![inst.clone()], 16).unwrap();
    let mut prop = PolicyProposer::new(random_policy(&env, 8), env).unwrap();
    let cfg = SurrogateConfig {
        gamma: 0.0,
        seed: 3,
        ..SurrogateConfig::default()
    };
    let gated = run_benders(&inst, 1e-6, Some(SurrogateHook { config: &cfg, proposer: &mut prop })).unwrap();
    assert!(base.trace.same_progress(&gated.trace));
    assert_eq!(prop.calls(), 0);

    let params = RrParams {
        n_features: 6,
        ..RrParams::default()
    };
    let data = generate_rr_data_with(9, &params).unwrap();
    let base = run_l0_cutplane(&data, 0.1, 1e-6, None).unwrap();
    let env = RrEnv::new(std::slice::from_ref(&data), 0.1).unwrap();
    let arch = Architecture::rr(env.obs_dim(), env.n_actions());
    let policy = Policy::new(PolicyNet::random(arch, &mut ChaCha8Rng::seed_from_u64(10)).unwrap());
    let mut prop = PolicyProposer::new(policy, env).unwrap();
    let gated = run_l0_cutplane(&data, 0.1, 1e-6, Some(SurrogateHook { config: &cfg, proposer: &mut prop })).unwrap();
    assert!(base.outcome.trace.same_progress(&gated.outcome.trace));
}

#[test]
fn untrained_surrogate_keeps_optimality() {
    for seed in 0..4 {
        let inst = tiny_imp(20 + seed);
        let oracle = solve_extensive(&inst, 0.0).unwrap().0;
        for selection in [Selection::Greedy, Selection::Weighted, Selection::Informed] {
            let env = ImpEnv::new(vec![inst.clone()], 16).unwrap();
            let mut prop = PolicyProposer::new(random_policy(&env, seed), env).unwrap();
            let cfg = SurrogateConfig {
                gamma: 0.75,
                batch_size: 8,
                selection,
                seed,
                ..SurrogateConfig::default()
            };
            let out = run_benders(&inst, 1e-7, Some(SurrogateHook { config: &cfg, proposer: &mut prop })).unwrap();
            assert!(out.converged());
            assert!((out.objective - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()), "{} vs {oracle}", out.objective);
            // the lower bound only moves on exact iterations
            for w in out.trace.records.windows(2) {
                if w[1].used_surrogate {
                    assert_eq!(w[1].lower_bound.to_bits(), w[0].lower_bound.to_bits());
                }
            }
        }
    }
    let params = RrParams {
        n_features: 7,
        ..RrParams::default()
    };
    for seed in 0..4 {
        let data = generate_rr_data_with(40 + seed, &params).unwrap();
        let oracle = enumerate_best_subset(&data, 0.1).unwrap();
        let env = RrEnv::new(std::slice::from_ref(&data), 0.1).unwrap();
        let arch = Architecture::rr(env.obs_dim(), env.n_actions());
        let policy = Policy::new(PolicyNet::random(arch, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap());
        let mut prop = PolicyProposer::new(policy, env).unwrap();
        let cfg = SurrogateConfig {
            gamma: 0.5,
            batch_size: 8,
            selection: Selection::Weighted,
            seed,
            ..SurrogateConfig::default()
        };
        let run = run_l0_cutplane(&data, 0.1, 1e-6, Some(SurrogateHook { config: &cfg, proposer: &mut prop })).unwrap();
        let want = oracle.objective(0.1);
        assert!((run.objective() - want).abs() <= 1e-6 * want);
        assert_eq!(run.model.support, oracle.support);
    }
}

/// Always offers the same two columns: cheap by rollout loss, expensive by cuts.
struct Crafted;

impl Proposer for Crafted {
    fn propose(&mut self, ledger: &CutLedger, _config: &SurrogateConfig) -> Result<RolloutBatch> {
        let n = ledger.dim();
        let mut a = vec![0.0; n];
        a[0] = 1.0;
        let mut b = vec![0.0; n];
        b[1 % n] = 1.0;
        Ok(RolloutBatch {
            decisions: vec![a, b],
            losses: vec![1.0, 2.0],
            fixed_costs: vec![50.0, 0.0],
        })
    }
}

#[test]
fn greedy_and_informed_pick_differently() {
    let params = RrParams {
        n_features: 5,
        ..RrParams::default()
    };
    let data = generate_rr_data_with(50, &params).unwrap();
    let mut picks = Vec::new();
    for selection in [Selection::Greedy, Selection::Informed] {
        let cfg = SurrogateConfig {
            gamma: 1.0,
            selection,
            seed: 1,
            ..SurrogateConfig::default()
        };
        let run = run_l0_cutplane(&data, 0.1, 1e-6, Some(SurrogateHook { config: &cfg, proposer: &mut Crafted })).unwrap();
        picks.push(run.outcome.surrogate_picks[0]);
    }
    assert_eq!(picks, vec![0, 1]);
}
