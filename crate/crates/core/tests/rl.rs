//! Actor-critic building blocks against analytic and brute-force oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smp_core::imp::{generate_instance, CostParams, ImpMasterDecision, Subproblem};
use smp_core::l0::{fit_subset, generate_rr_data_with, rr_metrics, RegressionData, RrParams};
use smp_core::rl::{
    clipped_objective, gae, ppo_update, ActMode, Architecture, Categorical, DecisionEnv, Env, ImpEnv,
    Optimizer, OptimizerKind, Policy, PolicyNet, PpoConfig, RolloutBuffer, RrEnv, RunningNorm, Step,
    train, TrainConfig, Trainer, Transition,
};
use smp_core::Result;

fn toy_arch() -> Architecture {
    Architecture {
        input: 4,
        trunk: vec![5],
        actor: vec![3],
        critic: vec![4],
        n_actions: 3,
    }
}

/// log π(a) + 0.7·V as a scalar test function of the parameters.
fn probe(net: &PolicyNet, obs: &[f64], mask: &[bool], a: usize) -> f64 {
    let f = net.forward(obs).unwrap();
    Categorical::new(&f.logits, mask).unwrap().log_prob(a) + 0.7 * f.value
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut net = PolicyNet::random(toy_arch(), &mut rng).unwrap();
    // larger weights exercise the tanh curvature
    for p in net.params_mut() {
        *p += rng.gen_range(-0.5..0.5);
    }
    let obs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mask = [true, false, true];
    let a = 2;
    let f = net.forward(&obs).unwrap();
    let dist = Categorical::new(&f.logits, &mask).unwrap();
    let mut grad = vec![0.0; net.n_params()];
    net.backward(&obs, &f, &dist.grad_log_prob(a), 0.7, &mut grad);
    for i in 0..net.n_params() {
        let h = 1e-6;
        let mut up = net.clone();
        up.params_mut()[i] += h;
        let mut dn = net.clone();
        dn.params_mut()[i] -= h;
        let fd = (probe(&up, &obs, &mask, a) - probe(&dn, &obs, &mask, a)) / (2.0 * h);
        assert!(
            (fd - grad[i]).abs() <= 1e-4 * fd.abs().max(grad[i].abs()).max(1e-6),
            "param {i}: analytic {} vs numeric {fd}",
            grad[i]
        );
    }
}

#[test]
fn entropy_gradient_matches_finite_differences() {
    let logits = [0.3, -1.2, 0.8, 0.1];
    let mask = [true, true, false, true];
    let g = Categorical::new(&logits, &mask).unwrap().grad_entropy();
    for j in 0..4 {
        let h = 1e-6;
        let mut up = logits;
        up[j] += h;
        let mut dn = logits;
        dn[j] -= h;
        let fd = (Categorical::new(&up, &mask).unwrap().entropy() - Categorical::new(&dn, &mask).unwrap().entropy())
            / (2.0 * h);
        assert!((fd - g[j]).abs() <= 1e-8);
    }
}

#[test]
fn masking_and_symmetry() {
    let net = PolicyNet::zeros(toy_arch()).unwrap();
    let f = net.forward(&[0.3, 0.1, -2.0, 5.0]).unwrap();
    let d = Categorical::new(&f.logits, &[true, false, true]).unwrap();
    let p = d.probs();
    assert_eq!(p[1], 0.0);
    assert!((p[0] - 0.5).abs() < 1e-15 && (p[2] - 0.5).abs() < 1e-15);

    let only = Categorical::new(&[5.0, -3.0, 9.0], &[false, true, false]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    assert!((0..1000).all(|_| only.sample(&mut rng) == 1));
    assert_eq!(only.probs()[1], 1.0);
    assert_eq!(only.grad_log_prob(1), vec![0.0, 0.0, 0.0]);
    assert!(Categorical::new(&[1.0, 2.0], &[false, false]).is_err());
    assert!(net.forward(&[1.0]).is_err());
}

fn naive_advantages(r: &[f64], v: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    let n = r.len();
    let delta: Vec<f64> = (0..n)
        .map(|t| r[t] + gamma * if t + 1 < n { v[t + 1] } else { 0.0 } - v[t])
        .collect();
    (0..n)
        .map(|t| (t..n).map(|l| (gamma * lambda).powi((l - t) as i32) * delta[l]).sum())
        .collect()
}

#[test]
fn gae_matches_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.gen_range(1..40);
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let (gamma, lambda) = (rng.gen_range(0.5..1.0), rng.gen_range(0.0..1.0));
        let (adv, ret) = gae(&r, &v, 0.0, gamma, lambda);
        for (t, want) in naive_advantages(&r, &v, gamma, lambda).iter().enumerate() {
            assert!((adv[t] - want).abs() <= 1e-10);
            assert!((ret[t] - adv[t] - v[t]).abs() <= 1e-12);
        }
    }
    // λ = 0 gives one-step residuals, λ = 1 with zero values the reward-to-go
    let r = [1.0, 2.0, 3.0];
    let v = [0.5, -0.5, 2.0];
    let (adv, _) = gae(&r, &v, 0.0, 0.9, 0.0);
    assert!((adv[0] - (1.0 + 0.9 * -0.5 - 0.5)).abs() < 1e-15);
    let (adv, _) = gae(&r, &[0.0; 3], 0.0, 0.9, 1.0);
    assert!((adv[0] - (1.0 + 0.9 * 2.0 + 0.81 * 3.0)).abs() < 1e-12);
}

#[test]
fn clipped_objective_cases() {
    assert_eq!(clipped_objective(1.0, 2.5, 0.2), (2.5, 2.5));
    // saturated on the side the advantage pushes towards
    assert_eq!(clipped_objective(1.5, 1.0, 0.2).1, 0.0);
    assert_eq!(clipped_objective(0.5, -1.0, 0.2).1, 0.0);
    // the pessimistic branch keeps its gradient
    assert_eq!(clipped_objective(0.5, 1.0, 0.2), (0.5, 1.0));
}

#[test]
fn normaliser_floors_variance() {
    let mut n = RunningNorm::new(2);
    for i in 0..100 {
        n.update(&[3.0, i as f64]);
    }
    let z = n.normalize(&[3.0 + 1e-3, 49.5]);
    assert!(z[0].is_finite() && z[0] <= 10.0);
    assert!(z[1].abs() < 1e-12);
    assert!((n.var[1] - 833.25).abs() < 1e-9);
}

/// One step, two arms paying 1 and 0.
struct Bandit {
    done: bool,
}

impl Env for Bandit {
    fn obs_dim(&self) -> usize {
        1
    }
    fn n_actions(&self) -> usize {
        2
    }
    fn reset(&mut self, _rng: &mut ChaCha8Rng) -> Result<()> {
        self.done = false;
        Ok(())
    }
    fn observation(&self) -> Vec<f64> {
        vec![1.0]
    }
    fn mask(&self) -> Vec<bool> {
        vec![!self.done; 2]
    }
    fn step(&mut self, action: usize) -> Result<Step> {
        self.done = true;
        Ok(Step {
            reward: if action == 0 { 1.0 } else { 0.0 },
            done: true,
        })
    }
}

#[test]
fn bandit_learns_the_better_arm() {
    let config = TrainConfig {
        total_steps: 200 * 64,
        rollout_steps: 64,
        seed: 4,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(config, Architecture::imp(1, 2)).unwrap();
    let mut env = Bandit { done: true };
    let mut reached = None;
    for u in 1..=200 {
        trainer.update(&mut env).unwrap();
        let f = trainer.policy.net.forward(&trainer.policy.norm.normalize(&[1.0])).unwrap();
        let p = Categorical::new(&f.logits, &[true, true]).unwrap().probs()[0];
        if p > 0.9 {
            reached = Some(u);
            break;
        }
    }
    assert!(reached.is_some(), "greedy arm probability stayed below 0.9");
}

#[test]
fn update_aborts_on_non_finite_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut net = PolicyNet::random(Architecture::imp(1, 2), &mut rng).unwrap();
    let mut opt = Optimizer::new(OptimizerKind::Adam, net.n_params());
    let mut buffer = RolloutBuffer::default();
    buffer.push_episode(vec![Transition {
        obs: vec![1.0],
        mask: vec![true, true],
        action: 0,
        log_prob: -0.7,
        value: 0.0,
        reward: f64::NAN,
    }]);
    let err = ppo_update(&mut net, &mut opt, &buffer, &PpoConfig::default(), &mut rng);
    assert!(matches!(err, Err(smp_core::Error::Numerical(_))));
}

#[test]
fn fixed_seed_training_is_reproducible_and_resumable() {
    let config = TrainConfig {
        total_steps: 6 * 64,
        rollout_steps: 64,
        seed: 9,
        ..TrainConfig::default()
    };
    let mut env = Bandit { done: true };
    let mut a = Trainer::new(config.clone(), Architecture::imp(1, 2)).unwrap();
    a.train(&mut env, None).unwrap();
    let mut b = Trainer::new(config.clone(), Architecture::imp(1, 2)).unwrap();
    for _ in 0..3 {
        b.update(&mut env).unwrap();
    }
    let mut resumed = Trainer::from_json(&b.to_json().unwrap()).unwrap();
    resumed.train(&mut env, None).unwrap();
    assert_eq!(a.log, resumed.log);
    assert_eq!(a.policy, resumed.policy);
    let json = a.policy.to_json().unwrap();
    assert_eq!(Policy::from_json(&json).unwrap(), a.policy);
}

fn tiny_params() -> CostParams {
    CostParams {
        mean_min: 2.0,
        mean_max: 6.0,
        ..CostParams::default()
    }
}

#[test]
fn imp_episode_return_matches_subproblems() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..20 {
        let inst = generate_instance(seed, 4, 3, 3, &tiny_params()).unwrap();
        let mut env = ImpEnv::new(vec![inst.clone()], 16).unwrap();
        let s = rng.gen_range(0..inst.n_schedules());
        let levels: Vec<u32> = (0..4)
            .map(|t| if inst.orders_on(s, t) { rng.gen_range(0..=inst.capacity) } else { 0 })
            .collect();
        let dec = ImpMasterDecision::new(&inst, s, levels.clone()).unwrap();
        for r in 0..inst.n_scenarios() {
            env.reset_with(0, vec![r]).unwrap();
            let mut ret = env.step(s).unwrap().reward;
            for (t, &a) in levels.iter().enumerate() {
                let mask = env.mask();
                let action = inst.n_schedules() + a as usize;
                assert!(mask[action]);
                assert_eq!(mask.iter().filter(|&&m| m).count(), if inst.orders_on(s, t) { inst.capacity as usize + 1 } else { 1 });
                let step = env.step(action).unwrap();
                ret += step.reward;
                assert_eq!(step.done, t == 3);
            }
            let sp = Subproblem::new(&inst, r).solve(&dec.column(&inst)).unwrap();
            let want = dec.fixed_cost(&inst) + sp.primal.objective;
            assert!((-ret - want).abs() <= 1e-6 * (1.0 + want), "seed {seed} r {r}: {} vs {want}", -ret);
            assert_eq!(env.decision().unwrap(), dec);
        }
    }
}

#[test]
fn imp_rollout_columns_are_master_feasible() {
    let inst = generate_instance(3, 4, 3, 3, &tiny_params()).unwrap();
    let mut env = ImpEnv::new(vec![inst.clone()], 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let arch = Architecture::imp(env.obs_dim(), env.n_actions());
    let mut policy = Policy::new(PolicyNet::random(arch, &mut rng).unwrap());
    for _ in 0..50 {
        env.reset(&mut rng).unwrap();
        let (ret, steps) = policy.play(&mut env, ActMode::Sample, &mut rng, false).unwrap();
        assert_eq!(steps.len(), 5);
        let dec = env.decision().unwrap();
        dec.validate(&inst).unwrap();
        let col = env.column().unwrap();
        assert_eq!(col[..3].iter().filter(|&&u| u == 1.0).count(), 1);
        assert!(env.rollout_loss(ret) >= env.fixed_cost());
    }
}

#[test]
fn rr_episode_accounting() {
    let params = RrParams {
        n_features: 6,
        ..RrParams::default()
    };
    let data = generate_rr_data_with(12, &params).unwrap();
    let yy: f64 = data.y.iter().map(|v| v * v).sum();

    // λ = 0: the episode may run to the full support and the return telescopes
    let mut env = RrEnv::new(std::slice::from_ref(&data), 0.0).unwrap();
    env.reset_with(0).unwrap();
    let mut ret = 0.0;
    let mut chosen = Vec::new();
    for a in [4, 0, 5, 1, 3, 2] {
        if env.mask().iter().all(|m| !m) {
            break;
        }
        assert!(env.mask()[a]);
        let s = env.step(a).unwrap();
        ret += s.reward;
        chosen.push(a);
        assert!(!env.mask()[a]);
        if s.done {
            break;
        }
    }
    let z = env.model().unwrap().support.clone();
    let loss = fit_subset(&data, &z).unwrap().loss;
    assert!((ret - (yy - loss)).abs() <= 1e-9 * yy);
    assert!((env.rollout_loss(ret) - loss).abs() <= 1e-9 * yy);

    // with a penalty the return is ‖y‖² minus the L0 objective
    let lambda = 50.0;
    let mut env = RrEnv::new(std::slice::from_ref(&data), lambda).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let arch = Architecture::rr(env.obs_dim(), env.n_actions());
    let mut policy = Policy::new(PolicyNet::random(arch, &mut rng).unwrap());
    for _ in 0..20 {
        env.reset(&mut rng).unwrap();
        let (ret, _) = policy.play(&mut env, ActMode::Sample, &mut rng, false).unwrap();
        let m = env.model().unwrap();
        let obj = m.loss + lambda * m.support_size() as f64;
        assert!((yy - ret - obj).abs() <= 1e-9 * yy);
        assert!((env.rollout_loss(ret) - obj).abs() <= 1e-9 * yy);
        assert_eq!(env.fixed_cost(), lambda * m.support_size() as f64);
    }
}

#[test]
fn rr_training_return_is_normalised() {
    let params = RrParams {
        n_features: 7,
        ..RrParams::default()
    };
    let data: Vec<_> = (0..5).map(|k| generate_rr_data_with(40 + k, &params).unwrap()).collect();
    let lambda = 0.1;
    let mut env = RrEnv::new(&data, lambda).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let arch = Architecture::rr(env.obs_dim(), env.n_actions());
    let mut policy = Policy::new(PolicyNet::random(arch, &mut rng).unwrap());
    let knee = 4.0 * 7.0;
    for k in 0..data.len() {
        let full = fit_subset(&data[k], &[true; 7]).unwrap().loss;
        let yy: f64 = data[k].y.iter().map(|v| v * v).sum();
        let squash = |loss: f64| ((loss - full).max(0.0) / lambda / knee).ln_1p();
        for _ in 0..5 {
            env.reset_with(k).unwrap();
            let (_, steps) = policy.play(&mut env, ActMode::Sample, &mut rng, false).unwrap();
            let m = env.model().unwrap();
            let shaped: f64 = steps.iter().map(|t| t.reward).sum();
            let expected = 1.0 - squash(m.loss) / squash(yy) - m.support_size() as f64 / 7.0;
            assert!((shaped - expected).abs() <= 1e-9, "{shaped} vs {expected}");
        }
    }
}

fn mean_greedy_recovery(policy: &Policy, env: &mut RrEnv, data: &[RegressionData]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut total = 0.0;
    for (k, d) in data.iter().enumerate() {
        env.reset_with(k).unwrap();
        policy.clone().play(env, ActMode::Greedy, &mut rng, false).unwrap();
        total += rr_metrics(&env.model().unwrap().beta, d).beta_recovery;
    }
    total / data.len() as f64
}

#[test]
fn trained_rr_policy_halves_random_recovery_error() {
    let params = RrParams::default();
    assert_eq!(params.n_features, 10);
    let train_set: Vec<_> = (0..1000).map(|k| generate_rr_data_with(7000 + k, &params).unwrap()).collect();
    let held_out: Vec<_> = (0..50).map(|k| generate_rr_data_with(97000 + k, &params).unwrap()).collect();
    let mut env = RrEnv::new(&train_set, 0.1).unwrap();
    let mut eval_env = RrEnv::new(&held_out, 0.1).unwrap();
    let arch = Architecture::rr(env.obs_dim(), env.n_actions());
    let random = Policy::new(PolicyNet::random(arch.clone(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap());
    let config = TrainConfig {
        total_steps: 120_000,
        seed: 1,
        ..TrainConfig::default()
    };
    let trainer = train(&mut env, arch, config).unwrap();
    let r = mean_greedy_recovery(&random, &mut eval_env, &held_out);
    let t = mean_greedy_recovery(&trainer.policy, &mut eval_env, &held_out);
    assert!(2.0 * t <= r, "support recovery error: trained {t} vs random {r}");
}

#[test]
fn single_informative_feature_is_found_first() {
    let params = RrParams {
        n_features: 5,
        ..RrParams::default()
    };
    let mut data = generate_rr_data_with(14, &params).unwrap();
    for row in &mut data.x.iter_mut().zip(data.y.iter_mut()) {
        *row.1 = 3.0 * row.0[2];
    }
    let mut env = RrEnv::new(std::slice::from_ref(&data), 0.1).unwrap();
    env.reset_with(0).unwrap();
    let obs = env.observation();
    // full-fit p-values single out the informative column
    let pv = &obs[5..10];
    let best = (0..5).min_by(|&a, &b| pv[a].total_cmp(&pv[b])).unwrap();
    assert_eq!(best, 2);
    let yy: f64 = data.y.iter().map(|v| v * v).sum();
    let s = env.step(2).unwrap();
    assert!((s.reward + 0.1 - yy).abs() <= 1e-8 * yy);
    // nothing left to explain, so the next feature ends the episode unchosen
    let s = env.step(0).unwrap();
    assert!(s.done && s.reward == 0.0);
    assert_eq!(env.model().unwrap().support_size(), 1);
}
