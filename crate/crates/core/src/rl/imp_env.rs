//! Inventory-management episodes: pick a schedule, then an order-up-to
//! level for each day in turn.
//!
//! An episode runs over a subsample of the instance's scenarios at once;
//! rewards are the negated scenario-average costs, so the return equals
//! minus the fixed cost plus the average optimal recourse cost.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::env::{DecisionEnv, Env, Step};
use crate::error::{Error, Result};
use crate::imp::{recourse_cost, simulate, DayCost, ImpInstance, ImpMasterDecision};

/// Scenarios used per episode.
pub const DEFAULT_SUBSAMPLE: usize = 16;

#[derive(Debug, Clone)]
pub struct ImpEnv {
    instances: Vec<ImpInstance>,
    horizon: usize,
    n_schedules: usize,
    max_capacity: u32,
    subsample: usize,
    inst: usize,
    scenarios: Vec<usize>,
    schedule: Option<usize>,
    day: usize,
    levels: Vec<u32>,
    /// Per-scenario costs of the days simulated so far (zero overfill).
    costs: Vec<Vec<DayCost>>,
    done: bool,
}

impl ImpEnv {
    /// All instances must share horizon and schedule count.
    pub fn new(instances: Vec<ImpInstance>, subsample: usize) -> Result<Self> {
        let cap = instances.iter().map(|i| i.capacity).max().unwrap_or(0);
        Self::with_capacity(instances, subsample, cap)
    }

    /// Sizes the order head for levels up to `max_capacity`, so a policy
    /// trained on a family can act on any single member.
    pub fn with_capacity(instances: Vec<ImpInstance>, subsample: usize, max_capacity: u32) -> Result<Self> {
        let first = instances.first().ok_or_else(|| Error::input("no instances given"))?;
        let (horizon, n_schedules) = (first.horizon, first.n_schedules());
        for inst in &instances {
            inst.validate()?;
            if inst.horizon != horizon || inst.n_schedules() != n_schedules {
                return Err(Error::input("instances differ in horizon or schedule count"));
            }
        }
        if subsample == 0 {
            return Err(Error::input("scenario subsample must be at least one"));
        }
        if instances.iter().any(|i| i.capacity > max_capacity) {
            return Err(Error::input(format!("an instance exceeds the order head's capacity {max_capacity}")));
        }
        Ok(Self {
            instances,
            horizon,
            n_schedules,
            max_capacity,
            subsample,
            inst: 0,
            scenarios: Vec::new(),
            schedule: None,
            day: 0,
            levels: Vec::new(),
            costs: Vec::new(),
            done: true,
        })
    }

    pub fn instance(&self) -> &ImpInstance {
        &self.instances[self.inst]
    }

    pub fn n_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn max_capacity(&self) -> u32 {
        self.max_capacity
    }

    pub fn scenarios(&self) -> &[usize] {
        &self.scenarios
    }

    /// Starts an episode on a chosen instance and scenario set.
    pub fn reset_with(&mut self, inst: usize, scenarios: Vec<usize>) -> Result<()> {
        let r = self.instances.get(inst).ok_or_else(|| Error::input("instance index out of range"))?.n_scenarios();
        if scenarios.is_empty() || scenarios.iter().any(|&s| s >= r) {
            return Err(Error::input("scenario subsample is empty or out of range"));
        }
        self.inst = inst;
        self.scenarios = scenarios;
        self.schedule = None;
        self.day = 0;
        self.levels = vec![0; self.horizon];
        self.costs = vec![Vec::new(); self.scenarios.len()];
        self.done = false;
        Ok(())
    }

    /// Decision of the current (finished) episode.
    pub fn decision(&self) -> Result<ImpMasterDecision> {
        let schedule = self.schedule.ok_or_else(|| Error::input("no schedule chosen yet"))?;
        Ok(ImpMasterDecision {
            schedule,
            order_up_to: self.levels.clone(),
        })
    }

    fn level_action(&self, level: u32) -> usize {
        self.n_schedules + level as usize
    }

    /// Mean demand to cover from `day` until the next ordering day, and its
    /// standard deviation.
    fn cover(&self, schedule: usize, day: usize) -> (f64, f64) {
        let inst = self.instance();
        let mut mean = 0.0;
        let mut var = 0.0;
        for t in day..self.horizon {
            if t > day && inst.orders_on(schedule, t) {
                break;
            }
            mean += inst.forecast_mean[t];
            var += inst.forecast_std[t].powi(2);
        }
        (mean, var.sqrt())
    }
}

impl Env for ImpEnv {
    fn obs_dim(&self) -> usize {
        let (t, s) = (self.horizon, self.n_schedules);
        8 + 6 * t + s * (t + 1)
    }

    fn n_actions(&self) -> usize {
        self.n_schedules + self.max_capacity as usize + 1
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        let inst = rng.gen_range(0..self.instances.len());
        let r = self.instances[inst].n_scenarios();
        let mut picked = sample(rng, r, self.subsample.min(r)).into_vec();
        picked.sort_unstable();
        self.reset_with(inst, picked)
    }

    fn observation(&self) -> Vec<f64> {
        let inst = self.instance();
        let t_len = self.horizon;
        let m = f64::from(inst.capacity.max(1));
        let mut obs = Vec::with_capacity(self.obs_dim());
        obs.push(f64::from(u8::from(self.schedule.is_none())));
        obs.extend((0..t_len).map(|t| f64::from(u8::from(self.schedule.is_some() && t == self.day))));
        let carried = if self.day == 0 {
            f64::from(inst.initial)
        } else {
            self.costs.iter().map(|c| c[self.day - 1].end_inventory).sum::<f64>() / self.costs.len() as f64
        };
        obs.push(carried / m);
        obs.extend([
            inst.holding / 10.0,
            inst.emergency / 100.0,
            inst.overfill / 10.0,
            m / f64::from(self.max_capacity.max(1)),
        ]);
        obs.extend(inst.forecast_mean.iter().map(|v| v / m));
        obs.extend(inst.forecast_std.iter().map(|v| v / m));
        obs.extend((0..t_len).map(|t| self.schedule.map_or(0.0, |s| f64::from(u8::from(inst.orders_on(s, t))))));
        // future entries stay zero
        obs.extend((0..t_len).map(|t| if t < self.day { f64::from(self.levels[t]) / m } else { 0.0 }));
        obs.extend((0..t_len).map(|t| {
            if t < self.day {
                let n = self.costs.len() as f64;
                self.costs.iter().zip(&self.scenarios).map(|(c, &r)| c[t].level - f64::from(inst.demand[r][t])).sum::<f64>()
                    / n
                    / m
            } else {
                0.0
            }
        }));
        for s in &inst.schedules {
            obs.extend(s.days.iter().map(|&d| f64::from(u8::from(d))));
        }
        obs.extend(inst.schedules.iter().map(|s| s.cost / 100.0));
        let (cm, cs) = match self.schedule {
            Some(s) if !self.done => self.cover(s, self.day),
            _ => (0.0, 0.0),
        };
        obs.extend([cm / m, cs / m]);
        debug_assert_eq!(obs.len(), self.obs_dim());
        obs
    }

    fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_actions()];
        if self.done {
            return mask;
        }
        match self.schedule {
            None => mask[..self.n_schedules].iter_mut().for_each(|v| *v = true),
            Some(s) => {
                let inst = self.instance();
                if inst.orders_on(s, self.day) {
                    for level in 0..=inst.capacity {
                        mask[self.level_action(level)] = true;
                    }
                } else {
                    mask[self.level_action(0)] = true;
                }
            }
        }
        mask
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        if self.done {
            return Err(Error::Internal("step called on a finished episode".into()));
        }
        if !self.mask().get(action).copied().unwrap_or(false) {
            return Err(Error::Internal(format!("action {action} is masked")));
        }
        let Some(schedule) = self.schedule else {
            self.schedule = Some(action);
            return Ok(Step {
                reward: -self.instance().schedules[action].cost,
                done: false,
            });
        };
        let t = self.day;
        self.levels[t] = (action - self.n_schedules) as u32;
        let inst = &self.instances[self.inst];
        let decision = ImpMasterDecision {
            schedule,
            order_up_to: self.levels.clone(),
        };
        let mut day_cost = 0.0;
        for (costs, &r) in self.costs.iter_mut().zip(&self.scenarios) {
            let c = simulate(inst, &decision, &inst.demand[r], 0)[t];
            day_cost += c.total();
            costs.push(c);
        }
        let n = self.scenarios.len() as f64;
        let mut reward = -day_cost / n;
        self.day += 1;
        if self.day == self.horizon {
            self.done = true;
            // the day-zero overfill is chosen with hindsight per scenario
            let zero_overfill: f64 = self.costs.iter().flatten().map(DayCost::total).sum();
            let optimal: f64 = self.scenarios.iter().map(|&r| recourse_cost(inst, &decision, &inst.demand[r])).sum();
            reward += (zero_overfill - optimal) / n;
        }
        Ok(Step {
            reward,
            done: self.done,
        })
    }

    fn training_reward(&self, raw: f64) -> f64 {
        let inst = self.instance();
        raw / (self.horizon as f64 * f64::from(inst.capacity.max(1)) * inst.holding.max(1.0))
    }
}

impl DecisionEnv for ImpEnv {
    fn column(&self) -> Result<Vec<f64>> {
        Ok(self.decision()?.column(self.instance()))
    }

    fn fixed_cost(&self) -> f64 {
        self.schedule.map_or(0.0, |s| self.instance().schedules[s].cost)
    }

    fn rollout_loss(&self, episode_return: f64) -> f64 {
        -episode_return
    }
}
