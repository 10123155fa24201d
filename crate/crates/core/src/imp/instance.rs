//! Synthetic inventory-management instances.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// An ordering pattern over the horizon and its fixed cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub days: Vec<bool>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpInstance {
    pub horizon: usize,
    pub schedules: Vec<Schedule>,
    pub holding: f64,
    pub emergency: f64,
    pub overfill: f64,
    pub capacity: u32,
    pub initial: u32,
    /// `demand[r][t]`.
    pub demand: Vec<Vec<u32>>,
    pub forecast_mean: Vec<f64>,
    pub forecast_std: Vec<f64>,
}

impl ImpInstance {
    pub fn n_scenarios(&self) -> usize {
        self.demand.len()
    }

    pub fn n_schedules(&self) -> usize {
        self.schedules.len()
    }

    /// Master decision length `|S| + T`.
    pub fn dim(&self) -> usize {
        self.schedules.len() + self.horizon
    }

    pub fn orders_on(&self, schedule: usize, day: usize) -> bool {
        self.schedules[schedule].days[day]
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.horizon;
        if t == 0 {
            return Err(Error::input("horizon must be at least one day"));
        }
        if self.schedules.is_empty() {
            return Err(Error::input("instance has no schedules"));
        }
        for (s, sch) in self.schedules.iter().enumerate() {
            if sch.days.len() != t {
                return Err(Error::input(format!("schedule {s} covers {} days, horizon is {t}", sch.days.len())));
            }
            if !sch.days.iter().any(|&d| d) {
                return Err(Error::input(format!("schedule {s} never orders")));
            }
            if !(sch.cost >= 0.0 && sch.cost.is_finite()) {
                return Err(Error::input(format!("schedule {s} has invalid cost {}", sch.cost)));
            }
        }
        for (name, v) in [("holding", self.holding), ("emergency", self.emergency), ("overfill", self.overfill)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::input(format!("{name} cost must be finite and >= 0, got {v}")));
            }
        }
        if self.initial > self.capacity {
            return Err(Error::input(format!(
                "starting inventory {} exceeds capacity {}",
                self.initial, self.capacity
            )));
        }
        if self.demand.is_empty() {
            return Err(Error::input("instance has no scenarios"));
        }
        if let Some(r) = self.demand.iter().position(|d| d.len() != t) {
            return Err(Error::input(format!("scenario {r} demand length differs from horizon {t}")));
        }
        if self.forecast_mean.len() != t || self.forecast_std.len() != t {
            return Err(Error::input("forecast vectors must match the horizon"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub holding: f64,
    pub emergency: f64,
    pub overfill: f64,
    pub fixed_cost_min: f64,
    pub fixed_cost_max: f64,
    pub mean_min: f64,
    pub mean_max: f64,
    /// `σ_t = std_ratio · μ_t`.
    pub std_ratio: f64,
    /// `m = ceil(capacity_factor · max_t μ_t)`.
    pub capacity_factor: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            holding: 1.0,
            emergency: 20.0,
            overfill: 4.0,
            fixed_cost_min: 10.0,
            fixed_cost_max: 60.0,
            mean_min: 5.0,
            mean_max: 30.0,
            std_ratio: 0.2,
            capacity_factor: 3.0,
        }
    }
}

impl CostParams {
    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if ![self.holding, self.emergency, self.overfill, self.std_ratio].into_iter().all(ok) {
            return Err(Error::input("cost parameters must be finite and nonnegative"));
        }
        if !(ok(self.fixed_cost_min) && self.fixed_cost_min <= self.fixed_cost_max && self.fixed_cost_max.is_finite()) {
            return Err(Error::input("fixed cost range must satisfy 0 <= min <= max"));
        }
        if !(ok(self.mean_min) && self.mean_min <= self.mean_max && self.mean_max.is_finite()) {
            return Err(Error::input("demand mean range must satisfy 0 <= min <= max"));
        }
        if !(self.capacity_factor > 0.0 && self.capacity_factor.is_finite()) {
            return Err(Error::input("capacity factor must be positive"));
        }
        Ok(())
    }
}

fn pattern(period: usize, mask: u32, horizon: usize) -> Vec<bool> {
    (0..horizon).map(|t| (mask >> (t % period)) & 1 == 1).collect()
}

/// Every distinct periodic ordering pattern (period 1..=7) that orders at
/// least once within the horizon.
pub fn distinct_patterns(horizon: usize) -> Vec<Vec<bool>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in 1..=7usize {
        for mask in 1..(1u32 << p) {
            let days = pattern(p, mask, horizon);
            if days.iter().any(|&d| d) && seen.insert(days.clone()) {
                out.push(days);
            }
        }
    }
    out
}

pub fn generate_instance(
    seed: u64,
    horizon: usize,
    scenarios: usize,
    n_schedules: usize,
    params: &CostParams,
) -> Result<ImpInstance> {
    if horizon < 2 {
        return Err(Error::input(format!("horizon must be at least 2, got {horizon}")));
    }
    if scenarios == 0 || n_schedules == 0 {
        return Err(Error::input("need at least one scenario and one schedule"));
    }
    params.validate()?;
    let available = distinct_patterns(horizon).len();
    if n_schedules > available {
        return Err(Error::input(format!(
            "{n_schedules} schedules requested but only {available} distinct patterns exist for horizon {horizon}"
        )));
    }

    let mut rng = stream(seed, Stream::Data);
    let forecast_mean: Vec<f64> = (0..horizon)
        .map(|_| {
            if params.mean_max > params.mean_min {
                rng.gen_range(params.mean_min..=params.mean_max)
            } else {
                params.mean_min
            }
        })
        .collect();
    let forecast_std: Vec<f64> = forecast_mean.iter().map(|m| params.std_ratio * m).collect();
    let max_mean = forecast_mean.iter().copied().fold(0.0, f64::max);
    let capacity = (params.capacity_factor * max_mean).ceil().max(1.0) as u32;

    let mut seen = HashSet::new();
    let mut schedules = Vec::with_capacity(n_schedules);
    while schedules.len() < n_schedules {
        let period = rng.gen_range(1..=7usize);
        let mask = rng.gen_range(1..(1u32 << period));
        let days = pattern(period, mask, horizon);
        if !days.iter().any(|&d| d) || !seen.insert(days.clone()) {
            continue;
        }
        let cost = if params.fixed_cost_max > params.fixed_cost_min {
            rng.gen_range(params.fixed_cost_min..=params.fixed_cost_max)
        } else {
            params.fixed_cost_min
        };
        schedules.push(Schedule { days, cost });
    }

    let initial = rng.gen_range(0..=capacity / 3);
    let demand = (0..scenarios)
        .map(|_| {
            (0..horizon)
                .map(|t| {
                    let eps: f64 = rng.sample(StandardNormal);
                    (forecast_mean[t] + forecast_std[t] * eps).round().max(0.0) as u32
                })
                .collect()
        })
        .collect();

    let inst = ImpInstance {
        horizon,
        schedules,
        holding: params.holding,
        emergency: params.emergency,
        overfill: params.overfill,
        capacity,
        initial,
        demand,
        forecast_mean,
        forecast_std,
    };
    inst.validate()?;
    Ok(inst)
}
