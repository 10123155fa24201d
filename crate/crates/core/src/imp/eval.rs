//! Direct evaluation of recourse costs by simulating the inventory.
//!
//! For a fixed decision the recourse problem separates day by day: the
//! inventory level after ordering is the order-up-to level on ordering days
//! and the carried stock otherwise, emergency orders cover any shortfall,
//! and the holding space follows `p_0 = L_0`, `p_t = max(a_t, p_{t-1} - a_t)`.
//! The only genuine choice is the day-zero overfill `v_0`, over which the
//! cost is convex piecewise linear with integer breakpoints.

use serde::{Deserialize, Serialize};

use super::{ImpInstance, ImpMasterDecision};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayCost {
    pub holding: f64,
    pub emergency: f64,
    pub overfill: f64,
    /// Stock after ordering, before demand.
    pub level: f64,
    /// Stock carried to the next day.
    pub end_inventory: f64,
}

impl DayCost {
    pub fn total(&self) -> f64 {
        self.holding + self.emergency + self.overfill
    }
}

/// Day-by-day costs with a given day-zero overfill (clamped to its range).
pub fn simulate(instance: &ImpInstance, decision: &ImpMasterDecision, demand: &[u32], overfill0: u32) -> Vec<DayCost> {
    let a = &decision.order_up_to;
    let w0 = instance.orders_on(decision.schedule, 0);
    let v0 = if w0 { overfill0.min(a[0]) } else { 0 };
    let mut out = Vec::with_capacity(instance.horizon);
    let mut carried = 0.0;
    let mut space = 0.0;
    for t in 0..instance.horizon {
        let at = f64::from(a[t]);
        let (level, overfill) = if t == 0 {
            if w0 {
                (at - f64::from(v0), f64::from(v0))
            } else {
                (f64::from(instance.initial), 0.0)
            }
        } else if instance.orders_on(decision.schedule, t) {
            (at, 0.0)
        } else {
            (carried, 0.0)
        };
        space = if t == 0 { level } else { at.max(space - at) };
        let n = f64::from(demand[t]);
        let short = (n - level).max(0.0);
        carried = (level - n).max(0.0);
        out.push(DayCost {
            holding: instance.holding * space,
            emergency: instance.emergency * short,
            overfill: instance.overfill * overfill,
            level,
            end_inventory: carried,
        });
    }
    out
}

/// Optimal recourse cost for one demand path, with the minimising `v_0`.
pub fn recourse_cost_with_overfill(instance: &ImpInstance, decision: &ImpMasterDecision, demand: &[u32]) -> (f64, u32) {
    let w0 = instance.orders_on(decision.schedule, 0);
    let max_v0 = if w0 { decision.order_up_to[0] } else { 0 };
    let mut best = (f64::INFINITY, 0);
    for v0 in 0..=max_v0 {
        let c: f64 = simulate(instance, decision, demand, v0).iter().map(DayCost::total).sum();
        if c < best.0 {
            best = (c, v0);
        }
    }
    best
}

pub fn recourse_cost(instance: &ImpInstance, decision: &ImpMasterDecision, demand: &[u32]) -> f64 {
    recourse_cost_with_overfill(instance, decision, demand).0
}

/// Recourse cost of scenario `r`.
pub fn scenario_cost(instance: &ImpInstance, decision: &ImpMasterDecision, r: usize) -> f64 {
    recourse_cost(instance, decision, &instance.demand[r])
}

/// Fixed cost plus average recourse cost over all scenarios.
pub fn expected_cost(instance: &ImpInstance, decision: &ImpMasterDecision) -> f64 {
    let r = instance.n_scenarios();
    let total: f64 = (0..r).map(|i| scenario_cost(instance, decision, i)).sum();
    decision.fixed_cost(instance) + total / r as f64
}
