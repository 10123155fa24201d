//! Master decisions: a schedule choice plus order-up-to levels.

use serde::{Deserialize, Serialize};

use super::ImpInstance;
use crate::error::{Error, Result};

const COLUMN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImpMasterDecision {
    /// Index of the chosen schedule (the one-hot `u`).
    pub schedule: usize,
    /// Order-up-to level `a_t` for each day.
    pub order_up_to: Vec<u32>,
}

impl ImpMasterDecision {
    pub fn new(instance: &ImpInstance, schedule: usize, order_up_to: Vec<u32>) -> Result<Self> {
        let d = Self { schedule, order_up_to };
        d.validate(instance)?;
        Ok(d)
    }

    pub fn validate(&self, instance: &ImpInstance) -> Result<()> {
        if self.schedule >= instance.n_schedules() {
            return Err(Error::input(format!(
                "schedule {} out of range 0..{}",
                self.schedule,
                instance.n_schedules()
            )));
        }
        if self.order_up_to.len() != instance.horizon {
            return Err(Error::input(format!(
                "{} order-up-to levels for horizon {}",
                self.order_up_to.len(),
                instance.horizon
            )));
        }
        for (t, &a) in self.order_up_to.iter().enumerate() {
            if a > instance.capacity {
                return Err(Error::input(format!("day {t}: level {a} exceeds capacity {}", instance.capacity)));
            }
            if a > 0 && !instance.orders_on(self.schedule, t) {
                return Err(Error::input(format!("day {t}: level {a} on a day without an order")));
            }
        }
        Ok(())
    }

    pub fn fixed_cost(&self, instance: &ImpInstance) -> f64 {
        instance.schedules[self.schedule].cost
    }

    /// Column `(u_1..u_|S|, a_1..a_T)`.
    pub fn column(&self, instance: &ImpInstance) -> Vec<f64> {
        let s = instance.n_schedules();
        let mut col = vec![0.0; s + instance.horizon];
        col[self.schedule] = 1.0;
        for (c, &a) in col[s..].iter_mut().zip(&self.order_up_to) {
            *c = f64::from(a);
        }
        col
    }

    pub fn from_column(instance: &ImpInstance, column: &[f64]) -> Result<Self> {
        let s = instance.n_schedules();
        if column.len() != instance.dim() {
            return Err(Error::input(format!(
                "decision column has length {}, expected {}",
                column.len(),
                instance.dim()
            )));
        }
        let mut schedule = None;
        for (i, &u) in column[..s].iter().enumerate() {
            if (u - 1.0).abs() <= COLUMN_TOL {
                if schedule.replace(i).is_some() {
                    return Err(Error::input("more than one schedule selected"));
                }
            } else if u.abs() > COLUMN_TOL {
                return Err(Error::input(format!("schedule indicator {i} is {u}, not binary")));
            }
        }
        let schedule = schedule.ok_or_else(|| Error::input("no schedule selected"))?;
        let mut order_up_to = Vec::with_capacity(instance.horizon);
        for &a in &column[s..] {
            let r = a.round();
            if (a - r).abs() > COLUMN_TOL || r < 0.0 {
                return Err(Error::input(format!("order-up-to level {a} is not a nonnegative integer")));
            }
            order_up_to.push(r as u32);
        }
        Self::new(instance, schedule, order_up_to)
    }
}
