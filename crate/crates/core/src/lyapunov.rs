//! Energy-deficit virtual queue and the drift-plus-penalty objective.
//!
//! One system-wide queue advances once per slot. Its backlog accumulates
//! the energy spent above the per-slot threshold and is clamped at zero, so
//! keeping `Q^T / T -> 0` enforces the long-term average energy bound.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::cost::CostBreakdown;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    /// Delay weight V.
    pub v: f64,
    /// Per-slot energy threshold E_th in joules.
    pub e_th: f64,
}

impl PenaltyConfig {
    pub fn new(v: f64, e_th: f64) -> Result<Self> {
        let cfg = Self { v, e_th };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v.is_finite() && self.v > 0.0) {
            return Err(Error::Config(format!("V must be > 0, got {}", self.v)));
        }
        if !(self.e_th.is_finite() && self.e_th > 0.0) {
            return Err(Error::Config(format!(
                "E_th must be > 0, got {}",
                self.e_th
            )));
        }
        Ok(())
    }

    /// `V * delay + Q * energy` for raw totals.
    pub fn objective_of(&self, backlog: f64, delay: f64, energy: f64) -> f64 {
        self.v * delay + backlog * energy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    pub backlog: f64,
    pub slot: u64,
    history: Option<VecDeque<f64>>,
    history_cap: usize,
}

impl Default for QueueState {
    fn default() -> Self {
        Self::new()
    }
}

impl QueueState {
    /// Empty queue at slot 0.
    pub fn new() -> Self {
        Self {
            backlog: 0.0,
            slot: 0,
            history: None,
            history_cap: 0,
        }
    }

    /// Empty queue that keeps the last `cap` backlogs for diagnostics.
    pub fn with_history(cap: usize) -> Self {
        Self {
            history: Some(VecDeque::with_capacity(cap.min(4096))),
            history_cap: cap,
            ..Self::new()
        }
    }

    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().flat_map(|h| h.iter().copied())
    }

    /// `Q^T / T`; zero before the first update.
    pub fn stability_ratio(&self) -> f64 {
        if self.slot == 0 {
            0.0
        } else {
            self.backlog / self.slot as f64
        }
    }
}

/// Drift-plus-penalty objective for a candidate decision.
pub fn objective(cfg: &PenaltyConfig, q: &QueueState, cost: &CostBreakdown) -> f64 {
    cfg.objective_of(q.backlog, cost.delay_total, cost.energy_total)
}

/// `[Q + E - E_th]^+`.
pub fn next_backlog(backlog: f64, energy: f64, e_th: f64) -> f64 {
    (backlog + energy - e_th).max(0.0)
}

/// Advances the queue by one slot with the energy actually spent.
pub fn update(cfg: &PenaltyConfig, q: &QueueState, energy: f64) -> QueueState {
    let mut next = q.clone();
    next.advance(cfg, energy);
    next
}

impl QueueState {
    pub fn advance(&mut self, cfg: &PenaltyConfig, energy: f64) {
        if let Some(h) = self.history.as_mut() {
            if h.len() == self.history_cap {
                h.pop_front();
            }
            if self.history_cap > 0 {
                h.push_back(self.backlog);
            }
        }
        self.backlog = next_backlog(self.backlog, energy, cfg.e_th);
        self.slot += 1;
    }
}

/// Final backlog over number of slots for a trace of queue states.
pub fn stability_metric(trace: &[QueueState]) -> Result<f64> {
    match trace.last() {
        Some(last) if last.slot >= 1 => Ok(last.stability_ratio()),
        _ => Err(Error::EmptyTrace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(e_th: f64) -> PenaltyConfig {
        PenaltyConfig::new(2.0, e_th).unwrap()
    }

    #[test]
    fn objective_arithmetic() {
        let cost = CostBreakdown {
            delay_total: 3.0,
            energy_total: 5.0,
            ..Default::default()
        };
        let mut q = QueueState::new();
        assert_eq!(objective(&cfg(1.0), &q, &cost), 6.0);
        q.backlog = 4.0;
        assert_eq!(objective(&cfg(1.0), &q, &cost), 26.0);
    }

    #[test]
    fn update_examples() {
        let q = QueueState {
            backlog: 10.0,
            ..QueueState::new()
        };
        let next = update(&cfg(3.0), &q, 5.0);
        assert_eq!(next.backlog, 12.0);
        assert_eq!(next.slot, 1);

        let q = QueueState {
            backlog: 1.0,
            ..QueueState::new()
        };
        assert_eq!(update(&cfg(5.0), &q, 2.0).backlog, 0.0);
    }

    #[test]
    fn under_threshold_never_queues() {
        let c = cfg(3.0);
        let mut q = QueueState::new();
        for k in 0..1000 {
            q.advance(&c, (k % 4) as f64 * 0.75);
            assert_eq!(q.backlog, 0.0);
        }
    }

    #[test]
    fn stability_examples() {
        let c = cfg(1.0);
        let mut q = QueueState::new();
        let mut trace = vec![];
        for _ in 0..10 {
            q.advance(&c, 0.5);
            trace.push(q.clone());
        }
        assert_eq!(stability_metric(&trace).unwrap(), 0.0);

        let eps = 0.25;
        let mut q = QueueState::new();
        for _ in 0..10_000 {
            q.advance(&c, 1.0 + eps);
        }
        assert!((q.stability_ratio() - eps).abs() < 1e-9);
        assert!(stability_metric(&[]).is_err());
    }

    #[test]
    fn history_ring() {
        let c = cfg(1.0);
        let mut q = QueueState::with_history(3);
        for _ in 0..5 {
            q.advance(&c, 2.0);
        }
        assert_eq!(q.history().collect::<Vec<_>>(), vec![2.0, 3.0, 4.0]);
        assert_eq!(q.backlog, 5.0);
    }

    #[test]
    fn rejects_bad_penalty() {
        assert!(PenaltyConfig::new(0.0, 1.0).is_err());
        assert!(PenaltyConfig::new(1.0, -1.0).is_err());
        assert!(PenaltyConfig::new(f64::NAN, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn clamp_monotone_lipschitz(q in 0.0f64..1e6, e1 in 0.0f64..1e4, e2 in 0.0f64..1e4, th in 1e-3f64..1e4) {
            let a = next_backlog(q, e1, th);
            prop_assert!(a >= 0.0);
            prop_assert!((a - q).abs() <= e1.max(th) * (1.0 + 1e-12));
            let b = next_backlog(q, e2, th);
            if e1 <= e2 { prop_assert!(a <= b); }
        }

        #[test]
        fn objective_is_linear(v in 1e-3f64..1e3, q in 0.0f64..1e3, d in 0.0f64..10.0, e in 0.0f64..10.0, k in 0.0f64..5.0) {
            let c = PenaltyConfig::new(v, 1.0).unwrap();
            let f = c.objective_of(q, d, e);
            prop_assert!((c.objective_of(q, k * d, k * e) - k * f).abs() <= 1e-9 * (1.0 + k * f));
        }
    }
}
