//! Per-slot schedulers.
//!
//! The online scheduler minimises `f = V·D + Q·E` for the current slot. For
//! a fixed split the best compute share has a closed form (the objective is
//! `a/c + b·c + const` in the share); for a fixed share the split is found
//! by exhaustive search. [`solve_open`] alternates the two exactly as the
//! published loop does, including its termination rule, and
//! [`solve_joint_oracle`] enumerates every split independently as a check.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelDraw, LinkRates};
use crate::cost::{CostBreakdown, CostModel, Decision, DeviceSpec, ServerSpec};
use crate::error::{Error, Result};
use crate::lyapunov::PenaltyConfig;
use crate::profile::ModelProfile;

/// Outer iteration cap for the alternating loop.
pub const MAX_OPEN_ITERATIONS: u32 = 100;

/// Share change below which the alternating loop stops.
pub const SHARE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    Open,
    FixedSl,
    DelayOpt,
    EnergyOpt,
    Oracle,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 5] = [
        SchedulerKind::Open,
        SchedulerKind::FixedSl,
        SchedulerKind::DelayOpt,
        SchedulerKind::EnergyOpt,
        SchedulerKind::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Open => "open",
            SchedulerKind::FixedSl => "fixed-sl",
            SchedulerKind::DelayOpt => "delay-opt",
            SchedulerKind::EnergyOpt => "energy-opt",
            SchedulerKind::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheduler {s:?} (expected open, fixed-sl, delay-opt, energy-opt or oracle)"
                ))
            })
    }
}

/// Knobs for the baseline schedulers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    /// Split used by the fixed split-learning baseline.
    pub fixed_split: usize,
    /// Smallest share the energy-optimal baseline may allocate.
    pub share_floor: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            fixed_split: 9,
            share_floor: 1e-3,
        }
    }
}

/// Everything a scheduler sees for one slot.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext<'a> {
    pub profile: &'a ModelProfile,
    pub dev: &'a DeviceSpec,
    pub srv: &'a ServerSpec,
    pub draw: ChannelDraw,
    pub cfg: PenaltyConfig,
    /// Backlog at the start of the slot.
    pub backlog: f64,
    pub model: CostModel,
    rates: LinkRates,
}

impl<'a> SlotContext<'a> {
    pub fn new(
        profile: &'a ModelProfile,
        dev: &'a DeviceSpec,
        srv: &'a ServerSpec,
        draw: ChannelDraw,
        cfg: PenaltyConfig,
        backlog: f64,
    ) -> Self {
        let model = CostModel::default();
        Self {
            profile,
            dev,
            srv,
            draw,
            cfg,
            backlog,
            model,
            rates: model.rates(dev, srv, &draw),
        }
    }

    pub fn with_cost_model(mut self, model: CostModel) -> Self {
        self.model = model;
        self
    }

    pub fn rates(&self) -> LinkRates {
        self.rates
    }

    pub fn evaluate(&self, dec: Decision) -> Result<CostBreakdown> {
        self.model
            .evaluate_with_rates(self.profile, self.dev, self.srv, &self.rates, dec)
    }

    pub fn objective(&self, cost: &CostBreakdown) -> f64 {
        self.cfg
            .objective_of(self.backlog, cost.delay_total, cost.energy_total)
    }

    fn result(&self, dec: Decision, iterations: u32) -> Result<SolverResult> {
        let cost = self.evaluate(dec)?;
        Ok(SolverResult {
            decision: dec,
            objective: self.objective(&cost),
            cost,
            iterations,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverResult {
    pub decision: Decision,
    pub cost: CostBreakdown,
    pub objective: f64,
    pub iterations: u32,
}

/// `(ω1, ω4)`: server compute delay and energy coefficients at split `s`,
/// so that `d_srv = ω1 / c` and `e_srv = ω4 · c`.
pub fn share_weights(ctx: &SlotContext<'_>, s: usize) -> Result<(f64, f64)> {
    let k = ctx.model.local_updates as f64;
    let work = k * ctx.profile.server_flops(s)?;
    let srv = ctx.srv;
    let omega1 = work / (srv.freq_hz * srv.flops_per_cycle * srv.cores as f64);
    let omega4 =
        srv.kappa * srv.flops_per_cycle * srv.cores as f64 * srv.freq_hz * srv.freq_hz * work;
    Ok((omega1, omega4))
}

/// Closed-form compute share for a fixed split.
///
/// Returns 0 when the split leaves nothing on the server and 1 when the
/// queue is empty.
pub fn optimal_share(ctx: &SlotContext<'_>, s: usize) -> Result<f64> {
    let (omega1, omega4) = share_weights(ctx, s)?;
    if omega1 == 0.0 {
        return Ok(0.0);
    }
    if ctx.backlog == 0.0 {
        return Ok(1.0);
    }
    let c = (ctx.cfg.v * omega1 / (omega4 * ctx.backlog)).sqrt();
    Ok(c.min(1.0))
}

/// The same closed form with the server workload cancelled out of
/// `ω1 / ω4`; it does not depend on the split.
pub fn split_free_share(ctx: &SlotContext<'_>) -> f64 {
    if ctx.backlog == 0.0 {
        return 1.0;
    }
    let srv = ctx.srv;
    let dc = srv.flops_per_cycle * srv.cores as f64;
    let c = (ctx.cfg.v / (ctx.backlog * srv.kappa * dc * dc * srv.freq_hz.powi(3))).sqrt();
    c.min(1.0)
}

/// Exhaustive split search for a fixed share. Ties go to the smallest split.
///
/// A zero share is allowed; splits that would leave work on the server are
/// then infeasible and skipped.
pub fn best_split_given_share(ctx: &SlotContext<'_>, c: f64) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for s in ctx.profile.split_points() {
        if c == 0.0 && ctx.profile.server_flops(s)? > 0.0 {
            continue;
        }
        let f = ctx.objective(&ctx.evaluate(Decision::new(s, c))?);
        if best.is_none_or(|(_, fb)| f < fb) {
            best = Some((s, f));
        }
    }
    best.ok_or_else(|| Error::InvalidDecision(format!("no feasible split for share {c}")))
}

/// The online scheduler: alternate closed-form share and split search.
///
/// Starts from share 1 with no split chosen. The loop keeps going only
/// while the share moved by more than [`SHARE_TOLERANCE`] *and* the split
/// changed, with a hard cap of [`MAX_OPEN_ITERATIONS`].
pub fn solve_open(ctx: &SlotContext<'_>) -> Result<SolverResult> {
    let mut share = 1.0;
    let mut split: Option<usize> = None;
    let mut iterations = 0;
    loop {
        let (share_last, split_last) = (share, split);
        share = match split {
            None => split_free_share(ctx),
            Some(s) => optimal_share(ctx, s)?,
        };
        let (s, _) = best_split_given_share(ctx, share)?;
        split = Some(s);
        iterations += 1;

        if !((share - share_last).abs() > SHARE_TOLERANCE && split != split_last) {
            break;
        }
        if iterations >= MAX_OPEN_ITERATIONS {
            warn!("alternating loop hit the {MAX_OPEN_ITERATIONS}-iteration cap; returning last iterate");
            break;
        }
    }

    let s = split.expect("loop runs at least once");
    if ctx.profile.server_flops(s)? == 0.0 {
        share = 0.0;
    }
    ctx.result(Decision::new(s, share), iterations)
}

/// Global minimiser over (split, share): for each split, the closed form,
/// the share endpoint, and a log-grid plus golden-section refinement.
pub fn solve_joint_oracle(ctx: &SlotContext<'_>) -> Result<SolverResult> {
    let mut best: Option<SolverResult> = None;
    for s in ctx.profile.split_points() {
        let candidate = if ctx.profile.server_flops(s)? == 0.0 {
            ctx.result(Decision::new(s, 0.0), 1)?
        } else {
            let mut cands = vec![optimal_share(ctx, s)?, 1.0];
            cands.push(refine_share(ctx, s)?);
            let mut local: Option<SolverResult> = None;
            for c in cands {
                let r = ctx.result(Decision::new(s, c), 1)?;
                if local.is_none_or(|l| r.objective < l.objective) {
                    local = Some(r);
                }
            }
            local.unwrap()
        };
        if best.is_none_or(|b| candidate.objective < b.objective) {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| Error::InvalidDecision("empty profile".into()))
}

/// Numerical share minimiser used only by the oracle: scan a log-spaced
/// grid on [1e-9, 1], then golden-section search between the neighbours
/// of the best grid point.
fn refine_share(ctx: &SlotContext<'_>, s: usize) -> Result<f64> {
    let f = |c: f64| -> Result<f64> { Ok(ctx.objective(&ctx.evaluate(Decision::new(s, c))?)) };
    const N: usize = 91;
    let grid: Vec<f64> = (0..N)
        .map(|i| 10f64.powf(-9.0 + 9.0 * i as f64 / (N - 1) as f64))
        .collect();
    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    for (i, &c) in grid.iter().enumerate() {
        let v = f(c)?;
        if v < best_f {
            best_f = v;
            best_i = i;
        }
    }
    let mut lo = grid[best_i.saturating_sub(1)];
    let mut hi = grid[(best_i + 1).min(N - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..200 {
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Baseline schedulers. Their objective is still reported with the slot's
/// backlog so traces stay comparable.
pub fn solve_baseline(
    ctx: &SlotContext<'_>,
    kind: SchedulerKind,
    params: &BaselineParams,
) -> Result<SolverResult> {
    match kind {
        SchedulerKind::FixedSl => {
            if !ctx.profile.contains_split(params.fixed_split) {
                return Err(Error::Config(format!(
                    "fixed split {} outside 1..={}",
                    params.fixed_split,
                    ctx.profile.num_splits()
                )));
            }
            ctx.result(Decision::new(params.fixed_split, 1.0), 1)
        }
        SchedulerKind::DelayOpt => argmin_by(ctx, |_| Ok(1.0), |c| c.delay_total),
        SchedulerKind::EnergyOpt => {
            if !(params.share_floor > 0.0 && params.share_floor <= 1.0) {
                return Err(Error::Config(format!(
                    "share floor must be in (0, 1], got {}",
                    params.share_floor
                )));
            }
            argmin_by(
                ctx,
                |s| {
                    Ok(if ctx.profile.server_flops(s)? == 0.0 {
                        0.0
                    } else {
                        params.share_floor
                    })
                },
                |c| c.energy_total,
            )
        }
        SchedulerKind::Open | SchedulerKind::Oracle => {
            Err(Error::Config(format!("{kind} is not a baseline scheduler")))
        }
    }
}

fn argmin_by(
    ctx: &SlotContext<'_>,
    share_for: impl Fn(usize) -> Result<f64>,
    key: impl Fn(&CostBreakdown) -> f64,
) -> Result<SolverResult> {
    let mut best: Option<(f64, SolverResult)> = None;
    for s in ctx.profile.split_points() {
        let r = ctx.result(Decision::new(s, share_for(s)?), 1)?;
        let k = key(&r.cost);
        if best.is_none_or(|(kb, _)| k < kb) {
            best = Some((k, r));
        }
    }
    Ok(best.expect("profile has at least one split").1)
}

/// Dispatches to the scheduler named by `kind`.
pub fn solve(
    ctx: &SlotContext<'_>,
    kind: SchedulerKind,
    params: &BaselineParams,
) -> Result<SolverResult> {
    match kind {
        SchedulerKind::Open => solve_open(ctx),
        SchedulerKind::Oracle => solve_joint_oracle(ctx),
        _ => solve_baseline(ctx, kind, params),
    }
}
