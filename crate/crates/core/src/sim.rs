//! Experiment driver: population, per-slot loop, summaries and sweeps.
//!
//! Slots advance through devices in index order inside each episode, so
//! slot `t = (n - 1) * M + m`. Two independent ChaCha streams are derived
//! from the master seed: stream 0 samples the population, stream 1 draws
//! per-slot fading (uplink first, then downlink, for every slot). Changing
//! the scheduler, V or the episode count therefore never moves the
//! population or the channel sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelDraw, GainMode, RadioLink};
use crate::cost::{CostModel, DeviceSpec, ServerSpec};
use crate::error::{Error, Result};
use crate::lyapunov::{PenaltyConfig, QueueState};
use crate::profile::ModelProfile;
use crate::solver::{self, BaselineParams, SchedulerKind, SlotContext};

pub const SLOTS_CSV_SCHEMA: &str = "aslsim-slots/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const POPULATION_STREAM: u64 = 0;
const FADING_STREAM: u64 = 1;

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// A device with fixed hardware and position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinnedDevice {
    pub freq_hz: f64,
    pub cores: u32,
    pub distance_m: f64,
}

/// How to build the device population.
///
/// The first `pinned.len()` devices (up to `count`) are taken verbatim;
/// the rest are sampled uniformly from the ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub count: usize,
    pub pinned: Vec<PinnedDevice>,
    pub freq_hz_range: [f64; 2],
    pub cores_range: [u32; 2],
    pub distance_m_range: [f64; 2],
    pub flops_per_cycle: f64,
    pub kappa: f64,
    /// Uplink radio template; its distance is replaced per device.
    pub uplink: RadioLink,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("population needs at least one device".into()));
        }
        let [f0, f1] = self.freq_hz_range;
        if !(f0.is_finite() && f0 > 0.0 && f0 <= f1 && f1.is_finite()) {
            return Err(Error::Config(format!("bad frequency range [{f0}, {f1}]")));
        }
        let [c0, c1] = self.cores_range;
        if c0 == 0 || c0 > c1 {
            return Err(Error::Config(format!("bad cores range [{c0}, {c1}]")));
        }
        let [d0, d1] = self.distance_m_range;
        if !(d0.is_finite() && d0 > 0.0 && d0 <= d1 && d1.is_finite()) {
            return Err(Error::Config(format!("bad distance range [{d0}, {d1}]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub devices: Vec<DeviceSpec>,
    pub server: ServerSpec,
}

impl Population {
    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }
}

pub fn build_population(
    spec: &PopulationSpec,
    server: &ServerSpec,
    seed: u64,
) -> Result<Population> {
    spec.validate()?;
    server.validate()?;
    let mut rng = stream(seed, POPULATION_STREAM);
    let freq = Uniform::new_inclusive(spec.freq_hz_range[0], spec.freq_hz_range[1]);
    let cores = Uniform::new_inclusive(spec.cores_range[0], spec.cores_range[1]);
    let dist = Uniform::new_inclusive(spec.distance_m_range[0], spec.distance_m_range[1]);

    let mut devices = Vec::with_capacity(spec.count);
    for m in 0..spec.count {
        let p = match spec.pinned.get(m) {
            Some(p) => *p,
            None => PinnedDevice {
                freq_hz: freq.sample(&mut rng),
                cores: cores.sample(&mut rng),
                distance_m: dist.sample(&mut rng),
            },
        };
        let dev = DeviceSpec {
            freq_hz: p.freq_hz,
            flops_per_cycle: spec.flops_per_cycle,
            cores: p.cores,
            kappa: spec.kappa,
            uplink: spec.uplink.at_distance(p.distance_m),
        };
        dev.validate()
            .map_err(|e| Error::Config(format!("device {}: {e}", m + 1)))?;
        devices.push(dev);
    }
    Ok(Population {
        devices,
        server: *server,
    })
}

/// Delay weight. An explicit `v` replaces the calibrated reference;
/// `v_scale` multiplies whichever is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub e_th: f64,
    pub v: Option<f64>,
    pub v_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub episodes: u32,
    pub seed: u64,
    pub scheduler: SchedulerKind,
    pub baseline: BaselineParams,
    pub penalty: PenaltySpec,
    pub population: PopulationSpec,
    pub server: ServerSpec,
    pub cost_model: CostModel,
    pub gain_mode: GainMode,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be >= 1".into()));
        }
        if !(self.penalty.v_scale.is_finite() && self.penalty.v_scale > 0.0) {
            return Err(Error::Config(format!(
                "v_scale must be > 0, got {}",
                self.penalty.v_scale
            )));
        }
        if let Some(v) = self.penalty.v {
            PenaltyConfig::new(v, self.penalty.e_th)?;
        }
        if self.cost_model.local_updates == 0 {
            return Err(Error::Config("local_updates must be >= 1".into()));
        }
        if !(self.cost_model.bits_per_param.is_finite() && self.cost_model.bits_per_param > 0.0) {
            return Err(Error::Config("bits per parameter must be > 0".into()));
        }
        self.population.validate()?;
        self.server.validate()
    }
}

/// Result of the V calibration pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub typical_delay: f64,
    pub typical_energy: f64,
    /// Reference weight before scaling.
    pub v_reference: f64,
    /// True when the typical energy is below E_th and the fallback
    /// `E_th * E_typ / D_typ` was used.
    pub fallback: bool,
}

/// Reference V from a pass over the population at mean channel gains with
/// the delay-optimal decision: `V0 = E_th * (E_typ - E_th) / D_typ`.
pub fn calibrate_v(
    profile: &ModelProfile,
    pop: &Population,
    e_th: f64,
    model: CostModel,
    mode: GainMode,
) -> Result<Calibration> {
    let cfg = PenaltyConfig::new(1.0, e_th)?;
    let (mut d, mut e) = (0.0, 0.0);
    for dev in &pop.devices {
        let draw = ChannelDraw::mean(&dev.uplink, &pop.server.downlink_to(dev), mode);
        let ctx =
            SlotContext::new(profile, dev, &pop.server, draw, cfg, 0.0).with_cost_model(model);
        let r = solver::solve_baseline(&ctx, SchedulerKind::DelayOpt, &BaselineParams::default())?;
        d += r.cost.delay_total;
        e += r.cost.energy_total;
    }
    let n = pop.len() as f64;
    let (typical_delay, typical_energy) = (d / n, e / n);
    let excess = typical_energy - e_th;
    let (v_reference, fallback) = if excess > 0.0 {
        (e_th * excess / typical_delay, false)
    } else {
        (e_th * typical_energy / typical_delay, true)
    };
    Ok(Calibration {
        typical_delay,
        typical_energy,
        v_reference,
        fallback,
    })
}

/// One row of the per-slot trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: u64,
    pub n: u32,
    pub m: u32,
    pub split: usize,
    pub share: f64,
    pub d_dev_comp: f64,
    pub d_srv_comp: f64,
    pub d_model_down: f64,
    pub d_smashed_up: f64,
    pub d_grad_down: f64,
    pub d_model_up: f64,
    pub delay_total: f64,
    pub e_dev_tx: f64,
    pub e_srv_tx: f64,
    pub e_dev_comp: f64,
    pub e_srv_comp: f64,
    pub energy_total: f64,
    pub uplink_gain: f64,
    pub downlink_gain: f64,
    pub backlog_before: f64,
    pub backlog_after: f64,
    pub objective: f64,
    pub iterations: u32,
}

/// Per-episode aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub n: u32,
    pub mean_delay: f64,
    pub mean_energy: f64,
    pub mean_split: f64,
    pub mean_share: f64,
    pub backlog_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceSummary {
    pub m: u32,
    pub freq_hz: f64,
    pub cores: u32,
    pub distance_m: f64,
    pub mean_split: f64,
    pub mean_share: f64,
    pub mean_delay: f64,
    pub mean_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tool_version: String,
    pub csv_schema: String,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub episodes: u32,
    pub devices: usize,
    pub slots: u64,
    pub profile_name: String,
    pub profile_sha256: String,
    pub v: f64,
    pub v_calibrated: bool,
    pub calibration: Calibration,
    pub e_th: f64,
    pub mean_delay: f64,
    pub mean_energy: f64,
    pub mean_objective: f64,
    pub final_backlog: f64,
    pub stability_ratio: f64,
    pub mean_iterations: f64,
    pub max_iterations: u32,
    pub per_device: Vec<DeviceSummary>,
    pub config: RunConfig,
}

/// Receives trace rows as they are produced.
pub trait TraceSink {
    fn slot(&mut self, rec: &SlotRecord) -> Result<()>;
    fn episode(&mut self, rec: &EpisodeRecord) -> Result<()>;
}

/// Discards everything.
pub struct NullSink;

impl TraceSink for NullSink {
    fn slot(&mut self, _: &SlotRecord) -> Result<()> {
        Ok(())
    }
    fn episode(&mut self, _: &EpisodeRecord) -> Result<()> {
        Ok(())
    }
}

/// Keeps everything in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub slots: Vec<SlotRecord>,
    pub episodes: Vec<EpisodeRecord>,
}

impl TraceSink for MemorySink {
    fn slot(&mut self, rec: &SlotRecord) -> Result<()> {
        self.slots.push(*rec);
        Ok(())
    }
    fn episode(&mut self, rec: &EpisodeRecord) -> Result<()> {
        self.episodes.push(*rec);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub slots: Vec<SlotRecord>,
    pub episodes: Vec<EpisodeRecord>,
    pub summary: RunSummary,
}

/// SHA-256 of the profile's canonical TOML form.
pub fn profile_checksum(profile: &ModelProfile) -> String {
    hex::encode(Sha256::digest(profile.to_toml().as_bytes()))
}

pub fn run(cfg: &RunConfig, profile: &ModelProfile) -> Result<RunOutput> {
    let mut sink = MemorySink::default();
    let summary = run_with_sink(cfg, profile, &mut sink)?;
    Ok(RunOutput {
        slots: sink.slots,
        episodes: sink.episodes,
        summary,
    })
}

#[derive(Default, Clone, Copy)]
struct Acc {
    n: u64,
    split: f64,
    share: f64,
    delay: f64,
    energy: f64,
}

impl Acc {
    fn add(&mut self, r: &SlotRecord) {
        self.n += 1;
        self.split += r.split as f64;
        self.share += r.share;
        self.delay += r.delay_total;
        self.energy += r.energy_total;
    }

    fn mean(&self, x: f64) -> f64 {
        x / self.n as f64
    }
}

/// Runs one experiment, streaming rows into `sink`. Rows already handed to
/// the sink stay there if a later slot fails.
pub fn run_with_sink(
    cfg: &RunConfig,
    profile: &ModelProfile,
    sink: &mut dyn TraceSink,
) -> Result<RunSummary> {
    cfg.validate()?;
    if cfg.scheduler == SchedulerKind::FixedSl && !profile.contains_split(cfg.baseline.fixed_split)
    {
        return Err(Error::Config(format!(
            "fixed split {} outside 1..={}",
            cfg.baseline.fixed_split,
            profile.num_splits()
        )));
    }
    let pop = build_population(&cfg.population, &cfg.server, cfg.seed)?;
    let calibration = calibrate_v(
        profile,
        &pop,
        cfg.penalty.e_th,
        cfg.cost_model,
        cfg.gain_mode,
    )?;
    let v = cfg.penalty.v.unwrap_or(calibration.v_reference) * cfg.penalty.v_scale;
    let penalty = PenaltyConfig::new(v, cfg.penalty.e_th)?;
    log::info!(
        "{} over {} devices x {} episodes, V = {v:.6e}",
        cfg.scheduler,
        pop.len(),
        cfg.episodes
    );

    let mut fading = stream(cfg.seed, FADING_STREAM);
    let mut queue = QueueState::new();
    let mut per_dev = vec![Acc::default(); pop.len()];
    let mut total = Acc::default();
    let (mut objective_sum, mut iter_sum, mut iter_max) = (0.0, 0u64, 0u32);

    for n in 1..=cfg.episodes {
        let mut ep = Acc::default();
        for (i, dev) in pop.devices.iter().enumerate() {
            let downlink = pop.server.downlink_to(dev);
            let draw = ChannelDraw::sample(&dev.uplink, &downlink, cfg.gain_mode, &mut fading);
            let ctx = SlotContext::new(profile, dev, &pop.server, draw, penalty, queue.backlog)
                .with_cost_model(cfg.cost_model);
            let r = solver::solve(&ctx, cfg.scheduler, &cfg.baseline)?;
            let before = queue.backlog;
            queue.advance(&penalty, r.cost.energy_total);
            let m = i as u32 + 1;
            let c = &r.cost;
            let rec = SlotRecord {
                t: (n as u64 - 1) * pop.len() as u64 + m as u64,
                n,
                m,
                split: r.decision.split,
                share: r.decision.share,
                d_dev_comp: c.d_dev_comp,
                d_srv_comp: c.d_srv_comp,
                d_model_down: c.d_model_down,
                d_smashed_up: c.d_smashed_up,
                d_grad_down: c.d_grad_down,
                d_model_up: c.d_model_up,
                delay_total: c.delay_total,
                e_dev_tx: c.e_dev_tx,
                e_srv_tx: c.e_srv_tx,
                e_dev_comp: c.e_dev_comp,
                e_srv_comp: c.e_srv_comp,
                energy_total: c.energy_total,
                uplink_gain: draw.uplink_gain,
                downlink_gain: draw.downlink_gain,
                backlog_before: before,
                backlog_after: queue.backlog,
                objective: r.objective,
                iterations: r.iterations,
            };
            sink.slot(&rec)?;
            per_dev[i].add(&rec);
            ep.add(&rec);
            total.add(&rec);
            objective_sum += r.objective;
            iter_sum += r.iterations as u64;
            iter_max = iter_max.max(r.iterations);
        }
        sink.episode(&EpisodeRecord {
            n,
            mean_delay: ep.mean(ep.delay),
            mean_energy: ep.mean(ep.energy),
            mean_split: ep.mean(ep.split),
            mean_share: ep.mean(ep.share),
            backlog_end: queue.backlog,
        })?;
    }

    let slots = total.n;
    Ok(RunSummary {
        tool_version: TOOL_VERSION.to_string(),
        csv_schema: SLOTS_CSV_SCHEMA.to_string(),
        scheduler: cfg.scheduler,
        seed: cfg.seed,
        episodes: cfg.episodes,
        devices: pop.len(),
        slots,
        profile_name: profile.name().to_string(),
        profile_sha256: profile_checksum(profile),
        v,
        v_calibrated: cfg.penalty.v.is_none(),
        calibration,
        e_th: cfg.penalty.e_th,
        mean_delay: total.mean(total.delay),
        mean_energy: total.mean(total.energy),
        mean_objective: objective_sum / slots as f64,
        final_backlog: queue.backlog,
        stability_ratio: queue.stability_ratio(),
        mean_iterations: iter_sum as f64 / slots as f64,
        max_iterations: iter_max,
        per_device: pop
            .devices
            .iter()
            .zip(&per_dev)
            .enumerate()
            .map(|(i, (d, a))| DeviceSummary {
                m: i as u32 + 1,
                freq_hz: d.freq_hz,
                cores: d.cores,
                distance_m: d.distance_m(),
                mean_split: a.mean(a.split),
                mean_share: a.mean(a.share),
                mean_delay: a.mean(a.delay),
                mean_energy: a.mean(a.energy),
            })
            .collect(),
        config: cfg.clone(),
    })
}

/// One row of a sweep comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub v: f64,
    pub v_scale: f64,
    pub mean_delay: f64,
    pub mean_energy: f64,
    pub mean_objective: f64,
    pub stability_ratio: f64,
    /// `100 * (1 - D / D_fixed)` against the first fixed-sl row.
    pub delay_reduction_pct: Option<f64>,
    pub energy_reduction_pct: Option<f64>,
    /// Set when this row's population differs from the first row's.
    pub population_mismatch: bool,
}

/// Percentage reduction of `x` relative to `reference`.
pub fn reduction_pct(x: f64, reference: f64) -> f64 {
    100.0 * (1.0 - x / reference)
}

/// Builds comparison rows from finished summaries.
pub fn compare(labels: &[String], summaries: &[RunSummary]) -> Vec<ComparisonRow> {
    let key = |s: &RunSummary| (s.seed, s.config.population.clone(), s.config.server);
    let first = summaries.first().map(key);
    let reference = summaries
        .iter()
        .find(|s| s.scheduler == SchedulerKind::FixedSl && Some(key(s)) == first);
    summaries
        .iter()
        .zip(labels)
        .map(|(s, label)| {
            let mismatch = Some(key(s)) != first;
            let (dr, er) = match reference {
                Some(r) if !mismatch => (
                    Some(reduction_pct(s.mean_delay, r.mean_delay)),
                    Some(reduction_pct(s.mean_energy, r.mean_energy)),
                ),
                _ => (None, None),
            };
            ComparisonRow {
                label: label.clone(),
                scheduler: s.scheduler,
                seed: s.seed,
                v: s.v,
                v_scale: s.config.penalty.v_scale,
                mean_delay: s.mean_delay,
                mean_energy: s.mean_energy,
                mean_objective: s.mean_objective,
                stability_ratio: s.stability_ratio,
                delay_reduction_pct: dr,
                energy_reduction_pct: er,
                population_mismatch: mismatch,
            }
        })
        .collect()
}

/// Runs independent configs in parallel; rows keep the input order.
pub fn sweep(
    cfgs: &[(String, RunConfig)],
    profile: &ModelProfile,
) -> Result<(Vec<RunSummary>, Vec<ComparisonRow>)> {
    let summaries = cfgs
        .par_iter()
        .map(|(_, cfg)| run_with_sink(cfg, profile, &mut NullSink))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = cfgs.iter().map(|(l, _)| l.clone()).collect();
    let rows = compare(&labels, &summaries);
    for r in rows.iter().filter(|r| r.population_mismatch) {
        log::warn!(
            "sweep row {} uses a different population; reductions omitted",
            r.label
        );
    }
    Ok((summaries, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn defaults(episodes: u32, count: usize, scheduler: SchedulerKind) -> RunConfig {
        let mut cfg = ExperimentConfig::default().to_run_config().unwrap();
        cfg.episodes = episodes;
        cfg.population.count = count;
        cfg.scheduler = scheduler;
        cfg
    }

    #[test]
    fn pinned_devices() {
        let cfg = defaults(1, 30, SchedulerKind::Open);
        let pop = build_population(&cfg.population, &cfg.server, 1).unwrap();
        assert_eq!(pop.len(), 30);
        let d = &pop.devices;
        assert_eq!(
            (d[0].freq_hz, d[0].cores, d[0].distance_m()),
            (0.5e9, 1, 200.0)
        );
        assert_eq!(
            (d[2].freq_hz, d[2].cores, d[2].distance_m()),
            (2e9, 8, 200.0)
        );
        assert_eq!((d[3].freq_hz, d[3].cores), (4e9, 16));
    }

    #[test]
    fn population_is_independent_of_the_rest() {
        let a = defaults(1, 30, SchedulerKind::Open);
        let mut b = defaults(7, 30, SchedulerKind::FixedSl);
        b.penalty.v_scale = 10.0;
        let pa = build_population(&a.population, &a.server, 5).unwrap();
        let pb = build_population(&b.population, &b.server, 5).unwrap();
        assert_eq!(pa, pb);
        let pc = build_population(&a.population, &a.server, 6).unwrap();
        assert_ne!(pa, pc);
    }

    #[test]
    fn sampled_devices_stay_in_range() {
        let cfg = defaults(1, 30, SchedulerKind::Open);
        for seed in 0..10_000 {
            let pop = build_population(&cfg.population, &cfg.server, seed).unwrap();
            for d in &pop.devices[4..] {
                assert!((0.5e9..=3e9).contains(&d.freq_hz));
                assert!((1..=8).contains(&d.cores));
                assert!((100.0..=1000.0).contains(&d.distance_m()));
            }
        }
    }

    #[test]
    fn oracle_and_open_rows_agree() {
        let cfgs: Vec<(String, RunConfig)> = [SchedulerKind::Open, SchedulerKind::Oracle]
            .into_iter()
            .map(|k| (k.to_string(), defaults(5, 30, k)))
            .collect();
        let (_, rows) = sweep(&cfgs, &ModelProfile::bundled_lenet()).unwrap();
        let rel = (rows[0].mean_objective - rows[1].mean_objective).abs() / rows[1].mean_objective;
        assert!(rel <= 1e-9, "{rel}");
    }

    #[test]
    fn single_slot_fixed_split() {
        let cfg = defaults(1, 1, SchedulerKind::FixedSl);
        let out = run(&cfg, &ModelProfile::bundled_lenet()).unwrap();
        assert_eq!(out.slots.len(), 1);
        assert_eq!(out.slots[0].split, 9);
        assert_eq!(out.slots[0].t, 1);
        assert_eq!(out.slots[0].backlog_before, 0.0);
        assert_eq!(out.episodes.len(), 1);
    }

    #[test]
    fn slot_indexing_and_queue_rows() {
        let cfg = defaults(3, 5, SchedulerKind::Open);
        let out = run(&cfg, &ModelProfile::bundled_lenet()).unwrap();
        assert_eq!(out.slots.len(), 15);
        let mut q = 0.0;
        for (k, r) in out.slots.iter().enumerate() {
            assert_eq!(r.t, k as u64 + 1);
            assert_eq!(r.t, (r.n as u64 - 1) * 5 + r.m as u64);
            assert_eq!(r.backlog_before, q);
            q = (q + r.energy_total - cfg.penalty.e_th).max(0.0);
            assert_eq!(r.backlog_after, q);
        }
        assert_eq!(out.summary.final_backlog, q);
        assert_eq!(out.summary.slots, 15);
    }

    #[test]
    fn explicit_v_is_used() {
        let mut cfg = defaults(1, 4, SchedulerKind::Open);
        cfg.penalty.v = Some(123.0);
        cfg.penalty.v_scale = 2.0;
        let s = run(&cfg, &ModelProfile::bundled_lenet()).unwrap().summary;
        assert_eq!(s.v, 246.0);
        assert!(!s.v_calibrated);
    }

    #[test]
    fn rejects_bad_configs() {
        let p = ModelProfile::bundled_lenet();
        let mut cfg = defaults(0, 4, SchedulerKind::Open);
        assert!(run(&cfg, &p).is_err());
        cfg.episodes = 1;
        cfg.population.count = 0;
        assert!(run(&cfg, &p).is_err());
        cfg.population.count = 4;
        cfg.population.freq_hz_range = [3e9, 1e9];
        assert!(run(&cfg, &p).is_err());
        let mut cfg = defaults(1, 4, SchedulerKind::FixedSl);
        cfg.baseline.fixed_split = 40;
        assert!(run(&cfg, &p).is_err());
    }

    #[test]
    fn comparison_reductions() {
        let p = ModelProfile::bundled_lenet();
        let cfgs: Vec<(String, RunConfig)> = [SchedulerKind::Open, SchedulerKind::FixedSl]
            .into_iter()
            .map(|k| (k.to_string(), defaults(2, 8, k)))
            .collect();
        let (sums, rows) = sweep(&cfgs, &p).unwrap();
        assert_eq!(rows[0].scheduler, SchedulerKind::Open);
        let expect = 100.0 * (1.0 - sums[0].mean_delay / sums[1].mean_delay);
        assert_eq!(rows[0].delay_reduction_pct, Some(expect));
        assert_eq!(rows[1].delay_reduction_pct, Some(0.0));

        let mut other = defaults(2, 8, SchedulerKind::Open);
        other.seed = 99;
        let (_, rows) = sweep(&[cfgs[1].clone(), ("x".into(), other)], &p).unwrap();
        assert!(rows[1].population_mismatch);
        assert_eq!(rows[1].delay_reduction_pct, None);
    }
}
