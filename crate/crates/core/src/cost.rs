//! Per-slot training delay and energy for a split decision.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelDraw, LinkRates, RadioLink};
use crate::error::{Error, Result};
use crate::profile::ModelProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub freq_hz: f64,
    pub flops_per_cycle: f64,
    pub cores: u32,
    /// Effective switched capacitance of the device chip.
    pub kappa: f64,
    pub uplink: RadioLink,
}

impl DeviceSpec {
    /// Peak throughput F·δ·σ in FLOPs/s.
    pub fn flops_per_sec(&self) -> f64 {
        self.freq_hz * self.flops_per_cycle * self.cores as f64
    }

    pub fn distance_m(&self) -> f64 {
        self.uplink.distance_m
    }

    pub fn validate(&self) -> Result<()> {
        check_compute(
            "device",
            self.freq_hz,
            self.flops_per_cycle,
            self.cores,
            self.kappa,
        )?;
        self.uplink.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerSpec {
    pub freq_hz: f64,
    pub flops_per_cycle: f64,
    pub cores: u32,
    pub kappa: f64,
    /// BS transmitter; its distance is replaced by each device's distance.
    pub downlink: RadioLink,
}

impl ServerSpec {
    pub fn flops_per_sec(&self) -> f64 {
        self.freq_hz * self.flops_per_cycle * self.cores as f64
    }

    pub fn downlink_to(&self, dev: &DeviceSpec) -> RadioLink {
        self.downlink.at_distance(dev.distance_m())
    }

    pub fn validate(&self) -> Result<()> {
        check_compute(
            "server",
            self.freq_hz,
            self.flops_per_cycle,
            self.cores,
            self.kappa,
        )?;
        self.downlink.validate()
    }
}

fn check_compute(what: &str, freq: f64, fpc: f64, cores: u32, kappa: f64) -> Result<()> {
    for (name, v) in [
        ("frequency", freq),
        ("flops per cycle", fpc),
        ("kappa", kappa),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!("{what} {name} must be > 0, got {v}")));
        }
    }
    if cores == 0 {
        return Err(Error::Config(format!("{what} needs at least one core")));
    }
    Ok(())
}

/// Split point and edge compute share for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub split: usize,
    pub share: f64,
}

impl Decision {
    pub fn new(split: usize, share: f64) -> Self {
        Self { split, share }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
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
}

impl CostBreakdown {
    pub fn device_energy(&self) -> f64 {
        self.e_dev_tx + self.e_dev_comp
    }

    pub fn server_energy(&self) -> f64 {
        self.e_srv_tx + self.e_srv_comp
    }
}

/// Unit bridge and round structure shared by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Bits per stored parameter (32 for fp32).
    pub bits_per_param: f64,
    /// Local updates per slot. Computation, smashed-data upload and
    /// gradient download repeat this many times; model transfer happens once.
    pub local_updates: u32,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            bits_per_param: 32.0,
            local_updates: 1,
        }
    }
}

fn transfer(bits: f64, rate: f64, what: &'static str, direction: &'static str) -> Result<f64> {
    if bits == 0.0 {
        return Ok(0.0);
    }
    if rate <= 0.0 {
        return Err(Error::UnreachableLink {
            what,
            bits,
            direction,
        });
    }
    Ok(bits / rate)
}

impl CostModel {
    pub fn with_bytes_per_param(bytes: f64) -> Self {
        Self {
            bits_per_param: bytes * 8.0,
            ..Self::default()
        }
    }

    pub fn bits(&self, params: u64) -> f64 {
        params as f64 * self.bits_per_param
    }

    pub fn rates(&self, dev: &DeviceSpec, srv: &ServerSpec, draw: &ChannelDraw) -> LinkRates {
        LinkRates::from_draw(&dev.uplink, &srv.downlink_to(dev), draw)
    }

    pub fn evaluate(
        &self,
        profile: &ModelProfile,
        dev: &DeviceSpec,
        srv: &ServerSpec,
        draw: &ChannelDraw,
        dec: Decision,
    ) -> Result<CostBreakdown> {
        self.evaluate_with_rates(profile, dev, srv, &self.rates(dev, srv, draw), dec)
    }

    /// Evaluates a decision with rates already computed for this slot.
    ///
    /// A share of zero is accepted only when the split leaves no work on the
    /// server; the server compute terms are then zero for any share.
    pub fn evaluate_with_rates(
        &self,
        profile: &ModelProfile,
        dev: &DeviceSpec,
        srv: &ServerSpec,
        rates: &LinkRates,
        dec: Decision,
    ) -> Result<CostBreakdown> {
        let s = dec.split;
        let c = dec.share;
        let device_work = profile.device_flops(s)?;
        let server_work = profile.server_flops(s)?;
        if !(c.is_finite() && (0.0..=1.0).contains(&c)) {
            return Err(Error::InvalidDecision(format!("share {c} outside [0, 1]")));
        }
        if server_work > 0.0 && c == 0.0 {
            return Err(Error::InvalidDecision(format!(
                "share 0 with {server_work} FLOPs left on the server at split {s}"
            )));
        }

        let k = self.local_updates as f64;
        let model_bits = self.bits(profile.device_params(s)?);
        let smashed_bits = k * self.bits(profile.smashed_size(s)?);
        let grad_bits = k * self.bits(profile.gradient_size(s)?);

        let d_dev_comp = k * device_work / dev.flops_per_sec();
        let d_srv_comp = if server_work > 0.0 {
            k * server_work / (c * srv.flops_per_sec())
        } else {
            0.0
        };
        let d_model_down = transfer(
            model_bits,
            rates.downlink_bps,
            "device-side model",
            "downlink",
        )?;
        let d_smashed_up = transfer(smashed_bits, rates.uplink_bps, "smashed data", "uplink")?;
        let d_grad_down = transfer(
            grad_bits,
            rates.downlink_bps,
            "smashed-data gradient",
            "downlink",
        )?;
        let d_model_up = transfer(model_bits, rates.uplink_bps, "device-side model", "uplink")?;
        let delay_total =
            d_dev_comp + d_srv_comp + d_model_down + d_smashed_up + d_grad_down + d_model_up;

        let e_dev_tx = dev.uplink.tx_power_w * (d_smashed_up + d_model_up);
        let e_srv_tx = srv.downlink.tx_power_w * (d_model_down + d_grad_down);
        let e_dev_comp = k
            * dev.kappa
            * dev.flops_per_cycle
            * dev.cores as f64
            * dev.freq_hz
            * dev.freq_hz
            * device_work;
        let e_srv_comp = if server_work > 0.0 {
            k * srv.kappa
                * c
                * srv.flops_per_cycle
                * srv.cores as f64
                * srv.freq_hz
                * srv.freq_hz
                * server_work
        } else {
            0.0
        };

        let mut out = CostBreakdown {
            d_dev_comp,
            d_srv_comp,
            d_model_down,
            d_smashed_up,
            d_grad_down,
            d_model_up,
            delay_total,
            e_dev_tx,
            e_srv_tx,
            e_dev_comp,
            e_srv_comp,
            energy_total: 0.0,
        };
        out.energy_total = out.device_energy() + out.server_energy();
        Ok(out)
    }
}

/// Mean delay and mean energy over a trace of slots.
pub fn average_metrics<'a, I>(trace: I) -> Result<(f64, f64)>
where
    I: IntoIterator<Item = &'a CostBreakdown>,
{
    let mut n = 0usize;
    let (mut delay, mut energy) = (0.0, 0.0);
    for c in trace {
        n += 1;
        delay += c.delay_total;
        energy += c.energy_total;
    }
    if n == 0 {
        return Err(Error::EmptyTrace);
    }
    Ok((delay / n as f64, energy / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::dbm_per_hz_to_watts;
    use crate::profile::LayerEntry;
    use proptest::prelude::*;

    fn link(bw: f64, p: f64, a: f64) -> RadioLink {
        RadioLink {
            bandwidth_hz: bw,
            tx_power_w: p,
            antenna_gain: a,
            carrier_hz: 2e9,
            pathloss_exp: 1.0,
            distance_m: 200.0,
            noise_psd_w_per_hz: dbm_per_hz_to_watts(-174.0),
            interference_psd_w_per_hz: dbm_per_hz_to_watts(-164.0),
        }
    }

    fn device(freq: f64, cores: u32) -> DeviceSpec {
        DeviceSpec {
            freq_hz: freq,
            flops_per_cycle: 8.0,
            cores,
            kappa: 1e-26,
            uplink: link(20e6, 0.4, 4.11),
        }
    }

    fn server() -> ServerSpec {
        ServerSpec {
            freq_hz: 3e9,
            flops_per_cycle: 16.0,
            cores: 32,
            kappa: 1e-26,
            downlink: link(40e6, 3.0, 8.0),
        }
    }

    fn draw() -> ChannelDraw {
        ChannelDraw {
            uplink_gain: 2e-4,
            downlink_gain: 4e-4,
        }
    }

    #[test]
    fn full_model_on_device_has_no_server_cost() {
        let p = ModelProfile::bundled_lenet();
        let m = CostModel::default();
        for share in [0.0, 0.3, 1.0] {
            let c = m
                .evaluate(
                    &p,
                    &device(1e9, 4),
                    &server(),
                    &draw(),
                    Decision::new(12, share),
                )
                .unwrap();
            assert_eq!(c.d_srv_comp, 0.0);
            assert_eq!(c.e_srv_comp, 0.0);
        }
    }

    #[test]
    fn device_compute_delay_arithmetic() {
        let p = ModelProfile::from_layers(
            "x",
            vec![LayerEntry::new(1, 1e9, 0, 0), LayerEntry::new(2, 1e9, 0, 0)],
        )
        .unwrap();
        let c = CostModel::default()
            .evaluate(
                &p,
                &device(1e9, 1),
                &server(),
                &draw(),
                Decision::new(1, 1.0),
            )
            .unwrap();
        assert_eq!(c.d_dev_comp, 0.125);
        // No bits moved at all.
        assert_eq!(
            c.d_model_down + c.d_smashed_up + c.d_grad_down + c.d_model_up,
            0.0
        );
    }

    #[test]
    fn zero_share_with_server_work_is_rejected() {
        let p = ModelProfile::bundled_lenet();
        let err = CostModel::default()
            .evaluate(
                &p,
                &device(1e9, 4),
                &server(),
                &draw(),
                Decision::new(3, 0.0),
            )
            .unwrap_err();
        assert!(matches!(err, Error::InvalidDecision(_)));
        assert!(CostModel::default()
            .evaluate(
                &p,
                &device(1e9, 4),
                &server(),
                &draw(),
                Decision::new(3, 1.5)
            )
            .is_err());
    }

    #[test]
    fn zero_rate_with_payload_is_unreachable() {
        let p = ModelProfile::bundled_lenet();
        let dead = ChannelDraw {
            uplink_gain: 0.0,
            downlink_gain: 1e-4,
        };
        let err = CostModel::default()
            .evaluate(&p, &device(1e9, 4), &server(), &dead, Decision::new(3, 1.0))
            .unwrap_err();
        assert!(
            matches!(
                err,
                Error::UnreachableLink {
                    direction: "uplink",
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn totals_are_component_sums() {
        let p = ModelProfile::bundled_lenet();
        let m = CostModel::default();
        for s in p.split_points() {
            let c = m
                .evaluate(
                    &p,
                    &device(2e9, 8),
                    &server(),
                    &draw(),
                    Decision::new(s, 0.4),
                )
                .unwrap();
            let delay = c.d_dev_comp
                + c.d_srv_comp
                + c.d_model_down
                + c.d_smashed_up
                + c.d_grad_down
                + c.d_model_up;
            assert_eq!(c.delay_total, delay);
            assert_eq!(
                c.energy_total,
                (c.e_dev_tx + c.e_dev_comp) + (c.e_srv_tx + c.e_srv_comp)
            );
            // gamma == beta in the bundled profile
            let rates = m.rates(&device(2e9, 8), &server(), &draw());
            let lhs = c.d_grad_down * rates.downlink_bps;
            let rhs = c.d_smashed_up * rates.uplink_bps;
            assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0));
        }
    }

    #[test]
    fn averages() {
        let a = CostBreakdown {
            delay_total: 1.0,
            energy_total: 10.0,
            ..Default::default()
        };
        let b = CostBreakdown {
            delay_total: 3.0,
            energy_total: 30.0,
            ..Default::default()
        };
        assert_eq!(average_metrics([&a]).unwrap(), (1.0, 10.0));
        assert_eq!(average_metrics([&a, &b]).unwrap(), (2.0, 20.0));
        assert!(matches!(
            average_metrics(std::iter::empty()),
            Err(Error::EmptyTrace)
        ));
    }

    #[test]
    fn local_update_multiplier() {
        let p = ModelProfile::bundled_lenet();
        let one = CostModel::default();
        let three = CostModel {
            local_updates: 3,
            ..one
        };
        let dec = Decision::new(6, 0.5);
        let a = one
            .evaluate(&p, &device(1e9, 2), &server(), &draw(), dec)
            .unwrap();
        let b = three
            .evaluate(&p, &device(1e9, 2), &server(), &draw(), dec)
            .unwrap();
        assert!((b.d_dev_comp / a.d_dev_comp - 3.0).abs() < 1e-12);
        assert!((b.d_smashed_up / a.d_smashed_up - 3.0).abs() < 1e-12);
        assert_eq!(b.d_model_up, a.d_model_up);
    }

    proptest! {
        #[test]
        fn share_monotonicity(c1 in 0.01f64..1.0, c2 in 0.01f64..1.0, s in 1usize..12) {
            prop_assume!(c1 < c2);
            let p = ModelProfile::bundled_lenet();
            let m = CostModel::default();
            let eval = |c| m.evaluate(&p, &device(1e9, 4), &server(), &draw(), Decision::new(s, c)).unwrap();
            let (lo, hi) = (eval(c1), eval(c2));
            prop_assert!(lo.d_srv_comp > hi.d_srv_comp);
            prop_assert!(lo.e_srv_comp < hi.e_srv_comp);
        }

        #[test]
        fn invariant_under_joint_bit_and_rate_scaling(scale in 0.1f64..10.0, s in 1usize..=12, c in 0.05f64..1.0) {
            let p = ModelProfile::bundled_lenet();
            let base = CostModel::default();
            let scaled = CostModel { bits_per_param: base.bits_per_param * scale, ..base };
            let dev = device(1.5e9, 3);
            let rates = base.rates(&dev, &server(), &draw());
            let rates_scaled = LinkRates {
                uplink_bps: rates.uplink_bps * scale,
                downlink_bps: rates.downlink_bps * scale,
            };
            let a = base.evaluate_with_rates(&p, &dev, &server(), &rates, Decision::new(s, c)).unwrap();
            let b = scaled.evaluate_with_rates(&p, &dev, &server(), &rates_scaled, Decision::new(s, c)).unwrap();
            prop_assert!((a.delay_total - b.delay_total).abs() <= 1e-12 * a.delay_total);
            prop_assert!((a.energy_total - b.energy_total).abs() <= 1e-12 * a.energy_total);
        }
    }
}
