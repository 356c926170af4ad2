//! Rayleigh block fading over a free-space path-loss mean, and Shannon rates.
//!
//! Per slot, a link's gain is `rho * mean_gain` with `rho ~ Exp(1)`. By
//! default that product is treated as the channel *power* gain and fed
//! straight into the SNR (the usual Rayleigh convention where the
//! exponential factor is the power fading). [`GainMode::Amplitude`] squares
//! it instead.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Converts a power spectral density in dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioLink {
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
    pub antenna_gain: f64,
    pub carrier_hz: f64,
    pub pathloss_exp: f64,
    pub distance_m: f64,
    pub noise_psd_w_per_hz: f64,
    pub interference_psd_w_per_hz: f64,
}

impl RadioLink {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth", self.bandwidth_hz),
            ("tx power", self.tx_power_w),
            ("antenna gain", self.antenna_gain),
            ("carrier frequency", self.carrier_hz),
            ("path-loss exponent", self.pathloss_exp),
            ("distance", self.distance_m),
            ("noise PSD", self.noise_psd_w_per_hz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "radio link {name} must be > 0, got {v}"
                )));
            }
        }
        if !(self.interference_psd_w_per_hz.is_finite() && self.interference_psd_w_per_hz >= 0.0) {
            return Err(Error::Config(format!(
                "radio link interference PSD must be >= 0, got {}",
                self.interference_psd_w_per_hz
            )));
        }
        Ok(())
    }

    /// Same radio at a different distance (the BS downlink is shared by all
    /// devices but the path length is per device).
    pub fn at_distance(&self, distance_m: f64) -> Self {
        Self {
            distance_m,
            ..*self
        }
    }

    /// Average gain from the free-space path-loss model,
    /// `A * (c0 / (4 pi f d))^phi`.
    pub fn mean_gain(&self) -> f64 {
        let ratio =
            SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * self.carrier_hz * self.distance_m);
        self.antenna_gain * ratio.powf(self.pathloss_exp)
    }

    /// Shannon rate in bits/s for a channel power gain.
    pub fn rate(&self, power_gain: f64) -> f64 {
        let noise = (self.noise_psd_w_per_hz + self.interference_psd_w_per_hz) * self.bandwidth_hz;
        let snr = self.tx_power_w * power_gain / noise;
        self.bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainMode {
    /// `rho * mean_gain` is the power gain.
    #[default]
    Power,
    /// `rho * mean_gain` is an amplitude and gets squared.
    Amplitude,
}

impl GainMode {
    pub fn from_power_flag(gain_is_power: bool) -> Self {
        if gain_is_power {
            GainMode::Power
        } else {
            GainMode::Amplitude
        }
    }

    pub fn power(self, gain: f64) -> f64 {
        match self {
            GainMode::Power => gain,
            GainMode::Amplitude => gain * gain,
        }
    }
}

/// Per-slot channel power gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    pub uplink_gain: f64,
    pub downlink_gain: f64,
}

/// Unit-mean exponential fading factor.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

impl ChannelDraw {
    pub fn from_fading(
        uplink: &RadioLink,
        downlink: &RadioLink,
        rho_up: f64,
        rho_down: f64,
        mode: GainMode,
    ) -> Self {
        Self {
            uplink_gain: mode.power(rho_up * uplink.mean_gain()),
            downlink_gain: mode.power(rho_down * downlink.mean_gain()),
        }
    }

    /// Gains at the mean channel (rho = 1 on both links).
    pub fn mean(uplink: &RadioLink, downlink: &RadioLink, mode: GainMode) -> Self {
        Self::from_fading(uplink, downlink, 1.0, 1.0, mode)
    }

    /// Draws independent fading for the uplink (first) and downlink (second).
    pub fn sample<R: Rng + ?Sized>(
        uplink: &RadioLink,
        downlink: &RadioLink,
        mode: GainMode,
        rng: &mut R,
    ) -> Self {
        let rho_up = sample_fading(rng);
        let rho_down = sample_fading(rng);
        Self::from_fading(uplink, downlink, rho_up, rho_down, mode)
    }
}

/// Uplink (device to BS) and downlink (BS to device) rates in bits/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    pub uplink_bps: f64,
    pub downlink_bps: f64,
}

impl LinkRates {
    pub fn from_draw(uplink: &RadioLink, downlink: &RadioLink, draw: &ChannelDraw) -> Self {
        Self {
            uplink_bps: uplink.rate(draw.uplink_gain),
            downlink_bps: downlink.rate(draw.downlink_gain),
        }
    }
}
