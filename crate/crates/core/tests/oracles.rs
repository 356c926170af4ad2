//! Frozen reference values computed outside this crate.

use aslsim::channel::dbm_per_hz_to_watts;
use aslsim::config::ExperimentConfig;
use aslsim::sim::build_population;
use aslsim::{ChannelDraw, CostModel, Decision, DeviceSpec, GainMode, ModelProfile, ServerSpec};

/// Recounts the bundled network from its architecture.
/// Returns (flops, params, activation elements) per layer.
fn recount() -> Vec<(f64, u64, u64)> {
    const BATCH: u64 = 16;
    let mut out = Vec::new();
    let conv = |cin: u64, cout: u64, k: u64, hw: u64| {
        let macs = cout * hw * hw * k * k * cin;
        let params = cout * k * k * cin + cout;
        (6.0 * (macs * BATCH) as f64, params, cout * hw * hw * BATCH)
    };
    let relu = |act: u64| (0.0, 0, act);
    // 2x2 max-pool: 3 comparisons per output, times 3 for training.
    let pool = |c: u64, hw: u64| (9.0 * (c * hw * hw * BATCH) as f64, 0, c * hw * hw * BATCH);
    let fc = |i: u64, o: u64| (6.0 * (i * o * BATCH) as f64, i * o + o, o * BATCH);

    let c1 = conv(1, 32, 5, 28);
    out.push(c1);
    out.push(relu(c1.2));
    out.push(pool(32, 14));
    let c2 = conv(32, 64, 5, 14);
    out.push(c2);
    out.push(relu(c2.2));
    out.push(pool(64, 7));
    let c3 = conv(64, 128, 3, 7);
    out.push(c3);
    out.push(relu(c3.2));
    out.push(pool(128, 3));
    let f1 = fc(128 * 3 * 3, 512);
    out.push(f1);
    out.push(relu(f1.2));
    out.push(fc(512, 10));
    out
}

#[test]
fn bundled_profile_matches_architecture() {
    let p = ModelProfile::bundled_lenet();
    let expect = recount();
    assert_eq!(p.num_splits(), expect.len());
    for (layer, (f, params, act)) in p.layers().iter().zip(&expect) {
        assert_eq!(layer.flops, *f, "flops at layer {}", layer.index);
        assert_eq!(layer.params, *params, "params at layer {}", layer.index);
        assert_eq!(
            layer.activation_size, *act,
            "activation at layer {}",
            layer.index
        );
        assert_eq!(layer.gradient_size, *act);
    }
    assert_eq!(p.total_flops(), 1_429_042_176.0);
}

#[test]
fn fixed_split_prefix() {
    let p = ModelProfile::bundled_lenet();
    assert_eq!(p.device_flops(9).unwrap(), 1_371_927_552.0);
    assert_eq!(p.server_flops(9).unwrap(), 57_114_624.0);
    assert_eq!(p.device_params(9).unwrap(), 125_952);
    assert_eq!(p.smashed_size(9).unwrap(), 18_432);
}

fn md(freq_hz: f64, cores: u32) -> (DeviceSpec, ServerSpec) {
    let mut run = ExperimentConfig::default().to_run_config().unwrap();
    run.population.count = 1;
    run.population.pinned[0].freq_hz = freq_hz;
    run.population.pinned[0].cores = cores;
    let pop = build_population(&run.population, &run.server, 0).unwrap();
    (pop.devices[0], pop.server)
}

fn check(freq: f64, cores: u32, dec: Decision, rho: (f64, f64), delay: f64, energy: f64) {
    let (dev, srv) = md(freq, cores);
    let draw = ChannelDraw::from_fading(
        &dev.uplink,
        &srv.downlink_to(&dev),
        rho.0,
        rho.1,
        GainMode::Power,
    );
    let c = CostModel::default()
        .evaluate(&ModelProfile::bundled_lenet(), &dev, &srv, &draw, dec)
        .unwrap();
    assert!(
        (c.delay_total / delay - 1.0).abs() < 1e-12,
        "delay {} vs {delay}",
        c.delay_total
    );
    assert!(
        (c.energy_total / energy - 1.0).abs() < 1e-12,
        "energy {} vs {energy}",
        c.energy_total
    );
}

// Reference values: 50-digit arithmetic over the same default inputs and
// the profile's layer table.

#[test]
fn md1_fixed_split_mean_channel() {
    check(
        0.5e9,
        1,
        Decision::new(9, 1.0),
        (1.0, 1.0),
        0.355_559_922_167_065_3,
        2_659.295_584_787_029,
    );
}

#[test]
fn md1_early_split_quarter_share() {
    check(
        0.5e9,
        1,
        Decision::new(3, 0.25),
        (1.0, 1.0),
        0.027_629_505_114_419_43,
        15_759.761_259_494_527,
    );
}

#[test]
fn md4_fully_local() {
    check(
        4e9,
        16,
        Decision::new(12, 0.0),
        (1.0, 1.0),
        0.065_465_643_530_326_37,
        29_266.859_527_706_31,
    );
}

#[test]
fn md3_faded_channel() {
    check(
        2e9,
        8,
        Decision::new(6, 0.05),
        (0.3, 2.5),
        0.022_459_199_596_858_18,
        3_554.909_686_349_074,
    );
}

#[test]
fn default_noise_floor() {
    let run = ExperimentConfig::default().to_run_config().unwrap();
    let up = run.population.uplink;
    assert_eq!(up.noise_psd_w_per_hz, dbm_per_hz_to_watts(-174.0));
    // -164 dBm/Hz is ten times -174 dBm/Hz.
    assert!((up.interference_psd_w_per_hz / up.noise_psd_w_per_hz - 10.0).abs() < 1e-12);
}
