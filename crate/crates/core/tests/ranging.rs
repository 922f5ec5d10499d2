use iceberg_core::modulation::BasisKind;
use iceberg_core::ranging::{rmse_sweep, two_target_scenario, SweepRow, Waveform};
use iceberg_core::shaping::{region_lags, Objective, RegionUnits, ShapingProblem};
use iceberg_core::{ConstellationSpec, ModulationBasis, NyquistPulse};

const SNRS: [f64; 3] = [0.0, 20.0, 35.0];
const RUNS: usize = 100;

fn designed() -> NyquistPulse {
    let lags = region_lags(50, 150, RegionUnits::Lag, 10);
    let prob = ShapingProblem::new(128, 10, 0.35, lags, Objective::Isl).unwrap();
    prob.solve().unwrap().pulse
}

fn sweep(constellation: &str, kind: BasisKind, pulse: &NyquistPulse, m: usize) -> Vec<SweepRow> {
    let wf = Waveform::new(
        ConstellationSpec::from_name(constellation).unwrap(),
        ModulationBasis::new(kind, 128).unwrap(),
        pulse.clone(),
    )
    .unwrap();
    let sc = two_target_scenario(wf, 45.0, m).unwrap();
    rmse_sweep(&sc, &SNRS, RUNS, 2024).unwrap()
}

#[test]
fn qam_weak_target_needs_integration() {
    let rrc = NyquistPulse::rrc(128, 10, 0.35).unwrap();
    let des = designed();
    for pulse in [&rrc, &des] {
        let single = sweep("qam16", BasisKind::Ofdm, pulse, 1);
        let integrated = sweep("qam16", BasisKind::Ofdm, pulse, 1000);
        for (a, b) in single.iter().zip(&integrated) {
            assert!(a.success_rate < 0.5, "{a:?}");
            if a.snr_db > 0.0 {
                assert!(b.success_rate > a.success_rate, "{a:?} vs {b:?}");
            }
        }
    }
    let r = sweep("qam16", BasisKind::Ofdm, &rrc, 1000);
    let d = sweep("qam16", BasisKind::Ofdm, &des, 1000);
    assert!(d[2].rmse_m <= r[2].rmse_m);
}

#[test]
fn psk_ofdm_beats_single_carrier() {
    let rrc = NyquistPulse::rrc(128, 10, 0.35).unwrap();
    let des = designed();
    for pulse in [&rrc, &des] {
        let ofdm = sweep("psk16", BasisKind::Ofdm, pulse, 1);
        let sc = sweep("psk16", BasisKind::Sc, pulse, 1);
        assert!(ofdm[2].rmse_m <= sc[2].rmse_m, "{:?} vs {:?}", ofdm[2], sc[2]);
        assert!(sc[2].success_rate < 0.5);
    }
    let r = sweep("psk16", BasisKind::Ofdm, &rrc, 1);
    let d = sweep("psk16", BasisKind::Ofdm, &des, 1);
    assert!(d[2].rmse_m < r[2].rmse_m);
}

#[test]
fn success_rate_grows_with_integration() {
    let rrc = NyquistPulse::rrc(128, 10, 0.35).unwrap();
    let rates: Vec<f64> = [1, 10, 100, 1000]
        .iter()
        .map(|&m| sweep("qam16", BasisKind::Ofdm, &rrc, m)[2].success_rate)
        .collect();
    // allow binomial noise between neighbouring points: 2·sqrt(0.25/RUNS)
    let slack = 2.0 * (0.25 / RUNS as f64).sqrt();
    for w in rates.windows(2) {
        assert!(w[1] >= w[0] - slack, "{rates:?}");
    }
    assert!(rates[3] > rates[0]);
}
