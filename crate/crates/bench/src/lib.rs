//! Shared fixtures for the benchmarks.

use iceberg_core::modulation::BasisKind;
use iceberg_core::ranging::{two_target_scenario, RangingScenario, Waveform};
use iceberg_core::{ConstellationSpec, ModulationBasis, NyquistPulse, TrialConfig};

pub fn waveform(kind: BasisKind, n: usize, l: usize) -> (ConstellationSpec, ModulationBasis, NyquistPulse) {
    (
        ConstellationSpec::qam(16).expect("16-QAM"),
        ModulationBasis::new(kind, n).expect("basis"),
        NyquistPulse::rrc(n, l, 0.35).expect("rrc"),
    )
}

pub fn trial_config(kind: BasisKind, n: usize, l: usize, trials: usize, m: usize) -> TrialConfig {
    let (c, b, p) = waveform(kind, n, l);
    TrialConfig::new(c, b, p, trials, m, 7).expect("trial config")
}

pub fn ranging_scenario(m: usize) -> RangingScenario {
    let (c, b, p) = waveform(BasisKind::Ofdm, 128, 10);
    let wf = Waveform::new(c, b, p).expect("waveform");
    let mut sc = two_target_scenario(wf, 45.0, m).expect("scenario");
    sc.noise_var = sc.noise_for_snr(20.0);
    sc
}
