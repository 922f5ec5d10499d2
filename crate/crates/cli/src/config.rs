//! Configuration blocks shared by the subcommands.
//!
//! Each block is both a set of command-line flags and a TOML table. Values
//! given on the command line override the file; missing values take the
//! defaults below, and the fully resolved blocks are echoed in every manifest.

use std::path::{Path, PathBuf};

use clap::Args;
use iceberg_core::modulation::BasisKind;
use iceberg_core::shaping::{region_lags, Objective, RegionUnits};
use iceberg_core::{ConstellationSpec, ModulationBasis, NyquistPulse};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Violations};

/// Fill `self.field` from `other.field` when unset.
macro_rules! merge {
    ($dst:expr, $src:expr; $($f:ident),+ $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.take(); } )+
    };
}

/// Set `self.field` to a default when unset.
macro_rules! default {
    ($dst:expr; $($f:ident = $v:expr),+ $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = Some($v.into()); } )+
    };
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformOpts {
    /// Constellation name: pskM, qamM, qpsk, gaussian
    #[arg(long)]
    pub constellation: Option<String>,
    /// Custom alphabet file (`re im [prob]` per line); overrides --constellation
    #[arg(long)]
    pub constellation_file: Option<PathBuf>,
    /// Modulation basis: sc, ofdm, cdma
    #[arg(long)]
    pub basis: Option<String>,
    /// Custom unitary file (row-major `re im` pairs); overrides --basis
    #[arg(long)]
    pub basis_file: Option<PathBuf>,
    /// Pulse: rrc or sinc
    #[arg(long)]
    pub pulse: Option<String>,
    /// Roll-off segment file (one value per line); overrides --pulse
    #[arg(long)]
    pub pulse_file: Option<PathBuf>,
    /// Number of symbols N
    #[arg(long)]
    pub n: Option<usize>,
    /// Oversampling ratio L
    #[arg(long)]
    pub l: Option<usize>,
    /// Roll-off factor
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl WaveformOpts {
    pub fn merge(&mut self, mut file: Self) {
        merge!(self, file; constellation, constellation_file, basis, basis_file, pulse, pulse_file, n, l, alpha);
    }

    pub fn fill_defaults(&mut self) {
        default!(self; constellation = "qam16", basis = "ofdm", pulse = "rrc", n = 128usize, l = 10usize, alpha = 0.35);
    }

    fn check_grid(&self, v: &mut Violations) {
        let (n, l, alpha) = (self.n.unwrap_or(0), self.l.unwrap_or(0), self.alpha.unwrap_or(f64::NAN));
        v.check(n >= 2, "waveform.n", format!("must be >= 2, got {n}"));
        v.check(l >= 1, "waveform.l", format!("must be >= 1, got {l}"));
        v.check(
            (0.0..=1.0).contains(&alpha),
            "waveform.alpha",
            format!("must lie in [0, 1], got {alpha}"),
        );
    }

    pub fn constellation(&self, v: &mut Violations) -> Option<ConstellationSpec> {
        match &self.constellation_file {
            Some(p) => {
                let text = v.take("waveform.constellation_file", read_text(p))?;
                v.take("waveform.constellation_file", ConstellationSpec::from_text(&text))
            }
            None => v.take(
                "waveform.constellation",
                ConstellationSpec::from_name(self.constellation.as_deref().unwrap_or_default()),
            ),
        }
    }

    pub fn basis(&self, v: &mut Violations) -> Option<ModulationBasis> {
        match &self.basis_file {
            Some(p) => {
                let text = v.take("waveform.basis_file", read_text(p))?;
                let b = v.take("waveform.basis_file", ModulationBasis::from_text(&text))?;
                if let Some(n) = self.n.filter(|&n| n != b.n()) {
                    v.push("waveform.basis_file", format!("matrix order {} differs from n = {n}", b.n()));
                    return None;
                }
                Some(b)
            }
            None => {
                let kind = v.take(
                    "waveform.basis",
                    self.basis.as_deref().unwrap_or_default().parse::<BasisKind>(),
                )?;
                if kind == BasisKind::Custom {
                    v.push("waveform.basis", "custom bases are loaded with basis_file");
                    return None;
                }
                v.take("waveform.basis", ModulationBasis::new(kind, self.n?))
            }
        }
    }

    pub fn pulse(&self, v: &mut Violations) -> Option<NyquistPulse> {
        let (n, l) = (self.n?, self.l?);
        match &self.pulse_file {
            Some(p) => {
                let text = v.take("waveform.pulse_file", read_text(p))?;
                v.take("waveform.pulse_file", NyquistPulse::from_text(n, l, &text))
            }
            None => match self.pulse.as_deref().unwrap_or_default() {
                "rrc" => v.take("waveform.pulse", NyquistPulse::rrc(n, l, self.alpha?)),
                "sinc" => v.take("waveform.pulse", NyquistPulse::sinc(n, l)),
                other => {
                    v.push("waveform.pulse", format!("expected rrc or sinc, got `{other}`"));
                    None
                }
            },
        }
    }

    /// Validate the grid and build all three waveform components, reporting
    /// every problem found.
    pub fn build(&self, v: &mut Violations) -> Option<(ConstellationSpec, ModulationBasis, NyquistPulse)> {
        let before = v.len();
        self.check_grid(v);
        let grid_ok = v.len() == before;
        let c = self.constellation(v);
        let b = if grid_ok { self.basis(v) } else { None };
        let p = if grid_ok { self.pulse(v) } else { None };
        Some((c?, b?, p?))
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialOpts {
    /// Number of Monte Carlo trials (symbol slots)
    #[arg(long)]
    pub trials: Option<usize>,
    /// Coherent integration count M
    #[arg(long)]
    pub m: Option<usize>,
    /// Base seed
    #[arg(long)]
    pub seed: Option<u64>,
}

impl TrialOpts {
    pub fn merge(&mut self, mut file: Self) {
        merge!(self, file; trials, m, seed);
    }

    pub fn fill_defaults(&mut self) {
        default!(self; trials = 20_000usize, m = 1usize, seed = 1u64);
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapingOpts {
    /// Design objective: isl or psl
    #[arg(long)]
    pub objective: Option<String>,
    /// Sidelobe region `a:b` (inclusive)
    #[arg(long)]
    pub region: Option<String>,
    /// Units of --region: lag (oversampled) or symbol (expands to [aL, bL])
    #[arg(long)]
    pub region_units: Option<String>,
    /// Solver tolerance on relative primal and dual residuals
    #[arg(long)]
    pub tol: Option<f64>,
    /// Solver iteration cap
    #[arg(long)]
    pub max_iter: Option<usize>,
}

/// Parsed and expanded design settings.
#[derive(Debug, Clone)]
pub struct Design {
    pub objective: Objective,
    pub lags: Vec<usize>,
    pub tol: f64,
    pub max_iter: usize,
}

impl ShapingOpts {
    pub fn merge(&mut self, mut file: Self) {
        merge!(self, file; objective, region, region_units, tol, max_iter);
    }

    pub fn fill_defaults(&mut self) {
        default!(self; objective = "psl", region = "5:15", region_units = "symbol", tol = 1e-8, max_iter = 200_000usize);
    }

    pub fn design(&self, l: usize, v: &mut Violations) -> Option<Design> {
        let objective = v.take("shaping.objective", self.objective.as_deref().unwrap_or_default().parse::<Objective>());
        let units = v.take(
            "shaping.region_units",
            self.region_units.as_deref().unwrap_or_default().parse::<RegionUnits>(),
        );
        let region = v.take("shaping.region", parse_region(self.region.as_deref().unwrap_or_default()));
        let tol = self.tol.unwrap_or(f64::NAN);
        v.check(tol > 0.0 && tol.is_finite(), "shaping.tol", format!("must be positive, got {tol}"));
        let max_iter = self.max_iter.unwrap_or(0);
        v.check(max_iter >= 1, "shaping.max_iter", "must be >= 1");
        let (a, b) = region?;
        Some(Design {
            objective: objective?,
            lags: region_lags(a, b, units?, l),
            tol,
            max_iter,
        })
    }
}

/// Parse `a:b` with `a <= b`.
pub fn parse_region(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `a:b`, got `{s}`"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("bad start `{a}`: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("bad end `{b}`: {e}"))?;
    if a > b {
        return Err(format!("start {a} exceeds end {b}"));
    }
    Ok((a, b))
}

fn read_text(p: &Path) -> Result<String, String> {
    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

/// Optional TOML file holding any of the blocks.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub waveform: WaveformOpts,
    pub trials: TrialOpts,
    pub shaping: ShapingOpts,
    pub targets: Vec<TargetSpec>,
    pub sweep: SweepOpts,
    pub methods: Vec<MethodSpec>,
    pub output: OutputOpts,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))
    }
}

/// Output paths that may also be given in the file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOpts {
    pub out: Option<PathBuf>,
    pub out_spectrum: Option<PathBuf>,
    pub out_acf: Option<PathBuf>,
    pub out_rmse: Option<PathBuf>,
    pub out_profile: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub range_m: f64,
    /// Echo power relative to unit amplitude, in dB.
    #[serde(default)]
    pub power_db: f64,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOpts {
    /// SNR grid in dB, comma separated
    #[arg(long = "snr", value_delimiter = ',', num_args = 1..)]
    pub snr_db: Option<Vec<f64>>,
    /// Monte Carlo runs per SNR point
    #[arg(long)]
    pub runs: Option<usize>,
    /// Coherent integration count M
    #[arg(long = "m")]
    pub m: Option<usize>,
    /// System bandwidth in Hz
    #[arg(long)]
    pub bandwidth_hz: Option<f64>,
    /// Range interval of interest `lo:hi` in metres
    #[arg(skip)]
    pub roi_m: Option<[f64; 2]>,
    /// Label of the target to estimate
    #[arg(long)]
    pub track: Option<String>,
    /// Redraw target phases every run
    #[arg(skip)]
    pub random_phase: Option<bool>,
    /// SNR of the emitted example range profile
    #[arg(long)]
    pub profile_snr_db: Option<f64>,
}

impl SweepOpts {
    pub fn merge(&mut self, mut file: Self) {
        merge!(self, file; snr_db, runs, m, bandwidth_hz, roi_m, track, random_phase, profile_snr_db);
    }

    pub fn fill_defaults(&mut self) {
        default!(self;
            snr_db = vec![-10.0, 0.0, 10.0, 20.0, 30.0, 40.0],
            runs = 200usize,
            m = 1usize,
            bandwidth_hz = 200e6,
            roi_m = [23.74, 31.24],
            track = "weak",
            random_phase = true,
            profile_snr_db = 30.0,
        );
    }
}

/// One compared configuration in a ranging sweep. Unset fields inherit the
/// `[waveform]` block and the sweep's `m`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    /// `rrc`, `sinc`, `designed` or `file`
    pub pulse: Option<String>,
    pub pulse_file: Option<PathBuf>,
    pub basis: Option<String>,
    pub constellation: Option<String>,
    pub m: Option<usize>,
}

impl MethodSpec {
    pub fn new(name: &str, pulse: &str, basis: Option<&str>, m: Option<usize>) -> Self {
        Self {
            name: name.into(),
            pulse: Some(pulse.into()),
            basis: basis.map(Into::into),
            m,
            ..Self::default()
        }
    }
}

pub fn default_targets() -> Vec<TargetSpec> {
    vec![
        TargetSpec {
            range_m: 20.0,
            power_db: 0.0,
            label: "strong".into(),
        },
        TargetSpec {
            range_m: 30.0,
            power_db: -45.0,
            label: "weak".into(),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let mut flags = WaveformOpts {
            n: Some(64),
            ..Default::default()
        };
        let file = WaveformOpts {
            n: Some(32),
            l: Some(4),
            ..Default::default()
        };
        flags.merge(file);
        flags.fill_defaults();
        assert_eq!((flags.n, flags.l, flags.alpha), (Some(64), Some(4), Some(0.35)));
    }

    #[test]
    fn every_violation_is_listed() {
        let w = WaveformOpts {
            constellation: Some("qam8".into()),
            basis: Some("fft".into()),
            pulse: Some("rrc".into()),
            n: Some(1),
            l: Some(0),
            alpha: Some(1.5),
            ..Default::default()
        };
        let mut v = Violations::default();
        assert!(w.build(&mut v).is_none());
        let msgs = match v.finish() {
            Err(CliError::Validation(m)) => m,
            other => panic!("{other:?}"),
        };
        for field in ["waveform.n", "waveform.l", "waveform.alpha", "waveform.constellation"] {
            assert!(msgs.iter().any(|m| m.starts_with(field)), "{field} missing from {msgs:?}");
        }
    }

    #[test]
    fn region_parsing() {
        assert_eq!(parse_region("5:15"), Ok((5, 15)));
        assert!(parse_region("15:5").is_err());
        assert!(parse_region("5-15").is_err());
    }

    #[test]
    fn file_schema_round_trips() {
        let text = r#"
            seed = 3
            [waveform]
            constellation = "psk16"
            n = 64
            [[targets]]
            range_m = 20.0
            label = "a"
            [sweep]
            snr_db = [0.0, 10.0]
            roi_m = [1.0, 2.0]
            [[methods]]
            name = "x"
            pulse = "designed"
            m = 10
        "#;
        let cfg: FileConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.waveform.n, Some(64));
        assert_eq!(cfg.targets[0].label, "a");
        assert_eq!(cfg.methods[0].m, Some(10));
        assert!(toml::from_str::<FileConfig>("[waveform]\nbogus = 1").is_err());
    }
}
