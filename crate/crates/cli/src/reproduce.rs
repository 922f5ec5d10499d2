//! Desk-scale figure recipes. Every recipe writes CSV tables plus manifests
//! into the output directory.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use iceberg_core::modulation::BasisKind;
use iceberg_core::montecarlo::estimate_stats;
use iceberg_core::rng::derive_seed;
use iceberg_core::shaping::Objective;
use iceberg_core::{expected_sq_acf, ConstellationSpec, ModulationBasis, NyquistPulse, TrialConfig};
use serde_json::json;

use crate::commands::{db, design_pulse, symbol_region, RangingExperiment};
use crate::config::{default_targets, MethodSpec, ShapingOpts, SweepOpts, WaveformOpts};
use crate::error::{CliError, Violations};
use crate::output::{emit, Cell, Manifest, Table};

const N: usize = 128;
const L: usize = 10;
const ALPHA: f64 = 0.35;
/// Integration count quoted for the shaped-pulse figure.
const M_SHAPED: usize = 250_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// SC, 16-QAM: theory and Monte Carlo at M = 1 and 100
    Fig1,
    /// SC, CDMA and OFDM with 16-QAM at M = 1 and 100
    Fig2,
    /// OFDM under 16-PSK, 16-QAM, 1024-QAM and Gaussian symbols
    Fig3,
    /// PSL-shaped pulse vs RRC over symbol delays 5..15 (OFDM, 16-QAM)
    Fig4,
    /// Squared spectra of the shaped pulse and RRC
    Fig5,
    /// Two-target ranging with 16-PSK, SC vs OFDM, RRC vs designed
    Fig6,
    /// Two-target ranging with 16-QAM OFDM, M = 1 vs 1000
    Fig7,
    /// Every figure
    All,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Base seed
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo trials for M = 1 curves
    #[arg(long, default_value_t = 20_000)]
    pub trials: usize,
    /// Monte Carlo blocks for M = 100 curves
    #[arg(long, default_value_t = 200)]
    pub blocks: usize,
    /// Monte Carlo runs per SNR point for ranging figures
    #[arg(long, default_value_t = 200)]
    pub runs: usize,
    /// SNR grid in dB for ranging figures, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "-10,-5,0,5,10,15,20,25,30,35,40")]
    pub snr: Vec<f64>,
}

pub fn reproduce(args: ReproduceArgs) -> Result<(), CliError> {
    let mut v = Violations::default();
    v.check(args.trials >= 2, "trials", "need at least two trials");
    v.check(args.blocks >= 2, "blocks", "need at least two blocks");
    v.check(args.runs >= 1, "runs", "must be >= 1");
    v.check(
        !args.snr.is_empty() && args.snr.iter().all(|x| x.is_finite()),
        "snr",
        "need a non-empty list of finite values",
    );
    v.finish()?;
    let all = [
        Figure::Fig1,
        Figure::Fig2,
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig6,
        Figure::Fig7,
    ];
    let figs: Vec<Figure> = if args.figure == Figure::All { all.to_vec() } else { vec![args.figure] };
    for f in figs {
        let t0 = Instant::now();
        match f {
            Figure::Fig1 => fig1(&args)?,
            Figure::Fig2 => fig2(&args)?,
            Figure::Fig3 => fig3(&args)?,
            Figure::Fig4 => fig4(&args)?,
            Figure::Fig5 => fig5(&args)?,
            Figure::Fig6 => fig6(&args)?,
            Figure::Fig7 => fig7(&args)?,
            Figure::All => unreachable!(),
        }
        eprintln!("{f:?} done in {:.1} s", t0.elapsed().as_secs_f64());
    }
    Ok(())
}

fn out(args: &ReproduceArgs, name: &str) -> PathBuf {
    args.out_dir.join(name)
}

fn rrc() -> NyquistPulse {
    NyquistPulse::rrc(N, L, ALPHA).expect("fixed parameters")
}

fn basis(kind: BasisKind) -> ModulationBasis {
    ModulationBasis::new(kind, N).expect("fixed parameters")
}

fn constellation(name: &str) -> ConstellationSpec {
    ConstellationSpec::from_name(name).expect("built-in name")
}

/// One theory column and one Monte Carlo column.
struct Curve {
    label: String,
    theory_db: Vec<f64>,
    mc_db: Option<Vec<f64>>,
}

fn curve(
    label: String,
    c: &ConstellationSpec,
    b: &ModulationBasis,
    p: &NyquistPulse,
    m: usize,
    trials: Option<usize>,
    seed: u64,
) -> Result<Curve, CliError> {
    let theory = expected_sq_acf(b, p, c.kurtosis(), m)?;
    let mc_db = match trials {
        Some(trials) => {
            let cfg = TrialConfig::new(c.clone(), b.clone(), p.clone(), trials, m, seed)?;
            let st = estimate_stats(&cfg)?;
            Some(st.mean_sq.iter().map(|&x| db(x, N)).collect())
        }
        None => None,
    };
    Ok(Curve {
        label,
        theory_db: theory.total.iter().map(|&x| db(x, N)).collect(),
        mc_db,
    })
}

fn curve_table(curves: &[Curve]) -> Table {
    let mut header = vec!["lag".to_string(), "delay_symbols".to_string(), "iceberg_db".to_string()];
    for c in curves {
        header.push(format!("theory_{}_db", c.label));
        if c.mc_db.is_some() {
            header.push(format!("mc_{}_db", c.label));
        }
    }
    let ice = rrc().iceberg_profile();
    let mut t = Table::new(header);
    for k in 0..N * L {
        let mut row: Vec<Cell> = vec![k.into(), (k as f64 / L as f64).into(), db(ice[k], N).into()];
        for c in curves {
            row.push(c.theory_db[k].into());
            if let Some(mc) = &c.mc_db {
                row.push(mc[k].into());
            }
        }
        t.push(row);
    }
    t
}

fn finish(args: &ReproduceArgs, fig: &str, t: &Table, params: serde_json::Value, notes: Vec<String>, t0: Instant) -> Result<(), CliError> {
    let path = out(args, &format!("{fig}.csv"));
    let mut man = Manifest::new(&format!("reproduce {fig}"), &path, Some(args.seed), params);
    man.notes = notes;
    emit(t, &path, &mut man, t0.elapsed())
}

fn mc_params(args: &ReproduceArgs) -> serde_json::Value {
    json!({ "n": N, "l": L, "alpha": ALPHA, "pulse": "rrc", "trials_m1": args.trials, "blocks_m100": args.blocks })
}

fn fig1(args: &ReproduceArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let (c, b, p) = (constellation("qam16"), basis(BasisKind::Sc), rrc());
    let curves = vec![
        curve("m1".into(), &c, &b, &p, 1, Some(args.trials), derive_seed(args.seed, 11))?,
        curve("m100".into(), &c, &b, &p, 100, Some(100 * args.blocks), derive_seed(args.seed, 12))?,
    ];
    let mut params = mc_params(args);
    params["constellation"] = json!("qam16");
    params["basis"] = json!("sc");
    finish(args, "fig1", &curve_table(&curves), params, vec![], t0)
}

fn fig2(args: &ReproduceArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let (c, p) = (constellation("qam16"), rrc());
    let mut curves = Vec::new();
    for (i, kind) in [BasisKind::Sc, BasisKind::Cdma, BasisKind::Ofdm].into_iter().enumerate() {
        let b = basis(kind);
        for (j, m) in [1usize, 100].into_iter().enumerate() {
            let trials = if m == 1 { args.trials } else { m * args.blocks };
            let seed = derive_seed(args.seed, 20 + 2 * i as u64 + j as u64);
            curves.push(curve(format!("{kind}_m{m}"), &c, &b, &p, m, Some(trials), seed)?);
        }
    }
    let mut params = mc_params(args);
    params["constellation"] = json!("qam16");
    let notes = vec!["the CDMA basis is the normalized Sylvester Hadamard matrix".into()];
    finish(args, "fig2", &curve_table(&curves), params, notes, t0)
}

fn fig3(args: &ReproduceArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let (b, p) = (basis(BasisKind::Ofdm), rrc());
    let mut curves = Vec::new();
    for (i, name) in ["psk16", "qam16", "qam1024", "gaussian"].into_iter().enumerate() {
        let c = constellation(name);
        curves.push(curve(name.into(), &c, &b, &p, 1, Some(args.trials), derive_seed(args.seed, 30 + i as u64))?);
    }
    let mut params = mc_params(args);
    params["basis"] = json!("ofdm");
    finish(args, "fig3", &curve_table(&curves), params, vec![], t0)
}

fn shaped_pulse() -> Result<(NyquistPulse, Vec<usize>), CliError> {
    let lags = symbol_region(5, 15, L);
    let sol = design_pulse(N, L, ALPHA, lags.clone(), Objective::Psl, 1e-8, 200_000)?;
    Ok((sol.pulse, lags))
}

fn fig4(args: &ReproduceArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let (designed, lags) = shaped_pulse()?;
    let p = rrc();
    let (c, b) = (constellation("qam16"), basis(BasisKind::Ofdm));
    let mu4 = c.kurtosis();
    let td = expected_sq_acf(&b, &designed, mu4, M_SHAPED)?;
    let tr = expected_sq_acf(&b, &p, mu4, M_SHAPED)?;
    let mut t = Table::new([
        "lag",
        "delay_symbols",
        "in_region",
        "designed_iceberg_db",
        "rrc_iceberg_db",
        "delta_db",
        "designed_total_db",
        "rrc_total_db",
    ]);
    for k in 0..N * L {
        let (a, r) = (db(td.iceberg[k], N), db(tr.iceberg[k], N));
        t.push(vec![
            k.into(),
            (k as f64 / L as f64).into(),
            lags.contains(&k).into(),
            a.into(),
            r.into(),
            (a - r).into(),
            db(td.total[k], N).into(),
            db(tr.total[k], N).into(),
        ]);
    }
    let params = json!({
        "n": N, "l": L, "alpha": ALPHA, "basis": "ofdm", "constellation": "qam16", "m": M_SHAPED,
        "shaping": { "objective": "psl", "region": "5:15", "region_units": "symbol" },
    });
    let notes = vec![
        format!("region 5:15 in symbol units covers lags {}..={}", lags[0], lags[lags.len() - 1]),
        format!("sea level drops by 10*log10(M) = {:.2} dB at M = {M_SHAPED}", 10.0 * (M_SHAPED as f64).log10()),
    ];
    finish(args, "fig4", &t, params, notes, t0)
}

fn fig5(args: &ReproduceArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let (designed, _) = shaped_pulse()?;
    let p = rrc();
    let (gd, gr) = (designed.full_spectrum(), p.full_spectrum());
    let k = N * L;
    let mut t = Table::new(["bin", "freq_symbols", "designed", "rrc"]);
    for i in 0..k {
        // bins sit at half-integer frequencies; upper half are negative
        let f = if i < k / 2 { (i as f64 + 0.5) / N as f64 } else { (i as f64 + 0.5) / N as f64 - L as f64 };
        t.push(vec![i.into(), f.into(), gd[i].into(), gr[i].into()]);
    }
    let params = json!({
        "n": N, "l": L, "alpha": ALPHA,
        "shaping": { "objective": "psl", "region": "5:15", "region_units": "symbol" },
    });
    let notes = vec!["spectra are |P(f)|^2 scaled so the passband equals 1; frequency in units of the symbol rate".into()];
    finish(args, "fig5", &t, params, notes, t0)
}

fn ranging(args: &ReproduceArgs, fig: &str, constellation: &str, methods: Vec<MethodSpec>) -> Result<(), CliError> {
    let t0 = Instant::now();
    let mut waveform = WaveformOpts {
        constellation: Some(constellation.into()),
        ..Default::default()
    };
    waveform.fill_defaults();
    let mut sweep = SweepOpts {
        snr_db: Some(args.snr.clone()),
        runs: Some(args.runs),
        ..Default::default()
    };
    sweep.fill_defaults();
    let exp = RangingExperiment {
        waveform,
        shaping: ShapingOpts::default(),
        targets: default_targets(),
        sweep,
        methods,
        seed: args.seed,
    };
    let rmse = out(args, &format!("{fig}_rmse.csv"));
    let profile = out(args, &format!("{fig}_profile.csv"));
    exp.emit(Some(&rmse), Some(&profile), &format!("reproduce {fig}"), t0)?;
    Ok(())
}

fn fig6(args: &ReproduceArgs) -> Result<(), CliError> {
    let methods = vec![
        MethodSpec::new("ofdm-rrc", "rrc", Some("ofdm"), None),
        MethodSpec::new("ofdm-designed", "designed", Some("ofdm"), None),
        MethodSpec::new("sc-rrc", "rrc", Some("sc"), None),
        MethodSpec::new("sc-designed", "designed", Some("sc"), None),
    ];
    ranging(args, "fig6", "psk16", methods)
}

fn fig7(args: &ReproduceArgs) -> Result<(), CliError> {
    let methods = vec![
        MethodSpec::new("rrc-m1", "rrc", None, Some(1)),
        MethodSpec::new("designed-m1", "designed", None, Some(1)),
        MethodSpec::new("rrc-m1000", "rrc", None, Some(1000)),
        MethodSpec::new("designed-m1000", "designed", None, Some(1000)),
    ];
    ranging(args, "fig7", "qam16", methods)
}

