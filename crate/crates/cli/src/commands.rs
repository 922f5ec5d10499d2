//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use iceberg_core::montecarlo::estimate_stats;
use iceberg_core::pulse::to_db;
use iceberg_core::ranging::{estimate_range, integrate_profiles_fast, rmse_sweep, RangeGrid, RangingScenario, Target, Waveform};
use iceberg_core::shaping::{compare, region_lags, Objective, RegionUnits, ShapingProblem, ShapingSolution, DB_FLOOR};
use iceberg_core::{expected_sq_acf, ConstellationSpec, ModulationBasis, NyquistPulse, TrialConfig};
use num_complex::Complex64;
use serde_json::json;

use crate::config::{
    default_targets, FileConfig, MethodSpec, ShapingOpts, SweepOpts, TargetSpec, TrialOpts, WaveformOpts,
};
use crate::error::{CliError, Violations};
use crate::output::{emit, format_float, write_atomic, Cell, Manifest, Table};

/// `10·log10(v/N²)`, floored so exact zeros stay finite.
pub fn db(v: f64, n: usize) -> f64 {
    to_db(v, n).max(DB_FLOOR)
}

fn require_out(flag: Option<PathBuf>, file: Option<PathBuf>, field: &str, v: &mut Violations) -> Option<PathBuf> {
    let out = flag.or(file);
    if out.is_none() {
        v.push(field, "an output path is required");
    }
    out
}

#[derive(Debug, Clone, Args)]
pub struct AcfTheoryArgs {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub waveform: WaveformOpts,
    /// Coherent integration count M
    #[arg(long)]
    pub m: Option<usize>,
    /// Output CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn acf_theory(args: AcfTheoryArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let mut file = FileConfig::load(args.config.as_deref())?;
    let mut w = args.waveform;
    w.merge(std::mem::take(&mut file.waveform));
    w.fill_defaults();
    let m = args.m.or(file.trials.m).unwrap_or(1);

    let mut v = Violations::default();
    let parts = w.build(&mut v);
    v.check(m >= 1, "trials.m", "must be >= 1");
    let out = require_out(args.out, file.output.out, "output.out", &mut v);
    v.finish()?;
    let ((c, b, p), out) = (parts.expect("validated"), out.expect("validated"));

    let mu4 = c.kurtosis();
    let stats = expected_sq_acf(&b, &p, mu4, m)?;
    let n = p.n();
    let mut t = Table::new(["lag", "iceberg_db", "sea_db", "total_db"]);
    for k in 0..stats.len() {
        t.push(vec![
            k.into(),
            db(stats.iceberg[k], n).into(),
            db(stats.sea[k], n).into(),
            db(stats.total[k], n).into(),
        ]);
    }
    let mut man = Manifest::new("acf-theory", &out, None, json!({ "waveform": w, "m": m }));
    man.results = json!({
        "mu4": mu4,
        "n_alpha": p.n_alpha(),
        "alpha_effective": p.alpha_effective(),
        "mainlobe_total": stats.total[0],
    });
    emit(&t, &out, &mut man, t0.elapsed())
}

#[derive(Debug, Clone, Args)]
pub struct AcfMcArgs {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub waveform: WaveformOpts,
    #[command(flatten)]
    pub trials: TrialOpts,
    /// Output CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn acf_mc(args: AcfMcArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let mut file = FileConfig::load(args.config.as_deref())?;
    let mut w = args.waveform;
    w.merge(std::mem::take(&mut file.waveform));
    w.fill_defaults();
    let mut tr = args.trials;
    tr.seed = tr.seed.or(file.seed);
    tr.merge(std::mem::take(&mut file.trials));
    tr.fill_defaults();
    let (trials, m, seed) = (tr.trials.unwrap_or(0), tr.m.unwrap_or(0), tr.seed.unwrap_or(0));

    let mut v = Violations::default();
    let parts = w.build(&mut v);
    v.check(m >= 1, "trials.m", "must be >= 1");
    v.check(trials >= 1, "trials.trials", "must be >= 1");
    if m >= 1 {
        v.check(trials % m == 0, "trials.trials", format!("{trials} is not a multiple of m = {m}"));
        v.check(trials / m >= 2, "trials.trials", format!("need at least two blocks of m = {m} trials"));
    }
    let out = require_out(args.out, file.output.out, "output.out", &mut v);
    v.finish()?;
    let ((c, b, p), out) = (parts.expect("validated"), out.expect("validated"));

    let mu4 = c.kurtosis();
    let theory = expected_sq_acf(&b, &p, mu4, m)?;
    let cfg = TrialConfig::new(c, b, p, trials, m, seed)?;
    let mc = estimate_stats(&cfg)?;
    let n = cfg.pulse.n();
    let scale = (n * n) as f64;
    let mut t = Table::new(["lag", "empirical_db", "theory_db", "stderr"]);
    for k in 0..mc.len() {
        t.push(vec![
            k.into(),
            db(mc.mean_sq[k], n).into(),
            db(theory.total[k], n).into(),
            (mc.se_mean_sq[k] / scale).into(),
        ]);
    }
    let mut man = Manifest::new("acf-mc", &out, Some(seed), json!({ "waveform": w, "trials": tr }));
    man.notes.push("stderr is the jackknife standard error of the squared ACF divided by N^2".into());
    man.results = json!({
        "mu4": mu4,
        "blocks": mc.blocks,
        "jackknife_groups": mc.groups,
        "fraction_within_5se": mc.fraction_within(&theory.total, 5.0),
    });
    emit(&t, &out, &mut man, t0.elapsed())
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub shaping: ShapingOpts,
    /// Roll-off factor
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of symbols N
    #[arg(long)]
    pub n: Option<usize>,
    /// Oversampling ratio L
    #[arg(long)]
    pub l: Option<usize>,
    /// Roll-off segment of the designed pulse (readable by --pulse-file)
    #[arg(long)]
    pub out_spectrum: Option<PathBuf>,
    /// Per-lag iceberg comparison against RRC
    #[arg(long)]
    pub out_acf: Option<PathBuf>,
}

/// Solve a design and pair it with the RRC pulse of the same roll-off.
pub fn design_pulse(
    n: usize,
    l: usize,
    alpha: f64,
    lags: Vec<usize>,
    objective: Objective,
    tol: f64,
    max_iter: usize,
) -> Result<ShapingSolution, CliError> {
    let mut prob = ShapingProblem::new(n, l, alpha, lags, objective).map_err(|e| CliError::from_setup("shaping", e))?;
    prob.tol = tol;
    prob.max_iter = max_iter;
    prob.solve().map_err(CliError::from)
}

pub fn rolloff_text(pulse: &NyquistPulse) -> String {
    let mut s = format!(
        "# roll-off segment: N={} L={} N_alpha={}\n",
        pulse.n(),
        pulse.l(),
        pulse.n_alpha()
    );
    for &g in &pulse.spectrum()[pulse.rolloff_range()] {
        s.push_str(&format_float(g));
        s.push('\n');
    }
    s
}

pub fn comparison_table(designed: &NyquistPulse, rrc: &NyquistPulse, lags: &[usize]) -> Result<Table, CliError> {
    let cmp = compare(designed, rrc, lags)?;
    let l = designed.l() as f64;
    let mut t = Table::new(["lag", "delay_symbols", "designed_db", "rrc_db", "delta_db", "in_region"]);
    for &k in &cmp.lags {
        t.push(vec![
            k.into(),
            (k as f64 / l).into(),
            cmp.a_db[k].into(),
            cmp.b_db[k].into(),
            cmp.delta_db[k].into(),
            cmp.in_region[k].into(),
        ]);
    }
    Ok(t)
}

pub fn shape(args: ShapeArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let mut file = FileConfig::load(args.config.as_deref())?;
    let mut sh = args.shaping;
    sh.merge(std::mem::take(&mut file.shaping));
    sh.fill_defaults();
    let mut w = WaveformOpts {
        n: args.n,
        l: args.l,
        alpha: args.alpha,
        ..Default::default()
    };
    w.merge(std::mem::take(&mut file.waveform));
    w.fill_defaults();
    let (n, l, alpha) = (w.n.unwrap_or(0), w.l.unwrap_or(0), w.alpha.unwrap_or(f64::NAN));

    let mut v = Violations::default();
    v.check(n >= 2, "waveform.n", format!("must be >= 2, got {n}"));
    v.check(l >= 1, "waveform.l", format!("must be >= 1, got {l}"));
    v.check((0.0..=1.0).contains(&alpha), "waveform.alpha", format!("must lie in [0, 1], got {alpha}"));
    let design = sh.design(l, &mut v);
    if let Some(d) = &design {
        let k = n * l;
        v.check(
            d.lags.iter().all(|&x| x < k),
            "shaping.region",
            format!("lags {}..={} exceed the {k}-lag window", d.lags[0], d.lags[d.lags.len() - 1]),
        );
    }
    let out_spectrum = args.out_spectrum.or(file.output.out_spectrum);
    let out_acf = args.out_acf.or(file.output.out_acf);
    v.finish()?;
    let d = design.expect("validated");

    let sol = design_pulse(n, l, alpha, d.lags.clone(), d.objective, d.tol, d.max_iter)?;
    let rrc = NyquistPulse::rrc(n, l, alpha)?;
    let cmp = compare(&sol.pulse, &rrc, &d.lags)?;
    let r = &sol.report;
    println!(
        "{} design: {} iterations, region ISL {:.3} dB (RRC {:.3} dB), PSL {:.3} dB (RRC {:.3} dB)",
        d.objective, r.iterations, cmp.isl_a_db, cmp.isl_b_db, cmp.psl_a_db, cmp.psl_b_db
    );
    let params = json!({ "waveform": { "n": n, "l": l, "alpha": alpha }, "shaping": sh });
    let mut notes = vec![format!(
        "region {} in {} units covers lags {}..={}",
        sh.region.as_deref().unwrap_or_default(),
        sh.region_units.as_deref().unwrap_or_default(),
        d.lags[0],
        d.lags[d.lags.len() - 1]
    )];
    notes.extend(r.note.clone());
    let results = json!({
        "iterations": r.iterations,
        "objective": r.objective,
        "objective_db": r.objective_db,
        "primal_residual": r.primal_residual,
        "dual_residual": r.dual_residual,
        "max_violation": r.max_violation,
        "n_alpha": sol.pulse.n_alpha(),
        "isl_db": cmp.isl_a_db,
        "isl_rrc_db": cmp.isl_b_db,
        "psl_db": cmp.psl_a_db,
        "psl_rrc_db": cmp.psl_b_db,
    });
    let elapsed = t0.elapsed();
    if let Some(path) = &out_spectrum {
        write_atomic(path, rolloff_text(&sol.pulse).as_bytes())?;
        let mut man = Manifest::new("shape", path, None, params.clone());
        man.notes = notes.clone();
        man.results = results.clone();
        man.write(path, elapsed)?;
    }
    if let Some(path) = &out_acf {
        let t = comparison_table(&sol.pulse, &rrc, &d.lags)?;
        let mut man = Manifest::new("shape", path, None, params);
        man.notes = notes;
        man.results = results;
        emit(&t, path, &mut man, elapsed)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct RangeSimArgs {
    /// TOML configuration file with [waveform], [[targets]], [sweep], [[methods]] and [shaping]
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub waveform: WaveformOpts,
    #[command(flatten)]
    pub sweep: SweepOpts,
    /// Range interval of interest `lo:hi` in metres
    #[arg(long)]
    pub roi: Option<String>,
    /// Base seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// RMSE table output
    #[arg(long)]
    pub out_rmse: Option<PathBuf>,
    /// Example range profile output
    #[arg(long)]
    pub out_profile: Option<PathBuf>,
}

/// Fully resolved ranging experiment shared by `range-sim` and the figure
/// recipes.
#[derive(Debug, Clone)]
pub struct RangingExperiment {
    pub waveform: WaveformOpts,
    pub shaping: ShapingOpts,
    pub targets: Vec<TargetSpec>,
    pub sweep: SweepOpts,
    pub methods: Vec<MethodSpec>,
    pub seed: u64,
}

pub struct RangingOutput {
    pub rmse: Table,
    pub profile: Table,
    pub notes: Vec<String>,
    pub results: serde_json::Value,
}

struct Prepared {
    grid: RangeGrid,
    targets: Vec<Target>,
    roi: (usize, usize),
    track: usize,
    scenarios: Vec<(String, RangingScenario)>,
    notes: Vec<String>,
}

impl RangingExperiment {
    pub fn params(&self) -> serde_json::Value {
        json!({
            "waveform": self.waveform,
            "shaping": self.shaping,
            "targets": self.targets,
            "sweep": self.sweep,
            "methods": self.methods,
            "seed": self.seed,
        })
    }

    fn prepare(&self) -> Result<Prepared, CliError> {
        let mut v = Violations::default();
        let sw = &self.sweep;
        let base = self.waveform.build(&mut v);
        let (n, l) = (self.waveform.n.unwrap_or(0), self.waveform.l.unwrap_or(0));
        let grid = v.take("sweep.bandwidth_hz", RangeGrid::new(n.max(2), l.max(1), sw.bandwidth_hz.unwrap_or(0.0)));
        v.check(!self.targets.is_empty(), "targets", "at least one target is required");
        v.check(!self.methods.is_empty(), "methods", "at least one method is required");
        v.check(sw.runs.unwrap_or(0) >= 1, "sweep.runs", "must be >= 1");
        v.check(sw.m.unwrap_or(0) >= 1, "sweep.m", "must be >= 1");
        v.check(
            sw.snr_db.as_ref().is_some_and(|s| !s.is_empty() && s.iter().all(|x| x.is_finite())),
            "sweep.snr_db",
            "need a non-empty list of finite values",
        );
        let mut names: Vec<&str> = self.methods.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        v.check(
            names.windows(2).all(|w| w[0] != w[1]) && names.iter().all(|s| !s.is_empty() && !s.contains(',')),
            "methods",
            "names must be distinct, non-empty and free of commas",
        );
        for (i, m) in self.methods.iter().enumerate() {
            if m.m == Some(0) {
                v.push(&format!("methods[{i}].m"), "must be >= 1");
            }
        }
        let track = sw.track.clone().unwrap_or_default();
        let track_idx = self.targets.iter().position(|t| t.label == track);
        v.check(track_idx.is_some(), "sweep.track", format!("no target labelled `{track}`"));
        let mut targets = Vec::new();
        let mut roi = None;
        if let Some(g) = &grid {
            for (i, t) in self.targets.iter().enumerate() {
                if let Some(delay) = v.take(&format!("targets[{i}].range_m"), g.range_to_lag(t.range_m)) {
                    targets.push(Target {
                        delay,
                        amplitude: Complex64::new(10f64.powf(t.power_db / 20.0), 0.0),
                        label: t.label.clone(),
                    });
                }
            }
            let [lo, hi] = sw.roi_m.unwrap_or([f64::NAN; 2]);
            let a = v.take("sweep.roi_m", g.range_to_lag(lo));
            let b = v.take("sweep.roi_m", g.range_to_lag(hi));
            if let (Some(a), Some(b)) = (a, b) {
                v.check(a <= b, "sweep.roi_m", "interval is empty");
                roi = Some((a, b));
            }
        }
        v.finish()?;
        let grid = grid.expect("validated");
        let roi = roi.expect("validated");
        let track = track_idx.expect("validated");
        let (c0, b0, p0) = base.expect("validated");

        let mut notes = vec![
            "snr_db is the strongest echo's per-sample received power over the complex noise variance".into(),
            format!(
                "range grid: {} m per lag; roi {:?} m maps to lags {}..={} ({} to {} m)",
                grid.lag_spacing_m(),
                sw.roi_m.unwrap_or_default(),
                roi.0,
                roi.1,
                grid.lag_to_range(roi.0),
                grid.lag_to_range(roi.1)
            ),
            "rmse_m averages over all runs; rmse_success_m only over runs within half a symbol cell".into(),
        ];
        if sw.random_phase.unwrap_or(true) {
            notes.push("target phases are drawn uniformly at random for every run".into());
        }

        let mut designed: Option<NyquistPulse> = None;
        let mut scenarios = Vec::new();
        for (i, m) in self.methods.iter().enumerate() {
            let field = format!("methods[{i}]");
            let constellation = match &m.constellation {
                Some(name) => ConstellationSpec::from_name(name).map_err(|e| CliError::from_setup(&field, e))?,
                None => c0.clone(),
            };
            let basis = match &m.basis {
                Some(name) => {
                    let kind = name.parse().map_err(|e| CliError::from_setup(&field, e))?;
                    ModulationBasis::new(kind, n).map_err(|e| CliError::from_setup(&field, e))?
                }
                None => b0.clone(),
            };
            let pulse = match m.pulse.as_deref() {
                None => p0.clone(),
                Some("rrc") => NyquistPulse::rrc(n, l, self.waveform.alpha.unwrap_or(0.35))?,
                Some("sinc") => NyquistPulse::sinc(n, l)?,
                Some("file") => {
                    let path = m.pulse_file.as_ref().ok_or_else(|| {
                        CliError::Validation(vec![format!("{field}.pulse_file: required when pulse = \"file\"")])
                    })?;
                    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                    NyquistPulse::from_text(n, l, &text).map_err(|e| CliError::from_setup(&field, e))?
                }
                Some("designed") => {
                    if designed.is_none() {
                        let (p, note) = self.design(&grid, &targets, roi)?;
                        notes.push(note);
                        designed = Some(p);
                    }
                    designed.clone().expect("just set")
                }
                Some(other) => {
                    return Err(CliError::Validation(vec![format!(
                        "{field}.pulse: expected rrc, sinc, designed or file, got `{other}`"
                    )]))
                }
            };
            let waveform = Waveform::new(constellation, basis, pulse)?;
            let sc = RangingScenario {
                grid,
                waveform,
                targets: targets.clone(),
                noise_var: 0.0,
                m: m.m.or(sw.m).unwrap_or(1),
                roi,
                track,
                random_phase: sw.random_phase.unwrap_or(true),
            };
            sc.validate()?;
            scenarios.push((m.name.clone(), sc));
        }
        Ok(Prepared {
            grid,
            targets,
            roi,
            track,
            scenarios,
            notes,
        })
    }

    /// Designed pulse for the sweep. Without an explicit region the design
    /// covers the roi's lag offsets from the strongest target.
    fn design(&self, grid: &RangeGrid, targets: &[Target], roi: (usize, usize)) -> Result<(NyquistPulse, String), CliError> {
        let mut sh = self.shaping.clone();
        let derived = sh.region.is_none();
        if derived {
            let strong = targets
                .iter()
                .max_by(|a, b| a.amplitude.norm_sqr().total_cmp(&b.amplitude.norm_sqr()))
                .expect("targets validated");
            let k = grid.lags();
            let lo = (roi.0 + k - strong.delay) % k;
            let hi = (roi.1 + k - strong.delay) % k;
            if lo > hi || lo == 0 {
                return Err(CliError::Validation(vec![
                    "shaping.region: roi offsets from the strongest target wrap around; give a region explicitly".into(),
                ]));
            }
            sh.region = Some(format!("{lo}:{hi}"));
            sh.region_units = Some("lag".into());
            sh.objective = sh.objective.or(Some("isl".into()));
        }
        sh.fill_defaults();
        let mut v = Violations::default();
        let d = sh.design(grid.l, &mut v);
        v.finish()?;
        let d = d.expect("validated");
        let (n, l, alpha) = (grid.n, grid.l, self.waveform.alpha.unwrap_or(0.35));
        let sol = design_pulse(n, l, alpha, d.lags.clone(), d.objective, d.tol, d.max_iter)?;
        let note = format!(
            "designed pulse: {} over lags {}..={}{}, {} iterations",
            d.objective,
            d.lags[0],
            d.lags[d.lags.len() - 1],
            if derived { " (roi offsets from the strongest target)" } else { "" },
            sol.report.iterations
        );
        Ok((sol.pulse, note))
    }

    pub fn run(&self) -> Result<RangingOutput, CliError> {
        let prep = self.prepare()?;
        let snrs = self.sweep.snr_db.clone().unwrap_or_default();
        let runs = self.sweep.runs.unwrap_or(1);
        let mut rmse = Table::new(["method", "snr_db", "rmse_m", "rmse_success_m", "success_rate", "runs"]);
        let mut results = serde_json::Map::new();
        for (name, sc) in &prep.scenarios {
            let rows = rmse_sweep(sc, &snrs, runs, self.seed)?;
            for r in &rows {
                rmse.push(vec![
                    name.as_str().into(),
                    r.snr_db.into(),
                    r.rmse_m.into(),
                    r.rmse_success_m.into(),
                    r.success_rate.into(),
                    r.runs.into(),
                ]);
            }
            results.insert(name.clone(), json!({ "m": sc.m }));
        }

        let profile_snr = self.sweep.profile_snr_db.unwrap_or(30.0);
        let mut header = vec!["lag".to_string(), "range_m".to_string()];
        let mut columns = Vec::new();
        for (name, sc) in &prep.scenarios {
            let mut noisy = sc.clone();
            noisy.noise_var = sc.noise_for_snr(profile_snr);
            let prof = integrate_profiles_fast(&noisy, 0, self.seed)?;
            let est = estimate_range(&prof, prep.roi, &prep.grid)?;
            results[name]["profile_estimate_m"] = json!(est.range_m);
            header.push(format!("{name}_db"));
            columns.push(prof);
        }
        let mut profile = Table::new(header);
        let n = prep.grid.n;
        for k in 0..prep.grid.lags() {
            let mut row: Vec<Cell> = vec![k.into(), prep.grid.lag_to_range(k).into()];
            row.extend(columns.iter().map(|c| Cell::Num(db(c[k], n))));
            profile.push(row);
        }
        let truth = prep.grid.lag_to_range(prep.targets[prep.track].delay);
        let mut notes = prep.notes;
        notes.push(format!("example profile: run 0 at {profile_snr} dB SNR"));
        Ok(RangingOutput {
            rmse,
            profile,
            notes,
            results: json!({
                "lag_spacing_m": prep.grid.lag_spacing_m(),
                "success_radius_m": prep.grid.resolution_m(),
                "roi_lags": [prep.roi.0, prep.roi.1],
                "tracked_range_m": truth,
                "methods": results,
            }),
        })
    }

    pub fn emit(&self, out_rmse: Option<&Path>, out_profile: Option<&Path>, command: &str, t0: Instant) -> Result<RangingOutput, CliError> {
        let res = self.run()?;
        let elapsed = t0.elapsed();
        for (path, table) in [(out_rmse, &res.rmse), (out_profile, &res.profile)] {
            if let Some(path) = path {
                let mut man = Manifest::new(command, path, Some(self.seed), self.params());
                man.notes = res.notes.clone();
                man.results = res.results.clone();
                emit(table, path, &mut man, elapsed)?;
            }
        }
        Ok(res)
    }
}

pub fn range_sim(args: RangeSimArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let mut file = FileConfig::load(args.config.as_deref())?;
    let mut w = args.waveform;
    w.merge(std::mem::take(&mut file.waveform));
    w.fill_defaults();
    let mut sw = args.sweep;
    let mut v = Violations::default();
    if let Some(r) = &args.roi {
        if let Some((a, b)) = v.take("sweep.roi_m", parse_range_pair(r)) {
            sw.roi_m = Some([a, b]);
        }
    }
    sw.merge(std::mem::take(&mut file.sweep));
    sw.fill_defaults();
    let mut sh = std::mem::take(&mut file.shaping);
    if sh.region.is_some() {
        sh.fill_defaults();
    }
    let out_rmse = args.out_rmse.or(file.output.out_rmse);
    let out_profile = args.out_profile.or(file.output.out_profile);
    v.check(
        out_rmse.is_some() || out_profile.is_some(),
        "output",
        "give --out-rmse and/or --out-profile",
    );
    v.finish()?;
    let exp = RangingExperiment {
        waveform: w,
        shaping: sh,
        targets: if file.targets.is_empty() { default_targets() } else { file.targets },
        sweep: sw,
        methods: if file.methods.is_empty() {
            vec![MethodSpec::new("rrc", "rrc", None, None), MethodSpec::new("designed", "designed", None, None)]
        } else {
            file.methods
        },
        seed: args.seed.or(file.seed).unwrap_or(1),
    };
    let res = exp.emit(out_rmse.as_deref(), out_profile.as_deref(), "range-sim", t0)?;
    for row in &res.rmse.rows {
        if let [Cell::Text(name), Cell::Num(snr), Cell::Num(rmse), _, Cell::Num(rate), _] = row.as_slice() {
            println!("{name:>16} {snr:>7.1} dB  rmse {rmse:.4} m  success {rate:.3}");
        }
    }
    Ok(())
}

fn parse_range_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("bad start `{a}`: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("bad end `{b}`: {e}"))?;
    Ok((a, b))
}

/// Expand a symbol-unit region (used by recipes).
pub fn symbol_region(a: usize, b: usize, l: usize) -> Vec<usize> {
    region_lags(a, b, RegionUnits::Symbol, l)
}
