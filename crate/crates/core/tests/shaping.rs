use iceberg_core::pulse::{to_db, NyquistPulse};
use iceberg_core::shaping::{compare, objective_isl, objective_psl, region_lags, Objective, RegionUnits, ShapingProblem, FEASIBILITY_TOL};

fn problem(objective: Objective) -> ShapingProblem {
    // delay window [5, 15] read in symbol units
    let lags = region_lags(5, 15, RegionUnits::Symbol, 10);
    ShapingProblem::new(128, 10, 0.35, lags, objective).unwrap()
}

/// Number of runs of at least `min_len` equal entries (to `tol`).
fn plateaus(x: &[f64], min_len: usize, tol: f64) -> usize {
    let mut count = 0;
    let mut run = 1;
    for w in x.windows(2) {
        if (w[1] - w[0]).abs() <= tol {
            run += 1;
        } else {
            if run >= min_len {
                count += 1;
            }
            run = 1;
        }
    }
    count + usize::from(run >= min_len)
}

#[test]
fn psl_design_suppresses_region() {
    let prob = problem(Objective::Psl);
    let sol = prob.solve().unwrap();
    let rrc = NyquistPulse::rrc(128, 10, 0.35).unwrap();
    let rrc_db = to_db(objective_psl(&rrc, &prob.k_sl) * 128.0, 128);
    let des_db = to_db(objective_psl(&sol.pulse, &prob.k_sl) * 128.0, 128);
    // independent conic-solver reference: -47.7489 dB (RRC) and -77.9499 dB (optimum)
    assert!((rrc_db + 47.7489).abs() < 1e-3, "{rrc_db}");
    assert!((des_db + 77.9499).abs() < 0.05, "{des_db}");
    assert!(rrc_db - des_db >= 20.0);
    assert!(sol.report.max_violation <= FEASIBILITY_TOL);

    let seg = &sol.pulse.spectrum()[prob.free_range()];
    assert!(seg.windows(2).all(|w| w[1] >= w[0]));
    assert!(plateaus(seg, 3, 1e-6) >= 4, "{seg:?}");
    let rrc_seg = &rrc.spectrum()[prob.free_range()];
    assert_eq!(plateaus(rrc_seg, 3, 1e-6), 0);

    let nyq = sol.pulse.iceberg_profile();
    for m in 1..128 {
        assert!(nyq[m * 10] <= 1e-9 * nyq[0]);
    }
}

#[test]
fn isl_design_improves_region_at_cost_elsewhere() {
    let prob = problem(Objective::Isl);
    let sol = prob.solve().unwrap();
    let rrc = NyquistPulse::rrc(128, 10, 0.35).unwrap();
    let base = objective_isl(&rrc, &prob.k_sl);
    assert!((base - 0.014_161_3).abs() < 1e-7, "{base}");
    assert!(sol.report.objective <= base - prob.tol);
    // independent conic-solver reference optimum 4.352e-5 (a lower value is still optimal-feasible)
    assert!(sol.report.objective <= 4.36e-5, "{}", sol.report.objective);

    let cmp = compare(&sol.pulse, &rrc, &prob.k_sl).unwrap();
    assert!(cmp.isl_a_db < cmp.isl_b_db);
    assert!(cmp.psl_a_db < cmp.psl_b_db);
    let inside: Vec<f64> = cmp
        .lags
        .iter()
        .filter(|&&k| cmp.in_region[k] && k % 10 != 0)
        .map(|&k| cmp.delta_db[k])
        .collect();
    let improved = inside.iter().filter(|&&d| d < 0.0).count();
    assert!(improved * 2 > inside.len());
    let outside_worse = cmp
        .lags
        .iter()
        .filter(|&&k| !cmp.in_region[k] && k % 10 != 0 && k > 0)
        .any(|&k| cmp.delta_db[k] > 0.0);
    assert!(outside_worse);
}

#[test]
fn lag_unit_reading_also_solves() {
    let prob = ShapingProblem::new(128, 10, 0.35, region_lags(5, 15, RegionUnits::Lag, 10), Objective::Psl).unwrap();
    let sol = prob.solve().unwrap();
    assert!(sol.report.max_violation <= FEASIBILITY_TOL);
    let rrc = NyquistPulse::rrc(128, 10, 0.35).unwrap();
    assert!(sol.report.objective <= objective_psl(&rrc, &prob.k_sl));
}
