//! The invariant suite behind `otdr verify`.

use otdr_core::detection::{
    constant_input, expected_error_determinant_log, expected_error_ldl_log, helstrom_error, povm_error_log,
    quadratic_form, steady_state_exponent, top_eigenvector_input, LogProb,
};
use otdr_core::fiber::{dense_matrix, AttackSpec};
use otdr_core::rates::{
    analyze_attacks, capacity_classical, capacity_quantum, chernoff_gaussian, d_max_d_classical, d_max_d_quantum,
    gordon, Provenance, RatePoint, Strategy,
};
use otdr_core::spectral::{symbol_supremum, szego_convergence, toeplitz_eigenvalues, SzegoFunctional};

use crate::commands::{mc_rows, region_report, steady_amplitudes};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::output::{csv_artifact, num, Artifact, Header};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `<=`, `>=`, or empty for informational rows.
    pub comparison: &'static str,
    pub status: Status,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: impl Into<String>, value: f64, threshold: f64, comparison: &'static str, note: &str) {
        let status = match comparison {
            "<=" if value <= threshold => Status::Pass,
            ">=" if value >= threshold => Status::Pass,
            "" => Status::Info,
            _ => Status::Fail,
        };
        self.checks.push(Check { name: name.into(), value, threshold, comparison, status, note: note.to_owned() });
    }

    fn le(&mut self, name: impl Into<String>, value: f64, threshold: f64, note: &str) {
        self.push(name, value, threshold, "<=", note);
    }

    fn ge(&mut self, name: impl Into<String>, value: f64, threshold: f64, note: &str) {
        self.push(name, value, threshold, ">=", note);
    }

    fn info(&mut self, name: impl Into<String>, value: f64, reference: f64, note: &str) {
        self.push(name, value, reference, "", note);
    }

    pub fn artifact(&self, config: &ScenarioConfig) -> Result<Artifact> {
        let mut h = Header::new("verify", config);
        h.push("seed", config.mc.seed.to_string());
        h.push("workers", config.mc.workers.to_string());
        h.push("status", "pass/fail compare value against threshold; info rows carry a reference value only");
        let rows = self.checks.iter().map(|c| {
            vec![
                c.name.clone(),
                num(c.value),
                num(c.threshold),
                c.comparison.to_owned(),
                c.status.label().to_owned(),
                c.note.clone(),
            ]
        });
        Ok(csv_artifact("verify.csv", &h, &["check", "value", "threshold", "comparison", "status", "note"], rows)?)
    }
}

/// Relative difference, zero when both values coincide.
fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn worst(values: impl Iterator<Item = f64>) -> f64 {
    // NaN propagates so a broken value fails its check
    values.fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

/// Piecewise-linear interpolation of the emitted boundary at `r`; `None`
/// beyond its rate range.
fn envelope(boundary: &[&RatePoint], r: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = boundary.iter().map(|p| (p.rate, p.exponent)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (first, last) = (pts.first()?, pts.last()?);
    if r < first.0 || r > last.0 {
        return None;
    }
    let best = pts
        .windows(2)
        .filter(|w| w[0].0 <= r && r <= w[1].0)
        .map(|w| {
            if w[1].0 == w[0].0 {
                w[0].1.max(w[1].1)
            } else {
                let t = (r - w[0].0) / (w[1].0 - w[0].0);
                w[0].1 + t * (w[1].1 - w[0].1)
            }
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Some(if pts.len() == 1 { first.1 } else { best })
}

fn closed_forms(report: &mut VerifyReport) -> Result<()> {
    report.le("gordon_at_one", (gordon(1.0)? - 2.0).abs(), 0.0, "g(1) = 2 bits exactly");
    let spot =
        (chernoff_gaussian(0.0, 2f64.sqrt(), 0.5)? - 0.5).abs().max((chernoff_gaussian(0.0, 2.0, 1.0)? - 0.5).abs());
    report.le("chernoff_spot_values", spot, 0.0, "N(0,1/2) vs N(sqrt2,1/2) and N(0,1) vs N(2,1) give 0.5 nats");
    Ok(())
}

fn exponents(config: &ScenarioConfig, report: &mut VerifyReport) -> Result<()> {
    let spec = &config.fiber;
    let attacks = config.all_attacks();
    let settings = config.rate_settings();
    let q = d_max_d_quantum(spec, &attacks, &settings)?;
    let c = d_max_d_classical(spec, &attacks, &settings)?;
    let ratio = worst(q.optimal.per_attack.iter().zip(&c.optimal.per_attack).map(|(&dq, &dc)| {
        if dq == 0.0 {
            if dc == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (dc / dq - 0.5).abs() / 0.5
        }
    }));
    report.le(
        "classical_to_quantum_ratio",
        ratio,
        1e-12,
        "relative deviation of D^C_maxD / D^Q_maxD from 1/2, worst attack",
    );

    let dq = q.optimal.point.exponent;
    for kappa in [0.1, 10.0] {
        let scaled = d_max_d_quantum(&spec.with_energy(kappa * spec.energy())?, &attacks, &settings)?;
        report.le(
            format!("energy_linearity_x{kappa}"),
            rel(scaled.optimal.point.exponent, kappa * dq),
            1e-12,
            "relative deviation of D^Q_maxD(kE) from k D^Q_maxD(E)",
        );
    }

    let analyses = analyze_attacks(spec, &attacks, &settings)?;
    let excess = worst(analyses.iter().map(|a| a.log_mean - spec.energy() * a.supremum.value));
    report.le("rate_optimal_below_detection_optimal", excess, 0.0, "max over attacks of D_maxR - D_maxD");
    report.le(
        "capacity_classical_below_quantum",
        capacity_classical(spec) - capacity_quantum(spec),
        0.0,
        "C_classical - g(eta E)",
    );
    report.info("paper_formula_disagreement", q.disagreement(), 0.0, "relative gap between E sup f and E f(0)");
    Ok(())
}

fn region(config: &ScenarioConfig, report: &mut VerifyReport) -> Result<()> {
    let spec = &config.fiber;
    let attacks = config.all_attacks();
    let settings = config.rate_settings();
    let region = region_report(config)?;
    let dq = d_max_d_quantum(spec, &attacks, &settings)?.optimal.point.exponent;
    let dr = otdr_core::rates::d_max_r_quantum(spec, &attacks, &settings)?.point.exponent;
    let rq = gordon(otdr_core::fiber::forward_loss(spec) * spec.energy())?;
    let expected = [
        (Strategy::Quantum, Provenance::DetectionOptimal, 0.0, dq),
        (Strategy::Quantum, Provenance::RateOptimal, rq, dr),
        (Strategy::Classical, Provenance::DetectionOptimal, 0.0, 0.5 * dq),
        (Strategy::Classical, Provenance::RateOptimal, capacity_classical(spec), 0.0),
    ];
    let corner_error = worst(expected.iter().map(|&(s, p, r, d)| match region.corner(s, p) {
        Some(pt) => (pt.rate - r).abs().max((pt.exponent - d).abs()),
        None => f64::INFINITY,
    }));
    report.le(
        "region_corner_points",
        corner_error,
        0.0,
        "max abs deviation of the four corners from their closed forms",
    );

    let quantum: Vec<&RatePoint> = region.boundary_of(Strategy::Quantum).collect();
    let violation = worst(region.boundary_of(Strategy::Classical).map(|p| match envelope(&quantum, p.rate) {
        Some(d) => p.exponent - d,
        None => f64::INFINITY,
    }));
    report.le("region_nesting", violation, 0.0, "max height of a classical boundary point above the quantum boundary");
    Ok(())
}

fn spectra(config: &ScenarioConfig, report: &mut VerifyReport) -> Result<()> {
    let spec = &config.fiber;
    let nums = &config.numerics;
    let energy = spec.energy();
    let (mut trace, mut contain, mut residual, mut ldl) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut steps_up, mut final_gap) = (0usize, 0.0f64);
    for attack in config.all_attacks() {
        let sym = otdr_core::fiber::attack_symbol(spec, &attack)?;
        let scale = sym.g(0).max(f64::MIN_POSITIVE);
        for &n in &nums.n_list {
            let r = toeplitz_eigenvalues(&sym, n, nums.dense_n_limit)?;
            let mean = r.eigenvalues.iter().sum::<f64>() / n as f64;
            trace = trace.max((mean - sym.g(0)).abs() / scale);
            contain = contain.max((r.max() - r.sym_max).max(r.sym_min - r.min()) / scale);
            residual = residual.max(r.max_residual);
            let det = expected_error_determinant_log(&sym, n, energy, nums.dense_n_limit)?;
            let band = expected_error_ldl_log(&sym, n, energy, nums.dense_n_limit)?;
            ldl = ldl.max(rel(det.value(), band.value()));
        }
        let sz = szego_convergence(
            &sym,
            SzegoFunctional::Log1pScaled(energy),
            nums.quadrature_nodes,
            &nums.n_list,
            nums.dense_n_limit,
        )?;
        let gaps = sz.gaps();
        steps_up += gaps.windows(2).filter(|w| !(w[1].1 < w[0].1 || w[0].1 == 0.0 && w[1].1 == 0.0)).count();
        let last = gaps.last().map_or(0.0, |g| g.1);
        final_gap = final_gap.max(if sz.limit_value == 0.0 { last } else { last / sz.limit_value.abs() });
    }
    report.le("toeplitz_trace", trace, 1e-10, "max |mean eigenvalue - g_0| / g_0 over attacks and n_list");
    report.le(
        "toeplitz_containment",
        contain,
        1e-9,
        "max excursion of eigenvalues outside [min f, max f], relative to g_0",
    );
    report.le("eigen_residual", residual, 1e-8, "max ||G v - lambda v|| / ||G|| at the extreme eigenpairs");
    report.le("determinant_vs_ldl", ldl, 1e-8, "relative gap between the eigenvalue and banded LDL log-determinants");
    report.le("szego_monotone_steps_up", steps_up as f64, 0.0, "n_list steps where the trace-log gap fails to shrink");
    report.le("szego_final_gap", final_gap, 0.01, "relative gap to the quadrature limit at the largest n");
    Ok(())
}

fn finite_n_detection(config: &ScenarioConfig, report: &mut VerifyReport) -> Result<()> {
    let spec = &config.fiber;
    let n = config.numerics.exponent_n;
    let energy = spec.energy();
    let alpha = constant_input(n, energy);
    let (mut povm_gap, mut helstrom_gap) = (0.0f64, 0.0f64);
    for (i, attack) in config.all_attacks().iter().enumerate() {
        let sym = otdr_core::fiber::attack_symbol(spec, attack)?;
        let gram = dense_matrix(&sym, n, config.numerics.dense_n_limit)?;
        let q = quadratic_form(&alpha, &gram)?;
        let povm = povm_error_log(&alpha, &gram, energy)?;
        let helstrom = helstrom_error(LogProb::new(-q)?);
        let steady = steady_state_exponent(&sym, &alpha)?;
        let f0 = energy * sym.tap_sum_squared();
        povm_gap = povm_gap.max(rel(steady.corrected, f0));
        let per_use = |p: LogProb| -p.value() / n as f64;
        helstrom_gap = helstrom_gap.max(rel(per_use(helstrom), per_use(povm)));
        report.info(format!("povm_raw_exponent_attack{i}"), steady.raw, f0, "q/n with transients, reference E f(0)");
        report.info(
            format!("helstrom_offset_exponent_attack{i}"),
            -(helstrom.value() - LogProb::HALF.value()) / n as f64,
            q / n as f64,
            "-(1/n)(ln P_H - ln 1/2), reference POVM q/n",
        );
        let top = top_eigenvector_input(&sym, n, energy, config.numerics.dense_n_limit)?;
        report.info(
            format!("povm_top_eigenvector_exponent_attack{i}"),
            quadratic_form(&top, &gram)? / n as f64,
            energy * symbol_supremum(&sym).value,
            "q/n for the top eigenvector of G_n at energy nE, reference E sup f",
        );
    }
    report.le("povm_exponent_vs_symbol", povm_gap, 0.02, "relative gap of the transient-corrected exponent to E f(0)");
    report.le("helstrom_vs_povm", helstrom_gap, 0.01, "relative gap of -(1/n) ln P_e between Helstrom and the POVM");
    Ok(())
}

fn null_attacks(config: &ScenarioConfig, report: &mut VerifyReport) -> Result<()> {
    let spec = &config.fiber;
    let settings = config.rate_settings();
    let nulls = (1..=spec.blocks()).map(|p| AttackSpec::null(spec, p)).collect::<otdr_core::Result<Vec<_>>>()?;
    let q = d_max_d_quantum(spec, &nulls, &settings)?;
    let c = d_max_d_classical(spec, &nulls, &settings)?;
    let r = otdr_core::rates::d_max_r_quantum(spec, &nulls, &settings)?;
    let mut dev = worst(q.optimal.per_attack.iter().chain(&c.optimal.per_attack).chain(&r.per_attack).map(|d| d.abs()));
    let n = 8.min(config.numerics.dense_n_limit);
    let alpha = constant_input(n, spec.energy());
    for null in &nulls {
        let sym = otdr_core::fiber::attack_symbol(spec, null)?;
        let gram = dense_matrix(&sym, n, config.numerics.dense_n_limit)?;
        dev = dev.max((povm_error_log(&alpha, &gram, spec.energy())?.prob() - 0.5).abs());
        dev = dev.max(
            (expected_error_determinant_log(&sym, n, spec.energy(), config.numerics.dense_n_limit)?.prob() - 1.0).abs(),
        );
    }
    report.le("null_attack_neutral", dev, 0.0, "every position: D = 0, P_e = 1/2, codebook overlap = 1");
    Ok(())
}

fn sampling(config: &ScenarioConfig, report: &mut VerifyReport) -> Result<()> {
    let rows = mc_rows(config)?;
    let calibration: Vec<_> = rows.iter().filter(|r| r.is_calibration()).collect();
    if calibration.is_empty() {
        report.info("mc_calibration_within_3sigma", 0.0, 0.95, "no calibration scenarios configured");
    } else {
        let within = calibration.iter().filter(|r| r.z().abs() <= 3.0).count();
        report.ge(
            "mc_calibration_within_3sigma",
            within as f64 / calibration.len() as f64,
            0.95,
            &format!("{within} of {} random scenarios", calibration.len()),
        );
    }
    let configured = worst(rows.iter().filter(|r| !r.is_calibration()).map(|r| r.z().abs()));
    report.le("mc_configured_max_abs_z", configured, 4.0, "codebook and homodyne estimates on the configured attacks");

    let analyses = analyze_attacks(&config.fiber, &config.all_attacks(), &config.rate_settings())?;
    let amplitudes = steady_amplitudes(config, &analyses);
    for r in rows.iter().filter(|r| r.oracle == "homodyne") {
        let alpha = amplitudes[r.attack_index.expect("homodyne rows carry an attack")];
        let empirical = -r.report.estimate.ln() / r.n as f64;
        report.info(
            format!("homodyne_exponent_attack{}", r.attack_index.unwrap_or(0)),
            empirical,
            0.5 * alpha * alpha,
            "-(1/n) ln(error rate) at finite n, reference asymptotic alpha^2/2",
        );
    }
    Ok(())
}

/// Runs every invariant with the config's numerics.
pub fn verify_suite(config: &ScenarioConfig) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    closed_forms(&mut report)?;
    exponents(config, &mut report)?;
    region(config, &mut report)?;
    spectra(config, &mut report)?;
    finite_n_detection(config, &mut report)?;
    null_attacks(config, &mut report)?;
    sampling(config, &mut report)?;
    Ok(report)
}
