//! Subcommand bodies. Each returns its artifacts in memory; writing is left
//! to the caller so every output path has a single owner.

use otdr_core::detection::expected_error_determinant_log;
use otdr_core::fiber::{backscatter_coefficients, gram_symbol};
use otdr_core::montecarlo::{
    composite_homodyne_mc, expected_error_mc, homodyne_mc, random_scenario, stream_rng, MCReport,
};
use otdr_core::rates::{analyze_attacks, assemble_region, AttackAnalysis, RegionReport};
use otdr_core::spectral::{szego_convergence, toeplitz_eigenvalues, SzegoFunctional};
use statrs::function::erf::erfc;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::output::{csv_artifact, num, Artifact, Header};
use crate::plot::region_script;

/// Stream id reserved for drawing calibration scenarios; worker streams
/// start at zero.
const CALIBRATION_STREAM: u64 = 0xCA11_B8A7E;
/// Seed offset between consecutive sampling rows.
const SEED_STRIDE: u64 = 1000;
/// Largest block length and energy used by calibration scenarios.
pub const CALIBRATION_MAX_N: usize = 16;
const CALIBRATION_MAX_BLOCKS: usize = 8;

fn opt_index(i: Option<usize>) -> String {
    i.map_or_else(String::new, |i| i.to_string())
}

pub fn coeffs(config: &ScenarioConfig) -> Result<Vec<Artifact>> {
    let fiber = &config.fiber;
    let base = backscatter_coefficients(fiber, None)?;
    let mut rows = Vec::new();
    for (i, attack) in config.all_attacks().iter().enumerate() {
        let hit = backscatter_coefficients(fiber, Some(attack))?;
        let sym = gram_symbol(&base, &hit)?;
        for k in 0..=2 * fiber.blocks() {
            rows.push(vec![
                i.to_string(),
                k.to_string(),
                num(base.coeff(k)),
                num(hit.coeff(k)),
                num(sym.tap(k)),
                num(sym.g(k)),
            ]);
        }
    }
    let mut h = Header::new("coeffs", config);
    h.push("units", "amplitude coefficients (dimensionless); k is the round-trip delay in slots");
    h.push("formula", "c_k = a_attacked_k - a_baseline_k; g_k = sum_j c_j c_(j+k)");
    Ok(vec![csv_artifact("coeffs.csv", &h, &["attack_index", "index", "a_baseline", "a_attacked", "c", "g"], rows)?])
}

pub fn spectrum(config: &ScenarioConfig) -> Result<Vec<Artifact>> {
    let energy = config.fiber.energy();
    let nums = &config.numerics;
    let mut eig_rows = Vec::new();
    let mut summary = Vec::new();
    for (i, attack) in config.all_attacks().iter().enumerate() {
        let sym = otdr_core::fiber::attack_symbol(&config.fiber, attack)?;
        let mut reports = Vec::new();
        for &n in &nums.n_list {
            let r = toeplitz_eigenvalues(&sym, n, nums.dense_n_limit)?;
            for (j, l) in r.eigenvalues.iter().enumerate() {
                eig_rows.push(vec![i.to_string(), n.to_string(), j.to_string(), num(*l)]);
            }
            reports.push(r);
        }
        for functional in [SzegoFunctional::Log1pScaled(energy), SzegoFunctional::Identity] {
            let sz = szego_convergence(&sym, functional, nums.quadrature_nodes, &nums.n_list, nums.dense_n_limit)?;
            for ((&(n, finite), (_, gap)), r) in sz.finite_n_values.iter().zip(sz.gaps()).zip(&reports) {
                let rel = if sz.limit_value == 0.0 { gap } else { gap / sz.limit_value.abs() };
                summary.push(vec![
                    i.to_string(),
                    n.to_string(),
                    functional.id().to_owned(),
                    num(finite),
                    num(sz.limit_value),
                    num(gap),
                    num(rel),
                    num(r.min()),
                    num(r.max()),
                    num(r.sym_min),
                    num(r.sym_max),
                    num(r.max_residual),
                ]);
            }
        }
    }
    let mut h = Header::new("spectrum", config);
    h.push("units", "eigenvalues of G_n (dimensionless)");
    h.push("order", "eigenvalues ascending within each (attack_index, n)");
    let main = csv_artifact("spectrum.csv", &h, &["attack_index", "n", "index", "lambda"], eig_rows)?;
    h.push("functional", format!("log1p_scaled: x -> ln(1 + E x) with E = {}; identity: x -> x", num(energy)));
    h.push("limit", format!("trapezoid rule on {} nodes over one period", nums.quadrature_nodes));
    let columns = [
        "attack_index",
        "n",
        "functional",
        "finite_n",
        "limit",
        "abs_gap",
        "rel_gap",
        "lambda_min",
        "lambda_max",
        "symbol_min",
        "symbol_max",
        "eig_residual",
    ];
    Ok(vec![main, csv_artifact("spectrum_summary.csv", &h, &columns, summary)?])
}

pub fn region_report(config: &ScenarioConfig) -> Result<RegionReport> {
    Ok(assemble_region(&config.fiber, &config.all_attacks(), &config.rate_settings())?)
}

pub fn region(config: &ScenarioConfig) -> Result<Vec<Artifact>> {
    let report = region_report(config)?;
    let mut rows = Vec::new();
    let mut push = |p: &otdr_core::RatePoint| {
        rows.push(vec![
            p.strategy.label().to_owned(),
            p.provenance.label().to_owned(),
            p.provenance.lambda().map_or_else(String::new, num),
            num(p.rate),
            num(p.exponent),
            opt_index(p.worst_attack),
        ]);
    };
    report.points.iter().chain(&report.paper_points).chain(&report.boundary).for_each(&mut push);

    let mut h = Header::new("region", config);
    h.push("units", "R_bits in bits per channel use; D_nats in nats per channel use");
    h.push(
        "formula",
        "D_maxD = E min_s sup_xi f; D_maxR = min_s mean_xi ln(1 + E f); classical D_maxD = half the quantum value",
    );
    h.push(
        "paper_formula",
        "rows with provenance paper_formula_f0 evaluate the symbol at xi = 0 instead of its supremum",
    );
    h.push("paper_disagreement", num(report.paper_disagreement));
    h.push("paper_disagreement_flag", (report.paper_disagreement > 1e-9).to_string());
    h.push("classical_receiver", report.classical_receiver.label());
    h.push("classical_capacity", "max of heterodyne log2(1 + eta E) and homodyne 0.5 log2(1 + 4 eta E)");
    h.push("classical_boundary", "inner bound: D = 0 assumed at the classical maximum rate");
    let worst: Vec<String> =
        report.worst_attack_per_quantity.iter().map(|(q, i)| format!("{}={i}", q.label())).collect();
    h.push("worst_attack", worst.join(" "));
    h.push(
        "boundary",
        format!("time sharing between corners, {} lambda points per strategy", config.numerics.lambda_points),
    );
    let columns = ["strategy", "provenance", "lambda", "R_bits", "D_nats", "worst_attack_index"];
    let csv = csv_artifact("region.csv", &h, &columns, rows)?;
    let meta = h.metadata_artifact("region_meta.txt");
    let script = Artifact { name: "plot_region.py".into(), bytes: region_script(&report).into_bytes() };
    Ok(vec![csv, meta, script])
}

/// Standard normal lower tail `Φ(-x)`.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub oracle: String,
    pub attack_index: Option<usize>,
    pub n: usize,
    pub energy: f64,
    pub report: MCReport,
    pub analytic: f64,
}

impl McRow {
    pub fn z(&self) -> f64 {
        self.report.z_score(self.analytic)
    }

    pub fn is_calibration(&self) -> bool {
        self.oracle == "calibration"
    }
}

pub fn steady_amplitudes(config: &ScenarioConfig, analyses: &[AttackAnalysis]) -> Vec<f64> {
    analyses.iter().map(|a| (config.fiber.energy() * a.supremum.value).sqrt()).collect()
}

/// Every sampling estimate paired with its closed form, in a fixed order.
pub fn mc_rows(config: &ScenarioConfig) -> Result<Vec<McRow>> {
    let mc = &config.mc;
    let energy = config.fiber.energy();
    let limit = config.numerics.dense_n_limit;
    let attacks = config.all_attacks();
    let analyses = analyze_attacks(&config.fiber, &attacks, &config.rate_settings())?;
    let mut rows = Vec::new();
    let mut next_seed = {
        let mut r = 0u64;
        move || {
            let s = mc.seed.wrapping_add(SEED_STRIDE.wrapping_mul(r));
            r += 1;
            s
        }
    };

    for (i, a) in analyses.iter().enumerate() {
        for &n in &mc.n_list {
            let analytic = expected_error_determinant_log(&a.symbol, n, energy, limit)?.prob();
            let report = expected_error_mc(&a.symbol, n, energy, mc.samples, next_seed(), mc.workers)?;
            rows.push(McRow { oracle: "gaussian_codebook".into(), attack_index: Some(i), n, energy, report, analytic });
        }
    }

    let amplitudes = steady_amplitudes(config, &analyses);
    let pulses = mc.homodyne_pulses;
    let root_n = (pulses as f64).sqrt();
    for (i, &alpha) in amplitudes.iter().enumerate() {
        let report = homodyne_mc(alpha, pulses, mc.samples, next_seed(), mc.workers)?;
        rows.push(McRow {
            oracle: "homodyne".into(),
            attack_index: Some(i),
            n: pulses,
            energy,
            report,
            analytic: normal_tail(alpha * root_n),
        });
    }
    if amplitudes.len() > 1 {
        let c = composite_homodyne_mc(&amplitudes, pulses, mc.samples, next_seed(), mc.workers)?;
        let weakest = amplitudes.iter().copied().fold(f64::INFINITY, f64::min);
        let false_alarm = normal_tail(weakest * root_n);
        let i = c.worst_attack;
        let miss = normal_tail(root_n * (2.0 * amplitudes[i] - weakest));
        // the two rates come from independent runs
        let std_error = 0.5 * c.type_one.std_error.hypot(c.type_two[i].std_error);
        let report = MCReport { estimate: c.worst_error, std_error, ..c.type_one };
        rows.push(McRow {
            oracle: "homodyne_composite".into(),
            attack_index: Some(i),
            n: pulses,
            energy,
            report,
            analytic: 0.5 * (false_alarm + miss),
        });
    }

    let count = mc.calibration_scenarios;
    let mut rng = stream_rng(mc.seed, CALIBRATION_STREAM);
    for j in 0..count {
        let e = (j + 1) as f64 / count as f64;
        let n = 1 + j % CALIBRATION_MAX_N;
        let (spec, attack) = random_scenario(&mut rng, CALIBRATION_MAX_BLOCKS, e)?;
        let sym = otdr_core::fiber::attack_symbol(&spec, &attack)?;
        let analytic = expected_error_determinant_log(&sym, n, e, limit.max(n))?.prob();
        let report = expected_error_mc(&sym, n, e, mc.samples, next_seed(), mc.workers)?;
        rows.push(McRow { oracle: "calibration".into(), attack_index: None, n, energy: e, report, analytic });
    }
    Ok(rows)
}

pub fn mc(config: &ScenarioConfig) -> Result<Vec<Artifact>> {
    let rows = mc_rows(config)?;
    let table = rows.iter().map(|r| {
        vec![
            r.oracle.clone(),
            opt_index(r.attack_index),
            r.n.to_string(),
            num(r.energy),
            r.report.samples.to_string(),
            r.report.seed.to_string(),
            r.report.workers.to_string(),
            num(r.report.estimate),
            num(r.report.std_error),
            num(r.analytic),
            num(r.z()),
        ]
    });
    let mut h = Header::new("mc", config);
    h.push("seed", config.mc.seed.to_string());
    h.push("workers", config.mc.workers.to_string());
    h.push("units", "estimates are probabilities; std_error is sample std / sqrt(samples)");
    h.push("gaussian_codebook", "E exp(-|C a|^2) over a ~ CN(0, E I) against prod_i (E lambda_i + 1)^-1");
    h.push("homodyne", "threshold test on n pulses at amplitude sqrt(E sup f) against Phi(-alpha sqrt(n))");
    h.push(
        "calibration",
        format!("random fibers with at most {CALIBRATION_MAX_BLOCKS} blocks, n <= {CALIBRATION_MAX_N}, E <= 1"),
    );
    let columns = [
        "oracle_name",
        "attack_index",
        "n",
        "E",
        "samples",
        "seed",
        "workers",
        "estimate",
        "std_error",
        "analytic_value",
        "z_score",
    ];
    Ok(vec![csv_artifact("mc.csv", &h, &columns, table)?])
}
