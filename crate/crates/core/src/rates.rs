//! Data-transmission rates (bits per use) and intrusion-detection exponents
//! (nats per use), their worst case over the attack list, and the
//! achievable `(R, D)` region.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::fiber::{attack_symbol, forward_loss, AttackSpec, FiberSpec, GramSymbol};
use crate::spectral::{
    symbol_supremum_with_grid, szego_functional, SymbolExtremum, SzegoFunctional, DEFAULT_QUADRATURE_NODES,
    DEFAULT_XI_GRID,
};

/// Numerical knobs shared by the exponent computations.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSettings {
    pub xi_grid: usize,
    pub quadrature_nodes: usize,
    pub lambda_points: usize,
}

impl Default for RateSettings {
    fn default() -> Self {
        Self { xi_grid: DEFAULT_XI_GRID, quadrature_nodes: DEFAULT_QUADRATURE_NODES, lambda_points: 101 }
    }
}

/// Gordon function `g(x) = (x+1) log₂(x+1) - x log₂ x`, in bits.
pub fn gordon(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Negative(x));
    }
    if x < f64::MIN_POSITIVE {
        return Ok(0.0);
    }
    // (x+1)ln(x+1) - x ln x = ln(1+x) + x ln(1 + 1/x)
    Ok((x.ln_1p() + x * x.recip().ln_1p()) / LN_2)
}

/// Holevo capacity `g(ηE)` of the forward channel.
pub fn capacity_quantum(spec: &FiberSpec) -> f64 {
    gordon(forward_loss(spec) * spec.energy()).expect("ηE is non-negative")
}

/// Measurement the classical capacity is attained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalReceiver {
    Heterodyne,
    Homodyne,
}

impl ClassicalReceiver {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Heterodyne => "heterodyne",
            Self::Homodyne => "homodyne",
        }
    }
}

fn classical_branches(spec: &FiberSpec) -> (f64, f64) {
    let snr = forward_loss(spec) * spec.energy();
    (snr.ln_1p() / LN_2, 0.5 * (4.0 * snr).ln_1p() / LN_2)
}

/// Shannon rate with Gaussian inputs under the better of heterodyne
/// `log₂(1 + ηE)` and homodyne `½ log₂(1 + 4ηE)` detection.
pub fn capacity_classical(spec: &FiberSpec) -> f64 {
    let (het, hom) = classical_branches(spec);
    het.max(hom)
}

pub fn classical_receiver(spec: &FiberSpec) -> ClassicalReceiver {
    let (het, hom) = classical_branches(spec);
    if het >= hom {
        ClassicalReceiver::Heterodyne
    } else {
        ClassicalReceiver::Homodyne
    }
}

/// Chernoff information between `N(μ0, σ²)` and `N(μ1, σ²)`: `(μ1-μ0)²/(8σ²)`.
pub fn chernoff_gaussian(mu0: f64, mu1: f64, variance: f64) -> Result<f64> {
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::NonPositiveVariance(variance));
    }
    let z = (mu1 - mu0) / variance.sqrt();
    Ok(z * z / 8.0)
}

/// Same quantity from the squared mean shift, avoiding a square root.
pub fn chernoff_gaussian_shift_sq(shift_sq: f64, variance: f64) -> Result<f64> {
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::NonPositiveVariance(variance));
    }
    if shift_sq.is_nan() || shift_sq < 0.0 {
        return Err(Error::Negative(shift_sq));
    }
    Ok(shift_sq / (8.0 * variance))
}

/// Per-attack quantities everything else is reduced from.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackAnalysis {
    pub attack: AttackSpec,
    pub symbol: GramSymbol,
    pub supremum: SymbolExtremum,
    /// `f(0) = (Σ c)²`.
    pub f_zero: f64,
    /// `(1/2π) ∫ ln(1 + E f) dξ`.
    pub log_mean: f64,
}

pub fn analyze_attacks(
    spec: &FiberSpec,
    attacks: &[AttackSpec],
    settings: &RateSettings,
) -> Result<Vec<AttackAnalysis>> {
    if attacks.is_empty() {
        return Err(Error::NoAttacks);
    }
    attacks
        .iter()
        .map(|attack| {
            let symbol = attack_symbol(spec, attack)?;
            let supremum = symbol_supremum_with_grid(&symbol, settings.xi_grid);
            let f_zero = symbol.tap_sum_squared();
            let log_mean =
                szego_functional(&symbol, SzegoFunctional::Log1pScaled(spec.energy()), settings.quadrature_nodes)?
                    .limit_value;
            Ok(AttackAnalysis { attack: *attack, symbol, supremum, f_zero, log_mean })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strategy {
    Quantum,
    Classical,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Quantum => "quantum",
            Self::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    DetectionOptimal,
    RateOptimal,
    /// Fraction `λ` of the block spent at the rate-optimal corner.
    TimeShare(f64),
    /// Closed form `E (Σ c)²` as printed for non-negative `c`.
    PaperFormulaF0,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Self::DetectionOptimal => "detection_optimal",
            Self::RateOptimal => "rate_optimal",
            Self::TimeShare(_) => "time_share",
            Self::PaperFormulaF0 => "paper_formula_f0",
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Self::TimeShare(l) => Some(*l),
            _ => None,
        }
    }
}

/// Achievable pair: `rate` in bits per use, `exponent` in nats per use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub rate: f64,
    pub exponent: f64,
    pub strategy: Strategy,
    pub provenance: Provenance,
    /// Index of the minimizing attack, when the exponent is a worst case.
    pub worst_attack: Option<usize>,
}

fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values.enumerate().fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
}

/// Worst-case exponent together with its per-attack breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub point: RatePoint,
    pub per_attack: Vec<f64>,
}

fn worst_case(per_attack: Vec<f64>, rate: f64, strategy: Strategy, provenance: Provenance) -> WorstCase {
    let (index, value) = argmin(per_attack.iter().copied());
    WorstCase {
        point: RatePoint { rate, exponent: value, strategy, provenance, worst_attack: Some(index) },
        per_attack,
    }
}

/// Detection-optimal exponent `E min_s sup_ξ f(ξ, s)`, plus the closed form
/// `E min_s f(0, s)` reported alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxDetection {
    pub optimal: WorstCase,
    pub paper_formula: WorstCase,
}

impl MaxDetection {
    /// Relative disagreement between the supremum and the `ξ = 0` formula.
    pub fn disagreement(&self) -> f64 {
        let (a, b) = (self.optimal.point.exponent, self.paper_formula.point.exponent);
        if a == 0.0 && b == 0.0 {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }
}

fn max_detection_from(spec: &FiberSpec, analyses: &[AttackAnalysis]) -> MaxDetection {
    let e = spec.energy();
    MaxDetection {
        optimal: worst_case(
            analyses.iter().map(|a| e * a.supremum.value).collect(),
            0.0,
            Strategy::Quantum,
            Provenance::DetectionOptimal,
        ),
        paper_formula: worst_case(
            analyses.iter().map(|a| e * a.f_zero).collect(),
            0.0,
            Strategy::Quantum,
            Provenance::PaperFormulaF0,
        ),
    }
}

pub fn d_max_d_quantum(spec: &FiberSpec, attacks: &[AttackSpec], settings: &RateSettings) -> Result<MaxDetection> {
    Ok(max_detection_from(spec, &analyze_attacks(spec, attacks, settings)?))
}

// Homodyne on the steady-state return |α_s⟩ gives N(√2|α_s|, ½) against
// N(0, ½); the exponent is their Chernoff information.
fn classical_from(spec: &FiberSpec, analyses: &[AttackAnalysis]) -> Result<MaxDetection> {
    let e = spec.energy();
    let homodyne = |power: f64| chernoff_gaussian_shift_sq(2.0 * e * power, 0.5);
    let optimal = analyses.iter().map(|a| homodyne(a.supremum.value)).collect::<Result<Vec<_>>>()?;
    let paper = analyses.iter().map(|a| homodyne(a.f_zero)).collect::<Result<Vec<_>>>()?;
    Ok(MaxDetection {
        optimal: worst_case(optimal, 0.0, Strategy::Classical, Provenance::DetectionOptimal),
        paper_formula: worst_case(paper, 0.0, Strategy::Classical, Provenance::PaperFormulaF0),
    })
}

/// Homodyne detection exponent; half the quantum value.
pub fn d_max_d_classical(spec: &FiberSpec, attacks: &[AttackSpec], settings: &RateSettings) -> Result<MaxDetection> {
    classical_from(spec, &analyze_attacks(spec, attacks, settings)?)
}

fn max_rate_from(spec: &FiberSpec, analyses: &[AttackAnalysis]) -> WorstCase {
    worst_case(
        analyses.iter().map(|a| a.log_mean).collect(),
        capacity_quantum(spec),
        Strategy::Quantum,
        Provenance::RateOptimal,
    )
}

/// Exponent of a Gaussian random codebook at the Holevo rate:
/// `min_s (1/2π) ∫ ln(E f(ξ, s) + 1) dξ`.
pub fn d_max_r_quantum(spec: &FiberSpec, attacks: &[AttackSpec], settings: &RateSettings) -> Result<WorstCase> {
    Ok(max_rate_from(spec, &analyze_attacks(spec, attacks, settings)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Quantity {
    DetectionQuantum,
    DetectionClassical,
    RateOptimalQuantum,
    PaperFormula,
}

impl Quantity {
    pub fn label(&self) -> &'static str {
        match self {
            Self::DetectionQuantum => "D_maxD_quantum",
            Self::DetectionClassical => "D_maxD_classical",
            Self::RateOptimalQuantum => "D_maxR_quantum",
            Self::PaperFormula => "D_maxD_paper_f0",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub fiber: FiberSpec,
    pub attacks: Vec<AttackSpec>,
    pub worst_attack_per_quantity: BTreeMap<Quantity, usize>,
    /// `(0, D^Q_maxD)`, `(R^Q, D^Q_maxR)`, `(0, D^C_maxD)`, `(R^C, 0)`.
    pub points: Vec<RatePoint>,
    /// Closed-form `ξ = 0` exponents, quantum then classical.
    pub paper_points: Vec<RatePoint>,
    /// Quantum segment first, then classical; `lambda_points` each.
    pub boundary: Vec<RatePoint>,
    pub classical_receiver: ClassicalReceiver,
    pub paper_disagreement: f64,
}

impl RegionReport {
    pub fn corner(&self, strategy: Strategy, provenance: Provenance) -> Option<&RatePoint> {
        self.points.iter().find(|p| p.strategy == strategy && p.provenance == provenance)
    }

    pub fn boundary_of(&self, strategy: Strategy) -> impl Iterator<Item = &RatePoint> {
        self.boundary.iter().filter(move |p| p.strategy == strategy)
    }
}

fn time_share(from: &RatePoint, to: &RatePoint, lambda: f64) -> RatePoint {
    RatePoint {
        rate: lambda * to.rate + (1.0 - lambda) * from.rate,
        exponent: (1.0 - lambda) * from.exponent + lambda * to.exponent,
        strategy: from.strategy,
        provenance: Provenance::TimeShare(lambda),
        worst_attack: None,
    }
}

/// Corner points and time-sharing boundaries of the quantum and the
/// (inner-bound) classical region.
pub fn assemble_region(spec: &FiberSpec, attacks: &[AttackSpec], settings: &RateSettings) -> Result<RegionReport> {
    let analyses = analyze_attacks(spec, attacks, settings)?;
    let quantum = max_detection_from(spec, &analyses);
    let classical = classical_from(spec, &analyses)?;
    let max_rate = max_rate_from(spec, &analyses);
    let classical_max = RatePoint {
        rate: capacity_classical(spec),
        exponent: 0.0,
        strategy: Strategy::Classical,
        provenance: Provenance::RateOptimal,
        worst_attack: None,
    };

    let mut worst = BTreeMap::new();
    let index = |p: &RatePoint| p.worst_attack.expect("worst case carries an index");
    worst.insert(Quantity::DetectionQuantum, index(&quantum.optimal.point));
    worst.insert(Quantity::DetectionClassical, index(&classical.optimal.point));
    worst.insert(Quantity::RateOptimalQuantum, index(&max_rate.point));
    worst.insert(Quantity::PaperFormula, index(&quantum.paper_formula.point));

    let points = vec![quantum.optimal.point, max_rate.point, classical.optimal.point, classical_max];
    let steps = settings.lambda_points.max(2);
    let lambdas: Vec<f64> = (0..steps).map(|i| i as f64 / (steps - 1) as f64).collect();
    let mut boundary: Vec<RatePoint> = lambdas.iter().map(|&l| time_share(&points[0], &points[1], l)).collect();
    boundary.extend(lambdas.iter().map(|&l| time_share(&points[2], &points[3], l)));

    Ok(RegionReport {
        fiber: spec.clone(),
        attacks: attacks.to_vec(),
        worst_attack_per_quantity: worst,
        paper_disagreement: quantum.disagreement(),
        points,
        paper_points: vec![quantum.paper_formula.point, classical.paper_formula.point],
        boundary,
        classical_receiver: classical_receiver(spec),
    })
}
