//! Error probabilities of the intrusion test, all in the log domain.
//!
//! At realistic pulse energies every probability here underflows `f64`, so
//! the API exchanges natural logarithms wrapped in [`LogProb`].

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fiber::GramSymbol;
use crate::spectral::eigen_decomposition;

/// Natural logarithm of a probability.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ONE: LogProb = LogProb(0.0);
    pub const HALF: LogProb = LogProb(-LN_2);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 || value.is_nan() {
            return Err(Error::InvalidLogProb(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }
}

/// `ln |⟨α|β⟩|² = -Σ |α_i - β_i|²` for multimode coherent states.
pub fn coherent_overlap_log(alpha: &[Complex64], beta: &[Complex64]) -> Result<LogProb> {
    if alpha.len() != beta.len() {
        return Err(Error::VectorLength { left: alpha.len(), right: beta.len() });
    }
    let distance: f64 = alpha.iter().zip(beta).map(|(a, b)| (a - b).norm_sqr()).sum();
    LogProb::new(-distance)
}

/// Helstrom error `½(1 - √(1 - |⟨α|β⟩|²))` for equal priors, evaluated as
/// `½ p / (1 + √(1 - p))` so tiny overlaps keep full precision.
pub fn helstrom_error(overlap_sq: LogProb) -> LogProb {
    let v = overlap_sq.value();
    if v == f64::NEG_INFINITY {
        return LogProb(f64::NEG_INFINITY);
    }
    let distinguishability = (-v.exp_m1()).max(0.0).sqrt();
    LogProb((-LN_2 + v - distinguishability.ln_1p()).min(0.0))
}

/// `⟨α, G α⟩` for a real symmetric `G` and complex `α`.
pub fn quadratic_form(alpha: &[Complex64], gram: &DMatrix<f64>) -> Result<f64> {
    if gram.nrows() != alpha.len() || gram.ncols() != alpha.len() {
        return Err(Error::VectorLength { left: alpha.len(), right: gram.nrows() });
    }
    let re = DVector::from_iterator(alpha.len(), alpha.iter().map(|a| a.re));
    let im = DVector::from_iterator(alpha.len(), alpha.iter().map(|a| a.im));
    Ok(re.dot(&(gram * &re)) + im.dot(&(gram * &im)))
}

/// `‖C α‖²` through the full banded convolution; equals `⟨α, G_n α⟩`.
pub fn banded_quadratic_form(sym: &GramSymbol, alpha: &[Complex64]) -> f64 {
    sym.difference_matrix(alpha.len()).apply_full(alpha).iter().map(|z| z.norm_sqr()).sum()
}

fn check_energy(alpha: &[Complex64], energy: f64) -> Result<()> {
    let used: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
    let budget = alpha.len() as f64 * energy;
    if used > budget * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::EnergyConstraint { energy: used, budget });
    }
    Ok(())
}

/// Displacement receiver: shift the expected baseline return to vacuum and
/// test for zero photons. `ln P_e = ln ½ - ⟨α, G α⟩`.
pub fn povm_error_log(alpha: &[Complex64], gram: &DMatrix<f64>, energy: f64) -> Result<LogProb> {
    check_energy(alpha, energy)?;
    let q = quadratic_form(alpha, gram)?;
    LogProb::new(-LN_2 - q)
}

/// Constant-amplitude probe `α_t = √E`.
pub fn constant_input(n: usize, energy: f64) -> Vec<Complex64> {
    vec![Complex64::new(energy.sqrt(), 0.0); n]
}

/// Top eigenvector of `G_n`, scaled to total energy `nE`.
pub fn top_eigenvector_input(sym: &GramSymbol, n: usize, energy: f64, limit: usize) -> Result<Vec<Complex64>> {
    let (_, vectors, _) = eigen_decomposition(sym, n, limit)?;
    let scale = (n as f64 * energy).sqrt();
    Ok(vectors[n - 1].iter().map(|v| Complex64::new(v * scale, 0.0)).collect())
}

/// Per-use exponent of the return energy after discarding transients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateExponent {
    /// `‖C α‖² / n` over every output slot.
    pub raw: f64,
    /// Mean over the slots where all `2L` delays see a transmitted pulse.
    pub corrected: f64,
    pub steady_slots: usize,
}

/// Splits the full-convolution return of `alpha` into ramp-up/ramp-down
/// transients and the steady-state slots in between.
pub fn steady_state_exponent(sym: &GramSymbol, alpha: &[Complex64]) -> Result<SteadyStateExponent> {
    let n = alpha.len();
    let band = sym.band();
    if n <= band {
        return Err(Error::TooShort { what: "steady-state exponent", n, transient: band });
    }
    let out = sym.difference_matrix(n).apply_full(alpha);
    let total: f64 = out.iter().map(|z| z.norm_sqr()).sum();
    // Output slot t (0-based) sees inputs t-band..t-1; all exist for band <= t <= n.
    let steady: f64 = out[band..=n].iter().map(|z| z.norm_sqr()).sum();
    let slots = n - band + 1;
    Ok(SteadyStateExponent { raw: total / n as f64, corrected: steady / slots as f64, steady_slots: slots })
}

/// Expected overlap term of a Gaussian random codebook,
/// `ln Π (E λ_i + 1)^{-1}` from the eigenvalues of `G_n`.
pub fn expected_error_determinant_log(sym: &GramSymbol, n: usize, energy: f64, limit: usize) -> Result<LogProb> {
    if sym.is_null() || energy == 0.0 {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if n > limit {
            return Err(Error::DenseLimit { n, limit });
        }
        return Ok(LogProb::ONE);
    }
    let (values, _, _) = eigen_decomposition(sym, n, limit)?;
    let sum: f64 = values.iter().map(|l| (energy * l.max(0.0)).ln_1p()).sum();
    LogProb::new(-sum)
}

/// `-ln det(E G_n + I)` from a banded `LDLᵀ` factorization. The pivots are
/// tracked as offsets from one so that `ln(1 + δ)` keeps precision when
/// `E G_n` is tiny.
pub fn expected_error_ldl_log(sym: &GramSymbol, n: usize, energy: f64, limit: usize) -> Result<LogProb> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if n > limit {
        return Err(Error::DenseLimit { n, limit });
    }
    let width = sym.correlations().iter().rposition(|g| *g != 0.0).unwrap_or(0).min(n - 1);
    let entry = |d: usize| energy * sym.g(d);

    // lower[i][w - (i - j)] holds L_ij for i - w <= j < i
    let mut lower = vec![vec![0.0; width]; n];
    let mut pivot = vec![1.0; n];
    let mut log_det = 0.0;
    for j in 0..n {
        let start = j.saturating_sub(width);
        let mut delta = entry(0);
        for k in start..j {
            let l = lower[j][width - (j - k)];
            delta -= l * l * pivot[k];
        }
        pivot[j] = 1.0 + delta;
        log_det += delta.ln_1p();
        for i in j + 1..(j + width + 1).min(n) {
            let mut acc = entry(i - j);
            for k in i.saturating_sub(width).max(start)..j {
                acc -= lower[i][width - (i - k)] * lower[j][width - (j - k)] * pivot[k];
            }
            lower[i][width - (i - j)] = acc / pivot[j];
        }
    }
    LogProb::new(-log_det)
}
