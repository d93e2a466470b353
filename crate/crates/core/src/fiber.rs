//! Fiber model: a chain of beam-splitter blocks, its back-scatter impulse
//! response under the baseline and an attacked state, and the Gram-Toeplitz
//! symbol of the difference response.
//!
//! Delay `k` couples the input sent at time `t - k` into the return port at
//! time `t`. Light picked up at block `j` has travelled through blocks
//! `1..j` twice, so only even delays carry energy:
//!
//! ```text
//! a_{2j} = sqrt(θ'_j τ'_j Π_{k<j} θ_k τ_k),    a_{2j-1} = 0,    x' = 1 - x
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest dense rendering handed out unless the caller asks for more.
pub const DEFAULT_DENSE_LIMIT: usize = 2048;

/// Baseline (state `s = 0`) fiber: per-block transmissivities and pickup
/// splits plus the mean photon number per pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSpec {
    tau: Vec<f64>,
    theta: Vec<f64>,
    energy: f64,
}

impl FiberSpec {
    pub fn new(tau: Vec<f64>, theta: Vec<f64>, energy: f64) -> Result<Self> {
        if tau.is_empty() && theta.is_empty() {
            return Err(Error::NoBlocks);
        }
        if tau.len() != theta.len() {
            return Err(Error::LengthMismatch { tau: tau.len(), theta: theta.len() });
        }
        for (index, &value) in tau.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::InvalidTau { index, value });
            }
        }
        for (index, &value) in theta.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidTheta { index, value });
            }
        }
        if !(energy.is_finite() && energy >= 0.0) {
            return Err(Error::InvalidEnergy(energy));
        }
        Ok(Self { tau, theta, energy })
    }

    /// All blocks share the same `tau` and `theta`.
    pub fn uniform(blocks: usize, tau: f64, theta: f64, energy: f64) -> Result<Self> {
        Self::new(vec![tau; blocks], vec![theta; blocks], energy)
    }

    pub fn blocks(&self) -> usize {
        self.tau.len()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Same fiber with a different pulse energy.
    pub fn with_energy(&self, energy: f64) -> Result<Self> {
        Self::new(self.tau.clone(), self.theta.clone(), energy)
    }

    /// Baseline parameters with the attack substitution applied.
    fn attacked_parameters(&self, attack: &AttackSpec) -> Result<(Vec<f64>, Vec<f64>)> {
        attack.validate(self)?;
        let mut tau = self.tau.clone();
        let mut theta = self.theta.clone();
        tau[attack.position - 1] = attack.tau;
        theta[attack.position - 1] = attack.theta;
        Ok((tau, theta))
    }
}

/// Single-block perturbation: block `position` (1-based) gets transmissivity
/// `tau <= baseline` and pickup split `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackSpec {
    pub position: usize,
    pub tau: f64,
    pub theta: f64,
}

impl AttackSpec {
    pub fn new(position: usize, tau: f64, theta: f64) -> Self {
        Self { position, tau, theta }
    }

    /// The attack that changes nothing at `position`.
    pub fn null(spec: &FiberSpec, position: usize) -> Result<Self> {
        check_position(spec, position)?;
        Ok(Self { position, tau: spec.tau[position - 1], theta: spec.theta[position - 1] })
    }

    pub fn validate(&self, spec: &FiberSpec) -> Result<()> {
        check_position(spec, self.position)?;
        let position = self.position;
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::AttackTau { position, tau: self.tau });
        }
        let baseline = spec.tau[position - 1];
        if self.tau > baseline {
            return Err(Error::AttackIncreasesTau { position, tau: self.tau, baseline });
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::AttackTheta { position, theta: self.theta });
        }
        Ok(())
    }
}

fn check_position(spec: &FiberSpec, position: usize) -> Result<()> {
    if position == 0 || position > spec.blocks() {
        return Err(Error::AttackPosition { position, blocks: spec.blocks() });
    }
    Ok(())
}

/// Which channel state a response belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelState {
    Baseline,
    Attack(AttackSpec),
}

/// Impulse response `a_1..a_{2L}` of the return channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BackscatterResponse {
    coeffs: Vec<f64>,
    state: ChannelState,
}

impl BackscatterResponse {
    pub fn blocks(&self) -> usize {
        self.coeffs.len() / 2
    }

    /// Coefficient at delay `k` (1-based); zero outside `1..=2L`.
    pub fn coeff(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.coeffs.get(k - 1).copied().unwrap_or(0.0)
    }

    /// `a_1..a_{2L}`; slice index `k - 1` holds delay `k`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn state(&self) -> ChannelState {
        self.state
    }

    /// Square `n x n` lower-triangular response matrix.
    pub fn matrix(&self, n: usize) -> BandedLowerToeplitz {
        BandedLowerToeplitz::new(n, self.coeffs.clone())
    }
}

/// Back-scatter impulse response of the fiber, optionally under an attack.
pub fn backscatter_coefficients(spec: &FiberSpec, attack: Option<&AttackSpec>) -> Result<BackscatterResponse> {
    let (tau, theta, state) = match attack {
        Some(attack) => {
            let (tau, theta) = spec.attacked_parameters(attack)?;
            (tau, theta, ChannelState::Attack(*attack))
        }
        None => (spec.tau.clone(), spec.theta.clone(), ChannelState::Baseline),
    };

    let mut coeffs = vec![0.0; 2 * tau.len()];
    // Round-trip power through the blocks in front of the pickup.
    let mut passed = 1.0;
    for (j, (&t, &h)) in tau.iter().zip(&theta).enumerate() {
        coeffs[2 * j + 1] = ((1.0 - h) * (1.0 - t) * passed).sqrt();
        passed *= h * t;
    }
    Ok(BackscatterResponse { coeffs, state })
}

/// Total forward loss `η = Π τ_i`.
pub fn forward_loss(spec: &FiberSpec) -> f64 {
    spec.tau.iter().product()
}

/// Difference response `c = a_s - a_0` together with its autocorrelation
/// `g_k = Σ_j c_j c_{j+k}`, the diagonals of `G = CᵀC`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSymbol {
    taps: Vec<f64>,
    corr: Vec<f64>,
    // (k, g_k) for the non-zero diagonals, k >= 1
    active: Vec<(usize, f64)>,
}

impl GramSymbol {
    /// Builds the symbol from `c_1..c_m` (slice index `k - 1` is delay `k`).
    pub fn from_taps(taps: Vec<f64>) -> Self {
        let m = taps.len();
        let corr: Vec<f64> = (0..m).map(|k| taps[..m - k].iter().zip(&taps[k..]).map(|(x, y)| x * y).sum()).collect();
        let active = corr.iter().enumerate().skip(1).filter(|(_, g)| **g != 0.0).map(|(k, g)| (k, *g)).collect();
        Self { taps, corr, active }
    }

    /// `c_1..c_{2L}`.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Delay `k` difference coefficient; `c_0 = 0`.
    pub fn tap(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.taps.get(k - 1).copied().unwrap_or(0.0)
    }

    /// `g_0..g_{2L-1}`.
    pub fn correlations(&self) -> &[f64] {
        &self.corr
    }

    /// `g_k`, zero beyond the band.
    pub fn g(&self, k: usize) -> f64 {
        self.corr.get(k).copied().unwrap_or(0.0)
    }

    /// Band half-width (`2L`).
    pub fn band(&self) -> usize {
        self.taps.len()
    }

    pub fn is_null(&self) -> bool {
        self.taps.iter().all(|c| *c == 0.0)
    }

    /// Symbol without the final clamp; may dip a few ulps below zero.
    pub fn eval_raw(&self, xi: f64) -> f64 {
        let tail: f64 = self.active.iter().map(|&(k, g)| g * (k as f64 * xi).cos()).sum();
        self.g(0) + 2.0 * tail
    }

    /// `f'(ξ) = -2 Σ k g_k sin(kξ)`.
    pub fn derivative(&self, xi: f64) -> f64 {
        -2.0 * self.active.iter().map(|&(k, g)| k as f64 * g * (k as f64 * xi).sin()).sum::<f64>()
    }

    /// Upper bound on `|f''|` over the circle.
    pub fn curvature_bound(&self) -> f64 {
        2.0 * self.active.iter().map(|&(k, g)| (k * k) as f64 * g.abs()).sum::<f64>()
    }

    /// `|Σ_k c_k e^{ikξ}|²`, evaluated from the taps.
    pub fn eval_from_taps(&self, xi: f64) -> f64 {
        let sum: Complex64 = self
            .taps
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| Complex64::from_polar(*c, (i + 1) as f64 * xi))
            .sum();
        sum.norm_sqr()
    }

    /// `(Σ c_k)²`, which equals `f(0)`.
    pub fn tap_sum_squared(&self) -> f64 {
        let s: f64 = self.taps.iter().sum();
        s * s
    }

    /// Lower-triangular difference matrix `C_n` (square, `n x n`).
    pub fn difference_matrix(&self, n: usize) -> BandedLowerToeplitz {
        BandedLowerToeplitz::new(n, self.taps.clone())
    }
}

/// Difference symbol between an attacked and the baseline response.
pub fn gram_symbol(baseline: &BackscatterResponse, attacked: &BackscatterResponse) -> Result<GramSymbol> {
    if baseline.blocks() != attacked.blocks() {
        return Err(Error::BlockMismatch { left: baseline.blocks(), right: attacked.blocks() });
    }
    let taps = attacked.coeffs.iter().zip(&baseline.coeffs).map(|(s, b)| s - b).collect();
    Ok(GramSymbol::from_taps(taps))
}

/// Convenience: symbol of `attack` against the baseline of `spec`.
pub fn attack_symbol(spec: &FiberSpec, attack: &AttackSpec) -> Result<GramSymbol> {
    let baseline = backscatter_coefficients(spec, None)?;
    let attacked = backscatter_coefficients(spec, Some(attack))?;
    gram_symbol(&baseline, &attacked)
}

/// `f(ξ) = g_0 + 2 Σ_{k≥1} g_k cos(kξ)`, clamped at zero.
pub fn eval_symbol(sym: &GramSymbol, xi: f64) -> f64 {
    sym.eval_raw(xi).max(0.0)
}

/// Banded lower-triangular Toeplitz matrix with zero main diagonal:
/// entry `(t, t - k) = taps[k - 1]` for `1 <= k <= taps.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedLowerToeplitz {
    n: usize,
    taps: Vec<f64>,
}

impl BandedLowerToeplitz {
    pub fn new(n: usize, taps: Vec<f64>) -> Self {
        Self { n, taps }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn band(&self) -> usize {
        self.taps.len()
    }

    /// Entry at 1-based `(row, col)`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if col >= row || row > self.n {
            return 0.0;
        }
        self.taps.get(row - col - 1).copied().unwrap_or(0.0)
    }

    /// Square `n x n` rendering (outputs `1..n` only).
    pub fn dense_square(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i + 1, j + 1))
    }

    /// Full convolution, `(n + band) x n`: the receiver also records the
    /// tail that leaves the fiber after the last pulse. Its Gram matrix is
    /// exactly Toeplitz.
    pub fn dense_full(&self) -> DMatrix<f64> {
        let rows = self.n + self.band();
        DMatrix::from_fn(
            rows,
            self.n,
            |i, j| {
                if i <= j {
                    0.0
                } else {
                    self.taps.get(i - j - 1).copied().unwrap_or(0.0)
                }
            },
        )
    }

    /// Full-convolution output for input `x` (length `n + band`).
    pub fn apply_full(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); x.len() + self.band()];
        for (k, &c) in self.taps.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (j, &v) in x.iter().enumerate() {
                out[j + k + 1] += v * c;
            }
        }
        out
    }
}

/// Dense Hermitian `G_n` with entries `g_{|i-j|}`.
pub fn dense_matrix(sym: &GramSymbol, n: usize, limit: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if n > limit {
        return Err(Error::DenseLimit { n, limit });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| sym.g(i.abs_diff(j))))
}
