//! Spectra of the Gram-Toeplitz family: dense eigenvalues for finite `n`,
//! extrema of the generating symbol, and Szegő-limit functionals.

use std::f64::consts::{PI, TAU};

use nalgebra::{DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fiber::{dense_matrix, GramSymbol};

pub const DEFAULT_XI_GRID: usize = 1 << 16;
pub const DEFAULT_QUADRATURE_NODES: usize = 4096;

/// Location and value of a symbol extremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolExtremum {
    pub xi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub n: usize,
    /// Ascending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub sym_min: f64,
    pub sym_max: f64,
    /// Worst `‖G v - λ v‖ / ‖G‖` over the two extreme eigenpairs.
    pub max_residual: f64,
}

impl SpectrumReport {
    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

/// Dense symmetric eigendecomposition of `G_n`; eigenvalues ascending.
pub(crate) fn eigen_decomposition(
    sym: &GramSymbol,
    n: usize,
    limit: usize,
) -> Result<(Vec<f64>, Vec<DVector<f64>>, f64)> {
    let g = dense_matrix(sym, n, limit)?;
    let eig = SymmetricEigen::new(g.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    let norm = g.norm();
    let extreme = [order[0], order[n - 1]];
    let residual = extreme
        .iter()
        .map(|&i| {
            let v = eig.eigenvectors.column(i);
            (&g * v - v * eig.eigenvalues[i]).norm()
        })
        .fold(0.0, f64::max);
    let scaled = if norm > 0.0 { residual / norm } else { residual };
    Ok((values, vectors, scaled))
}

/// Eigenvalues of the dense `n x n` Toeplitz matrix generated by `sym`.
pub fn toeplitz_eigenvalues(sym: &GramSymbol, n: usize, limit: usize) -> Result<SpectrumReport> {
    let (values, _, max_residual) = eigen_decomposition(sym, n, limit)?;
    let eigenvalues = values.into_iter().map(|l| l.max(0.0)).collect();
    Ok(SpectrumReport {
        n,
        eigenvalues,
        sym_min: symbol_infimum(sym).value,
        sym_max: symbol_supremum(sym).value,
        max_residual,
    })
}

/// Global maximum of the symbol on `[0, 2π)`.
pub fn symbol_supremum(sym: &GramSymbol) -> SymbolExtremum {
    symbol_supremum_with_grid(sym, DEFAULT_XI_GRID)
}

pub fn symbol_supremum_with_grid(sym: &GramSymbol, points: usize) -> SymbolExtremum {
    let best = extremum(sym, points, 1.0);
    SymbolExtremum { xi: best.xi, value: best.value.max(0.0) }
}

/// Global minimum of the symbol on `[0, 2π)`.
pub fn symbol_infimum(sym: &GramSymbol) -> SymbolExtremum {
    let best = extremum(sym, DEFAULT_XI_GRID, -1.0);
    SymbolExtremum { xi: best.xi, value: best.value.max(0.0) }
}

// Maximizes `sign * f`. The symbol is real and even, so `[0, π]` suffices.
fn extremum(sym: &GramSymbol, points: usize, sign: f64) -> SymbolExtremum {
    let objective = |xi: f64| sign * sym.eval_raw(xi);
    if sym.is_null() {
        return SymbolExtremum { xi: 0.0, value: 0.0 };
    }
    let half = (points / 2).max(8);
    let step = PI / half as f64;
    let values: Vec<f64> = (0..=half).map(|i| objective(i as f64 * step)).collect();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // A peak between grid points exceeds its nearest sample by at most
    // max|f''| (h/2)² / 2, so every sample within that margin is a candidate.
    let margin = sym.curvature_bound() * step * step / 8.0;

    let mut best = SymbolExtremum { xi: 0.0, value: values[0] };
    for i in 0..=half {
        let v = values[i];
        let left = if i == 0 { values[1] } else { values[i - 1] };
        let right = if i == half { values[half - 1] } else { values[i + 1] };
        if v < left || v < right || v < top - margin {
            continue;
        }
        let xi = i as f64 * step;
        let refined = golden_section(objective, xi - step, xi + step);
        let candidate = if refined.value > v { refined } else { SymbolExtremum { xi, value: v } };
        if candidate.value > best.value {
            best = candidate;
        }
    }
    best.xi = best.xi.rem_euclid(TAU);
    best.value *= sign;
    best
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> SymbolExtremum {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-13 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        SymbolExtremum { xi: x1, value: f1 }
    } else {
        SymbolExtremum { xi: x2, value: f2 }
    }
}

/// Function applied to the symbol (or the eigenvalues) before averaging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SzegoFunctional {
    Identity,
    /// `x ↦ ln(1 + E x)`.
    Log1pScaled(f64),
}

impl SzegoFunctional {
    pub fn from_id(id: &str, energy: f64) -> Result<Self> {
        match id {
            "identity" => Ok(Self::Identity),
            "log1p_scaled" => {
                if !(energy.is_finite() && energy >= 0.0) {
                    return Err(Error::InvalidEnergy(energy));
                }
                Ok(Self::Log1pScaled(energy))
            }
            other => Err(Error::UnknownFunctional(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Log1pScaled(_) => "log1p_scaled",
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => x,
            Self::Log1pScaled(energy) => (energy * x.max(0.0)).ln_1p(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SzegoResult {
    pub functional: SzegoFunctional,
    /// `(n, (1/n) Σ F(λ_{i,n}))`.
    pub finite_n_values: Vec<(usize, f64)>,
    /// `(1/2π) ∫ F(f(ξ)) dξ`.
    pub limit_value: f64,
    pub quadrature_nodes: usize,
}

impl SzegoResult {
    /// `|finite - limit|` at every recorded `n`.
    pub fn gaps(&self) -> Vec<(usize, f64)> {
        self.finite_n_values.iter().map(|&(n, v)| (n, (v - self.limit_value).abs())).collect()
    }
}

/// Trapezoid-rule mean of `F(f(ξ))` over the period.
pub fn szego_functional(sym: &GramSymbol, functional: SzegoFunctional, nodes: usize) -> Result<SzegoResult> {
    if nodes < 64 {
        return Err(Error::TooFewNodes(nodes));
    }
    let h = TAU / nodes as f64;
    let total: f64 = (0..nodes).map(|j| functional.apply(sym.eval_raw(j as f64 * h).max(0.0))).sum();
    Ok(SzegoResult {
        functional,
        finite_n_values: Vec::new(),
        limit_value: total / nodes as f64,
        quadrature_nodes: nodes,
    })
}

/// Quadrature limit together with the finite-`n` eigenvalue averages.
pub fn szego_convergence(
    sym: &GramSymbol,
    functional: SzegoFunctional,
    nodes: usize,
    n_list: &[usize],
    limit: usize,
) -> Result<SzegoResult> {
    let mut result = szego_functional(sym, functional, nodes)?;
    for &n in n_list {
        let spectrum = toeplitz_eigenvalues(sym, n, limit)?;
        let mean = spectrum.eigenvalues.iter().map(|&l| functional.apply(l)).sum::<f64>() / n as f64;
        result.finite_n_values.push((n, mean));
    }
    Ok(result)
}
