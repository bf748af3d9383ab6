//! Brute-force QFIM by discretizing the density kernel on a position grid.
//!
//! On grid points `x_i` with spacing `h` the state is the matrix
//! `R = q a aᵀ + (1-q) b bᵀ` with `a_i = √h Ψ(x_i - s0 - s/2)` and
//! `b_i = √h Ψ(x_i - s0 + s/2)`. Parameter derivatives are central finite
//! differences of `R`. Both are kept as short sums of outer products, so the
//! nonzero spectrum comes from a 2×2 problem and every kernel-space sum
//! in the spectral QFIM formula is replaced by its completeness identity:
//!
//! ```text
//! Q_αβ = Σ_{m,n} 2/(λ_m+λ_n) D_α[m,n] D_β[n,m]
//!      + Σ_m 4/λ_m ( |D_α u_m|·|D_β u_m| - Σ_n D_α[m,n] D_β[n,m] )
//! ```
//!
//! where `m, n` run over the support eigenvectors `u_m` of `R`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix2};

use crate::error::{invalid, Error, Result};
use crate::fisher::{FisherMatrix, InfoKind, Provenance};
use crate::math::sqrt;
use crate::psf::PsfModel;
use crate::qfi::sld::{compatibility_in_span, CompatibilityReport};
use crate::qfi::subspace::SpanOperators;
use crate::qfi::RANK_TOL;
use crate::scene::SourceParams;
use crate::spline::UniformGrid;

/// Discretization settings, in PSF widths.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    /// Margin beyond the outermost source.
    pub extent: f64,
    /// Largest grid spacing.
    pub spacing: f64,
    /// Finite-difference step for the parameter derivatives.
    pub fd_step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            extent: 12.0,
            spacing: 0.02,
            fd_step: 1e-4,
        }
    }
}

/// Largest tolerated `|1 - Tr R|`.
pub const LEAKAGE_TOL: f64 = 1e-10;

/// `Σ_t c_t v_t v_tᵀ`.
struct LowRank {
    coef: Vec<f64>,
    vecs: Vec<Vec<f64>>,
}

impl LowRank {
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (c, v) in self.coef.iter().zip(&self.vecs) {
            let k = c * dot(v, u);
            out.iter_mut().zip(v).for_each(|(o, x)| *o += k * x);
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Discretized {
    /// Amplitude samples `√h Ψ` for the "+" and "−" sources.
    a: Vec<f64>,
    b: Vec<f64>,
}

fn grid_for(psf: &PsfModel, p: &SourceParams, spec: &GridSpec) -> Result<UniformGrid> {
    if !(spec.spacing > 0.0 && spec.spacing <= 0.02 * psf.width() * (1.0 + 1e-12)) {
        return Err(invalid("grid spacing must be positive and at most 0.02 widths"));
    }
    if !(spec.extent > 0.0) || !(spec.fd_step > 0.0) {
        return Err(invalid("grid extent and finite-difference step must be positive"));
    }
    let w = psf.width();
    UniformGrid::covering(p.minus() - spec.extent * w, p.plus() + spec.extent * w, spec.spacing)
}

fn amplitudes(psf: &PsfModel, grid: &UniformGrid, center: f64) -> Vec<f64> {
    let r = sqrt(grid.step);
    grid.points().map(|x| r * psf.amplitude(x - center)).collect()
}

fn discretize(psf: &PsfModel, p: &SourceParams, grid: UniformGrid) -> Discretized {
    Discretized {
        a: amplitudes(psf, &grid, p.plus()),
        b: amplitudes(psf, &grid, p.minus()),
    }
}

fn check_leakage(d: &Discretized, q: f64) -> Result<()> {
    let trace = q * dot(&d.a, &d.a) + (1.0 - q) * dot(&d.b, &d.b);
    let leak = (1.0 - trace).abs();
    if leak > LEAKAGE_TOL {
        return Err(Error::GridLeakage(leak));
    }
    Ok(())
}

/// Support eigenpairs of `R` from the 2×2 problem `BᵀB` with
/// `B = [√q a, √(1-q) b]`.
fn spectrum(d: &Discretized, q: f64) -> Vec<(f64, Vec<f64>)> {
    let (sa, sb) = (sqrt(q), sqrt(1.0 - q));
    let m = Matrix2::new(
        q * dot(&d.a, &d.a),
        sa * sb * dot(&d.a, &d.b),
        sa * sb * dot(&d.a, &d.b),
        (1.0 - q) * dot(&d.b, &d.b),
    );
    let eig = m.symmetric_eigen();
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..2)
        .filter(|&k| eig.eigenvalues[k] > RANK_TOL)
        .map(|k| {
            let l = eig.eigenvalues[k];
            let z = eig.eigenvectors.column(k);
            let scale = 1.0 / sqrt(l);
            let u =
                d.a.iter()
                    .zip(&d.b)
                    .map(|(x, y)| scale * (z[0] * sa * x + z[1] * sb * y))
                    .collect();
            (l, u)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs
}

/// Nonzero eigenvalues of the discretized density matrix, descending
/// (a missing second eigenvalue is reported as zero).
pub fn grid_rho_spectrum(psf: &PsfModel, params: SourceParams, spec: &GridSpec) -> Result<[f64; 2]> {
    params.validate()?;
    let d = discretize(psf, &params, grid_for(psf, &params, spec)?);
    check_leakage(&d, params.q)?;
    let s = spectrum(&d, params.q);
    Ok([s.first().map_or(0.0, |p| p.0), s.get(1).map_or(0.0, |p| p.0)])
}

/// Central difference of `R` along parameter `alpha`, as signed outer products.
fn derivative(psf: &PsfModel, params: &SourceParams, grid: &UniformGrid, alpha: usize, step: f64) -> LowRank {
    let mut coef = Vec::with_capacity(4);
    let mut vecs = Vec::with_capacity(4);
    for sign in [1.0, -1.0] {
        let mut th = params.to_array();
        th[alpha] += sign * step;
        let [s0, s, q] = th;
        let scale = sign / (2.0 * step);
        coef.push(scale * q);
        vecs.push(amplitudes(psf, grid, s0 + 0.5 * s));
        coef.push(scale * (1.0 - q));
        vecs.push(amplitudes(psf, grid, s0 - 0.5 * s));
    }
    LowRank { coef, vecs }
}

/// QFIM per detection event by discretization (provenance `grid-oracle`).
///
/// The `q` derivative needs `0 < q < 1`.
pub fn qfim_grid_oracle(psf: &PsfModel, params: SourceParams, spec: &GridSpec) -> Result<FisherMatrix> {
    params.validate()?;
    if params.q <= 0.0 || params.q >= 1.0 {
        return Err(invalid("grid oracle needs 0 < q < 1"));
    }
    let grid = grid_for(psf, &params, spec)?;
    let d = discretize(psf, &params, grid);
    check_leakage(&d, params.q)?;
    let support = spectrum(&d, params.q);
    let derivs: [LowRank; 3] = core::array::from_fn(|a| derivative(psf, &params, &grid, a, spec.fd_step));
    // applied[α][m] = D_α u_m
    let applied: Vec<Vec<Vec<f64>>> = derivs
        .iter()
        .map(|dr| support.iter().map(|(_, u)| dr.apply(u)).collect())
        .collect();
    let r = support.len();
    let elem = |a: usize, m: usize, n: usize| dot(&support[n].1, &applied[a][m]);
    let mut entries = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            let mut v = 0.0;
            for m in 0..r {
                let lm = support[m].0;
                let mut inner = 0.0;
                for n in 0..r {
                    let prod = elem(a, m, n) * elem(b, n, m);
                    v += 2.0 / (lm + support[n].0) * prod;
                    inner += prod;
                }
                v += 4.0 / lm * (dot(&applied[a][m], &applied[b][m]) - inner);
            }
            entries[a][b] = v;
            entries[b][a] = v;
        }
    }
    Ok(FisherMatrix::new(entries, InfoKind::Quantum, Provenance::GridOracle))
}

/// Operators over the grid span of `{Ψ+, Ψ−, Ψ+', Ψ−'}`, where the
/// derivative functions are central differences of the sampled amplitude
/// and the Gram matrix is a trapezoid sum on the grid.
pub fn grid_span(psf: &PsfModel, params: SourceParams, spec: &GridSpec) -> Result<SpanOperators> {
    params.validate()?;
    let grid = grid_for(psf, &params, spec)?;
    let d = discretize(psf, &params, grid);
    check_leakage(&d, params.q)?;
    let h = spec.fd_step;
    let diff = |c: f64| -> Vec<f64> {
        let up = amplitudes(psf, &grid, c - h);
        let dn = amplitudes(psf, &grid, c + h);
        up.iter().zip(&dn).map(|(u, v)| (u - v) / (2.0 * h)).collect()
    };
    let vecs = [d.a.clone(), d.b.clone(), diff(params.plus()), diff(params.minus())];
    let gram = DMatrix::from_fn(4, 4, |i, j| dot(&vecs[i], &vecs[j]));
    let q = params.q;
    let mut rho = DMatrix::zeros(4, 4);
    rho[(0, 0)] = q;
    rho[(1, 1)] = 1.0 - q;
    let pair = |c0: f64, c1: f64| {
        let mut m = DMatrix::zeros(4, 4);
        m[(2, 0)] = c0;
        m[(0, 2)] = c0;
        m[(3, 1)] = c1;
        m[(1, 3)] = c1;
        m
    };
    let mut d_q = DMatrix::zeros(4, 4);
    d_q[(0, 0)] = 1.0;
    d_q[(1, 1)] = -1.0;
    Ok(SpanOperators {
        gram,
        rho,
        derivs: [pair(-q, -(1.0 - q)), pair(-0.5 * q, 0.5 * (1.0 - q)), d_q],
    })
}

/// Commutation residuals evaluated on the grid span.
pub fn grid_compatibility(psf: &PsfModel, params: SourceParams, spec: &GridSpec) -> Result<CompatibilityReport> {
    compatibility_in_span(&grid_span(psf, params, spec)?)
}
