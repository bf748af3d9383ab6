//! Symmetric logarithmic derivatives on a finite span.
//!
//! The span is first orthonormalized through the eigen-decomposition of its
//! Gram matrix (directions with Gram eigenvalue below `1e-12` of the largest
//! are dropped). In the eigenbasis `{|μ_i⟩}` of `ρ` the SLD is
//! `L_ij = 2⟨μ_i|∂ρ|μ_j⟩ / (μ_i + μ_j)` for every pair that touches the
//! support, and zero on the kernel block.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fisher::{FisherMatrix, InfoKind, Param, Provenance};
use crate::linalg::{sym_eigen_desc, Mat3};
use crate::math::sqrt;
use crate::qfi::subspace::{SpanOperators, SubspaceRep};
use crate::qfi::{SpectralDecomposition, RANK_TOL};

/// Largest tolerated ratio between the largest and smallest eigenvalue sum
/// entering the SLD denominators.
pub const MAX_CONDITION: f64 = 1e12;

/// Passing threshold of [`compatibility_check`].
pub const COMPATIBILITY_TOL: f64 = 1e-9;

/// SLD of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Sld {
    pub param: Param,
    /// Coefficient matrix of `L` over the span basis.
    pub coeffs: DMatrix<f64>,
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as span coefficients, orthonormal in the Gram metric.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Largest entry of `½(Lρ + ρL) - ∂ρ` in orthonormal coordinates.
    pub residual: f64,
    /// Ratio of the largest to the smallest eigenvalue sum used.
    pub condition: f64,
    /// `Tr(ρ L²)`, the diagonal QFIM entry.
    pub information: f64,
}

/// Everything expressed in the orthonormal eigenbasis of `ρ` within the span.
struct Solved {
    /// Span coefficients of the orthonormal eigenbasis of `ρ` (columns).
    basis: DMatrix<f64>,
    mu: Vec<f64>,
    slds: [DMatrix<f64>; 3],
    derivs: [DMatrix<f64>; 3],
    condition: f64,
}

fn solve(span: &SpanOperators, support: Option<usize>) -> Result<Solved> {
    let (g_vals, g_vecs) = sym_eigen_desc(span.gram.clone());
    let g_max = g_vals.first().copied().unwrap_or(0.0);
    let k = g_vals.iter().take_while(|&&v| v > 1e-12 * g_max).count();
    if k == 0 {
        return Err(Error::DegenerateState(0.0));
    }
    let n = span.gram.nrows();
    let ortho = DMatrix::from_fn(n, k, |i, j| g_vecs[(i, j)] / sqrt(g_vals[j]));
    let g = &span.gram;
    let project = |c: &DMatrix<f64>| {
        let m = ortho.transpose() * g * c * g * &ortho;
        (&m + m.transpose()) * 0.5
    };
    let (mu, y) = sym_eigen_desc(project(&span.rho));
    let basis = &ortho * &y;
    let rank = support
        .unwrap_or_else(|| mu.iter().filter(|&&v| v > RANK_TOL).count())
        .min(k);
    if rank == 0 {
        return Err(Error::DegenerateState(mu.first().copied().unwrap_or(0.0)));
    }
    let derivs: [DMatrix<f64>; 3] = core::array::from_fn(|a| y.transpose() * project(&span.derivs[a]) * &y);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..k {
        for j in 0..k {
            if i < rank || j < rank {
                let sum = mu[i].max(0.0) + mu[j].max(0.0);
                lo = lo.min(sum);
                hi = hi.max(sum);
            }
        }
    }
    let condition = hi / lo;
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned(condition));
    }
    let slds = core::array::from_fn(|a| {
        DMatrix::from_fn(k, k, |i, j| {
            if i < rank || j < rank {
                2.0 * derivs[a][(i, j)] / (mu[i].max(0.0) + mu[j].max(0.0))
            } else {
                0.0
            }
        })
    });
    let mu = mu
        .into_iter()
        .enumerate()
        .map(|(i, v)| if i < rank { v } else { 0.0 })
        .collect();
    Ok(Solved {
        basis,
        mu,
        slds,
        derivs,
        condition,
    })
}

fn trace_rho_product(mu: &[f64], a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (0..mu.len()).map(|i| mu[i] * (a.row(i) * b.column(i))[(0, 0)]).sum()
}

fn build(solved: &Solved, alpha: usize) -> Sld {
    let l = &solved.slds[alpha];
    let d = &solved.derivs[alpha];
    let k = solved.mu.len();
    let mut residual = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let r = 0.5 * l[(i, j)] * (solved.mu[i] + solved.mu[j]) - d[(i, j)];
            residual = residual.max(r.abs());
        }
    }
    let (vals, z) = sym_eigen_desc(l.clone());
    let vectors = &solved.basis * z;
    let eigenvectors = (0..k)
        .map(|c| {
            let mut v: Vec<f64> = vectors.column(c).iter().copied().collect();
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            v
        })
        .collect();
    Sld {
        param: Param::ALL[alpha],
        coeffs: &solved.basis * l * solved.basis.transpose(),
        eigenvalues: vals,
        eigenvectors,
        residual,
        condition: solved.condition,
        information: trace_rho_product(&solved.mu, l, l),
    }
}

/// SLD of parameter `which` on the span `{Ψ+, Ψ−, Ψ+', Ψ−'}`.
///
/// The rank of `ρ` is taken from `dec`; a pure state (coincident sources
/// or `q ∈ {0, 1}`) is handled by the same formula with a one-dimensional
/// support.
pub fn sld_subspace(sub: &SubspaceRep, dec: &SpectralDecomposition, which: Param) -> Result<Sld> {
    let rank = dec.lambda.iter().filter(|&&l| l > RANK_TOL).count();
    let solved = solve(&sub.span(), Some(rank))?;
    Ok(build(&solved, which.index()))
}

/// SLD of parameter `which` over an arbitrary span.
pub fn sld_in_span(span: &SpanOperators, which: Param) -> Result<Sld> {
    Ok(build(&solve(span, None)?, which.index()))
}

/// `Q_αβ = ½ Tr(ρ {L_α, L_β})` over an arbitrary span.
pub fn sld_qfim(span: &SpanOperators) -> Result<FisherMatrix> {
    let s = solve(span, None)?;
    let entries: Mat3 = core::array::from_fn(|a| {
        core::array::from_fn(|b| {
            0.5 * (trace_rho_product(&s.mu, &s.slds[a], &s.slds[b]) + trace_rho_product(&s.mu, &s.slds[b], &s.slds[a]))
        })
    });
    Ok(FisherMatrix::new(entries, InfoKind::Quantum, Provenance::Rank2))
}

/// Commutation residuals `Tr(ρ [L_α, L_β])`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompatibilityReport {
    /// Antisymmetric matrix of residuals in `(s0, s, q)` order.
    pub residual: Mat3,
    pub max_abs: f64,
    /// `max_abs < 1e-9`: the three precision bounds are jointly attainable.
    pub passes: bool,
}

fn compatibility(solved: &Solved) -> CompatibilityReport {
    let mut residual = [[0.0; 3]; 3];
    let mut max_abs = 0.0f64;
    for a in 0..3 {
        for b in 0..3 {
            if a != b {
                let ab = trace_rho_product(&solved.mu, &solved.slds[a], &solved.slds[b]);
                let ba = trace_rho_product(&solved.mu, &solved.slds[b], &solved.slds[a]);
                residual[a][b] = ab - ba;
                max_abs = max_abs.max((ab - ba).abs());
            }
        }
    }
    CompatibilityReport {
        residual,
        max_abs,
        passes: max_abs < COMPATIBILITY_TOL,
    }
}

/// Evaluates the commutation condition on the four-dimensional span.
pub fn compatibility_check(sub: &SubspaceRep, dec: &SpectralDecomposition) -> Result<CompatibilityReport> {
    let rank = dec.lambda.iter().filter(|&&l| l > RANK_TOL).count();
    Ok(compatibility(&solve(&sub.span(), Some(rank))?))
}

/// Commutation condition over an arbitrary span.
pub fn compatibility_in_span(span: &SpanOperators) -> Result<CompatibilityReport> {
    Ok(compatibility(&solve(span, None)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psf::{gaussian_psf, moments, overlaps};
    use crate::qfi::{qfim_closed_form, rho_eigensystem};
    use crate::scene::SourceParams;

    fn setup(s: f64, q: f64) -> (SubspaceRep, SpectralDecomposition, FisherMatrix) {
        let psf = gaussian_psf(1.0).unwrap();
        let ov = overlaps(&psf, s).unwrap();
        let mom = moments(&psf).unwrap();
        let p = SourceParams::new(0.0, s, q).unwrap();
        (
            SubspaceRep::new(&ov, &mom, p).unwrap(),
            rho_eigensystem(&ov, q).unwrap(),
            qfim_closed_form(&ov, &mom, p).unwrap(),
        )
    }

    #[test]
    fn separation_sld_reproduces_information() {
        let (sub, dec, q) = setup(1.0, 0.5);
        let l = sld_subspace(&sub, &dec, Param::Separation).unwrap();
        assert!(l.residual < 1e-9);
        assert!((l.information - 0.25).abs() < 1e-8);
        assert!((l.information - q.get(Param::Separation, Param::Separation)).abs() < 1e-10);
    }

    #[test]
    fn sld_qfim_matches_closed_form() {
        for &(s, q) in &[(0.5, 0.3), (2.0, 0.7), (0.2, 0.1)] {
            let (sub, _, cf) = setup(s, q);
            let m = sld_qfim(&sub.span()).unwrap();
            assert!(m.max_abs_diff(&cf) < 1e-8, "s={s} q={q}");
        }
    }

    #[test]
    fn eigenvectors_are_gram_orthonormal() {
        let (sub, dec, _) = setup(0.7, 0.4);
        let l = sld_subspace(&sub, &dec, Param::Centroid).unwrap();
        let g = sub.span().gram;
        for (i, u) in l.eigenvectors.iter().enumerate() {
            for (j, v) in l.eigenvectors.iter().enumerate() {
                let uv = (DMatrix::from_row_slice(1, 4, u) * &g * DMatrix::from_column_slice(4, 1, v))[(0, 0)];
                assert!((uv - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
        for w in l.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn coincident_sources_give_single_source_centroid_sld() {
        // Pure state |Ψ⟩: L_s0 = 2(|∂Ψ⟩⟨Ψ| + |Ψ⟩⟨∂Ψ|) with ∂Ψ = -Ψ'.
        let (sub, dec, _) = setup(0.0, 0.5);
        let l = sld_subspace(&sub, &dec, Param::Centroid).unwrap();
        assert!(l.residual < 1e-10);
        assert!((l.information - 4.0 * 0.25).abs() < 1e-10);
        // ⟨Ψ|L|Ψ'⟩ = -2 p2 and ⟨Ψ'|L|Ψ'⟩ = 0 for the single-source operator.
        let g = sub.span().gram;
        let el = |u: [f64; 4], v: [f64; 4]| {
            (DMatrix::from_row_slice(1, 4, &u) * &g * &l.coeffs * &g * DMatrix::from_column_slice(4, 1, &v))[(0, 0)]
        };
        let psi = [1.0, 0.0, 0.0, 0.0];
        let dpsi = [0.0, 0.0, 1.0, 0.0];
        assert!((el(psi, dpsi) + 2.0 * 0.25).abs() < 1e-10);
        assert!(el(dpsi, dpsi).abs() < 1e-10);
        assert!(el(psi, psi).abs() < 1e-10);
    }

    #[test]
    fn compatibility_holds_for_real_psf() {
        for &(s, q) in &[(0.05, 0.1), (1.0, 0.5), (4.0, 0.95)] {
            let (sub, dec, _) = setup(s, q);
            let r = compatibility_check(&sub, &dec).unwrap();
            assert!(r.passes, "s={s} q={q}: {}", r.max_abs);
            for a in 0..3 {
                assert_eq!(r.residual[a][a], 0.0);
            }
        }
    }
}
