//! Quantum Fisher information of the two-source state
//! `ρ = q|Ψ+⟩⟨Ψ+| + (1-q)|Ψ−⟩⟨Ψ−|`.
//!
//! Three independent routes are provided:
//!
//! - [`qfim_closed_form`]: the compact expression in terms of `w`, `m`, `p2`.
//!   This is the production path.
//! - [`qfim_rank2`]: the spectral form for a rank-2 state, evaluated from
//!   matrix elements inside the span of `{Ψ+, Ψ−, Ψ+', Ψ−'}`.
//! - [`oracle::qfim_grid_oracle`]: brute-force discretization of the density
//!   kernel on a position grid with finite-difference derivatives.
//!
//! The [`sld`] module solves for the symmetric logarithmic derivatives and
//! checks the commutation condition under which all three precision bounds
//! can be reached at once.

pub mod oracle;
pub mod sld;
mod subspace;

pub use oracle::{grid_rho_spectrum, qfim_grid_oracle, GridSpec};
pub use sld::{compatibility_check, sld_subspace, CompatibilityReport, Sld};
pub use subspace::{SpanOperators, SubspaceRep};

use crate::error::{invalid, Error, Result};
use crate::fisher::{FisherMatrix, InfoKind, Provenance};
use crate::math::sqrt;
use crate::psf::{OverlapSet, PsfMoments};
use crate::scene::SourceParams;

/// Below this the smaller eigenvalue of `ρ` is treated as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Closed-form QFIM per detection event:
///
/// ```text
/// Q = 4 [[p2 - 𝒬²m²,   (q-½)p2, w m           ],
///        [(q-½)p2,      p2/4,    0             ],
///        [w m,          0,       (1-w²)/(4q(1-q))]]
/// ```
///
/// At `q ∈ {0, 1}` the `q` row and column are zeroed and flagged; at `s = 0`
/// the `q` entries vanish and `q` is flagged as well.
pub fn qfim_closed_form(ov: &OverlapSet, mom: &PsfMoments, params: SourceParams) -> Result<FisherMatrix> {
    params.validate()?;
    if (ov.s - params.s).abs() > 1e-12 * params.s.max(1.0) {
        return Err(invalid("overlap set was evaluated at a different separation"));
    }
    let q = params.q;
    let bal = params.balance();
    let p2 = mom.p2;
    let (w, m) = (ov.w, ov.m);
    let q_edge = q == 0.0 || q == 1.0;
    let coincident = ov.one_minus_w == 0.0;
    let qq = if q_edge || coincident {
        0.0
    } else {
        ov.one_minus_w2() / bal
    };
    let qs0 = if q_edge { 0.0 } else { w * m };
    let entries = [
        [4.0 * (p2 - bal * m * m), 4.0 * (q - 0.5) * p2, 4.0 * qs0],
        [4.0 * (q - 0.5) * p2, p2, 0.0],
        [4.0 * qs0, 0.0, 4.0 * qq],
    ];
    Ok(
        FisherMatrix::new(entries, InfoKind::Quantum, Provenance::ClosedForm).with_degenerate([
            false,
            false,
            q_edge || coincident,
        ]),
    )
}

/// Eigen-decomposition of `ρ` inside `span{Ψ+, Ψ−}`.
///
/// `coeffs[i] = (a, b)` expresses `|λ_i⟩ = a|Ψ+⟩ + b|Ψ−⟩`, normalized in the
/// Gram metric `[[1, w], [w, 1]]`. A vanishing eigenvalue whose eigenvector
/// does not exist inside the span (coincident sources) gets zero
/// coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralDecomposition {
    pub lambda: [f64; 2],
    pub coeffs: [[f64; 2]; 2],
}

impl SpectralDecomposition {
    pub fn is_rank2(&self) -> bool {
        self.lambda[1] > RANK_TOL
    }
}

/// `λ = ½ ± sqrt(¼ - q(1-q)(1-w²))` with eigenvectors of
/// `[[q, qw], [(1-q)w, 1-q]]`.
pub fn rho_eigensystem(ov: &OverlapSet, q: f64) -> Result<SpectralDecomposition> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("brightness q must lie in [0, 1]"));
    }
    let w = ov.w;
    let omw = ov.one_minus_w;
    let x = q * (1.0 - q) * ov.one_minus_w2();
    let root = sqrt((0.25 - x).max(0.0));
    // Smaller root in the cancellation-free form.
    let small = x / (0.5 + root);
    let lambda = [1.0 - small, small];
    let mut coeffs = [[0.0; 2]; 2];
    for (i, &l) in lambda.iter().enumerate() {
        let cands = [
            // first row: (q - λ) a + q w b = 0
            ([q * w, l - q], l - q * omw),
            // second row: (1-q) w a + (1-q-λ) b = 0
            ([l - (1.0 - q), (1.0 - q) * w], l - (1.0 - q) * omw),
        ];
        let mut best = ([0.0; 2], 0.0);
        for (v, sum) in cands {
            // aᵀGa = (a+b)² - 2(1-w)ab, free of cancellation when w ≈ 1.
            let n2 = sum * sum - 2.0 * omw * v[0] * v[1];
            if n2 > best.1 {
                best = (v, n2);
            }
        }
        if best.1 > 1e-300 {
            let n = sqrt(best.1);
            let mut v = [best.0[0] / n, best.0[1] / n];
            let first = if v[0].abs() > 1e-12 { v[0] } else { v[1] };
            if first < 0.0 {
                v = [-v[0], -v[1]];
            }
            coeffs[i] = v;
        }
    }
    Ok(SpectralDecomposition { lambda, coeffs })
}

/// QFIM from the rank-2 spectral form. With `d_α[i][j] = ⟨λ_i|∂_αρ|λ_j⟩`
/// and `e_αβ[i] = ⟨λ_i|∂_αρ ∂_βρ|λ_i⟩`:
///
/// ```text
/// Q_αβ = Σ_i [ -3/λ_i d_α[i][i] d_β[i][i] + 4/λ_i e_αβ[i] ]
///        + 4 (1 - 1/λ1 - 1/λ2) d_α[1][2] d_β[1][2]
/// ```
pub fn qfim_rank2(sub: &SubspaceRep, dec: &SpectralDecomposition) -> Result<FisherMatrix> {
    if !dec.is_rank2() {
        return Err(Error::DegenerateState(dec.lambda[1]));
    }
    let vecs = [sub.lift(dec.coeffs[0]), sub.lift(dec.coeffs[1])];
    let d: [[[f64; 2]; 2]; 3] = core::array::from_fn(|a| {
        core::array::from_fn(|i| core::array::from_fn(|j| sub.element(&vecs[i], a, &vecs[j])))
    });
    let mut entries = [[0.0; 3]; 3];
    let [l1, l2] = dec.lambda;
    for a in 0..3 {
        for b in a..3 {
            let mut v = 0.0;
            for (i, &l) in dec.lambda.iter().enumerate() {
                let e = 0.5 * (sub.product_element(&vecs[i], a, b) + sub.product_element(&vecs[i], b, a));
                v += -3.0 / l * d[a][i][i] * d[b][i][i] + 4.0 / l * e;
            }
            v += 4.0 * (1.0 - 1.0 / l1 - 1.0 / l2) * d[a][0][1] * d[b][0][1];
            entries[a][b] = v;
            entries[b][a] = v;
        }
    }
    Ok(FisherMatrix::new(entries, InfoKind::Quantum, Provenance::Rank2))
}
