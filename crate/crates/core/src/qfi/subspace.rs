//! Finite-dimensional coordinates for `ρ` and its parameter derivatives.
//!
//! An operator `A = Σ_ij C_ij |b_i⟩⟨b_j|` on the span of real functions
//! `b_i` is stored through its coefficient matrix `C`. With Gram matrix
//! `G_ij = ⟨b_i|b_j⟩`, matrix elements are `⟨u|A|v⟩ = uᵀ G C G v` and
//! products compose as `C_{AB} = C_A G C_B`.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::psf::{OverlapSet, PsfModel, PsfMoments};
use crate::scene::SourceParams;

type M4 = [[f64; 4]; 4];

/// Operators in the ordered basis `{Ψ+, Ψ−, Ψ+', Ψ−'}`, where `Ψ±' = dΨ±/dx`
/// (so that `P Ψ± = -i Ψ±'`).
///
/// The Gram matrix has the closed pattern
///
/// ```text
/// [[1,  w,  0, -m],
///  [w,  1,  m,  0],
///  [0,  m, p2, tau],
///  [-m, 0, tau, p2]]
/// ```
///
/// `∂_s0 ρ` and `∂_s ρ` follow from `∂_s0 Ψ± = -Ψ±'` and
/// `∂_s Ψ± = ∓Ψ±'/2`; `∂_q ρ = |Ψ+⟩⟨Ψ+| - |Ψ−⟩⟨Ψ−|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceRep {
    pub gram: M4,
    pub rho: M4,
    /// Coefficients of `∂_s0 ρ`, `∂_s ρ`, `∂_q ρ`.
    pub derivs: [M4; 3],
    pub params: SourceParams,
}

fn mul(a: &M4, b: &M4) -> M4 {
    core::array::from_fn(|i| core::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

fn mat_vec(a: &M4, v: &[f64; 4]) -> [f64; 4] {
    core::array::from_fn(|i| (0..4).map(|k| a[i][k] * v[k]).sum())
}

fn dot(u: &[f64; 4], v: &[f64; 4]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

impl SubspaceRep {
    pub fn new(ov: &OverlapSet, mom: &PsfMoments, params: SourceParams) -> Result<Self> {
        params.validate()?;
        let (w, m, tau, p2) = (ov.w, ov.m, ov.tau, mom.p2);
        let gram = [
            [1.0, w, 0.0, -m],
            [w, 1.0, m, 0.0],
            [0.0, m, p2, tau],
            [-m, 0.0, tau, p2],
        ];
        let q = params.q;
        let mut rho = [[0.0; 4]; 4];
        rho[0][0] = q;
        rho[1][1] = 1.0 - q;
        let mut d_s0 = [[0.0; 4]; 4];
        d_s0[2][0] = -q;
        d_s0[0][2] = -q;
        d_s0[3][1] = -(1.0 - q);
        d_s0[1][3] = -(1.0 - q);
        let mut d_s = [[0.0; 4]; 4];
        d_s[2][0] = -0.5 * q;
        d_s[0][2] = -0.5 * q;
        d_s[3][1] = 0.5 * (1.0 - q);
        d_s[1][3] = 0.5 * (1.0 - q);
        let mut d_q = [[0.0; 4]; 4];
        d_q[0][0] = 1.0;
        d_q[1][1] = -1.0;
        Ok(Self {
            gram,
            rho,
            derivs: [d_s0, d_s, d_q],
            params,
        })
    }

    /// Embeds `a Ψ+ + b Ψ−` as a 4-coefficient vector.
    pub fn lift(&self, ab: [f64; 2]) -> [f64; 4] {
        [ab[0], ab[1], 0.0, 0.0]
    }

    /// `⟨u|∂_α ρ|v⟩`.
    pub fn element(&self, u: &[f64; 4], alpha: usize, v: &[f64; 4]) -> f64 {
        let gv = mat_vec(&self.gram, v);
        let cgv = mat_vec(&self.derivs[alpha], &gv);
        dot(&mat_vec(&self.gram, u), &cgv)
    }

    /// `⟨u|∂_α ρ ∂_β ρ|u⟩`.
    pub fn product_element(&self, u: &[f64; 4], alpha: usize, beta: usize) -> f64 {
        let c = mul(&mul(&self.derivs[alpha], &self.gram), &self.derivs[beta]);
        let gu = mat_vec(&self.gram, u);
        dot(&gu, &mat_vec(&c, &gu))
    }

    /// Value of basis function `i` at `x`.
    pub fn basis_function(&self, psf: &PsfModel, i: usize, x: f64) -> f64 {
        let p = &self.params;
        match i {
            0 => psf.amplitude(x - p.plus()),
            1 => psf.amplitude(x - p.minus()),
            2 => psf.amplitude_deriv(x - p.plus(), 1),
            _ => psf.amplitude_deriv(x - p.minus(), 1),
        }
    }

    /// Value at `x` of the function with coefficients `c`.
    pub fn function(&self, psf: &PsfModel, c: &[f64], x: f64) -> f64 {
        c.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| v * self.basis_function(psf, i, x))
            .sum()
    }

    pub fn span(&self) -> SpanOperators {
        let m = |a: &M4| DMatrix::from_fn(4, 4, |i, j| a[i][j]);
        SpanOperators {
            gram: m(&self.gram),
            rho: m(&self.rho),
            derivs: [m(&self.derivs[0]), m(&self.derivs[1]), m(&self.derivs[2])],
        }
    }
}

/// `ρ` and `∂_α ρ` as coefficient matrices over an arbitrary finite span.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanOperators {
    pub gram: DMatrix<f64>,
    pub rho: DMatrix<f64>,
    pub derivs: [DMatrix<f64>; 3],
}
