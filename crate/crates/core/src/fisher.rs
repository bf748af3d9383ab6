//! The 3×3 Fisher information matrix shared by the quantum and classical paths.

use core::fmt;

use nalgebra::DMatrix;

use crate::linalg::{gram_factor, sym3_eigenvalues, Mat3};

/// Estimated parameter; also the row/column index into a [`FisherMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Param {
    Centroid = 0,
    Separation = 1,
    Brightness = 2,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::Centroid, Param::Separation, Param::Brightness];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short name used in column headers: `s0`, `s`, `q`.
    pub fn symbol(self) -> &'static str {
        match self {
            Param::Centroid => "s0",
            Param::Separation => "s",
            Param::Brightness => "q",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.symbol() == s)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum InfoKind {
    Quantum,
    Classical,
}

/// How a matrix was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Provenance {
    ClosedForm,
    Rank2,
    GridOracle,
    Quadrature,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::Rank2 => "rank2",
            Provenance::GridOracle => "grid-oracle",
            Provenance::Quadrature => "quadrature",
        }
    }
}

/// Symmetric positive-semidefinite information matrix in `(s0, s, q)` order.
///
/// Matrices assembled from sampled score functions also carry an upper
/// triangular factor `R` with `RᵀR = F`, obtained by QR of the weighted
/// samples. Precisions computed from the factor avoid the cancellation
/// that inverting `F` itself suffers when scores are nearly collinear.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FisherMatrix {
    entries: Mat3,
    kind: InfoKind,
    provenance: Provenance,
    degenerate: [bool; 3],
    #[cfg_attr(feature = "serde", serde(skip))]
    factor: Option<Mat3>,
}

impl FisherMatrix {
    pub fn new(entries: Mat3, kind: InfoKind, provenance: Provenance) -> Self {
        let mut sym = entries;
        for i in 0..3 {
            for j in 0..i {
                let v = 0.5 * (entries[i][j] + entries[j][i]);
                sym[i][j] = v;
                sym[j][i] = v;
            }
        }
        Self {
            entries: sym,
            kind,
            provenance,
            degenerate: [false; 3],
            factor: None,
        }
    }

    /// `F = Σ_k g_k g_kᵀ` from weighted score rows `g_k`, keeping a QR factor.
    pub fn from_score_rows(rows: &[[f64; 3]], kind: InfoKind, provenance: Provenance) -> Self {
        let mut entries = [[0.0; 3]; 3];
        for g in rows {
            for i in 0..3 {
                for j in 0..3 {
                    entries[i][j] += g[i] * g[j];
                }
            }
        }
        let a = DMatrix::from_fn(rows.len(), 3, |r, c| rows[r][c]);
        let r = gram_factor(a);
        let factor = core::array::from_fn(|i| core::array::from_fn(|j| r[(i, j)]));
        Self {
            factor: Some(factor),
            ..Self::new(entries, kind, provenance)
        }
    }

    pub fn zero(kind: InfoKind, provenance: Provenance) -> Self {
        Self::new([[0.0; 3]; 3], kind, provenance)
    }

    /// Marks parameters whose rows are degenerate (zeroed or undefined).
    pub fn with_degenerate(mut self, flags: [bool; 3]) -> Self {
        self.degenerate = flags;
        self
    }

    pub fn entries(&self) -> &Mat3 {
        &self.entries
    }

    pub fn get(&self, a: Param, b: Param) -> f64 {
        self.entries[a.index()][b.index()]
    }

    pub fn kind(&self) -> InfoKind {
        self.kind
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn degenerate(&self) -> [bool; 3] {
        self.degenerate
    }

    pub fn factor(&self) -> Option<&Mat3> {
        self.factor.as_ref()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        sym3_eigenvalues(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_abs_diff(&self, other: &FisherMatrix) -> f64 {
        let mut m = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((self.entries[i][j] - other.entries[i][j]).abs());
            }
        }
        m
    }

    /// Smallest eigenvalue of `self - lower`; non-negative when `lower ⪯ self`.
    pub fn loewner_gap(&self, lower: &FisherMatrix) -> f64 {
        let mut d = self.entries;
        for i in 0..3 {
            for j in 0..3 {
                d[i][j] -= lower.entries[i][j];
            }
        }
        sym3_eigenvalues(&d)[0]
    }

    /// Information carried by `n` independent detection events.
    pub fn scaled(&self, n: f64) -> Self {
        let mut out = self.clone();
        for row in out.entries.iter_mut() {
            for v in row.iter_mut() {
                *v *= n;
            }
        }
        if let Some(r) = out.factor.as_mut() {
            let s = libm::sqrt(n);
            for row in r.iter_mut() {
                for v in row.iter_mut() {
                    *v *= s;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_rows_give_consistent_factor() {
        let rows = [[1.0, 0.5, 0.0], [0.2, 1.0, 0.3], [0.0, 0.1, 2.0], [0.4, 0.4, 0.4]];
        let f = FisherMatrix::from_score_rows(&rows, InfoKind::Classical, Provenance::Quadrature);
        let r = f.factor().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let rtr: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                assert!((rtr - f.entries()[i][j]).abs() < 1e-12);
            }
        }
        assert!(f.min_eigenvalue() > 0.0);
    }

    #[test]
    fn new_symmetrizes() {
        let f = FisherMatrix::new(
            [[1.0, 2.0, 0.0], [2.2, 1.0, 0.0], [0.0, 0.0, 1.0]],
            InfoKind::Quantum,
            Provenance::ClosedForm,
        );
        assert_eq!(
            f.get(Param::Centroid, Param::Separation),
            f.get(Param::Separation, Param::Centroid)
        );
    }

    #[test]
    fn param_symbols_round_trip() {
        for p in Param::ALL {
            assert_eq!(Param::from_symbol(p.symbol()), Some(p));
        }
    }
}
