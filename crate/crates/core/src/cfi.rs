//! Classical Fisher information of concrete measurements.
//!
//! Two kinds of measurement are modelled: direct detection of photon
//! positions (continuous, via [`direct_imaging_cfi`]) and a finite set of
//! outcomes described by a [`Measurement`]: projections onto orthonormal
//! spatial modes, or position bins, optionally completed by a bucket
//! outcome that collects everything else.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::fisher::{FisherMatrix, InfoKind, Param, Provenance};
use crate::linalg::sym_eigen_desc;
use crate::math::sqrt;
use crate::psf::PsfModel;
use crate::qfi::{Sld, SubspaceRep};
use crate::quad::Quadrature;
use crate::scene::{intensity_profile, SourceParams};
use crate::spline::UniformGrid;

/// Outcomes with probability at or below this are dropped from Fisher sums.
pub const PRUNE_TOL: f64 = 1e-14;
/// Allowed deviation of the outcome probabilities from a unit sum.
pub const SUM_TOL: f64 = 1e-9;
/// Allowed deviation of sampled modes from orthonormality.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
enum Outcomes {
    /// Mode functions sampled on a shared grid; overlaps by the trapezoid rule.
    Modes { grid: UniformGrid, modes: Vec<Vec<f64>> },
    /// Position bins between consecutive edges.
    Bins { edges: Vec<f64> },
}

/// Finite outcome set: projections or bins, plus an optional bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    outcomes: Outcomes,
    labels: Vec<String>,
    has_bucket: bool,
}

/// Outcome probabilities and their parameter gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    pub probabilities: Vec<f64>,
    pub gradients: Vec<[f64; 3]>,
}

impl Measurement {
    /// Projections onto sampled modes, which must be orthonormal within `1e-8`.
    pub fn from_modes(grid: UniformGrid, modes: Vec<Vec<f64>>, labels: Vec<String>, has_bucket: bool) -> Result<Self> {
        if modes.iter().any(|m| m.len() != grid.len) {
            return Err(invalid("mode sample count does not match grid"));
        }
        if labels.len() != modes.len() {
            return Err(invalid("one label per mode is required"));
        }
        let mut defect = 0.0f64;
        for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate().skip(i) {
                let want = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((grid.dot(a, b) - want).abs());
            }
        }
        if defect > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(Self {
            outcomes: Outcomes::Modes { grid, modes },
            labels,
            has_bucket,
        })
    }

    /// Samples each mode function on `grid` and checks orthonormality.
    pub fn from_functions<F: Fn(f64) -> f64>(grid: UniformGrid, functions: &[F], has_bucket: bool) -> Result<Self> {
        let modes = functions.iter().map(|f| grid.points().map(f).collect()).collect();
        let labels = (0..functions.len()).map(|i| format!("mode{i}")).collect();
        Self::from_modes(grid, modes, labels, has_bucket)
    }

    /// Contiguous position bins of the given width covering `[lo, hi]`, plus
    /// a bucket for everything outside.
    pub fn position_bins(lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(hi > lo) || !(width > 0.0) {
            return Err(invalid("bins need hi > lo and a positive width"));
        }
        let n = libm::ceil((hi - lo) / width - 1e-9) as usize;
        let edges: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let labels = (0..n).map(|i| format!("bin{i}")).collect();
        Ok(Self {
            outcomes: Outcomes::Bins { edges },
            labels,
            has_bucket: true,
        })
    }

    /// The trivial measurement with a single (bucket) outcome.
    pub fn bucket_only() -> Self {
        Self {
            outcomes: Outcomes::Modes {
                grid: UniformGrid {
                    start: 0.0,
                    step: 1.0,
                    len: 2,
                },
                modes: Vec::new(),
            },
            labels: Vec::new(),
            has_bucket: true,
        }
    }

    pub fn has_bucket(&self) -> bool {
        self.has_bucket
    }

    /// Labels of the explicit outcomes (the bucket is not included).
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn set_labels(&mut self, labels: Vec<String>) -> Result<()> {
        if labels.len() != self.labels.len() {
            return Err(invalid("label count mismatch"));
        }
        self.labels = labels;
        Ok(())
    }

    /// Number of explicit outcomes (modes or bins).
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of outcomes including the bucket.
    pub fn outcome_count(&self) -> usize {
        self.len() + usize::from(self.has_bucket)
    }

    /// Sampling grid and mode samples, for mode measurements.
    pub fn modes(&self) -> Option<(&UniformGrid, &[Vec<f64>])> {
        match &self.outcomes {
            Outcomes::Modes { grid, modes } => Some((grid, modes)),
            Outcomes::Bins { .. } => None,
        }
    }

    pub fn bin_edges(&self) -> Option<&[f64]> {
        match &self.outcomes {
            Outcomes::Bins { edges } => Some(edges),
            Outcomes::Modes { .. } => None,
        }
    }

    /// Probabilities and gradients of every outcome (bucket last).
    pub fn outcome_model(&self, psf: &PsfModel, params: SourceParams) -> Result<OutcomeModel> {
        params.validate()?;
        let q = params.q;
        let mut probabilities = Vec::with_capacity(self.outcome_count());
        let mut gradients = Vec::with_capacity(self.outcome_count());
        match &self.outcomes {
            Outcomes::Modes { grid, modes } => {
                for ov in mode_overlaps(grid, modes, psf, &params) {
                    let (p, g) = projection_outcome(&ov, q);
                    probabilities.push(p);
                    gradients.push(g);
                }
            }
            Outcomes::Bins { edges } => {
                let prof = intensity_profile(psf, params)?;
                let (cp, cm) = (params.plus(), params.minus());
                for e in edges.windows(2) {
                    let (lo, hi) = (e[0], e[1]);
                    probabilities.push(prof.interval(lo, hi));
                    let ip = psf.intensity(hi - cp) - psf.intensity(lo - cp);
                    let im = psf.intensity(hi - cm) - psf.intensity(lo - cm);
                    gradients.push([
                        -q * ip - (1.0 - q) * im,
                        -0.5 * q * ip + 0.5 * (1.0 - q) * im,
                        psf.intensity_interval(lo - cp, hi - cp) - psf.intensity_interval(lo - cm, hi - cm),
                    ]);
                }
            }
        }
        let total: f64 = probabilities.iter().sum();
        if self.has_bucket {
            let rest = 1.0 - total;
            if rest < -SUM_TOL {
                return Err(Error::ProbabilitySum(total));
            }
            let mut g = [0.0; 3];
            for grad in &gradients {
                for k in 0..3 {
                    g[k] -= grad[k];
                }
            }
            probabilities.push(rest.max(0.0));
            gradients.push(g);
        } else if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::ProbabilitySum(total));
        }
        Ok(OutcomeModel {
            probabilities,
            gradients,
        })
    }

    /// Outcome probabilities only (bucket last).
    pub fn probabilities(&self, psf: &PsfModel, params: SourceParams) -> Result<Vec<f64>> {
        Ok(self.outcome_model(psf, params)?.probabilities)
    }
}

/// `[⟨φ|Ψ+⟩, ⟨φ|Ψ−⟩, ⟨φ|Ψ+'⟩, ⟨φ|Ψ−'⟩]` for every sampled mode `φ`.
pub fn mode_overlaps(grid: &UniformGrid, modes: &[Vec<f64>], psf: &PsfModel, params: &SourceParams) -> Vec<[f64; 4]> {
    let sample =
        |c: f64, order: usize| -> Vec<f64> { grid.points().map(|x| psf.amplitude_deriv(x - c, order)).collect() };
    let cols = [
        sample(params.plus(), 0),
        sample(params.minus(), 0),
        sample(params.plus(), 1),
        sample(params.minus(), 1),
    ];
    modes
        .iter()
        .map(|phi| core::array::from_fn(|k| grid.dot(phi, &cols[k])))
        .collect()
}

/// Probability and gradient of projecting onto a mode with overlaps `ov`
/// (as returned by [`mode_overlaps`]).
pub fn projection_outcome(ov: &[f64; 4], q: f64) -> (f64, [f64; 3]) {
    let [a, b, dpa, dpb] = *ov;
    // ∂/∂c ⟨φ|Ψ(·-c)⟩ = -⟨φ|Ψ'(·-c)⟩
    let (da, db) = (-dpa, -dpb);
    (
        q * a * a + (1.0 - q) * b * b,
        [
            2.0 * (q * a * da + (1.0 - q) * b * db),
            q * a * da - (1.0 - q) * b * db,
            a * a - b * b,
        ],
    )
}

/// CFI of projections with precomputed overlaps, plus an optional bucket.
pub fn projection_cfi(overlaps: &[[f64; 4]], has_bucket: bool, params: SourceParams) -> Result<FisherMatrix> {
    let mut rows = Vec::with_capacity(overlaps.len() + 1);
    let mut total = 0.0;
    let mut rest = [0.0; 3];
    for ov in overlaps {
        let (p, g) = projection_outcome(ov, params.q);
        total += p;
        for k in 0..3 {
            rest[k] -= g[k];
        }
        if p > PRUNE_TOL {
            let r = 1.0 / sqrt(p);
            rows.push([g[0] * r, g[1] * r, g[2] * r]);
        }
    }
    if has_bucket {
        let p = 1.0 - total;
        if p < -SUM_TOL {
            return Err(Error::ProbabilitySum(total));
        }
        if p > PRUNE_TOL {
            let r = 1.0 / sqrt(p);
            rows.push([rest[0] * r, rest[1] * r, rest[2] * r]);
        }
    } else if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::ProbabilitySum(total));
    }
    Ok(classical(&rows, params))
}

/// `F = Σ_k ∇P_k ∇P_kᵀ / P_k` over outcomes with `P_k > 1e-14`.
pub fn measurement_cfi(meas: &Measurement, psf: &PsfModel, params: SourceParams) -> Result<FisherMatrix> {
    let model = meas.outcome_model(psf, params)?;
    let rows: Vec<[f64; 3]> = model
        .probabilities
        .iter()
        .zip(&model.gradients)
        .filter(|(p, _)| **p > PRUNE_TOL)
        .map(|(p, g)| {
            let r = 1.0 / sqrt(*p);
            [g[0] * r, g[1] * r, g[2] * r]
        })
        .collect();
    Ok(classical(&rows, params))
}

fn classical(rows: &[[f64; 3]], params: SourceParams) -> FisherMatrix {
    let edge = params.q == 0.0 || params.q == 1.0;
    let f = FisherMatrix::from_score_rows(rows, InfoKind::Classical, Provenance::Quadrature);
    f.with_degenerate([false, params.s == 0.0 && edge, edge])
}

/// Adaptive quadrature used for direct imaging.
pub fn direct_imaging_quadrature() -> Quadrature {
    Quadrature {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 4000,
        initial_intervals: 16,
    }
}

/// Direct-imaging CFI `F_αβ = ∫ ∂_αρ ∂_βρ / ρ dx`.
///
/// The domain `±(|s0| + s/2 + 12 widths)` is refined adaptively on all six
/// distinct entries at once; the converged rule then supplies the weighted
/// score samples from which the matrix and its QR factor are assembled.
pub fn direct_imaging_cfi(psf: &PsfModel, params: SourceParams) -> Result<FisherMatrix> {
    let prof = intensity_profile(psf, params)?;
    let half = params.s0.abs() + 0.5 * params.s + 12.0 * psf.width();
    let integrand = |x: f64| -> [f64; 6] {
        let rho = prof.density(x);
        if rho <= 1e-300 {
            return [0.0; 6];
        }
        let g = prof.gradients(x);
        [
            g[0] * g[0] / rho,
            g[1] * g[1] / rho,
            g[2] * g[2] / rho,
            g[0] * g[1] / rho,
            g[0] * g[2] / rho,
            g[1] * g[2] / rho,
        ]
    };
    let rule = direct_imaging_quadrature().rule(integrand, -half, half)?;
    let rows: Vec<[f64; 3]> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .filter_map(|(&x, &w)| {
            let rho = prof.density(x);
            (rho > 1e-300).then(|| {
                let g = prof.gradients(x);
                let r = sqrt(w / rho);
                [g[0] * r, g[1] * r, g[2] * r]
            })
        })
        .collect();
    Ok(classical(&rows, params))
}

/// Grid used to sample SLD eigenmodes: 14 widths beyond both sources at
/// spacing 0.01 widths.
pub fn mode_grid(psf: &PsfModel, params: &SourceParams) -> Result<UniformGrid> {
    let w = psf.width();
    UniformGrid::covering(params.minus() - 14.0 * w, params.plus() + 14.0 * w, 0.01 * w)
}

/// Projective measurement onto the eigenvectors of an SLD, plus bucket.
///
/// Eigenvectors come sorted by descending eigenvalue with their sign fixed
/// so that the first non-negligible coefficient is positive.
pub fn sld_povm(sld: &Sld, sub: &SubspaceRep, psf: &PsfModel) -> Result<Measurement> {
    let grid = mode_grid(psf, &sub.params)?;
    let modes = sld
        .eigenvectors
        .iter()
        .map(|v| grid.points().map(|x| sub.function(psf, v, x)).collect())
        .collect();
    let sym = sld.param.symbol();
    let labels = (0..sld.eigenvectors.len()).map(|i| format!("L{sym}_{i}")).collect();
    Measurement::from_modes(grid, reorthonormalize(&grid, modes)?, labels, true)
}

/// Largest sampled orthonormality defect repaired by [`reorthonormalize`].
pub const REPAIR_TOL: f64 = 1e-3;

/// Symmetric (Löwdin) orthonormalization `M ← S^{-1/2} M` of sampled modes
/// whose Gram matrix `S` is within [`REPAIR_TOL`] of the identity: the
/// closest orthonormal set to the input.
fn reorthonormalize(grid: &UniformGrid, modes: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let k = modes.len();
    let gram = DMatrix::from_fn(k, k, |i, j| grid.dot(&modes[i], &modes[j]));
    let defect = (&gram - DMatrix::identity(k, k)).amax();
    if defect > REPAIR_TOL {
        return Err(Error::NotOrthonormal(defect));
    }
    let (vals, vecs) = sym_eigen_desc(gram);
    let inv_sqrt = &vecs
        * DMatrix::from_diagonal(&DVector::from_iterator(k, vals.iter().map(|v| 1.0 / sqrt(*v))))
        * vecs.transpose();
    Ok((0..k)
        .map(|i| {
            (0..modes[0].len())
                .map(|t| (0..k).map(|j| inv_sqrt[(i, j)] * modes[j][t]).sum())
                .collect()
        })
        .collect())
}

/// Convenience: the SLD-eigenvector measurement for parameter `which`.
pub fn sld_measurement(psf: &PsfModel, params: SourceParams, which: Param) -> Result<Measurement> {
    let ov = crate::psf::overlaps(psf, params.s)?;
    let mom = crate::psf::moments(psf)?;
    let sub = SubspaceRep::new(&ov, &mom, params)?;
    let dec = crate::qfi::rho_eigensystem(&ov, params.q)?;
    let sld = crate::qfi::sld_subspace(&sub, &dec, which)?;
    sld_povm(&sld, &sub, psf)
}

/// A measurement choice that can be evaluated at any parameter point.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementKind {
    /// Photon position detection.
    Direct,
    /// A fixed, parameter-independent outcome set.
    Fixed(Measurement),
    /// The first `n` orthonormalized PSF-derivative modes centered on `s0`,
    /// plus bucket (Hermite-Gauss sorting for a Gaussian PSF).
    ModeBasis(usize),
    /// Eigenbasis of the SLD of the given parameter at the true point.
    Sld(Param),
    /// Position bins of the given width over `s0 ± half_range`, plus bucket.
    Bins { width: f64, half_range: f64 },
}

impl MeasurementKind {
    pub fn cfi(&self, psf: &PsfModel, params: SourceParams) -> Result<FisherMatrix> {
        match self {
            MeasurementKind::Direct => direct_imaging_cfi(psf, params),
            other => measurement_cfi(&other.realize(psf, params)?, psf, params),
        }
    }

    /// The concrete finite measurement used at `params` (`None` for direct imaging).
    pub fn measurement(&self, psf: &PsfModel, params: SourceParams) -> Result<Option<Measurement>> {
        match self {
            MeasurementKind::Direct => Ok(None),
            other => other.realize(psf, params).map(Some),
        }
    }

    fn realize(&self, psf: &PsfModel, params: SourceParams) -> Result<Measurement> {
        match self {
            MeasurementKind::Direct => Err(invalid("direct imaging has no finite outcome set")),
            MeasurementKind::Fixed(m) => Ok(m.clone()),
            MeasurementKind::ModeBasis(n) => crate::measure_opt::mode_basis_at(psf, *n, params.s0),
            MeasurementKind::Sld(p) => sld_measurement(psf, params, *p),
            MeasurementKind::Bins { width, half_range } => {
                Measurement::position_bins(params.s0 - half_range, params.s0 + half_range, *width)
            }
        }
    }
}
