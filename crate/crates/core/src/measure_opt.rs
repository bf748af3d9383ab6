//! Mode bases built from the PSF and multistart optimization of
//! mode-projection measurements.
//!
//! The basis is Gram-Schmidt applied to `(-1)^k Ψ^(k)(x - c)`, k = 0..n-1,
//! which for a Gaussian PSF yields the Hermite-Gauss functions
//! `Ψ(x) He_k(x/σ) / sqrt(k!)`. A measurement design rotates the `n` basis
//! modes by an orthogonal matrix written as a product of `n(n-1)/2` Givens
//! rotations and keeps a bucket outcome for the complement.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::cfi::{mode_overlaps, projection_cfi, Measurement};
use crate::crlb::precisions;
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::fisher::FisherMatrix;
use crate::math::sqrt;
use crate::optim::NelderMead;
use crate::psf::{moments, overlaps, PsfModel};
use crate::qfi::qfim_closed_form;
use crate::rng;
use crate::scene::SourceParams;
use crate::spline::UniformGrid;

/// Gram determinant below which the basis is considered rank deficient.
pub const RANK_LOSS_TOL: f64 = 1e-20;

/// Sampling grid for basis modes: `center ± 16` widths at 0.01 widths.
fn basis_grid(psf: &PsfModel, center: f64) -> Result<UniformGrid> {
    let w = psf.width();
    let half = 16.0 * w;
    UniformGrid::covering(center - half, center + half, 0.01 * w)
}

/// `n` orthonormal modes centered at `center`, plus bucket.
pub fn mode_basis_at(psf: &PsfModel, n: usize, center: f64) -> Result<Measurement> {
    if n == 0 {
        return Err(invalid("mode basis needs at least one mode"));
    }
    if let Some(max) = psf.max_derivative_order() {
        if n > max + 1 {
            return Err(Error::RankLoss { achieved: max + 1 });
        }
    }
    let grid = basis_grid(psf, center)?;
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut det = 1.0;
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = grid
            .points()
            .map(|x| sign * psf.amplitude_deriv(x - center, k))
            .collect();
        let norm0 = sqrt(grid.dot(&v, &v));
        if !(norm0 > 0.0) {
            return Err(Error::RankLoss { achieved: k });
        }
        v.iter_mut().for_each(|x| *x /= norm0);
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for u in &modes {
                let c = grid.dot(u, &v);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let r2 = grid.dot(&v, &v);
        det *= r2;
        if det < RANK_LOSS_TOL {
            return Err(Error::RankLoss { achieved: k });
        }
        let r = sqrt(r2);
        v.iter_mut().for_each(|x| *x /= r);
        modes.push(v);
    }
    let labels = (0..n).map(|k| format!("HG{k}")).collect();
    Measurement::from_modes(grid, modes, labels, true)
}

/// [`mode_basis_at`] centered at the origin.
pub fn orthonormal_mode_basis(psf: &PsfModel, n: usize) -> Result<Measurement> {
    mode_basis_at(psf, n, 0.0)
}

/// Quantity a design maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Objective {
    /// Separation precision `H_s`.
    Hs,
    /// Brightness precision `H_q`.
    Hq,
    /// `min_α F_αα / Q_αα` over parameters with `Q_αα > 0`.
    MinDiagonalRatio,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Hs => "Hs",
            Objective::Hq => "Hq",
            Objective::MinDiagonalRatio => "min-diag-ratio",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Objective::Hs, Objective::Hq, Objective::MinDiagonalRatio]
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
    }

    pub fn evaluate(self, f: &FisherMatrix, q: &FisherMatrix) -> f64 {
        match self {
            Objective::Hs => precisions(f).h_s(),
            Objective::Hq => precisions(f).h_q(),
            Objective::MinDiagonalRatio => {
                let (fe, qe) = (f.entries(), q.entries());
                (0..3)
                    .filter(|&i| qe[i][i] > 0.0)
                    .map(|i| fe[i][i] / qe[i][i])
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Settings of [`optimize_measurement`].
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    /// Number of basis modes `n`.
    pub modes: usize,
    pub objective: Objective,
    pub restarts: usize,
    pub seed: u64,
    pub local: NelderMead,
    /// Givens angles for restart 0, possibly of a smaller design; missing
    /// angles are zero. Without it restart 0 starts from the unrotated basis.
    pub warm_start: Option<Vec<f64>>,
}

impl DesignSpec {
    pub fn new(modes: usize, objective: Objective, seed: u64) -> Self {
        Self {
            modes,
            objective,
            restarts: 16,
            seed,
            local: NelderMead {
                initial_step: 0.3,
                ..NelderMead::default()
            },
            warm_start: None,
        }
    }
}

/// Per-restart record.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RestartTrace {
    pub index: usize,
    pub start_objective: f64,
    pub best_objective: f64,
    /// Best objective after each local-search iteration.
    pub trace: Vec<f64>,
    pub evals: usize,
    pub converged: bool,
    pub angles: Vec<f64>,
}

/// Outcome of [`optimize_measurement`].
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub measurement: Measurement,
    pub fisher: FisherMatrix,
    pub quantum: FisherMatrix,
    pub objective: f64,
    /// The objective evaluated on the quantum Fisher matrix.
    pub quantum_objective: f64,
    pub best_restart: usize,
    pub restarts: Vec<RestartTrace>,
    /// No restart met its convergence tolerance; the result is best effort.
    pub all_unconverged: bool,
}

/// Orthogonal matrix `G(0,1) G(0,2) … G(n-2,n-1)` from Givens angles in
/// lexicographic pair order.
pub fn givens_rotation(n: usize, angles: &[f64]) -> Vec<Vec<f64>> {
    let mut u: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let t = angles.get(k).copied().unwrap_or(0.0);
            k += 1;
            if t == 0.0 {
                continue;
            }
            let (c, s) = (libm::cos(t), libm::sin(t));
            // u <- u · G(i, j, t)
            for row in u.iter_mut() {
                let (a, b) = (row[i], row[j]);
                row[i] = c * a + s * b;
                row[j] = -s * a + c * b;
            }
        }
    }
    u
}

fn embed_angles(from: &[f64], n_to: usize) -> Vec<f64> {
    // Find the dimension whose angle count matches `from`.
    let mut n_from = 1;
    while n_from * (n_from - 1) / 2 < from.len() {
        n_from += 1;
    }
    let mut out = Vec::with_capacity(n_to * (n_to - 1) / 2);
    let mut k = 0;
    for i in 0..n_to {
        for j in i + 1..n_to {
            if j < n_from {
                out.push(from.get(k).copied().unwrap_or(0.0));
                k += 1;
            } else {
                out.push(0.0);
            }
        }
    }
    out
}

/// Multistart search over rotations of the `n`-mode basis centered at `s0`.
///
/// Restart 0 starts from the warm start (or the unrotated basis); the
/// others draw angles uniformly in `[-π, π)` from stream `r` of the seed.
/// Every evaluation checks `F ⪯ Q` and aborts with
/// [`Error::BoundViolation`] otherwise. The best restart wins, ties going to
/// the lowest index.
pub fn optimize_measurement<E: Executor>(
    exec: &E,
    spec: &DesignSpec,
    psf: &PsfModel,
    params: SourceParams,
) -> Result<Design> {
    params.validate()?;
    if spec.restarts == 0 {
        return Err(invalid("at least one restart is required"));
    }
    let n = spec.modes;
    let basis = mode_basis_at(psf, n, params.s0)?;
    let (grid, base_modes) = basis.modes().expect("mode basis");
    let base_overlaps = mode_overlaps(grid, base_modes, psf, &params);
    let quantum = qfim_closed_form(&overlaps(psf, params.s)?, &moments(psf)?, params)?;
    let pairs = n * (n - 1) / 2;

    let fisher_at = |angles: &[f64]| -> Result<FisherMatrix> {
        let u = givens_rotation(n, angles);
        // Rotated mode k = Σ_j u[j][k] b_j, so its overlaps rotate the same way.
        let rotated: Vec<[f64; 4]> = (0..n)
            .map(|k| core::array::from_fn(|c| (0..n).map(|j| u[j][k] * base_overlaps[j][c]).sum()))
            .collect();
        let f = projection_cfi(&rotated, true, params)?;
        let gap = quantum.loewner_gap(&f);
        if gap < -1e-9 {
            return Err(Error::BoundViolation(gap));
        }
        Ok(f)
    };

    let runs = exec.map(spec.restarts, |r| -> Result<RestartTrace> {
        let start: Vec<f64> = if r == 0 {
            spec.warm_start
                .as_deref()
                .map_or_else(|| vec![0.0; pairs], |w| embed_angles(w, n))
        } else {
            let mut g = rng::stream(spec.seed, r as u64);
            (0..pairs).map(|_| g.random_range(-PI..PI)).collect()
        };
        let start_objective = spec.objective.evaluate(&fisher_at(&start)?, &quantum);
        let mut failure = None;
        let min = spec.local.minimize(
            |x| match fisher_at(x) {
                Ok(f) => -spec.objective.evaluate(&f, &quantum),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            &start,
            None,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(RestartTrace {
            index: r,
            start_objective,
            best_objective: -min.value,
            trace: min.trace.iter().map(|v| -v).collect(),
            evals: min.evals,
            converged: min.converged,
            angles: min.x,
        })
    });
    let restarts = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in restarts.iter().enumerate() {
        if r.best_objective > restarts[best].best_objective {
            best = i;
        }
    }
    let angles = &restarts[best].angles;
    let u = givens_rotation(n, angles);
    let modes: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut v = vec![0.0; grid.len];
            for (j, b) in base_modes.iter().enumerate() {
                let c = u[j][k];
                v.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
            }
            v
        })
        .collect();
    let labels = (0..n).map(|k| format!("opt{k}")).collect();
    let measurement = Measurement::from_modes(*grid, modes, labels, true)?;
    let fisher = fisher_at(angles)?;
    Ok(Design {
        objective: spec.objective.evaluate(&fisher, &quantum),
        quantum_objective: spec.objective.evaluate(&quantum, &quantum),
        measurement,
        fisher,
        quantum,
        best_restart: best,
        all_unconverged: restarts.iter().all(|r| !r.converged),
        restarts,
    })
}
