//! Photon-level simulation and maximum-likelihood estimation.
//!
//! A saturation study repeats sample → estimate over independent trials and
//! compares the empirical variances with the Cramér-Rao bound `(F⁻¹)_αα / n`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use nalgebra::DMatrix;

use crate::cfi::{direct_imaging_cfi, measurement_cfi, Measurement, MeasurementKind};
use crate::crlb::{precisions, PrecisionTriple};
use crate::error::{invalid, Result};
use crate::exec::Executor;
use crate::fisher::FisherMatrix;
use crate::linalg::sym_eigen_desc;
use crate::math::{exp, fabs, log, log1p, sqrt, SQRT_2PI};
use crate::optim::NelderMead;
use crate::psf::{moments, overlaps, PsfKind, PsfModel};
use crate::qfi::qfim_closed_form;
use crate::rng;
use crate::scene::{intensity_profile, sample_photons, SourceParams};

/// Distance from a box face below which an estimate is flagged as on it.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Initial simplex size, in standard deviations, of the exact polish.
const POLISH_STEP: f64 = 0.05;

/// Smallest photon count accepted by [`crlb_saturation_study`].
pub const MIN_PHOTONS: usize = 10_000;
/// Smallest trial count accepted by [`crlb_saturation_study`].
pub const MIN_TRIALS: usize = 100;

/// Search box for `(s0, s, q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimationBox {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl Default for EstimationBox {
    fn default() -> Self {
        Self {
            lower: [-10.0, 0.0, 0.0],
            upper: [10.0, 10.0, 1.0],
        }
    }
}

impl EstimationBox {
    pub fn contains(&self, p: SourceParams) -> bool {
        let v = p.to_array();
        (0..3).all(|i| v[i] >= self.lower[i] && v[i] <= self.upper[i])
    }

    pub fn clamp(&self, p: SourceParams) -> SourceParams {
        let v = p.to_array();
        SourceParams::from_array(core::array::from_fn(|i| v[i].clamp(self.lower[i], self.upper[i])))
    }
}

/// Observed data.
#[derive(Debug, Clone, Copy)]
pub enum Observations<'a> {
    /// Photon positions from direct imaging.
    Positions(&'a [f64]),
    /// Outcome counts of a finite measurement, in its outcome order.
    Counts {
        counts: &'a [u64],
        measurement: &'a Measurement,
    },
}

/// Settings of [`mle`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleOptions {
    pub bounds: EstimationBox,
    /// Parameters to estimate; the others stay at their initial values.
    pub free: [bool; 3],
    /// Jittered restarts in addition to the start from `init`.
    pub restarts: usize,
    /// Standard deviation of the restart jitter, in search coordinates.
    pub jitter: f64,
    pub seed: u64,
    pub local: NelderMead,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            bounds: EstimationBox::default(),
            free: [true; 3],
            restarts: 4,
            jitter: 2.0,
            seed: 0,
            local: NelderMead {
                f_tol: 1e-5,
                x_tol: 1e-3,
                max_evals: 3000,
                initial_step: 1.0,
            },
        }
    }
}

/// Result of [`mle`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub params: SourceParams,
    pub log_likelihood: f64,
    pub at_lower: [bool; 3],
    pub at_upper: [bool; 3],
    /// The search found a strictly better point than `init`.
    pub improved: bool,
    /// At least one local search met its tolerance.
    pub converged: bool,
    pub evals: usize,
}

impl Estimate {
    pub fn on_boundary(&self) -> bool {
        self.at_lower.iter().chain(&self.at_upper).any(|&b| b)
    }

    /// The estimate describes a single source: `s = 0` or `q ∈ {0, 1}`.
    pub fn single_source(&self) -> bool {
        self.at_lower[1] || self.at_lower[2] || self.at_upper[2]
    }
}

enum LogLik<'a> {
    Gaussian {
        x: &'a [f64],
        sum: f64,
        sum_sq: f64,
        width: f64,
        binned: Option<Binned>,
    },
    Positions {
        x: &'a [f64],
        psf: &'a PsfModel,
    },
    Counts {
        counts: &'a [u64],
        measurement: &'a Measurement,
        psf: &'a PsfModel,
    },
}

impl LogLik<'_> {
    fn eval(&self, p: SourceParams) -> f64 {
        match self {
            LogLik::Gaussian {
                x, sum, sum_sq, width, ..
            } => gaussian_loglik(x, *sum, *sum_sq, *width, p),
            LogLik::Positions { x, psf } => {
                let (a, b) = (p.plus(), p.minus());
                x.iter()
                    .map(|&xi| {
                        let d = p.q * psf.intensity(xi - a) + (1.0 - p.q) * psf.intensity(xi - b);
                        if d > 0.0 {
                            log(d)
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .sum()
            }
            LogLik::Counts {
                counts,
                measurement,
                psf,
            } => match measurement.probabilities(psf, p) {
                Ok(probs) => multinomial_loglik(counts, &probs),
                Err(_) => f64::NEG_INFINITY,
            },
        }
    }

    /// Fast approximation used to locate the maximum; `None` when the exact
    /// evaluation is the only one available.
    fn surrogate(&self, p: SourceParams) -> Option<f64> {
        match self {
            LogLik::Gaussian {
                x,
                sum,
                sum_sq,
                width,
                binned: Some(b),
            } => Some(b.loglik(x.len() as f64, *sum, *sum_sq, *width, p)),
            _ => None,
        }
    }
}

/// Photons grouped in narrow bins with the first four central-offset
/// moments per bin. The mixing term `log(q e^t + (1-q) e^-t)`, with `t`
/// linear in `x`, is expanded to fourth order around each bin center; bins
/// are narrow enough that `|t - t_c| <= 0.01` for every separation in the
/// box, which bounds the fifth-order remainder by `2e-11` per photon.
struct Binned {
    centers: Vec<f64>,
    moments: Vec<[f64; 5]>,
}

impl Binned {
    const MAX_BINS: usize = 1 << 16;

    fn new(x: &[f64], width: f64, max_s: f64) -> Option<Self> {
        let kappa = 0.5 * max_s / (width * width);
        let step = if kappa > 0.0 { 0.02 / kappa } else { width };
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bins = ((hi - lo) / step) as usize + 1;
        if !(hi >= lo) || bins > Self::MAX_BINS {
            return None;
        }
        let mut moments = vec![[0.0; 5]; bins];
        let center = |i: usize| lo + (i as f64 + 0.5) * step;
        for &xi in x {
            let i = (((xi - lo) / step) as usize).min(bins - 1);
            let u = xi - center(i);
            let m = &mut moments[i];
            m[0] += 1.0;
            m[1] += u;
            m[2] += u * u;
            m[3] += u * u * u;
            m[4] += u * u * u * u;
        }
        let keep: Vec<usize> = (0..bins).filter(|&i| moments[i][0] > 0.0).collect();
        Some(Self {
            centers: keep.iter().map(|&i| center(i)).collect(),
            moments: keep.iter().map(|&i| moments[i]).collect(),
        })
    }

    fn loglik(&self, n: f64, sum: f64, sum_sq: f64, width: f64, p: SourceParams) -> f64 {
        let inv = 1.0 / width;
        let d = 0.5 * p.s * inv;
        let kappa = d * inv;
        let quad = (sum_sq - 2.0 * p.s0 * sum + n * p.s0 * p.s0) * inv * inv;
        let base = -n * log(width * SQRT_2PI) - 0.5 * quad - 0.5 * n * d * d;
        let (k2, k3, k4) = (kappa * kappa, kappa * kappa * kappa, kappa * kappa * kappa * kappa);
        let mut acc = 0.0;
        if p.q <= 0.0 || p.q >= 1.0 {
            // Single component: the mixing term is linear in t.
            let sign = if p.q >= 1.0 { 1.0 } else { -1.0 };
            for (c, m) in self.centers.iter().zip(&self.moments) {
                acc += sign * kappa * (m[0] * (c - p.s0) + m[1]);
            }
            return base + acc;
        }
        // log(q e^t + r e^-t) = log(2 sqrt(q r)) + log cosh(t + a).
        let r = 1.0 - p.q;
        let a = 0.5 * (log(p.q) - log(r));
        let offset = core::f64::consts::LN_2 + 0.5 * (log(p.q) + log(r));
        for (c, m) in self.centers.iter().zip(&self.moments) {
            let z = kappa * (c - p.s0) + a;
            let az = fabs(z);
            let e = exp(-2.0 * az);
            let lc = az + log1p(e) - core::f64::consts::LN_2;
            let th = if z >= 0.0 {
                (1.0 - e) / (1.0 + e)
            } else {
                -(1.0 - e) / (1.0 + e)
            };
            let g2 = 1.0 - th * th;
            let g3 = -2.0 * th * g2;
            let g4 = -2.0 * g2 * (1.0 - 3.0 * th * th);
            acc += m[0] * (offset + lc)
                + th * kappa * m[1]
                + g2 * k2 * m[2] / 2.0
                + g3 * k3 * m[3] / 6.0
                + g4 * k4 * m[4] / 24.0;
        }
        base + acc
    }
}

/// `Σ log[q φ(x - s0 - s/2) + (1-q) φ(x - s0 + s/2)]` for a normal `φ` of
/// standard deviation `width`, evaluated in log space.
fn gaussian_loglik(x: &[f64], sum: f64, sum_sq: f64, width: f64, p: SourceParams) -> f64 {
    let n = x.len() as f64;
    let inv = 1.0 / width;
    let d = 0.5 * p.s * inv;
    let quad = (sum_sq - 2.0 * p.s0 * sum + n * p.s0 * p.s0) * inv * inv;
    let base = -n * log(width * SQRT_2PI) - 0.5 * quad - 0.5 * n * d * d;
    let (lq, lr) = (log(p.q), log(1.0 - p.q));
    let mut acc = 0.0;
    for &xi in x.iter() {
        let t = (xi - p.s0) * inv * d;
        let (a, b) = (lq + t, lr - t);
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        acc += hi + log1p(exp(lo - hi));
    }
    base + acc
}

fn multinomial_loglik(counts: &[u64], probs: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        if c == 0 {
            continue;
        }
        if !(p > 0.0) {
            return f64::NEG_INFINITY;
        }
        ll += c as f64 * log(p);
    }
    ll
}

/// Maximum-likelihood estimate of the source parameters.
///
/// Runs a Nelder-Mead search from `init` and from `opts.restarts` jittered
/// copies of it, keeping the best local maximum (earliest on ties). The
/// search works in coordinates whitened by the Fisher information at
/// `init`, and every trial point is clamped into the box.
pub fn mle(data: Observations<'_>, psf: &PsfModel, init: SourceParams, opts: &MleOptions) -> Result<Estimate> {
    let ll = match data {
        Observations::Positions(x) => {
            if x.is_empty() {
                return Err(invalid("no photons"));
            }
            if psf.kind() == PsfKind::AnalyticGaussian {
                LogLik::Gaussian {
                    x,
                    sum: x.iter().sum(),
                    sum_sq: x.iter().map(|v| v * v).sum(),
                    width: psf.width(),
                    binned: Binned::new(x, psf.width(), opts.bounds.upper[1]),
                }
            } else {
                LogLik::Positions { x, psf }
            }
        }
        Observations::Counts { counts, measurement } => {
            if counts.len() != measurement.outcome_count() {
                return Err(invalid("count vector does not match the measurement outcomes"));
            }
            if counts.iter().all(|&c| c == 0) {
                return Err(invalid("no counts"));
            }
            LogLik::Counts {
                counts,
                measurement,
                psf,
            }
        }
    };
    let b = &opts.bounds;
    if !b.contains(init) {
        return Err(invalid("initial point lies outside the estimation box"));
    }
    let free: Vec<usize> = (0..3).filter(|&i| opts.free[i]).collect();
    let base = init.to_array();
    let scale = search_scale(data, psf, init, &free);
    // theta = init + T y, clamped into the box.
    let full = |y: &[f64]| -> SourceParams {
        let mut v = base;
        for (k, &i) in free.iter().enumerate() {
            v[i] += (0..free.len()).map(|j| scale[(k, j)] * y[j]).sum::<f64>();
            v[i] = v[i].clamp(b.lower[i], b.upper[i]);
        }
        SourceParams::from_array(v)
    };
    let init_ll = ll.eval(init);
    let mut best = (init, init_ll);
    let mut evals = 1;
    let mut converged = false;
    if !free.is_empty() {
        // Restarts run on the surrogate when there is one; the winner is then
        // polished on the exact likelihood.
        let value = |y: &[f64]| -> f64 {
            let p = full(y);
            -ll.surrogate(p).unwrap_or_else(|| ll.eval(p))
        };
        let mut g = rng::stream(opts.seed, 0);
        let mut best_y: Option<(Vec<f64>, f64)> = None;
        for r in 0..=opts.restarts {
            let start: Vec<f64> = if r == 0 {
                vec![0.0; free.len()]
            } else {
                (0..free.len())
                    .map(|_| opts.jitter * g.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect()
            };
            let m = opts.local.minimize(value, &start, None);
            evals += m.evals;
            converged |= m.converged;
            if best_y.as_ref().map_or(true, |(_, v)| m.value < *v) {
                best_y = Some((m.x, m.value));
            }
        }
        let (mut y, mut v) = best_y.expect("at least one restart");
        if ll.surrogate(init).is_some() {
            let polish = NelderMead {
                initial_step: POLISH_STEP,
                ..opts.local
            };
            let m = polish.minimize(|y| -ll.eval(full(y)), &y, None);
            evals += m.evals;
            y = m.x;
            v = m.value;
        }
        if -v > best.1 {
            best = (full(&y), -v);
        }
    }
    let (params, log_likelihood) = best;
    let v = params.to_array();
    Ok(Estimate {
        params,
        log_likelihood,
        at_lower: core::array::from_fn(|i| fabs(v[i] - b.lower[i]) <= BOUNDARY_TOL),
        at_upper: core::array::from_fn(|i| fabs(v[i] - b.upper[i]) <= BOUNDARY_TOL),
        improved: log_likelihood > init_ll,
        converged: converged || free.is_empty(),
        evals,
    })
}

/// Search coordinates: the inverse square root of the total Fisher
/// information at `init` (one unit = one standard deviation), or steps of
/// 0.05 per parameter when that matrix is singular.
fn search_scale(data: Observations<'_>, psf: &PsfModel, init: SourceParams, free: &[usize]) -> DMatrix<f64> {
    let k = free.len();
    let fallback = DMatrix::from_diagonal_element(k, k, 0.05);
    let (fisher, n) = match data {
        Observations::Positions(x) => (direct_imaging_cfi(psf, init), x.len() as f64),
        Observations::Counts { counts, measurement } => (
            measurement_cfi(measurement, psf, init),
            counts.iter().sum::<u64>() as f64,
        ),
    };
    let Ok(f) = fisher else {
        return fallback;
    };
    let e = f.entries();
    let sub = DMatrix::from_fn(k, k, |i, j| n * e[free[i]][free[j]]);
    let (vals, vecs) = sym_eigen_desc(sub);
    if k == 0 || !(vals[k - 1] > 1e-10 * vals[0]) || !vals[0].is_finite() {
        return fallback;
    }
    DMatrix::from_fn(k, k, |i, j| vecs[(i, j)] / sqrt(vals[j]))
}

/// Method-of-moments starting point from photon positions.
///
/// Matches the sample mean, variance and third central moment to
/// `s0 + (q-½)s`, `σ_I² + q(1-q)s²` and `κ_I + q(1-q)(1-2q)s³`, where
/// `σ_I²` and `κ_I` are the variance and third central moment of the PSF
/// intensity. The result is clamped into `bounds`.
pub fn moment_estimate(x: &[f64], psf: &PsfModel, bounds: &EstimationBox) -> Result<SourceParams> {
    if x.len() < 3 {
        return Err(invalid("moment estimate needs at least three photons"));
    }
    let n = x.len() as f64;
    let (psf_mean, psf_var, psf_third) = psf.intensity_stats();
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &v in x {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    let a = m2 - psf_var;
    let c = m3 - psf_third;
    let mean = mean - psf_mean;
    let params = if a > 0.0 {
        let g = c / (a * sqrt(a));
        let q = (0.5 - 0.5 * g / sqrt(4.0 + g * g)).clamp(0.01, 0.99);
        let s = sqrt(a / (q * (1.0 - q)));
        SourceParams::from_array([mean - (q - 0.5) * s, s, q])
    } else {
        // No excess spread: a single (or unresolved) source at the mean.
        SourceParams::from_array([mean, 0.0, 0.5])
    };
    Ok(bounds.clamp(params))
}

/// Draws outcome counts of `n` photons from `probs` (summing to one).
pub fn sample_counts(probs: &[f64], n: u64, seed: u64) -> Result<Vec<u64>> {
    let mut g = rng::stream(seed, 0);
    let mut left = n;
    let mut mass = 1.0;
    let mut out = vec![0; probs.len()];
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            out[k] = left;
            break;
        }
        let r = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, r)
            .map_err(|_| invalid("invalid outcome probability"))?
            .sample(&mut g);
        out[k] = c;
        left -= c;
        mass -= p;
    }
    Ok(out)
}

/// Settings of [`crlb_saturation_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub photons: usize,
    pub trials: usize,
    pub seed: u64,
    pub measurement: MeasurementKind,
    pub mle: MleOptions,
}

impl StudySpec {
    pub fn new(measurement: MeasurementKind, photons: usize, trials: usize, seed: u64) -> Self {
        Self {
            photons,
            trials,
            seed,
            measurement,
            mle: MleOptions::default(),
        }
    }
}

/// Outcome of a saturation study.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationRun {
    pub seed: u64,
    pub photons: usize,
    pub measurement: MeasurementKind,
    pub truth: SourceParams,
    pub free: [bool; 3],
    pub estimates: Vec<Estimate>,
    pub mean: [f64; 3],
    /// Unbiased sample covariance of the estimates.
    pub covariance: [[f64; 3]; 3],
    /// Per-photon classical Fisher matrix of the measurement at the truth.
    pub fisher: FisherMatrix,
    /// Per-photon precisions for the free parameters (fixed ones flagged degenerate).
    pub crlb: PrecisionTriple,
    pub quantum: PrecisionTriple,
    /// `Var(θ̂_α)·n·H_α`; `None` for fixed or unidentifiable parameters.
    pub ratios: [Option<f64>; 3],
    /// The same ratio against the quantum precision.
    pub quantum_ratios: [Option<f64>; 3],
    pub boundary_hits: usize,
}

impl EstimationRun {
    pub fn trials(&self) -> usize {
        self.estimates.len()
    }
}

/// Repeats sample → MLE for `spec.trials` independent trials.
///
/// Trial `t` draws with seed `derive_seed(seed, t)`, so estimates do not
/// depend on how `exec` schedules the trials. Direct imaging starts from the
/// method-of-moments estimate; finite measurements start from the truth.
pub fn crlb_saturation_study<E: Executor>(
    exec: &E,
    psf: &PsfModel,
    truth: SourceParams,
    spec: &StudySpec,
) -> Result<EstimationRun> {
    truth.validate()?;
    if spec.photons < MIN_PHOTONS {
        return Err(invalid("saturation study needs at least 10^4 photons per trial"));
    }
    if spec.trials < MIN_TRIALS {
        return Err(invalid("saturation study needs at least 100 trials"));
    }
    if !spec.mle.bounds.contains(truth) {
        return Err(invalid("true parameters lie outside the estimation box"));
    }
    let free = spec.mle.free;
    let fixed: [bool; 3] = core::array::from_fn(|i| !free[i]);
    let fisher = spec.measurement.cfi(psf, truth)?;
    let crlb = precisions(&fisher.clone().with_degenerate(fixed));
    let quantum_matrix = qfim_closed_form(&overlaps(psf, truth.s)?, &moments(psf)?, truth)?;
    let quantum = precisions(&quantum_matrix.with_degenerate(fixed));
    let measurement = spec.measurement.measurement(psf, truth)?;
    let probs = match &measurement {
        Some(m) => Some(m.probabilities(psf, truth)?),
        None => None,
    };
    let profile = intensity_profile(psf, truth)?;

    let results = exec.map(spec.trials, |t| -> Result<Estimate> {
        let seed = rng::derive_seed(spec.seed, t as u64);
        let opts = MleOptions {
            seed: rng::derive_seed(seed, 1),
            ..spec.mle.clone()
        };
        match (&measurement, &probs) {
            (Some(m), Some(p)) => {
                let counts = sample_counts(p, spec.photons as u64, seed)?;
                let data = Observations::Counts {
                    counts: &counts,
                    measurement: m,
                };
                mle(data, psf, truth, &opts)
            }
            _ => {
                let x = sample_photons(&profile, spec.photons, seed)?;
                let mut init = moment_estimate(&x, psf, &opts.bounds)?;
                let mut v = init.to_array();
                let tv = truth.to_array();
                for i in 0..3 {
                    if !free[i] {
                        v[i] = tv[i];
                    }
                }
                init = SourceParams::from_array(v);
                mle(Observations::Positions(&x), psf, init, &opts)
            }
        }
    });
    let estimates = results.into_iter().collect::<Result<Vec<_>>>()?;
    let k = estimates.len() as f64;
    let mut mean = [0.0; 3];
    for e in &estimates {
        let v = e.params.to_array();
        for i in 0..3 {
            mean[i] += v[i] / k;
        }
    }
    let mut covariance = [[0.0; 3]; 3];
    for e in &estimates {
        let v = e.params.to_array();
        for i in 0..3 {
            for j in 0..3 {
                covariance[i][j] += (v[i] - mean[i]) * (v[j] - mean[j]) / (k - 1.0);
            }
        }
    }
    let n = spec.photons as f64;
    let ratio = |h: &PrecisionTriple, i: usize| -> Option<f64> {
        (free[i] && !h.degenerate[i] && h.h[i] > 0.0).then(|| covariance[i][i] * n * h.h[i])
    };
    let ratios = core::array::from_fn(|i| ratio(&crlb, i));
    let quantum_ratios = core::array::from_fn(|i| ratio(&quantum, i));
    Ok(EstimationRun {
        seed: spec.seed,
        photons: spec.photons,
        measurement: spec.measurement.clone(),
        truth,
        free,
        boundary_hits: estimates.iter().filter(|e| e.on_boundary()).count(),
        estimates,
        mean,
        covariance,
        fisher,
        crlb,
        quantum,
        ratios,
        quantum_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::fisher::Param;
    use crate::psf::gaussian_psf;

    fn photons(p: SourceParams, n: usize, seed: u64) -> Vec<f64> {
        let psf = gaussian_psf(1.0).unwrap();
        sample_photons(&intensity_profile(&psf, p).unwrap(), n, seed).unwrap()
    }

    #[test]
    fn gaussian_fast_path_matches_generic_density() {
        let psf = gaussian_psf(1.3).unwrap();
        let x = [-2.0, -0.3, 0.0, 0.4, 1.7, 3.5];
        let p = SourceParams::new(0.2, 0.9, 0.3).unwrap();
        let fast = LogLik::Gaussian {
            x: &x,
            sum: x.iter().sum(),
            sum_sq: x.iter().map(|v| v * v).sum(),
            width: 1.3,
            binned: None,
        }
        .eval(p);
        let slow = LogLik::Positions { x: &x, psf: &psf }.eval(p);
        assert!((fast - slow).abs() < 1e-12 * slow.abs());
        let edge = SourceParams::new(0.2, 0.9, 1.0).unwrap();
        let fast = LogLik::Gaussian {
            x: &x,
            sum: x.iter().sum(),
            sum_sq: x.iter().map(|v| v * v).sum(),
            width: 1.3,
            binned: None,
        }
        .eval(edge);
        assert!(fast.is_finite());
    }

    #[test]
    fn binned_surrogate_tracks_exact_likelihood() {
        let truth = SourceParams::new(0.1, 1.0, 0.4).unwrap();
        let x = photons(truth, 100_000, 8);
        let ll = LogLik::Gaussian {
            x: &x,
            sum: x.iter().sum(),
            sum_sq: x.iter().map(|v| v * v).sum(),
            width: 1.0,
            binned: Binned::new(&x, 1.0, 10.0),
        };
        for p in [
            truth,
            SourceParams::new(-0.3, 9.5, 0.02).unwrap(),
            SourceParams::new(0.0, 0.0, 1.0).unwrap(),
        ] {
            let (exact, approx) = (ll.eval(p), ll.surrogate(p).unwrap());
            assert!((exact - approx).abs() < 1e-5, "{p:?}: {exact} vs {approx}");
        }
        for q in [0.0, 1.0] {
            let p = SourceParams::new(0.2, 2.0, q).unwrap();
            assert!((ll.eval(p) - ll.surrogate(p).unwrap()).abs() < 1e-5);
        }
    }

    #[test]
    fn moment_estimate_recovers_large_separation() {
        let truth = SourceParams::new(0.3, 3.0, 0.3).unwrap();
        let x = photons(truth, 200_000, 3);
        let psf = gaussian_psf(1.0).unwrap();
        let m = moment_estimate(&x, &psf, &EstimationBox::default()).unwrap();
        assert!(
            (m.s - 3.0).abs() < 0.1 && (m.q - 0.3).abs() < 0.05 && (m.s0 - 0.3).abs() < 0.1,
            "{m:?}"
        );
    }

    #[test]
    fn estimate_within_five_standard_deviations() {
        let psf = gaussian_psf(1.0).unwrap();
        let truth = SourceParams::new(0.0, 2.0, 0.5).unwrap();
        let n = 100_000;
        let x = photons(truth, n, 11);
        let box_ = EstimationBox::default();
        let init = moment_estimate(&x, &psf, &box_).unwrap();
        let est = mle(Observations::Positions(&x), &psf, init, &MleOptions::default()).unwrap();
        let h = precisions(&crate::cfi::direct_imaging_cfi(&psf, truth).unwrap());
        let (e, t) = (est.params.to_array(), truth.to_array());
        for i in 0..3 {
            let sd = 1.0 / sqrt(n as f64 * h.h[i]);
            assert!(
                (e[i] - t[i]).abs() < 5.0 * sd,
                "param {i}: {} vs {} (sd {sd})",
                e[i],
                t[i]
            );
        }
    }

    #[test]
    fn photons_at_origin_hit_zero_separation() {
        let psf = gaussian_psf(1.0).unwrap();
        let x = vec![0.0; 1000];
        let box_ = EstimationBox::default();
        let init = moment_estimate(&x, &psf, &box_).unwrap();
        let est = mle(Observations::Positions(&x), &psf, init, &MleOptions::default()).unwrap();
        assert!(est.at_lower[1], "{est:?}");
    }

    #[test]
    fn single_source_truth_is_flagged_without_excess_spread() {
        // With no excess spread in the sample the single-source model is the
        // maximum; data sets with excess spread are fit by a faint companion.
        let psf = gaussian_psf(1.0).unwrap();
        let truth = SourceParams::new(0.0, 1.0, 1.0).unwrap();
        let x = (0..20)
            .map(|seed| photons(truth, 20_000, seed))
            .find(|x| {
                let n = x.len() as f64;
                let m = x.iter().sum::<f64>() / n;
                x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n < 1.0
            })
            .unwrap();
        let est = mle(Observations::Positions(&x), &psf, truth, &MleOptions::default()).unwrap();
        assert!(est.single_source(), "{est:?}");
    }

    #[test]
    fn counts_sum_to_photon_number() {
        let c = sample_counts(&[0.2, 0.5, 0.0, 0.3], 12345, 9).unwrap();
        assert_eq!(c.iter().sum::<u64>(), 12345);
        assert_eq!(c[2], 0);
    }

    #[test]
    fn guards_reject_small_studies() {
        let psf = gaussian_psf(1.0).unwrap();
        let truth = SourceParams::new(0.0, 1.0, 0.5).unwrap();
        let spec = StudySpec::new(MeasurementKind::Direct, 1000, 200, 1);
        assert!(crlb_saturation_study(&Sequential, &psf, truth, &spec).is_err());
        let spec = StudySpec::new(MeasurementKind::Direct, 10_000, 50, 1);
        assert!(crlb_saturation_study(&Sequential, &psf, truth, &spec).is_err());
    }

    #[test]
    fn counts_mle_recovers_separation() {
        let psf = gaussian_psf(1.0).unwrap();
        let truth = SourceParams::new(0.0, 0.5, 0.5).unwrap();
        let m = crate::measure_opt::mode_basis_at(&psf, 3, 0.0).unwrap();
        let probs = m.probabilities(&psf, truth).unwrap();
        let counts = sample_counts(&probs, 100_000, 4).unwrap();
        let opts = MleOptions {
            free: [false, true, false],
            ..MleOptions::default()
        };
        let start = SourceParams::new(0.0, 0.4, 0.5).unwrap();
        let est = mle(
            Observations::Counts {
                counts: &counts,
                measurement: &m,
            },
            &psf,
            start,
            &opts,
        )
        .unwrap();
        let f = crate::cfi::measurement_cfi(&m, &psf, truth).unwrap();
        let sd = 1.0 / sqrt(1e5 * f.get(Param::Separation, Param::Separation));
        assert!((est.params.s - 0.5).abs() < 5.0 * sd);
    }
}
