//! Point spread functions and the scalar functionals that determine the
//! quantum Fisher matrix.
//!
//! A PSF is described by its real amplitude `Ψ(x)`; the intensity response
//! is `I(x) = Ψ(x)²`. Its momentum density `|Ψ̃(p)|²` is even whenever the
//! amplitude is real. Two-source information quantities depend on the PSF
//! only through the momentum moments `p2 = ⟨P²⟩`, `p4 = ⟨P⁴⟩` and the
//! separation-dependent overlaps
//!
//! ```text
//! w(s)   = ⟨Ψ| e^{isP} |Ψ⟩      = ∫ cos(sp)   ρ(p) dp
//! m(s)   = Im ⟨Ψ| e^{isP} P |Ψ⟩ = ∫ p sin(sp) ρ(p) dp = -w'(s)
//! tau(s) = ⟨Ψ| e^{isP} P² |Ψ⟩   = ∫ p² cos(sp) ρ(p) dp = -w''(s)
//! ```
//!
//! `⟨Ψ|e^{isP}P|Ψ⟩` is purely imaginary for a real PSF, so only its
//! imaginary part `m` is stored and every product of two such factors
//! becomes `-m²`.
//!
//! For user-sampled PSFs the same integrals are evaluated in position space
//! (`w = ∫Ψ(x)Ψ(x+s)dx`, `m = -∫Ψ(x)Ψ'(x+s)dx`, `tau = ∫Ψ'(x)Ψ'(x+s)dx`),
//! exactly for the cubic-spline interpolant.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::math::{cos, exp, expm1, fabs, hermite_he, normal_interval, normal_sf, powi, sin, sqrt, SQRT_2PI};
use crate::quad::{Quadrature, GL4};
use crate::spline::{product_integral, shifted_difference_sq, weighted_square_integral, CubicSpline, UniformGrid};

/// Model tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PsfKind {
    AnalyticGaussian,
    UserSampled,
}

#[derive(Debug, Clone, PartialEq)]
struct Sampled {
    re: CubicSpline,
    im: Option<CubicSpline>,
    /// `∫_{x_0}^{x_i} |Ψ|²` at every knot.
    cumulative: Vec<f64>,
    mean: f64,
    variance: f64,
    third: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Gaussian { width: f64 },
    Sampled(Box<Sampled>),
}

/// Amplitude point-spread function with unit-normalized intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct PsfModel {
    repr: Repr,
}

/// Gaussian PSF of the given width: `Ψ(x) = (2π)^{-1/4} σ^{-1/2} exp(-x²/4σ²)`.
pub fn gaussian_psf(width: f64) -> Result<PsfModel> {
    PsfModel::gaussian(width)
}

impl PsfModel {
    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(invalid("PSF width must be positive"));
        }
        Ok(Self {
            repr: Repr::Gaussian { width },
        })
    }

    /// Builds a PSF from uniformly spaced amplitude samples.
    ///
    /// `imag`, when present, holds the imaginary part of a complex amplitude;
    /// such PSFs are accepted only so that [`validate_real_psf`] can reject
    /// them. The samples are rescaled so that `∫|Ψ|² = 1`; the applied
    /// factor is returned alongside the model.
    pub fn from_samples(grid: UniformGrid, real: Vec<f64>, imag: Option<Vec<f64>>) -> Result<(Self, f64)> {
        let re = CubicSpline::new(grid, real)?;
        let im = imag.map(|v| CubicSpline::new(grid, v)).transpose()?;
        let norm = re.squared_integral(grid.start, grid.end())
            + im.as_ref().map_or(0.0, |s| s.squared_integral(grid.start, grid.end()));
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(invalid("PSF samples have zero norm"));
        }
        let factor = 1.0 / sqrt(norm);
        let rescale = |s: &CubicSpline| CubicSpline::new(grid, s.samples().iter().map(|v| v * factor).collect());
        let re = rescale(&re)?;
        let im = im.as_ref().map(rescale).transpose()?;

        let mut cumulative = Vec::with_capacity(grid.len);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 1..grid.len {
            acc += piece_intensity(&re, im.as_ref(), grid.x(i - 1), grid.x(i));
            cumulative.push(acc);
        }
        let moment = |k: i32| {
            weighted_square_integral(&re, |x| powi(x, k))
                + im.as_ref().map_or(0.0, |s| weighted_square_integral(s, |x| powi(x, k)))
        };
        let mean = moment(1);
        let variance = moment(2) - mean * mean;
        let third = moment(3) - 3.0 * mean * moment(2) + 2.0 * mean * mean * mean;
        if !(variance > 0.0) {
            return Err(invalid("PSF intensity has zero width"));
        }
        let sampled = Sampled {
            re,
            im,
            cumulative,
            mean,
            variance,
            third,
        };
        Ok((
            Self {
                repr: Repr::Sampled(Box::new(sampled)),
            },
            factor,
        ))
    }

    pub fn kind(&self) -> PsfKind {
        match self.repr {
            Repr::Gaussian { .. } => PsfKind::AnalyticGaussian,
            Repr::Sampled(_) => PsfKind::UserSampled,
        }
    }

    /// Width scale σ: the Gaussian parameter, or the rms width of a sampled intensity.
    pub fn width(&self) -> f64 {
        match &self.repr {
            Repr::Gaussian { width } => *width,
            Repr::Sampled(s) => sqrt(s.variance),
        }
    }

    /// Interval outside of which the amplitude is negligible (or zero).
    pub fn support(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Gaussian { width } => (-14.0 * width, 14.0 * width),
            Repr::Sampled(s) => (s.re.grid().start, s.re.grid().end()),
        }
    }

    /// Largest derivative order [`Self::amplitude_deriv`] supports, if bounded.
    pub fn max_derivative_order(&self) -> Option<usize> {
        match self.repr {
            Repr::Gaussian { .. } => None,
            Repr::Sampled(_) => Some(2),
        }
    }

    /// Real amplitude `Ψ(x)`.
    pub fn amplitude(&self, x: f64) -> f64 {
        self.amplitude_deriv(x, 0)
    }

    /// `d^k Ψ / dx^k`. Sampled PSFs return zero above order 3.
    pub fn amplitude_deriv(&self, x: f64, order: usize) -> f64 {
        match &self.repr {
            Repr::Gaussian { width } => {
                let t = x / (core::f64::consts::SQRT_2 * width);
                let norm = 1.0 / sqrt(SQRT_2PI * width);
                let base = norm * exp(-0.5 * t * t);
                if order == 0 {
                    return base;
                }
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                let scale = powi(core::f64::consts::SQRT_2 * width, -(order as i32));
                sign * scale * hermite_he(order, t) * base
            }
            Repr::Sampled(s) => s.re.eval(x, order),
        }
    }

    /// Imaginary part of the amplitude (zero for real models).
    pub fn amplitude_imag(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Sampled(s) => s.im.as_ref().map_or(0.0, |im| im.eval(x, 0)),
            Repr::Gaussian { .. } => 0.0,
        }
    }

    /// Intensity `|Ψ(x)|²`.
    pub fn intensity(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian { width } => {
                let t = x / width;
                exp(-0.5 * t * t) / (SQRT_2PI * width)
            }
            Repr::Sampled(s) => {
                let re = s.re.eval(x, 0);
                let im = s.im.as_ref().map_or(0.0, |im| im.eval(x, 0));
                re * re + im * im
            }
        }
    }

    /// `dI/dx`.
    pub fn intensity_deriv(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian { width } => -x / (width * width) * self.intensity(x),
            Repr::Sampled(s) => {
                let mut d = 2.0 * s.re.eval(x, 0) * s.re.eval(x, 1);
                if let Some(im) = &s.im {
                    d += 2.0 * im.eval(x, 0) * im.eval(x, 1);
                }
                d
            }
        }
    }

    /// `∫_{-∞}^{x} I`.
    pub fn intensity_cdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian { width } => 1.0 - normal_sf(x / width),
            Repr::Sampled(s) => {
                let g = s.re.grid();
                if x <= g.start {
                    return 0.0;
                }
                if x >= g.end() {
                    return *s.cumulative.last().unwrap_or(&1.0);
                }
                let i = (libm::floor((x - g.start) / g.step) as usize).min(g.len - 2);
                s.cumulative[i] + piece_intensity(&s.re, s.im.as_ref(), g.x(i), x)
            }
        }
    }

    /// `∫_a^b I`, evaluated without cancellation in the Gaussian tails.
    pub fn intensity_interval(&self, a: f64, b: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian { width } => normal_interval(a / width, b / width),
            Repr::Sampled(_) => self.intensity_cdf(b) - self.intensity_cdf(a),
        }
    }

    /// Position `x` with `intensity_cdf(x) = u` for `u` in `[0, 1]`.
    ///
    /// The Gaussian model inverts the normal CDF numerically; sampled models
    /// locate the knot interval from the stored cumulative sums and then
    /// solve inside it by safeguarded Newton iteration.
    pub fn intensity_quantile(&self, u: f64) -> f64 {
        let (lo, hi) = match &self.repr {
            Repr::Gaussian { width } => (-40.0 * width, 40.0 * width),
            Repr::Sampled(s) => {
                let g = s.re.grid();
                let total = *s.cumulative.last().unwrap_or(&1.0);
                let target = u * total;
                let i = s.cumulative.partition_point(|&c| c <= target).clamp(1, g.len - 1);
                (g.x(i - 1), g.x(i))
            }
        };
        let target = match &self.repr {
            Repr::Sampled(s) => u * *s.cumulative.last().unwrap_or(&1.0),
            Repr::Gaussian { .. } => u,
        };
        let (mut a, mut b) = (lo, hi);
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let f = self.intensity_cdf(x) - target;
            if f > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let d = self.intensity(x);
            let newton = if d > 0.0 { x - f / d } else { f64::NAN };
            let next = if newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if fabs(next - x) <= 1e-15 * (1.0 + fabs(x)) || b - a <= 1e-15 * (1.0 + fabs(x)) {
                return next;
            }
            x = next;
        }
        x
    }

    /// Mean, variance and third central moment of the intensity profile.
    pub fn intensity_stats(&self) -> (f64, f64, f64) {
        match &self.repr {
            Repr::Gaussian { width } => (0.0, width * width, 0.0),
            Repr::Sampled(s) => (s.mean, s.variance, s.third),
        }
    }

    /// Momentum density `|Ψ̃(p)|²` with `Ψ̃(p) = (2π)^{-1/2} ∫ Ψ(x) e^{-ipx} dx`.
    ///
    /// Sampled PSFs use the trapezoid rule on their samples, which is
    /// accurate well below the grid's Nyquist momentum.
    pub fn momentum_density(&self, p: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian { width } => {
                let var = 1.0 / (4.0 * width * width);
                exp(-p * p / (2.0 * var)) / sqrt(2.0 * PI * var)
            }
            Repr::Sampled(s) => {
                let g = s.re.grid();
                let re = s.re.samples();
                let im = s.im.as_ref().map(|v| v.samples());
                let (mut ft_re, mut ft_im) = (0.0, 0.0);
                for i in 0..g.len {
                    let w = if i == 0 || i + 1 == g.len { 0.5 } else { 1.0 };
                    let x = g.x(i);
                    let (c, sn) = (cos(p * x), sin(p * x));
                    let a = re[i];
                    let b = im.map_or(0.0, |v| v[i]);
                    // (a + ib)(c - i sn)
                    ft_re += w * (a * c + b * sn);
                    ft_im += w * (b * c - a * sn);
                }
                let scale = g.step / SQRT_2PI;
                (ft_re * ft_re + ft_im * ft_im) * scale * scale
            }
        }
    }

    /// Closed-form moments of the analytic Gaussian model.
    pub fn analytic_moments(&self) -> Option<PsfMoments> {
        match self.repr {
            Repr::Gaussian { width } => {
                let p2 = 1.0 / (4.0 * width * width);
                Some(PsfMoments {
                    p2,
                    p4: 3.0 * p2 * p2,
                    var_p2: 2.0 * p2 * p2,
                })
            }
            Repr::Sampled(_) => None,
        }
    }

    fn sampled(&self) -> Option<&Sampled> {
        match &self.repr {
            Repr::Sampled(s) => Some(s),
            Repr::Gaussian { .. } => None,
        }
    }
}

fn piece_intensity(re: &CubicSpline, im: Option<&CubicSpline>, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL4.iter()
        .map(|&(t, w)| {
            let x = c + h * t;
            let r = re.eval(x, 0);
            let i = im.map_or(0.0, |s| s.eval(x, 0));
            w * (r * r + i * i)
        })
        .sum::<f64>()
        * h
}

/// Second and fourth momentum moments of a PSF.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PsfMoments {
    /// `⟨P²⟩` in width⁻².
    pub p2: f64,
    /// `⟨P⁴⟩` in width⁻⁴.
    pub p4: f64,
    /// `Var(P²) = p4 - p2²`.
    pub var_p2: f64,
}

impl PsfMoments {
    pub fn new(p2: f64, p4: f64) -> Result<Self> {
        if !(p2 > 0.0) || !p4.is_finite() {
            return Err(invalid("momentum moments must be positive and finite"));
        }
        let var_p2 = p4 - p2 * p2;
        if var_p2 < -1e-12 * p4.max(1.0) {
            return Err(invalid("p4 < p2² violates Cauchy-Schwarz"));
        }
        Ok(Self {
            p2,
            p4,
            var_p2: var_p2.max(0.0),
        })
    }
}

fn momentum_quadrature() -> Quadrature {
    Quadrature {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        ..Quadrature::default()
    }
}

/// Half-width of the truncated momentum domain for an analytic density.
fn momentum_cutoff(width: f64) -> f64 {
    // 24 standard deviations of the momentum density.
    24.0 / (2.0 * width)
}

/// Momentum moments `p2 = ∫p²ρ(p)dp`, `p4 = ∫p⁴ρ(p)dp`.
///
/// Analytic models integrate the momentum density by adaptive quadrature;
/// sampled models use the position-space identities `p2 = ∫Ψ'²`,
/// `p4 = ∫Ψ''²`, exact for the spline interpolant.
pub fn moments(psf: &PsfModel) -> Result<PsfMoments> {
    match &psf.repr {
        Repr::Gaussian { width } => {
            let cut = momentum_cutoff(*width);
            let est = momentum_quadrature().integrate_vec(
                |p| {
                    let d = psf.momentum_density(p);
                    let p2 = p * p;
                    [2.0 * p2 * d, 2.0 * p2 * p2 * d]
                },
                0.0,
                cut,
            )?;
            PsfMoments::new(est.value[0], est.value[1])
        }
        Repr::Sampled(s) => {
            let p2 = product_integral(&s.re, 1, &s.re, 1, 0.0, None);
            let p4 = product_integral(&s.re, 2, &s.re, 2, 0.0, None);
            PsfMoments::new(p2, p4)
        }
    }
}

/// How an [`OverlapSet`] was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum OverlapMethod {
    Analytic,
    Quadrature,
    Series,
}

/// Separation-dependent overlap functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OverlapSet {
    pub s: f64,
    /// `⟨Ψ∓|Ψ±⟩`.
    pub w: f64,
    /// Imaginary part of `⟨Ψ|e^{isP}P|Ψ⟩`.
    pub m: f64,
    /// `⟨Ψ|e^{isP}P²|Ψ⟩`.
    pub tau: f64,
    /// `1 - w`, evaluated without cancellation at small `s`.
    pub one_minus_w: f64,
    pub method: OverlapMethod,
}

impl OverlapSet {
    /// `1 - w²` without cancellation.
    pub fn one_minus_w2(&self) -> f64 {
        self.one_minus_w * (1.0 + self.w)
    }
}

fn check_separation(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid("separation must be finite and non-negative"));
    }
    Ok(())
}

/// Overlaps `w`, `m`, `tau` at separation `s`.
///
/// The Gaussian model is evaluated in closed form:
/// `w = exp(-s²p2/2)`, `m = s p2 w`, `tau = (p2 - s²p2²) w`.
pub fn overlaps(psf: &PsfModel, s: f64) -> Result<OverlapSet> {
    check_separation(s)?;
    match &psf.repr {
        Repr::Gaussian { width } => {
            let p2 = 1.0 / (4.0 * width * width);
            let a = 0.5 * s * s * p2;
            let w = exp(-a);
            Ok(OverlapSet {
                s,
                w,
                m: s * p2 * w,
                tau: (p2 - s * s * p2 * p2) * w,
                one_minus_w: -expm1(-a),
                method: OverlapMethod::Analytic,
            })
        }
        Repr::Sampled(_) => overlaps_by_quadrature(psf, s),
    }
}

/// Overlaps by numerical integration, regardless of model.
///
/// Analytic models integrate `cos(sp)ρ(p)`, `p sin(sp)ρ(p)` and
/// `p² cos(sp)ρ(p)` over the truncated momentum domain; sampled models use
/// the exact spline position-space integrals.
pub fn overlaps_by_quadrature(psf: &PsfModel, s: f64) -> Result<OverlapSet> {
    check_separation(s)?;
    match &psf.repr {
        Repr::Gaussian { width } => {
            let cut = momentum_cutoff(*width);
            let est = momentum_quadrature().integrate_vec(
                |p| {
                    let d = 2.0 * psf.momentum_density(p);
                    let (c, sn) = (cos(s * p), sin(s * p));
                    let half = sin(0.5 * s * p);
                    [c * d, p * sn * d, p * p * c * d, 2.0 * half * half * d]
                },
                0.0,
                cut,
            )?;
            let [w, m, tau, one_minus_w] = est.value;
            Ok(OverlapSet {
                s,
                w,
                m,
                tau,
                one_minus_w,
                method: OverlapMethod::Quadrature,
            })
        }
        Repr::Sampled(sp) => {
            let f = &sp.re;
            Ok(OverlapSet {
                s,
                w: product_integral(f, 0, f, 0, s, None),
                m: -product_integral(f, 0, f, 1, s, None),
                tau: product_integral(f, 1, f, 1, s, None),
                one_minus_w: 0.5 * shifted_difference_sq(f, s),
                method: OverlapMethod::Quadrature,
            })
        }
    }
}

/// Small-separation expansion of the overlaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOverlaps {
    pub overlaps: OverlapSet,
    /// False when `s·sqrt(p2) > 0.5`, where the truncated series is unreliable.
    pub within_validity: bool,
}

/// `w ≈ 1 - p2 s²/2 + p4 s⁴/24`, `m ≈ p2 s - p4 s³/6`, `tau = -w'' ≈ p2 - p4 s²/2`.
pub fn overlap_series(moments: &PsfMoments, s: f64) -> Result<SeriesOverlaps> {
    check_separation(s)?;
    let (p2, p4) = (moments.p2, moments.p4);
    let s2 = s * s;
    let one_minus_w = 0.5 * p2 * s2 - p4 * s2 * s2 / 24.0;
    Ok(SeriesOverlaps {
        overlaps: OverlapSet {
            s,
            w: 1.0 - one_minus_w,
            m: p2 * s - p4 * s2 * s / 6.0,
            tau: p2 - 0.5 * p4 * s2,
            one_minus_w,
            method: OverlapMethod::Series,
        },
        within_validity: s * sqrt(p2) <= 0.5,
    })
}

/// Outcome of [`validate_real_psf`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParityReport {
    /// Largest |Im Ψ(x)| over the sampled points.
    pub max_imaginary: f64,
    /// Largest |ρ(p) - ρ(-p)| over the probed momenta.
    pub symmetry_defect: f64,
    /// Both defects below `1e-9`: the amplitude is real and the SLD
    /// compatibility condition holds.
    pub is_real: bool,
}

const PARITY_TOL: f64 = 1e-9;

/// Checks that a PSF is real with an even momentum density.
pub fn validate_real_psf(psf: &PsfModel) -> ParityReport {
    let Some(s) = psf.sampled() else {
        return ParityReport {
            max_imaginary: 0.0,
            symmetry_defect: 0.0,
            is_real: true,
        };
    };
    let max_imaginary =
        s.im.as_ref()
            .map_or(0.0, |im| im.samples().iter().fold(0.0f64, |m, v| m.max(fabs(*v))));
    let g = s.re.grid();
    let p_max = (10.0 / psf.width()).min(0.5 * PI / g.step);
    let probes = 200;
    let symmetry_defect = (1..=probes)
        .map(|k| {
            let p = p_max * k as f64 / probes as f64;
            fabs(psf.momentum_density(p) - psf.momentum_density(-p))
        })
        .fold(0.0, f64::max);
    ParityReport {
        max_imaginary,
        symmetry_defect,
        is_real: max_imaginary < PARITY_TOL && symmetry_defect < PARITY_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn sampled_gaussian(width: f64, step: f64) -> PsfModel {
        let g = gaussian_psf(width).unwrap();
        let grid = UniformGrid::covering(-16.0 * width, 16.0 * width, step).unwrap();
        let samples: Vec<f64> = grid.points().map(|x| g.amplitude(x)).collect();
        PsfModel::from_samples(grid, samples, None).unwrap().0
    }

    #[test]
    fn gaussian_amplitude_and_normalization() {
        let psf = gaussian_psf(1.0).unwrap();
        // (2π)^{-1/4}
        assert!((psf.amplitude(0.0) - 0.631_618_777_746_014_6).abs() < 1e-12);
        let q = Quadrature::default();
        let norm = q.integrate(|x| psf.amplitude(x).powi(2), -20.0, 20.0).unwrap();
        assert!((norm.value[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_width() {
        assert!(gaussian_psf(0.0).is_err());
        assert!(gaussian_psf(-1.0).is_err());
        assert!(gaussian_psf(f64::NAN).is_err());
    }

    #[test]
    fn momentum_variance_of_width_two() {
        let psf = gaussian_psf(2.0).unwrap();
        let q = Quadrature::default();
        let var = q.integrate(|p| p * p * psf.momentum_density(p), -10.0, 10.0).unwrap();
        assert!((var.value[0] - 1.0 / 16.0).abs() < 1e-12);
        let mass = q.integrate(|p| psf.momentum_density(p), -10.0, 10.0).unwrap();
        assert!((mass.value[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_derivatives_match_finite_differences() {
        let psf = gaussian_psf(1.3).unwrap();
        let h = 1e-4;
        for &x in &[-2.0, -0.3, 0.0, 1.1, 3.5] {
            for k in 1..4 {
                let fd = (psf.amplitude_deriv(x + h, k - 1) - psf.amplitude_deriv(x - h, k - 1)) / (2.0 * h);
                assert!((fd - psf.amplitude_deriv(x, k)).abs() < 1e-7, "x={x} k={k}");
            }
        }
    }

    #[test]
    fn gaussian_moments() {
        let m = moments(&gaussian_psf(1.0).unwrap()).unwrap();
        assert!((m.p2 - 0.25).abs() < 1e-13);
        assert!((m.p4 - 0.1875).abs() < 1e-13);
        assert!((m.var_p2 - 0.125).abs() < 1e-13);
        // Position-space cross-check: p2 = ∫ Ψ'².
        let psf = gaussian_psf(1.0).unwrap();
        let q = Quadrature::default();
        let p2 = q.integrate(|x| psf.amplitude_deriv(x, 1).powi(2), -20.0, 20.0).unwrap();
        assert!((p2.value[0] - 0.25).abs() < 1e-12);
        let p4 = q.integrate(|x| psf.amplitude_deriv(x, 2).powi(2), -20.0, 20.0).unwrap();
        assert!((p4.value[0] - 0.1875).abs() < 1e-12);
    }

    #[test]
    fn moments_rejects_cauchy_schwarz_violation() {
        assert!(PsfMoments::new(0.5, 0.1).is_err());
        assert!(PsfMoments::new(0.0, 0.1).is_err());
    }

    #[test]
    fn gaussian_overlaps_at_unit_separation() {
        let psf = gaussian_psf(1.0).unwrap();
        let o = overlaps(&psf, 1.0).unwrap();
        assert!((o.w - 0.882_496_902_584_595).abs() < 1e-12);
        assert!((o.m - 0.220_624_225_646_148_8).abs() < 1e-12);
        assert!((o.tau - 0.165_468_169_234_611_6).abs() < 1e-12);
        let q = overlaps_by_quadrature(&psf, 1.0).unwrap();
        assert!((q.w - o.w).abs() < 1e-12);
        assert!((q.m - o.m).abs() < 1e-12);
        assert!((q.tau - o.tau).abs() < 1e-12);
        assert!((q.one_minus_w - o.one_minus_w).abs() < 1e-13);
        let two = overlaps(&psf, 2.0).unwrap();
        assert!((two.w - exp(-0.5)).abs() < 1e-15);
        assert!((overlaps_by_quadrature(&psf, 2.0).unwrap().w - exp(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn zero_separation_is_identity_displacement() {
        for psf in [gaussian_psf(1.0).unwrap(), sampled_gaussian(1.0, 0.05)] {
            let mom = moments(&psf).unwrap();
            let o = overlaps(&psf, 0.0).unwrap();
            assert!((o.w - 1.0).abs() < 1e-12);
            assert_eq!(o.one_minus_w, 0.0);
            assert!(o.m.abs() < 1e-12);
            assert!((o.tau - mom.p2).abs() < 1e-12);
        }
        assert!(overlaps(&gaussian_psf(1.0).unwrap(), -0.1).is_err());
    }

    #[test]
    fn series_values() {
        let mom = PsfMoments::new(0.25, 0.1875).unwrap();
        let s = overlap_series(&mom, 0.1).unwrap();
        assert!(s.within_validity);
        assert!((s.overlaps.m - 0.024_968_75).abs() < 1e-15);
        let exact = overlaps(&gaussian_psf(1.0).unwrap(), 0.1).unwrap();
        assert!((s.overlaps.w - exact.w).abs() < 1e-6);
        let zero = overlap_series(&mom, 0.0).unwrap().overlaps;
        assert_eq!((zero.w, zero.m), (1.0, 0.0));
        assert!(!overlap_series(&mom, 1.5).unwrap().within_validity);
    }

    #[test]
    fn sampled_gaussian_tracks_analytic_model() {
        let analytic = gaussian_psf(1.0).unwrap();
        let sampled = sampled_gaussian(1.0, 0.02);
        assert_eq!(sampled.kind(), PsfKind::UserSampled);
        assert!((sampled.width() - 1.0).abs() < 1e-6);
        let mom = moments(&sampled).unwrap();
        assert!((mom.p2 - 0.25).abs() < 1e-6);
        assert!((mom.p4 - 0.1875).abs() < 1e-4);
        for &s in &[0.05, 0.5, 2.0] {
            let a = overlaps(&analytic, s).unwrap();
            let b = overlaps(&sampled, s).unwrap();
            assert!((a.w - b.w).abs() < 1e-8, "w at {s}");
            assert!((a.m - b.m).abs() < 1e-7, "m at {s}");
            assert!((a.tau - b.tau).abs() < 1e-6, "tau at {s}");
            assert!((a.one_minus_w - b.one_minus_w).abs() < 1e-8 * a.one_minus_w.max(1e-3));
        }
        assert!((sampled.intensity_cdf(0.0) - 0.5).abs() < 1e-9);
        assert!((sampled.intensity_cdf(1.0) - analytic.intensity_cdf(1.0)).abs() < 1e-8);
    }

    #[test]
    fn loader_reports_normalization_factor() {
        let grid = UniformGrid::covering(-12.0, 12.0, 0.05).unwrap();
        let psf = gaussian_psf(1.0).unwrap();
        let samples: Vec<f64> = grid.points().map(|x| 3.0 * psf.amplitude(x)).collect();
        let (model, factor) = PsfModel::from_samples(grid, samples, None).unwrap();
        assert!((factor - 1.0 / 3.0).abs() < 1e-8);
        assert!((model.amplitude(0.0) - psf.amplitude(0.0)).abs() < 1e-8);
    }

    #[test]
    fn parity_report_for_real_and_complex_psfs() {
        let r = validate_real_psf(&gaussian_psf(1.0).unwrap());
        assert!(r.is_real && r.max_imaginary == 0.0 && r.symmetry_defect == 0.0);

        // sin(x)/x amplitude: real, with a flat momentum density.
        let grid = UniformGrid::covering(-60.0, 60.0, 0.05).unwrap();
        let sinc: Vec<f64> = grid.points().map(|x| if x == 0.0 { 1.0 } else { sin(x) / x }).collect();
        let (sinc_psf, _) = PsfModel::from_samples(grid, sinc, None).unwrap();
        assert!(validate_real_psf(&sinc_psf).is_real);

        // Gaussian with cubic phase exp(i β x³): asymmetric momentum density.
        let grid = UniformGrid::covering(-12.0, 12.0, 0.02).unwrap();
        let base = gaussian_psf(1.0).unwrap();
        let beta = 0.05;
        let re: Vec<f64> = grid
            .points()
            .map(|x| base.amplitude(x) * cos(beta * x * x * x))
            .collect();
        let im: Vec<f64> = grid
            .points()
            .map(|x| base.amplitude(x) * sin(beta * x * x * x))
            .collect();
        let (aberrated, _) = PsfModel::from_samples(grid, re, Some(im)).unwrap();
        let report = validate_real_psf(&aberrated);
        assert!(!report.is_real);
        assert!(report.symmetry_defect > 1e-4);
        assert!(report.max_imaginary > 1e-3);
    }
}
