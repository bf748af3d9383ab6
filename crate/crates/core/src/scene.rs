//! Two-source parameters, the mean image-plane intensity and photon sampling.
//!
//! The "+" source sits at `s0 + s/2` and carries the fraction `q` of the
//! total intensity; the "−" source sits at `s0 - s/2` with `1 - q`.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::exec::{Executor, Sequential};
use crate::psf::{PsfKind, PsfModel};
use crate::rng;

/// Parameter vector `θ = (s0, s, q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceParams {
    pub s0: f64,
    pub s: f64,
    pub q: f64,
}

impl SourceParams {
    /// Validated constructor: `s >= 0`, `0 <= q <= 1`, all finite.
    pub fn new(s0: f64, s: f64, q: f64) -> Result<Self> {
        let p = Self { s0, s, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s0.is_finite() {
            return Err(invalid("centroid must be finite"));
        }
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(invalid("separation must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(invalid("brightness q must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Balance factor `𝒬² = 4q(1-q)`.
    pub fn balance(&self) -> f64 {
        4.0 * self.q * (1.0 - self.q)
    }

    /// Position of the "+" source.
    pub fn plus(&self) -> f64 {
        self.s0 + 0.5 * self.s
    }

    /// Position of the "−" source.
    pub fn minus(&self) -> f64 {
        self.s0 - 0.5 * self.s
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.s0, self.s, self.q]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self {
            s0: v[0],
            s: v[1],
            q: v[2],
        }
    }
}

/// Normalized mean intensity `ρ(x) = q I(x - s0 - s/2) + (1-q) I(x - s0 + s/2)`.
#[derive(Debug, Clone, Copy)]
pub struct IntensityProfile<'a> {
    pub psf: &'a PsfModel,
    pub params: SourceParams,
}

impl IntensityProfile<'_> {
    pub fn density(&self, x: f64) -> f64 {
        let p = &self.params;
        p.q * self.psf.intensity(x - p.plus()) + (1.0 - p.q) * self.psf.intensity(x - p.minus())
    }

    /// `P(a < X < b)`.
    pub fn interval(&self, a: f64, b: f64) -> f64 {
        let p = &self.params;
        p.q * self.psf.intensity_interval(a - p.plus(), b - p.plus())
            + (1.0 - p.q) * self.psf.intensity_interval(a - p.minus(), b - p.minus())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let p = &self.params;
        p.q * self.psf.intensity_cdf(x - p.plus()) + (1.0 - p.q) * self.psf.intensity_cdf(x - p.minus())
    }

    /// `(∂ρ/∂s0, ∂ρ/∂s, ∂ρ/∂q)` at `x`.
    pub fn gradients(&self, x: f64) -> [f64; 3] {
        let p = &self.params;
        let (xp, xm) = (x - p.plus(), x - p.minus());
        let dp = self.psf.intensity_deriv(xp);
        let dm = self.psf.intensity_deriv(xm);
        [
            -p.q * dp - (1.0 - p.q) * dm,
            -0.5 * p.q * dp + 0.5 * (1.0 - p.q) * dm,
            self.psf.intensity(xp) - self.psf.intensity(xm),
        ]
    }
}

pub fn intensity_profile(psf: &PsfModel, params: SourceParams) -> Result<IntensityProfile<'_>> {
    params.validate()?;
    Ok(IntensityProfile { psf, params })
}

/// Parameter gradients of the mean intensity at `x`.
pub fn intensity_gradients(psf: &PsfModel, params: SourceParams, x: f64) -> Result<[f64; 3]> {
    Ok(intensity_profile(psf, params)?.gradients(x))
}

/// Photons drawn per random stream. Fixing the chunk size (rather than
/// splitting by worker count) keeps the draws independent of scheduling.
pub const SAMPLE_CHUNK: usize = 8192;

/// Draws `n` photon positions from the mean intensity.
pub fn sample_photons(profile: &IntensityProfile<'_>, n: usize, seed: u64) -> Result<Vec<f64>> {
    sample_photons_with(&Sequential, profile, n, seed)
}

/// [`sample_photons`] with chunks distributed by `exec`.
///
/// Each photon first picks its source (Bernoulli(q)); Gaussian PSFs then
/// add an exact normal draw and sampled PSFs invert their cumulative
/// intensity.
pub fn sample_photons_with<E: Executor>(
    exec: &E,
    profile: &IntensityProfile<'_>,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("photon count must be positive"));
    }
    profile.params.validate()?;
    let chunks = n.div_ceil(SAMPLE_CHUNK);
    let p = profile.params;
    let psf = profile.psf;
    let gaussian = psf.kind() == PsfKind::AnalyticGaussian;
    let width = psf.width();
    let parts = exec.map(chunks, |c| {
        let len = SAMPLE_CHUNK.min(n - c * SAMPLE_CHUNK);
        let mut r = rng::stream(seed, c as u64);
        (0..len)
            .map(|_| {
                let plus = r.random::<f64>() < p.q;
                let center = if plus { p.plus() } else { p.minus() };
                let offset = if gaussian {
                    width * r.sample::<f64, _>(StandardNormal)
                } else {
                    psf.intensity_quantile(r.random::<f64>())
                };
                center + offset
            })
            .collect::<Vec<f64>>()
    });
    Ok(parts.into_iter().flatten().collect())
}
