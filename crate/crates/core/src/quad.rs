//! Adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Integrands may be vector valued: all components share one subdivision,
//! driven by the summed error estimate. [`Quadrature::rule`] exposes the
//! final nodes and weights so that quadratic forms such as Fisher matrices
//! can be assembled from one common set of samples.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{fabs, pow};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Four-point Gauss-Legendre rule on `[-1, 1]`; exact for degree <= 7.
pub(crate) const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
];

/// Adaptive quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Subdivision budget; exceeding it is reported as non-convergence.
    pub max_intervals: usize,
    /// Uniform pre-split of `[a, b]` before adaptive refinement starts.
    pub initial_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_intervals: 4000,
            initial_intervals: 8,
        }
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub intervals: usize,
}

/// Nodes and weights of a converged composite rule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = fabs(err);
    if resasc != 0.0 && err != 0.0 {
        let scale = pow(200.0 * err / resasc, 1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

fn kronrod<const N: usize>(f: &mut impl FnMut(f64) -> [f64; N], a: f64, b: f64) -> Segment<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    let mut resabs = [0.0; N];
    let mut samples: [[f64; N]; 15] = [[0.0; N]; 15];
    samples[14] = fc;
    for c in 0..N {
        kron[c] = fc[c] * WGK[7];
        gauss[c] = fc[c] * WG[3];
        resabs[c] = fabs(fc[c]) * WGK[7];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        samples[2 * j] = f1;
        samples[2 * j + 1] = f2;
        for c in 0..N {
            kron[c] += WGK[j] * (f1[c] + f2[c]);
            resabs[c] += WGK[j] * (fabs(f1[c]) + fabs(f2[c]));
            if j % 2 == 1 {
                gauss[c] += WG[j / 2] * (f1[c] + f2[c]);
            }
        }
    }
    let mut value = [0.0; N];
    let mut error = 0.0;
    for c in 0..N {
        let mean = kron[c] * 0.5;
        let mut resasc = WGK[7] * fabs(fc[c] - mean);
        for j in 0..7 {
            resasc += WGK[j] * (fabs(samples[2 * j][c] - mean) + fabs(samples[2 * j + 1][c] - mean));
        }
        let habs = fabs(half);
        value[c] = kron[c] * half;
        error += rescale_error((kron[c] - gauss[c]) * half, resabs[c] * habs, resasc * habs);
    }
    Segment { a, b, value, error }
}

impl Quadrature {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    fn refine<const N: usize>(&self, f: &mut impl FnMut(f64) -> [f64; N], a: f64, b: f64) -> Result<Vec<Segment<N>>> {
        let pieces = self.initial_intervals.max(1);
        let width = (b - a) / pieces as f64;
        let mut segments: Vec<Segment<N>> = (0..pieces)
            .map(|i| {
                let lo = a + width * i as f64;
                let hi = if i + 1 == pieces { b } else { lo + width };
                kronrod(f, lo, hi)
            })
            .collect();
        loop {
            let mut total = [0.0; N];
            let mut err = 0.0;
            let mut worst = 0;
            for (i, seg) in segments.iter().enumerate() {
                for c in 0..N {
                    total[c] += seg.value[c];
                }
                err += seg.error;
                if seg.error > segments[worst].error {
                    worst = i;
                }
            }
            let scale = total.iter().fold(0.0f64, |m, v| m.max(fabs(*v)));
            if err <= self.abs_tol.max(self.rel_tol * scale) {
                return Ok(segments);
            }
            if segments.len() >= self.max_intervals {
                return Err(Error::QuadratureNonConvergence {
                    estimate: err,
                    intervals: segments.len(),
                });
            }
            let seg = segments.swap_remove(worst);
            let mid = 0.5 * (seg.a + seg.b);
            if mid <= seg.a || mid >= seg.b {
                // Interval can no longer be split in floating point.
                return Err(Error::QuadratureNonConvergence {
                    estimate: err,
                    intervals: segments.len() + 1,
                });
            }
            segments.push(kronrod(f, seg.a, mid));
            segments.push(kronrod(f, mid, seg.b));
        }
    }

    /// Integrates a scalar function over `[a, b]`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> Result<Estimate<1>> {
        self.integrate_vec(|x| [f(x)], a, b)
    }

    /// Integrates a vector-valued function over `[a, b]` on a common subdivision.
    pub fn integrate_vec<const N: usize>(
        &self,
        mut f: impl FnMut(f64) -> [f64; N],
        a: f64,
        b: f64,
    ) -> Result<Estimate<N>> {
        if a == b {
            return Ok(Estimate {
                value: [0.0; N],
                error: 0.0,
                intervals: 0,
            });
        }
        let segments = self.refine(&mut f, a, b)?;
        let mut value = [0.0; N];
        let mut error = 0.0;
        for seg in &segments {
            for c in 0..N {
                value[c] += seg.value[c];
            }
            error += seg.error;
        }
        Ok(Estimate {
            value,
            error,
            intervals: segments.len(),
        })
    }

    /// Refines on `f` and returns the resulting composite Kronrod rule.
    pub fn rule<const N: usize>(&self, mut f: impl FnMut(f64) -> [f64; N], a: f64, b: f64) -> Result<Rule> {
        let mut segments = self.refine(&mut f, a, b)?;
        segments.sort_by(|x, y| x.a.total_cmp(&y.a));
        let mut rule = Rule {
            nodes: Vec::with_capacity(15 * segments.len()),
            weights: Vec::with_capacity(15 * segments.len()),
        };
        for seg in &segments {
            let center = 0.5 * (seg.a + seg.b);
            let half = 0.5 * (seg.b - seg.a);
            for j in 0..7 {
                rule.nodes.push(center - half * XGK[j]);
                rule.weights.push(half * WGK[j]);
            }
            rule.nodes.push(center);
            rule.weights.push(half * WGK[7]);
            for j in (0..7).rev() {
                rule.nodes.push(center + half * XGK[j]);
                rule.weights.push(half * WGK[j]);
            }
        }
        Ok(rule)
    }
}
