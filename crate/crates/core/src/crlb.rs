//! Precisions `H_α = 1/(F⁻¹)_αα`, closed-form and asymptotic bounds,
//! log-log slope fits and parameter sweeps.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::cfi::MeasurementKind;
use crate::error::{invalid, Result};
use crate::exec::Executor;
use crate::fisher::{FisherMatrix, Param};
use crate::linalg::{orthogonal_residual_sq, sym_eigen_desc};
use crate::math::{log, sqrt};
use crate::psf::{moments, overlaps, OverlapSet, PsfModel, PsfMoments};
use crate::qfi::qfim_closed_form;
use crate::scene::SourceParams;

/// Equilibrated condition number above which a matrix without an
/// information factor is flagged.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Diagonal entries below this fraction of the largest are treated as zero.
const ZERO_DIAGONAL: f64 = 1e-14;

/// Inverse variances per detection event, in `(s0, s, q)` order.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrecisionTriple {
    pub h: [f64; 3],
    pub degenerate: [bool; 3],
    /// The active block had no information factor and an equilibrated
    /// condition number of at least `1e12`.
    pub ill_conditioned: bool,
}

impl PrecisionTriple {
    pub fn get(&self, p: Param) -> f64 {
        self.h[p.index()]
    }

    pub fn h_s0(&self) -> f64 {
        self.h[0]
    }

    pub fn h_s(&self) -> f64 {
        self.h[1]
    }

    pub fn h_q(&self) -> f64 {
        self.h[2]
    }
}

/// `H_α = 1/(F⁻¹)_αα`.
///
/// Rows that are flagged degenerate, or whose diagonal vanishes, get
/// `H = 0` and a degenerate flag; the others are inverted as a block.
/// Each precision is the squared last diagonal entry of a triangular
/// information factor with `α` ordered last. Matrices built from score
/// samples carry that factor already; otherwise it comes from a Cholesky
/// (or, for semidefinite input, eigen) factorization of the diagonally
/// equilibrated block.
pub fn precisions(f: &FisherMatrix) -> PrecisionTriple {
    let e = f.entries();
    let max_diag = (0..3).map(|i| e[i][i]).fold(0.0f64, f64::max);
    let mut degenerate = f.degenerate();
    for (i, d) in degenerate.iter_mut().enumerate() {
        if !(e[i][i] > ZERO_DIAGONAL * max_diag) {
            *d = true;
        }
    }
    let active: Vec<usize> = (0..3).filter(|&i| !degenerate[i]).collect();
    let mut h = [0.0; 3];
    let mut ill_conditioned = false;
    if active.is_empty() {
        return PrecisionTriple {
            h,
            degenerate,
            ill_conditioned,
        };
    }
    let k = active.len();
    let (factor, scale) = match f.factor() {
        Some(r) => (DMatrix::from_fn(3, k, |i, j| r[i][active[j]]), [1.0; 3]),
        None => {
            let d: Vec<f64> = active.iter().map(|&i| 1.0 / sqrt(e[i][i])).collect();
            let fe = DMatrix::from_fn(k, k, |i, j| e[active[i]][active[j]] * d[i] * d[j]);
            let (vals, vecs) = sym_eigen_desc(fe.clone());
            let lo = vals[k - 1];
            if !(lo > 0.0) || vals[0] / lo >= CONDITION_LIMIT {
                ill_conditioned = true;
            }
            let r = match fe.cholesky() {
                Some(c) => c.l().transpose(),
                None => {
                    let root = DMatrix::from_fn(k, k, |i, j| if i == j { sqrt(vals[i].max(0.0)) } else { 0.0 });
                    root * vecs.transpose()
                }
            };
            let mut scale = [1.0; 3];
            for (j, &i) in active.iter().enumerate() {
                scale[i] = 1.0 / (d[j] * d[j]);
            }
            (r, scale)
        }
    };
    for (j, &i) in active.iter().enumerate() {
        h[i] = orthogonal_residual_sq(&factor, j) * scale[i];
    }
    PrecisionTriple {
        h,
        degenerate,
        ill_conditioned,
    }
}

/// Below this value of `s·sqrt(p2)` the numerator of
/// [`separation_precision_closed`] switches to its series.
pub const SERIES_SWITCH: f64 = 1e-3;

/// Closed-form separation precision
/// `H_s = p2 𝒬² (p2(1-w²) - m²) / (p2(1-w²) - 𝒬² m²)`.
///
/// The numerator cancels to `O(s⁴)`; for `s·sqrt(p2) < 1e-3` it is replaced
/// by its leading term `p2 Var(P²) s⁴ / 4`.
pub fn separation_precision_closed(ov: &OverlapSet, mom: &PsfMoments, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("brightness q must lie in [0, 1]"));
    }
    let bal = 4.0 * q * (1.0 - q);
    let p2 = mom.p2;
    if bal == 0.0 {
        return Ok(0.0);
    }
    if bal == 1.0 {
        return Ok(p2);
    }
    let s = ov.s;
    if s == 0.0 {
        return Ok(0.0);
    }
    let base = p2 * ov.one_minus_w2();
    let num = if s * sqrt(p2) < SERIES_SWITCH {
        0.25 * p2 * mom.var_p2 * s * s * s * s
    } else {
        base - ov.m * ov.m
    };
    let den = base - bal * ov.m * ov.m;
    Ok(p2 * bal * num / den)
}

/// Small-separation asymptotes:
/// `H_s0 ≈ 𝒬² Var(P²) s²`, `H_s ≈ 𝒬²/(4(1-𝒬²)) Var(P²) s²` (or `p2` at
/// `q = ½`), `H_q ≈ Var(P²) s⁴ / 𝒬²`.
pub fn asymptotic_precisions(mom: &PsfMoments, params: SourceParams) -> Result<PrecisionTriple> {
    params.validate()?;
    let bal = params.balance();
    let (s2, v) = (params.s * params.s, mom.var_p2);
    if bal == 0.0 {
        return Ok(PrecisionTriple {
            h: [0.0; 3],
            degenerate: [false, true, true],
            ill_conditioned: false,
        });
    }
    let h_s = if bal == 1.0 {
        mom.p2
    } else {
        bal / (4.0 * (1.0 - bal)) * v * s2
    };
    Ok(PrecisionTriple {
        h: [bal * v * s2, h_s, v * s2 * s2 / bal],
        degenerate: [false; 3],
        ill_conditioned: false,
    })
}

/// Least-squares fit of `log H = a + slope · log s`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// 95% confidence half-width (normal approximation).
    pub half_width: f64,
    pub points: usize,
}

pub fn loglog_slope(series: &[(f64, f64)]) -> Result<SlopeFit> {
    if series.len() < 5 {
        return Err(invalid("slope fit needs at least five points"));
    }
    if series.iter().any(|&(s, h)| !(s > 0.0) || !(h > 0.0)) {
        return Err(invalid("slope fit needs positive s and H"));
    }
    let n = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|p| log(p.0)).collect();
    let ys: Vec<f64> = series.iter().map(|p| log(p.1)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(invalid("slope fit needs distinct s values"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let stderr = sqrt(sse / (n - 2.0) / sxx);
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        half_width: 1.96 * stderr,
        points: series.len(),
    })
}

/// Grid and measurement list for [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub s_values: Vec<f64>,
    pub q_values: Vec<f64>,
    pub s0: f64,
    pub measurements: Vec<(String, MeasurementKind)>,
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub s: f64,
    pub q: f64,
    pub s0: f64,
    pub quantum: PrecisionTriple,
    /// One entry per measurement, in the order of [`SweepSpec::measurements`].
    pub classical: Vec<PrecisionTriple>,
}

/// Precisions over the `q × s` grid, `q`-major in the given order.
pub fn sweep<E: Executor>(exec: &E, psf: &PsfModel, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.s_values.is_empty() || spec.q_values.is_empty() {
        return Err(invalid("sweep needs at least one s and one q value"));
    }
    let mom = moments(psf)?;
    let ns = spec.s_values.len();
    let points = ns * spec.q_values.len();
    let rows = exec.map(points, |i| -> Result<SweepRow> {
        let q = spec.q_values[i / ns];
        let s = spec.s_values[i % ns];
        let params = SourceParams::new(spec.s0, s, q)?;
        let ov = overlaps(psf, s)?;
        let quantum = precisions(&qfim_closed_form(&ov, &mom, params)?);
        let classical = spec
            .measurements
            .iter()
            .map(|(_, kind)| kind.cfi(psf, params).map(|f| precisions(&f)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepRow {
            s,
            q,
            s0: spec.s0,
            quantum,
            classical,
        })
    });
    rows.into_iter().collect()
}
