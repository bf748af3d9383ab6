//! Natural cubic splines on uniform grids.
//!
//! Sampled PSFs and sampled mode functions are interpolated with these.
//! Outside the sampled range a spline (and all its derivatives) is zero.
//! Products of two splines are piecewise polynomials of degree six, so
//! [`product_integral`] integrates them exactly with a four-point
//! Gauss-Legendre rule on every piece between merged breakpoints.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::quad::GL4;

/// Uniform sampling grid `x_i = start + i * step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || len < 2 {
            return Err(invalid("uniform grid needs a positive step and at least two points"));
        }
        Ok(Self { start, step, len })
    }

    /// Grid covering `[lo, hi]` with spacing at most `max_step`.
    pub fn covering(lo: f64, hi: f64, max_step: f64) -> Result<Self> {
        if !(hi > lo) || !(max_step > 0.0) {
            return Err(invalid("empty grid range"));
        }
        let intervals = libm::ceil((hi - lo) / max_step) as usize;
        Self::new(lo, (hi - lo) / intervals as f64, intervals + 1)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.x(self.len - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.x(i))
    }

    /// Trapezoid-rule inner product of two sample vectors on this grid.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.len;
        let inner: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        self.step * (inner - 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]))
    }
}

/// Natural cubic spline through uniformly spaced samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    grid: UniformGrid,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len {
            return Err(invalid("sample count does not match grid length"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite sample"));
        }
        let n = grid.len;
        let h2 = grid.step * grid.step;
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for M[i-1] + 4 M[i] + M[i+1] = 6 d2y / h^2.
            let m = n - 2;
            let mut diag = vec![4.0; m];
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2)
                .collect();
            for i in 1..m {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - second[i + 2]) / diag[i];
            }
        }
        Ok(Self { grid, values, second })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let g = &self.grid;
        if !(x >= g.start && x <= g.end()) {
            return None;
        }
        let pos = (x - g.start) / g.step;
        let i = (libm::floor(pos) as usize).min(g.len - 2);
        Some((i, pos - i as f64))
    }

    /// Value (`order = 0`) or derivative of order 1 to 3 at `x`.
    pub fn eval(&self, x: f64, order: usize) -> f64 {
        let Some((i, t)) = self.locate(x) else {
            return 0.0;
        };
        let h = self.grid.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let a = 1.0 - t;
        let b = t;
        match order {
            0 => a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0,
            1 => (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1,
            2 => a * m0 + b * m1,
            3 => (m1 - m0) / h,
            _ => 0.0,
        }
    }

    /// Knot positions.
    pub fn knots(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.points()
    }

    /// Exact integral of the squared spline over `[lo, hi]`.
    pub fn squared_integral(&self, lo: f64, hi: f64) -> f64 {
        product_integral(self, 0, self, 0, 0.0, Some((lo, hi)))
    }
}

/// Exact `∫ f^(df)(x) g^(dg)(x + shift) dx`, optionally restricted to `window`.
pub fn product_integral(
    f: &CubicSpline,
    df: usize,
    g: &CubicSpline,
    dg: usize,
    shift: f64,
    window: Option<(f64, f64)>,
) -> f64 {
    let mut lo = f.grid.start.max(g.grid.start - shift);
    let mut hi = f.grid.end().min(g.grid.end() - shift);
    if let Some((a, b)) = window {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(hi > lo) {
        return 0.0;
    }
    let mut breaks: Vec<f64> = f
        .knots()
        .chain(g.knots().map(|k| k - shift))
        .filter(|&k| k > lo && k < hi)
        .collect();
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            GL4.iter()
                .map(|&(t, wt)| {
                    let x = c + h * t;
                    wt * f.eval(x, df) * g.eval(x + shift, dg)
                })
                .sum::<f64>()
                * h
        })
        .sum()
}

/// Exact `∫ (f(x) - f(x + shift))² dx` over the whole real line.
///
/// Computed directly from the difference so that small shifts do not lose
/// precision to cancellation.
pub fn shifted_difference_sq(f: &CubicSpline, shift: f64) -> f64 {
    let lo = f.grid.start.min(f.grid.start - shift);
    let hi = f.grid.end().max(f.grid.end() - shift);
    let mut breaks: Vec<f64> = f.knots().chain(f.knots().map(|k| k - shift)).collect();
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
        .windows(2)
        .map(|w| {
            let c = 0.5 * (w[0] + w[1]);
            let h = 0.5 * (w[1] - w[0]);
            GL4.iter()
                .map(|&(t, wt)| {
                    let x = c + h * t;
                    let d = f.eval(x, 0) - f.eval(x + shift, 0);
                    wt * d * d
                })
                .sum::<f64>()
                * h
        })
        .sum()
}

/// `∫ g(x) f(x)² dx` with `g` smooth, by Gauss-Legendre on half knot intervals.
pub fn weighted_square_integral(f: &CubicSpline, g: impl Fn(f64) -> f64) -> f64 {
    let grid = f.grid;
    let half = 0.5 * grid.step;
    (0..2 * (grid.len - 1))
        .map(|i| {
            let c = grid.start + half * (i as f64 + 0.5);
            let h = 0.5 * half;
            GL4.iter()
                .map(|&(t, wt)| {
                    let x = c + h * t;
                    let v = f.eval(x, 0);
                    wt * g(x) * v * v
                })
                .sum::<f64>()
                * h
        })
        .sum()
}
