//! Derivative-free local minimization (Nelder-Mead) with optional box bounds.
//!
//! Bounds are enforced by projecting every trial point onto the box, which
//! keeps the simplex feasible without penalty terms.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::fabs;

/// Nelder-Mead settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    /// Stop when the spread of objective values over the simplex falls below this.
    pub f_tol: f64,
    /// ... or when every vertex is within this distance of the best one.
    pub x_tol: f64,
    pub max_evals: usize,
    /// Edge length of the initial simplex, per coordinate.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            f_tol: 1e-10,
            x_tol: 1e-10,
            max_evals: 4000,
            initial_step: 0.25,
        }
    }
}

/// Result of [`NelderMead::minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// A tolerance was met before the evaluation budget ran out.
    pub converged: bool,
    /// Best value after each iteration (non-increasing).
    pub trace: Vec<f64>,
}

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((v, lo), hi)| *v >= *lo && *v <= *hi)
    }
}

impl NelderMead {
    /// Minimizes `f` from `x0`. Non-finite objective values are treated as `+∞`.
    pub fn minimize(&self, mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], bounds: Option<&Bounds>) -> Minimum {
        let n = x0.len();
        let evals = core::cell::Cell::new(0usize);
        let mut eval = |x: &mut Vec<f64>| {
            if let Some(b) = bounds {
                b.project(x);
            }
            evals.set(evals.get() + 1);
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        let mut start = x0.to_vec();
        let f0 = eval(&mut start);
        let mut simplex = vec![(start.clone(), f0)];
        for i in 0..n {
            let mut v = start.clone();
            let step = self.initial_step;
            v[i] += step;
            if let Some(b) = bounds {
                // Step inward when the vertex would leave the box.
                if v[i] > b.upper[i] {
                    v[i] = start[i] - step;
                }
            }
            let fv = eval(&mut v);
            simplex.push((v, fv));
        }
        let mut trace = Vec::new();
        let mut converged = false;
        if n == 0 {
            return Minimum {
                x: start,
                value: f0,
                evals: 1,
                converged: true,
                trace: vec![f0],
            };
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            trace.push(best);
            let worst = simplex[n].1;
            let spread = if worst.is_finite() {
                fabs(worst - best)
            } else {
                f64::INFINITY
            };
            let size = simplex[1..]
                .iter()
                .map(|(v, _)| {
                    v.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| fabs(a - b))
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if spread <= self.f_tol || size <= self.x_tol {
                converged = true;
                break;
            }
            if evals.get() >= self.max_evals {
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };
            let mut xr = along(-1.0);
            let fr = eval(&mut xr);
            if fr < simplex[0].1 {
                let mut xe = along(-2.0);
                let fe = eval(&mut xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (mut xc, t) = if fr < simplex[n].1 {
                (along(-0.5), fr)
            } else {
                (along(0.5), simplex[n].1)
            };
            let fc = eval(&mut xc);
            if fc < t {
                simplex[n] = (xc, fc);
                continue;
            }
            let x_best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let mut v: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                let fv = eval(&mut v);
                *vertex = (v, fv);
            }
        }
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            evals: evals.get(),
            converged,
            trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let nm = NelderMead {
            max_evals: 20_000,
            f_tol: 1e-14,
            x_tol: 1e-12,
            ..NelderMead::default()
        };
        let r = nm.minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            None,
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5);
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn respects_bounds() {
        let b = Bounds {
            lower: vec![0.5, -1.0],
            upper: vec![2.0, 1.0],
        };
        let r = NelderMead::default().minimize(|x| x[0] * x[0] + (x[1] - 3.0).powi(2), &[1.0, 0.0], Some(&b));
        assert!(b.contains(&r.x));
        assert!((r.x[0] - 0.5).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }
}
