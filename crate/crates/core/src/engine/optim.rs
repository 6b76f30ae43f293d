//! Derivative-free minimisation and finite-difference curvature.

use crate::scalar::{precision_floor, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions<T> {
    /// Offset of each initial simplex vertex from the start point.
    pub initial_step: T,
    /// Converged once `f_max - f_min <= reltol * (|f_min| + reltol)`.
    pub reltol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self {
            initial_step: T::of(0.1),
            reltol: T::of(1e-8),
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult<T> {
    pub x: Vec<T>,
    pub fx: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn converged<T: Scalar>(lo: T, hi: T, tol: T) -> bool {
    hi - lo <= tol * (lo.abs() + tol)
}

/// Nelder-Mead simplex search with the standard coefficients
/// (reflection 1, expansion 2, contraction ½, shrink ½).
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], opts: &NelderMeadOptions<T>) -> OptimResult<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = x0.len();
    let tol = precision_floor(opts.reltol);
    let mut evaluations = 0usize;
    let mut eval = |x: &[T], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };
    if n == 0 {
        let fx = eval(x0, &mut evaluations);
        return OptimResult {
            x: Vec::new(),
            fx,
            iterations: 0,
            evaluations,
            converged: true,
        };
    }

    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<T> = simplex.iter().map(|v| eval(v, &mut evaluations)).collect();

    let half = T::of(0.5);
    let two = T::of(2.0);
    let mut iterations = 0;
    let mut done = false;
    let mut centroid = vec![T::zero(); n];
    let mut trial = vec![T::zero(); n];
    let mut trial2 = vec![T::zero(); n];

    while iterations < opts.max_iter {
        // order vertices by value; ties keep index order for determinism
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        if converged(values[0], values[n], tol) {
            done = true;
            break;
        }
        iterations += 1;

        for c in centroid.iter_mut() {
            *c = T::zero();
        }
        for v in &simplex[..n] {
            for (c, &x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        let inv = T::one() / T::of_usize(n);
        for c in centroid.iter_mut() {
            *c *= inv;
        }

        let worst = &simplex[n];
        for k in 0..n {
            trial[k] = centroid[k] + (centroid[k] - worst[k]);
        }
        let fr = eval(&trial, &mut evaluations);

        if fr < values[0] {
            for k in 0..n {
                trial2[k] = centroid[k] + two * (centroid[k] - worst[k]);
            }
            let fe = eval(&trial2, &mut evaluations);
            if fe < fr {
                simplex[n].copy_from_slice(&trial2);
                values[n] = fe;
            } else {
                simplex[n].copy_from_slice(&trial);
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n].copy_from_slice(&trial);
            values[n] = fr;
            continue;
        }
        // contraction, outside if the reflection improved on the worst point
        let outside = fr < values[n];
        for k in 0..n {
            trial2[k] = if outside {
                centroid[k] + half * (trial[k] - centroid[k])
            } else {
                centroid[k] + half * (simplex[n][k] - centroid[k])
            };
        }
        let fc = eval(&trial2, &mut evaluations);
        if fc < fr.min(values[n]) {
            simplex[n].copy_from_slice(&trial2);
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for k in 0..n {
                simplex[i][k] = best[k] + half * (simplex[i][k] - best[k]);
            }
            values[i] = eval(&simplex[i], &mut evaluations);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    OptimResult {
        x: simplex[best].clone(),
        fx: values[best],
        iterations,
        evaluations,
        converged: done,
    }
}

/// Central-difference Hessian with per-coordinate steps `h_i`.
///
/// Returns `None` if any evaluation is non-finite.
pub fn central_hessian<T, F>(mut f: F, x: &[T], h: &[T]) -> Option<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = x.len();
    let mut hess = vec![T::zero(); n * n];
    let f0 = f(x);
    if !f0.is_finite() {
        return None;
    }
    let mut probe = x.to_vec();
    let mut at = |deltas: &[(usize, T)], probe: &mut Vec<T>| -> Option<T> {
        probe.copy_from_slice(x);
        for &(i, d) in deltas {
            probe[i] += d;
        }
        let v = f(probe);
        v.is_finite().then_some(v)
    };
    let two = T::of(2.0);
    let four = T::of(4.0);
    for i in 0..n {
        let fp = at(&[(i, h[i])], &mut probe)?;
        let fm = at(&[(i, -h[i])], &mut probe)?;
        hess[i * n + i] = (fp - two * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let fpp = at(&[(i, h[i]), (j, h[j])], &mut probe)?;
            let fpm = at(&[(i, h[i]), (j, -h[j])], &mut probe)?;
            let fmp = at(&[(i, -h[i]), (j, h[j])], &mut probe)?;
            let fmm = at(&[(i, -h[i]), (j, -h[j])], &mut probe)?;
            let v = (fpp - fpm - fmp + fmm) / (four * h[i] * h[j]);
            hess[i * n + j] = v;
            hess[j * n + i] = v;
        }
    }
    Some(hess)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
///
/// Returns `None` when the factorisation meets a non-positive pivot.
pub fn invert_spd<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    // L⁻¹ by forward substitution, then A⁻¹ = L⁻ᵀ L⁻¹
    let mut linv = vec![T::zero(); n * n];
    for i in 0..n {
        linv[i * n + i] = T::one() / l[i * n + i];
        for j in 0..i {
            let mut s = T::zero();
            for k in j..i {
                s += l[i * n + k] * linv[k * n + j];
            }
            linv[i * n + j] = -s / l[i * n + i];
        }
    }
    let mut inv = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = T::zero();
            for k in i..n {
                s += linv[k * n + i] * linv[k * n + j];
            }
            inv[i * n + j] = s;
            inv[j * n + i] = s;
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            reltol: 1e-14,
            max_iter: 5000,
            ..Default::default()
        };
        let res = nelder_mead(f, &[-1.2, 1.0], &opts);
        assert!(res.converged);
        assert!((res.x[0] - 1.0).abs() < 1e-3 && (res.x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_dimensional_problem() {
        let res = nelder_mead(|_: &[f64]| 3.0, &[], &NelderMeadOptions::default());
        assert_eq!(res.fx, 3.0);
        assert!(res.converged);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let f = |x: &[f64]| x.iter().map(|v| (v - 5.0).powi(2)).sum::<f64>();
        let opts = NelderMeadOptions {
            max_iter: 3,
            ..Default::default()
        };
        let res = nelder_mead(f, &[0.0, 0.0, 0.0], &opts);
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
    }

    #[test]
    fn hessian_of_quadratic() {
        // f = x'Ax/2 with A = [[2, 0.5], [0.5, 1]]
        let f = |x: &[f64]| 0.5 * (2.0 * x[0] * x[0] + x[0] * x[1] + x[1] * x[1]);
        let h = central_hessian(f, &[0.3, -0.2], &[1e-4, 1e-4]).unwrap();
        let expected = [2.0, 0.5, 0.5, 1.0];
        for (a, b) in h.iter().zip(expected) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn cholesky_inverse() {
        let a = [4.0, 2.0, 0.6, 2.0, 2.0, 0.5, 0.6, 0.5, 3.0];
        let inv = invert_spd(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((v - target).abs() < 1e-12);
            }
        }
        assert!(invert_spd(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }
}
