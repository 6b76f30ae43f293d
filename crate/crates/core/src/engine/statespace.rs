//! Harvey's state-space form of a zero-mean ARMA process and its stationary
//! initial covariance.
//!
//! With `r = max(p, q + 1)`, AR coefficients `a₁..a_r` and MA coefficients
//! `b₁..b_{r-1}` (both zero padded), the state evolves as
//! `α_{t+1} = T α_t + R ε_{t+1}` where `T` has `a` in its first column and
//! ones on the superdiagonal, `R = (1, b₁, …, b_{r-1})ᵀ`, and `y_t = α_t[0]`.

use crate::scalar::Scalar;

use super::order::roots_outside_unit_circle;
use super::EngineError;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceForm<T> {
    /// `a₁..a_r`, the first column of the transition matrix.
    pub(crate) ar: Vec<T>,
    /// `(1, b₁, …, b_{r-1})`.
    pub(crate) loading: Vec<T>,
}

impl<T: Scalar> StateSpaceForm<T> {
    /// Builds the form from expanded lag polynomials (constant term first).
    pub fn from_polynomials(ar_poly: &[T], ma_poly: &[T]) -> Self {
        let p = ar_poly.len() - 1;
        let q = ma_poly.len() - 1;
        let r = p.max(q + 1);
        let mut ar = vec![T::zero(); r];
        for (i, &c) in ar_poly[1..].iter().enumerate() {
            ar[i] = -c;
        }
        let mut loading = vec![T::zero(); r];
        loading[..=q].copy_from_slice(ma_poly);
        Self { ar, loading }
    }

    pub fn dim(&self) -> usize {
        self.ar.len()
    }

    /// Dense row-major transition matrix.
    pub fn transition(&self) -> Vec<T> {
        let r = self.dim();
        let mut t = vec![T::zero(); r * r];
        for i in 0..r {
            t[i * r] = self.ar[i];
            if i + 1 < r {
                t[i * r + i + 1] = T::one();
            }
        }
        t
    }

    /// Observation vector `Z = (1, 0, …, 0)`.
    pub fn observation(&self) -> Vec<T> {
        let mut z = vec![T::zero(); self.dim()];
        z[0] = T::one();
        z
    }

    pub fn loading(&self) -> &[T] {
        &self.loading
    }

    fn ar_lag_poly(&self) -> Vec<T> {
        std::iter::once(T::one())
            .chain(self.ar.iter().map(|&a| -a))
            .collect()
    }

    pub fn is_stationary(&self) -> bool {
        roots_outside_unit_circle(&self.ar_lag_poly())
    }

    /// Applies `X ↦ T X Tᵀ + R Rᵀ` in place to a symmetric row-major matrix.
    #[cfg(test)]
    pub(crate) fn propagate(&self, cov: &mut [T], row0: &mut Vec<T>) {
        let r = self.dim();
        row0.clear();
        row0.extend_from_slice(&cov[..r]);
        let u00 = row0[0];
        // Ascending order only reads entries (i+1, j+1) that are still unwritten.
        for i in 0..r {
            let ai = self.ar[i];
            let below = |j: usize| -> T {
                if i + 1 < r && j + 1 < r {
                    cov[(i + 1) * r + j + 1]
                } else {
                    T::zero()
                }
            };
            let mut new_row = Vec::with_capacity(r);
            for j in 0..r {
                let aj = self.ar[j];
                let first_row = if j + 1 < r { row0[j + 1] } else { T::zero() };
                let first_col = if i + 1 < r { row0[i + 1] } else { T::zero() };
                new_row.push(
                    ai * aj * u00
                        + ai * first_row
                        + aj * first_col
                        + below(j)
                        + self.loading[i] * self.loading[j],
                );
            }
            cov[i * r..(i + 1) * r].copy_from_slice(&new_row);
        }
    }

    /// ψ-weights `ψ₀..ψ_{count-1}` of the causal MA(∞) representation.
    pub fn psi_weights(&self, count: usize) -> Vec<T> {
        psi_weights(&self.ar, &self.loading[1..], count)
    }

    /// Stationary covariance of the state for unit innovation variance.
    ///
    /// Computed from the process autocovariances: the first row is
    /// `Cov(y_t, α_t[j])`, and the remaining entries follow from the
    /// fixed-point identity `P = T P Tᵀ + R Rᵀ` read from the bottom-right
    /// corner upwards.
    pub fn stationary_covariance(&self) -> Result<Vec<T>, EngineError> {
        if !self.is_stationary() {
            return Err(EngineError::NonStationaryRegion);
        }
        let r = self.dim();
        let b = &self.loading;
        let gamma = arma_autocovariance(&self.ar, &b[1..], r)?;
        let psi = self.psi_weights(r);
        let mut row0 = vec![T::zero(); r];
        row0[0] = gamma[0];
        for j in 1..r {
            let mut acc = T::zero();
            for k in (j + 1)..=r {
                acc += self.ar[k - 1] * gamma[k - j];
            }
            for k in j..r {
                acc += b[k] * psi[k - j];
            }
            row0[j] = acc;
        }
        let mut p = vec![T::zero(); r * r];
        p[..r].copy_from_slice(&row0);
        for i in 1..r {
            p[i * r] = row0[i];
        }
        let at = |p: &[T], i: usize, j: usize| -> T {
            if i < r && j < r {
                p[i * r + j]
            } else {
                T::zero()
            }
        };
        for i in (1..r).rev() {
            for j in (i..r).rev() {
                let ai = self.ar[i];
                let aj = self.ar[j];
                let v = ai * aj * row0[0]
                    + ai * at(&p, 0, j + 1)
                    + aj * at(&p, i + 1, 0)
                    + at(&p, i + 1, j + 1)
                    + b[i] * b[j];
                p[i * r + j] = v;
                p[j * r + i] = v;
            }
        }
        Ok(p)
    }
}

/// ψ-weights for `y_t = Σ aᵢ y_{t-i} + ε_t + Σ bⱼ ε_{t-j}`.
pub fn psi_weights<T: Scalar>(ar: &[T], ma: &[T], count: usize) -> Vec<T> {
    let mut psi = Vec::with_capacity(count);
    for j in 0..count {
        let mut v = if j == 0 {
            T::one()
        } else if j <= ma.len() {
            ma[j - 1]
        } else {
            T::zero()
        };
        for i in 1..=ar.len().min(j) {
            v += ar[i - 1] * psi[j - i];
        }
        psi.push(v);
    }
    psi
}

/// Autocovariances `γ₀..γ_{max_lag}` for unit innovation variance.
pub(crate) fn arma_autocovariance<T: Scalar>(
    ar: &[T],
    ma: &[T],
    max_lag: usize,
) -> Result<Vec<T>, EngineError> {
    let p = ar.len();
    let q = ma.len();
    let psi = psi_weights(ar, ma, q + 1);
    let b = |j: usize| if j == 0 { T::one() } else { ma[j - 1] };
    // c_k = Σ_{j=k}^{q} b_j ψ_{j-k}
    let c: Vec<T> = (0..=q)
        .map(|k| (k..=q).map(|j| b(j) * psi[j - k]).sum())
        .collect();
    let ck = |k: usize| if k <= q { c[k] } else { T::zero() };

    let m = p + 1;
    let mut a = vec![T::zero(); m * m];
    let mut rhs: Vec<T> = (0..m).map(ck).collect();
    for k in 0..m {
        a[k * m + k] += T::one();
        for i in 1..=p {
            let lag = k.abs_diff(i);
            a[k * m + lag] -= ar[i - 1];
        }
    }
    let head = solve_dense(&mut a, &mut rhs, m)?;
    let mut gamma = head;
    for k in m..=max_lag {
        let mut v = ck(k);
        for i in 1..=p {
            v += ar[i - 1] * gamma[k - i];
        }
        gamma.push(v);
    }
    gamma.truncate(max_lag + 1);
    Ok(gamma)
}

/// Gaussian elimination with partial pivoting; consumes `a` and `b`.
fn solve_dense<T: Scalar>(a: &mut [T], b: &mut [T], m: usize) -> Result<Vec<T>, EngineError> {
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| {
                a[x * m + col]
                    .abs()
                    .partial_cmp(&a[y * m + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        let pv = a[pivot * m + col];
        if !(pv.abs() > T::epsilon()) {
            return Err(EngineError::NonStationaryRegion);
        }
        if pivot != col {
            for k in 0..m {
                a.swap(col * m + k, pivot * m + k);
            }
            b.swap(col, pivot);
        }
        for row in (col + 1)..m {
            let f = a[row * m + col] / pv;
            if f == T::zero() {
                continue;
            }
            for k in col..m {
                let v = a[col * m + k];
                a[row * m + k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![T::zero(); m];
    for row in (0..m).rev() {
        let mut acc = b[row];
        for k in (row + 1)..m {
            acc -= a[row * m + k] * x[k];
        }
        x[row] = acc / a[row * m + row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::order::{expand_polynomials, CoefficientSet, ModelOrder};

    fn form(order: ModelOrder, x: &[f64]) -> StateSpaceForm<f64> {
        let c = CoefficientSet::from_vector(&order, x, 1.0).unwrap();
        let (ar, ma) = expand_polynomials(&order, &c).unwrap();
        StateSpaceForm::from_polynomials(&ar, &ma)
    }

    // Independent route: P = Σ_k Tᵏ R Rᵀ (Tᵀ)ᵏ by repeated doubling.
    fn doubling_covariance(ss: &StateSpaceForm<f64>) -> Vec<f64> {
        let r = ss.dim();
        let t = ss.transition();
        let mul = |x: &[f64], y: &[f64]| {
            let mut out = vec![0.0; r * r];
            for i in 0..r {
                for k in 0..r {
                    let v = x[i * r + k];
                    for j in 0..r {
                        out[i * r + j] += v * y[k * r + j];
                    }
                }
            }
            out
        };
        let transpose = |x: &[f64]| {
            let mut out = vec![0.0; r * r];
            for i in 0..r {
                for j in 0..r {
                    out[j * r + i] = x[i * r + j];
                }
            }
            out
        };
        let mut p: Vec<f64> = (0..r * r)
            .map(|idx| ss.loading[idx / r] * ss.loading[idx % r])
            .collect();
        let mut a = t;
        for _ in 0..40 {
            let apa = mul(&mul(&a, &p), &transpose(&a));
            for (x, y) in p.iter_mut().zip(apa) {
                *x += y;
            }
            a = mul(&a, &a);
        }
        p
    }

    #[test]
    fn ar1_variance() {
        let ss = form(ModelOrder::arima(1, 0, 0), &[0.5]);
        let p = ss.stationary_covariance().unwrap();
        assert!((p[0] - 1.0 / 0.75).abs() < 1e-14);
    }

    #[test]
    fn ma1_covariance() {
        let ss = form(ModelOrder::arima(0, 0, 1), &[0.4]);
        let p = ss.stationary_covariance().unwrap();
        // state (y_t, θ ε_t)
        assert!((p[0] - 1.16).abs() < 1e-14);
        assert!((p[1] - 0.4).abs() < 1e-14);
        assert!((p[3] - 0.16).abs() < 1e-14);
    }

    #[test]
    fn matches_doubling_and_solves_lyapunov() {
        let cases: Vec<(ModelOrder, Vec<f64>)> = vec![
            (ModelOrder::arima(2, 0, 1), vec![0.5, -0.3, 0.4]),
            (ModelOrder::new((1, 0, 1), (1, 0, 1), 4), vec![0.6, -0.2, 0.3, 0.5]),
            (ModelOrder::new((1, 0, 0), (1, 0, 0), 12), vec![0.5, 0.3]),
            (ModelOrder::new((0, 0, 2), (0, 0, 1), 12), vec![0.3, 0.2, -0.6]),
            (ModelOrder::new((3, 0, 2), (2, 0, 1), 3), vec![0.2, 0.1, -0.1, 0.3, 0.1, 0.2, -0.1, 0.4]),
        ];
        for (order, x) in cases {
            let ss = form(order, &x);
            let p = ss.stationary_covariance().unwrap();
            let oracle = doubling_covariance(&ss);
            for (a, b) in p.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{order}: {a} vs {b}");
            }
            let mut next = p.clone();
            let mut scratch = Vec::new();
            ss.propagate(&mut next, &mut scratch);
            for (a, b) in next.iter().zip(&p) {
                assert!((a - b).abs() < 1e-10, "{order}");
            }
        }
    }

    #[test]
    fn non_stationary_is_signalled() {
        let ss = form(ModelOrder::arima(1, 0, 0), &[1.0]);
        assert!(matches!(
            ss.stationary_covariance(),
            Err(EngineError::NonStationaryRegion)
        ));
    }

    #[test]
    fn psi_weights_of_arma11() {
        let ss = form(ModelOrder::arima(1, 0, 1), &[0.5, 0.4]);
        let psi = ss.psi_weights(4);
        assert_eq!(psi[0], 1.0);
        assert!((psi[1] - 0.9).abs() < 1e-15);
        assert!((psi[2] - 0.45).abs() < 1e-15);
        assert!((psi[3] - 0.225).abs() < 1e-15);
    }
}
