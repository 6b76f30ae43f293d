use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::EngineError;

/// SARIMA order `(p,d,q)(P,D,Q)_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_d: usize,
    pub seasonal_q: usize,
    pub period: usize,
}

impl ModelOrder {
    pub fn new(
        (p, d, q): (usize, usize, usize),
        (seasonal_p, seasonal_d, seasonal_q): (usize, usize, usize),
        period: usize,
    ) -> Self {
        Self {
            p,
            d,
            q,
            seasonal_p,
            seasonal_d,
            seasonal_q,
            period,
        }
    }

    /// Non-seasonal ARMA(p, q) with ordinary differencing `d`.
    pub fn arima(p: usize, d: usize, q: usize) -> Self {
        Self::new((p, d, q), (0, 0, 0), 12)
    }

    /// Degree of the expanded AR polynomial, `p + s*P`.
    pub fn ar_degree(&self) -> usize {
        self.p + self.period * self.seasonal_p
    }

    /// Degree of the expanded MA polynomial, `q + s*Q`.
    pub fn ma_degree(&self) -> usize {
        self.q + self.period * self.seasonal_q
    }

    /// Number of AR/MA coefficients (variance and mean excluded).
    pub fn n_coefficients(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    pub fn n_seasonal(&self) -> usize {
        self.seasonal_p + self.seasonal_q
    }

    pub fn state_dim(&self) -> usize {
        self.ar_degree().max(self.ma_degree() + 1)
    }

    /// Observations consumed by differencing.
    pub fn lost(&self) -> usize {
        self.d + self.seasonal_d * self.period
    }

    pub fn is_differenced(&self) -> bool {
        self.d + self.seasonal_d > 0
    }
}

impl fmt::Display for ModelOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{})({},{},{})[{}]",
            self.p, self.d, self.q, self.seasonal_p, self.seasonal_d, self.seasonal_q, self.period
        )
    }
}

/// Estimated or simulated SARIMA coefficients.
///
/// Sign conventions: the AR side is `(1 - φ₁B - …)(1 - Φ₁Bˢ - …)` and the MA
/// side is `(1 + θ₁B + …)(1 + Θ₁Bˢ + …)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSet<T> {
    pub phi: Vec<T>,
    pub theta: Vec<T>,
    pub sphi: Vec<T>,
    pub stheta: Vec<T>,
    pub sigma2: T,
    /// Process mean; only meaningful for undifferenced models.
    pub mean: Option<T>,
}

pub const SIGN_CONVENTION: &str =
    "AR: (1 - phi_1 B - ...)(1 - Phi_1 B^s - ...); MA: (1 + theta_1 B + ...)(1 + Theta_1 B^s + ...)";

impl<T: Scalar> CoefficientSet<T> {
    /// All coefficients zero, unit variance.
    pub fn zeros(order: &ModelOrder) -> Self {
        Self {
            phi: vec![T::zero(); order.p],
            theta: vec![T::zero(); order.q],
            sphi: vec![T::zero(); order.seasonal_p],
            stheta: vec![T::zero(); order.seasonal_q],
            sigma2: T::one(),
            mean: None,
        }
    }

    /// Unpacks `[phi.., theta.., sphi.., stheta..]`.
    pub fn from_vector(order: &ModelOrder, x: &[T], sigma2: T) -> Result<Self, EngineError> {
        if x.len() != order.n_coefficients() {
            return Err(EngineError::ShapeMismatch(format!(
                "{} parameters for order {order}",
                x.len()
            )));
        }
        let (phi, rest) = x.split_at(order.p);
        let (theta, rest) = rest.split_at(order.q);
        let (sphi, stheta) = rest.split_at(order.seasonal_p);
        Ok(Self {
            phi: phi.to_vec(),
            theta: theta.to_vec(),
            sphi: sphi.to_vec(),
            stheta: stheta.to_vec(),
            sigma2,
            mean: None,
        })
    }

    pub fn to_vector(&self) -> Vec<T> {
        self.phi
            .iter()
            .chain(&self.theta)
            .chain(&self.sphi)
            .chain(&self.stheta)
            .copied()
            .collect()
    }

    pub fn check_shape(&self, order: &ModelOrder) -> Result<(), EngineError> {
        let ok = self.phi.len() == order.p
            && self.theta.len() == order.q
            && self.sphi.len() == order.seasonal_p
            && self.stheta.len() == order.seasonal_q;
        if ok {
            Ok(())
        } else {
            Err(EngineError::ShapeMismatch(format!(
                "coefficient counts ({}, {}, {}, {}) do not match order {order}",
                self.phi.len(),
                self.theta.len(),
                self.sphi.len(),
                self.stheta.len()
            )))
        }
    }
}

/// Names matching [`CoefficientSet::to_vector`] ordering.
pub fn coefficient_labels(order: &ModelOrder) -> Vec<String> {
    let mut labels = Vec::with_capacity(order.n_coefficients());
    labels.extend((1..=order.p).map(|i| format!("ar{i}")));
    labels.extend((1..=order.q).map(|i| format!("ma{i}")));
    labels.extend((1..=order.seasonal_p).map(|i| format!("sar{i}")));
    labels.extend((1..=order.seasonal_q).map(|i| format!("sma{i}")));
    labels
}

fn multiply<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == T::zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn lag_polynomial<T: Scalar>(coeffs: &[T], step: usize, sign: T) -> Vec<T> {
    let mut poly = vec![T::zero(); coeffs.len() * step + 1];
    poly[0] = T::one();
    for (i, &c) in coeffs.iter().enumerate() {
        poly[(i + 1) * step] = sign * c;
    }
    poly
}

/// Expanded AR and MA lag polynomials, constant term first.
pub fn expand_polynomials<T: Scalar>(
    order: &ModelOrder,
    coeffs: &CoefficientSet<T>,
) -> Result<(Vec<T>, Vec<T>), EngineError> {
    coeffs.check_shape(order)?;
    let s = order.period;
    let ar = multiply(
        &lag_polynomial(&coeffs.phi, 1, -T::one()),
        &lag_polynomial(&coeffs.sphi, s, -T::one()),
    );
    let ma = multiply(
        &lag_polynomial(&coeffs.theta, 1, T::one()),
        &lag_polynomial(&coeffs.stheta, s, T::one()),
    );
    Ok((ar, ma))
}

/// Multiplies `poly` by `(1 - B)^d (1 - B^s)^D`.
pub fn integrate_polynomial<T: Scalar>(poly: &[T], d: usize, seasonal_d: usize, period: usize) -> Vec<T> {
    let mut out = poly.to_vec();
    for _ in 0..d {
        out = multiply(&out, &[T::one(), -T::one()]);
    }
    let seasonal = lag_polynomial(&[T::one()], period, -T::one());
    for _ in 0..seasonal_d {
        out = multiply(&out, &seasonal);
    }
    out
}

/// Schur-Cohn step-down test: every root of `1 + c₁z + … + cₘzᵐ` lies
/// strictly outside the unit circle. `poly[0]` must be 1.
pub fn roots_outside_unit_circle<T: Scalar>(poly: &[T]) -> bool {
    let mut a: Vec<T> = poly[1..].iter().map(|&c| -c).collect();
    while a.last().is_some_and(|c| *c == T::zero()) {
        a.pop();
    }
    let one = T::one();
    while let Some(&k) = a.last() {
        if !(k.abs() < one) {
            return false;
        }
        let m = a.len();
        let denom = one - k * k;
        let next: Vec<T> = (0..m - 1)
            .map(|j| (a[j] + k * a[m - 2 - j]) / denom)
            .collect();
        a = next;
    }
    true
}
