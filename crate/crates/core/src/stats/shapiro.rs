//! Shapiro-Wilk W test with Royston's AS R94 coefficient and p-value
//! approximations, valid for 3 <= n <= 5000.

use crate::scalar::Scalar;

use super::{normal_quantile, normal_sf, StatsError, TestName, TestOutcome};

const C1: [f64; 6] = [0.0, 0.221_157, -0.147_981, -2.071_19, 4.434_685, -2.706_056];
const C2: [f64; 6] = [0.0, 0.042_981, -0.293_762, -1.752_461, 5.682_633, -3.582_633];
const C3: [f64; 4] = [0.544, -0.399_78, 0.025_054, -6.714e-4];
const C4: [f64; 4] = [1.382_2, -0.778_57, 0.062_767, -0.002_032_2];
const C5: [f64; 4] = [-1.586_1, -0.310_82, -0.083_751, 0.003_891_5];
const C6: [f64; 3] = [-0.480_3, -0.082_676, 0.003_030_2];
const G: [f64; 2] = [-2.273, 0.459];

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 5000;

/// `c[0] + c[1] x + c[2] x^2 + ...`
fn poly<T: Scalar>(c: &[f64], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &v| acc * x + T::of(v))
}

/// Half of the antisymmetric coefficient vector (largest weight first).
fn coefficients<T: Scalar>(n: usize) -> Result<Vec<T>, StatsError> {
    let half = n / 2;
    if n == 3 {
        return Ok(vec![T::of(0.5).sqrt()]);
    }
    let an = T::of_usize(n);
    let an25 = an + T::of(0.25);
    let m = (1..=half)
        .map(|i| normal_quantile((T::of_usize(i) - T::of(0.375)) / an25))
        .collect::<Result<Vec<T>, _>>()?;
    let summ2 = T::of(2.0) * m.iter().map(|&v| v * v).sum::<T>();
    let ssumm2 = summ2.sqrt();
    let rsn = T::one() / an.sqrt();
    let two = T::of(2.0);
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut a = vec![T::zero(); half];
    let (first_scaled, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - two * m[0] * m[0] - two * m[1] * m[1])
            / (T::one() - two * a1 * a1 - two * a2 * a2))
            .sqrt();
        a[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - two * m[0] * m[0]) / (T::one() - two * a1 * a1)).sqrt();
        (1, fac)
    };
    a[0] = a1;
    for i in first_scaled..half {
        a[i] = -m[i] / fac;
    }
    Ok(a)
}

/// Shapiro-Wilk normality test.
///
/// The statistic is computed as the squared correlation between the sorted
/// sample and the AS R94 weights, `1 - W` being formed directly to avoid
/// cancellation near 1. The p-value is a lower-tail probability in `W`.
pub fn shapiro_wilk<T: Scalar>(x: &[T]) -> Result<TestOutcome<T>, StatsError> {
    let n = x.len();
    if !(MIN_N..=MAX_N).contains(&n) {
        return Err(StatsError::SampleSizeOutOfRange(n));
    }
    let mut sorted = x.to_vec();
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let range = sorted[n - 1] - sorted[0];
    let small = T::of(1e-19).max(T::min_positive_value());
    if range < small || range <= sorted[n - 1].abs().max(sorted[0].abs()) * T::epsilon() {
        return Err(StatsError::DegenerateSeries);
    }

    let a = coefficients::<T>(n)?;
    let weight = |i: usize| -> T {
        let j = n - 1 - i;
        if i < j {
            -a[i]
        } else if i > j {
            a[j]
        } else {
            T::zero()
        }
    };
    let nf = T::of_usize(n);
    let wmean = (0..n).map(weight).sum::<T>() / nf;
    let scaled: Vec<T> = sorted.iter().map(|&v| v / range).collect();
    let xmean = scaled.iter().copied().sum::<T>() / nf;
    let (mut ssa, mut ssx, mut sax) = (T::zero(), T::zero(), T::zero());
    for (i, &xi) in scaled.iter().enumerate() {
        let asa = weight(i) - wmean;
        let xsx = xi - xmean;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = T::one() - w1;

    let p_value = if n == 3 {
        // exact for n = 3
        let pi6 = T::of(6.0) / T::PI();
        let stqr = T::PI() / T::of(3.0);
        (pi6 * (w.sqrt().asin() - stqr)).max(T::zero())
    } else {
        let y = w1.ln();
        let ln_n = nf.ln();
        if n <= 11 {
            let gamma = poly(&G, nf);
            if y >= gamma {
                T::zero()
            } else {
                let y = -(gamma - y).ln();
                let m = poly(&C3, nf);
                let s = poly(&C4, nf).exp();
                normal_sf((y - m) / s)
            }
        } else {
            let m = poly(&C5, ln_n);
            let s = poly(&C6, ln_n).exp();
            normal_sf((y - m) / s)
        }
    };

    Ok(TestOutcome {
        test: TestName::ShapiroWilk,
        statistic: w,
        df_or_n: n,
        p_value: p_value.max(T::zero()).min(T::one()),
    })
}
