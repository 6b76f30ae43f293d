use serde::Serialize;

use crate::scalar::Scalar;

use super::order::{expand_polynomials, CoefficientSet, ModelOrder};
use super::EngineError;

/// Roots must satisfy `|z| > 1 + ROOT_MARGIN`.
pub const ROOT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootReport<T> {
    /// `(re, im)` pairs of the AR polynomial roots.
    pub ar_roots: Vec<(T, T)>,
    pub ma_roots: Vec<(T, T)>,
    /// `None` for a constant polynomial.
    pub ar_min_modulus: Option<T>,
    pub ma_min_modulus: Option<T>,
    pub ar_ok: bool,
    pub ma_ok: bool,
}

impl<T: Scalar> RootReport<T> {
    pub fn passes(&self) -> bool {
        self.ar_ok && self.ma_ok
    }
}

/// Roots of `poly[0] + poly[1] z + … + poly[m] zᵐ` with `poly[0] != 0`.
///
/// Computed as reciprocals of the eigenvalues of the companion matrix of the
/// reversed polynomial, so exact zero roots cannot occur. Returns `None` if
/// the eigenvalue iteration fails to converge.
pub fn polynomial_roots<T: Scalar>(poly: &[T]) -> Option<Vec<(T, T)>> {
    let mut c: Vec<f64> = poly.iter().map(|v| v.as_f64()).collect();
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    let m = c.len() - 1;
    if m == 0 {
        return Some(Vec::new());
    }
    let lead = c[0];
    // w = 1/z solves w^m + (c1/c0) w^{m-1} + … + cm/c0 = 0
    let mut comp = vec![vec![0.0; m + 1]; m + 1];
    for j in 1..=m {
        comp[1][j] = -c[j] / lead;
    }
    for i in 2..=m {
        comp[i][i - 1] = 1.0;
    }
    let eig = hessenberg_eigenvalues(&mut comp, m)?;
    Some(
        eig.into_iter()
            .map(|(re, im)| {
                let d = re * re + im * im;
                (T::of(re / d), T::of(-im / d))
            })
            .collect(),
    )
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the shifted double-step QR
/// iteration with exceptional shifts. `a` is 1-based with size `n + 1`.
#[allow(clippy::many_single_char_names)]
fn hessenberg_eigenvalues(a: &mut [Vec<f64>], n: usize) -> Option<Vec<(f64, f64)>> {
    const MAX_ITS: usize = 60;
    let n = n as i64;
    let mut wr = vec![0.0; n as usize + 1];
    let mut wi = vec![0.0; n as usize + 1];
    let at = |i: i64| i as usize;
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i - 1).max(1)..=n {
            anorm += a[at(i)][at(j)].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[at(l - 1)][at(l - 1)].abs() + a[at(l)][at(l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[at(l)][at(l - 1)].abs() + s == s {
                    a[at(l)][at(l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[at(nn)][at(nn)];
            if l == nn {
                wr[at(nn)] = x + t;
                wi[at(nn)] = 0.0;
                nn -= 1;
            } else {
                let mut y = a[at(nn - 1)][at(nn - 1)];
                let mut w = a[at(nn)][at(nn - 1)] * a[at(nn - 1)][at(nn)];
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[at(nn - 1)] = x + z;
                        wr[at(nn)] = if z != 0.0 { x - w / z } else { x + z };
                        wi[at(nn - 1)] = 0.0;
                        wi[at(nn)] = 0.0;
                    } else {
                        wr[at(nn - 1)] = x + p;
                        wr[at(nn)] = x + p;
                        wi[at(nn - 1)] = -z;
                        wi[at(nn)] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_ITS {
                        return None;
                    }
                    if its % 10 == 0 && its > 0 {
                        // exceptional shift breaks cycles among equal-modulus eigenvalues
                        t += x;
                        for i in 1..=nn {
                            a[at(i)][at(i)] -= x;
                        }
                        let s = a[at(nn)][at(nn - 1)].abs() + a[at(nn - 1)][at(nn - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    let mut z;
                    loop {
                        z = a[at(m)][at(m)];
                        r = x - z;
                        let s0 = y - z;
                        p = (r * s0 - w) / a[at(m + 1)][at(m)] + a[at(m)][at(m + 1)];
                        q = a[at(m + 1)][at(m + 1)] - z - r - s0;
                        r = a[at(m + 2)][at(m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[at(m)][at(m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs()
                            * (a[at(m - 1)][at(m - 1)].abs() + z.abs() + a[at(m + 1)][at(m + 1)].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nn {
                        a[at(i)][at(i - 2)] = 0.0;
                        if i != m + 2 {
                            a[at(i)][at(i - 3)] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k <= nn - 1 {
                        if k != m {
                            p = a[at(k)][at(k - 1)];
                            q = a[at(k + 1)][at(k - 1)];
                            r = if k != nn - 1 { a[at(k + 2)][at(k - 1)] } else { 0.0 };
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[at(k)][at(k - 1)] = -a[at(k)][at(k - 1)];
                                }
                            } else {
                                a[at(k)][at(k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a[at(k)][at(j)] + q * a[at(k + 1)][at(j)];
                                if k != nn - 1 {
                                    p += r * a[at(k + 2)][at(j)];
                                    a[at(k + 2)][at(j)] -= p * z;
                                }
                                a[at(k + 1)][at(j)] -= p * y;
                                a[at(k)][at(j)] -= p * x;
                            }
                            let mmin = nn.min(k + 3);
                            for i in l..=mmin {
                                p = x * a[at(i)][at(k)] + y * a[at(i)][at(k + 1)];
                                if k != nn - 1 {
                                    p += z * a[at(i)][at(k + 2)];
                                    a[at(i)][at(k + 2)] -= p * r;
                                }
                                a[at(i)][at(k + 1)] -= p * q;
                                a[at(i)][at(k)] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if !(l < nn - 1) {
                break;
            }
        }
    }
    Some((1..=n as usize).map(|i| (wr[i], wi[i])).collect())
}

fn min_modulus<T: Scalar>(roots: &[(T, T)]) -> Option<T> {
    roots
        .iter()
        .map(|&(re, im)| re.hypot(im))
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.min(v))))
}

/// Stationarity (AR) and invertibility (MA) check on the expanded polynomials.
pub fn check_roots<T: Scalar>(
    order: &ModelOrder,
    coeffs: &CoefficientSet<T>,
) -> Result<RootReport<T>, EngineError> {
    let (ar, ma) = expand_polynomials(order, coeffs)?;
    let solve = |p: &[T]| {
        polynomial_roots(p).ok_or_else(|| {
            EngineError::NumericalFailure(format!("root finding did not converge for {order}"))
        })
    };
    let ar_roots = solve(&ar)?;
    let ma_roots = solve(&ma)?;
    let ar_min_modulus = min_modulus(&ar_roots);
    let ma_min_modulus = min_modulus(&ma_roots);
    let threshold = T::of(1.0 + ROOT_MARGIN);
    let ok = |m: Option<T>| m.map_or(true, |v| v > threshold);
    Ok(RootReport {
        ar_ok: ok(ar_min_modulus),
        ma_ok: ok(ma_min_modulus),
        ar_roots,
        ma_roots,
        ar_min_modulus,
        ma_min_modulus,
    })
}
