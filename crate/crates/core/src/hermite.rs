//! Probabilist's Hermite polynomials, Hermite tensors and the ReLU Hermite coefficients.
//!
//! `H_n` satisfies `H_{n+1}(x) = x·H_n(x) − n·H_{n−1}(x)` and `Ĥ_n = H_n/√(n!)` is
//! orthonormal under the standard Gaussian. The ReLU coefficients returned by
//! [`relu_hermite_coeff`] are in the unnormalised basis, `relu(z) = Σ c_ℓ H_ℓ(z)`,
//! so `E[relu(z)·H_ℓ(z)] = ℓ!·c_ℓ` and `E[relu(z)·Ĥ_ℓ(z)] = √(ℓ!)·c_ℓ`.

use crate::error::{Error, Result};
use crate::tensor::{occurrences, SymTensor};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Degree limit of the shared cache. Integer coefficients of `H_30` still fit in `i64`.
pub const MAX_DEGREE: usize = 30;

#[derive(Clone, Debug)]
pub struct HermiteBasisCache {
    max_degree: usize,
    integer: Vec<Vec<i64>>,
    coeffs: Vec<Vec<f64>>,
    sqrt_factorial: Vec<f64>,
}

impl HermiteBasisCache {
    pub fn new(max_degree: usize) -> Result<Self> {
        if max_degree > MAX_DEGREE {
            return Err(Error::Capacity { what: "Hermite degree".into(), needed: max_degree as u64, limit: MAX_DEGREE as u64 });
        }
        let mut integer: Vec<Vec<i64>> = vec![vec![1]];
        if max_degree >= 1 {
            integer.push(vec![0, 1]);
        }
        for n in 1..max_degree {
            let mut next = vec![0i64; n + 2];
            for (p, &c) in integer[n].iter().enumerate() {
                next[p + 1] += c;
            }
            for (p, &c) in integer[n - 1].iter().enumerate() {
                next[p] -= n as i64 * c;
            }
            integer.push(next);
        }
        let coeffs = integer.iter().map(|row| row.iter().map(|&c| c as f64).collect()).collect();
        let mut sqrt_factorial = vec![1.0; max_degree + 1];
        for n in 1..=max_degree {
            sqrt_factorial[n] = sqrt_factorial[n - 1] * (n as f64).sqrt();
        }
        Ok(Self { max_degree, integer, coeffs, sqrt_factorial })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Exact integer coefficients of `H_n`, lowest power first.
    pub fn integer_coefficients(&self, n: usize) -> Result<&[i64]> {
        self.check(n)?;
        Ok(&self.integer[n])
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.max_degree {
            return Err(Error::Capacity { what: "Hermite degree".into(), needed: n as u64, limit: self.max_degree as u64 });
        }
        Ok(())
    }

    pub fn eval(&self, n: usize, x: f64) -> Result<f64> {
        self.check(n)?;
        Ok(self.coeffs[n].iter().rev().fold(0.0, |acc, &c| acc * x + c))
    }

    pub fn eval_normalized(&self, n: usize, x: f64) -> Result<f64> {
        Ok(self.eval(n, x)? / self.sqrt_factorial[n])
    }

    pub fn sqrt_factorial(&self, n: usize) -> f64 {
        self.sqrt_factorial[n]
    }
}

fn shared() -> &'static HermiteBasisCache {
    static CACHE: OnceLock<HermiteBasisCache> = OnceLock::new();
    CACHE.get_or_init(|| HermiteBasisCache::new(MAX_DEGREE).expect("static degree within limit"))
}

pub fn hermite_eval(n: usize, x: f64) -> Result<f64> {
    shared().eval(n, x)
}

pub fn hermite_normalized_eval(n: usize, x: f64) -> Result<f64> {
    shared().eval_normalized(n, x)
}

/// Fills `out[n] = H_n(x)` for `n < out.len()` by the three-term recurrence.
pub fn hermite_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for n in 1..out.len().saturating_sub(1) {
        out[n + 1] = x * out[n] - n as f64 * out[n - 1];
    }
}

fn tensor_with(order: usize, x: &[f64], normalized: bool) -> Result<SymTensor> {
    if order > MAX_DEGREE {
        return Err(Error::Capacity { what: "Hermite tensor order".into(), needed: order as u64, limit: MAX_DEGREE as u64 });
    }
    let cache = shared();
    let mut table = vec![0.0; x.len() * (order + 1)];
    for (j, &xj) in x.iter().enumerate() {
        hermite_all(xj, &mut table[j * (order + 1)..(j + 1) * (order + 1)]);
    }
    SymTensor::from_fn(order, x.len(), |idx| {
        occurrences(idx)
            .into_iter()
            .map(|(j, n)| {
                let h = table[j * (order + 1) + n];
                if normalized {
                    h / cache.sqrt_factorial(n)
                } else {
                    h
                }
            })
            .product()
    })
}

/// Hermite tensor `S_ℓ(x)`: entry `(i_1,…,i_ℓ)` is `∏_j Ĥ_{n_j}(x_j)`.
pub fn hermite_tensor(order: usize, x: &[f64]) -> Result<SymTensor> {
    tensor_with(order, x, true)
}

/// Unnormalised Hermite tensor, entries `∏_j H_{n_j}(x_j)`.
pub fn hermite_tensor_unnormalized(order: usize, x: &[f64]) -> Result<SymTensor> {
    tensor_with(order, x, false)
}

fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Coefficient `c_ℓ` of `relu(z) = Σ c_ℓ H_ℓ(z)`.
///
/// `c_0 = 1/√(2π)`, `c_1 = 1/2`, odd `ℓ ≥ 3` vanish and
/// `c_{2k} = (−1)^{k+1}(2k−3)!!/(√(2π)(2k)!)`.
pub fn relu_hermite_coeff(l: usize) -> f64 {
    let s = (2.0 * PI).sqrt();
    match l {
        0 => 1.0 / s,
        1 => 0.5,
        _ if l % 2 == 1 => 0.0,
        _ => {
            let k = (l / 2) as i64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * double_factorial(2 * k - 3) / (s * crate::linalg::factorial(l))
        }
    }
}

/// `E[relu(z)·Ĥ_ℓ(z)] = √(ℓ!)·c_ℓ`, the coefficient in the orthonormal basis.
pub fn relu_hermite_coeff_normalized(l: usize) -> f64 {
    relu_hermite_coeff(l) * crate::linalg::factorial(l).sqrt()
}

/// Coefficient of `|z| = relu(z) + relu(−z)` on `H_ℓ`: `2c_ℓ` for even `ℓ`, zero for odd.
pub fn abs_hermite_coeff(l: usize) -> f64 {
    if l.is_multiple_of(2) {
        2.0 * relu_hermite_coeff(l)
    } else {
        0.0
    }
}

/// Gauss–Hermite rule for the standard Gaussian (Golub–Welsch), weights summing to one.
/// Exact for polynomials of degree below `2n`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64).sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)] * eig.eigenvectors[(0, i)])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_values() {
        assert_eq!(hermite_eval(0, 5.0).unwrap(), 1.0);
        assert_eq!(hermite_eval(2, 2.0).unwrap(), 3.0);
        assert_eq!(hermite_eval(3, 2.0).unwrap(), 2.0);
        assert!((hermite_normalized_eval(2, 2.0).unwrap() - 3.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(hermite_normalized_eval(1, -0.7).unwrap(), -0.7);
    }

    #[test]
    fn recurrence_exact_on_tables() {
        let c = HermiteBasisCache::new(MAX_DEGREE).unwrap();
        for n in 1..MAX_DEGREE {
            let next = c.integer_coefficients(n + 1).unwrap();
            let cur = c.integer_coefficients(n).unwrap();
            let prev = c.integer_coefficients(n - 1).unwrap();
            for p in 0..=n + 1 {
                let shifted = if p >= 1 { cur.get(p - 1).copied().unwrap_or(0) } else { 0 };
                let lower = prev.get(p).copied().unwrap_or(0);
                assert_eq!(next[p], shifted - n as i64 * lower);
            }
        }
    }

    #[test]
    fn degree_above_cache_is_capacity_error() {
        let c = HermiteBasisCache::new(4).unwrap();
        assert!(matches!(c.eval(5, 1.0), Err(Error::Capacity { .. })));
        assert!(HermiteBasisCache::new(MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn recurrence_and_horner_agree() {
        let mut out = vec![0.0; 13];
        hermite_all(1.3, &mut out);
        for (n, v) in out.iter().enumerate() {
            assert!((v - hermite_eval(n, 1.3).unwrap()).abs() < 1e-9 * v.abs().max(1.0));
        }
    }

    #[test]
    fn tensor_small_cases() {
        let (a, b) = (0.3, -1.7);
        let t = hermite_tensor(2, &[a, b]).unwrap();
        assert!((t.get(&[0, 0]).unwrap() - (a * a - 1.0) / 2f64.sqrt()).abs() < 1e-15);
        assert!((t.get(&[0, 1]).unwrap() - a * b).abs() < 1e-15);
        let v = hermite_tensor(1, &[a, b]).unwrap();
        assert_eq!(v.values(), &[a, b]);
    }

    #[test]
    fn relu_coefficients() {
        let s = (2.0 * PI).sqrt();
        assert_eq!(relu_hermite_coeff(0), 1.0 / s);
        assert_eq!(relu_hermite_coeff(1), 0.5);
        assert_eq!(relu_hermite_coeff(3), 0.0);
        assert!((relu_hermite_coeff(2) - 1.0 / (2.0 * s)).abs() < 1e-16);
        assert!((relu_hermite_coeff(4) + 1.0 / (24.0 * s)).abs() < 1e-16);
    }

    #[test]
    fn quadrature_integrates_moments() {
        let (x, w) = gauss_hermite(20);
        let m = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(6) - 15.0).abs() < 1e-10);
    }
}
