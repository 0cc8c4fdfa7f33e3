//! Power-sum separation estimate, its tightness family, the Vieta identity and
//! Vandermonde solves for sign-pattern interpolation.

use crate::error::{invalid, Error, Result};
use crate::linalg::binomial;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Constant multiplying `R·k·(k′−1)·β` in the power-sum bound, fixed by calibration.
pub const POWERSUM_C: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSumInstance {
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub k_close: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub r: f64,
}

impl PowerSumInstance {
    /// Checks the hypotheses. Separation between the close block and the rest is
    /// required on `|vᵢ|` as well as on `vᵢ`: with `v = (a, −a)` and `q = (1, −1)`
    /// every even power cancels, so the signed condition alone cannot suffice.
    pub fn validate(&self) -> Result<()> {
        let k = self.v.len();
        if k == 0 || self.q.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: self.q.len() });
        }
        if self.k_close == 0 || self.k_close > k {
            return invalid("need 1 ≤ k′ ≤ k");
        }
        for (name, p) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(p > 0.0 && p < 1.0) {
                return invalid(format!("{name} = {p} is outside (0, 1)"));
            }
        }
        if self.v.iter().any(|x| !(x.abs() <= 1.0)) {
            return invalid("v must lie in [−1, 1]");
        }
        if self.v[0].abs() < self.alpha {
            return invalid("|v₁| < α");
        }
        let kc = self.k_close;
        if self.v[..kc].iter().any(|x| (self.v[0] - x).abs() > self.beta) {
            return invalid("close entry further than β from v₁");
        }
        for i in 0..kc {
            for j in kc..k {
                let (a, b) = (self.v[i], self.v[j]);
                if (a - b).abs() < self.gamma || (a.abs() - b.abs()).abs() < self.gamma {
                    return invalid(format!("entries {i} and {j} closer than γ"));
                }
            }
        }
        if self.q[..kc].iter().sum::<f64>().abs() < self.tau {
            return invalid("|Σ_{i≤k′} qᵢ| < τ");
        }
        if self.q.iter().any(|x| x.abs() > self.r) {
            return invalid("‖q‖_∞ > R");
        }
        Ok(())
    }
}

/// `Σ qᵢ vᵢ^ℓ`.
pub fn power_correlation(v: &[f64], q: &[f64], l: u32) -> Result<f64> {
    if v.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), got: q.len() });
    }
    Ok(v.iter().zip(q).map(|(vi, qi)| qi * vi.powi(l as i32)).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub ell: u32,
    pub value: f64,
    pub bound: f64,
}

impl Witness {
    pub fn holds(&self) -> bool {
        self.value.abs() >= self.bound
    }
}

/// `(τ/2k)(α²γ²/4k)^k − C·R·k·(k′−1)·β`.
pub fn powersum_bound(inst: &PowerSumInstance, c: f64) -> f64 {
    let k = inst.v.len() as f64;
    let base = inst.alpha * inst.alpha * inst.gamma * inst.gamma / (4.0 * k);
    inst.tau / (2.0 * k) * base.powi(inst.v.len() as i32) - c * inst.r * k * (inst.k_close as f64 - 1.0) * inst.beta
}

/// Largest `|Σ qᵢvᵢ^ℓ|` over even `ℓ ≤ 2k`, with the bound it should dominate.
pub fn powersum_witness(inst: &PowerSumInstance, c: f64) -> Result<Witness> {
    inst.validate()?;
    let k = inst.v.len() as u32;
    let mut best = Witness { ell: 0, value: 0.0, bound: powersum_bound(inst, c) };
    for ell in (0..=2 * k).step_by(2) {
        let value = power_correlation(&inst.v, &inst.q, ell)?;
        if ell == 0 || value.abs() > best.value.abs() {
            best.ell = ell;
            best.value = value;
        }
    }
    Ok(best)
}

/// `v² = (1, 1−γ, …, 1−(k−1)γ)` and `q = ((k−1 choose 0), −(k−1 choose 1), …)`.
///
/// The `(k−1)`-th finite difference of `i ↦ (1−iγ)^m` vanishes for `m < k−1`, so
/// even correlations vanish for `ℓ < 2k−2`; at `ℓ = 2k−2` the value is `(k−1)!·γ^{k−1}`.
pub fn tightness_instance(k: usize, gamma: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 || !(gamma > 0.0) || (k - 1) as f64 * gamma >= 1.0 {
        return invalid("need k ≥ 1, γ > 0 and (k−1)γ < 1");
    }
    let v = (0..k).map(|i| (1.0 - i as f64 * gamma).sqrt()).collect();
    let q = (0..k)
        .map(|i| {
            let b = binomial(k as u64 - 1, i as u64) as f64;
            if i % 2 == 0 {
                b
            } else {
                -b
            }
        })
        .collect();
    Ok((v, q))
}

/// Elementary symmetric polynomials `e_0 … e_K` of `z`.
pub fn elementary_symmetric(z: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; z.len() + 1];
    e[0] = 1.0;
    for (n, &zi) in z.iter().enumerate() {
        for j in (1..=n + 1).rev() {
            e[j] += zi * e[j - 1];
        }
    }
    e
}

/// Largest relative residual of `z_i^K = Σ_{s<K} (−1)^{K−s+1} e_{K−s}(z) z_i^s`.
///
/// Each residual is scaled by the sum of absolute terms (at least one).
pub fn vieta_check(z: &[f64]) -> f64 {
    let k = z.len();
    let e = elementary_symmetric(z);
    z.iter()
        .map(|&zi| {
            let lhs = zi.powi(k as i32);
            let (mut rhs, mut mag) = (0.0, lhs.abs());
            for s in 0..k {
                let sign = if (k - s + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
                let t = sign * e[k - s] * zi.powi(s as i32);
                rhs += t;
                mag += t.abs();
            }
            (lhs - rhs).abs() / mag.max(1.0)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VandermondeSolution {
    pub alpha: Vec<f64>,
    pub residual: f64,
    pub alpha_norm: f64,
    /// `m(1/Δ)^{2m−2}‖c‖`.
    pub bound: f64,
    pub min_gap: f64,
}

/// Solves `Vα = c`, `V_{ij} = nodes_i^j`, by column-pivoted QR.
pub fn vandermonde_solve(nodes: &[f64], c: &[f64]) -> Result<VandermondeSolution> {
    let m = nodes.len();
    if m == 0 || c.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: c.len() });
    }
    let mut min_gap = f64::INFINITY;
    for i in 0..m {
        for j in 0..i {
            min_gap = min_gap.min((nodes[i] - nodes[j]).abs());
        }
    }
    if min_gap == 0.0 {
        return invalid("duplicate Vandermonde nodes");
    }
    let v = DMatrix::from_fn(m, m, |i, j| nodes[i].powi(j as i32));
    let rhs = DVector::from_column_slice(c);
    let alpha = v.clone().col_piv_qr().solve(&rhs).ok_or_else(|| Error::InvalidInput("singular Vandermonde system".into()))?;
    let residual = (&v * &alpha - &rhs).norm();
    let alpha_norm = alpha.norm();
    let gap = if m == 1 { 1.0 } else { min_gap };
    let bound = m as f64 * (1.0 / gap).powi(2 * m as i32 - 2) * rhs.norm();
    Ok(VandermondeSolution { alpha: alpha.as_slice().to_vec(), residual, alpha_norm, bound, min_gap })
}

/// Coefficients with `Σ_s α_s·nodeᵢ^s = signᵢ`.
pub fn sign_pattern_coeffs(nodes: &[f64], signs: &[f64]) -> Result<VandermondeSolution> {
    if signs.iter().any(|s| s.abs() != 1.0) {
        return invalid("signs must be ±1");
    }
    vandermonde_solve(nodes, signs)
}
