//! Moment tensors `T_ℓ = Σ λᵢ uᵢ^{⊗ℓ}`, their contractions `M_ℓ^g`, and Hermite estimators.
//!
//! For `f = ⟨w,·⟩ + Σ λᵢ|⟨uᵢ,·⟩|` and the unnormalised Hermite tensor `H_ℓ(x)`,
//! `E[f(x)·H_ℓ(x)] = 2c_ℓ·ℓ!·T_ℓ` for even `ℓ ≥ 2` and `E[f(x)·x] = w`. The
//! estimators divide by exactly these constants.

use crate::error::{invalid, Error, Result};
use crate::hermite::{hermite_all, relu_hermite_coeff, HermiteBasisCache};
use crate::linalg::{factorial, is_unit};
use crate::network::{AbsNetwork, Evaluate, SampleSet};
use crate::tensor::{canonical_indices, occurrences};
pub use crate::tensor::SymTensor;
use nalgebra::{DMatrix, SymmetricEigen};

/// `M = T(g,…,g,·,·)`, tagged with the order and direction it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractedMatrix {
    pub order: usize,
    pub g: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

impl ContractedMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn op_norm(&self) -> f64 {
        op_norm(&self.matrix)
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

/// Spectral norm of a symmetric matrix.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.amax()
}

fn check_order(l: usize) -> Result<()> {
    if l == 0 || (l > 1 && l % 2 == 1) {
        return invalid(format!("order {l} is not 1 or even: odd Hermite coefficients of |z| vanish"));
    }
    if l > crate::hermite::MAX_DEGREE {
        return Err(Error::Capacity { what: "moment order".into(), needed: l as u64, limit: crate::hermite::MAX_DEGREE as u64 });
    }
    Ok(())
}

fn check_unit(g: &[f64]) -> Result<()> {
    if !is_unit(g, 1e-9) {
        return invalid("contraction direction must be a unit vector");
    }
    Ok(())
}

/// `ℓ = 1` gives `w`; even `ℓ` gives `Σ λᵢ uᵢ^{⊗ℓ}`.
pub fn exact_moment_tensor(net: &AbsNetwork, l: usize) -> Result<SymTensor> {
    check_order(l)?;
    if l == 1 {
        return Ok(SymTensor::from_vector(net.w().to_vec()));
    }
    SymTensor::from_fn(l, net.dim(), |idx| {
        net.neurons().iter().map(|n| n.weight * idx.iter().map(|&i| n.direction[i]).product::<f64>()).sum()
    })
}

/// `Σ λᵢ ⟨uᵢ,g⟩^{ℓ−2} uᵢuᵢ^⊤` directly from the parameters.
pub fn exact_contracted(net: &AbsNetwork, l: usize, g: &[f64]) -> Result<ContractedMatrix> {
    check_order(l)?;
    if l < 2 {
        return invalid("contraction needs order at least 2");
    }
    check_unit(g)?;
    let d = net.dim();
    let mut m = DMatrix::zeros(d, d);
    for n in net.neurons() {
        let u = nalgebra::DVector::from_column_slice(&n.direction);
        let c = n.weight * crate::linalg::dot(&n.direction, g).powi(l as i32 - 2);
        m += c * &u * u.transpose();
    }
    Ok(ContractedMatrix { order: l, g: g.to_vec(), matrix: m })
}

/// `M[a,b] = T(g,…,g,e_a,e_b)` summed over every index ordering.
pub fn contract(t: &SymTensor, g: &[f64]) -> Result<ContractedMatrix> {
    let l = t.order();
    if l < 2 {
        return invalid("contraction needs order at least 2");
    }
    if g.len() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), got: g.len() });
    }
    check_unit(g)?;
    let d = t.dim();
    let rest_fact = factorial(l - 2);
    let mut m = DMatrix::zeros(d, d);
    for (idx, &v) in t.indices().zip(t.values()) {
        if v == 0.0 {
            continue;
        }
        let occ = occurrences(&idx);
        for (pa, &(a, na)) in occ.iter().enumerate() {
            for &(b, _) in &occ[pa..] {
                if a == b && na < 2 {
                    continue;
                }
                let mut term = v * rest_fact;
                for &(c, nc) in &occ {
                    let r = nc - usize::from(c == a) - usize::from(c == b);
                    term *= g[c].powi(r as i32) / factorial(r);
                }
                m[(a, b)] += term;
                if a != b {
                    m[(b, a)] += term;
                }
            }
        }
    }
    Ok(ContractedMatrix { order: l, g: g.to_vec(), matrix: m })
}

/// `2c_ℓ·ℓ!`, the factor `E[f·H_ℓ]` carries for even `ℓ`; `1` for `ℓ = 1`.
pub fn estimator_scale(l: usize) -> f64 {
    if l == 1 {
        2.0 * relu_hermite_coeff(1)
    } else {
        2.0 * relu_hermite_coeff(l) * factorial(l)
    }
}

fn correlate(samples: &SampleSet, labels: &[f64], l: usize, normalized: bool) -> Result<SymTensor> {
    let d = samples.dim();
    let mut acc = SymTensor::zeros(l, d)?;
    let sqrt_fact: Vec<f64> = (0..=l).map(|n| factorial(n).sqrt()).collect();
    let plan: Vec<Vec<(usize, usize)>> = canonical_indices(l, d).map(|idx| occurrences(&idx)).collect();
    let mut table = vec![0.0; d * (l + 1)];
    for (i, &y) in labels.iter().enumerate() {
        if y == 0.0 {
            continue;
        }
        let x = samples.x(i);
        for (j, &xj) in x.iter().enumerate() {
            let row = &mut table[j * (l + 1)..(j + 1) * (l + 1)];
            hermite_all(xj, row);
            if normalized {
                for (h, s) in row.iter_mut().zip(&sqrt_fact) {
                    *h /= s;
                }
            }
        }
        for (slot, occ) in acc.values_mut().iter_mut().zip(&plan) {
            let mut p = y;
            for &(j, n) in occ {
                p *= table[j * (l + 1) + n];
            }
            *slot += p;
        }
    }
    acc.scale(1.0 / samples.len() as f64);
    Ok(acc)
}

fn normalized_estimate(samples: &SampleSet, labels: &[f64], l: usize) -> Result<SymTensor> {
    check_order(l)?;
    let mut t = correlate(samples, labels, l, false)?;
    t.scale(1.0 / estimator_scale(l));
    Ok(t)
}

/// Unbiased estimate of `T_ℓ` (even `ℓ`) or `w` (`ℓ = 1`):
/// `(1/(2c_ℓ·ℓ!·N)) Σ y·H_ℓ(x)` with the unnormalised Hermite tensor.
pub fn estimate_moments(samples: &SampleSet, l: usize) -> Result<SymTensor> {
    normalized_estimate(samples, samples.ys(), l)
}

/// The raw correlation `(1/N) Σ y·S_ℓ(x)` against the normalised Hermite tensor.
pub fn estimate_moments_raw(samples: &SampleSet, l: usize) -> Result<SymTensor> {
    check_order(l)?;
    correlate(samples, samples.ys(), l, true)
}

/// [`estimate_moments`] on the residual labels `y − learned(x)`.
pub fn estimate_residual_moments(samples: &SampleSet, learned: &AbsNetwork, l: usize) -> Result<SymTensor> {
    if learned.dim() != samples.dim() {
        return Err(Error::DimensionMismatch { expected: samples.dim(), got: learned.dim() });
    }
    let labels: Vec<f64> = samples.iter().map(|(x, y)| y - learned.eval_unchecked(x)).collect();
    normalized_estimate(samples, &labels, l)
}

/// Residual moments contracted along `g`, estimated without forming any tensor.
#[derive(Clone, Debug)]
pub struct ContractedEstimate {
    /// Estimate of the residual linear term.
    pub linear: Vec<f64>,
    pub matrices: Vec<ContractedMatrix>,
    /// Split-half estimate of each matrix's spectral error.
    pub noise: Vec<f64>,
    pub samples: usize,
}

/// Estimates `M_ℓ^g` of the residual `y − learned(x)` for every requested even order.
///
/// Uses `H_ℓ(x)(g,…,g,·,·) = [A·xxᵀ + B·(xgᵀ + gxᵀ) + C·ggᵀ + D·I]/(ℓ(ℓ−1))` with
/// scalars depending on `⟨g,x⟩` only, which is the Hessian of `s ↦ ⟨H_ℓ(x), s^{⊗ℓ}⟩` at `g`.
pub fn estimate_contracted(
    samples: &SampleSet,
    learned: Option<&AbsNetwork>,
    orders: &[usize],
    g: &[f64],
) -> Result<ContractedEstimate> {
    let d = samples.dim();
    if g.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: g.len() });
    }
    if let Some(h) = learned {
        if h.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: h.dim() });
        }
    }
    check_unit(g)?;
    for &l in orders {
        check_order(l)?;
        if l < 2 {
            return invalid("contracted orders must be even and at least 2");
        }
    }
    let cache = HermiteBasisCache::new(orders.iter().copied().max().unwrap_or(2))?;
    let polys: Vec<Vec<f64>> = orders.iter().map(|&l| cache.integer_coefficients(l).map(|c| c.iter().map(|&v| v as f64).collect())).collect::<Result<_>>()?;

    let no = orders.len();
    // Per half and order: Σ yA·xxᵀ (upper triangle), Σ yB·x, Σ yC, Σ yD.
    let tri = d * (d + 1) / 2;
    let mut sxx = vec![0.0; 2 * no * tri];
    let mut sx = vec![0.0; 2 * no * d];
    let mut sc = vec![0.0; 2 * no];
    let mut sd = vec![0.0; 2 * no];
    let mut lin = [vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 2];

    for (i, (x, y)) in samples.iter().enumerate() {
        let r = match learned {
            Some(h) => y - h.eval_unchecked(x),
            None => y,
        };
        let half = i % 2;
        counts[half] += 1;
        for (lj, xj) in lin[half].iter_mut().zip(x) {
            *lj += r * xj;
        }
        if r == 0.0 {
            continue;
        }
        let p = crate::linalg::dot(g, x);
        for (o, &l) in orders.iter().enumerate() {
            let (mut a, mut b, mut c, mut dd) = (0.0, 0.0, 0.0, 0.0);
            // Coefficient of p^n in H_ℓ is non-zero only for n = ℓ − 2m.
            for m in 0..=l / 2 {
                let n = l - 2 * m;
                let am = polys[o][n];
                let (nf, mf) = (n as f64, m as f64);
                let pn = p.powi(n as i32);
                if n >= 2 {
                    a += am * nf * (nf - 1.0) * p.powi(n as i32 - 2);
                }
                if n >= 1 {
                    b += am * 2.0 * mf * nf * p.powi(n as i32 - 1);
                }
                c += am * 4.0 * mf * (mf - 1.0) * pn;
                dd += am * 2.0 * mf * pn;
            }
            let base = (half * no + o) * tri;
            let ya = r * a;
            let mut t = 0;
            for u in 0..d {
                let xu = ya * x[u];
                for v in u..d {
                    sxx[base + t] += xu * x[v];
                    t += 1;
                }
            }
            let bx = &mut sx[(half * no + o) * d..(half * no + o + 1) * d];
            for (s, xj) in bx.iter_mut().zip(x) {
                *s += r * b * xj;
            }
            sc[half * no + o] += r * c;
            sd[half * no + o] += r * dd;
        }
    }

    let assemble = |half: Option<usize>, o: usize| -> DMatrix<f64> {
        let halves: Vec<usize> = match half {
            Some(h) => vec![h],
            None => vec![0, 1],
        };
        let n: usize = halves.iter().map(|&h| counts[h]).sum();
        let l = orders[o];
        let mut m = DMatrix::zeros(d, d);
        for &h in &halves {
            let base = (h * no + o) * tri;
            let mut t = 0;
            for u in 0..d {
                for v in u..d {
                    m[(u, v)] += sxx[base + t];
                    if u != v {
                        m[(v, u)] += sxx[base + t];
                    }
                    t += 1;
                }
            }
            let bx = &sx[(h * no + o) * d..(h * no + o + 1) * d];
            for u in 0..d {
                for v in 0..d {
                    m[(u, v)] += bx[u] * g[v] + g[u] * bx[v] + sc[h * no + o] * g[u] * g[v];
                }
                m[(u, u)] += sd[h * no + o];
            }
        }
        m / ((n.max(1) as f64) * (l * (l - 1)) as f64 * estimator_scale(l))
    };

    let mut matrices = Vec::with_capacity(no);
    let mut noise = Vec::with_capacity(no);
    for (o, &l) in orders.iter().enumerate() {
        let full = assemble(None, o);
        let spread = if counts[1] > 0 { op_norm(&((assemble(Some(0), o) - assemble(Some(1), o)) * 0.5)) } else { f64::INFINITY };
        matrices.push(ContractedMatrix { order: l, g: g.to_vec(), matrix: full });
        noise.push(spread);
    }
    let n = samples.len() as f64;
    let linear = (0..d).map(|j| (lin[0][j] + lin[1][j]) / n).collect();
    Ok(ContractedEstimate { linear, matrices, noise, samples: samples.len() })
}
