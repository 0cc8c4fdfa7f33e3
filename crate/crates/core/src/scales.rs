//! Projection along a random direction and the multiscale calculus on the
//! projected values: `T(γ)`, close/far sets, gapped scales, detectability and
//! the level function `L`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{add, dot, is_unit, norm, sub};
use crate::network::{AbsNetwork, UNIT_TOL};
use serde::{Deserialize, Serialize};

/// Lower constant of the anti-concentration window.
pub const ANTI_C: f64 = 0.05;
/// Upper constant of the anti-concentration window.
pub const ANTI_C_PRIME: f64 = 3.0;
/// Default `C₀` in `ε′ = ε/(C₀·d²k³R)`.
pub const EPS_PRIME_C0: f64 = 0.05;
pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_C_T: f64 = 1.5;
pub const DEFAULT_GAMMA_FLOOR: f64 = 1e-200;
/// Constant in the observation margin `C/(k·ln d)`.
pub const OBSERVATION_MARGIN_C: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub eps_prime: f64,
    pub lambda: f64,
    pub gamma_floor: f64,
    pub c_t: f64,
    pub r: f64,
    pub d: usize,
    pub k: usize,
    pub xi: f64,
    pub xi_prime: f64,
}

impl ScaleParams {
    /// Defaults for small instances: `ε′ = ε/(C₀d²k³R)` clipped below one.
    pub fn desk(eps: f64, d: usize, k: usize, r: f64) -> Result<Self> {
        let scale = EPS_PRIME_C0 * (d * d) as f64 * (k * k * k) as f64 * r;
        let p = Self {
            eps_prime: (eps / scale).min(0.5),
            lambda: DEFAULT_LAMBDA,
            gamma_floor: DEFAULT_GAMMA_FLOOR,
            c_t: DEFAULT_C_T,
            r,
            d,
            k,
            xi: eps * eps,
            xi_prime: eps * eps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.eps_prime, self.lambda, self.gamma_floor, self.c_t, self.r, self.xi, self.xi_prime];
        if positive.iter().any(|x| !(*x > 0.0)) || self.d == 0 || self.k == 0 {
            return invalid("scale parameters must be positive");
        }
        if !(self.gamma_floor < self.eps_prime && self.eps_prime < 1.0) {
            return invalid("need γ̲ < ε′ < 1");
        }
        if self.lambda >= 1.0 {
            return invalid("need Λ < 1");
        }
        if self.exponent() <= 1.0 {
            return invalid("need c_T·k > 1");
        }
        Ok(())
    }

    /// `c_T·k`.
    pub fn exponent(&self) -> f64 {
        self.c_t * self.k as f64
    }

    fn log_prefactor(&self) -> f64 {
        10.0 * self.lambda.ln() - 2.0 * self.r.ln()
    }

    fn level_denominator(&self) -> f64 {
        let kk = self.exponent();
        kk * (self.d as f64).ln() - self.log_prefactor() + (kk - 1.0) * (1.0 / self.eps_prime).ln()
    }
}

/// `Λ = ξ^{1/k^{ln k}}`, the default tie between moment accuracy and the detection threshold.
pub fn lambda_from_xi(xi: f64, k: usize) -> f64 {
    let kf = (k.max(2)) as f64;
    xi.powf(1.0 / kf.powf(kf.ln()))
}

/// `T(γ) = (Λ¹⁰/R²)(γ/d)^{c_T·k}`.
pub fn t_of(gamma: f64, p: &ScaleParams) -> f64 {
    (p.log_prefactor() + p.exponent() * (gamma / p.d as f64).ln()).exp()
}

/// Level of a separation `γ`, normalised so that `L(ε′) = 0` and `L(T(γ)) = L(γ) + 0.9`.
///
/// `L(0) = +∞`; separations so large that the log argument is non-positive get `−∞`.
pub fn level(gamma: f64, p: &ScaleParams) -> f64 {
    if gamma <= 0.0 {
        return f64::INFINITY;
    }
    let kk = p.exponent();
    let arg = 1.0 + (kk - 1.0) * (p.eps_prime.ln() - gamma.ln()) / p.level_denominator();
    if arg <= 0.0 {
        return f64::NEG_INFINITY;
    }
    0.9 / kk.ln() * arg.ln()
}

/// Largest drop `L(γ_s) − L(γ₁ + … + γ_s)` allowed for `s ≤ k` sorted scales with `L(γ_s) > 1`.
pub fn observation_margin(p: &ScaleParams) -> f64 {
    OBSERVATION_MARGIN_C / (p.k as f64 * (p.d.max(2) as f64).ln())
}

/// Inverse of [`level`].
pub fn level_inverse(l: f64, p: &ScaleParams) -> f64 {
    let kk = p.exponent();
    let x = ((l * kk.ln() / 0.9).exp() - 1.0) * p.level_denominator() / (kk - 1.0);
    p.eps_prime * (-x).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub g: Vec<f64>,
    /// `|⟨uᵢ, g⟩|`, ascending.
    pub v: Vec<f64>,
    /// Original neuron index of each entry of `v`.
    pub index: Vec<usize>,
    pub weight: Vec<f64>,
}

impl Projection {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn spread(&self) -> f64 {
        match (self.v.first(), self.v.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Restriction to the given positions, keeping order.
    pub fn restrict(&self, positions: &[usize]) -> Self {
        let mut pos = positions.to_vec();
        pos.sort_unstable();
        pos.dedup();
        Self {
            g: self.g.clone(),
            v: pos.iter().map(|&p| self.v[p]).collect(),
            index: pos.iter().map(|&p| self.index[p]).collect(),
            weight: pos.iter().map(|&p| self.weight[p]).collect(),
        }
    }
}

/// Builds a projection from raw values, sorting and remembering the permutation.
pub fn projection_from_values(g: Vec<f64>, values: &[f64], weights: &[f64]) -> Result<Projection> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: weights.len() });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()).then(a.cmp(&b)));
    Ok(Projection {
        g,
        v: order.iter().map(|&i| values[i].abs()).collect(),
        weight: order.iter().map(|&i| weights[i]).collect(),
        index: order,
    })
}

pub fn project(net: &AbsNetwork, g: &[f64]) -> Result<Projection> {
    if g.len() != net.dim() {
        return Err(Error::DimensionMismatch { expected: net.dim(), got: g.len() });
    }
    if !is_unit(g, UNIT_TOL) {
        return invalid(format!("projection direction has norm {}", norm(g)));
    }
    let values: Vec<f64> = net.neurons().iter().map(|n| dot(&n.direction, g)).collect();
    let weights: Vec<f64> = net.neurons().iter().map(|n| n.weight).collect();
    projection_from_values(g.to_vec(), &values, &weights)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntiConcentration {
    pub pairs: bool,
    pub floor: bool,
}

/// Checks the pairwise window `c/(√d·k²) ≤ |⟨uᵢ±u_j, g⟩|/‖uᵢ±u_j‖ ≤ c′√(ln k)/√d` and the
/// floor `|⟨uᵢ, g⟩| ≥ c/(k√d)`. Coincident or antipodal pairs are skipped.
pub fn check_anticoncentration(us: &[Vec<f64>], g: &[f64], c: f64, c_prime: f64) -> AntiConcentration {
    let k = us.len().max(1) as f64;
    let sd = (g.len() as f64).sqrt();
    let floor = us.iter().all(|u| dot(u, g).abs() >= c / (k * sd));
    let (lo, hi) = (c / (sd * k * k), c_prime * k.ln().sqrt() / sd);
    let mut pairs = true;
    'outer: for i in 0..us.len() {
        for j in 0..i {
            for diff in [sub(&us[i], &us[j]), add(&us[i], &us[j])] {
                let n = norm(&diff);
                if n == 0.0 {
                    continue;
                }
                let r = dot(&diff, g).abs() / n;
                if r < lo || r > hi {
                    pairs = false;
                    break 'outer;
                }
            }
        }
    }
    AntiConcentration { pairs, floor }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloseFar {
    pub close: Vec<usize>,
    pub far: Vec<usize>,
    pub gapped: bool,
}

/// Positions within `T(γ)` of position `i` and positions at least `γ` away.
pub fn close_far_sets(proj: &Projection, i: usize, gamma: f64, p: &ScaleParams) -> Result<CloseFar> {
    if i >= proj.len() {
        return invalid(format!("position {i} outside projection of length {}", proj.len()));
    }
    let t = t_of(gamma, p);
    let (mut close, mut far) = (Vec::new(), Vec::new());
    for (j, &vj) in proj.v.iter().enumerate() {
        let dv = (vj - proj.v[i]).abs();
        if dv <= t {
            close.push(j);
        }
        if dv >= gamma {
            far.push(j);
        }
    }
    let gapped = close.len() + far.len() == proj.len();
    Ok(CloseFar { close, far, gapped })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    /// Position in the projection.
    pub index: usize,
    pub gamma: f64,
    pub close: Vec<usize>,
    pub far: Vec<usize>,
    pub detectable: bool,
    pub clump_weight: f64,
}

pub fn gap_record(proj: &Projection, i: usize, gamma: f64, p: &ScaleParams) -> Result<GapRecord> {
    let cf = close_far_sets(proj, i, gamma, p)?;
    let clump_weight: f64 = cf.close.iter().map(|&j| proj.weight[j]).sum();
    Ok(GapRecord { index: i, gamma, close: cf.close, far: cf.far, detectable: clump_weight.abs() > p.lambda, clump_weight })
}

pub fn detectable(gap: &GapRecord, p: &ScaleParams) -> bool {
    gap.clump_weight.abs() > p.lambda
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub gamma: f64,
    pub t_gamma: f64,
    pub gapped: Vec<usize>,
}

/// Scales `γ₀ = ε′/k`, `γ_{t+1} = T(γ_t/k)/k` down to the floor, with the positions gapped at each.
pub fn scale_trace(proj: &Projection, p: &ScaleParams) -> Result<Vec<TraceStep>> {
    let kres = proj.len().max(1) as f64;
    let mut gamma = p.eps_prime / kres;
    let mut out = Vec::new();
    while gamma >= p.gamma_floor {
        let mut gapped = Vec::new();
        for i in 0..proj.len() {
            if close_far_sets(proj, i, gamma, p)?.gapped {
                gapped.push(i);
            }
        }
        out.push(TraceStep { gamma, t_gamma: t_of(gamma, p), gapped });
        gamma = t_of(gamma / kres, p) / kres;
    }
    Ok(out)
}

/// First gapped `(i, γ)` along the descent: largest `γ`, then smallest position.
/// Returns `None` exactly when the spread is at most `ε′`.
pub fn find_gapped_scale(proj: &Projection, p: &ScaleParams) -> Result<Option<GapRecord>> {
    if proj.is_empty() {
        return invalid("empty projection");
    }
    if proj.spread() <= p.eps_prime {
        return Ok(None);
    }
    let kres = proj.len() as f64;
    let mut gamma = p.eps_prime / kres;
    while gamma >= p.gamma_floor {
        for i in 0..proj.len() {
            if close_far_sets(proj, i, gamma, p)?.gapped {
                return gap_record(proj, i, gamma, p).map(Some);
            }
        }
        gamma = t_of(gamma / kres, p) / kres;
    }
    Err(Error::Infeasible(format!("no gapped scale above γ̲ = {:e}", p.gamma_floor)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params(kk: usize, c_t: f64) -> ScaleParams {
        ScaleParams {
            eps_prime: 0.01,
            lambda: 0.5,
            gamma_floor: 1e-200,
            c_t,
            r: 1.0,
            d: 1,
            k: kk,
            xi: 0.1,
            xi_prime: 0.1,
        }
    }

    fn proj(v: &[f64]) -> Projection {
        projection_from_values(vec![1.0], v, &vec![1.0; v.len()]).unwrap()
    }

    #[test]
    fn t_direct_formula() {
        let mut p = unit_params(3, 1.0);
        p.lambda = 1.0;
        assert!((t_of(0.5, &p) - 0.125).abs() < 1e-12);
        assert!(t_of(0.2, &p) < t_of(0.3, &p));
    }

    #[test]
    fn level_zero_at_eps_prime() {
        let p = ScaleParams::desk(0.1, 4, 3, 1.0).unwrap();
        assert!(level(p.eps_prime, &p).abs() < 1e-15);
        assert!(level(p.eps_prime / 10.0, &p) > 0.0);
        let l = 1.3;
        assert!((level(level_inverse(l, &p), &p) - l).abs() < 1e-9);
    }

    #[test]
    fn all_equal_is_one_clump() {
        let p = unit_params(3, 1.0);
        let pr = proj(&[0.3, 0.3, 0.3]);
        let cf = close_far_sets(&pr, 1, 0.1, &p).unwrap();
        assert_eq!(cf.close, vec![0, 1, 2]);
        assert!(cf.far.is_empty() && cf.gapped);
        assert_eq!(find_gapped_scale(&pr, &p).unwrap(), None);
    }

    #[test]
    fn separated_pair_gapped_at_first_scale() {
        let p = ScaleParams { eps_prime: 0.01, ..unit_params(2, 1.5) };
        let pr = proj(&[0.0, 0.5]);
        let rec = find_gapped_scale(&pr, &p).unwrap().unwrap();
        assert_eq!(rec.index, 0);
        assert_eq!(rec.gamma, 0.005);
        assert_eq!(rec.far, vec![1]);
    }

    #[test]
    fn gapped_for_every_index() {
        let p = unit_params(3, 1.0);
        let pr = proj(&[0.1, 0.1, 0.9]);
        for i in 0..3 {
            assert!(close_far_sets(&pr, i, 0.4, &p).unwrap().gapped);
        }
    }

    #[test]
    fn detectability_threshold_is_strict() {
        let p = unit_params(2, 1.5);
        let rec = |w: f64| GapRecord { index: 0, gamma: 0.1, close: vec![0], far: vec![], detectable: false, clump_weight: w };
        assert!(detectable(&rec(2.0 * p.lambda), &p));
        assert!(!detectable(&rec(p.lambda), &p));
        assert!(!detectable(&rec(0.0), &p));
    }

    #[test]
    fn projection_folds_and_sorts() {
        let net = AbsNetwork::new(
            vec![0.0; 2],
            vec![
                crate::network::Neuron::new(1.0, vec![1.0, 0.0]),
                crate::network::Neuron::new(-0.5, vec![0.0, -1.0]),
            ],
            2.0,
        )
        .unwrap();
        let pr = project(&net, &[0.6, -0.8]).unwrap();
        assert_eq!(pr.v, vec![0.6, 0.8]);
        assert_eq!(pr.index, vec![0, 1]);
        assert!(project(&net, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn anticoncentration_single_neuron() {
        let g = [0.6, 0.8];
        let a = check_anticoncentration(&[vec![1.0, 0.0]], &g, ANTI_C, ANTI_C_PRIME);
        assert!(a.floor && a.pairs);
        let a = check_anticoncentration(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[0.0, 1.0], ANTI_C, ANTI_C_PRIME);
        assert!(!a.floor);
    }
}
