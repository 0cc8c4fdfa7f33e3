//! Network representations, distances, sampling and synthetic instances.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, is_unit, norm};
use crate::random::{self, Rng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub weight: f64,
    pub direction: Vec<f64>,
}

impl Neuron {
    pub fn new(weight: f64, direction: Vec<f64>) -> Self {
        Self { weight, direction }
    }
}

fn check_neurons(dim: usize, neurons: &[Neuron]) -> Result<()> {
    for (i, n) in neurons.iter().enumerate() {
        if n.direction.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: n.direction.len() });
        }
        if !n.weight.is_finite() {
            return invalid(format!("neuron {i} has non-finite weight"));
        }
        if !is_unit(&n.direction, UNIT_TOL) {
            return invalid(format!("neuron {i} direction has norm {}", norm(&n.direction)));
        }
    }
    Ok(())
}

/// `Σ μᵢ·relu(⟨uᵢ,x⟩)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReluNetwork {
    dim: usize,
    neurons: Vec<Neuron>,
}

impl ReluNetwork {
    pub fn new(dim: usize, neurons: Vec<Neuron>) -> Result<Self> {
        check_neurons(dim, &neurons)?;
        Ok(Self { dim, neurons })
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn width(&self) -> usize {
        self.neurons.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Σ|μᵢ|`.
    pub fn total_weight(&self) -> f64 {
        self.neurons.iter().map(|n| n.weight.abs()).sum()
    }
}

/// `⟨w,x⟩ + Σ λᵢ|⟨uᵢ,x⟩|` with a declared weight budget `R`.
///
/// Generated targets satisfy `‖w‖ ≤ Σ|λᵢ| ≤ R` (see [`AbsNetwork::within_budget`]);
/// learned hypotheses carry an estimated `w` and are not forced to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsNetwork {
    w: Vec<f64>,
    neurons: Vec<Neuron>,
    budget: f64,
}

impl AbsNetwork {
    pub fn new(w: Vec<f64>, neurons: Vec<Neuron>, budget: f64) -> Result<Self> {
        check_neurons(w.len(), &neurons)?;
        if w.iter().any(|x| !x.is_finite()) {
            return invalid("linear term is not finite");
        }
        if !(budget >= 1.0) {
            return invalid(format!("weight budget {budget} must be at least 1"));
        }
        Ok(Self { w, neurons, budget })
    }

    pub fn zero(dim: usize, budget: f64) -> Self {
        Self { w: vec![0.0; dim], neurons: Vec::new(), budget: budget.max(1.0) }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn width(&self) -> usize {
        self.neurons.len()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn total_weight(&self) -> f64 {
        self.neurons.iter().map(|n| n.weight.abs()).sum()
    }

    pub fn within_budget(&self) -> bool {
        let s = self.total_weight();
        norm(&self.w) <= s + 1e-12 && s <= self.budget + 1e-12
    }

    pub fn with_linear(mut self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: w.len() });
        }
        self.w = w;
        Ok(self)
    }

    pub fn push(&mut self, neuron: Neuron) -> Result<()> {
        check_neurons(self.dim(), std::slice::from_ref(&neuron))?;
        self.neurons.push(neuron);
        Ok(())
    }

    /// Network file: header `d k R`, one `lambda u_1 … u_d` row per neuron, then a `w` row.
    pub fn to_text(&self) -> String {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut out = format!("{} {} {:?}\n", self.dim(), self.width(), self.budget);
        for n in &self.neurons {
            out.push_str(&format!("{:?} {}\n", n.weight, fmt(&n.direction)));
        }
        out.push_str(&format!("w {}\n", fmt(&self.w)));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parse = |line: usize, s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("bad number {s:?}") })
        };
        let mut rows = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = rows.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 {
            return Err(Error::Parse { line: hl, msg: "header must be `d k R`".into() });
        }
        let d: usize = head[0].parse().map_err(|_| Error::Parse { line: hl, msg: "bad d".into() })?;
        let k: usize = head[1].parse().map_err(|_| Error::Parse { line: hl, msg: "bad k".into() })?;
        let budget = parse(hl, head[2])?;
        let mut neurons = Vec::with_capacity(k);
        let mut w = vec![0.0; d];
        for (ln, row) in rows {
            let toks: Vec<&str> = row.split_whitespace().collect();
            if toks[0] == "w" {
                if toks.len() != d + 1 {
                    return Err(Error::Parse { line: ln, msg: format!("w row needs {d} values") });
                }
                w = toks[1..].iter().map(|t| parse(ln, t)).collect::<Result<_>>()?;
                continue;
            }
            if toks.len() != d + 1 {
                return Err(Error::Parse { line: ln, msg: format!("neuron row needs {} values", d + 1) });
            }
            let vals: Vec<f64> = toks.iter().map(|t| parse(ln, t)).collect::<Result<_>>()?;
            neurons.push(Neuron::new(vals[0], vals[1..].to_vec()));
        }
        if neurons.len() != k {
            return Err(Error::Parse { line: 0, msg: format!("header declares {k} neurons, found {}", neurons.len()) });
        }
        Self::new(w, neurons, budget)
    }
}

pub trait Evaluate {
    fn dim(&self) -> usize;
    /// Evaluation without the dimension check.
    fn eval_unchecked(&self, x: &[f64]) -> f64;

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }
}

impl Evaluate for ReluNetwork {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.neurons.iter().map(|n| n.weight * dot(&n.direction, x).max(0.0)).sum()
    }
}

impl Evaluate for AbsNetwork {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.neurons.iter().map(|n| n.weight * dot(&n.direction, x).abs()).sum::<f64>()
    }
}

/// `relu(z) = |z|/2 + z/2`, so `w = Σ(μᵢ/2)uᵢ` and `λᵢ = μᵢ/2`.
pub fn to_abs_form(net: &ReluNetwork, budget: f64) -> AbsNetwork {
    let mut w = vec![0.0; net.dim];
    for n in &net.neurons {
        for (wj, uj) in w.iter_mut().zip(&n.direction) {
            *wj += 0.5 * n.weight * uj;
        }
    }
    let neurons = net.neurons.iter().map(|n| Neuron::new(0.5 * n.weight, n.direction.clone())).collect();
    AbsNetwork { w, neurons, budget: budget.max(1.0) }
}

/// Largest width [`param_dist`] will brute-force.
pub const PARAM_DIST_MAX_WIDTH: usize = 9;

/// `min_π maxᵢ (|λᵢ − λ′_{π(i)}| + ‖uᵢ − u′_{π(i)}‖)` over all permutations.
pub fn param_dist(a: &[Neuron], b: &[Neuron]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.len() > PARAM_DIST_MAX_WIDTH {
        return Err(Error::Capacity { what: "param_dist width".into(), needed: a.len() as u64, limit: PARAM_DIST_MAX_WIDTH as u64 });
    }
    let k = a.len();
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| (x.weight - y.weight).abs() + crate::linalg::dist(&x.direction, &y.direction)).collect())
        .collect();
    let mut best = if k == 0 { 0.0 } else { f64::INFINITY };
    for perm in itertools::Itertools::permutations(0..k, k) {
        let worst = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max);
        best = best.min(worst);
    }
    Ok(best)
}

/// `E[|⟨u,x⟩|·|⟨v,x⟩|]` for unit `u, v` with `⟨u,v⟩ = ρ`.
pub fn abs_kernel(rho: f64) -> f64 {
    let r = rho.clamp(-1.0, 1.0);
    2.0 / PI * ((1.0 - r * r).max(0.0).sqrt() + r * r.asin())
}

/// `E[relu(⟨u,x⟩)·relu(⟨v,x⟩)]` for unit `u, v` with `⟨u,v⟩ = ρ`.
pub fn relu_kernel(rho: f64) -> f64 {
    let r = rho.clamp(-1.0, 1.0);
    ((1.0 - r * r).max(0.0).sqrt() + (PI - r.acos()) * r) / (2.0 * PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum L2Method {
    ClosedForm,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// `‖f_a − f_b‖²₂` in closed form. Linear/absolute cross terms vanish by symmetry.
pub fn l2_sq_closed_form(a: &AbsNetwork, b: &AbsNetwork) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let w = crate::linalg::sub(&a.w, &b.w);
    let terms: Vec<(f64, &[f64])> = a
        .neurons
        .iter()
        .map(|n| (n.weight, n.direction.as_slice()))
        .chain(b.neurons.iter().map(|n| (-n.weight, n.direction.as_slice())))
        .collect();
    let mut s = dot(&w, &w);
    for (i, (li, ui)) in terms.iter().enumerate() {
        s += li * li;
        for (lj, uj) in &terms[..i] {
            s += 2.0 * li * lj * abs_kernel(dot(ui, uj));
        }
    }
    Ok(s.max(0.0))
}

/// Monte-Carlo estimate of `E[(f_a − f_b)²]` with its standard error.
pub fn l2_sq_monte_carlo<A: Evaluate, B: Evaluate>(a: &A, b: &B, samples: usize, seed: u64) -> Result<MeanEstimate> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if samples < 2 {
        return invalid("Monte-Carlo needs at least two samples");
    }
    let mut rng = random::rng(seed);
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut x = vec![0.0; a.dim()];
    for _ in 0..samples {
        x.iter_mut().for_each(|v| *v = random::gaussian(&mut rng));
        let diff = a.eval_unchecked(&x) - b.eval_unchecked(&x);
        let d2 = diff * diff;
        s1 += d2;
        s2 += d2 * d2;
    }
    let n = samples as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(MeanEstimate { mean, std_err: (var / n).sqrt() })
}

pub fn l2_dist(a: &AbsNetwork, b: &AbsNetwork, method: L2Method) -> Result<f64> {
    match method {
        L2Method::ClosedForm => Ok(l2_sq_closed_form(a, b)?.sqrt()),
        L2Method::MonteCarlo { samples, seed } => Ok(l2_sq_monte_carlo(a, b, samples, seed)?.mean.sqrt()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: f64,
    pub noise_variance: f64,
}

/// Labelled Gaussian samples in flat row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    noise_variance: f64,
}

impl SampleSet {
    pub fn new(dim: usize, xs: Vec<f64>, ys: Vec<f64>, noise_variance: f64) -> Result<Self> {
        if dim == 0 || xs.len() != dim * ys.len() {
            return invalid("sample matrix shape does not match labels");
        }
        Ok(Self { dim, xs, ys, noise_variance })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.xs.chunks_exact(self.dim).zip(self.ys.iter().copied())
    }

    pub fn get(&self, i: usize) -> LabeledSample {
        LabeledSample { x: self.x(i).to_vec(), y: self.ys[i], noise_variance: self.noise_variance }
    }

    /// Same inputs, labels replaced by `y − h(x)`.
    pub fn residual<H: Evaluate>(&self, learned: &H) -> Result<Self> {
        if learned.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: learned.dim() });
        }
        let ys = self.iter().map(|(x, y)| y - learned.eval_unchecked(x)).collect();
        Ok(Self { dim: self.dim, xs: self.xs.clone(), ys, noise_variance: self.noise_variance })
    }
}

/// `x ∼ N(0, I)` and `y = f(x) + ζ`, `ζ ∼ N(0, noise_variance)`, all from one seeded stream.
pub fn sample_labeled<N: Evaluate>(net: &N, n: usize, noise_variance: f64, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return invalid("need at least one sample");
    }
    if !(noise_variance >= 0.0) {
        return invalid("noise variance must be non-negative");
    }
    let d = net.dim();
    let sd = noise_variance.sqrt();
    let mut rng = random::rng(seed);
    let mut xs = Vec::with_capacity(n * d);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let start = xs.len();
        for _ in 0..d {
            xs.push(random::gaussian(&mut rng));
        }
        let mut y = net.eval_unchecked(&xs[start..]);
        if sd > 0.0 {
            y += sd * random::gaussian(&mut rng);
        }
        ys.push(y);
    }
    Ok(SampleSet { dim: d, xs, ys, noise_variance })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    WellSeparated,
    LineMultiscale,
    RandomSphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    /// Minimum `min(‖uᵢ − u_j‖, ‖uᵢ + u_j‖)` for well-separated instances.
    pub sep: f64,
    /// Successive chord lengths `‖u_{i+1} − uᵢ‖` for line instances, length `k − 1`.
    pub ladder: Vec<f64>,
    /// ReLU output weights; random when absent.
    pub weights: Option<Vec<f64>>,
}

impl Default for InstanceParams {
    fn default() -> Self {
        Self { sep: 1.0, ladder: Vec::new(), weights: None }
    }
}

const MAX_REJECTIONS: usize = 10_000;

fn random_weights(rng: &mut Rng, k: usize, budget: f64) -> Vec<f64> {
    use rand::Rng as _;
    (0..k)
        .map(|_| {
            let m: f64 = rng.random_range(0.5..=1.0);
            let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            s * m * budget / k as f64
        })
        .collect()
}

fn orthonormal_pair(rng: &mut Rng, d: usize) -> (Vec<f64>, Vec<f64>) {
    let e1 = random::unit_vector(rng, d);
    loop {
        let v = random::gaussian_vector(rng, d);
        let c = dot(&v, &e1);
        let r: Vec<f64> = v.iter().zip(&e1).map(|(a, b)| a - c * b).collect();
        let n = norm(&r);
        if n > 1e-6 {
            return (e1, r.iter().map(|x| x / n).collect());
        }
    }
}

/// Synthetic targets. Weights satisfy `Σ|μᵢ| ≤ R`.
pub fn gen_instance(kind: InstanceKind, k: usize, d: usize, budget: f64, params: &InstanceParams, seed: u64) -> Result<ReluNetwork> {
    if k == 0 || d < 2 || !(budget >= 1.0) {
        return invalid("need k ≥ 1, d ≥ 2 and R ≥ 1");
    }
    let mut rng = random::rng(seed);
    let weights = match &params.weights {
        Some(w) if w.len() != k => return Err(Error::DimensionMismatch { expected: k, got: w.len() }),
        Some(w) if w.iter().map(|x| x.abs()).sum::<f64>() > budget + 1e-12 => {
            return invalid("supplied weights exceed the budget")
        }
        Some(w) => w.clone(),
        None => random_weights(&mut rng, k, budget),
    };
    let dirs: Vec<Vec<f64>> = match kind {
        InstanceKind::RandomSphere => (0..k).map(|_| random::unit_vector(&mut rng, d)).collect(),
        InstanceKind::WellSeparated => {
            if k > 1 && params.sep > std::f64::consts::SQRT_2 {
                return Err(Error::Infeasible(format!("separation {} exceeds √2", params.sep)));
            }
            let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(k);
            for _ in 0..k {
                let found = (0..MAX_REJECTIONS).map(|_| random::unit_vector(&mut rng, d)).find(|u| {
                    dirs.iter().all(|v| crate::linalg::sign_folded_dist(u, v) >= params.sep)
                });
                match found {
                    Some(u) => dirs.push(u),
                    None => {
                        return Err(Error::Infeasible(format!(
                            "could not place {k} directions in dimension {d} with separation {}",
                            params.sep
                        )))
                    }
                }
            }
            dirs
        }
        InstanceKind::LineMultiscale => {
            if params.ladder.len() + 1 != k {
                return Err(Error::DimensionMismatch { expected: k - 1, got: params.ladder.len() });
            }
            if params.ladder.iter().any(|&g| !(g > 0.0 && g < 2.0)) {
                return Err(Error::Infeasible("ladder gaps must lie in (0, 2)".into()));
            }
            let (e1, e2) = orthonormal_pair(&mut rng, d);
            let mut theta = 0.0f64;
            let mut dirs = Vec::with_capacity(k);
            for i in 0..k {
                if i > 0 {
                    theta += 2.0 * (params.ladder[i - 1] / 2.0).asin();
                }
                let (c, s) = (theta.cos(), theta.sin());
                let u: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| c * a + s * b).collect();
                let n = norm(&u);
                dirs.push(u.iter().map(|x| x / n).collect());
            }
            dirs
        }
    };
    ReluNetwork::new(d, weights.into_iter().zip(dirs).map(|(m, u)| Neuron::new(m, u)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn abs_form_single_and_pair() {
        let u = vec![0.6, 0.8];
        let net = ReluNetwork::new(2, vec![Neuron::new(1.0, u.clone())]).unwrap();
        let a = to_abs_form(&net, 1.0);
        assert_eq!(a.w(), &[0.3, 0.4]);
        assert_eq!(a.neurons()[0].weight, 0.5);
        let pair = ReluNetwork::new(2, vec![Neuron::new(1.0, u.clone()), Neuron::new(-1.0, u)]).unwrap();
        let a = to_abs_form(&pair, 2.0);
        assert_eq!(a.w(), &[0.0, 0.0]);
        assert_eq!(a.neurons().iter().map(|n| n.weight).collect::<Vec<_>>(), vec![0.5, -0.5]);
    }

    #[test]
    fn evaluate_examples() {
        let x = vec![-2.0, 0.5, 1.0];
        assert_eq!(AbsNetwork::zero(3, 1.0).evaluate(&x).unwrap(), 0.0);
        let relu = ReluNetwork::new(3, vec![Neuron::new(1.0, e(3, 0))]).unwrap();
        assert_eq!(relu.evaluate(&x).unwrap(), 0.0);
        let abs = AbsNetwork::new(vec![0.0; 3], vec![Neuron::new(1.0, e(3, 0))], 1.0).unwrap();
        assert_eq!(abs.evaluate(&x).unwrap(), 2.0);
        assert!(abs.evaluate(&[1.0]).is_err());
    }

    #[test]
    fn rejects_non_unit_direction() {
        assert!(ReluNetwork::new(2, vec![Neuron::new(1.0, vec![1.0, 1e-3])]).is_err());
    }

    #[test]
    fn param_dist_examples() {
        let a = vec![Neuron::new(1.0, e(3, 0)), Neuron::new(-0.5, e(3, 1))];
        let b = vec![a[1].clone(), a[0].clone()];
        assert_eq!(param_dist(&a, &a).unwrap(), 0.0);
        assert_eq!(param_dist(&a, &b).unwrap(), 0.0);
        let c = vec![Neuron::new(1.5, e(3, 0))];
        assert_eq!(param_dist(&a[..1], &c).unwrap(), 0.5);
        assert!(param_dist(&a, &c).is_err());
        let wide: Vec<Neuron> = (0..10).map(|_| Neuron::new(1.0, e(3, 0))).collect();
        assert!(matches!(param_dist(&wide, &wide), Err(Error::Capacity { .. })));
    }

    #[test]
    fn closed_form_norms() {
        let u = e(4, 2);
        let abs = AbsNetwork::new(vec![0.0; 4], vec![Neuron::new(1.0, u.clone())], 1.0).unwrap();
        let zero = AbsNetwork::zero(4, 1.0);
        assert!((l2_dist(&abs, &zero, L2Method::ClosedForm).unwrap() - 1.0).abs() < 1e-15);
        let relu = to_abs_form(&ReluNetwork::new(4, vec![Neuron::new(1.0, u)]).unwrap(), 1.0);
        assert!((l2_dist(&relu, &zero, L2Method::ClosedForm).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(l2_dist(&abs, &abs, L2Method::ClosedForm).unwrap(), 0.0);
    }

    #[test]
    fn kernels_at_extremes() {
        assert!((abs_kernel(1.0) - 1.0).abs() < 1e-15);
        assert!((abs_kernel(0.0) - 2.0 / PI).abs() < 1e-15);
        assert!((relu_kernel(1.0) - 0.5).abs() < 1e-15);
        assert!(relu_kernel(-1.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_labels_match_and_stream_is_reproducible() {
        let net = to_abs_form(&gen_instance(InstanceKind::RandomSphere, 3, 4, 2.0, &InstanceParams::default(), 3).unwrap(), 2.0);
        let s = sample_labeled(&net, 200, 0.0, 11).unwrap();
        for (x, y) in s.iter() {
            assert!((y - net.evaluate(x).unwrap()).abs() <= 1e-12);
        }
        assert_eq!(s, sample_labeled(&net, 200, 0.0, 11).unwrap());
    }

    #[test]
    fn generators_meet_postconditions() {
        let p = InstanceParams { sep: 1.0, ..Default::default() };
        let net = gen_instance(InstanceKind::WellSeparated, 2, 4, 2.0, &p, 5).unwrap();
        let (u1, u2) = (&net.neurons()[0].direction, &net.neurons()[1].direction);
        assert!(crate::linalg::dist(u1, u2) >= 1.0);
        assert!(crate::linalg::norm(&crate::linalg::add(u1, u2)) >= 1.0);
        assert!(net.total_weight() <= 2.0);

        let p = InstanceParams { ladder: vec![0.1, 0.001], ..Default::default() };
        let net = gen_instance(InstanceKind::LineMultiscale, 3, 5, 2.0, &p, 9).unwrap();
        let gap = |i: usize, j: usize| crate::linalg::dist(&net.neurons()[i].direction, &net.neurons()[j].direction);
        assert!((gap(0, 1) - 0.1).abs() / 0.1 <= 0.01);
        assert!((gap(1, 2) - 0.001).abs() / 0.001 <= 0.01);

        let p = InstanceParams { sep: 1.5, ..Default::default() };
        assert!(matches!(gen_instance(InstanceKind::WellSeparated, 3, 3, 2.0, &p, 1), Err(Error::Infeasible(_))));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let net = to_abs_form(&gen_instance(InstanceKind::RandomSphere, 3, 5, 2.0, &InstanceParams::default(), 8).unwrap(), 2.0);
        assert_eq!(AbsNetwork::from_text(&net.to_text()).unwrap(), net);
    }
}
