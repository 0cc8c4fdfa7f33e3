//! The staged learner: two-neuron fits for tight residuals, PCA subspaces and
//! direction nets for gapped clumps, and branch management over the choices the
//! procedure leaves open.

use crate::clumping::{from_projection, is_legal, play_noiseless, Move, NOISY_PHI};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm, sign_folded_dist};
use crate::moments::{estimate_contracted, ContractedEstimate, ContractedMatrix};
use crate::network::{sample_labeled, AbsNetwork, Evaluate, Neuron, SampleSet};
use crate::random::{derive_seed, rng, unit_vector};
use crate::scales::{
    check_anticoncentration, close_far_sets, find_gapped_scale, level_inverse, project, GapRecord, Projection, ScaleParams,
    ANTI_C, ANTI_C_PRIME,
};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub const DEFAULT_UPSILON: f64 = 0.05;
/// Largest direction net enumerated.
pub const NET_CAP: u64 = 2_000_000;
/// Eigenvalues below this multiple of the split-half noise are discarded.
pub const PCA_NOISE_MULT: f64 = 3.0;
/// Singular-value cut when merging eigenvectors from several orders.
pub const PCA_MERGE_SV: f64 = 0.25;
pub const MAX_G_RETRIES: usize = 10;
/// Learned `Σ|λ̂|` may not exceed this multiple of `R`.
pub const WEIGHT_CAP_MULT: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchMode {
    Exhaustive { path_cap: usize },
    Oracle,
    Beam { width: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub scales: ScaleParams,
    pub upsilon: f64,
    pub moment_samples: usize,
    pub validation_samples: usize,
    pub branch_mode: BranchMode,
    pub max_stages: usize,
    pub eps: f64,
    pub omega: f64,
    pub seed: u64,
}

impl LearnerConfig {
    /// Desk defaults: `υ = 0.05`, `ω = √ε′`, `10⁶` moment samples per stage.
    pub fn desk(eps: f64, d: usize, k: usize, r: f64, seed: u64) -> Result<Self> {
        let scales = ScaleParams::desk(eps, d, k, r)?;
        let omega = scales.eps_prime.sqrt();
        Ok(Self {
            scales,
            upsilon: DEFAULT_UPSILON,
            moment_samples: 1_000_000,
            validation_samples: 20_000,
            branch_mode: BranchMode::Oracle,
            max_stages: k + 1,
            eps,
            omega,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.scales.validate()?;
        if !(self.upsilon > 0.0) || self.moment_samples == 0 || self.validation_samples == 0 || self.max_stages == 0 {
            return invalid("υ, sample budgets and stage count must be positive");
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return invalid("ω must lie in (0, 1)");
        }
        Ok(())
    }

    /// Even orders `2, 4, …, 2k+2`.
    pub fn orders(&self) -> Vec<usize> {
        (1..=self.scales.k + 1).map(|j| 2 * j).collect()
    }
}

/// Draws labelled samples on demand.
pub trait SampleSource {
    fn dim(&self) -> usize;
    fn draw(&mut self, n: usize) -> Result<SampleSet>;
}

/// Fresh Gaussian draws labelled by a fixed target; each call uses a new derived seed.
pub struct TargetSource<N: Evaluate> {
    pub target: N,
    pub noise_variance: f64,
    seed: u64,
    calls: u64,
}

impl<N: Evaluate> TargetSource<N> {
    pub fn new(target: N, noise_variance: f64, seed: u64) -> Self {
        Self { target, noise_variance, seed, calls: 0 }
    }
}

impl<N: Evaluate> SampleSource for TargetSource<N> {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn draw(&mut self, n: usize) -> Result<SampleSet> {
        self.calls += 1;
        sample_labeled(&self.target, n, self.noise_variance, derive_seed(self.seed, self.calls))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoNeuronFit {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub u: Vec<f64>,
    /// Weight of `|⟨u,·⟩|`, `(μ⁺+μ⁻)/2`.
    pub abs_weight: f64,
    pub linear: Vec<f64>,
    pub zero: bool,
    /// `|⟨u,g⟩|` fell below the anti-concentration floor.
    pub degenerate: bool,
}

impl TwoNeuronFit {
    /// `learned + (μ⁺+μ⁻)/2·|⟨u,·⟩|` with the estimated residual linear term.
    pub fn hypothesis(&self, learned: &AbsNetwork) -> Result<AbsNetwork> {
        let mut h = learned.clone();
        if !self.zero {
            h.push(Neuron::new(self.abs_weight, self.u.clone()))?;
        }
        let w = learned.w().iter().zip(&self.linear).map(|(a, b)| a + b).collect();
        h.with_linear(w)
    }
}

/// Fits `μ⁺relu(⟨u,·⟩) + μ⁻relu(⟨−u,·⟩)` to residual moments: `u` and `μ⁺+μ⁻` from the
/// top eigenpair of `M₂`, `μ⁺−μ⁻ = 2⟨ŵ,u⟩`. Both below `ω` gives the zero fit.
pub fn two_neuron_from_estimate(est: &ContractedEstimate, omega: f64, k: usize) -> Result<TwoNeuronFit> {
    let m2 = est
        .matrices
        .iter()
        .find(|m| m.order == 2)
        .ok_or_else(|| Error::InvalidInput("second-order contraction missing".into()))?;
    let d = m2.dim();
    let eig = SymmetricEigen::new(symmetrize(&m2.matrix));
    let top = (0..d).max_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs())).unwrap_or(0);
    let e = eig.eigenvalues[top];
    let mut u: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    let n = norm(&u);
    u.iter_mut().for_each(|x| *x /= n);
    let lin_u = dot(&est.linear, &u);
    let (mu_plus, mu_minus) = (e + lin_u, e - lin_u);
    let zero = mu_plus.abs() < omega && mu_minus.abs() < omega;
    let floor = ANTI_C / (k.max(1) as f64 * (d as f64).sqrt());
    let degenerate = dot(&u, &m2.g).abs() < floor;
    Ok(TwoNeuronFit { mu_plus, mu_minus, u, abs_weight: e, linear: est.linear.clone(), zero, degenerate })
}

pub fn two_neuron_fit(samples: &SampleSet, learned: &AbsNetwork, g: &[f64], cfg: &LearnerConfig) -> Result<TwoNeuronFit> {
    let est = estimate_contracted(samples, Some(learned), &[2], g)?;
    two_neuron_from_estimate(&est, cfg.omega, cfg.scales.k)
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Orthonormal basis of the joint span of each matrix's top-`k` eigenvectors whose
/// eigenvalues exceed the matching floor; at most `k(k+2)` vectors.
pub fn pca_subspace_with_floor(matrices: &[ContractedMatrix], floors: &[f64], k: usize) -> Result<Vec<Vec<f64>>> {
    if matrices.len() != floors.len() {
        return Err(Error::DimensionMismatch { expected: matrices.len(), got: floors.len() });
    }
    let Some(first) = matrices.first() else { return Ok(Vec::new()) };
    let d = first.dim();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (m, &floor) in matrices.iter().zip(floors) {
        if m.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: m.dim() });
        }
        let eig = SymmetricEigen::new(symmetrize(&m.matrix));
        let mut idx: Vec<usize> = (0..d).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
        for &i in idx.iter().take(k) {
            if eig.eigenvalues[i].abs() > floor {
                rows.push(eig.eigenvectors.column(i).iter().copied().collect());
            }
        }
    }
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let stacked = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let svd = stacked.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Infeasible("SVD did not converge".into()))?;
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Ok(idx
        .into_iter()
        .filter(|&i| svd.singular_values[i] > PCA_MERGE_SV)
        .take(k * (k + 2))
        .map(|i| vt.row(i).iter().copied().collect())
        .collect())
}

/// [`pca_subspace_with_floor`] with a relative floor of `10⁻⁹·max‖M‖`.
pub fn pca_subspace(matrices: &[ContractedMatrix], k: usize) -> Result<Vec<Vec<f64>>> {
    let scale = matrices.iter().map(|m| m.op_norm()).fold(0.0, f64::max);
    let floors = vec![1e-9 * scale; matrices.len()];
    pca_subspace_with_floor(matrices, &floors, k)
}

/// Cube-face grid size for covering radius `υ` on the unit sphere of `ℝ^m`.
fn face_points(m: usize, upsilon: f64) -> usize {
    if m <= 1 {
        return 1;
    }
    let h = 2.0 * upsilon / ((m - 1) as f64).sqrt();
    (2.0 / h).ceil() as usize + 1
}

pub fn net_size(m: usize, upsilon: f64) -> u64 {
    if m == 0 {
        return 0;
    }
    let n = face_points(m, upsilon) as u64;
    (2 * m as u64).saturating_mul(n.saturating_pow(m as u32 - 1))
}

/// Unit vectors covering the sphere of `span(basis)` to within `υ`, from normalised points
/// of a grid on the faces of the cube `[−1, 1]^m`.
pub fn candidate_net(basis: &[Vec<f64>], upsilon: f64, cap: u64) -> Result<Vec<Vec<f64>>> {
    let m = basis.len();
    if m == 0 {
        return invalid("empty basis");
    }
    if !(upsilon > 0.0) {
        return invalid("υ must be positive");
    }
    let size = net_size(m, upsilon);
    if size > cap {
        let mut needed = upsilon;
        while net_size(m, needed) > cap {
            needed *= 1.1;
        }
        return Err(Error::Capacity {
            what: format!("υ-net over a {m}-dimensional span (needs υ ≥ {needed:.3})"),
            needed: size,
            limit: cap,
        });
    }
    let d = basis[0].len();
    let n = face_points(m, upsilon);
    let step = if n > 1 { 2.0 / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(size as usize);
    let mut coords = vec![0.0; m];
    for axis in 0..m {
        for sign in [1.0, -1.0] {
            let free = m - 1;
            let total = n.pow(free as u32);
            for code in 0..total {
                let mut c = code;
                let mut slot = 0;
                for (j, x) in coords.iter_mut().enumerate() {
                    if j == axis {
                        *x = sign;
                    } else {
                        *x = -1.0 + step * (c % n) as f64;
                        c /= n;
                        slot += 1;
                    }
                }
                debug_assert_eq!(slot, free);
                let r = norm(&coords);
                let mut v = vec![0.0; d];
                for (cj, bj) in coords.iter().zip(basis) {
                    for (vi, bi) in v.iter_mut().zip(bj) {
                        *vi += cj / r * bi;
                    }
                }
                let nv = norm(&v);
                out.push(v.into_iter().map(|x| x / nv).collect());
            }
        }
    }
    Ok(out)
}

/// Grid `{−R + jυ}` on `[−R, R]`.
pub fn weight_grid(upsilon: f64, r: f64) -> Vec<f64> {
    let n = (2.0 * r / upsilon + 1e-9).floor() as usize;
    (0..=n).map(|j| -r + j as f64 * upsilon).collect()
}

/// Floor onto [`weight_grid`], clamped to `[−R, R]`.
pub fn round_to_grid(lambda: f64, upsilon: f64, r: f64) -> f64 {
    let x = lambda.clamp(-r, r);
    -r + ((x + r) / upsilon + 1e-9).floor() * upsilon
}

/// Net element closest to `±u`, with its sign-folded distance.
pub fn nearest_in_net(net: &[Vec<f64>], u: &[f64]) -> Option<(usize, f64)> {
    net.iter()
        .enumerate()
        .map(|(i, v)| (i, sign_folded_dist(v, u)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub hypothesis: AbsNetwork,
    /// Empirical squared loss on the learner's held-out shard.
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClumpTrace {
    /// Original neuron indices.
    pub neurons: Vec<usize>,
    pub gamma: f64,
    pub gapped: bool,
    pub detectable: bool,
    pub clump_weight: f64,
    pub learned_weight: f64,
    pub direction_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage: usize,
    pub case: String,
    pub active: Vec<usize>,
    pub game: Vec<f64>,
    #[serde(rename = "move")]
    pub mv: Option<Move>,
    pub first_gap: Option<GapRecord>,
    pub subspace_dim: usize,
    pub net_size: usize,
    pub clumps: Vec<ClumpTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnOutcome {
    pub candidates: Vec<Candidate>,
    pub stages: Vec<StageTrace>,
    pub incomplete: bool,
    pub g: Vec<f64>,
    pub g_retries: usize,
    pub replans: usize,
}

impl LearnOutcome {
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub learned: AbsNetwork,
    pub stage: usize,
    pub branch_log: Vec<String>,
    pub residual_loss: f64,
}

pub fn empirical_loss<H: Evaluate>(h: &H, samples: &SampleSet) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|(x, y)| (y - h.eval_unchecked(x)).powi(2)).sum::<f64>() / samples.len() as f64
}

fn choose_g(truth: Option<&AbsNetwork>, d: usize, seed: u64) -> (Vec<f64>, usize) {
    let mut g = Vec::new();
    for attempt in 0..=MAX_G_RETRIES {
        g = unit_vector(&mut rng(derive_seed(seed, 0x6_0000 + attempt as u64)), d);
        let Some(t) = truth else { return (g, 0) };
        let us: Vec<Vec<f64>> = t.neurons().iter().map(|n| n.direction.clone()).collect();
        let a = check_anticoncentration(&us, &g, ANTI_C, ANTI_C_PRIME);
        if a.pairs && a.floor {
            return (g, attempt);
        }
    }
    (g, MAX_G_RETRIES)
}

/// Runs the staged learner and returns its terminal candidates.
///
/// `truth` is required in oracle mode and is used there to steer the choices; the other
/// modes only use it to pick `g` when given.
pub fn recursive_learn(source: &mut dyn SampleSource, cfg: &LearnerConfig, truth: Option<&AbsNetwork>) -> Result<LearnOutcome> {
    cfg.validate()?;
    let d = source.dim();
    let (g, g_retries) = choose_g(truth, d, cfg.seed);
    let holdout = source.draw(cfg.validation_samples)?;
    match &cfg.branch_mode {
        BranchMode::Oracle => {
            let t = truth.ok_or_else(|| Error::InvalidInput("oracle mode needs the target network".into()))?;
            learn_oracle(source, cfg, t, g, g_retries, &holdout)
        }
        BranchMode::Beam { width, .. } => learn_branching(source, cfg, g, g_retries, &holdout, Some(*width), usize::MAX),
        BranchMode::Exhaustive { path_cap } => learn_branching(source, cfg, g, g_retries, &holdout, None, *path_cap),
    }
}

fn positions_of(proj: &Projection, active: &[usize]) -> Vec<usize> {
    (0..proj.len()).filter(|&p| active.contains(&proj.index[p])).collect()
}

fn case1_candidate(
    est: &ContractedEstimate,
    learned: &AbsNetwork,
    cfg: &LearnerConfig,
    holdout: &SampleSet,
    label: String,
) -> Result<Candidate> {
    let fit = two_neuron_from_estimate(est, cfg.omega, cfg.scales.k)?;
    let hypothesis = fit.hypothesis(learned)?;
    let loss = empirical_loss(&hypothesis, holdout);
    Ok(Candidate { label, hypothesis, loss })
}

fn learn_oracle(
    source: &mut dyn SampleSource,
    cfg: &LearnerConfig,
    truth: &AbsNetwork,
    g: Vec<f64>,
    g_retries: usize,
    holdout: &SampleSet,
) -> Result<LearnOutcome> {
    let p = &cfg.scales;
    let d = truth.dim();
    let proj0 = project(truth, &g)?;
    let tau = from_projection(&proj0, p)?.tau;
    let mut active: Vec<usize> = (0..truth.width()).collect();
    let mut moves: Vec<Move> = Vec::new();
    let mut next_move = 0;
    let mut replans = 0;
    let mut learned = AbsNetwork::zero(d, p.r * WEIGHT_CAP_MULT);
    let mut stages = Vec::new();
    let orders = cfg.orders();

    for stage in 0..cfg.max_stages {
        let samples = source.draw(cfg.moment_samples)?;
        let est = estimate_contracted(&samples, Some(&learned), &orders, &g)?;
        let proj = proj0.restrict(&positions_of(&proj0, &active));
        let game = from_projection(&proj, p)?.state;
        let first_gap = if proj.is_empty() { None } else { find_gapped_scale(&proj, p)? };

        let mut trace = StageTrace {
            stage,
            case: "case1".into(),
            active: active.clone(),
            game: game.w.clone(),
            mv: None,
            first_gap: first_gap.clone(),
            subspace_dim: 0,
            net_size: 0,
            clumps: Vec::new(),
        };

        let mut mv = None;
        if first_gap.is_some() {
            let usable = moves
                .get(next_move)
                .map(|m| m.check_well_formed(game.len()).is_ok() && is_legal(&game, m, tau, NOISY_PHI).unwrap_or(false))
                .unwrap_or(false);
            if !usable {
                if next_move > 0 || !moves.is_empty() {
                    replans += 1;
                }
                moves = play_noiseless(game.w.clone(), tau)?.moves();
                next_move = 0;
            }
            let m = moves[next_move].clone();
            next_move += 1;
            let full = m.merged() == vec![(0, game.len() - 1)];
            let all_low = game.w.iter().all(|&x| x <= tau);
            if !(full && !all_low) {
                mv = Some(m);
            }
        }

        let Some(m) = mv else {
            let c = case1_candidate(&est, &learned, cfg, holdout, format!("oracle/stage{stage}/case1"))?;
            stages.push(trace);
            return Ok(LearnOutcome { candidates: vec![c], stages, incomplete: false, g, g_retries, replans });
        };

        trace.case = "case2".into();
        trace.mv = Some(m.clone());
        let floors: Vec<f64> = est.noise.iter().map(|n| PCA_NOISE_MULT * n).collect();
        let basis = pca_subspace_with_floor(&est.matrices, &floors, active.len())?;
        trace.subspace_dim = basis.len();
        let net = if basis.is_empty() { Vec::new() } else { candidate_net(&basis, cfg.upsilon, NET_CAP)? };
        trace.net_size = net.len();

        let mut removed: Vec<usize> = Vec::new();
        for &(i, j) in &m.intervals {
            let all_low = game.w[i..=j].iter().all(|&x| x <= tau);
            let clumps: Vec<(Vec<usize>, usize, f64)> = if all_low {
                (i..j).map(|q| (vec![q], q, p.gamma_floor)).collect()
            } else {
                let gamma = level_inverse(game.w[i].max(game.w[j]), p);
                vec![((i..j).collect(), i, gamma)]
            };
            for (members, rep, gamma) in clumps {
                let cf = close_far_sets(&proj, rep, gamma, p)?;
                let clump_weight: f64 = members.iter().map(|&q| proj.weight[q]).sum();
                let detectable = clump_weight.abs() > p.lambda;
                let neurons: Vec<usize> = members.iter().map(|&q| proj.index[q]).collect();
                let mut ct = ClumpTrace {
                    neurons: neurons.clone(),
                    gamma,
                    gapped: cf.gapped && cf.close == members,
                    detectable,
                    clump_weight,
                    learned_weight: 0.0,
                    direction_error: None,
                };
                if detectable {
                    let u = &truth.neurons()[proj.index[rep]].direction;
                    if let Some((best, dist)) = nearest_in_net(&net, u) {
                        let lam = round_to_grid(clump_weight, cfg.upsilon, p.r);
                        learned.push(Neuron::new(lam, net[best].clone()))?;
                        ct.learned_weight = lam;
                        ct.direction_error = Some(dist);
                    }
                }
                trace.clumps.push(ct);
                removed.extend(neurons);
            }
        }
        active.retain(|a| !removed.contains(a));
        stages.push(trace);
    }

    let samples = source.draw(cfg.moment_samples)?;
    let est = estimate_contracted(&samples, Some(&learned), &orders, &g)?;
    let c = case1_candidate(&est, &learned, cfg, holdout, "oracle/partial".into())?;
    Ok(LearnOutcome { candidates: vec![c], stages, incomplete: true, g, g_retries, replans })
}

struct Branch {
    state: LearnerState,
}

/// Closed-form best weight for `|⟨u,·⟩|` against residuals, rounded to the grid.
fn best_weight(u: &[f64], residuals: &[f64], shard: &SampleSet, upsilon: f64, r: f64) -> (f64, f64) {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (x, _)) in shard.iter().enumerate() {
        let a = dot(u, x).abs();
        num += residuals[i] * a;
        den += a * a;
    }
    let lam = round_to_grid(if den > 0.0 { num / den } else { 0.0 }, upsilon, r);
    let loss = shard
        .iter()
        .enumerate()
        .map(|(i, (x, _))| (residuals[i] - lam * dot(u, x).abs()).powi(2))
        .sum::<f64>()
        / shard.len().max(1) as f64;
    (lam, loss)
}

fn learn_branching(
    source: &mut dyn SampleSource,
    cfg: &LearnerConfig,
    g: Vec<f64>,
    g_retries: usize,
    holdout: &SampleSet,
    width: Option<usize>,
    path_cap: usize,
) -> Result<LearnOutcome> {
    let p = &cfg.scales;
    let d = source.dim();
    let orders = cfg.orders();
    let mut frontier = vec![Branch {
        state: LearnerState { learned: AbsNetwork::zero(d, p.r * WEIGHT_CAP_MULT), stage: 0, branch_log: Vec::new(), residual_loss: f64::NAN },
    }];
    let mut candidates = Vec::new();
    let mut stages = Vec::new();
    let mut incomplete = false;
    let mut paths = 1usize;

    for stage in 0..cfg.max_stages {
        let samples = source.draw(cfg.moment_samples)?;
        let shard = source.draw(cfg.validation_samples)?;
        let mut children: Vec<(f64, Branch)> = Vec::new();
        let mut trace = StageTrace {
            stage,
            case: "branch".into(),
            active: Vec::new(),
            game: Vec::new(),
            mv: None,
            first_gap: None,
            subspace_dim: 0,
            net_size: 0,
            clumps: Vec::new(),
        };
        for b in &frontier {
            let est = estimate_contracted(&samples, Some(&b.state.learned), &orders, &g)?;
            let mut log = b.state.branch_log.clone();
            log.push("case1".into());
            let label = format!("branch/{}", log.join("/"));
            candidates.push(case1_candidate(&est, &b.state.learned, cfg, holdout, label)?);

            let floors: Vec<f64> = est.noise.iter().map(|n| PCA_NOISE_MULT * n).collect();
            let basis = pca_subspace_with_floor(&est.matrices, &floors, p.k)?;
            trace.subspace_dim = trace.subspace_dim.max(basis.len());
            if basis.is_empty() {
                continue;
            }
            let net = match candidate_net(&basis, cfg.upsilon, NET_CAP) {
                Ok(n) => n,
                Err(Error::Capacity { .. }) => {
                    incomplete = true;
                    continue;
                }
                Err(e) => return Err(e),
            };
            trace.net_size = trace.net_size.max(net.len());
            let lin: Vec<f64> = est.linear.clone();
            let residuals: Vec<f64> = shard
                .iter()
                .map(|(x, y)| y - b.state.learned.eval_unchecked(x) - dot(&lin, x))
                .collect();
            let weights = weight_grid(cfg.upsilon, p.r);
            for (ni, u) in net.iter().enumerate() {
                let picks: Vec<(f64, f64)> = match width {
                    Some(_) => vec![best_weight(u, &residuals, &shard, cfg.upsilon, p.r)],
                    None => weights.iter().map(|&lam| (lam, f64::NAN)).collect(),
                };
                for (lam, score) in picks {
                    if lam == 0.0 {
                        continue;
                    }
                    let mut learned = b.state.learned.clone();
                    learned.push(Neuron::new(lam, u.clone()))?;
                    if learned.total_weight() > p.r * WEIGHT_CAP_MULT + 1e-12 {
                        continue;
                    }
                    if width.is_none() {
                        paths += 1;
                        if paths > path_cap {
                            incomplete = true;
                            break;
                        }
                    }
                    let mut log = b.state.branch_log.clone();
                    log.push(format!("net{ni}:{lam}"));
                    children.push((
                        score,
                        Branch { state: LearnerState { learned, stage: stage + 1, branch_log: log, residual_loss: score } },
                    ));
                }
            }
        }
        stages.push(trace);
        if let Some(w) = width {
            children.sort_by(|a, b| a.0.total_cmp(&b.0));
            children.truncate(w);
        }
        frontier = children.into_iter().map(|(_, b)| b).collect();
        if frontier.is_empty() {
            break;
        }
    }
    if !frontier.is_empty() {
        let samples = source.draw(cfg.moment_samples)?;
        for b in &frontier {
            let est = estimate_contracted(&samples, Some(&b.state.learned), &orders, &g)?;
            let label = format!("branch/{}/final", b.state.branch_log.join("/"));
            candidates.push(case1_candidate(&est, &b.state.learned, cfg, holdout, label)?);
        }
    }
    Ok(LearnOutcome { candidates, stages, incomplete, g, g_retries, replans: 0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub loss: f64,
    pub losses: Vec<f64>,
    /// Half-width `2·max_j sd_j·√(ln(2m/δ)/N)` at `δ = 0.01`.
    pub confidence: f64,
}

/// Empirical-loss minimiser; ties go to the earlier candidate.
pub fn validate_select(candidates: &[Candidate], validation: &SampleSet) -> Result<Selection> {
    if candidates.is_empty() {
        return invalid("no candidates to select from");
    }
    let n = validation.len().max(1) as f64;
    let mut losses = Vec::with_capacity(candidates.len());
    let mut worst_sd: f64 = 0.0;
    for c in candidates {
        let sq: Vec<f64> = validation.iter().map(|(x, y)| (y - c.hypothesis.eval_unchecked(x)).powi(2)).collect();
        let mean = sq.iter().sum::<f64>() / n;
        let var = sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        worst_sd = worst_sd.max(var.sqrt());
        losses.push(mean);
    }
    let mut index = 0;
    for (i, &l) in losses.iter().enumerate() {
        if l < losses[index] {
            index = i;
        }
    }
    let m = candidates.len() as f64;
    let confidence = 2.0 * worst_sd * ((2.0 * m / 0.01).ln() / n).sqrt();
    Ok(Selection { index, loss: losses[index], losses, confidence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::exact_contracted;

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = norm(v);
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn rank_one_subspace() {
        let u = unit(&[1.0, 2.0, 2.0]);
        let m = DMatrix::from_fn(3, 3, |a, b| u[a] * u[b]);
        let cm = ContractedMatrix { order: 2, g: vec![1.0, 0.0, 0.0], matrix: m };
        let basis = pca_subspace(&[cm], 1).unwrap();
        assert_eq!(basis.len(), 1);
        assert!(sign_folded_dist(&basis[0], &u) < 1e-12);
    }

    #[test]
    fn zero_matrices_give_empty_basis() {
        let cm = ContractedMatrix { order: 2, g: vec![1.0, 0.0], matrix: DMatrix::zeros(2, 2) };
        assert!(pca_subspace(&[cm.clone(), cm], 2).unwrap().is_empty());
        assert!(pca_subspace(&[], 2).unwrap().is_empty());
    }

    #[test]
    fn exact_moments_span_both_directions() {
        let (u1, u2) = (unit(&[1.0, 0.2, -0.3, 0.1]), unit(&[-0.2, 1.0, 0.4, 0.5]));
        let net = AbsNetwork::new(vec![0.0; 4], vec![Neuron::new(0.4, u1.clone()), Neuron::new(-0.3, u2.clone())], 2.0).unwrap();
        let g = unit(&[0.5, -0.5, 0.5, 0.5]);
        let ms: Vec<ContractedMatrix> = [2, 4, 6].iter().map(|&l| exact_contracted(&net, l, &g).unwrap()).collect();
        let basis = pca_subspace(&ms, 2).unwrap();
        for u in [&u1, &u2] {
            let proj: f64 = basis.iter().map(|b| dot(b, u).powi(2)).sum();
            assert!((1.0 - proj).abs() < 1e-8);
        }
    }

    #[test]
    fn one_dimensional_net_is_plus_minus() {
        let u = unit(&[0.0, 3.0, 4.0]);
        let net = candidate_net(std::slice::from_ref(&u), 0.05, NET_CAP).unwrap();
        assert_eq!(net.len(), 2);
        assert!(nearest_in_net(&net, &u).unwrap().1 < 1e-12);
    }

    #[test]
    fn net_covers_circle() {
        let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let net = candidate_net(&basis, 0.05, NET_CAP).unwrap();
        for t in 0..360 {
            let a = (t as f64).to_radians();
            let u = [a.cos(), a.sin(), 0.0];
            assert!(nearest_in_net(&net, &u).unwrap().1 <= 0.05);
        }
    }

    #[test]
    fn net_capacity_error() {
        let basis: Vec<Vec<f64>> = (0..8).map(|i| (0..8).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        assert!(matches!(candidate_net(&basis, 0.01, 1000), Err(Error::Capacity { .. })));
    }

    #[test]
    fn weight_grid_floor() {
        assert_eq!(weight_grid(2.0, 1.0), vec![-1.0, 1.0]);
        assert_eq!(weight_grid(3.0, 1.0), vec![-1.0]);
        assert_eq!(round_to_grid(0.7, 2.0, 1.0), -1.0);
        assert!((round_to_grid(0.33, 0.1, 1.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn selection_rules() {
        let s = sample_labeled(&AbsNetwork::zero(2, 1.0), 50, 0.0, 1).unwrap();
        let good = Candidate { label: "a".into(), hypothesis: AbsNetwork::zero(2, 1.0), loss: 0.0 };
        let bad = Candidate {
            label: "b".into(),
            hypothesis: AbsNetwork::new(vec![0.0; 2], vec![Neuron::new(1.0, vec![1.0, 0.0])], 1.0).unwrap(),
            loss: 0.0,
        };
        assert_eq!(validate_select(&[bad.clone(), good.clone()], &s).unwrap().index, 1);
        assert_eq!(validate_select(std::slice::from_ref(&bad), &s).unwrap().index, 0);
        assert_eq!(validate_select(&[good.clone(), good], &s).unwrap().index, 0);
        assert!(validate_select(&[], &s).is_err());
    }
}
