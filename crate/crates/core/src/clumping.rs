//! The clumping game: a vector with zero endpoints, moves that collapse intervals to
//! their minimum, a halving strategy and a noisy variant with bounded perturbations.
//!
//! Indices are 0-based. A move is a list of intervals `[i, j]` with `i < j` and
//! `j_a ≤ i_{a+1}`; touching intervals merge before collapsing.

use crate::error::{invalid, Error, Result};
use crate::random::{rng, Rng};
use crate::scales::{level, Projection, ScaleParams};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

/// Level assigned to coincident projections.
pub const MAX_LEVEL: f64 = 1e6;
/// `τ = STRATEGY_TAU_C·log₂k` for standalone games.
pub const STRATEGY_TAU_C: f64 = 1.5;
/// Move budget `C·log₂k`.
pub const MOVE_BOUND_C: f64 = 3.0;
/// Legality slack used when replaying against perturbed states.
pub const NOISY_PHI: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClumpState {
    pub w: Vec<f64>,
    /// Origin of each entry: the leftmost minimiser of the block it replaced.
    pub ids: Vec<usize>,
}

impl ClumpState {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return invalid("empty game vector");
        }
        if w.iter().any(|x| !(*x >= 0.0)) {
            return invalid("game entries must be non-negative");
        }
        if w[0] != 0.0 || w[w.len() - 1] != 0.0 {
            return invalid("game vector must start and end with 0");
        }
        let ids = (0..w.len()).collect();
        Ok(Self { w, ids })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn is_over(&self) -> bool {
        self.w.len() == 1
    }
}

pub fn default_tau(k: usize) -> f64 {
    STRATEGY_TAU_C * (k.max(2) as f64).log2()
}

pub fn move_bound(k: usize) -> f64 {
    MOVE_BOUND_C * (k.max(2) as f64).log2()
}

/// Exactly one zero entry forces length one.
pub fn zero_entry_invariant(s: &ClumpState) -> bool {
    s.w.iter().filter(|x| **x == 0.0).count() != 1 || s.w.len() == 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub intervals: Vec<(usize, usize)>,
}

impl Move {
    pub fn new(intervals: Vec<(usize, usize)>) -> Self {
        Self { intervals }
    }

    pub fn check_well_formed(&self, len: usize) -> Result<()> {
        if self.intervals.is_empty() {
            return Err(Error::IllegalMove("move has no intervals".into()));
        }
        let mut prev_end = 0;
        for (a, &(i, j)) in self.intervals.iter().enumerate() {
            if i >= j || j >= len {
                return Err(Error::IllegalMove(format!("interval [{i}, {j}] malformed for length {len}")));
            }
            if a > 0 && i < prev_end {
                return Err(Error::IllegalMove(format!("interval [{i}, {j}] starts before {prev_end}")));
            }
            prev_end = j;
        }
        Ok(())
    }

    /// Union of the intervals as subsets of ℝ.
    pub fn merged(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &(i, j) in &self.intervals {
            match out.last_mut() {
                Some(last) if i <= last.1 => last.1 = last.1.max(j),
                _ => out.push((i, j)),
            }
        }
        out
    }
}

fn interval_good(w: &[f64], i: usize, j: usize, tau: f64, phi: f64) -> bool {
    if w[i] > tau || w[j] > tau {
        return false;
    }
    let interior = &w[i + 1..j];
    let top = w[i].max(w[j]) + phi;
    interior.iter().all(|x| *x <= tau) || interior.iter().all(|x| *x > top)
}

pub fn is_legal(s: &ClumpState, m: &Move, tau: f64, phi: f64) -> Result<bool> {
    m.check_well_formed(s.len())?;
    Ok(m.intervals.iter().all(|&(i, j)| interval_good(&s.w, i, j, tau, phi)))
}

/// Collapses each merged block to its minimum and returns the position map old → new.
pub fn collapse(s: &ClumpState, m: &Move) -> Result<(ClumpState, Vec<usize>)> {
    m.check_well_formed(s.len())?;
    let blocks = m.merged();
    let (mut w, mut ids, mut map) = (Vec::new(), Vec::new(), vec![0; s.len()]);
    let mut pos = 0;
    let mut next = blocks.iter().peekable();
    while pos < s.len() {
        match next.peek() {
            Some(&&(i, j)) if i == pos => {
                let mut best = i;
                for l in i..=j {
                    if s.w[l] < s.w[best] {
                        best = l;
                    }
                    map[l] = w.len();
                }
                w.push(s.w[best]);
                ids.push(s.ids[best]);
                pos = j + 1;
                next.next();
            }
            _ => {
                map[pos] = w.len();
                w.push(s.w[pos]);
                ids.push(s.ids[pos]);
                pos += 1;
            }
        }
    }
    Ok((ClumpState { w, ids }, map))
}

pub fn apply_move(s: &ClumpState, m: &Move, tau: f64, phi: f64) -> Result<ClumpState> {
    if !is_legal(s, m, tau, phi)? {
        return Err(Error::IllegalMove(format!("{:?} is not {phi}-legal", m.intervals)));
    }
    Ok(collapse(s, m)?.0)
}

/// Maximal runs of positions satisfying `pred`, as inclusive ranges.
fn runs(len: usize, pred: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for p in 0..=len {
        let hit = p < len && pred(p);
        match (hit, start) {
            (true, None) => start = Some(p),
            (false, Some(a)) => {
                out.push((a, p - 1));
                start = None;
            }
            _ => {}
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundPlan {
    pub round: usize,
    /// Tracked entries the partition is built over.
    pub ground: usize,
    /// Intervals of the partition, in tracked-subsequence coordinates.
    pub partition: Vec<(usize, usize)>,
    pub moves: Vec<Move>,
    pub result: ClumpState,
}

/// One round of the halving strategy.
///
/// Tracked entries are those `≤ τ − round + 1` (all entries in round 0). The
/// partition is the maximal runs of tracked entries `≤ τ − round`; each run spans a
/// moderate interval of `w` that is collapsed in at most two moves.
pub fn strategy_step(s: &ClumpState, tau: f64, round: usize) -> Result<RoundPlan> {
    let theta = tau - round as f64;
    if s.is_over() {
        return Ok(RoundPlan { round, ground: 1, partition: vec![(0, 0)], moves: vec![], result: s.clone() });
    }
    if theta < 0.0 {
        return Err(Error::Infeasible(format!("round {round} exceeds τ = {tau}")));
    }
    let tracked: Vec<usize> =
        (0..s.len()).filter(|&l| round == 0 || s.w[l] <= theta + 1.0).collect();
    let partition = runs(tracked.len(), |t| s.w[tracked[t]] <= theta);
    let moderate: Vec<(usize, usize)> = partition.iter().map(|&(a, b)| (tracked[a], tracked[b])).collect();

    let mut first = Vec::new();
    for &(i, j) in &moderate {
        for (r, t) in runs(j - i + 1, |o| s.w[i + o] > theta + 1.0) {
            first.push((i + r - 1, i + t + 1));
        }
    }
    let mut moves = Vec::new();
    let (mut cur, mut moderate_now) = (s.clone(), moderate.clone());
    if !first.is_empty() {
        let m = Move::new(first);
        let (next, map) = collapse(&cur, &m)?;
        moderate_now = moderate_now.iter().map(|&(i, j)| (map[i], map[j])).collect();
        moves.push(m);
        cur = next;
    }
    let second: Vec<(usize, usize)> = moderate_now.into_iter().filter(|(i, j)| i < j).collect();
    if !second.is_empty() {
        let m = Move::new(second);
        cur = collapse(&cur, &m)?.0;
        moves.push(m);
    }
    Ok(RoundPlan { round, ground: tracked.len(), partition, moves, result: cur })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub before: Vec<f64>,
    #[serde(rename = "move")]
    pub mv: Move,
    pub legal: bool,
    pub after: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub tau: f64,
    pub phi: f64,
    pub steps: Vec<TranscriptStep>,
    pub terminal: ClumpState,
    /// `(ground, partition size)` per round.
    pub rounds: Vec<(usize, usize)>,
}

impl Transcript {
    pub fn move_count(&self) -> usize {
        self.steps.len()
    }

    pub fn all_legal(&self) -> bool {
        self.steps.iter().all(|s| s.legal)
    }

    pub fn violations(&self) -> usize {
        self.steps.iter().filter(|s| !s.legal).count()
    }

    pub fn moves(&self) -> Vec<Move> {
        self.steps.iter().map(|s| s.mv.clone()).collect()
    }
}

pub fn play_noiseless(w: Vec<f64>, tau: f64) -> Result<Transcript> {
    let mut cur = ClumpState::new(w)?;
    let (mut steps, mut rounds) = (Vec::new(), Vec::new());
    let mut round = 0;
    while !cur.is_over() {
        let plan = strategy_step(&cur, tau, round)?;
        rounds.push((plan.ground, plan.partition.len()));
        for m in plan.moves {
            let legal = is_legal(&cur, &m, tau, 1.0)?;
            let next = collapse(&cur, &m)?.0;
            steps.push(TranscriptStep { before: cur.w.clone(), mv: m, legal, after: next.w.clone() });
            cur = next;
        }
        round += 1;
    }
    Ok(Transcript { tau, phi: 1.0, steps, terminal: cur, rounds })
}

pub fn perturb(s: &ClumpState, p: Vec<f64>, delta: f64) -> Result<ClumpState> {
    if p.len() != s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), got: p.len() });
    }
    for (l, (&pl, &wl)) in p.iter().zip(&s.w).enumerate() {
        if !(pl >= 0.0) {
            return Err(Error::InvalidPerturbation { index: l, reason: "negative entry".into() });
        }
        if pl > wl {
            return Err(Error::InvalidPerturbation { index: l, reason: format!("{pl} exceeds {wl}") });
        }
        if wl > 1.0 && pl < wl - delta {
            return Err(Error::InvalidPerturbation { index: l, reason: format!("{pl} below {wl} − {delta}") });
        }
    }
    Ok(ClumpState { w: p, ids: s.ids.clone() })
}

#[derive(Clone, Debug)]
pub enum Adversary {
    Null,
    /// `max(w − Δ, 0)` everywhere.
    SubtractDelta,
    /// Entries `≤ 1` to zero, the rest lowered by `Δ`.
    DropLow,
    Random(Box<Rng>),
}

impl Adversary {
    pub fn random(seed: u64) -> Self {
        Adversary::Random(Box::new(rng(seed)))
    }

    pub fn perturbation(&mut self, w: &[f64], delta: f64) -> Vec<f64> {
        match self {
            Adversary::Null => w.to_vec(),
            Adversary::SubtractDelta => w.iter().map(|x| (x - delta).max(0.0)).collect(),
            Adversary::DropLow => w.iter().map(|&x| if x <= 1.0 { 0.0 } else { x - delta }).collect(),
            Adversary::Random(r) => w
                .iter()
                .map(|&x| {
                    let lo = if x > 1.0 { x - delta } else { 0.0 };
                    lo + (x - lo) * r.random::<f64>()
                })
                .collect(),
        }
    }
}

/// Replays the noiseless moves, perturbing after each and checking `(1−Δ·moves)`-legality
/// via `φ = 0.99`.
pub fn play_noisy(w: Vec<f64>, tau: f64, adversary: &mut Adversary, delta: f64) -> Result<Transcript> {
    let plan = play_noiseless(w.clone(), tau)?;
    let mut cur = ClumpState::new(w)?;
    let mut steps = Vec::new();
    for m in plan.moves() {
        let legal = is_legal(&cur, &m, tau, NOISY_PHI)?;
        let collapsed = collapse(&cur, &m)?.0;
        let p = adversary.perturbation(&collapsed.w, delta);
        let next = perturb(&collapsed, p, delta)?;
        steps.push(TranscriptStep { before: cur.w.clone(), mv: m, legal, after: next.w.clone() });
        cur = next;
    }
    Ok(Transcript { tau, phi: NOISY_PHI, steps, terminal: cur, rounds: plan.rounds })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSetup {
    pub state: ClumpState,
    pub tau: f64,
}

/// Initial game for a projection: zero endpoints, entry `i` the level of `vᵢ − vᵢ₋₁`
/// clamped to `[0, MAX_LEVEL]`, and `τ = L(γ̲)`.
pub fn from_projection(proj: &Projection, p: &ScaleParams) -> Result<GameSetup> {
    let k = proj.len();
    let mut w = vec![0.0; k + 1];
    for i in 1..k {
        w[i] = level(proj.v[i] - proj.v[i - 1], p).clamp(0.0, MAX_LEVEL);
    }
    Ok(GameSetup { state: ClumpState::new(w)?, tau: level(p.gamma_floor, p) })
}
