use proptest::prelude::*;
use relu_moments::clumping::{self, ClumpState, Move};
use relu_moments::hermite::{hermite_eval, hermite_tensor};
use relu_moments::learner::{candidate_net, nearest_in_net, round_to_grid, weight_grid};
use relu_moments::linalg::{dot, norm};
use relu_moments::network::{AbsNetwork, Neuron};
use relu_moments::powersum::vieta_check;
use relu_moments::scales::{self, level, level_inverse, observation_margin, t_of, ScaleParams};
use relu_moments::tensor::{canonical_indices, entry_count, SymTensor};

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 1e-3).then(|| v.iter().map(|x| x / n).collect())
}

fn game_vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..4.0f64, 4.0..20.0f64], 0..max_len).prop_map(|mut v| {
        v.insert(0, 0.0);
        v.push(0.0);
        v
    })
}

fn params() -> impl Strategy<Value = ScaleParams> {
    (0.01..0.2f64, 2..50usize, 1..8usize, 1.0..4.0f64).prop_map(|(e, d, k, r)| ScaleParams::desk(e, d, k, r).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tensor_slot_ignores_order(order in 1..5usize, dim in 1..5usize, seed in any::<u64>()) {
        let t = SymTensor::from_fn(order, dim, |idx| idx.iter().enumerate().map(|(p, &i)| ((p + 1) * (i + 3)) as f64).sum::<f64>() + seed as f64 % 7.0).unwrap();
        prop_assert_eq!(t.values().len() as u64, entry_count(order, dim));
        for idx in canonical_indices(order, dim) {
            let mut rev = idx.clone();
            rev.reverse();
            prop_assert_eq!(t.slot(&idx).unwrap(), t.slot(&rev).unwrap());
        }
    }

    #[test]
    fn hermite_three_term_recurrence(n in 1..20usize, x in -6.0..6.0f64) {
        let lhs = hermite_eval(n + 1, x).unwrap();
        let rhs = x * hermite_eval(n, x).unwrap() - n as f64 * hermite_eval(n - 1, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn hermite_tensor_contraction_is_univariate(x in prop::collection::vec(-2.0..2.0f64, 3), order in 1..5usize) {
        // ⟨S_ℓ(x), e₁^{⊗ℓ}⟩ is the normalised univariate polynomial in x₁.
        let t = hermite_tensor(order, &x).unwrap();
        let e1 = [1.0, 0.0, 0.0];
        let want = relu_moments::hermite::hermite_normalized_eval(order, x[0]).unwrap();
        prop_assert!((t.full_contraction(&e1).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn vieta_holds_on_random_roots(z in prop::collection::vec(-1.5..1.5f64, 1..=10)) {
        prop_assert!(vieta_check(&z) <= 1e-10);
    }

    #[test]
    fn level_shift_under_t(p in params(), u in 0.0..1.0f64) {
        let gamma = p.eps_prime * 10f64.powf(-15.0 * u);
        let shift = level(t_of(gamma, &p), &p) - level(gamma, &p);
        prop_assert!((shift - 0.9).abs() <= 1e-9);
        prop_assert!(t_of(gamma, &p) < gamma);
        prop_assert!(t_of(gamma * 0.5, &p) < t_of(gamma, &p));
    }

    #[test]
    fn level_round_trip(p in params(), l in 0.0..1.3f64) {
        let g = level_inverse(l, &p);
        prop_assert!((level(g, &p) - l).abs() <= 1e-9);
    }

    #[test]
    fn observation_margin_holds(p in params(), l in 1.0..2.0f64, fractions in prop::collection::vec(0.0..1.0f64, 0..8)) {
        let top = level_inverse(l, &p);
        let s = fractions.len().min(p.k - 1);
        let total = top + fractions[..s].iter().map(|f| f * top).sum::<f64>();
        let (lt, ls) = (level(top, &p), level(total, &p));
        prop_assert!(ls <= lt + 1e-12);
        prop_assert!(ls >= lt - observation_margin(&p));
    }

    #[test]
    fn square_to_signed_diff(a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let m = (a - b).abs().min((a + b).abs());
        let sq = (a * a - b * b).abs();
        prop_assert!(m * m <= sq + 1e-15);
        prop_assert!(sq <= 2.0 * m + 1e-15);
    }

    #[test]
    fn projection_is_sorted_permutation(raw in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 1..6), graw in prop::collection::vec(-1.0..1.0f64, 4)) {
        let (Some(g), Some(us)) = (unit(&graw), raw.iter().map(|v| unit(v)).collect::<Option<Vec<_>>>()) else { return Ok(()) };
        let net = AbsNetwork::new(vec![0.0; 4], us.iter().map(|u| Neuron::new(0.1, u.clone())).collect(), 1.0).unwrap();
        let proj = scales::project(&net, &g).unwrap();
        prop_assert!(proj.v.windows(2).all(|w| w[0] <= w[1]));
        let mut idx = proj.index.clone();
        idx.sort_unstable();
        prop_assert_eq!(idx, (0..us.len()).collect::<Vec<_>>());
        for (p, &i) in proj.index.iter().enumerate() {
            prop_assert_eq!(proj.v[p], dot(&us[i], &g).abs());
        }
    }

    #[test]
    fn legal_moves_keep_boundary_zeros(w in game_vector(40), cuts in prop::collection::vec(any::<prop::sample::Index>(), 1..6)) {
        let s = ClumpState::new(w.clone()).unwrap();
        if s.len() < 2 {
            return Ok(());
        }
        let mut pts: Vec<usize> = cuts.iter().map(|c| c.index(s.len())).collect();
        pts.push(0);
        pts.push(s.len() - 1);
        pts.sort_unstable();
        pts.dedup();
        let m = Move::new(pts.windows(2).map(|p| (p[0], p[1])).collect());
        if clumping::is_legal(&s, &m, 3.0, 1.0).unwrap() {
            let out = clumping::apply_move(&s, &m, 3.0, 1.0).unwrap();
            prop_assert_eq!(out.w[0], 0.0);
            prop_assert_eq!(*out.w.last().unwrap(), 0.0);
        }
    }

    /// A 1-legal move stays 0.99-legal after any Δ-perturbation with Δ ≤ 0.01.
    #[test]
    fn monotone_conversion(w in game_vector(40), cuts in prop::collection::vec(any::<prop::sample::Index>(), 1..6), noise in prop::collection::vec(0.0..1.0f64, 42), delta in 0.0..0.01f64) {
        let s = ClumpState::new(w.clone()).unwrap();
        if s.len() < 2 {
            return Ok(());
        }
        let tau = 3.0;
        let mut moves = Vec::new();
        let mut pts: Vec<usize> = cuts.iter().map(|c| c.index(s.len())).collect();
        pts.sort_unstable();
        pts.dedup();
        let random: Vec<(usize, usize)> = pts.windows(2).map(|p| (p[0], p[1])).collect();
        if !random.is_empty() {
            moves.push(Move::new(random));
        }
        moves.extend(clumping::strategy_step(&s, tau, 0).unwrap().moves.into_iter().take(1));
        let p: Vec<f64> = w.iter().zip(&noise).map(|(&x, &r)| {
            let lo = if x > 1.0 { x - delta } else { 0.0 };
            lo + (x - lo) * r
        }).collect();
        let ps = clumping::perturb(&s, p, delta).unwrap();
        for m in moves {
            if clumping::is_legal(&s, &m, tau, 1.0).unwrap() {
                prop_assert!(clumping::is_legal(&ps, &m, tau, clumping::NOISY_PHI).unwrap());
            }
        }
    }

    #[test]
    fn transcripts_respect_invariants(w in game_vector(60)) {
        let k = w.len() - 1;
        let tau = clumping::default_tau(k);
        let tr = clumping::play_noiseless(w, tau).unwrap();
        prop_assert_eq!(tr.terminal.w.clone(), vec![0.0]);
        prop_assert!(tr.all_legal());
        prop_assert!(tr.move_count() as f64 <= clumping::move_bound(k));
        for st in &tr.steps {
            let s = ClumpState { w: st.after.clone(), ids: vec![0; st.after.len()] };
            prop_assert!(clumping::zero_entry_invariant(&s));
        }
        for (ground, parts) in &tr.rounds {
            prop_assert!(*parts <= ground.div_ceil(2));
        }
    }

    #[test]
    fn noisy_replay_has_no_violations(w in game_vector(60), seed in any::<u64>()) {
        let k = w.len() - 1;
        let tau = clumping::default_tau(k);
        let delta = 1.0 / (100.0 * k as f64);
        let mut adv = clumping::Adversary::random(seed);
        let tr = clumping::play_noisy(w, tau, &mut adv, delta).unwrap();
        prop_assert_eq!(tr.violations(), 0);
    }

    #[test]
    fn grid_rounding_stays_on_grid(lambda in -5.0..5.0f64, upsilon in 0.01..0.5f64, r in 1.0..3.0f64) {
        let x = round_to_grid(lambda, upsilon, r);
        let grid = weight_grid(upsilon, r);
        prop_assert!(grid.iter().any(|g| (g - x).abs() < 1e-9));
        prop_assert!(x <= lambda.clamp(-r, r) + 1e-9);
    }

    #[test]
    fn net_covers_planar_span(theta in 0.0..std::f64::consts::TAU, phi in 0.0..std::f64::consts::PI) {
        let basis = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]];
        let net = candidate_net(&basis, 0.1, 1_000_000).unwrap();
        let u = [phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos(), 0.0];
        prop_assert!(nearest_in_net(&net, &u).unwrap().1 <= 0.1);
    }
}
