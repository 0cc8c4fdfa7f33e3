use relu_moments::clumping::move_bound;
use relu_moments::harness::{end_to_end_instance, run_learner, InstanceSpec, LearnerSpec};
use relu_moments::learner::{two_neuron_fit, validate_select, Candidate, LearnerConfig};
use relu_moments::linalg::{dot, norm};
use relu_moments::network::{l2_dist, sample_labeled, AbsNetwork, InstanceKind, L2Method, Neuron};
use relu_moments::random::{rng, unit_vector};

const FIT_TOL: f64 = 0.05;

fn fit_to(target: &AbsNetwork, n: usize, seed: u64) -> relu_moments::learner::TwoNeuronFit {
    let d = target.dim();
    let cfg = LearnerConfig::desk(0.05, d, 1, target.budget(), seed).unwrap();
    let samples = sample_labeled(target, n, 0.0, seed).unwrap();
    let g = unit_vector(&mut rng(seed ^ 0xa5), d);
    two_neuron_fit(&samples, &AbsNetwork::zero(d, target.budget()), &g, &cfg).unwrap()
}

#[test]
fn single_abs_neuron_is_recovered() {
    let u = unit_vector(&mut rng(3), 4);
    let target = AbsNetwork::new(vec![0.0; 4], vec![Neuron::new(1.0, u)], 2.0).unwrap();
    let fit = fit_to(&target, 1_000_000, 11);
    assert!(!fit.zero);
    let h = fit.hypothesis(&AbsNetwork::zero(4, 2.0)).unwrap();
    let dist = l2_dist(&h, &target, L2Method::ClosedForm).unwrap();
    assert!(dist <= FIT_TOL, "l2 {dist}");
}

#[test]
fn antipodal_pair_parameters_are_recovered() {
    // 0.9·relu(⟨u,x⟩) + 0.3·relu(⟨−u,x⟩) = 0.6|⟨u,x⟩| + 0.3⟨u,x⟩.
    let u = unit_vector(&mut rng(5), 4);
    let w: Vec<f64> = u.iter().map(|x| 0.3 * x).collect();
    let target = AbsNetwork::new(w, vec![Neuron::new(0.6, u.clone())], 2.0).unwrap();
    let fit = fit_to(&target, 1_000_000, 12);
    let s = dot(&fit.u, &u).signum();
    let (mp, mm) = if s > 0.0 { (fit.mu_plus, fit.mu_minus) } else { (fit.mu_minus, fit.mu_plus) };
    assert!((mp - 0.9).abs() <= FIT_TOL && (mm - 0.3).abs() <= FIT_TOL, "μ = ({mp}, {mm})");
    let err = norm(&fit.u.iter().zip(&u).map(|(a, b)| a - s * b).collect::<Vec<_>>());
    assert!(err <= FIT_TOL, "direction error {err}");
}

#[test]
fn zero_residual_gives_zero_fit() {
    let target = AbsNetwork::zero(4, 2.0);
    let fit = fit_to(&target, 100_000, 13);
    assert!(fit.zero);
    assert_eq!(fit.hypothesis(&target).unwrap().neurons().len(), 0);
}

#[test]
fn selection_prefers_the_better_candidate() {
    // Losses 0.01 and 0.5 against the zero target.
    let d = 4;
    let mut picked = 0;
    let mut r = rng(21);
    for t in 0..100u64 {
        let u = unit_vector(&mut r, d);
        // E[λ²⟨u,x⟩²] = λ².
        let scale = |loss: f64| loss.sqrt();
        let good = AbsNetwork::new(vec![0.0; d], vec![Neuron::new(scale(0.01), u.clone())], 2.0).unwrap();
        let bad = AbsNetwork::new(vec![0.0; d], vec![Neuron::new(scale(0.5), u)], 2.0).unwrap();
        let val = sample_labeled(&AbsNetwork::zero(d, 2.0), 100_000, 0.0, t).unwrap();
        let cands: Vec<Candidate> = [("bad", bad), ("good", good)]
            .into_iter()
            .map(|(l, h)| Candidate { label: l.into(), hypothesis: h, loss: 0.0 })
            .collect();
        if validate_select(&cands, &val).unwrap().index == 1 {
            picked += 1;
        }
    }
    assert_eq!(picked, 100);
}

#[test]
fn oracle_stage_count_within_move_bound() {
    for seed in 0..3u64 {
        let inst = InstanceSpec { kind: InstanceKind::WellSeparated, k: 2, d: 4, budget: 2.0, sep: 0.8, ladder: vec![], weights: None, noise_variance: 0.0, seed };
        let spec = LearnerSpec { moment_samples: Some(300_000), validation_samples: Some(10_000), ..LearnerSpec::seeded(seed) };
        let run = run_learner(&inst, &spec.build(&inst).unwrap()).unwrap();
        assert!(run.stages.len() as f64 <= move_bound(inst.k), "seed {seed}: {} stages", run.stages.len());
    }
}

#[test]
fn line_instance_peels_far_neuron_first() {
    let inst = end_to_end_instance(1, 4, 0.0);
    let spec = LearnerSpec { moment_samples: Some(300_000), validation_samples: Some(10_000), ..LearnerSpec::seeded(4) };
    let run = run_learner(&inst, &spec.build(&inst).unwrap()).unwrap();
    assert!(run.stages.len() >= 2);
    assert_eq!(run.stages[0].case, "case2");
    assert!(run.stages[0].clumps.iter().any(|c| c.neurons == [0] && c.detectable));
    assert_eq!(run.stages[1].case, "case1");
}
