//! Structural lemmas checked on constructed instances against exact quantities.

#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng as _;
use relu_moments::learner::round_to_grid;
use relu_moments::linalg::{dot, norm};
use relu_moments::moments::exact_contracted;
use relu_moments::network::{gen_instance, l2_dist, to_abs_form, AbsNetwork, InstanceKind, InstanceParams, L2Method, Neuron};
use relu_moments::powersum::elementary_symmetric;
use relu_moments::random::{derive_seed, gaussian_vector, rng, unit_vector, Rng};
use relu_moments::scales::{self, close_far_sets, find_gapped_scale, project, scale_trace, t_of, ScaleParams};

/// Constant in the clump-removal and discretisation bounds.
const LEMMA_C: f64 = 1.0;

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

fn nudge(u: &[f64], eta: f64, r: &mut Rng) -> Vec<f64> {
    let z = gaussian_vector(r, u.len());
    let c = dot(&z, u);
    let perp: Vec<f64> = z.iter().zip(u).map(|(a, b)| a - c * b).collect();
    let p = normalize(&perp);
    normalize(&u.iter().zip(&p).map(|(a, b)| a + eta * b).collect::<Vec<_>>())
}

/// Orthogonal projector onto a random `m`-dimensional subspace.
fn random_projector(r: &mut Rng, d: usize, m: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, m, |_, _| relu_moments::random::gaussian(r));
    let q = a.qr().q();
    &q * q.transpose()
}

#[test]
fn gapped_detectable_neuron_shows_in_some_moment() {
    let (k, d, budget) = (3, 6, 2.0);
    let p = ScaleParams::desk(0.05, d, k, budget).unwrap();
    let mut checked = 0;
    for seed in 0..60u64 {
        let relu = gen_instance(InstanceKind::RandomSphere, k, d, budget, &InstanceParams::default(), seed).unwrap();
        let net = to_abs_form(&relu, budget);
        let mut r = rng(derive_seed(seed, 1));
        let g = unit_vector(&mut r, d);
        let proj = project(&net, &g).unwrap();
        let Ok(Some(rec)) = find_gapped_scale(&proj, &p) else { continue };
        if rec.close.len() != 1 || !rec.detectable {
            continue;
        }
        let i = proj.index[rec.close[0]];
        let (lambda, u) = (net.neurons()[i].weight, &net.neurons()[i].direction);
        let alpha = proj.v[rec.close[0]];
        let c1 = lambda.abs() / (2.0 * k as f64) * (alpha * alpha * rec.gamma * rec.gamma / (4.0 * k as f64)).powi(k as i32);
        let m = r.random_range(1..=d);
        let pi = random_projector(&mut r, d, m);
        let rv: Vec<f64> = (&pi * nalgebra::DVector::from_column_slice(u)).iter().copied().collect();
        let r4 = dot(&rv, &rv).powi(2);
        let best = (1..=k + 1)
            .map(|j| {
                let m = exact_contracted(&net, 2 * j, &g).unwrap().matrix;
                let mr = &m * nalgebra::DVector::from_column_slice(&rv);
                dot(&rv, mr.as_slice()).abs()
            })
            .fold(0.0, f64::max);
        assert!(best >= c1 * r4, "seed {seed}: {best:e} < {:e}", c1 * r4);
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} planted instances");
}

/// Two near-coincident neurons with weights summing below `Λ`, plus one far neuron.
fn clump_instance(seed: u64, lambda_sum: f64, eta: f64) -> (AbsNetwork, Vec<f64>) {
    let d = 4;
    let mut r = rng(seed);
    let u1 = unit_vector(&mut r, d);
    let u2 = nudge(&u1, eta, &mut r);
    let u3 = unit_vector(&mut r, d);
    let a = r.random_range(0.2..0.5);
    let net = AbsNetwork::new(
        vec![0.0; d],
        vec![Neuron::new(a, u1), Neuron::new(lambda_sum - a, u2), Neuron::new(0.5, u3)],
        2.0,
    )
    .unwrap();
    let g = unit_vector(&mut r, d);
    (net, g)
}

/// Finds a gapped scale whose close set is exactly the first two neurons.
fn clump_scale(net: &AbsNetwork, g: &[f64], p: &ScaleParams) -> Option<f64> {
    let proj = project(net, g).ok()?;
    let pos = proj.index.iter().position(|&i| i == 0)?;
    for step in scale_trace(&proj, p).ok()? {
        let cf = close_far_sets(&proj, pos, step.gamma, p).ok()?;
        let mut close: Vec<usize> = cf.close.iter().map(|&q| proj.index[q]).collect();
        close.sort_unstable();
        if cf.gapped && close == [0, 1] {
            return Some(step.gamma);
        }
    }
    None
}

fn without(net: &AbsNetwork, drop: &[usize]) -> AbsNetwork {
    let kept = net.neurons().iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, n)| n.clone()).collect();
    AbsNetwork::new(net.w().to_vec(), kept, net.budget()).unwrap()
}

#[test]
fn zeroing_an_undetectable_clump_is_cheap() {
    let (k, d) = (3usize, 4usize);
    let p = ScaleParams::desk(0.05, d, k, 2.0).unwrap();
    let mut checked = 0;
    for seed in 0..40u64 {
        let mut r = rng(derive_seed(seed, 9));
        let sum = r.random_range(-p.lambda..p.lambda);
        // At desk sizes T(γ₀) is far below f64 resolution, so the pair coincides.
        let (net, g) = clump_instance(seed, sum, 0.0);
        let Some(gamma) = clump_scale(&net, &g, &p) else { continue };
        let cost = l2_dist(&net, &without(&net, &[0, 1]), L2Method::ClosedForm).unwrap();
        let bound = LEMMA_C * (t_of(gamma, &p) * (k as f64).powi(3) * (d as f64).sqrt() + k as f64 * p.lambda);
        assert!(cost <= bound, "seed {seed}: {cost} > {bound}");
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} clumps found");
}

#[test]
fn discretising_a_detectable_clump_is_cheap() {
    let (k, d, budget, upsilon) = (3usize, 4usize, 2.0, 0.05);
    let p = ScaleParams::desk(0.05, d, k, budget).unwrap();
    for seed in 0..40u64 {
        let mut r = rng(derive_seed(seed, 11));
        let sum = r.random_range(2.0 * p.lambda..0.8);
        let (net, _) = clump_instance(seed, sum, 1e-7);
        let u_hat = nudge(&net.neurons()[0].direction, upsilon, &mut r);
        let mut replaced = without(&net, &[0, 1]);
        replaced.push(Neuron::new(round_to_grid(sum, upsilon, budget), u_hat)).unwrap();
        let cost = l2_dist(&net, &replaced, L2Method::ClosedForm).unwrap();
        let bound = LEMMA_C * (p.lambda + (k * k) as f64 * budget * upsilon);
        assert!(cost <= bound, "seed {seed}: {cost} > {bound}");
    }
}

#[test]
fn descent_can_fail_once_then_succeed() {
    // Mild T so the gaps stay resolvable in f64.
    let p = ScaleParams { eps_prime: 0.1, lambda: 0.9, gamma_floor: 1e-200, c_t: 0.5, r: 1.0, d: 1, k: 4, xi: 0.01, xi_prime: 0.01 };
    let g0 = p.eps_prime / 4.0;
    let x = (t_of(g0, &p) * g0).sqrt();
    let dd = p.eps_prime;
    let proj = scales::projection_from_values(vec![1.0], &[0.0, x, x + dd, 2.0 * x + dd], &[0.5; 4]).unwrap();
    let trace = scale_trace(&proj, &p).unwrap();
    assert!(trace[0].gapped.is_empty());
    assert!(!trace[1].gapped.is_empty());
    let rec = find_gapped_scale(&proj, &p).unwrap().unwrap();
    assert_eq!(rec.gamma, trace[1].gamma);
    assert_eq!(rec.index, 0);
}

fn big(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

#[test]
fn elementary_symmetric_matches_exact() {
    let mut r = rng(77);
    for _ in 0..200 {
        let kk = r.random_range(1..=5usize);
        let num: Vec<i64> = (0..kk).map(|_| r.random_range(-64..=64)).collect();
        let exact_z: Vec<BigRational> = num.iter().map(|&n| BigRational::new(BigInt::from(n), BigInt::from(32))).collect();
        let z: Vec<f64> = num.iter().map(|&n| n as f64 / 32.0).collect();
        let mut e = vec![big(0); kk + 1];
        e[0] = big(1);
        for (n, zi) in exact_z.iter().enumerate() {
            for j in (1..=n + 1).rev() {
                let add = zi * &e[j - 1];
                e[j] += add;
            }
        }
        // The Vieta identity holds exactly.
        for zi in &exact_z {
            let mut acc = big(0);
            for s in 0..=kk {
                let sign = if s % 2 == 0 { big(1) } else { big(-1) };
                acc += sign * &e[s] * pow(zi, kk - s);
            }
            assert_eq!(acc, big(0));
        }
        let approx = elementary_symmetric(&z);
        for (a, b) in approx.iter().zip(&e) {
            let b: f64 = b.numer().to_string().parse::<f64>().unwrap() / b.denom().to_string().parse::<f64>().unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}

fn pow(x: &BigRational, n: usize) -> BigRational {
    (0..n).fold(big(1), |acc, _| acc * x)
}
