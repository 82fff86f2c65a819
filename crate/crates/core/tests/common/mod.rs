#![allow(dead_code, clippy::needless_range_loop)]

use cmdp_core::constrained::synthesize;
use cmdp_core::rng::StreamRng;
use cmdp_core::{ConstraintSpec, Error, Matrix, MdpModel, ModelParts, Policy, Stagewise, StageValues};

pub fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

pub fn below(rng: &mut StreamRng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Column-stochastic n×n matrix with some structural zeros.
pub fn random_stochastic(rng: &mut StreamRng, n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        let mut col: Vec<f64> = (0..n)
            .map(|_| if rng.next_f64() < 0.3 { 0.0 } else { rng.next_f64() })
            .collect();
        if col.iter().all(|&v| v == 0.0) {
            col[below(rng, n)] = 1.0;
        }
        let sum: f64 = col.iter().sum();
        for (i, v) in col.iter().enumerate() {
            m[(i, j)] = v / sum;
        }
    }
    m
}

pub fn random_density(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.next_f64()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Random model; with `stay_action` action 0 is the identity, which makes every
/// cap vector invariant-feasible.
pub fn random_model(rng: &mut StreamRng, n: usize, p: usize, horizon: usize, stay_action: bool) -> MdpModel {
    let epochs = horizon.saturating_sub(1);
    let stationary = rng.next_f64() < 0.5;
    let actions = |rng: &mut StreamRng| -> Vec<Matrix> {
        (0..p)
            .map(|k| if stay_action && k == 0 { Matrix::identity(n) } else { random_stochastic(rng, n) })
            .collect()
    };
    let rewards_for = |rng: &mut StreamRng| {
        let mut r = Matrix::zeros(n, p);
        for s in 0..n {
            for a in 0..p {
                r[(s, a)] = uniform(rng, -1.0, 2.0);
            }
        }
        r
    };
    let (transitions, rewards) = if stationary || epochs == 0 {
        (Stagewise::Stationary(actions(rng)), Stagewise::Stationary(rewards_for(rng)))
    } else {
        let g = (0..epochs).map(|_| actions(rng)).collect();
        let r = (0..epochs).map(|_| rewards_for(rng)).collect();
        (Stagewise::PerEpoch(g), Stagewise::PerEpoch(r))
    };
    MdpModel::new(ModelParts {
        n,
        p,
        horizon,
        transitions,
        rewards,
        terminal_reward: (0..n).map(|_| uniform(rng, 0.0, 3.0)).collect(),
        action_mask: None,
        discount: 1.0,
        caps: None,
    })
    .expect("generated model is valid")
}

/// Caps in `[0.15, 1]` with at least one cap of 1 and a comfortable total.
pub fn random_caps(rng: &mut StreamRng, n: usize) -> ConstraintSpec {
    loop {
        let mut caps: Vec<f64> = (0..n).map(|_| uniform(rng, 0.15, 1.0)).collect();
        caps[below(rng, n)] = 1.0;
        if caps.iter().sum::<f64>() >= 1.0 {
            return ConstraintSpec::new(caps).unwrap();
        }
    }
}

pub struct Feasible {
    pub model: MdpModel,
    pub caps: ConstraintSpec,
    pub policy: Policy,
    pub values: StageValues,
}

/// Random instances whose constrained synthesis succeeds. Half of them carry a
/// stay action; the rest are fully random and kept only if every stage LP is feasible.
pub fn feasible_instances(seed: u64, count: usize, max_n: usize, max_p: usize, max_horizon: usize) -> Vec<Feasible> {
    let mut rng = StreamRng::new(seed, 0);
    let mut out = Vec::new();
    let mut attempt = 0;
    while out.len() < count {
        attempt += 1;
        assert!(attempt < 50 * count, "too many infeasible draws");
        let n = 2 + below(&mut rng, max_n - 1);
        let p = 1 + below(&mut rng, max_p);
        let horizon = 2 + below(&mut rng, max_horizon - 1);
        let model = random_model(&mut rng, n, p, horizon, out.len() % 2 == 0);
        let caps = random_caps(&mut rng, n);
        match synthesize(&model, &caps) {
            Ok((policy, values)) => out.push(Feasible { model, caps, policy, values }),
            Err(Error::InfeasibleStage { .. }) => continue,
            Err(e) => panic!("unexpected synthesis failure: {e}"),
        }
    }
    out
}

/// `min_{x ∈ X} xᵀu` by filling the cheapest states up to their caps.
pub fn worst_case_value(u: &[f64], caps: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[a].partial_cmp(&u[b]).unwrap());
    let mut mass = 1.0;
    let mut total = 0.0;
    for i in order {
        let take = caps[i].min(mass);
        total += take * u[i];
        mass -= take;
        if mass <= 0.0 {
            break;
        }
    }
    total
}

/// Vertices of the safe set for n = 2.
pub fn vertices_2(caps: &[f64]) -> Vec<[f64; 2]> {
    let lo = (1.0 - caps[1]).max(0.0);
    let hi = caps[0].min(1.0);
    vec![[lo, 1.0 - lo], [hi, 1.0 - hi]]
}

/// Closed-loop matrix and reward-to-go computed with plain loops.
pub fn direct_rule_value(model: &MdpModel, t: usize, q: &Matrix, next: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = model.n();
    let mut m = vec![vec![0.0; n]; n];
    let mut u = vec![0.0; n];
    for j in 0..n {
        for k in 0..model.p() {
            u[j] += model.reward(t)[(j, k)] * q[(j, k)];
            for i in 0..n {
                m[i][j] += model.transition(t, k)[(i, j)] * q[(j, k)];
            }
        }
    }
    for j in 0..n {
        for i in 0..n {
            u[j] += m[i][j] * next[i];
        }
    }
    (m, u)
}

/// Grid-search maximin for n = 2, p = 2: rows of Q on a `step` lattice, x over
/// the safe-set vertices, keeping only rules that map every vertex under the caps.
pub fn grid_maximin(model: &MdpModel, caps: &[f64], t: usize, next: &[f64], step: f64) -> Option<f64> {
    assert_eq!((model.n(), model.p()), (2, 2));
    let steps = (1.0 / step).round() as usize;
    let verts = vertices_2(caps);
    let mut best: Option<f64> = None;
    for a in 0..=steps {
        for b in 0..=steps {
            let (qa, qb) = (a as f64 * step, b as f64 * step);
            let q = Matrix::from_rows(&[vec![qa, 1.0 - qa], vec![qb, 1.0 - qb]]).unwrap();
            let (m, u) = direct_rule_value(model, t, &q, next);
            let safe = verts.iter().all(|v| {
                (0..2).all(|i| m[i][0] * v[0] + m[i][1] * v[1] <= caps[i] + 1e-12)
            });
            if !safe {
                continue;
            }
            let value = verts
                .iter()
                .map(|v| v[0] * u[0] + v[1] * u[1])
                .fold(f64::INFINITY, f64::min);
            best = Some(best.map_or(value, |b: f64| b.max(value)));
        }
    }
    best
}

/// Exact expected reward by propagating densities with plain loops.
pub fn direct_expected_reward(model: &MdpModel, policy: &Policy, x1: &[f64]) -> f64 {
    let mut x = x1.to_vec();
    let mut total = 0.0;
    for (t, q) in policy.stages.iter().enumerate() {
        let n = model.n();
        let mut next = vec![0.0; n];
        for j in 0..n {
            for k in 0..model.p() {
                let w = x[j] * q[(j, k)];
                total += w * model.reward(t)[(j, k)];
                for (i, nx) in next.iter_mut().enumerate() {
                    *nx += model.transition(t, k)[(i, j)] * w;
                }
            }
        }
        x = next;
    }
    total + x.iter().zip(model.terminal_reward()).map(|(a, b)| a * b).sum::<f64>()
}

pub fn basis(n: usize, s: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[s] = 1.0;
    x
}

pub fn sample_feasible(caps: &ConstraintSpec, seed: u64) -> Vec<f64> {
    cmdp_core::density::sample_feasible_density(caps, seed)
}

/// Model with flat-Dirichlet transition columns and rewards in `[0, 1]`.
pub fn unit_model(rng: &mut StreamRng, n: usize, p: usize, horizon: usize) -> MdpModel {
    let transitions = (0..p)
        .map(|_| {
            let cols: Vec<Vec<f64>> = (0..n).map(|_| random_density(rng, n)).collect();
            Matrix::from_fn(n, n, |i, j| cols[j][i])
        })
        .collect();
    let mut rewards = Matrix::zeros(n, p);
    for s in 0..n {
        for a in 0..p {
            rewards[(s, a)] = rng.next_f64();
        }
    }
    MdpModel::new(ModelParts {
        n,
        p,
        horizon,
        transitions: Stagewise::Stationary(transitions),
        rewards: Stagewise::Stationary(rewards),
        terminal_reward: (0..n).map(|_| rng.next_f64()).collect(),
        action_mask: None,
        discount: 1.0,
        caps: None,
    })
    .expect("generated model is valid")
}
