//! Independent reference computations: dense inverses instead of the
//! library's whitened Cholesky updates, and a plain DFS instead of the
//! library's path enumeration.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use ipp::belief::{kernel_matrix, GaussianPrior, KernelSpec, Measurement, SensorModel};
use ipp::envgraph::{EnvGraph, NodeId, Point};
use ipp::objectives::Objective;

pub fn inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("invertible")
}

pub fn logdet(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant().ln()
}

/// Posterior covariance and mean from `(Sigma_x^-1 + sum a a^T / s^2)^-1`.
pub fn dense_posterior(
    mean0: &DVector<f64>,
    cov0: &DMatrix<f64>,
    rows: &[DVector<f64>],
    sigmas: &[f64],
    ys: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let p0 = inv(cov0);
    let mut prec = p0.clone();
    let mut rhs = &p0 * mean0;
    for ((a, s), y) in rows.iter().zip(sigmas).zip(ys) {
        prec += a * a.transpose() / (s * s);
        rhs += a * (*y / (s * s));
    }
    let cov = inv(&prec);
    let mean = &cov * rhs;
    (mean, cov)
}

/// Same posterior through the kernel-block (Kalman) form.
pub fn kernel_block_posterior(
    mean0: &DVector<f64>,
    cov0: &DMatrix<f64>,
    rows: &[DVector<f64>],
    sigmas: &[f64],
    ys: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    if rows.is_empty() {
        return (mean0.clone(), cov0.clone());
    }
    let m = mean0.len();
    let a = DMatrix::from_fn(rows.len(), m, |r, c| rows[r][c]);
    let kxs = cov0 * a.transpose();
    let mut kxx = &a * &kxs;
    for (r, s) in sigmas.iter().enumerate() {
        kxx[(r, r)] += s * s;
    }
    let kinv = inv(&kxx);
    let resid = DVector::from_iterator(ys.len(), ys.iter().zip(rows).map(|(y, a)| y - a.dot(mean0)));
    let mean = mean0 + &kxs * (&kinv * resid);
    let cov = cov0 - &kxs * &kinv * kxs.transpose();
    (mean, cov)
}

pub fn objective_of_cov(obj: Objective, cov: &DMatrix<f64>) -> f64 {
    match obj {
        Objective::A => cov.trace(),
        Objective::B => -inv(cov).trace(),
        Objective::D => logdet(cov),
        Objective::Ei => unreachable!("static objectives only"),
    }
}

/// Objective of measuring each distinct node of `seq` once, node `i` with
/// noise `sigma_of(i)`.
pub fn path_value_with(
    obj: Objective,
    prior: &GaussianPrior,
    model: &SensorModel,
    seq: &[NodeId],
    sigma_of: impl Fn(NodeId) -> f64,
) -> f64 {
    let mut nodes = seq.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let rows: Vec<DVector<f64>> = nodes.iter().map(|&i| model.a_row(i)).collect();
    let sig: Vec<f64> = nodes.iter().map(|&i| sigma_of(i)).collect();
    let ys = vec![0.0; nodes.len()];
    let (_, cov) = dense_posterior(prior.mean(), prior.cov(), &rows, &sig, &ys);
    objective_of_cov(obj, &cov)
}

pub fn path_value(obj: Objective, prior: &GaussianPrior, model: &SensorModel, seq: &[NodeId]) -> f64 {
    path_value_with(obj, prior, model, seq, |i| model.sigma(i))
}

/// Every simple start-goal path with cost at most `budget`.
pub fn all_simple_paths(g: &EnvGraph, budget: f64) -> Vec<Vec<NodeId>> {
    fn rec(g: &EnvGraph, left: f64, seq: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        let cur = *seq.last().unwrap();
        if cur == g.goal() {
            out.push(seq.clone());
            return;
        }
        for &(j, w) in g.out_edges(cur) {
            if w <= left + 1e-9 && !seq.contains(&j) {
                seq.push(j);
                rec(g, left - w, seq, out);
                seq.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(g, budget, &mut vec![g.start()], &mut out);
    out
}

pub fn path_cost(g: &EnvGraph, seq: &[NodeId]) -> f64 {
    seq.windows(2).map(|w| g.edge_weight(w[0], w[1]).expect("edge")).sum()
}

/// Well-conditioned random prior of dimension `m`: an SE kernel on random
/// points plus a ridge, and a random mean.
pub fn random_prior<R: Rng>(rng: &mut R, m: usize) -> GaussianPrior {
    let pts: Vec<Point> = (0..m).map(|_| [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)]).collect();
    let k = KernelSpec::squared_exponential(rng.random_range(0.5..2.0));
    let mut cov = kernel_matrix(&pts, &pts, &k);
    for i in 0..m {
        cov[(i, i)] += 0.1;
    }
    let mean = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    GaussianPrior::new(mean, cov).expect("SPD prior")
}

/// Random dense characterization for `n` nodes with per-node noise.
pub fn random_model<R: Rng>(rng: &mut R, n: usize, m: usize) -> SensorModel {
    let a = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..1.5)).collect();
    SensorModel::new(a, sigma, 0.3, 1.5).expect("valid model")
}

pub fn random_measurements<R: Rng>(rng: &mut R, model: &SensorModel, count: usize) -> Vec<Measurement> {
    (0..count)
        .map(|_| {
            let node = rng.random_range(0..model.n());
            Measurement { node, y: rng.random_range(-2.0..2.0), sigma: model.sigma(node) }
        })
        .collect()
}

pub fn max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
