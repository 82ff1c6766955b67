//! Scalar informativeness measures. All are minimized:
//!
//! | kind | value |
//! |------|-------|
//! | A    | `tr Sigma` |
//! | B    | `-tr Sigma^-1` |
//! | D    | `logdet Sigma` |
//! | EI   | net expected improvement left at the prediction points |
//!
//! Designs are relaxed visit weights `w` in `[0,1]^n`; the design precision is
//! `Sigma_x^-1 + sum_i w_i a_i a_i^T / sigma_i^2`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::belief::{Belief, GaussianPrior, SensorModel};
use crate::error::{IppError, Result};
use crate::linalg::{cholesky_lower, inverse_from_lower, logdet_from_lower, weighted_gram};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    A,
    B,
    D,
    Ei,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::A => "a",
            Objective::B => "b",
            Objective::D => "d",
            Objective::Ei => "ei",
        }
    }

    pub fn is_static(self) -> bool {
        self != Objective::Ei
    }

    fn require_static(self) -> Result<()> {
        if self.is_static() {
            Ok(())
        } else {
            Err(IppError::WrongObjective(self))
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = IppError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Objective::A),
            "b" => Ok(Objective::B),
            "d" => Ok(Objective::D),
            "ei" => Ok(Objective::Ei),
            other => Err(IppError::InvalidArgument(format!("unknown objective {other:?}"))),
        }
    }
}

/// Objective of an explicit covariance matrix.
pub fn eval_covariance(obj: Objective, cov: &DMatrix<f64>) -> Result<f64> {
    obj.require_static()?;
    match obj {
        Objective::A => Ok(cov.trace()),
        Objective::B => {
            let l = cholesky_lower(cov, "covariance")?;
            Ok(-inverse_from_lower(&l).trace())
        }
        _ => Ok(logdet_from_lower(&cholesky_lower(cov, "covariance")?)),
    }
}

pub fn eval_belief(obj: Objective, b: &Belief) -> Result<f64> {
    match obj {
        Objective::A => Ok(b.trace_cov()),
        Objective::B => Ok(-b.trace_precision()),
        Objective::D => Ok(b.logdet_cov()),
        Objective::Ei => Err(IppError::WrongObjective(obj)),
    }
}

/// `1/2 (logdet Sigma_x - logdet Sigma)`.
pub fn mutual_information(b: &Belief) -> f64 {
    0.5 * b.logdet_white_precision()
}

/// Fixed whitened information (without the identity) and B design term.
#[derive(Clone, Debug)]
pub(crate) struct Offset {
    pub q: DMatrix<f64>,
    pub gain: f64,
}

/// Precomputed per-node data for evaluating relaxed designs and hypothetical
/// measurements against one prior.
#[derive(Clone, Debug)]
pub struct DesignSpace {
    prior: Arc<GaussianPrior>,
    white: DMatrix<f64>,
    inv_var: Vec<f64>,
    a_norm2: Vec<f64>,
    a_dot_mean: Vec<f64>,
}

impl DesignSpace {
    pub fn new(prior: Arc<GaussianPrior>, model: &SensorModel) -> Result<Self> {
        if model.m() != prior.m() {
            return Err(IppError::InvalidArgument(format!(
                "sensor model has dimension {} but the prior has {}",
                model.m(),
                prior.m()
            )));
        }
        let white = model.white_rows(&prior);
        let inv_var = model.sigmas().iter().map(|s| 1.0 / (s * s)).collect();
        let a = model.a();
        let a_norm2 = (0..model.n()).map(|i| a.row(i).norm_squared()).collect();
        let am = a * prior.mean();
        Ok(Self { prior, white, inv_var, a_norm2, a_dot_mean: am.iter().copied().collect() })
    }

    /// Same space with node `i` measured at noise `sigmas[i]`.
    pub fn with_sigmas(&self, sigmas: &[f64]) -> Result<Self> {
        if sigmas.len() != self.n() || sigmas.iter().any(|s| !(*s > 0.0)) {
            return Err(IppError::InvalidArgument("one positive noise level per node required".into()));
        }
        let mut out = self.clone();
        out.inv_var = sigmas.iter().map(|s| 1.0 / (s * s)).collect();
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.white.nrows()
    }

    pub fn m(&self) -> usize {
        self.white.ncols()
    }

    pub fn prior(&self) -> &Arc<GaussianPrior> {
        &self.prior
    }

    pub fn white_rows(&self) -> &DMatrix<f64> {
        &self.white
    }

    pub fn inv_var(&self) -> &[f64] {
        &self.inv_var
    }

    pub fn a_norm2(&self) -> &[f64] {
        &self.a_norm2
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.n() {
            return Err(IppError::InvalidArgument(format!(
                "{} design weights for {} nodes",
                w.len(),
                self.n()
            )));
        }
        if let Some(v) = w.iter().find(|v| !(-1e-12..=1.0 + 1e-12).contains(*v)) {
            return Err(IppError::InvalidArgument(format!("design weight {v} outside [0, 1]")));
        }
        Ok(())
    }

    /// `Q(w) = I + sum w_i sigma_i^-2 b_i b_i^T`.
    pub fn white_precision(&self, w: &[f64]) -> DMatrix<f64> {
        let c: Vec<f64> = w.iter().zip(&self.inv_var).map(|(w, iv)| w * iv).collect();
        let m = self.m();
        weighted_gram(&self.white, &c) + DMatrix::identity(m, m)
    }

    /// `sum w_i sigma_i^-2 |a_i|^2`, the B objective's design term.
    pub fn linear_gain(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.inv_var).zip(&self.a_norm2).map(|((w, iv), a2)| w * iv * a2).sum()
    }

    /// Objective from a whitened precision `q` and the matching
    /// [`linear_gain`](Self::linear_gain).
    pub fn value_from_white(&self, obj: Objective, q: &DMatrix<f64>, linear_gain: f64) -> Result<f64> {
        obj.require_static()?;
        match obj {
            Objective::B => Ok(-(self.prior.precision_trace() + linear_gain)),
            Objective::A => {
                let r = cholesky_lower(q, "design precision")?;
                let x = r.solve_lower_triangular(&self.prior.chol().transpose()).expect("positive diagonal");
                Ok(x.norm_squared())
            }
            _ => {
                let r = cholesky_lower(q, "design precision")?;
                Ok(self.prior.logdet() - logdet_from_lower(&r))
            }
        }
    }

    pub fn evaluate(&self, obj: Objective, w: &[f64]) -> Result<f64> {
        self.evaluate_with(obj, w, None)
    }

    /// Value and gradient with respect to `w`.
    pub fn eval_grad(&self, obj: Objective, w: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.eval_grad_with(obj, w, None)
    }

    /// Information `sum w_i sigma_i^-2 b_i b_i^T` and design term of `w`, to
    /// be held fixed underneath another design.
    pub(crate) fn offset(&self, w: &[f64]) -> Offset {
        let c: Vec<f64> = w.iter().zip(&self.inv_var).map(|(w, iv)| w * iv).collect();
        Offset { q: weighted_gram(&self.white, &c), gain: self.linear_gain(w) }
    }

    pub(crate) fn white_precision_with(&self, w: &[f64], off: Option<&Offset>) -> DMatrix<f64> {
        let q = self.white_precision(w);
        match off {
            Some(o) => q + &o.q,
            None => q,
        }
    }

    pub(crate) fn evaluate_with(&self, obj: Objective, w: &[f64], off: Option<&Offset>) -> Result<f64> {
        obj.require_static()?;
        self.check(w)?;
        let gain0 = off.map_or(0.0, |o| o.gain);
        if obj == Objective::B {
            return self.value_from_white(obj, &DMatrix::zeros(0, 0), self.linear_gain(w) + gain0);
        }
        self.value_from_white(obj, &self.white_precision_with(w, off), 0.0)
    }

    pub(crate) fn eval_grad_with(&self, obj: Objective, w: &[f64], off: Option<&Offset>) -> Result<(f64, Vec<f64>)> {
        obj.require_static()?;
        self.check(w)?;
        if obj == Objective::B {
            let value = self.evaluate_with(obj, w, off)?;
            let grad = self.inv_var.iter().zip(&self.a_norm2).map(|(iv, a2)| -iv * a2).collect();
            return Ok((value, grad));
        }
        let q = self.white_precision_with(w, off);
        let r = cholesky_lower(&q, "design precision")?;
        // Z = R^-1 W^T: column i is R^-1 b_i.
        let z = r.solve_lower_triangular(&self.white.transpose()).expect("positive diagonal");
        let (value, norms) = match obj {
            Objective::A => {
                let x = r.solve_lower_triangular(&self.prior.chol().transpose()).expect("positive diagonal");
                // Sigma a_i = L Q^-1 b_i = L R^-T (R^-1 b_i).
                let qb = r.tr_solve_lower_triangular(&z).expect("positive diagonal");
                let sa = self.prior.chol() * qb;
                (x.norm_squared(), column_norms2(&sa))
            }
            _ => (self.prior.logdet() - logdet_from_lower(&r), column_norms2(&z)),
        };
        let grad = norms.iter().zip(&self.inv_var).map(|(v, iv)| -iv * v).collect();
        Ok((value, grad))
    }

    /// Objective after one extra measurement at each node, from `belief`.
    /// Measurement values do not matter for A, B and D.
    pub fn one_step_values(&self, obj: Objective, belief: &Belief) -> Result<Vec<f64>> {
        obj.require_static()?;
        let current = eval_belief(obj, belief)?;
        if obj == Objective::B {
            return Ok(self.inv_var.iter().zip(&self.a_norm2).map(|(iv, a2)| current - iv * a2).collect());
        }
        let c = belief.white_solve_matrix(&self.white.transpose());
        let s: Vec<f64> = (0..self.n()).map(|j| self.white.row(j).transpose().dot(&c.column(j))).collect();
        let out = match obj {
            Objective::A => {
                let sa = self.prior.chol() * &c;
                column_norms2(&sa)
                    .iter()
                    .enumerate()
                    .map(|(j, t)| current - self.inv_var[j] * t / (1.0 + self.inv_var[j] * s[j]))
                    .collect()
            }
            _ => (0..self.n()).map(|j| current - (self.inv_var[j] * s[j]).ln_1p()).collect(),
        };
        Ok(out)
    }

    /// Predictive mean `a_j^T xhat` and latent variance `a_j^T Sigma a_j` at
    /// every node.
    pub fn node_predictions(&self, belief: &Belief) -> (Vec<f64>, Vec<f64>) {
        let c = belief.white_solve_matrix(&self.white.transpose());
        let wi = belief.white_solve(belief.white_info());
        let mut mean = Vec::with_capacity(self.n());
        let mut var = Vec::with_capacity(self.n());
        for j in 0..self.n() {
            let b = self.white.row(j).transpose();
            mean.push(self.a_dot_mean[j] + b.dot(&wi));
            var.push(b.dot(&c.column(j)).max(0.0));
        }
        (mean, var)
    }

    /// `a_j^T xbar` for every node.
    pub fn prior_node_means(&self) -> &[f64] {
        &self.a_dot_mean
    }
}

fn column_norms2(m: &DMatrix<f64>) -> Vec<f64> {
    m.column_iter().map(|c| c.norm_squared()).collect()
}

pub fn eval_design(obj: Objective, w: &[f64], model: &SensorModel, prior: Arc<GaussianPrior>) -> Result<f64> {
    DesignSpace::new(prior, model)?.evaluate(obj, w)
}

pub fn grad_design(obj: Objective, w: &[f64], model: &SensorModel, prior: Arc<GaussianPrior>) -> Result<Vec<f64>> {
    Ok(DesignSpace::new(prior, model)?.eval_grad(obj, w)?.1)
}

fn std_normal_cdf(u: f64) -> f64 {
    0.5 * erfc(-u / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E[max(y_min - Y, 0)]` for `Y ~ N(mean, var)`. A vanishing variance gives
/// the limit `max(y_min - mean, 0)`.
pub fn expected_improvement(mean: f64, var: f64, y_min: f64) -> f64 {
    let diff = y_min - mean;
    let sd = var.max(0.0).sqrt();
    if sd <= 1e-300 || sd <= 1e-14 * diff.abs() {
        return diff.max(0.0);
    }
    let u = diff / sd;
    (diff * std_normal_cdf(u) + sd * std_normal_pdf(u)).max(0.0)
}

/// Per-node expected improvement under the current posterior.
pub fn eval_ei(b: &Belief, space: &DesignSpace, y_min: f64) -> Vec<f64> {
    let (mean, var) = space.node_predictions(b);
    mean.iter().zip(&var).map(|(&m, &v)| expected_improvement(m, v, y_min)).collect()
}

/// Expected improvement at each prediction point.
pub fn eval_ei_prediction_points(b: &Belief, y_min: f64) -> Vec<f64> {
    let mean = b.posterior_mean();
    let cov = b.posterior_cov();
    (0..b.m()).map(|p| expected_improvement(mean[p], cov[(p, p)], y_min)).collect()
}

/// Summed expected improvement over the prediction points divided by the
/// number of graph nodes.
pub fn net_ei_normalized(b: &Belief, y_min: f64, n_nodes: usize) -> f64 {
    eval_ei_prediction_points(b, y_min).iter().sum::<f64>() / n_nodes as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Measurement;
    use nalgebra::DVector;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn identity_values() {
        let i3 = DMatrix::identity(3, 3);
        assert_eq!(eval_covariance(Objective::A, &i3).unwrap(), 3.0);
        assert_eq!(eval_covariance(Objective::B, &i3).unwrap(), -3.0);
        assert_eq!(eval_covariance(Objective::D, &i3).unwrap(), 0.0);
    }

    #[test]
    fn diagonal_values() {
        let s = diag(&[0.5, 2.0]);
        assert_eq!(eval_covariance(Objective::A, &s).unwrap(), 2.5);
        assert!((eval_covariance(Objective::B, &s).unwrap() + 2.5).abs() < 1e-15);
        assert!(eval_covariance(Objective::D, &s).unwrap().abs() < 1e-15);
    }

    #[test]
    fn ei_is_rejected_for_covariance_measures() {
        let prior = Arc::new(GaussianPrior::zero_mean(DMatrix::identity(2, 2)).unwrap());
        let b = Belief::new(prior);
        assert!(matches!(eval_belief(Objective::Ei, &b), Err(IppError::WrongObjective(Objective::Ei))));
    }

    #[test]
    fn parse_and_display() {
        for o in [Objective::A, Objective::B, Objective::D, Objective::Ei] {
            assert_eq!(o.to_string().parse::<Objective>().unwrap(), o);
        }
        assert!("x".parse::<Objective>().is_err());
    }

    fn unit_space(m: usize, n_rows: usize) -> (DesignSpace, SensorModel) {
        let prior = Arc::new(GaussianPrior::zero_mean(DMatrix::identity(m, m)).unwrap());
        let mut a = DMatrix::zeros(n_rows, m);
        for i in 0..n_rows.min(m) {
            a[(i, i)] = 1.0;
        }
        let model = SensorModel::uniform(a, 1.0).unwrap();
        (DesignSpace::new(prior, &model).unwrap(), model)
    }

    #[test]
    fn half_weight_closed_form() {
        let (space, _) = unit_space(3, 3);
        let v = space.evaluate(Objective::A, &[0.5, 0.0, 0.0]).unwrap();
        assert!((v - (2.0 + 1.0 / 1.5)).abs() < 1e-14);
    }

    #[test]
    fn zero_weights_give_prior() {
        let (space, _) = unit_space(3, 3);
        let z = [0.0; 3];
        assert!((space.evaluate(Objective::A, &z).unwrap() - 3.0).abs() < 1e-14);
        assert!((space.evaluate(Objective::D, &z).unwrap()).abs() < 1e-14);
        assert!((space.evaluate(Objective::B, &z).unwrap() + 3.0).abs() < 1e-14);
    }

    #[test]
    fn mutual_information_closed_form() {
        let (space, model) = unit_space(2, 2);
        let b = Belief::new(space.prior().clone()).update(0, 1.0, 1.0, &model).unwrap();
        assert!((mutual_information(&b) - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(mutual_information(&Belief::new(space.prior().clone())), 0.0);
    }

    #[test]
    fn zero_row_gradient_is_zero() {
        let (space, _) = unit_space(2, 3);
        for obj in [Objective::A, Objective::B, Objective::D] {
            let (_, g) = space.eval_grad(obj, &[0.3, 0.2, 0.9]).unwrap();
            assert_eq!(g[2], 0.0);
        }
    }

    #[test]
    fn one_step_values_match_updates() {
        let prior = Arc::new(
            GaussianPrior::zero_mean(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8])).unwrap(),
        );
        let a = DMatrix::from_row_slice(3, 2, &[0.5, 0.2, -0.1, 0.9, 0.4, 0.4]);
        let model = SensorModel::new(a, vec![0.5, 1.0, 0.8], 0.5, 1.0).unwrap();
        let space = DesignSpace::new(prior.clone(), &model).unwrap();
        let b0 = Belief::new(prior).update(1, 0.3, 1.0, &model).unwrap();
        for obj in [Objective::A, Objective::B, Objective::D] {
            let vals = space.one_step_values(obj, &b0).unwrap();
            for j in 0..3 {
                let b1 = b0.update(j, 0.0, model.sigma(j), &model).unwrap();
                assert!((vals[j] - eval_belief(obj, &b1).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn node_predictions_match_direct_formula() {
        let prior = Arc::new(
            GaussianPrior::new(DVector::from_vec(vec![0.2, -0.1]), DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]))
                .unwrap(),
        );
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.9]);
        let model = SensorModel::uniform(a, 0.7).unwrap();
        let space = DesignSpace::new(prior.clone(), &model).unwrap();
        let b = crate::belief::replay(
            prior,
            &model,
            &[Measurement { node: 0, y: 1.0, sigma: 0.7 }, Measurement { node: 1, y: -0.5, sigma: 0.7 }],
        )
        .unwrap();
        let (mean, var) = space.node_predictions(&b);
        let mu = b.posterior_mean();
        let cov = b.posterior_cov();
        for j in 0..2 {
            let aj = model.a_row(j);
            assert!((mean[j] - aj.dot(&mu)).abs() < 1e-12);
            assert!((var[j] - aj.dot(&(&cov * &aj))).abs() < 1e-12);
        }
    }

    #[test]
    fn ei_special_cases() {
        assert_eq!(expected_improvement(1.0, 0.0, 0.5), 0.0);
        let v = expected_improvement(0.0, 1.0, 0.0);
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!((v - 0.3989).abs() < 1e-4);
        assert!((expected_improvement(-1.0, 1e-30, 0.0) - 1.0).abs() < 1e-15);
        assert!(expected_improvement(40.0, 1.0, 0.0) >= 0.0);
    }
}
