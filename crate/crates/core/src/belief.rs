//! Gaussian belief over the prediction variables under linear noisy
//! measurements `y = a^T x + noise`.
//!
//! The posterior is held in whitened coordinates. With the prior factor
//! `Sigma_x = L L^T` and `b = L^T a`, every measurement adds `b b^T / sigma^2`
//! to `Q = I + sum b b^T / sigma^2`, so that
//!
//! ```text
//! Sigma        = L Q^-1 L^T
//! Sigma^-1     = L^-T Q L^-1
//! logdet Sigma = logdet Sigma_x - logdet Q
//! ```
//!
//! `Q` has eigenvalues at least one, so its factorization never fails even
//! when the kernel matrix is close to singular.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::envgraph::{EnvGraph, NodeId, Point};
use crate::error::{IppError, Result};
use crate::linalg::{cholesky_lower, inverse_from_lower, logdet_from_lower, symmetrize};

/// Diagonal jitter added to kernel matrices before factorization.
pub const JITTER: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    SquaredExponential,
    Matern32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub length_scale: f64,
}

impl KernelSpec {
    pub fn squared_exponential(length_scale: f64) -> Self {
        Self { family: KernelFamily::SquaredExponential, length_scale }
    }

    pub fn matern32(length_scale: f64) -> Self {
        Self { family: KernelFamily::Matern32, length_scale }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0) || !self.length_scale.is_finite() {
            return Err(IppError::InvalidArgument(format!(
                "kernel length scale must be positive, got {}",
                self.length_scale
            )));
        }
        Ok(())
    }

    /// Covariance at distance `d`.
    pub fn eval_distance(&self, d: f64) -> f64 {
        let l = self.length_scale;
        match self.family {
            KernelFamily::SquaredExponential => (-0.5 * d * d / (l * l)).exp(),
            KernelFamily::Matern32 => {
                let r = 3f64.sqrt() * d / l;
                (1.0 + r) * (-r).exp()
            }
        }
    }

    pub fn eval(&self, p: Point, q: Point) -> f64 {
        self.eval_distance(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
    }
}

/// Cross-covariance `K(rows, cols)` without jitter.
pub fn kernel_matrix(rows: &[Point], cols: &[Point], k: &KernelSpec) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| k.eval(rows[i], cols[j]))
}

/// Prior covariance over `points` with `jitter` on the diagonal. Fails when
/// the result is not numerically positive definite.
pub fn build_prior(points: &[Point], k: &KernelSpec, jitter: f64) -> Result<DMatrix<f64>> {
    k.validate()?;
    if points.is_empty() {
        return Err(IppError::InvalidArgument("no prediction points".into()));
    }
    let mut cov = kernel_matrix(points, points, k);
    for i in 0..points.len() {
        cov[(i, i)] += jitter;
    }
    cholesky_lower(&cov, "prior covariance")?;
    Ok(cov)
}

/// Gaussian prior `N(mean, cov)` with its factorization cached.
#[derive(Clone, Debug)]
pub struct GaussianPrior {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    logdet: f64,
    precision_trace: f64,
}

impl GaussianPrior {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() != mean.len() || mean.is_empty() {
            return Err(IppError::InvalidArgument(format!(
                "prior mean of length {} does not match a {}x{} covariance",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(IppError::InvalidArgument("prior mean is not finite".into()));
        }
        let mut cov = cov;
        symmetrize(&mut cov);
        let chol = cholesky_lower(&cov, "prior covariance")?;
        let logdet = logdet_from_lower(&chol);
        let m = cov.nrows();
        let linv = chol
            .solve_lower_triangular(&DMatrix::identity(m, m))
            .expect("factor has a positive diagonal");
        let precision_trace = linv.norm_squared();
        Ok(Self { mean, cov, chol, logdet, precision_trace })
    }

    pub fn zero_mean(cov: DMatrix<f64>) -> Result<Self> {
        Self::new(DVector::zeros(cov.nrows()), cov)
    }

    /// Zero-mean prior from a kernel over `points`, with [`JITTER`].
    pub fn from_kernel(points: &[Point], k: &KernelSpec) -> Result<Self> {
        Self::zero_mean(build_prior(points, k, JITTER)?)
    }

    pub fn m(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower Cholesky factor `L` of the prior covariance.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    pub fn trace(&self) -> f64 {
        self.cov.trace()
    }

    /// `tr(Sigma_x^-1)`.
    pub fn precision_trace(&self) -> f64 {
        self.precision_trace
    }

    pub fn precision(&self) -> DMatrix<f64> {
        inverse_from_lower(&self.chol)
    }

    /// `L^T a`.
    pub fn whiten(&self, a: &DVector<f64>) -> DVector<f64> {
        self.chol.tr_mul(a)
    }
}

/// Linear measurement model: row `i` of `a` is the characterization of node
/// `i`; `sigma[i]` its noise standard deviation.
#[derive(Clone, Debug)]
pub struct SensorModel {
    a: DMatrix<f64>,
    // K(X*, loc_i) as columns, when the model was derived from a kernel. Lets
    // whitening use L^-1 k instead of L^T (Sigma_x^-1 k), which loses digits
    // on ill-conditioned priors.
    cross: Option<DMatrix<f64>>,
    sigma: Vec<f64>,
    sigma_min: f64,
    sigma_max: f64,
}

impl SensorModel {
    pub fn new(a: DMatrix<f64>, sigma: Vec<f64>, sigma_min: f64, sigma_max: f64) -> Result<Self> {
        if sigma.len() != a.nrows() {
            return Err(IppError::InvalidArgument(format!(
                "{} noise levels for {} nodes",
                sigma.len(),
                a.nrows()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(IppError::InvalidArgument("characterization has non-finite entries".into()));
        }
        if !(sigma_min > 0.0) || sigma_max < sigma_min || !sigma_max.is_finite() {
            return Err(IppError::InvalidArgument(format!(
                "invalid sensor range [{sigma_min}, {sigma_max}]"
            )));
        }
        let tol = 1e-12 * sigma_max;
        if let Some(s) = sigma.iter().find(|&&s| s < sigma_min - tol || s > sigma_max + tol) {
            return Err(IppError::InvalidArgument(format!(
                "noise level {s} outside [{sigma_min}, {sigma_max}]"
            )));
        }
        Ok(Self { a, cross: None, sigma, sigma_min, sigma_max })
    }

    /// Every node with the same noise level.
    pub fn uniform(a: DMatrix<f64>, sigma: f64) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, vec![sigma; n], sigma, sigma)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn a_row(&self, i: NodeId) -> DVector<f64> {
        self.a.row(i).transpose()
    }

    pub fn sigma(&self, i: NodeId) -> f64 {
        self.sigma[i]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigma
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Copy with new bounds on the admissible noise range.
    pub fn with_sigma_range(&self, sigma_min: f64, sigma_max: f64) -> Result<Self> {
        let mut out = Self::new(self.a.clone(), self.sigma.clone(), sigma_min, sigma_max)?;
        out.cross = self.cross.clone();
        Ok(out)
    }

    /// Whitened row `L^T a_i`.
    pub fn white_row(&self, prior: &GaussianPrior, i: NodeId) -> DVector<f64> {
        match &self.cross {
            Some(k) => prior
                .chol()
                .solve_lower_triangular(&k.column(i).into_owned())
                .expect("factor has a positive diagonal"),
            None => prior.whiten(&self.a_row(i)),
        }
    }

    /// All whitened rows as an `n x m` matrix.
    pub fn white_rows(&self, prior: &GaussianPrior) -> DMatrix<f64> {
        match &self.cross {
            Some(k) => prior
                .chol()
                .solve_lower_triangular(k)
                .expect("factor has a positive diagonal")
                .transpose(),
            None => &self.a * prior.chol(),
        }
    }
}

/// The kernel-consistent characterization `a_i = Sigma_x^-1 k(X*, loc_i)`:
/// measuring node `i` observes the GP interpolant at the node. A node placed
/// on prediction point `j` gets exactly `e_j`.
pub fn default_characterization(
    g: &EnvGraph,
    prior: &GaussianPrior,
    k: &KernelSpec,
    sigma: f64,
) -> Result<SensorModel> {
    let pts = g.prediction_points();
    if pts.len() != prior.m() {
        return Err(IppError::InvalidArgument(format!(
            "{} prediction points but the prior has dimension {}",
            pts.len(),
            prior.m()
        )));
    }
    if !(sigma > 0.0) {
        return Err(IppError::InvalidArgument(format!("noise sigma must be positive, got {sigma}")));
    }
    let n = g.n();
    let m = prior.m();
    // The nugget keeps k(X*, x_j) equal to column j of the jittered prior.
    let mut cross = kernel_matrix(pts, g.coords(), k);
    let mut a = DMatrix::zeros(n, m);
    let mut pending = Vec::new();
    for i in 0..n {
        let loc = g.coord(i);
        match pts.iter().position(|&p| p == loc) {
            Some(j) => {
                cross.set_column(i, &prior.cov().column(j));
                a[(i, j)] = 1.0;
            }
            None => pending.push(i),
        }
    }
    if !pending.is_empty() {
        let chol = nalgebra::Cholesky::new(prior.cov().clone())
            .ok_or_else(|| IppError::NumericalFailure("prior covariance: not positive definite".into()))?;
        for i in pending {
            let sol = chol.solve(&cross.column(i).into_owned());
            a.set_row(i, &sol.transpose());
        }
    }
    let mut model = SensorModel::uniform(a, sigma)?;
    model.cross = Some(cross);
    Ok(model)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub node: NodeId,
    pub y: f64,
    pub sigma: f64,
}

/// Immutable snapshot of the posterior; updates return a new value.
#[derive(Clone, Debug)]
pub struct Belief {
    prior: Arc<GaussianPrior>,
    q: DMatrix<f64>,
    q_chol: DMatrix<f64>,
    white_info: DVector<f64>,
    info: DVector<f64>,
    precision_trace: f64,
    history: Vec<Measurement>,
}

impl Belief {
    pub fn new(prior: Arc<GaussianPrior>) -> Self {
        let m = prior.m();
        Self {
            q: DMatrix::identity(m, m),
            q_chol: DMatrix::identity(m, m),
            white_info: DVector::zeros(m),
            info: DVector::zeros(m),
            precision_trace: prior.precision_trace(),
            history: Vec::new(),
            prior,
        }
    }

    pub fn prior(&self) -> &GaussianPrior {
        &self.prior
    }

    pub fn prior_arc(&self) -> &Arc<GaussianPrior> {
        &self.prior
    }

    pub fn m(&self) -> usize {
        self.prior.m()
    }

    pub fn history(&self) -> &[Measurement] {
        &self.history
    }

    /// `sum sigma^-2 (y - a^T xbar) a` over the history.
    pub fn info_vector(&self) -> &DVector<f64> {
        &self.info
    }

    /// Measurement of `node` with value `y` and noise `sigma`.
    pub fn update(&self, node: NodeId, y: f64, sigma: f64, model: &SensorModel) -> Result<Belief> {
        if node >= model.n() {
            return Err(IppError::InvalidArgument(format!("node {node} has no characterization")));
        }
        let a = model.a_row(node);
        let b = model.white_row(&self.prior, node);
        self.update_with(Measurement { node, y, sigma }, &a, &b)
    }

    /// Update from an explicit characterization `a` and its whitened form `b`.
    pub fn update_with(&self, meas: Measurement, a: &DVector<f64>, b: &DVector<f64>) -> Result<Belief> {
        let Measurement { y, sigma, .. } = meas;
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(IppError::InvalidArgument(format!("noise sigma must be positive, got {sigma}")));
        }
        if !y.is_finite() {
            return Err(IppError::InvalidArgument(format!("measurement value {y} is not finite")));
        }
        let w = 1.0 / (sigma * sigma);
        let innovation = y - a.dot(self.prior.mean());
        let mut out = self.clone();
        out.q.ger(w, b, b, 1.0);
        symmetrize(&mut out.q);
        out.q_chol = cholesky_lower(&out.q, "whitened precision")?;
        out.white_info.axpy(w * innovation, b, 1.0);
        out.info.axpy(w * innovation, a, 1.0);
        out.precision_trace += w * a.norm_squared();
        out.history.push(meas);
        Ok(out)
    }

    /// `sum sigma^-2 (y - a^T xbar) L^T a`.
    pub fn white_info(&self) -> &DVector<f64> {
        &self.white_info
    }

    /// `Q = L^T Sigma^-1 L`.
    pub fn white_precision(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `Q^-1 = L^-1 Sigma L^-T`.
    pub fn white_cov(&self) -> DMatrix<f64> {
        inverse_from_lower(&self.q_chol)
    }

    /// `Q^-1 v`.
    pub fn white_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        let z = self.q_chol.solve_lower_triangular(v).expect("positive diagonal");
        self.q_chol.tr_solve_lower_triangular(&z).expect("positive diagonal")
    }

    /// `Q^-1 V` for a matrix of columns.
    pub fn white_solve_matrix(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let z = self.q_chol.solve_lower_triangular(v).expect("positive diagonal");
        self.q_chol.tr_solve_lower_triangular(&z).expect("positive diagonal")
    }

    pub fn posterior_cov(&self) -> DMatrix<f64> {
        // L R^-T with Q = R R^T, so that Sigma = X X^T.
        let x = self.q_chol.solve_lower_triangular(&self.prior.chol().transpose())
            .expect("positive diagonal")
            .transpose();
        let mut cov = &x * x.transpose();
        symmetrize(&mut cov);
        cov
    }

    pub fn posterior_mean(&self) -> DVector<f64> {
        self.prior.mean() + self.prior.chol() * self.white_solve(&self.white_info)
    }

    /// `Sigma^-1 = Sigma_x^-1 + sum sigma^-2 a a^T`.
    pub fn precision(&self) -> DMatrix<f64> {
        let l = self.prior.chol();
        let m = self.m();
        let linv = l.solve_lower_triangular(&DMatrix::identity(m, m)).expect("positive diagonal");
        let mut p = linv.transpose() * &self.q * linv;
        symmetrize(&mut p);
        p
    }

    pub fn trace_cov(&self) -> f64 {
        let x = self.q_chol.solve_lower_triangular(&self.prior.chol().transpose())
            .expect("positive diagonal");
        x.norm_squared()
    }

    pub fn trace_precision(&self) -> f64 {
        self.precision_trace
    }

    pub fn logdet_cov(&self) -> f64 {
        self.prior.logdet() - logdet_from_lower(&self.q_chol)
    }

    /// `logdet Q = logdet Sigma_x - logdet Sigma`.
    pub fn logdet_white_precision(&self) -> f64 {
        logdet_from_lower(&self.q_chol)
    }

    /// Predictive mean and variance of `a^T x`, given `b = L^T a`.
    pub fn predict(&self, a: &DVector<f64>, b: &DVector<f64>) -> (f64, f64) {
        let mean = a.dot(self.prior.mean()) + b.dot(&self.white_solve(&self.white_info));
        let z = self.q_chol.solve_lower_triangular(b).expect("positive diagonal");
        (mean, z.norm_squared())
    }
}

/// Replays a measurement list onto the prior.
pub fn replay(prior: Arc<GaussianPrior>, model: &SensorModel, measurements: &[Measurement]) -> Result<Belief> {
    let mut b = Belief::new(prior);
    for m in measurements {
        b = b.update(m.node, m.y, m.sigma, model)?;
    }
    Ok(b)
}

/// Posterior mean and covariance computed directly from kernel blocks,
/// `K(X*,X) = Sigma_x A^T` and `K(X,X) = A Sigma_x A^T + diag(sigma^2)`,
/// without going through the precision. Serves as an independent check of
/// [`Belief`].
pub fn kernel_form_posterior(
    prior: &GaussianPrior,
    model: &SensorModel,
    measured: &[Measurement],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let m = prior.m();
    if measured.is_empty() {
        return Ok((prior.mean().clone(), prior.cov().clone()));
    }
    let k = measured.len();
    let mut a = DMatrix::zeros(k, m);
    let mut resid = DVector::zeros(k);
    for (r, meas) in measured.iter().enumerate() {
        let row = model.a_row(meas.node);
        resid[r] = meas.y - row.dot(prior.mean());
        a.set_row(r, &row.transpose());
    }
    let kxs = prior.cov() * a.transpose();
    let mut kxx = &a * &kxs;
    for (r, meas) in measured.iter().enumerate() {
        kxx[(r, r)] += meas.sigma * meas.sigma;
    }
    symmetrize(&mut kxx);
    let chol = nalgebra::Cholesky::new(kxx)
        .ok_or_else(|| IppError::NumericalFailure("measurement Gram matrix: not positive definite".into()))?;
    let mean = prior.mean() + &kxs * chol.solve(&resid);
    let mut cov = prior.cov() - &kxs * chol.solve(&kxs.transpose());
    symmetrize(&mut cov);
    Ok((mean, cov))
}

/// Standard GP regression at `test` points from noisy observations at
/// `train`, with prior mean `mean0` everywhere.
pub fn gp_posterior(
    train: &[Point],
    y: &[f64],
    noise_sigma: f64,
    test: &[Point],
    k: &KernelSpec,
    mean0: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if train.len() != y.len() {
        return Err(IppError::InvalidArgument("one value per training point required".into()));
    }
    let mut kxx = kernel_matrix(train, train, k);
    for i in 0..train.len() {
        kxx[(i, i)] += noise_sigma * noise_sigma + JITTER;
    }
    let chol = nalgebra::Cholesky::new(kxx)
        .ok_or_else(|| IppError::NumericalFailure("training Gram matrix: not positive definite".into()))?;
    let ksx = kernel_matrix(test, train, k);
    let resid = DVector::from_iterator(y.len(), y.iter().map(|v| v - mean0));
    let mean = DVector::from_element(test.len(), mean0) + &ksx * chol.solve(&resid);
    let mut cov = kernel_matrix(test, test, k) - &ksx * chol.solve(&ksx.transpose());
    symmetrize(&mut cov);
    Ok((mean, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgraph::{build_grid, EdgeWeightMode};
    use crate::linalg::max_abs_diff;

    fn scalar_prior() -> Arc<GaussianPrior> {
        Arc::new(GaussianPrior::zero_mean(DMatrix::from_element(1, 1, 1.0)).unwrap())
    }

    #[test]
    fn one_point_prior() {
        let cov = build_prior(&[[0.3, 0.4]], &KernelSpec::squared_exponential(1.0), JITTER).unwrap();
        assert!((cov[(0, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn se_off_diagonal_at_one_length_scale() {
        let cov = build_prior(&[[0.0, 0.0], [1.0, 0.0]], &KernelSpec::squared_exponential(1.0), 0.0).unwrap();
        assert!((cov[(0, 1)] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((cov[(0, 1)] - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn coincident_points_need_jitter() {
        let pts = [[0.5, 0.5], [0.5, 0.5]];
        let k = KernelSpec::squared_exponential(1.0);
        assert!(matches!(build_prior(&pts, &k, 0.0), Err(IppError::NumericalFailure(_))));
        assert!(build_prior(&pts, &k, JITTER).is_ok());
    }

    #[test]
    fn matern_values() {
        let k = KernelSpec::matern32(0.45);
        assert_eq!(k.eval_distance(0.0), 1.0);
        let r = 3f64.sqrt();
        assert!((k.eval_distance(0.45) - (1.0 + r) * (-r).exp()).abs() < 1e-15);
    }

    #[test]
    fn scalar_conjugate_update() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let model = SensorModel::uniform(a, 1.0).unwrap();
        let b = Belief::new(scalar_prior()).update(0, 2.0, 1.0, &model).unwrap();
        assert!((b.posterior_mean()[0] - 1.0).abs() < 1e-14);
        assert!((b.posterior_cov()[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let prior = Arc::new(
            GaussianPrior::new(DVector::from_vec(vec![0.3, -0.2]), DMatrix::identity(2, 2)).unwrap(),
        );
        let a = DMatrix::from_row_slice(1, 2, &[0.7, 0.1]);
        let model = SensorModel::uniform(a, 0.5).unwrap();
        let y = 0.7 * 0.3 + 0.1 * -0.2;
        let b = Belief::new(prior.clone()).update(0, y, 0.5, &model).unwrap();
        assert!((b.posterior_mean() - prior.mean()).amax() < 1e-14);
        assert!(b.trace_cov() < prior.trace());
    }

    #[test]
    fn repeated_measurement_halves_variance() {
        let prior = Arc::new(GaussianPrior::zero_mean(DMatrix::identity(3, 3)).unwrap());
        let a = DMatrix::from_row_slice(1, 3, &[0.2, 0.5, -0.4]);
        let model = SensorModel::new(a, vec![1.0], 0.5, 1.0).unwrap();
        let twice = Belief::new(prior.clone())
            .update(0, 0.0, 1.0, &model)
            .unwrap()
            .update(0, 1.0, 1.0, &model)
            .unwrap();
        let once = Belief::new(prior).update(0, 0.0, 1.0 / 2f64.sqrt(), &model).unwrap();
        assert!(max_abs_diff(&twice.precision(), &once.precision()) < 1e-12);
    }

    #[test]
    fn identity_rank_one_covariance() {
        let prior = Arc::new(GaussianPrior::zero_mean(DMatrix::identity(2, 2)).unwrap());
        let model = SensorModel::uniform(DMatrix::identity(2, 2), 1.0).unwrap();
        let b = Belief::new(prior.clone());
        assert!(max_abs_diff(&b.posterior_cov(), prior.cov()) < 1e-15);
        let b = b.update(0, 0.4, 1.0, &model).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0]));
        assert!(max_abs_diff(&b.posterior_cov(), &expect) < 1e-15);
    }

    #[test]
    fn characterization_on_grid() {
        let g = build_grid(3, EdgeWeightMode::Unit).unwrap();
        // Prediction points on the lattice corners and centre, plus one
        // between nodes 0 and 1.
        let pts = vec![[0.0, 0.0], [2.0, 2.0], [1.0, 1.0], [0.5, 0.0]];
        let g = g.with_prediction_points(pts.clone());
        let k = KernelSpec::squared_exponential(1.0);
        let prior = GaussianPrior::from_kernel(&pts, &k).unwrap();
        let model = default_characterization(&g, &prior, &k, 1.0).unwrap();
        let e0 = model.a_row(0);
        assert_eq!(e0, DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]));
        assert_eq!(model.a_row(8)[1], 1.0);
        // Kernel identity Sigma_x a_i = k(X*, loc_i) for an off-knot node.
        let a1 = model.a_row(1);
        let kcol = kernel_matrix(&pts, &[g.coord(1)], &k);
        assert!((prior.cov() * &a1 - kcol.column(0)).amax() < 1e-8);
    }

    #[test]
    fn far_node_has_vanishing_characterization() {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [1e3, 0.0]];
        let edges = [(0, 1, 1.0), (1, 2, 1.0)];
        let pts = vec![[0.0, 0.0], [1.0, 0.0]];
        let g = EnvGraph::new(coords, &edges, 0, 2, pts.clone()).unwrap();
        let k = KernelSpec::squared_exponential(1.0);
        let prior = GaussianPrior::from_kernel(&pts, &k).unwrap();
        let model = default_characterization(&g, &prior, &k, 1.0).unwrap();
        assert!(model.a_row(2).amax() < 1e-12);
    }

    #[test]
    fn midpoint_characterization_is_symmetric() {
        let coords = vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]];
        let edges = [(0, 1, 1.0), (1, 2, 1.0)];
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 3.0]];
        let g = EnvGraph::new(coords, &edges, 0, 2, pts.clone()).unwrap();
        let k = KernelSpec::squared_exponential(1.0);
        let prior = GaussianPrior::from_kernel(&pts, &k).unwrap();
        let model = default_characterization(&g, &prior, &k, 1.0).unwrap();
        let a = model.a_row(1);
        // Independent oracle: solve the kernel system directly.
        let sol = prior.cov().clone().lu().solve(&kernel_matrix(&pts, &[[0.5, 0.0]], &k)).unwrap();
        assert!((&a - sol.column(0)).amax() < 1e-10);
        assert!((a[0] - a[1]).abs() < 1e-10);
        assert!(a[0] > a[2].abs());
    }

    #[test]
    fn whitened_rows_agree() {
        let g = build_grid(4, EdgeWeightMode::Unit).unwrap();
        let k = KernelSpec::squared_exponential(2.0);
        let prior = GaussianPrior::from_kernel(g.prediction_points(), &k).unwrap();
        let model = default_characterization(&g, &prior, &k, 1.0).unwrap();
        let w = model.white_rows(&prior);
        for i in 0..g.n() {
            assert!((w.row(i).transpose() - model.white_row(&prior, i)).amax() < 1e-12);
        }
    }

    #[test]
    fn kernel_form_without_measurements_is_prior() {
        let prior = GaussianPrior::zero_mean(DMatrix::identity(2, 2)).unwrap();
        let model = SensorModel::uniform(DMatrix::identity(2, 2), 1.0).unwrap();
        let (mu, cov) = kernel_form_posterior(&prior, &model, &[]).unwrap();
        assert_eq!(mu, *prior.mean());
        assert_eq!(cov, *prior.cov());
    }

    #[test]
    fn near_noiseless_measurement_pins_variance() {
        let pts = [[0.0, 0.0], [1.0, 0.0]];
        let k = KernelSpec::squared_exponential(1.0);
        let prior = GaussianPrior::from_kernel(&pts, &k).unwrap();
        let model = SensorModel::new(DMatrix::identity(2, 2), vec![1e-6, 1e-6], 1e-6, 1.0).unwrap();
        let meas = [Measurement { node: 0, y: 0.3, sigma: 1e-6 }];
        let (_, cov) = kernel_form_posterior(&prior, &model, &meas).unwrap();
        assert!(cov[(0, 0)] < 1e-10);
        let b = replay(Arc::new(prior), &model, &meas).unwrap();
        assert!(b.posterior_cov()[(0, 0)] < 1e-10);
    }

    #[test]
    fn singular_gram_is_an_error() {
        let prior = GaussianPrior::zero_mean(DMatrix::identity(2, 2)).unwrap();
        let model = SensorModel::new(DMatrix::zeros(1, 2), vec![1e-200], 1e-200, 1.0).unwrap();
        let meas = [Measurement { node: 0, y: 0.0, sigma: 1e-200 }];
        assert!(matches!(
            kernel_form_posterior(&prior, &model, &meas),
            Err(IppError::NumericalFailure(_))
        ));
    }

    #[test]
    fn invalid_sigma_rejected() {
        let model = SensorModel::uniform(DMatrix::identity(1, 1), 1.0).unwrap();
        assert!(Belief::new(scalar_prior()).update(0, 0.0, 0.0, &model).is_err());
    }
}
