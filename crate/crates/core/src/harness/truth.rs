//! Synthetic worlds: GP-smoothed random fields and Gaussian-mixture interest
//! maps.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::belief::{gp_posterior, kernel_matrix, KernelSpec, Measurement};
use crate::envgraph::{EnvGraph, Point};
use crate::error::{IppError, Result};

/// True value at every graph node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub values: Vec<f64>,
}

const JITTERS: [f64; 6] = [0.0, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5];

/// Noise level used when conditioning on the random cell values. Smaller
/// values make the map follow the white-noise draws more closely.
pub const TRUTH_CONDITIONING_SIGMA: f64 = 1.0;

/// Draws iid `U(0, 1)` values at the nodes, conditions a zero-mean GP on them
/// with noise [`TRUTH_CONDITIONING_SIGMA`], and returns one sample of the
/// posterior at the nodes.
pub fn sample_ground_truth(g: &EnvGraph, k: &KernelSpec, seed: u64) -> Result<GroundTruth> {
    k.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..g.n()).map(|_| rng.random::<f64>()).collect();
    let (mean, cov) = gp_posterior(g.coords(), &y, TRUTH_CONDITIONING_SIGMA, g.coords(), k, 0.0)?;
    let l = jittered_factor(cov)?;
    let z = DVector::from_iterator(g.n(), (0..g.n()).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let values = mean + l * z;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(IppError::NumericalFailure("ground-truth sample is not finite".into()));
    }
    Ok(GroundTruth { values: values.iter().copied().collect() })
}

fn jittered_factor(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = cov.diagonal().amax().max(1e-300);
    for eps in JITTERS {
        let mut c = cov.clone();
        for i in 0..c.nrows() {
            c[(i, i)] += eps * scale;
        }
        if let Some(ch) = c.cholesky() {
            return Ok(ch.unpack());
        }
    }
    Err(IppError::NumericalFailure("posterior covariance stays indefinite after jitter".into()))
}

/// Threshold for high-interest cells.
pub const HIGH_INTEREST: f64 = 0.4;

/// Side of the reference lattice used for normalization and metrics.
pub const LATTICE_SIDE: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Point,
    pub sx: f64,
    pub sy: f64,
}

/// Average of 8 to 12 axis-aligned Gaussian densities on the unit square,
/// scaled so the reference lattice peaks at 1. The graph's bounding box is
/// mapped onto the unit square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterestMap {
    pub bumps: Vec<Bump>,
    pub scale: f64,
    lo: Point,
    hi: Point,
}

pub fn sample_interest_map(g: &EnvGraph, seed: u64) -> InterestMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(8..=12);
    let bumps = (0..count)
        .map(|_| Bump {
            center: [rng.random(), rng.random()],
            sx: rng.random_range(0.05..0.175),
            sy: rng.random_range(0.05..0.175),
        })
        .collect();
    let (lo, hi) = g.bounds();
    let mut map = InterestMap { bumps, scale: 1.0, lo, hi };
    let peak = unit_lattice().map(|p| map.raw(p)).fold(0.0, f64::max);
    map.scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    map
}

fn unit_lattice() -> impl Iterator<Item = Point> {
    let step = 1.0 / (LATTICE_SIDE - 1) as f64;
    (0..LATTICE_SIDE * LATTICE_SIDE).map(move |k| [(k % LATTICE_SIDE) as f64 * step, (k / LATTICE_SIDE) as f64 * step])
}

impl InterestMap {
    fn raw(&self, u: Point) -> f64 {
        let sum: f64 = self
            .bumps
            .iter()
            .map(|b| {
                let dx = (u[0] - b.center[0]) / b.sx;
                let dy = (u[1] - b.center[1]) / b.sy;
                (-0.5 * (dx * dx + dy * dy)).exp() / (2.0 * std::f64::consts::PI * b.sx * b.sy)
            })
            .sum();
        sum / self.bumps.len() as f64
    }

    fn to_unit(&self, p: Point) -> Point {
        let f = |i: usize| if self.hi[i] > self.lo[i] { (p[i] - self.lo[i]) / (self.hi[i] - self.lo[i]) } else { 0.5 };
        [f(0), f(1)]
    }

    fn from_unit(&self, u: Point) -> Point {
        [self.lo[0] + u[0] * (self.hi[0] - self.lo[0]), self.lo[1] + u[1] * (self.hi[1] - self.lo[1])]
    }

    /// Interest at a point in graph coordinates.
    pub fn value(&self, p: Point) -> f64 {
        self.scale * self.raw(self.to_unit(p))
    }

    pub fn node_values(&self, g: &EnvGraph) -> GroundTruth {
        GroundTruth { values: g.coords().iter().map(|&p| self.value(p)).collect() }
    }

    /// Reference lattice points, in graph coordinates, whose interest is at
    /// least [`HIGH_INTEREST`].
    pub fn high_interest_points(&self) -> Vec<Point> {
        unit_lattice()
            .filter(|&u| self.scale * self.raw(u) >= HIGH_INTEREST)
            .map(|u| self.from_unit(u))
            .collect()
    }
}

/// Summed posterior variance over the high-interest lattice points after the
/// given measurements, under a zero-mean GP prior with kernel `k`.
pub fn high_interest_trace(g: &EnvGraph, k: &KernelSpec, measurements: &[Measurement], map: &InterestMap) -> Result<f64> {
    let test = map.high_interest_points();
    if test.is_empty() {
        return Ok(0.0);
    }
    let prior_trace = test.len() as f64 * k.eval_distance(0.0);
    if measurements.is_empty() {
        return Ok(prior_trace);
    }
    let train: Vec<Point> = measurements.iter().map(|m| g.coord(m.node)).collect();
    let mut kxx = kernel_matrix(&train, &train, k);
    for (i, m) in measurements.iter().enumerate() {
        kxx[(i, i)] += m.sigma * m.sigma;
    }
    let chol = kxx
        .cholesky()
        .ok_or_else(|| IppError::NumericalFailure("measurement Gram matrix: not positive definite".into()))?;
    let kxs = kernel_matrix(&train, &test, k);
    let solved = chol.solve(&kxs);
    let explained: f64 = kxs.component_mul(&solved).sum();
    Ok(prior_trace - explained)
}
