//! Informative path planning on directed graphs.
//!
//! A robot travels from a start node to a goal node within an edge-cost
//! budget and takes a noisy linear measurement of a Gaussian field at every
//! node it visits. Paths are scored by the posterior uncertainty at a set of
//! prediction points. The crate provides:
//!
//! - [`envgraph`]: graphs, path encodings and feasibility checks;
//! - [`belief`] and [`objectives`]: the Gaussian posterior and the A, B, D,
//!   expected-improvement and mutual-information measures;
//! - [`planner`]: the receding-horizon orienteering planner and baselines;
//! - [`bounds`]: relaxation lower bounds, an exact solver for small graphs and
//!   relax-and-round;
//! - [`refine`]: swap polishing and multimodal sensor selection;
//! - [`multiagent`]: several agents planning on one shared belief;
//! - [`harness`]: experiment configuration, runs and CSV/JSON output.

pub mod belief;
pub mod bounds;
pub mod envgraph;
pub mod error;
pub mod harness;
mod linalg;
pub mod multiagent;
pub mod objectives;
pub mod planner;
pub mod refine;

pub use error::{IppError, Result};
