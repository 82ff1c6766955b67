//! Environment graphs, path encodings and feasibility checks.
//!
//! A path is a simple node sequence from `start` to `goal`. Its Boolean edge
//! encoding `z` and Miller-Tucker-Zemlin order vector `u` are kept alongside
//! so encodings can be validated constraint by constraint. Path length is
//! counted in edges; with weighted edges the budget bounds the summed weight.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IppError, Result};

pub type NodeId = usize;

/// Slack absorbed by every budget comparison.
pub const BUDGET_EPS: f64 = 1e-9;

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWeightMode {
    Unit,
    Euclidean,
}

/// Directed graph with 2-D node coordinates, nonnegative edge weights,
/// start/goal nodes and the set of prediction locations.
#[derive(Clone, Debug)]
pub struct EnvGraph {
    coords: Vec<Point>,
    out_edges: Vec<Vec<(NodeId, f64)>>,
    in_edges: Vec<Vec<(NodeId, f64)>>,
    start: NodeId,
    goal: NodeId,
    prediction_points: Vec<Point>,
}

impl EnvGraph {
    pub fn new(
        coords: Vec<Point>,
        edges: &[(NodeId, NodeId, f64)],
        start: NodeId,
        goal: NodeId,
        prediction_points: Vec<Point>,
    ) -> Result<Self> {
        let n = coords.len();
        if start >= n || goal >= n {
            return Err(IppError::InvalidArgument(format!(
                "start {start} / goal {goal} out of range for {n} nodes"
            )));
        }
        if start == goal {
            return Err(IppError::InvalidArgument("start and goal coincide".into()));
        }
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(IppError::InvalidArgument(format!("edge ({i},{j}) out of range")));
            }
            if i == j {
                return Err(IppError::InvalidArgument(format!("self-loop at {i}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(IppError::InvalidArgument(format!("edge ({i},{j}) has weight {w}")));
            }
            if out_edges[i].iter().any(|&(t, _)| t == j) {
                return Err(IppError::InvalidArgument(format!("duplicate edge ({i},{j})")));
            }
            out_edges[i].push((j, w));
            in_edges[j].push((i, w));
        }
        for list in out_edges.iter_mut().chain(in_edges.iter_mut()) {
            list.sort_by_key(|&(t, _)| t);
        }
        let g = Self { coords, out_edges, in_edges, start, goal, prediction_points };
        if !g.shortest_costs_to_goal()[start].is_finite() {
            return Err(IppError::InvalidArgument("goal is unreachable from start".into()));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn m(&self) -> usize {
        self.prediction_points.len()
    }

    pub fn start(&self) -> NodeId {
        self.start
    }

    pub fn goal(&self) -> NodeId {
        self.goal
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn coord(&self, i: NodeId) -> Point {
        self.coords[i]
    }

    pub fn prediction_points(&self) -> &[Point] {
        &self.prediction_points
    }

    /// Out-neighbors of `i` with edge weights, sorted by neighbor id.
    pub fn out_edges(&self, i: NodeId) -> &[(NodeId, f64)] {
        &self.out_edges[i]
    }

    pub fn in_edges(&self, i: NodeId) -> &[(NodeId, f64)] {
        &self.in_edges[i]
    }

    pub fn edge_weight(&self, i: NodeId, j: NodeId) -> Option<f64> {
        self.out_edges
            .get(i)?
            .binary_search_by_key(&j, |&(t, _)| t)
            .ok()
            .map(|k| self.out_edges[i][k].1)
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&(j, w)| (i, j, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn min_edge_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).fold(f64::INFINITY, f64::min)
    }

    /// Same graph with different endpoints.
    pub fn with_endpoints(&self, start: NodeId, goal: NodeId) -> Result<Self> {
        let edges: Vec<_> = self.edges().collect();
        Self::new(self.coords.clone(), &edges, start, goal, self.prediction_points.clone())
    }

    pub fn with_prediction_points(mut self, points: Vec<Point>) -> Self {
        self.prediction_points = points;
        self
    }

    /// Removes every edge entering or leaving the listed nodes. Nodes stay in
    /// place so indexing remains dense.
    pub fn with_blocked_nodes(&self, blocked: &[NodeId]) -> Result<Self> {
        let edges: Vec<_> = self
            .edges()
            .filter(|(i, j, _)| !blocked.contains(i) && !blocked.contains(j))
            .collect();
        Self::new(self.coords.clone(), &edges, self.start, self.goal, self.prediction_points.clone())
    }

    pub fn without_edges(&self, removed: &[(NodeId, NodeId)]) -> Result<Self> {
        let edges: Vec<_> = self
            .edges()
            .filter(|(i, j, _)| !removed.contains(&(*i, *j)))
            .collect();
        Self::new(self.coords.clone(), &edges, self.start, self.goal, self.prediction_points.clone())
    }

    /// Axis-aligned bounding box of the node coordinates.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.coords {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Exact shortest cost from every node to the goal; unreachable nodes map
    /// to `+inf`.
    pub fn shortest_costs_to_goal(&self) -> Vec<f64> {
        self.dijkstra(self.goal, &[], true)
    }

    /// Shortest cost to the goal through nodes not marked in `blocked`. A
    /// blocked node keeps `+inf` (it may not be used as an intermediate node).
    pub fn shortest_costs_to_goal_avoiding(&self, blocked: &[bool]) -> Vec<f64> {
        self.dijkstra(self.goal, blocked, true)
    }

    pub fn shortest_costs_from(&self, source: NodeId, blocked: &[bool]) -> Vec<f64> {
        self.dijkstra(source, blocked, false)
    }

    fn dijkstra(&self, source: NodeId, blocked: &[bool], reverse: bool) -> Vec<f64> {
        let n = self.n();
        let is_blocked = |i: NodeId| blocked.get(i).copied().unwrap_or(false);
        let mut dist = vec![f64::INFINITY; n];
        if is_blocked(source) {
            return dist;
        }
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem { cost: 0.0, node: source });
        while let Some(HeapItem { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            let adj = if reverse { &self.in_edges[node] } else { &self.out_edges[node] };
            for &(next, w) in adj {
                if is_blocked(next) {
                    continue;
                }
                let c = cost + w;
                if c < dist[next] {
                    dist[next] = c;
                    heap.push(HeapItem { cost: c, node: next });
                }
            }
        }
        dist
    }

    /// Shortest path from `from` to the goal avoiding `blocked` nodes (other
    /// than `from` itself). Ties go to the lowest node index.
    pub fn shortest_path_to_goal(&self, from: NodeId, blocked: &[bool]) -> Option<Vec<NodeId>> {
        let mut mask = blocked.to_vec();
        mask.resize(self.n(), false);
        mask[from] = false;
        let dist = self.shortest_costs_to_goal_avoiding(&mask);
        if !dist[from].is_finite() {
            return None;
        }
        let mut seq = vec![from];
        let mut cur = from;
        let mut seen = vec![false; self.n()];
        seen[from] = true;
        while cur != self.goal {
            let next = self.out_edges[cur]
                .iter()
                .filter(|&&(j, _)| !mask[j] && !seen[j] && dist[j].is_finite())
                .filter(|&&(j, w)| (w + dist[j] - dist[cur]).abs() <= 1e-9 * (1.0 + dist[cur]))
                .map(|&(j, _)| j)
                .next()?;
            seen[next] = true;
            seq.push(next);
            cur = next;
        }
        Some(seq)
    }

    /// Sum of edge weights along a node sequence, or `None` if a consecutive
    /// pair is not an edge.
    pub fn sequence_cost(&self, seq: &[NodeId]) -> Option<f64> {
        seq.windows(2).map(|w| self.edge_weight(w[0], w[1])).sum()
    }

    /// Node budget implied by a cost budget: the most nodes a start-goal path
    /// within `budget` can contain.
    pub fn max_path_nodes(&self, budget: f64) -> usize {
        let wmin = self.min_edge_weight();
        let edges = if wmin > 0.0 {
            ((budget + BUDGET_EPS) / wmin).floor() as usize
        } else {
            self.n()
        };
        (edges + 1).min(self.n())
    }

    /// Budget discretization for dynamic programs: the smallest edge weight
    /// when every weight is an integer multiple of it, else `budget / 1000`.
    pub fn default_budget_resolution(&self, budget: f64) -> f64 {
        let wmin = self.min_edge_weight();
        if wmin > 0.0 && wmin.is_finite() {
            let commensurate = self.edges().all(|(_, _, w)| {
                let r = w / wmin;
                (r - r.round()).abs() <= 1e-9 * r.max(1.0)
            });
            if commensurate {
                return wmin;
            }
        }
        (budget / 1000.0).max(f64::MIN_POSITIVE)
    }
}

#[derive(PartialEq)]
struct HeapItem {
    cost: f64,
    node: NodeId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Default number of prediction points.
pub const DEFAULT_PREDICTION_POINTS: usize = 20;

/// Square lattice with unit spacing, 4-connected in both directions. Nodes are
/// row-major with node 0 at the bottom-left corner (start) and node `side^2-1`
/// at the top-right corner (goal).
pub fn build_grid(side: usize, mode: EdgeWeightMode) -> Result<EnvGraph> {
    build_grid_scaled(side, 1.0, mode)
}

/// Lattice with `spacing` between neighbors.
pub fn build_grid_scaled(side: usize, spacing: f64, mode: EdgeWeightMode) -> Result<EnvGraph> {
    if side < 2 {
        return Err(IppError::InvalidArgument(format!("grid side must be >= 2, got {side}")));
    }
    if !(spacing > 0.0) {
        return Err(IppError::InvalidArgument(format!("grid spacing must be > 0, got {spacing}")));
    }
    let n = side * side;
    let coords: Vec<Point> = (0..n)
        .map(|k| [(k % side) as f64 * spacing, (k / side) as f64 * spacing])
        .collect();
    let weight = match mode {
        EdgeWeightMode::Unit => 1.0,
        EdgeWeightMode::Euclidean => spacing,
    };
    let mut edges = Vec::with_capacity(4 * n);
    for r in 0..side {
        for c in 0..side {
            let k = r * side + c;
            if c + 1 < side {
                edges.push((k, k + 1, weight));
                edges.push((k + 1, k, weight));
            }
            if r + 1 < side {
                edges.push((k, k + side, weight));
                edges.push((k + side, k, weight));
            }
        }
    }
    let extent = (side - 1) as f64 * spacing;
    let points = covering_points([0.0, 0.0], [extent, extent], DEFAULT_PREDICTION_POINTS);
    EnvGraph::new(coords, &edges, 0, n - 1, points)
}

/// Deterministic points covering a box: cell centres of the most nearly
/// square `cols x rows` layout with `cols * rows == count` (5 x 4 for 20).
pub fn covering_points(lo: Point, hi: Point, count: usize) -> Vec<Point> {
    if count == 0 {
        return Vec::new();
    }
    let mut rows = (count as f64).sqrt().floor() as usize;
    while count % rows != 0 {
        rows -= 1;
    }
    let cols = count / rows;
    let mut pts = Vec::with_capacity(count);
    for r in 0..rows {
        for c in 0..cols {
            pts.push([
                lo[0] + (c as f64 + 0.5) / cols as f64 * (hi[0] - lo[0]),
                lo[1] + (r as f64 + 0.5) / rows as f64 * (hi[1] - lo[1]),
            ]);
        }
    }
    pts
}

/// `count` points drawn uniformly in the bounding box of the graph.
pub fn random_prediction_points<R: Rng>(g: &EnvGraph, count: usize, rng: &mut R) -> Vec<Point> {
    let (lo, hi) = g.bounds();
    (0..count)
        .map(|_| {
            [
                lo[0] + rng.random::<f64>() * (hi[0] - lo[0]),
                lo[1] + rng.random::<f64>() * (hi[1] - lo[1]),
            ]
        })
        .collect()
}

/// Edge values of a (possibly relaxed) path encoding. Missing entries are 0.
pub type EdgeValues = BTreeMap<(NodeId, NodeId), f64>;

/// A path as node sequence together with its edge matrix `z` and MTZ order
/// vector `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEncoding {
    pub sequence: Vec<NodeId>,
    #[serde(with = "edge_values_serde")]
    pub z: EdgeValues,
    pub u: Vec<i64>,
    pub total_cost: f64,
}

mod edge_values_serde {
    use super::{EdgeValues, NodeId};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &EdgeValues, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(NodeId, NodeId, f64)> = z.iter().map(|(&(i, j), &w)| (i, j, w)).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<EdgeValues, D::Error> {
        let v = Vec::<(NodeId, NodeId, f64)>::deserialize(d)?;
        Ok(v.into_iter().map(|(i, j, w)| ((i, j), w)).collect())
    }
}

impl PathEncoding {
    /// Encodes a node sequence. Fails if a consecutive pair is not an edge.
    pub fn from_sequence(g: &EnvGraph, sequence: &[NodeId]) -> Result<Self> {
        let n = g.n();
        if let Some(&bad) = sequence.iter().find(|&&i| i >= n) {
            return Err(IppError::InvalidArgument(format!("node {bad} out of range")));
        }
        let total_cost = g.sequence_cost(sequence).ok_or_else(|| {
            IppError::InvalidArgument(format!("sequence {sequence:?} uses a missing edge"))
        })?;
        let z: EdgeValues = sequence.windows(2).map(|w| ((w[0], w[1]), 1.0)).collect();
        let mut u = vec![n as i64; n];
        for (pos, &node) in sequence.iter().enumerate() {
            u[node] = pos as i64 + 1;
        }
        u[g.start()] = 1;
        Ok(Self { sequence: sequence.to_vec(), z, u, total_cost })
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.sequence.len().saturating_sub(1)
    }
}

/// Follows `z` from the start; returns the sequence if `z` is a single
/// integral start-goal chain with no extra edges.
pub fn decode_z(g: &EnvGraph, z: &EdgeValues) -> Option<Vec<NodeId>> {
    let active: Vec<(NodeId, NodeId)> = z
        .iter()
        .filter(|(_, &v)| v != 0.0)
        .map(|(&e, &v)| (v == 1.0).then_some(e))
        .collect::<Option<_>>()?;
    let mut next = BTreeMap::new();
    for &(i, j) in &active {
        if next.insert(i, j).is_some() {
            return None;
        }
    }
    let mut seq = vec![g.start()];
    let mut seen = vec![false; g.n()];
    seen[g.start()] = true;
    let mut cur = g.start();
    while cur != g.goal() {
        let j = *next.get(&cur)?;
        if seen[j] {
            return None;
        }
        seen[j] = true;
        seq.push(j);
        cur = j;
    }
    (seq.len() - 1 == active.len()).then_some(seq)
}

/// A named constraint of the edge-matrix path formulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// `z_ij = 0` for pairs that are not graph edges.
    Sparsity,
    Budget,
    StartDegree,
    GoalDegree,
    Termination,
    Connectivity,
    /// No order vector exists: `z` contains a cycle.
    Subtour,
    /// An order vector exists but the supplied `u` breaks the MTZ inequalities.
    MtzOrder,
    Integrality,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::Sparsity => "sparsity",
            Constraint::Budget => "budget",
            Constraint::StartDegree => "start-degree",
            Constraint::GoalDegree => "goal-degree",
            Constraint::Termination => "termination",
            Constraint::Connectivity => "connectivity",
            Constraint::Subtour => "subtour",
            Constraint::MtzOrder => "mtz-order",
            Constraint::Integrality => "integrality",
        }
    }
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub violations: Vec<Constraint>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, c: Constraint) -> bool {
        self.violations.contains(&c)
    }
}

const DEGREE_EPS: f64 = 1e-9;

/// Checks an encoding against every path constraint and lists the violated
/// ones. Never fails.
pub fn validate_path(g: &EnvGraph, p: &PathEncoding, budget: f64) -> Verdict {
    let n = g.n();
    let (s, t) = (g.start(), g.goal());
    let mut violations = Vec::new();
    let mut out_sum = vec![0.0; n];
    let mut in_sum = vec![0.0; n];
    // Connectivity sums exclude edges into the start / out of the goal.
    let mut out_conn = vec![0.0; n];
    let mut in_conn = vec![0.0; n];
    let mut cost = 0.0;
    let mut sparse_ok = true;
    let mut integral = true;
    for (&(i, j), &v) in &p.z {
        if v == 0.0 {
            continue;
        }
        if i >= n || j >= n {
            sparse_ok = false;
            continue;
        }
        match g.edge_weight(i, j) {
            Some(w) => cost += v * w,
            None => sparse_ok = false,
        }
        if (v - v.round()).abs() > DEGREE_EPS || !(0.0..=1.0).contains(&v.round()) {
            integral = false;
        }
        out_sum[i] += v;
        in_sum[j] += v;
        if j != s {
            out_conn[i] += v;
        }
        if i != t {
            in_conn[j] += v;
        }
    }
    if !sparse_ok {
        violations.push(Constraint::Sparsity);
    }
    if cost > budget + BUDGET_EPS {
        violations.push(Constraint::Budget);
    }
    if (out_sum[s] - 1.0).abs() > DEGREE_EPS {
        violations.push(Constraint::StartDegree);
    }
    if (in_sum[t] - 1.0).abs() > DEGREE_EPS {
        violations.push(Constraint::GoalDegree);
    }
    if in_sum[s].abs() > DEGREE_EPS || out_sum[t].abs() > DEGREE_EPS {
        violations.push(Constraint::Termination);
    }
    let conn_bad = (0..n)
        .filter(|&i| i != s && i != t)
        .any(|i| (out_conn[i] - in_conn[i]).abs() > DEGREE_EPS || out_conn[i] > 1.0 + DEGREE_EPS);
    if conn_bad {
        violations.push(Constraint::Connectivity);
    }
    if integral && sparse_ok {
        if !mtz_satisfiable(g, &p.z) {
            violations.push(Constraint::Subtour);
        } else if !mtz_holds(g, &p.z, &p.u) {
            violations.push(Constraint::MtzOrder);
        }
    }
    if !integral {
        violations.push(Constraint::Integrality);
    }
    Verdict { violations }
}

/// Whether an order vector `u` satisfying the MTZ inequalities exists for the
/// integral edge set `z`: true iff the active edges between non-start nodes
/// form no directed cycle.
pub fn mtz_satisfiable(g: &EnvGraph, z: &EdgeValues) -> bool {
    let n = g.n();
    let s = g.start();
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (&(i, j), &v) in z {
        if v > 0.5 && i != s && j != s && i < n && j < n {
            succ[i].push(j);
            indeg[j] += 1;
        }
    }
    // Kahn's algorithm: all nodes drain iff the active subgraph is acyclic.
    let mut stack: Vec<NodeId> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut drained = 0;
    while let Some(i) = stack.pop() {
        drained += 1;
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                stack.push(j);
            }
        }
    }
    drained == n
}

/// Checks the MTZ inequalities for a concrete order vector.
pub fn mtz_holds(g: &EnvGraph, z: &EdgeValues, u: &[i64]) -> bool {
    let n = g.n();
    let s = g.start();
    if u.len() != n || u[s] != 1 {
        return false;
    }
    let hi = n as i64;
    if (0..n).filter(|&i| i != s).any(|i| u[i] < 2 || u[i] > hi) {
        return false;
    }
    // With u in [2, n], pairs with z_ij = 0 always satisfy the inequality.
    z.iter().all(|(&(i, j), &v)| {
        if v < 0.5 || i == s || j == s || i == j {
            return true;
        }
        u[i] - u[j] + 1 <= (hi - 1) * (1 - v.round() as i64)
    })
}

#[derive(Clone, Debug, Default)]
pub struct Enumeration {
    pub paths: Vec<PathEncoding>,
    pub truncated: bool,
}

/// All simple start-goal paths within `budget`, in lexicographic order of
/// node sequence, stopping after `cap` paths.
pub fn enumerate_feasible_paths(g: &EnvGraph, budget: f64, cap: usize) -> Enumeration {
    let to_goal = g.shortest_costs_to_goal();
    let mut out = Enumeration::default();
    if to_goal[g.start()] > budget + BUDGET_EPS {
        return out;
    }
    let mut seq = vec![g.start()];
    let mut visited = vec![false; g.n()];
    visited[g.start()] = true;
    enumerate_rec(g, budget, cap, &to_goal, &mut seq, &mut visited, 0.0, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rec(
    g: &EnvGraph,
    budget: f64,
    cap: usize,
    to_goal: &[f64],
    seq: &mut Vec<NodeId>,
    visited: &mut [bool],
    cost: f64,
    out: &mut Enumeration,
) -> bool {
    let cur = *seq.last().expect("non-empty");
    if cur == g.goal() {
        if out.paths.len() == cap {
            out.truncated = true;
            return false;
        }
        out.paths.push(PathEncoding::from_sequence(g, seq).expect("edges come from the graph"));
        return true;
    }
    for &(j, w) in g.out_edges(cur) {
        if visited[j] || cost + w + to_goal[j] > budget + BUDGET_EPS {
            continue;
        }
        visited[j] = true;
        seq.push(j);
        let go_on = enumerate_rec(g, budget, cap, to_goal, seq, visited, cost + w, out);
        seq.pop();
        visited[j] = false;
        if !go_on {
            return false;
        }
    }
    true
}

/// Plain JSON form of a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub start: NodeId,
    pub goal: NodeId,
    pub prediction_points: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: NodeId,
    pub j: NodeId,
    pub w: f64,
}

impl From<&EnvGraph> for GraphDocument {
    fn from(g: &EnvGraph) -> Self {
        Self {
            nodes: g
                .coords
                .iter()
                .enumerate()
                .map(|(id, p)| NodeRecord { id, x: p[0], y: p[1] })
                .collect(),
            edges: g.edges().map(|(i, j, w)| EdgeRecord { i, j, w }).collect(),
            start: g.start,
            goal: g.goal,
            prediction_points: g.prediction_points.clone(),
        }
    }
}

impl TryFrom<GraphDocument> for EnvGraph {
    type Error = IppError;

    fn try_from(doc: GraphDocument) -> Result<Self> {
        let n = doc.nodes.len();
        let mut coords = vec![[f64::NAN; 2]; n];
        for rec in &doc.nodes {
            if rec.id >= n || !coords[rec.id][0].is_nan() {
                return Err(IppError::InvalidArgument(format!("node ids must be 0..{n} without gaps")));
            }
            coords[rec.id] = [rec.x, rec.y];
        }
        let edges: Vec<_> = doc.edges.iter().map(|e| (e.i, e.j, e.w)).collect();
        EnvGraph::new(coords, &edges, doc.start, doc.goal, doc.prediction_points)
    }
}

impl EnvGraph {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GraphDocument::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: GraphDocument = serde_json::from_str(s)?;
        doc.try_into()
    }
}
