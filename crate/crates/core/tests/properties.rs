mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use ipp::belief::{default_characterization, kernel_matrix, replay, Belief, GaussianPrior, KernelSpec, Measurement};
use ipp::bounds::{gap, relax_lower_bound, RelaxOptions};
use ipp::envgraph::{build_grid, decode_z, validate_path, Constraint, EdgeWeightMode, EnvGraph, PathEncoding};
use ipp::multiagent::{plan_fleet, AgentSpec};
use ipp::objectives::{eval_belief, expected_improvement, DesignSpace, Objective};
use ipp::planner::{aspo_plan, dp_orienteering, random_baseline, NullWorld, PlannerConfig};
use ipp::refine::select_sensors;

/// Grid with its default prediction points and an SE prior with a small
/// ridge, which keeps dense reference inverses accurate on tiny grids.
fn grid_instance(side: usize) -> (EnvGraph, Arc<GaussianPrior>, ipp::belief::SensorModel) {
    let g = build_grid(side, EdgeWeightMode::Unit).unwrap();
    let k = KernelSpec::squared_exponential(1.0);
    let mut cov = kernel_matrix(g.prediction_points(), g.prediction_points(), &k);
    for i in 0..cov.nrows() {
        cov[(i, i)] += 0.01;
    }
    let prior = Arc::new(GaussianPrior::zero_mean(cov).unwrap());
    let model = default_characterization(&g, &prior, &k, 1.0).unwrap();
    (g, prior, model)
}

fn random_path(g: &EnvGraph, model: &ipp::belief::SensorModel, prior: &Arc<GaussianPrior>, extra: f64, seed: u64) -> PathEncoding {
    let shortest = g.shortest_costs_to_goal()[g.start()];
    let cfg = PlannerConfig::new(Objective::A, shortest + extra).with_seed(seed);
    random_baseline(g, model, prior, &cfg, &mut NullWorld).unwrap().path
}

/// Random connected graph on `n` nodes: a chain plus extra edges, integer
/// weights 1 or 2, both directions.
fn small_graph(n: usize, rng: &mut ChaCha8Rng) -> EnvGraph {
    let coords = (0..n).map(|i| [i as f64, 0.0]).collect();
    let mut edges = Vec::new();
    let add = |i: usize, j: usize, w: f64, edges: &mut Vec<(usize, usize, f64)>| {
        if !edges.iter().any(|&(a, b, _)| a == i && b == j) {
            edges.push((i, j, w));
            edges.push((j, i, w));
        }
    };
    for i in 0..n - 1 {
        let w = rng.random_range(1..=2) as f64;
        add(i, i + 1, w, &mut edges);
    }
    for _ in 0..n {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j {
            let w = rng.random_range(1..=2) as f64;
            add(i, j, w, &mut edges);
        }
    }
    EnvGraph::new(coords, &edges, 0, n - 1, vec![[0.0, 0.0]]).unwrap()
}

fn best_walk(g: &EnvGraph, rewards: &[f64], at: usize, left: f64) -> f64 {
    if at == g.goal() {
        return rewards[at];
    }
    let mut best = f64::NEG_INFINITY;
    for &(j, w) in g.out_edges(at) {
        if w <= left + 1e-9 {
            best = best.max(best_walk(g, rewards, j, left - w));
        }
    }
    rewards[at] + best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn encoding_round_trips(side in 2usize..7, extra in 0usize..6, seed in 0u64..1000) {
        let (g, prior, model) = grid_instance(side);
        let p = random_path(&g, &model, &prior, extra as f64, seed);
        let budget = p.total_cost;
        prop_assert!(validate_path(&g, &p, budget).is_valid());
        let again = PathEncoding::from_sequence(&g, &p.sequence).unwrap();
        prop_assert_eq!(decode_z(&g, &again.z), Some(p.sequence.clone()));
        prop_assert!((again.total_cost - path_cost(&g, &p.sequence)).abs() < 1e-12);
    }

    #[test]
    fn detached_cycle_is_rejected(side in 3usize..6, seed in 0u64..1000) {
        let (g, prior, model) = grid_instance(side);
        let p = random_path(&g, &model, &prior, 0.0, seed);
        let on_path: Vec<bool> = (0..g.n()).map(|i| p.sequence.contains(&i)).collect();
        // Any edge between two off-path nodes, used in both directions.
        let pair = g.edges().find(|&(i, j, _)| !on_path[i] && !on_path[j]);
        prop_assume!(pair.is_some());
        let (i, j, _) = pair.unwrap();
        let mut bad = p.clone();
        bad.z.insert((i, j), 1.0);
        bad.z.insert((j, i), 1.0);
        let verdict = validate_path(&g, &bad, 1e9);
        prop_assert!(!verdict.is_valid());
        prop_assert!(decode_z(&g, &bad.z).is_none());
        prop_assert!(verdict.violates(Constraint::Subtour) || verdict.violates(Constraint::Connectivity));
    }

    #[test]
    fn updates_shrink_uncertainty(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..=8);
        let prior = Arc::new(random_prior(&mut rng, m));
        let model = random_model(&mut rng, 10, m);
        let meas = random_measurements(&mut rng, &model, 12);
        let mut b = Belief::new(prior);
        let (mut a, mut bb, mut d) = (eval_belief(Objective::A, &b).unwrap(), eval_belief(Objective::B, &b).unwrap(), eval_belief(Objective::D, &b).unwrap());
        for x in &meas {
            b = b.update(x.node, x.y, x.sigma, &model).unwrap();
            let (a2, b2, d2) = (eval_belief(Objective::A, &b).unwrap(), eval_belief(Objective::B, &b).unwrap(), eval_belief(Objective::D, &b).unwrap());
            prop_assert!(a2 <= a + 1e-12 * a.abs().max(1.0));
            prop_assert!(b2 <= bb + 1e-12 * bb.abs().max(1.0));
            prop_assert!(d2 <= d + 1e-12 * d.abs().max(1.0));
            (a, bb, d) = (a2, b2, d2);
        }
    }

    #[test]
    fn update_order_does_not_matter(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..=8);
        let prior = Arc::new(random_prior(&mut rng, m));
        let model = random_model(&mut rng, 10, m);
        let meas = random_measurements(&mut rng, &model, 10);
        let mut shuffled: Vec<Measurement> = meas.clone();
        shuffled.reverse();
        shuffled.rotate_left(rng.random_range(0..meas.len().max(1)));
        let (x, y) = (replay(prior.clone(), &model, &meas).unwrap(), replay(prior, &model, &shuffled).unwrap());
        let scale = x.precision().amax().max(1.0);
        prop_assert!(max_abs(&x.precision(), &y.precision()) <= 1e-10 * scale);
        prop_assert!((x.info_vector() - y.info_vector()).amax() <= 1e-10 * x.info_vector().amax().max(1.0));
        let direct = inv(&x.precision());
        prop_assert!(max_abs(&direct, &x.posterior_cov()) <= 1e-8 * direct.amax().max(1.0));
    }

    #[test]
    fn design_objectives_are_convex(seed in 0u64..10_000, t in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..=8);
        let n = 10;
        let prior = Arc::new(random_prior(&mut rng, m));
        let model = random_model(&mut rng, n, m);
        let space = DesignSpace::new(prior, &model).unwrap();
        let u: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        for obj in [Objective::A, Objective::B, Objective::D] {
            let (fu, fv, fm) = (space.evaluate(obj, &u).unwrap(), space.evaluate(obj, &v).unwrap(), space.evaluate(obj, &mix).unwrap());
            prop_assert!(fm <= (1.0 - t) * fu + t * fv + 1e-9 * fu.abs().max(fv.abs()).max(1.0));
        }
    }

    #[test]
    fn ei_is_nonnegative(mean in -50.0f64..50.0, var in 0.0f64..100.0, y_min in -50.0f64..50.0) {
        let ei = expected_improvement(mean, var, y_min);
        prop_assert!(ei >= -1e-12);
        prop_assert!(ei >= (y_min - mean).max(0.0) - 1e-9 * (1.0 + mean.abs() + y_min.abs()));
        prop_assert!(expected_improvement(mean, 0.0, mean).abs() <= 1e-12);
    }

    #[test]
    fn dp_is_the_best_walk(n in 3usize..=8, budget in 1usize..=6, seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = small_graph(n, &mut rng);
        let shortest = g.shortest_costs_to_goal()[g.start()];
        prop_assume!(shortest <= budget as f64);
        let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
        let (table, walk) = dp_orienteering(&g, &rewards, budget as f64, Some(1.0)).unwrap();
        let brute = best_walk(&g, &rewards, g.start(), budget as f64);
        let got = table.get(g.start(), table.max_bucket());
        prop_assert!((got - brute).abs() <= 1e-9, "dp {} brute {}", got, brute);
        let collected: f64 = walk.iter().map(|&i| rewards[i]).sum();
        prop_assert!((collected - brute).abs() <= 1e-9);
        prop_assert!(path_cost(&g, &walk) <= budget as f64 + 1e-9);
        prop_assert!(table.get(g.goal(), 0).is_finite());
    }

    #[test]
    fn aspo_paths_are_feasible_and_a_decreases(side in 2usize..7, extra in 0usize..8, seed in 0u64..1000) {
        let (g, prior, model) = grid_instance(side);
        let budget = g.shortest_costs_to_goal()[g.start()] + extra as f64;
        let cfg = PlannerConfig::new(Objective::A, budget).with_seed(seed);
        let r = aspo_plan(&g, &model, &prior, &cfg, &mut NullWorld).unwrap();
        prop_assert!(validate_path(&g, &r.path, budget).is_valid());
        for w in r.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        prop_assert!((path_value(Objective::A, &prior, &model, &r.path.sequence) - r.value).abs() <= 1e-8 * r.value.abs().max(1.0));
    }

    #[test]
    fn bound_reports_are_consistent(side in 3usize..7, extra in 0usize..6, seed in 0u64..1000, obj_i in 0usize..3) {
        let obj = [Objective::A, Objective::B, Objective::D][obj_i];
        let (g, prior, model) = grid_instance(side);
        let budget = g.shortest_costs_to_goal()[g.start()] + extra as f64;
        let space = DesignSpace::new(prior.clone(), &model).unwrap();
        let relax = relax_lower_bound(&g, &space, obj, budget, &RelaxOptions::default()).unwrap();
        prop_assert!(relax.weights.iter().all(|&w| (-1e-12..=1.0 + 1e-12).contains(&w)));
        let cfg = PlannerConfig::new(obj, budget).with_seed(seed);
        let r = aspo_plan(&g, &model, &prior, &cfg, &mut NullWorld).unwrap();
        let rep = gap(r.value, relax.lower, prior.m(), relax.kind, relax.iterations, relax.fw_gap).unwrap();
        prop_assert!(rep.lower <= rep.upper + 1e-7 * rep.upper.abs().max(1.0));
        prop_assert!(rep.gap_delta >= -1e-9);
    }

    #[test]
    fn sensor_assignments_are_well_formed(seed in 0u64..1000, k in 1usize..4) {
        let (g, prior, model) = grid_instance(4);
        let model = model.with_sigma_range(0.1, 1.0).unwrap();
        let p = random_path(&g, &model, &prior, 2.0 * (seed % 3) as f64, seed);
        let ladder = &[0.1, 0.3, 0.6][..k];
        let sel = select_sensors(&g, &model, &prior, Objective::A, &p, k, ladder).unwrap();
        let a = &sel.assignment;
        prop_assert!((a.s.values().sum::<f64>() - k as f64).abs() <= 1e-8);
        prop_assert!(a.s.keys().all(|i| p.sequence.contains(i)));
        prop_assert_eq!(a.chosen.len(), k);
        let mut levels: Vec<f64> = a.chosen.values().copied().collect();
        levels.sort_by(f64::total_cmp);
        prop_assert_eq!(levels, ladder.to_vec());
        prop_assert!(sel.rounded_value <= sel.baseline_value + 1e-12);
        prop_assert!(sel.lower_bound <= sel.relaxed_value + 1e-12);
    }

    #[test]
    fn fleet_precision_is_the_sum_over_agents(seed in 0u64..1000) {
        let (g, prior, model) = grid_instance(5);
        let n = g.n();
        let cfg = PlannerConfig::new(Objective::A, 12.0).with_seed(seed);
        let agents = vec![
            AgentSpec { start: 0, goal: n - 1, budget: 10.0 },
            AgentSpec { start: 4, goal: n - 5, budget: 12.0 },
        ];
        let f = plan_fleet(&g, &model, &prior, &cfg, &agents, &mut NullWorld).unwrap();
        for (a, r) in agents.iter().zip(&f.agents) {
            let ga = g.with_endpoints(a.start, a.goal).unwrap();
            prop_assert!(validate_path(&ga, &r.path, a.budget).is_valid());
        }
        let shared = replay(prior.clone(), &model, &f.measurements).unwrap();
        let mut expect = prior.precision();
        for r in &f.agents {
            for x in &r.measurements {
                let a = model.a_row(x.node);
                expect += &a * a.transpose() / (x.sigma * x.sigma);
            }
        }
        prop_assert!(max_abs(&shared.precision(), &expect) <= 1e-10 * expect.amax().max(1.0));
        prop_assert!((eval_belief(Objective::A, &shared).unwrap() - f.joint_value).abs() <= 1e-10 * f.joint_value.abs().max(1.0));
    }
}
