use mcgpmp::factors::{mc_estimate_stratified, GraphProblem, SamplingRegion};
use mcgpmp::optimizer::PlannerParams;
use mcgpmp::{
    build_factor_graph, build_factor_graph_mc, compute_sdf, mc_estimate_obstacle_space,
    synth_vortex_field, EnvironmentField, Factor, FactorKind, GpModel, GraphParams,
    InterpolationMode, OccupancyGrid, PlannerState, RobotBodyModel, VortexSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_grid(side: usize, density: f64, seed: u64) -> OccupancyGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    OccupancyGrid::from_fn(side, side, 1.0, |_, _| rng.random::<f64>() < density).unwrap()
}

fn discs() -> OccupancyGrid {
    OccupancyGrid::from_fn(120, 120, 1.0, |x, y| {
        let d = |cx: f64, cy: f64| (x as f64 - cx).hypot(y as f64 - cy);
        d(45.0, 60.0) < 12.0 || d(80.0, 40.0) < 10.0 || d(75.0, 90.0) < 8.0
    })
    .unwrap()
}

fn vortex_env(grid: &OccupancyGrid) -> EnvironmentField {
    let v = VortexSpec {
        center: [60.0, 70.0],
        circulation: 300.0,
        core_radius: 10.0,
    };
    synth_vortex_field(&[v], *grid.shape(), 2.0).unwrap()
}

/// A wavy trajectory so that obstacle and environment factors are active.
fn wavy(model: &GpModel) -> Vec<PlannerState> {
    let line = model.straight_line(&[8.0, 10.0], &[110.0, 105.0]).unwrap();
    line.iter()
        .enumerate()
        .map(|(i, s)| {
            let p = s.position();
            let v = s.velocity();
            let bump = 9.0 * (i as f64 * 1.7).sin();
            PlannerState::new(&[p[0] + bump, p[1] - bump], &[v[0] - bump, v[1]]).unwrap()
        })
        .collect()
}

#[test]
fn half_obstacle_region_is_within_three_sigma() {
    let grid = OccupancyGrid::from_fn(100, 100, 1.0, |x, _| x < 50).unwrap();
    let region = SamplingRegion::of_grid(&grid);
    for seed in 0..20 {
        let est = mc_estimate_obstacle_space(&grid, &region, 10_000, seed).unwrap();
        assert!((est.p_obs - 0.5).abs() <= 0.015, "seed {seed}: {}", est.p_obs);
        assert_eq!(est.samples, 10_000);
        assert!(est.accepted <= est.samples);
    }
}

#[test]
fn benchmark_configuration_has_two_priors_and_five_gp_priors() {
    let params = PlannerParams::for_map_size(500);
    let model = params.model().unwrap();
    let grid = discs();
    let init = model.straight_line(&[5.0, 5.0], &[115.0, 115.0]).unwrap();
    let g = build_factor_graph_mc(&model, &grid, &init, &params.graph, 3).unwrap();
    assert_eq!(g.count(FactorKind::Prior), 2);
    assert_eq!(g.count(FactorKind::GpPrior), 5);
}

#[test]
fn solid_map_with_lambda_eight_counts_by_construction() {
    let model = GpModel::uniform(2, 1.0, 5.0, 5).unwrap();
    let grid = OccupancyGrid::from_fn(60, 60, 1.0, |_, _| true).unwrap();
    let init = model.straight_line(&[5.0, 5.0], &[55.0, 50.0]).unwrap();
    let params = GraphParams {
        lambda: 8.0,
        ..GraphParams::default()
    };
    let g = build_factor_graph_mc(&model, &grid, &init, &params, 0).unwrap();
    assert_eq!(g.interp_counts(), &[8; 5]);
    assert_eq!(g.count(FactorKind::InterpObstacle) + g.count(FactorKind::InterpEnvironment), 80);
    assert_eq!(g.count(FactorKind::Obstacle), 5);
    assert_eq!(g.count(FactorKind::Environment), 5);
    assert_eq!(g.count(FactorKind::GpPrior), 5);
    assert_eq!(g.count(FactorKind::Prior), 2);
    assert_eq!(g.factors().len(), 97);
}

#[test]
fn straight_line_in_empty_calm_map_costs_nothing() {
    let grid = OccupancyGrid::empty(200, 200, 1.0).unwrap();
    let sdf = compute_sdf(&grid, 200.0).unwrap();
    let env = EnvironmentField::calm(*grid.shape()).unwrap();
    let model = GpModel::uniform(2, 10.0, 2.0, 6).unwrap();
    let init = model.straight_line(&[30.0, 40.0], &[170.0, 150.0]).unwrap();
    let params = GraphParams {
        interpolation: InterpolationMode::Fixed(4),
        ..GraphParams::default()
    };
    let g = build_factor_graph(&model, &grid, &init, &params, 0).unwrap();
    let body = RobotBodyModel::default();
    let problem = GraphProblem::new(&g, &sdf, &env, &body).unwrap();
    assert!(problem.objective(&init).unwrap() < 1e-18);
}

#[test]
fn objective_is_the_sum_of_factor_costs() {
    let grid = discs();
    let sdf = compute_sdf(&grid, 200.0).unwrap();
    let env = vortex_env(&grid);
    let model = GpModel::uniform(2, 10.0, 2.0, 6).unwrap();
    let states = wavy(&model);
    let g = build_factor_graph_mc(&model, &grid, &states, &GraphParams::default(), 9).unwrap();
    let body = RobotBodyModel::default();
    let problem = GraphProblem::new(&g, &sdf, &env, &body).unwrap();
    let mut total = 0.0;
    for i in 0..g.factors().len() {
        let r = problem.linearize_factor(i, &states).residual;
        total += 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    }
    let objective = problem.objective(&states).unwrap();
    assert!(objective > 0.0);
    assert!((objective - total).abs() <= 1e-9 * objective);
}

#[test]
fn doubling_sigma_obs_quarters_the_obstacle_cost() {
    let grid = discs();
    let sdf = compute_sdf(&grid, 200.0).unwrap();
    let env = EnvironmentField::calm(*grid.shape()).unwrap();
    let model = GpModel::uniform(2, 10.0, 2.0, 6).unwrap();
    let states = wavy(&model);
    let body = RobotBodyModel::default();
    let obstacle_cost = |sigma: f64| {
        let params = GraphParams {
            sigma_obs: sigma,
            interpolation: InterpolationMode::Fixed(5),
            ..GraphParams::default()
        };
        let g = build_factor_graph(&model, &grid, &states, &params, 0).unwrap();
        let problem = GraphProblem::new(&g, &sdf, &env, &body).unwrap();
        (0..g.factors().len())
            .filter(|&i| {
                matches!(
                    g.factors()[i].kind(),
                    FactorKind::Obstacle | FactorKind::InterpObstacle
                )
            })
            .map(|i| problem.factor_cost(i, &states))
            .sum::<f64>()
    };
    let (a, b) = (obstacle_cost(0.05), obstacle_cost(0.1));
    assert!(a > 0.0);
    assert!((b - a / 4.0).abs() <= 1e-12 * a);
}

#[test]
fn interpolated_factors_touch_only_their_bracketing_states() {
    let grid = discs();
    let sdf = compute_sdf(&grid, 200.0).unwrap();
    let env = vortex_env(&grid);
    let model = GpModel::uniform(2, 10.0, 2.0, 6).unwrap();
    let states = wavy(&model);
    let params = GraphParams {
        interpolation: InterpolationMode::Fixed(3),
        ..GraphParams::default()
    };
    let g = build_factor_graph(&model, &grid, &states, &params, 0).unwrap();
    let body = RobotBodyModel::default();
    let problem = GraphProblem::new(&g, &sdf, &env, &body).unwrap();
    for (i, f) in g.factors().iter().enumerate() {
        let (Factor::InterpObstacle { segment, .. } | Factor::InterpEnvironment { segment, .. }) = *f
        else {
            continue;
        };
        let lin = problem.linearize_factor(i, &states);
        let touched: Vec<usize> = lin.blocks.iter().map(|b| b.0).collect();
        assert_eq!(touched, vec![segment, segment + 1]);
        let base = lin.residual;
        for k in (0..states.len()).filter(|&k| k != segment && k != segment + 1) {
            let mut moved = states.clone();
            moved[k] = PlannerState::new(&[1.0, 1.0], &[50.0, -50.0]).unwrap();
            assert_eq!(problem.linearize_factor(i, &moved).residual, base);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn estimate_is_a_valid_fraction(
        density in 0.0..1.0f64,
        grid_seed in any::<u64>(),
        seed in any::<u64>(),
        samples in 1usize..2000,
    ) {
        let grid = random_grid(40, density, grid_seed);
        let est = mc_estimate_obstacle_space(&grid, &SamplingRegion::of_grid(&grid), samples, seed).unwrap();
        prop_assert!(est.accepted <= est.samples);
        prop_assert!((0.0..=1.0).contains(&est.p_obs));
    }

    #[test]
    fn exhaustive_stratified_sampling_is_exact(
        side in 2usize..40,
        density in 0.0..1.0f64,
        grid_seed in any::<u64>(),
        seed in any::<u64>(),
    ) {
        let grid = random_grid(side, density, grid_seed);
        let region = SamplingRegion::of_grid(&grid);
        let est = mc_estimate_stratified(&grid, &region, side * side, seed).unwrap();
        let exact = grid.occupied_count() as f64 / (side * side) as f64;
        prop_assert!((est.p_obs - exact).abs() <= 1e-12);
    }

    #[test]
    fn same_seed_builds_the_same_graph(seed in any::<u64>()) {
        let grid = discs();
        let sdf = compute_sdf(&grid, 200.0).unwrap();
        let env = vortex_env(&grid);
        let model = GpModel::uniform(2, 10.0, 2.0, 5).unwrap();
        let init = model.straight_line(&[5.0, 50.0], &[115.0, 70.0]).unwrap();
        let params = GraphParams::default();
        let a = build_factor_graph_mc(&model, &grid, &init, &params, seed).unwrap();
        let b = build_factor_graph_mc(&model, &grid, &init, &params, seed).unwrap();
        prop_assert_eq!(a.factors(), b.factors());
        prop_assert_eq!(a.interp_counts(), b.interp_counts());
        let body = RobotBodyModel::default();
        let states = wavy(&model);
        let fa = GraphProblem::new(&a, &sdf, &env, &body).unwrap().objective(&states).unwrap();
        let fb = GraphProblem::new(&b, &sdf, &env, &body).unwrap().objective(&states).unwrap();
        prop_assert_eq!(fa.to_bits(), fb.to_bits());
    }

    #[test]
    fn interpolation_counts_respect_the_cap(
        lambda in 0.0..200.0f64,
        max_interp in 0usize..60,
        seed in any::<u64>(),
    ) {
        let grid = discs();
        let model = GpModel::uniform(2, 10.0, 2.0, 5).unwrap();
        let init = model.straight_line(&[5.0, 50.0], &[115.0, 70.0]).unwrap();
        let params = GraphParams { lambda, max_interp, ..GraphParams::default() };
        let g = build_factor_graph_mc(&model, &grid, &init, &params, seed).unwrap();
        for (seg, &c) in g.interp_counts().iter().enumerate() {
            prop_assert!(c <= max_interp);
            let est = g.estimates()[seg].expect("Monte-Carlo mode records estimates");
            let wanted = (lambda * est.p_obs).round() as usize;
            prop_assert_eq!(c, wanted.min(max_interp));
        }
        prop_assert_eq!(g.count(FactorKind::InterpObstacle), g.interp_counts().iter().sum::<usize>());
    }
}
