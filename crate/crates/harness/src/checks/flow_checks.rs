//! Pathwise flow checks: the heat-flow moment, damped-transport decay, and
//! the agreement of the derivative routes on both models.

use geometry::{Manifold, RotationGroup, Sphere};
use rayon::prelude::*;
use sde_engine::{
    bismut_derivative, covariant_operator, decompose_noise, defect_guard, integrate,
    BrownianDriver, TimeGrid,
};
use transport::frame_along;

use crate::checks::{direction_main, directions_three, random_unit, scratch};
use crate::config::ExperimentConfig;
use crate::mc;
use crate::report::{AssertionRow, CheckReport, ReportBuilder, RowKind};
use crate::sweep::{assess, LevelError, SweepResult};

/// Terminal alignment of the spherical motion with its start point decays
/// at the closed-form rate; the band allows Monte Carlo spread plus the
/// scheme's first-order bias.
pub fn heat_kernel_moment(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("heat-kernel-moment", cfg);
    let steps = cfg.steps_or(1000);
    let paths = cfg.paths_or(100_000);
    let grid = TimeGrid::unit(steps);

    let (w, max_defect) = mc::ensemble_with_max(paths, |p| {
        let driver = BrownianDriver::sample(grid, cfg.seed, p);
        let path = integrate::<Sphere>(&Sphere::base_point(), &driver);
        (path.points[steps].dot(&path.points[0]), path.max_step_defect)
    });

    let target = (-1.0f64).exp();
    let band = 3.0 * w.se() + 5.0 * grid.dt();
    b.row(
        RowKind::Band,
        AssertionRow::band(
            "terminal alignment matches the closed-form decay",
            target,
            w.mean(),
            w.se(),
            band,
        ),
    );
    b.row(
        RowKind::Upper,
        AssertionRow::upper_bound(
            "step re-projection defect stays within the integrator guard",
            max_defect,
            defect_guard(grid.dt()),
        ),
    );
    b.note(format!("{paths} paths at {steps} steps"));
    b.finish()
}

/// The damped translation contracts tangent vectors at exactly half the
/// curvature rate on the sphere, pathwise, not just in the mean.
pub fn transport_decay(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("transport-decay", cfg);
    let steps = cfg.steps_or(1000);
    let paths = cfg.paths_or(32);
    let grid = TimeGrid::unit(steps);
    let dt = grid.dt();

    let worst = (0..paths)
        .into_par_iter()
        .map(|p| {
            let driver = BrownianDriver::sample(grid, cfg.seed, p);
            let path = integrate::<Sphere>(&Sphere::base_point(), &driver);
            let frame = frame_along::<Sphere>(&path.points, dt);
            let mut ch = scratch(cfg.seed, p, 5);
            let v = Sphere::kernel_proj_perp(&path.points[0]) * random_unit(&mut ch);
            let scale = 1.0 / v.norm();
            (0..=steps)
                .map(|k| {
                    let grown = (frame.damped[k] * v).norm() * (0.5 * grid.node_time(k)).exp();
                    (grown * scale - 1.0).abs()
                })
                .fold(0.0f64, f64::max)
        })
        .reduce(|| 0.0f64, f64::max);

    b.row(
        RowKind::Upper,
        AssertionRow::upper_bound(
            "normalised damped-transport magnitude stays at one along every path",
            worst,
            1e-8,
        ),
    );
    b.note(format!("{paths} paths at {steps} steps, one tangent vector each"));
    b.finish()
}

/// Variational route against the transport-integral route on the sphere,
/// on a coupled refinement ladder. The terminal gap must be small at the
/// finest grid and shrink with the declared order.
pub fn bismut_covariant(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("bismut-covariant", cfg);
    let seeds = cfg.paths_or(8);
    let finest = cfg.steps_or(10_000);
    let levels = 4usize;
    assert!(finest % (1 << (levels - 1)) == 0, "finest level must refine from a whole grid");
    let coarse_steps = finest >> (levels - 1);

    let per_seed: Vec<Vec<f64>> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let mut driver = BrownianDriver::sample(TimeGrid::unit(coarse_steps), cfg.seed, s);
            let mut errors = Vec::with_capacity(levels);
            for level in 0..levels {
                errors.push(terminal_route_gap(&driver));
                if level + 1 < levels {
                    driver = driver.refine();
                }
            }
            errors
        })
        .collect();

    let mut level_errors = Vec::with_capacity(levels);
    for l in 0..levels {
        let dt = 1.0 / (coarse_steps << l) as f64;
        let mean = per_seed.iter().map(|e| e[l]).sum::<f64>() / seeds as f64;
        level_errors.push(LevelError { dt, error: mean });
    }
    let sup_finest = per_seed.iter().map(|e| e[levels - 1]).fold(0.0f64, f64::max);

    let sweep = assess(level_errors);
    b.note(format!("route gap by level ({seeds} seeds): {}", sweep.describe()));
    b.note("direction scaled to unit norm so the gap is scale-free".to_string());
    b.row(
        RowKind::Lower,
        sweep.order_assertion("derivative routes converge together: observed order", 0.8),
    );
    b.row(
        RowKind::Upper,
        AssertionRow::upper_bound(
            "terminal route gap at the finest grid, worst seed",
            sup_finest,
            1e-2,
        ),
    );
    b.finish()
}

fn terminal_route_gap(driver: &BrownianDriver) -> f64 {
    let grid = driver.grid;
    let n = grid.steps();
    let path = integrate::<Sphere>(&Sphere::base_point(), driver);
    let split = decompose_noise(&path);
    let frame = frame_along::<Sphere>(&path.points, grid.dt());
    let raw = direction_main(&grid);
    let h = raw.scaled(1.0 / raw.norm_squared(grid.dt()).sqrt());
    let variational = bismut_derivative(&path, &h);
    let transported = covariant_operator(&path, &split, &frame).run(&split.dbeta, &h);
    (variational[n] - transported[n]).norm()
}

/// Chain rule through the solution map: differentials of cylindrical
/// functions along the derivative flow against central differences of the
/// composed functional.
pub fn fd_intertwining(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("fd-intertwining", cfg);
    let seeds = cfg.paths_or(8);
    let steps = cfg.steps_or(10_000);
    let eps = 1e-4;
    let grid = TimeGrid::unit(steps);

    let c1 = nalgebra::Vector3::new(0.3, -0.8, 0.52).normalize();
    let c2 = nalgebra::Vector3::new(0.9, 0.1, -0.4).normalize();
    let c3 = nalgebra::Vector3::new(-0.2, 0.6, 0.75).normalize();
    let fs = [
        pathspace::cylinder::sphere_linear(&grid, 1.0, c1),
        pathspace::cylinder::sphere_two_point_product(&grid, (0.5, 1.0), c2, c1),
        pathspace::cylinder::sphere_exp_height(&grid, 0.75, c3),
    ];
    let hs = directions_three(&grid);

    let max_gap = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let driver = BrownianDriver::sample(grid, cfg.seed, s);
            let path = integrate::<Sphere>(&Sphere::base_point(), &driver);
            let mut worst = 0.0f64;
            for h in &hs {
                let v = bismut_derivative(&path, h);
                let plus = integrate::<Sphere>(&Sphere::base_point(), &driver.shifted(h, eps));
                let minus = integrate::<Sphere>(&Sphere::base_point(), &driver.shifted(h, -eps));
                for f in &fs {
                    let along_flow = f.h_differential_values(&path.points, &v);
                    let by_difference =
                        (f.value(&plus.points) - f.value(&minus.points)) / (2.0 * eps);
                    worst = worst.max((along_flow - by_difference).abs());
                }
            }
            worst
        })
        .reduce(|| 0.0f64, f64::max);

    b.row(
        RowKind::Upper,
        AssertionRow::upper_bound(
            "flow differential vs finite difference of the composition: max gap",
            max_gap,
            1e-3,
        ),
    );
    b.note(format!("{seeds} seeds, 3 functions x 3 directions, {steps} steps"));
    b.finish()
}

/// Without redundant noise the derivative flow IS the projected field; the
/// two evaluations differ only by quadrature weighting.
pub fn group_intertwining(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("group-intertwining", cfg);
    let seeds = 4u64;
    let finest = cfg.steps_or(2000);
    let levels = 4usize;
    let coarse_steps = finest >> (levels - 1);

    let per_seed: Vec<Vec<f64>> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let mut driver = BrownianDriver::sample(TimeGrid::unit(coarse_steps), cfg.seed, s);
            let mut sups = Vec::with_capacity(levels);
            for level in 0..levels {
                sups.push(group_field_gap(&driver));
                if level + 1 < levels {
                    driver = driver.refine();
                }
            }
            sups
        })
        .collect();

    let mut level_errors = Vec::with_capacity(levels);
    for l in 0..levels {
        let dt = 1.0 / (coarse_steps << l) as f64;
        let mean = per_seed.iter().map(|e| e[l]).sum::<f64>() / seeds as f64;
        level_errors.push(LevelError { dt, error: mean });
    }
    let sup_finest = per_seed.iter().map(|e| e[levels - 1]).fold(0.0f64, f64::max);
    let dt_finest = 1.0 / finest as f64;

    let sweep = assess(level_errors);
    b.note(format!("field gap by level ({seeds} seeds): {}", sweep.describe()));
    b.row(
        RowKind::Upper,
        AssertionRow::upper_bound(
            "derivative flow equals the projected field up to quadrature: sup gap",
            sup_finest,
            10.0 * dt_finest,
        ),
    );
    b.row(
        RowKind::Lower,
        sweep.order_assertion("quadrature gap shrinks at first order: observed order", 0.8),
    );
    b.finish()
}

fn group_field_gap(driver: &BrownianDriver) -> f64 {
    let grid = driver.grid;
    let path = integrate::<RotationGroup>(&RotationGroup::base_point(), driver);
    let frame = frame_along::<RotationGroup>(&path.points, grid.dt());
    let h = direction_main(&grid);
    let flow = bismut_derivative(&path, &h);
    let field = pathspace::xbar::<RotationGroup>(&path, &frame, &h);
    flow.iter()
        .zip(&field.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max)
}

/// Weak-error ladder for the terminal alignment moment, used by the sweep
/// subcommand: coupled refinements of the same ensemble against the
/// closed-form limit.
pub fn heat_weak_order(cfg: &ExperimentConfig) -> (CheckReport, SweepResult) {
    let mut b = ReportBuilder::new("heat-weak-order", cfg);
    let paths = cfg.paths_or(100_000);
    let coarse_steps = 50usize;
    let levels = 4usize;

    let ws = mc::ensemble_vec(paths, levels, |p, out| {
        let mut driver = BrownianDriver::sample(TimeGrid::unit(coarse_steps), cfg.seed, p);
        for slot in out.iter_mut() {
            let path = integrate::<Sphere>(&Sphere::base_point(), &driver);
            *slot = path.points[driver.grid.steps()].dot(&path.points[0]);
            driver = driver.refine();
        }
    });

    let target = (-1.0f64).exp();
    let level_errors: Vec<LevelError> = ws
        .iter()
        .enumerate()
        .map(|(l, w)| LevelError {
            dt: 1.0 / (coarse_steps << l) as f64,
            error: (w.mean() - target).abs(),
        })
        .collect();
    let monte_carlo_floor = ws.last().map(|w| w.se()).unwrap_or(0.0);

    let sweep = assess(level_errors);
    b.note(format!("weak error by level ({paths} paths): {}", sweep.describe()));
    b.note(format!("statistical floor at the finest level: {monte_carlo_floor:.3e}"));
    match sweep.order {
        Some(order) => {
            b.row(
                RowKind::Lower,
                AssertionRow::lower_bound("weak order of the terminal moment", order, 0.8),
            );
            b.row(
                RowKind::Upper,
                AssertionRow::upper_bound("weak order stays near first order", order, 2.2),
            );
        }
        None => {
            b.row(RowKind::Lower, sweep.order_assertion("weak order of the terminal moment", 0.8));
        }
    }
    let report = b.finish();
    (report, sweep)
}
