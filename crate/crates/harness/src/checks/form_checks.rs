//! One-form checks on path space: the integration-by-parts pairing, the
//! pull-back consistency ladder, and the energy domination bound.

use geometry::{Manifold, RotationGroup, Sphere};
use nalgebra::{Matrix3, Vector3};
use pathspace::{
    direct_evaluation, l2_representer, pullback_one_form, xbar, BismutTangent,
    CylindricalFunction,
};
use sde_engine::{bismut_derivative, decompose_noise, integrate, BrownianDriver, TimeGrid};
use transport::frame_along;
use wiener::cameron_martin_pairing;

use crate::checks::direction_main;
use crate::config::ExperimentConfig;
use crate::mc;
use crate::report::{AssertionRow, CheckReport, ReportBuilder, RowKind};
use crate::sweep::{assess, LevelError};

/// E[df(V_h)] = E[f * integral of h-dot against the noise] for cylindrical f.
/// One paired z-statistic per function, on both models.
pub fn path_ibp(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("path-ibp", cfg);
    let steps = cfg.steps_or(2000);
    let paths = cfg.paths_or(100_000);
    let grid = TimeGrid::unit(steps);
    let h = direction_main(&grid);

    let c1 = Vector3::new(0.3, -0.8, 0.52).normalize();
    let c2 = Vector3::new(0.9, 0.1, -0.4).normalize();
    let c3 = Vector3::new(-0.2, 0.6, 0.75).normalize();
    let sphere_fs = vec![
        pathspace::cylinder::sphere_linear(&grid, 1.0, c1),
        pathspace::cylinder::sphere_two_point_product(&grid, (0.5, 1.0), c2, c1),
        pathspace::cylinder::sphere_exp_height(&grid, 0.75, c3),
    ];
    let m1 = Matrix3::new(0.2, -0.5, 0.1, 0.4, 0.3, -0.2, 0.0, 0.6, -0.1);
    let m2 = Matrix3::new(-0.3, 0.2, 0.5, 0.1, -0.4, 0.2, 0.6, 0.0, 0.3);
    let group_fs = vec![
        pathspace::cylinder::group_trace(&grid, 1.0, m1),
        pathspace::cylinder::group_two_point_product(&grid, (0.5, 1.0), m2, m1),
        pathspace::cylinder::group_exp_trace(&grid, 0.75, m1),
    ];

    run_ibp_model::<Sphere>(&mut b, cfg, &grid, &h, &sphere_fs, paths, "sphere");
    run_ibp_model::<RotationGroup>(&mut b, cfg, &grid, &h, &group_fs, paths, "group");
    b.note(format!("{paths} paths at {steps} steps, paired statistic per function"));
    b.finish()
}

fn run_ibp_model<M: Manifold>(
    b: &mut ReportBuilder,
    cfg: &ExperimentConfig,
    grid: &TimeGrid,
    h: &sde_engine::CameronMartinVector,
    fs: &[CylindricalFunction<M>],
    paths: u64,
    label: &str,
) {
    let width = fs.len();
    let ws = mc::ensemble_vec(paths, width, |p, out| {
        let driver = BrownianDriver::sample(*grid, cfg.seed, p);
        let path = integrate::<M>(&M::base_point(), &driver);
        let frame = frame_along::<M>(&path.points, grid.dt());
        let v = xbar::<M>(&path, &frame, h);
        let pairing = cameron_martin_pairing(&driver, h);
        for (slot, f) in out.iter_mut().zip(fs) {
            *slot = f.h_differential(&path.points, &v) - f.value(&path.points) * pairing;
        }
    });
    for (i, w) in ws.iter().enumerate() {
        b.row(
            RowKind::Statistical,
            AssertionRow::z_test(
                &format!("{label} function {}: derivative pairing balances the noise integral", i + 1),
                0.0,
                w.mean(),
                w.se(),
                3.0,
            ),
        );
    }
}

/// Evaluating the pulled-back form on a direction agrees with evaluating the
/// underlying one-form on the transported field, increasingly so under
/// refinement.
pub fn pullback_consistency(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("pullback-consistency", cfg);
    let paths = cfg.paths_or(10_000);
    let coarse_steps = 100usize;
    let levels = 4usize;

    let ws = mc::ensemble_vec(paths, levels, |p, out| {
        let mut driver = BrownianDriver::sample(TimeGrid::unit(coarse_steps), cfg.seed, p);
        for slot in out.iter_mut() {
            *slot = pullback_gap(&driver);
            driver = driver.refine();
        }
    });

    let level_errors: Vec<LevelError> = ws
        .iter()
        .enumerate()
        .map(|(l, w)| LevelError {
            dt: 1.0 / (coarse_steps << l) as f64,
            error: w.mean(),
        })
        .collect();
    let sweep = assess(level_errors);
    b.note(format!("mean evaluation gap by level ({paths} paths): {}", sweep.describe()));
    b.row(
        RowKind::Lower,
        sweep.order_assertion("pull-back and direct evaluation converge: observed order", 0.4),
    );
    b.finish()
}

fn alpha_field(points: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let probe = Vector3::new(0.8, -0.1, 0.4);
    points
        .iter()
        .map(|x| Sphere::kernel_proj_perp(x) * probe)
        .collect()
}

fn pullback_gap(driver: &BrownianDriver) -> f64 {
    let grid = driver.grid;
    let dt = grid.dt();
    let path = integrate::<Sphere>(&Sphere::base_point(), driver);
    let split = decompose_noise(&path);
    let frame = frame_along::<Sphere>(&path.points, dt);
    let h = direction_main(&grid);
    let alpha = alpha_field(&path.points);
    let form = l2_representer(&frame, &alpha);
    let values = bismut_derivative(&path, &h);
    let density = vec![Vector3::zeros(); values.len()];
    let v = BismutTangent { dt, values, density };
    let through_map = pullback_one_form::<Sphere>(&path, &split, &frame, &form, &h);
    let on_field = direct_evaluation(dt, &alpha, &v);
    (through_map - on_field).abs()
}

/// The projected field never carries more of a one-form's energy than the
/// pulled-back form reports: componentwise domination in L^2.
pub fn domination(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("domination", cfg);
    let paths = cfg.paths_or(10_000);
    let steps = cfg.steps_or(800);
    let grid = TimeGrid::unit(steps);
    let dt = grid.dt();

    let ws = mc::ensemble_vec(paths, 3, |p, out| {
        let driver = BrownianDriver::sample(grid, cfg.seed, p);
        let path = integrate::<Sphere>(&Sphere::base_point(), &driver);
        let split = decompose_noise(&path);
        let frame = frame_along::<Sphere>(&path.points, dt);
        let h = direction_main(&grid);
        let alpha = alpha_field(&path.points);
        let form = l2_representer(&frame, &alpha);
        let u = direct_evaluation(dt, &alpha, &xbar::<Sphere>(&path, &frame, &h));
        let w = pullback_one_form::<Sphere>(&path, &split, &frame, &form, &h);
        out[0] = u * u;
        out[1] = w * w;
        out[2] = u * u - w * w;
    });

    b.row(
        RowKind::OneSided,
        AssertionRow::one_sided_z(
            "projected field energy does not exceed the pull-back energy",
            0.0,
            ws[2].mean(),
            ws[2].se(),
            3.0,
        ),
    );
    b.note(format!(
        "projected energy {:.6e}, pull-back energy {:.6e}, {paths} paths at {steps} steps",
        ws[0].mean(),
        ws[1].mean()
    ));
    b.finish()
}
