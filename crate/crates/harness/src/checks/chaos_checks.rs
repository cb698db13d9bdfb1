//! Flat-noise chaos checks: remainder-energy closed forms and the second
//! moment of the iterated double integral.

use sde_engine::{BrownianDriver, TimeGrid};
use wiener::chaos::{iterated_integral, second_moment, ChaosCoefficient};
use wiener::remainder::{closed_form, sample_lhs, RemainderCase};

use crate::config::ExperimentConfig;
use crate::mc;
use crate::report::{AssertionRow, CheckReport, ReportBuilder, RowKind};

/// Both sides of the remainder-energy identity, each computed from its own
/// closed form, agree to roundoff; a Monte Carlo estimate of the left side
/// confirms the derivations were not coupled.
pub fn chaos_remainder(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("chaos-remainder", cfg);
    let t_final = 1.0;

    for (case, label) in [
        (RemainderCase::SquareBT, "squared terminal value"),
        (RemainderCase::CubeBT, "cubed terminal value"),
    ] {
        for k in 1..case.top_chaos_order() {
            let (lhs, rhs) = closed_form(case, k, t_final);
            let rel = (lhs - rhs).abs() / lhs.abs().max(1.0);
            b.row(
                RowKind::Upper,
                AssertionRow::upper_bound(
                    &format!("{label}, {k} chaos level(s) removed: closed forms agree"),
                    rel,
                    1e-12,
                ),
            );
        }
        let k_top = case.top_chaos_order();
        let (lhs, rhs) = closed_form(case, k_top, t_final);
        b.row(
            RowKind::Exact,
            AssertionRow::exact_zero(
                &format!("{label}, all chaos levels removed: both sides vanish"),
                lhs.abs() + rhs.abs(),
            ),
        );
    }

    let paths = cfg.paths_or(20_000);
    let steps = cfg.steps_or(50);
    let grid = TimeGrid::unit(steps);
    for (case, label, aux) in [
        (RemainderCase::SquareBT, "squared terminal value", 0u64),
        (RemainderCase::CubeBT, "cubed terminal value", 1u64),
    ] {
        let (lhs, _) = closed_form(case, 1, t_final);
        let w = mc::ensemble(paths, |p| {
            let driver = BrownianDriver::sample(grid, cfg.seed.wrapping_add(aux), p);
            sample_lhs(case, &driver)
        });
        b.row(
            RowKind::Statistical,
            AssertionRow::z_test(
                &format!("{label}: sampled energy matches the closed form"),
                lhs,
                w.mean(),
                w.se(),
                3.0,
            ),
        );
    }
    b.note(format!("{paths} paths at {steps} steps for the sampled rows"));
    b.finish()
}

/// The double integral with unit kernel has mean zero and second moment
/// equal to twice the squared horizon (discretely, 2T(T - dt)).
pub fn chaos_second_moment(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("chaos-second-moment", cfg);
    let paths = cfg.paths_or(100_000);
    let steps = cfg.steps_or(500);
    let grid = TimeGrid::unit(steps);
    let coeff = ChaosCoefficient::Order2Constant(1.0);

    let ws = mc::ensemble_vec(paths, 2, |p, out| {
        let driver = BrownianDriver::sample(grid, cfg.seed, p);
        let value = iterated_integral(&driver, &coeff);
        out[0] = value;
        out[1] = value * value;
    });

    let grid_target = second_moment(grid.dt(), steps, &coeff);
    b.row(
        RowKind::Statistical,
        AssertionRow::z_test(
            "double integral second moment equals twice the squared horizon",
            2.0,
            ws[1].mean(),
            ws[1].se(),
            3.0,
        ),
    );
    b.row(
        RowKind::Statistical,
        AssertionRow::z_test(
            "second moment matches the grid-exact simplex value",
            grid_target,
            ws[1].mean(),
            ws[1].se(),
            3.0,
        ),
    );
    b.row(
        RowKind::Statistical,
        AssertionRow::z_test("double integral is centred", 0.0, ws[0].mean(), ws[0].se(), 4.0),
    );
    b.note(format!("{paths} paths at {steps} steps; grid-exact moment {grid_target:.6}"));
    b.finish()
}
