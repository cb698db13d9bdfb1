//! Reproducibility contract: repeated runs agree byte for byte, and the
//! worker count never leaks into the numbers.

use geometry::{Manifold, Sphere};
use sde_engine::{integrate, BrownianDriver, TimeGrid};

use crate::checks::chaos_checks;
use crate::config::ExperimentConfig;
use crate::mc;
use crate::report::{AssertionRow, CheckReport, ReportBuilder, RowKind};
use crate::stats::Welford;

fn alignment_ensemble(cfg: &ExperimentConfig, paths: u64, grid: TimeGrid) -> Welford {
    mc::ensemble(paths, |p| {
        let driver = BrownianDriver::sample(grid, cfg.seed, p);
        let path = integrate::<Sphere>(&Sphere::base_point(), &driver);
        path.points[grid.steps()].dot(&path.points[0])
    })
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("worker pool construction cannot fail at these sizes")
}

pub fn determinism(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("determinism", cfg);
    let paths = cfg.paths_or(20_000);
    let steps = cfg.steps_or(500);
    let grid = TimeGrid::unit(steps);

    let first = alignment_ensemble(cfg, paths, grid);
    let second = alignment_ensemble(cfg, paths, grid);
    let render = |w: &Welford| format!("{:.16e},{:.16e}", w.mean(), w.se());
    let rerun_gap = if render(&first) == render(&second) { 0.0 } else { 1.0 };
    b.row(
        RowKind::Exact,
        AssertionRow::exact_zero("repeated ensemble renders to identical digits", rerun_gap),
    );

    let serial = pool(1).install(|| alignment_ensemble(cfg, paths, grid));
    let concurrent = pool(4).install(|| alignment_ensemble(cfg, paths, grid));
    b.row(
        RowKind::Upper,
        AssertionRow::upper_bound(
            "one-worker and four-worker means agree",
            (serial.mean() - concurrent.mean()).abs(),
            1e-12,
        ),
    );

    let mut small = cfg.clone();
    small.paths = Some(2_000);
    small.steps = Some(50);
    let report_a = chaos_checks::chaos_remainder(&small);
    let report_b = chaos_checks::chaos_remainder(&small);
    let csv_gap = if report_a.to_csv_string() == report_b.to_csv_string() { 0.0 } else { 1.0 };
    b.row(
        RowKind::Exact,
        AssertionRow::exact_zero("a re-run check emits byte-identical tables", csv_gap),
    );

    b.note(format!(
        "{paths} paths at {steps} steps; ensemble mean {:.12e}",
        first.mean()
    ));
    b.finish()
}
