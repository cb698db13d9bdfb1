//! Pointwise geometry checks: the connection's defining property and the
//! curvature oracle.

use geometry::{fd, oracle, Manifold, RotationGroup, Sphere};

use crate::checks::{random_unit, scratch};
use crate::config::ExperimentConfig;
use crate::report::{AssertionRow, CheckReport, ReportBuilder, RowKind};

/// The metric connection adapted to the diffusion fields: differentiating
/// the field of a direction with no kernel component gives nothing, and the
/// analytic derivative agrees with a finite-difference transport stencil
/// for arbitrary directions.
pub fn lw_connection(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("lw-connection", cfg);
    let triples = cfg.paths_or(1000);

    let mut max_perp = 0.0f64;
    let mut max_gap = 0.0f64;
    for i in 0..triples {
        let mut ch = scratch(cfg.seed, i, 1);
        let x: <Sphere as Manifold>::Point = Sphere::clean(&random_unit(&mut ch));
        let v = Sphere::diffusion(&x, &ch.normal3(1.0));

        let e_any = ch.normal3(1.0);
        let e_perp = Sphere::kernel_proj_perp(&x) * e_any;

        let fd_perp = fd::lw_cd_fd::<Sphere>(&x, &v, &|y| Sphere::diffusion(y, &e_perp), 1e-5);
        max_perp = max_perp.max(Sphere::amb_norm(&fd_perp));

        let analytic = Sphere::nabla_x(&x, &v, &e_any);
        let fd_any = fd::lw_cd_fd::<Sphere>(&x, &v, &|y| Sphere::diffusion(y, &e_any), 1e-5);
        max_gap = max_gap.max(Sphere::amb_norm(&(fd_any - analytic)));
    }
    b.row(
        RowKind::Upper,
        AssertionRow::upper_bound(
            "fields of kernel-orthogonal directions are parallel: max derivative norm",
            max_perp,
            1e-6,
        ),
    );
    b.row(
        RowKind::Upper,
        AssertionRow::upper_bound(
            "analytic vs finite-difference field derivative: max gap",
            max_gap,
            1e-6,
        ),
    );

    // The group's fields are left-translated constants: the derivative
    // vanishes identically, with no finite differencing needed.
    let mut group_max = 0.0f64;
    for i in 0..16u64 {
        let mut ch = scratch(cfg.seed, i, 2);
        let g = RotationGroup::clean(&geometry::so3::rodrigues(&ch.normal3(1.0)));
        let v = RotationGroup::diffusion(&g, &ch.normal3(1.0));
        let d = RotationGroup::nabla_x(&g, &v, &ch.normal3(1.0));
        group_max = group_max.max(RotationGroup::amb_norm(&d));
    }
    b.row(
        RowKind::Exact,
        AssertionRow::exact_zero("group field derivative vanishes identically", group_max),
    );
    b.note(format!("{triples} random point/direction/noise triples"));
    b.finish()
}

/// Analytic curvature term against a double finite-difference trace.
pub fn ricci_oracle(cfg: &ExperimentConfig) -> CheckReport {
    let mut b = ReportBuilder::new("ricci-oracle", cfg);
    let points = cfg.paths_or(100);

    let mut max_rel = 0.0f64;
    for i in 0..points {
        let mut ch = scratch(cfg.seed, i, 3);
        let x = Sphere::clean(&random_unit(&mut ch));
        let u = Sphere::diffusion(&x, &random_unit(&mut ch));
        let norm = Sphere::amb_norm(&u);
        if norm < 0.3 {
            continue;
        }
        let numeric = oracle::ricci_sharp_fd::<Sphere>(&x, &u);
        let analytic = Sphere::ricci_sharp(&x, &u);
        max_rel = max_rel.max(Sphere::amb_norm(&(numeric - analytic)) / norm);
    }
    b.row(
        RowKind::Upper,
        AssertionRow::upper_bound(
            "curvature trace equals the identity on the sphere: max relative gap",
            max_rel,
            1e-4,
        ),
    );

    let mut group_max = 0.0f64;
    for i in 0..16u64 {
        let mut ch = scratch(cfg.seed, i, 4);
        let g = RotationGroup::clean(&geometry::so3::rodrigues(&ch.normal3(1.0)));
        let u = RotationGroup::diffusion(&g, &ch.normal3(1.0));
        let r = RotationGroup::ricci_sharp(&g, &u);
        group_max = group_max.max(RotationGroup::amb_norm(&r));
    }
    b.row(
        RowKind::Exact,
        AssertionRow::exact_zero("group curvature term vanishes identically", group_max),
    );
    b.note(format!("{points} random sphere points, 16 random rotations"));
    b.finish()
}
