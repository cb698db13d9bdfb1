use geometry::{Manifold, RotationGroup, Sphere};
use nalgebra::Vector3;
use sde_engine::{integrate, BrownianDriver, CameronMartinVector, TimeGrid};
use wiener::chaos::{channel_increments, iterated_integral, second_moment, ChaosCoefficient};
use wiener::remainder::{closed_form, sample_lhs, RemainderCase};
use wiener::{
    cameron_martin_dot, cameron_martin_pairing, conditional_exp_martingale_check, exp_martingale,
    ito_integral, malliavin_derivative_fd,
};

/// Mean and standard error of a sample stream.
fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut count = 0u64;
    for v in values {
        count += 1;
        let delta = v - mean;
        mean += delta / count as f64;
        m2 += delta * (v - mean);
    }
    let n = count as f64;
    (mean, (m2 / (n - 1.0) / n).sqrt())
}

fn direction(grid: &TimeGrid) -> CameronMartinVector {
    CameronMartinVector::from_curve_derivative(grid, |t| {
        Vector3::new((0.9 * t).cos(), 0.3 - t, (1.7 * t).sin())
    })
}

#[test]
fn zero_and_constant_integrands_integrate_exactly() {
    let grid = TimeGrid::unit(300);
    let driver = BrownianDriver::sample(grid, 9001, 0);
    assert_eq!(ito_integral(&driver, |_, _| Vector3::zeros()), 0.0);

    let c = Vector3::new(0.4, -1.2, 2.0);
    let along = ito_integral(&driver, |_, _| c);
    let direct = c.dot(&driver.value_at(grid.steps()));
    assert!((along - direct).abs() < 1e-12, "constant integrand drifted: {along} vs {direct}");
}

#[test]
fn adapted_pairing_agrees_with_the_direct_sum() {
    // For deterministic slopes the two evaluators perform the same sums in
    // the same order, so they must agree bit for bit.
    let grid = TimeGrid::unit(240);
    let driver = BrownianDriver::sample(grid, 9002, 3);
    let h = direction(&grid);
    let paired = cameron_martin_pairing(&driver, &h);
    let integrated = ito_integral(&driver, |k, _| h.slopes[k]);
    assert_eq!(paired, integrated);
}

#[test]
fn ito_isometry_for_a_running_integrand() {
    // Integrand a_s = first channel's own prefix. On the grid the second
    // moment is sum_k (k dt) dt = T(T - dt)/2, one half step shy of the
    // continuum value T^2/2.
    let grid = TimeGrid::unit(200);
    let dt = grid.dt();
    let n = grid.steps() as f64;
    let target = dt * dt * n * (n - 1.0) / 2.0;
    assert!((target - 0.5).abs() < dt);

    let (mean, se) = mean_se((0..100_000u64).map(|p| {
        let driver = BrownianDriver::sample(grid, 9003, p);
        let v = ito_integral(&driver, |_, prefix| Vector3::new(prefix.x, 0.0, 0.0));
        v * v
    }));
    let z = (mean - target) / se;
    assert!(z.abs() < 3.0, "second moment {mean} vs {target}, z = {z}");
}

#[test]
fn order_one_integral_is_the_adapted_sum() {
    let grid = TimeGrid::unit(180);
    let driver = BrownianDriver::sample(grid, 9004, 7);
    let slopes: Vec<f64> = (0..grid.steps()).map(|k| (k as f64 * grid.dt()).sin() + 0.2).collect();
    let coeff = ChaosCoefficient::Order1(slopes.clone());
    let via_chaos = iterated_integral(&driver, &coeff);
    let via_ito =
        ito_integral(&driver, |k, _| Vector3::new(slopes[k], 0.0, 0.0));
    assert_eq!(via_chaos, via_ito);

    let flat: f64 = slopes.iter().map(|a| a * a * grid.dt()).sum();
    assert!((second_moment(grid.dt(), grid.steps(), &coeff) - flat).abs() < 1e-15);
}

#[test]
fn order_two_integral_recovers_the_terminal_square() {
    // 2 sum_{i<j} db_i db_j = (sum db)^2 - sum db^2 is an algebraic
    // rearrangement, so the order-2 integral of the constant kernel must
    // equal b_T^2 minus the discrete quadratic variation to roundoff.
    let grid = TimeGrid::unit(500);
    for p in 0..32u64 {
        let driver = BrownianDriver::sample(grid, 9005, p);
        let i2 = iterated_integral(&driver, &ChaosCoefficient::Order2Constant(1.0));
        let db = channel_increments(&driver);
        let b_t: f64 = db.iter().sum();
        let qv: f64 = db.iter().map(|d| d * d).sum();
        assert!(
            (i2 - (b_t * b_t - qv)).abs() < 1e-12,
            "path {p}: {i2} vs {}",
            b_t * b_t - qv
        );
    }
}

#[test]
fn iterated_integral_moments_match_the_simplex_norms() {
    let grid = TimeGrid::unit(200);
    let two = ChaosCoefficient::Order2Constant(1.0);
    let three = ChaosCoefficient::Order3Constant(0.5);
    let paths = 20_000u64;

    let (mean2, se2) =
        mean_se((0..paths).map(|p| iterated_integral(&BrownianDriver::sample(grid, 9006, p), &two)));
    assert!(mean2.abs() < 3.0 * se2, "order-2 mean {mean2} not centred, se {se2}");

    let target2 = second_moment(grid.dt(), grid.steps(), &two);
    let (sq2, sq2_se) = mean_se((0..paths).map(|p| {
        iterated_integral(&BrownianDriver::sample(grid, 9006, p), &two).powi(2)
    }));
    assert!(
        (sq2 - target2).abs() < 3.0 * sq2_se,
        "order-2 second moment {sq2} vs {target2} (se {sq2_se})"
    );

    let target3 = second_moment(grid.dt(), grid.steps(), &three);
    let (sq3, sq3_se) = mean_se((0..paths).map(|p| {
        iterated_integral(&BrownianDriver::sample(grid, 9006, p), &three).powi(2)
    }));
    assert!(
        (sq3 - target3).abs() < 3.0 * sq3_se,
        "order-3 second moment {sq3} vs {target3} (se {sq3_se})"
    );
}

#[test]
fn integrals_of_different_order_are_uncorrelated() {
    let grid = TimeGrid::unit(150);
    let slopes = vec![1.0; grid.steps()];
    let one = ChaosCoefficient::Order1(slopes);
    let two = ChaosCoefficient::Order2Constant(1.0);
    let (mean, se) = mean_se((0..20_000u64).map(|p| {
        let driver = BrownianDriver::sample(grid, 9007, p);
        iterated_integral(&driver, &one) * iterated_integral(&driver, &two)
    }));
    assert!(mean.abs() < 4.0 * se, "cross moment {mean} exceeds 4 se ({se})");
}

#[test]
fn exponential_martingale_normalisation() {
    let grid = TimeGrid::unit(200);
    let dt = grid.dt();
    let driver = BrownianDriver::sample(grid, 9008, 0);

    let zero = CameronMartinVector::zero(grid.steps());
    let at_zero = exp_martingale(&driver, &zero);
    assert_eq!(at_zero.value, 1.0);
    assert!(!at_zero.clamped);

    // Unit-energy direction: scale the test slope field to |a|_H = 1.
    let raw = direction(&grid);
    let a = raw.scaled(1.0 / raw.norm_squared(dt).sqrt());
    let norm_sq = a.norm_squared(dt);
    assert!((norm_sq - 1.0).abs() < 1e-12);

    let paths = 40_000u64;
    let (mean, se) = mean_se(
        (0..paths).map(|p| exp_martingale(&BrownianDriver::sample(grid, 9008, p), &a).value),
    );
    assert!((mean - 1.0).abs() < 3.0 * se, "martingale mean {mean}, se {se}");

    let target = norm_sq.exp();
    let (sq_mean, sq_se) = mean_se(
        (0..paths)
            .map(|p| exp_martingale(&BrownianDriver::sample(grid, 9008, p), &a).value.powi(2)),
    );
    assert!(
        (sq_mean - target).abs() < 3.0 * sq_se,
        "squared mean {sq_mean} vs {target} (se {sq_se})"
    );

    let huge = raw.scaled(1e4);
    let saturated = exp_martingale(&driver, &huge);
    assert!(saturated.clamped);
    assert!(saturated.value.is_finite());
}

#[test]
fn directional_derivatives_by_finite_differences() {
    let grid = TimeGrid::unit(200);
    let dt = grid.dt();
    let driver = BrownianDriver::sample(grid, 9009, 5);
    let h = direction(&grid);

    let constant = malliavin_derivative_fd(&|_| 2.5, &driver, &h, 1e-4);
    assert_eq!(constant.value, 0.0);

    let c = Vector3::new(1.0, -0.5, 0.25);
    let linear =
        malliavin_derivative_fd(&|d: &BrownianDriver| c.dot(&d.value_at(d.grid.steps())), &driver, &h, 1e-4);
    let expected = c.dot(&h.value_at(grid.steps(), dt));
    assert!(
        (linear.value - expected).abs() < 1e-9,
        "linear functional: {} vs {expected}",
        linear.value
    );

    let raw = direction(&grid);
    let a = raw.scaled(0.8);
    let martingale = exp_martingale(&driver, &a).value;
    let analytic = martingale * cameron_martin_dot(&a, &h, dt);
    let fd = malliavin_derivative_fd(
        &|d: &BrownianDriver| exp_martingale(d, &a).value,
        &driver,
        &h,
        1e-4,
    );
    let rel = (fd.value - analytic).abs() / analytic.abs();
    assert!(rel < 1e-6, "martingale derivative rel err {rel}");
    assert!(fd.richardson_gap < 1e-4 * analytic.abs().max(1.0));
}

#[test]
fn flat_integration_by_parts_holds_for_smooth_functionals() {
    // E[dF(h)] = E[F * sum <hdot, dB>]: exact in the discrete Gaussian
    // model, so the paired difference is centred at any step count.
    let grid = TimeGrid::unit(100);
    let dt = grid.dt();
    let h = direction(&grid);
    let raw = CameronMartinVector::from_curve_derivative(&grid, |t| {
        Vector3::new(0.6, (2.0 * t).sin(), -0.4 * t)
    });
    let a = raw.scaled(0.7);
    let paths = 30_000u64;

    let (gap_m, se_m) = mean_se((0..paths).map(|p| {
        let driver = BrownianDriver::sample(grid, 9010, p);
        let value = exp_martingale(&driver, &a).value;
        let derivative = value * cameron_martin_dot(&a, &h, dt);
        derivative - value * cameron_martin_pairing(&driver, &h)
    }));
    assert!(gap_m.abs() < 3.0 * se_m, "martingale pairing gap {gap_m}, se {se_m}");

    // Cylindrical functional of two node values on the first channel.
    let k1 = grid.steps() / 3;
    let n = grid.steps();
    let (gap_c, se_c) = mean_se((0..paths).map(|p| {
        let driver = BrownianDriver::sample(grid, 9011, p);
        let b1 = driver.value_at(k1).x;
        let bt = driver.value_at(n).x;
        let value = b1.sin() * bt;
        let h1 = h.value_at(k1, dt).x;
        let ht = h.value_at(n, dt).x;
        let derivative = b1.cos() * h1 * bt + b1.sin() * ht;
        derivative - value * cameron_martin_pairing(&driver, &h)
    }));
    assert!(gap_c.abs() < 3.0 * se_c, "cylindrical pairing gap {gap_c}, se {se_c}");
}

#[test]
fn remainder_energy_identity_closed_forms() {
    for t in [1.0, 0.85, 1.4] {
        for (case, k) in [
            (RemainderCase::SquareBT, 1),
            (RemainderCase::CubeBT, 1),
            (RemainderCase::CubeBT, 2),
        ] {
            let (lhs, rhs) = closed_form(case, k, t);
            assert!(lhs > 0.0);
            assert!(
                (lhs - rhs).abs() < 1e-12 * lhs,
                "{case:?} k={k} T={t}: {lhs} vs {rhs}"
            );
        }
    }
    // Truncating at or past the top chaos order leaves nothing.
    assert_eq!(closed_form(RemainderCase::SquareBT, 2, 1.0), (0.0, 0.0));
    assert_eq!(closed_form(RemainderCase::SquareBT, 5, 1.3), (0.0, 0.0));
    assert_eq!(closed_form(RemainderCase::CubeBT, 3, 0.9), (0.0, 0.0));
}

#[test]
fn remainder_energy_monte_carlo_left_side() {
    // The sampled derivative energy only involves the Gaussian terminal
    // value, so its mean matches the closed form without grid bias.
    let grid = TimeGrid::unit(50);
    let paths = 20_000u64;
    for (case, seed) in [(RemainderCase::SquareBT, 9012u64), (RemainderCase::CubeBT, 9013)] {
        let (target, _) = closed_form(case, 1, grid.horizon());
        let (mean, se) =
            mean_se((0..paths).map(|p| sample_lhs(case, &BrownianDriver::sample(grid, seed, p))));
        let z = (mean - target) / se;
        assert!(z.abs() < 3.0, "{case:?}: sampled {mean} vs {target}, z = {z}");
    }
}

#[test]
fn group_conditioning_is_degenerate() {
    // No redundant noise: every resample reproduces the base driver, and
    // the projected martingale is the martingale itself.
    let grid = TimeGrid::unit(100);
    let driver = BrownianDriver::sample(grid, 9014, 2);
    let path = integrate::<RotationGroup>(&RotationGroup::base_point(), &driver);
    let raw = direction(&grid);
    let a = raw.scaled(1.0 / raw.norm_squared(grid.dt()).sqrt());
    let check = conditional_exp_martingale_check::<RotationGroup>(&path, &a, 64);
    assert_eq!(check.mc_mean - check.analytic, 0.0);
    assert_eq!(check.se, 0.0);
    assert_eq!(check.z, 0.0);
}

#[test]
fn sphere_conditioning_matches_the_projected_martingale() {
    let grid = TimeGrid::unit(200);
    let raw = direction(&grid);
    let a = raw.scaled(1.0 / raw.norm_squared(grid.dt()).sqrt());
    let mut within = 0;
    let bases = 6u64;
    for b in 0..bases {
        let driver = BrownianDriver::sample(grid, 9015, b);
        let path = integrate::<Sphere>(&Sphere::base_point(), &driver);
        let check = conditional_exp_martingale_check::<Sphere>(&path, &a, 256);
        if check.z.abs() < 4.0 {
            within += 1;
        } else {
            println!(
                "base {b}: z = {:.2} (mc {} vs analytic {})",
                check.z, check.mc_mean, check.analytic
            );
        }
    }
    assert!(within >= bases - 1, "only {within} of {bases} bases within the band");
}
