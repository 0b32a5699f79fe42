mod common;

use common::{small_model, REF_CONTROL, REF_OBSERVE, REF_OMEGA};
use hierctrl_core::domain::{
    build_grid, build_sigma, build_weights, carleman_parameters, make_power_diffusion, Regions, WeightSet,
};
use hierctrl_core::leader::{adjoint_quartet_solve, QuartetSettings};
use hierctrl_core::pde::Potential;
use hierctrl_core::sampling::{rng_for, smoothed_gaussian};
use hierctrl_core::verify::{
    caccioppoli_sides, check_hardy, check_observability, check_quartet_inequalities, check_weight_orderings,
    observability_sides, quartet_samples,
};
use hierctrl_core::Model;

const S: f64 = 1e-5;

fn weights_for(model: &Model, s: f64) -> WeightSet {
    let sigma = build_sigma(&model.grid, &model.regions.omega_0).unwrap();
    let params = carleman_parameters(&model.diffusion, sigma.sup()).unwrap();
    build_weights(&model.grid, &model.diffusion, &sigma, &params, s).unwrap()
}

fn settings() -> QuartetSettings {
    QuartetSettings::new(10.0, 1.0, 1e-12, 1.0).unwrap()
}

#[test]
fn ratios_ignore_the_scale_of_the_datum() {
    let model = small_model(49, 50, 0.5, 1.0);
    let w = weights_for(&model, S);
    let rho_t = smoothed_gaussian(&model.grid, &mut rng_for(11, 0));
    let big: Vec<f64> = rho_t.iter().map(|v| 1e3 * v).collect();
    let a = adjoint_quartet_solve(&model, &rho_t, &settings()).unwrap();
    let b = adjoint_quartet_solve(&model, &big, &settings()).unwrap();
    let r = &model.regions;
    let omega_prime = r.omega_1.shrink(1, hierctrl_core::domain::RegionLabel::Omega0);
    for (x, y) in [
        (observability_sides(&model, &w, &a), observability_sides(&model, &w, &b)),
        (
            caccioppoli_sides(&model, &w, &a, &omega_prime, &r.omega_1),
            caccioppoli_sides(&model, &w, &b, &omega_prime, &r.omega_1),
        ),
    ] {
        let ratio_a = x.0 - x.1;
        let ratio_b = y.0 - y.1;
        assert!(ratio_a.is_finite());
        assert!((ratio_a - ratio_b).abs() <= 1e-9, "{ratio_a} vs {ratio_b}");
    }
}

#[test]
fn observability_constant_grows_as_omega_shrinks() {
    let grid = build_grid(49, 50, 1.0).unwrap();
    let k = make_power_diffusion(0.5).unwrap();
    let wide = Regions::rasterize(&grid, (0.15, 0.9), (0.05, 0.95), (0.1, 0.95)).unwrap();
    let narrow = Regions::rasterize(&grid, (0.3, 0.75), (0.05, 0.95), (0.1, 0.95)).unwrap();
    assert!(narrow.omega.is_strict_subset_of(&wide.omega));
    let model_wide = Model::new(grid.clone(), k, Potential::Constant(1.0), wide).unwrap();
    let model_narrow = Model::new(grid, k, Potential::Constant(1.0), narrow).unwrap();
    let w = weights_for(&model_wide, S);
    let samples = quartet_samples(&model_wide, &settings(), 8, 3).unwrap();
    let c_wide = check_observability(&model_wide, &samples, &w).unwrap();
    let c_narrow = check_observability(&model_narrow, &samples, &w).unwrap();
    assert_eq!(c_wide.samples, 8);
    for (a, b) in c_wide.ratios.iter().zip(&c_narrow.ratios) {
        assert!(b >= a, "{b} < {a}");
    }
    assert!(c_narrow.max_ratio >= c_wide.max_ratio);
}

#[test]
fn weight_orderings_pass_across_parameters() {
    for n_x in [99, 199] {
        let grid = build_grid(n_x, 60, 1.0).unwrap();
        let regions = Regions::rasterize(&grid, REF_OMEGA, REF_CONTROL, REF_OBSERVE).unwrap();
        for alpha in [0.0, 0.25, 0.5, 0.75, 0.95] {
            let k = make_power_diffusion(alpha).unwrap();
            let model = Model::new(grid.clone(), k, Potential::Constant(1.0), regions.clone()).unwrap();
            for s in [1e-5, 1e-3, 1e-1, 1.0, 10.0] {
                let w = weights_for(&model, s);
                let report = check_weight_orderings(&grid, &k, &w, 0.1).unwrap();
                assert!(report.passed, "n_x {n_x}, alpha {alpha}, s {s}: {}", report.detail);
                assert!(report.max_ratio <= 4.0 / 3.0);
            }
        }
    }
}

#[test]
fn hardy_samples_pass_for_every_alpha() {
    let grid = build_grid(199, 2, 1.0).unwrap();
    for alpha in [0.0, 0.3, 0.6, 0.9] {
        let k = make_power_diffusion(alpha).unwrap();
        let report = check_hardy(&grid, &k, 50, 5).unwrap();
        assert!(report.passed, "alpha {alpha}: max {} > {:?}", report.max_ratio, report.bound);
        assert_eq!(report.samples, 50);
    }
}

#[test]
fn quartet_checks_are_reproducible_and_report_underflow() {
    let model = small_model(49, 50, 0.5, 1.0);
    let omega_prime = model.regions.omega_1.shrink(1, hierctrl_core::domain::RegionLabel::Omega0);
    let w = weights_for(&model, S);
    let a = check_quartet_inequalities(&model, &w, &settings(), &omega_prime, 6, 9).unwrap();
    let b = check_quartet_inequalities(&model, &w, &settings(), &omega_prime, 6, 9).unwrap();
    assert_eq!(a.0.ratios, b.0.ratios);
    assert_eq!(a.1.ratios, b.1.ratios);
    assert!(a.0.passed && a.1.passed);

    let heavy = weights_for(&model, 1.0);
    let (cacc, obs) = check_quartet_inequalities(&model, &heavy, &settings(), &omega_prime, 4, 9).unwrap();
    for r in [cacc, obs] {
        if r.samples == 0 {
            assert!(!r.passed);
            assert!(r.detail.contains("underflow"));
        }
    }
    assert!(check_quartet_inequalities(&model, &w, &settings(), &model.regions.omega_1, 2, 9).is_err());
}
