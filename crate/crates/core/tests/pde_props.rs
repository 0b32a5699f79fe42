mod common;

use common::{oracle_backward, oracle_forward, small_model};
use hierctrl_core::pde::{duality_check, norms, solve_backward, solve_forward, source_norm_sq, space_inner, Field, TimeRule};
use hierctrl_core::Model;
use proptest::prelude::*;

fn field_from(model: &Model, seed: &[f64]) -> Field {
    Field::from_fn(&model.grid, |t, x| {
        seed.iter()
            .enumerate()
            .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * x).sin() * (1.0 + j as f64 * t).cos())
            .sum()
    })
}

fn datum_from(model: &Model, seed: &[f64]) -> Vec<f64> {
    field_from(model, seed).initial().to_vec()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forward_solve_is_linear(
        alpha in 0.0f64..0.95,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        c1 in coeffs(), c2 in coeffs(), c3 in coeffs(), c4 in coeffs(),
    ) {
        let model = small_model(23, 17, alpha, 1.0);
        let (g1, g2) = (datum_from(&model, &c1), datum_from(&model, &c2));
        let (f1, f2) = (field_from(&model, &c3), field_from(&model, &c4));
        let y1 = solve_forward(&model.op, &g1, Some(&f1)).unwrap();
        let y2 = solve_forward(&model.op, &g2, Some(&f2)).unwrap();
        let g: Vec<f64> = g1.iter().zip(&g2).map(|(u, v)| a * u + b * v).collect();
        let y = solve_forward(&model.op, &g, Some(&f1.lincomb(a, b, &f2))).unwrap();
        let combo = y1.lincomb(a, b, &y2);
        let scale = combo.max_abs().max(1.0);
        prop_assert!(y.max_abs_diff(&combo) <= 1e-12 * scale);
    }

    #[test]
    fn energy_estimate_holds(
        alpha in 0.0f64..0.95,
        a0 in prop::sample::select(vec![0.0, 1.0, 2.5, -0.5]),
        c1 in coeffs(), c2 in coeffs(),
    ) {
        let model = small_model(31, 25, alpha, a0);
        let g = datum_from(&model, &c1);
        let f = field_from(&model, &c2);
        let y = solve_forward(&model.op, &g, Some(&f)).unwrap();
        let n = norms(&model.op, &y, TimeRule::Implicit);
        let grid = &model.grid;
        let rhs = ((2.0 * f64::abs(a0) + 3.0) * grid.horizon).exp() * (source_norm_sq(grid, &f, None) + space_inner(grid, &g, &g));
        prop_assert!(n.l2_final_sq + n.h1k_sq() <= rhs);
    }

    #[test]
    fn discrete_duality(alpha in 0.0f64..0.95, a0 in -0.5f64..3.0, c1 in coeffs(), c2 in coeffs()) {
        let model = small_model(27, 19, alpha, a0);
        let f = field_from(&model, &c1);
        let w_t = datum_from(&model, &c2);
        let z = solve_forward(&model.op, &vec![0.0; model.grid.n_nodes()], Some(&f)).unwrap();
        let scale = space_inner(&model.grid, z.terminal(), &w_t).abs().max(1e-300);
        let gap = duality_check(&model.op, &f, &w_t).unwrap();
        prop_assert!(gap <= 1e-12 * scale, "gap {gap}, scale {scale}");
    }
}

#[test]
fn solvers_match_dense_space_time_system() {
    for (alpha, a0) in [(0.0, 0.0), (0.5, 1.0), (0.9, -0.5)] {
        let model = small_model(11, 12, alpha, a0);
        let g = datum_from(&model, &[1.0, -0.5, 0.25, 0.0]);
        let f = field_from(&model, &[0.0, 2.0, 0.0, -1.0]);
        let fwd = solve_forward(&model.op, &g, Some(&f)).unwrap();
        assert!(fwd.max_abs_diff(&oracle_forward(&model, alpha, a0, &g, &f)) <= 1e-12);
        let bwd = solve_backward(&model.op, &g, Some(&f)).unwrap();
        assert!(bwd.max_abs_diff(&oracle_backward(&model, alpha, a0, &g, &f)) <= 1e-12);
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let model = small_model(63, 40, 0.5, 1.0);
    let g = datum_from(&model, &[0.3, 1.0, -2.0, 0.7]);
    let f = field_from(&model, &[1.0, 0.0, 0.5, -0.5]);
    let runs: Vec<Field> = (0..3)
        .map(|_| solve_backward(&model.op, &g, Some(&f)).unwrap())
        .collect();
    assert!(runs.windows(2).all(|w| w[0].values() == w[1].values()));
    let fwd: Vec<Field> = (0..3)
        .map(|_| solve_forward(&model.op, &g, Some(&f)).unwrap())
        .collect();
    assert!(fwd.windows(2).all(|w| w[0].values() == w[1].values()));
}

#[test]
fn solutions_keep_homogeneous_boundary() {
    let model = small_model(21, 10, 0.7, 1.0);
    let mut g = datum_from(&model, &[1.0, 1.0, 1.0, 1.0]);
    g[0] = 5.0;
    let y = solve_forward(&model.op, &g, None).unwrap();
    assert!(y.boundary_is_zero());
}
