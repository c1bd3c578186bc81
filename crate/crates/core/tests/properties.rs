use mmrl::integrand::{quasi_norm, variable_order_integral, Integrand};
use mmrl::kernel::{DyadicTable, KernelPoint};
use mmrl::numerics::QuadratureSpec;
use mmrl::params::{build_alpha, AlphaFunction, FunctionDescriptor};
use mmrl::sampler::{IncrementSheet, SheetPyramid};
use mmrl::simulator::{FieldEvaluator, FieldGrid};
use proptest::prelude::*;

fn sine() -> AlphaFunction {
    build_alpha(&FunctionDescriptor::sine(1.6, 0.3)).unwrap()
}

fn steps() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec(-3.0f64..3.0, 1..6).prop_map(|vals| {
        let n = vals.len() as f64;
        vals.iter()
            .enumerate()
            .map(|(i, &c)| (i as f64 / n, (i + 1) as f64 / n, c))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quasi_norm_solves_normalisation(pieces in steps()) {
        let spec = QuadratureSpec::default();
        let a = sine();
        let f = Integrand::step(pieces);
        let n = quasi_norm(&f, &a, &spec).unwrap();
        if n > 0.0 {
            let r = variable_order_integral(&f, &a, n, &spec).unwrap();
            prop_assert!((r - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn quasi_norm_is_homogeneous(pieces in steps(), c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
        let spec = QuadratureSpec::default();
        let a = sine();
        let f = Integrand::step(pieces);
        let n = quasi_norm(&f, &a, &spec).unwrap();
        let m = quasi_norm(&f.scaled(c), &a, &spec).unwrap();
        prop_assert!((m - c.abs() * n).abs() <= 1e-9 * (1.0 + m));
    }

    #[test]
    fn field_is_linear_in_the_sheet(
        x in prop::collection::vec(-10.0f64..10.0, 16),
        y in prop::collection::vec(-10.0f64..10.0, 16),
    ) {
        let spec = QuadratureSpec::default();
        let a = sine();
        let grid = FieldGrid::new(vec![0.2, 0.6, 1.0], vec![0.85], &a).unwrap();
        let eval = FieldEvaluator::from_dyadic(DyadicTable::new(&a, &grid.points(), 4, &spec).unwrap());
        let sx = IncrementSheet::from_increments(x, &a).unwrap();
        let sy = IncrementSheet::from_increments(y, &a).unwrap();
        let fx = eval.evaluate(&sx).unwrap();
        let fy = eval.evaluate(&sy).unwrap();
        let fxy = eval.evaluate(&sx.add(&sy).unwrap()).unwrap();
        for i in 0..fxy.len() {
            prop_assert!((fxy[i] - fx[i] - fy[i]).abs() < 1e-9 * (1.0 + fxy[i].abs()));
        }
    }

    #[test]
    fn pyramid_blocks_preserve_total(x in prop::collection::vec(-10.0f64..10.0, 32)) {
        let a = sine();
        let total: f64 = x.iter().sum();
        let p = SheetPyramid::new(&IncrementSheet::from_increments(x, &a).unwrap());
        for j in 0..=p.top_level() {
            let s: f64 = p.block_sums(j).iter().sum();
            prop_assert!((s - total).abs() < 1e-9);
        }
    }

    #[test]
    fn kernel_points_below_floor_are_rejected(v in 0.0f64..0.62) {
        prop_assert!(KernelPoint::new(0.5, v, &sine()).is_err());
    }
}
