use proptest::prelude::*;

use funcspace_core::dyadic::{conditional_expectation, decompose, square_function};
use funcspace_core::grid::{lp_norm, rearrangement, GridFunction};
use funcspace_core::norms::luxemburg_norm;
use funcspace_core::report::fmt_sig;

fn grid_function(j: u32) -> impl Strategy<Value = GridFunction> {
    prop::collection::vec(-10.0f64..10.0, 1usize << j)
        .prop_map(move |v| GridFunction::new(j, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_norm_is_monotone_in_p(f in grid_function(6)) {
        let ps = [1.0, 1.5, 2.0, 3.0, 8.0, 64.0];
        for w in ps.windows(2) {
            let (a, b) = (lp_norm(&f, w[0]).unwrap(), lp_norm(&f, w[1]).unwrap());
            prop_assert!(a <= b * (1.0 + 1e-12) + 1e-300);
        }
        prop_assert!(lp_norm(&f, 64.0).unwrap() <= f.sup_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn decomposition_reconstructs(f in grid_function(7)) {
        prop_assert!(decompose(&f).reconstruct().max_abs_diff(&f).unwrap() < 1e-12);
    }

    #[test]
    fn square_function_matches_l2(f in grid_function(7)) {
        let s = square_function(&decompose(&f));
        let a = lp_norm(&f, 2.0).unwrap();
        let b = lp_norm(&s, 2.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn expectation_contracts_sup_norm(f in grid_function(6), k in 0u32..=6) {
        let e = conditional_expectation(&f, k).unwrap();
        prop_assert!(e.sup_norm() <= f.sup_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn rearrangement_is_nonincreasing_and_equimeasurable(f in grid_function(6)) {
        let r = rearrangement(&f);
        prop_assert!(r.windows(2).all(|w| w[0] >= w[1]));
        let g = GridFunction::new(6, r).unwrap();
        for p in [1.0, 2.0, 5.0] {
            let (a, b) = (lp_norm(&f, p).unwrap(), lp_norm(&g, p).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn luxemburg_norm_is_homogeneous(f in grid_function(5), c in 0.1f64..10.0) {
        prop_assume!(f.sup_norm() > 1e-3);
        let a = luxemburg_norm(&f, 2.0).unwrap();
        let b = luxemburg_norm(&f.scale(c), 2.0).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-4 * c * a);
    }

    #[test]
    fn twelve_digit_format_round_trips(x in -1e12f64..1e12) {
        let back: f64 = fmt_sig(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs().max(1e-300));
    }
}
