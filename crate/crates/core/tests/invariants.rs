//! Property tests for the structural invariants of the box algebra, the
//! partition's point location, and the confidence inversion.

use proptest::prelude::*;

use swsynth::geometry::{Partition, Rect, Reduced};
use swsynth::learning::{GpFit, LearnedMode, RkhsBoundSource, SeKernel};

fn boxes_2d() -> impl Strategy<Value = (Rect, Vec<f64>)> {
    (
        prop::collection::vec(-5.0f64..5.0, 2),
        prop::collection::vec(0.0f64..3.0, 2),
        prop::collection::vec(0.0f64..2.0, 2),
    )
        .prop_map(|(lo, width, c)| {
            let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
            (Rect::new(lo, hi).unwrap(), c)
        })
}

proptest! {
    #[test]
    fn expansion_contains_and_reduction_shrinks((q, c) in boxes_2d()) {
        let expanded = q.expand(&c).unwrap();
        prop_assert!(q.contained_in(&expanded));
        match q.reduce(&c).unwrap() {
            Reduced::Interior(r) => {
                prop_assert!(r.contained_in(&q));
            }
            Reduced::Empty => {
                // a side must have collapsed
                prop_assert!((0..2).any(|i| q.width(i) <= 2.0 * c[i]));
            }
        }
    }

    #[test]
    fn reduce_of_expand_recovers_the_closure((q, c) in boxes_2d()) {
        let round = q.expand(&c).unwrap().reduce(&c).unwrap();
        match round {
            Reduced::Interior(r) => {
                for axis in 0..2 {
                    prop_assert!((r.lower()[axis] - q.lower()[axis]).abs() < 1e-12);
                    prop_assert!((r.upper()[axis] - q.upper()[axis]).abs() < 1e-12);
                }
            }
            Reduced::Empty => {
                // only a degenerate box reduces to nothing after expanding
                prop_assert!((0..2).any(|i| q.width(i) == 0.0));
            }
        }
    }

    #[test]
    fn every_domain_point_locates_in_a_containing_cell(
        x in prop::collection::vec(-2.0f64..=2.0, 2),
        steps in prop::collection::vec(0.11f64..0.9, 2),
    ) {
        let domain = Rect::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let partition = Partition::build(domain, &[], &steps).unwrap();
        let idx = partition.locate(&x).expect("inside the domain");
        prop_assert!(idx < partition.num_cells());
        prop_assert!(partition.cell(idx).contains_point(&x));
    }

    #[test]
    fn confidence_inversion_round_trips(
        theta in 0.005f64..1.0,
        b in 0.01f64..5.0,
        sigma_sup in 0.01f64..2.0,
        delta in 1e-5f64..0.99,
    ) {
        let fit = GpFit::fit(vec![vec![0.0]], vec![0.5], SeKernel::isotropic(1.0, 1.0)).unwrap();
        let mode = LearnedMode {
            mode: 1,
            fits: vec![fit],
            rkhs_bounds: vec![b],
            bound_source: RkhsBoundSource::Provided,
            theta,
            info_gain_override: None,
        };
        let eps = mode.beta(0, delta).unwrap() * sigma_sup;
        let back = mode.invert_confidence(0, eps, sigma_sup, 1e-6);
        prop_assert!((back - delta).abs() <= 1e-10 * delta.max(1e-6),
            "delta {delta} came back as {back}");
    }
}
