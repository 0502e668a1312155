//! Property tests over the composition score, fragmentation and flips.

use std::collections::BTreeSet;

use proptest::prelude::*;

use retrack_core::document::{fragmentize, Flip, MotionDocument};
use retrack_core::flow::{magnitude, FlowField};
use retrack_core::geometry::FlipAxis;
use retrack_core::retrieval::composition_score;

fn activation_set(max_w: u32, max_t: u32) -> impl Strategy<Value = BTreeSet<(u32, u32)>> {
    proptest::collection::btree_set((0..max_w, 0..max_t), 1..40)
}

proptest! {
    #[test]
    fn composition_score_is_bounded_and_exact_only_on_equality(
        q in activation_set(64, 8),
        r in activation_set(64, 8),
    ) {
        let s = composition_score(&q, &r).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 1.0, q == r);
    }

    #[test]
    fn fragmentize_is_lossless_over_covered_windows(
        activations in proptest::collection::btree_set((0..96u32, 0..14u32), 0..60),
        window in 1..10u32,
    ) {
        let doc = MotionDocument {
            config_id: 0,
            words: 96,
            steps: 14,
            activations: activations.clone(),
        };
        let fragments = fragmentize(&doc, "v", Flip::Identity, window);
        prop_assert_eq!(fragments.len() as u32, 14 - window + 1);
        for frag in fragments {
            let expected: BTreeSet<(u32, u32)> = activations
                .iter()
                .filter(|&&(_, t)| t >= frag.id.start && t < frag.id.start + window)
                .map(|&(w, t)| (w, t - frag.id.start))
                .collect();
            prop_assert_eq!(&frag.activations, &expected);
            for &(_, tau) in &frag.activations {
                prop_assert!(tau < window);
            }
        }
    }

    #[test]
    fn flow_flips_are_involutions_and_preserve_magnitude(
        u in proptest::collection::vec(-10.0f32..10.0, 24),
        v in proptest::collection::vec(-10.0f32..10.0, 24),
    ) {
        let field = FlowField::new(6, 4, u, v).unwrap();
        for axis in [FlipAxis::Horizontal, FlipAxis::Vertical] {
            let back = field.flipped(axis).flipped(axis);
            prop_assert_eq!(&back, &field);
            let m = magnitude(&field);
            let mf = magnitude(&field.flipped(axis));
            // Same multiset of magnitudes, just mirrored in place.
            let mut a = m.mag.clone();
            let mut b = mf.mag.clone();
            a.sort_by(f32::total_cmp);
            b.sort_by(f32::total_cmp);
            prop_assert_eq!(a, b);
        }
    }
}
