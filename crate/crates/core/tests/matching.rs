use forge_core::eval::{compute_mean_recall, compute_recall, match_triplets, GroundedTriplet, MatchConfig};
use forge_core::scene::Rect;
use proptest::prelude::*;

fn triplet() -> impl Strategy<Value = GroundedTriplet> {
    let rect = (0u8..6, 0u8..6, 1u8..5, 1u8..5)
        .prop_map(|(x, y, w, h)| Rect::new(x as f64, y as f64, (x + w) as f64, (y + h) as f64));
    (prop::sample::select(vec!["cat", "dog"]), rect.clone(), prop::sample::select(vec!["on", "near"]), prop::sample::select(vec!["mat", "rug"]), rect)
        .prop_map(|(s, sb, p, o, ob)| GroundedTriplet {
            subject_label: s.into(),
            subject_box: sb,
            predicate: p.into(),
            object_label: o.into(),
            object_box: ob,
        })
}

proptest! {
    #[test]
    fn prediction_order_is_irrelevant(
        preds in prop::collection::vec(triplet(), 0..6),
        gt in prop::collection::vec(triplet(), 1..6),
        rot in 0usize..6,
    ) {
        let cfg = MatchConfig::default();
        let mut shuffled = preds.clone();
        if !shuffled.is_empty() {
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
        }
        shuffled.reverse();
        let a = match_triplets(&preds, &gt, &cfg);
        let b = match_triplets(&shuffled, &gt, &cfg);
        prop_assert_eq!(a.len(), b.len());
        prop_assert_eq!(compute_recall(&a, &gt).unwrap(), compute_recall(&b, &gt).unwrap());
    }

    #[test]
    fn adding_predictions_never_lowers_recall(
        preds in prop::collection::vec(triplet(), 0..5),
        extra in triplet(),
        gt in prop::collection::vec(triplet(), 1..6),
    ) {
        let cfg = MatchConfig::default();
        let before = match_triplets(&preds, &gt, &cfg);
        let mut more = preds.clone();
        more.push(extra);
        let after = match_triplets(&more, &gt, &cfg);
        prop_assert!(after.len() >= before.len());
        prop_assert!(compute_recall(&after, &gt).unwrap() >= compute_recall(&before, &gt).unwrap());
    }

    #[test]
    fn self_match_is_perfect(gt in prop::collection::vec(triplet(), 1..6)) {
        let cfg = MatchConfig::default();
        let m = match_triplets(&gt, &gt, &cfg);
        prop_assert_eq!(m.len(), gt.len());
        prop_assert_eq!(compute_recall(&m, &gt).unwrap(), 1.0);
        prop_assert_eq!(compute_mean_recall(&m, &gt).unwrap(), 1.0);
    }

    #[test]
    fn matching_is_one_to_one(
        preds in prop::collection::vec(triplet(), 0..6),
        gt in prop::collection::vec(triplet(), 1..6),
    ) {
        let m = match_triplets(&preds, &gt, &MatchConfig::default());
        let mut p: Vec<_> = m.pairs.iter().map(|x| x.0).collect();
        let mut g: Vec<_> = m.pairs.iter().map(|x| x.1).collect();
        p.sort(); p.dedup(); g.sort(); g.dedup();
        prop_assert_eq!(p.len(), m.len());
        prop_assert_eq!(g.len(), m.len());
    }
}
