use fgd::ippt::{compute_bound, metric_rho, transform_points, transform_query, BoundMode, TransformedPoints};
use fgd::projection::WordId;
use fgd::swvg::flat_search;
use fgd::VocabularyProjection;
use proptest::prelude::*;

fn projection() -> impl Strategy<Value = VocabularyProjection> {
    (1usize..24, 1usize..6).prop_flat_map(|(n, d)| {
        (prop::collection::vec(-4.0f32..4.0, n * d), prop::collection::vec(-2.0f32..2.0, n)).prop_map(move |(w, b)| {
            let tokens = (0..n).map(|i| format!("t{i}")).collect();
            VocabularyProjection::new(tokens, w, Some(b), d).unwrap()
        })
    })
}

fn lifted(p: &VocabularyProjection) -> TransformedPoints<f64> {
    let bound = compute_bound(p, BoundMode::MaxAugmentedRowNorm).unwrap();
    transform_points(p, bound).unwrap()
}

proptest! {
    #[test]
    fn lifted_rows_lie_on_the_sphere(p in projection()) {
        let pts = lifted(&p);
        let u = pts.bound().u();
        for i in 0..pts.len() {
            prop_assert!((pts.norm(i) - u).abs() <= 1e-9 * u.max(1.0));
        }
    }

    #[test]
    fn nearest_in_lift_is_largest_logit(p in projection(), seed in prop::collection::vec(-3.0f64..3.0, 6)) {
        let h = &seed[..p.dim()];
        let pts = lifted(&p);
        let q = transform_query(h, p.dim()).unwrap();
        let found = flat_search(&pts, &q, p.vocab_size()).unwrap();
        let logits: Vec<f64> = found.ids.iter().map(|&id| p.logit(id, h)).collect();
        for w in logits.windows(2) {
            prop_assert!(w[0] >= w[1] - 1e-9 * w[0].abs().max(1.0), "{logits:?}");
        }
    }

    #[test]
    fn rho_is_a_metric(p in projection(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>(), c in any::<prop::sample::Index>()) {
        let pts = lifted(&p);
        let n = pts.len();
        let (i, j, k) = (WordId::from(a.index(n)), WordId::from(b.index(n)), WordId::from(c.index(n)));
        let ij = metric_rho(&pts, i, j).unwrap();
        let jk = metric_rho(&pts, j, k).unwrap();
        let ik = metric_rho(&pts, i, k).unwrap();
        prop_assert_eq!(metric_rho(&pts, i, i).unwrap(), 0.0);
        prop_assert!(ij >= 0.0);
        prop_assert_eq!(ij, metric_rho(&pts, j, i).unwrap());
        prop_assert!(ik <= ij + jk + 1e-9);
    }
}
