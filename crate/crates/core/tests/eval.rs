// SPDX-License-Identifier: Apache-2.0

use al_lab::eval::{
    aggregate, efficiency_curve, labeling_efficiency, min_labels, read_aggregate_csv, read_curve_any,
    write_aggregate_csv, write_curve_csv, welch_t_test, Curve, EvalError, GroupStats,
};
use proptest::prelude::*;

/// Strictly increasing label grid with accuracies in [0, 1].
fn curve_strategy() -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec((1usize..50, 0.0f64..=1.0), 1..12).prop_map(|steps| {
        let mut labels = 0;
        steps
            .into_iter()
            .map(|(step, acc)| {
                labels += step;
                (labels, acc)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn min_labels_is_monotone_in_target(points in curve_strategy(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let c = Curve::new(points).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if let Ok(at_hi) = min_labels(&c, hi) {
            let at_lo = min_labels(&c, lo).unwrap();
            prop_assert!(at_lo <= at_hi + 1e-9);
            let first = c.points()[0].0 as f64;
            let last = c.points().last().unwrap().0 as f64;
            prop_assert!(at_hi >= first - 1e-9 && at_hi <= last + 1e-9);
        } else {
            let best = c.points().iter().map(|p| p.1).fold(0.0, f64::max);
            prop_assert!(best < hi);
        }
    }

    #[test]
    fn efficiency_against_itself_is_one(points in curve_strategy(), target in 0.0f64..=1.0) {
        let c = Curve::new(points).unwrap();
        match labeling_efficiency(&c, &c, target) {
            Ok(e) => prop_assert!((e - 1.0).abs() < 1e-12),
            Err(e) => {
                let not_reached = matches!(e, EvalError::NotReached { .. });
                prop_assert!(not_reached);
            }
        }
    }

    #[test]
    fn compressing_the_label_axis_scales_efficiency(points in curve_strategy(), k in 2usize..6, target in 0.0f64..=1.0) {
        let al = Curve::new(points.clone()).unwrap();
        let rs = Curve::new(points.iter().map(|&(l, a)| (l * k, a)).collect()).unwrap();
        if let Ok(e) = labeling_efficiency(&al, &rs, target) {
            prop_assert!((e - k as f64).abs() < 1e-9 * k as f64, "efficiency {} for k {}", e, k);
        }
    }

    #[test]
    fn welch_is_antisymmetric(ma in 0.0f64..1.0, mb in 0.0f64..1.0, sa in 0.001f64..0.2, sb in 0.001f64..0.2, na in 2usize..30, nb in 2usize..30) {
        let a = GroupStats::new(ma, sa, na);
        let b = GroupStats::new(mb, sb, nb);
        let ab = welch_t_test(a, b).unwrap();
        let ba = welch_t_test(b, a).unwrap();
        prop_assert!((ab.t + ba.t).abs() < 1e-12 * (1.0 + ab.t.abs()));
        prop_assert!((ab.dof - ba.dof).abs() < 1e-9 * ab.dof);
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p));
        let lo = (na.min(nb) - 1) as f64;
        prop_assert!(ab.dof >= lo - 1e-9 && ab.dof <= (na + nb - 2) as f64 + 1e-9);
    }

    #[test]
    fn p_value_shrinks_as_means_separate(gap in 0.0f64..0.5, extra in 0.001f64..0.5, s in 0.01f64..0.3, n in 2usize..20) {
        let base = GroupStats::new(0.0, s, n);
        let near = welch_t_test(base, GroupStats::new(gap, s, n)).unwrap();
        let far = welch_t_test(base, GroupStats::new(gap + extra, s, n)).unwrap();
        prop_assert!(far.p <= near.p + 1e-15);
    }

    #[test]
    fn aggregate_csv_round_trip(runs in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 4), 1..5)) {
        let curves: Vec<Curve> = runs
            .iter()
            .map(|accs| Curve::new(accs.iter().enumerate().map(|(k, &a)| (10 * (k + 1), a)).collect()).unwrap())
            .collect();
        let agg = aggregate(&curves).unwrap();
        let mut buf = Vec::new();
        write_aggregate_csv(&agg, &mut buf).unwrap();
        let back = read_aggregate_csv(buf.as_slice()).unwrap();
        let mut again = Vec::new();
        write_aggregate_csv(&back, &mut again).unwrap();
        prop_assert_eq!(buf, again);
        for (p, q) in agg.points.iter().zip(&back.points) {
            prop_assert_eq!((p.labels, p.n), (q.labels, q.n));
            // values are written with 9 significant digits
            prop_assert!((p.mean - q.mean).abs() <= 5e-9 * p.mean.abs() && (p.std - q.std).abs() <= 5e-9 * p.std.abs());
        }
    }
}

#[test]
fn aggregate_rejects_mismatched_grids() {
    let a = Curve::new(vec![(10, 0.5), (20, 0.6)]).unwrap();
    let b = Curve::new(vec![(10, 0.5), (30, 0.6)]).unwrap();
    assert_eq!(aggregate(&[a, b]), Err(EvalError::MismatchedGrids));
}

#[test]
fn efficiency_curve_marks_unreached_targets() {
    let al = aggregate(&[Curve::new(vec![(10, 0.5), (20, 0.9)]).unwrap()]).unwrap();
    let rs = aggregate(&[Curve::new(vec![(10, 0.5), (20, 0.7), (40, 0.9)]).unwrap()]).unwrap();
    let pts = efficiency_curve(&al, &rs, &[0.7, 0.95]).unwrap();
    // al reaches 0.7 at 15 labels, rs at 20
    assert!((pts[0].ratio.unwrap() - 20.0 / 15.0).abs() < 1e-12);
    assert_eq!(pts[1].ratio, None);
}

#[test]
fn curve_csv_is_readable_back() {
    let c = Curve::new(vec![(100, 0.25), (200, 0.5), (300, 0.875)]).unwrap();
    let mut buf = Vec::new();
    write_curve_csv(&c, &mut buf).unwrap();
    assert_eq!(read_curve_any(std::str::from_utf8(&buf).unwrap()).unwrap(), c);
}
