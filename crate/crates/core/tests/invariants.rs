//! Property checks against the public API.

use levelci::geometry::{connected_components_eps, contour_levelset, directed_max_dist, hausdorff};
use levelci::inference::{empirical_quantile, run_bootstrap, BootstrapConfig, BootstrapPlan, Method};
use levelci::mode_clustering::{mean_shift_ascent, AscentConfig};
use levelci::visualization::{classical_mds, confidence_levels};
use levelci::{silverman_bandwidth, DensityModel, GridSpec, PointSet, SampleSet};
use proptest::prelude::*;

fn points(d: usize, max: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), 1..=max)
        .prop_map(|rows| PointSet::from_rows(&rows).unwrap())
}

fn model_of(p: &PointSet, h: f64) -> DensityModel {
    DensityModel::new(SampleSet::new(p.clone()).unwrap(), h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kde_ignores_data_order(p in points(2, 30), h in 0.1f64..1.0, x in prop::array::uniform2(-3.0f64..3.0)) {
        let mut rows = p.to_rows();
        rows.reverse();
        let q = PointSet::from_rows(&rows).unwrap();
        let a = model_of(&p, h).eval(&x).unwrap();
        let b = model_of(&q, h).eval(&x).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn grid_values_match_pointwise_evaluation(p in points(2, 20), h in 0.2f64..1.0) {
        let model = model_of(&p, h);
        let grid = GridSpec::new(vec![-4.0, -4.0], vec![4.0, 4.0], vec![9, 7]).unwrap();
        let values = model.eval_grid(&grid).unwrap();
        for k in 0..grid.node_count() {
            let direct = model.eval(&grid.node(k)).unwrap();
            prop_assert!((values.values()[k] - direct).abs() <= 1e-12 * direct.max(1e-12));
        }
    }

    #[test]
    fn silverman_scales_with_the_data(p in points(2, 40), c in 0.1f64..10.0) {
        prop_assume!(p.len() >= 3);
        let s = SampleSet::new(p.clone()).unwrap();
        prop_assume!(s.axis_moments().1.iter().all(|v| *v > 1e-6));
        let scaled: Vec<f64> = p.coords().iter().map(|v| c * v).collect();
        let t = SampleSet::new(PointSet::new(2, scaled).unwrap()).unwrap();
        let (h, hc) = (silverman_bandwidth(&s).unwrap(), silverman_bandwidth(&t).unwrap());
        prop_assert!((hc - c * h).abs() <= 1e-9 * hc);
    }

    #[test]
    fn hausdorff_is_a_metric(a in points(3, 25), b in points(3, 25), c in points(3, 25)) {
        let ab = hausdorff(&a, &b).unwrap();
        prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let via = hausdorff(&a, &c).unwrap() + hausdorff(&c, &b).unwrap();
        prop_assert!(ab <= via + 1e-12);
        prop_assert!(directed_max_dist(&a, &b).unwrap() <= ab);
    }

    #[test]
    fn component_count_survives_relabeling(p in points(2, 40), eps in 0.05f64..2.0) {
        let labels = connected_components_eps(&p, eps).unwrap();
        let mut rows = p.to_rows();
        rows.reverse();
        let back = connected_components_eps(&PointSet::from_rows(&rows).unwrap(), eps).unwrap();
        let count = |l: &[usize]| l.iter().max().map_or(0, |m| m + 1);
        prop_assert_eq!(count(&labels), count(&back));
        // labels are numbered in order of first appearance
        let mut next = 0;
        for &l in &labels {
            prop_assert!(l <= next);
            if l == next {
                next += 1;
            }
        }
    }

    #[test]
    fn quantile_is_monotone_and_attained(v in prop::collection::vec(0.0f64..10.0, 1..200), q1 in 0.01f64..0.99, q2 in 0.01f64..0.99) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let a = empirical_quantile(&v, lo).unwrap();
        let b = empirical_quantile(&v, hi).unwrap();
        prop_assert!(a <= b);
        prop_assert!(v.contains(&a));
    }

    #[test]
    fn ascent_never_descends(p in points(2, 25), h in 0.2f64..0.8, s in prop::array::uniform2(-3.0f64..3.0)) {
        let model = model_of(&p, h);
        let a = mean_shift_ascent(&model, &s, &AscentConfig::default()).unwrap();
        for w in a.densities.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn mds_keeps_planar_distances(p in points(2, 12)) {
        let emb = classical_mds(&p).unwrap();
        for i in 0..p.len() {
            for j in 0..p.len() {
                let want = levelci::points::distance(p.point(i), p.point(j));
                let got = ((emb[i][0] - emb[j][0]).powi(2) + (emb[i][1] - emb[j][1]).powi(2)).sqrt();
                prop_assert!((want - got).abs() <= 1e-7 * (1.0 + want));
            }
        }
    }

    #[test]
    fn confidence_levels_drop_with_half_width(lambda in 0.01f64..1.0, m in prop::collection::vec(0.0f64..0.5, 1..6)) {
        let pairs: Vec<(f64, f64)> = m.iter().enumerate().map(|(k, &w)| (0.05 * (k + 1) as f64, w)).collect();
        let levels = confidence_levels(lambda, &pairs).unwrap();
        prop_assert_eq!(levels.len(), m.len());
        for w in levels.windows(2) {
            prop_assert!(w[0].lambda <= w[1].lambda);
        }
        for l in &levels {
            prop_assert!(l.lambda >= 1e-12 && l.lambda <= lambda);
        }
    }
}

fn two_blobs() -> DensityModel {
    let mut rows = Vec::new();
    for (cx, cy) in [(-1.0, 0.0), (1.0, 0.0)] {
        for i in 0..8 {
            for j in 0..8 {
                rows.push([cx + 0.06 * i as f64, cy + 0.06 * j as f64]);
            }
        }
    }
    DensityModel::new(SampleSet::from_rows(&rows).unwrap(), 0.3).unwrap()
}

#[test]
fn contour_vertices_sit_near_the_level() {
    let model = two_blobs();
    let grid = model.default_grid(3.0, 96).unwrap();
    let set = contour_levelset(&model, &grid, 0.2).unwrap();
    assert!(!set.is_empty());
    assert!(set.tolerance < 0.01 * 0.2, "{}", set.tolerance);
}

#[test]
fn confidence_sets_nest_across_alphas() {
    let model = two_blobs();
    let plan = BootstrapPlan::default_for(&model, 0.2).unwrap();
    let boot = BootstrapConfig::new(60, 3, vec![0.05, 0.2, 0.5]).unwrap();
    let out = run_bootstrap(&model, 0.2, &plan, &boot, &Method::ALL).unwrap();
    for m in &out.methods {
        let t: Vec<f64> = m.sets.iter().map(|s| s.threshold()).collect();
        assert!(t.windows(2).all(|w| w[0] >= w[1]), "{:?}: {t:?}", m.method);
    }
    let again = run_bootstrap(&model, 0.2, &plan, &boot, &Method::ALL).unwrap();
    assert_eq!(out.methods[0].losses, again.methods[0].losses);
}
