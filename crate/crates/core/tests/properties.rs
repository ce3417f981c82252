use proptest::prelude::*;

use torus_critical::detect::detect_critical_faces;
use torus_critical::filtration::build_cech_filtration;
use torus_critical::persistence::{betti_profile, classify_faces, reduce_boundary_matrix};
use torus_critical::sampling::PointCloud;
use torus_critical::verify::{check_backend_equivalence, check_cloud_cech, check_detector_equivalence};

fn cloud(d: usize, max: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, d), 4..max)
        .prop_map(move |pts| PointCloud::from_points(d, &pts).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_detector_matches_enumeration(c in cloud(2, 40), k in 1usize..=2) {
        check_detector_equivalence(&c, k, 0.0, 0.12).unwrap();
    }

    #[test]
    fn grid_detector_matches_enumeration_3d(c in cloud(3, 30), k in 1usize..=2) {
        check_detector_equivalence(&c, k, 0.0, 0.12).unwrap();
    }

    #[test]
    fn morse_identities_hold(c in cloud(2, 80)) {
        check_cloud_cech(&c, 0.1, 2, &[0.02, 0.05, 0.1]).unwrap();
    }

    #[test]
    fn delaunay_route_matches_cech(c in cloud(2, 120)) {
        prop_assume!(c.len() >= 40);
        check_backend_equivalence(&c, 0.1, &[0.03, 0.07, 0.1]).unwrap();
    }

    #[test]
    fn relabeling_points_preserves_persistence(c in cloud(2, 50), rot in 0usize..50) {
        let n = c.len();
        let order: Vec<usize> = (0..n).map(|i| (i * 7 + rot) % n).collect();
        prop_assume!({ let mut o = order.clone(); o.sort(); o.dedup(); o.len() == n });
        let d = c.permuted(&order);
        let signs = |c: &PointCloud| {
            let f = build_cech_filtration(c, 0.1, 2).unwrap();
            let p = reduce_boundary_matrix(&f).unwrap();
            let mut faces = detect_critical_faces(c, 1, 0.0, 0.1).unwrap();
            classify_faces(&mut faces, &f, &p).unwrap();
            let mut v: Vec<(i64, bool)> = faces
                .iter()
                .map(|x| ((x.value * 1e10).round() as i64, x.sign == torus_critical::detect::Sign::Positive))
                .collect();
            v.sort();
            (v, [0.03, 0.06, 0.1].map(|r| betti_profile(&p, r)))
        };
        prop_assert_eq!(signs(&c), signs(&d));
    }
}
