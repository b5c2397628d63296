use maass::group::{
    apply, builtin_profile, hyperbolic_distance, is_reduced, pullback, GroupElement, GroupProfile, UpperHalfPoint,
};
use proptest::prelude::*;
use std::sync::OnceLock;

fn profiles() -> &'static [GroupProfile] {
    static P: OnceLock<Vec<GroupProfile>> = OnceLock::new();
    P.get_or_init(|| [1, 5, 6].iter().map(|&n| builtin_profile(n).unwrap()).collect())
}

fn word(p: &GroupProfile, picks: &[(usize, bool)]) -> GroupElement {
    picks.iter().fold(GroupElement::IDENTITY, |g, &(i, inv)| {
        let h = p.generators[i % p.generators.len()];
        let h = if inv { h.inverse() } else { h };
        h.compose(&g).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn lands_in_domain(which in 0usize..3, x in -3.0f64..3.0, ly in -2.5f64..1.0) {
        let p = &profiles()[which];
        let z = UpperHalfPoint::new(x, 10f64.powf(ly)).unwrap();
        let pb = pullback(z, p).unwrap();
        prop_assert!(is_reduced(pb.point, p));
        prop_assert!(pb.point.y >= p.y_min);
        prop_assert!(hyperbolic_distance(pb.point, p.dirichlet_center) <= hyperbolic_distance(z, p.dirichlet_center) + 1e-12);
        prop_assert!(hyperbolic_distance(apply(&pb.element, z), pb.point) < 1e-12);
    }

    #[test]
    fn orbit_invariance(
        which in 0usize..3,
        x in -2.0f64..2.0,
        ly in -2.0f64..0.5,
        picks in prop::collection::vec((0usize..8, any::<bool>()), 1..7),
    ) {
        let p = &profiles()[which];
        let z = UpperHalfPoint::new(x, 10f64.powf(ly)).unwrap();
        let g = word(p, &picks);
        let a = pullback(z, p).unwrap();
        let b = pullback(apply(&g, z), p).unwrap();
        let total = b.element.compose(&g).unwrap();
        prop_assert_eq!(total, a.element);
    }

    #[test]
    fn inverse_composes_to_identity(which in 0usize..3, picks in prop::collection::vec((0usize..8, any::<bool>()), 0..6)) {
        let p = &profiles()[which];
        let g = word(p, &picks);
        prop_assert_eq!(g.compose(&g.inverse()).unwrap(), GroupElement::IDENTITY);
    }
}

#[test]
fn reduced_points_are_fixed() {
    for p in profiles() {
        let pb = pullback(p.dirichlet_center, p).unwrap();
        assert_eq!(pb.iterations, 0);
        assert_eq!(pb.element, GroupElement::IDENTITY);
    }
}
