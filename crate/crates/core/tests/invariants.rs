use lingrad_core::energy::{
    discrete_gradient, gauss_green_residual, gauss_green_terms, total_variation, truncate,
    DualField, Field,
};
use lingrad_core::field_io::Lgf1;
use lingrad_core::geometry::{build_domain, GridDomain, Shape};
use proptest::prelude::*;

fn domains() -> Vec<GridDomain> {
    [
        Shape::Disk { r: 1.0 },
        Shape::Annulus {
            r_in: 0.4,
            r_out: 1.0,
        },
        Shape::Rectangle {
            x0: -1.0,
            x1: 0.5,
            y0: 0.0,
            y1: 1.0,
        },
        Shape::Interval { a: 0.0, b: 2.0 },
    ]
    .into_iter()
    .map(|s| build_domain(s, 24).unwrap())
    .collect()
}

fn poly(c: &[f64], x: &[f64]) -> f64 {
    let y = x.get(1).copied().unwrap_or(0.0);
    c[0] + c[1] * x[0] + c[2] * y + c[3] * x[0] * y + c[4] * (x[0] * x[0] - y * y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauss_green_holds_exactly(
        cu in prop::collection::vec(-2.0..2.0f64, 5),
        cz in prop::collection::vec(-2.0..2.0f64, 10),
    ) {
        for dom in domains() {
            let d = dom.dim();
            let u = Field::from_scalar_fn(&dom, |x| poly(&cu, x));
            let z = DualField::from_fn(&dom, 1, |x| {
                (0..d).map(|k| poly(&cz[5 * k..5 * k + 5], x)).collect()
            }).unwrap();
            let (lhs, rhs) = gauss_green_terms(&dom, &u, &z).unwrap();
            let defect = gauss_green_residual(&dom, &u, &z).unwrap();
            prop_assert!(defect <= 1e-12 * (1.0 + lhs.abs() + rhs.abs()), "{defect:e}");
        }
    }

    #[test]
    fn truncation_is_idempotent_and_contracting(
        c in prop::collection::vec(-3.0..3.0f64, 5),
        b in 0.0..2.0f64,
    ) {
        let dom = &domains()[0];
        let u = Field::from_scalar_fn(dom, |x| poly(&c, x));
        let t = truncate(&u, b).unwrap();
        prop_assert_eq!(truncate(&t, b).unwrap(), t.clone());
        for &cell in dom.cells() {
            prop_assert!(t.get(0, cell).abs() <= b);
        }
        prop_assert!(total_variation(dom, &t).unwrap() <= total_variation(dom, &u).unwrap() + 1e-12);
    }

    #[test]
    fn total_variation_is_positively_homogeneous(
        c in prop::collection::vec(-3.0..3.0f64, 5),
        s in -5.0..5.0f64,
    ) {
        for dom in domains() {
            let u = Field::from_scalar_fn(&dom, |x| poly(&c, x));
            let su = Field::from_scalar_fn(&dom, |x| s * poly(&c, x));
            let tv = total_variation(&dom, &u).unwrap();
            prop_assert!((total_variation(&dom, &su).unwrap() - s.abs() * tv).abs() <= 1e-12 * (1.0 + tv * s.abs()));
        }
    }

    #[test]
    fn fields_round_trip_bit_identically(
        c in prop::collection::vec(-1e3..1e3f64, 5),
    ) {
        for dom in domains() {
            let u = Field::from_scalar_fn(&dom, |x| poly(&c, x).sin() * 1e3 + poly(&c, x));
            let back = Field::from_lgf1(Lgf1::from_bytes(&u.to_lgf1().to_bytes()).unwrap()).unwrap();
            prop_assert_eq!(back.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            u.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());

            let z = discrete_gradient(&dom, &u).unwrap();
            let raw = Lgf1::from_bytes(&z.to_lgf1(&dom).unwrap().to_bytes()).unwrap();
            let zb = DualField::from_lgf1(&dom, &raw).unwrap();
            prop_assert_eq!(zb, z);
        }
    }
}
