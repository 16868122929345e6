use foliate_core::chaincore::{CohomologyOptions, GradedComplex};
use foliate_core::duality::{duality_data, pair_forms};
use foliate_core::geometry::{field, warped_chart, Grid};
use foliate_core::models::{build_basic_complex, carriere_primitive, TrigSeries};
use foliate_core::FoliationModel;
use proptest::prelude::*;

fn perms(dims: &[usize]) -> impl Strategy<Value = Vec<Vec<usize>>> {
    dims.iter()
        .map(|&n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        .collect::<Vec<_>>()
}

fn trig(order: usize) -> impl Strategy<Value = TrigSeries> {
    prop::collection::vec(-1.0..1.0f64, 2 * order + 1).prop_map(TrigSeries::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn betti_is_invariant_under_basis_permutation(p in perms(&[5, 5, 5])) {
        let c = build_basic_complex(&FoliationModel::ghys(2)).unwrap();
        let GradedComplex::Exact(inner) = &c else { panic!("Ghys is exact") };
        let shuffled = GradedComplex::Exact(inner.permuted(&p).unwrap());
        let opts = CohomologyOptions::default();
        prop_assert!(shuffled.validate().passed);
        prop_assert_eq!(shuffled.cohomology(&opts).unwrap().betti, c.cohomology(&opts).unwrap().betti);
    }

    #[test]
    fn primitive_is_linear(h1 in trig(2), h2 in trig(2), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let lambda = (3.0 + 5f64.sqrt()) / 2.0;
        let combo = TrigSeries::new(h1.coeffs.iter().zip(&h2.coeffs).map(|(x, y)| a * x + b * y).collect());
        let g1 = carriere_primitive(&h1, lambda).unwrap();
        let g2 = carriere_primitive(&h2, lambda).unwrap();
        let g = carriere_primitive(&combo, lambda).unwrap();
        for i in 0..g.samples.len() {
            let expect = a * g1.samples[i] + b * g2.samples[i];
            prop_assert!((g.samples[i] - expect).abs() < 1e-11 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn pairing_is_bilinear(
        x in prop::collection::vec(-1.0..1.0f64, 1..=32),
        y in prop::collection::vec(-1.0..1.0f64, 1..=32),
        b in prop::collection::vec(-1.0..1.0f64, 1..=32),
        s in -3.0..3.0f64,
    ) {
        let data = duality_data(&FoliationModel::carriere([[2, 1], [1, 1]], 1), false).unwrap();
        let (lc, lt) = (data.compact.float_layout().unwrap(), data.twisted.float_layout().unwrap());
        let fit = |v: &[f64], n: usize| (0..n).map(|i| v[i % v.len()]).collect::<Vec<f64>>();
        let (na, nb) = (lc.dim(1), lt.dim(1));
        let (x, y, b) = (fit(&x, na), fit(&y, na), fit(&b, nb));
        let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + s * q).collect();
        let (m, _) = pair_forms(&lc, 1, &[x, y, z], &lt, 1, &[b]).unwrap();
        let expect = m[0][0] + s * m[1][0];
        prop_assert!((m[2][0] - expect).abs() < 1e-9 * (1.0 + expect.abs()));
    }

    #[test]
    fn conformal_rescalings_add(a in -1.0..1.0f64, c in -1.0..1.0f64) {
        let g = Grid::new(2e-2);
        let base = warped_chart();
        let stepwise = base
            .conformal_rescale(field(move |z| a * z[1]), &g)
            .unwrap()
            .conformal_rescale(field(move |z| c * libm::sin(z[1])), &g)
            .unwrap();
        let direct = base.conformal_rescale(field(move |z| a * z[1] + c * libm::sin(z[1])), &g).unwrap();
        for z in base.sample_points(&g).iter().step_by(7) {
            let (p, q) = (stepwise.at(z), direct.at(z));
            prop_assert!((p - &q).abs().max() < 1e-12 * q.abs().max());
        }
    }
}
