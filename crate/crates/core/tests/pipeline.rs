use foliate_core::chaincore::CohomologyOptions;
use foliate_core::duality::pd_report;
use foliate_core::gluing::{mv_check, CoverSpec, MvVariant};
use foliate_core::models::{build_basic_complex, build_compact_complex};
use foliate_core::tables::{check_basic_table, check_bic_duality, BicTableFixture};
use foliate_core::twisted::{decide_taut, twist_complex};
use foliate_core::FoliationModel;

const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];

fn betti(c: &foliate_core::GradedComplex) -> Vec<usize> {
    c.cohomology(&CohomologyOptions::default()).unwrap().betti
}

#[test]
fn carriere_from_model_to_duality() {
    let m = FoliationModel::carriere(CAT, 3);
    let basic = build_basic_complex(&m).unwrap();
    assert!(basic.validate().passed);
    assert_eq!(betti(&basic), [1, 1, 0]);

    let verdict = decide_taut(&m).unwrap();
    assert!(!verdict.taut);
    assert!(verdict.consistency);

    let kappa = foliate_core::models::tautness_one_form(&m).unwrap();
    assert_eq!(betti(&twist_complex(&basic, &kappa).unwrap()), [0, 1, 1]);
    assert!(pd_report(&m).unwrap().passed);
}

#[test]
fn kronecker_is_taut_and_self_dual() {
    let m = FoliationModel::kronecker(2f64.sqrt(), 6);
    assert!(decide_taut(&m).unwrap().taut);
    assert!(pd_report(&m).unwrap().passed);
}

#[test]
fn open_product_has_shifted_compact_cohomology() {
    let base = FoliationModel::kronecker(2f64.sqrt(), 6);
    let m = FoliationModel::product_cerf(base, 8);
    assert_eq!(betti(&build_basic_complex(&m).unwrap()), [1, 1, 0]);
    assert_eq!(betti(&build_compact_complex(&m).unwrap()), [0, 1, 1]);

    let cover = CoverSpec::new(FoliationModel::product_cerf(FoliationModel::kronecker(2f64.sqrt(), 6), 21), (-1.0, 0.2), (-0.2, 1.0));
    for v in [MvVariant::Basic, MvVariant::Compact] {
        assert!(mv_check(&cover, v).unwrap().exact);
    }
}

#[test]
fn sphere_tables() {
    for d in 1..=2 {
        assert!(check_basic_table(d).unwrap().passed);
        assert!(check_bic_duality(&BicTableFixture::embedded(d).unwrap()).passed);
    }
}
