//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use foliate_core::chaincore::{truncation_sweep, CohomologyOptions, Growth};
use foliate_core::duality::{pd_report, PdDegree, STABILITY_TOLERANCE};
use foliate_core::forms::Factor;
use foliate_core::geometry::{field, rescaling_defect, rummler_residual, vector_field, warped_chart, ChartMetric, Grid};
use foliate_core::gluing::{mv_check, CoverSpec, MvVariant};
use foliate_core::models::{
    build_basic_complex, build_carriere_variant, carriere_primitive, carriere_sign_oracle, tautness_one_form, TrigSeries,
};
use foliate_core::tables::{check_basic_table, check_bic_duality, BicTableFixture};
use foliate_core::twisted::{decide_taut, gauge_transform};
use foliate_core::{FoliationModel, GradedComplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn betti(c: &GradedComplex) -> Vec<usize> {
    c.cohomology(&CohomologyOptions::default()).expect("cohomology").betti
}

fn kronecker(n: u32) -> FoliationModel {
    FoliationModel::kronecker(2f64.sqrt(), n)
}

fn carriere_h2_vanishes() -> Outcome {
    let start = Instant::now();
    let b2: Vec<usize> = [4, 8, 16]
        .iter()
        .map(|&n| betti(&build_basic_complex(&FoliationModel::carriere(CAT, n)).unwrap())[2])
        .collect();
    let secs = start.elapsed().as_secs_f64();
    outcome(b2 == [0, 0, 0] && secs < 5.0, format!("b2 = {b2:?} at N = 4, 8, 16 in {secs:.2} s (limit 5 s)"))
}

fn carriere_primitive_formula() -> Outcome {
    let lambda = (3.0 + 5f64.sqrt()) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut ode, mut per) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let order = rng.gen_range(1..=6);
        let h = TrigSeries::new((0..2 * order + 1).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let g = carriere_primitive(&h, lambda).unwrap();
        ode = ode.max(g.ode_residual(&h));
        per = per.max(g.periodicity_defect());
    }
    let one = carriere_primitive(&TrigSeries::new(vec![1.0]), lambda).unwrap();
    let target = 1.0 / lambda.ln();
    let const_err = one.samples.iter().map(|s| (s - target).abs()).fold(0.0, f64::max);
    outcome(
        ode < 1e-8 && per < 1e-10 && const_err < 1e-12,
        format!("max ODE residual {ode:.2e} (< 1e-8), max |g(0)-g(1)| {per:.2e} (< 1e-10), h = 1 error {const_err:.2e} (< 1e-12)"),
    )
}

fn ghys_growth() -> Outcome {
    let ns = [4, 8, 16];
    let sweep = truncation_sweep(|n| build_basic_complex(&FoliationModel::ghys(n)), &ns, &CohomologyOptions::default()).unwrap();
    let b2 = &sweep.degrees[2].betti;
    let expect: Vec<usize> = ns.iter().map(|&n| 2 * n as usize + 1).collect();
    let class = sweep.degrees[2].class;
    outcome(*b2 == expect && class == Growth::Growing, format!("b2 = {b2:?} (expected {expect:?}), class {}", class.as_str()))
}

fn sphere_basic_table() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in 1..=3 {
        let start = Instant::now();
        let r = check_basic_table(d).unwrap();
        let secs = start.elapsed().as_secs_f64();
        pass &= r.passed && secs < 10.0;
        parts.push(format!("d={d} {:?} {} in {secs:.2} s", r.computed, if r.passed { "matches" } else { "differs" }));
    }
    outcome(pass, parts.join("; "))
}

fn bic_duality() -> Outcome {
    let mut pass = true;
    let mut caught = 0;
    let mut total = 0;
    for d in 1..=2 {
        let f = BicTableFixture::embedded(d).unwrap();
        pass &= check_bic_duality(&f).passed;
        for row in 0..f.rows.len() {
            for i in 0..f.k() {
                total += 1;
                caught += usize::from(!check_bic_duality(&f.mutated(row, i)).passed);
            }
        }
    }
    outcome(pass && caught == total, format!("fixtures d = 1, 2 pass: {pass}; mutations detected {caught}/{total}"))
}

fn tautness_trichotomy() -> Outcome {
    let k = decide_taut(&kronecker(8)).unwrap();
    let s = decide_taut(&FoliationModel::sphere(1, vec![1, 1], 6)).unwrap();
    let c = decide_taut(&FoliationModel::carriere(CAT, 8)).unwrap();
    let catalogue = [
        FoliationModel::ghys(4),
        FoliationModel::sphere(2, vec![1, 2, 3], 6),
        FoliationModel::product_cerf(kronecker(4), 8),
        FoliationModel::product_cerf(FoliationModel::carriere(CAT, 2), 8),
    ];
    let others: Vec<bool> = catalogue.iter().map(|m| decide_taut(m).unwrap().consistency).collect();
    let pass = k.taut
        && (k.t2, k.t3) == (1, Some(1))
        && s.taut
        && (s.t2, s.t3) == (1, Some(1))
        && !c.taut
        && (c.t2, c.t3) == (0, Some(0))
        && k.consistency
        && s.consistency
        && c.consistency
        && others.iter().all(|&x| x);
    outcome(
        pass,
        format!(
            "Kronecker taut={} T2={} T3={:?}; sphere taut={} T2={} T3={:?}; Carriere taut={} T2={} T3={:?}; consistency on others {others:?}",
            k.taut, k.t2, k.t3, s.taut, s.t2, s.t3, c.taut, c.t2, c.t3
        ),
    )
}

fn twisted_top_class() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [8, 16] {
        let m = FoliationModel::carriere(CAT, n);
        let oracle = carriere_sign_oracle(&m, 1.0).unwrap();
        let twisted = foliate_core::twisted::twist_complex(&build_basic_complex(&m).unwrap(), &tautness_one_form(&m).unwrap()).unwrap();
        let b = betti(&twisted);
        let chi: i64 = build_carriere_variant(&m, 1.0).unwrap().dims().iter().enumerate().map(|(k, &d)| if k % 2 == 0 { d as i64 } else { -(d as i64) }).sum();
        pass &= b == [0, 0, 1];
        parts.push(format!("N={n} betti {b:?} (oracle sign {}, Euler characteristic of the complex {chi})", oracle.sign));
    }
    outcome(pass, format!("{}; expected [0, 0, 1]", parts.join("; ")))
}

fn quadrature_stable(ds: &[PdDegree]) -> bool {
    ds.iter().filter_map(|d| d.matrix.as_ref()).all(|m| m.quadrature.relative_change < STABILITY_TOLERANCE)
}

fn duality_pairing() -> Outcome {
    let models = [
        ("Carriere", FoliationModel::carriere(CAT, 4)),
        ("Kronecker", kronecker(6)),
        ("sphere d=1", FoliationModel::sphere(1, vec![1, 1], 6)),
        ("ProductCerf(Kronecker)", FoliationModel::product_cerf(kronecker(4), 8)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m) in models {
        let r = pd_report(&m).unwrap();
        let stable = quadrature_stable(&r.degrees) && r.swapped.as_deref().is_none_or(quadrature_stable);
        let min_ratio = r.degrees.iter().filter(|d| !d.excluded).map(|d| d.sigma_ratio).fold(f64::INFINITY, f64::min);
        pass &= r.passed && stable;
        parts.push(format!("{name}: passed={} stable={stable} min sigma ratio {min_ratio:.3e}", r.passed));
    }
    outcome(pass, parts.join("; "))
}

fn product_metric() -> ChartMetric {
    ChartMetric::new(
        vec![0.0, 0.0, 0.0],
        vec![1.0, 1.0, 1.0],
        2,
        vec![field(|z| 2.0 + z[0]), field(|z| 0.1 * z[1]), field(|z| 0.1 * z[1]), field(|_| 1.5)],
        vec![field(|y| 1.0 + y[0] * y[0])],
    )
    .unwrap()
}

fn rummler() -> Outcome {
    let r1 = rummler_residual(&warped_chart(), &Grid::new(1e-2)).unwrap().max_residual;
    let r2 = rummler_residual(&warped_chart(), &Grid::new(5e-3)).unwrap().max_residual;
    let rate = (r1 / r2).log2();
    let flat = rummler_residual(&product_metric(), &Grid::new(1e-2)).unwrap().max_residual;
    outcome(
        r1 < 1e-3 && rate >= 1.8 && flat < 1e-10,
        format!("warped residual {r1:.3e} at h=1e-2 (< 1e-3), rate {rate:.3} (>= 1.8), product metric {flat:.2e} (< 1e-10)"),
    )
}

fn conformal_law() -> Outcome {
    let g = Grid::new(1e-2);
    let bound = 5.0 * g.h * g.h;
    let cases = [
        ("y", field(|z| z[1]), vector_field(|_| vec![0.0, 1.0])),
        ("-y", field(|z| -z[1]), vector_field(|_| vec![0.0, -1.0])),
        ("sin y", field(|z| z[1].sin()), vector_field(|z| vec![0.0, z[1].cos()])),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f, df) in cases {
        let e = rescaling_defect(&warped_chart(), f, df, &g).unwrap();
        pass &= e < bound;
        parts.push(format!("f={name}: {e:.3e}"));
    }
    outcome(pass, format!("{} (bound 5h^2 = {bound:.1e})", parts.join(", ")))
}

fn mayer_vietoris() -> Outcome {
    let cover = CoverSpec::new(FoliationModel::product_cerf(kronecker(6), 21), (-1.0, 0.2), (-0.2, 1.0));
    let mut pass = true;
    let mut parts = Vec::new();
    for v in [MvVariant::Basic, MvVariant::Compact, MvVariant::Twisted] {
        let r = mv_check(&cover, v).unwrap();
        let zero = r.degrees.iter().all(|d| d.left_defect + d.middle_defect + d.right_defect == 0 && d.composite == 0.0);
        pass &= r.exact && zero;
        if v == MvVariant::Compact {
            pass &= r.betti_union == [0, 1, 1] && r.reconstructed_union == [0, 1, 1];
        }
        parts.push(format!("{}: exact={} zero defects={zero} union {:?} reconstructed {:?}", v.as_str(), r.exact, r.betti_union, r.reconstructed_union));
    }
    outcome(pass, parts.join("; "))
}

fn gauge_invariance() -> Outcome {
    let m = FoliationModel::carriere(CAT, 16);
    let c = build_basic_complex(&m).unwrap();
    let kappa = tautness_one_form(&m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut pass = true;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale = 0.3 * rng.gen_range(0.1..1.0) / raw.iter().map(|x: &f64| x.abs()).sum::<f64>();
        let mut coeffs = vec![0.0];
        coeffs.extend(raw.iter().map(|x| x * scale));
        let r = gauge_transform(&c, &kappa, &vec![Factor::Trig(coeffs)]).unwrap();
        pass &= r.passed && r.betti_before == r.betti_after;
        worst = worst.max(r.cocycle_residual);
    }
    outcome(pass, format!("10 seeded f (modes <= 2, sum |coef| <= 0.3) at N=16; max cocycle residual {worst:.2e}"))
}

fn determinism() -> Outcome {
    let models = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models");
    let m = |name: &str| models.join(name).display().to_string();
    let runs: Vec<Vec<String>> = vec![
        vec!["analyze".into(), "--model".into(), m("ghys.json"), "--truncations".into(), "2,3,4".into()],
        vec!["taut".into(), "--model".into(), m("kronecker.json")],
        vec!["pairing".into(), "--model".into(), m("kronecker.json")],
        vec!["mv".into(), "--model".into(), m("product_kronecker.json")],
        vec!["table".into(), "sphere".into(), "--d".into(), "2".into(), "--check-bic".into()],
        vec!["curvature".into(), "--model".into(), m("carriere_chart.json")],
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for args in runs {
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_foliate"))
                .args(&args)
                .args(["--scalar", "rational"])
                .output()
                .expect("binary runs")
        };
        let (a, b) = (run(), run());
        let same = a.stdout == b.stdout && a.status == b.status && !a.stdout.is_empty();
        pass &= same;
        parts.push(format!("{} {}", args[0], if same { "identical" } else { "DIFFERS" }));
    }
    outcome(pass, parts.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("carriere-h2-vanishing", carriere_h2_vanishes),
        ("carriere-primitive", carriere_primitive_formula),
        ("ghys-growth", ghys_growth),
        ("sphere-basic-table", sphere_basic_table),
        ("bic-duality", bic_duality),
        ("tautness-trichotomy", tautness_trichotomy),
        ("twisted-top-class", twisted_top_class),
        ("duality-pairing", duality_pairing),
        ("rummler-residual", rummler),
        ("conformal-rescaling", conformal_law),
        ("mayer-vietoris", mayer_vietoris),
        ("gauge-invariance", gauge_invariance),
        ("cli-determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
