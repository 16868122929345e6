//! One function per subcommand. Each returns the payload, a CSV table and a
//! status; the envelope is filled in by [`crate::run`].

use std::path::Path;

use foliate_core::chaincore::{truncation_sweep, CohomologyOptions};
use foliate_core::duality::{pd_report, PdDegree};
use foliate_core::geometry::{flow_geodesibility, mean_curvature, rescaling_defect, rummler_residual, Grid};
use foliate_core::gluing::{mv_check, MvVariant};
use foliate_core::models::{build_basic_complex, build_compact_complex, ModelKind};
use foliate_core::tables::{check_basic_row, check_bic_duality, BicTableFixture};
use foliate_core::twisted::{decide_taut, ClassTest};
use foliate_core::{Error, GradedComplex, ScalarMode};
use serde_json::{json, Value};

use crate::descriptor::Descriptor;
use crate::report::{num, to_value, ErrorInfo, ErrorKind, Status, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScalarChoice {
    /// Whatever the model commits to: rational when its data is exact.
    Auto,
    Rational,
    Float,
}

impl ScalarChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarChoice::Auto => "auto",
            ScalarChoice::Rational => "rational",
            ScalarChoice::Float => "float",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VariantChoice {
    Basic,
    Compact,
    Twisted,
    All,
}

pub struct Output {
    pub result: Value,
    pub table: Table,
    pub status: Status,
}

pub type CmdResult = Result<Output, ErrorInfo>;

pub fn classify(e: &Error) -> ErrorKind {
    match e {
        Error::NotValidated { .. } | Error::QuadratureUnstable(_) | Error::ExpOverflow(_) => ErrorKind::Numerical,
        Error::BadFixture { .. } => ErrorKind::Schema,
        _ => ErrorKind::Model,
    }
}

pub fn core_err(e: Error) -> ErrorInfo {
    ErrorInfo { kind: classify(&e), message: e.to_string() }
}

fn model_err(message: impl Into<String>) -> ErrorInfo {
    ErrorInfo { kind: ErrorKind::Model, message: message.into() }
}

fn schema_err(message: impl Into<String>) -> ErrorInfo {
    ErrorInfo { kind: ErrorKind::Schema, message: message.into() }
}

fn convert(c: GradedComplex, scalar: ScalarChoice) -> Result<GradedComplex, ErrorInfo> {
    match (scalar, c.mode()) {
        (ScalarChoice::Float, ScalarMode::Rational) => Ok(c.to_float()),
        (ScalarChoice::Rational, ScalarMode::Float) => {
            Err(model_err(format!("{} has irrational data and only admits --scalar float", c.meta().model)))
        }
        _ => Ok(c),
    }
}

pub fn analyze(desc: &Descriptor, truncations: Option<&[u32]>, scalar: ScalarChoice, tolerance: f64) -> CmdResult {
    let model = desc.model();
    model.validate().map_err(core_err)?;
    let n = model.truncation;
    let truncations = truncations.map(<[u32]>::to_vec).unwrap_or_else(|| vec![n, n + 1, n + 2]);
    let opts = CohomologyOptions { tolerance };

    let complex = convert(build_basic_complex(&model).map_err(core_err)?, scalar)?;
    let validation = complex.validate();
    let coh = complex.cohomology(&opts).map_err(core_err)?;
    let compact = match model.kind {
        ModelKind::ProductCerf { .. } => {
            let c = convert(build_compact_complex(&model).map_err(core_err)?, scalar)?;
            Some(c.cohomology(&opts).map_err(core_err)?)
        }
        _ => None,
    };

    let built = truncations
        .iter()
        .map(|&k| convert(build_basic_complex(&model.with_truncation(k)).map_err(core_err)?, scalar))
        .collect::<Result<Vec<_>, _>>()?;
    let sweep = truncation_sweep(
        |k| Ok(built[truncations.iter().position(|&t| t == k).expect("swept truncation")].clone()),
        &truncations,
        &opts,
    )
    .map_err(|e| match e {
        Error::InvalidSweep(m) => schema_err(format!("--truncations: {m}")),
        e => core_err(e),
    })?;

    let unstable = coh.any_unstable()
        || compact.as_ref().is_some_and(|c| c.any_unstable())
        || sweep.reports.iter().any(|r| r.any_unstable());
    let mut table = Table::new(&["truncation", "degree", "dim", "betti", "growth"]);
    for (i, (&k, c)) in truncations.iter().zip(&built).enumerate() {
        for (deg, &dim) in c.dims().iter().enumerate() {
            let b = sweep.reports[i].betti.get(deg).copied().unwrap_or(0);
            let class = sweep.class(deg).map(|g| g.as_str()).unwrap_or("");
            table.push(vec![k.to_string(), deg.to_string(), dim.to_string(), b.to_string(), class.into()]);
        }
    }
    let result = json!({
        "model": model.name(),
        "truncation": n,
        "mode": complex.mode(),
        "dims": complex.dims(),
        "validation": to_value(&validation),
        "betti": coh.betti,
        "tolerance_used": coh.tolerance_used,
        "tol_unstable": coh.tol_unstable,
        "compact_betti": compact.as_ref().map(|c| c.betti.clone()),
        "sweep": {
            "truncations": sweep.truncations,
            "dims": built.iter().map(GradedComplex::dims).collect::<Vec<_>>(),
            "degrees": to_value(&sweep.degrees),
        },
    });
    Ok(Output { result, table, status: if unstable { Status::Unstable } else { Status::Pass } })
}

pub fn taut(desc: &Descriptor) -> CmdResult {
    let v = decide_taut(&desc.model()).map_err(core_err)?;
    let status = if v.t1 == ClassTest::Inconclusive || !v.consistency {
        Status::Unstable
    } else if v.taut {
        Status::Pass
    } else {
        Status::Fail
    };
    let mut table = Table::new(&["criterion", "value"]);
    let t3 = v.t3.map(|x| x.to_string()).unwrap_or_default();
    for (k, val) in [
        ("taut", v.taut.to_string()),
        ("t1", v.t1.as_str().to_string()),
        ("t1_residual", num(v.t1_residual)),
        ("t2", v.t2.to_string()),
        ("t3", t3),
        ("codim", v.codim.to_string()),
        ("consistency", v.consistency.to_string()),
    ] {
        table.push(vec![k.into(), val]);
    }
    Ok(Output { result: to_value(&v), table, status })
}

fn pd_rows(table: &mut Table, side: &str, degrees: &[PdDegree]) {
    for d in degrees {
        let q = d.matrix.as_ref().map(|m| &m.quadrature);
        table.push(vec![
            side.into(),
            d.degree.to_string(),
            d.betti_c.to_string(),
            d.betti_kappa.to_string(),
            d.dims_match.to_string(),
            d.nondegenerate.to_string(),
            num(d.sigma_ratio),
            d.excluded.to_string(),
            q.map(|q| q.refinements.to_string()).unwrap_or_default(),
            q.map(|q| num(q.relative_change)).unwrap_or_default(),
        ]);
    }
}

pub fn pairing(desc: &Descriptor) -> CmdResult {
    let r = pd_report(&desc.model()).map_err(core_err)?;
    let mut table = Table::new(&[
        "side",
        "degree",
        "betti_c",
        "betti_kappa",
        "dims_match",
        "nondegenerate",
        "sigma_ratio",
        "excluded",
        "refinements",
        "relative_change",
    ]);
    pd_rows(&mut table, "compact", &r.degrees);
    if let Some(s) = &r.swapped {
        pd_rows(&mut table, "swapped", s);
    }
    let status = if r.passed { Status::Pass } else { Status::Fail };
    Ok(Output { result: to_value(&r), table, status })
}

pub fn mv(desc: &Descriptor, variant: VariantChoice) -> CmdResult {
    let cover = desc.cover().ok_or_else(|| schema_err("mv needs a `cover` in the descriptor"))?;
    let variants = match variant {
        VariantChoice::Basic => vec![MvVariant::Basic],
        VariantChoice::Compact => vec![MvVariant::Compact],
        VariantChoice::Twisted => vec![MvVariant::Twisted],
        VariantChoice::All => vec![MvVariant::Basic, MvVariant::Compact, MvVariant::Twisted],
    };
    let reports = variants.iter().map(|&v| mv_check(&cover, v)).collect::<Result<Vec<_>, _>>().map_err(core_err)?;
    let mut table = Table::new(&[
        "variant",
        "degree",
        "dim_a",
        "dim_b",
        "dim_c",
        "left_defect",
        "middle_defect",
        "right_defect",
        "composite",
        "chain_residual",
    ]);
    for r in &reports {
        for d in &r.degrees {
            table.push(vec![
                r.variant.as_str().into(),
                d.degree.to_string(),
                d.dims[0].to_string(),
                d.dims[1].to_string(),
                d.dims[2].to_string(),
                d.left_defect.to_string(),
                d.middle_defect.to_string(),
                d.right_defect.to_string(),
                num(d.composite),
                num(d.chain_residual),
            ]);
        }
    }
    let status = if reports.iter().all(|r| r.exact) { Status::Pass } else { Status::Fail };
    let result = json!({ "cover": { "u": cover.u, "v": cover.v }, "variants": to_value(&reports) });
    Ok(Output { result, table, status })
}

pub fn table(name: &str, d: u32, check_bic: bool, fixture: Option<&Path>) -> CmdResult {
    if name != "sphere" {
        return Err(model_err(format!("unknown table `{name}`; the only table is `sphere`")));
    }
    let fixture = match fixture {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ErrorInfo { kind: ErrorKind::Io, message: format!("{}: {e}", p.display()) })?;
            let f = BicTableFixture::parse(&text).map_err(|e| schema_err(format!("{}: {e}", p.display())))?;
            if f.d != d {
                return Err(schema_err(format!("{} encodes d = {}, not {d}", p.display(), f.d)));
            }
            f
        }
        None => BicTableFixture::embedded(d).map_err(core_err)?,
    };
    let basic = check_basic_row(&fixture).map_err(core_err)?;
    let bic = check_bic.then(|| check_bic_duality(&fixture));

    let mut table = Table::new(&["check", "row", "degree", "expected", "observed", "pass"]);
    for (i, ok) in basic.per_degree.iter().enumerate() {
        let at = |v: &Vec<usize>| v.get(i).map(|x| x.to_string()).unwrap_or_default();
        table.push(vec!["basic".into(), "basic".into(), i.to_string(), at(&basic.expected), at(&basic.computed), ok.to_string()]);
    }
    if let Some(b) = &bic {
        let k = fixture.k();
        for pair in &b.pairs {
            let (rp, rq) = (fixture.rows.iter().find(|r| r.class == pair.p), fixture.rows.iter().find(|r| r.class == pair.q));
            let (Some(rp), Some(rq)) = (rp, rq) else { continue };
            for i in 0..k {
                let (obs, exp) = (rp.entries[i].dim, rq.entries[k - 1 - i].dim);
                table.push(vec![
                    "bic".into(),
                    format!("{} | {}", pair.p, pair.q),
                    i.to_string(),
                    exp.to_string(),
                    obs.to_string(),
                    (obs == exp).to_string(),
                ]);
            }
        }
    }
    let passed = basic.passed && bic.as_ref().is_none_or(|b| b.passed);
    let result = json!({
        "table": name,
        "d": d,
        "k": fixture.k(),
        "basic": to_value(&basic),
        "bic": bic.as_ref().map(to_value),
    });
    Ok(Output { result, table, status: if passed { Status::Pass } else { Status::Fail } })
}

pub fn curvature(desc: &Descriptor) -> CmdResult {
    let chart = desc.chart().ok_or_else(|| schema_err("curvature needs a `metric` in the descriptor"))?;
    let (grid, half) = (Grid::new(chart.h), Grid::new(chart.h / 2.0));
    let kappa = mean_curvature(&chart.metric, &grid).map_err(core_err)?;
    let sup = kappa.covectors.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let r1 = rummler_residual(&chart.metric, &grid).map_err(core_err)?;
    let r2 = rummler_residual(&chart.metric, &half).map_err(core_err)?;
    let rate = if r1.max_residual > 0.0 && r2.max_residual > 0.0 { (r1.max_residual / r2.max_residual).log2() } else { f64::NAN };
    let flow = match chart.flow {
        Some(v) => Some(flow_geodesibility(&chart.metric, v, None, &grid).map_err(core_err)?),
        None => None,
    };
    let conformal = match chart.conformal {
        Some((f, df)) => Some(rescaling_defect(&chart.metric, f, df, &grid).map_err(core_err)?),
        None => None,
    };
    let bound = 5.0 * chart.h * chart.h;
    let passed = flow.as_ref().is_none_or(|f| f.agree) && conformal.is_none_or(|e| e < bound);

    let mut table = Table::new(&["quantity", "value"]);
    let mut row = |k: &str, v: String| table.push(vec![k.into(), v]);
    row("h", num(chart.h));
    row("kappa_sup", num(sup));
    row("kappa_leafwise_max", num(kappa.leafwise_max));
    row("rummler_residual", num(r1.max_residual));
    row("rummler_residual_half_step", num(r2.max_residual));
    row("rummler_rate", num(rate));
    if let Some(f) = &flow {
        row("geodesic_defect", num(f.geodesic_defect));
        row("orbit_curvature", num(f.orbit_curvature));
        row("theta_chi", num(f.theta_chi));
        row("killing", num(f.killing));
        row("conditions_agree", f.agree.to_string());
    }
    if let Some(e) = conformal {
        row("conformal_defect", num(e));
        row("conformal_bound", num(bound));
    }
    let points: Vec<Value> = kappa
        .points
        .iter()
        .zip(&kappa.covectors)
        .map(|(z, k)| json!({ "point": z, "kappa": k }))
        .collect();
    let result = json!({
        "h": chart.h,
        "mean_curvature": { "sup": sup, "leafwise_max": kappa.leafwise_max, "samples": points },
        "rummler": { "residual": r1.max_residual, "residual_half_step": r2.max_residual, "rate": rate },
        "flow": flow.as_ref().map(to_value),
        "conformal": conformal.map(|e| json!({ "defect": e, "bound": bound })),
    });
    Ok(Output { result: to_value(&result), table, status: if passed { Status::Pass } else { Status::Fail } })
}
