//! Sphere-example tables as fixtures, and the two checks they support: the
//! basic-cohomology row against the computed complex, and the
//! complementary-perversity duality of the intersection-cohomology rows.
//!
//! Fixture format, one entry per line:
//!
//! ```text
//! # comment
//! d 2
//! <degree> <class> <dim> <label>
//! ```
//!
//! `class` is `basic`, `p<0`, `p=a,b` or `p>=a`; `dim` is 0 or 1, and `label`
//! is `0` exactly when `dim` is 0. Every class lists degrees `0..2d+2` once.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::chaincore::CohomologyOptions;
use crate::models::{build_basic_complex, FoliationModel};
use crate::{Error, Result};

/// Truncation used when the basic row is cross-checked against the builder.
pub const SPHERE_TRUNCATION: u32 = 6;

const EMBEDDED: [(u32, &str); 3] = [
    (1, include_str!("../fixtures/sphere_d1.txt")),
    (2, include_str!("../fixtures/sphere_d2.txt")),
    (3, include_str!("../fixtures/sphere_d3.txt")),
];

/// A set of constant perversities sharing one table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perversity {
    Negative,
    Range(i64, i64),
    AtLeast(i64),
}

impl Perversity {
    pub fn contains(&self, p: i64) -> bool {
        match *self {
            Perversity::Negative => p < 0,
            Perversity::Range(a, b) => (a..=b).contains(&p),
            Perversity::AtLeast(a) => p >= a,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        if s == "p<0" {
            return Some(Perversity::Negative);
        }
        if let Some(a) = s.strip_prefix("p>=") {
            return a.parse().ok().filter(|a| *a >= 0).map(Perversity::AtLeast);
        }
        let (a, b) = s.strip_prefix("p=")?.split_once(',')?;
        let (a, b) = (a.parse().ok()?, b.parse().ok()?);
        (0 <= a && a <= b).then_some(Perversity::Range(a, b))
    }
}

impl fmt::Display for Perversity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perversity::Negative => write!(f, "p<0"),
            Perversity::Range(a, b) => write!(f, "p={a},{b}"),
            Perversity::AtLeast(a) => write!(f, "p>={a}"),
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Perversity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub dim: u8,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BicRow {
    pub class: Perversity,
    pub entries: Vec<Entry>,
}

/// The sphere example for one `d`: the basic row and the intersection
/// cohomology rows, each indexed by degree `0..k` with `k = 2d + 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BicTableFixture {
    pub d: u32,
    pub basic: Vec<Entry>,
    pub rows: Vec<BicRow>,
}

fn bad(line: usize, reason: impl Into<String>) -> Error {
    Error::BadFixture { line, reason: reason.into() }
}

impl BicTableFixture {
    /// Dimension of the sphere; degrees run over `0..k`.
    pub fn k(&self) -> usize {
        2 * self.d as usize + 2
    }

    /// The fixture shipped with the crate for this `d`.
    pub fn embedded(d: u32) -> Result<Self> {
        let (_, text) = EMBEDDED
            .iter()
            .find(|(e, _)| *e == d)
            .ok_or_else(|| Error::FixtureMissing(format!("no sphere table for d = {d}")))?;
        Self::parse(text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut d = None;
        let mut raw: Vec<(usize, Option<Perversity>, usize, Entry)> = Vec::new();
        for (n, line) in text.lines().enumerate().map(|(n, l)| (n + 1, l.trim())) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "d" {
                let v: u32 = fields
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .filter(|v| *v >= 1)
                    .ok_or_else(|| bad(n, "header must be `d <positive integer>`"))?;
                if d.replace(v).is_some() {
                    return Err(bad(n, "duplicate header"));
                }
                continue;
            }
            if fields.len() != 4 {
                return Err(bad(n, "expected `degree class dim label`"));
            }
            let degree: usize = fields[0].parse().map_err(|_| bad(n, "degree is not an integer"))?;
            let class = match fields[1] {
                "basic" => None,
                s => Some(Perversity::parse(s).ok_or_else(|| bad(n, format!("unknown class `{s}`")))?),
            };
            let dim: u8 = match fields[2] {
                "0" => 0,
                "1" => 1,
                s => return Err(bad(n, format!("dimension `{s}` is not 0 or 1"))),
            };
            let label = fields[3].to_string();
            if (dim == 0) != (label == "0") {
                return Err(bad(n, "label must be `0` exactly when the dimension is 0"));
            }
            raw.push((n, class, degree, Entry { dim, label }));
        }
        let d = d.ok_or_else(|| bad(0, "missing `d` header"))?;
        let k = 2 * d as usize + 2;

        let mut basic: Vec<Option<Entry>> = vec![None; k];
        let mut rows: Vec<(Perversity, Vec<Option<Entry>>)> = Vec::new();
        for (n, class, degree, entry) in raw {
            if degree >= k {
                return Err(bad(n, format!("degree {degree} exceeds k - 1 = {}", k - 1)));
            }
            let slots = match class {
                None => &mut basic,
                Some(c) => match rows.iter().position(|(r, _)| *r == c) {
                    Some(i) => &mut rows[i].1,
                    None => {
                        rows.push((c, vec![None; k]));
                        &mut rows.last_mut().unwrap().1
                    }
                },
            };
            if slots[degree].replace(entry).is_some() {
                return Err(bad(n, format!("degree {degree} listed twice")));
            }
        }
        let complete = |slots: Vec<Option<Entry>>, what: &str| -> Result<Vec<Entry>> {
            slots
                .into_iter()
                .enumerate()
                .map(|(i, e)| e.ok_or_else(|| bad(0, format!("{what} has no entry in degree {i}"))))
                .collect()
        };
        let fixture = BicTableFixture {
            d,
            basic: complete(basic, "basic row")?,
            rows: rows
                .into_iter()
                .map(|(class, slots)| Ok(BicRow { class, entries: complete(slots, &class.to_string())? }))
                .collect::<Result<_>>()?,
        };
        fixture.check_partition()?;
        Ok(fixture)
    }

    /// Every perversity `p >= -1` (standing for all negative ones) lands in
    /// exactly one row.
    fn check_partition(&self) -> Result<()> {
        let top = self
            .rows
            .iter()
            .filter_map(|r| match r.class {
                Perversity::AtLeast(a) => Some(a),
                _ => None,
            })
            .max()
            .ok_or_else(|| bad(0, "no `p>=a` row"))?;
        for p in -1..=top {
            let n = self.rows.iter().filter(|r| r.class.contains(p)).count();
            if n != 1 {
                return Err(bad(0, format!("perversity {p} lies in {n} rows")));
            }
        }
        Ok(())
    }

    pub fn row_for(&self, p: i64) -> Option<&BicRow> {
        self.rows.iter().find(|r| r.class.contains(p))
    }

    pub fn basic_dims(&self) -> Vec<usize> {
        self.basic.iter().map(|e| e.dim as usize).collect()
    }

    /// Copy with the dimension of one intersection-cohomology entry flipped.
    pub fn mutated(&self, row: usize, degree: usize) -> Self {
        let mut m = self.clone();
        let e = &mut m.rows[row].entries[degree];
        e.dim ^= 1;
        e.label = if e.dim == 0 { "0".into() } else { "[mutated]".into() };
        m
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("d {}\n", self.d);
        let mut emit = |class: &str, entries: &[Entry]| {
            for (i, e) in entries.iter().enumerate() {
                out.push_str(&format!("{i} {class} {} {}\n", e.dim, e.label));
            }
        };
        emit("basic", &self.basic);
        for r in &self.rows {
            emit(&r.class.to_string(), &r.entries);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BasicTableReport {
    pub d: u32,
    pub expected: Vec<usize>,
    pub computed: Vec<usize>,
    pub per_degree: Vec<bool>,
    pub passed: bool,
}

/// Build the basic complex of the sphere example and compare its Betti
/// numbers with the fixture's basic row.
pub fn check_basic_table(d: u32) -> Result<BasicTableReport> {
    check_basic_row(&BicTableFixture::embedded(d)?)
}

/// As [`check_basic_table`], against a fixture supplied by the caller.
pub fn check_basic_row(fixture: &BicTableFixture) -> Result<BasicTableReport> {
    let d = fixture.d;
    let model = FoliationModel::sphere(d, vec![1; d as usize + 1], SPHERE_TRUNCATION);
    let computed = build_basic_complex(&model)?.cohomology(&CohomologyOptions::default())?.betti;
    let expected = fixture.basic_dims();
    let per_degree: Vec<bool> =
        (0..expected.len().max(computed.len())).map(|i| expected.get(i) == computed.get(i)).collect();
    let passed = per_degree.iter().all(|b| *b);
    Ok(BasicTableReport { d, expected, computed, per_degree, passed })
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DualityPair {
    pub p: Perversity,
    pub q: Perversity,
    /// Degrees `i` with `dim IH^i_p != dim IH^{k-1-i}_q`.
    pub mismatches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BicDualityReport {
    pub d: u32,
    /// The complementary total `t = k - 3`.
    pub t: i64,
    pub pairs: Vec<DualityPair>,
    pub passed: bool,
}

/// Compare every pair of rows holding complementary perversities
/// `p + q = k - 3` with degrees reflected through `k - 1`.
pub fn check_bic_duality(fixture: &BicTableFixture) -> BicDualityReport {
    let k = fixture.k();
    let t = k as i64 - 3;
    let mut pairs: Vec<DualityPair> = Vec::new();
    for p in -1..=t + 1 {
        let q = (t - p).max(-1);
        let (Some(rp), Some(rq)) = (fixture.row_for(p), fixture.row_for(q)) else { continue };
        if pairs.iter().any(|x| x.p == rp.class && x.q == rq.class) {
            continue;
        }
        let mismatches =
            (0..k).filter(|&i| rp.entries[i].dim != rq.entries[k - 1 - i].dim).collect();
        pairs.push(DualityPair { p: rp.class, q: rq.class, mismatches });
    }
    let passed = pairs.iter().all(|x| x.mismatches.is_empty());
    BicDualityReport { d: fixture.d, t, pairs, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_fixtures_parse_and_round_trip() {
        for d in 1..=3 {
            let f = BicTableFixture::embedded(d).unwrap();
            assert_eq!(f.k(), 2 * d as usize + 2);
            assert_eq!(f.rows.len(), d as usize + 2);
            assert_eq!(BicTableFixture::parse(&f.to_text()).unwrap(), f);
        }
        assert!(matches!(BicTableFixture::embedded(4), Err(Error::FixtureMissing(_))));
    }

    #[test]
    fn transcribed_rows() {
        let f = BicTableFixture::embedded(1).unwrap();
        let labels = |p: i64| -> Vec<&str> { f.row_for(p).unwrap().entries.iter().map(|e| e.label.as_str()).collect() };
        assert_eq!(labels(-3), ["0", "[dr]", "0", "[e∧dr]"]);
        assert_eq!(labels(1), ["1", "0", "0", "[e∧dr]"]);
        assert_eq!(labels(7), ["1", "0", "[e]", "0"]);
        assert_eq!(f.basic_dims(), [1, 0, 0, 1]);
    }

    #[test]
    fn basic_rows_match_the_builder() {
        for d in 1..=3 {
            let r = check_basic_table(d).unwrap();
            assert!(r.passed, "{r:?}");
        }
        assert_eq!(check_basic_table(2).unwrap().computed, [1, 0, 0, 1, 0, 1]);
    }

    #[test]
    fn duality_holds_and_detects_mutation() {
        for d in 1..=3 {
            let f = BicTableFixture::embedded(d).unwrap();
            let r = check_bic_duality(&f);
            assert!(r.passed, "{r:?}");
            for row in 0..f.rows.len() {
                for i in 0..f.k() {
                    assert!(!check_bic_duality(&f.mutated(row, i)).passed, "d={d} row={row} i={i}");
                }
            }
        }
        let f = BicTableFixture::embedded(1).unwrap();
        let r = check_bic_duality(&f);
        assert_eq!(r.t, 1);
        assert!(r.pairs.iter().any(|x| x.p == Perversity::Negative && x.q == Perversity::AtLeast(2)));
        assert!(r.pairs.iter().any(|x| x.p == Perversity::Range(0, 1) && x.q == Perversity::Range(0, 1)));
    }

    #[test]
    fn duality_is_symmetric() {
        let r = check_bic_duality(&BicTableFixture::embedded(2).unwrap());
        for x in &r.pairs {
            assert!(r.pairs.iter().any(|y| y.p == x.q && y.q == x.p));
        }
    }

    #[test]
    fn zero_in_degree_zero_fails_duality() {
        // A p=2,3 row with 0 in degree 0 is not self-consistent.
        let f = BicTableFixture::embedded(2).unwrap();
        let row = f.rows.iter().position(|r| r.class == Perversity::Range(2, 3)).unwrap();
        assert!(!check_bic_duality(&f.mutated(row, 0)).passed);
    }

    #[test]
    fn malformed_fixtures() {
        let ok = "d 1\n";
        assert!(matches!(BicTableFixture::parse(ok), Err(Error::BadFixture { .. })));
        let text = BicTableFixture::embedded(1).unwrap().to_text();
        for (from, to) in [("0 p<0 0 0", "0 p<0 2 0"), ("0 p<0 0 0", "0 p<0 1 0"), ("0 p<0 0 0", "9 p<0 0 0"), ("p>=2", "p>=1")] {
            let broken = text.replacen(from, to, 1);
            assert!(matches!(BicTableFixture::parse(&broken), Err(Error::BadFixture { .. })), "{to}");
        }
    }
}
