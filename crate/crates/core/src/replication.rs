//! Recomputes the published SPC / RW / RF table and compares it with the printed values.
//!
//! Two routes are run side by side: the floating-point pipeline (bundled fixture
//! through the GOM) and an exact rational recomputation over the published decimal
//! strings. The pipeline must agree with the exact route; printed values that
//! disagree with both are reported as discrepancies.

use num_rational::Ratio;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::gom::Gom;
use crate::io::{load_into_gom, load_nodes};
use crate::model::{attr, NodeId};

/// Printed values carry three decimals, truncated in places, so they may sit up to 1e-3 off.
pub const PRINTED_TOLERANCE: f64 = 1e-3;

/// Allowed gap between the float pipeline and the exact route.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

pub struct PublishedRow {
    pub node: &'static str,
    /// AS, AVC, FC, AM, BF, NA, IPS.
    pub factors: [&'static str; 7],
    /// NC, NI, NT, NP, NP2, NU, NR, NA.
    pub feedback: [&'static str; 8],
    pub spc: &'static str,
    pub rw: &'static str,
    pub rf: &'static str,
}

pub const PUBLISHED: [PublishedRow; 7] = [
    PublishedRow {
        node: "N1",
        factors: ["0.25", "0.54", "0.66", "0.6", "0.6", "0.7", "0.6"],
        feedback: ["0.25", "0.29", "0.3", "0.35", "0.4", "0.31", "0.12", "0.35"],
        spc: ".564",
        rw: ".281",
        rf: ".422",
    },
    PublishedRow {
        node: "N2",
        factors: ["0.2", "0.5", "0.7", "0.59", "0.59", "0.8", "0.87"],
        feedback: ["0.68", "0.69", "1", "0.4", "0.1", "0.35", "0.21", "0.7"],
        spc: ".607",
        rw: ".516",
        rf: ".561",
    },
    PublishedRow {
        node: "N3",
        factors: ["0.6", "0.37", "0.89", "0.51", "0.67", "0.73", "0.79"],
        feedback: ["0.6", "0.7", "0.8", "0.25", "0", "0.21", "0.6", "0.58"],
        spc: ".651",
        rw: ".467",
        rf: ".599",
    },
    PublishedRow {
        node: "N4",
        factors: ["0.15", "0.21", "0.45", "0.57", "0.39", "0.23", "0.38"],
        feedback: ["0.71", "0.77", "0.85", "0.52", "0.23", "0.58", "0.15", "0.67"],
        spc: ".34",
        rw: ".565",
        rf: ".452",
    },
    PublishedRow {
        node: "N5",
        factors: ["0.145", "0.7725", "0.7775", "0.675", "0.7075", "0.675", "0.7"],
        feedback: ["0.46", "0.463", "0.47", "0.43", "0.3", "0.44", "0.19", "0.44"],
        spc: ".636",
        rw: ".399",
        rf: ".517",
    },
    PublishedRow {
        node: "N6",
        factors: ["0.6", "0.37", "0.89", "0.51", "0.67", "0.73", "0.79"],
        feedback: ["0.54", "0.725", "0.75", "0.465", "0.4", "0.5", "0.5", "0.6"],
        spc: ".654",
        rw: ".56",
        rf: ".607",
    },
    PublishedRow {
        node: "N7",
        factors: ["0.51", "0.42", "0.5", "0.56", "0.7", "0.4", "0.61"],
        feedback: ["0.75", "0.8", "0.9", "0.28", "0.15", "0.32", "0.51", "0.55"],
        spc: ".528",
        rw: ".532",
        rf: ".53",
    },
];

/// Exact value of a plain decimal literal such as `0.7725` or `.34`.
pub fn parse_decimal(s: &str) -> Option<Ratio<i64>> {
    let (int_part, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let int: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let frac_num: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let den = 10i64.pow(frac.len() as u32);
    Some(Ratio::new(int * den + frac_num, den))
}

/// Exact arithmetic mean of decimal literals.
pub fn exact_mean(values: &[&str]) -> Option<Ratio<i64>> {
    if values.is_empty() {
        return None;
    }
    let sum = values
        .iter()
        .map(|v| parse_decimal(v))
        .sum::<Option<Ratio<i64>>>()?;
    Some(sum / Ratio::from_integer(values.len() as i64))
}

fn to_f64(r: Ratio<i64>) -> f64 {
    r.to_f64().expect("small ratio")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// Float pipeline value.
    pub computed: f64,
    /// Exact recomputation.
    pub oracle: f64,
    /// Value printed in the published table.
    pub published: f64,
}

impl Comparison {
    pub fn matches_oracle(&self) -> bool {
        (self.computed - self.oracle).abs() <= ORACLE_TOLERANCE
    }

    pub fn differs_from_published(&self) -> bool {
        (self.computed - self.published).abs() > PRINTED_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRow {
    pub node_id: NodeId,
    pub spc: Comparison,
    pub rw: Comparison,
    pub rf: Comparison,
}

impl ReplicationRow {
    /// Whether the printed RF is the midpoint of the printed SPC and RW.
    pub fn published_rf_consistent(&self) -> bool {
        let mid = (self.spc.published + self.rw.published) / 2.0;
        (mid - self.rf.published).abs() <= PRINTED_TOLERANCE
    }

    /// Input columns (SPC, RW) whose printed value disagrees with the recomputation.
    pub fn discrepancies(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.spc.differs_from_published() {
            out.push("SPC");
        }
        if self.rw.differs_from_published() {
            out.push("RW");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationReport {
    pub rows: Vec<ReplicationRow>,
}

impl ReplicationReport {
    pub fn discrepancy_count(&self) -> usize {
        self.rows.iter().map(|r| r.discrepancies().len()).sum()
    }

    pub fn oracle_agrees(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.spc.matches_oracle() && r.rw.matches_oracle() && r.rf.matches_oracle())
    }
}

/// Runs both routes over the bundled `paper_nodes` fixture.
pub fn replicate_paper() -> Result<ReplicationReport> {
    let nodes = load_nodes::<f64>("paper_nodes")?;
    let mut gom = Gom::<f64>::default();
    load_into_gom(&mut gom, &nodes)?;

    let bad = |what: String| Error::Consistency(what);
    let mut rows = Vec::with_capacity(PUBLISHED.len());
    for row in &PUBLISHED {
        let id = NodeId::from(row.node);
        let fixture = nodes
            .iter()
            .find(|n| n.id == id)
            .ok_or_else(|| bad(format!("bundled fixture lacks {}", row.node)))?;
        let fixture_factors = fixture.profile.values();
        let fixture_feedback = fixture
            .feedback
            .as_ref()
            .ok_or_else(|| bad(format!("bundled fixture lacks feedback for {}", row.node)))?;
        let same_inputs = row
            .factors
            .iter()
            .zip(fixture_factors)
            .all(|(s, v)| s.parse::<f64>() == Ok(v))
            && attr::CANONICAL.iter().zip(row.feedback).all(|(name, s)| {
                fixture_feedback.get(name).map(|x| x.value()) == s.parse::<f64>().ok()
            });
        if !same_inputs {
            return Err(bad(format!("bundled fixture drifted from published row {}", row.node)));
        }

        let spc_exact = exact_mean(&row.factors).expect("published literals");
        let rw_exact = exact_mean(&row.feedback).expect("published literals");
        let rf_exact = (spc_exact + rw_exact) / Ratio::from_integer(2);
        let record = gom.node(&id).expect("registered from fixture");
        let published = |s: &str| to_f64(parse_decimal(s).expect("published literal"));
        rows.push(ReplicationRow {
            node_id: id,
            spc: Comparison {
                computed: record.spc().expect("registered").value(),
                oracle: to_f64(spc_exact),
                published: published(row.spc),
            },
            rw: Comparison {
                computed: record.rw().expect("seeded").value(),
                oracle: to_f64(rw_exact),
                published: published(row.rw),
            },
            rf: Comparison {
                computed: record.rf().expect("seeded").value(),
                oracle: to_f64(rf_exact),
                published: published(row.rf),
            },
        });
    }
    Ok(ReplicationReport { rows })
}
