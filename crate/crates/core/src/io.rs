//! File formats: node fixtures (TOML), experiment results and RF snapshots (CSV).
//!
//! Fixture schema, one `[[node]]` table per node:
//!
//! ```toml
//! [[node]]
//! id = "N1"
//! tpc = 100.0              # total power compute, > 0
//!
//! [node.profile]           # all seven required, each in [0, 1]
//! as = 0.25                # anti-spyware
//! avc = 0.54               # antivirus
//! fc = 0.66                # firewall
//! am = 0.6                 # authentication mechanism
//! bf = 0.6                 # backup facility
//! na = 0.7                 # network analyzer
//! ips = 0.6                # IPSec
//!
//! [node.feedback]          # optional; any non-empty subset, each in [0, 1]
//! nc = 0.25                # consistency
//! ni = 0.29                # independence
//! nt = 0.3                 # truthfulness
//! np = 0.35                # privacy
//! np2 = 0.4                # second privacy column
//! nu = 0.31                # utilization
//! nr = 0.12                # reliability
//! na_auth = 0.35           # authorization
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::gom::{Gom, SnapshotRow};
use crate::model::{
    attr, ExperimentResult, FeedbackVector, NodeId, ResultRow, SecurityFactor, SecurityProfile,
};
use crate::scalar::Scalar;

/// Fixtures shipped with the crate, addressable by name.
pub const BUNDLED_FIXTURES: &[(&str, &str)] =
    &[("paper_nodes", include_str!("../fixtures/paper_nodes.toml"))];

/// Fixture key for each canonical feedback attribute, in canonical order.
pub const FEEDBACK_KEYS: [(&str, &str); 8] = [
    ("nc", attr::NC),
    ("ni", attr::NI),
    ("nt", attr::NT),
    ("np", attr::NP),
    ("np2", attr::NP2),
    ("nu", attr::NU),
    ("nr", attr::NR),
    ("na_auth", attr::NA),
];

/// One node as described in a fixture file.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFixture<T> {
    pub id: NodeId,
    pub profile: SecurityProfile<T>,
    pub feedback: Option<FeedbackVector<T>>,
    pub tpc: T,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    node: Vec<RawNode>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: Spanned<String>,
    tpc: Spanned<f64>,
    profile: RawProfile,
    feedback: Option<RawFeedback>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    #[serde(rename = "as")]
    as_: Spanned<f64>,
    avc: Spanned<f64>,
    fc: Spanned<f64>,
    am: Spanned<f64>,
    bf: Spanned<f64>,
    na: Spanned<f64>,
    ips: Spanned<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeedback {
    nc: Option<Spanned<f64>>,
    ni: Option<Spanned<f64>>,
    nt: Option<Spanned<f64>>,
    np: Option<Spanned<f64>>,
    np2: Option<Spanned<f64>>,
    nu: Option<Spanned<f64>>,
    nr: Option<Spanned<f64>>,
    na_auth: Option<Spanned<f64>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses fixture text; `origin` labels error messages.
pub fn parse_node_fixture<T: Scalar>(text: &str, origin: &str) -> Result<Vec<NodeFixture<T>>> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Parse {
        origin: origin.to_string(),
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let parse_err = |span: std::ops::Range<usize>, message: String| Error::Parse {
        origin: origin.to_string(),
        line: line_of(text, span.start),
        message,
    };
    let score = |node: &str, key: &str, v: &Spanned<f64>| -> Result<T> {
        let x = *v.get_ref();
        if !(0.0..=1.0).contains(&x) {
            return Err(parse_err(
                v.span(),
                format!("node `{node}`: `{key}` = {x} is outside [0, 1]"),
            ));
        }
        Ok(T::lit(x))
    };

    let mut out: Vec<NodeFixture<T>> = Vec::with_capacity(raw.node.len());
    for n in raw.node {
        let id = n.id.get_ref().clone();
        if out.iter().any(|f| f.id.as_str() == id) {
            return Err(parse_err(n.id.span(), format!("duplicate node id `{id}`")));
        }
        let tpc = *n.tpc.get_ref();
        if !(tpc.is_finite() && tpc > 0.0) {
            return Err(parse_err(
                n.tpc.span(),
                format!("node `{id}`: `tpc` = {tpc} must be > 0"),
            ));
        }
        let p = &n.profile;
        let values = [&p.as_, &p.avc, &p.fc, &p.am, &p.bf, &p.na, &p.ips];
        let mut scores = [T::zero(); 7];
        for ((slot, factor), v) in scores.iter_mut().zip(SecurityFactor::ALL).zip(values) {
            *slot = score(&id, factor.key(), v)?;
        }
        let profile = SecurityProfile::new(scores)?;

        let feedback = match n.feedback {
            None => None,
            Some(f) => {
                let fields = [&f.nc, &f.ni, &f.nt, &f.np, &f.np2, &f.nu, &f.nr, &f.na_auth];
                let mut pairs = Vec::new();
                for ((key, name), v) in FEEDBACK_KEYS.iter().zip(fields) {
                    if let Some(v) = v {
                        pairs.push((*name, score(&id, key, v)?));
                    }
                }
                if pairs.is_empty() {
                    return Err(parse_err(
                        n.id.span(),
                        format!("node `{id}`: feedback table has no attributes"),
                    ));
                }
                Some(FeedbackVector::new(pairs)?)
            }
        };
        out.push(NodeFixture {
            id: NodeId::new(id),
            profile,
            feedback,
            tpc: T::lit(tpc),
        });
    }
    Ok(out)
}

pub fn load_node_fixture<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<NodeFixture<T>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_node_fixture(&text, &path.display().to_string())
}

pub fn bundled_fixture(name: &str) -> Option<&'static str> {
    BUNDLED_FIXTURES
        .iter()
        .find_map(|(n, text)| (*n == name).then_some(*text))
}

/// Loads `source` as a file path, or as a bundled fixture name when no such file exists.
pub fn load_nodes<T: Scalar>(source: &str) -> Result<Vec<NodeFixture<T>>> {
    if !Path::new(source).exists() {
        if let Some(text) = bundled_fixture(source) {
            return parse_node_fixture(text, source);
        }
    }
    load_node_fixture(source)
}

/// Renders nodes back into fixture text that parses to the same values.
pub fn node_fixture_to_string<T: Scalar>(nodes: &[NodeFixture<T>]) -> String {
    let mut s = String::new();
    for (i, n) in nodes.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        s.push_str(&format!(
            "[[node]]\nid = {}\ntpc = {:?}\n\n[node.profile]\n",
            toml::Value::String(n.id.to_string()),
            n.tpc.as_f64()
        ));
        for (factor, score) in n.profile.factors() {
            s.push_str(&format!("{} = {:?}\n", factor.key(), score.value().as_f64()));
        }
        if let Some(fb) = &n.feedback {
            s.push_str("\n[node.feedback]\n");
            for (key, name) in FEEDBACK_KEYS {
                if let Some(v) = fb.get(name) {
                    s.push_str(&format!("{key} = {:?}\n", v.value().as_f64()));
                }
            }
        }
    }
    s
}

/// Registers every fixture node with the GOM and seeds its feedback.
pub fn load_into_gom<T: Scalar>(gom: &mut Gom<T>, nodes: &[NodeFixture<T>]) -> Result<()> {
    for n in nodes {
        gom.register_node(n.id.clone(), n.profile, n.tpc)?;
        if let Some(fb) = &n.feedback {
            gom.seed_feedback(&n.id, fb.clone())?;
        }
    }
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(origin: &str, e: csv::Error) -> Error {
    Error::Parse {
        origin: origin.to_string(),
        line: e.position().map_or(1, |p| p.line() as usize),
        message: e.to_string(),
    }
}

pub const RESULTS_HEADER: [&str; 4] = ["checkpoint", "node_id", "cum_failures", "jobs_assigned"];
pub const SNAPSHOT_HEADER: [&str; 6] = ["rank", "node_id", "spc", "rw", "rf", "provisional"];

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
}

/// Results table as CSV text, rows sorted by `(checkpoint, node_id)`.
pub fn results_csv_string<T: Scalar>(result: &ExperimentResult<T>) -> String {
    let mut w = csv_writer();
    w.write_record(RESULTS_HEADER).expect("in-memory write");
    for row in result.rows() {
        w.serialize(row).expect("in-memory write");
    }
    finish(w)
}

pub fn write_results_csv<T: Scalar>(result: &ExperimentResult<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, results_csv_string(result)).map_err(io_err(path))
}

pub fn parse_results_csv(text: &str, origin: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| csv_err(origin, e))?;
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Parse {
            origin: origin.to_string(),
            line: 1,
            message: format!("expected header `{}`", RESULTS_HEADER.join(",")),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(origin, e)))
        .collect()
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_results_csv(&text, &path.display().to_string())
}

/// Fixed-point rendering with ties rounded to even.
///
/// The value is first rendered to 12 decimals, so decimal ties such as 0.29625
/// are treated as ties regardless of their binary representation.
pub fn format_half_even(x: f64, decimals: usize) -> String {
    const WORK: usize = 12;
    assert!(decimals < WORK, "at most {} decimals", WORK - 1);
    let rendered = format!("{:.*}", WORK, x.abs());
    let (int_part, frac) = rendered.split_once('.').expect("fixed-point rendering");
    let (keep, rest) = frac.split_at(decimals);
    let digits: String = [int_part, keep].concat();
    let mut n: u128 = digits.parse().expect("decimal digits");
    let half = format!("5{}", "0".repeat(rest.len() - 1));
    let round_up = match rest.cmp(half.as_str()) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => n % 2 == 1,
    };
    if round_up {
        n += 1;
    }
    let scale = 10u128.pow(decimals as u32);
    let body = if decimals == 0 {
        n.to_string()
    } else {
        format!("{}.{:0width$}", n / scale, n % scale, width = decimals)
    };
    if x.is_sign_negative() && n != 0 {
        format!("-{body}")
    } else {
        body
    }
}

fn snapshot_fields<T: Scalar>(row: &SnapshotRow<T>) -> [String; 6] {
    [
        row.rank.to_string(),
        row.node_id.to_string(),
        format_half_even(row.spc.value().as_f64(), 4),
        row.rw
            .map(|rw| format_half_even(rw.value().as_f64(), 4))
            .unwrap_or_default(),
        format_half_even(row.rf.value().as_f64(), 4),
        row.provisional.to_string(),
    ]
}

pub fn snapshot_csv_string<T: Scalar>(snapshot: &[SnapshotRow<T>]) -> String {
    let mut w = csv_writer();
    w.write_record(SNAPSHOT_HEADER).expect("in-memory write");
    for row in snapshot {
        w.write_record(snapshot_fields(row)).expect("in-memory write");
    }
    finish(w)
}

pub fn write_snapshot_csv<T: Scalar>(snapshot: &[SnapshotRow<T>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, snapshot_csv_string(snapshot)).map_err(io_err(path))
}

/// A snapshot row as stored on disk (4-decimal values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub rank: usize,
    pub node_id: NodeId,
    pub spc: f64,
    pub rw: Option<f64>,
    pub rf: f64,
    pub provisional: bool,
}

pub fn parse_snapshot_csv(text: &str, origin: &str) -> Result<Vec<SnapshotRecord>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| csv_err(origin, e))?;
    if header.iter().ne(SNAPSHOT_HEADER) {
        return Err(Error::Parse {
            origin: origin.to_string(),
            line: 1,
            message: format!("expected header `{}`", SNAPSHOT_HEADER.join(",")),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(origin, e)))
        .collect()
}

pub fn read_snapshot_csv(path: impl AsRef<Path>) -> Result<Vec<SnapshotRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_snapshot_csv(&text, &path.display().to_string())
}
