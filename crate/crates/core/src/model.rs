//! Domain types shared by the scoring engine, the GOM and the simulator.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A unitless score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Score<T>(T);

impl<T: Scalar> Score<T> {
    /// Validates `value` against `[0, 1]`; `field` names the offending input on failure.
    pub fn new(field: &str, value: T) -> Result<Self> {
        if value.is_nan() || value < T::zero() || value > T::one() {
            return Err(Error::OutOfBounds {
                field: field.to_string(),
                value: value.as_f64(),
            });
        }
        Ok(Score(value))
    }

    pub fn zero() -> Self {
        Score(T::zero())
    }

    pub fn one() -> Self {
        Score(T::one())
    }

    /// For values computed from already-bounded inputs; absorbs rounding at the edges.
    pub(crate) fn clamped(value: T) -> Self {
        Score(value.max(T::zero()).min(T::one()))
    }

    pub fn value(self) -> T {
        self.0
    }
}

impl<T: Scalar> fmt::Display for Score<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Opaque, caller-supplied node identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(String);

impl JobId {
    pub fn new(id: impl Into<String>) -> Self {
        JobId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for JobId {
    fn from(s: &str) -> Self {
        JobId(s.to_string())
    }
}

/// The self-protection factors a node reports to the GOM, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SecurityFactor {
    AntiSpyware,
    Antivirus,
    Firewall,
    Authentication,
    Backup,
    NetworkAnalyzer,
    Ipsec,
}

impl SecurityFactor {
    pub const ALL: [SecurityFactor; 7] = [
        SecurityFactor::AntiSpyware,
        SecurityFactor::Antivirus,
        SecurityFactor::Firewall,
        SecurityFactor::Authentication,
        SecurityFactor::Backup,
        SecurityFactor::NetworkAnalyzer,
        SecurityFactor::Ipsec,
    ];

    /// Short display label (`AS`, `AVC`, ...).
    pub fn abbrev(self) -> &'static str {
        match self {
            SecurityFactor::AntiSpyware => "AS",
            SecurityFactor::Antivirus => "AVC",
            SecurityFactor::Firewall => "FC",
            SecurityFactor::Authentication => "AM",
            SecurityFactor::Backup => "BF",
            SecurityFactor::NetworkAnalyzer => "NA",
            SecurityFactor::Ipsec => "IPS",
        }
    }

    /// Field name used in fixture files.
    pub fn key(self) -> &'static str {
        match self {
            SecurityFactor::AntiSpyware => "as",
            SecurityFactor::Antivirus => "avc",
            SecurityFactor::Firewall => "fc",
            SecurityFactor::Authentication => "am",
            SecurityFactor::Backup => "bf",
            SecurityFactor::NetworkAnalyzer => "na",
            SecurityFactor::Ipsec => "ips",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Scores for each of the seven self-protection factors of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityProfile<T> {
    scores: [Score<T>; 7],
}

impl<T: Scalar> SecurityProfile<T> {
    /// Builds a profile from values in [`SecurityFactor::ALL`] order.
    pub fn new(values: [T; 7]) -> Result<Self> {
        let mut scores = [Score::zero(); 7];
        for (slot, (factor, v)) in scores
            .iter_mut()
            .zip(SecurityFactor::ALL.iter().zip(values))
        {
            *slot = Score::new(factor.abbrev(), v)?;
        }
        Ok(SecurityProfile { scores })
    }

    pub fn uniform(value: T) -> Result<Self> {
        Self::new([value; 7])
    }

    /// Builds a profile from labeled values in any order; every factor exactly once.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (SecurityFactor, T)>) -> Result<Self> {
        let mut values: [Option<T>; 7] = [None; 7];
        for (factor, v) in pairs {
            if values[factor.index()].replace(v).is_some() {
                return Err(Error::domain(format!("factor {} given twice", factor.abbrev())));
            }
        }
        let mut out = [T::zero(); 7];
        for (slot, (factor, v)) in out.iter_mut().zip(SecurityFactor::ALL.iter().zip(values)) {
            *slot = v.ok_or_else(|| Error::domain(format!("factor {} missing", factor.abbrev())))?;
        }
        Self::new(out)
    }

    pub fn get(&self, factor: SecurityFactor) -> Score<T> {
        self.scores[factor.index()]
    }

    /// Copy of this profile with one factor replaced.
    pub fn with(&self, factor: SecurityFactor, value: T) -> Result<Self> {
        let mut next = *self;
        next.scores[factor.index()] = Score::new(factor.abbrev(), value)?;
        Ok(next)
    }

    /// Ordered `(factor, score)` list; its length is the `n` of the SPC mean.
    pub fn factors(&self) -> impl ExactSizeIterator<Item = (SecurityFactor, Score<T>)> + '_ {
        SecurityFactor::ALL.iter().map(move |&f| (f, self.get(f)))
    }

    pub fn values(&self) -> [T; 7] {
        self.scores.map(Score::value)
    }
}

/// Per-factor weights for the weighted SPC mode.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable<T> {
    weights: Vec<(SecurityFactor, T)>,
}

impl<T: Scalar> WeightTable<T> {
    /// Weights must be strictly positive, at most one per factor.
    pub fn from_pairs(pairs: Vec<(SecurityFactor, T)>) -> Result<Self> {
        for (i, (factor, w)) in pairs.iter().enumerate() {
            if !(w.is_finite() && *w > T::zero() && *w <= T::one()) {
                return Err(Error::Config(format!(
                    "weight for {} must lie in (0, 1], got {}",
                    factor.abbrev(),
                    w
                )));
            }
            if pairs[..i].iter().any(|(f, _)| f == factor) {
                return Err(Error::Config(format!(
                    "duplicate weight for {}",
                    factor.abbrev()
                )));
            }
        }
        Ok(WeightTable { weights: pairs })
    }

    /// Same weight on every factor.
    pub fn uniform(weight: T) -> Result<Self> {
        Self::from_pairs(SecurityFactor::ALL.iter().map(|&f| (f, weight)).collect())
    }

    pub fn get(&self, factor: SecurityFactor) -> Option<T> {
        self.weights
            .iter()
            .find_map(|&(f, w)| (f == factor).then_some(w))
    }

    pub fn iter(&self) -> impl Iterator<Item = (SecurityFactor, T)> + '_ {
        self.weights.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl<T: Scalar> Default for WeightTable<T> {
    /// The published security-factor weightages.
    fn default() -> Self {
        let table = [0.82, 0.85, 0.9, 0.8, 0.7, 0.6, 0.75];
        WeightTable {
            weights: SecurityFactor::ALL
                .iter()
                .zip(table)
                .map(|(&f, w)| (f, T::lit(w)))
                .collect(),
        }
    }
}

/// Canonical feedback attribute names.
pub mod attr {
    /// Node consistency.
    pub const NC: &str = "NC";
    /// Node independence.
    pub const NI: &str = "NI";
    /// Node truthfulness.
    pub const NT: &str = "NT";
    /// Node privacy.
    pub const NP: &str = "NP";
    /// Second privacy-like column carried by the published reputation table.
    pub const NP2: &str = "NP2";
    /// Node utilization, measured by the GOM.
    pub const NU: &str = "NU";
    /// Node reliability, measured by the GOM.
    pub const NR: &str = "NR";
    /// Node authorization.
    pub const NA: &str = "NA";

    pub const CANONICAL: [&str; 8] = [NC, NI, NT, NP, NP2, NU, NR, NA];
}

/// One user's (or the aggregated) per-attribute feedback about a node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackVector<T> {
    entries: Vec<(String, Score<T>)>,
}

impl<T: Scalar> FeedbackVector<T> {
    /// Non-empty list of uniquely named scores in `[0, 1]`.
    pub fn new<S: Into<String>>(pairs: impl IntoIterator<Item = (S, T)>) -> Result<Self> {
        let mut entries: Vec<(String, Score<T>)> = Vec::new();
        for (name, v) in pairs {
            let name = name.into();
            if entries.iter().any(|(n, _)| *n == name) {
                return Err(Error::domain(format!("duplicate feedback attribute `{name}`")));
            }
            let score = Score::new(&name, v)?;
            entries.push((name, score));
        }
        if entries.is_empty() {
            return Err(Error::domain("feedback vector needs at least one attribute"));
        }
        Ok(FeedbackVector { entries })
    }

    pub(crate) fn from_scores(entries: Vec<(String, Score<T>)>) -> Self {
        debug_assert!(!entries.is_empty());
        FeedbackVector { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<Score<T>> {
        self.entries
            .iter()
            .find_map(|(n, s)| (n == name).then_some(*s))
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, Score<T>)> + '_ {
        self.entries.iter().map(|(n, s)| (n.as_str(), *s))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    /// Replaces the named score in place, appending it when absent.
    pub fn set(&mut self, name: &str, score: Score<T>) {
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = score,
            None => self.entries.push((name.to_string(), score)),
        }
    }
}

/// A registered node as tracked by the GOM.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord<T> {
    pub(crate) id: NodeId,
    pub(crate) profile: SecurityProfile<T>,
    pub(crate) aggregated_feedback: Option<FeedbackVector<T>>,
    pub(crate) spc: Option<Score<T>>,
    pub(crate) rw: Option<Score<T>>,
    pub(crate) rf: Option<Score<T>>,
    pub(crate) jobs_submitted: u64,
    pub(crate) jobs_succeeded: u64,
    pub(crate) utilized_power_log: Vec<T>,
    pub(crate) total_power_compute: T,
}

impl<T: Scalar> NodeRecord<T> {
    pub(crate) fn new(id: NodeId, profile: SecurityProfile<T>, tpc: T) -> Self {
        NodeRecord {
            id,
            profile,
            aggregated_feedback: None,
            spc: None,
            rw: None,
            rf: None,
            jobs_submitted: 0,
            jobs_succeeded: 0,
            utilized_power_log: Vec::new(),
            total_power_compute: tpc,
        }
    }

    pub fn id(&self) -> &NodeId {
        &self.id
    }

    pub fn profile(&self) -> &SecurityProfile<T> {
        &self.profile
    }

    pub fn aggregated_feedback(&self) -> Option<&FeedbackVector<T>> {
        self.aggregated_feedback.as_ref()
    }

    pub fn spc(&self) -> Option<Score<T>> {
        self.spc
    }

    pub fn rw(&self) -> Option<Score<T>> {
        self.rw
    }

    pub fn rf(&self) -> Option<Score<T>> {
        self.rf
    }

    /// No reputation yet; RF falls back to SPC.
    pub fn is_provisional(&self) -> bool {
        self.rw.is_none()
    }

    pub fn jobs_submitted(&self) -> u64 {
        self.jobs_submitted
    }

    pub fn jobs_succeeded(&self) -> u64 {
        self.jobs_succeeded
    }

    pub fn utilized_power_log(&self) -> &[T] {
        &self.utilized_power_log
    }

    pub fn total_power_compute(&self) -> T {
        self.total_power_compute
    }
}

/// A unit of work submitted to the GOM.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec<T> {
    pub job_id: JobId,
    pub required_power: T,
    pub metadata: BTreeMap<String, String>,
}

impl<T: Scalar> JobSpec<T> {
    pub fn new(job_id: impl Into<String>, required_power: T) -> Result<Self> {
        if !(required_power.is_finite() && required_power > T::zero()) {
            return Err(Error::domain(format!(
                "required_power must be > 0, got {required_power}"
            )));
        }
        Ok(JobSpec {
            job_id: JobId::new(job_id),
            required_power,
            metadata: BTreeMap::new(),
        })
    }
}

/// Result of running one dispatched job.
#[derive(Debug, Clone, PartialEq)]
pub struct JobOutcome<T> {
    pub job_id: JobId,
    pub node_id: NodeId,
    pub success: bool,
    pub utilized_power: T,
}

impl<T: Scalar> JobOutcome<T> {
    pub fn new(
        job_id: impl Into<String>,
        node_id: impl Into<String>,
        success: bool,
        utilized_power: T,
    ) -> Result<Self> {
        if !(utilized_power.is_finite() && utilized_power >= T::zero()) {
            return Err(Error::domain(format!(
                "utilized_power must be >= 0, got {utilized_power}"
            )));
        }
        Ok(JobOutcome {
            job_id: JobId::new(job_id),
            node_id: NodeId::new(node_id),
            success,
            utilized_power,
        })
    }
}

/// Per-node counters at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CheckpointCounts {
    pub cum_failures: u64,
    pub jobs_assigned: u64,
}

/// One row of the results table: counts of one node at one checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResultRow {
    pub checkpoint: u64,
    pub node_id: NodeId,
    pub cum_failures: u64,
    pub jobs_assigned: u64,
}

/// Cumulative per-node failure counts at job-count checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult<T> {
    pub checkpoints: Vec<u64>,
    /// One entry per checkpoint, aligned with `checkpoints`.
    pub per_node: BTreeMap<NodeId, Vec<CheckpointCounts>>,
    pub seed: u64,
    pub alpha: T,
    /// Name of the random generator algorithm that produced the run.
    pub generator: String,
}

impl<T: Scalar> ExperimentResult<T> {
    /// Rows sorted by `(checkpoint, node_id)`.
    pub fn rows(&self) -> Vec<ResultRow> {
        let mut rows: Vec<ResultRow> = self
            .checkpoints
            .iter()
            .enumerate()
            .flat_map(|(i, &checkpoint)| {
                self.per_node.iter().map(move |(id, counts)| ResultRow {
                    checkpoint,
                    node_id: id.clone(),
                    cum_failures: counts[i].cum_failures,
                    jobs_assigned: counts[i].jobs_assigned,
                })
            })
            .collect();
        rows.sort();
        rows
    }

    /// Counts at the last checkpoint for each node.
    pub fn final_counts(&self) -> BTreeMap<NodeId, CheckpointCounts> {
        self.per_node
            .iter()
            .map(|(id, c)| (id.clone(), c.last().copied().unwrap_or_default()))
            .collect()
    }
}
