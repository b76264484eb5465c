//! Stateless scoring formulas: SPC, node utilization, node reliability, RW, RF and ranking.
//!
//! Every function here is pure. Means are summed in ascending value order so that
//! reordering inputs (with their labels) yields bit-identical results.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{FeedbackVector, NodeId, Score, SecurityProfile, WeightTable};
use crate::scalar::{mean, ordered_sum, Scalar};

/// Self-protection capability: plain mean of the profile's factor scores.
pub fn compute_spc<T: Scalar>(profile: &SecurityProfile<T>) -> Score<T> {
    let m = mean(profile.factors().map(|(_, s)| s.value())).expect("profile has factors");
    Score::clamped(m)
}

/// Weight-normalized SPC, `Σ wᵢ·Aᵢ / Σ wᵢ`.
///
/// The weight table must cover exactly the profile's factor set.
pub fn compute_weighted_spc<T: Scalar>(
    profile: &SecurityProfile<T>,
    weights: &WeightTable<T>,
) -> Result<Score<T>> {
    let wanted: BTreeSet<_> = profile.factors().map(|(f, _)| f).collect();
    let given: BTreeSet<_> = weights.iter().map(|(f, _)| f).collect();
    if wanted != given || weights.len() != wanted.len() {
        return Err(Error::Config(format!(
            "weight table covers {} factors, profile has {}",
            given.len(),
            wanted.len()
        )));
    }
    let (num, _) = ordered_sum(
        profile
            .factors()
            .map(|(f, s)| weights.get(f).expect("checked above") * s.value()),
    );
    let (den, _) = ordered_sum(weights.iter().map(|(_, w)| w));
    Ok(Score::clamped(num / den))
}

/// Share of the node's total power compute taken by the listed tasks.
pub fn compute_node_utilization<T: Scalar>(utilized: &[T], tpc: T) -> Result<Score<T>> {
    if !(tpc.is_finite() && tpc > T::zero()) {
        return Err(Error::domain(format!("total power compute must be > 0, got {tpc}")));
    }
    if let Some(bad) = utilized.iter().find(|u| !(u.is_finite() && **u >= T::zero())) {
        return Err(Error::domain(format!("utilized power must be >= 0, got {bad}")));
    }
    let (used, _) = ordered_sum(utilized.iter().copied());
    if used > tpc {
        return Err(Error::domain(format!(
            "utilized power {used} exceeds total power compute {tpc}"
        )));
    }
    Ok(Score::clamped(used / tpc))
}

/// Node reliability, distinguishing "never ran a job" from "ran jobs, none succeeded".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reliability<T> {
    NoHistory,
    Observed(Score<T>),
}

impl<T: Scalar> Reliability<T> {
    pub fn score(self) -> Option<Score<T>> {
        match self {
            Reliability::NoHistory => None,
            Reliability::Observed(s) => Some(s),
        }
    }
}

pub fn compute_node_reliability<T: Scalar>(succeeded: u64, submitted: u64) -> Result<Reliability<T>> {
    if succeeded > submitted {
        return Err(Error::domain(format!(
            "{succeeded} successes exceed {submitted} submissions"
        )));
    }
    if submitted == 0 {
        return Ok(Reliability::NoHistory);
    }
    Ok(Reliability::Observed(Score::clamped(
        T::from_count(succeeded) / T::from_count(submitted),
    )))
}

/// Reputation weightage: mean of the feedback attribute scores.
pub fn compute_rw<T: Scalar>(feedback: &FeedbackVector<T>) -> Score<T> {
    let m = mean(feedback.iter().map(|(_, s)| s.value())).expect("feedback vectors are non-empty");
    Score::clamped(m)
}

/// Per-attribute mean across users. All vectors must carry the same attribute set;
/// output order follows the first vector.
pub fn aggregate_feedback<T: Scalar>(vectors: &[FeedbackVector<T>]) -> Result<FeedbackVector<T>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::domain("no feedback vectors to aggregate"))?;
    let names: BTreeSet<&str> = first.names().collect();
    for v in &vectors[1..] {
        if v.len() != first.len() || v.names().collect::<BTreeSet<_>>() != names {
            return Err(Error::domain("feedback vectors carry different attribute sets"));
        }
    }
    let entries = first
        .names()
        .map(|name| {
            let m = mean(vectors.iter().map(|v| v.get(name).expect("same set").value()))
                .expect("non-empty");
            (name.to_string(), Score::clamped(m))
        })
        .collect();
    Ok(FeedbackVector::from_scores(entries))
}

/// Reliability factor, the midpoint of SPC and RW.
pub fn compute_rf<T: Scalar>(spc: Score<T>, rw: Score<T>) -> Score<T> {
    Score::clamped((spc.value() + rw.value()) / T::lit(2.0))
}

/// RF with the cold-start rule: without reputation the node is provisional and RF = SPC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assessment<T> {
    pub rf: Score<T>,
    pub provisional: bool,
}

pub fn assess<T: Scalar>(spc: Score<T>, rw: Option<Score<T>>) -> Assessment<T> {
    match rw {
        Some(rw) => Assessment {
            rf: compute_rf(spc, rw),
            provisional: false,
        },
        None => Assessment {
            rf: spc,
            provisional: true,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedNode<T> {
    /// 1-based.
    pub rank: usize,
    pub node_id: NodeId,
    pub rf: Score<T>,
}

/// Orders nodes by RF descending, breaking ties by ascending node id.
pub fn rank_nodes<T: Scalar>(scores: &[(NodeId, Score<T>)]) -> Result<Vec<RankedNode<T>>> {
    let mut seen = BTreeSet::new();
    for (id, _) in scores {
        if !seen.insert(id) {
            return Err(Error::domain(format!("duplicate node id `{id}` in ranking input")));
        }
    }
    let mut sorted: Vec<&(NodeId, Score<T>)> = scores.iter().collect();
    sorted.sort_by(|(ia, a), (ib, b)| {
        b.value()
            .partial_cmp(&a.value())
            .expect("scores are never NaN")
            .then_with(|| ia.cmp(ib))
    });
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, (id, rf))| RankedNode {
            rank: i + 1,
            node_id: id.clone(),
            rf: *rf,
        })
        .collect())
}

/// The rank-1 node.
pub fn select_node<T: Scalar>(ranked: &[RankedNode<T>]) -> Result<NodeId> {
    ranked
        .iter()
        .find(|r| r.rank == 1)
        .or(ranked.first())
        .map(|r| r.node_id.clone())
        .ok_or(Error::NoResource)
}
