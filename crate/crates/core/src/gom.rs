//! The Grid Organization Manager: node registry, SPC reports, feedback ingestion,
//! RF refresh and job dispatch.
//!
//! Every accepted mutation is appended to an event log. Feeding that log to
//! [`Gom::replay`] rebuilds an identical manager, which is how dispatch decisions
//! are audited.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{
    attr, FeedbackVector, JobId, JobOutcome, JobSpec, NodeId, NodeRecord, Score, SecurityProfile,
    WeightTable,
};
use crate::scalar::Scalar;
use crate::scoring::{
    aggregate_feedback, assess, compute_node_reliability, compute_node_utilization, compute_rw,
    compute_spc, compute_weighted_spc, rank_nodes, RankedNode,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GomConfig<T> {
    /// Feedback/outcome events between reputation refreshes; 1 refreshes immediately.
    pub refresh_every: usize,
    /// Rank provisional nodes (RF = SPC) alongside established ones.
    pub admit_provisional: bool,
    /// Weighted SPC instead of the plain mean.
    pub spc_weights: Option<WeightTable<T>>,
}

impl<T> Default for GomConfig<T> {
    fn default() -> Self {
        GomConfig {
            refresh_every: 1,
            admit_provisional: false,
            spc_weights: None,
        }
    }
}

/// An accepted GOM mutation.
#[derive(Debug, Clone, PartialEq)]
pub enum GomEvent<T> {
    Register {
        id: NodeId,
        profile: SecurityProfile<T>,
        tpc: T,
    },
    ReportSpc {
        id: NodeId,
        profile: SecurityProfile<T>,
    },
    /// Bootstrap feedback loaded from a fixture; needs no prior dispatch.
    SeedFeedback {
        id: NodeId,
        feedback: FeedbackVector<T>,
    },
    /// Job routed to the current rank-1 node.
    Submit { job: JobSpec<T> },
    /// Job routed to a caller-chosen node (round-robin stress runs).
    Assign { job: JobSpec<T>, node: NodeId },
    Outcome { outcome: JobOutcome<T> },
    Feedback {
        id: NodeId,
        feedback: FeedbackVector<T>,
    },
    /// Forced refresh of every pending reputation update.
    Flush,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dispatch {
    pub job_id: JobId,
    pub node_id: NodeId,
}

/// One row of the RF table.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRow<T> {
    pub rank: usize,
    pub node_id: NodeId,
    pub spc: Score<T>,
    pub rw: Option<Score<T>>,
    pub rf: Score<T>,
    pub provisional: bool,
}

pub type Snapshot<T> = Vec<SnapshotRow<T>>;

#[derive(Debug, Clone)]
pub struct Gom<T> {
    config: GomConfig<T>,
    registry: BTreeMap<NodeId, NodeRecord<T>>,
    feedback_store: BTreeMap<NodeId, Vec<FeedbackVector<T>>>,
    /// Nodes with at least one recorded outcome; their NR/NU are measured.
    measured: BTreeSet<NodeId>,
    dispatch_log: Vec<Dispatch>,
    open_jobs: BTreeMap<JobId, NodeId>,
    closed_jobs: BTreeSet<JobId>,
    dirty: BTreeSet<NodeId>,
    pending_events: usize,
    events: Vec<GomEvent<T>>,
}

impl<T: Scalar> Default for Gom<T> {
    fn default() -> Self {
        Self::new(GomConfig::default()).expect("default config is valid")
    }
}

impl<T: Scalar> Gom<T> {
    pub fn new(config: GomConfig<T>) -> Result<Self> {
        if config.refresh_every == 0 {
            return Err(Error::Config("refresh_every must be at least 1".into()));
        }
        if let Some(w) = &config.spc_weights {
            // Rejects tables that do not cover every factor.
            compute_weighted_spc(&SecurityProfile::uniform(T::zero())?, w)?;
        }
        Ok(Gom {
            config,
            registry: BTreeMap::new(),
            feedback_store: BTreeMap::new(),
            measured: BTreeSet::new(),
            dispatch_log: Vec::new(),
            open_jobs: BTreeMap::new(),
            closed_jobs: BTreeSet::new(),
            dirty: BTreeSet::new(),
            pending_events: 0,
            events: Vec::new(),
        })
    }

    /// Rebuilds a manager by applying `events` in order.
    pub fn replay<'a>(
        config: GomConfig<T>,
        events: impl IntoIterator<Item = &'a GomEvent<T>>,
    ) -> Result<Self> {
        let mut gom = Self::new(config)?;
        for e in events {
            gom.apply(e.clone())?;
        }
        Ok(gom)
    }

    pub fn apply(&mut self, event: GomEvent<T>) -> Result<()> {
        match event {
            GomEvent::Register { id, profile, tpc } => self.register_node(id, profile, tpc).map(drop),
            GomEvent::ReportSpc { id, profile } => self.report_spc(&id, profile).map(drop),
            GomEvent::SeedFeedback { id, feedback } => self.seed_feedback(&id, feedback),
            GomEvent::Submit { job } => self.submit_job(job).map(drop),
            GomEvent::Assign { job, node } => self.assign_job(job, &node).map(drop),
            GomEvent::Outcome { outcome } => self.record_outcome(outcome),
            GomEvent::Feedback { id, feedback } => self.record_feedback(&id, feedback),
            GomEvent::Flush => {
                self.flush();
                Ok(())
            }
        }
    }

    pub fn config(&self) -> &GomConfig<T> {
        &self.config
    }

    fn spc_of(&self, profile: &SecurityProfile<T>) -> Score<T> {
        match &self.config.spc_weights {
            Some(w) => compute_weighted_spc(profile, w).expect("weights validated in new"),
            None => compute_spc(profile),
        }
    }

    pub fn events(&self) -> &[GomEvent<T>] {
        &self.events
    }

    pub fn dispatch_log(&self) -> &[Dispatch] {
        &self.dispatch_log
    }

    pub fn node(&self, id: &NodeId) -> Option<&NodeRecord<T>> {
        self.registry.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord<T>> + '_ {
        self.registry.values()
    }

    /// RF used for ranking: the stored RF, or SPC for a provisional node.
    pub fn effective_rf(&self, id: &NodeId) -> Option<Score<T>> {
        self.registry.get(id).map(effective_rf)
    }

    pub fn feedback_for(&self, id: &NodeId) -> &[FeedbackVector<T>] {
        self.feedback_store.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.registry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registry.is_empty()
    }

    pub fn register_node(
        &mut self,
        id: NodeId,
        profile: SecurityProfile<T>,
        tpc: T,
    ) -> Result<NodeId> {
        if self.registry.contains_key(&id) {
            return Err(Error::DuplicateNode(id.to_string()));
        }
        if !(tpc.is_finite() && tpc > T::zero()) {
            return Err(Error::domain(format!(
                "total power compute of `{id}` must be > 0, got {tpc}"
            )));
        }
        let mut record = NodeRecord::new(id.clone(), profile, tpc);
        record.spc = Some(self.spc_of(&profile));
        self.registry.insert(id.clone(), record);
        self.events.push(GomEvent::Register {
            id: id.clone(),
            profile,
            tpc,
        });
        Ok(id)
    }

    /// Replaces a node's profile; SPC and RF refresh immediately.
    pub fn report_spc(&mut self, id: &NodeId, profile: SecurityProfile<T>) -> Result<Score<T>> {
        let spc = self.spc_of(&profile);
        let record = self.record_mut(id)?;
        record.profile = profile;
        record.spc = Some(spc);
        record.rf = record.rw.map(|rw| assess(spc, Some(rw)).rf);
        self.events.push(GomEvent::ReportSpc {
            id: id.clone(),
            profile,
        });
        Ok(spc)
    }

    /// Loads historical feedback for a node and refreshes it at once.
    pub fn seed_feedback(&mut self, id: &NodeId, feedback: FeedbackVector<T>) -> Result<()> {
        self.push_feedback(id, feedback.clone())?;
        self.refresh_node(id);
        self.dirty.remove(id);
        self.events.push(GomEvent::SeedFeedback {
            id: id.clone(),
            feedback,
        });
        Ok(())
    }

    /// User feedback after a job ran on the node.
    pub fn record_feedback(&mut self, id: &NodeId, feedback: FeedbackVector<T>) -> Result<()> {
        if !self.registry.contains_key(id) {
            return Err(Error::UnknownNode(id.to_string()));
        }
        if !self.dispatch_log.iter().any(|d| &d.node_id == id) {
            return Err(Error::SpuriousFeedback(id.to_string()));
        }
        self.push_feedback(id, feedback.clone())?;
        self.events.push(GomEvent::Feedback {
            id: id.clone(),
            feedback,
        });
        self.note_update(id);
        Ok(())
    }

    fn push_feedback(&mut self, id: &NodeId, feedback: FeedbackVector<T>) -> Result<()> {
        if !self.registry.contains_key(id) {
            return Err(Error::UnknownNode(id.to_string()));
        }
        let store = self.feedback_store.entry(id.clone()).or_default();
        if let Some(first) = store.first() {
            let expected: BTreeSet<&str> = first.names().collect();
            let got: BTreeSet<&str> = feedback.names().collect();
            if expected != got {
                return Err(Error::domain(format!(
                    "feedback for `{id}` uses attributes {got:?}, expected {expected:?}"
                )));
            }
        }
        store.push(feedback);
        Ok(())
    }

    /// Routes `job` to the rank-1 node of the current ranking.
    pub fn submit_job(&mut self, job: JobSpec<T>) -> Result<(JobId, NodeId)> {
        self.check_new_job(&job)?;
        let ranking = self.ranking();
        let node = ranking.first().ok_or(Error::NoResource)?.node_id.clone();
        let job_id = job.job_id.clone();
        self.dispatch(job_id.clone(), &node);
        self.events.push(GomEvent::Submit { job });
        Ok((job_id, node))
    }

    /// Routes `job` to a specific registered node, bypassing the ranking.
    pub fn assign_job(&mut self, job: JobSpec<T>, node: &NodeId) -> Result<(JobId, NodeId)> {
        if !self.registry.contains_key(node) {
            return Err(Error::UnknownNode(node.to_string()));
        }
        self.check_new_job(&job)?;
        let job_id = job.job_id.clone();
        self.dispatch(job_id.clone(), node);
        self.events.push(GomEvent::Assign {
            job,
            node: node.clone(),
        });
        Ok((job_id, node.clone()))
    }

    fn check_new_job(&self, job: &JobSpec<T>) -> Result<()> {
        if self.open_jobs.contains_key(&job.job_id) || self.closed_jobs.contains(&job.job_id) {
            return Err(Error::Consistency(format!(
                "job `{}` was already submitted",
                job.job_id
            )));
        }
        Ok(())
    }

    fn dispatch(&mut self, job_id: JobId, node: &NodeId) {
        self.registry
            .get_mut(node)
            .expect("dispatch target is registered")
            .jobs_submitted += 1;
        self.open_jobs.insert(job_id.clone(), node.clone());
        self.dispatch_log.push(Dispatch {
            job_id,
            node_id: node.clone(),
        });
    }

    /// Accounts for a finished job exactly once.
    pub fn record_outcome(&mut self, outcome: JobOutcome<T>) -> Result<()> {
        match self.open_jobs.get(&outcome.job_id) {
            None if self.closed_jobs.contains(&outcome.job_id) => {
                return Err(Error::Consistency(format!(
                    "outcome for job `{}` already recorded",
                    outcome.job_id
                )))
            }
            None => {
                return Err(Error::Consistency(format!(
                    "job `{}` was never dispatched",
                    outcome.job_id
                )))
            }
            Some(node) if *node != outcome.node_id => {
                return Err(Error::Consistency(format!(
                    "job `{}` ran on `{}`, not `{}`",
                    outcome.job_id, node, outcome.node_id
                )))
            }
            Some(_) => {}
        }
        let record = self
            .registry
            .get_mut(&outcome.node_id)
            .expect("dispatched node is registered");
        let tpc = record.total_power_compute;
        if outcome.utilized_power > tpc {
            return Err(Error::Consistency(format!(
                "job `{}` reports {} power units on a node with {}",
                outcome.job_id, outcome.utilized_power, tpc
            )));
        }
        if outcome.success {
            record.jobs_succeeded += 1;
        }
        // The NU window restarts once it would overflow TPC.
        record.utilized_power_log.push(outcome.utilized_power);
        if compute_node_utilization(&record.utilized_power_log, tpc).is_err() {
            record.utilized_power_log.clear();
            record.utilized_power_log.push(outcome.utilized_power);
        }

        self.open_jobs.remove(&outcome.job_id);
        self.closed_jobs.insert(outcome.job_id.clone());
        self.measured.insert(outcome.node_id.clone());
        let id = outcome.node_id.clone();
        self.events.push(GomEvent::Outcome { outcome });
        self.note_update(&id);
        Ok(())
    }

    fn note_update(&mut self, id: &NodeId) {
        self.dirty.insert(id.clone());
        self.pending_events += 1;
        if self.pending_events >= self.config.refresh_every {
            self.refresh_dirty();
        }
    }

    /// Applies every pending reputation update now.
    pub fn flush(&mut self) {
        self.refresh_dirty();
        self.events.push(GomEvent::Flush);
    }

    fn refresh_dirty(&mut self) {
        for id in std::mem::take(&mut self.dirty) {
            self.refresh_node(&id);
        }
        self.pending_events = 0;
    }

    /// Recomputes aggregated feedback, RW and RF for one node.
    fn refresh_node(&mut self, id: &NodeId) {
        let mut aggregated = match self.feedback_store.get(id) {
            Some(v) if !v.is_empty() => {
                Some(aggregate_feedback(v).expect("attribute sets checked on ingestion"))
            }
            _ => None,
        };
        let record = self.registry.get_mut(id).expect("refreshing a registered node");
        if self.measured.contains(id) {
            let measured = measured_attributes(record);
            match aggregated.as_mut() {
                Some(agg) => measured.iter().for_each(|(n, s)| agg.set(n, *s)),
                None => aggregated = Some(FeedbackVector::from_scores(measured)),
            }
        }
        record.rw = aggregated.as_ref().map(compute_rw);
        record.aggregated_feedback = aggregated;
        let spc = record.spc.expect("spc set at registration");
        record.rf = record.rw.map(|rw| assess(spc, Some(rw)).rf);
    }

    /// Current dispatch ranking.
    ///
    /// Established nodes compete on RF. Provisional nodes compete at RF = SPC when
    /// `admit_provisional` is set, or when no established node exists.
    pub fn ranking(&self) -> Vec<RankedNode<T>> {
        let (established, provisional): (Vec<_>, Vec<_>) =
            self.registry.values().partition(|r| !r.is_provisional());
        let pool: Vec<&NodeRecord<T>> = if self.config.admit_provisional || established.is_empty() {
            established.into_iter().chain(provisional).collect()
        } else {
            established
        };
        let scores: Vec<_> = pool
            .iter()
            .map(|r| (r.id.clone(), effective_rf(r)))
            .collect();
        rank_nodes(&scores).expect("registry keys are unique")
    }

    /// Point-in-time RF table. Rank 1 is the node the next `submit_job` would pick;
    /// nodes outside the dispatch pool follow, ordered the same way.
    pub fn snapshot(&self) -> Snapshot<T> {
        let ranking = self.ranking();
        let in_pool: BTreeSet<&NodeId> = ranking.iter().map(|r| &r.node_id).collect();
        let rest: Vec<_> = self
            .registry
            .values()
            .filter(|r| !in_pool.contains(&r.id))
            .map(|r| (r.id.clone(), effective_rf(r)))
            .collect();
        let rest = rank_nodes(&rest).expect("registry keys are unique");
        ranking
            .iter()
            .chain(rest.iter())
            .enumerate()
            .map(|(i, ranked)| {
                let r = &self.registry[&ranked.node_id];
                SnapshotRow {
                    rank: i + 1,
                    node_id: r.id.clone(),
                    spc: r.spc.expect("spc set at registration"),
                    rw: r.rw,
                    rf: effective_rf(r),
                    provisional: r.is_provisional(),
                }
            })
            .collect()
    }

    fn record_mut(&mut self, id: &NodeId) -> Result<&mut NodeRecord<T>> {
        self.registry
            .get_mut(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }
}

fn effective_rf<T: Scalar>(r: &NodeRecord<T>) -> Score<T> {
    let spc = r.spc.expect("spc set at registration");
    r.rf.unwrap_or_else(|| assess(spc, r.rw).rf)
}

/// NU and NR as observed by the GOM; NR is left out while the node has no history.
fn measured_attributes<T: Scalar>(r: &NodeRecord<T>) -> Vec<(String, Score<T>)> {
    let mut out = Vec::with_capacity(2);
    let nu = compute_node_utilization(&r.utilized_power_log, r.total_power_compute)
        .expect("log window never exceeds TPC");
    out.push((attr::NU.to_string(), nu));
    let nr = compute_node_reliability::<T>(r.jobs_succeeded, r.jobs_submitted)
        .expect("successes never exceed submissions");
    if let Some(nr) = nr.score() {
        out.push((attr::NR.to_string(), nr));
    }
    out
}
