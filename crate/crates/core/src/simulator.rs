//! Seeded Monte-Carlo job-submission experiment.
//!
//! Each job fails with probability `clamp(alpha * (1 - rf), 0, 1)` where `rf` is the
//! assigned node's reliability factor at dispatch time. Randomness comes from
//! ChaCha8 seeded with the run seed: stream 0 drives failure draws and stream 1
//! the workload, so the two never share state.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gom::{Gom, GomConfig};
use crate::io::{load_into_gom, NodeFixture};
use crate::model::{CheckpointCounts, ExperimentResult, JobOutcome, JobSpec, NodeId, Score};
use crate::scalar::Scalar;

/// Recorded in every [`ExperimentResult`].
pub const GENERATOR: &str = "ChaCha8Rng";

const FAILURE_STREAM: u64 = 0;
const WORKLOAD_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureModel<T> {
    /// Scales the failure probability; must be > 0.
    pub alpha: T,
}

impl<T: Scalar> Default for FailureModel<T> {
    fn default() -> Self {
        FailureModel { alpha: T::one() }
    }
}

impl<T: Scalar> FailureModel<T> {
    pub fn new(alpha: T) -> Result<Self> {
        let model = FailureModel { alpha };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > T::zero()) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

pub fn failure_probability<T: Scalar>(rf: Score<T>, model: &FailureModel<T>) -> Result<T> {
    model.validate()?;
    let p = model.alpha * (T::one() - rf.value());
    Ok(p.max(T::zero()).min(T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentMode {
    /// Every job goes to the GOM's current rank-1 node.
    Broker,
    /// Jobs cycle through nodes in ascending id order.
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub total_jobs: u64,
    /// Strictly increasing job counts at which per-node totals are recorded.
    pub checkpoints: Vec<u64>,
    pub seed: u64,
    pub mode: AssignmentMode,
    pub failure_model: FailureModel<T>,
    /// Feed outcomes back into the GOM so NR, RW and RF drift during the run.
    pub feedback_loop: bool,
    pub gom: GomConfig<T>,
}

impl<T: Scalar> SimConfig<T> {
    /// Round-robin, alpha 1, no feedback loop, ten evenly spaced checkpoints.
    pub fn new(total_jobs: u64, seed: u64) -> Self {
        SimConfig {
            total_jobs,
            checkpoints: even_checkpoints(total_jobs, 10),
            seed,
            mode: AssignmentMode::RoundRobin,
            failure_model: FailureModel::default(),
            feedback_loop: false,
            gom: GomConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.failure_model.validate()?;
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("checkpoints must be strictly increasing".into()));
        }
        if let Some(&last) = self.checkpoints.last() {
            if last > self.total_jobs {
                return Err(Error::Config(format!(
                    "checkpoint {last} exceeds total_jobs {}",
                    self.total_jobs
                )));
            }
        }
        Ok(())
    }
}

/// Up to `count` evenly spaced marks ending at `total`; empty when `total` is 0.
pub fn even_checkpoints(total: u64, count: u64) -> Vec<u64> {
    let mut marks: Vec<u64> = (1..=count.max(1))
        .map(|i| total * i / count.max(1))
        .filter(|&m| m > 0)
        .collect();
    marks.dedup();
    marks
}

/// `n` jobs named `job-000000`, `job-000001`, ... with power drawn uniformly from [1, 10].
pub fn generate_workload<T: Scalar>(n: u64, seed: u64) -> Vec<JobSpec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(WORKLOAD_STREAM);
    (0..n)
        .map(|i| {
            let power: f64 = rng.random_range(1.0..=10.0);
            JobSpec::new(format!("job-{i:06}"), T::lit(power)).expect("power is positive")
        })
        .collect()
}

pub fn run_experiment<T: Scalar>(
    config: &SimConfig<T>,
    nodes: &[NodeFixture<T>],
) -> Result<ExperimentResult<T>> {
    config.validate()?;
    if nodes.is_empty() {
        return Err(Error::NoResource);
    }
    let mut gom = Gom::new(config.gom.clone())?;
    load_into_gom(&mut gom, nodes)?;
    let order: Vec<NodeId> = gom.nodes().map(|r| r.id().clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(FAILURE_STREAM);

    let mut counts: BTreeMap<NodeId, CheckpointCounts> =
        order.iter().map(|id| (id.clone(), CheckpointCounts::default())).collect();
    let mut per_node: BTreeMap<NodeId, Vec<CheckpointCounts>> =
        order.iter().map(|id| (id.clone(), Vec::new())).collect();
    let mut marks = config.checkpoints.iter().peekable();
    let mut record = |done: u64, counts: &BTreeMap<NodeId, CheckpointCounts>| {
        while marks.next_if(|&&m| m == done).is_some() {
            for (id, c) in counts {
                per_node.get_mut(id).expect("known node").push(*c);
            }
        }
    };
    record(0, &counts);

    for (i, job) in generate_workload::<T>(config.total_jobs, config.seed)
        .into_iter()
        .enumerate()
    {
        let power = job.required_power;
        let (job_id, node) = match config.mode {
            AssignmentMode::Broker => gom.submit_job(job)?,
            AssignmentMode::RoundRobin => gom.assign_job(job, &order[i % order.len()])?,
        };
        let rf = gom.effective_rf(&node).expect("dispatched node is registered");
        let p = failure_probability(rf, &config.failure_model)?.as_f64();
        let failed = rng.random::<f64>() < p;

        let c = counts.get_mut(&node).expect("known node");
        c.jobs_assigned += 1;
        c.cum_failures += u64::from(failed);

        if config.feedback_loop {
            gom.record_outcome(JobOutcome {
                job_id,
                node_id: node,
                success: !failed,
                utilized_power: power,
            })?;
        }
        record(i as u64 + 1, &counts);
    }

    Ok(ExperimentResult {
        checkpoints: config.checkpoints.clone(),
        per_node,
        seed: config.seed,
        alpha: config.failure_model.alpha,
        generator: GENERATOR.to_string(),
    })
}

/// Kendall rank correlation with tie correction (tau-b); `None` when either side is constant.
pub fn kendall_tau_b(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "paired samples");
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let dx = xs[i].partial_cmp(&xs[j]).expect("no NaN");
            let dy = ys[i].partial_cmp(&ys[j]).expect("no NaN");
            match (dx, dy) {
                (Ordering::Equal, Ordering::Equal) => {}
                (Ordering::Equal, _) => ties_x += 1,
                (_, Ordering::Equal) => ties_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n1 = (concordant + discordant + ties_x) as f64;
    let n2 = (concordant + discordant + ties_y) as f64;
    let denom = (n1 * n2).sqrt();
    (denom > 0.0).then(|| (concordant - discordant) as f64 / denom)
}
