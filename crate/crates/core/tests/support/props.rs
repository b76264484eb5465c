//! Property bodies shared by the proptest suite and the acceptance runner.

use std::collections::BTreeMap;

use gridsel::gom::{Gom, GomConfig, GomEvent};
use gridsel::io::{
    parse_results_csv, parse_snapshot_csv, results_csv_string, snapshot_csv_string,
};
use gridsel::model::{
    CheckpointCounts, ExperimentResult, FeedbackVector, JobOutcome, JobSpec, NodeId,
    SecurityFactor, SecurityProfile, WeightTable,
};
use gridsel::scoring::{
    aggregate_feedback, compute_node_reliability, compute_node_utilization, compute_rf,
    compute_rw, compute_spc, compute_weighted_spc, rank_nodes,
};
use gridsel::model::Score;
use proptest::prelude::*;
use proptest::sample::Index;

use super::{feedback, node_id, profile, unit, ATTRS};

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

// ---------------------------------------------------------------- bounds

#[derive(Debug, Clone)]
pub struct BoundsCase {
    pub profile: SecurityProfile<f64>,
    pub weights: [f64; 7],
    pub feedback: FeedbackVector<f64>,
    pub usage: Vec<f64>,
    pub tpc: f64,
    pub submitted: u64,
    pub succeeded: u64,
}

pub fn bounds_case() -> impl Strategy<Value = BoundsCase> {
    (
        profile(),
        prop::array::uniform7(0.001..=1.0f64),
        feedback(),
        prop::collection::vec(0.0..=1.0f64, 0..8),
        0.5..1000.0f64,
        0u64..50,
        0u64..=50,
    )
        .prop_map(|(profile, weights, feedback, shares, tpc, submitted, succ)| {
            // Shares of tpc that never sum past it.
            let total: f64 = shares.iter().sum::<f64>().max(1.0);
            let usage = shares.iter().map(|s| s / total * tpc * (1.0 - 1e-9)).collect();
            BoundsCase {
                profile,
                weights,
                feedback,
                usage,
                tpc,
                submitted,
                succeeded: succ.min(submitted),
            }
        })
}

pub fn check_bounds(c: &BoundsCase) -> Result<(), TestCaseError> {
    let weights = WeightTable::from_pairs(SecurityFactor::ALL.into_iter().zip(c.weights).collect())
        .unwrap();
    let spc = compute_spc(&c.profile).value();
    let wspc = compute_weighted_spc(&c.profile, &weights).unwrap().value();
    let rw = compute_rw(&c.feedback).value();
    let rf = compute_rf(Score::new("spc", spc).unwrap(), Score::new("rw", rw).unwrap()).value();
    let nu = compute_node_utilization(&c.usage, c.tpc).unwrap().value();
    let nr = compute_node_reliability(c.succeeded, c.submitted).unwrap();
    for x in [spc, wspc, rw, rf, nu] {
        prop_assert!(in_unit(x), "{x} outside [0, 1]");
    }
    if let Some(s) = nr.score() {
        prop_assert!(in_unit(s.value()));
    }
    // Out-of-range construction fails.
    prop_assert!(Score::new("x", 1.0 + c.tpc).is_err());
    prop_assert!(Score::new("x", -c.tpc).is_err());
    Ok(())
}

// ---------------------------------------------------------------- sandwich

pub fn sandwich_case() -> impl Strategy<Value = (SecurityProfile<f64>, Vec<(String, f64)>)> {
    (profile(), super::feedback_of_len())
}

pub fn check_sandwich(
    (p, fb): &(SecurityProfile<f64>, Vec<(String, f64)>),
) -> Result<(), TestCaseError> {
    let vals = p.values();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spc = compute_spc(p).value();
    prop_assert!(lo <= spc && spc <= hi, "{lo} <= {spc} <= {hi}");

    let fv = FeedbackVector::new(fb.iter().cloned()).unwrap();
    let lo = fb.iter().map(|(_, x)| *x).fold(f64::INFINITY, f64::min);
    let hi = fb.iter().map(|(_, x)| *x).fold(f64::NEG_INFINITY, f64::max);
    let rw = compute_rw(&fv).value();
    prop_assert!(lo <= rw && rw <= hi, "{lo} <= {rw} <= {hi}");
    Ok(())
}

// ---------------------------------------------------------------- permutation

#[derive(Debug, Clone)]
pub struct PermCase {
    pub factors: [f64; 7],
    pub factor_order: Vec<usize>,
    pub vectors: Vec<[f64; 5]>,
    pub attr_order: Vec<usize>,
    pub vector_order: Vec<usize>,
}

pub fn perm_case() -> impl Strategy<Value = PermCase> {
    (
        prop::array::uniform7(unit()),
        Just((0..7).collect::<Vec<usize>>()).prop_shuffle(),
        prop::collection::vec(prop::array::uniform5(unit()), 1..6),
        Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
    )
        .prop_flat_map(|(factors, factor_order, vectors, attr_order)| {
            let n = vectors.len();
            (
                Just(factors),
                Just(factor_order),
                Just(vectors),
                Just(attr_order),
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
        .prop_map(|(factors, factor_order, vectors, attr_order, vector_order)| PermCase {
            factors,
            factor_order,
            vectors,
            attr_order,
            vector_order,
        })
}

fn labelled(v: &[f64; 5], order: &[usize]) -> FeedbackVector<f64> {
    FeedbackVector::new(order.iter().map(|&i| (ATTRS[i], v[i]))).unwrap()
}

pub fn check_permutation(c: &PermCase) -> Result<(), TestCaseError> {
    let identity: Vec<usize> = (0..5).collect();
    let base = SecurityProfile::new(c.factors).unwrap();
    let shuffled = SecurityProfile::from_pairs(
        c.factor_order
            .iter()
            .map(|&i| (SecurityFactor::ALL[i], c.factors[i])),
    )
    .unwrap();
    prop_assert_eq!(compute_spc(&base), compute_spc(&shuffled));

    let plain = labelled(&c.vectors[0], &identity);
    let reordered = labelled(&c.vectors[0], &c.attr_order);
    prop_assert_eq!(compute_rw(&plain), compute_rw(&reordered));

    let forward: Vec<_> = c.vectors.iter().map(|v| labelled(v, &identity)).collect();
    let mixed: Vec<_> = c
        .vector_order
        .iter()
        .map(|&i| labelled(&c.vectors[i], &c.attr_order))
        .collect();
    let a = aggregate_feedback(&forward).unwrap();
    let b = aggregate_feedback(&mixed).unwrap();
    for name in ATTRS {
        prop_assert_eq!(a.get(name), b.get(name));
    }
    prop_assert_eq!(compute_rw(&a), compute_rw(&b));
    Ok(())
}

// ---------------------------------------------------------------- uniform weights

pub fn uniform_case() -> impl Strategy<Value = (SecurityProfile<f64>, f64)> {
    (profile(), prop_oneof![Just(1.0), 1e-6..=1.0f64])
}

pub fn check_uniform((p, w): &(SecurityProfile<f64>, f64)) -> Result<(), TestCaseError> {
    let table = WeightTable::uniform(*w).unwrap();
    let weighted = compute_weighted_spc(p, &table).unwrap().value();
    let plain = compute_spc(p).value();
    prop_assert!((weighted - plain).abs() <= 1e-12, "{weighted} vs {plain}");
    Ok(())
}

// ---------------------------------------------------------------- argmax monotonicity

#[derive(Debug, Clone)]
pub struct MonoCase {
    pub nodes: Vec<(SecurityProfile<f64>, FeedbackVector<f64>)>,
    pub target: Index,
    pub factor: SecurityFactor,
    pub bump: f64,
}

pub fn mono_case() -> impl Strategy<Value = MonoCase> {
    (
        prop::collection::vec((profile(), feedback()), 1..8),
        any::<Index>(),
        super::factor(),
        1e-6..=1.0f64,
    )
        .prop_map(|(nodes, target, factor, bump)| MonoCase {
            nodes,
            target,
            factor,
            bump,
        })
}

fn rank_of(gom: &Gom<f64>, id: &NodeId) -> usize {
    gom.snapshot()
        .iter()
        .find(|r| &r.node_id == id)
        .expect("registered")
        .rank
}

pub fn check_monotone(c: &MonoCase) -> Result<(), TestCaseError> {
    let mut gom = Gom::<f64>::default();
    for (i, (p, fb)) in c.nodes.iter().enumerate() {
        gom.register_node(node_id(i), *p, 100.0).unwrap();
        gom.seed_feedback(&node_id(i), fb.clone()).unwrap();
    }
    let i = c.target.index(c.nodes.len());
    let id = node_id(i);
    let before = rank_of(&gom, &id);
    let old = c.nodes[i].0.get(c.factor).value();
    let raised = (old + c.bump).min(1.0);
    gom.report_spc(&id, c.nodes[i].0.with(c.factor, raised).unwrap())
        .unwrap();
    let after = rank_of(&gom, &id);
    prop_assert!(after <= before, "rank {before} -> {after} after raising {:?}", c.factor);

    // Same check at the scoring layer.
    let scores = |k: usize, p: &SecurityProfile<f64>| {
        let rw = compute_rw(&c.nodes[k].1);
        (node_id(k), compute_rf(compute_spc(p), rw))
    };
    let base: Vec<_> = (0..c.nodes.len()).map(|k| scores(k, &c.nodes[k].0)).collect();
    let mut bumped = base.clone();
    bumped[i] = scores(i, &c.nodes[i].0.with(c.factor, raised).unwrap());
    let pos = |v: &[(NodeId, Score<f64>)]| {
        rank_nodes(v)
            .unwrap()
            .into_iter()
            .find(|r| r.node_id == id)
            .unwrap()
            .rank
    };
    prop_assert!(pos(&bumped) <= pos(&base));
    Ok(())
}

// ---------------------------------------------------------------- event replay

#[derive(Debug, Clone)]
pub enum Op {
    Register(usize, SecurityProfile<f64>, f64),
    Seed(usize, FeedbackVector<f64>),
    Feedback(usize, FeedbackVector<f64>),
    ReportSpc(usize, SecurityProfile<f64>),
    Submit(f64),
    Outcome(Index, bool, f64),
    Flush,
}

const POOL: usize = 5;

pub fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        2 => (0..POOL, profile(), 1.0..200.0f64).prop_map(|(i, p, t)| Op::Register(i, p, t)),
        2 => (0..POOL, feedback()).prop_map(|(i, f)| Op::Seed(i, f)),
        2 => (0..POOL, feedback()).prop_map(|(i, f)| Op::Feedback(i, f)),
        1 => (0..POOL, profile()).prop_map(|(i, p)| Op::ReportSpc(i, p)),
        4 => (1.0..10.0f64).prop_map(Op::Submit),
        4 => (any::<Index>(), any::<bool>(), 0.0..=1.0f64)
            .prop_map(|(j, ok, u)| Op::Outcome(j, ok, u)),
        1 => Just(Op::Flush),
    ]
}

pub fn config() -> impl Strategy<Value = GomConfig<f64>> {
    (1usize..4, any::<bool>()).prop_map(|(k, admit)| GomConfig {
        refresh_every: k,
        admit_provisional: admit,
        spc_weights: None,
    })
}

pub fn replay_case() -> impl Strategy<Value = (GomConfig<f64>, Vec<Op>)> {
    (config(), prop::collection::vec(op(), 0..40))
}

/// Applies each op through the public API; rejected ops leave no trace.
pub fn drive(config: &GomConfig<f64>, ops: &[Op]) -> Gom<f64> {
    let mut gom = Gom::new(config.clone()).unwrap();
    let mut jobs = 0usize;
    for op in ops {
        let _ = match op {
            Op::Register(i, p, t) => gom.register_node(node_id(*i), *p, *t).map(drop),
            Op::Seed(i, f) => gom.seed_feedback(&node_id(*i), f.clone()),
            Op::Feedback(i, f) => gom.record_feedback(&node_id(*i), f.clone()),
            Op::ReportSpc(i, p) => gom.report_spc(&node_id(*i), *p).map(drop),
            Op::Submit(power) => {
                jobs += 1;
                gom.submit_job(JobSpec::new(format!("j{jobs}"), *power).unwrap())
                    .map(drop)
            }
            Op::Outcome(j, ok, u) => {
                let log = gom.dispatch_log();
                if log.is_empty() {
                    continue;
                }
                let d = log[j.index(log.len())].clone();
                let tpc = gom.node(&d.node_id).unwrap().total_power_compute();
                gom.record_outcome(JobOutcome {
                    job_id: d.job_id,
                    node_id: d.node_id,
                    success: *ok,
                    utilized_power: u * tpc,
                })
            }
            Op::Flush => {
                gom.flush();
                Ok(())
            }
        };
    }
    gom
}

pub fn check_replay((config, ops): &(GomConfig<f64>, Vec<Op>)) -> Result<(), TestCaseError> {
    let live = drive(config, ops);
    let replayed = Gom::replay(config.clone(), live.events()).unwrap();
    let again = Gom::replay(config.clone(), replayed.events()).unwrap();
    let bytes = snapshot_csv_string(&live.snapshot());
    prop_assert_eq!(&bytes, &snapshot_csv_string(&replayed.snapshot()));
    prop_assert_eq!(&bytes, &snapshot_csv_string(&again.snapshot()));
    prop_assert_eq!(live.snapshot(), replayed.snapshot());
    prop_assert_eq!(live.dispatch_log(), replayed.dispatch_log());
    prop_assert_eq!(live.events(), replayed.events());
    Ok(())
}

/// Every Submit went to a node no established node beat, judged on the state just before it.
pub fn check_dispatch_argmax(
    (config, ops): &(GomConfig<f64>, Vec<Op>),
) -> Result<(), TestCaseError> {
    let live = drive(config, ops);
    let events = live.events();
    for (i, e) in events.iter().enumerate() {
        let GomEvent::Submit { job } = e else { continue };
        let before = Gom::replay(config.clone(), &events[..i]).unwrap();
        let after = Gom::replay(config.clone(), &events[..=i]).unwrap();
        let chosen = &after
            .dispatch_log()
            .iter()
            .find(|d| d.job_id == job.job_id)
            .unwrap()
            .node_id;
        let chosen_rf = before.effective_rf(chosen).unwrap();
        for r in before.nodes().filter(|r| !r.is_provisional()) {
            prop_assert!(
                r.rf().unwrap() <= chosen_rf,
                "{} ({}) beat dispatched {} ({})",
                r.id(),
                r.rf().unwrap(),
                chosen,
                chosen_rf
            );
        }
    }
    let submitted: u64 = live.nodes().map(|r| r.jobs_submitted()).sum();
    prop_assert_eq!(submitted as usize, live.dispatch_log().len());
    Ok(())
}

// ---------------------------------------------------------------- CSV round-trip

pub fn results_case() -> impl Strategy<Value = ExperimentResult<f64>> {
    (
        prop::collection::btree_set("[A-Za-z][A-Za-z0-9_-]{0,6}", 0..6),
        prop::collection::btree_set(0u64..100_000, 0..6),
        any::<u64>(),
    )
        .prop_flat_map(|(ids, marks, seed)| {
            let marks: Vec<u64> = marks.into_iter().collect();
            let per = prop::collection::vec((0u64..10_000, 0u64..10_000), marks.len());
            let per_node = prop::collection::vec(per, ids.len());
            (Just(ids), Just(marks), Just(seed), per_node)
        })
        .prop_map(|(ids, marks, seed, per_node)| ExperimentResult {
            checkpoints: marks,
            per_node: ids
                .into_iter()
                .map(NodeId::new)
                .zip(per_node.into_iter().map(|v| {
                    v.into_iter()
                        .map(|(a, b)| CheckpointCounts {
                            cum_failures: a.min(b),
                            jobs_assigned: b,
                        })
                        .collect()
                }))
                .collect::<BTreeMap<_, _>>(),
            seed,
            alpha: 1.0,
            generator: "ChaCha8Rng".into(),
        })
}

pub fn snapshot_case() -> impl Strategy<Value = (GomConfig<f64>, Vec<Op>)> {
    replay_case()
}

pub fn check_csv_round_trip(
    result: &ExperimentResult<f64>,
    (config, ops): &(GomConfig<f64>, Vec<Op>),
) -> Result<(), TestCaseError> {
    let text = results_csv_string(result);
    let rows = parse_results_csv(&text, "mem").unwrap();
    prop_assert_eq!(&rows, &result.rows());
    prop_assert!(!text.contains('\r'));

    let snap = drive(config, ops).snapshot();
    let text = snapshot_csv_string(&snap);
    let back = parse_snapshot_csv(&text, "mem").unwrap();
    prop_assert_eq!(back.len(), snap.len());
    for (r, s) in back.iter().zip(&snap) {
        prop_assert_eq!(r.rank, s.rank);
        prop_assert_eq!(&r.node_id, &s.node_id);
        prop_assert_eq!(r.provisional, s.provisional);
        prop_assert!((r.spc - s.spc.value()).abs() <= 5e-5 + 1e-12);
        prop_assert!((r.rf - s.rf.value()).abs() <= 5e-5 + 1e-12);
        prop_assert_eq!(r.rw.is_some(), s.rw.is_some());
        if let (Some(a), Some(b)) = (r.rw, s.rw) {
            prop_assert!((a - b.value()).abs() <= 5e-5 + 1e-12);
        }
    }
    // Stored precision is a fixed point of write-then-read.
    let rewritten = {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(gridsel::io::SNAPSHOT_HEADER).unwrap();
        for r in &back {
            w.serialize(r).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    };
    prop_assert_eq!(parse_snapshot_csv(&rewritten, "mem").unwrap(), back);
    Ok(())
}
