#![allow(dead_code)]

pub mod props;

use gridsel::model::{FeedbackVector, NodeId, SecurityFactor, SecurityProfile};
use proptest::prelude::*;

/// Published self-protection rows in units of 1e-4.
pub const FACTORS_E4: [(&str, [i64; 7]); 7] = [
    ("N1", [2500, 5400, 6600, 6000, 6000, 7000, 6000]),
    ("N2", [2000, 5000, 7000, 5900, 5900, 8000, 8700]),
    ("N3", [6000, 3700, 8900, 5100, 6700, 7300, 7900]),
    ("N4", [1500, 2100, 4500, 5700, 3900, 2300, 3800]),
    ("N5", [1450, 7725, 7775, 6750, 7075, 6750, 7000]),
    ("N6", [6000, 3700, 8900, 5100, 6700, 7300, 7900]),
    ("N7", [5100, 4200, 5000, 5600, 7000, 4000, 6100]),
];

/// Published feedback rows in units of 1e-4 (NC, NI, NT, NP, NP2, NU, NR, NA).
pub const FEEDBACK_E4: [(&str, [i64; 8]); 7] = [
    ("N1", [2500, 2900, 3000, 3500, 4000, 3100, 1200, 3500]),
    ("N2", [6800, 6900, 10000, 4000, 1000, 3500, 2100, 7000]),
    ("N3", [6000, 7000, 8000, 2500, 0, 2100, 6000, 5800]),
    ("N4", [7100, 7700, 8500, 5200, 2300, 5800, 1500, 6700]),
    ("N5", [4600, 4630, 4700, 4300, 3000, 4400, 1900, 4400]),
    ("N6", [5400, 7250, 7500, 4650, 4000, 5000, 5000, 6000]),
    ("N7", [7500, 8000, 9000, 2800, 1500, 3200, 5100, 5500]),
];

/// Integer re-summation of a published row, divided once at the end.
pub fn brute_mean_e4(row: &[i64]) -> f64 {
    row.iter().sum::<i64>() as f64 / (row.len() as f64 * 1e4)
}

pub fn spc_oracle(node: &str) -> f64 {
    let row = FACTORS_E4.iter().find(|(n, _)| *n == node).unwrap().1;
    brute_mean_e4(&row)
}

pub fn rw_oracle(node: &str) -> f64 {
    let row = FEEDBACK_E4.iter().find(|(n, _)| *n == node).unwrap().1;
    brute_mean_e4(&row)
}

pub fn rf_oracle(node: &str) -> f64 {
    (spc_oracle(node) + rw_oracle(node)) / 2.0
}

/// Expected ranking computed independently: sort by oracle RF, ties by id.
pub fn ranking_oracle(nodes: &[&str]) -> Vec<String> {
    let mut v: Vec<(&str, f64)> = nodes.iter().map(|n| (*n, rf_oracle(n))).collect();
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
    v.into_iter().map(|(n, _)| n.to_string()).collect()
}

pub fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![
        1 => Just(0.0),
        1 => Just(1.0),
        8 => 0.0..=1.0f64,
    ]
}

pub fn profile() -> impl Strategy<Value = SecurityProfile<f64>> {
    prop::array::uniform7(unit()).prop_map(|v| SecurityProfile::new(v).unwrap())
}

pub const ATTRS: [&str; 5] = ["NC", "NI", "NT", "NP", "NA"];

pub fn feedback() -> impl Strategy<Value = FeedbackVector<f64>> {
    prop::array::uniform5(unit())
        .prop_map(|v| FeedbackVector::new(ATTRS.iter().copied().zip(v)).unwrap())
}

pub fn feedback_of_len() -> impl Strategy<Value = Vec<(String, f64)>> {
    prop::collection::vec(unit(), 1..12).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, x)| (format!("A{i}"), x))
            .collect()
    })
}

pub fn node_id(i: usize) -> NodeId {
    NodeId::new(format!("n{i:02}"))
}

pub fn factor() -> impl Strategy<Value = SecurityFactor> {
    (0usize..7).prop_map(|i| SecurityFactor::ALL[i])
}
