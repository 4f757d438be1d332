//! Serial list Viterbi decoding of the tail-biting trellis.
//!
//! Candidates are produced one at a time in non-decreasing order of the MAP
//! path metric `sum_t (x_t - y_t)^2 + 2 sigma^2 ln(1 / P_t(x_t))` over all
//! tail-biting paths of all start states. The search is a tree-trellis
//! scheme: a backward Viterbi pass gives, for each start state `s`, the exact
//! cost-to-go into `s` at the end, and a best-first forward search over label
//! prefixes keyed by `prefix cost + cost-to-go` pops complete paths in metric
//! order. Backward passes are computed lazily: each start state first enters
//! the heap keyed by a lower bound (the cost-to-go with a free end state) and
//! is resolved only when that bound reaches the top.
//!
//! Branch metrics are rounded to multiples of `2^-24` and summed as integers,
//! so path costs are exact regardless of summation order and ties are well
//! defined: equal costs are ordered by start state, then by label path.

use crate::chain::{Chain, ChainError, PriorMode};
use crate::modulation::{Constellation, SignalPrior};
use crate::shaping::{AmplitudeDistribution, ShapingError};
use crate::tbcc::Trellis;
use crate::Bit;
use serde::{Deserialize, Serialize};
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("no candidate among the first {examined} passed the CRC")]
    ListExhausted { examined: usize },
    #[error("candidate {rank} passed the CRC but is not a matcher codeword")]
    NotInCodebook { rank: usize, metric: f64 },
    #[error("invalid decoder input: {0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    /// Maximum number of candidates examined, `H`.
    pub list_size: usize,
    pub sigma: f64,
    #[serde(default)]
    pub prior_mode: PriorMode,
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.list_size == 0 {
            return Err(DecodeError::Input("list size must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(DecodeError::Input(format!("sigma = {} must be positive", self.sigma)));
        }
        Ok(())
    }
}

/// `(x - y)^2 + 2 sigma^2 ln(1 / prior)`; infinite for a zero prior.
pub fn branch_metric(x: f64, y: f64, prior: f64, sigma: f64) -> f64 {
    if prior <= 0.0 {
        return f64::INFINITY;
    }
    (x - y) * (x - y) - 2.0 * sigma * sigma * prior.ln()
}

/// One tail-biting path from the list.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub labels: Vec<usize>,
    pub start_state: usize,
    pub metric: f64,
    /// Position in the list, starting at 1.
    pub rank: usize,
}

/// Fixed-point scale of path costs.
pub const METRIC_SCALE: f64 = (1u64 << 24) as f64;

/// Cost of a forbidden branch.
const INF: i64 = i64::MAX;

fn quantize(metric: f64) -> i64 {
    // Far above any reachable path cost, far below overflow when summed.
    const LIMIT: f64 = (1u64 << 56) as f64;
    if metric.is_finite() {
        (metric * METRIC_SCALE).round().min(LIMIT) as i64
    } else {
        INF
    }
}

fn add(a: i64, b: i64) -> i64 {
    if a == INF || b == INF {
        INF
    } else {
        a + b
    }
}

/// Branch metrics of every label at every position, in fixed point.
#[derive(Debug, Clone)]
pub struct BranchMetrics {
    labels: usize,
    values: Vec<i64>,
}

impl BranchMetrics {
    pub fn new(
        y: &[f64],
        constellation: &Constellation,
        priors: &[SignalPrior],
        sigma: f64,
    ) -> Result<Self, DecodeError> {
        if priors.len() != y.len() {
            return Err(DecodeError::Input(format!(
                "{} received symbols but {} priors",
                y.len(),
                priors.len()
            )));
        }
        let labels = constellation.size();
        let mut values = Vec::with_capacity(y.len() * labels);
        for (yt, prior) in y.iter().zip(priors) {
            for l in 0..labels {
                values.push(quantize(branch_metric(
                    constellation.signal(l),
                    *yt,
                    prior.prob(l),
                    sigma,
                )));
            }
        }
        Ok(Self { labels, values })
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.labels
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fixed-point metric of label `label` at position `t`.
    pub fn get(&self, t: usize, label: usize) -> i64 {
        self.values[t * self.labels + label]
    }

    /// Fixed-point cost of a full label path (`i64::MAX` if forbidden).
    pub fn path_cost(&self, labels: &[usize]) -> i64 {
        labels
            .iter()
            .enumerate()
            .fold(0, |acc, (t, &l)| add(acc, self.get(t, l)))
    }

    /// Path metric in natural units.
    pub fn path_metric(&self, labels: &[usize]) -> f64 {
        cost_to_metric(self.path_cost(labels))
    }
}

fn cost_to_metric(cost: i64) -> f64 {
    if cost == INF {
        f64::INFINITY
    } else {
        cost as f64 / METRIC_SCALE
    }
}

#[derive(Debug, Clone)]
struct Node {
    f: i64,
    start: usize,
    prefix: Vec<u8>,
    state: usize,
    g: i64,
    resolved: bool,
}

impl Node {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.f
            .cmp(&other.f)
            .then(self.start.cmp(&other.start))
            .then_with(|| self.prefix.cmp(&other.prefix))
            .then(self.resolved.cmp(&other.resolved))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

/// Iterator over tail-biting paths in metric order.
pub struct ListViterbi<'a> {
    trellis: &'a Trellis,
    bm: BranchMetrics,
    // Cost-to-go with the end state pinned to each start state, (T+1) x |V|.
    exact: Vec<Option<Vec<i64>>>,
    heap: BinaryHeap<Reverse<Node>>,
    emitted: usize,
    expanded: usize,
}

impl<'a> ListViterbi<'a> {
    pub fn new(trellis: &'a Trellis, bm: BranchMetrics) -> Self {
        let n = trellis.num_states();
        let t_len = bm.len();
        let free = backward_pass(trellis, &bm, None);
        let heap = (0..n)
            .filter_map(|s| {
                let f = free[s];
                (f != INF).then(|| {
                    Reverse(Node {
                        f,
                        start: s,
                        prefix: Vec::with_capacity(t_len),
                        state: s,
                        g: 0,
                        resolved: false,
                    })
                })
            })
            .collect();
        Self {
            trellis,
            bm,
            exact: vec![None; n],
            heap,
            emitted: 0,
            expanded: 0,
        }
    }

    /// Number of start states whose exact backward pass was needed so far.
    pub fn resolved_start_states(&self) -> usize {
        self.exact.iter().filter(|e| e.is_some()).count()
    }

    /// Heap nodes expanded so far.
    pub fn expanded(&self) -> usize {
        self.expanded
    }

    fn cost_to_go(&self, start: usize, t: usize, v: usize) -> i64 {
        self.exact[start].as_ref().expect("start state resolved")[t * self.trellis.num_states() + v]
    }
}

/// Backward Viterbi pass. With `end = Some(s)` paths must finish in `s`,
/// otherwise the end state is free. Returns `(T+1) x |V|` costs, time major.
fn backward_pass(trellis: &Trellis, bm: &BranchMetrics, end: Option<usize>) -> Vec<i64> {
    let n = trellis.num_states();
    let t_len = bm.len();
    let mut beta = vec![INF; (t_len + 1) * n];
    for v in 0..n {
        if end.is_none_or(|s| s == v) {
            beta[t_len * n + v] = 0;
        }
    }
    for t in (0..t_len).rev() {
        for v in 0..n {
            let mut best = INF;
            for e in trellis.outgoing(v) {
                let c = add(bm.get(t, e.label), beta[(t + 1) * n + e.to]);
                if c < best {
                    best = c;
                }
            }
            beta[t * n + v] = best;
        }
    }
    beta
}

impl Iterator for ListViterbi<'_> {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        let t_len = self.bm.len();
        while let Some(Reverse(node)) = self.heap.pop() {
            if !node.resolved {
                let s = node.start;
                let beta = backward_pass(self.trellis, &self.bm, Some(s));
                let f = beta[s];
                self.exact[s] = Some(beta);
                if f != INF {
                    self.heap.push(Reverse(Node {
                        f,
                        resolved: true,
                        ..node
                    }));
                }
                continue;
            }
            let depth = node.prefix.len();
            if depth == t_len {
                self.emitted += 1;
                return Some(Candidate {
                    labels: node.prefix.iter().map(|&l| l as usize).collect(),
                    start_state: node.start,
                    metric: cost_to_metric(node.g),
                    rank: self.emitted,
                });
            }
            self.expanded += 1;
            for e in self.trellis.outgoing(node.state) {
                let g = add(node.g, self.bm.get(depth, e.label));
                let f = add(g, self.cost_to_go(node.start, depth + 1, e.to));
                if f == INF {
                    continue;
                }
                let mut prefix = Vec::with_capacity(t_len);
                prefix.extend_from_slice(&node.prefix);
                prefix.push(e.label as u8);
                self.heap.push(Reverse(Node {
                    f,
                    start: node.start,
                    prefix,
                    state: e.to,
                    g,
                    resolved: true,
                }));
            }
        }
        None
    }
}

/// A successful decode.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub message: Vec<Bit>,
    pub candidate: Candidate,
}

/// CRC-aided serial list Viterbi decoder for one chain configuration.
#[derive(Debug, Clone)]
pub struct SlvdDecoder<'a> {
    chain: &'a Chain,
    priors: Vec<SignalPrior>,
    config: DecoderConfig,
}

impl<'a> SlvdDecoder<'a> {
    /// `amplitudes` is the amplitude distribution assumed by the metric.
    pub fn new(
        chain: &'a Chain,
        amplitudes: &AmplitudeDistribution,
        config: DecoderConfig,
    ) -> Result<Self, DecodeError> {
        config.validate()?;
        let priors = chain
            .position_priors(amplitudes, config.prior_mode)
            .map_err(|e| DecodeError::Input(e.to_string()))?;
        Ok(Self {
            chain,
            priors,
            config,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn priors(&self) -> &[SignalPrior] {
        &self.priors
    }

    pub fn branch_metrics(&self, y: &[f64]) -> Result<BranchMetrics, DecodeError> {
        if y.len() != self.chain.frames() {
            return Err(DecodeError::Input(format!(
                "expected {} received symbols, got {}",
                self.chain.frames(),
                y.len()
            )));
        }
        BranchMetrics::new(y, self.chain.constellation(), &self.priors, self.config.sigma)
    }

    /// All tail-biting paths in metric order (no CRC gating, no list limit).
    pub fn candidates(&self, y: &[f64]) -> Result<ListViterbi<'a>, DecodeError> {
        Ok(ListViterbi::new(self.chain.trellis(), self.branch_metrics(y)?))
    }

    /// Examines up to `H` candidates and inverts the first one whose
    /// systematic bits pass the CRC.
    pub fn decode(&self, y: &[f64]) -> Result<Decoded, DecodeError> {
        let mut examined = 0;
        for cand in self.candidates(y)?.take(self.config.list_size) {
            examined += 1;
            let word = self.chain.word_of_labels(&cand.labels);
            if !self.chain.crc().check(&word) {
                continue;
            }
            return match self.chain.invert_word(&word) {
                Ok(message) => Ok(Decoded {
                    message,
                    candidate: cand,
                }),
                Err(ChainError::Shaping(ShapingError::NotInCodebook)) => Err(DecodeError::NotInCodebook {
                    rank: cand.rank,
                    metric: cand.metric,
                }),
                Err(e) => Err(DecodeError::Input(e.to_string())),
            };
        }
        Err(DecodeError::ListExhausted { examined })
    }
}
