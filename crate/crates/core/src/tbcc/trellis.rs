use super::{ConvCodeSpec, TbccError};
use crate::gf2::BitMatrix;
use std::collections::VecDeque;
use std::fmt::Write;

/// One trellis branch `(from, label, to)` together with the input frame that
/// drives it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: usize,
    pub input: usize,
    pub label: usize,
    pub to: usize,
}

/// Time-invariant trellis section of a systematic feedback code.
#[derive(Debug, Clone)]
pub struct Trellis {
    spec: ConvCodeSpec,
    // Indexed by (state << k0) | input.
    next: Vec<usize>,
    labels: Vec<usize>,
    incoming: Vec<Vec<Edge>>,
}

/// `v' = A v + B u` over GF(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    a: BitMatrix,
    b: BitMatrix,
}

impl Trellis {
    pub fn new(spec: &ConvCodeSpec) -> Self {
        let states = 1usize << spec.nu();
        let inputs = 1usize << spec.k0();
        let mut next = Vec::with_capacity(states * inputs);
        let mut labels = Vec::with_capacity(states * inputs);
        let mut incoming = vec![Vec::new(); states];
        for v in 0..states {
            for u in 0..inputs {
                let (l, to) = spec.step(v, u);
                next.push(to);
                labels.push(l);
                incoming[to].push(Edge {
                    from: v,
                    input: u,
                    label: l,
                    to,
                });
            }
        }
        Self {
            spec: spec.clone(),
            next,
            labels,
            incoming,
        }
    }

    pub fn spec(&self) -> &ConvCodeSpec {
        &self.spec
    }

    pub fn nu(&self) -> usize {
        self.spec.nu()
    }

    pub fn k0(&self) -> usize {
        self.spec.k0()
    }

    pub fn num_states(&self) -> usize {
        1 << self.spec.nu()
    }

    pub fn num_inputs(&self) -> usize {
        1 << self.spec.k0()
    }

    pub fn num_labels(&self) -> usize {
        1 << self.spec.n0()
    }

    pub fn next_state(&self, v: usize, u: usize) -> usize {
        self.next[(v << self.spec.k0()) | u]
    }

    pub fn label(&self, v: usize, u: usize) -> usize {
        self.labels[(v << self.spec.k0()) | u]
    }

    pub fn edge(&self, v: usize, u: usize) -> Edge {
        Edge {
            from: v,
            input: u,
            label: self.label(v, u),
            to: self.next_state(v, u),
        }
    }

    /// All `2^(nu + k0)` edges, ordered by source state then input.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.num_states()).flat_map(move |v| (0..self.num_inputs()).map(move |u| self.edge(v, u)))
    }

    pub fn outgoing(&self, v: usize) -> impl Iterator<Item = Edge> + '_ {
        (0..self.num_inputs()).map(move |u| self.edge(v, u))
    }

    pub fn incoming(&self, v: usize) -> &[Edge] {
        &self.incoming[v]
    }

    /// The edge leaving `v` with label `l`, if the parity bit of `l` agrees
    /// with `v`.
    pub fn edge_with_label(&self, v: usize, l: usize) -> Option<Edge> {
        (l & 1 == v & 1).then(|| self.edge(v, l >> 1))
    }

    /// Encodes `frames` from `start`, returning the labels and the end state.
    pub fn encode_from(&self, start: usize, frames: &[usize]) -> Result<(Vec<usize>, usize), TbccError> {
        let mut v = start;
        let mut out = Vec::with_capacity(frames.len());
        for &u in frames {
            if u >= self.num_inputs() {
                return Err(TbccError::InvalidFrame(u));
            }
            out.push(self.label(v, u));
            v = self.next_state(v, u);
        }
        Ok((out, v))
    }

    /// Final state after encoding from state 0.
    pub fn zero_state_pass(&self, frames: &[usize]) -> Result<usize, TbccError> {
        self.encode_from(0, frames).map(|(_, v)| v)
    }

    /// Whether the labels form a path from `start` back to `start`.
    pub fn is_tail_biting_path(&self, start: usize, labels: &[usize]) -> bool {
        let mut v = start;
        for &l in labels {
            match self.edge_with_label(v, l) {
                Some(e) => v = e.to,
                None => return false,
            }
        }
        v == start
    }

    /// Fewest frames needed to go from `from` to every state (BFS).
    pub fn distances_from(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_states()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for e in self.outgoing(v) {
                if dist[e.to].is_none() {
                    dist[e.to] = Some(d + 1);
                    queue.push_back(e.to);
                }
            }
        }
        dist
    }

    /// Edge list as CSV: `from,input,label,to`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("from,input,label,to\n");
        for e in self.edges() {
            writeln!(out, "{},{},{},{}", e.from, e.input, e.label, e.to).unwrap();
        }
        out
    }
}

impl StateSpace {
    /// Reads `A` and `B` off the observer-form realization.
    pub fn new(spec: &ConvCodeSpec) -> Self {
        let nu = spec.nu();
        let k0 = spec.k0();
        let h = spec.parity_polys();
        let mut a = BitMatrix::zeros(nu, nu);
        let mut b = BitMatrix::zeros(nu, k0);
        for i in 1..=nu {
            if i < nu {
                a.set(i - 1, i, true);
            }
            if (h[0] >> i) & 1 == 1 {
                let cur = a.get(i - 1, 0);
                a.set(i - 1, 0, !cur);
            }
            for j in 1..=k0 {
                b.set(i - 1, j - 1, (h[j] >> i) & 1 == 1);
            }
        }
        Self { a, b }
    }

    pub fn a(&self) -> &BitMatrix {
        &self.a
    }

    pub fn b(&self) -> &BitMatrix {
        &self.b
    }

    pub fn nu(&self) -> usize {
        self.a.nrows()
    }

    pub fn step(&self, v: usize, u: usize) -> usize {
        (self.a.mul_vec(v as u64) ^ self.b.mul_vec(u as u64)) as usize
    }

    /// `A^T + I`, which must be invertible for tail-biting over `T` frames.
    pub fn tail_biting_matrix(&self, frames: usize) -> BitMatrix {
        self.a.pow(frames).add(&BitMatrix::identity(self.nu()))
    }

    pub fn supports_frames(&self, frames: usize) -> bool {
        self.tail_biting_matrix(frames).inverse().is_some()
    }
}

/// Builds the trellis and its state-space form, cross-checking them on every
/// `(state, input)` pair.
pub fn build_trellis(spec: &ConvCodeSpec) -> (Trellis, StateSpace) {
    let trellis = Trellis::new(spec);
    let ss = StateSpace::new(spec);
    for e in trellis.edges() {
        assert_eq!(ss.step(e.from, e.input), e.to, "state space disagrees with trellis");
    }
    (trellis, ss)
}

/// Two-pass tail-biting encoder for a fixed number of frames.
#[derive(Debug, Clone)]
pub struct TailBitingEncoder {
    frames: usize,
    inverse: BitMatrix,
}

impl TailBitingEncoder {
    pub fn new(ss: &StateSpace, frames: usize) -> Result<Self, TbccError> {
        match ss.tail_biting_matrix(frames).inverse() {
            Some(inverse) => Ok(Self { frames, inverse }),
            None => {
                let nearby = (1..=16)
                    .flat_map(|d| [frames.checked_sub(d), Some(frames + d)])
                    .flatten()
                    .filter(|&t| t > 0 && ss.supports_frames(t))
                    .take(6)
                    .collect();
                Err(TbccError::SingularMatrix { frames, nearby })
            }
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Start state `(A^T + I)^-1 v_zs`.
    pub fn start_state(&self, zero_state_end: usize) -> usize {
        self.inverse.mul_vec(zero_state_end as u64) as usize
    }

    /// Runs the zero-state pass, solves for the start state and encodes again
    /// from it. Returns the labels and the start (= end) state.
    pub fn encode(&self, trellis: &Trellis, frames: &[usize]) -> Result<(Vec<usize>, usize), TbccError> {
        if frames.len() != self.frames {
            return Err(TbccError::FrameCount {
                expected: self.frames,
                got: frames.len(),
            });
        }
        let v0 = self.start_state(trellis.zero_state_pass(frames)?);
        let (labels, end) = trellis.encode_from(v0, frames)?;
        debug_assert_eq!(end, v0);
        Ok((labels, v0))
    }
}
