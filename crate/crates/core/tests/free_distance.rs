//! Squared free Euclidean distance of each shipped code under the 8-AM
//! labeling, compared with the tabulated values.

use pas_tcm::modulation::Constellation;
use pas_tcm::tbcc::{build_trellis, shipped_codes, Trellis};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Dijkstra over pairs of encoder states, starting from every diverging
/// pair of branches and stopping at the first remerge.
fn free_distance(t: &Trellis, c: &Constellation) -> f64 {
    let n = t.num_states();
    let d2 = |a: usize, b: usize| {
        let d = c.signal(a) - c.signal(b);
        (d * d) as u64
    };
    let mut best = u64::MAX;
    // Parallel transitions.
    for v in 0..n {
        for e1 in t.outgoing(v) {
            for e2 in t.outgoing(v) {
                if e1.input < e2.input && e1.to == e2.to {
                    best = best.min(d2(e1.label, e2.label));
                }
            }
        }
    }
    let mut dist = vec![u64::MAX; n * n];
    let mut heap = BinaryHeap::new();
    for v in 0..n {
        for e1 in t.outgoing(v) {
            for e2 in t.outgoing(v) {
                if e1.to != e2.to {
                    let key = e1.to * n + e2.to;
                    let d = d2(e1.label, e2.label);
                    if d < dist[key] {
                        dist[key] = d;
                        heap.push(Reverse((d, key)));
                    }
                }
            }
        }
    }
    while let Some(Reverse((d, key))) = heap.pop() {
        if d > dist[key] || d >= best {
            continue;
        }
        let (v1, v2) = (key / n, key % n);
        for e1 in t.outgoing(v1) {
            for e2 in t.outgoing(v2) {
                let nd = d + d2(e1.label, e2.label);
                if e1.to == e2.to {
                    best = best.min(nd);
                    continue;
                }
                let nk = e1.to * n + e2.to;
                if nd < dist[nk] {
                    dist[nk] = nd;
                    heap.push(Reverse((nd, nk)));
                }
            }
        }
    }
    best as f64 / 4.0
}

#[test]
fn shipped_codes_reach_tabulated_free_distance() {
    let c = Constellation::eight_am();
    for code in shipped_codes() {
        let (t, _) = build_trellis(&code.spec);
        let d = free_distance(&t, &c);
        assert_eq!(d, code.d2free, "nu = {}", code.spec.nu());
    }
}
