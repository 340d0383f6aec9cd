//! Seeded generators and independent oracles shared by the integration
//! tests. Oracles work on the plain `RawGraph` description with machine
//! integers and never call into the library.

#![allow(dead_code, clippy::type_complexity)]

pub mod corpus;

use neron_core::{Label, LabelledGraph, Monomial, PrimeBasis, TraitValuation, VertexLabelling};
use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const PRIMES: [&str; 3] = ["p", "q", "r"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEdge {
    pub id: String,
    pub a: usize,
    pub b: usize,
    /// `None` is the zero label.
    pub exps: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawGraph {
    pub k: usize,
    pub ids: Vec<String>,
    pub edges: Vec<RawEdge>,
}

impl RawGraph {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn basis(&self) -> PrimeBasis {
        PrimeBasis::new(PRIMES[..self.k].iter().copied()).unwrap()
    }

    pub fn build(&self) -> LabelledGraph {
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let label = match &e.exps {
                    Some(x) => Label::mono(x),
                    None => Label::Zero,
                };
                (e.id.clone(), self.ids[e.a].clone(), self.ids[e.b].clone(), label)
            })
            .collect();
        LabelledGraph::new(self.basis(), self.ids.clone(), edges).expect("generated graphs are valid")
    }

    pub fn has_zero(&self) -> bool {
        self.edges.iter().any(|e| e.exps.is_none())
    }
}

pub fn random_exps(rng: &mut TestRng, k: usize, max_exp: u64) -> Vec<u64> {
    loop {
        let x: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=max_exp)).collect();
        if x.iter().any(|&c| c > 0) {
            return x;
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn primitive(x: &[u64]) -> Vec<u64> {
    let g = x.iter().fold(0, |acc, &c| gcd(acc, c));
    x.iter().map(|&c| c / g).collect()
}

/// Ids `v1..vn` in shuffled file order, so file order and id order differ.
fn vertex_ids(rng: &mut TestRng, n: usize) -> Vec<String> {
    let mut ids: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    ids.shuffle(rng);
    ids
}

fn finish(rng: &mut TestRng, k: usize, ids: Vec<String>, mut edges: Vec<(usize, usize, Option<Vec<u64>>)>) -> RawGraph {
    edges.shuffle(rng);
    let mut names: Vec<usize> = (1..=edges.len()).collect();
    names.shuffle(rng);
    let edges =
        edges.into_iter().zip(names).map(|((a, b, exps), i)| RawEdge { id: format!("e{i}"), a, b, exps }).collect();
    RawGraph { k, ids, edges }
}

#[derive(Debug, Clone, Copy)]
pub struct GraphShape {
    pub max_vertices: usize,
    pub max_edges: usize,
    pub max_primes: usize,
    pub max_exp: u64,
    pub zero_prob: f64,
    pub loop_prob: f64,
}

impl GraphShape {
    pub const DESK: GraphShape =
        GraphShape { max_vertices: 7, max_edges: 10, max_primes: 3, max_exp: 3, zero_prob: 0.08, loop_prob: 0.1 };
}

/// Connected multigraph: a random spanning tree plus extra edges, parallel
/// edges and loops included.
pub fn random_graph(rng: &mut TestRng, shape: GraphShape) -> RawGraph {
    let k = rng.gen_range(1..=shape.max_primes);
    let n = rng.gen_range(1..=shape.max_vertices);
    let min_edges = n - 1;
    let m = rng.gen_range(min_edges..=shape.max_edges.max(min_edges));
    let label = |rng: &mut TestRng| {
        if rng.gen_bool(shape.zero_prob) {
            None
        } else {
            Some(random_exps(rng, k, shape.max_exp))
        }
    };
    let mut edges = Vec::with_capacity(m);
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v, label(rng)));
    }
    while edges.len() < m {
        let a = rng.gen_range(0..n);
        let b = if rng.gen_bool(shape.loop_prob) { a } else { rng.gen_range(0..n) };
        edges.push((a, b, label(rng)));
    }
    let order: Vec<usize> = {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        p
    };
    let edges = edges.into_iter().map(|(a, b, l)| (order[a], order[b], l)).collect();
    let ids = vertex_ids(rng, n);
    finish(rng, k, ids, edges)
}

/// Aligned by construction: blocks are glued one at a time along a
/// block-cut tree, and every cyclic block takes powers of one primitive
/// class (or is all zero).
pub fn aligned_graph(rng: &mut TestRng, shape: GraphShape) -> RawGraph {
    let k = rng.gen_range(1..=shape.max_primes);
    let mut n = 1;
    let mut edges: Vec<(usize, usize, Option<Vec<u64>>)> = Vec::new();
    while n < shape.max_vertices && edges.len() < shape.max_edges {
        let budget = shape.max_edges - edges.len();
        let at = rng.gen_range(0..n);
        match rng.gen_range(0..4) {
            0 => {
                let l = if rng.gen_bool(shape.zero_prob) { None } else { Some(random_exps(rng, k, shape.max_exp)) };
                edges.push((at, n, l));
                n += 1;
            }
            1 => {
                let l = if rng.gen_bool(shape.zero_prob) { None } else { Some(random_exps(rng, k, shape.max_exp)) };
                edges.push((at, at, l));
            }
            _ => {
                let new = rng.gen_range(1..=3).min(shape.max_vertices - n);
                if budget < new + 1 {
                    break;
                }
                let mut verts = vec![at];
                verts.extend(n..n + new);
                n += new;
                // the cycle, then chords and parallels inside the block
                let mut block: Vec<(usize, usize)> =
                    (0..verts.len()).map(|i| (verts[i], verts[(i + 1) % verts.len()])).collect();
                let extra = rng.gen_range(0..=(budget - block.len()).min(2));
                for _ in 0..extra {
                    let a = verts[rng.gen_range(0..verts.len())];
                    let b = verts[rng.gen_range(0..verts.len())];
                    if a != b {
                        block.push((a, b));
                    }
                }
                let zero = rng.gen_bool(shape.zero_prob);
                let alpha = primitive(&random_exps(rng, k, shape.max_exp));
                let max_power = (shape.max_exp / alpha.iter().copied().max().unwrap()).max(1);
                for (a, b) in block {
                    let l = if zero {
                        None
                    } else {
                        let s = rng.gen_range(1..=max_power);
                        Some(alpha.iter().map(|c| c * s).collect())
                    };
                    edges.push((a, b, l));
                }
            }
        }
        if rng.gen_bool(0.15) {
            break;
        }
    }
    let order: Vec<usize> = {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        p
    };
    let edges = edges.into_iter().map(|(a, b, l)| (order[a], order[b], l)).collect();
    let ids = vertex_ids(rng, n);
    finish(rng, k, ids, edges)
}

pub fn random_trait(rng: &mut TestRng, k: usize, max_ord: u64) -> Vec<u64> {
    (0..k).map(|_| rng.gen_range(1..=max_ord)).collect()
}

pub fn build_trait(g: &LabelledGraph, ords: &[u64]) -> TraitValuation {
    TraitValuation::from_u64s(g.basis().clone(), ords).unwrap()
}

pub fn labelling(values: &[i64]) -> VertexLabelling {
    VertexLabelling::from_i64s(values)
}

pub fn to_i64s(m: &VertexLabelling) -> Vec<i64> {
    m.values().iter().map(|v| i64::try_from(v).unwrap()).collect()
}

/// Edge order under the trait; `None` for zero labels.
pub fn edge_ord(e: &RawEdge, t: &[u64]) -> Option<i64> {
    e.exps.as_ref().map(|x| x.iter().zip(t).map(|(a, b)| (a * b) as i64).sum())
}

/// Divisibility oracle.
pub fn t_cartier_oracle(g: &RawGraph, t: &[u64], m: &[i64]) -> bool {
    g.edges.iter().all(|e| {
        let diff = m[e.a] - m[e.b];
        match edge_ord(e, t) {
            Some(o) => diff % o == 0,
            None => diff == 0,
        }
    })
}

/// Random T-Cartier labelling with `m(v0) = 0` and values in
/// `[-range, range]`: vertices are assigned in BFS order from `v0`, each
/// value drawn among those meeting every congruence to already assigned
/// neighbours. Returns `None` if the draw dead-ends repeatedly.
pub fn sample_t_cartier(rng: &mut TestRng, g: &RawGraph, t: &[u64], v0: usize, range: i64) -> Option<Vec<i64>> {
    let n = g.n();
    let mut order = vec![v0];
    let mut seen = vec![false; n];
    seen[v0] = true;
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        for e in &g.edges {
            for (x, y) in [(e.a, e.b), (e.b, e.a)] {
                if x == u && !seen[y] {
                    seen[y] = true;
                    order.push(y);
                }
            }
        }
        i += 1;
    }
    'attempt: for _ in 0..20 {
        let mut m: Vec<Option<i64>> = vec![None; n];
        m[v0] = Some(0);
        for &w in &order[1..] {
            let candidates: Vec<i64> = (-range..=range)
                .filter(|&x| {
                    g.edges.iter().all(|e| {
                        let other = if e.a == w {
                            e.b
                        } else if e.b == w {
                            e.a
                        } else {
                            return true;
                        };
                        let Some(mo) = (if other == w { Some(x) } else { m[other] }) else { return true };
                        match edge_ord(e, t) {
                            Some(o) => (x - mo) % o == 0,
                            None => x == mo,
                        }
                    })
                })
                .collect();
            if candidates.is_empty() {
                continue 'attempt;
            }
            // lean towards nonzero values
            let nonzero: Vec<i64> = candidates.iter().copied().filter(|&x| x != 0).collect();
            let pick = if !nonzero.is_empty() && rng.gen_bool(0.8) { &nonzero } else { &candidates };
            m[w] = Some(pick[rng.gen_range(0..pick.len())]);
        }
        return Some(m.into_iter().map(Option::unwrap).collect());
    }
    None
}

/// The multiplier `(m(v) - m(w)) / ord` forced on each non-loop monomial
/// edge, with `v` the endpoint of smaller id.
pub fn forced_deltas(g: &RawGraph, t: &[u64], m: &[i64]) -> Vec<i64> {
    g.edges
        .iter()
        .filter(|e| e.a != e.b)
        .filter_map(|e| {
            let o = edge_ord(e, t)?;
            let (v, w) = if g.ids[e.a] < g.ids[e.b] { (e.a, e.b) } else { (e.b, e.a) };
            Some((m[v] - m[w]) / o)
        })
        .collect()
}

fn proportional(a: &[u64], b: &[u64]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| a[i] * b[j] == a[j] * b[i]))
}

/// Power equivalence of raw labels: both zero, or proportional vectors.
pub fn equivalent_oracle(a: &Option<Vec<u64>>, b: &Option<Vec<u64>>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => proportional(x, y),
        _ => false,
    }
}

/// Every simple cycle as a list of edge indices (each cycle once per
/// starting edge and direction; duplicates are harmless here).
pub fn simple_cycles_oracle(g: &RawGraph) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for (i, e) in g.edges.iter().enumerate() {
        if e.a == e.b {
            out.push(vec![i]);
        }
    }
    fn walk(
        g: &RawGraph,
        start: usize,
        at: usize,
        used_v: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        for (i, e) in g.edges.iter().enumerate() {
            if e.a == e.b || path.contains(&i) {
                continue;
            }
            let next = if e.a == at {
                e.b
            } else if e.b == at {
                e.a
            } else {
                continue;
            };
            if next == start && !path.is_empty() {
                path.push(i);
                out.push(path.clone());
                path.pop();
            } else if !used_v[next] {
                used_v[next] = true;
                path.push(i);
                walk(g, start, next, used_v, path, out);
                path.pop();
                used_v[next] = false;
            }
        }
    }
    for s in 0..g.n() {
        let mut used = vec![false; g.n()];
        used[s] = true;
        walk(g, s, s, &mut used, &mut Vec::new(), &mut out);
    }
    out
}

/// Alignment by brute force over simple cycles.
pub fn aligned_oracle(g: &RawGraph) -> bool {
    simple_cycles_oracle(g)
        .iter()
        .all(|c| c.iter().all(|&i| c.iter().all(|&j| equivalent_oracle(&g.edges[i].exps, &g.edges[j].exps))))
}

/// Binomial coefficient by Pascal's rule.
pub fn binomial_oracle(n: usize, k: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![1u64; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row.get(k).copied().unwrap_or(0)
}

/// A random graph together with a global divisor on it, built by choosing
/// vertex vectors along a spanning tree and then adding only those extra
/// edges whose relation can be met.
pub struct RandomDivisor {
    pub raw: RawGraph,
    pub g: Vec<Vec<i64>>,
    pub delta: Vec<Option<i64>>,
}

pub fn random_divisor(rng: &mut TestRng, shape: GraphShape) -> RandomDivisor {
    let k = rng.gen_range(1..=shape.max_primes);
    let n = rng.gen_range(1..=shape.max_vertices);
    let mut g: Vec<Vec<i64>> = vec![vec![0; k]; n];
    g[0] = (0..k).map(|_| rng.gen_range(-3..=3)).collect();
    // (a, b, label, d) with g(a) - g(b) = d * label
    let mut edges: Vec<(usize, usize, Option<Vec<u64>>, Option<i64>)> = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        if rng.gen_bool(shape.zero_prob) {
            g[v] = g[u].clone();
            edges.push((u, v, None, None));
        } else {
            let b = random_exps(rng, k, shape.max_exp);
            let d = rng.gen_range(-3..=3);
            g[v] = g[u].iter().zip(&b).map(|(x, c)| x - d * *c as i64).collect();
            edges.push((u, v, Some(b), Some(d)));
        }
    }
    let extra = rng.gen_range(0..=shape.max_edges.saturating_sub(n - 1));
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = if rng.gen_bool(shape.loop_prob) { a } else { rng.gen_range(0..n) };
        let diff: Vec<i64> = g[a].iter().zip(&g[b]).map(|(x, y)| x - y).collect();
        if diff.iter().all(|&c| c == 0) {
            if rng.gen_bool(shape.zero_prob) {
                edges.push((a, b, None, None));
            } else {
                edges.push((a, b, Some(random_exps(rng, k, shape.max_exp)), Some(0)));
            }
        } else if diff.iter().all(|&c| c >= 0) || diff.iter().all(|&c| c <= 0) {
            let abs: Vec<u64> = diff.iter().map(|c| c.unsigned_abs()).collect();
            let total = abs.iter().fold(0, |acc, &c| gcd(acc, c));
            let divisors: Vec<u64> = (1..=total).filter(|d| total % d == 0).collect();
            let s = divisors[rng.gen_range(0..divisors.len())];
            let label: Vec<u64> = abs.iter().map(|c| c / s).collect();
            let d = if diff.iter().any(|&c| c > 0) { s as i64 } else { -(s as i64) };
            edges.push((a, b, Some(label), Some(d)));
        }
    }
    edges.shuffle(rng);
    let ids = vertex_ids(rng, n);
    let mut names: Vec<usize> = (1..=edges.len()).collect();
    names.shuffle(rng);
    let mut raw_edges = Vec::new();
    let mut delta = Vec::new();
    for ((a, b, exps, d), i) in edges.into_iter().zip(names) {
        // stored relations run from `a`; the library orients by id
        delta.push(d.map(|d| if ids[a] < ids[b] { d } else { -d }));
        raw_edges.push(RawEdge { id: format!("e{i}"), a, b, exps });
    }
    RandomDivisor { raw: RawGraph { k, ids, edges: raw_edges }, g, delta }
}

impl RandomDivisor {
    /// Independent check of the edge relations.
    pub fn is_valid(&self) -> bool {
        self.raw.edges.iter().zip(&self.delta).all(|(e, d)| {
            let (v, w) = if self.raw.ids[e.a] < self.raw.ids[e.b] { (e.a, e.b) } else { (e.b, e.a) };
            match (&e.exps, d) {
                (None, None) => self.g[v] == self.g[w],
                (Some(b), Some(d)) => (0..self.raw.k).all(|i| self.g[v][i] - self.g[w][i] == d * b[i] as i64),
                _ => false,
            }
        })
    }

    pub fn to_library(&self) -> neron_core::GlobalDivisor {
        neron_core::GlobalDivisor {
            g: self.g.iter().map(|x| x.iter().map(|&c| BigInt::from(c)).collect()).collect(),
            delta: self.delta.iter().map(|d| d.map(BigInt::from)).collect(),
        }
    }

    pub fn pullback_oracle(&self, t: &[u64]) -> Vec<i64> {
        self.g.iter().map(|x| x.iter().zip(t).map(|(a, b)| a * *b as i64).sum()).collect()
    }
}

/// All connected multigraphs on 1 to 3 vertices with at most 3 edges, each
/// labelled from {p, p:2, q, zero}, without duplicate edge lists.
pub fn exhaustive_small() -> Vec<RawGraph> {
    let labels: [Option<Vec<u64>>; 4] = [Some(vec![1, 0]), Some(vec![2, 0]), Some(vec![0, 1]), None];
    let mut out = Vec::new();
    for n in 1..=3usize {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
        let choices: Vec<(usize, usize, usize)> =
            slots.iter().flat_map(|&(a, b)| (0..labels.len()).map(move |l| (a, b, l))).collect();
        for m in 0..=3usize {
            // multisets of edge choices, as non-decreasing index sequences
            let mut idx = vec![0usize; m];
            loop {
                let raw = RawGraph {
                    k: 2,
                    ids: (1..=n).map(|i| format!("v{i}")).collect(),
                    edges: idx
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| {
                            let (a, b, l) = choices[c];
                            RawEdge { id: format!("e{}", i + 1), a, b, exps: labels[l].clone() }
                        })
                        .collect(),
                };
                if connected(&raw) {
                    out.push(raw);
                }
                let Some(pos) = (0..m).rev().find(|&i| idx[i] + 1 < choices.len()) else { break };
                idx[pos] += 1;
                for j in pos + 1..m {
                    idx[j] = idx[pos];
                }
            }
        }
    }
    out
}

pub fn connected(g: &RawGraph) -> bool {
    let n = g.n();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for e in &g.edges {
            for (x, y) in [(e.a, e.b), (e.b, e.a)] {
                if x == u && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// A raw graph with an edge removed, if still connected.
pub fn without_edge(g: &RawGraph, i: usize) -> Option<RawGraph> {
    let mut h = g.clone();
    h.edges.remove(i);
    connected(&h).then_some(h)
}

pub fn monomial(x: &[u64]) -> Monomial {
    Monomial::from_u64s(x)
}

fn small(x: &BigInt) -> i64 {
    i64::try_from(x).expect("test values fit in i64")
}

/// The raw description of a library graph.
pub fn raw_from_graph(g: &LabelledGraph) -> RawGraph {
    let edges = g
        .edges()
        .iter()
        .map(|e| RawEdge {
            id: e.id.clone(),
            a: e.ends.0,
            b: e.ends.1,
            exps: e.label.as_mono().map(|m| m.exponents().iter().map(|x| u64::try_from(x).unwrap()).collect()),
        })
        .collect();
    RawGraph { k: g.basis().len(), ids: g.vertices().to_vec(), edges }
}

/// Independent check of the edge relations of a library divisor.
pub fn divisor_valid_oracle(raw: &RawGraph, d: &neron_core::GlobalDivisor) -> bool {
    if d.g.len() != raw.n() || d.delta.len() != raw.edges.len() {
        return false;
    }
    raw.edges.iter().zip(&d.delta).all(|(e, delta)| {
        let (v, w) = if raw.ids[e.a] < raw.ids[e.b] { (e.a, e.b) } else { (e.b, e.a) };
        match (&e.exps, delta) {
            (None, None) => d.g[v] == d.g[w],
            (Some(b), Some(delta)) => {
                (0..raw.k).all(|i| small(&d.g[v][i]) - small(&d.g[w][i]) == small(delta) * b[i] as i64)
            }
            _ => false,
        }
    })
}

pub fn pullback_values_oracle(d: &neron_core::GlobalDivisor, t: &[u64]) -> Vec<i64> {
    d.g.iter().map(|x| x.iter().zip(t).map(|(a, b)| small(a) * *b as i64).sum()).collect()
}

/// Checks that a cycle reported by the library is a simple closed walk in
/// the raw graph.
pub fn cycle_is_simple_oracle(raw: &RawGraph, vertices: &[usize], edges: &[usize]) -> bool {
    let n = edges.len();
    if n == 0 || vertices.len() != n {
        return false;
    }
    let mut vs = vertices.to_vec();
    vs.sort_unstable();
    vs.dedup();
    let mut es = edges.to_vec();
    es.sort_unstable();
    es.dedup();
    if vs.len() != n || es.len() != n {
        return false;
    }
    edges.iter().enumerate().all(|(i, &e)| {
        let Some(edge) = raw.edges.get(e) else { return false };
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        (edge.a, edge.b) == (a, b) || (edge.a, edge.b) == (b, a)
    })
}
