//! Alignment of labelled graphs.
//!
//! A graph is aligned when the labels along every simple cycle are pairwise
//! power-equivalent. Two non-bridge edges lie on a common simple cycle
//! exactly when they share a biconnected block, so the check runs block by
//! block. [`enumerate_simple_cycles`] gives the direct definition for
//! cross-checking.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use crate::graph::LabelledGraph;
use crate::labels::PowerClass;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("more than {cap} simple cycles")]
    CycleCapExceeded { cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Aligned,
    NotAligned,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Aligned => "aligned",
            Verdict::NotAligned => "not-aligned",
        }
    }
}

/// A simple closed walk: `edges[i]` joins `vertices[i]` and
/// `vertices[(i + 1) % len]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Checks that this is a simple closed walk in `g`.
    pub fn is_simple_in(&self, g: &LabelledGraph) -> bool {
        let n = self.edges.len();
        if n == 0 || self.vertices.len() != n {
            return false;
        }
        let distinct_v: HashSet<_> = self.vertices.iter().collect();
        let distinct_e: HashSet<_> = self.edges.iter().collect();
        if distinct_v.len() != n || distinct_e.len() != n {
            return false;
        }
        self.edges.iter().enumerate().all(|(i, &e)| {
            let Some(edge) = g.edges().get(e) else { return false };
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            edge.ends == (a, b) || edge.ends == (b, a)
        })
    }
}

/// Evidence of non-alignment: two non-power-equivalent edges and a simple
/// cycle through both. The cycle starts at a vertex whose two cycle edges
/// (first and last) are not power-equivalent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub pair: (usize, usize),
    pub cycle: Cycle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentReport {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// Non-bridge edges grouped by biconnected block; loops form their own
    /// blocks. Edges within a block and the blocks themselves are in edge-id
    /// order.
    pub blocks: Vec<Vec<usize>>,
}

impl AlignmentReport {
    pub fn is_aligned(&self) -> bool {
        self.verdict == Verdict::Aligned
    }

    /// `key=value` lines.
    pub fn to_kv(&self, g: &LabelledGraph) -> String {
        let mut out = format!("verdict={}\n", self.verdict.as_str());
        if let Some(w) = &self.witness {
            let e = |i: usize| g.edges()[i].id.as_str();
            out += &format!("witness.pair={},{}\n", e(w.pair.0), e(w.pair.1));
            out += &format!("witness.cycle={}\n", join(w.cycle.edges.iter().map(|&i| e(i))));
            out += &format!("witness.vertices={}\n", join(w.cycle.vertices.iter().map(|&v| g.vertices()[v].as_str())));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            out += &format!("block.{i}={}\n", join(b.iter().map(|&e| g.edges()[e].id.as_str())));
        }
        out
    }

    pub fn to_pretty(&self, g: &LabelledGraph) -> String {
        let mut out = match self.verdict {
            Verdict::Aligned => "The graph is aligned.\n".to_string(),
            Verdict::NotAligned => "The graph is NOT aligned.\n".to_string(),
        };
        if let Some(w) = &self.witness {
            let (a, b) = (&g.edges()[w.pair.0], &g.edges()[w.pair.1]);
            out += &format!(
                "  edges {} ({}) and {} ({}) have no common power\n",
                a.id,
                a.label.display(g.basis()),
                b.id,
                b.label.display(g.basis())
            );
            out += "  cycle:";
            for (i, &e) in w.cycle.edges.iter().enumerate() {
                out += &format!(" {} -{}-", g.vertices()[w.cycle.vertices[i]], g.edges()[e].id);
            }
            out += &format!(" {}\n", g.vertices()[w.cycle.vertices[0]]);
        }
        out += &format!("  {} cyclic block(s)\n", self.blocks.len());
        out
    }
}

pub(crate) fn join<'a>(items: impl Iterator<Item = &'a str>) -> String {
    items.collect::<Vec<_>>().join(",")
}

/// Biconnected blocks as edge-index sets, including single-edge bridge
/// blocks and one block per loop. Each block is sorted by edge id, blocks
/// by their first edge id.
pub fn biconnected_blocks(g: &LabelledGraph) -> Vec<Vec<usize>> {
    const UNSET: usize = usize::MAX;
    let n = g.vertex_count();
    let inc = g.incidence();
    let mut disc = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut edge_stack: Vec<usize> = Vec::new();
    // (vertex, next incidence position, edge to parent)
    let mut frames: Vec<(usize, usize, Option<usize>)> = Vec::new();

    for (i, e) in g.edges().iter().enumerate() {
        if e.is_loop() {
            blocks.push(vec![i]);
        }
    }
    for root in 0..n {
        if disc[root] != UNSET {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        frames.push((root, 0, None));
        while let Some(&mut (v, ref mut pos, parent_edge)) = frames.last_mut() {
            if *pos < inc[v].len() {
                let e = inc[v][*pos];
                *pos += 1;
                let edge = &g.edges()[e];
                if edge.is_loop() || Some(e) == parent_edge {
                    continue;
                }
                let w = edge.other(v);
                if disc[w] == UNSET {
                    edge_stack.push(e);
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    frames.push((w, 0, Some(e)));
                } else if disc[w] < disc[v] {
                    edge_stack.push(e);
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                frames.pop();
                if let (Some(pe), Some(&(u, _, _))) = (parent_edge, frames.last()) {
                    low[u] = low[u].min(low[v]);
                    if low[v] >= disc[u] {
                        let mut block = Vec::new();
                        while let Some(e) = edge_stack.pop() {
                            block.push(e);
                            if e == pe {
                                break;
                            }
                        }
                        blocks.push(block);
                    }
                }
            }
        }
    }
    for b in &mut blocks {
        b.sort_by(|&x, &y| g.edges()[x].id.cmp(&g.edges()[y].id));
    }
    blocks.sort_by(|x, y| g.edges()[x[0]].id.cmp(&g.edges()[y[0]].id));
    blocks
}

/// Decides alignment block by block.
pub fn is_aligned(g: &LabelledGraph) -> AlignmentReport {
    let classes: Vec<PowerClass> = g.edges().iter().map(|e| e.label.class()).collect();
    let blocks: Vec<Vec<usize>> =
        biconnected_blocks(g).into_iter().filter(|b| b.len() > 1 || g.edges()[b[0]].is_loop()).collect();
    let mut witness = None;
    for b in &blocks {
        let first = b[0];
        if let Some(&other) = b.iter().find(|&&e| classes[e] != classes[first]) {
            let cycle =
                cycle_through(g, b, first, other).expect("two edges of a biconnected block lie on a common cycle");
            witness = Some(Witness { pair: (first, other), cycle: anchor_cycle(g, &classes, cycle, first, other) });
            break;
        }
    }
    AlignmentReport { verdict: if witness.is_some() { Verdict::NotAligned } else { Verdict::Aligned }, witness, blocks }
}

/// Rotates a cycle so it starts at a vertex between two non-equivalent
/// edges, preferring the shared endpoint of the offending pair.
fn anchor_cycle(g: &LabelledGraph, classes: &[PowerClass], cycle: Cycle, e: usize, f: usize) -> Cycle {
    let n = cycle.len();
    let prev = |i: usize| cycle.edges[(i + n - 1) % n];
    let pivot = (0..n)
        .find(|&i| {
            let pair = (prev(i), cycle.edges[i]);
            pair == (e, f) || pair == (f, e)
        })
        .or_else(|| (0..n).find(|&i| classes[prev(i)] != classes[cycle.edges[i]]))
        .expect("a cycle with two inequivalent edges has an adjacent inequivalent pair");
    let (before, after) = (prev(pivot), cycle.edges[pivot]);
    let forward = g.edges()[after].id <= g.edges()[before].id;
    let mut vertices = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n);
    for k in 0..n {
        if forward {
            vertices.push(cycle.vertices[(pivot + k) % n]);
            edges.push(cycle.edges[(pivot + k) % n]);
        } else {
            vertices.push(cycle.vertices[(pivot + n - k) % n]);
            edges.push(cycle.edges[(pivot + 2 * n - 1 - k) % n]);
        }
    }
    Cycle { vertices, edges }
}

struct Arc {
    to: usize,
    cap: u8,
    rev: usize,
    edge: Option<usize>,
    forward: bool,
}

fn add_arc(arcs: &mut [Vec<Arc>], a: usize, b: usize, edge: Option<usize>) {
    let (ra, rb) = (arcs[b].len(), arcs[a].len());
    arcs[a].push(Arc { to: b, cap: 1, rev: ra, edge, forward: true });
    arcs[b].push(Arc { to: a, cap: 0, rev: rb, edge, forward: false });
}

/// A simple cycle through distinct non-loop edges `e` and `f` using only
/// edges of `block`: two vertex-disjoint paths joining the endpoints of `e`
/// to those of `f`, found as a unit-capacity flow.
pub(crate) fn cycle_through(g: &LabelledGraph, block: &[usize], e: usize, f: usize) -> Option<Cycle> {
    let mut local: Vec<usize> = block.iter().flat_map(|&x| [g.edges()[x].ends.0, g.edges()[x].ends.1]).collect();
    local.sort_unstable();
    local.dedup();
    let idx = |v: usize| local.binary_search(&v).expect("endpoint in block");
    let n = local.len();
    let (src, sink) = (2 * n, 2 * n + 1);
    let mut arcs: Vec<Vec<Arc>> = (0..2 * n + 2).map(|_| Vec::new()).collect();
    for i in 0..n {
        add_arc(&mut arcs, 2 * i, 2 * i + 1, None);
    }
    for &x in block {
        let edge = &g.edges()[x];
        if x == e || x == f || edge.is_loop() {
            continue;
        }
        let (a, b) = (idx(edge.ends.0), idx(edge.ends.1));
        add_arc(&mut arcs, 2 * a + 1, 2 * b, Some(x));
        add_arc(&mut arcs, 2 * b + 1, 2 * a, Some(x));
    }
    let (ea, eb) = g.edges()[e].ends;
    let (fa, fb) = g.edges()[f].ends;
    for v in [ea, eb] {
        add_arc(&mut arcs, src, 2 * idx(v), None);
    }
    for v in [fa, fb] {
        add_arc(&mut arcs, 2 * idx(v) + 1, sink, None);
    }

    for _ in 0..2 {
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; arcs.len()];
        let mut queue = VecDeque::from([src]);
        let mut seen = vec![false; arcs.len()];
        seen[src] = true;
        while let Some(u) = queue.pop_front() {
            for (k, a) in arcs[u].iter().enumerate() {
                if a.cap > 0 && !seen[a.to] {
                    seen[a.to] = true;
                    pred[a.to] = Some((u, k));
                    queue.push_back(a.to);
                }
            }
        }
        if !seen[sink] {
            return None;
        }
        let mut cur = sink;
        while let Some((u, k)) = pred[cur] {
            arcs[u][k].cap -= 1;
            let rev = arcs[u][k].rev;
            arcs[cur][rev].cap += 1;
            cur = u;
        }
    }

    // Walk each unit of flow from an endpoint of `e` to an endpoint of `f`.
    let saturated = |arcs: &[Vec<Arc>], u: usize| -> Vec<usize> {
        arcs[u].iter().enumerate().filter(|(_, a)| a.forward && a.cap == 0).map(|(k, _)| k).collect()
    };
    let mut paths: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for start in saturated(&arcs, src) {
        let mut node = arcs[src][start].to;
        let mut verts = Vec::new();
        let mut edges = Vec::new();
        loop {
            let i = node / 2;
            verts.push(local[i]);
            let out = 2 * i + 1;
            let ks = saturated(&arcs, out);
            let &k = ks.first()?;
            let a = &arcs[out][k];
            if a.to == sink {
                break;
            }
            edges.push(a.edge.expect("graph arc"));
            node = a.to;
        }
        paths.push((verts, edges));
    }
    let start_a = paths.iter().position(|(v, _)| v[0] == ea)?;
    let (path_a, path_b) = (&paths[start_a], &paths[1 - start_a]);
    let end_b = *path_b.0.last()?;
    let mut vertices = vec![ea];
    let mut edges = vec![e];
    vertices.extend(path_b.0.iter().copied());
    edges.extend(path_b.1.iter().copied());
    edges.push(f);
    let end_a = *path_a.0.last()?;
    debug_assert!(end_b != end_a && [fa, fb].contains(&end_a));
    let mut back_v: Vec<usize> = path_a.0.clone();
    back_v.reverse();
    let mut back_e: Vec<usize> = path_a.1.clone();
    back_e.reverse();
    vertices.extend(back_v.into_iter().take(path_a.0.len() - 1));
    edges.extend(back_e);
    Some(Cycle { vertices, edges })
}

/// All simple cycles, each once: loops, parallel-edge 2-cycles and longer
/// cycles. Fails when more than `cap` exist.
pub fn enumerate_simple_cycles(g: &LabelledGraph, cap: usize) -> Result<Vec<Cycle>, AlignmentError> {
    let mut out = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        if e.is_loop() {
            out.push(Cycle { vertices: vec![e.ends.0], edges: vec![i] });
        }
    }
    if out.len() > cap {
        return Err(AlignmentError::CycleCapExceeded { cap });
    }
    let inc = g.incidence();
    let mut on_path = vec![false; g.vertex_count()];
    for s in 0..g.vertex_count() {
        let mut verts = vec![s];
        let mut edges = Vec::new();
        on_path[s] = true;
        extend_cycles(g, &inc, s, &mut verts, &mut edges, &mut on_path, &mut out, cap)?;
        on_path[s] = false;
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn extend_cycles(
    g: &LabelledGraph,
    inc: &[Vec<usize>],
    start: usize,
    verts: &mut Vec<usize>,
    edges: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Cycle>,
    cap: usize,
) -> Result<(), AlignmentError> {
    let u = *verts.last().expect("nonempty path");
    for &e in &inc[u] {
        let edge = &g.edges()[e];
        if edge.is_loop() || edges.last() == Some(&e) {
            continue;
        }
        let w = edge.other(u);
        if w == start {
            // each cycle is seen in both directions; keep one
            if !edges.is_empty() && edges[0] < e {
                let mut cyc_edges = edges.clone();
                cyc_edges.push(e);
                out.push(Cycle { vertices: verts.clone(), edges: cyc_edges });
                if out.len() > cap {
                    return Err(AlignmentError::CycleCapExceeded { cap });
                }
            }
        } else if w > start && !on_path[w] {
            on_path[w] = true;
            verts.push(w);
            edges.push(e);
            extend_cycles(g, inc, start, verts, edges, on_path, out, cap)?;
            edges.pop();
            verts.pop();
            on_path[w] = false;
        }
    }
    Ok(())
}

/// Existence of a Néron model for the jacobian, read off alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeronVerdict {
    pub report: AlignmentReport,
}

impl NeronVerdict {
    pub fn model_exists(&self) -> bool {
        self.report.is_aligned()
    }

    pub fn statement(&self) -> &'static str {
        if self.model_exists() {
            "a Neron model exists (regular base, projective family, Pic smooth along the unit section)"
        } else {
            "no Neron model exists"
        }
    }

    pub fn to_kv(&self, g: &LabelledGraph) -> String {
        format!(
            "neron={}\nstatement={}\n{}",
            if self.model_exists() { "exists" } else { "none" },
            self.statement(),
            self.report.to_kv(g)
        )
    }
}

pub fn neron_verdict(g: &LabelledGraph) -> NeronVerdict {
    NeronVerdict { report: is_aligned(g) }
}
