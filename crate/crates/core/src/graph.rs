//! Dual graphs of fibres: labelled multigraphs with loops, the local chart
//! model and its strata, and the line-oriented graph file format.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::labels::{is_valid_prime_name, Label, PrimeBasis};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph has no vertices")]
    NoVertices,
    #[error("edge `{0}` has a unit label")]
    UnitEdgeLabel(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("label of edge `{0}` is over a different basis")]
    BasisMismatch(String),
    #[error("stratum `{0}` must name one or two components")]
    BadStratum(String),
}

/// One reason a graph fails the dual-graph invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoVertices,
    Disconnected { components: usize },
    UnitEdgeLabel { edge: String },
    BasisMismatch { edge: String },
}

impl Violation {
    pub fn into_error(self) -> GraphError {
        match self {
            Violation::NoVertices => GraphError::NoVertices,
            Violation::Disconnected { .. } => GraphError::Disconnected,
            Violation::UnitEdgeLabel { edge } => GraphError::UnitEdgeLabel(edge),
            Violation::BasisMismatch { edge } => GraphError::BasisMismatch(edge),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoVertices => f.write_str("no-vertices"),
            Violation::Disconnected { components } => write!(f, "disconnected components={components}"),
            Violation::UnitEdgeLabel { edge } => write!(f, "unit-edge-label edge={edge}"),
            Violation::BasisMismatch { edge } => write!(f, "basis-mismatch edge={edge}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    /// Endpoints as vertex indices, in the order they were given.
    pub ends: (usize, usize),
    pub label: Label,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.ends.0 == self.ends.1
    }

    pub fn other(&self, v: usize) -> usize {
        if self.ends.0 == v {
            self.ends.1
        } else {
            self.ends.0
        }
    }
}

/// A dual graph: vertices are irreducible components, edges are crossing
/// strata labelled by principal ideals of the base.
///
/// Construction through [`LabelledGraph::from_parts`] only checks ids,
/// incidence and label arity; [`LabelledGraph::validate`] reports the
/// remaining invariants, and [`LabelledGraph::new`] enforces all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelledGraph {
    basis: PrimeBasis,
    vertices: Vec<String>,
    edges: Vec<Edge>,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
}

impl LabelledGraph {
    pub fn from_parts(
        basis: PrimeBasis,
        vertices: Vec<String>,
        edges: Vec<(String, String, String, Label)>,
    ) -> Result<Self, GraphError> {
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), i).is_some() {
                return Err(GraphError::DuplicateId(v.clone()));
            }
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut built = Vec::with_capacity(edges.len());
        for (id, a, b, label) in edges {
            let lookup =
                |v: &str| vertex_index.get(v).copied().ok_or_else(|| GraphError::UnknownComponent(v.to_string()));
            let ends = (lookup(&a)?, lookup(&b)?);
            if label.arity().is_some_and(|k| k != basis.len()) {
                return Err(GraphError::BasisMismatch(id));
            }
            if vertex_index.contains_key(&id) || edge_index.insert(id.clone(), built.len()).is_some() {
                return Err(GraphError::DuplicateId(id));
            }
            built.push(Edge { id, ends, label });
        }
        Ok(LabelledGraph { basis, vertices, edges: built, vertex_index, edge_index })
    }

    /// Builds a graph and rejects it unless every invariant holds.
    pub fn new(
        basis: PrimeBasis,
        vertices: Vec<String>,
        edges: Vec<(String, String, String, Label)>,
    ) -> Result<Self, GraphError> {
        let g = Self::from_parts(basis, vertices, edges)?;
        match g.validate().into_iter().next() {
            Some(v) => Err(v.into_error()),
            None => Ok(g),
        }
    }

    /// Convenience constructor from string slices; labels are parsed.
    pub fn from_strs(
        primes: &[&str],
        vertices: &[&str],
        edges: &[(&str, &str, &str, &str)],
    ) -> Result<Self, GraphError> {
        let basis = PrimeBasis::from_names(primes.iter().map(|s| s.to_string()).collect())
            .map_err(|_| GraphError::DuplicateId(primes.join(" ")))?;
        let mut parsed = Vec::with_capacity(edges.len());
        for &(id, a, b, l) in edges {
            let label = Label::parse(l, &basis).map_err(|_| GraphError::BasisMismatch(id.to_string()))?;
            parsed.push((id.to_string(), a.to_string(), b.to_string(), label));
        }
        Self::new(basis, vertices.iter().map(|s| s.to_string()).collect(), parsed)
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, id: &str) -> Option<usize> {
        self.vertex_index.get(id).copied()
    }

    pub fn edge(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    /// Endpoints of an edge ordered by vertex id, the orientation used by
    /// divisor edge constraints.
    pub fn oriented_ends(&self, e: usize) -> (usize, usize) {
        let (a, b) = self.edges[e].ends;
        if self.vertices[a] <= self.vertices[b] {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Incident edge indices per vertex; a loop appears once.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            inc[e.ends.0].push(i);
            if !e.is_loop() {
                inc[e.ends.1].push(i);
            }
        }
        inc
    }

    /// Vertex indices sorted by id.
    pub fn vertices_by_id(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by(|&a, &b| self.vertices[a].cmp(&self.vertices[b]));
        order
    }

    /// Edge indices sorted by id.
    pub fn edges_by_id(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by(|&a, &b| self.edges[a].id.cmp(&self.edges[b].id));
        order
    }

    /// Connected component index per vertex, restricted to edges accepted by
    /// `keep`. Components are numbered in order of their first vertex.
    pub fn components_where(&self, keep: impl Fn(usize) -> bool) -> (Vec<usize>, usize) {
        let mut dsu = DisjointSets::new(self.vertices.len());
        for (i, e) in self.edges.iter().enumerate() {
            if keep(i) {
                dsu.union(e.ends.0, e.ends.1);
            }
        }
        let mut comp = vec![usize::MAX; self.vertices.len()];
        let mut root_to_comp = HashMap::new();
        for v in 0..self.vertices.len() {
            let next = root_to_comp.len();
            comp[v] = *root_to_comp.entry(dsu.find(v)).or_insert(next);
        }
        let n = root_to_comp.len();
        (comp, n)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.vertices.is_empty() {
            out.push(Violation::NoVertices);
        } else {
            let (_, n) = self.components_where(|_| true);
            if n > 1 {
                out.push(Violation::Disconnected { components: n });
            }
        }
        for e in &self.edges {
            if e.label.arity().is_some_and(|k| k != self.basis.len()) {
                out.push(Violation::BasisMismatch { edge: e.id.clone() });
            } else if e.label.is_unit() {
                out.push(Violation::UnitEdgeLabel { edge: e.id.clone() });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Renders the graph file format; `parse_graph` inverts it.
    pub fn to_text(&self) -> String {
        let mut s = String::from("primes");
        for p in self.basis.names() {
            let _ = write!(s, " {p}");
        }
        s.push('\n');
        for v in &self.vertices {
            let _ = writeln!(s, "vertex {v}");
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "edge {} {} {} {}",
                e.id,
                self.vertices[e.ends.0],
                self.vertices[e.ends.1],
                e.label.display(&self.basis)
            );
        }
        s
    }
}

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// A 1-stratum entry of a fibre: one component (self-intersection) or two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratumEntry {
    pub id: String,
    pub components: Vec<String>,
    pub label: Label,
}

/// Declarative description of a closed fibre.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberDescription {
    pub basis: PrimeBasis,
    pub components: Vec<String>,
    pub strata: Vec<StratumEntry>,
}

/// One vertex per component, one edge per 1-stratum.
pub fn build_dual_graph(f: &FiberDescription) -> Result<LabelledGraph, GraphError> {
    let mut edges = Vec::with_capacity(f.strata.len());
    for s in &f.strata {
        let (a, b) = match s.components.as_slice() {
            [a] => (a.clone(), a.clone()),
            [a, b] => (a.clone(), b.clone()),
            _ => return Err(GraphError::BadStratum(s.id.clone())),
        };
        edges.push((s.id.clone(), a, b, s.label.clone()));
    }
    LabelledGraph::new(f.basis.clone(), f.components.clone(), edges)
}

/// The local model `x_1 ... x_l = b` in `n` coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartModel {
    n: usize,
    l: usize,
    b: Label,
}

impl ChartModel {
    pub fn new(n: usize, l: usize, b: Label) -> Option<Self> {
        (1 <= l && l <= n).then_some(ChartModel { n, l, b })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn crossing(&self) -> usize {
        self.l
    }

    pub fn label(&self) -> &Label {
        &self.b
    }

    /// Number of r-strata of the closed fibre: `C(l, r+1)` when `b` is in
    /// the maximal ideal. A unit `b` gives a smooth irreducible fibre.
    pub fn strata_count(&self, r: usize) -> BigUint {
        if self.b.is_unit() {
            return if r == 0 { BigUint::one() } else { BigUint::default() };
        }
        binomial(self.l, r + 1)
    }

    /// Coordinate subsets (1-based) cutting out the r-strata, in
    /// lexicographic order.
    pub fn enumerate_strata(&self, r: usize) -> Vec<Vec<usize>> {
        if self.b.is_unit() {
            return if r == 0 { vec![Vec::new()] } else { Vec::new() };
        }
        let size = r + 1;
        if size > self.l {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut current: Vec<usize> = (1..=size).collect();
        loop {
            out.push(current.clone());
            // advance to the next combination
            let Some(i) = (0..size).rev().find(|&i| current[i] < self.l - (size - 1 - i)) else {
                break;
            };
            current[i] += 1;
            for j in i + 1..size {
                current[j] = current[j - 1] + 1;
            }
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::default();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Parse failure with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub column: usize,
}

/// Splits a line into whitespace-separated tokens with 1-based columns,
/// dropping everything after `#`.
pub(crate) fn tokenize(line: &str) -> Vec<Token<'_>> {
    let content = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token { text: &content[s..i], column: content[..s].chars().count() + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    out
}

/// Parses the graph file format. Structural errors (ids, incidence, label
/// syntax) are reported here; connectivity and unit labels are left to
/// [`LabelledGraph::validate`].
pub fn parse_graph(text: &str) -> Result<LabelledGraph, ParseError> {
    let mut basis: Option<PrimeBasis> = None;
    let mut vertices: Vec<String> = Vec::new();
    let mut vertex_seen: HashMap<String, ()> = HashMap::new();
    let mut edge_seen: HashMap<String, ()> = HashMap::new();
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let toks = tokenize(line);
        let Some(head) = toks.first() else { continue };
        let err = |column: usize, message: String| ParseError { line: line_no, column, message };
        match head.text {
            "primes" => {
                if basis.is_some() {
                    return Err(err(head.column, "duplicate `primes` line".into()));
                }
                let mut names = Vec::new();
                for t in &toks[1..] {
                    if !is_valid_prime_name(t.text) {
                        return Err(err(t.column, format!("invalid prime name `{}`", t.text)));
                    }
                    if names.iter().any(|n| n == t.text) {
                        return Err(err(t.column, format!("duplicate prime `{}`", t.text)));
                    }
                    names.push(t.text.to_string());
                }
                basis = Some(PrimeBasis::from_names(names).map_err(|e| err(head.column, e.to_string()))?);
            }
            _ if basis.is_none() => {
                return Err(err(head.column, "expected `primes` line first".into()));
            }
            "vertex" => {
                if toks.len() != 2 {
                    return Err(err(head.column, "expected `vertex <id>`".into()));
                }
                let id = toks[1].text;
                if vertex_seen.insert(id.to_string(), ()).is_some() || edge_seen.contains_key(id) {
                    return Err(err(toks[1].column, format!("duplicate id `{id}`")));
                }
                vertices.push(id.to_string());
            }
            "edge" => {
                if toks.len() != 5 {
                    return Err(err(head.column, "expected `edge <id> <vertex> <vertex> <label>`".into()));
                }
                let id = toks[1].text;
                if edge_seen.insert(id.to_string(), ()).is_some() || vertex_seen.contains_key(id) {
                    return Err(err(toks[1].column, format!("duplicate id `{id}`")));
                }
                for t in &toks[2..4] {
                    if !vertex_seen.contains_key(t.text) {
                        return Err(err(t.column, format!("unknown vertex `{}`", t.text)));
                    }
                }
                let b = basis.as_ref().expect("basis checked above");
                let label = Label::parse(toks[4].text, b).map_err(|e| err(toks[4].column + e.offset, e.message))?;
                edges.push((id.to_string(), toks[2].text.to_string(), toks[3].text.to_string(), label));
            }
            other => return Err(err(head.column, format!("unknown directive `{other}`"))),
        }
    }
    let basis = basis.ok_or(ParseError { line: 1, column: 1, message: "missing `primes` line".into() })?;
    LabelledGraph::from_parts(basis, vertices, edges).map_err(|e| ParseError {
        line: 1,
        column: 1,
        message: e.to_string(),
    })
}
