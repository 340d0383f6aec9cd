//! Vertex labellings, traits and global Cartier divisors on dual graphs.
//!
//! A global divisor assigns to each vertex `v` the exponent vector of a
//! principal fractional ideal `f_v`; across an edge labelled `b` the two
//! ideals differ by an integer power of `b`, and across a zero-labelled
//! edge they agree. Pulling back along a trait turns it into a vertex
//! labelling. Realizability asks for the converse.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::alignment::{is_aligned, AlignmentReport};
use crate::graph::{tokenize, LabelledGraph, ParseError};
use crate::labels::{format_signed_monomial, Label, LabelError, Monomial, Order, PowerClass, TraitValuation};
use crate::lattice::{solve_integer_system, IntMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CartierError {
    #[error("trait or label is over a different basis than the graph")]
    BasisMismatch,
    #[error("labelling has {found} values for {expected} vertices")]
    IncompleteLabelling { expected: usize, found: usize },
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("labelling is not T-Cartier")]
    NotTCartier,
    #[error("labelling is nonzero at the base vertex")]
    BaseVertexNonzero,
    #[error("graph is not aligned")]
    NotAligned,
    #[error("graph is aligned")]
    GraphIsAligned,
    #[error("a zero edge label has infinite order")]
    InfiniteOrd,
    #[error("element is a unit")]
    UnitElement,
    #[error("element is zero")]
    ZeroElement,
    #[error("vertex set is empty")]
    EmptyVertexSet,
    #[error("edge `{0}` leaves the vertex set but is not a power of the element")]
    NotAComponentUnion(String),
    #[error("postcondition failed: {0}")]
    Postcondition(String),
}

impl From<LabelError> for CartierError {
    fn from(_: LabelError) -> Self {
        CartierError::BasisMismatch
    }
}

/// An integer per vertex, indexed like the graph's vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexLabelling {
    values: Vec<BigInt>,
}

impl VertexLabelling {
    pub fn new(values: Vec<BigInt>) -> Self {
        VertexLabelling { values }
    }

    pub fn from_i64s(values: &[i64]) -> Self {
        VertexLabelling { values: values.iter().map(|&v| BigInt::from(v)).collect() }
    }

    pub fn zero(g: &LabelledGraph) -> Self {
        VertexLabelling { values: vec![BigInt::zero(); g.vertex_count()] }
    }

    /// Labelling by vertex id; every vertex must appear exactly once.
    pub fn from_pairs<S: AsRef<str>>(g: &LabelledGraph, pairs: &[(S, BigInt)]) -> Result<Self, CartierError> {
        let mut values: Vec<Option<BigInt>> = vec![None; g.vertex_count()];
        for (id, value) in pairs {
            let v = g.vertex(id.as_ref()).ok_or_else(|| CartierError::UnknownVertex(id.as_ref().to_string()))?;
            values[v] = Some(value.clone());
        }
        let found = values.iter().filter(|x| x.is_some()).count();
        if found != g.vertex_count() || pairs.len() != found {
            return Err(CartierError::IncompleteLabelling { expected: g.vertex_count(), found: pairs.len() });
        }
        Ok(VertexLabelling { values: values.into_iter().flatten().collect() })
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }

    pub fn get(&self, v: usize) -> &BigInt {
        &self.values[v]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_total(&self, g: &LabelledGraph) -> Result<(), CartierError> {
        if self.values.len() != g.vertex_count() {
            return Err(CartierError::IncompleteLabelling { expected: g.vertex_count(), found: self.values.len() });
        }
        Ok(())
    }

    /// Parses `m <vertex> <integer>` lines.
    pub fn parse(text: &str, g: &LabelledGraph) -> Result<Self, ParseError> {
        let mut values: Vec<Option<BigInt>> = vec![None; g.vertex_count()];
        for (lineno, line) in text.lines().enumerate() {
            let toks = tokenize(line);
            let Some(head) = toks.first() else { continue };
            let err = |column: usize, message: String| ParseError { line: lineno + 1, column, message };
            if head.text != "m" || toks.len() != 3 {
                return Err(err(head.column, "expected `m <vertex> <integer>`".into()));
            }
            let v = g
                .vertex(toks[1].text)
                .ok_or_else(|| err(toks[1].column, format!("unknown vertex `{}`", toks[1].text)))?;
            let value: BigInt =
                toks[2].text.parse().map_err(|_| err(toks[2].column, format!("invalid integer `{}`", toks[2].text)))?;
            if values[v].replace(value).is_some() {
                return Err(err(toks[1].column, format!("vertex `{}` labelled twice", toks[1].text)));
            }
        }
        if let Some(missing) = values.iter().position(Option::is_none) {
            return Err(ParseError {
                line: text.lines().count().max(1),
                column: 1,
                message: format!("vertex `{}` is not labelled", g.vertices()[missing]),
            });
        }
        Ok(VertexLabelling { values: values.into_iter().flatten().collect() })
    }

    pub fn to_text(&self, g: &LabelledGraph) -> String {
        let mut s = String::new();
        for (v, value) in self.values.iter().enumerate() {
            let _ = writeln!(s, "m {} {}", g.vertices()[v], value);
        }
        s
    }
}

impl std::ops::Add for &VertexLabelling {
    type Output = VertexLabelling;
    fn add(self, other: &VertexLabelling) -> VertexLabelling {
        VertexLabelling { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }
}

/// Edges across which a labelling fails divisibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TCartierReport {
    pub violations: Vec<usize>,
}

impl TCartierReport {
    pub fn is_t_cartier(&self) -> bool {
        self.violations.is_empty()
    }
}

fn edge_orders(g: &LabelledGraph, t: &TraitValuation) -> Result<Vec<Order>, CartierError> {
    if t.basis() != g.basis() {
        return Err(CartierError::BasisMismatch);
    }
    g.edges().iter().map(|e| e.label.ord_under(t).map_err(CartierError::from)).collect()
}

/// Whether `ord(l(e))` divides `m(v) - m(w)` on every edge.
pub fn is_t_cartier(
    g: &LabelledGraph,
    t: &TraitValuation,
    m: &VertexLabelling,
) -> Result<TCartierReport, CartierError> {
    m.check_total(g)?;
    let ords = edge_orders(g, t)?;
    let violations = g
        .edges()
        .iter()
        .zip(&ords)
        .enumerate()
        .filter(|(_, (e, o))| !o.divides(&(m.get(e.ends.0) - m.get(e.ends.1))))
        .map(|(i, _)| i)
        .collect();
    Ok(TCartierReport { violations })
}

/// Violation of the global divisor edge relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DivisorViolation {
    Shape,
    Edge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalDivisor {
    /// Exponent vector per vertex.
    pub g: Vec<Vec<BigInt>>,
    /// Multiplier per edge; `None` exactly on zero-labelled edges.
    pub delta: Vec<Option<BigInt>>,
}

impl GlobalDivisor {
    pub fn zero(graph: &LabelledGraph) -> Self {
        let k = graph.basis().len();
        GlobalDivisor {
            g: vec![vec![BigInt::zero(); k]; graph.vertex_count()],
            delta: graph.edges().iter().map(|e| (!e.label.is_zero()).then(BigInt::zero)).collect(),
        }
    }

    /// The edge relations `g(v) - g(w) = delta(e) * vec(l(e))`, with `v`
    /// the endpoint of smaller id, and `g(v) = g(w)` across zero labels.
    pub fn check(&self, graph: &LabelledGraph) -> Vec<DivisorViolation> {
        let k = graph.basis().len();
        if self.g.len() != graph.vertex_count()
            || self.delta.len() != graph.edge_count()
            || self.g.iter().any(|x| x.len() != k)
        {
            return vec![DivisorViolation::Shape];
        }
        let mut out = Vec::new();
        for (i, e) in graph.edges().iter().enumerate() {
            let (v, w) = graph.oriented_ends(i);
            let ok = match (&e.label, &self.delta[i]) {
                (Label::Zero, None) => self.g[v] == self.g[w],
                (Label::Mono(b), Some(d)) => self.g[v]
                    .iter()
                    .zip(&self.g[w])
                    .zip(b.exponents())
                    .all(|((x, y), be)| x - y == d * BigInt::from(be.clone())),
                _ => false,
            };
            if !ok {
                out.push(DivisorViolation::Edge(i));
            }
        }
        out
    }

    pub fn is_valid(&self, graph: &LabelledGraph) -> bool {
        self.check(graph).is_empty()
    }

    pub fn negated(&self) -> Self {
        GlobalDivisor {
            g: self.g.iter().map(|x| x.iter().map(|c| -c).collect()).collect(),
            delta: self.delta.iter().map(|d| d.as_ref().map(|x| -x)).collect(),
        }
    }

    /// `g v <monomial>` and `delta e <integer>` lines; zero-labelled edges
    /// carry no multiplier.
    pub fn to_text(&self, graph: &LabelledGraph) -> String {
        let mut s = String::new();
        for (v, exps) in self.g.iter().enumerate() {
            let _ = writeln!(s, "g {} {}", graph.vertices()[v], format_signed_monomial(graph.basis(), exps));
        }
        for (e, d) in self.delta.iter().enumerate() {
            if let Some(d) = d {
                let _ = writeln!(s, "delta {} {}", graph.edges()[e].id, d);
            }
        }
        s
    }
}

impl std::ops::Add for &GlobalDivisor {
    type Output = GlobalDivisor;
    fn add(self, other: &GlobalDivisor) -> GlobalDivisor {
        GlobalDivisor {
            g: self.g.iter().zip(&other.g).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect(),
            delta: self
                .delta
                .iter()
                .zip(&other.delta)
                .map(|(a, b)| match (a, b) {
                    (Some(x), Some(y)) => Some(x + y),
                    _ => None,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

/// A signed summand `±div(a; H)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DivPiece {
    pub a: Monomial,
    /// Vertex indices, ascending.
    pub vertices: Vec<usize>,
    pub sign: Sign,
}

impl DivPiece {
    pub fn divisor(&self, graph: &LabelledGraph) -> Result<GlobalDivisor, CartierError> {
        let d = make_div(graph, &Label::Mono(self.a.clone()), &self.vertices)?;
        Ok(match self.sign {
            Sign::Positive => d,
            Sign::Negative => d.negated(),
        })
    }

    pub fn to_text(&self, graph: &LabelledGraph) -> String {
        let names: Vec<&str> = self.vertices.iter().map(|&v| graph.vertices()[v].as_str()).collect();
        format!(
            "piece {} {} {}",
            if self.sign == Sign::Positive { '+' } else { '-' },
            Label::Mono(self.a.clone()).display(graph.basis()),
            names.join(",")
        )
    }
}

/// The divisor `div(a; H)`: `vec(a)` on `H`, zero elsewhere. Every edge
/// leaving `H` must carry a label some power of which is `(a)`.
pub fn make_div(graph: &LabelledGraph, a: &Label, h: &[usize]) -> Result<GlobalDivisor, CartierError> {
    let a = match a {
        Label::Zero => return Err(CartierError::ZeroElement),
        Label::Mono(m) if m.len() != graph.basis().len() => return Err(CartierError::BasisMismatch),
        Label::Mono(m) if m.is_unit() => return Err(CartierError::UnitElement),
        Label::Mono(m) => m,
    };
    if h.is_empty() {
        return Err(CartierError::EmptyVertexSet);
    }
    let mut inside = vec![false; graph.vertex_count()];
    for &v in h {
        *inside.get_mut(v).ok_or_else(|| CartierError::UnknownVertex(v.to_string()))? = true;
    }
    let vec_a = a.signed();
    let k = vec_a.len();
    let g = inside.iter().map(|&i| if i { vec_a.clone() } else { vec![BigInt::zero(); k] }).collect();
    let mut delta = Vec::with_capacity(graph.edge_count());
    for (i, e) in graph.edges().iter().enumerate() {
        let (v, w) = graph.oriented_ends(i);
        if inside[v] == inside[w] {
            delta.push((!e.label.is_zero()).then(BigInt::zero));
            continue;
        }
        let multiple = e
            .label
            .as_mono()
            .and_then(|b| a.multiple_of(b))
            .ok_or_else(|| CartierError::NotAComponentUnion(e.id.clone()))?;
        let multiple = BigInt::from(multiple);
        delta.push(Some(if inside[v] { multiple } else { -multiple }));
    }
    Ok(GlobalDivisor { g, delta })
}

/// Vertex labelling of the pullback of `d` along the trait.
pub fn pullback(graph: &LabelledGraph, d: &GlobalDivisor, t: &TraitValuation) -> Result<VertexLabelling, CartierError> {
    if t.basis() != graph.basis() {
        return Err(CartierError::BasisMismatch);
    }
    if !d.is_valid(graph) {
        return Err(CartierError::Postcondition("divisor violates its edge relations".into()));
    }
    let m = VertexLabelling { values: d.g.iter().map(|x| t.dot_signed(x)).collect() };
    if !is_t_cartier(graph, t, &m)?.is_t_cartier() {
        return Err(CartierError::Postcondition("pullback is not T-Cartier".into()));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Realization {
    Realizable(GlobalDivisor),
    NotRealizable,
}

impl Realization {
    pub fn divisor(&self) -> Option<&GlobalDivisor> {
        match self {
            Realization::Realizable(d) => Some(d),
            Realization::NotRealizable => None,
        }
    }

    pub fn is_realizable(&self) -> bool {
        matches!(self, Realization::Realizable(_))
    }
}

fn check_realize_inputs(
    g: &LabelledGraph,
    t: &TraitValuation,
    m: &VertexLabelling,
    v0: usize,
) -> Result<(), CartierError> {
    m.check_total(g)?;
    if v0 >= g.vertex_count() {
        return Err(CartierError::UnknownVertex(v0.to_string()));
    }
    if !m.get(v0).is_zero() {
        return Err(CartierError::BaseVertexNonzero);
    }
    if !is_t_cartier(g, t, m)?.is_t_cartier() {
        return Err(CartierError::NotTCartier);
    }
    Ok(())
}

/// Breadth-first spanning tree from `root`, neighbours taken in edge-id
/// order. Returns the discovery order and each vertex's tree edge.
fn bfs_tree(g: &LabelledGraph, root: usize) -> (Vec<usize>, Vec<Option<usize>>) {
    let mut inc = g.incidence();
    for list in &mut inc {
        list.sort_by(|&a, &b| g.edges()[a].id.cmp(&g.edges()[b].id));
    }
    let mut parent_edge = vec![None; g.vertex_count()];
    let mut seen = vec![false; g.vertex_count()];
    let mut order = vec![root];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &e in &inc[u] {
            let w = g.edges()[e].other(u);
            if !seen[w] {
                seen[w] = true;
                parent_edge[w] = Some(e);
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    (order, parent_edge)
}

/// Decides whether `m` is the pullback of a global divisor vanishing at
/// `v0`, and returns one if so.
///
/// The vertex vectors are eliminated along a breadth-first spanning tree,
/// leaving an integer system in the edge multipliers: `k` rows per
/// non-tree edge for its cycle relation and one row per vertex for the
/// trait pairing. The system is solved exactly through Smith normal form.
pub fn realize(
    g: &LabelledGraph,
    t: &TraitValuation,
    m: &VertexLabelling,
    v0: usize,
) -> Result<Realization, CartierError> {
    check_realize_inputs(g, t, m, v0)?;
    let k = g.basis().len();
    let mut var_of_edge: Vec<Option<usize>> = vec![None; g.edge_count()];
    let mut nvars = 0;
    for (i, e) in g.edges().iter().enumerate() {
        if !e.is_loop() && !e.label.is_zero() {
            var_of_edge[i] = Some(nvars);
            nvars += 1;
        }
    }
    let signed_labels: Vec<Option<Vec<BigInt>>> =
        g.edges().iter().map(|e| e.label.as_mono().map(Monomial::signed)).collect();
    let (order, parent_edge) = bfs_tree(g, v0);
    if order.len() != g.vertex_count() {
        return Err(CartierError::Postcondition("graph is disconnected".into()));
    }

    // forms[v][i][j]: coefficient of variable j in coordinate i of g(v)
    let mut forms: Vec<Vec<Vec<BigInt>>> = vec![Vec::new(); g.vertex_count()];
    forms[v0] = vec![vec![BigInt::zero(); nvars]; k];
    for &w in &order[1..] {
        let e = parent_edge[w].expect("non-root vertices have a tree edge");
        let u = g.edges()[e].other(w);
        let mut form = forms[u].clone();
        if let (Some(j), Some(vec_b)) = (var_of_edge[e], &signed_labels[e]) {
            // g(first) - g(second) = delta * vec(b)
            let sign = if g.oriented_ends(e).0 == u { -BigInt::one() } else { BigInt::one() };
            for (row, b) in form.iter_mut().zip(vec_b) {
                row[j] += &sign * b;
            }
        }
        forms[w] = form;
    }

    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    let mut rhs: Vec<BigInt> = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        if e.is_loop() || parent_edge[e.ends.0] == Some(i) || parent_edge[e.ends.1] == Some(i) {
            continue;
        }
        let (v, w) = g.oriented_ends(i);
        for c in 0..k {
            let mut row: Vec<BigInt> = forms[v][c].iter().zip(&forms[w][c]).map(|(x, y)| x - y).collect();
            if let (Some(j), Some(vec_b)) = (var_of_edge[i], &signed_labels[i]) {
                row[j] -= &vec_b[c];
            }
            if row.iter().any(|x| !x.is_zero()) {
                rows.push(row);
                rhs.push(BigInt::zero());
            }
        }
    }
    for v in 0..g.vertex_count() {
        if v == v0 {
            continue;
        }
        let row: Vec<BigInt> = (0..nvars)
            .map(|j| forms[v].iter().zip(t.orders()).map(|(coords, o)| &coords[j] * BigInt::from(o.clone())).sum())
            .collect();
        rows.push(row);
        rhs.push(m.get(v).clone());
    }
    if rows.is_empty() {
        return finish_realization(
            g,
            t,
            m,
            divisor_from_solution(g, &forms, &var_of_edge, &vec![BigInt::zero(); nvars]),
        );
    }
    let a = IntMatrix::from_rows(rows);
    let Some(x) = solve_integer_system(&a, &rhs) else {
        return Ok(Realization::NotRealizable);
    };
    finish_realization(g, t, m, divisor_from_solution(g, &forms, &var_of_edge, &x))
}

fn divisor_from_solution(
    g: &LabelledGraph,
    forms: &[Vec<Vec<BigInt>>],
    var_of_edge: &[Option<usize>],
    x: &[BigInt],
) -> GlobalDivisor {
    let gv =
        forms.iter().map(|form| form.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()).collect();
    let delta = g
        .edges()
        .iter()
        .zip(var_of_edge)
        .map(|(e, var)| match (e.label.is_zero(), var) {
            (true, _) => None,
            (false, Some(j)) => Some(x[*j].clone()),
            (false, None) => Some(BigInt::zero()),
        })
        .collect();
    GlobalDivisor { g: gv, delta }
}

fn finish_realization(
    g: &LabelledGraph,
    t: &TraitValuation,
    m: &VertexLabelling,
    d: GlobalDivisor,
) -> Result<Realization, CartierError> {
    if !d.is_valid(g) {
        return Err(CartierError::Postcondition("solution violates an edge relation".into()));
    }
    if pullback(g, &d, t)? != *m {
        return Err(CartierError::Postcondition("solution does not pull back to the labelling".into()));
    }
    Ok(Realization::Realizable(d))
}

/// Brute-force realizability: backtracking over every multiplier in
/// `[-bound, bound]`, propagating vertex vectors along a spanning tree and
/// checking each cycle and trait constraint as soon as it closes.
pub fn realize_oracle(
    g: &LabelledGraph,
    t: &TraitValuation,
    m: &VertexLabelling,
    v0: usize,
    bound: u32,
) -> Result<Realization, CartierError> {
    check_realize_inputs(g, t, m, v0)?;
    let (order, parent_edge) = bfs_tree(g, v0);
    let mut edges: Vec<usize> = order[1..].iter().filter_map(|&w| parent_edge[w]).collect();
    let tree: BTreeSet<usize> = edges.iter().copied().collect();
    edges.extend(g.edges_by_id().into_iter().filter(|e| !tree.contains(e)));

    let mut state = OracleState {
        g,
        t,
        m,
        bound: i64::from(bound),
        vectors: vec![None; g.vertex_count()],
        delta: vec![None; g.edge_count()],
    };
    state.vectors[v0] = Some(vec![BigInt::zero(); g.basis().len()]);
    if !state.search(&edges) {
        return Ok(Realization::NotRealizable);
    }
    let d = GlobalDivisor {
        g: state.vectors.into_iter().map(|x| x.expect("spanning tree reaches every vertex")).collect(),
        delta: state.delta,
    };
    Ok(Realization::Realizable(d))
}

struct OracleState<'a> {
    g: &'a LabelledGraph,
    t: &'a TraitValuation,
    m: &'a VertexLabelling,
    bound: i64,
    vectors: Vec<Option<Vec<BigInt>>>,
    delta: Vec<Option<BigInt>>,
}

impl OracleState<'_> {
    fn search(&mut self, edges: &[usize]) -> bool {
        let Some((&e, rest)) = edges.split_first() else { return true };
        let (v, w) = self.g.oriented_ends(e);
        let label = &self.g.edges()[e].label;
        let Some(b) = label.as_mono() else {
            return self.try_assign(e, v, w, None, rest);
        };
        let b = b.signed();
        for d in -self.bound..=self.bound {
            let d = BigInt::from(d);
            let step: Vec<BigInt> = b.iter().map(|x| x * &d).collect();
            if self.try_assign(e, v, w, Some((d, step)), rest) {
                return true;
            }
        }
        false
    }

    /// Imposes `g(v) - g(w) = step` (or equality for zero labels) and
    /// recurses on the remaining edges.
    fn try_assign(
        &mut self,
        e: usize,
        v: usize,
        w: usize,
        choice: Option<(BigInt, Vec<BigInt>)>,
        rest: &[usize],
    ) -> bool {
        let k = self.g.basis().len();
        let (d, step) = match choice {
            Some((d, step)) => (Some(d), step),
            None => (None, vec![BigInt::zero(); k]),
        };
        let mut assigned = None;
        match (self.vectors[v].clone(), self.vectors[w].clone()) {
            (Some(gv), Some(gw)) => {
                if gv.iter().zip(&gw).zip(&step).any(|((x, y), s)| x - y != *s) {
                    return false;
                }
            }
            (Some(gv), None) => {
                let gw: Vec<BigInt> = gv.iter().zip(&step).map(|(x, s)| x - s).collect();
                if self.t.dot_signed(&gw) != *self.m.get(w) {
                    return false;
                }
                self.vectors[w] = Some(gw);
                assigned = Some(w);
            }
            (None, Some(gw)) => {
                let gv: Vec<BigInt> = gw.iter().zip(&step).map(|(x, s)| x + s).collect();
                if self.t.dot_signed(&gv) != *self.m.get(v) {
                    return false;
                }
                self.vectors[v] = Some(gv);
                assigned = Some(v);
            }
            (None, None) => unreachable!("edges are visited in spanning-tree order"),
        }
        self.delta[e] = d;
        if self.search(rest) {
            return true;
        }
        self.delta[e] = None;
        if let Some(x) = assigned {
            self.vectors[x] = None;
        }
        false
    }
}

/// Writes a T-Cartier labelling on an aligned graph as a signed sum of
/// `div(a; H)` pieces, none of which touches `v0`.
///
/// Each power class `α` of edge labels is visited in decreasing trait
/// order. For each exponent `s` in the lcm-closure of the class's edge
/// powers, the vertex sets `H` are the components of the graph with the
/// edges `α^n`, `n | s`, removed; a component on which the residual is a
/// constant multiple of `s·ord(α)` is peeled off as one piece. Whatever
/// remains is solved exactly over all such `(α^s, H)` generators.
pub fn decompose(
    g: &LabelledGraph,
    t: &TraitValuation,
    m: &VertexLabelling,
    v0: usize,
) -> Result<Vec<DivPiece>, CartierError> {
    check_realize_inputs(g, t, m, v0)?;
    if !is_aligned(g).is_aligned() {
        return Err(CartierError::NotAligned);
    }

    let gens = piece_generators(g, t, v0);
    let mut residual: Vec<BigInt> = m.values().to_vec();
    let mut pieces = Vec::new();
    for gen in &gens {
        let first = &residual[gen.vertices[0]];
        if first.is_zero() || gen.vertices.iter().any(|&v| residual[v] != *first) {
            continue;
        }
        let (x, rem) = first.div_rem(&gen.weight);
        if !rem.is_zero() {
            continue;
        }
        for &v in &gen.vertices {
            residual[v] = BigInt::zero();
        }
        pieces.push(gen.scaled_piece(&x));
    }

    if residual.iter().any(|r| !r.is_zero()) {
        let rows: Vec<Vec<BigInt>> = (0..g.vertex_count())
            .map(|v| {
                gens.iter()
                    .map(|gen| if gen.vertices.binary_search(&v).is_ok() { gen.weight.clone() } else { BigInt::zero() })
                    .collect()
            })
            .collect();
        let x = solve_integer_system(&IntMatrix::from_rows(rows), &residual)
            .ok_or_else(|| CartierError::Postcondition("no integer combination of pieces".into()))?;
        for (gen, xi) in gens.iter().zip(&x) {
            if !xi.is_zero() {
                pieces.push(gen.scaled_piece(xi));
            }
        }
    }

    if let Some(merged) = merge_pieces(g, &pieces) {
        pieces = merged;
    }

    let mut total = GlobalDivisor::zero(g);
    for p in &pieces {
        total = &total + &p.divisor(g)?;
    }
    if pullback(g, &total, t)? != *m {
        return Err(CartierError::Postcondition("pieces do not pull back to the labelling".into()));
    }
    Ok(pieces)
}

/// Sums pieces sharing a primitive class and vertex set. `None` if a merged piece
/// is not a global divisor on its own.
fn merge_pieces(g: &LabelledGraph, pieces: &[DivPiece]) -> Option<Vec<DivPiece>> {
    let mut acc: Vec<(Monomial, Vec<usize>, BigInt)> = Vec::new();
    for p in pieces {
        let (alpha, n) = (p.a.primitive(), BigInt::from(p.a.gcd()));
        let c = match p.sign {
            Sign::Positive => n,
            Sign::Negative => -n,
        };
        match acc.iter_mut().find(|(a, vs, _)| *a == alpha && *vs == p.vertices) {
            Some(slot) => slot.2 += c,
            None => acc.push((alpha, p.vertices.clone(), c)),
        }
    }
    let merged: Vec<DivPiece> = acc
        .into_iter()
        .filter(|(_, _, c)| !c.is_zero())
        .map(|(alpha, vertices, c)| DivPiece {
            a: alpha.scaled(c.magnitude()),
            vertices,
            sign: if c.is_negative() { Sign::Negative } else { Sign::Positive },
        })
        .collect();
    merged.iter().all(|p| p.divisor(g).is_ok()).then_some(merged)
}

struct PieceGenerator {
    primitive: Monomial,
    power: BigUint,
    vertices: Vec<usize>,
    /// `power * ord(primitive)`, the pullback value on `vertices`.
    weight: BigInt,
}

impl PieceGenerator {
    fn scaled_piece(&self, x: &BigInt) -> DivPiece {
        DivPiece {
            a: self.primitive.scaled(&(&self.power * x.magnitude())),
            vertices: self.vertices.clone(),
            sign: if x.is_negative() { Sign::Negative } else { Sign::Positive },
        }
    }
}

/// Keeps the closure from blowing up on adversarial exponent sets.
const MAX_POWERS_PER_CLASS: usize = 4096;

fn piece_generators(g: &LabelledGraph, t: &TraitValuation, v0: usize) -> Vec<PieceGenerator> {
    let mut classes: Vec<(BigUint, Monomial, Vec<(usize, BigUint)>)> = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        let PowerClass::Primitive(alpha) = e.label.class() else { continue };
        let n = e.label.as_mono().expect("primitive class is monomial").gcd();
        match classes.iter_mut().find(|(_, a, _)| *a == alpha) {
            Some((_, _, members)) => members.push((i, n)),
            None => classes.push((t.dot(alpha.exponents()), alpha, vec![(i, n)])),
        }
    }
    classes.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));

    let mut out = Vec::new();
    for (ord, alpha, members) in classes {
        let mut powers: BTreeSet<BigUint> = members.iter().map(|(_, n)| n.clone()).collect();
        loop {
            let current: Vec<BigUint> = powers.iter().cloned().collect();
            let before = powers.len();
            for (i, a) in current.iter().enumerate() {
                for b in &current[i + 1..] {
                    if powers.len() < MAX_POWERS_PER_CLASS {
                        powers.insert(a.lcm(b));
                    }
                }
            }
            if powers.len() == before {
                break;
            }
        }
        for s in powers.iter().rev() {
            let removed: BTreeSet<usize> = members.iter().filter(|(_, n)| (s % n).is_zero()).map(|(i, _)| *i).collect();
            let (comp, count) = g.components_where(|e| !removed.contains(&e));
            let weight = BigInt::from(s * &ord);
            for c in 0..count {
                if comp[v0] == c {
                    continue;
                }
                let vertices: Vec<usize> = (0..g.vertex_count()).filter(|&v| comp[v] == c).collect();
                out.push(PieceGenerator {
                    primitive: alpha.clone(),
                    power: s.clone(),
                    vertices,
                    weight: weight.clone(),
                });
            }
        }
    }
    out
}

/// The obstruction labelling `d · 1_v` for a non-aligned graph, where `v`
/// starts the witness cycle and `d` multiplies the trait orders of all
/// distinct edge labels. It is T-Cartier but has no global realization.
pub fn witness_divisor(
    g: &LabelledGraph,
    t: &TraitValuation,
    report: &AlignmentReport,
) -> Result<VertexLabelling, CartierError> {
    let Some(w) = &report.witness else {
        return Err(CartierError::GraphIsAligned);
    };
    let ords = edge_orders(g, t)?;
    let mut seen: Vec<&Label> = Vec::new();
    let mut d = BigUint::one();
    for (e, o) in g.edges().iter().zip(&ords) {
        if seen.contains(&&e.label) {
            continue;
        }
        seen.push(&e.label);
        match o {
            Order::Finite(o) => d *= o,
            Order::Infinite => return Err(CartierError::InfiniteOrd),
        }
    }
    let mut values = vec![BigInt::zero(); g.vertex_count()];
    values[w.cycle.vertices[0]] = BigInt::from(d);
    Ok(VertexLabelling { values })
}

/// A vertex where the witness labelling vanishes, for use as the base of
/// [`realize`]: the second vertex of the witness cycle, or the first vertex
/// off the cycle start.
pub fn witness_base(g: &LabelledGraph, report: &AlignmentReport) -> Option<usize> {
    let w = report.witness.as_ref()?;
    let pivot = w.cycle.vertices[0];
    w.cycle.vertices.get(1).copied().or_else(|| (0..g.vertex_count()).find(|&v| v != pivot))
}
