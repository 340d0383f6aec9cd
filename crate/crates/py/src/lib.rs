//! Python bindings, importable as `neron`.
//!
//! Graphs are immutable `Graph` objects. Traits are given as `"p=1,q=2"` or
//! as a dict from prime to order, labellings as a dict from vertex id to
//! integer.

use std::collections::HashMap;

use neron_core::cli::export_dot;
use neron_core::{
    decompose, is_aligned, is_t_cartier, make_div, neron_verdict, parse_graph, pullback, realize, specialize,
    witness_base, witness_divisor, AlignmentReport, ChartModel, EdgeImage, Generization, GlobalDivisor, Label,
    LabelledGraph, PrimeBasis, Realization, Sign, TraitValuation, VertexLabelling,
};
use num_bigint::{BigInt, BigUint};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyString;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Graph", module = "neron", frozen)]
struct PyGraph {
    inner: LabelledGraph,
}

#[pymethods]
impl PyGraph {
    /// `Graph(primes, vertices, edges)` with edges as `(id, a, b, label)`.
    #[new]
    fn new(primes: Vec<String>, vertices: Vec<String>, edges: Vec<(String, String, String, String)>) -> PyResult<Self> {
        let basis = PrimeBasis::new(primes).map_err(value_error)?;
        let mut parsed = Vec::with_capacity(edges.len());
        for (id, a, b, l) in edges {
            let label = Label::parse(&l, &basis).map_err(|e| value_error(format!("edge `{id}`: {e}")))?;
            parsed.push((id, a, b, label));
        }
        let inner = LabelledGraph::new(basis, vertices, parsed).map_err(value_error)?;
        Ok(PyGraph { inner })
    }

    /// Parses and validates the text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = parse_graph(text).map_err(value_error)?;
        if let Some(v) = inner.validate().into_iter().next() {
            return Err(value_error(v.into_error()));
        }
        Ok(PyGraph { inner })
    }

    #[getter]
    fn primes(&self) -> Vec<String> {
        self.inner.basis().names().to_vec()
    }

    #[getter]
    fn vertices(&self) -> Vec<String> {
        self.inner.vertices().to_vec()
    }

    #[getter]
    fn edges(&self) -> Vec<(String, String, String, String)> {
        let g = &self.inner;
        g.edges()
            .iter()
            .map(|e| {
                let (a, b) = e.ends;
                (e.id.clone(), g.vertices()[a].clone(), g.vertices()[b].clone(), e.label.display(g.basis()).to_string())
            })
            .collect()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn is_aligned(&self) -> PyAlignment {
        PyAlignment::new(&self.inner, &is_aligned(&self.inner))
    }

    /// Whether the jacobian admits a Néron model.
    fn neron_model_exists(&self) -> bool {
        neron_verdict(&self.inner).model_exists()
    }

    /// Specialisation keeping the named primes. Returns the target graph,
    /// the vertex map and the edge map; an edge maps to `("edge", id)` or,
    /// when contracted, to `("vertex", id)`.
    #[allow(clippy::type_complexity)]
    fn specialize(
        &self,
        keep: Vec<String>,
    ) -> PyResult<(PyGraph, HashMap<String, String>, HashMap<String, (&'static str, String)>)> {
        let g = &self.inner;
        let q = Generization::new(g.basis().clone(), &keep).map_err(value_error)?;
        let (target, m) = specialize(g, &q).map_err(value_error)?;
        let vertex_map =
            g.vertices().iter().zip(&m.vertex_map).map(|(v, &w)| (v.clone(), target.vertices()[w].clone())).collect();
        let edge_map = g
            .edges()
            .iter()
            .zip(&m.edge_map)
            .map(|(e, image)| {
                let image = match *image {
                    EdgeImage::Edge(j) => ("edge", target.edges()[j].id.clone()),
                    EdgeImage::Vertex(v) => ("vertex", target.vertices()[v].clone()),
                };
                (e.id.clone(), image)
            })
            .collect();
        Ok((PyGraph { inner: target }, vertex_map, edge_map))
    }

    #[pyo3(signature = (labelling = None))]
    fn to_dot(&self, labelling: Option<HashMap<String, BigInt>>) -> PyResult<String> {
        let m = labelling.map(|l| to_labelling(&self.inner, l)).transpose()?;
        Ok(export_dot(&self.inner, m.as_ref()))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Graph({} vertices, {} edges)", self.inner.vertex_count(), self.inner.edge_count())
    }
}

#[pyclass(name = "Alignment", module = "neron", frozen, get_all)]
struct PyAlignment {
    aligned: bool,
    /// Two edges that are not power-equivalent, on a common cycle.
    pair: Option<(String, String)>,
    cycle_edges: Option<Vec<String>>,
    cycle_vertices: Option<Vec<String>>,
    blocks: Vec<Vec<String>>,
}

impl PyAlignment {
    fn new(g: &LabelledGraph, r: &AlignmentReport) -> Self {
        let edge = |i: &usize| g.edges()[*i].id.clone();
        PyAlignment {
            aligned: r.is_aligned(),
            pair: r.witness.as_ref().map(|w| (edge(&w.pair.0), edge(&w.pair.1))),
            cycle_edges: r.witness.as_ref().map(|w| w.cycle.edges.iter().map(edge).collect()),
            cycle_vertices: r
                .witness
                .as_ref()
                .map(|w| w.cycle.vertices.iter().map(|&v| g.vertices()[v].clone()).collect()),
            blocks: r.blocks.iter().map(|b| b.iter().map(edge).collect()).collect(),
        }
    }
}

#[pymethods]
impl PyAlignment {
    fn __bool__(&self) -> bool {
        self.aligned
    }

    fn __repr__(&self) -> String {
        match &self.pair {
            None => "Alignment(aligned)".into(),
            Some((a, b)) => format!("Alignment(not aligned, pair=({a}, {b}))"),
        }
    }
}

/// A global divisor on a fixed graph.
#[pyclass(name = "Divisor", module = "neron", frozen)]
struct PyDivisor {
    graph: LabelledGraph,
    inner: GlobalDivisor,
}

#[pymethods]
impl PyDivisor {
    /// Exponent vector per vertex, in basis order.
    #[getter]
    fn g(&self) -> HashMap<String, Vec<BigInt>> {
        self.graph.vertices().iter().cloned().zip(self.inner.g.iter().cloned()).collect()
    }

    /// Edge multipliers; `None` on zero-labelled edges.
    #[getter]
    fn delta(&self) -> HashMap<String, Option<BigInt>> {
        self.graph.edges().iter().map(|e| e.id.clone()).zip(self.inner.delta.iter().cloned()).collect()
    }

    fn is_valid(&self) -> bool {
        self.inner.is_valid(&self.graph)
    }

    fn pullback(&self, t: &Bound<'_, PyAny>) -> PyResult<HashMap<String, BigInt>> {
        let t = to_trait(&self.graph, t)?;
        let m = pullback(&self.graph, &self.inner, &t).map_err(value_error)?;
        Ok(from_labelling(&self.graph, &m))
    }

    fn to_text(&self) -> String {
        self.inner.to_text(&self.graph)
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        if self.graph != other.graph {
            return Err(value_error("divisors live on different graphs"));
        }
        Ok(PyDivisor { graph: self.graph.clone(), inner: &self.inner + &other.inner })
    }

    fn __neg__(&self) -> Self {
        PyDivisor { graph: self.graph.clone(), inner: self.inner.negated() }
    }

    fn __repr__(&self) -> String {
        format!("Divisor({})", self.inner.to_text(&self.graph).trim_end().replace('\n', "; "))
    }
}

fn to_trait(g: &LabelledGraph, t: &Bound<'_, PyAny>) -> PyResult<TraitValuation> {
    if let Ok(s) = t.cast::<PyString>() {
        return TraitValuation::parse(s.to_str()?, g.basis()).map_err(value_error);
    }
    let mut ords: HashMap<String, BigUint> = t.extract()?;
    let mut values = Vec::with_capacity(g.basis().len());
    for p in g.basis().names() {
        values.push(ords.remove(p).ok_or_else(|| value_error(format!("missing order for prime `{p}`")))?);
    }
    if let Some(p) = ords.keys().next() {
        return Err(value_error(format!("unknown prime `{p}`")));
    }
    TraitValuation::new(g.basis().clone(), values).map_err(value_error)
}

fn to_labelling(g: &LabelledGraph, mut m: HashMap<String, BigInt>) -> PyResult<VertexLabelling> {
    let mut values = Vec::with_capacity(g.vertex_count());
    for v in g.vertices() {
        values.push(m.remove(v).ok_or_else(|| value_error(format!("vertex `{v}` is not labelled")))?);
    }
    if let Some(v) = m.keys().next() {
        return Err(value_error(format!("unknown vertex `{v}`")));
    }
    Ok(VertexLabelling::new(values))
}

fn from_labelling(g: &LabelledGraph, m: &VertexLabelling) -> HashMap<String, BigInt> {
    g.vertices().iter().cloned().zip(m.values().iter().cloned()).collect()
}

fn base_index(g: &LabelledGraph, base: Option<&str>) -> PyResult<usize> {
    match base {
        Some(id) => g.vertex(id).ok_or_else(|| value_error(format!("unknown vertex `{id}`"))),
        None => Ok(g.vertices_by_id()[0]),
    }
}

/// Edges along which `labelling` fails the T-Cartier condition.
#[pyfunction]
#[pyo3(name = "tcartier_violations")]
fn py_tcartier_violations(
    graph: &PyGraph,
    t: &Bound<'_, PyAny>,
    labelling: HashMap<String, BigInt>,
) -> PyResult<Vec<String>> {
    let g = &graph.inner;
    let report = is_t_cartier(g, &to_trait(g, t)?, &to_labelling(g, labelling)?).map_err(value_error)?;
    Ok(report.violations.iter().map(|&e| g.edges()[e].id.clone()).collect())
}

/// A global divisor vanishing at `base` whose pullback is `labelling`, or
/// `None` if there is none. `base` defaults to the least vertex id.
#[pyfunction]
#[pyo3(name = "realize", signature = (graph, t, labelling, base = None))]
fn py_realize(
    graph: &PyGraph,
    t: &Bound<'_, PyAny>,
    labelling: HashMap<String, BigInt>,
    base: Option<&str>,
) -> PyResult<Option<PyDivisor>> {
    let g = &graph.inner;
    let v0 = base_index(g, base)?;
    match realize(g, &to_trait(g, t)?, &to_labelling(g, labelling)?, v0).map_err(value_error)? {
        Realization::Realizable(d) => Ok(Some(PyDivisor { graph: g.clone(), inner: d })),
        Realization::NotRealizable => Ok(None),
    }
}

/// Signed pieces `(sign, label, vertices)` summing to a realization.
#[pyfunction]
#[pyo3(name = "decompose", signature = (graph, t, labelling, base = None))]
fn py_decompose(
    graph: &PyGraph,
    t: &Bound<'_, PyAny>,
    labelling: HashMap<String, BigInt>,
    base: Option<&str>,
) -> PyResult<Vec<(i8, String, Vec<String>)>> {
    let g = &graph.inner;
    let v0 = base_index(g, base)?;
    let pieces = decompose(g, &to_trait(g, t)?, &to_labelling(g, labelling)?, v0).map_err(value_error)?;
    Ok(pieces
        .into_iter()
        .map(|p| {
            let sign = if p.sign == Sign::Negative { -1 } else { 1 };
            let label = Label::Mono(p.a).display(g.basis()).to_string();
            (sign, label, p.vertices.iter().map(|&v| g.vertices()[v].clone()).collect())
        })
        .collect())
}

/// `div(a; H)` for a label `a` and a vertex set `H`.
#[pyfunction]
#[pyo3(name = "make_div")]
fn py_make_div(graph: &PyGraph, label: &str, vertices: Vec<String>) -> PyResult<PyDivisor> {
    let g = &graph.inner;
    let a = Label::parse(label, g.basis()).map_err(value_error)?;
    let h = vertices
        .iter()
        .map(|v| g.vertex(v).ok_or_else(|| value_error(format!("unknown vertex `{v}`"))))
        .collect::<PyResult<Vec<_>>>()?;
    let d = make_div(g, &a, &h).map_err(value_error)?;
    Ok(PyDivisor { graph: g.clone(), inner: d })
}

/// The obstruction labelling of a non-aligned graph and a base vertex at
/// which it vanishes.
#[pyfunction]
#[pyo3(name = "witness")]
fn py_witness(graph: &PyGraph, t: &Bound<'_, PyAny>) -> PyResult<(HashMap<String, BigInt>, String)> {
    let g = &graph.inner;
    let report = is_aligned(g);
    let m = witness_divisor(g, &to_trait(g, t)?, &report).map_err(value_error)?;
    let base = witness_base(g, &report).ok_or_else(|| value_error("graph has a single vertex"))?;
    Ok((from_labelling(g, &m), g.vertices()[base].clone()))
}

/// Coordinate subsets cutting out the r-strata of `x_1 ... x_l = b`.
#[pyfunction]
#[pyo3(name = "strata", signature = (l, r, n = None))]
fn py_strata(l: usize, r: usize, n: Option<usize>) -> PyResult<Vec<Vec<usize>>> {
    let chart = ChartModel::new(n.unwrap_or(l), l, Label::mono(&[1]))
        .ok_or_else(|| value_error(format!("need 1 <= l <= n, got l={l}")))?;
    Ok(chart.enumerate_strata(r))
}

#[pymodule]
#[pyo3(name = "neron")]
fn neron_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyAlignment>()?;
    m.add_class::<PyDivisor>()?;
    m.add_function(wrap_pyfunction!(py_tcartier_violations, m)?)?;
    m.add_function(wrap_pyfunction!(py_realize, m)?)?;
    m.add_function(wrap_pyfunction!(py_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(py_make_div, m)?)?;
    m.add_function(wrap_pyfunction!(py_witness, m)?)?;
    m.add_function(wrap_pyfunction!(py_strata, m)?)?;
    Ok(())
}
