//! Specialisation maps: passing from the closed point to a generization
//! contracts every edge whose label becomes a unit and restricts the
//! labels of the surviving edges.

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{DisjointSets, LabelledGraph};
use crate::labels::{Label, LabelError, PrimeBasis};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecializationError {
    #[error("generization is over a different basis than the graph")]
    BasisMismatch,
    #[error("unknown prime `{0}`")]
    UnknownPrime(String),
    #[error("zero-labelled edges cannot survive over an empty basis")]
    EmptyBasisTarget,
    #[error("target of the first morphism is not the source of the second")]
    TargetSourceMismatch,
}

impl From<LabelError> for SpecializationError {
    fn from(_: LabelError) -> Self {
        SpecializationError::BasisMismatch
    }
}

/// A generization of the closed point, recorded by the basis primes that
/// still vanish there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generization {
    ambient: PrimeBasis,
    kept: Vec<usize>,
    target: PrimeBasis,
}

impl Generization {
    pub fn new<S: AsRef<str>>(ambient: PrimeBasis, kept: &[S]) -> Result<Self, SpecializationError> {
        let mut idx = Vec::with_capacity(kept.len());
        for name in kept {
            let name = name.as_ref();
            let i = ambient.index_of(name).ok_or_else(|| SpecializationError::UnknownPrime(name.to_string()))?;
            idx.push(i);
        }
        idx.sort_unstable();
        idx.dedup();
        Ok(Self::from_indices(ambient, idx))
    }

    pub fn from_indices(ambient: PrimeBasis, mut kept: Vec<usize>) -> Self {
        kept.sort_unstable();
        kept.dedup();
        kept.retain(|&i| i < ambient.len());
        let target = ambient.subset(&kept);
        Generization { ambient, kept, target }
    }

    /// The closed point itself.
    pub fn identity(ambient: PrimeBasis) -> Self {
        let all = (0..ambient.len()).collect();
        Self::from_indices(ambient, all)
    }

    pub fn ambient(&self) -> &PrimeBasis {
        &self.ambient
    }

    /// Ascending indices of the kept primes in the ambient basis.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn target(&self) -> &PrimeBasis {
        &self.target
    }
}

/// Image of an edge under a graph morphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeImage {
    Edge(usize),
    Vertex(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMorphism {
    pub source: LabelledGraph,
    pub target: LabelledGraph,
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<EdgeImage>,
}

impl GraphMorphism {
    pub fn identity(g: &LabelledGraph) -> Self {
        GraphMorphism {
            source: g.clone(),
            target: g.clone(),
            vertex_map: (0..g.vertex_count()).collect(),
            edge_map: (0..g.edge_count()).map(EdgeImage::Edge).collect(),
        }
    }

    /// Incidence compatibility, surjectivity on vertices, and bijectivity
    /// onto target edges.
    pub fn is_well_formed(&self) -> bool {
        let (s, t) = (&self.source, &self.target);
        if self.vertex_map.len() != s.vertex_count() || self.edge_map.len() != s.edge_count() {
            return false;
        }
        if self.vertex_map.iter().any(|&v| v >= t.vertex_count()) {
            return false;
        }
        let mut hit_v = vec![false; t.vertex_count()];
        for &v in &self.vertex_map {
            hit_v[v] = true;
        }
        if hit_v.contains(&false) {
            return false;
        }
        let mut hit_e = vec![0usize; t.edge_count()];
        for (e, img) in self.edge_map.iter().enumerate() {
            let (a, b) = s.edges()[e].ends;
            let (fa, fb) = (self.vertex_map[a], self.vertex_map[b]);
            match *img {
                EdgeImage::Vertex(u) => {
                    if fa != u || fb != u {
                        return false;
                    }
                }
                EdgeImage::Edge(f) => {
                    let Some(te) = t.edges().get(f) else { return false };
                    if te.ends != (fa, fb) && te.ends != (fb, fa) {
                        return false;
                    }
                    hit_e[f] += 1;
                }
            }
        }
        hit_e.iter().all(|&c| c == 1)
    }

    /// `v src -> dst` and `e src -> e dst | v dst` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (v, &img) in self.vertex_map.iter().enumerate() {
            let _ = writeln!(s, "v {} -> {}", self.source.vertices()[v], self.target.vertices()[img]);
        }
        for (e, img) in self.edge_map.iter().enumerate() {
            let src = &self.source.edges()[e].id;
            match *img {
                EdgeImage::Edge(f) => {
                    let _ = writeln!(s, "e {src} -> e {}", self.target.edges()[f].id);
                }
                EdgeImage::Vertex(u) => {
                    let _ = writeln!(s, "e {src} -> v {}", self.target.vertices()[u]);
                }
            }
        }
        s
    }
}

/// Contracts edges whose labels become units at `q`; surviving edges keep
/// their ids and carry restricted labels. A merged vertex takes the least
/// id among its constituents; target vertices follow the source order of
/// their first constituent.
pub fn specialize(g: &LabelledGraph, q: &Generization) -> Result<(LabelledGraph, GraphMorphism), SpecializationError> {
    if q.ambient() != g.basis() {
        return Err(SpecializationError::BasisMismatch);
    }
    if q.kept().is_empty() && g.edges().iter().any(|e| e.label.is_zero()) {
        return Err(SpecializationError::EmptyBasisTarget);
    }
    let restricted: Vec<Label> = g.edges().iter().map(|e| e.label.restrict(q)).collect::<Result<_, _>>()?;

    let n = g.vertex_count();
    let mut dsu = DisjointSets::new(n);
    for (e, l) in g.edges().iter().zip(&restricted) {
        if l.is_unit() {
            dsu.union(e.ends.0, e.ends.1);
        }
    }
    let mut class_of_root = vec![usize::MAX; n];
    let mut vertex_map = vec![0; n];
    let mut names: Vec<String> = Vec::new();
    for v in 0..n {
        let r = dsu.find(v);
        if class_of_root[r] == usize::MAX {
            class_of_root[r] = names.len();
            names.push(g.vertices()[v].clone());
        }
        let c = class_of_root[r];
        vertex_map[v] = c;
        if g.vertices()[v] < names[c] {
            names[c] = g.vertices()[v].clone();
        }
    }

    let mut edges = Vec::new();
    let mut edge_map = Vec::with_capacity(g.edge_count());
    for (e, l) in g.edges().iter().zip(restricted) {
        let (a, b) = (vertex_map[e.ends.0], vertex_map[e.ends.1]);
        if l.is_unit() {
            edge_map.push(EdgeImage::Vertex(a));
        } else {
            edge_map.push(EdgeImage::Edge(edges.len()));
            edges.push((e.id.clone(), names[a].clone(), names[b].clone(), l));
        }
    }
    let target = LabelledGraph::from_parts(q.target().clone(), names, edges)
        .expect("contraction of a well-formed graph is well-formed");
    let morphism = GraphMorphism { source: g.clone(), target: target.clone(), vertex_map, edge_map };
    Ok((target, morphism))
}

/// `m2 ∘ m1`.
pub fn compose(m2: &GraphMorphism, m1: &GraphMorphism) -> Result<GraphMorphism, SpecializationError> {
    if m1.target != m2.source {
        return Err(SpecializationError::TargetSourceMismatch);
    }
    let vertex_map = m1.vertex_map.iter().map(|&v| m2.vertex_map[v]).collect();
    let edge_map = m1
        .edge_map
        .iter()
        .map(|img| match *img {
            EdgeImage::Vertex(u) => EdgeImage::Vertex(m2.vertex_map[u]),
            EdgeImage::Edge(f) => m2.edge_map[f],
        })
        .collect();
    Ok(GraphMorphism { source: m1.source.clone(), target: m2.target.clone(), vertex_map, edge_map })
}
