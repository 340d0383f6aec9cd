//! Labelled dual graphs of semistable degenerations.
//!
//! Edge labels are monomial ideals (or zero) over a fixed prime basis. The
//! crate decides alignment of a labelled graph, computes specialisation
//! maps, and works with vertex labellings and global Cartier divisors:
//! checking divisibility along a trait, realizing labellings as pullbacks,
//! decomposing them into elementary pieces, and producing the obstruction
//! labelling on non-aligned graphs.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod alignment;
pub mod cartier;
pub mod cli;
pub mod graph;
pub mod labels;
pub mod lattice;
pub mod specialization;

pub use alignment::{is_aligned, neron_verdict, AlignmentReport, Cycle, NeronVerdict, Verdict, Witness};
pub use cartier::{
    decompose, is_t_cartier, make_div, pullback, realize, realize_oracle, witness_base, witness_divisor, CartierError,
    DivPiece, GlobalDivisor, Realization, Sign, TCartierReport, VertexLabelling,
};
pub use graph::{build_dual_graph, parse_graph, ChartModel, Edge, GraphError, LabelledGraph, ParseError};
pub use labels::{Label, LabelError, Monomial, Order, PowerClass, PrimeBasis, TraitValuation};
pub use specialization::{compose, specialize, EdgeImage, Generization, GraphMorphism, SpecializationError};
