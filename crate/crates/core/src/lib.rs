//! Feynman-category calculus for graphs: morphisms in the Borisov–Manin
//! category, decorations and restrictions, free operads, the odd graph
//! complex and the Hopf algebras of factorizations.

pub mod cli;
pub mod decorations;
pub mod free_operad;
pub mod graph;
pub mod hopf;
pub mod linear;
pub mod morphism_calculus;
pub mod odd_complex;
pub mod sweep;
