//! Spectral toolkit for quantum graphs: eigenpairs of `-d²/dx²` with δ-type vertex
//! conditions, nodal counts, the energy functional on equipartitions and its
//! Morse theory.

pub mod bundled;
pub mod graph;
pub mod interlacing;
pub mod morse;
pub mod par;
pub mod partition;
pub mod spectral;
