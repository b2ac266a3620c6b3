//! Low-distortion Euclidean embeddings of finite metric spaces and an
//! SDP-based sparsest cut approximation, built from random padded
//! decompositions, random zero sets, single-scale Frechet maps, and
//! measured-descent gluing.

pub mod cut;
pub mod decomp;
pub mod embed;
pub mod gen;
pub mod glue;
pub mod io;
mod linalg;
pub mod metric;
pub mod sdp;
pub mod seeds;
