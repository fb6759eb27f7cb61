//! Hierarchical simplification and segmentation of grayscale images by selecting salient
//! level lines in the tree of shapes.

pub mod energy;
pub mod error;
pub mod eval;
pub mod hierarchy;
pub mod image;
pub mod khalimsky;
pub mod pipeline;
pub mod tree;
mod uf;

pub use error::{Error, Result};
