//! Hierarchical image segmentation from an entropy-driven quadtree.
//!
//! An image is split top-down until each window's luminance entropy fits a
//! dominant-plus-noise model, leaf regions are composed bottom-up with
//! boundaries weighted by scale and color similarity, and the weighted
//! boundaries become a binary tree that can be cut at any level of detail.

pub mod cli;
pub mod compose;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod filters;
pub mod leafseg;
pub mod pbt;
pub mod pipeline;
pub mod quadtree;
pub mod raster;
pub mod synthetic;
mod unionfind;

pub use compose::{compose, ComposeParams, RegionGraph};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalConfig, EvalReport};
pub use filters::FilterParams;
pub use pbt::{build_pbt, Pbt, SegmentGrouping};
pub use pipeline::{Params, Segmentation};
pub use quadtree::{decompose, DecompParams, DecompositionTree};
pub use raster::{LabelMap, Raster, Window};
