//! Decompose, compose and build the probability tree in one call.

use serde::{Deserialize, Serialize};

use crate::compose::{compose, ComposeParams, RegionGraph};
use crate::error::Result;
use crate::pbt::{build_pbt, Pbt};
use crate::quadtree::{decompose, DecompParams, DecompositionTree};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Params {
    pub decomp: DecompParams,
    pub compose: ComposeParams,
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub tree: DecompositionTree,
    pub graph: RegionGraph,
    pub pbt: Pbt,
}

pub fn run(img: &Raster, params: &Params) -> Result<Segmentation> {
    params.decomp.validate()?;
    let tree = decompose(img, &params.decomp)?;
    let graph = compose(&tree, img, &params.compose)?;
    let pbt = build_pbt(&graph)?;
    Ok(Segmentation { tree, graph, pbt })
}
