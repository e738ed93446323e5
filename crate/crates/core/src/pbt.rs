//! Probability binary tree over the initial segments.
//!
//! Boundaries are consumed in ascending confidence order; each one joins
//! the two current trees containing its segments under a new parent whose
//! child links carry that confidence. Higher nodes therefore always carry
//! link weights at least as large as the nodes below them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::compose::RegionGraph;
use crate::error::{Error, Result};
use crate::raster::{LabelMap, Raster};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbtNode {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<[usize; 2]>,
    /// Weight of the links from this node to its two children.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    /// Initial segment id for leaves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<usize>,
    /// Set on joins added to connect otherwise separate components.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub synthetic: bool,
    #[serde(skip)]
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pbt {
    pub segment_count: usize,
    pub root: usize,
    pub nodes: Vec<PbtNode>,
}

/// Weight reserved for joins between disconnected components.
pub const DISCONNECTED_WEIGHT: f64 = 1.0;

/// Builds the tree from the boundary confidences of a region graph.
pub fn build_pbt(graph: &RegionGraph) -> Result<Pbt> {
    Pbt::from_boundaries(graph.segment_count(), graph.confidences())
}

impl Pbt {
    /// Builds the tree over `n` segments from `(i, j, cnf)` boundaries.
    ///
    /// When merging leaves two entries for the same pair of trees, the
    /// smaller confidence survives. Ties in the ascending order break by
    /// the pair's ids.
    pub fn from_boundaries(
        n: usize,
        boundaries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Pbt> {
        if n == 0 {
            return Err(Error::InvalidArgument("a tree needs at least one segment".into()));
        }
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, c) in boundaries {
            if i == j || i >= n || j >= n || !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidArgument(format!(
                    "bad boundary ({i}, {j}, {c}) for {n} segments"
                )));
            }
            let e = pairs.entry((i.min(j), i.max(j))).or_insert(c);
            *e = e.min(c);
        }

        let mut nodes: Vec<PbtNode> = (0..n)
            .map(|i| PbtNode {
                id: i,
                children: None,
                weight: None,
                segment: Some(i),
                synthetic: false,
                parent: None,
            })
            .collect();
        // f64 bit patterns order like the values for non-negative numbers
        let order = |c: f64| (c + 0.0).to_bits();
        let mut queue: BTreeSet<(u64, usize, usize)> = BTreeSet::new();
        let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (&(i, j), &c) in &pairs {
            queue.insert((order(c), i, j));
            adj[i].insert(j, c);
            adj[j].insert(i, c);
        }

        while let Some((bits, i, j)) = queue.pop_first() {
            let w = f64::from_bits(bits);
            let new = nodes.len();
            nodes.push(PbtNode {
                id: new,
                children: Some([i, j]),
                weight: Some(w),
                segment: None,
                synthetic: false,
                parent: None,
            });
            nodes[i].parent = Some(new);
            nodes[j].parent = Some(new);
            adj.push(BTreeMap::new());
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for side in [i, j] {
                for (k, c) in std::mem::take(&mut adj[side]) {
                    if k == i || k == j {
                        continue;
                    }
                    adj[k].remove(&side);
                    queue.remove(&(order(c), side.min(k), side.max(k)));
                    let e = merged.entry(k).or_insert(c);
                    *e = e.min(c);
                }
            }
            for (k, c) in merged {
                adj[k].insert(new, c);
                adj[new].insert(k, c);
                queue.insert((order(c), k.min(new), k.max(new)));
            }
        }

        let mut roots: Vec<usize> = nodes
            .iter()
            .filter(|n| n.parent.is_none())
            .map(|n| n.id)
            .collect();
        while roots.len() > 1 {
            let (a, b) = (roots[0], roots[1]);
            let new = nodes.len();
            nodes.push(PbtNode {
                id: new,
                children: Some([a, b]),
                weight: Some(DISCONNECTED_WEIGHT),
                segment: None,
                synthetic: true,
                parent: None,
            });
            nodes[a].parent = Some(new);
            nodes[b].parent = Some(new);
            roots.splice(0..2, [new]);
        }
        Ok(Pbt {
            segment_count: n,
            root: roots[0],
            nodes,
        })
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_some()).count()
    }

    /// Depth of every node, root at 0.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            if let Some(kids) = self.nodes[u].children {
                for c in kids {
                    depth[c] = depth[u] + 1;
                    stack.push(c);
                }
            }
        }
        depth
    }

    /// Groups segments by descending from the root and splitting exactly the
    /// internal nodes selected by `split`.
    fn group_by(&self, split: impl Fn(&PbtNode) -> bool) -> SegmentGrouping {
        let mut group_of = vec![usize::MAX; self.segment_count];
        let mut count = 0;
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            let node = &self.nodes[u];
            match node.children {
                Some(kids) if split(node) => {
                    stack.push(kids[1]);
                    stack.push(kids[0]);
                }
                _ => {
                    let mut inner = vec![u];
                    while let Some(v) = inner.pop() {
                        match self.nodes[v].children {
                            Some(kids) => inner.extend(kids),
                            None => group_of[self.nodes[v].segment.expect("leaf")] = count,
                        }
                    }
                    count += 1;
                }
            }
        }
        SegmentGrouping { group_of, count }
    }

    /// Keeps every boundary whose link weight exceeds `t_visual`; segments
    /// joined below that weight are shown as one.
    pub fn cut_by_threshold(&self, t_visual: f64) -> SegmentGrouping {
        self.group_by(|n| n.weight.is_some_and(|w| w > t_visual))
    }

    /// Splits the `n_visual - 1` strongest internal nodes (ties: shallower,
    /// then lower id), yielding exactly `n_visual` segments.
    pub fn cut_by_count(&self, n_visual: usize) -> Result<SegmentGrouping> {
        if n_visual == 0 || n_visual > self.segment_count {
            return Err(Error::InvalidArgument(format!(
                "n_visual must lie in 1..={}, got {n_visual}",
                self.segment_count
            )));
        }
        let depth = self.depths();
        let mut internal: Vec<&PbtNode> = self.nodes.iter().filter(|n| n.children.is_some()).collect();
        internal.sort_by(|a, b| {
            b.weight
                .unwrap()
                .total_cmp(&a.weight.unwrap())
                .then(depth[a.id].cmp(&depth[b.id]))
                .then(a.id.cmp(&b.id))
        });
        let chosen: BTreeSet<usize> = internal.iter().take(n_visual - 1).map(|n| n.id).collect();
        Ok(self.group_by(|n| chosen.contains(&n.id)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates an exported tree, restoring parent links.
    pub fn from_json(s: &str) -> Result<Pbt> {
        let mut t: Pbt = serde_json::from_str(s)?;
        let len = t.nodes.len();
        if len == 0 || t.root >= len {
            return Err(Error::InvalidArgument("tree has no valid root".into()));
        }
        for idx in 0..len {
            if t.nodes[idx].id != idx {
                return Err(Error::InvalidArgument("node ids must equal their index".into()));
            }
            if let Some(kids) = t.nodes[idx].children {
                for c in kids {
                    if c >= len || t.nodes[c].parent.is_some() {
                        return Err(Error::InvalidArgument(format!("bad child {c} of node {idx}")));
                    }
                    t.nodes[c].parent = Some(idx);
                }
            }
        }
        let leaves = t.nodes.iter().filter(|n| n.children.is_none()).count();
        if leaves != t.segment_count || t.nodes[t.root].parent.is_some() {
            return Err(Error::InvalidArgument("inconsistent tree shape".into()));
        }
        Ok(t)
    }
}

/// Assignment of initial segments to displayed segments `0..count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentGrouping {
    pub group_of: Vec<usize>,
    pub count: usize,
}

impl SegmentGrouping {
    /// Relabels a map of initial segments; ids follow raster-scan order.
    pub fn apply(&self, initial: &LabelMap) -> Result<LabelMap> {
        if initial.count() != self.group_of.len() {
            return Err(Error::InvalidArgument(format!(
                "grouping covers {} segments, label map has {}",
                self.group_of.len(),
                initial.count()
            )));
        }
        let raw: Vec<u32> = initial
            .labels()
            .iter()
            .map(|&l| self.group_of[l as usize] as u32)
            .collect();
        LabelMap::compacted(initial.width(), initial.height(), &raw)
    }
}

/// Paints every segment with its rounded mean color.
pub fn render_mean_colors(img: &Raster, labels: &LabelMap) -> Result<Raster> {
    if img.width() != labels.width() || img.height() != labels.height() {
        return Err(Error::DimensionMismatch {
            image_w: img.width(),
            image_h: img.height(),
            labels_w: labels.width(),
            labels_h: labels.height(),
        });
    }
    let mut sums = vec![([0u64; 3], 0u64); labels.count()];
    for (p, &l) in img.pixels().iter().zip(labels.labels()) {
        let s = &mut sums[l as usize];
        for c in 0..3 {
            s.0[c] += p[c] as u64;
        }
        s.1 += 1;
    }
    let means: Vec<[u8; 3]> = sums
        .iter()
        .map(|(s, n)| s.map(|v| ((v as f64 / *n as f64).round()) as u8))
        .collect();
    Raster::new(
        img.width(),
        img.height(),
        labels.labels().iter().map(|&l| means[l as usize]).collect(),
    )
}
