//! Bottom-up composition of leaf regions into the initial segmentation.
//!
//! Leaves contribute their local regions. Each internal node stitches its
//! four quadrants along the two internal seams, merges neighbours whose
//! boundary confidence is zero, and re-weights every boundary of a region
//! whose extent grew at this level using the node's relative scale.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{cnf, scale_descriptor, similarity, FilterParams};
use crate::leafseg::{detect_edges, label_window, EdgeParams, FeatureDescriptor};
use crate::quadtree::{quadrants, DecompositionTree, NodeKind, QuadNode};
use crate::raster::{save_pgm8, LabelMap, Raster, Window};
use crate::unionfind::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    /// Confidence in `(0, 1]`.
    pub cnf: f64,
    /// Number of 4-adjacent pixel pairs along the boundary.
    pub length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub descriptor: FeatureDescriptor,
    /// Bounding box of the segment's pixels.
    pub bbox: Window,
}

/// Initial segments, their descriptors and the weighted boundaries between
/// adjacent segments. Boundary keys are stored with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGraph {
    pub labels: LabelMap,
    pub segments: Vec<Segment>,
    pub boundaries: BTreeMap<(usize, usize), Boundary>,
    /// Longer side of the image, the reference for relative scale.
    pub image_size: usize,
}

impl RegionGraph {
    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Symmetric lookup.
    pub fn boundary(&self, i: usize, j: usize) -> Option<&Boundary> {
        self.boundaries.get(&(i.min(j), i.max(j)))
    }

    /// `(i, j, cnf)` triples, `i < j`.
    pub fn confidences(&self) -> Vec<(usize, usize, f64)> {
        self.boundaries
            .iter()
            .map(|(&(i, j), b)| (i, j, b.cnf))
            .collect()
    }

    /// Gray map with `round(255 · cnf)`, at least 1, on both pixels of every
    /// inter-segment adjacency (maximum over incident boundaries), 0 elsewhere.
    pub fn boundary_map(&self) -> Vec<u8> {
        let (w, h) = (self.labels.width(), self.labels.height());
        let lab = self.labels.labels();
        let mut out = vec![0u8; w * h];
        let mut mark = |i: usize, j: usize| {
            let (a, b) = (lab[i] as usize, lab[j] as usize);
            if a != b {
                let v = self
                    .boundary(a, b)
                    .map_or(0, |bd| ((bd.cnf * 255.0).round().clamp(1.0, 255.0)) as u8);
                out[i] = out[i].max(v);
                out[j] = out[j].max(v);
            }
        };
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if x + 1 < w {
                    mark(i, i + 1);
                }
                if y + 1 < h {
                    mark(i, i + w);
                }
            }
        }
        out
    }

    pub fn save_boundary_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        save_pgm8(path, self.labels.width(), self.labels.height(), &self.boundary_map())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComposeParams {
    pub filter: FilterParams,
    pub edges: EdgeParams,
}

/// Regions and boundaries of one decomposition window during composition.
/// Region ids are union-find roots owned by the [`Composer`].
#[derive(Debug, Clone, Default)]
pub struct Fragment {
    pub window: Option<Window>,
    pub regions: BTreeSet<u32>,
    pub boundaries: BTreeMap<(u32, u32), Boundary>,
}

fn key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// Shared state of a composition pass over one image.
pub struct Composer<'a> {
    img: &'a Raster,
    params: ComposeParams,
    long: usize,
    labels: Vec<u32>,
    uf: UnionFind,
    fds: Vec<FeatureDescriptor>,
}

impl<'a> Composer<'a> {
    pub fn new(img: &'a Raster, params: ComposeParams) -> Result<Self> {
        params.filter.validate()?;
        Ok(Composer {
            img,
            params,
            long: img.long_side(),
            labels: vec![u32::MAX; img.width() * img.height()],
            uf: UnionFind::default(),
            fds: Vec::new(),
        })
    }

    fn fresh(&mut self, fd: FeatureDescriptor) -> u32 {
        let id = self.uf.push();
        self.fds.push(fd);
        id
    }

    fn similarity(&self, a: u32, b: u32) -> f64 {
        similarity(
            &self.fds[a as usize],
            &self.fds[b as usize],
            self.params.filter.measure,
        )
    }

    fn confidence(&self, a: u32, b: u32, s: f64) -> f64 {
        cnf(s, self.similarity(a, b), &self.params.filter)
    }

    fn scale_of(&self, win: Window) -> f64 {
        scale_descriptor(win.long_side(), self.long).expect("window lies inside the image")
    }

    /// Local graph of a leaf. Non-chaos leaves are split by closed contours;
    /// chaos leaves are a single region bounded only by the leaf border.
    pub fn leaf(&mut self, node: &QuadNode) -> Fragment {
        let win = node.window;
        let stride = self.img.width();
        let mut frag = Fragment {
            window: Some(win),
            ..Fragment::default()
        };
        if node.kind == NodeKind::Chaos {
            let mut fd = FeatureDescriptor::default();
            for (x, y) in win.coords() {
                fd.add(self.img.get(x, y));
            }
            let id = self.fresh(fd);
            for (x, y) in win.coords() {
                self.labels[y * stride + x] = id;
            }
            frag.regions.insert(id);
            return frag;
        }

        let edges = detect_edges(self.img, win, &self.params.edges);
        let (local, n) = label_window(self.img, win, &edges);
        let mut fds = vec![FeatureDescriptor::default(); n];
        for (i, (x, y)) in win.coords().enumerate() {
            fds[local[i] as usize].add(self.img.get(x, y));
        }
        let ids: Vec<u32> = fds.into_iter().map(|fd| self.fresh(fd)).collect();
        frag.regions.extend(ids.iter().copied());
        for (i, (x, y)) in win.coords().enumerate() {
            self.labels[y * stride + x] = ids[local[i] as usize];
        }

        let w = win.w;
        let mut dirty = BTreeSet::new();
        for i in 0..local.len() {
            let (lx, ly) = (i % w, i / w);
            for j in [(lx + 1 < w).then(|| i + 1), (ly + 1 < win.h).then(|| i + w)]
                .into_iter()
                .flatten()
            {
                if local[i] != local[j] {
                    let k = key(ids[local[i] as usize], ids[local[j] as usize]);
                    frag.boundaries
                        .entry(k)
                        .or_insert(Boundary { cnf: 0.0, length: 0 })
                        .length += 1;
                    dirty.insert(k);
                }
            }
        }
        let s = self.scale_of(win);
        self.settle(&mut frag, dirty, s);
        frag
    }

    /// Merges zero-confidence pairs among `dirty` until none remain, then
    /// assigns confidences at scale `s` to every dirty boundary.
    fn settle(&mut self, frag: &mut Fragment, mut dirty: BTreeSet<(u32, u32)>, s: f64) {
        loop {
            let hit = dirty
                .iter()
                .copied()
                .find(|&(a, b)| self.confidence(a, b, s) == 0.0);
            match hit {
                Some((a, b)) => self.merge(frag, &mut dirty, a, b),
                None => break,
            }
        }
        for (a, b) in dirty {
            let c = self.confidence(a, b, s);
            frag.boundaries.get_mut(&(a, b)).expect("dirty boundary exists").cnf = c;
        }
    }

    fn merge(&mut self, frag: &mut Fragment, dirty: &mut BTreeSet<(u32, u32)>, keep: u32, gone: u32) {
        self.uf.attach(gone, keep);
        self.fds[keep as usize] = self.fds[keep as usize].merge(&self.fds[gone as usize]);
        frag.regions.remove(&gone);
        frag.boundaries.remove(&(keep, gone));
        dirty.remove(&(keep, gone));

        let moved: Vec<((u32, u32), Boundary)> = frag
            .boundaries
            .iter()
            .filter(|(&(a, b), _)| a == gone || b == gone)
            .map(|(&k, &b)| (k, b))
            .collect();
        for ((a, b), bd) in moved {
            frag.boundaries.remove(&(a, b));
            dirty.remove(&(a, b));
            let other = if a == gone { b } else { a };
            frag.boundaries
                .entry(key(keep, other))
                .or_insert(Boundary { cnf: 0.0, length: 0 })
                .length += bd.length;
        }
        dirty.extend(
            frag.boundaries
                .keys()
                .copied()
                .filter(|&(a, b)| a == keep || b == keep),
        );
    }

    /// Stitches the four quadrant fragments of `window` (in quadrant order).
    pub fn combine_quadrants(&mut self, children: [Fragment; 4], window: Window) -> Result<Fragment> {
        let expected = quadrants(window)?;
        for (child, want) in children.iter().zip(expected) {
            if child.window != Some(want) {
                return Err(Error::Geometry(format!(
                    "child window {:?} does not match quadrant {want:?} of {window:?}",
                    child.window
                )));
            }
        }
        let mut frag = Fragment {
            window: Some(window),
            ..Fragment::default()
        };
        for child in children {
            frag.regions.extend(child.regions);
            frag.boundaries.extend(child.boundaries);
        }

        let stride = self.img.width();
        let xm = expected[1].x1();
        let ym = expected[1].y1();
        let mut seam_pairs: Vec<(usize, usize)> = Vec::new();
        if xm < window.x1() {
            seam_pairs.extend((window.y0..window.y1()).map(|y| (y * stride + xm - 1, y * stride + xm)));
        }
        if ym < window.y1() {
            seam_pairs.extend((window.x0..window.x1()).map(|x| ((ym - 1) * stride + x, ym * stride + x)));
        }
        let mut dirty = BTreeSet::new();
        for (p, q) in seam_pairs {
            let a = self.uf.find(self.labels[p]);
            let b = self.uf.find(self.labels[q]);
            if a != b {
                let k = key(a, b);
                frag.boundaries
                    .entry(k)
                    .or_insert(Boundary { cnf: 0.0, length: 0 })
                    .length += 1;
                dirty.insert(k);
            }
        }
        let s = self.scale_of(window);
        self.settle(&mut frag, dirty, s);
        Ok(frag)
    }

    /// Resolves the root fragment into a [`RegionGraph`] with segment ids in
    /// raster-scan order of each segment's first pixel.
    pub fn finish(mut self, root: Fragment) -> Result<RegionGraph> {
        let (w, h) = (self.img.width(), self.img.height());
        let mut renumber: BTreeMap<u32, u32> = BTreeMap::new();
        let mut raw = Vec::with_capacity(w * h);
        for i in 0..w * h {
            let r = self.uf.find(self.labels[i]);
            let next = renumber.len() as u32;
            raw.push(*renumber.entry(r).or_insert(next));
        }
        let labels = LabelMap::new(w, h, raw)?;
        let mut bbox = vec![(usize::MAX, usize::MAX, 0usize, 0usize); renumber.len()];
        for y in 0..h {
            for x in 0..w {
                let b = &mut bbox[labels.get(x, y) as usize];
                b.0 = b.0.min(x);
                b.1 = b.1.min(y);
                b.2 = b.2.max(x);
                b.3 = b.3.max(y);
            }
        }
        let mut segments = vec![None; renumber.len()];
        for (&root_id, &new) in &renumber {
            let (x0, y0, x1, y1) = bbox[new as usize];
            segments[new as usize] = Some(Segment {
                descriptor: self.fds[root_id as usize],
                bbox: Window {
                    x0,
                    y0,
                    w: x1 - x0 + 1,
                    h: y1 - y0 + 1,
                },
            });
        }
        let boundaries = root
            .boundaries
            .into_iter()
            .map(|((a, b), bd)| {
                let (i, j) = (renumber[&a] as usize, renumber[&b] as usize);
                ((i.min(j), i.max(j)), bd)
            })
            .collect();
        Ok(RegionGraph {
            labels,
            segments: segments.into_iter().map(|s| s.expect("every root has pixels")).collect(),
            boundaries,
            image_size: self.long,
        })
    }
}

fn walk(c: &mut Composer<'_>, tree: &DecompositionTree, idx: usize) -> Result<Fragment> {
    let node = &tree.nodes[idx];
    match node.children {
        None => Ok(c.leaf(node)),
        Some(ids) => {
            let kids = [
                walk(c, tree, ids[0])?,
                walk(c, tree, ids[1])?,
                walk(c, tree, ids[2])?,
                walk(c, tree, ids[3])?,
            ];
            c.combine_quadrants(kids, node.window)
        }
    }
}

/// Post-order composition over a decomposition of `img`.
pub fn compose(tree: &DecompositionTree, img: &Raster, params: &ComposeParams) -> Result<RegionGraph> {
    if tree.width != img.width() || tree.height != img.height() || tree.root().window != img.full_window() {
        return Err(Error::Geometry("decomposition does not cover this image".into()));
    }
    let mut c = Composer::new(img, *params)?;
    let root = walk(&mut c, tree, 0)?;
    c.finish(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::f1;
    use crate::quadtree::{decompose, DecompParams};

    fn params() -> ComposeParams {
        ComposeParams::default()
    }

    fn bands() -> Raster {
        let colors = [[200, 40, 40], [40, 160, 60], [30, 40, 200]];
        Raster::from_fn(64, 64, |x, _| colors[(x * 3 / 64).min(2)]).unwrap()
    }

    fn leaf(win: Window, kind: NodeKind) -> QuadNode {
        QuadNode {
            window: win,
            kind,
            entropy: 0.0,
            depth: 1,
            children: None,
        }
    }

    fn run(img: &Raster, k: u64) -> RegionGraph {
        let t = decompose(img, &DecompParams::default().with_k(k)).unwrap();
        compose(&t, img, &params()).unwrap()
    }

    #[test]
    fn flat_image_one_segment() {
        let img = Raster::filled(32, 32, [70, 80, 90]).unwrap();
        let g = run(&img, 3);
        assert_eq!(g.segment_count(), 1);
        assert!(g.boundaries.is_empty());
    }

    #[test]
    fn three_bands_single_leaf() {
        let img = bands();
        let g = run(&img, 3);
        assert_eq!(g.segment_count(), 3);
        assert_eq!(g.boundaries.len(), 2);
        let p = FilterParams::EVAL;
        for (&(i, j), b) in &g.boundaries {
            let x = similarity(&g.segments[i].descriptor, &g.segments[j].descriptor, p.measure);
            assert!((b.cnf - cnf(1.0, x, &p)).abs() < 1e-15);
            assert_eq!(b.length, 64);
        }
        assert_eq!(g.segments[0].descriptor.mean(), [200.0, 40.0, 40.0]);
    }

    #[test]
    fn halves_over_one_split_merge_to_two() {
        let img = Raster::from_fn(64, 64, |x, _| if x < 32 { [200, 30, 30] } else { [30, 30, 200] }).unwrap();
        let t = decompose(&img, &DecompParams::default().with_k(1)).unwrap();
        assert_eq!(t.nodes.len(), 5);
        let g = compose(&t, &img, &params()).unwrap();
        assert_eq!(g.segment_count(), 2);
        assert_eq!(g.boundaries.len(), 1);
        let b = g.boundary(0, 1).unwrap();
        assert_eq!(b.length, 64);
        let x = similarity(&g.segments[0].descriptor, &g.segments[1].descriptor, FilterParams::EVAL.measure);
        assert!((b.cnf - cnf(1.0, x, &FilterParams::EVAL)).abs() < 1e-15);
    }

    fn quad_fragments(c: &mut Composer<'_>, win: Window, kinds: [NodeKind; 4]) -> [Fragment; 4] {
        let q = quadrants(win).unwrap();
        [0, 1, 2, 3].map(|i| c.leaf(&leaf(q[i], kinds[i])))
    }

    #[test]
    fn identical_quadrants_collapse() {
        let img = Raster::filled(8, 8, [5, 100, 7]).unwrap();
        let mut c = Composer::new(&img, params()).unwrap();
        let kids = quad_fragments(&mut c, img.full_window(), [NodeKind::NonChaos; 4]);
        let f = c.combine_quadrants(kids, img.full_window()).unwrap();
        assert_eq!(f.regions.len(), 1);
        assert!(f.boundaries.is_empty());
    }

    #[test]
    fn red_blue_quadrants_give_one_seam() {
        let img = Raster::from_fn(8, 8, |x, _| if x < 4 { [255, 0, 0] } else { [0, 0, 255] }).unwrap();
        let mut c = Composer::new(&img, params()).unwrap();
        let kids = quad_fragments(&mut c, img.full_window(), [NodeKind::Chaos; 4]);
        let f = c.combine_quadrants(kids, img.full_window()).unwrap();
        assert_eq!(f.regions.len(), 2);
        assert_eq!(f.boundaries.len(), 1);
        let b = f.boundaries.values().next().unwrap();
        assert_eq!(b.length, 8);
        // orthogonal colors: f2 = 1, so cnf = f1 at full scale
        assert!((b.cnf - f1(1.0, &FilterParams::EVAL)).abs() < 1e-15);
    }

    #[test]
    fn untouched_interior_boundary_keeps_leaf_confidence() {
        // green square on red inside the top-left quadrant; the other
        // quadrants are blue, so nothing touching the square changes extent
        let img = Raster::from_fn(32, 32, |x, y| {
            if (3..10).contains(&x) && (3..10).contains(&y) {
                [20, 200, 20]
            } else if x < 16 && y < 16 {
                [200, 20, 20]
            } else {
                [20, 20, 200]
            }
        })
        .unwrap();
        let win = img.full_window();
        let mut c = Composer::new(&img, params()).unwrap();
        let kids = quad_fragments(&mut c, win, [NodeKind::NonChaos; 4]);
        assert_eq!(kids[1].boundaries.len(), 1);
        let (inner_key, before) = kids[1].boundaries.iter().map(|(k, b)| (*k, *b)).next().unwrap();
        let leaf_s = 16.0 / 32.0;
        assert!(before.cnf > 0.0 && before.cnf <= f1(leaf_s, &FilterParams::EVAL) + 1e-12);
        let f = c.combine_quadrants(kids, win).unwrap();
        assert_eq!(f.regions.len(), 3);
        assert_eq!(f.boundaries[&inner_key], before);
    }

    #[test]
    fn growing_region_is_reweighted() {
        // green bar crossing the vertical seam: its boundary moves to node scale
        let img = Raster::from_fn(32, 32, |x, y| {
            if (10..22).contains(&x) && (4..8).contains(&y) {
                [20, 200, 20]
            } else {
                [200, 20, 20]
            }
        })
        .unwrap();
        let win = img.full_window();
        let mut c = Composer::new(&img, params()).unwrap();
        let kids = quad_fragments(&mut c, win, [NodeKind::NonChaos; 4]);
        let f = c.combine_quadrants(kids, win).unwrap();
        assert_eq!(f.regions.len(), 2);
        let b = f.boundaries.values().next().unwrap();
        let (a, z) = *f.boundaries.keys().next().unwrap();
        let x = c.similarity(a, z);
        assert!((b.cnf - cnf(1.0, x, &FilterParams::EVAL)).abs() < 1e-15);
    }

    #[test]
    fn mismatched_children_rejected() {
        let img = Raster::filled(8, 8, [1, 1, 1]).unwrap();
        let mut c = Composer::new(&img, params()).unwrap();
        let mut kids = quad_fragments(&mut c, img.full_window(), [NodeKind::Chaos; 4]);
        kids.swap(0, 1);
        assert!(matches!(
            c.combine_quadrants(kids, img.full_window()),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn boundary_map_marks_seams_only() {
        let img = bands();
        let g = run(&img, 3);
        let m = g.boundary_map();
        for y in 0..64 {
            for x in 0..64 {
                let on_seam = matches!(x, 21 | 22 | 42 | 43);
                assert_eq!(m[y * 64 + x] != 0, on_seam, "pixel ({x},{y})");
            }
        }
    }
}
