//! Top-down entropy-driven quadtree decomposition.
//!
//! A window becomes a chaos leaf when its shorter side drops below the chaos
//! threshold `l`, a non-chaos leaf when its luminance-histogram entropy is
//! within the noise bound, and is otherwise quartered.

use serde::{Deserialize, Serialize};

use crate::entropy::{approx_entropy, noise_bound, Histogram, NoiseModel};
use crate::error::{Error, Result};
use crate::raster::{Raster, Window};

/// Windows at least this large split their four branches across threads.
const PARALLEL_AREA: usize = 128 * 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompParams {
    pub model: NoiseModel,
    /// Chaos size threshold: windows with `min(w, h) < l` are not split.
    pub l: usize,
    /// Histogram bin count over luminance.
    pub bins: usize,
}

impl DecompParams {
    pub fn new(model: NoiseModel, l: usize, bins: usize) -> Result<Self> {
        let p = DecompParams { model, l, bins };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.l == 0 {
            return Err(Error::InvalidArgument("chaos threshold l must be >= 1".into()));
        }
        Histogram::new(self.bins).map(|_| ())
    }

    pub fn with_k(self, k: u64) -> Self {
        DecompParams {
            model: self.model.with_k(k),
            ..self
        }
    }
}

impl Default for DecompParams {
    fn default() -> Self {
        DecompParams {
            model: NoiseModel {
                k: 3,
                a: 0.998,
                k_prime: 3,
                t_noise: 0.0,
            },
            l: 3,
            bins: 64,
        }
    }
}

/// Splits a window into quadrants ordered top-right, top-left, bottom-left,
/// bottom-right. The left column and top row take `ceil(extent / 2)`.
pub fn quadrants(win: Window) -> Result<[Window; 4]> {
    if win.w < 2 || win.h < 2 {
        return Err(Error::InvalidArgument(format!(
            "window {}x{} is too small to quarter",
            win.w, win.h
        )));
    }
    let lw = win.w.div_ceil(2);
    let th = win.h.div_ceil(2);
    let (rw, bh) = (win.w - lw, win.h - th);
    let (xm, ym) = (win.x0 + lw, win.y0 + th);
    Ok([
        Window { x0: xm, y0: win.y0, w: rw, h: th },
        Window { x0: win.x0, y0: win.y0, w: lw, h: th },
        Window { x0: win.x0, y0: ym, w: lw, h: bh },
        Window { x0: xm, y0: ym, w: rw, h: bh },
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Internal,
    Chaos,
    NonChaos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadNode {
    pub window: Window,
    pub kind: NodeKind,
    /// H(V) of the window's luminance histogram.
    pub entropy: f64,
    pub depth: usize,
    /// Arena indices of the four quadrants, in [`quadrants`] order.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub children: Option<[usize; 4]>,
}

impl QuadNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Unbalanced quadtree stored as a pre-order arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTree {
    pub width: usize,
    pub height: usize,
    pub nodes: Vec<QuadNode>,
}

enum Subtree {
    Leaf(Window, NodeKind, f64),
    Split(Window, f64, Box<[Subtree; 4]>),
}

fn build(plane: &[u8], stride: usize, win: Window, params: &DecompParams, bound: f64) -> Subtree {
    let hist = Histogram::of_window(plane, stride, win, params.bins).expect("validated bins");
    let h = approx_entropy(&hist).expect("window is non-empty");
    if win.min_side() < params.l {
        return Subtree::Leaf(win, NodeKind::Chaos, h);
    }
    if h <= bound {
        return Subtree::Leaf(win, NodeKind::NonChaos, h);
    }
    let Ok(q) = quadrants(win) else {
        // only reachable with l == 1 on a one-pixel-wide strip
        return Subtree::Leaf(win, NodeKind::Chaos, h);
    };
    let go = |w| build(plane, stride, w, params, bound);
    let kids = if win.area() >= PARALLEL_AREA {
        let ((a, b), (c, d)) = rayon::join(|| rayon::join(|| go(q[0]), || go(q[1])), || {
            rayon::join(|| go(q[2]), || go(q[3]))
        });
        [a, b, c, d]
    } else {
        [go(q[0]), go(q[1]), go(q[2]), go(q[3])]
    };
    Subtree::Split(win, h, Box::new(kids))
}

fn flatten(sub: Subtree, depth: usize, nodes: &mut Vec<QuadNode>) -> usize {
    let idx = nodes.len();
    match sub {
        Subtree::Leaf(window, kind, entropy) => nodes.push(QuadNode {
            window,
            kind,
            entropy,
            depth,
            children: None,
        }),
        Subtree::Split(window, entropy, kids) => {
            nodes.push(QuadNode {
                window,
                kind: NodeKind::Internal,
                entropy,
                depth,
                children: None,
            });
            let mut ids = [0; 4];
            for (slot, kid) in ids.iter_mut().zip(*kids) {
                *slot = flatten(kid, depth + 1, nodes);
            }
            nodes[idx].children = Some(ids);
        }
    }
    idx
}

/// Builds the decomposition quadtree of `img`.
pub fn decompose(img: &Raster, params: &DecompParams) -> Result<DecompositionTree> {
    params.validate()?;
    let plane = img.luma_plane();
    let bound = noise_bound(&params.model);
    let root = build(&plane, img.width(), img.full_window(), params, bound);
    let mut nodes = Vec::new();
    flatten(root, 0, &mut nodes);
    Ok(DecompositionTree {
        width: img.width(),
        height: img.height(),
        nodes,
    })
}

impl DecompositionTree {
    pub fn root(&self) -> &QuadNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &QuadNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// `(non-chaos, chaos)` leaf counts.
    pub fn count_leaves(&self) -> (usize, usize) {
        self.leaves().fold((0, 0), |(nc, c), n| match n.kind {
            NodeKind::Chaos => (nc, c + 1),
            _ => (nc + 1, c),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `(non-chaos, chaos)` leaf counts.
pub fn count_leaves(tree: &DecompositionTree) -> (usize, usize) {
    tree.count_leaves()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::stopping_holds;

    fn params(k: u64) -> DecompParams {
        DecompParams::default().with_k(k)
    }

    fn bands() -> Raster {
        let colors = [[200, 40, 40], [40, 160, 60], [30, 40, 200]];
        Raster::from_fn(64, 64, |x, _| colors[(x * 3 / 64).min(2)]).unwrap()
    }

    #[test]
    fn quadrants_of_square() {
        let q = quadrants(Window { x0: 0, y0: 0, w: 8, h: 8 }).unwrap();
        assert!(q.iter().all(|w| w.w == 4 && w.h == 4));
        assert_eq!((q[0].x0, q[0].y0), (4, 0));
        assert_eq!((q[1].x0, q[1].y0), (0, 0));
        assert_eq!((q[2].x0, q[2].y0), (0, 4));
        assert_eq!((q[3].x0, q[3].y0), (4, 4));
    }

    #[test]
    fn quadrants_ceil_split() {
        let q = quadrants(Window { x0: 0, y0: 0, w: 5, h: 4 }).unwrap();
        let widths: Vec<_> = q.iter().map(|w| w.w).collect();
        assert_eq!(widths, vec![2, 3, 3, 2]);
        assert!(q.iter().all(|w| w.h == 2));
        assert_eq!(q.iter().map(Window::area).sum::<usize>(), 20);
    }

    #[test]
    fn quadrants_reject_strips() {
        assert!(quadrants(Window { x0: 0, y0: 0, w: 1, h: 9 }).is_err());
    }

    #[test]
    fn flat_image_is_one_leaf() {
        let img = Raster::filled(64, 64, [9, 9, 9]).unwrap();
        let t = decompose(&img, &params(3)).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.root().kind, NodeKind::NonChaos);
        assert_eq!(t.count_leaves(), (1, 0));
    }

    #[test]
    fn three_bands_stop_at_root_for_k3() {
        let img = bands();
        let t = decompose(&img, &params(3)).unwrap();
        // widths 22/21/21 give an entropy just below ln 3
        let h = -[22.0f64, 21.0, 21.0]
            .iter()
            .map(|c| c / 64.0 * (c / 64.0).ln())
            .sum::<f64>();
        assert!((t.root().entropy - h).abs() < 1e-12);
        assert!(h <= noise_bound(&params(3).model));
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn three_bands_k1_descends_to_flat_or_chaos() {
        let img = bands();
        let p = params(1);
        let t = decompose(&img, &p).unwrap();
        assert!(t.nodes.len() > 1);
        let plane = img.luma_plane();
        for leaf in t.leaves() {
            let hist = Histogram::of_window(&plane, 64, leaf.window, p.bins).unwrap();
            let distinct = hist.counts().iter().filter(|&&c| c > 0).count();
            assert!(leaf.kind == NodeKind::Chaos || distinct == 1);
        }
    }

    #[test]
    fn four_color_checker_is_all_chaos_after_one_split() {
        let colors = [[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 255]];
        let img = Raster::from_fn(4, 4, |x, y| colors[(x % 2) + 2 * (y % 2)]).unwrap();
        let t = decompose(&img, &params(3)).unwrap();
        assert_eq!(t.count_leaves(), (0, 4));
        assert_eq!(t.nodes.len(), 5);
    }

    #[test]
    fn invalid_params_rejected() {
        let img = Raster::filled(4, 4, [0, 0, 0]).unwrap();
        let mut p = params(3);
        p.l = 0;
        assert!(decompose(&img, &p).is_err());
        p.l = 3;
        p.bins = 0;
        assert!(decompose(&img, &p).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_image() -> impl Strategy<Value = Raster> {
            (4usize..40, 4usize..40, 1u8..6, any::<u64>()).prop_map(|(w, h, n, seed)| {
                let palette: Vec<_> = (0..n)
                    .map(|i| [i.wrapping_mul(53), i.wrapping_mul(97).wrapping_add(20), 255 - i * 40])
                    .collect();
                Raster::from_fn(w, h, |x, y| {
                    let v = seed ^ (x as u64 / 3).wrapping_mul(0x9e3779b97f4a7c15) ^ (y as u64 / 2).wrapping_mul(0xc2b2ae3d27d4eb4f);
                    palette[(v.rotate_left(17) % n as u64) as usize]
                })
                .unwrap()
            })
        }

        proptest! {
            #[test]
            fn leaves_tile_and_respect_conditions(img in arb_image(), k in 1u64..8, l in 1usize..5) {
                let p = DecompParams::new(NoiseModel::new(k, 0.998, 3).unwrap(), l, 64).unwrap();
                let t = decompose(&img, &p).unwrap();
                let mut cover = vec![0u8; img.width() * img.height()];
                let plane = img.luma_plane();
                for n in &t.nodes {
                    let hist = Histogram::of_window(&plane, img.width(), n.window, p.bins).unwrap();
                    match n.kind {
                        NodeKind::Chaos => prop_assert!(n.window.min_side() < l || n.window.min_side() < 2),
                        NodeKind::NonChaos => prop_assert!(stopping_holds(&hist, &p.model)),
                        NodeKind::Internal => {
                            prop_assert!(n.window.min_side() >= l && !stopping_holds(&hist, &p.model));
                            let kids = n.children.unwrap();
                            let area: usize = kids.iter().map(|&c| t.nodes[c].window.area()).sum();
                            prop_assert_eq!(area, n.window.area());
                            for &c in &kids {
                                prop_assert!(n.window.contains_window(&t.nodes[c].window));
                            }
                        }
                    }
                    if n.is_leaf() {
                        for (x, y) in n.window.coords() {
                            cover[y * img.width() + x] += 1;
                        }
                    }
                }
                prop_assert!(cover.iter().all(|&c| c == 1));
                let (nc, c) = t.count_leaves();
                prop_assert_eq!(nc + c, t.leaves().count());
            }

            #[test]
            fn larger_k_never_adds_leaves(img in arb_image(), k in 1u64..10) {
                let a = decompose(&img, &params(k)).unwrap();
                let b = decompose(&img, &params(k + 1)).unwrap();
                prop_assert!(b.leaves().count() <= a.leaves().count());
                prop_assert!(b.count_leaves().1 <= a.count_leaves().1);
            }

            #[test]
            fn deterministic(img in arb_image()) {
                prop_assert_eq!(decompose(&img, &params(2)).unwrap(), decompose(&img, &params(2)).unwrap());
            }

            #[test]
            fn depth_bound_on_dyadic_images(log_n in 2u32..7, log_m in 2u32..7, l in 1usize..6, seed in any::<u64>()) {
                let (w, h) = (1usize << log_n, 1usize << log_m);
                let img = Raster::from_fn(w, h, |x, y| {
                    let v = (seed ^ (x as u64).wrapping_mul(0x9e3779b97f4a7c15) ^ (y as u64).wrapping_mul(0xd6e8feb86659fd93)).rotate_left(29);
                    [v as u8, (v >> 8) as u8, (v >> 16) as u8]
                }).unwrap();
                let t = decompose(&img, &DecompParams::new(NoiseModel::new(1, 0.998, 3).unwrap(), l, 64).unwrap()).unwrap();
                let ceil_log_l = (l as f64).log2().ceil() as i64;
                let bound = log_n.min(log_m) as i64 - ceil_log_l + 1;
                prop_assert!((t.depth() as i64) <= bound.max(0));
            }
        }
    }
}
