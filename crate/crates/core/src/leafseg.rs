//! Local regions inside a decomposition leaf: Canny-style edges, closed
//! contour region extraction, and mergeable color descriptors.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::raster::{luminance, Raster, Rgb, Window};

/// Pixel count and per-channel sums; the mean color is `sum / count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub count: u64,
    pub sum: [u64; 3],
}

impl FeatureDescriptor {
    pub fn of_pixel(p: Rgb) -> Self {
        FeatureDescriptor {
            count: 1,
            sum: [p[0] as u64, p[1] as u64, p[2] as u64],
        }
    }

    /// Descriptor with `count` pixels averaging `mean`; the sums must be integral.
    pub fn from_mean(count: u64, mean: [u64; 3]) -> Self {
        FeatureDescriptor {
            count,
            sum: mean.map(|m| m * count),
        }
    }

    pub fn add(&mut self, p: Rgb) {
        self.count += 1;
        for c in 0..3 {
            self.sum[c] += p[c] as u64;
        }
    }

    pub fn mean(&self) -> [f64; 3] {
        let n = self.count.max(1) as f64;
        self.sum.map(|s| s as f64 / n)
    }

    pub fn merge(&self, other: &FeatureDescriptor) -> FeatureDescriptor {
        merge_fd(self, other)
    }
}

/// Exact union of two descriptors.
pub fn merge_fd(a: &FeatureDescriptor, b: &FeatureDescriptor) -> FeatureDescriptor {
    FeatureDescriptor {
        count: a.count + b.count,
        sum: [a.sum[0] + b.sum[0], a.sum[1] + b.sum[1], a.sum[2] + b.sum[2]],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    /// Gaussian smoothing sigma; 0 disables smoothing.
    pub sigma: f64,
    /// Hysteresis thresholds as fractions of the window's peak gradient.
    pub low: f64,
    pub high: f64,
}

impl Default for EdgeParams {
    fn default() -> Self {
        EdgeParams {
            sigma: 1.0,
            low: 0.1,
            high: 0.2,
        }
    }
}

/// Boolean edge mask over a window, row-major in window coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMask {
    pub w: usize,
    pub h: usize,
    pub bits: Vec<bool>,
}

impl EdgeMask {
    pub fn empty(w: usize, h: usize) -> Self {
        EdgeMask {
            w,
            h,
            bits: vec![false; w * h],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.w + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.w + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn clamp_idx(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

fn blur(src: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return src.to_vec();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * src[y * w + clamp_idx(x as isize + i as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[clamp_idx(y as isize + i as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Canny-style detector on window luminance: Gaussian smoothing, Sobel
/// gradients, non-maximum suppression and double-threshold hysteresis.
/// Borders are replicated, so the window is processed in isolation.
pub fn detect_edges(img: &Raster, win: Window, params: &EdgeParams) -> EdgeMask {
    let (w, h) = (win.w, win.h);
    let mut mask = EdgeMask::empty(w, h);
    if w < 2 && h < 2 {
        return mask;
    }
    let lum: Vec<f64> = win
        .coords()
        .map(|(x, y)| luminance(img.get(x, y)) as f64)
        .collect();
    let s = blur(&lum, w, h, params.sigma);
    let at = |x: isize, y: isize| s[clamp_idx(y, h) * w + clamp_idx(x, w)];

    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut mag = vec![0.0f64; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let dx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let dy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = dx.hypot(dy);
        }
    }
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    // smoothing of a flat window leaves rounding residue, not structure
    if peak <= 1e-9 {
        return mask;
    }

    let m = |x: isize, y: isize| mag[clamp_idx(y, h) * w + clamp_idx(x, w)];
    let mut thin = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let g = mag[i];
            if g <= 0.0 {
                continue;
            }
            let mut angle = gy[i].atan2(gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (ox, oy) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            if g >= m(x + ox, y + oy) && g >= m(x - ox, y - oy) {
                thin[i] = g;
            }
        }
    }

    let (lo, hi) = (params.low * peak, params.high * peak);
    let mut queue = VecDeque::new();
    for (i, &g) in thin.iter().enumerate() {
        if g >= hi && g > 0.0 {
            mask.bits[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !mask.bits[j] && thin[j] >= lo && thin[j] > 0.0 {
                    mask.bits[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    mask
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Top,
    Bottom,
    Left,
    Right,
}

/// What lies across a stretch of a local region's boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Neighbor {
    Region(usize),
    Border(Side),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalRegion {
    /// Absolute pixel coordinates, row-major.
    pub pixels: Vec<(usize, usize)>,
    pub descriptor: FeatureDescriptor,
    /// Boundary stretches with their length in adjacent pixel pairs.
    pub arcs: Vec<(Neighbor, usize)>,
}

fn dist2(p: Rgb, mean: &[f64; 3]) -> f64 {
    (0..3).map(|c| (p[c] as f64 - mean[c]).powi(2)).sum()
}

/// Labels every pixel of the window with a local region id in `0..R`.
///
/// Non-edge pixels are grouped by 4-connected flood fill; edge pixels are
/// then absorbed, wave by wave from the already-labelled area, into the
/// neighbouring region whose mean color is nearest (ties to the lower id).
/// Contours that do not close off an area therefore leave no trace.
pub fn label_window(img: &Raster, win: Window, edges: &EdgeMask) -> (Vec<u32>, usize) {
    let (w, h) = (win.w, win.h);
    const NONE: u32 = u32::MAX;
    let mut lab = vec![NONE; w * h];
    let px = |i: usize| img.get(win.x0 + i % w, win.y0 + i / w);
    let neighbors = |i: usize| {
        let (x, y) = (i % w, i / w);
        [
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y > 0).then(|| i - w),
            (y + 1 < h).then(|| i + w),
        ]
        .into_iter()
        .flatten()
    };

    let mut n = 0u32;
    let mut fds: Vec<FeatureDescriptor> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if lab[start] != NONE || edges.bits[start] {
            continue;
        }
        let mut fd = FeatureDescriptor::default();
        lab[start] = n;
        stack.push(start);
        while let Some(i) = stack.pop() {
            fd.add(px(i));
            for j in neighbors(i) {
                if lab[j] == NONE && !edges.bits[j] {
                    lab[j] = n;
                    stack.push(j);
                }
            }
        }
        fds.push(fd);
        n += 1;
    }
    if n == 0 {
        return (vec![0; w * h], 1);
    }
    let means: Vec<[f64; 3]> = fds.iter().map(FeatureDescriptor::mean).collect();

    let mut frontier: Vec<usize> = (0..w * h)
        .filter(|&i| lab[i] == NONE && neighbors(i).any(|j| lab[j] != NONE))
        .collect();
    let mut queued = vec![false; w * h];
    while !frontier.is_empty() {
        let picks: Vec<(usize, u32)> = frontier
            .iter()
            .map(|&i| {
                let p = px(i);
                let best = neighbors(i)
                    .filter_map(|j| (lab[j] != NONE).then_some(lab[j]))
                    .min_by(|&a, &b| {
                        dist2(p, &means[a as usize])
                            .total_cmp(&dist2(p, &means[b as usize]))
                            .then(a.cmp(&b))
                    })
                    .expect("frontier pixels touch a labelled pixel");
                (i, best)
            })
            .collect();
        let mut next = Vec::new();
        for &(i, r) in &picks {
            lab[i] = r;
        }
        for &(i, _) in &picks {
            for j in neighbors(i) {
                if lab[j] == NONE && !queued[j] {
                    queued[j] = true;
                    next.push(j);
                }
            }
        }
        frontier = next;
    }
    (lab, n as usize)
}

/// Splits a leaf window into local regions bounded by closed contours and
/// the window border.
pub fn extract_regions(img: &Raster, win: Window, edges: &EdgeMask) -> Vec<LocalRegion> {
    let (lab, n) = label_window(img, win, edges);
    let w = win.w;
    let mut regions: Vec<LocalRegion> = (0..n)
        .map(|_| LocalRegion {
            pixels: Vec::new(),
            descriptor: FeatureDescriptor::default(),
            arcs: Vec::new(),
        })
        .collect();
    let mut arcs: Vec<BTreeMap<Neighbor, usize>> = vec![BTreeMap::new(); n];
    for (i, (x, y)) in win.coords().enumerate() {
        let r = lab[i] as usize;
        regions[r].pixels.push((x, y));
        regions[r].descriptor.add(img.get(x, y));
        let (lx, ly) = (i % w, i / w);
        let mut border = |side| *arcs[r].entry(Neighbor::Border(side)).or_default() += 1;
        if ly == 0 {
            border(Side::Top);
        }
        if ly + 1 == win.h {
            border(Side::Bottom);
        }
        if lx == 0 {
            border(Side::Left);
        }
        if lx + 1 == w {
            border(Side::Right);
        }
        for j in [(lx + 1 < w).then(|| i + 1), (ly + 1 < win.h).then(|| i + w)]
            .into_iter()
            .flatten()
        {
            let q = lab[j] as usize;
            if q != r {
                *arcs[r].entry(Neighbor::Region(q)).or_default() += 1;
                *arcs[q].entry(Neighbor::Region(r)).or_default() += 1;
            }
        }
    }
    for (reg, a) in regions.iter_mut().zip(arcs) {
        reg.arcs = a.into_iter().collect();
    }
    regions
}
