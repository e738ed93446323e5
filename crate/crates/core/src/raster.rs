//! Image, window and label-map types plus PNM (and optionally PNG) I/O.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

/// Rec. 601 luma, rounded half up: `round(0.299 r + 0.587 g + 0.114 b)`.
#[inline]
pub fn luminance(p: Rgb) -> u8 {
    let v = 299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32;
    ((v + 500) / 1000).min(255) as u8
}

/// Row-major RGB image. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension);
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self> {
        Raster::new(width, height, vec![color; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Rgb,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Raster::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Longer side in pixels; the reference size for relative scale.
    pub fn long_side(&self) -> usize {
        self.width.max(self.height)
    }

    pub fn full_window(&self) -> Window {
        Window {
            x0: 0,
            y0: 0,
            w: self.width,
            h: self.height,
        }
    }

    pub fn window(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Window> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidArgument(format!(
                "window ({x0},{y0}) {w}x{h} outside {}x{} raster",
                self.width, self.height
            )));
        }
        Ok(Window { x0, y0, w, h })
    }

    pub fn luma_plane(&self) -> Vec<u8> {
        self.pixels.iter().map(|&p| luminance(p)).collect()
    }

    /// Horizontal mirror image.
    pub fn mirrored(&self) -> Raster {
        Raster::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
            .expect("same dimensions")
    }

    /// Loads a binary PPM (P6), binary PGM (P5, expanded to gray RGB), or
    /// PNG when the `png` feature is enabled. Format is detected from the
    /// leading magic bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Raster> {
        let mut bytes = Vec::new();
        File::open(path.as_ref())?.read_to_end(&mut bytes)?;
        Raster::decode(&bytes)
    }

    pub fn decode(bytes: &[u8]) -> Result<Raster> {
        match bytes.get(..2) {
            Some(b"P6") | Some(b"P5") => read_pnm_raster(bytes),
            _ if bytes.starts_with(&PNG_SIGNATURE) => decode_png(bytes),
            _ => Err(Error::Unsupported(
                "expected PPM (P6), PGM (P5) or PNG data".into(),
            )),
        }
    }

    /// Saves by extension: `.ppm` (P6), `.pgm` (P5 luminance), `.png`
    /// (requires the `png` feature).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let ext = extension(path);
        let mut out = BufWriter::new(File::create(path)?);
        match ext.as_str() {
            "ppm" => self.write_ppm(&mut out)?,
            "pgm" => write_pgm8(&mut out, self.width, self.height, &self.luma_plane())?,
            "png" => encode_png(self, &mut out)?,
            other => return Err(Error::Unsupported(format!("output extension `{other}`"))),
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_ppm(&self, out: &mut impl Write) -> Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        out.write_all(&flat)?;
        Ok(())
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Rectangular view into a raster: offsets and extents in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Window {
    #[inline]
    pub fn area(&self) -> usize {
        self.w * self.h
    }

    #[inline]
    pub fn min_side(&self) -> usize {
        self.w.min(self.h)
    }

    #[inline]
    pub fn long_side(&self) -> usize {
        self.w.max(self.h)
    }

    #[inline]
    pub fn x1(&self) -> usize {
        self.x0 + self.w
    }

    #[inline]
    pub fn y1(&self) -> usize {
        self.y0 + self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1() && y >= self.y0 && y < self.y1()
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1() <= self.x1() && other.y1() <= self.y1()
    }

    pub fn intersects(&self, other: &Window) -> bool {
        self.x0 < other.x1() && other.x0 < self.x1() && self.y0 < other.y1() && other.y0 < self.y1()
    }

    /// Absolute pixel coordinates in row-major order.
    pub fn coords(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y0..self.y1()).flat_map(move |y| (self.x0..self.x1()).map(move |x| (x, y)))
    }
}

/// Per-pixel segment identifiers with ids forming the range `0..count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: usize,
}

impl LabelMap {
    /// Validates that ids are contiguous from zero.
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_dims(width, height, labels.len())?;
        let max = *labels.iter().max().expect("non-empty") as usize;
        let mut seen = vec![false; max + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(
                "label ids are not contiguous from 0".into(),
            ));
        }
        Ok(LabelMap {
            width,
            height,
            labels,
            count: max + 1,
        })
    }

    /// Renumbers arbitrary ids to `0..R` in order of first appearance in
    /// raster-scan order.
    pub fn compacted(width: usize, height: usize, raw: &[u32]) -> Result<Self> {
        check_dims(width, height, raw.len())?;
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&l| {
                let next = map.len() as u32;
                *map.entry(l).or_insert(next)
            })
            .collect();
        Ok(LabelMap {
            width,
            height,
            labels,
            count: map.len(),
        })
    }

    pub fn uniform(width: usize, height: usize) -> Result<Self> {
        LabelMap::new(width, height, vec![0; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Number of distinct segments R.
    #[inline]
    pub fn count(&self) -> usize {
        self.count
    }

    /// Pixel area of every segment, indexed by id.
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0; self.count];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }

    /// Whether two maps describe the same partition, up to renaming of ids.
    pub fn same_partition(&self, other: &LabelMap) -> bool {
        if self.width != other.width || self.height != other.height || self.count != other.count {
            return false;
        }
        let mut fwd = vec![u32::MAX; self.count];
        let mut back = vec![u32::MAX; other.count];
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            let (fa, bb) = (&mut fwd[a as usize], &mut back[b as usize]);
            if *fa == u32::MAX && *bb == u32::MAX {
                *fa = b;
                *bb = a;
            } else if *fa != b || *bb != a {
                return false;
            }
        }
        true
    }

    /// Loads a P5 (8- or 16-bit) or P2 label map; ids are compacted.
    pub fn load(path: impl AsRef<Path>) -> Result<LabelMap> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path.as_ref())?).read_to_end(&mut bytes)?;
        LabelMap::decode(&bytes)
    }

    pub fn decode(bytes: &[u8]) -> Result<LabelMap> {
        let mut rd = PnmReader::new(bytes);
        let magic = rd.magic()?;
        let (w, h, maxval) = rd.header()?;
        let n = w * h;
        let raw: Vec<u32> = match magic {
            b'5' => {
                let data = rd.rest();
                if maxval < 256 {
                    need(data, n)?.iter().map(|&v| v as u32).collect()
                } else {
                    need(data, 2 * n)?
                        .chunks_exact(2)
                        .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
                        .collect()
                }
            }
            b'2' => (0..n).map(|_| rd.number()).collect::<Result<_>>()?,
            _ => return Err(Error::Unsupported("label maps must be P5 or P2".into())),
        };
        LabelMap::compacted(w, h, &raw)
    }

    /// Writes a 16-bit binary PGM holding the raw ids.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path.as_ref())?);
        self.write_pgm16(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_pgm16(&self, out: &mut impl Write) -> Result<()> {
        if self.count > 65536 {
            return Err(Error::InvalidArgument(format!(
                "{} segments do not fit a 16-bit PGM",
                self.count
            )));
        }
        let maxval = (self.count.saturating_sub(1)).max(256);
        write!(out, "P5\n{} {}\n{}\n", self.width, self.height, maxval)?;
        let mut buf = Vec::with_capacity(self.labels.len() * 2);
        for &l in &self.labels {
            buf.extend_from_slice(&(l as u16).to_be_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension);
    }
    if len != width * height {
        return Err(Error::InvalidArgument(format!(
            "expected {} labels for {width}x{height}, got {len}",
            width * height
        )));
    }
    Ok(())
}

/// Writes an 8-bit binary PGM.
pub fn write_pgm8(out: &mut impl Write, width: usize, height: usize, data: &[u8]) -> Result<()> {
    if data.len() != width * height {
        return Err(Error::InvalidArgument("gray map size mismatch".into()));
    }
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(data)?;
    Ok(())
}

pub fn save_pgm8(path: impl AsRef<Path>, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    write_pgm8(&mut out, width, height, data)?;
    out.flush()?;
    Ok(())
}

fn need(data: &[u8], n: usize) -> Result<&[u8]> {
    data.get(..n)
        .ok_or_else(|| Error::Format(format!("pixel data truncated: need {n} bytes, have {}", data.len())))
}

fn read_pnm_raster(bytes: &[u8]) -> Result<Raster> {
    let mut rd = PnmReader::new(bytes);
    let magic = rd.magic()?;
    let (w, h, maxval) = rd.header()?;
    if maxval > 255 {
        return Err(Error::Unsupported("16-bit PPM/PGM images".into()));
    }
    let scale = |v: u8| -> u8 {
        if maxval == 255 {
            v
        } else {
            ((v as u32 * 255 + maxval / 2) / maxval).min(255) as u8
        }
    };
    let data = rd.rest();
    let pixels = match magic {
        b'6' => need(data, 3 * w * h)?
            .chunks_exact(3)
            .map(|c| [scale(c[0]), scale(c[1]), scale(c[2])])
            .collect(),
        _ => need(data, w * h)?
            .iter()
            .map(|&v| {
                let g = scale(v);
                [g, g, g]
            })
            .collect(),
    };
    Raster::new(w, h, pixels)
}

struct PnmReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PnmReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        PnmReader { bytes, pos: 0 }
    }

    fn magic(&mut self) -> Result<u8> {
        match self.bytes.get(..2) {
            Some([b'P', m]) => {
                self.pos = 2;
                Ok(*m)
            }
            _ => Err(Error::Format("missing PNM magic".into())),
        }
    }

    fn skip_space(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<u32> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("expected a number in PNM header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("number out of range".into()))
    }

    fn header(&mut self) -> Result<(usize, usize, u32)> {
        let w = self.number()? as usize;
        let h = self.number()? as usize;
        let maxval = self.number()?;
        if w == 0 || h == 0 {
            return Err(Error::ZeroDimension);
        }
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Format(format!("bad maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from binary data
        match self.bytes.get(self.pos) {
            Some(c) if c.is_ascii_whitespace() => self.pos += 1,
            _ => return Err(Error::Format("header not terminated".into())),
        }
        Ok((w, h, maxval))
    }

    fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<Raster> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Format(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Format(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let data = &buf[..info.buffer_size()];
    let pixels = match info.color_type {
        png::ColorType::Rgb => data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        png::ColorType::Rgba => data.chunks_exact(4).map(|c| [c[0], c[1], c[2]]).collect(),
        png::ColorType::Grayscale => data.iter().map(|&g| [g, g, g]).collect(),
        png::ColorType::GrayscaleAlpha => data.chunks_exact(2).map(|c| [c[0], c[0], c[0]]).collect(),
        png::ColorType::Indexed => {
            return Err(Error::Unsupported("indexed PNG after expansion".into()))
        }
    };
    Raster::new(w, h, pixels)
}

#[cfg(not(feature = "png"))]
fn decode_png(_: &[u8]) -> Result<Raster> {
    Err(Error::Unsupported(
        "PNG input requires the `png` feature".into(),
    ))
}

#[cfg(feature = "png")]
fn encode_png(img: &Raster, out: &mut impl Write) -> Result<()> {
    let mut enc = png::Encoder::new(out, img.width as u32, img.height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc
        .write_header()
        .map_err(|e| Error::Format(e.to_string()))?;
    let flat: Vec<u8> = img.pixels.iter().flatten().copied().collect();
    writer
        .write_image_data(&flat)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

#[cfg(not(feature = "png"))]
fn encode_png(_: &Raster, _: &mut impl Write) -> Result<()> {
    Err(Error::Unsupported(
        "PNG output requires the `png` feature".into(),
    ))
}
