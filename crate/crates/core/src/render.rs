//! Escape-time pictures of the limit sets and heatmaps of atomic measures,
//! written as binary PPM/PGM.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::klein::{EscapeStatus, KleinPair, Side};
use crate::measure::AtomicMeasure;
use crate::par;
use crate::sphere::SpherePoint;

pub const DEFAULT_MAX_STEPS: u32 = 500;

/// A rectangle of the plane sampled on a pixel grid; pixel `(0, 0)` is the
/// top-left corner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    pub center: Complex64,
    pub width: f64,
    pub pixels_x: usize,
    pub pixels_y: usize,
}

impl Viewport {
    pub fn new(center: Complex64, width: f64, pixels_x: usize, pixels_y: usize) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) || pixels_x == 0 || pixels_y == 0 {
            return Err(Error::Domain(format!(
                "viewport needs a positive width and pixel counts, got width {width} and {pixels_x}x{pixels_y}"
            )));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::Domain("viewport center must be finite".into()));
        }
        Ok(Viewport {
            center,
            width,
            pixels_x,
            pixels_y,
        })
    }

    pub fn height(&self) -> f64 {
        self.width * self.pixels_y as f64 / self.pixels_x as f64
    }

    pub fn pixel_size(&self) -> f64 {
        self.width / self.pixels_x as f64
    }

    /// Center of pixel `(ix, iy)`.
    pub fn pixel_center(&self, ix: usize, iy: usize) -> Complex64 {
        self.sample(ix as f64 + 0.5, iy as f64 + 0.5)
    }

    fn sample(&self, fx: f64, fy: f64) -> Complex64 {
        let s = self.pixel_size();
        Complex64::new(
            self.center.re - 0.5 * self.width + fx * s,
            self.center.im + 0.5 * self.height() - fy * s,
        )
    }

    /// Pixel containing `z`, if any.
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let s = self.pixel_size();
        let fx = (z.re - (self.center.re - 0.5 * self.width)) / s;
        let fy = ((self.center.im + 0.5 * self.height()) - z.im) / s;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        (ix < self.pixels_x && iy < self.pixels_y).then_some((ix, iy))
    }
}

/// Row-major per-pixel payload: escape step (0 = inside) for limit sets,
/// accumulated weight for measures.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    /// Inside pixels whose orbit was still creeping at the step limit.
    pub slow: Vec<bool>,
    /// Escaped pixels whose distance estimate to the set is below two pixels:
    /// the set may cross them without containing the pixel center.
    pub near: Vec<bool>,
    /// Mass that fell outside the viewport (measure heatmaps only).
    pub overflow: f64,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        ImageGrid {
            width,
            height,
            values: vec![0.0; n],
            slow: vec![false; n],
            near: vec![false; n],
            overflow: 0.0,
        }
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.width + ix]
    }

    /// Sum of the pixel payloads, accumulated pairwise.
    pub fn total(&self) -> f64 {
        crate::measure::pairwise_sum(&self.values)
    }

    pub fn inside_mask(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v == 0.0).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RenderOptions {
    pub max_steps: u32,
    /// 2×2 samples per pixel; a pixel is inside if any sample is.
    pub supersample: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            max_steps: DEFAULT_MAX_STEPS,
            supersample: false,
        }
    }
}

pub fn render_limit_set(
    pair: &KleinPair,
    side: Side,
    viewport: &Viewport,
    max_steps: u32,
) -> ImageGrid {
    render_limit_set_with(
        pair,
        side,
        viewport,
        RenderOptions {
            max_steps,
            supersample: false,
        },
    )
}

pub fn render_limit_set_with(
    pair: &KleinPair,
    side: Side,
    viewport: &Viewport,
    opts: RenderOptions,
) -> ImageGrid {
    let (w, h) = (viewport.pixels_x, viewport.pixels_y);
    let offsets: &[(f64, f64)] = if opts.supersample {
        &[(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]
    } else {
        &[(0.5, 0.5)]
    };
    // The estimate is only good to a factor of about 3.
    let reach = 2.0 * viewport.pixel_size();
    let rows: Vec<Vec<(f64, bool, bool)>> = par::map_range(h, |iy| {
        (0..w)
            .map(|ix| {
                let mut worst = 0u32;
                let mut near = false;
                for &(dx, dy) in offsets {
                    let z = viewport.sample(ix as f64 + dx, iy as f64 + dy);
                    let res = pair.limit_membership(SpherePoint::Finite(z), side, opts.max_steps);
                    match res.status {
                        EscapeStatus::Inside => return (0.0, res.slow, false),
                        EscapeStatus::Escaped(k) => worst = worst.max(k),
                    }
                    near |= res.distance.is_some_and(|d| d < reach);
                }
                (worst as f64, false, near)
            })
            .collect()
    });
    let mut grid = ImageGrid::new(w, h);
    for (iy, row) in rows.into_iter().enumerate() {
        for (ix, (v, slow, near)) in row.into_iter().enumerate() {
            let k = iy * w + ix;
            grid.values[k] = v;
            grid.slow[k] = slow;
            grid.near[k] = near;
        }
    }
    grid
}

/// Bins atom weights into pixels; infinity and atoms outside the viewport go
/// to `overflow`.
pub fn render_measure(mu: &AtomicMeasure, viewport: &Viewport) -> ImageGrid {
    let mut grid = ImageGrid::new(viewport.pixels_x, viewport.pixels_y);
    let mut spill = Vec::new();
    for &(p, wt) in &mu.atoms {
        match p.finite().and_then(|z| viewport.pixel_of(z)) {
            Some((ix, iy)) => grid.values[iy * grid.width + ix] += wt,
            None => spill.push(wt),
        }
    }
    grid.overflow = crate::measure::pairwise_sum(&spill);
    grid
}

/// Inside pixels with an escaped 4-neighbour, together with the escaped
/// pixels flagged `near`.
pub fn boundary_mask(grid: &ImageGrid) -> Vec<bool> {
    let (w, h) = (grid.width, grid.height);
    let inside = grid.inside_mask();
    let mut out = vec![false; w * h];
    for iy in 0..h {
        for ix in 0..w {
            if grid.near[iy * w + ix] {
                out[iy * w + ix] = true;
            }
            if !inside[iy * w + ix] {
                continue;
            }
            let mut nbrs = Vec::with_capacity(4);
            if ix > 0 {
                nbrs.push(iy * w + ix - 1);
            }
            if ix + 1 < w {
                nbrs.push(iy * w + ix + 1);
            }
            if iy > 0 {
                nbrs.push((iy - 1) * w + ix);
            }
            if iy + 1 < h {
                nbrs.push((iy + 1) * w + ix);
            }
            out[iy * w + ix] = nbrs.iter().any(|&k| !inside[k]);
        }
    }
    out
}

/// Grows a mask by `radius` pixels in the Chebyshev metric.
pub fn dilate(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    // Separable: a horizontal pass then a vertical pass.
    let pass = |src: &[bool], horizontal: bool| {
        let mut dst = vec![false; src.len()];
        for iy in 0..height {
            for ix in 0..width {
                if !src[iy * width + ix] {
                    continue;
                }
                if horizontal {
                    for x in ix.saturating_sub(radius)..=(ix + radius).min(width - 1) {
                        dst[iy * width + x] = true;
                    }
                } else {
                    for y in iy.saturating_sub(radius)..=(iy + radius).min(height - 1) {
                        dst[y * width + ix] = true;
                    }
                }
            }
        }
        dst
    };
    pass(&pass(mask, true), false)
}

/// Fraction of a heatmap's in-view mass lying on pixels where `mask` holds.
pub fn mass_fraction_on(heat: &ImageGrid, mask: &[bool]) -> f64 {
    let on: Vec<f64> = heat
        .values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .collect();
    let total = heat.total();
    if total == 0.0 {
        0.0
    } else {
        crate::measure::pairwise_sum(&on) / total
    }
}

/// Maps pixel payloads to colours.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Palette {
    /// Inside black; escape steps on a cyclic gradient.
    Escape,
    /// Log-scaled heat relative to the brightest pixel.
    Heat,
}

impl std::str::FromStr for Palette {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "escape" => Ok(Palette::Escape),
            "heat" => Ok(Palette::Heat),
            _ => Err(Error::Parse(format!(
                "palette must be escape or heat, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Palette {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Palette::Escape => "escape",
            Palette::Heat => "heat",
        })
    }
}

const CYCLE: u32 = 24;

fn channel(t: f64) -> u8 {
    (255.0 * t.clamp(0.0, 1.0)).round() as u8
}

impl Palette {
    /// Colour of escape step `k >= 1`.
    pub fn escape_rgb(k: u32) -> [u8; 3] {
        let t = ((k - 1) % CYCLE) as f64 / CYCLE as f64;
        let g = |phase: f64| channel(0.55 + 0.45 * (TAU * (t + phase)).cos());
        [g(0.0), g(1.0 / 3.0), g(2.0 / 3.0)]
    }

    fn heat_level(v: f64, max: f64) -> f64 {
        if v <= 0.0 || max <= 0.0 {
            0.0
        } else {
            (1.0 + 1e3 * v / max).ln() / (1.0 + 1e3f64).ln()
        }
    }

    /// RGB bytes for every pixel, row-major.
    pub fn rgb(&self, grid: &ImageGrid) -> Vec<u8> {
        let max = grid.values.iter().cloned().fold(0.0, f64::max);
        let mut out = Vec::with_capacity(grid.values.len() * 3);
        for &v in &grid.values {
            let px = match self {
                Palette::Escape if v == 0.0 => [0, 0, 0],
                Palette::Escape => Self::escape_rgb(v as u32),
                Palette::Heat => {
                    let t = Self::heat_level(v, max);
                    [
                        channel(3.0 * t),
                        channel(3.0 * t - 1.0),
                        channel(3.0 * t - 2.0),
                    ]
                }
            };
            out.extend_from_slice(&px);
        }
        out
    }

    pub fn gray(&self, grid: &ImageGrid) -> Vec<u8> {
        let max = grid.values.iter().cloned().fold(0.0, f64::max);
        grid.values
            .iter()
            .map(|&v| match self {
                Palette::Escape if v == 0.0 => 0,
                Palette::Escape => 64 + ((v as u32 - 1) % CYCLE * 191 / (CYCLE - 1)) as u8,
                Palette::Heat => channel(Self::heat_level(v, max)),
            })
            .collect()
    }
}

pub fn encode_ppm(grid: &ImageGrid, palette: Palette) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.width, grid.height).into_bytes();
    out.extend(palette.rgb(grid));
    out
}

pub fn encode_pgm(grid: &ImageGrid, palette: Palette) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width, grid.height).into_bytes();
    out.extend(palette.gray(grid));
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = BufWriter::new(File::create(path).map_err(io)?);
    f.write_all(bytes).map_err(io)?;
    f.flush().map_err(io)
}

pub fn write_ppm(grid: &ImageGrid, path: &Path, palette: Palette) -> Result<()> {
    write_bytes(path, &encode_ppm(grid, palette))
}

pub fn write_pgm(grid: &ImageGrid, path: &Path, palette: Palette) -> Result<()> {
    write_bytes(path, &encode_pgm(grid, palette))
}
