//! Browser bindings for the static demo page in `www/`.

use corrdyn::measure::{transport, TransportOptions};
use corrdyn::periodic::{periodic_points, Method, PeriodicOptions, PeriodicSide};
use corrdyn::render::{
    render_limit_set_with, render_measure, ImageGrid, Palette, RenderOptions, Viewport,
};
use corrdyn::{AtomicMeasure, CorrContext, Direction, KleinPair, Side, SpherePoint};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

/// Largest image edge and transport depth the page may ask for.
const MAX_PIXELS: usize = 1024;
const MAX_DEPTH: u32 = 16;
const MAX_PERIOD: u32 = 4;

fn viewport(cx: f64, cy: f64, width: f64, px: usize, py: usize) -> Result<Viewport, String> {
    if px > MAX_PIXELS || py > MAX_PIXELS {
        return Err(format!("images are limited to {MAX_PIXELS} pixels a side"));
    }
    Viewport::new(Complex64::new(cx, cy), width, px, py).map_err(|e| e.to_string())
}

fn rgba(grid: &ImageGrid, palette: Palette, mark_near: bool) -> Vec<u8> {
    let rgb = palette.rgb(grid);
    let mut out = Vec::with_capacity(grid.values.len() * 4);
    for (k, px) in rgb.chunks_exact(3).enumerate() {
        if mark_near && grid.near[k] {
            out.extend_from_slice(&[255, 255, 255, 255]);
        } else {
            out.extend_from_slice(&[px[0], px[1], px[2], 255]);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn limit_set_rgba(
    a: Complex64,
    plus: bool,
    cx: f64,
    cy: f64,
    width: f64,
    px: usize,
    py: usize,
    max_steps: u32,
) -> Result<Vec<u8>, String> {
    let ctx = CorrContext::new(a).map_err(|e| e.to_string())?;
    let pair = KleinPair::supported(&ctx).map_err(|e| e.to_string())?;
    let vp = viewport(cx, cy, width, px, py)?;
    let side = if plus { Side::Plus } else { Side::Minus };
    let grid = render_limit_set_with(
        &pair,
        side,
        &vp,
        RenderOptions {
            max_steps: max_steps.max(1),
            supersample: false,
        },
    );
    // Thin limit sets have no inside pixels; paint the pixels within
    // reach of the set so they still show.
    Ok(rgba(&grid, Palette::Escape, true))
}

#[allow(clippy::too_many_arguments)]
pub fn measure_rgba(
    a: Complex64,
    start: Complex64,
    depth: u32,
    backward: bool,
    cx: f64,
    cy: f64,
    width: f64,
    px: usize,
    py: usize,
) -> Result<Vec<u8>, String> {
    if depth > MAX_DEPTH {
        return Err(format!("depth is limited to {MAX_DEPTH}"));
    }
    let ctx = CorrContext::new(a).map_err(|e| e.to_string())?;
    let vp = viewport(cx, cy, width, px, py)?;
    let dir = if backward {
        Direction::Backward
    } else {
        Direction::Forward
    };
    let mu = transport(
        &ctx,
        &AtomicMeasure::dirac(SpherePoint::Finite(start)),
        depth,
        dir,
        TransportOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(rgba(&render_measure(&mu, &vp), Palette::Heat, false))
}

/// Flat `[re, im, side, multiplicity]` records; side is 0 for the fixed
/// point 1, -1 minus, 1 plus, 2 unclassified. Points at infinity are skipped.
pub fn periodic_records(a: Complex64, n: u32) -> Result<Vec<f64>, String> {
    if n == 0 || n > MAX_PERIOD {
        return Err(format!("period must be between 1 and {MAX_PERIOD}"));
    }
    let ctx = CorrContext::new(a).map_err(|e| e.to_string())?;
    let rep = periodic_points(&ctx, n, Method::Resultant, &PeriodicOptions::default())
        .map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for p in &rep.points {
        let Some(z) = p.point.finite() else { continue };
        let side = match p.side {
            PeriodicSide::Fixed1 => 0.0,
            PeriodicSide::Minus => -1.0,
            PeriodicSide::Plus => 1.0,
            PeriodicSide::Unclassified => 2.0,
        };
        out.extend_from_slice(&[z.re, z.im, side, p.multiplicity as f64]);
    }
    Ok(out)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn limit_set(
    a_re: f64,
    a_im: f64,
    plus: bool,
    cx: f64,
    cy: f64,
    width: f64,
    px: usize,
    py: usize,
    max_steps: u32,
) -> Result<Vec<u8>, JsError> {
    limit_set_rgba(
        Complex64::new(a_re, a_im),
        plus,
        cx,
        cy,
        width,
        px,
        py,
        max_steps,
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn orbit_heatmap(
    a_re: f64,
    a_im: f64,
    z_re: f64,
    z_im: f64,
    depth: u32,
    backward: bool,
    cx: f64,
    cy: f64,
    width: f64,
    px: usize,
    py: usize,
) -> Result<Vec<u8>, JsError> {
    measure_rgba(
        Complex64::new(a_re, a_im),
        Complex64::new(z_re, z_im),
        depth,
        backward,
        cx,
        cy,
        width,
        px,
        py,
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn periodic(a_re: f64, a_im: f64, n: u32) -> Result<Vec<f64>, JsError> {
    periodic_records(Complex64::new(a_re, a_im), n).map_err(|e| JsError::new(&e))
}
