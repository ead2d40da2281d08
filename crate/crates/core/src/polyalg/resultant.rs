use std::f64::consts::TAU;

use num_complex::Complex64;

use super::linalg::determinant;
use super::{BiPoly, Poly};
use crate::error::{Error, Result};
use crate::par;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug)]
pub struct ResultantOptions {
    /// Radius of the circles carrying the interpolation nodes.
    pub radius: f64,
    /// Largest accepted relative residual at the off-grid check points.
    pub check_tol: f64,
}

impl Default for ResultantOptions {
    fn default() -> Self {
        ResultantOptions {
            radius: 1.5,
            check_tol: 1e-6,
        }
    }
}

fn sylvester(p: &Poly, q: &Poly) -> Vec<Vec<Complex64>> {
    let m = p.formal_degree();
    let n = q.formal_degree();
    let size = m + n;
    let mut rows = Vec::with_capacity(size);
    for i in 0..n {
        let mut row = vec![ZERO; size];
        for (k, &c) in p.coeffs.iter().rev().enumerate() {
            row[i + k] = c;
        }
        rows.push(row);
    }
    for i in 0..m {
        let mut row = vec![ZERO; size];
        for (k, &c) in q.coeffs.iter().rev().enumerate() {
            row[i + k] = c;
        }
        rows.push(row);
    }
    rows
}

/// Resultant of two univariate polynomials at their formal degrees, as the
/// determinant of the Sylvester matrix.
pub fn resultant(p: &Poly, q: &Poly) -> Complex64 {
    determinant(sylvester(p, q))
}

/// Product of the Sylvester row norms: an upper bound on `|det|`.
fn hadamard_bound(p: &Poly, q: &Poly) -> f64 {
    let np: f64 = p.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let nq: f64 = q.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    np.powi(q.formal_degree() as i32) * nq.powi(p.formal_degree() as i32)
}

fn nodes(count: usize, radius: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(radius, TAU * k as f64 / count as f64))
        .collect()
}

/// Coefficients of the degree `< n` polynomial taking `vals[k]` at
/// `radius·ω^k`: an inverse DFT followed by rescaling.
fn interpolate_circle(vals: &[Complex64], radius: f64) -> Vec<Complex64> {
    let n = vals.len();
    (0..n)
        .map(|i| {
            let s: Complex64 = vals
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    v * Complex64::from_polar(1.0, -TAU * ((i * k) % n) as f64 / n as f64)
                })
                .sum();
            s / (n as f64 * radius.powi(i as i32))
        })
        .collect()
}

/// Eliminates `x` from `P(z, x)` and `Q(x, w)`, returning `Res_x` as a
/// polynomial in `(z, w)` of declared bidegree
/// `(deg_x Q · deg_z P, deg_x P · deg_w Q)`.
///
/// Values on a grid of roots of unity scaled to `opts.radius` are obtained as
/// numeric Sylvester determinants and interpolated by inverse DFT in each
/// variable. The result is checked against direct determinants at three
/// off-grid points.
pub fn resultant_x(p: &BiPoly, q: &BiPoly, opts: ResultantOptions) -> Result<BiPoly> {
    let m = p.dy();
    let n = q.dx();
    let out_dz = n * p.dx();
    let out_dw = m * q.dy();
    let zs = nodes(out_dz + 1, opts.radius);
    let ws = nodes(out_dw + 1, opts.radius);
    let pz: Vec<Poly> = zs.iter().map(|&z| p.at_x(z)).collect();
    let qw: Vec<Poly> = ws.iter().map(|&w| q.at_y(w)).collect();
    let nw = ws.len();
    let vals: Vec<(Complex64, f64)> = par::map_range(zs.len() * nw, |idx| {
        let (k, l) = (idx / nw, idx % nw);
        (resultant(&pz[k], &qw[l]), hadamard_bound(&pz[k], &qw[l]))
    });
    if vals.iter().all(|&(d, h)| d.norm() <= 1e-11 * h) {
        return Err(Error::DegenerateResultant);
    }
    // Interpolate in z for each w node, then in w for each z power.
    let mut by_w: Vec<Vec<Complex64>> = Vec::with_capacity(nw);
    for l in 0..nw {
        let col: Vec<Complex64> = (0..zs.len()).map(|k| vals[k * nw + l].0).collect();
        by_w.push(interpolate_circle(&col, opts.radius));
    }
    let mut out = BiPoly::zeros(out_dz, out_dw);
    for i in 0..=out_dz {
        let row: Vec<Complex64> = (0..nw).map(|l| by_w[l][i]).collect();
        out.coeffs[i] = interpolate_circle(&row, opts.radius);
    }

    let checks = [
        (0.61, 0.37, 0.83, 1.91),
        (0.93, 2.47, 0.55, 4.02),
        (0.37, 5.11, 0.97, 0.29),
    ];
    let mut worst = 0.0f64;
    for &(rz, tz, rw, tw) in &checks {
        let z = Complex64::from_polar(rz * opts.radius, tz);
        let w = Complex64::from_polar(rw * opts.radius, tw);
        let direct = resultant(&p.at_x(z), &q.at_y(w));
        let interp = out.eval(z, w);
        let scale = out.abs_eval(z.norm(), w.norm()).max(direct.norm());
        if scale > 0.0 {
            worst = worst.max((direct - interp).norm() / scale);
        }
    }
    if worst > opts.check_tol {
        return Err(Error::Conditioning { residual: worst });
    }
    Ok(out)
}
