use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{Poly, COEFF_TOL};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    pub max_sweeps: usize,
    /// A root is settled once its update is below `step_tol·(1 + |root|)`.
    pub step_tol: f64,
    /// Base clustering distance, relative to `1 + |root|`.
    pub cluster_tol: f64,
    /// Refine each cluster center by Newton on the matching derivative.
    pub polish: bool,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            max_sweeps: 200,
            step_tol: 1e-12,
            cluster_tol: 1e-6,
            polish: true,
        }
    }
}

/// Distinct roots with multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub roots: Vec<(Complex64, u32)>,
    /// `|p(r)| / Σ|c_i||r|^i` for each reported root.
    pub residuals: Vec<f64>,
    /// Degree lost to vanishing leading coefficients.
    pub at_infinity: usize,
    pub sweeps: usize,
}

impl RootSet {
    pub fn total_multiplicity(&self) -> u32 {
        self.roots.iter().map(|r| r.1).sum()
    }

    pub fn distinct(&self) -> usize {
        self.roots.len()
    }
}

/// Positive root of `|a_d| x^d = Σ_{i<d} |a_i| x^i`: every root of `p` lies
/// in the closed disk of this radius.
fn cauchy_radius(p: &Poly) -> f64 {
    let d = p.formal_degree();
    let lead = p.coeffs[d].norm();
    let g = |x: f64| {
        lead * x.powi(d as i32)
            - (0..d)
                .map(|i| p.coeffs[i].norm() * x.powi(i as i32))
                .sum::<f64>()
    };
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `p(z)`, `p'(z)` and the rounding-error bound of Horner's rule at `z`.
fn eval_with_bound(p: &Poly, z: Complex64) -> (Complex64, Complex64, f64) {
    let mut v = ZERO;
    let mut dv = ZERO;
    for &c in p.coeffs.iter().rev() {
        dv = dv * z + v;
        v = v * z + c;
    }
    let bound = 4.0 * (p.coeffs.len() as f64) * f64::EPSILON * p.abs_eval(z.norm());
    (v, dv, bound)
}

/// Aberth–Ehrlich iteration started on a perturbed circle.
fn aberth(p: &Poly, opts: &RootOptions) -> Result<(Vec<Complex64>, usize)> {
    let d = p.formal_degree();
    let r0 = cauchy_radius(p);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(r0, TAU * k as f64 / d as f64 + 0.4))
        .collect();
    let mut done = vec![false; d];
    for sweep in 1..=opts.max_sweeps {
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (v, dv, bound) = eval_with_bound(p, z[i]);
            if v.norm() <= bound {
                done[i] = true;
                continue;
            }
            let ratio = v / dv;
            let s: Complex64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| 1.0 / (z[i] - z[j]))
                .sum();
            let step = ratio / (1.0 - ratio * s);
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[i] -= step;
            if step.norm() < opts.step_tol * (1.0 + z[i].norm()) {
                done[i] = true;
            }
        }
        if done.iter().all(|&x| x) {
            return Ok((z, sweep));
        }
    }
    let worst = z
        .iter()
        .map(|&r| p.eval(r).norm() / p.abs_eval(r.norm()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Err(Error::RootFinder {
        sweeps: opts.max_sweeps,
        worst_residual: worst,
    })
}

/// Single-linkage clusters of `roots` where `i` and `j` link when
/// `|r_i - r_j| <= max(tol_i, tol_j)`. Returns member index lists in order of
/// first member.
fn link_clusters(roots: &[Complex64], tol: &[f64]) -> Vec<Vec<usize>> {
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (roots[i] - roots[j]).norm() <= tol[i].max(tol[j]) {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut label, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn centroid(roots: &[Complex64], members: &[usize]) -> Complex64 {
    members.iter().map(|&i| roots[i]).sum::<Complex64>() / members.len() as f64
}

/// Groups approximations lying within `tol(r)` of each other (single
/// linkage); each cluster is reported at its centroid with multiplicity equal
/// to its size.
pub fn cluster_multiplicities(
    roots: &[Complex64],
    tol: impl Fn(Complex64) -> f64,
) -> Vec<(Complex64, u32)> {
    let t: Vec<f64> = roots.iter().map(|&r| tol(r)).collect();
    link_clusters(roots, &t)
        .into_iter()
        .map(|g| (centroid(roots, &g), g.len() as u32))
        .collect()
}

/// Like [`cluster_multiplicities`] with one linkage tolerance per root.
pub fn cluster_with_tolerances(roots: &[Complex64], tol: &[f64]) -> Vec<(Complex64, u32)> {
    link_clusters(roots, tol)
        .into_iter()
        .map(|g| (centroid(roots, &g), g.len() as u32))
        .collect()
}

/// Aberth–Ehrlich sweeps for a polynomial known only through an evaluator
/// returning `(p(z), p'(z))`, started from `start` (one entry per root).
/// Stops when every update is below `step_tol·(|z| + floor)` or after
/// `max_sweeps`; returns the approximations and the sweeps used.
pub fn aberth_refine(
    eval: impl Fn(Complex64) -> Option<(Complex64, Complex64)>,
    start: Vec<Complex64>,
    step_tol: f64,
    floor: f64,
    max_sweeps: usize,
) -> (Vec<Complex64>, usize) {
    let mut z = start;
    let d = z.len();
    let mut done = vec![false; d];
    for sweep in 1..=max_sweeps {
        for i in 0..d {
            if done[i] {
                continue;
            }
            let Some((v, dv)) = eval(z[i]) else { continue };
            if v == ZERO {
                done[i] = true;
                continue;
            }
            let ratio = v / dv;
            let s: Complex64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| 1.0 / (z[i] - z[j]))
                .sum();
            let step = ratio / (1.0 - ratio * s);
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[i] -= step;
            if step.norm() < step_tol * (z[i].norm() + floor) {
                done[i] = true;
            }
        }
        if done.iter().all(|&x| x) {
            return (z, sweep);
        }
    }
    (z, max_sweeps)
}

/// Newton on `q` from `z0`, keeping only steps that reduce `|q|`.
fn newton_polish(q: &Poly, z0: Complex64, max_move: f64) -> Complex64 {
    let dq = q.derivative();
    let mut z = z0;
    let mut fz = q.eval(z).norm();
    for _ in 0..12 {
        let d = dq.eval(z);
        if d == ZERO {
            break;
        }
        let next = z - q.eval(z) / d;
        let fnext = q.eval(next).norm();
        if !(fnext < fz) || (next - z0).norm() > max_move {
            break;
        }
        z = next;
        fz = fnext;
        if fz == 0.0 {
            break;
        }
    }
    z
}

/// All roots of `Σ coeffs[i] x^i` with multiplicities.
///
/// Leading coefficients below `1e-12·max|c|` are dropped first and counted
/// as roots at infinity; exact zero roots are split off. Clusters are formed
/// from the base tolerance `cluster_tol·(1 + |r|)` together with inclusion
/// radii `d·|p(r_i)| / |a_d ∏_{j≠i}(r_i - r_j)|`, since the approximations to
/// an `m`-fold root only agree to about `ε^{1/m}`.
pub fn roots_simultaneous(coeffs: &[Complex64], opts: RootOptions) -> Result<RootSet> {
    let mut p = Poly::new(coeffs.to_vec());
    if p.max_abs() == 0.0 || p.coeffs.is_empty() {
        return Err(Error::Domain(
            "the zero polynomial has no isolated roots".into(),
        ));
    }
    let at_infinity = p.trim(COEFF_TOL);
    let zeros = p.coeffs.iter().take_while(|c| **c == ZERO).count();
    p.coeffs.drain(..zeros);
    let mut roots: Vec<(Complex64, u32)> = Vec::new();
    if zeros > 0 {
        roots.push((ZERO, zeros as u32));
    }
    let d = p.formal_degree();
    let mut sweeps = 0;
    if d == 1 {
        roots.push((-p.coeffs[0] / p.coeffs[1], 1));
    } else if d > 1 {
        let (z, s) = aberth(&p, &opts)?;
        sweeps = s;
        let lead = p.coeffs[d];
        let tol: Vec<f64> = (0..d)
            .map(|i| {
                let (v, _, bound) = eval_with_bound(&p, z[i]);
                let prod: Complex64 = (0..d).filter(|&j| j != i).map(|j| z[i] - z[j]).product();
                let rho = d as f64 * v.norm().max(bound) / (lead * prod).norm();
                let cap = 1e-3 * (1.0 + z[i].norm());
                let base = opts.cluster_tol * (1.0 + z[i].norm());
                // Disks touch when the distance is below the radius sum, which is
                // at most twice the larger radius.
                base.max((2.0 * rho).min(cap))
            })
            .collect();
        for g in link_clusters(&z, &tol) {
            let m = g.len() as u32;
            let c = centroid(&z, &g);
            let spread = g.iter().map(|&i| (z[i] - c).norm()).fold(0.0, f64::max);
            let center = if opts.polish {
                let mut q = p.clone();
                for _ in 1..m {
                    q = q.derivative();
                }
                newton_polish(&q, c, 10.0 * spread + opts.cluster_tol * (1.0 + c.norm()))
            } else {
                c
            };
            roots.push((center, m));
        }
    }
    let full = Poly::new(coeffs.to_vec());
    let residuals = roots
        .iter()
        .map(|&(r, _)| {
            let s = full.abs_eval(r.norm());
            if s > 0.0 {
                full.eval(r).norm() / s
            } else {
                0.0
            }
        })
        .collect();
    Ok(RootSet {
        roots,
        residuals,
        at_infinity,
        sweeps,
    })
}
