//! Periodic points of `F_a` from the iterated graph polynomial, checked
//! against an independent branch-Newton search; parabolic Taylor data at
//! `z = 1`; superstable parameters.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corr::{fa_forward, CorrContext, Direction};
use crate::error::{Error, Result};
use crate::klein::{KleinPair, Restricted};
use crate::par;
use crate::polyalg::{
    aberth_refine, cluster_with_tolerances, resultant_x, roots_simultaneous, BiPoly, Poly,
    ResultantOptions, RootOptions,
};
use crate::sphere::{chordal_dist, SpherePoint};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Largest period handled through resultants.
pub const MAX_RESULTANT_PERIOD: u32 = 5;

fn lin(c0: Complex64, c1: Complex64) -> Poly {
    Poly::new(vec![c0, c1])
}

/// `Γ_a(z, w) = z²A² + zAB + B² - 3A²` with `A = 2w - (a+1)` and
/// `B = (a+1)w - 2a`: the graph of `F_a`, i.e. `P(z, J_a(w))` cleared of
/// denominators.
pub fn graph_polynomial(ctx: &CorrContext) -> BiPoly {
    let a = ctx.a;
    let pa = lin(-(a + 1.0), Complex64::new(2.0, 0.0));
    let pb = lin(-2.0 * a, a + 1.0);
    let aa = pa.mul(&pa);
    let ab = pa.mul(&pb);
    let bb = pb.mul(&pb);
    let mut g = BiPoly::zeros(2, 2);
    for j in 0..3 {
        g.coeffs[2][j] = aa.coeffs[j];
        g.coeffs[1][j] = ab.coeffs[j];
        g.coeffs[0][j] = bb.coeffs[j] - 3.0 * aa.coeffs[j];
    }
    g
}

/// All `2^n` images of `z` under `F_a^n`, with repetition.
pub fn forward_images(ctx: &CorrContext, z: SpherePoint, n: u32) -> Vec<SpherePoint> {
    let mut cur = vec![z];
    for _ in 0..n {
        cur = cur
            .iter()
            .flat_map(|&p| fa_forward(ctx, p).points())
            .collect();
    }
    cur
}

/// The graph of `F_a^n` as a bivariate polynomial of bidegree `(2^n, 2^n)`,
/// built by repeated elimination and validated on sampled branch orbits.
pub fn graph_iterate(ctx: &CorrContext, n: u32) -> Result<BiPoly> {
    if n == 0 || n > MAX_RESULTANT_PERIOD {
        return Err(Error::Domain(format!(
            "graph_iterate supports 1 <= n <= {MAX_RESULTANT_PERIOD}, got {n}"
        )));
    }
    let g = graph_polynomial(ctx);
    let mut cur = g.clone();
    for _ in 1..n {
        cur = resultant_x(&cur, &g, ResultantOptions::default())?;
        let s = cur.max_abs();
        for c in cur.coeffs.iter_mut().flatten() {
            *c /= s;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed + n as u64);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let z = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        for w in forward_images(ctx, z.into(), n) {
            let Some(w) = w.finite() else { continue };
            let scale = cur.abs_eval(z.norm(), w.norm());
            worst = worst.max(cur.eval(z, w).norm() / scale);
        }
    }
    if worst > 1e-6 {
        return Err(Error::Composition { worst });
    }
    Ok(cur)
}

/// `F_a` in the coordinate `u = z - 1`, which keeps the parabolic point
/// exactly at `0`. Points carry their offset from a base point so that
/// `u - f^n(u)` keeps its relative accuracy along the branch through `0`.
#[derive(Clone)]
struct Centered {
    am1: Complex64,
    /// `Γ(1 + x, 1 + x + δ) = q[0](x) + q[1](x) δ + q[2](x) δ^2`.
    q: [Poly; 3],
    /// The same for `Γ(1 + x + δ, 1 + x)`, the backward direction.
    r: [Poly; 3],
}

/// Below this `|x|` the image near `x` is recomputed as `x + δ(x)`.
const NEAR_PARABOLIC: f64 = 0.1;

impl Centered {
    fn new(ctx: &CorrContext) -> Self {
        let a = ctx.a;
        let al = 1.0 - a;
        let one = Complex64::new(1.0, 0.0);
        let cst = |c: Complex64| Poly::new(vec![c]);
        // A = 2w - (a+1), B = (a+1)w - 2a at w = 1 + x + δ, split by powers of δ.
        let (a0, a1) = (lin(al, 2.0 * one), cst(2.0 * one));
        let (b0, b1) = (lin(al, a + 1.0), cst(a + 1.0));
        let zz = Poly::new(vec![-2.0 * one, 2.0 * one, one]);
        let y = lin(one, one);
        let add = |p: Poly, q: Poly| {
            let n = p.coeffs.len().max(q.coeffs.len());
            let at = |r: &Poly, i: usize| r.coeffs.get(i).copied().unwrap_or(ZERO);
            Poly::new((0..n).map(|i| at(&p, i) + at(&q, i)).collect())
        };
        let two = cst(2.0 * one);
        let mut q0 = add(add(zz.mul(&a0).mul(&a0), y.mul(&a0).mul(&b0)), b0.mul(&b0));
        // 1 is at least a double fixed point for every a.
        q0.coeffs[0] = ZERO;
        q0.coeffs[1] = ZERO;
        let q1 = add(
            add(
                two.mul(&zz).mul(&a0).mul(&a1),
                y.mul(&add(a0.mul(&b1), a1.mul(&b0))),
            ),
            two.mul(&b0).mul(&b1),
        );
        let q2 = add(add(zz.mul(&a1).mul(&a1), y.mul(&a1).mul(&b1)), b1.mul(&b1));
        // z = 1 + x + δ: (z^2 - 3) gains 2(1+x)δ + δ^2 and z gains δ.
        let a0sq = a0.mul(&a0);
        let r1 = add(two.mul(&y).mul(&a0sq), a0.mul(&b0));
        let r = [q0.clone(), r1, a0sq];
        Centered {
            am1: a - 1.0,
            q: [q0, q1, q2],
            r,
        }
    }

    /// `v^2 + (u+3)v + u(u+3) = 0`, the covering relation shifted by 1.
    fn cov(u: Option<Complex64>) -> [Option<Complex64>; 2] {
        let Some(u) = u else { return [None, None] };
        let b = u + 3.0;
        let c = u * b;
        let mut s = (b * b - 4.0 * c).sqrt();
        if (b.conj() * s).re < 0.0 {
            s = -s;
        }
        let v1 = -(b + s) / 2.0;
        let v2 = if v1 == ZERO { ZERO } else { c / v1 };
        [finite(v1), finite(v2)]
    }

    /// `J_a(1 + v) - 1 = (a-1)v / (2v + 1 - a)`.
    fn j(&self, v: Option<Complex64>) -> Option<Complex64> {
        match v {
            None => Some(self.am1 / 2.0),
            Some(v) => {
                let den = 2.0 * v - self.am1;
                if den == ZERO {
                    None
                } else {
                    finite(self.am1 * v / den)
                }
            }
        }
    }

    /// Small root `δ` of `Γ(1 + x, 1 + x + δ) = 0` (forward) or
    /// `Γ(1 + x + δ, 1 + x) = 0` (backward): the displacement along the branch
    /// fixing the parabolic point.
    fn parabolic_shift(&self, x: Complex64, dir: Direction) -> Option<Complex64> {
        let q = match dir {
            Direction::Forward => &self.q,
            Direction::Backward => &self.r,
        };
        let [c0, c1, c2] = [q[0].eval(x), q[1].eval(x), q[2].eval(x)];
        let mut s = (c1 * c1 - 4.0 * c0 * c2).sqrt();
        if (c1.conj() * s).re < 0.0 {
            s = -s;
        }
        let den = c1 + s;
        if den == ZERO {
            return None;
        }
        finite(-2.0 * c0 / den)
    }

    /// Images of `x` paired with their offsets, given `x`'s own offset.
    fn step(
        &self,
        x: Complex64,
        off: Complex64,
        dir: Direction,
    ) -> [Option<(Complex64, Complex64)>; 2] {
        let [p, q] = match dir {
            Direction::Forward => {
                let [p, q] = Self::cov(Some(x));
                [self.j(p), self.j(q)]
            }
            Direction::Backward => Self::cov(self.j(Some(x))),
        };
        let mut out = [p.map(|v| (v, v - x + off)), q.map(|v| (v, v - x + off))];
        if x.norm() < NEAR_PARABOLIC {
            let dist = |o: &Option<(Complex64, Complex64)>| {
                o.map_or(f64::INFINITY, |(v, _)| (v - x).norm())
            };
            let k = if dist(&out[0]) <= dist(&out[1]) { 0 } else { 1 };
            if dist(&out[k]) <= 0.5 * x.norm() {
                if let Some(d) = self.parabolic_shift(x, dir) {
                    out[k] = Some((x + d, off + d));
                }
            }
        }
        out
    }

    fn images(&self, u: Complex64, dir: Direction) -> [Option<Complex64>; 2] {
        let [p, q] = self.step(u, ZERO, dir);
        [p.map(|t| t.0), q.map(|t| t.0)]
    }

    /// Follows a branch chain from `u`, at each step taking the image nearest
    /// the previous chain value; returns `f^n(u) - u`.
    fn tracked(
        &self,
        u: Complex64,
        chain: &[Complex64],
        dir: Direction,
        out: Option<&mut Vec<Complex64>>,
    ) -> Option<Complex64> {
        let (mut cur, mut off) = (u, ZERO);
        let mut trail = Vec::with_capacity(chain.len());
        for &target in chain {
            let [p, q] = self.step(cur, off, dir);
            (cur, off) = match (p, q) {
                (Some(p), Some(q)) => {
                    if (p.0 - target).norm() <= (q.0 - target).norm() {
                        p
                    } else {
                        q
                    }
                }
                (Some(p), None) | (None, Some(p)) => p,
                (None, None) => return None,
            };
            trail.push(cur);
        }
        if let Some(out) = out {
            *out = trail;
        }
        Some(off)
    }

    /// The chain obtained by following branch bits from `u`.
    fn chain_for_word(
        &self,
        u: Complex64,
        word: u32,
        n: u32,
        dir: Direction,
    ) -> Option<Vec<Complex64>> {
        let mut cur = u;
        let mut chain = Vec::with_capacity(n as usize);
        for k in 0..n {
            cur = self.images(cur, dir)[((word >> k) & 1) as usize]?;
            chain.push(cur);
        }
        Some(chain)
    }

    /// Leading coefficient in `w` of `Γ(1 + x, w)`.
    fn lead(&self, x: Complex64) -> Complex64 {
        let z = x + 1.0;
        let ap = self.am1 + 2.0;
        4.0 * z * z + 2.0 * ap * z + ap * ap - 12.0
    }

    /// All `n`-step images of `u` with their offsets from `u`, and the
    /// leading coefficient `lc_w Γ^(n)(1 + u, ·)` accumulated by
    /// `Res_x(P, Q) = lc_x(P)^{deg_x Q} ∏_{P(x)=0} Q(x)`.
    fn orbit_offsets(&self, u: Complex64, n: u32) -> Option<(Vec<Complex64>, Complex64)> {
        let mut level = vec![(u, ZERO)];
        let mut lead = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            lead = lead
                * lead
                * level
                    .iter()
                    .map(|&(x, _)| self.lead(x))
                    .product::<Complex64>();
            let mut next = Vec::with_capacity(level.len() * 2);
            for &(x, off) in &level {
                let [p, q] = self.step(x, off, Direction::Forward);
                next.push(p?);
                next.push(q?);
            }
            level = next;
        }
        Some((level.into_iter().map(|t| t.1).collect(), lead))
    }

    /// `Γ^(n)(1 + u, 1 + u)` up to a constant factor, in product form.
    fn resultant_diagonal(&self, u: Complex64, n: u32) -> Option<Complex64> {
        let (offs, lead) = self.orbit_offsets(u, n)?;
        Some(lead * offs.iter().map(|&o| -o).product::<Complex64>())
    }
}

fn finite(z: Complex64) -> Option<Complex64> {
    (z.re.is_finite() && z.im.is_finite()).then_some(z)
}

/// Winding number of `f` around a circle, from `k` samples.
fn winding(
    f: impl Fn(Complex64) -> Option<Complex64>,
    center: Complex64,
    radius: f64,
    k: usize,
) -> Option<i64> {
    let mut total = 0.0;
    let mut prev = f(center + radius)?;
    for s in 1..=k {
        let z = center + Complex64::from_polar(radius, TAU * s as f64 / k as f64);
        let v = f(z)?;
        if v == ZERO {
            return None;
        }
        total += (v / prev).arg();
        prev = v;
    }
    Some((total / TAU).round() as i64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Resultant,
    Newton,
    Both,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resultant" => Ok(Method::Resultant),
            "newton" => Ok(Method::Newton),
            "both" => Ok(Method::Both),
            _ => Err(Error::Parse(format!(
                "method must be resultant, newton or both, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Resultant => "resultant",
            Method::Newton => "newton",
            Method::Both => "both",
        })
    }
}

/// Which limit set a periodic point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeriodicSide {
    Minus,
    Plus,
    Fixed1,
    /// Neither restricted orbit closes up numerically.
    Unclassified,
}

impl std::fmt::Display for PeriodicSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PeriodicSide::Minus => "minus",
            PeriodicSide::Plus => "plus",
            PeriodicSide::Fixed1 => "fixed1",
            PeriodicSide::Unclassified => "unclassified",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicPoint {
    pub point: SpherePoint,
    pub multiplicity: u32,
    pub side: PeriodicSide,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicReport {
    pub n: u32,
    pub points: Vec<PeriodicPoint>,
    /// Sum of multiplicities over verified points.
    pub total_multiplicity: u64,
    /// Number of distinct verified points.
    pub count_distinct: usize,
}

impl PeriodicReport {
    fn assemble(n: u32, mut points: Vec<PeriodicPoint>) -> Self {
        points.sort_by(|p, q| {
            key(p.point)
                .partial_cmp(&key(q.point))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let total_multiplicity = points
            .iter()
            .filter(|p| p.verified)
            .map(|p| p.multiplicity as u64)
            .sum();
        let count_distinct = points.iter().filter(|p| p.verified).count();
        PeriodicReport {
            n,
            points,
            total_multiplicity,
            count_distinct,
        }
    }

    pub fn verified_points(&self) -> Vec<SpherePoint> {
        self.points
            .iter()
            .filter(|p| p.verified)
            .map(|p| p.point)
            .collect()
    }

    /// Whether the verified multiplicities add up to `2^(n+1)`.
    pub fn complete(&self) -> bool {
        self.total_multiplicity == 1u64 << (self.n + 1)
    }

    /// Largest distance from `J_a` of a verified point to the verified set.
    pub fn j_asymmetry(&self, ctx: &CorrContext) -> f64 {
        let pts = self.verified_points();
        set_distance(&pts.iter().map(|&p| ctx.j(p)).collect::<Vec<_>>(), &pts)
    }
}

fn key(p: SpherePoint) -> (f64, f64, f64) {
    match p {
        SpherePoint::Finite(z) => (0.0, z.re, z.im),
        SpherePoint::Infinity => (1.0, 0.0, 0.0),
    }
}

/// Hausdorff distance in the chordal metric.
pub fn set_distance(a: &[SpherePoint], b: &[SpherePoint]) -> f64 {
    let one_way = |x: &[SpherePoint], y: &[SpherePoint]| {
        x.iter()
            .map(|&p| {
                y.iter()
                    .map(|&q| chordal_dist(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one_way(a, b).max(one_way(b, a))
}

#[derive(Clone, Copy, Debug)]
pub struct PeriodicOptions {
    /// Chordal distance within which `z ∈ F^n(z)` counts as verified.
    pub verify_tol: f64,
    /// Chordal distance within which the two methods must agree.
    pub agree_tol: f64,
    /// Newton seeds per axis on `[-4, 6] × [-5, 5]`.
    pub seed_grid: usize,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        PeriodicOptions {
            verify_tol: 1e-6,
            agree_tol: 1e-5,
            seed_grid: 30,
        }
    }
}

pub fn is_periodic(ctx: &CorrContext, z: SpherePoint, n: u32, tol: f64) -> bool {
    forward_images(ctx, z, n)
        .iter()
        .any(|&w| chordal_dist(w, z) <= tol)
}

fn classify(pair: Option<&KleinPair>, z: SpherePoint, n: u32) -> PeriodicSide {
    if chordal_dist(z, SpherePoint::real(1.0)) < 1e-6 {
        return PeriodicSide::Fixed1;
    }
    let Some(pair) = pair else {
        return PeriodicSide::Unclassified;
    };
    let closes = |start: SpherePoint| {
        let mut cur = start;
        for _ in 0..n {
            match pair.f_restricted(cur) {
                Ok(Restricted::Image(w)) => cur = w,
                Err(Error::Inconsistency(_)) | Ok(Restricted::Escaped) => return false,
                Err(_) => return false,
            }
        }
        chordal_dist(cur, start) < 1e-6
    };
    if closes(z) {
        PeriodicSide::Minus
    } else if closes(pair.ctx.j(z)) {
        PeriodicSide::Plus
    } else {
        PeriodicSide::Unclassified
    }
}

/// Roots of the diagonal `p_n(z) = Γ^(n)(z, z)` with cluster multiplicities.
///
/// The monomial coefficients of `p_n` lose too many digits for the clustered
/// roots near `±2` once `n >= 3`, so their roots only seed Aberth sweeps that
/// evaluate `p_n` in product form,
/// `lc_w Γ^(n)(z, ·) · ∏_{w ∈ F^n(z)} (z - w)`, in coordinates centered at 1.
/// The product form is checked against the coefficient form before use.
pub fn periodic_resultant(
    ctx: &CorrContext,
    n: u32,
    opts: &PeriodicOptions,
) -> Result<PeriodicReport> {
    let g = graph_iterate(ctx, n)?;
    let mut diag = g.diagonal();
    let at_infinity = diag.trim(crate::polyalg::COEFF_TOL);
    let d = diag.formal_degree();
    let c = Centered::new(ctx);
    let eval = |u: Complex64| c.resultant_diagonal(u, n);

    // The product form must be the same polynomial up to a constant factor.
    let probes = [
        Complex64::new(0.3, 0.7),
        Complex64::new(-1.1, 0.4),
        Complex64::new(2.2, -0.9),
        Complex64::new(-0.2, -1.3),
    ];
    let prod: Vec<Option<Complex64>> = probes.iter().map(|&t| eval(t - 1.0)).collect();
    let anchor = (0..probes.len())
        .max_by(|&i, &k| {
            let rel = |j: usize| diag.eval(probes[j]).norm() / diag.abs_eval(probes[j].norm());
            rel(i).total_cmp(&rel(k))
        })
        .unwrap_or(0);
    let worst = match (
        prod.iter().copied().collect::<Option<Vec<_>>>(),
        diag.eval(probes[anchor]),
    ) {
        (Some(prod), dv) if dv != ZERO && prod[anchor] != ZERO => {
            let scale = dv / prod[anchor];
            probes
                .iter()
                .zip(&prod)
                .map(|(&t, &v)| (v * scale - diag.eval(t)).norm() / diag.abs_eval(t.norm()))
                .fold(0.0, f64::max)
        }
        _ => f64::INFINITY,
    };
    if !(worst <= 1e-6) {
        return Err(Error::Composition { worst });
    }

    let start: Vec<Complex64> = match roots_simultaneous(&diag.coeffs, RootOptions::default()) {
        Ok(rs) => rs
            .roots
            .iter()
            .flat_map(|&(r, m)| {
                (0..m).map(move |k| {
                    let spread = if m > 1 { 1e-4 * (1.0 + r.norm()) } else { 0.0 };
                    r - 1.0 + Complex64::from_polar(spread, TAU * k as f64 / m as f64 + 0.3)
                })
            })
            .collect(),
        Err(_) => (0..d)
            .map(|k| Complex64::from_polar(3.0, TAU * k as f64 / d as f64 + 0.4) - 1.0)
            .collect(),
    };
    let with_derivative = |u: Complex64| {
        let h = 1e-6 * u.norm().max(1e-9);
        let v = eval(u)?;
        let dv = (eval(u + h)? - eval(u - h)?) / (2.0 * h);
        Some((v, dv))
    };
    let (approx, _) = aberth_refine(with_derivative, start, 1e-13, 1e-12, 150);

    // Inclusion radii need the leading coefficient; recover it far from the roots.
    let far = Complex64::new(40.0, 30.0);
    let lead = eval(far).unwrap_or(ZERO) / approx.iter().map(|&u| far - u).product::<Complex64>();
    let tol: Vec<f64> = (0..approx.len())
        .map(|i| {
            let u = approx[i];
            let scale = 1.0 + (u + 1.0).norm();
            let prod: Complex64 = (0..approx.len())
                .filter(|&j| j != i)
                .map(|j| u - approx[j])
                .product();
            let rho = d as f64 * eval(u).map_or(f64::INFINITY, |v| v.norm()) / (lead * prod).norm();
            (1e-6 * scale).max((2.0 * rho).min(1e-3 * scale))
        })
        .collect();
    let clusters = cluster_with_tolerances(&approx, &tol);
    let mut candidates: Vec<(SpherePoint, u32)> = par::map(&clusters, |&(u0, m)| {
        let u = polish_multiple(&eval, u0, m, &approx);
        (SpherePoint::Finite(u + 1.0), m)
    });
    if at_infinity > 0 {
        candidates.push((SpherePoint::Infinity, at_infinity as u32));
    }
    let pair = KleinPair::new(ctx).ok();
    let points = par::map(&candidates, |&(p, m)| {
        let verified = is_periodic(ctx, p, n, opts.verify_tol);
        let side = if verified {
            classify(pair.as_ref(), p, n)
        } else {
            PeriodicSide::Unclassified
        };
        PeriodicPoint {
            point: p,
            multiplicity: m,
            side,
            verified,
        }
    });
    Ok(PeriodicReport::assemble(n, points))
}

/// Newton with step `m·p/p'` from a cluster centroid, kept while `|p|`
/// decreases and the point stays well inside the cluster's neighbourhood.
fn polish_multiple(
    eval: &impl Fn(Complex64) -> Option<Complex64>,
    u0: Complex64,
    m: u32,
    all: &[Complex64],
) -> Complex64 {
    let gap = all
        .iter()
        .filter(|&&v| (v - u0).norm() > 1e-3 * (1.0 + u0.norm()))
        .map(|&v| (v - u0).norm())
        .fold(f64::INFINITY, f64::min);
    let Some(mut fu) = eval(u0).map(|v| v.norm()) else {
        return u0;
    };
    let mut u = u0;
    for _ in 0..30 {
        if fu == 0.0 {
            break;
        }
        let h = 1e-6 * u.norm().max(1e-9);
        let (Some(v), Some(vp), Some(vm)) = (eval(u), eval(u + h), eval(u - h)) else {
            break;
        };
        let dv = (vp - vm) / (2.0 * h);
        if dv == ZERO {
            break;
        }
        let next = u - m as f64 * v / dv;
        let Some(fnext) = eval(next).map(|x| x.norm()) else {
            break;
        };
        if !(fnext < fu) || (next - u0).norm() > 0.1 * gap {
            break;
        }
        u = next;
        fu = fnext;
    }
    u
}

/// Outcome of damped Newton on one tracked branch.
fn newton_branch(
    c: &Centered,
    u0: Complex64,
    word: u32,
    n: u32,
    dir: Direction,
) -> Option<Complex64> {
    let mut chain = c.chain_for_word(u0, word, n, dir)?;
    let g = |u: Complex64, chain: &[Complex64]| c.tracked(u, chain, dir, None);
    let mut u = u0;
    let mut gu = g(u, &chain)?;
    for _ in 0..120 {
        if gu == ZERO {
            return Some(u);
        }
        let h = 1e-6 * u.norm().max(1e-9);
        let (gp, gm) = (g(u + h, &chain)?, g(u - h, &chain)?);
        let d = (gp - gm) / (2.0 * h);
        if d == ZERO || !d.norm().is_finite() {
            return None;
        }
        let delta = -gu / d;
        // Plain and multiplicity-corrected steps; multiple roots converge
        // only linearly under the plain one.
        let mut best: Option<(Complex64, Complex64, f64)> = None;
        for m in 1..=4 {
            let cand = u + delta * m as f64;
            if let Some(gc) = g(cand, &chain) {
                if best.map_or(true, |b| gc.norm() < b.2) {
                    best = Some((cand, gc, gc.norm()));
                }
            }
        }
        let mut accepted = None;
        if let Some((cand, gc, norm)) = best {
            if norm < gu.norm() {
                accepted = Some((cand, gc));
            }
        }
        if accepted.is_none() {
            let mut t = 0.5;
            for _ in 0..40 {
                let cand = u + delta * t;
                if let Some(gc) = g(cand, &chain) {
                    if gc.norm() < gu.norm() {
                        accepted = Some((cand, gc));
                        break;
                    }
                }
                t *= 0.5;
            }
        }
        let (next, gnext) = accepted?;
        let step = (next - u).norm();
        let mut trail = Vec::new();
        c.tracked(next, &chain, dir, Some(&mut trail))?;
        chain = trail;
        u = next;
        gu = gnext;
        if step <= 1e-15 * (1.0 + u.norm()) {
            break;
        }
        if u.norm() > 1e8 {
            return None;
        }
    }
    (gu.norm() <= 1e-9 * (1.0 + u.norm())).then_some(u)
}

/// Periodic points from damped Newton on every branch word of `F_a^n` and of
/// `F_a^{-n}` (repelling cycles have tiny forward basins), seeded on a grid.
/// Multiplicities come from the winding number of `∏ (z - w)` over
/// `w ∈ F^n(z)` around each point.
pub fn periodic_newton(
    ctx: &CorrContext,
    n: u32,
    opts: &PeriodicOptions,
) -> Result<PeriodicReport> {
    if n == 0 || n > 12 {
        return Err(Error::Domain(format!(
            "newton search supports 1 <= n <= 12, got {n}"
        )));
    }
    let c = Centered::new(ctx);
    let k = opts.seed_grid.max(2);
    let mut jobs = Vec::with_capacity((2 * k * k) << n);
    for ix in 0..k {
        for iy in 0..k {
            let x = -4.0 + 10.0 * ix as f64 / (k - 1) as f64;
            let y = -5.0 + 10.0 * iy as f64 / (k - 1) as f64;
            for dir in [Direction::Forward, Direction::Backward] {
                for word in 0..(1u32 << n) {
                    jobs.push((Complex64::new(x - 1.0, y), word, dir));
                }
            }
        }
    }
    let found: Vec<Complex64> = par::map(&jobs, |&(u0, word, dir)| {
        newton_branch(&c, u0, word, n, dir)
    })
    .into_iter()
    .flatten()
    .filter(|&u| is_periodic(ctx, SpherePoint::Finite(u + 1.0), n, 1e-8))
    .collect();
    // Dedupe at 1e-6, keeping the first of each group.
    let mut distinct: Vec<Complex64> = Vec::new();
    for u in found {
        if !distinct
            .iter()
            .any(|&v| chordal_dist((v + 1.0).into(), (u + 1.0).into()) < 1e-6)
        {
            distinct.push(u);
        }
    }
    let pair = KleinPair::new(ctx).ok();
    let points = par::map(&distinct, |&u| {
        let nearest = distinct
            .iter()
            .filter(|&&v| v != u)
            .map(|&v| (v - u).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.3 * nearest).min(1e-2 * (1.0 + u.norm()));
        let mult = winding(|x| c.resultant_diagonal(x, n), u, radius, 256)
            .unwrap_or(0)
            .max(0) as u32;
        let p = SpherePoint::Finite(u + 1.0);
        PeriodicPoint {
            point: p,
            multiplicity: mult,
            side: classify(pair.as_ref(), p, n),
            verified: mult > 0,
        }
    });
    Ok(PeriodicReport::assemble(n, points))
}

pub fn periodic_points(
    ctx: &CorrContext,
    n: u32,
    method: Method,
    opts: &PeriodicOptions,
) -> Result<PeriodicReport> {
    match method {
        Method::Resultant => periodic_resultant(ctx, n, opts),
        Method::Newton => periodic_newton(ctx, n, opts),
        Method::Both => {
            let res = periodic_resultant(ctx, n, opts)?;
            let newt = periodic_newton(ctx, n, opts)?;
            let (a, b) = (res.verified_points(), newt.verified_points());
            let mut issues = Vec::new();
            for &p in &a {
                if !b.iter().any(|&q| chordal_dist(p, q) <= opts.agree_tol) {
                    issues.push(format!("{p} found only by the resultant"));
                }
            }
            for &q in &b {
                if !a.iter().any(|&p| chordal_dist(p, q) <= opts.agree_tol) {
                    issues.push(format!("{q} found only by branch Newton"));
                }
            }
            if issues.is_empty() {
                Ok(res)
            } else {
                Err(Error::CrossValidation(issues.join("; ")))
            }
        }
    }
}

/// Taylor data of the branch of `F_a` through the parabolic point `1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicReport {
    /// `(a - 7) / (3(a - 1))`.
    pub coefficient: Complex64,
    pub numeric_multiplier: Complex64,
    pub numeric_coefficient: Complex64,
    pub deviation: f64,
    /// Set when the numeric coefficient is more than `1e-5` away.
    pub flagged: bool,
}

/// Image of `1 + h` under the branch fixing `1`, as an offset from `1`.
fn parabolic_branch(c: &Centered, h: Complex64) -> Complex64 {
    let [p, q] = Centered::cov(Some(h));
    let (p, q) = (c.j(p), c.j(q));
    match (p, q) {
        (Some(p), Some(q)) => {
            if (p - h).norm() <= (q - h).norm() {
                p
            } else {
                q
            }
        }
        (Some(p), None) | (None, Some(p)) => p,
        (None, None) => Complex64::new(f64::NAN, f64::NAN),
    }
}

pub fn parabolic_coefficient(ctx: &CorrContext) -> ParabolicReport {
    let a = ctx.a;
    let coefficient = (a - 7.0) / (3.0 * (a - 1.0));
    let c = Centered::new(ctx);
    let g = |h: f64| parabolic_branch(&c, Complex64::new(h, 0.0));
    let d1 = |h: f64| (g(h) - g(-h)) / (2.0 * h);
    let d2 = |h: f64| (g(h) + g(-h)) / (2.0 * h * h);
    let h = 1e-3;
    let numeric_multiplier = (4.0 * d1(h / 2.0) - d1(h)) / 3.0;
    let numeric_coefficient = (4.0 * d2(h / 2.0) - d2(h)) / 3.0;
    let deviation = (numeric_coefficient - coefficient).norm();
    ParabolicReport {
        coefficient,
        numeric_multiplier,
        numeric_coefficient,
        deviation,
        flagged: !(deviation <= 1e-5),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Superstable {
    pub a: Complex64,
    pub residual: f64,
    /// `-1` is a genuine critical point of `f_a` (the circle radius exceeds 1/2).
    pub critical_verified: bool,
    /// Order of the zero of `f_a^n(-1) + 1` at `a`, from a winding number.
    pub multiplicity: u32,
}

/// Disk in the parameter plane intersected with `Re a > 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub center: Complex64,
    pub radius: f64,
}

impl Default for Region {
    fn default() -> Self {
        Region {
            center: Complex64::new(4.0, 0.0),
            radius: 2.95,
        }
    }
}

impl Region {
    pub fn contains(&self, a: Complex64) -> bool {
        (a - self.center).norm() <= self.radius && a.re > 1.0
    }
}

/// `f_a^n(-1) + 1`, or `None` when the orbit leaves the domain.
fn critical_return(a: Complex64, n: u32) -> Option<Complex64> {
    let ctx = CorrContext::new(a).ok()?;
    let pair = KleinPair::new(&ctx).ok()?;
    let mut cur = SpherePoint::real(-1.0);
    for _ in 0..n {
        cur = match pair.f_restricted(cur) {
            Ok(Restricted::Image(w)) => w,
            _ => return None,
        };
    }
    cur.finite().map(|z| z + 1.0)
}

/// Parameters where the critical point `-1` of `f_a` has period dividing
/// `n`, found by damped Newton in `a` from a `seed_grid × seed_grid` grid
/// over the region's bounding box.
pub fn superstable_parameters(n: u32, seed_grid: usize, region: Region) -> Vec<Superstable> {
    let k = seed_grid.max(2);
    let mut seeds = Vec::new();
    for ix in 0..k {
        for iy in 0..k {
            let a = region.center
                + Complex64::new(
                    region.radius * (2.0 * ix as f64 / (k - 1) as f64 - 1.0),
                    region.radius * (2.0 * iy as f64 / (k - 1) as f64 - 1.0),
                );
            if region.contains(a) && (a - 1.0).norm() > 1e-6 {
                seeds.push(a);
            }
        }
    }
    let psi = |a: Complex64| critical_return(a, n);
    let found: Vec<(Complex64, f64)> = par::map(&seeds, |&a0| {
        let mut a = a0;
        let mut fa = psi(a)?;
        for _ in 0..80 {
            if fa.norm() < 1e-14 {
                break;
            }
            let h = 1e-7 * (1.0 + a.norm());
            let d = (psi(a + h)? - psi(a - h)?) / (2.0 * h);
            if d == ZERO {
                return None;
            }
            let delta = -fa / d;
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let cand = a + delta * t;
                if region.contains(cand) {
                    if let Some(fc) = psi(cand) {
                        if fc.norm() < fa.norm() {
                            accepted = Some((cand, fc));
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            let (next, fnext) = accepted?;
            let step = (next - a).norm();
            a = next;
            fa = fnext;
            if step < 1e-15 * (1.0 + a.norm()) {
                break;
            }
        }
        (fa.norm() < 1e-10 && region.contains(a)).then_some((a, fa.norm()))
    })
    .into_iter()
    .flatten()
    .collect();

    let mut distinct: Vec<(Complex64, f64)> = Vec::new();
    for (a, r) in found {
        match distinct.iter_mut().find(|(b, _)| (a - b).norm() < 1e-8) {
            Some(slot) if r < slot.1 => *slot = (a, r),
            Some(_) => {}
            None => distinct.push((a, r)),
        }
    }
    distinct.sort_by(|x, y| (x.0.re, x.0.im).partial_cmp(&(y.0.re, y.0.im)).unwrap());
    distinct
        .iter()
        .map(|&(a, residual)| {
            let nearest = distinct
                .iter()
                .filter(|d| d.0 != a)
                .map(|d| (d.0 - a).norm())
                .fold(f64::INFINITY, f64::min);
            let radius = (0.3 * nearest).min(1e-3);
            let multiplicity = winding(psi, a, radius, 128).unwrap_or(1).max(1) as u32;
            let critical_verified = (a - 1.5).norm() > 0.5;
            Superstable {
                a,
                residual,
                critical_verified,
                multiplicity,
            }
        })
        .collect()
}
