//! Branch evaluation of the deleted covering relation of `Q(z) = z^3 - 3z`,
//! the involution `J_a`, and the correspondence `F_a = J_a ∘ Cov` with its
//! inverse `Cov ∘ J_a`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{coalesce, AtomicMeasure, Coalesce};
use crate::par;
use crate::sphere::{MobiusMap, SpherePoint};

/// Relative discriminant size below which the two covering images merge.
pub const DOUBLE_ROOT_TOL: f64 = 1e-12;

/// Default depth cap for [`orbit_tree`]: `2^22` leaves.
pub const DEFAULT_MAX_DEPTH: u32 = 22;

/// Which way to iterate the correspondence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" | "fwd" | "+" => Ok(Direction::Forward),
            "backward" | "bwd" | "-" => Ok(Direction::Backward),
            _ => Err(Error::Parse(format!(
                "direction must be forward or backward, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// The image of a point under a 2-valued relation, counted with multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightedImage {
    /// Two distinct images, in branch order.
    Two(SpherePoint, SpherePoint),
    /// One image of multiplicity 2.
    Double(SpherePoint),
}

impl WeightedImage {
    pub fn map(self, f: impl Fn(SpherePoint) -> SpherePoint) -> Self {
        match self {
            WeightedImage::Two(p, q) => WeightedImage::Two(f(p), f(q)),
            WeightedImage::Double(p) => WeightedImage::Double(f(p)),
        }
    }

    /// `(point, multiplicity)` pairs.
    pub fn weighted(&self) -> Vec<(SpherePoint, u32)> {
        match *self {
            WeightedImage::Two(p, q) => vec![(p, 1), (q, 1)],
            WeightedImage::Double(p) => vec![(p, 2)],
        }
    }

    /// Both images with repetition, so always of length 2.
    pub fn points(&self) -> [SpherePoint; 2] {
        match *self {
            WeightedImage::Two(p, q) => [p, q],
            WeightedImage::Double(p) => [p, p],
        }
    }

    pub fn total_multiplicity(&self) -> u32 {
        2
    }

    pub fn contains(&self, p: SpherePoint, tol: f64) -> bool {
        self.points()
            .iter()
            .any(|&q| crate::sphere::chordal_dist(p, q) <= tol)
    }
}

/// `P(z, w) = z^2 + zw + w^2 - 3`, the deleted covering relation.
pub fn cov_relation(z: Complex64, w: Complex64) -> Complex64 {
    z * z + z * w + w * w - 3.0
}

/// Roots in `w` of `w^2 + z w + (z^2 - 3) = 0`.
pub fn cov_images(z: SpherePoint) -> WeightedImage {
    let z = match z {
        SpherePoint::Infinity => return WeightedImage::Double(SpherePoint::Infinity),
        SpherePoint::Finite(z) => z,
    };
    let disc = 12.0 - 3.0 * z * z;
    if disc.norm() < DOUBLE_ROOT_TOL * z.norm_sqr().max(1.0) {
        return WeightedImage::Double(SpherePoint::from_complex(-z / 2.0));
    }
    let mut s = disc.sqrt();
    if (z.conj() * s).re < 0.0 {
        s = -s;
    }
    let w1 = -(z + s) / 2.0;
    let w2 = (z * z - 3.0) / w1;
    WeightedImage::Two(SpherePoint::from_complex(w1), SpherePoint::from_complex(w2))
}

/// Parameter `a` of the family together with its derived data.
#[derive(Clone, Debug)]
pub struct CorrContext {
    pub a: Complex64,
    pub j_map: MobiusMap,
    pub phi_map: MobiusMap,
    /// Radius of the circle bounding the `J_a` domain; `None` when `Re a <= 1`.
    pub klein_radius: Option<f64>,
    pub exceptional: Vec<SpherePoint>,
    pub has_critical_point: bool,
}

impl CorrContext {
    pub fn new(a: Complex64) -> Result<Self> {
        if !(a.re.is_finite() && a.im.is_finite()) {
            return Err(Error::InvalidParameter {
                re: a.re,
                im: a.im,
                reason: "not finite",
            });
        }
        if a == Complex64::new(1.0, 0.0) {
            return Err(Error::InvalidParameter {
                re: a.re,
                im: a.im,
                reason: "a = 1 is degenerate",
            });
        }
        let one = Complex64::new(1.0, 0.0);
        let j_map = MobiusMap::new(a + 1.0, -2.0 * a, Complex64::new(2.0, 0.0), -(a + 1.0))
            .map_err(|_| Error::InvalidParameter {
                re: a.re,
                im: a.im,
                reason: "J_a degenerates near a = 1",
            })?;
        let phi_map = MobiusMap::new(a, one, one, one).map_err(|_| Error::InvalidParameter {
            re: a.re,
            im: a.im,
            reason: "phi_a degenerates near a = 1",
        })?;
        let klein_radius = crate::klein::klein_radius(a).ok();
        let exceptional = if (a - 5.0).norm() < 1e-12 {
            vec![SpherePoint::real(-1.0), SpherePoint::real(2.0)]
        } else {
            Vec::new()
        };
        let has_critical_point = klein_radius.is_some_and(|r| r > 0.5);
        Ok(CorrContext {
            a,
            j_map,
            phi_map,
            klein_radius,
            exceptional,
            has_critical_point,
        })
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn j(&self, p: SpherePoint) -> SpherePoint {
        self.j_map.apply(p)
    }

    pub fn forward(&self, z: SpherePoint) -> WeightedImage {
        fa_forward(self, z)
    }

    pub fn backward(&self, z: SpherePoint) -> WeightedImage {
        fa_backward(self, z)
    }

    pub fn step(&self, z: SpherePoint, dir: Direction) -> WeightedImage {
        match dir {
            Direction::Forward => fa_forward(self, z),
            Direction::Backward => fa_backward(self, z),
        }
    }
}

pub fn fa_forward(ctx: &CorrContext, z: SpherePoint) -> WeightedImage {
    cov_images(z).map(|w| ctx.j_map.apply(w))
}

pub fn fa_backward(ctx: &CorrContext, z: SpherePoint) -> WeightedImage {
    cov_images(ctx.j_map.apply(z))
}

/// Ramification and branch data of the graph of `F_a`, in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalData {
    pub a1: Vec<(SpherePoint, SpherePoint)>,
    pub a2: Vec<(SpherePoint, SpherePoint)>,
    pub b1: Vec<SpherePoint>,
    pub b2: Vec<SpherePoint>,
}

pub fn critical_data(ctx: &CorrContext) -> CriticalData {
    let a = ctx.a;
    let q = |num: Complex64, den: Complex64| {
        if den == Complex64::new(0.0, 0.0) {
            SpherePoint::Infinity
        } else {
            SpherePoint::from_complex(num / den)
        }
    };
    let inf = SpherePoint::Infinity;
    let half = q(a + 1.0, 2.0.into());
    let at_one = q(4.0 * a + 2.0, a + 5.0);
    let at_minus_one = q(2.0.into(), 3.0 - a);
    let at_two = q(3.0 * a + 1.0, 3.0 + a);
    CriticalData {
        a1: vec![
            (inf, half),
            (SpherePoint::real(-2.0), SpherePoint::real(1.0)),
            (SpherePoint::real(2.0), at_two),
        ],
        a2: vec![
            (inf, half),
            (SpherePoint::real(1.0), at_one),
            (SpherePoint::real(-1.0), at_minus_one),
        ],
        b1: vec![inf, SpherePoint::real(-2.0), SpherePoint::real(2.0)],
        b2: vec![half, at_one, at_minus_one],
    }
}

/// Options for [`orbit_tree`].
#[derive(Clone, Copy, Debug)]
pub struct OrbitOptions {
    pub max_depth: u32,
    pub coalesce: Coalesce,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            max_depth: DEFAULT_MAX_DEPTH,
            coalesce: Coalesce::Off,
        }
    }
}

/// `2^-n (F^n)_* δ_{z0}` (or the backward analogue) as an atomic measure.
///
/// Weights are kept as integer numerators over the common denominator `2^n`
/// and converted at the end, so the total mass is exactly 1. Leaves come out
/// in depth-first order with the first branch before the second.
pub fn orbit_tree(
    ctx: &CorrContext,
    z0: SpherePoint,
    n: u32,
    dir: Direction,
    opts: OrbitOptions,
) -> Result<AtomicMeasure> {
    if n > opts.max_depth || n > 62 {
        return Err(Error::SizeLimit {
            requested: 1u64.checked_shl(n).unwrap_or(u64::MAX),
            cap_log2: opts.max_depth,
            cap: 1u64 << opts.max_depth.min(62),
            hint: "the orbit tree has up to 2^n leaves; lower n or raise the cap",
        });
    }
    let mut level: Vec<(SpherePoint, u64)> = vec![(z0, 1)];
    for step in 0..n {
        level = par::flat_map(&level, |&(z, num)| {
            ctx.step(z, dir)
                .weighted()
                .into_iter()
                .map(move |(w, m)| (w, num * m as u64))
        });
        if let Some(eps) = opts.coalesce.eps_for(level.len()) {
            // Numerators stay integral when merged, so the accounting is still exact.
            let denom = (step + 1) as i32;
            let tmp = AtomicMeasure::from_atoms(
                level
                    .iter()
                    .map(|&(p, k)| (p, k as f64 * 2f64.powi(-denom)))
                    .collect(),
            );
            level = coalesce(&tmp, eps)
                .atoms
                .into_iter()
                .map(|(p, w)| (p, (w * 2f64.powi(denom)).round() as u64))
                .collect();
        }
    }
    let scale = 2f64.powi(-(n as i32));
    Ok(AtomicMeasure::from_atoms(
        level
            .into_iter()
            .map(|(p, k)| (p, k as f64 * scale))
            .collect(),
    ))
}
