//! Fundamental domains for the covering relation and for `J_a`, the
//! single-valued restriction `f_a`, and escape-time limit-set membership.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corr::{cov_images, fa_forward, CorrContext, WeightedImage};
use crate::error::{Error, Result};
use crate::sphere::{chordal_dist, SpherePoint};

/// Width of the boundary band around the circle used by escape tests.
pub const CIRCLE_BAND: f64 = 1e-9;
/// Chordal radius around `z = 1` treated as boundary-ambiguous.
pub const NEAR_ONE: f64 = 1e-6;
/// Largest supported `|a - 4|`.
pub const PARAM_DISK_RADIUS: f64 = 3.0;

/// Radius of the circle through `1` and `a` with real center `1 + r`.
pub fn klein_radius(a: Complex64) -> Result<f64> {
    let d = a - 1.0;
    if !(d.re > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "the circle through 1 and a needs Re(a) > 1, got a = {}{:+}i",
            a.re, a.im
        )));
    }
    Ok(d.norm_sqr() / (2.0 * d.re))
}

/// Open region to the right of the hyperbola `y^2 = 3(x^2 - 1)`, `x > 1`.
pub fn in_delta_cov(z: SpherePoint) -> bool {
    match z {
        SpherePoint::Infinity => false,
        SpherePoint::Finite(z) => z.re > 1.0 && z.im * z.im < 3.0 * (z.re * z.re - 1.0),
    }
}

/// Signed distance-like margin of the `J_a` domain: positive outside the
/// circle, negative inside, `+inf` at infinity.
fn circle_margin(center: f64, r: f64, p: SpherePoint) -> f64 {
    match p {
        SpherePoint::Infinity => f64::INFINITY,
        SpherePoint::Finite(z) => (z - center).norm() - r,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Minus,
    Plus,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minus" | "-" => Ok(Side::Minus),
            "plus" | "+" => Ok(Side::Plus),
            _ => Err(Error::Parse(format!(
                "side must be minus or plus, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Minus => "minus",
            Side::Plus => "plus",
        })
    }
}

/// Outcome of one step of `f_a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Restricted {
    Image(SpherePoint),
    Escaped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EscapeStatus {
    Inside,
    Escaped(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EscapeResult {
    pub status: EscapeStatus,
    pub last_point: SpherePoint,
    /// Still inside at the step limit but crawling: the last two iterates are
    /// within `1e-6` of each other.
    pub slow: bool,
    /// For escaped points: circle radius over the derivative of the orbit
    /// branch, a rough distance to the limit set. `None` if the orbit passed
    /// through infinity.
    pub distance: Option<f64>,
}

impl EscapeResult {
    pub fn is_inside(&self) -> bool {
        self.status == EscapeStatus::Inside
    }
}

/// The Klein pair for a parameter with `Re a > 1`.
#[derive(Clone, Debug)]
pub struct KleinPair {
    pub ctx: CorrContext,
    pub r: f64,
    pub center: f64,
}

impl KleinPair {
    pub fn new(ctx: &CorrContext) -> Result<Self> {
        let r = klein_radius(ctx.a)?;
        Ok(KleinPair {
            ctx: ctx.clone(),
            r,
            center: 1.0 + r,
        })
    }

    /// Like [`KleinPair::new`] but also insists on `|a - 4| <= 3`.
    pub fn supported(ctx: &CorrContext) -> Result<Self> {
        if (ctx.a - 4.0).norm() > PARAM_DISK_RADIUS + 1e-12 {
            return Err(Error::UnsupportedParameter {
                re: ctx.a.re,
                im: ctx.a.im,
            });
        }
        Self::new(ctx)
    }

    pub fn margin(&self, p: SpherePoint) -> f64 {
        circle_margin(self.center, self.r, p)
    }

    /// Strictly outside the circle, or infinity.
    pub fn in_delta_j(&self, p: SpherePoint) -> bool {
        self.margin(p) > 0.0
    }

    /// Index of the image chosen by `f_a` together with both images, or
    /// `None` if neither image reaches the closed domain.
    fn choose(&self, z: SpherePoint) -> (WeightedImage, Option<usize>, bool) {
        let img = fa_forward(&self.ctx, z);
        let pts = img.points();
        if chordal_dist(z, SpherePoint::real(1.0)) < 1e-14 {
            let i = if chordal_dist(pts[0], z) <= chordal_dist(pts[1], z) {
                0
            } else {
                1
            };
            return (img, Some(i), false);
        }
        let m = [self.margin(pts[0]), self.margin(pts[1])];
        let best = if m[1] > m[0] { 1 } else { 0 };
        let both_inside =
            matches!(img, WeightedImage::Two(..)) && m[0] > CIRCLE_BAND && m[1] > CIRCLE_BAND;
        if m[best] < -CIRCLE_BAND {
            (img, None, false)
        } else {
            (img, Some(best), both_inside)
        }
    }

    /// The image of `z` under the two-sided restriction `f_a`.
    pub fn f_restricted(&self, z: SpherePoint) -> Result<Restricted> {
        match self.choose(z) {
            (_, None, _) => Ok(Restricted::Escaped),
            (img, Some(_), true) => Err(Error::Inconsistency(format!(
                "both images {} and {} of {z} lie in the J_a domain",
                img.points()[0],
                img.points()[1]
            ))),
            (img, Some(i), false) => Ok(Restricted::Image(img.points()[i])),
        }
    }

    /// The companion image of `z`: the element of `F_a(z)` not chosen by `f_a`.
    pub fn f_tilde(&self, z: SpherePoint) -> Result<SpherePoint> {
        match self.choose(z) {
            (_, None, _) => Err(Error::Domain(format!(
                "{z} escapes under f_a, so f_tilde is undefined"
            ))),
            (img, Some(i), _) => Ok(img.points()[1 - i]),
        }
    }

    /// Escape-time membership in the limit set of the given side.
    pub fn limit_membership(&self, z: SpherePoint, side: Side, n_max: u32) -> EscapeResult {
        let (mut cur, mut deriv) = match side {
            Side::Minus => (z, Some(Complex64::new(1.0, 0.0))),
            Side::Plus => (self.ctx.j(z), z.finite().and_then(|z| self.j_derivative(z))),
        };
        let mut prev = cur;
        for k in 1..=n_max.max(1) {
            let (img, pick, _) = self.choose(cur);
            let i = match pick {
                Some(i) => i,
                None => {
                    // Both images fall inside the circle; follow the shallower.
                    let pts = img.points();
                    let i = if self.margin(pts[1]) > self.margin(pts[0]) {
                        1
                    } else {
                        0
                    };
                    let distance = deriv
                        .and_then(|d| Some(d * self.branch_derivative(cur, pts[i])?))
                        .map(|d| self.r / d.norm());
                    return EscapeResult {
                        status: EscapeStatus::Escaped(k),
                        last_point: cur,
                        slow: false,
                        distance,
                    };
                }
            };
            let next = img.points()[i];
            deriv = deriv.and_then(|d| Some(d * self.branch_derivative(cur, next)?));
            prev = cur;
            cur = next;
        }
        EscapeResult {
            status: EscapeStatus::Inside,
            last_point: cur,
            slow: chordal_dist(prev, cur) < 1e-6,
            distance: None,
        }
    }

    fn j_derivative(&self, v: Complex64) -> Option<Complex64> {
        let a = self.ctx.a;
        let den = 2.0 * v - (a + 1.0);
        (den != Complex64::new(0.0, 0.0)).then(|| -(a - 1.0) * (a - 1.0) / (den * den))
    }

    /// `dw/dz` along the branch of `F_a` taking `z` to `w`.
    fn branch_derivative(&self, z: SpherePoint, w: SpherePoint) -> Option<Complex64> {
        let z = z.finite()?;
        let w = w.finite()?;
        let v = self.ctx.j(SpherePoint::Finite(w)).finite()?;
        let den = z + 2.0 * v;
        if den == Complex64::new(0.0, 0.0) {
            return None;
        }
        Some(-(2.0 * z + v) / den * self.j_derivative(v)?)
    }
}

pub fn in_delta_j(pair: &KleinPair, z: SpherePoint) -> bool {
    pair.in_delta_j(z)
}

/// Outcome of one Monte-Carlo check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub failures: usize,
    pub examples: Vec<SpherePoint>,
}

impl CheckOutcome {
    fn new() -> Self {
        CheckOutcome {
            failures: 0,
            examples: Vec::new(),
        }
    }

    fn fail(&mut self, p: SpherePoint) {
        self.failures += 1;
        if self.examples.len() < 10 {
            self.examples.push(p);
        }
    }

    pub fn ok(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KleinReport {
    pub samples: usize,
    pub disjoint: CheckOutcome,
    pub cover: CheckOutcome,
    pub involution: CheckOutcome,
}

impl KleinReport {
    pub fn all_ok(&self) -> bool {
        self.disjoint.ok() && self.cover.ok() && self.involution.ok()
    }
}

impl std::fmt::Display for KleinReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (name, c) in [
            ("disjoint", &self.disjoint),
            ("cover", &self.cover),
            ("involution", &self.involution),
        ] {
            let mut line = String::new();
            if c.ok() {
                let _ = write!(line, "{name} PASS");
            } else {
                let _ = write!(line, "{name} FAIL count={}", c.failures);
                for p in &c.examples {
                    let _ = write!(line, " {p}");
                }
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Distance from `p` to the hyperbola bounding the covering domain is at
/// least `band` in the finite chart, measured crudely by probing.
fn clear_of_cov_boundary(p: SpherePoint, band: f64) -> bool {
    let Some(z) = p.finite() else { return true };
    let here = in_delta_cov(p);
    [
        Complex64::new(band, 0.0),
        Complex64::new(-band, 0.0),
        Complex64::new(0.0, band),
        Complex64::new(0.0, -band),
    ]
    .iter()
    .all(|d| in_delta_cov(SpherePoint::Finite(z + d)) == here)
}

/// Monte-Carlo validation of the Klein pair on `n_samples` uniformly
/// distributed sphere points. Points within `1e-6` of `z = 1`, and images
/// within `1e-6` of a domain boundary, are excluded.
pub fn validate_klein(ctx: &CorrContext, n_samples: usize, seed: u64) -> Result<KleinReport> {
    let pair = KleinPair::supported(ctx)?;
    let one = SpherePoint::real(1.0);
    let band = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = KleinReport {
        samples: n_samples,
        disjoint: CheckOutcome::new(),
        cover: CheckOutcome::new(),
        involution: CheckOutcome::new(),
    };
    for _ in 0..n_samples {
        let z = SpherePoint::random(&mut rng);
        if chordal_dist(z, one) < NEAR_ONE {
            continue;
        }
        if in_delta_cov(z) && clear_of_cov_boundary(z, band) {
            for w in cov_images(z).points() {
                if in_delta_cov(w) && clear_of_cov_boundary(w, band) {
                    report.disjoint.fail(z);
                    break;
                }
            }
        }
        if pair.margin(z) > band {
            let jz = pair.ctx.j(z);
            if pair.margin(jz) > band && chordal_dist(jz, one) >= NEAR_ONE {
                report.involution.fail(z);
            }
        }
        if !in_delta_cov(z) && !pair.in_delta_j(z) {
            let near_edge = !clear_of_cov_boundary(z, band) || pair.margin(z).abs() < band;
            if !near_edge {
                report.cover.fail(z);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corr::fa_backward;
    use crate::sphere::same_point;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair(re: f64, im: f64) -> KleinPair {
        KleinPair::new(&CorrContext::new(c(re, im)).unwrap()).unwrap()
    }

    #[test]
    fn radius_examples() {
        assert_eq!(klein_radius(c(7.0, 0.0)).unwrap(), 3.0);
        assert_eq!(klein_radius(c(4.0, 0.0)).unwrap(), 1.5);
        assert!((klein_radius(c(1.0 + 1e-6, 0.0)).unwrap() / 5e-7 - 1.0).abs() < 1e-10);
        assert!(matches!(
            klein_radius(c(0.5, 1.0)),
            Err(Error::ParameterDomain(_))
        ));
        let a = c(3.0, 2.0);
        let r = klein_radius(a).unwrap();
        assert!(((a - (1.0 + r)).norm() - r).abs() < 1e-10);
    }

    #[test]
    fn hyperbola_matches_curve() {
        // L is the image of (-inf, -2] under the covering relation.
        for k in 0..100 {
            let t = 0.05 * k as f64 + 1e-3;
            let x = 1.0 + t / 2.0;
            let y = (3.0 * (t + t * t / 4.0)).sqrt();
            assert!((y * y - 3.0 * (x * x - 1.0)).abs() < 1e-10);
            let s = -2.0 - t;
            let img = cov_images(SpherePoint::real(s));
            assert!(
                img.contains(SpherePoint::new(x, y), 1e-10)
                    || img.contains(SpherePoint::new(x, -y), 1e-10)
            );
        }
        assert!(in_delta_cov(SpherePoint::new(4.0, 3.0)));
        assert!(!in_delta_cov(SpherePoint::real(0.0)));
        assert!(!in_delta_cov(SpherePoint::Infinity));
        let y = (3.0f64 * (2.0 + 1.0)).sqrt();
        assert!(!in_delta_cov(SpherePoint::new(2.0, y)));
    }

    #[test]
    fn delta_j_examples() {
        let p4 = pair(4.0, 0.0);
        assert!(p4.in_delta_j(SpherePoint::Infinity));
        assert!(!p4.in_delta_j(SpherePoint::real(4.0)));
        assert!(!p4.in_delta_j(SpherePoint::real(2.0)));
        assert!(!pair(3.0, 2.0).in_delta_j(SpherePoint::new(3.0, 2.0)));
    }

    #[test]
    fn restricted_examples() {
        let one = SpherePoint::real(1.0);
        let p5 = pair(5.0, 0.0);
        assert_eq!(
            p5.f_restricted(SpherePoint::real(-1.0)).unwrap(),
            Restricted::Image(SpherePoint::real(-1.0))
        );
        assert!(same_point(
            p5.f_tilde(SpherePoint::real(-1.0)).unwrap(),
            SpherePoint::real(2.0),
            1e-14
        ));
        for (re, im) in [(4.0, 0.0), (7.0, 0.0), (3.0, 2.0)] {
            let p = pair(re, im);
            let a = c(re, im);
            assert_eq!(p.f_restricted(one).unwrap(), Restricted::Image(one));
            let other = SpherePoint::from_complex((4.0 * a + 2.0) / (a + 5.0));
            assert!(same_point(p.f_tilde(one).unwrap(), other, 1e-13));
            assert_eq!(
                p.f_restricted(SpherePoint::real(-2.0)).unwrap(),
                Restricted::Image(one)
            );
            assert_eq!(p.f_tilde(SpherePoint::real(-2.0)).unwrap(), one);
        }
    }

    #[test]
    fn membership_examples() {
        for (re, im) in [(4.0, 0.0), (7.0, 0.0), (3.0, 2.0)] {
            let p = pair(re, im);
            assert!(p
                .limit_membership(SpherePoint::real(1.0), Side::Minus, 50)
                .is_inside());
            assert!(p
                .limit_membership(SpherePoint::real(1.0), Side::Plus, 50)
                .is_inside());
            assert!(p
                .limit_membership(SpherePoint::real(-2.0), Side::Minus, 50)
                .is_inside());
            let half = SpherePoint::from_complex((c(re, im) + 1.0) / 2.0);
            assert!(!p.limit_membership(half, Side::Minus, 500).is_inside());
            assert!(!p
                .limit_membership(SpherePoint::Infinity, Side::Minus, 500)
                .is_inside());
        }
    }

    #[test]
    fn distance_estimate_near_segment() {
        // At a = 4 the minus limit set is the segment [-2, 1].
        let p = pair(4.0, 0.0);
        for x in [-1.7, -1.1, -0.45, 0.2, 0.7] {
            for eps in [1e-2, 1e-3, 1e-4] {
                let res = p.limit_membership(SpherePoint::new(x, eps), Side::Minus, 500);
                assert!(!res.is_inside());
                let d = res.distance.unwrap();
                assert!(d > eps / 4.0 && d < eps * 4.0, "x = {x}, eps = {eps}: {d}");
            }
        }
        let far = p.limit_membership(SpherePoint::new(-0.5, 1.0), Side::Minus, 500);
        assert!(far.distance.unwrap() > 0.1);
    }

    #[test]
    fn validation_passes_on_anchor_parameters() {
        for (re, im) in [(4.0, 0.0), (7.0, 0.0), (3.0, 2.0)] {
            let rep = validate_klein(&CorrContext::new(c(re, im)).unwrap(), 4000, 11).unwrap();
            assert!(rep.all_ok(), "{rep}");
            assert_eq!(
                rep.to_string(),
                "disjoint PASS\ncover PASS\ninvolution PASS\n"
            );
        }
        let far = CorrContext::new(c(1.0001, 2.99)).unwrap();
        assert!(matches!(
            validate_klein(&far, 10, 0),
            Err(Error::UnsupportedParameter { .. })
        ));
    }

    #[test]
    fn critical_point_criterion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        use rand::Rng;
        let mut seen = [0usize; 2];
        for _ in 0..400 {
            let a = c(rng.gen_range(1.0..2.5), rng.gen_range(-1.0..1.0));
            let d = (a - 1.5).norm();
            if (d - 0.5).abs() < 1e-6 {
                continue;
            }
            let ctx = CorrContext::new(a).unwrap();
            assert_eq!(ctx.has_critical_point, d > 0.5, "a = {a}");
            let p = KleinPair::new(&ctx).unwrap();
            assert_eq!(
                ctx.has_critical_point,
                p.margin(SpherePoint::real(2.0)) < 0.0
            );
            seen[ctx.has_critical_point as usize] += 1;
        }
        assert!(seen[0] >= 50 && seen[1] >= 50);
    }

    fn arb_param() -> impl Strategy<Value = Complex64> {
        (0.0..std::f64::consts::TAU, 0.0..2.95f64)
            .prop_map(|(t, s)| c(4.0 + s * t.cos(), s * t.sin()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn two_sidedness(a in arb_param(), x in -6.0..8.0f64, y in -6.0..6.0f64) {
            let p = KleinPair::new(&CorrContext::new(a).unwrap()).unwrap();
            let z = SpherePoint::new(x, y);
            prop_assume!(chordal_dist(z, SpherePoint::real(1.0)) > NEAR_ONE);
            if let Restricted::Image(w) = p.f_restricted(z).unwrap() {
                let other = p.f_tilde(z).unwrap();
                prop_assume!(p.margin(w).abs() > 1e-6 && p.margin(other).abs() > 1e-6);
                prop_assert!(p.in_delta_j(w));
                prop_assert!(!p.in_delta_j(other));
            }
        }

        #[test]
        fn backward_invariance_and_degree(a in arb_param(), x in -6.0..8.0f64, y in -6.0..6.0f64) {
            let p = KleinPair::new(&CorrContext::new(a).unwrap()).unwrap();
            let w = SpherePoint::new(x, y);
            prop_assume!(p.margin(w) > 1e-6);
            let pre = fa_backward(&p.ctx, w);
            let mut hits = 0;
            for (z, m) in pre.weighted() {
                prop_assert!(p.margin(z) > -1e-9);
                if let Ok(Restricted::Image(fz)) = p.f_restricted(z) {
                    if chordal_dist(fz, w) < 1e-8 { hits += m; }
                }
            }
            prop_assert_eq!(hits, 2);
        }
    }
}
