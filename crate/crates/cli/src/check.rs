//! The consolidated invariant suite behind `corrdyn check`.

use corrdyn::corr::{cov_images, fa_backward, fa_forward};
use corrdyn::klein::{validate_klein, Restricted, NEAR_ONE};
use corrdyn::periodic::{parabolic_coefficient, periodic_points, Method, PeriodicOptions};
use corrdyn::sphere::chordal_dist;
use corrdyn::{CorrContext, KleinPair, SpherePoint};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct GroupResult {
    pub name: &'static str,
    pub failure: Option<String>,
}

fn random_finite(rng: &mut ChaCha8Rng) -> SpherePoint {
    SpherePoint::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0))
}

fn sphere_metric(ctx: &CorrContext, rng: &mut ChaCha8Rng) -> Option<String> {
    for _ in 0..1000 {
        let (p, q, r) = (
            SpherePoint::random(rng),
            SpherePoint::random(rng),
            SpherePoint::random(rng),
        );
        if chordal_dist(p, r) > chordal_dist(p, q) + chordal_dist(q, r) + 1e-12 {
            return Some(format!("triangle inequality fails for {p}; {q}; {r}"));
        }
        let inv = ctx.j_map.inverse();
        if chordal_dist(inv.apply(ctx.j(p)), p) >= 1e-10 {
            return Some(format!("J inverse does not undo J at {p}"));
        }
    }
    None
}

fn cov_symmetry(_: &CorrContext, rng: &mut ChaCha8Rng) -> Option<String> {
    for _ in 0..1000 {
        let z = random_finite(rng);
        for w in cov_images(z).points() {
            if !cov_images(w).contains(z, 1e-8) {
                return Some(format!("{w} is an image of {z} but not conversely"));
            }
        }
    }
    None
}

fn adjointness(ctx: &CorrContext, rng: &mut ChaCha8Rng) -> Option<String> {
    for _ in 0..1000 {
        let z = random_finite(rng);
        for w in fa_forward(ctx, z).points() {
            if !fa_backward(ctx, w).contains(z, 1e-8) {
                return Some(format!("{z} -> {w} forward but not backward"));
            }
        }
        for w in fa_backward(ctx, z).points() {
            if !fa_forward(ctx, w).contains(z, 1e-8) {
                return Some(format!("{z} -> {w} backward but not forward"));
            }
        }
    }
    None
}

fn conjugated_relation(ctx: &CorrContext, rng: &mut ChaCha8Rng) -> Option<String> {
    let a = ctx.a;
    let phi_inv = ctx.phi_map.inverse();
    for _ in 0..500 {
        let Some(z) = random_finite(rng).finite() else {
            continue;
        };
        if (z + 1.0).norm() < 1e-3 {
            continue;
        }
        for img in fa_forward(ctx, ctx.phi_map.apply(SpherePoint::Finite(z))).points() {
            let Some(w) = phi_inv.apply(img).finite() else {
                continue;
            };
            if (w - 1.0).norm() < 1e-3 {
                continue;
            }
            let s = (a * z + 1.0) / (z + 1.0);
            let t = (a * w - 1.0) / (w - 1.0);
            let scale = s.norm_sqr() + (s * t).norm() + t.norm_sqr() + 3.0;
            let r = (s * s + s * t + t * t - 3.0).norm() / scale;
            if r >= 1e-7 {
                return Some(format!("residual {r:e} at z = {z}, w = {w}"));
            }
        }
    }
    None
}

fn klein(ctx: &CorrContext, rng: &mut ChaCha8Rng) -> Option<String> {
    match validate_klein(ctx, 10_000, rng.gen()) {
        Ok(rep) if rep.all_ok() => None,
        Ok(rep) => Some(rep.to_string().replace('\n', "; ")),
        Err(e) => Some(e.to_string()),
    }
}

fn two_sidedness(ctx: &CorrContext, rng: &mut ChaCha8Rng) -> Option<String> {
    let pair = match KleinPair::new(ctx) {
        Ok(p) => p,
        Err(e) => return Some(e.to_string()),
    };
    for _ in 0..1000 {
        let z = random_finite(rng);
        if chordal_dist(z, SpherePoint::real(1.0)) <= NEAR_ONE {
            continue;
        }
        match pair.f_restricted(z) {
            Ok(Restricted::Image(w)) => {
                let other = match pair.f_tilde(z) {
                    Ok(o) => o,
                    Err(e) => return Some(e.to_string()),
                };
                if pair.margin(w).abs() <= 1e-6 || pair.margin(other).abs() <= 1e-6 {
                    continue;
                }
                if !pair.in_delta_j(w) || pair.in_delta_j(other) {
                    return Some(format!("images {w} and {other} of {z} are not split"));
                }
            }
            Ok(Restricted::Escaped) => {}
            Err(e) => return Some(e.to_string()),
        }
    }
    None
}

fn periodic_counts(ctx: &CorrContext, _: &mut ChaCha8Rng) -> Option<String> {
    for n in 1..=3 {
        match periodic_points(ctx, n, Method::Both, &PeriodicOptions::default()) {
            Ok(rep) if rep.total_multiplicity == 1 << (n + 1) && rep.count_distinct % 2 == 1 => {}
            Ok(rep) => {
                return Some(format!(
                    "n = {n}: total {} over {} points",
                    rep.total_multiplicity, rep.count_distinct
                ))
            }
            Err(e) => return Some(format!("n = {n}: {e}")),
        }
    }
    None
}

fn exceptional_cycle(_: &CorrContext, _: &mut ChaCha8Rng) -> Option<String> {
    let ctx = CorrContext::new(Complex64::new(5.0, 0.0)).expect("a = 5 is valid");
    let (m1, two) = (SpherePoint::real(-1.0), SpherePoint::real(2.0));
    let f = fa_forward(&ctx, m1);
    if !(f.contains(m1, 1e-10) && f.contains(two, 1e-10)) {
        return Some(format!("F(-1) = {:?}", f.points()));
    }
    let g = fa_forward(&ctx, two);
    if g.weighted().len() != 1 || !g.contains(two, 1e-10) {
        return Some(format!("F(2) = {:?}", g.weighted()));
    }
    None
}

fn parabolic(ctx: &CorrContext, _: &mut ChaCha8Rng) -> Option<String> {
    let rep = parabolic_coefficient(ctx);
    let dm = (rep.numeric_multiplier - 1.0).norm();
    if dm > 1e-6 {
        return Some(format!("multiplier off by {dm:e}"));
    }
    rep.flagged.then(|| {
        format!(
            "coefficient {} vs closed form {} (deviation {:e})",
            rep.numeric_coefficient, rep.coefficient, rep.deviation
        )
    })
}

type Group = fn(&CorrContext, &mut ChaCha8Rng) -> Option<String>;

pub fn run(ctx: &CorrContext, seed: u64) -> Vec<GroupResult> {
    let groups: [(&'static str, Group); 9] = [
        ("sphere-metric", sphere_metric),
        ("cov-symmetry", cov_symmetry),
        ("adjointness", adjointness),
        ("conjugated-relation", conjugated_relation),
        ("klein-validation", klein),
        ("two-sidedness", two_sidedness),
        ("periodic-counts", periodic_counts),
        ("exceptional-cycle", exceptional_cycle),
        ("parabolic-coefficient", parabolic),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups
        .into_iter()
        .map(|(name, g)| GroupResult {
            name,
            failure: g(ctx, &mut rng),
        })
        .collect()
}
