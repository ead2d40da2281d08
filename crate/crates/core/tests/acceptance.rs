//! The acceptance suite: one PASS/FAIL line per criterion, then a single
//! assertion over all of them.

mod common;

use std::time::{Duration, Instant};

use corrdyn::corr::{cov_images, cov_relation, critical_data, fa_backward, fa_forward};
use corrdyn::klein::validate_klein;
use corrdyn::measure::KernelSpec;
use corrdyn::periodic::{
    graph_polynomial, parabolic_coefficient, periodic_points, set_distance, superstable_parameters,
    Method, PeriodicOptions, Region,
};
use corrdyn::polyalg::{cluster_multiplicities, roots_simultaneous, Poly, RootOptions};
use corrdyn::render::{encode_ppm, render_limit_set, Palette, Viewport, DEFAULT_MAX_STEPS};
use corrdyn::sphere::{chordal_dist, SpherePoint};
use corrdyn::{CorrContext, KleinPair, Side, WeightedImage};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::calibration;

type Outcome = std::result::Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Uniform in the disk `|a - 4| <= radius`.
fn random_param(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.gen::<f64>().sqrt();
    c(4.0, 0.0) + Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

fn random_point(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn image_matches(img: WeightedImage, want: &[(SpherePoint, u32)], tol: f64) -> bool {
    let got = img.weighted();
    got.len() == want.len()
        && want.iter().all(|&(p, m)| {
            got.iter()
                .any(|&(q, k)| k == m && chordal_dist(p, q) <= tol)
        })
}

fn branch_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let z = random_point(&mut rng, 10.0);
        let img = cov_images(SpherePoint::Finite(z));
        check(img.total_multiplicity() == 2, || {
            format!("multiplicity {} at {z}", img.total_multiplicity())
        })?;
        for (w, _) in img.weighted() {
            let w = w
                .finite()
                .ok_or_else(|| format!("infinite image of finite {z}"))?;
            worst = worst.max(cov_relation(z, w).norm() / z.norm_sqr().max(1.0));
        }
    }
    check(worst < 1e-9, || format!("worst scaled residual {worst:e}"))?;
    Ok(format!("worst scaled residual {worst:.1e}"))
}

fn structure_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let one = SpherePoint::real(1.0);
    let mut worst_eq = 0.0f64;
    for _ in 0..1000 {
        let z = SpherePoint::Finite(random_point(&mut rng, 5.0));
        for w in cov_images(z).points() {
            check(cov_images(w).contains(z, 1e-8), || {
                format!("cov symmetry fails at {z} -> {w}")
            })?;
        }
        let ctx = CorrContext::new(random_param(&mut rng, 3.0)).map_err(|e| e.to_string())?;
        check(chordal_dist(ctx.j(ctx.j(z)), z) < 1e-10, || {
            format!("J not an involution at {z}")
        })?;
        for w in fa_forward(&ctx, z).points() {
            check(fa_backward(&ctx, w).contains(z, 1e-8), || {
                format!("adjointness fails at {z} -> {w}")
            })?;
        }
        for w in fa_backward(&ctx, z).points() {
            check(fa_forward(&ctx, w).contains(z, 1e-8), || {
                format!("adjointness fails at {z} <- {w}")
            })?;
        }
        // The relation in the coordinates conjugated by phi.
        let zf = z.finite().unwrap();
        if (zf + 1.0).norm() < 1e-3 {
            continue;
        }
        let phi_inv = ctx.phi_map.inverse();
        for img in fa_forward(&ctx, ctx.phi_map.apply(z)).points() {
            let w = match phi_inv.apply(img).finite() {
                Some(w) if chordal_dist(SpherePoint::Finite(w), one) > 1e-3 => w,
                _ => continue,
            };
            let a = ctx.a;
            let s = (a * zf + 1.0) / (zf + 1.0);
            let t = (a * w - 1.0) / (w - 1.0);
            let scale = s.norm_sqr() + (s * t).norm() + t.norm_sqr() + 3.0;
            worst_eq = worst_eq.max((s * s + s * t + t * t - 3.0).norm() / scale);
        }
    }
    check(worst_eq < 1e-7, || {
        format!("conjugated relation residual {worst_eq:e}")
    })?;
    Ok(format!("conjugated relation residual {worst_eq:.1e}"))
}

fn fixed_and_exceptional() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (one, two, m_one, m_two) = (
        SpherePoint::real(1.0),
        SpherePoint::real(2.0),
        SpherePoint::real(-1.0),
        SpherePoint::real(-2.0),
    );
    for _ in 0..20 {
        let a = random_param(&mut rng, 3.0);
        let ctx = CorrContext::new(a).map_err(|e| e.to_string())?;
        check(
            image_matches(fa_backward(&ctx, one), &[(one, 1), (m_two, 1)], 1e-10),
            || format!("backward image of 1 at a = {a}"),
        )?;
    }
    let ctx = CorrContext::new(c(5.0, 0.0)).unwrap();
    check(
        image_matches(fa_forward(&ctx, m_one), &[(m_one, 1), (two, 1)], 1e-10),
        || "-1 at a = 5".into(),
    )?;
    check(
        image_matches(fa_forward(&ctx, two), &[(two, 2)], 1e-10),
        || "2 at a = 5".into(),
    )?;
    check(ctx.exceptional.len() == 2, || {
        "exceptional set at a = 5".into()
    })?;
    Ok("20 parameters; cycle at a = 5 exact".into())
}

/// Branch values of `F_a^{-1}` found as zeros of the discriminant in `z` of
/// the graph polynomial, without the closed form.
fn ramification_values(ctx: &CorrContext) -> Vec<Complex64> {
    let g = graph_polynomial(ctx);
    let row = |i: usize| Poly::new(g.coeffs[i].clone());
    let (c0, c1, c2) = (row(0), row(1), row(2));
    let sq = c1.mul(&c1);
    let prod = c2.mul(&c0);
    let disc: Vec<Complex64> = (0..sq.coeffs.len().max(prod.coeffs.len()))
        .map(|k| {
            let s = sq.coeffs.get(k).copied().unwrap_or_default();
            let p = prod.coeffs.get(k).copied().unwrap_or_default();
            s - 4.0 * p
        })
        .collect();
    let found = roots_simultaneous(&disc, RootOptions::default()).unwrap();
    let flat: Vec<Complex64> = found
        .roots
        .iter()
        .flat_map(|&(r, m)| std::iter::repeat(r).take(m as usize))
        .collect();
    cluster_multiplicities(&flat, |r| 1e-6 * (1.0 + r.norm()))
        .into_iter()
        .map(|(r, _)| r)
        .collect()
}

fn critical_values() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = random_param(&mut rng, 3.0);
        let ctx = CorrContext::new(a).map_err(|e| e.to_string())?;
        let found = ramification_values(&ctx);
        let closed: Vec<Complex64> = critical_data(&ctx)
            .b2
            .iter()
            .filter_map(|p| p.finite())
            .collect();
        check(found.len() == closed.len(), || {
            format!("a = {a}: found {found:?}, closed form {closed:?}")
        })?;
        for b in &closed {
            let d = found
                .iter()
                .map(|f| (f - b).norm() / b.norm().max(1.0))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    check(worst < 1e-8, || {
        format!("worst relative deviation {worst:e}")
    })?;
    Ok(format!("worst relative deviation {worst:.1e}"))
}

fn klein_validation() -> Outcome {
    let mut parts = Vec::new();
    for a in [c(4.0, 0.0), c(7.0, 0.0), c(3.0, 2.0)] {
        let ctx = CorrContext::new(a).unwrap();
        let rep = validate_klein(&ctx, 10_000, 5).map_err(|e| e.to_string())?;
        check(rep.all_ok(), || format!("a = {a}: {rep:?}"))?;
        parts.push(format!("a={a}"));
    }
    Ok(format!("10^4 samples, no failures at {}", parts.join(" ")))
}

fn periodic_counts() -> Outcome {
    let opts = PeriodicOptions::default();
    let mut worst_sym = 0.0f64;
    for a in [c(4.0, 0.0), c(7.0, 0.0)] {
        let ctx = CorrContext::new(a).unwrap();
        for n in 1..=4u32 {
            let res = periodic_points(&ctx, n, Method::Resultant, &opts)
                .map_err(|e| format!("a={a} n={n}: {e}"))?;
            let newton = periodic_points(&ctx, n, Method::Newton, &opts)
                .map_err(|e| format!("a={a} n={n}: {e}"))?;
            for (label, rep) in [("resultant", &res), ("newton", &newton)] {
                let total: u64 = rep
                    .points
                    .iter()
                    .filter(|p| p.verified)
                    .map(|p| p.multiplicity as u64)
                    .sum();
                check(total == 1 << (n + 1), || {
                    format!("a={a} n={n} {label}: total {total}")
                })?;
                check(rep.count_distinct % 2 == 1, || {
                    format!("a={a} n={n} {label}: {} distinct", rep.count_distinct)
                })?;
            }
            let d = set_distance(&res.verified_points(), &newton.verified_points());
            check(d <= 1e-5, || {
                format!("a={a} n={n}: methods differ by {d:e}")
            })?;
            worst_sym = worst_sym.max(res.j_asymmetry(&ctx));
        }
    }
    check(worst_sym <= 1e-6, || format!("J asymmetry {worst_sym:e}"))?;
    Ok(format!(
        "totals 2^(n+1), methods agree, J asymmetry {worst_sym:.1e}"
    ))
}

fn parabolic_data() -> Outcome {
    let ctx = CorrContext::new(c(4.0, 0.0)).unwrap();
    let rep = parabolic_coefficient(&ctx);
    let dm = (rep.numeric_multiplier - 1.0).norm();
    check(dm <= 1e-6, || format!("multiplier off by {dm:e}"))?;
    let dc = (rep.numeric_coefficient - c(-1.0 / 3.0, 0.0)).norm();
    check(dc <= 1e-5, || format!("coefficient off by {dc:e}"))?;
    for (a, want) in [(4.0, 2u32), (7.0, 4)] {
        let ctx = CorrContext::new(c(a, 0.0)).unwrap();
        let rep = periodic_points(&ctx, 1, Method::Both, &PeriodicOptions::default())
            .map_err(|e| e.to_string())?;
        let at_one = rep
            .points
            .iter()
            .find(|p| chordal_dist(p.point, SpherePoint::real(1.0)) < 1e-6)
            .ok_or_else(|| format!("1 missing at a = {a}"))?;
        check(at_one.multiplicity == want, || {
            format!("multiplicity {} at a = {a}", at_one.multiplicity)
        })?;
    }
    Ok(format!(
        "multiplier error {dm:.1e}, coefficient error {dc:.1e}"
    ))
}

fn superstable() -> Outcome {
    let mut parts = Vec::new();
    for n in 1..=3u32 {
        let found = superstable_parameters(n, 30, Region::default());
        let total: u32 = found.iter().map(|s| s.multiplicity).sum();
        if n == 1 {
            check(found.len() == 1 && (found[0].a - 5.0).norm() < 1e-9, || {
                format!("n = 1: {found:?}")
            })?;
        }
        check(total == 1 << (n - 1), || {
            format!("n = {n}: total multiplicity {total} from {found:?}")
        })?;
        parts.push(format!("n={n}:{}", found.len()));
    }
    Ok(parts.join(" "))
}

fn equidistribution() -> Outcome {
    let gates = calibration::gates();
    let ctx = calibration::ctx();
    let spec = KernelSpec::default_spec();
    let (mus, disc, resid) = calibration::start_independence(&ctx, &spec);
    check(disc < gates.start_discrepancy, || {
        format!("start discrepancy {disc:e}")
    })?;
    check(resid < gates.invariance_residual, || {
        format!("invariance residual {resid:e}")
    })?;
    let (frac, _) = calibration::boundary_fit(&ctx, &mus);
    check(frac >= gates.boundary_mass, || {
        format!("boundary mass fraction {frac}")
    })?;
    Ok(format!(
        "discrepancy {disc:.1e}, residual {resid:.1e}, boundary mass {frac:.5}"
    ))
}

fn periodic_measure_convergence() -> Outcome {
    let ctx = calibration::ctx();
    let spec = KernelSpec::default_spec();
    let minus = calibration::backward(&ctx, SpherePoint::real(3.0), calibration::DEPTH);
    let d = calibration::periodic_convergence(&ctx, &spec, &minus);
    check(d[0] > d[1] && d[1] > d[2], || {
        format!("not decreasing: {d:?}")
    })?;
    Ok(format!("{:.4} > {:.4} > {:.4}", d[0], d[1], d[2]))
}

fn render_determinism() -> Outcome {
    let ctx = CorrContext::new(c(4.0, 0.0)).unwrap();
    let pair = KleinPair::new(&ctx).unwrap();
    let v = Viewport::new(c(0.0, 0.0), 6.0, 1024, 1024).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            encode_ppm(
                &render_limit_set(&pair, Side::Minus, &v, DEFAULT_MAX_STEPS),
                Palette::Escape,
            )
        })
    };
    let one = run(1);
    let many = run(4);
    check(one == many, || "1-thread and 4-thread files differ".into())?;
    let header = b"P6\n1024 1024\n255\n";
    check(one.starts_with(header), || "header mismatch".into())?;
    check(one.len() == header.len() + 3 * 1024 * 1024, || {
        format!("file length {}", one.len())
    })?;
    Ok(format!("{} bytes identical", one.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, Duration); 11] = [
        (
            "branch correctness",
            branch_correctness,
            Duration::from_secs(1),
        ),
        (
            "structure identities",
            structure_identities,
            Duration::from_secs(5),
        ),
        (
            "fixed and exceptional data",
            fixed_and_exceptional,
            Duration::from_secs(1),
        ),
        ("critical values", critical_values, Duration::from_secs(1)),
        (
            "klein validation",
            klein_validation,
            Duration::from_secs(10),
        ),
        (
            "periodic-point counts",
            periodic_counts,
            Duration::from_secs(120),
        ),
        ("parabolic data", parabolic_data, Duration::from_secs(10)),
        (
            "superstable parameters",
            superstable,
            Duration::from_secs(60),
        ),
        (
            "equidistribution",
            equidistribution,
            Duration::from_secs(120),
        ),
        (
            "periodic-measure convergence",
            periodic_measure_convergence,
            Duration::from_secs(120),
        ),
        (
            "rendering determinism",
            render_determinism,
            Duration::from_secs(30),
        ),
    ];
    let mut failed = Vec::new();
    for (k, (name, run, budget)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let elapsed = t.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => {
                Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({elapsed:.2?}): {detail}", k + 1),
            Err(why) => {
                println!("FAIL {:>2} {name} ({elapsed:.2?}): {why}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
