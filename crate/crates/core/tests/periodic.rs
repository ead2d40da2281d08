use corrdyn::klein::Restricted;
use corrdyn::measure::transport;
use corrdyn::periodic::{periodic_points, set_distance, Method, PeriodicOptions, PeriodicSide};
use corrdyn::sphere::{chordal_dist, SpherePoint};
use corrdyn::{AtomicMeasure, CorrContext, Direction, KleinPair, Side};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `f_a^n(z) - z` by iterating the single-valued restriction.
fn return_offset(pair: &KleinPair, z: Complex64, n: u32) -> Option<Complex64> {
    let mut cur = SpherePoint::Finite(z);
    for _ in 0..n {
        cur = match pair.f_restricted(cur).ok()? {
            Restricted::Image(w) => w,
            Restricted::Escaped => return None,
        };
    }
    Some(cur.finite()? - z)
}

/// Periodic points of `f_a` of period dividing `n`, other than `1`, by
/// Newton on `f_a^n(z) - z` seeded from a backward orbit tree, whose atoms
/// accumulate on the minus limit set.
fn direct_search(pair: &KleinPair, n: u32) -> Vec<SpherePoint> {
    let seeds = transport(
        &pair.ctx,
        &AtomicMeasure::dirac(SpherePoint::real(3.0)),
        11,
        Direction::Backward,
        Default::default(),
    )
    .unwrap();
    let mut found: Vec<Complex64> = Vec::new();
    for &(p, _) in &seeds.atoms {
        let Some(mut z) = p.finite() else { continue };
        let mut done = false;
        for _ in 0..60 {
            let Some(g) = return_offset(pair, z, n) else {
                break;
            };
            if g.norm() < 1e-13 * (1.0 + z.norm()) {
                done = true;
                break;
            }
            let h = 1e-7 * (1.0 + z.norm());
            let (Some(gp), Some(gm)) =
                (return_offset(pair, z + h, n), return_offset(pair, z - h, n))
            else {
                break;
            };
            let d = (gp - gm) / (2.0 * h);
            if d.norm() == 0.0 {
                break;
            }
            z -= g / d;
        }
        if done && (z - 1.0).norm() > 1e-3 && !found.iter().any(|&f| (f - z).norm() < 1e-7) {
            found.push(z);
        }
    }
    found.into_iter().map(SpherePoint::Finite).collect()
}

#[test]
fn counts_at_complex_parameter() {
    let ctx = CorrContext::new(c(3.0, 2.0)).unwrap();
    for n in 1..=4 {
        let rep = periodic_points(&ctx, n, Method::Both, &PeriodicOptions::default()).unwrap();
        assert_eq!(rep.total_multiplicity, 1 << (n + 1), "n = {n}");
        assert_eq!(rep.count_distinct % 2, 1);
        assert!(rep.complete());
        assert!(rep.j_asymmetry(&ctx) <= 1e-6);
    }
}

#[test]
fn minus_side_is_periodic_set_of_restriction() {
    for a in [c(4.0, 0.0), c(3.0, 2.0)] {
        let ctx = CorrContext::new(a).unwrap();
        let pair = KleinPair::new(&ctx).unwrap();
        for n in 1..=3 {
            let rep =
                periodic_points(&ctx, n, Method::Resultant, &PeriodicOptions::default()).unwrap();
            let minus: Vec<SpherePoint> = rep
                .points
                .iter()
                .filter(|p| p.side == PeriodicSide::Minus)
                .map(|p| p.point)
                .collect();
            let direct = direct_search(&pair, n);
            let d = set_distance(&minus, &direct);
            assert!(d <= 1e-5, "a = {a}, n = {n}: {minus:?} vs {direct:?}");
        }
    }
}

#[test]
fn every_periodic_point_has_a_side() {
    let one = SpherePoint::real(1.0);
    for a in [c(4.0, 0.0), c(7.0, 0.0), c(3.0, 2.0)] {
        let ctx = CorrContext::new(a).unwrap();
        let pair = KleinPair::new(&ctx).unwrap();
        for n in 1..=3 {
            let rep =
                periodic_points(&ctx, n, Method::Resultant, &PeriodicOptions::default()).unwrap();
            for p in &rep.points {
                let side = match p.side {
                    PeriodicSide::Fixed1 => {
                        assert!(chordal_dist(p.point, one) < 1e-6);
                        continue;
                    }
                    PeriodicSide::Minus => Side::Minus,
                    PeriodicSide::Plus => Side::Plus,
                    PeriodicSide::Unclassified => {
                        panic!("a = {a}, n = {n}: {} unclassified", p.point)
                    }
                };
                // Repelling cycles leave in floating point after a few laps.
                assert!(
                    pair.limit_membership(p.point, side, 2 * n).is_inside(),
                    "a = {a}: {}",
                    p.point
                );
            }
            let minus = rep
                .points
                .iter()
                .filter(|p| p.side == PeriodicSide::Minus)
                .count();
            let plus = rep
                .points
                .iter()
                .filter(|p| p.side == PeriodicSide::Plus)
                .count();
            assert_eq!(minus, plus, "J pairs the sides");
        }
    }
}
