//! Quantities behind the equidistribution gates at `a = 4`. Shared by the
//! acceptance suite and by `examples/calibrate.rs`, which writes
//! `tests/fixtures/calibration.txt`.

use corrdyn::measure::{
    discrepancy, invariance_residual, periodic_measure, transport, KernelSpec, Weighting,
};
use corrdyn::periodic::{periodic_points, Method, PeriodicOptions};
use corrdyn::render::{
    boundary_mask, dilate, mass_fraction_on, render_limit_set, render_measure, Viewport,
};
use corrdyn::sphere::chordal_dist;
use corrdyn::{AtomicMeasure, CorrContext, Direction, KleinPair, Side, SpherePoint};
use num_complex::Complex64;

pub const STARTS: [(f64, f64); 3] = [(3.0, 0.0), (2.0, 2.0), (-0.5, 0.0)];
pub const DEPTH: u32 = 14;
pub const PIXELS: usize = 1024;
pub const BAND_PIXELS: usize = 3;

pub fn ctx() -> CorrContext {
    CorrContext::new(Complex64::new(4.0, 0.0)).unwrap()
}

/// The whole of the minus limit set, `[-2, 1]` on the real axis, with margin.
pub fn viewport() -> Viewport {
    Viewport::new(Complex64::new(-0.5, 0.0), 4.0, PIXELS, PIXELS).unwrap()
}

pub fn backward(ctx: &CorrContext, z0: SpherePoint, n: u32) -> AtomicMeasure {
    transport(
        ctx,
        &AtomicMeasure::dirac(z0),
        n,
        Direction::Backward,
        Default::default(),
    )
    .unwrap()
}

pub fn forward(ctx: &CorrContext, z0: SpherePoint, n: u32) -> AtomicMeasure {
    transport(
        ctx,
        &AtomicMeasure::dirac(z0),
        n,
        Direction::Forward,
        Default::default(),
    )
    .unwrap()
}

#[derive(Debug, Default)]
pub struct Measured {
    pub start_discrepancy: f64,
    pub invariance_residual: f64,
    pub boundary_mass: f64,
    pub support_distance: f64,
    pub proxy: [f64; 3],
    pub periodic: [f64; 3],
}

/// Backward transports from each start; the largest pairwise discrepancy and
/// invariance residual.
pub fn start_independence(ctx: &CorrContext, spec: &KernelSpec) -> (Vec<AtomicMeasure>, f64, f64) {
    let mus: Vec<AtomicMeasure> = STARTS
        .iter()
        .map(|&(re, im)| backward(ctx, SpherePoint::Finite(Complex64::new(re, im)), DEPTH))
        .collect();
    let mut disc = 0.0f64;
    for i in 0..mus.len() {
        for j in i + 1..mus.len() {
            disc = disc.max(discrepancy(&mus[i], &mus[j], spec));
        }
    }
    let resid = mus
        .iter()
        .map(|m| invariance_residual(ctx, m, Direction::Backward).unwrap())
        .fold(0.0f64, f64::max);
    (mus, disc, resid)
}

/// Smallest in-view mass fraction within the boundary band, and the largest
/// chordal distance from an atom to a boundary pixel center.
pub fn boundary_fit(ctx: &CorrContext, mus: &[AtomicMeasure]) -> (f64, f64) {
    let v = viewport();
    let pair = KleinPair::new(ctx).unwrap();
    let grid = render_limit_set(&pair, Side::Minus, &v, corrdyn::render::DEFAULT_MAX_STEPS);
    let edge = boundary_mask(&grid);
    let band = dilate(&edge, PIXELS, PIXELS, BAND_PIXELS);
    let centers: Vec<SpherePoint> = (0..PIXELS * PIXELS)
        .filter(|&k| edge[k])
        .map(|k| SpherePoint::Finite(v.pixel_center(k % PIXELS, k / PIXELS)))
        .collect();
    let mut frac = 1.0f64;
    let mut far = 0.0f64;
    for mu in mus {
        let heat = render_measure(mu, &v);
        assert_eq!(heat.overflow, 0.0, "viewport must hold the whole support");
        frac = frac.min(mass_fraction_on(&heat, &band));
        for &(p, _) in &mu.atoms {
            let d = centers
                .iter()
                .map(|&c| chordal_dist(p, c))
                .fold(f64::INFINITY, f64::min);
            far = far.max(d);
        }
    }
    (frac, far)
}

/// `discrepancy(T^n δ_3, T^(n+2) δ_3)` for `n = 8, 10, 12`.
pub fn convergence_proxy(ctx: &CorrContext, spec: &KernelSpec) -> [f64; 3] {
    let z0 = SpherePoint::real(3.0);
    let mut out = [0.0; 3];
    for (k, n) in [8u32, 10, 12].into_iter().enumerate() {
        out[k] = discrepancy(&backward(ctx, z0, n), &backward(ctx, z0, n + 2), spec);
    }
    out
}

/// Discrepancy of the period-`n` measures, `n = 2, 3, 4`, from the average of
/// the backward and forward empirical measures.
pub fn periodic_convergence(
    ctx: &CorrContext,
    spec: &KernelSpec,
    minus: &AtomicMeasure,
) -> [f64; 3] {
    let z0 = SpherePoint::real(3.0);
    let plus = forward(ctx, ctx.j(z0), DEPTH);
    let target = minus.mix(&plus, 0.5);
    let mut out = [0.0; 3];
    for (k, n) in [2u32, 3, 4].into_iter().enumerate() {
        let rep = periodic_points(ctx, n, Method::Resultant, &PeriodicOptions::default()).unwrap();
        out[k] = discrepancy(
            &periodic_measure(&rep, Weighting::Multiplicity).unwrap(),
            &target,
            spec,
        );
    }
    out
}

pub fn measure_all() -> Measured {
    let ctx = ctx();
    let spec = KernelSpec::default_spec();
    let (mus, start_discrepancy, invariance_residual) = start_independence(&ctx, &spec);
    let (boundary_mass, support_distance) = boundary_fit(&ctx, &mus);
    Measured {
        start_discrepancy,
        invariance_residual,
        boundary_mass,
        support_distance,
        proxy: convergence_proxy(&ctx, &spec),
        periodic: periodic_convergence(&ctx, &spec, &mus[0]),
    }
}

/// Gates read from the checked-in fixture.
#[derive(Debug)]
pub struct Gates {
    pub start_discrepancy: f64,
    pub invariance_residual: f64,
    pub boundary_mass: f64,
    pub support_distance: f64,
    pub proxy_at_10: f64,
}

const FIXTURE: &str = include_str!("../fixtures/calibration.txt");

fn value(key: &str) -> f64 {
    FIXTURE
        .lines()
        .filter(|l| !l.starts_with('#'))
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
        .unwrap_or_else(|| panic!("fixture lacks {key}"))
        .trim()
        .parse()
        .unwrap()
}

pub fn gates() -> Gates {
    Gates {
        start_discrepancy: value("gate.start_discrepancy"),
        invariance_residual: value("gate.invariance_residual"),
        boundary_mass: value("gate.boundary_mass"),
        support_distance: value("gate.support_distance"),
        proxy_at_10: value("gate.proxy_at_10"),
    }
}

pub fn fixture_text(m: &Measured) -> String {
    let mut s = String::new();
    s.push_str("# Equidistribution gates at a = 4, 1024x1024 viewport centered -0.5 of width 4.\n");
    s.push_str("# Regenerate: cargo run --release -p corrdyn --example calibrate > crates/core/tests/fixtures/calibration.txt\n");
    s.push_str("# Gates are fixed; measured.* record the run that produced this file.\n");
    let rows: [(&str, f64); 5] = [
        ("gate.start_discrepancy", 0.05),
        ("gate.invariance_residual", 0.02),
        ("gate.boundary_mass", 0.95),
        ("gate.support_distance", 0.05),
        ("gate.proxy_at_10", 0.08),
    ];
    for (k, v) in rows {
        s.push_str(&format!("{k}={v}\n"));
    }
    s.push_str(&format!(
        "measured.start_discrepancy={:e}\n",
        m.start_discrepancy
    ));
    s.push_str(&format!(
        "measured.invariance_residual={:e}\n",
        m.invariance_residual
    ));
    s.push_str(&format!("measured.boundary_mass={}\n", m.boundary_mass));
    s.push_str(&format!(
        "measured.support_distance={:e}\n",
        m.support_distance
    ));
    for (n, v) in [8, 10, 12].iter().zip(m.proxy) {
        s.push_str(&format!("measured.proxy_{n}={v:e}\n"));
    }
    for (n, v) in [2, 3, 4].iter().zip(m.periodic) {
        s.push_str(&format!("measured.periodic_{n}={v:e}\n"));
    }
    s
}
