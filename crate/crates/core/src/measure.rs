//! Finite atomic measures on the sphere, their transport under `F_a^{±1}`,
//! and kernel-feature discrepancies used as a weak-convergence proxy.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corr::{CorrContext, Direction};
use crate::error::{Error, Result};
use crate::par;
use crate::periodic::PeriodicReport;
use crate::sphere::SpherePoint;

/// Default atom cap for [`transport`].
pub const DEFAULT_ATOM_CAP: usize = 1 << 22;
/// Atom count from which [`Coalesce::Auto`] starts merging.
pub const AUTO_COALESCE_FROM: usize = 1 << 16;
pub const AUTO_COALESCE_EPS: f64 = 1e-10;
pub const DEFAULT_CENTERS: usize = 256;
pub const DEFAULT_BANDWIDTH: f64 = 0.15;

/// A finite list of weighted points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<(SpherePoint, f64)>,
}

impl AtomicMeasure {
    pub fn from_atoms(atoms: Vec<(SpherePoint, f64)>) -> Self {
        AtomicMeasure { atoms }
    }

    pub fn dirac(p: SpherePoint) -> Self {
        AtomicMeasure {
            atoms: vec![(p, 1.0)],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Sum of weights, accumulated in atom order.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Drops atoms of zero weight.
    pub fn compact(mut self) -> Self {
        self.atoms.retain(|a| a.1 != 0.0);
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        AtomicMeasure {
            atoms: self.atoms.iter().map(|&(p, w)| (p, w * s)).collect(),
        }
    }

    /// `t·self + (1-t)·other`, atoms concatenated.
    pub fn mix(&self, other: &AtomicMeasure, t: f64) -> Self {
        let mut atoms = self.scaled(t).atoms;
        atoms.extend(other.scaled(1.0 - t).atoms);
        AtomicMeasure { atoms }
    }

    pub fn map_points(&self, f: impl Fn(SpherePoint) -> SpherePoint) -> Self {
        AtomicMeasure {
            atoms: self.atoms.iter().map(|&(p, w)| (f(p), w)).collect(),
        }
    }
}

/// Merging policy for nearby atoms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coalesce {
    Off,
    /// Merge atoms within this chordal distance.
    Eps(f64),
    /// Off below [`AUTO_COALESCE_FROM`] atoms, `Eps(1e-10)` above.
    Auto,
}

impl Coalesce {
    pub fn eps_for(&self, n_atoms: usize) -> Option<f64> {
        match *self {
            Coalesce::Off => None,
            Coalesce::Eps(e) if e > 0.0 => Some(e),
            Coalesce::Eps(_) => None,
            Coalesce::Auto if n_atoms >= AUTO_COALESCE_FROM => Some(AUTO_COALESCE_EPS),
            Coalesce::Auto => None,
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Keeps the smaller index as root so cluster order is input order.
    fn union(&mut self, i: usize, j: usize) {
        let (a, b) = (self.find(i), self.find(j));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage merge of atoms within chordal `eps`. A merged atom carries
/// the summed weight at the weighted centroid in the finite chart; infinity
/// only merges with infinity. Output clusters appear in order of their first
/// member.
pub fn coalesce(mu: &AtomicMeasure, eps: f64) -> AtomicMeasure {
    let n = mu.atoms.len();
    if n < 2 || eps <= 0.0 {
        return mu.clone();
    }
    let mut uf = UnionFind::new(n);
    let coords: Vec<[f64; 3]> = mu.atoms.iter().map(|a| a.0.to_unit_sphere()).collect();
    let key = |v: &[f64; 3]| {
        [
            (v[0] / eps).floor() as i64,
            (v[1] / eps).floor() as i64,
            (v[2] / eps).floor() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut first_inf: Option<usize> = None;
    for (i, (p, _)) in mu.atoms.iter().enumerate() {
        if p.is_infinite() {
            match first_inf {
                Some(j) => uf.union(j, i),
                None => first_inf = Some(i),
            }
            continue;
        }
        let k = key(&coords[i]);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(cell) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &j in cell {
                            let d2: f64 =
                                (0..3).map(|t| (coords[i][t] - coords[j][t]).powi(2)).sum();
                            if d2 <= eps * eps {
                                uf.union(i, j);
                            }
                        }
                    }
                }
            }
        }
        grid.entry(k).or_default().push(i);
    }
    let mut slot: HashMap<usize, usize> = HashMap::new();
    // (Σ w·z, Σ w, contains infinity, first member)
    let mut acc: Vec<(num_complex::Complex64, f64, bool, usize)> = Vec::new();
    for i in 0..n {
        let root = uf.find(i);
        let s = *slot.entry(root).or_insert_with(|| {
            acc.push((num_complex::Complex64::new(0.0, 0.0), 0.0, false, i));
            acc.len() - 1
        });
        let (p, w) = mu.atoms[i];
        match p {
            SpherePoint::Infinity => acc[s].2 = true,
            SpherePoint::Finite(z) => acc[s].0 += z * w,
        }
        acc[s].1 += w;
    }
    let atoms = acc
        .into_iter()
        .map(|(zw, w, inf, first)| {
            let p = if inf {
                SpherePoint::Infinity
            } else if w > 0.0 {
                SpherePoint::from_complex(zw / w)
            } else {
                mu.atoms[first].0
            };
            (p, w)
        })
        .collect();
    AtomicMeasure { atoms }
}

#[derive(Clone, Copy, Debug)]
pub struct TransportOptions {
    pub coalesce: Coalesce,
    pub atom_cap: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            coalesce: Coalesce::Auto,
            atom_cap: DEFAULT_ATOM_CAP,
        }
    }
}

/// Applies `½ F_a^*` (or its backward analogue) `steps` times. Each atom of
/// weight `w` splits into its images with weight `w·m/2`, so dyadic weights
/// stay exact.
pub fn transport(
    ctx: &CorrContext,
    mu: &AtomicMeasure,
    steps: u32,
    dir: Direction,
    opts: TransportOptions,
) -> Result<AtomicMeasure> {
    let mut cur = mu.clone();
    for _ in 0..steps {
        if cur.atoms.len().saturating_mul(2) > opts.atom_cap {
            return Err(Error::SizeLimit {
                requested: cur.atoms.len() as u64 * 2,
                cap_log2: opts.atom_cap.max(1).ilog2(),
                cap: opts.atom_cap as u64,
                hint: "enable coalescing (e.g. --coalesce 1e-10) or reduce the number of steps",
            });
        }
        let atoms = par::flat_map(&cur.atoms, |&(z, w)| {
            ctx.step(z, dir)
                .weighted()
                .into_iter()
                .map(move |(p, m)| (p, w * m as f64 * 0.5))
        });
        cur = AtomicMeasure { atoms };
        if let Some(eps) = opts.coalesce.eps_for(cur.atoms.len()) {
            cur = coalesce(&cur, eps);
        }
    }
    Ok(cur)
}

/// Kernel centers and bandwidth defining a feature map.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub label: String,
    pub centers: Vec<SpherePoint>,
    pub bandwidth: f64,
    unit: Vec<[f64; 3]>,
}

impl KernelSpec {
    pub fn new(
        label: impl Into<String>,
        centers: Vec<SpherePoint>,
        bandwidth: f64,
    ) -> Result<Self> {
        if centers.is_empty() || !(bandwidth > 0.0) {
            return Err(Error::Domain(
                "kernel needs at least one center and a positive bandwidth".into(),
            ));
        }
        let unit = centers.iter().map(|c| c.to_unit_sphere()).collect();
        Ok(KernelSpec {
            label: label.into(),
            centers,
            bandwidth,
            unit,
        })
    }

    /// `count` Fibonacci-lattice points on the unit sphere, projected to the plane.
    pub fn fibonacci(count: usize, bandwidth: f64) -> Result<Self> {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let centers = (0..count)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                let rho = (1.0 - z * z).sqrt();
                let t = golden * i as f64;
                SpherePoint::from_unit_sphere([rho * t.cos(), rho * t.sin(), z])
            })
            .collect();
        Self::new(format!("fibonacci{count}"), centers, bandwidth)
    }

    pub fn default_spec() -> Self {
        Self::fibonacci(DEFAULT_CENTERS, DEFAULT_BANDWIDTH).expect("valid default kernel")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: String,
    pub bandwidth: f64,
}

impl FeatureVector {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "center_index,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{i},{}", sig17(*v))?;
        }
        Ok(())
    }
}

/// Sum with a fixed binary tree shape, so the result does not depend on
/// how the caller was scheduled.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().fold(0.0, |acc, x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn kernel_features(mu: &AtomicMeasure, spec: &KernelSpec) -> FeatureVector {
    let pts: Vec<([f64; 3], f64)> = mu
        .atoms
        .iter()
        .map(|&(p, w)| (p.to_unit_sphere(), w))
        .collect();
    let inv_h2 = 1.0 / (spec.bandwidth * spec.bandwidth);
    let values = par::map(&spec.unit, |c| {
        let terms: Vec<f64> = pts
            .iter()
            .map(|(u, w)| {
                let d2 = (u[0] - c[0]).powi(2) + (u[1] - c[1]).powi(2) + (u[2] - c[2]).powi(2);
                w * (-d2 * inv_h2).exp()
            })
            .collect();
        pairwise_sum(&terms)
    });
    FeatureVector {
        values,
        label: spec.label.clone(),
        bandwidth: spec.bandwidth,
    }
}

/// Max-norm difference of feature vectors over the larger mass.
pub fn feature_discrepancy(f: &FeatureVector, g: &FeatureVector, mass: f64) -> Result<f64> {
    if f.label != g.label || f.values.len() != g.values.len() || f.bandwidth != g.bandwidth {
        return Err(Error::Comparison(format!(
            "feature descriptors differ: {}/{}/{} vs {}/{}/{}",
            f.label,
            f.values.len(),
            f.bandwidth,
            g.label,
            g.values.len(),
            g.bandwidth
        )));
    }
    if mass <= 0.0 {
        return Ok(0.0);
    }
    let m = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(m / mass)
}

pub fn discrepancy(mu: &AtomicMeasure, nu: &AtomicMeasure, spec: &KernelSpec) -> f64 {
    let (f, g) = (kernel_features(mu, spec), kernel_features(nu, spec));
    feature_discrepancy(&f, &g, mu.mass().max(nu.mass())).expect("same spec")
}

/// Discrepancy between `μ` and one transport step of `μ`.
pub fn invariance_residual(ctx: &CorrContext, mu: &AtomicMeasure, dir: Direction) -> Result<f64> {
    invariance_residual_with(ctx, mu, dir, &KernelSpec::default_spec())
}

pub fn invariance_residual_with(
    ctx: &CorrContext,
    mu: &AtomicMeasure,
    dir: Direction,
    spec: &KernelSpec,
) -> Result<f64> {
    let opts = TransportOptions {
        coalesce: Coalesce::Off,
        atom_cap: usize::MAX,
    };
    let next = transport(ctx, mu, 1, dir, opts)?;
    Ok(discrepancy(&next, mu, spec))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// Equal weight on each distinct verified point.
    Counting,
    /// Weight `ν / 2^(n+1)`.
    Multiplicity,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counting" => Ok(Weighting::Counting),
            "multiplicity" => Ok(Weighting::Multiplicity),
            _ => Err(Error::Parse(format!(
                "weighting must be counting or multiplicity, got {s:?}"
            ))),
        }
    }
}

/// Counting measure on the verified period-`n` points of a report.
pub fn periodic_measure(report: &PeriodicReport, weighting: Weighting) -> Result<AtomicMeasure> {
    let expected = 1u64 << (report.n + 1);
    if report.total_multiplicity != expected {
        return Err(Error::Refused(format!(
            "verified multiplicities sum to {} instead of {expected}",
            report.total_multiplicity
        )));
    }
    let pts: Vec<_> = report.points.iter().filter(|p| p.verified).collect();
    let atoms = match weighting {
        Weighting::Counting => {
            let w = 1.0 / pts.len() as f64;
            pts.iter().map(|p| (p.point, w)).collect()
        }
        Weighting::Multiplicity => pts
            .iter()
            .map(|p| (p.point, p.multiplicity as f64 / expected as f64))
            .collect(),
    };
    Ok(AtomicMeasure { atoms })
}

/// Decimal with at least 17 significant digits.
pub fn sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.16}");
    }
    let e = x.abs().log10().floor() as i32;
    if !(-4..16).contains(&e) {
        return format!("{x:.16e}");
    }
    let decimals = (17 - e).max(1) as usize;
    format!("{x:.decimals$}")
}

/// Atom CSV: optional `# key=value` lines, then `re,im,at_infinity,weight`.
pub fn write_atoms_csv<W: Write>(
    mu: &AtomicMeasure,
    header: &[(String, String)],
    mut out: W,
) -> std::io::Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "re,im,at_infinity,weight")?;
    for &(p, w) in &mu.atoms {
        match p {
            SpherePoint::Finite(z) => writeln!(out, "{:?},{:?},0,{}", z.re, z.im, sig17(w))?,
            SpherePoint::Infinity => writeln!(out, "inf,inf,1,{}", sig17(w))?,
        }
    }
    Ok(())
}

pub fn read_atoms_csv<R: BufRead>(input: R) -> Result<AtomicMeasure> {
    let mut atoms = Vec::new();
    let mut seen_header = false;
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            seen_header = true;
            if line.starts_with("re,") {
                continue;
            }
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || {
            Error::Parse(format!(
                "line {}: expected re,im,at_infinity,weight",
                lineno + 1
            ))
        };
        if f.len() != 4 {
            return Err(bad());
        }
        let w: f64 = f[3].parse().map_err(|_| bad())?;
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Parse(format!(
                "line {}: weight must be nonnegative",
                lineno + 1
            )));
        }
        let p = match f[2] {
            "1" => SpherePoint::Infinity,
            "0" => {
                let re: f64 = f[0].parse().map_err(|_| bad())?;
                let im: f64 = f[1].parse().map_err(|_| bad())?;
                if !(re.is_finite() && im.is_finite()) {
                    return Err(bad());
                }
                SpherePoint::new(re, im)
            }
            _ => return Err(bad()),
        };
        atoms.push((p, w));
    }
    Ok(AtomicMeasure { atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{chordal_dist, same_point};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn ctx(re: f64, im: f64) -> CorrContext {
        CorrContext::new(Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn transport_examples() {
        let c4 = ctx(4.0, 0.0);
        let mu = AtomicMeasure::from_atoms(vec![
            (SpherePoint::new(0.5, 1.0), 0.25),
            (SpherePoint::Infinity, 0.75),
        ]);
        assert_eq!(
            transport(&c4, &mu, 0, Direction::Forward, Default::default()).unwrap(),
            mu
        );
        let one = transport(
            &c4,
            &AtomicMeasure::dirac(1.0.into()),
            1,
            Direction::Backward,
            Default::default(),
        )
        .unwrap();
        assert_eq!(one.atoms.len(), 2);
        for z in [1.0, -2.0] {
            assert!(one
                .atoms
                .iter()
                .any(|&(p, w)| same_point(p, z.into(), 1e-15) && w == 0.5));
        }

        let c5 = ctx(5.0, 0.0);
        for k in [1, 4, 10] {
            let m = transport(
                &c5,
                &AtomicMeasure::dirac((-1.0).into()),
                k,
                Direction::Backward,
                Default::default(),
            )
            .unwrap();
            assert_eq!(m.atoms, vec![(SpherePoint::real(-1.0), 1.0)]);
        }
    }

    #[test]
    fn transport_mass_and_cap() {
        let c4 = ctx(4.0, 0.0);
        let m = transport(
            &c4,
            &AtomicMeasure::dirac(3.0.into()),
            13,
            Direction::Backward,
            Default::default(),
        )
        .unwrap();
        assert_eq!(m.mass(), 1.0);
        let opts = TransportOptions {
            coalesce: Coalesce::Off,
            atom_cap: 1 << 10,
        };
        let err = transport(
            &c4,
            &AtomicMeasure::dirac(3.0.into()),
            11,
            Direction::Backward,
            opts,
        )
        .unwrap_err();
        assert!(err.to_string().contains("coalesc"));
        let opts = TransportOptions {
            coalesce: Coalesce::Eps(1e-3),
            atom_cap: usize::MAX,
        };
        let m = transport(
            &c4,
            &AtomicMeasure::dirac(3.0.into()),
            13,
            Direction::Backward,
            opts,
        )
        .unwrap();
        assert!((m.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coalesce_merges_nearby() {
        let mu = AtomicMeasure::from_atoms(vec![
            (SpherePoint::real(1.0), 0.25),
            (SpherePoint::Infinity, 0.125),
            (SpherePoint::real(1.0 + 1e-12), 0.25),
            (SpherePoint::real(-2.0), 0.25),
            (SpherePoint::Infinity, 0.125),
        ]);
        let m = coalesce(&mu, 1e-10);
        assert_eq!(m.atoms.len(), 3);
        assert_eq!(m.atoms[0].1, 0.5);
        assert!(same_point(m.atoms[0].0, 1.0.into(), 1e-11));
        assert_eq!(m.atoms[1], (SpherePoint::Infinity, 0.25));
        assert_eq!(m.mass(), 1.0);
    }

    #[test]
    fn kernel_examples() {
        let spec = KernelSpec::default_spec();
        assert_eq!(spec.centers.len(), 256);
        let c = spec.centers[17];
        let f = kernel_features(&AtomicMeasure::dirac(c).scaled(0.75), &spec);
        assert!((f.values[17] - 0.75).abs() < 1e-15);
        let zero = kernel_features(&AtomicMeasure::dirac(c).scaled(0.0), &spec);
        assert!(zero.values.iter().all(|&v| v == 0.0));

        // A unit atom far from three isolated centers is invisible to them.
        let few = KernelSpec::new(
            "three",
            vec![0.0.into(), 0.1.into(), SpherePoint::new(0.0, 0.1)],
            0.15,
        )
        .unwrap();
        let mu = AtomicMeasure::dirac(0.05.into());
        let nu = mu
            .mix(&AtomicMeasure::dirac(SpherePoint::Infinity), 0.5)
            .scaled(2.0);
        let (fm, fn_) = (kernel_features(&mu, &few), kernel_features(&nu, &few));
        for (a, b) in fm.values.iter().zip(&fn_.values) {
            assert!((a - b).abs() < 1e-50);
        }
    }

    #[test]
    fn fibonacci_centers_spread() {
        let spec = KernelSpec::default_spec();
        let mut worst = 0.0f64;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        for _ in 0..500 {
            let p = SpherePoint::random(&mut rng);
            let d = spec
                .centers
                .iter()
                .map(|&c| chordal_dist(p, c))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
        assert!(worst < 0.2, "covering radius {worst}");
    }

    #[test]
    fn discrepancy_mismatch_is_error() {
        let a = kernel_features(
            &AtomicMeasure::dirac(0.0.into()),
            &KernelSpec::fibonacci(16, 0.15).unwrap(),
        );
        let b = kernel_features(
            &AtomicMeasure::dirac(0.0.into()),
            &KernelSpec::fibonacci(16, 0.2).unwrap(),
        );
        assert!(matches!(
            feature_discrepancy(&a, &b, 1.0),
            Err(Error::Comparison(_))
        ));
    }

    #[test]
    fn exceptional_invariance_is_exact() {
        let c5 = ctx(5.0, 0.0);
        let r = invariance_residual(
            &c5,
            &AtomicMeasure::dirac((-1.0).into()),
            Direction::Backward,
        )
        .unwrap();
        assert_eq!(r, 0.0);
        // A fixed atom that also splits off a second branch is not invariant.
        let c4 = ctx(4.0, 0.0);
        let r = invariance_residual(&c4, &AtomicMeasure::dirac(1.0.into()), Direction::Backward)
            .unwrap();
        assert!(r > 0.1);
    }

    #[test]
    fn csv_roundtrip() {
        let mu = AtomicMeasure::from_atoms(vec![
            (SpherePoint::new(0.1, -2.5e-8), 1.0 / 3.0),
            (SpherePoint::Infinity, 6.103515625e-05),
        ]);
        let mut buf = Vec::new();
        write_atoms_csv(&mu, &[("a".into(), "4,0".into())], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# a=4,0\nre,im,at_infinity,weight\n"));
        assert_eq!(read_atoms_csv(&buf[..]).unwrap(), mu);
    }

    #[test]
    fn sig17_digits() {
        for x in [0.5, 1.0, 6.103515625e-05, 123456.789, 1.0 / 3.0] {
            let s = sig17(x);
            let digits = s
                .trim_start_matches(['0', '.'])
                .chars()
                .filter(|c| c.is_ascii_digit())
                .count();
            assert!(digits >= 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    proptest! {
        #[test]
        fn discrepancy_symmetric(xs in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64, 0.0..1.0f64), 1..20),
                                 ys in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64, 0.0..1.0f64), 1..20)) {
            let spec = KernelSpec::fibonacci(64, 0.15).unwrap();
            let m = AtomicMeasure::from_atoms(xs.iter().map(|&(x, y, w)| (SpherePoint::new(x, y), w)).collect());
            let n = AtomicMeasure::from_atoms(ys.iter().map(|&(x, y, w)| (SpherePoint::new(x, y), w)).collect());
            prop_assert_eq!(discrepancy(&m, &m, &spec), 0.0);
            prop_assert_eq!(discrepancy(&m, &n, &spec), discrepancy(&n, &m, &spec));
        }

        #[test]
        fn transport_preserves_dyadic_mass(re in 1.5..7.0f64, im in -2.5..2.5f64, x in -4.0..4.0f64, y in -4.0..4.0f64, steps in 0u32..10) {
            let c = ctx(re, im);
            for dir in [Direction::Forward, Direction::Backward] {
                let m = transport(&c, &AtomicMeasure::dirac(SpherePoint::new(x, y)), steps, dir, Default::default()).unwrap();
                prop_assert_eq!(m.mass(), 1.0);
            }
        }
    }
}
