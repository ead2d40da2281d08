//! Dense complex polynomials in one and two variables, resultants and roots.

mod linalg;
mod resultant;
mod roots;

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use linalg::determinant;
pub use resultant::{resultant, resultant_x, ResultantOptions};
pub use roots::{
    aberth_refine, cluster_multiplicities, cluster_with_tolerances, roots_simultaneous,
    RootOptions, RootSet,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative size below which trailing coefficients count as zero.
pub const COEFF_TOL: f64 = 1e-12;

/// Univariate polynomial, coefficients in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly {
            coeffs: coeffs.iter().map(|&c| c.into()).collect(),
        }
    }

    /// `∏ (x - r)`.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![ZERO; c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= ci * r;
            }
            c = next;
        }
        Poly { coeffs: c }
    }

    /// Formal degree (length - 1), including vanishing leading terms.
    pub fn formal_degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops leading coefficients below `tol·max|c|`; returns how many went.
    pub fn trim(&mut self, tol: f64) -> usize {
        let cut = tol * self.max_abs();
        let mut dropped = 0;
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.norm() <= cut) {
            self.coeffs.pop();
            dropped += 1;
        }
        dropped
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }

    /// `Σ |c_i| |x|^i`, the natural scale of an evaluation.
    pub fn abs_eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.norm())
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly { coeffs: vec![ZERO] };
        }
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut c = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly { coeffs: c }
    }
}

/// Dense bivariate polynomial `Σ c[i][j] x^i y^j`, where `x` is the first
/// variable and `y` the second.
#[derive(Clone, Debug, PartialEq)]
pub struct BiPoly {
    /// `coeffs[i][j]`, with `i <= dx` and `j <= dy`.
    pub coeffs: Vec<Vec<Complex64>>,
}

impl BiPoly {
    pub fn zeros(dx: usize, dy: usize) -> Self {
        BiPoly {
            coeffs: vec![vec![ZERO; dy + 1]; dx + 1],
        }
    }

    pub fn constant(c: Complex64) -> Self {
        BiPoly {
            coeffs: vec![vec![c]],
        }
    }

    pub fn from_fn(dx: usize, dy: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        BiPoly {
            coeffs: (0..=dx)
                .map(|i| (0..=dy).map(|j| f(i, j)).collect())
                .collect(),
        }
    }

    pub fn dx(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dy(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.dx(), self.dy())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Removes trailing rows and columns that vanish relative to the largest
    /// coefficient, so the bidegree is tight.
    pub fn trimmed(mut self, tol: f64) -> Self {
        let cut = tol * self.max_abs();
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().iter().all(|c| c.norm() <= cut) {
            self.coeffs.pop();
        }
        while self.coeffs[0].len() > 1
            && self
                .coeffs
                .iter()
                .all(|row| row.last().unwrap().norm() <= cut)
        {
            for row in &mut self.coeffs {
                row.pop();
            }
        }
        self
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, row| {
            acc * x + row.iter().rev().fold(ZERO, |a, &c| a * y + c)
        })
    }

    /// `Σ |c_ij| |x|^i |y|^j`.
    pub fn abs_eval(&self, x: f64, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, row| {
            acc * x + row.iter().rev().fold(0.0, |a, c| a * y + c.norm())
        })
    }

    /// The polynomial in `y` obtained by fixing `x`.
    pub fn at_x(&self, x: Complex64) -> Poly {
        let dy = self.dy();
        Poly {
            coeffs: (0..=dy)
                .map(|j| {
                    self.coeffs
                        .iter()
                        .rev()
                        .fold(ZERO, |acc, row| acc * x + row[j])
                })
                .collect(),
        }
    }

    /// The polynomial in `x` obtained by fixing `y`.
    pub fn at_y(&self, y: Complex64) -> Poly {
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .map(|row| row.iter().rev().fold(ZERO, |a, &c| a * y + c))
                .collect(),
        }
    }

    /// `P(t, t)`.
    pub fn diagonal(&self) -> Poly {
        let mut c = vec![ZERO; self.dx() + self.dy() + 1];
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                c[i + j] += v;
            }
        }
        Poly { coeffs: c }
    }

    /// Same polynomial with the roles of the variables exchanged.
    pub fn swapped(&self) -> BiPoly {
        BiPoly::from_fn(self.dy(), self.dx(), |i, j| self.coeffs[j][i])
    }

    /// Text form: `dx dy`, then one `i j re im` line per coefficient.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.dx(), self.dy())?;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                writeln!(out, "{i} {j} {:e} {:e}", c.re, c.im)?;
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let bad = |m: &str| Error::Parse(format!("bivariate polynomial text: {m}"));
        let head = lines
            .next()
            .ok_or_else(|| bad("empty input"))?
            .map_err(|e| bad(&e.to_string()))?;
        let dims: Vec<usize> = head
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad header")))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(bad("header must be `dx dy`"));
        }
        let mut p = BiPoly::zeros(dims[0], dims[1]);
        let mut count = 0;
        for line in lines {
            let line = line.map_err(|e| bad(&e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 4 {
                return Err(bad("coefficient lines are `i j re im`"));
            }
            let i: usize = t[0].parse().map_err(|_| bad("bad index"))?;
            let j: usize = t[1].parse().map_err(|_| bad("bad index"))?;
            let re: f64 = t[2].parse().map_err(|_| bad("bad real part"))?;
            let im: f64 = t[3].parse().map_err(|_| bad("bad imaginary part"))?;
            if i > dims[0] || j > dims[1] {
                return Err(bad("index out of range"));
            }
            p.coeffs[i][j] = Complex64::new(re, im);
            count += 1;
        }
        if count != (dims[0] + 1) * (dims[1] + 1) {
            return Err(bad("wrong number of coefficient lines"));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// `x^2 + xy + y^2 - 3`.
    fn cov_poly() -> BiPoly {
        let mut p = BiPoly::zeros(2, 2);
        p.coeffs[2][0] = c(1.0, 0.0);
        p.coeffs[1][1] = c(1.0, 0.0);
        p.coeffs[0][2] = c(1.0, 0.0);
        p.coeffs[0][0] = c(-3.0, 0.0);
        p
    }

    #[test]
    fn eval_examples() {
        let one = BiPoly::constant(c(1.0, 0.0));
        assert_eq!(one.eval(c(3.0, -1.0), c(0.5, 2.0)), c(1.0, 0.0));
        let p = cov_poly();
        assert_eq!(p.eval(c(1.0, 0.0), c(-2.0, 0.0)), c(0.0, 0.0));
        assert_eq!(p.eval(c(0.0, 0.0), c(0.0, 0.0)), c(-3.0, 0.0));
        assert_eq!(p.eval(c(1.0, 0.0), c(1.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn trim_and_diagonal() {
        let mut p = BiPoly::zeros(4, 3);
        p.coeffs[1][1] = c(2.0, 0.0);
        p.coeffs[3][0] = c(1e-14, 0.0);
        let t = p.trimmed(COEFF_TOL);
        assert_eq!(t.bidegree(), (1, 1));
        let d = cov_poly().diagonal();
        assert_eq!(
            d.coeffs,
            vec![
                c(-3.0, 0.0),
                c(0.0, 0.0),
                c(3.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0)
            ]
        );
    }

    #[test]
    fn text_roundtrip() {
        let p = BiPoly::from_fn(2, 3, |i, j| {
            c(i as f64 - 0.1 * j as f64, 1.0 / (1.0 + (i * j) as f64))
        });
        let mut buf = Vec::new();
        p.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("2 3\n0 0 "));
        assert_eq!(text.lines().count(), 1 + 12);
        assert_eq!(BiPoly::read_text(&buf[..]).unwrap(), p);
        assert!(BiPoly::read_text("1 1\n0 0 1 0\n".as_bytes()).is_err());
    }

    #[test]
    fn univariate_helpers() {
        let p = Poly::from_roots(&[c(1.0, 0.0), c(-2.0, 0.0)]);
        assert_eq!(p.coeffs, vec![c(-2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(p.derivative().coeffs, vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let mut q = Poly::from_real(&[1.0, 2.0, 0.0, 1e-15]);
        assert_eq!(q.trim(COEFF_TOL), 2);
        assert_eq!(q.formal_degree(), 1);
    }

    proptest! {
        #[test]
        fn horner_matches_naive(dx in 0usize..6, dy in 0usize..6, seed in 0u64..1000, x in -2.0..2.0f64, y in -2.0..2.0f64) {
            let p = BiPoly::from_fn(dx, dy, |i, j| c(((seed + 7 * i as u64 + 13 * j as u64) % 17) as f64 - 8.0, (i as f64 - j as f64) / 3.0));
            let (zx, zy) = (c(x, 0.3), c(-0.2, y));
            let mut naive = c(0.0, 0.0);
            for i in 0..=dx { for j in 0..=dy { naive += p.coeffs[i][j] * zx.powu(i as u32) * zy.powu(j as u32); } }
            let scale = p.abs_eval(zx.norm(), zy.norm()).max(1.0);
            prop_assert!((p.eval(zx, zy) - naive).norm() <= 1e-10 * scale);
            prop_assert!((p.at_x(zx).eval(zy) - naive).norm() <= 1e-10 * scale);
            prop_assert!((p.at_y(zy).eval(zx) - naive).norm() <= 1e-10 * scale);
            prop_assert!((p.swapped().eval(zy, zx) - naive).norm() <= 1e-10 * scale);
        }
    }
}
