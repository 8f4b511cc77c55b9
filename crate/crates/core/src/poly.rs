//! Real polynomials in `(x, y)`, used for harmonic parts of weights and for
//! the harmonic-conjugate construction.

use num_complex::Complex64;

/// Dense real polynomial `sum c[i][j] x^i y^j`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RealPoly2 {
    coeffs: Vec<Vec<f64>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl RealPoly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(0, 0, c);
        p
    }

    /// `x^2 + y^2` scaled by `a`.
    pub fn radial_quadratic(a: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(2, 0, a);
        p.add_term(0, 2, a);
        p
    }

    /// `Re sum_k p_k z^k` with `z = x + iy`.
    pub fn real_part_of(p: &[Complex64]) -> Self {
        let mut out = Self::zero();
        for (k, pk) in p.iter().enumerate() {
            for j in 0..=k {
                let b = binomial(k, j);
                // Re(pk * i^j)
                let re = match j % 4 {
                    0 => pk.re,
                    1 => -pk.im,
                    2 => -pk.re,
                    _ => pk.im,
                };
                out.add_term(k - j, j, b * re);
            }
        }
        out
    }

    pub fn add_term(&mut self, i: usize, j: usize, c: f64) {
        if self.coeffs.len() <= i {
            self.coeffs.resize(i + 1, Vec::new());
        }
        let row = &mut self.coeffs[i];
        if row.len() <= j {
            row.resize(j + 1, 0.0);
        }
        row[j] += c;
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs
            .get(i)
            .and_then(|row| row.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    /// Iterates over `(i, j, c)` for every stored coefficient, zero or not.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &c)| (i, j, c)))
    }

    /// Total degree, ignoring zero coefficients; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms().filter(|t| t.2 != 0.0).map(|(i, j, _)| i + j).max()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms().fold(0.0, |m, (_, _, c)| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for row in self.coeffs.iter().rev() {
            let mut inner = 0.0;
            for &c in row.iter().rev() {
                inner = inner * y + c;
            }
            acc = acc * x + inner;
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, j, c) in other.terms() {
            out.add_term(i, j, c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .flat_map(|row| row.iter_mut())
            .for_each(|c| *c *= s);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Coefficientwise Laplacian.
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero();
        for (i, j, c) in self.terms() {
            if i >= 2 {
                out.add_term(i - 2, j, c * (i * (i - 1)) as f64);
            }
            if j >= 2 {
                out.add_term(i, j - 2, c * (j * (j - 1)) as f64);
            }
        }
        out
    }

    /// The polynomial `(x, y) -> self(x + x0, y + y0)`.
    pub fn translate(&self, x0: f64, y0: f64) -> Self {
        let mut out = Self::zero();
        for (i, j, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            for a in 0..=i {
                let cx = binomial(i, a) * x0.powi((i - a) as i32);
                for b in 0..=j {
                    let cy = binomial(j, b) * y0.powi((j - b) as i32);
                    out.add_term(a, b, c * cx * cy);
                }
            }
        }
        out
    }
}
