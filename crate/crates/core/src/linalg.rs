//! Small dense complex matrices, row-major.

use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn add_outer(&mut self, a: &[C64], b: &[C64], scale: C64) {
        for (r, ar) in a.iter().enumerate() {
            if *ar == ZERO {
                continue;
            }
            let row = &mut self.data[r * self.dim..(r + 1) * self.dim];
            for (x, bc) in row.iter_mut().zip(b) {
                *x += scale * ar * bc.conj();
            }
        }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|r| self.data[r * self.dim..(r + 1) * self.dim].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn adjoint(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        out
    }

    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (a, b) = (self.dim, other.dim);
        let mut out = Matrix::zeros(a * b);
        for i in 0..a {
            for j in 0..a {
                let x = self.data[i * a + j];
                if x == ZERO {
                    continue;
                }
                for k in 0..b {
                    for l in 0..b {
                        out.data[(i * b + k) * (a * b) + j * b + l] = x * other.data[k * b + l];
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix { dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `U†U - I`.
    pub fn unitarity_error(&self) -> f64 {
        self.adjoint().mul(self).max_abs_diff(&Matrix::identity(self.dim))
    }
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_identities() {
        let i2 = Matrix::identity(2);
        assert_eq!(i2.kron(&Matrix::identity(4)), Matrix::identity(8));
    }

    #[test]
    fn outer_products_build_projectors() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = [C64::new(s, 0.0), C64::new(s, 0.0)];
        let mut p = Matrix::zeros(2);
        p.add_outer(&plus, &plus, ONE);
        assert!(p.mul(&p).max_abs_diff(&p) < 1e-15);
        assert!((p.get(0, 1).re - 0.5).abs() < 1e-15);
    }
}
