//! Minimal complex arithmetic for the channel generators.
//!
//! Only what the steering vectors and DFT synthesis need: a value type with
//! the ring operations, unit phasors, and a dense complex matrix with
//! matrix–vector products. Everything else in the crate works in the real
//! embedding, so a full complex-linear-algebra dependency would be unused
//! weight.

use std::ops::{Add, Mul, Neg, Sub};

/// A complex number as a pair of `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl Cplx {
    pub const ZERO: Cplx = Cplx { re: 0.0, im: 0.0 };
    pub const ONE: Cplx = Cplx { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Cplx { re, im }
    }

    /// Unit phasor `exp(i phi)`.
    pub fn expi(phi: f64) -> Self {
        Cplx {
            re: phi.cos(),
            im: phi.sin(),
        }
    }

    pub fn conj(self) -> Self {
        Cplx {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn abs_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, a: f64) -> Self {
        Cplx {
            re: self.re * a,
            im: self.im * a,
        }
    }
}

impl Add for Cplx {
    type Output = Cplx;
    fn add(self, o: Cplx) -> Cplx {
        Cplx::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Cplx {
    type Output = Cplx;
    fn sub(self, o: Cplx) -> Cplx {
        Cplx::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Cplx {
    type Output = Cplx;
    fn mul(self, o: Cplx) -> Cplx {
        Cplx::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Neg for Cplx {
    type Output = Cplx;
    fn neg(self) -> Cplx {
        Cplx::new(-self.re, -self.im)
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Cplx>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Cplx::ZERO; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Cplx {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Cplx) {
        self.data[r * self.cols + c] = v;
    }

    /// `A x`.
    pub fn matvec(&self, x: &[Cplx]) -> Vec<Cplx> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![Cplx::ZERO; self.rows];
        for r in 0..self.rows {
            let mut acc = Cplx::ZERO;
            for c in 0..self.cols {
                acc = acc + self.get(r, c) * x[c];
            }
            y[r] = acc;
        }
        y
    }

    /// `Aᴴ x` (conjugate transpose times vector).
    pub fn matvec_h(&self, x: &[Cplx]) -> Vec<Cplx> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![Cplx::ZERO; self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                y[c] = y[c] + self.get(r, c).conj() * x[r];
            }
        }
        y
    }
}

/// ℓ₂ norm of a complex vector.
pub fn cnorm(x: &[Cplx]) -> f64 {
    x.iter().map(|v| v.abs_sq()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phasor_has_unit_modulus_and_multiplies_by_angle_addition() {
        let a = Cplx::expi(0.7);
        let b = Cplx::expi(-1.3);
        assert!((a.abs() - 1.0).abs() < 1e-15);
        let prod = a * b;
        let direct = Cplx::expi(0.7 - 1.3);
        assert!((prod - direct).abs() < 1e-14);
    }

    #[test]
    fn adjoint_matvec_is_inner_product_adjoint() {
        // <A x, y> == <x, Aᴴ y> for a small fixed matrix.
        let mut a = CMat::zeros(2, 3);
        for r in 0..2 {
            for c in 0..3 {
                a.set(r, c, Cplx::new((r + c) as f64, (r as f64) - c as f64));
            }
        }
        let x = [Cplx::new(1.0, 2.0), Cplx::new(-1.0, 0.5), Cplx::new(0.0, 1.0)];
        let y = [Cplx::new(0.3, -0.4), Cplx::new(2.0, 1.0)];
        let ax = a.matvec(&x);
        let ahy = a.matvec_h(&y);
        let lhs: Cplx = ax
            .iter()
            .zip(&y)
            .fold(Cplx::ZERO, |s, (u, v)| s + *u * v.conj());
        let rhs: Cplx = x
            .iter()
            .zip(&ahy)
            .fold(Cplx::ZERO, |s, (u, v)| s + *u * v.conj());
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
