//! Real trigonometric polynomials stored as cosine/sine coefficients.
//!
//! `a0/2 + sum_k (a_k cos kx + b_k sin kx)`. The complex coefficients of the
//! synthesis `sum c_k e^{ikx}` are `c_k = (a_k - i b_k)/2` for `k > 0`,
//! `c_0 = a_0/2`, `c_{-k} = conj(c_k)`.

use std::f64::consts::PI;

/// Complex number helper kept local: the crate never exposes complex values,
/// they only appear inside multiplier computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl Cplx {
    pub const ZERO: Cplx = Cplx { re: 0.0, im: 0.0 };
    pub const ONE: Cplx = Cplx { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Cplx {
        Cplx { re, im }
    }

    /// e^{i t}
    pub fn cis(t: f64) -> Cplx {
        Cplx::new(t.cos(), t.sin())
    }

    pub fn conj(self) -> Cplx {
        Cplx::new(self.re, -self.im)
    }

    pub fn mul(self, o: Cplx) -> Cplx {
        Cplx::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    pub fn add(self, o: Cplx) -> Cplx {
        Cplx::new(self.re + o.re, self.im + o.im)
    }

    pub fn sub(self, o: Cplx) -> Cplx {
        Cplx::new(self.re - o.re, self.im - o.im)
    }

    pub fn scale(self, s: f64) -> Cplx {
        Cplx::new(self.re * s, self.im * s)
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn powi(self, mut n: u32) -> Cplx {
        let mut acc = Cplx::ONE;
        let mut base = self;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        acc
    }
}

/// Real trigonometric polynomial of degree `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    /// Cosine coefficients; `cos_coeffs[0]` is `a_0` (the constant term is `a_0/2`).
    pub cos_coeffs: Vec<f64>,
    /// Sine coefficients; `sin_coeffs[0]` is unused and kept at zero.
    pub sin_coeffs: Vec<f64>,
}

impl TrigPolynomial {
    pub fn zero(degree: usize) -> TrigPolynomial {
        TrigPolynomial {
            cos_coeffs: vec![0.0; degree + 1],
            sin_coeffs: vec![0.0; degree + 1],
        }
    }

    pub fn constant(c: f64) -> TrigPolynomial {
        TrigPolynomial {
            cos_coeffs: vec![2.0 * c],
            sin_coeffs: vec![0.0],
        }
    }

    /// Build from complex coefficients `c_0..c_n` (`c_{-k}` implied by conjugacy).
    pub fn from_complex(coeffs: &[Cplx]) -> TrigPolynomial {
        let n = coeffs.len().saturating_sub(1);
        let mut p = TrigPolynomial::zero(n);
        p.cos_coeffs[0] = 2.0 * coeffs[0].re;
        for k in 1..=n {
            p.cos_coeffs[k] = 2.0 * coeffs[k].re;
            p.sin_coeffs[k] = -2.0 * coeffs[k].im;
        }
        p
    }

    /// Complex coefficient `c_k` for `k >= 0`.
    pub fn complex_coeff(&self, k: usize) -> Cplx {
        if k > self.degree_storage() {
            return Cplx::ZERO;
        }
        if k == 0 {
            Cplx::new(self.cos_coeffs[0] / 2.0, 0.0)
        } else {
            Cplx::new(self.cos_coeffs[k] / 2.0, -self.sin_coeffs[k] / 2.0)
        }
    }

    /// Declared degree: length of the coefficient storage minus one.
    pub fn degree_storage(&self) -> usize {
        self.cos_coeffs.len() - 1
    }

    /// Index of the last coefficient pair above `tol` in absolute value.
    pub fn effective_degree(&self, tol: f64) -> usize {
        for k in (1..=self.degree_storage()).rev() {
            if self.cos_coeffs[k].abs() > tol || self.sin_coeffs[k].abs() > tol {
                return k;
            }
        }
        0
    }

    /// Evaluate by a complex Horner recurrence in z = e^{ix}; no per-term
    /// trigonometry, numerically stable on |z| = 1.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.degree_storage();
        let z = Cplx::cis(x);
        // sum_{k=n..1} c_k z^k  via Horner, then add c_0 and take 2*Re
        let mut acc = Cplx::ZERO;
        for k in (1..=n).rev() {
            acc = acc.add(self.complex_coeff(k));
            acc = acc.mul(z);
        }
        self.cos_coeffs[0] / 2.0 + 2.0 * acc.re
    }

    /// Evaluate on `m` uniform points starting at -pi: x_j = -pi + 2 pi j / m.
    pub fn sample_uniform(&self, m: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(m);
        for j in 0..m {
            let x = -PI + 2.0 * PI * j as f64 / m as f64;
            out.push(self.eval(x));
        }
        out
    }

    /// Exact derivative: d/dx (a_k cos kx + b_k sin kx) = k b_k cos kx - k a_k sin kx.
    pub fn derivative(&self) -> TrigPolynomial {
        let n = self.degree_storage();
        let mut d = TrigPolynomial::zero(n);
        for k in 1..=n {
            d.cos_coeffs[k] = k as f64 * self.sin_coeffs[k];
            d.sin_coeffs[k] = -(k as f64) * self.cos_coeffs[k];
        }
        d
    }

    pub fn derivative_n(&self, r: usize) -> TrigPolynomial {
        let mut p = self.clone();
        for _ in 0..r {
            p = p.derivative();
        }
        p
    }

    /// Apply a Fourier multiplier: `c_k -> mu(k) * c_k` for k >= 0 (negative
    /// frequencies follow by conjugate symmetry, so the result is real).
    pub fn apply_multiplier(&self, mu: impl Fn(usize) -> Cplx) -> TrigPolynomial {
        let n = self.degree_storage();
        let mut coeffs = Vec::with_capacity(n + 1);
        for k in 0..=n {
            coeffs.push(self.complex_coeff(k).mul(mu(k)));
        }
        TrigPolynomial::from_complex(&coeffs)
    }

    pub fn add(&self, other: &TrigPolynomial) -> TrigPolynomial {
        let n = self.degree_storage().max(other.degree_storage());
        let mut out = TrigPolynomial::zero(n);
        for k in 0..=n {
            out.cos_coeffs[k] = self.cos_coeffs.get(k).copied().unwrap_or(0.0)
                + other.cos_coeffs.get(k).copied().unwrap_or(0.0);
            out.sin_coeffs[k] = self.sin_coeffs.get(k).copied().unwrap_or(0.0)
                + other.sin_coeffs.get(k).copied().unwrap_or(0.0);
        }
        out
    }

    pub fn sub(&self, other: &TrigPolynomial) -> TrigPolynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> TrigPolynomial {
        TrigPolynomial {
            cos_coeffs: self.cos_coeffs.iter().map(|c| c * s).collect(),
            sin_coeffs: self.sin_coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Keep coefficients up to degree `n`, dropping the rest.
    pub fn truncate(&self, n: usize) -> TrigPolynomial {
        let keep = n.min(self.degree_storage());
        let mut out = TrigPolynomial::zero(n);
        out.cos_coeffs[..=keep].copy_from_slice(&self.cos_coeffs[..=keep]);
        out.sin_coeffs[..=keep].copy_from_slice(&self.sin_coeffs[..=keep]);
        out
    }

    /// Pointwise convolution over T: coefficients multiply, (f*g)^ = 2 pi c_k(f) c_k(g).
    pub fn convolve(&self, other: &TrigPolynomial) -> TrigPolynomial {
        let n = self.degree_storage().min(other.degree_storage());
        let mut coeffs = Vec::with_capacity(n + 1);
        for k in 0..=n {
            coeffs.push(
                self.complex_coeff(k)
                    .mul(other.complex_coeff(k))
                    .scale(2.0 * PI),
            );
        }
        TrigPolynomial::from_complex(&coeffs)
    }

    /// Max deviation from `other` on a uniform probe grid.
    pub fn max_abs_diff(&self, other: &TrigPolynomial, probes: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..probes {
            let x = -PI + 2.0 * PI * j as f64 / probes as f64;
            worst = worst.max((self.eval(x) - other.eval(x)).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_k(k: usize) -> TrigPolynomial {
        let mut p = TrigPolynomial::zero(k);
        p.cos_coeffs[k] = 1.0;
        p
    }

    #[test]
    fn eval_matches_direct_sum() {
        let mut p = TrigPolynomial::zero(3);
        p.cos_coeffs[0] = 1.0; // constant 0.5
        p.cos_coeffs[1] = 2.0;
        p.sin_coeffs[2] = -0.5;
        p.cos_coeffs[3] = 0.25;
        for &x in &[0.0, 0.7, -2.1, PI, -PI] {
            let direct = 0.5 + 2.0 * x.cos() - 0.5 * (2.0 * x).sin() + 0.25 * (3.0 * x).cos();
            assert!((p.eval(x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn periodicity() {
        let mut p = TrigPolynomial::zero(5);
        p.cos_coeffs[4] = 1.0;
        p.sin_coeffs[5] = 2.0;
        for &x in &[0.3, 1.1, -0.4] {
            assert!((p.eval(x) - p.eval(x + 2.0 * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_cos_kx() {
        // r-th derivative of cos(kx) is k^r cos(kx + r pi/2)
        let k = 3usize;
        let p = cos_k(k);
        for r in 1..=4usize {
            let d = p.derivative_n(r);
            for &x in &[0.0, 0.5, 2.0] {
                let expect =
                    (k as f64).powi(r as i32) * (k as f64 * x + r as f64 * PI / 2.0).cos();
                assert!((d.eval(x) - expect).abs() < 1e-10, "r={r} x={x}");
            }
        }
    }

    #[test]
    fn second_derivative_composes() {
        let mut p = TrigPolynomial::zero(4);
        p.cos_coeffs[2] = 1.5;
        p.sin_coeffs[4] = -0.25;
        let twice = p.derivative().derivative();
        let direct = p.derivative_n(2);
        assert_eq!(twice.cos_coeffs, direct.cos_coeffs);
        assert_eq!(twice.sin_coeffs, direct.sin_coeffs);
    }

    #[test]
    fn convolution_of_cosines() {
        // cos(kx) * cos(kx) = pi cos(kx)
        let p = cos_k(2);
        let c = p.convolve(&p);
        for &x in &[0.1, 1.0, -2.0] {
            assert!((c.eval(x) - PI * (2.0 * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_round_trip() {
        let mut p = TrigPolynomial::zero(3);
        p.cos_coeffs = vec![0.4, 1.0, -2.0, 0.1];
        p.sin_coeffs = vec![0.0, 0.3, 0.7, -1.1];
        let coeffs: Vec<Cplx> = (0..=3).map(|k| p.complex_coeff(k)).collect();
        let q = TrigPolynomial::from_complex(&coeffs);
        for k in 0..=3 {
            assert!((p.cos_coeffs[k] - q.cos_coeffs[k]).abs() < 1e-15);
            assert!((p.sin_coeffs[k] - q.sin_coeffs[k]).abs() < 1e-15);
        }
    }
}
