//! Sampled fields on the periodic grid `[0, 2π)ⁿ`, `n ∈ {1, 2}`.
//!
//! Samples are stored as complex numbers in row-major order (`x₁` slow,
//! `x₂` fast). Frequencies follow the FFT convention `k ↦ k` for
//! `k < N/2` and `k ↦ k - N` otherwise, so the Nyquist index maps to `-N/2`.

use super::DyadicError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    dim: usize,
    n: usize,
    data: Vec<Complex64>,
}

/// Signed lattice frequency of FFT index `k` on an `n`-point axis.
#[inline]
pub fn frequency(k: usize, n: usize) -> f64 {
    if k < n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

fn check_shape(dim: usize, n: usize) -> Result<(), DyadicError> {
    if dim != 1 && dim != 2 {
        return Err(DyadicError::BadDimension(dim));
    }
    if n < 4 || !n.is_power_of_two() {
        return Err(DyadicError::NotPowerOfTwo(n));
    }
    Ok(())
}

enum Direction {
    Forward,
    Inverse,
}

impl GridField {
    pub fn zeros(dim: usize, n: usize) -> Result<Self, DyadicError> {
        check_shape(dim, n)?;
        Ok(Self {
            dim,
            n,
            data: vec![Complex64::new(0.0, 0.0); n.pow(dim as u32)],
        })
    }

    /// Samples `f` at the grid points. For `dim = 1` the closure receives a
    /// one-element slice.
    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(dim: usize, n: usize, f: F) -> Result<Self, DyadicError> {
        let mut out = Self::zeros(dim, n)?;
        let h = 2.0 * PI / n as f64;
        if dim == 1 {
            for (i, v) in out.data.iter_mut().enumerate() {
                *v = f(&[i as f64 * h]);
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    out.data[i * n + j] = f(&[i as f64 * h, j as f64 * h]);
                }
            }
        }
        out.validate()?;
        Ok(out)
    }

    pub fn from_real_fn<F: Fn(&[f64]) -> f64>(dim: usize, n: usize, f: F) -> Result<Self, DyadicError> {
        Self::from_fn(dim, n, |x| Complex64::new(f(x), 0.0))
    }

    pub fn from_samples(dim: usize, n: usize, data: Vec<Complex64>) -> Result<Self, DyadicError> {
        check_shape(dim, n)?;
        if data.len() != n.pow(dim as u32) {
            return Err(DyadicError::ResolutionMismatch {
                left: data.len(),
                right: n.pow(dim as u32),
            });
        }
        let out = Self { dim, n, data };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<(), DyadicError> {
        match self.data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            Some(i) => Err(DyadicError::NonFinite(i)),
            None => Ok(()),
        }
    }

    /// Real white noise, low-pass filtered to `lo < |ξ| <= hi`.
    pub fn random_band_limited(
        dim: usize,
        n: usize,
        lo: f64,
        hi: f64,
        seed: u64,
    ) -> Result<Self, DyadicError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Self::zeros(dim, n)?;
        for v in f.data.iter_mut() {
            *v = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
        }
        Ok(f.apply_multiplier(|xi| {
            let r = norm(xi);
            if r > lo && r <= hi {
                1.0
            } else {
                0.0
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Self) -> Result<(), DyadicError> {
        if self.dim != other.dim || self.n != other.n {
            return Err(DyadicError::ResolutionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    fn cell_volume(&self) -> f64 {
        (2.0 * PI / self.n as f64).powi(self.dim as i32)
    }

    /// `L²([0, 2π)ⁿ)` norm of the trigonometric interpolant.
    pub fn norm_l2(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `L²` inner product `⟨self, other⟩ = ∫ self · conj(other)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64, DyadicError> {
        self.same_shape(other)?;
        let s: Complex64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.cell_volume())
    }

    pub fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(
        &self,
        other: &Self,
        f: F,
    ) -> Result<Self, DyadicError> {
        self.same_shape(other)?;
        Ok(Self {
            dim: self.dim,
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, DyadicError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, DyadicError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            n: self.n,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    /// Largest imaginary part in absolute value.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    fn transform(&self, dir: Direction) -> Vec<Complex64> {
        thread_local! {
            // the planner caches plans (twiddle tables) per length
            static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
        }
        let n = self.n;
        let fft = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            match dir {
                Direction::Forward => p.plan_fft_forward(n),
                Direction::Inverse => p.plan_fft_inverse(n),
            }
        });
        let mut buf = self.data.clone();
        // contiguous axis (all rows at once)
        fft.process(&mut buf);
        if self.dim == 2 {
            let mut t = transpose(&buf, n);
            fft.process(&mut t);
            buf = transpose(&t, n);
        }
        buf
    }

    /// Unnormalized discrete Fourier coefficients.
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.transform(Direction::Forward)
    }

    /// Inverse of [`GridField::spectrum`].
    pub fn from_spectrum(dim: usize, n: usize, spec: Vec<Complex64>) -> Result<Self, DyadicError> {
        check_shape(dim, n)?;
        let tmp = Self { dim, n, data: spec };
        let mut data = tmp.transform(Direction::Inverse);
        let scale = 1.0 / tmp.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
        Self::from_samples(dim, n, data)
    }

    /// Lattice frequency vector of flat spectral index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        if self.dim == 1 {
            [frequency(idx, self.n), 0.0]
        } else {
            [frequency(idx / self.n, self.n), frequency(idx % self.n, self.n)]
        }
    }

    /// `m(D) u` for a Fourier multiplier given on wavevectors.
    pub fn apply_multiplier<M: Fn([f64; 2]) -> f64>(&self, m: M) -> Self {
        let mut spec = self.spectrum();
        for (idx, z) in spec.iter_mut().enumerate() {
            *z *= m(self.wavevector(idx));
        }
        Self::from_spectrum(self.dim, self.n, spec).expect("shape preserved")
    }

    /// Spectral derivative `∂_{x_axis}`; the Nyquist mode of that axis is
    /// dropped because `iξ` is not real-symmetric there.
    pub fn derivative(&self, axis: usize) -> Result<Self, DyadicError> {
        if axis >= self.dim {
            return Err(DyadicError::BadAxis { axis, dim: self.dim });
        }
        let mut spec = self.spectrum();
        let nyq = -(self.n as f64) / 2.0;
        for (idx, z) in spec.iter_mut().enumerate() {
            let xi = self.wavevector(idx)[axis];
            *z *= if xi == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, xi)
            };
        }
        Self::from_spectrum(self.dim, self.n, spec)
    }

    pub fn gradient(&self) -> Result<Vec<Self>, DyadicError> {
        (0..self.dim).map(|j| self.derivative(j)).collect()
    }

    /// `‖∇u‖²` summed over axes.
    pub fn gradient_norm_sq(&self) -> Result<f64, DyadicError> {
        Ok(self.gradient()?.iter().map(|g| g.norm_sq()).sum())
    }

    /// Trigonometric interpolant resampled on a `2N` grid (exact for
    /// fields without Nyquist content).
    pub fn upsample2(&self) -> Self {
        let n = self.n;
        let m = 2 * n;
        let spec = self.spectrum();
        let mut big = vec![Complex64::new(0.0, 0.0); m.pow(self.dim as u32)];
        let map = |k: usize| -> Option<usize> {
            if k < n / 2 {
                Some(k)
            } else if k > n / 2 {
                Some(k + n)
            } else {
                None
            }
        };
        let gain = (m as f64 / n as f64).powi(self.dim as i32);
        if self.dim == 1 {
            for k in 0..n {
                if let Some(kk) = map(k) {
                    big[kk] = spec[k] * gain;
                }
            }
        } else {
            for k1 in 0..n {
                for k2 in 0..n {
                    if let (Some(a), Some(b)) = (map(k1), map(k2)) {
                        big[a * m + b] = spec[k1 * n + k2] * gain;
                    }
                }
            }
        }
        Self::from_spectrum(self.dim, m, big).expect("power of two")
    }

    /// Keeps frequencies `|ξ_j| < N/4` of a `N`-point field and returns them
    /// on a `N/2` grid; inverse of [`GridField::upsample2`] on that band.
    pub fn truncate_half(&self) -> Self {
        let m = self.n;
        let n = m / 2;
        let spec = self.spectrum();
        let map = |k: usize| -> Option<usize> {
            if k < n / 2 {
                Some(k)
            } else if k > m - n / 2 {
                Some(k - n)
            } else {
                None
            }
        };
        let gain = (n as f64 / m as f64).powi(self.dim as i32);
        let mut small = vec![Complex64::new(0.0, 0.0); n.pow(self.dim as u32)];
        if self.dim == 1 {
            for k in 0..m {
                if let Some(kk) = map(k) {
                    small[kk] = spec[k] * gain;
                }
            }
        } else {
            for k1 in 0..m {
                for k2 in 0..m {
                    if let (Some(a), Some(b)) = (map(k1), map(k2)) {
                        small[a * n + b] = spec[k1 * m + k2] * gain;
                    }
                }
            }
        }
        Self::from_spectrum(self.dim, n, small).expect("power of two")
    }

    /// Pointwise product computed on the `2N` grid and projected back, so
    /// no product frequency aliases onto the retained band.
    pub fn mul_dealiased(&self, other: &Self) -> Result<Self, DyadicError> {
        self.same_shape(other)?;
        let a = self.upsample2();
        let b = other.upsample2();
        Ok(a.zip_with(&b, |x, y| x * y)?.truncate_half())
    }

    /// Writes the samples as CSV: `x,re,im` or `x1,x2,re,im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DyadicError> {
        let mut wr = csv::Writer::from_writer(w);
        let h = 2.0 * PI / self.n as f64;
        let io = |e: csv::Error| DyadicError::Io(e.to_string());
        if self.dim == 1 {
            wr.write_record(["x", "re", "im"]).map_err(io)?;
            for (i, z) in self.data.iter().enumerate() {
                wr.serialize((i as f64 * h, z.re, z.im)).map_err(io)?;
            }
        } else {
            wr.write_record(["x1", "x2", "re", "im"]).map_err(io)?;
            for (idx, z) in self.data.iter().enumerate() {
                let (i, j) = (idx / self.n, idx % self.n);
                wr.serialize((i as f64 * h, j as f64 * h, z.re, z.im)).map_err(io)?;
            }
        }
        wr.flush().map_err(|e| DyadicError::Io(e.to_string()))
    }
}

pub(crate) fn norm(xi: [f64; 2]) -> f64 {
    xi[0].hypot(xi[1])
}

fn transpose(a: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(0.0, 0.0); a.len()];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &GridField, b: &GridField, tol: f64) -> bool {
        a.sub(b).unwrap().max_abs() <= tol
    }

    #[test]
    fn shape_is_validated() {
        assert!(matches!(GridField::zeros(3, 16), Err(DyadicError::BadDimension(3))));
        assert!(matches!(GridField::zeros(1, 24), Err(DyadicError::NotPowerOfTwo(24))));
        assert!(matches!(
            GridField::from_real_fn(1, 8, |_| f64::NAN),
            Err(DyadicError::NonFinite(0))
        ));
    }

    #[test]
    fn norm_of_cosine() {
        let f = GridField::from_real_fn(1, 64, |x| (3.0 * x[0]).cos()).unwrap();
        assert!((f.norm_sq() - PI).abs() < 1e-12);
        let g = GridField::from_real_fn(2, 32, |x| x[0].cos() * (2.0 * x[1]).sin()).unwrap();
        assert!((g.norm_sq() - PI * PI).abs() < 1e-11);
    }

    #[test]
    fn spectral_derivative_of_trig_polynomial() {
        let f = GridField::from_real_fn(2, 32, |x| (3.0 * x[0]).sin() * (5.0 * x[1]).cos()).unwrap();
        let d1 = f.derivative(0).unwrap();
        let d2 = f.derivative(1).unwrap();
        let e1 = GridField::from_real_fn(2, 32, |x| 3.0 * (3.0 * x[0]).cos() * (5.0 * x[1]).cos()).unwrap();
        let e2 = GridField::from_real_fn(2, 32, |x| -5.0 * (3.0 * x[0]).sin() * (5.0 * x[1]).sin()).unwrap();
        assert!(close(&d1, &e1, 1e-12));
        assert!(close(&d2, &e2, 1e-12));
        assert!(f.derivative(2).is_err());
    }

    #[test]
    fn dealiased_product_is_exact_for_band_limited_factors() {
        let n = 32;
        let a = GridField::from_real_fn(1, n, |x| (7.0 * x[0]).cos()).unwrap();
        let b = GridField::from_real_fn(1, n, |x| (6.0 * x[0]).cos()).unwrap();
        let p = a.mul_dealiased(&b).unwrap();
        let e = GridField::from_real_fn(1, n, |x| 0.5 * (x[0].cos() + (13.0 * x[0]).cos())).unwrap();
        assert!(close(&p, &e, 1e-13));
        // 10 + 9 = 19 >= N/2: the high mode is removed instead of aliased to -13
        let c = GridField::from_real_fn(1, n, |x| (10.0 * x[0]).cos()).unwrap();
        let d = GridField::from_real_fn(1, n, |x| (9.0 * x[0]).cos()).unwrap();
        let q = c.mul_dealiased(&d).unwrap();
        let e = GridField::from_real_fn(1, n, |x| 0.5 * x[0].cos()).unwrap();
        assert!(close(&q, &e, 1e-13));
    }

    #[test]
    fn upsample_then_truncate_is_identity() {
        let f = GridField::random_band_limited(2, 16, 0.0, 7.0, 3).unwrap();
        assert!(close(&f.upsample2().truncate_half(), &f, 1e-13));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let f = GridField::from_real_fn(1, 8, |x| x[0]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("x,re,im\n"));
        assert_eq!(s.lines().count(), 9);
    }
}
