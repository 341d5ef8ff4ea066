//! Dense complex linear algebra kernel.
//!
//! Hermitian eigendecomposition is delegated to `faer`; everything the
//! rest of the crate needs on top of it (spectral propagation over a time
//! grid, expectation values, commutators) lives here. The Taylor-series
//! propagator [`expm_series_oracle`] is deliberately independent of the
//! eigensolver so the two can be cross-checked.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Maximum allowed `|A - A^H|` entry for an operator to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Square dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: Mat<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { inner: Mat::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { inner: Mat::identity(dim, dim) }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { inner: Mat::from_fn(dim, dim, f) }
    }

    /// Builds a matrix from `dim * dim` row-major entries.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Ok(Self::from_fn(dim, |i, j| entries[i * dim + j]))
    }

    pub fn from_real(m: MatRef<'_, f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        Self { inner: Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0)) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, C64::new(d, 0.0));
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.inner[(i, j)] = value;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, value: C64) {
        self.inner[(i, j)] += value;
    }

    pub fn as_mat(&self) -> MatRef<'_, C64> {
        self.inner.as_ref()
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint().to_owned() }
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self::from_fn(self.dim(), |i, j| alpha * self.get(i, j))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_fn(self.dim(), |i, j| self.get(i, j) + other.get(i, j)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_fn(self.dim(), |i, j| self.get(i, j) - other.get(i, j)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Mat::<C64>::zeros(self.dim(), self.dim());
        matmul(&mut out, Accum::Replace, &self.inner, &other.inner, C64::new(1.0, 0.0), Par::Seq);
        Ok(Self { inner: out })
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.len() });
        }
        let mut out = vec![C64::new(0.0, 0.0); n];
        // column-major storage: accumulate column by column
        for (j, &vj) in v.iter().enumerate() {
            if vj == C64::new(0.0, 0.0) {
                continue;
            }
            let col = self.inner.col(j);
            for (o, &a) in out.iter_mut().zip(col.iter()) {
                *o += a * vj;
            }
        }
        Ok(out)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.dim() {
            for a in self.inner.col(j).iter() {
                m = m.max(a.norm());
            }
        }
        m
    }

    /// Largest `|A_ij - conj(A_ji)|`; NaN entries propagate as NaN.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                if d.is_nan() {
                    return f64::NAN;
                }
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_real(&self) -> bool {
        (0..self.dim()).all(|j| self.inner.col(j).iter().all(|a| a.im == 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn real_part(&self) -> Mat<f64> {
        Mat::from_fn(self.dim(), self.dim(), |i, j| self.get(i, j).re)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Eigenbasis {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

/// Eigenvalues in ascending order with orthonormal eigenvector columns.
///
/// Real symmetric inputs keep a real eigenbasis, which halves storage and
/// lets propagation use real GEMM kernels.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    basis: Eigenbasis,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> ComplexMatrix {
        match &self.basis {
            Eigenbasis::Real(v) => ComplexMatrix::from_real(v.as_ref()),
            Eigenbasis::Complex(v) => ComplexMatrix { inner: v.clone() },
        }
    }

    /// `V Λ V^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = self.eigenvectors();
        let scaled = ComplexMatrix::from_fn(self.dim(), |i, j| v.get(i, j) * self.eigenvalues[j]);
        scaled.matmul(&v.adjoint()).expect("square matrices of equal size")
    }

    /// Coefficients of `psi` in the eigenbasis, `V^H psi`.
    pub fn project(&self, psi: &[C64]) -> Result<Vec<C64>> {
        self.check_len(psi.len())?;
        let n = self.dim();
        let out = match &self.basis {
            Eigenbasis::Real(v) => (0..n)
                .map(|k| v.col(k).iter().zip(psi).map(|(&a, &p)| p * a).sum())
                .collect(),
            Eigenbasis::Complex(v) => (0..n)
                .map(|k| v.col(k).iter().zip(psi).map(|(a, &p)| a.conj() * p).sum())
                .collect(),
        };
        Ok(out)
    }

    /// Evolves eigenbasis coefficients to each time in `times` and maps them
    /// back to the original basis: `V e^{-iΛt} coeffs`.
    pub fn propagate_coefficients(&self, coeffs: &[C64], times: &[f64]) -> Result<Vec<Vec<C64>>> {
        self.check_len(coeffs.len())?;
        let n = self.dim();
        let m = times.len();
        let phase = |k: usize, t: f64| {
            let (s, c) = (-self.eigenvalues[k] * t).sin_cos();
            coeffs[k] * C64::new(c, s)
        };
        match &self.basis {
            Eigenbasis::Real(v) => {
                // real and imaginary parts side by side as 2m real columns
                let rhs = Mat::<f64>::from_fn(n, 2 * m, |k, col| {
                    let z = phase(k, times[col / 2]);
                    if col % 2 == 0 { z.re } else { z.im }
                });
                let mut out = Mat::<f64>::zeros(n, 2 * m);
                matmul(&mut out, Accum::Replace, v, &rhs, 1.0, Par::Seq);
                Ok((0..m)
                    .map(|j| {
                        out.col(2 * j)
                            .iter()
                            .zip(out.col(2 * j + 1).iter())
                            .map(|(&re, &im)| C64::new(re, im))
                            .collect()
                    })
                    .collect())
            }
            Eigenbasis::Complex(v) => {
                let rhs = Mat::<C64>::from_fn(n, m, |k, j| phase(k, times[j]));
                let mut out = Mat::<C64>::zeros(n, m);
                matmul(&mut out, Accum::Replace, v, &rhs, C64::new(1.0, 0.0), Par::Seq);
                Ok((0..m).map(|j| out.col(j).iter().copied().collect()).collect())
            }
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: len });
        }
        Ok(())
    }
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eigh(h: &ComplexMatrix) -> Result<SpectralDecomposition> {
    if h.dim() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let defect = h.hermitian_defect();
    if !(defect <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian { max_asymmetry: defect });
    }
    if h.is_real() {
        return eigh_symmetric(h.real_part().as_ref());
    }
    let evd = h.inner.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence)?;
    let eigenvalues = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok(SpectralDecomposition { eigenvalues, basis: Eigenbasis::Complex(evd.U().to_owned()) })
}

/// Eigendecomposition of a real symmetric matrix.
pub fn eigh_symmetric(a: MatRef<'_, f64>) -> Result<SpectralDecomposition> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut defect = 0.0f64;
    for j in 0..n {
        for i in j..n {
            let d = (a[(i, j)] - a[(j, i)]).abs();
            if d.is_nan() {
                defect = f64::NAN;
                break;
            }
            defect = defect.max(d);
        }
    }
    if !(defect <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian { max_asymmetry: defect });
    }
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence)?;
    let eigenvalues: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    debug_assert!(eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    Ok(SpectralDecomposition { eigenvalues, basis: Eigenbasis::Real(evd.U().to_owned()) })
}

/// `V e^{-iΛt} V^H psi0`.
pub fn evolve_spectral(decomp: &SpectralDecomposition, psi0: &[C64], t: f64) -> Result<Vec<C64>> {
    let coeffs = decomp.project(psi0)?;
    Ok(decomp.propagate_coefficients(&coeffs, &[t])?.pop().expect("one time point"))
}

/// [`evolve_spectral`] over a whole time grid, sharing the projection.
pub fn evolve_spectral_grid(
    decomp: &SpectralDecomposition,
    psi0: &[C64],
    times: &[f64],
) -> Result<Vec<Vec<C64>>> {
    let coeffs = decomp.project(psi0)?;
    decomp.propagate_coefficients(&coeffs, times)
}

/// Sliced Taylor-series propagator, `Π (Σ_k (-iHΔt)^k / k!) psi0`.
///
/// The time is split into slices with `‖H‖∞ Δt ≤ 1`; each slice sums terms
/// until the largest term entry drops below 1e-16. Slow, but shares no code
/// with the eigensolver.
pub fn expm_series_oracle(h: &ComplexMatrix, psi0: &[C64], t: f64) -> Result<Vec<C64>> {
    let n = h.dim();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi0.len() });
    }
    let row_norm = (0..n)
        .map(|i| (0..n).map(|j| h.get(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let slices = ((row_norm * t.abs()).ceil() as usize).max(1);
    let dt = t / slices as f64;
    let mut psi = psi0.to_vec();
    for _ in 0..slices {
        let mut term = psi.clone();
        let mut acc = psi.clone();
        for k in 1..=200 {
            term = h.apply(&term)?;
            let factor = C64::new(0.0, -dt / k as f64);
            let mut largest = 0.0f64;
            for x in term.iter_mut() {
                *x *= factor;
                largest = largest.max(x.norm());
            }
            for (a, x) in acc.iter_mut().zip(&term) {
                *a += *x;
            }
            if largest < 1e-16 {
                break;
            }
        }
        psi = acc;
    }
    Ok(psi)
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `<psi|H|psi>` (real part; exact for Hermitian `H`).
pub fn expectation(h: &ComplexMatrix, psi: &[C64]) -> Result<f64> {
    Ok(inner(psi, &h.apply(psi)?).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, c(rng.random_range(-1.0..1.0), 0.0));
            for j in 0..i {
                let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        m
    }

    fn random_state(dim: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<C64> = (0..dim).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let nrm = norm(&v);
        v.into_iter().map(|z| z / nrm).collect()
    }

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()
    }

    #[test]
    fn diagonal_input_is_its_own_decomposition() {
        let d = eigh(&ComplexMatrix::from_diagonal(&[-0.25, 0.25])).unwrap();
        assert_eq!(d.eigenvalues(), &[-0.25, 0.25]);
        let v = d.eigenvectors();
        assert!((v.get(0, 0).norm() - 1.0).abs() < 1e-15);
        assert!((v.get(1, 1).norm() - 1.0).abs() < 1e-15);
        assert!(v.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn pauli_x_spectrum() {
        let d = eigh(&sigma_x()).unwrap();
        assert!((d.eigenvalues()[0] + 1.0).abs() < 1e-14);
        assert!((d.eigenvalues()[1] - 1.0).abs() < 1e-14);
        let v = d.eigenvectors();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // |-> and |+> up to phase
        assert!((v.get(0, 0).norm() - s).abs() < 1e-14);
        assert!((v.get(0, 0) + v.get(1, 0)).norm() < 1e-14);
        assert!((v.get(0, 1) - v.get(1, 1)).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian_and_empty() {
        let mut m = sigma_x();
        m.set(0, 1, c(1.0 + 1e-6, 0.0));
        match eigh(&m) {
            Err(Error::NotHermitian { max_asymmetry }) => assert!((max_asymmetry - 1e-6).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(eigh(&ComplexMatrix::zeros(0)), Err(Error::EmptyMatrix)));
        m.set(0, 1, c(f64::NAN, 0.0));
        assert!(matches!(eigh(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn complex_hermitian_reconstruction_and_orthonormality() {
        for (dim, seed) in [(1, 1), (5, 2), (16, 3), (40, 4)] {
            let h = random_hermitian(dim, seed);
            let d = eigh(&h).unwrap();
            assert!(d.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
            let v = d.eigenvectors();
            let gram = v.adjoint().matmul(&v).unwrap();
            assert!(gram.sub(&ComplexMatrix::identity(dim)).unwrap().max_abs() < 1e-10);
            let err = d.reconstruct().sub(&h).unwrap().max_abs();
            assert!(err <= 1e-9 * h.max_abs(), "dim {dim}: {err}");
        }
    }

    #[test]
    fn evolve_at_zero_time_is_identity() {
        let h = random_hermitian(8, 7);
        let psi = random_state(8, 8);
        let out = evolve_spectral(&eigh(&h).unwrap(), &psi, 0.0).unwrap();
        for (a, b) in out.iter().zip(&psi) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenstate_picks_up_phase_only() {
        let delta = 0.5;
        let h = ComplexMatrix::from_diagonal(&[delta / 2.0, -delta / 2.0]);
        let d = eigh(&h).unwrap();
        for t in [0.3, 1.7, 10.0] {
            let out = evolve_spectral(&d, &[c(1., 0.), c(0., 0.)], t).unwrap();
            let expected = C64::from_polar(1.0, -delta * t / 2.0);
            assert!((out[0] - expected).norm() < 1e-14);
            assert!(out[1].norm() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let d = eigh(&random_hermitian(4, 1)).unwrap();
        assert!(matches!(
            evolve_spectral(&d, &[c(1., 0.)], 1.0),
            Err(Error::DimensionMismatch { expected: 4, found: 1 })
        ));
        assert!(expm_series_oracle(&random_hermitian(4, 1), &[c(1., 0.)], 1.0).is_err());
    }

    #[test]
    fn series_oracle_trivial_cases() {
        let psi = random_state(4, 3);
        let out = expm_series_oracle(&ComplexMatrix::zeros(4), &psi, 2.5).unwrap();
        assert_eq!(out, psi);

        let out = expm_series_oracle(&sigma_x(), &[c(1., 0.), c(0., 0.)], std::f64::consts::PI).unwrap();
        // e^{-iπσx} = -I, and on |0> this is -|0>; the half-period Rabi flip is at t = π/2.
        assert!((out[0] + c(1., 0.)).norm() < 1e-12);
        let out = expm_series_oracle(&sigma_x(), &[c(1., 0.), c(0., 0.)], std::f64::consts::FRAC_PI_2).unwrap();
        assert!(out[0].norm() < 1e-12);
        assert!((out[1] - c(0., -1.)).norm() < 1e-12);
    }

    #[test]
    fn spectral_and_series_propagators_agree() {
        for seed in 0..4 {
            let h = random_hermitian(16, 100 + seed);
            let psi = random_state(16, 200 + seed);
            let d = eigh(&h).unwrap();
            for t in [0.1, 1.0] {
                let a = evolve_spectral(&d, &psi, t).unwrap();
                let b = expm_series_oracle(&h, &psi, t).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn grid_propagation_matches_pointwise_for_real_and_complex_bases() {
        let complex_h = random_hermitian(12, 5);
        let real_h = ComplexMatrix::from_fn(12, |i, j| c(complex_h.get(i, j).re, 0.0));
        let psi = random_state(12, 6);
        let times = [0.0, 0.4, 1.3, 7.0];
        for h in [complex_h, real_h] {
            let d = eigh(&h).unwrap();
            let grid = evolve_spectral_grid(&d, &psi, &times).unwrap();
            for (t, state) in times.iter().zip(&grid) {
                let single = evolve_spectral(&d, &psi, *t).unwrap();
                let oracle = expm_series_oracle(&h, &psi, *t).unwrap();
                for ((a, b), o) in state.iter().zip(&single).zip(&oracle) {
                    assert!((a - b).norm() < 1e-13);
                    assert!((a - o).norm() < 1e-8);
                }
                assert!((norm(state) - 1.0).abs() < 1e-10);
            }
        }
    }
}
