//! The complex system matrix `K = ε·e^{−iφ}·A` and its eigendecomposition.
//!
//! Circulant couplings are diagonalized in closed form by the discrete Fourier
//! basis; anything else goes through the dense Schur-based solver. Both return a
//! [`Spectrum`] whose 1-based mode labels are shared by the rest of the crate.

use std::io::Write;
use std::path::Path;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Lu};
use crate::real::{Real, C};
use crate::topology::CouplingMatrix;

pub const DEFAULT_DENSE_CAP: usize = 2048;
/// Per-mode eigen-residual accepted without refinement.
pub const RESIDUAL_TARGET: f64 = 1e-8;
/// Per-mode eigen-residual above which a matrix is reported as near-defective.
pub const RESIDUAL_LIMIT: f64 = 1e-6;
const NORMALITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix<T> {
    coupling: CouplingMatrix<T>,
    epsilon: T,
    phi: T,
}

pub fn assemble_system<T: Real>(a: CouplingMatrix<T>, epsilon: T, phi: T) -> Result<SystemMatrix<T>> {
    if !epsilon.is_finite() || !phi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon ({epsilon}) and phi ({phi}) must be finite"
        )));
    }
    if epsilon <= T::zero() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(SystemMatrix { coupling: a, epsilon, phi })
}

impl<T: Real> SystemMatrix<T> {
    pub fn coupling(&self) -> &CouplingMatrix<T> {
        &self.coupling
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn size(&self) -> usize {
        self.coupling.size()
    }

    /// The scalar `ε·e^{−iφ}` multiplying every coupling weight.
    pub fn factor(&self) -> C<T> {
        Complex::from_polar(self.epsilon, -self.phi)
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> C<T> {
        self.factor() * self.coupling.get(i, j)
    }

    pub fn materialize(&self) -> CMatrix<T> {
        let f = self.factor();
        let a = &self.coupling;
        CMatrix::from_fn(a.size(), a.size(), |i, j| f * a.get(i, j))
    }

    /// `‖K‖∞`, the largest absolute row sum.
    pub fn norm_inf(&self) -> T {
        self.epsilon * self.coupling.max_row_sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    Cdt,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    eigenvalues: Vec<C<T>>,
    eigenvectors: CMatrix<T>,
    orthonormal: bool,
    source: SpectrumSource,
    /// Column `k` is the Fourier mode with DFT index `k`.
    fourier_ordered: bool,
    id: u64,
}

impl<T: Real> Spectrum<T> {
    fn new(
        eigenvalues: Vec<C<T>>,
        eigenvectors: CMatrix<T>,
        orthonormal: bool,
        source: SpectrumSource,
        fourier_ordered: bool,
    ) -> Self {
        let mut hash = Fnv::new();
        hash.write_u64(source as u64);
        for l in &eigenvalues {
            hash.write_u64(l.re.to_f64_lossy().to_bits());
            hash.write_u64(l.im.to_f64_lossy().to_bits());
        }
        Self { eigenvalues, eigenvectors, orthonormal, source, fourier_ordered, id: hash.finish() }
    }

    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues in mode order (index `k − 1` holds `λ_k`).
    pub fn eigenvalues(&self) -> &[C<T>] {
        &self.eigenvalues
    }

    /// Eigenvectors as columns, in mode order.
    pub fn eigenvectors(&self) -> &CMatrix<T> {
        &self.eigenvectors
    }

    pub fn eigenvalue(&self, label: usize) -> C<T> {
        self.eigenvalues[label - 1]
    }

    pub fn eigenvector(&self, label: usize) -> Vec<C<T>> {
        self.eigenvectors.column(label - 1)
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn source(&self) -> SpectrumSource {
        self.source
    }

    pub fn is_fourier_ordered(&self) -> bool {
        self.fourier_ordered
    }

    /// Fingerprint of the eigenvalues and source, used to tie coefficients to a spectrum.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Signed spatial frequency of a Fourier-ordered mode: `m` for `m ≤ N/2`, else `m − N`.
    pub fn spatial_frequency(&self, label: usize) -> Option<i64> {
        self.fourier_ordered.then(|| spatial_frequency(label - 1, self.size()))
    }

    /// `‖K·v_k − λ_k·v_k‖∞` for every mode.
    pub fn residuals(&self, system: &SystemMatrix<T>) -> Vec<T> {
        let k = system.materialize();
        residuals(&k, &self.eigenvalues, &self.eigenvectors)
    }

    /// Writes `mode_label,re_lambda,im_lambda,spatial_frequency`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("mode_label,re_lambda,im_lambda,spatial_frequency\n");
        for (idx, l) in self.eigenvalues.iter().enumerate() {
            let label = idx + 1;
            let q = self.spatial_frequency(label).map(|q| q.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{label},{},{},{q}\n",
                fmt_real(l.re.to_f64_lossy()),
                fmt_real(l.im.to_f64_lossy())
            ));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// 17 significant digits.
pub(crate) fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn spatial_frequency(m: usize, n: usize) -> i64 {
    if 2 * m <= n {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// `e^{2πi·r/N}` for `r = 0..N`.
fn twiddles<T: Real>(n: usize) -> Vec<C<T>> {
    (0..n)
        .map(|r| {
            let angle = T::TAU() * T::of_usize(r) / T::of_usize(n);
            Complex::from_polar(T::one(), angle)
        })
        .collect()
}

/// Unit-norm Fourier mode with DFT index `m`: `v[j] = N^{−1/2}·e^{2πi·j·m/N}`.
pub fn fourier_mode<T: Real>(n: usize, m: usize) -> Vec<C<T>> {
    let w = twiddles::<T>(n);
    let s = linalg::inv_sqrt_len::<T>(n);
    (0..n).map(|j| w[(j * m) % n] * s).collect()
}

/// Closed-form spectrum of a circulant system matrix.
pub fn cdt_spectrum<T: Real>(s: &SystemMatrix<T>) -> Result<Spectrum<T>> {
    let generator = s.coupling.circulant_generator().ok_or(Error::NotCirculant)?;
    let n = generator.len();
    let w = twiddles::<T>(n);
    let factor = s.factor();
    // a symmetric generator has a real transform; dropping the roundoff imaginary part keeps
    // Re(λ) exactly proportional to cos φ
    let symmetric = s.coupling.is_symmetric();
    let eigenvalues = (0..n)
        .map(|m| {
            let mut dft = generator
                .iter()
                .enumerate()
                .fold(C::<T>::zero(), |acc, (j, &g)| acc + w[(j * m) % n] * g);
            if symmetric {
                dft.im = T::zero();
            }
            factor * dft
        })
        .collect();
    let scale = linalg::inv_sqrt_len::<T>(n);
    let eigenvectors = CMatrix::from_fn(n, n, |j, m| w[(j * m) % n] * scale);
    Ok(Spectrum::new(eigenvalues, eigenvectors, true, SpectrumSource::Cdt, true))
}

/// Numerical eigendecomposition through the complex Schur form.
pub fn dense_spectrum<T: Real>(s: &SystemMatrix<T>) -> Result<Spectrum<T>> {
    dense_spectrum_capped(s, DEFAULT_DENSE_CAP)
}

pub fn dense_spectrum_capped<T: Real>(s: &SystemMatrix<T>, cap: usize) -> Result<Spectrum<T>> {
    let n = s.size();
    if n > cap {
        return Err(Error::DenseSizeCap { n, cap });
    }
    let k = s.materialize();
    let normal = is_normal(&k);
    let schur = linalg::schur(&k).ok_or(Error::NearDefective {
        mode: 0,
        residual: f64::INFINITY,
        limit: RESIDUAL_LIMIT,
    })?;
    let mut eigenvalues: Vec<C<T>> = (0..n).map(|i| schur.t[(i, i)]).collect();
    let mut vectors = if normal {
        schur.q.clone()
    } else {
        schur.q.matmul(&linalg::triangular_eigenvectors(&schur.t))
    };
    for j in 0..n {
        let v = normalize_phase(&vectors.column(j));
        vectors.set_column(j, &v);
    }

    refine(&k, &mut eigenvalues, &mut vectors)?;

    let (order, fourier) = match s.coupling.circulant_generator() {
        Some(_) => (match_fourier_order(&vectors), true),
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                let (la, lb) = (eigenvalues[a], eigenvalues[b]);
                lb.re.partial_cmp(&la.re).unwrap().then(lb.im.partial_cmp(&la.im).unwrap())
            });
            (order, false)
        }
    };
    let eigenvalues = order.iter().map(|&i| eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok(Spectrum::new(eigenvalues, eigenvectors, normal, SpectrumSource::Dense, fourier))
}

fn is_normal<T: Real>(k: &CMatrix<T>) -> bool {
    let kh = k.adjoint();
    let commutator = k.matmul(&kh).sub(&kh.matmul(k));
    let scale = k.norm_inf().max(T::one());
    commutator.max_abs() <= T::of(NORMALITY_TOLERANCE) * scale * scale
}

/// Unit norm with the first non-negligible component real and positive.
fn normalize_phase<T: Real>(v: &[C<T>]) -> Vec<C<T>> {
    let norm = linalg::vec_norm(v);
    let threshold = T::of(1e-10) * norm;
    let pivot = v.iter().find(|x| x.norm() > threshold).copied().unwrap_or(C::new(T::one(), T::zero()));
    let rotate = pivot.conj() / pivot.norm() / norm;
    v.iter().map(|&x| x * rotate).collect()
}

fn residuals<T: Real>(k: &CMatrix<T>, eigenvalues: &[C<T>], vectors: &CMatrix<T>) -> Vec<T> {
    (0..eigenvalues.len())
        .map(|j| mode_residual(k, eigenvalues[j], &vectors.column(j)))
        .collect()
}

fn mode_residual<T: Real>(k: &CMatrix<T>, lambda: C<T>, v: &[C<T>]) -> T {
    k.mul_vec(v)
        .iter()
        .zip(v)
        .map(|(&kv, &x)| (kv - x * lambda).norm())
        .fold(T::zero(), T::max)
}

/// Inverse iteration on modes whose residual misses [`RESIDUAL_TARGET`].
fn refine<T: Real>(k: &CMatrix<T>, eigenvalues: &mut [C<T>], vectors: &mut CMatrix<T>) -> Result<()> {
    let n = eigenvalues.len();
    let target = T::of(RESIDUAL_TARGET);
    let mut worst = (0usize, T::zero());
    for j in 0..n {
        let mut v = vectors.column(j);
        let mut lambda = eigenvalues[j];
        let mut res = mode_residual(k, lambda, &v);
        let mut sweeps = 0;
        while res > target && sweeps < 3 {
            let nudge = T::of(1e-10) * (T::one() + lambda.norm());
            let shifted = CMatrix::from_fn(n, n, |r, c| {
                if r == c {
                    k[(r, c)] - lambda - nudge
                } else {
                    k[(r, c)]
                }
            });
            let lu = Lu::new(&shifted);
            if lu.is_singular() {
                break;
            }
            v = normalize_phase(&lu.solve(&v));
            lambda = linalg::dot_conj(&k.mul_vec(&v), &v);
            res = mode_residual(k, lambda, &v);
            sweeps += 1;
        }
        if sweeps > 0 {
            vectors.set_column(j, &v);
            eigenvalues[j] = lambda;
        }
        if res > worst.1 || !res.is_finite() {
            worst = (j, res);
        }
    }
    if !(worst.1 <= T::of(RESIDUAL_LIMIT)) {
        return Err(Error::NearDefective {
            mode: worst.0 + 1,
            residual: worst.1.to_f64_lossy(),
            limit: RESIDUAL_LIMIT,
        });
    }
    Ok(())
}

/// Permutation placing, at position `m`, the eigenvector with the largest overlap
/// with Fourier mode `m` (greedy over overlaps, largest first).
fn match_fourier_order<T: Real>(vectors: &CMatrix<T>) -> Vec<usize> {
    let n = vectors.rows();
    let w = twiddles::<T>(n);
    let mut pairs = Vec::with_capacity(n * n);
    for col in 0..n {
        let v = vectors.column(col);
        for m in 0..n {
            // ⟨v, f_m⟩ up to the common 1/√N factor
            let ov = v.iter().enumerate().fold(C::<T>::zero(), |acc, (j, &x)| acc + x * w[(j * m) % n].conj());
            pairs.push((ov.norm_sqr(), m, col));
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut order = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, m, col) in pairs {
        if order[m] == usize::MAX && !used[col] {
            order[m] = col;
            used[col] = true;
        }
    }
    order
}

/// `e^{tK}·x0` through the Padé matrix exponential.
pub fn expm_apply<T: Real>(s: &SystemMatrix<T>, t: T, x0: &[C<T>]) -> Result<Vec<C<T>>> {
    if x0.len() != s.size() {
        return Err(Error::InvalidSize(format!(
            "state has {} entries, system has {}",
            x0.len(),
            s.size()
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be finite, got {t}")));
    }
    if t.is_zero() {
        return Ok(x0.to_vec());
    }
    let growth = t.abs() * s.norm_inf();
    let x_max = x0.iter().fold(T::one(), |acc, x| acc.max(x.norm()));
    let budget = T::max_value().ln() * T::of(0.95) - x_max.ln() - T::of_usize(s.size()).ln();
    if growth > budget {
        return Err(Error::MagnitudeOverflow(growth.to_f64_lossy()));
    }
    let tk = s.materialize().scale(C::new(t, T::zero()));
    Ok(linalg::expm(&tk).mul_vec(x0))
}

/// 64-bit FNV-1a.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }

    fn write_u64(&mut self, x: u64) {
        for b in x.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
