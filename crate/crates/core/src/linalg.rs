//! Dense complex linear algebra: LU, Schur decomposition via shifted QR, and the
//! matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::real::{Real, C};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C::<T>::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::<T>::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C<T>]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// `Σ cᵢ·Mᵢ` over matrices of equal shape.
    fn combination(terms: &[(T, &Self)]) -> Self {
        let (_, first) = terms[0];
        let mut out = Self::zeros(first.rows, first.cols);
        for &(c, m) in terms {
            for (o, &x) in out.data.iter_mut().zip(&m.data) {
                *o = *o + x * c;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(C::<T>::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |acc, i| acc + self[(i, j)].norm()))
            .fold(T::zero(), T::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::zero(), |acc, x| acc + x.norm()))
            .fold(T::zero(), T::max)
    }

    pub fn norm_frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, x| acc.max(x.norm()))
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot_conj<T: Real>(u: &[C<T>], v: &[C<T>]) -> C<T> {
    u.iter().zip(v).fold(C::<T>::zero(), |acc, (&a, &b)| acc + a * b.conj())
}

pub fn vec_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr()).sqrt()
}

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
    singular: bool,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &CMatrix<T>) -> Self {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&x, &y| lu[(x, k)].norm().partial_cmp(&lu[(y, k)].norm()).unwrap())
                .unwrap();
            if lu[(pivot, k)].is_zero() {
                singular = true;
                continue;
            }
            if pivot != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, pivot * n + j);
                }
                perm.swap(k, pivot);
            }
            let inv = lu[(k, k)].inv();
            for i in k + 1..n {
                let f = lu[(i, k)] * inv;
                lu[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - f * u;
                }
            }
        }
        Self { lu, perm, singular }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let n = self.lu.rows;
        let mut x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = (0..i).fold(x[i], |acc, j| acc - self.lu[(i, j)] * x[j]);
            x[i] = s;
        }
        for i in (0..n).rev() {
            let s = (i + 1..n).fold(x[i], |acc, j| acc - self.lu[(i, j)] * x[j]);
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn solve_matrix(&self, b: &CMatrix<T>) -> CMatrix<T> {
        let mut out = CMatrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let x = self.solve(&b.column(j));
            out.set_column(j, &x);
        }
        out
    }

    pub fn inverse(&self) -> CMatrix<T> {
        self.solve_matrix(&CMatrix::identity(self.lu.rows))
    }
}

/// Complex Schur form `A = Q·T·Q*` with `T` upper triangular and `Q` unitary.
#[derive(Debug, Clone)]
pub struct Schur<T> {
    pub q: CMatrix<T>,
    pub t: CMatrix<T>,
}

/// QR sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Returns `None` if the QR iteration fails to converge.
pub fn schur<T: Real>(a: &CMatrix<T>) -> Option<Schur<T>> {
    assert_eq!(a.rows, a.cols, "Schur decomposition needs a square matrix");
    let n = a.rows;
    let (mut h, mut q) = hessenberg(a);
    if n < 2 {
        return Some(Schur { q, t: h });
    }
    let eps = T::epsilon();
    let h_norm = h.norm_frobenius().max(T::min_positive_value());
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s.is_zero() { h_norm } else { s };
            if h[(lo, lo - 1)].norm() <= eps * s {
                h[(lo, lo - 1)] = C::<T>::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > MAX_SWEEPS_PER_EIGENVALUE * n {
            return None;
        }

        let shift = if iter % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C::new(h[(hi, hi - 1)].norm() * T::of(0.75), T::zero())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in lo..hi {
            let (x, y) = if k == lo {
                (h[(k, k)] - shift, h[(k + 1, k)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let col_start = if k == lo { lo } else { k - 1 };
            for j in col_start..n {
                let h1 = h[(k, j)];
                let h2 = h[(k + 1, j)];
                h[(k, j)] = h1 * c + s * h2;
                h[(k + 1, j)] = h2 * c - s.conj() * h1;
            }
            if k > lo {
                h[(k + 1, k - 1)] = C::<T>::zero();
            }
            let row_end = (k + 2).min(hi);
            for i in 0..=row_end {
                let h1 = h[(i, k)];
                let h2 = h[(i, k + 1)];
                h[(i, k)] = h1 * c + s.conj() * h2;
                h[(i, k + 1)] = h2 * c - s * h1;
            }
            for i in 0..n {
                let q1 = q[(i, k)];
                let q2 = q[(i, k + 1)];
                q[(i, k)] = q1 * c + s.conj() * q2;
                q[(i, k + 1)] = q2 * c - s * q1;
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = C::<T>::zero();
        }
    }
    Some(Schur { q, t: h })
}

/// Eigenvalue of the trailing 2×2 block closest to its last diagonal entry.
fn wilkinson_shift<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> C<T> {
    let half = T::of(0.5);
    let mean = (a + d) * half;
    let diff = (a - d) * half;
    let disc = (diff * diff + b * c).sqrt();
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Rotation `G = [[c, s], [−s̄, c]]` with real `c` such that `G·[x; y] = [r; 0]`.
fn givens<T: Real>(x: C<T>, y: C<T>) -> (T, C<T>) {
    let ax = x.norm();
    let ay = y.norm();
    if ay.is_zero() {
        return (T::one(), C::<T>::zero());
    }
    if ax.is_zero() {
        return (T::zero(), y.conj() / ay);
    }
    let r = ax.hypot(ay);
    let phase = x / ax;
    (ax / r, phase * y.conj() / r)
}

/// Householder reduction to upper Hessenberg form: returns `(H, Q)` with `A = Q·H·Q*`.
pub fn hessenberg<T: Real>(a: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
    let n = a.rows;
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    if n < 3 {
        return (h, q);
    }
    let two = T::of(2.0);
    for k in 0..n - 2 {
        let mut v: Vec<C<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let x_norm = vec_norm(&v);
        if x_norm.is_zero() {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm().is_zero() { C::<T>::one() } else { x0 / x0.norm() };
        let alpha = -phase * x_norm;
        v[0] = v[0] - alpha;
        let v_norm = vec_norm(&v);
        if v_norm.is_zero() {
            continue;
        }
        v.iter_mut().for_each(|x| *x = *x / v_norm);

        // H ← (I − 2vv*)·H on rows k+1..n
        for j in 0..n {
            let w = v.iter().enumerate().fold(C::<T>::zero(), |acc, (r, &vi)| acc + vi.conj() * h[(k + 1 + r, j)]);
            for (r, &vi) in v.iter().enumerate() {
                h[(k + 1 + r, j)] = h[(k + 1 + r, j)] - vi * w * two;
            }
        }
        // H ← H·(I − 2vv*) and Q ← Q·(I − 2vv*) on columns k+1..n
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let w = v.iter().enumerate().fold(C::<T>::zero(), |acc, (r, &vi)| acc + m[(i, k + 1 + r)] * vi);
                for (r, &vi) in v.iter().enumerate() {
                    m[(i, k + 1 + r)] = m[(i, k + 1 + r)] - w * vi.conj() * two;
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = C::<T>::zero();
        }
    }
    (h, q)
}

/// Eigenvectors of an upper-triangular matrix by back substitution, one column per
/// diagonal entry (not normalized).
pub fn triangular_eigenvectors<T: Real>(t: &CMatrix<T>) -> CMatrix<T> {
    let n = t.rows;
    let eps = T::epsilon();
    let t_norm = t.max_abs();
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let smin = (eps * lambda.norm()).max(eps * t_norm).max(T::min_positive_value());
        y[(k, k)] = C::<T>::one();
        for i in (0..k).rev() {
            let s = (i + 1..=k).fold(C::<T>::zero(), |acc, j| acc + t[(i, j)] * y[(j, k)]);
            let mut d = t[(i, i)] - lambda;
            if d.norm() < smin {
                d = C::new(smin, T::zero());
            }
            y[(i, k)] = -s / d;
        }
    }
    y
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the unscaled degree-13 approximant meets double precision.
const THETA13: f64 = 5.371920351148152;

/// `e^A` by scaling and squaring with the [13/13] Padé approximant.
pub fn expm<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    assert_eq!(a.rows, a.cols, "expm needs a square matrix");
    let n = a.rows;
    let norm = a.norm_one();
    let squarings = if norm > T::of(THETA13) {
        (norm / T::of(THETA13)).log2().ceil().to_i32().unwrap_or(0).max(0)
    } else {
        0
    };
    let scaled = a.scale(C::new(T::of(2.0).powi(-squarings), T::zero()));
    let b: Vec<T> = PADE13.iter().map(|&x| T::of(x)).collect();
    let ident = CMatrix::identity(n);
    let a2 = scaled.matmul(&scaled);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let u_inner = a6.matmul(&CMatrix::combination(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]));
    let u_inner = u_inner.add(&CMatrix::combination(&[
        (b[7], &a6),
        (b[5], &a4),
        (b[3], &a2),
        (b[1], &ident),
    ]));
    let u = scaled.matmul(&u_inner);
    let v = a6
        .matmul(&CMatrix::combination(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]))
        .add(&CMatrix::combination(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &ident)]));

    let mut r = Lu::new(&v.sub(&u)).solve_matrix(&v.add(&u));
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    r
}

/// `1/√n` helper for unit-norm Fourier vectors.
pub fn inv_sqrt_len<T: Real>(n: usize) -> T {
    T::one() / T::of_usize(n).sqrt()
}

pub fn real_to_complex<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}
