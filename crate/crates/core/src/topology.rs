//! Coupling matrices: complete graphs, nearest-neighbour rings, distance-dependent
//! power-law kernels, and detection of circulant structure.
//!
//! Oscillators sit on indices `0..N` with periodic ring distance
//! `d(i, j) = min(|i − j|, N − |i − j|)`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::real::Real;

/// Absolute tolerance used when checking that rows are cyclic shifts of the first.
pub const CIRCULANT_TOLERANCE: f64 = 1e-12;

/// Non-negative `N × N` coupling weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix<T> {
    size: usize,
    weights: Vec<T>,
    is_symmetric: bool,
    circulant_generator: Option<Vec<T>>,
}

pub fn ring_distance(i: usize, j: usize, n: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(n - d)
}

impl<T: Real> CouplingMatrix<T> {
    /// Build from a generator row: `weights[i][j] = generator[(j − i) mod N]`.
    fn from_generator(generator: Vec<T>) -> Self {
        let n = generator.len();
        let mut weights = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                weights[i * n + j] = generator[(j + n - i) % n];
            }
        }
        let is_symmetric = symmetric(&weights, n);
        Self { size: n, weights, is_symmetric, circulant_generator: Some(generator) }
    }

    /// Wrap an explicit dense matrix. No circulant metadata is attached; see
    /// [`CouplingMatrix::with_detected_circulant`].
    pub fn from_dense(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidSize("coupling matrix is empty".into()));
        }
        let mut weights = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidSize(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < T::zero() {
                    return Err(Error::InvalidParameter(format!(
                        "weight ({i}, {j}) = {w} is not a finite non-negative number"
                    )));
                }
                if i == j && w != T::zero() {
                    return Err(Error::InvalidParameter(format!(
                        "self-coupling at ({i}, {i}) must be zero, found {w}"
                    )));
                }
            }
            weights.extend_from_slice(row);
        }
        let is_symmetric = symmetric(&weights, n);
        Ok(Self { size: n, weights, is_symmetric, circulant_generator: None })
    }

    /// Attach circulant metadata when the weights are circulant.
    pub fn with_detected_circulant(mut self) -> Self {
        self.circulant_generator = detect_circulant(&self);
        self
    }

    /// Same weights, circulant metadata dropped.
    pub fn without_metadata(mut self) -> Self {
        self.circulant_generator = None;
        self
    }

    /// Divide each row by its sum (rows summing to zero are left untouched).
    pub fn row_normalized(&self) -> Self {
        if let Some(g) = &self.circulant_generator {
            let s = g.iter().fold(T::zero(), |acc, &w| acc + w);
            if s > T::zero() {
                return Self::from_generator(g.iter().map(|&w| w / s).collect());
            }
            return self.clone();
        }
        let n = self.size;
        let mut weights = self.weights.clone();
        for row in weights.chunks_mut(n) {
            let s = row.iter().fold(T::zero(), |acc, &w| acc + w);
            if s > T::zero() {
                row.iter_mut().for_each(|w| *w = *w / s);
            }
        }
        let is_symmetric = symmetric(&weights, n);
        Self { size: n, weights, is_symmetric, circulant_generator: None }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.weights[i * self.size + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.weights[i * self.size..(i + 1) * self.size]
    }

    /// Row-major weights.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        self.weights.chunks(self.size).map(<[T]>::to_vec).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric
    }

    pub fn circulant_generator(&self) -> Option<&[T]> {
        self.circulant_generator.as_deref()
    }

    pub fn row_sums(&self) -> Vec<T> {
        self.weights
            .chunks(self.size)
            .map(|r| r.iter().fold(T::zero(), |acc, &w| acc + w))
            .collect()
    }

    /// Largest absolute row sum.
    pub fn max_row_sum(&self) -> T {
        self.row_sums().into_iter().fold(T::zero(), T::max)
    }

    /// Load `N` rows of `N` comma-separated reals, no header.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map(T::of).map_err(|e| Error::Parse {
                        path: path.into(),
                        message: format!("line {}: {e}", lineno + 1),
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        Self::from_dense(rows)
    }

    /// Writes the format accepted by [`CouplingMatrix::read_csv`], round-trip exact for `f64`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for row in self.weights.chunks(self.size) {
            let fields: Vec<String> = row.iter().map(|w| format!("{}", w.to_f64_lossy())).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

fn symmetric<T: Real>(weights: &[T], n: usize) -> bool {
    (0..n).all(|i| (i + 1..n).all(|j| weights[i * n + j] == weights[j * n + i]))
}

/// All-to-all coupling with unit weights.
pub fn build_complete<T: Real>(n: usize) -> Result<CouplingMatrix<T>> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("complete graph needs n >= 2, got {n}")));
    }
    let mut generator = vec![T::one(); n];
    generator[0] = T::zero();
    Ok(CouplingMatrix::from_generator(generator))
}

/// Unit coupling to every oscillator within ring distance `k`.
pub fn build_ring<T: Real>(n: usize, k: usize) -> Result<CouplingMatrix<T>> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("ring needs n >= 3, got {n}")));
    }
    if k == 0 || 2 * k >= n {
        return Err(Error::InvalidNeighborhood { n, k });
    }
    let generator = (0..n)
        .map(|j| {
            let d = ring_distance(0, j, n);
            if d >= 1 && d <= k {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(CouplingMatrix::from_generator(generator))
}

/// Distance-dependent weights `d(i, j)^(−alpha)`.
pub fn build_power_law<T: Real>(n: usize, alpha: T) -> Result<CouplingMatrix<T>> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("power-law ring needs n >= 3, got {n}")));
    }
    if !alpha.is_finite() || alpha < T::zero() {
        return Err(Error::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let generator = (0..n)
        .map(|j| match ring_distance(0, j, n) {
            0 => T::zero(),
            d => T::of_usize(d).powf(-alpha),
        })
        .collect();
    Ok(CouplingMatrix::from_generator(generator))
}

/// Returns the first row if every row is its cyclic shift within [`CIRCULANT_TOLERANCE`].
pub fn detect_circulant<T: Real>(m: &CouplingMatrix<T>) -> Option<Vec<T>> {
    let n = m.size();
    let first = m.row(0);
    let tol = T::of(CIRCULANT_TOLERANCE);
    for i in 1..n {
        let row = m.row(i);
        for j in 0..n {
            if (row[j] - first[(j + n - i) % n]).abs() > tol {
                return None;
            }
        }
    }
    Some(first.to_vec())
}
