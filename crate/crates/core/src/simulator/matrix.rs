use std::fmt;

use rand::Rng;

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged matrix rows");
            data.extend(row);
        }
        Self {
            rows: n_rows,
            cols: n_cols,
            data,
        }
    }

    /// Uniform signed values representable in `bits` bits.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, bits: u32, rng: &mut R) -> Self {
        let (lo, hi) = signed_range(bits);
        let data = (0..rows * cols).map(|_| rng.gen_range(lo..=hi)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub(crate) fn iter_indexed(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / self.cols, i % self.cols, v))
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

/// Inclusive range of a two's-complement integer of the given width.
pub(crate) fn signed_range(bits: u32) -> (i64, i64) {
    debug_assert!((1..=64).contains(&bits));
    if bits >= 64 {
        (i64::MIN, i64::MAX)
    } else {
        (-(1i64 << (bits - 1)), (1i64 << (bits - 1)) - 1)
    }
}

/// Plain triple-loop product, used as the functional oracle for the
/// simulator. Accumulates in `i128` so it never overflows on its own.
pub fn reference_gemm(a: &Matrix, b: &Matrix) -> Vec<i128> {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    let mut out = vec![0i128; a.rows * b.cols];
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = 0i128;
            for k in 0..a.cols {
                acc += a.get(i, k) as i128 * b.get(k, j) as i128;
            }
            out[i * b.cols + j] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ranges() {
        assert_eq!(signed_range(8), (-128, 127));
        assert_eq!(signed_range(1), (-1, 0));
        assert_eq!(signed_range(64), (i64::MIN, i64::MAX));
    }

    #[test]
    fn random_respects_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Matrix::random(16, 16, 4, &mut rng);
        assert!(m.as_slice().iter().all(|&v| (-8..=7).contains(&v)));
    }

    #[test]
    fn reference_small() {
        let a = Matrix::from_rows(vec![vec![1, 2], vec![3, 4]]);
        let b = Matrix::from_rows(vec![vec![5, 6], vec![7, 8]]);
        assert_eq!(reference_gemm(&a, &b), vec![19, 22, 43, 50]);
    }
}
