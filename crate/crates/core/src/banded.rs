//! Cholesky factorisation of small symmetric positive definite band matrices.

#[derive(Debug, Clone, PartialEq)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row `i` holds `L[i][i - bw ..= i]`, left-padded with zeros.
    rows: Vec<f64>,
}

impl BandedCholesky {
    /// Factorises the matrix given by `entry(i, j)` for `|i - j| <= bw`.
    /// Returns `None` if the matrix is not positive definite.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Option<Self> {
        let w = bw + 1;
        let mut rows = vec![0.0; n * w];
        let at = |i: usize, j: usize| i * w + (j + bw - i);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = entry(i, j);
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= rows[at(i, k)] * rows[at(j, k)];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return None;
                    }
                    rows[at(i, i)] = sum.sqrt();
                } else {
                    rows[at(i, j)] = sum / rows[at(j, j)];
                }
            }
        }
        Some(BandedCholesky { n, bw, rows })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Solves `A x = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let at = |i: usize, j: usize| i * w + (j + bw - i);
        for i in 0..n {
            let mut sum = b[i];
            for k in i.saturating_sub(bw)..i {
                sum -= self.rows[at(i, k)] * b[k];
            }
            b[i] = sum / self.rows[at(i, i)];
        }
        for i in (0..n).rev() {
            let mut sum = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                sum -= self.rows[at(k, i)] * b[k];
            }
            b[i] = sum / self.rows[at(i, i)];
        }
    }
}
