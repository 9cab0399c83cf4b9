//! Dense LU factorization with partial pivoting.
//!
//! Storage is row-major and the unknown ordering is fixed by the caller, so a
//! sparse factorization can replace this one without touching assembly.

use crate::Scalar;

#[derive(Clone, Debug)]
pub struct DenseMatrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> S {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: S) {
        self.data[row * self.n + col] += value;
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        (0..self.n)
            .map(|r| {
                self.data[r * self.n..(r + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct LuFactors<S> {
    n: usize,
    lu: Vec<S>,
    perm: Vec<usize>,
}

impl<S: Scalar> LuFactors<S> {
    /// Factor `a` in place. On failure returns every column whose pivot
    /// vanished (relative to the largest matrix entry).
    pub fn factor(a: DenseMatrix<S>) -> Result<Self, Vec<usize>> {
        let n = a.n;
        let mut lu = a.data;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = lu.iter().fold(S::zero(), |m, v| m.max(v.abs()));
        let threshold = scale * S::epsilon() * S::epsilon();
        let mut deficient = Vec::new();

        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|r| (r, lu[r * n + k].abs()))
                    .fold(
                        (k, S::zero()),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if !(pivot > threshold) {
                deficient.push(k);
                continue;
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let inv = S::one() / lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] * inv;
                if f == S::zero() {
                    continue;
                }
                lu[r * n + k] = f;
                for c in k + 1..n {
                    let u = lu[k * n + c];
                    lu[r * n + c] -= f * u;
                }
            }
        }
        if deficient.is_empty() {
            Ok(Self { n, lu, perm })
        } else {
            Err(deficient)
        }
    }

    /// Solve `A x = b`, overwriting `b` with `x`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [S]) {
        let n = self.n;
        let mut y: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut acc = y[r];
            for c in 0..r {
                acc -= self.lu[r * n + c] * y[c];
            }
            y[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = y[r];
            for c in r + 1..n {
                acc -= self.lu[r * n + c] * y[c];
            }
            y[r] = acc / self.lu[r * n + r];
        }
        b.copy_from_slice(&y);
    }
}
