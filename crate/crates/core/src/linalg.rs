//! Dense exact linear algebra over the rationals.

use num_traits::{One, Zero};

use crate::coeff::Q;

#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Q>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut r = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if !b.is_zero() {
                        r[(i, j)] += a * b;
                    }
                }
            }
        }
        r
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| (0..self.cols).fold(Q::zero(), |acc, j| acc + &self[(i, j)] * &v[j])).collect()
    }

    /// Scale row `i` by `w[i]`.
    pub fn scale_rows(&self, w: &[Q]) -> Self {
        let mut r = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                r[(i, j)] = &r[(i, j)] * &w[i];
            }
        }
        r
    }

    /// Scale column `j` by `w[j]`.
    pub fn scale_cols(&self, w: &[Q]) -> Self {
        let mut r = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                r[(i, j)] = &r[(i, j)] * &w[j];
            }
        }
        r
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else { continue };
            self.swap_rows(r, p);
            let inv = Q::one() / &self[(r, c)];
            for j in c..self.cols {
                self[(r, j)] = &self[(r, j)] * &inv;
            }
            for i in 0..self.rows {
                if i == r || self[(i, c)].is_zero() {
                    continue;
                }
                let f = self[(i, c)].clone();
                for j in c..self.cols {
                    let v = &self[(r, j)] * &f;
                    self[(i, j)] -= v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right null space.
    pub fn nullspace(&self) -> Vec<Vec<Q>> {
        let mut m = self.clone();
        let piv = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Q::zero(); self.cols];
                v[f] = Q::one();
                for (i, &c) in piv.iter().enumerate() {
                    v[c] = -m[(i, f)].clone();
                }
                v
            })
            .collect()
    }

    /// One solution `X` of `self · X = rhs` with free variables set to zero, or `None` if inconsistent.
    pub fn solve_particular(&self, rhs: &QMatrix) -> Option<QMatrix> {
        assert_eq!(self.rows, rhs.rows);
        let mut aug = Self::zeros(self.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..rhs.cols {
                aug[(i, self.cols + j)] = rhs[(i, j)].clone();
            }
        }
        let piv = aug.rref();
        if piv.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = Self::zeros(self.cols, rhs.cols);
        for (i, &c) in piv.iter().enumerate() {
            for j in 0..rhs.cols {
                x[(c, j)] = aug[(i, self.cols + j)].clone();
            }
        }
        Some(x)
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

/// Weighted inner product `Σ w_i a_i b_i`.
pub fn weighted_dot(a: &[Q], b: &[Q], w: &[Q]) -> Q {
    a.iter().zip(b).zip(w).fold(Q::zero(), |acc, ((x, y), z)| acc + x * y * z)
}

/// Gram-Schmidt in the weighted metric; zero vectors are dropped.
pub fn orthogonalize(vs: &[Vec<Q>], w: &[Q]) -> Vec<Vec<Q>> {
    let mut basis: Vec<Vec<Q>> = Vec::new();
    for v in vs {
        let mut v = v.clone();
        for b in &basis {
            let c = weighted_dot(&v, b, w) / weighted_dot(b, b, w);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= &c * y;
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            basis.push(v);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::qi;

    fn m(rows: &[&[i64]]) -> QMatrix {
        let mut a = QMatrix::zeros(rows.len(), rows[0].len());
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                a[(i, j)] = qi(*v);
            }
        }
        a
    }

    #[test]
    fn rank_and_nullspace() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(a.rank(), 2);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(a.mul_vec(&ns[0]).iter().all(|x| x.is_zero()));
    }

    #[test]
    fn particular_solution() {
        let a = m(&[&[1, 1], &[1, -1]]);
        let b = m(&[&[3], &[1]]);
        let x = a.solve_particular(&b).unwrap();
        assert_eq!((x[(0, 0)].clone(), x[(1, 0)].clone()), (qi(2), qi(1)));
        let s = m(&[&[1, 1], &[2, 2]]);
        assert!(s.solve_particular(&m(&[&[1], &[3]])).is_none());
    }
}
