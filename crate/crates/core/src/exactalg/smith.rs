use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::IntMatrix;

/// `u * m * v = d` with `u`, `v` unimodular and `d` diagonal, nonnegative,
/// each factor dividing the next. The inverses of `u` and `v` are kept as well.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub u_inv: IntMatrix,
    pub v_inv: IntMatrix,
}

impl SmithDecomposition {
    /// Diagonal entries of `d`, including trailing zeros, up to `min(rows, cols)`.
    pub fn diagonal(&self) -> Vec<BigInt> {
        let k = self.d.rows().min(self.d.cols());
        (0..k).map(|i| self.d.get(i, i).clone()).collect()
    }

    /// Nonzero invariant factors.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.diagonal().into_iter().filter(|x| !x.is_zero()).collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

struct Calc {
    m: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
    v_inv: IntMatrix,
}

impl Calc {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.m.swap_rows(i, j);
        self.u.swap_rows(i, j);
        self.u_inv.swap_cols(i, j);
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        self.m.swap_cols(i, j);
        self.v.swap_cols(i, j);
        self.v_inv.swap_rows(i, j);
    }

    // row[i] += k * row[j]
    fn add_row(&mut self, i: usize, j: usize, k: &BigInt) {
        self.m.add_row_multiple(i, j, k);
        self.u.add_row_multiple(i, j, k);
        self.u_inv.add_col_multiple(j, i, &-k);
    }

    // col[i] += k * col[j]
    fn add_col(&mut self, i: usize, j: usize, k: &BigInt) {
        self.m.add_col_multiple(i, j, k);
        self.v.add_col_multiple(i, j, k);
        self.v_inv.add_row_multiple(j, i, &-k);
    }

    fn negate_row(&mut self, i: usize) {
        self.m.negate_row(i);
        self.u.negate_row(i);
        self.u_inv.negate_col(i);
    }

    /// Smallest nonzero |entry| in the trailing block starting at (k, k);
    /// ties go to the earliest position in row-major order.
    fn pivot(&self, k: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in k..self.m.rows() {
            for j in k..self.m.cols() {
                let x = self.m.get(i, j);
                if x.is_zero() {
                    continue;
                }
                match best {
                    Some((bi, bj)) if self.m.get(bi, bj).abs() <= x.abs() => {}
                    _ => best = Some((i, j)),
                }
            }
        }
        best
    }

    fn run(&mut self) {
        let (rows, cols) = (self.m.rows(), self.m.cols());
        for k in 0..rows.min(cols) {
            let Some((pi, pj)) = self.pivot(k) else {
                break;
            };
            self.swap_rows(k, pi);
            self.swap_cols(k, pj);
            loop {
                let mut dirty = false;
                for i in k + 1..rows {
                    if self.m.get(i, k).is_zero() {
                        continue;
                    }
                    let q = self.m.get(i, k).div_floor(self.m.get(k, k));
                    self.add_row(i, k, &-q);
                    dirty |= !self.m.get(i, k).is_zero();
                }
                for j in k + 1..cols {
                    if self.m.get(k, j).is_zero() {
                        continue;
                    }
                    let q = self.m.get(k, j).div_floor(self.m.get(k, k));
                    self.add_col(j, k, &-q);
                    dirty |= !self.m.get(k, j).is_zero();
                }
                if dirty {
                    // a smaller remainder appeared in row or column k; re-pivot
                    let (pi, pj) = self.pivot(k).expect("nonzero block");
                    self.swap_rows(k, pi);
                    self.swap_cols(k, pj);
                    continue;
                }
                let p = self.m.get(k, k).clone();
                let offender = (k + 1..rows).find(|&i| (k + 1..cols).any(|j| !self.m.get(i, j).is_multiple_of(&p)));
                match offender {
                    Some(i) => self.add_row(k, i, &BigInt::from(1)),
                    None => break,
                }
            }
            if self.m.get(k, k).is_negative() {
                self.negate_row(k);
            }
        }
    }
}

/// Smith normal form with transforms. Deterministic for a fixed input.
pub fn smith_normal_form(m: &IntMatrix) -> SmithDecomposition {
    let mut calc = Calc {
        m: m.clone(),
        u: IntMatrix::identity(m.rows()),
        u_inv: IntMatrix::identity(m.rows()),
        v: IntMatrix::identity(m.cols()),
        v_inv: IntMatrix::identity(m.cols()),
    };
    calc.run();
    SmithDecomposition {
        u: calc.u,
        d: calc.m,
        v: calc.v,
        u_inv: calc.u_inv,
        v_inv: calc.v_inv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn check(m: &IntMatrix) -> SmithDecomposition {
        let s = smith_normal_form(m);
        assert_eq!(&(&s.u * m) * &s.v, s.d);
        assert_eq!(&s.u * &s.u_inv, IntMatrix::identity(m.rows()));
        assert_eq!(&s.v * &s.v_inv, IntMatrix::identity(m.cols()));
        for i in 0..s.d.rows() {
            for j in 0..s.d.cols() {
                if i != j {
                    assert!(s.d.get(i, j).is_zero());
                }
            }
        }
        s
    }

    #[test]
    fn already_diagonal() {
        let s = check(&IntMatrix::from_rows(&[[2, 0], [0, 4]]));
        assert_eq!(s.diagonal(), vec![BigInt::from(2), BigInt::from(4)]);
    }

    #[test]
    fn upper_triangular_two_by_two() {
        // gcd of entries is 1 and |det| = 4, so the factors are 1 and 4
        let s = check(&IntMatrix::from_rows(&[[2, 1], [0, 2]]));
        assert_eq!(s.diagonal(), vec![BigInt::one(), BigInt::from(4)]);
    }

    #[test]
    fn zero_matrix() {
        let s = check(&IntMatrix::zeros(2, 3));
        assert!(s.d.is_zero());
        assert_eq!(s.rank(), 0);
    }

    #[test]
    fn rectangular_with_torsion() {
        let s = check(&IntMatrix::from_rows(&[[2, 4, 4], [-6, 6, 12], [10, -4, -16]]));
        assert_eq!(
            s.invariant_factors(),
            vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]
        );
    }

    #[test]
    fn deterministic() {
        let m = IntMatrix::from_rows(&[[3, 5, -7], [1, 9, 2]]);
        assert_eq!(smith_normal_form(&m), smith_normal_form(&m));
    }
}
