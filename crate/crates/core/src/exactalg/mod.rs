//! Exact integer and modular linear algebra.

mod abelian;
mod matrix;
mod smith;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use abelian::QuotientGroup;
pub use matrix::IntMatrix;
pub use smith::{smith_normal_form, SmithDecomposition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// A coefficient modulus: `Z/m` for finite `m >= 1`, or `Z` itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulus {
    Finite(u64),
    Infinite,
}

impl Modulus {
    pub fn finite(m: u64) -> Result<Self, ExactError> {
        if m == 0 {
            return Err(ExactError::Domain("modulus must be at least 1".into()));
        }
        Ok(Modulus::Finite(m))
    }

    pub(crate) fn from_bigint(m: &BigInt) -> Self {
        Modulus::Finite(m.to_u64().expect("modulus fits in u64"))
    }

    pub fn value(self) -> Option<u64> {
        match self {
            Modulus::Finite(m) => Some(m),
            Modulus::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Modulus::Finite(_))
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulus::Finite(m) => write!(f, "{m}"),
            Modulus::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Modulus {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Modulus::Finite(m) => s.serialize_u64(*m),
            Modulus::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Modulus {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(serde::de::Error::custom("modulus must be at least 1")),
            Raw::Num(m) => Ok(Modulus::Finite(m)),
            Raw::Str(s) if s == "inf" => Ok(Modulus::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad modulus {s:?}"))),
        }
    }
}

/// gcd of a nonempty list, nonnegative; `gcd(0, x) = |x|`.
pub fn gcd_list(values: &[BigInt]) -> Result<BigInt, ExactError> {
    if values.is_empty() {
        return Err(ExactError::Usage("gcd of an empty list".into()));
    }
    Ok(values.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x)))
}

/// Splits `a = 2^r * q` with `q` odd and returns `(2^r, r)`.
pub fn nu2(a: &BigInt) -> Result<(BigInt, u32), ExactError> {
    if !a.is_positive() {
        return Err(ExactError::Usage(format!("nu2 needs a positive integer, got {a}")));
    }
    let r = a.trailing_zeros().expect("nonzero") as u32;
    Ok((BigInt::one() << r, r))
}

/// `nu2` on machine integers.
pub fn nu2_u64(a: u64) -> Result<(u64, u32), ExactError> {
    if a == 0 {
        return Err(ExactError::Usage("nu2 needs a positive integer, got 0".into()));
    }
    let r = a.trailing_zeros();
    Ok((1 << r, r))
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inverse_mod(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let e = a.mod_floor(m).extended_gcd(m);
    e.gcd.is_one().then(|| e.x.mod_floor(m))
}

/// Finds `x` with `m x = rhs (mod modulus)`, or `None` when no solution exists.
///
/// The system is diagonalised by the integral Smith form; since the transforms
/// are unimodular they stay invertible modulo any `m`, so the reduced diagonal
/// system is a normal form over `Z/m` and each row is solved independently.
pub fn solve_mod(m: &IntMatrix, rhs: &[BigInt], modulus: Modulus) -> Result<Option<Vec<BigInt>>, ExactError> {
    let Modulus::Finite(md) = modulus else {
        return Err(ExactError::Usage("solve_mod needs a finite modulus".into()));
    };
    if rhs.len() != m.rows() {
        return Err(ExactError::Usage(format!(
            "right-hand side has length {} but the matrix has {} rows",
            rhs.len(),
            m.rows()
        )));
    }
    let md = BigInt::from(md);
    let snf = smith_normal_form(m);
    let c = snf.u.mul_vec(rhs)?;
    let diag = snf.diagonal();
    let mut y = vec![BigInt::zero(); m.cols()];
    for (j, cj) in c.iter().enumerate() {
        let dj = diag.get(j).cloned().unwrap_or_else(BigInt::zero);
        let g = dj.gcd(&md);
        if !cj.is_multiple_of(&g) {
            return Ok(None);
        }
        if dj.is_zero() {
            continue;
        }
        let m_red = &md / &g;
        let inv = inverse_mod(&(&dj / &g), &m_red).expect("coprime after dividing by gcd");
        y[j] = ((cj / &g) * inv).mod_floor(&m_red);
    }
    let x = snf.v.mul_vec(&y)?;
    Ok(Some(x.into_iter().map(|v| v.mod_floor(&md)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(xs: &[i64]) -> Vec<BigInt> {
        xs.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn gcd_list_examples() {
        assert_eq!(gcd_list(&big(&[2, 0, -4, 2])).unwrap(), 2.into());
        assert_eq!(gcd_list(&big(&[1, -1, 1])).unwrap(), 1.into());
        assert_eq!(gcd_list(&big(&[6, 15, 21])).unwrap(), 3.into());
        assert_eq!(gcd_list(&big(&[0, 0])).unwrap(), 0.into());
        assert!(matches!(gcd_list(&[]), Err(ExactError::Usage(_))));
    }

    #[test]
    fn nu2_examples() {
        assert_eq!(nu2(&12.into()).unwrap(), (4.into(), 2));
        assert_eq!(nu2(&7.into()).unwrap(), (1.into(), 0));
        assert_eq!(nu2(&8.into()).unwrap(), (8.into(), 3));
        assert!(nu2(&0.into()).is_err());
        assert!(nu2(&(-4).into()).is_err());
        assert_eq!(nu2_u64(12).unwrap(), (4, 2));
    }

    #[test]
    fn solve_mod_examples() {
        let two = IntMatrix::from_rows(&[[2]]);
        let x = solve_mod(&two, &big(&[2]), Modulus::Finite(4)).unwrap().unwrap();
        let lhs: BigInt = BigInt::from(2) * &x[0] - 2;
        assert_eq!(lhs.mod_floor(&BigInt::from(4)), BigInt::zero());
        assert_eq!(solve_mod(&two, &big(&[1]), Modulus::Finite(4)).unwrap(), None);

        let id = IntMatrix::identity(3);
        let r = big(&[5, 1, 3]);
        assert_eq!(solve_mod(&id, &r, Modulus::Finite(7)).unwrap().unwrap(), r);

        assert!(solve_mod(&id, &big(&[1]), Modulus::Finite(7)).is_err());
        assert!(solve_mod(&id, &r, Modulus::Infinite).is_err());
    }

    #[test]
    fn solve_mod_with_zero_rows() {
        // rows beyond the rank must vanish mod m
        let m = IntMatrix::from_rows(&[[1, 1], [2, 2]]);
        assert!(solve_mod(&m, &big(&[1, 2]), Modulus::Finite(5)).unwrap().is_some());
        assert!(solve_mod(&m, &big(&[1, 3]), Modulus::Finite(5)).unwrap().is_none());
    }

    fn small_matrix() -> impl Strategy<Value = IntMatrix> {
        (1usize..=8, 1usize..=8).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-9i64..=9, r * c)
                .prop_map(move |xs| IntMatrix::from_entries(r, c, xs.into_iter().map(BigInt::from).collect()).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn smith_invariants(m in small_matrix()) {
            let s = smith_normal_form(&m);
            prop_assert_eq!(&(&s.u * &m) * &s.v, s.d.clone());
            prop_assert!(s.u.determinant().unwrap().abs().is_one());
            prop_assert!(s.v.determinant().unwrap().abs().is_one());
            let diag = s.diagonal();
            for w in diag.windows(2) {
                if w[1].is_zero() {
                    continue;
                }
                prop_assert!(!w[0].is_zero() && w[1].is_multiple_of(&w[0]));
                prop_assert!(!w[0].is_negative());
            }
        }

        #[test]
        fn gcd_list_ignores_order_and_sign(xs in proptest::collection::vec(-1000i64..1000, 1..10), flip in any::<u16>()) {
            let base = gcd_list(&big(&xs)).unwrap();
            let mut ys: Vec<i64> = xs.iter().enumerate()
                .map(|(i, &x)| if flip >> (i % 16) & 1 == 1 { -x } else { x })
                .collect();
            ys.reverse();
            prop_assert_eq!(gcd_list(&big(&ys)).unwrap(), base);
        }

        #[test]
        fn solve_mod_solutions_satisfy_congruence(
            m in small_matrix(),
            seed in proptest::collection::vec(-20i64..20, 8),
            md in 2u64..40,
        ) {
            let rhs: Vec<BigInt> = (0..m.rows()).map(|i| BigInt::from(seed[i % seed.len()])).collect();
            if let Some(x) = solve_mod(&m, &rhs, Modulus::Finite(md)).unwrap() {
                let mx = m.mul_vec(&x).unwrap();
                let md = BigInt::from(md);
                for (a, b) in mx.iter().zip(&rhs) {
                    prop_assert!((a - b).is_multiple_of(&md));
                }
            }
        }

        #[test]
        fn solve_mod_finds_planted_solutions(m in small_matrix(), md in 2u64..40, seed in any::<u64>()) {
            // rhs = m x0 is solvable by construction
            let x0: Vec<BigInt> = (0..m.cols()).map(|j| BigInt::from((seed >> (j * 3)) % 11)).collect();
            let rhs = m.mul_vec(&x0).unwrap();
            prop_assert!(solve_mod(&m, &rhs, Modulus::Finite(md)).unwrap().is_some());
        }
    }
}
