//! Characteristic pairs of 4-dimensional toric orbifolds.
//!
//! A pair is stored as the cyclic list of facet vectors `λ_1, …, λ_m` of an
//! `m`-gon; the polygon's geometry never enters any invariant. Indices are
//! 1-based in reports and wrap modulo `m`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactalg::{gcd_list, nu2};

#[derive(Debug, Error)]
pub enum CharPairError {
    #[error("cannot parse characteristic pair: {0}")]
    Parse(String),
    #[error("invalid characteristic pair: {}", .0.violations_text())]
    Invalid(ValidationReport),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicPair {
    pub facets: Vec<[i64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooFewFacets { m: usize },
    NotPrimitive { facet: usize },
    DependentAdjacent { facet: usize, next: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewFacets { m } => write!(f, "need at least 3 facets, got {m}"),
            Violation::NotPrimitive { facet } => write!(f, "facet {facet} is not primitive"),
            Violation::DependentAdjacent { facet, next } => {
                write!(f, "det(λ_{facet}, λ_{next}) = 0")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn violations_text(&self) -> String {
        self.violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Invariants read off a valid pair: `n = m - 2`, `g` the gcd of all pairwise
/// determinants, `2^r` the 2-part of `g`, and `|det(λ_{i-1}, λ_i)|` per vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbifoldInvariants {
    pub m: usize,
    pub n: usize,
    pub g: u128,
    pub r: u32,
    pub vertex_dets: Vec<u128>,
}

fn det(a: [i64; 2], b: [i64; 2]) -> BigInt {
    BigInt::from(a[0]) * b[1] - BigInt::from(a[1]) * b[0]
}

fn to_u128(x: &BigInt) -> u128 {
    // |det| of two i64 vectors is below 2^127
    x.abs().to_u128().expect("determinant fits in u128")
}

impl CharacteristicPair {
    pub fn new(facets: Vec<[i64; 2]>) -> Self {
        CharacteristicPair { facets }
    }

    pub fn from_json(text: &str) -> Result<Self, CharPairError> {
        serde_json::from_str(text).map_err(|e| CharPairError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    pub fn m(&self) -> usize {
        self.facets.len()
    }

    /// `λ_i` with 1-based, cyclic indexing.
    pub fn facet(&self, i: usize) -> [i64; 2] {
        let m = self.m();
        self.facets[(i + m - 1) % m]
    }

    pub fn validate(&self) -> ValidationReport {
        let m = self.m();
        let mut violations = Vec::new();
        if m < 3 {
            violations.push(Violation::TooFewFacets { m });
        }
        for (i, v) in self.facets.iter().enumerate() {
            let g = gcd_list(&[BigInt::from(v[0]), BigInt::from(v[1])]).expect("nonempty");
            if g != BigInt::from(1) {
                violations.push(Violation::NotPrimitive { facet: i + 1 });
            }
        }
        if m >= 2 {
            for i in 1..=m {
                let next = i % m + 1;
                if m == 2 && i == 2 {
                    break;
                }
                if det(self.facet(i), self.facet(next)) == BigInt::from(0) {
                    violations.push(Violation::DependentAdjacent { facet: i, next });
                }
            }
        }
        ValidationReport { violations }
    }

    fn ensure_valid(&self) -> Result<(), CharPairError> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(CharPairError::Invalid(report))
        }
    }

    fn g_big(&self) -> BigInt {
        let m = self.m();
        let mut dets = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in i + 1..m {
                dets.push(det(self.facets[i], self.facets[j]));
            }
        }
        gcd_list(&dets).expect("m >= 3")
    }

    pub fn invariants(&self) -> Result<OrbifoldInvariants, CharPairError> {
        self.ensure_valid()?;
        let m = self.m();
        let g = self.g_big();
        let (_, r) = nu2(&g).expect("adjacent determinants are nonzero, so g >= 1");
        let vertex_dets = (1..=m)
            .map(|i| to_u128(&det(self.facet(i + m - 1), self.facet(i))))
            .collect();
        Ok(OrbifoldInvariants {
            m,
            n: m - 2,
            g: to_u128(&g),
            r,
            vertex_dets,
        })
    }

    /// Smallest `i` for which `det(λ_i, λ_{i+1})` has the same 2-part as `g`.
    ///
    /// The returned index names the vertex `F_i ∩ F_{i+1}`. Requires `g` even.
    /// `Ok(None)` means no vertex qualifies, which should never happen for a
    /// valid pair; callers surface it as an anomaly.
    pub fn find_special_vertex(&self) -> Result<Option<usize>, CharPairError> {
        self.ensure_valid()?;
        let g = self.g_big();
        let (_, r) = nu2(&g).expect("g >= 1");
        if r == 0 {
            return Err(CharPairError::Domain(format!(
                "g = {g} is odd; a special vertex needs an even g"
            )));
        }
        let m = self.m();
        Ok((1..=m).find(|&i| {
            let d = det(self.facet(i), self.facet(i + 1)).abs();
            nu2(&d).map(|(_, s)| s == r).unwrap_or(false)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(v: &[[i64; 2]]) -> CharacteristicPair {
        CharacteristicPair::new(v.to_vec())
    }

    #[test]
    fn validation_examples() {
        assert!(pair(&[[1, 0], [0, 1], [-1, -1]]).validate().is_valid());
        assert_eq!(
            pair(&[[2, 4], [0, 1], [1, 1]]).validate().violations,
            vec![Violation::NotPrimitive { facet: 1 }]
        );
        assert_eq!(
            pair(&[[1, 0], [2, 0], [0, 1]]).validate().violations,
            vec![
                Violation::NotPrimitive { facet: 2 },
                Violation::DependentAdjacent { facet: 1, next: 2 }
            ]
        );
        assert_eq!(
            pair(&[[1, 0], [0, 1]]).validate().violations,
            vec![Violation::TooFewFacets { m: 2 }]
        );
        // wrap-around adjacency is checked too
        assert_eq!(
            pair(&[[1, 0], [0, 1], [1, 1], [-1, 0]]).validate().violations,
            vec![Violation::DependentAdjacent { facet: 4, next: 1 }]
        );
    }

    #[test]
    fn invariants_examples() {
        let inv = pair(&[[1, 0], [1, 2], [-1, 0], [1, -2]]).invariants().unwrap();
        assert_eq!((inv.n, inv.g, inv.r), (2, 2, 1));
        assert_eq!(inv.vertex_dets, vec![2, 2, 2, 2]);

        let inv = pair(&[[1, 0], [0, 1], [-1, -1]]).invariants().unwrap();
        assert_eq!((inv.n, inv.g, inv.r), (1, 1, 0));

        let inv = pair(&[[1, 0], [1, 4], [-1, -2]]).invariants().unwrap();
        assert_eq!((inv.n, inv.g, inv.r), (1, 2, 1));
        assert_eq!(inv.vertex_dets, vec![2, 4, 2]);
    }

    #[test]
    fn invalid_pair_has_no_invariants() {
        assert!(matches!(
            pair(&[[2, 4], [0, 1], [1, 1]]).invariants(),
            Err(CharPairError::Invalid(_))
        ));
    }

    #[test]
    fn special_vertex_examples() {
        assert_eq!(
            pair(&[[1, 0], [1, 4], [-1, -2]]).find_special_vertex().unwrap(),
            Some(2)
        );
        assert_eq!(
            pair(&[[1, 0], [1, 2], [-1, 0], [1, -2]]).find_special_vertex().unwrap(),
            Some(1)
        );
        assert!(matches!(
            pair(&[[1, 0], [0, 1], [-1, -1]]).find_special_vertex(),
            Err(CharPairError::Domain(_))
        ));
    }

    #[test]
    fn json_format() {
        let p = CharacteristicPair::from_json(r#"{"facets": [[1,0],[1,4],[-1,-2]]}"#).unwrap();
        assert_eq!(p, pair(&[[1, 0], [1, 4], [-1, -2]]));
        assert!(CharacteristicPair::from_json(r#"{"facets": [[1,0,2]]}"#).is_err());
        assert!(CharacteristicPair::from_json(r#"{"facets": [[1.5,0]]}"#).is_err());
        assert!(CharacteristicPair::from_json("[").is_err());
        assert_eq!(CharacteristicPair::from_json(&p.to_json()).unwrap(), p);
    }
}
