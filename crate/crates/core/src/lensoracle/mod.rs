//! Brute-force cochain computations on triangulated lens spaces.
//!
//! `L(b; a)` is triangulated as a quotient of a join of two cycles, and its
//! cohomology, cup products, Bocksteins and the secondary square
//! `x ↦ 2^s·(x ⌣ β_s x)` are evaluated directly on simplicial cochains.

mod cochain;
mod complex;
mod reduce;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cochain::{
    bockstein, bockstein_with_lift, coboundary, cup_aw, is_cocycle, postnikov_square, Cochain, CohClass,
    SimplicialCohomology,
};
pub use complex::{build_lens_complex, OrderedSimplicialComplex};

use crate::exactalg::{nu2_u64, Modulus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LensError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareValue {
    Zero,
    Order2,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareResult {
    pub s: u32,
    pub value: SquareValue,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LensReport {
    pub b: u64,
    pub a: i64,
    pub results: Vec<SquareResult>,
    pub cohomology_ok: bool,
}

impl LensReport {
    pub fn passed(&self) -> bool {
        self.cohomology_ok && self.results.iter().all(|r| r.pass)
    }

    pub fn from_json(text: &str) -> Result<Self, LensError> {
        serde_json::from_str(text).map_err(|e| LensError::Usage(format!("cannot parse report: {e}")))
    }
}

/// Zero, the unique element of order two, or anything else.
pub fn square_value(class: &CohClass) -> SquareValue {
    if class.is_zero() {
        SquareValue::Zero
    } else if class.order() == Some(BigInt::from(2)) && class.orders.len() == 1 {
        SquareValue::Order2
    } else {
        SquareValue::Other
    }
}

/// Expected cyclic factors of `H^i(L(b; a); Z/2^s)`: `Z/2^s` in degrees 0
/// and 3, `Z/2^{min(r, s)}` in degrees 1 and 2.
pub fn expected_lens_group(r: u32, s: u32, degree: usize) -> Vec<Modulus> {
    let order = match degree {
        0 | 3 => 1u64 << s,
        _ => 1u64 << r.min(s),
    };
    if order == 1 {
        vec![]
    } else {
        vec![Modulus::Finite(order)]
    }
}

/// Checks the cohomology table of `L(b; a)` for `s ≤ s_max` and evaluates
/// the square on a generator of `H¹(-; Z/2^s)` for each `s`, expecting the
/// order-two element exactly when `2^s` is the 2-part of `b`.
pub fn verify_lens_proposition(b: u64, a: i64, s_max: u32) -> Result<LensReport, LensError> {
    if b % 2 == 1 {
        return Err(LensError::Domain(format!("b = {b} is odd")));
    }
    let (_, r) = nu2_u64(b).map_err(|e| LensError::Domain(e.to_string()))?;
    if s_max < r {
        return Err(LensError::Usage(format!("s_max = {s_max} is below r = {r}")));
    }
    let coh = SimplicialCohomology::new(build_lens_complex(b, a)?)?;
    verify_on(&coh, b, a, r, s_max)
}

pub(crate) fn verify_on(
    coh: &SimplicialCohomology,
    b: u64,
    a: i64,
    r: u32,
    s_max: u32,
) -> Result<LensReport, LensError> {
    let mut cohomology_ok = coh.group(3, Modulus::Infinite)? == vec![Modulus::Infinite];
    let mut results = Vec::new();
    for s in 1..=s_max {
        let m = Modulus::Finite(1 << s);
        for degree in 0..=3 {
            cohomology_ok &= coh.group(degree, m)? == expected_lens_group(r, s, degree);
        }
        let gens = coh.generators(1, m)?;
        let value = match gens.as_slice() {
            [x] => square_value(&postnikov_square(coh, x)?),
            _ => SquareValue::Other,
        };
        let expected = if s == r { SquareValue::Order2 } else { SquareValue::Zero };
        results.push(SquareResult {
            s,
            value,
            pass: value == expected,
        });
    }
    Ok(LensReport {
        b,
        a,
        results,
        cohomology_ok,
    })
}
