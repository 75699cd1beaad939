use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::complex::OrderedSimplicialComplex;
use super::reduce::Reduction;
use super::LensError;
use crate::exactalg::{smith_normal_form, solve_mod, IntMatrix, Modulus, QuotientGroup};

/// Values on the ordered simplices of one dimension, reduced mod `modulus`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cochain {
    pub degree: usize,
    pub modulus: Modulus,
    pub values: Vec<i64>,
}

fn reduce(x: i128, modulus: Modulus) -> Result<i64, LensError> {
    let v = match modulus {
        Modulus::Finite(m) => x.rem_euclid(m as i128),
        Modulus::Infinite => x,
    };
    i64::try_from(v).map_err(|_| LensError::Internal("cochain value overflow".into()))
}

impl Cochain {
    pub fn zero(k: &OrderedSimplicialComplex, degree: usize, modulus: Modulus) -> Self {
        Cochain {
            degree,
            modulus,
            values: vec![0; k.count(degree)],
        }
    }

    pub fn new(
        k: &OrderedSimplicialComplex,
        degree: usize,
        modulus: Modulus,
        values: &[i64],
    ) -> Result<Self, LensError> {
        if values.len() != k.count(degree) {
            return Err(LensError::Usage(format!(
                "degree {degree} needs {} values, got {}",
                k.count(degree),
                values.len()
            )));
        }
        Ok(Cochain {
            degree,
            modulus,
            values: values
                .iter()
                .map(|&v| reduce(v as i128, modulus))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn add(&self, other: &Cochain) -> Result<Cochain, LensError> {
        if self.degree != other.degree || self.modulus != other.modulus {
            return Err(LensError::Usage("adding cochains of different slots".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| reduce(a as i128 + b as i128, self.modulus))
            .collect::<Result<_, _>>()?;
        Ok(Cochain { values, ..self.clone() })
    }

    pub fn scale(&self, k: i64) -> Result<Cochain, LensError> {
        let values = self
            .values
            .iter()
            .map(|&a| reduce(a as i128 * k as i128, self.modulus))
            .collect::<Result<_, _>>()?;
        Ok(Cochain { values, ..self.clone() })
    }

    /// Reinterprets the values modulo another modulus; `factor` multiplies
    /// the canonical lifts first (1 for reduction, `m′/m` for inclusion).
    pub fn change_coefficients(&self, modulus: Modulus, factor: i64) -> Result<Cochain, LensError> {
        let values = self
            .values
            .iter()
            .map(|&a| reduce(a as i128 * factor as i128, modulus))
            .collect::<Result<_, _>>()?;
        Ok(Cochain {
            degree: self.degree,
            modulus,
            values,
        })
    }
}

/// `(δx)(σ) = Σ_j (-1)^j x(∂_j σ)`.
pub fn coboundary(k: &OrderedSimplicialComplex, x: &Cochain) -> Result<Cochain, LensError> {
    let d = x.degree + 1;
    let values = (0..k.count(d))
        .map(|s| {
            let acc: i128 = k
                .faces(d, s)
                .iter()
                .enumerate()
                .map(|(j, &f)| {
                    if j % 2 == 0 {
                        x.values[f] as i128
                    } else {
                        -(x.values[f] as i128)
                    }
                })
                .sum();
            reduce(acc, x.modulus)
        })
        .collect::<Result<_, _>>()?;
    Ok(Cochain {
        degree: d,
        modulus: x.modulus,
        values,
    })
}

pub fn is_cocycle(k: &OrderedSimplicialComplex, x: &Cochain) -> Result<bool, LensError> {
    Ok(coboundary(k, x)?.values.iter().all(|&v| v == 0))
}

/// Alexander–Whitney cup product: `(x ⌣ y)(v₀…v_{p+q}) = x(v₀…v_p)·y(v_p…v_{p+q})`.
pub fn cup_aw(k: &OrderedSimplicialComplex, x: &Cochain, y: &Cochain) -> Result<Cochain, LensError> {
    if x.modulus != y.modulus {
        return Err(LensError::Usage(format!(
            "cup of cochains mod {} and mod {}",
            x.modulus, y.modulus
        )));
    }
    let (p, q) = (x.degree, y.degree);
    let top = k.dim().unwrap_or(0);
    if p + q > top {
        return Err(LensError::Usage(format!("degree {} exceeds dimension {top}", p + q)));
    }
    let values = k
        .simplices(p + q)
        .iter()
        .map(|s| {
            let front = k.index_of(&s[..=p]).expect("face");
            let back = k.index_of(&s[p..]).expect("face");
            reduce(x.values[front] as i128 * y.values[back] as i128, x.modulus)
        })
        .collect::<Result<_, _>>()?;
    Ok(Cochain {
        degree: p + q,
        modulus: x.modulus,
        values,
    })
}

/// Connecting map of `Z/m → Z/m² → Z/m` followed by reduction to `target`:
/// lift to integers, apply `δ`, divide by `m`.
pub fn bockstein(k: &OrderedSimplicialComplex, x: &Cochain, target: Modulus) -> Result<Cochain, LensError> {
    bockstein_with_lift(k, x, target, &vec![0; x.values.len()])
}

/// As [`bockstein`], with the integral lift shifted by `m·shift`.
pub fn bockstein_with_lift(
    k: &OrderedSimplicialComplex,
    x: &Cochain,
    target: Modulus,
    shift: &[i64],
) -> Result<Cochain, LensError> {
    let Modulus::Finite(m) = x.modulus else {
        return Err(LensError::Usage("Bockstein needs a finite modulus".into()));
    };
    if !is_cocycle(k, x)? {
        return Err(LensError::Usage("Bockstein of a non-cocycle".into()));
    }
    let lift = Cochain {
        degree: x.degree,
        modulus: Modulus::Infinite,
        values: x.values.iter().zip(shift).map(|(&v, &s)| v + s * m as i64).collect(),
    };
    let d = coboundary(k, &lift)?;
    let values = d
        .values
        .iter()
        .map(|&v| {
            debug_assert_eq!(v.rem_euclid(m as i64), 0);
            reduce((v / m as i64) as i128, target)
        })
        .collect::<Result<_, _>>()?;
    Ok(Cochain {
        degree: d.degree,
        modulus: target,
        values,
    })
}

/// A cohomology class, given by coordinates along the cyclic summands of its
/// group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohClass {
    pub degree: usize,
    pub modulus: Modulus,
    pub orders: Vec<Modulus>,
    pub coords: Vec<BigInt>,
}

impl CohClass {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    /// Order of the class; `None` when infinite.
    pub fn order(&self) -> Option<BigInt> {
        let mut acc = BigInt::one();
        for (c, m) in self.coords.iter().zip(&self.orders) {
            match m {
                Modulus::Infinite if !c.is_zero() => return None,
                Modulus::Infinite => {}
                Modulus::Finite(o) => {
                    let o = BigInt::from(*o);
                    acc = acc.lcm(&(&o / c.gcd(&o)));
                }
            }
        }
        Some(acc)
    }
}

/// `H^degree(core; Z/m)` computed from the Smith form of the core coboundary.
///
/// Writing `U δ V = diag(d_j)`, the integral lifts of cocycles form the
/// lattice spanned by the columns of `V·diag(k_j)` with `k_j = m / gcd(d_j, m)`
/// (and `k_j = 1` past the rank). Coboundaries and `m·Z^N` are expressed in
/// that basis and the quotient is split into cyclic factors.
struct SlotGroup {
    v: IntMatrix,
    v_inv: IntMatrix,
    scale: Vec<BigInt>,
    keep: Vec<usize>,
    group: QuotientGroup,
}

impl SlotGroup {
    fn new(red: &Reduction, degree: usize, modulus: Modulus) -> Self {
        let d_out = red.core_coboundary(degree);
        let n = red.core_size(degree);
        let snf = smith_normal_form(&d_out);
        let diag = snf.diagonal();
        let rank = snf.rank();
        let mut scale = vec![BigInt::one(); n];
        let keep: Vec<usize> = match modulus {
            Modulus::Finite(m) => {
                let m = BigInt::from(m);
                for j in 0..rank {
                    scale[j] = &m / diag[j].gcd(&m);
                }
                (0..n).collect()
            }
            Modulus::Infinite => (rank..n).collect(),
        };
        let mut rel_cols: Vec<Vec<BigInt>> = Vec::new();
        if degree > 0 {
            let d_in = red.core_coboundary(degree - 1);
            for c in 0..d_in.cols() {
                let col: Vec<BigInt> = (0..d_in.rows()).map(|r| d_in.get(r, c).clone()).collect();
                rel_cols.push(col);
            }
        }
        if let Modulus::Finite(m) = modulus {
            for j in 0..n {
                let mut e = vec![BigInt::zero(); n];
                e[j] = BigInt::from(m);
                rel_cols.push(e);
            }
        }
        let rows = keep.len();
        let mut rel = IntMatrix::zeros(rows, rel_cols.len());
        for (c, col) in rel_cols.iter().enumerate() {
            let y = snf.v_inv.mul_vec(col).expect("sizes match");
            for (r, &j) in keep.iter().enumerate() {
                let (q, rest) = y[j].div_rem(&scale[j]);
                debug_assert!(rest.is_zero(), "relation outside the cocycle lattice");
                rel.set(r, c, q);
            }
        }
        SlotGroup {
            v: snf.v,
            v_inv: snf.v_inv,
            scale,
            keep,
            group: QuotientGroup::new(&rel),
        }
    }

    fn lattice_coords(&self, z: &[BigInt]) -> Vec<BigInt> {
        let y = self.v_inv.mul_vec(z).expect("sizes match");
        self.keep.iter().map(|&j| &y[j] / &self.scale[j]).collect()
    }

    fn from_lattice(&self, w: &[BigInt]) -> Vec<BigInt> {
        let mut y = vec![BigInt::zero(); self.v.cols()];
        for (&j, x) in self.keep.iter().zip(w) {
            y[j] = x * &self.scale[j];
        }
        self.v.mul_vec(&y).expect("sizes match")
    }
}

/// Cohomology of a simplicial complex with any coefficients, computed on the
/// reduced core and transported back and forth by the reduction maps.
pub struct SimplicialCohomology {
    complex: OrderedSimplicialComplex,
    reduction: Reduction,
}

impl SimplicialCohomology {
    pub fn new(complex: OrderedSimplicialComplex) -> Result<Self, LensError> {
        let reduction = Reduction::new(&complex)?;
        Ok(SimplicialCohomology { complex, reduction })
    }

    pub fn complex(&self) -> &OrderedSimplicialComplex {
        &self.complex
    }

    /// Cell counts of the reduced complex, by degree.
    pub fn core_sizes(&self) -> Vec<usize> {
        (0..=self.reduction.top())
            .map(|d| self.reduction.core_size(d))
            .collect()
    }

    fn slot(&self, degree: usize, modulus: Modulus) -> Result<SlotGroup, LensError> {
        if degree > self.reduction.top() {
            return Err(LensError::Usage(format!("degree {degree} exceeds the dimension")));
        }
        if modulus == Modulus::Finite(1) {
            return Err(LensError::Usage("coefficients Z/1 are trivial".into()));
        }
        Ok(SlotGroup::new(&self.reduction, degree, modulus))
    }

    /// Cyclic factors of `H^degree(K; Z/m)`.
    pub fn group(&self, degree: usize, modulus: Modulus) -> Result<Vec<Modulus>, LensError> {
        Ok(self.slot(degree, modulus)?.group.orders())
    }

    fn core_vector(&self, x: &Cochain) -> Vec<BigInt> {
        let full: Vec<i128> = x.values.iter().map(|&v| v as i128).collect();
        self.reduction
            .to_core(x.degree, &full, x.modulus.value())
            .into_iter()
            .map(BigInt::from)
            .collect()
    }

    /// Class of a cocycle.
    pub fn class(&self, x: &Cochain) -> Result<CohClass, LensError> {
        if x.values.len() != self.complex.count(x.degree) {
            return Err(LensError::Usage("cochain does not belong to this complex".into()));
        }
        if x.degree < self.reduction.top() && !is_cocycle(&self.complex, x)? {
            return Err(LensError::Usage("not a cocycle".into()));
        }
        let slot = self.slot(x.degree, x.modulus)?;
        let w = slot.lattice_coords(&self.core_vector(x));
        Ok(CohClass {
            degree: x.degree,
            modulus: x.modulus,
            orders: slot.group.orders(),
            coords: slot.group.coordinates(&w),
        })
    }

    /// Representative cocycles of the cyclic generators of `H^degree`.
    pub fn generators(&self, degree: usize, modulus: Modulus) -> Result<Vec<Cochain>, LensError> {
        let slot = self.slot(degree, modulus)?;
        slot.group
            .generators()
            .iter()
            .map(|w| {
                let core: Vec<i128> = slot
                    .from_lattice(w)
                    .iter()
                    .map(|v| {
                        v.to_i128()
                            .ok_or_else(|| LensError::Internal("generator overflow".into()))
                    })
                    .collect::<Result<_, _>>()?;
                let full = self.reduction.from_core(degree, &core, modulus.value());
                let values: Vec<i64> = full
                    .into_iter()
                    .map(|v| i64::try_from(v).map_err(|_| LensError::Internal("generator overflow".into())))
                    .collect::<Result<_, _>>()?;
                Cochain::new(&self.complex, degree, modulus, &values)
            })
            .collect()
    }

    /// Whether a cocycle is a coboundary, decided by solving `δy = p(x)` on
    /// the core with [`solve_mod`] (independent of the Smith-form route).
    pub fn is_coboundary(&self, x: &Cochain) -> Result<bool, LensError> {
        let Modulus::Finite(_) = x.modulus else {
            return Err(LensError::Usage("is_coboundary needs a finite modulus".into()));
        };
        let z = self.core_vector(x);
        if x.degree == 0 {
            return Ok(z.iter().all(|v| v.is_zero()));
        }
        let d_in = self.reduction.core_coboundary(x.degree - 1);
        if d_in.cols() == 0 {
            let m = BigInt::from(x.modulus.value().expect("finite"));
            return Ok(z.iter().all(|v| v.mod_floor(&m).is_zero()));
        }
        solve_mod(&d_in, &z, x.modulus)
            .map(|s| s.is_some())
            .map_err(|e| LensError::Internal(e.to_string()))
    }

    /// Predicts `H^i(K; Z/m)` from the integral groups by universal
    /// coefficients and compares with the direct computation.
    pub fn universal_coefficients_agree(&self, degree: usize, m: u64) -> Result<bool, LensError> {
        let top = self.reduction.top();
        let hi = self.group(degree, Modulus::Infinite)?;
        let next = if degree < top {
            self.group(degree + 1, Modulus::Infinite)?
        } else {
            vec![]
        };
        let mut predicted: Vec<u64> = Vec::new();
        for o in &hi {
            predicted.push(match o {
                Modulus::Infinite => m,
                Modulus::Finite(k) => num_integer::gcd(*k, m),
            });
        }
        for o in &next {
            if let Modulus::Finite(k) = o {
                predicted.push(num_integer::gcd(*k, m));
            }
        }
        let direct: Vec<u64> = self
            .group(degree, Modulus::Finite(m))?
            .iter()
            .map(|o| o.value().expect("finite coefficients give finite groups"))
            .collect();
        Ok(invariant_factors(&predicted) == invariant_factors(&direct))
    }
}

/// Invariant factors of `⊕ Z/k_i`, ignoring trivial summands.
fn invariant_factors(orders: &[u64]) -> Vec<BigInt> {
    let mut m = IntMatrix::zeros(orders.len(), orders.len());
    for (i, &k) in orders.iter().enumerate() {
        m.set(i, i, BigInt::from(k));
    }
    smith_normal_form(&m)
        .invariant_factors()
        .into_iter()
        .filter(|d| !d.is_one() && d.is_positive())
        .collect()
}

/// `x ↦ 2^s · (x ⌣ β_s x)` lifted to `Z/2^{s+1}`, for a degree-1 cocycle `x`
/// mod `2^s`; returns its class in `H³(K; Z/2^{s+1})`.
pub fn postnikov_square(coh: &SimplicialCohomology, x: &Cochain) -> Result<CohClass, LensError> {
    if x.degree != 1 {
        return Err(LensError::Usage(format!(
            "needs a degree-1 cocycle, got degree {}",
            x.degree
        )));
    }
    let m = match x.modulus {
        Modulus::Finite(m) if m >= 2 && m.is_power_of_two() => m,
        other => {
            return Err(LensError::Usage(format!("needs coefficients Z/2^s, got Z/{other}")));
        }
    };
    let k = coh.complex();
    let y = bockstein(k, x, x.modulus)?;
    let z = cup_aw(k, x, &y)?;
    let lifted = z.change_coefficients(Modulus::Finite(2 * m), m as i64)?;
    coh.class(&lifted)
}
