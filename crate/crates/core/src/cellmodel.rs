//! Algebraic models of 4-dimensional complexes `(⋁ S² ∨ P³(g)) ∪ e⁴`.
//!
//! A model is the triple of attaching-map coefficients `(A, b, c)`. Every
//! cohomology group is expressed in a fixed basis built from the cellular
//! classes `u_i`, `w`, `v`:
//!
//! | coefficients | degree 2 basis | degree 3 | degree 4 |
//! |---|---|---|---|
//! | `Z` | `u_i` | `Z/g` | `v` |
//! | `Z/t`, `t \| g` | `ū_i`, `ρ(w)` | `ζ` of order `t` | `v` mod `t` |
//! | `Z/t`, `t \| 2g`, `t ∤ g` | `μ_i`, `ι(w)` of order `t/2` | `ζ` of order `t/2` | `v` mod `t` |
//!
//! Internally a degree-2 class is handled through its cellular cochain values:
//! one value per 2-sphere and one on the bottom cell of the Moore space, where
//! the torsion generator has value `t / gcd(g, t)`. Reductions and inclusions
//! then act on values directly, and the cup square is the quadratic form with
//! matrix `M` (the symmetrisation of `A`), cross terms `b` and square term `c`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactalg::{nu2_u64, IntMatrix, Modulus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("cannot parse model: {0}")]
    Parse(String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
}

type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn rem(x: i128, m: u64) -> i64 {
    x.rem_euclid(m as i128) as i64
}

/// Object of the category `C_{n,g}`, encoded by its attaching-map coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellModel {
    n: usize,
    g: u64,
    // upper-triangular, a[j][k] == 0 for k < j
    a: Vec<Vec<i64>>,
    b: Vec<i64>,
    c: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    n: usize,
    g: u64,
    #[serde(rename = "A")]
    a: Vec<Vec<i64>>,
    b: Vec<i64>,
    c: i64,
}

impl Serialize for CellModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelJson {
            n: self.n,
            g: self.g,
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CellModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ModelJson::deserialize(d)?;
        CellModel::from_rows(raw.n, raw.g, raw.a, raw.b, raw.c).map_err(serde::de::Error::custom)
    }
}

impl PartialOrd for CellModel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CellModel {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.g, &self.a, &self.b, self.c).cmp(&(other.n, other.g, &other.a, &other.b, other.c))
    }
}

impl fmt::Display for CellModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(n={}, g={}, A={:?}, b={:?}, c={})",
            self.n, self.g, self.a, self.b, self.c
        )
    }
}

/// A cohomology class given by coordinates in the fixed basis of its
/// `(coefficient, degree)` slot, reduced modulo each basis element's order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CohElement {
    pub coefficient: Modulus,
    pub degree: u8,
    pub coords: Vec<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Reduce,
    Include,
}

impl CellModel {
    /// Builds a model from an upper-triangular coefficient array given either
    /// as full `n x n` rows (entries below the diagonal zero or mirroring the
    /// upper part) or as triangular rows of lengths `n, n-1, …, 1`. Residues
    /// are reduced to canonical representatives.
    pub fn from_rows(n: usize, g: u64, a: Vec<Vec<i64>>, b: Vec<i64>, c: i64) -> Result<Self> {
        if g == 0 {
            return Err(ModelError::Invalid("g must be at least 1".into()));
        }
        if g > (1 << 40) {
            return Err(ModelError::Invalid(format!("g = {g} is too large")));
        }
        if a.len() != n {
            return Err(ModelError::Invalid(format!("A has {} rows, expected {n}", a.len())));
        }
        if b.len() != n {
            return Err(ModelError::Invalid(format!("b has {} entries, expected {n}", b.len())));
        }
        let square = a.iter().all(|r| r.len() == n);
        let triangular = a.iter().enumerate().all(|(j, r)| r.len() == n - j);
        let mut upper = vec![vec![0i64; n]; n];
        if square {
            for j in 0..n {
                for k in 0..n {
                    if k >= j {
                        upper[j][k] = a[j][k];
                    } else if a[j][k] != 0 && a[j][k] != a[k][j] {
                        return Err(ModelError::Invalid(format!(
                            "A[{j}][{k}] = {} below the diagonal is neither 0 nor symmetric",
                            a[j][k]
                        )));
                    }
                }
            }
        } else if triangular {
            for j in 0..n {
                for (off, &x) in a[j].iter().enumerate() {
                    upper[j][j + off] = x;
                }
            }
        } else {
            return Err(ModelError::Invalid("A must be square or upper-triangular rows".into()));
        }
        let c_mod = if g % 2 == 0 { 2 * g } else { g };
        Ok(CellModel {
            n,
            g,
            a: upper,
            b: b.iter().map(|&x| rem(x as i128, g)).collect(),
            c: rem(c as i128, c_mod),
        })
    }

    /// `n = 1` shorthand: `A = [[a]]`, `b = [b]`.
    pub fn rank_one(g: u64, a: i64, b: i64, c: i64) -> Self {
        Self::from_rows(1, g, vec![vec![a]], vec![b], c).expect("valid rank-one model")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn g(&self) -> u64 {
        self.g
    }

    pub fn a(&self) -> &[Vec<i64>] {
        &self.a
    }

    pub fn b(&self) -> &[i64] {
        &self.b
    }

    pub fn c(&self) -> i64 {
        self.c
    }

    /// Modulus of `c`: `2g` for even `g`, `g` for odd `g`.
    pub fn c_modulus(&self) -> u64 {
        if self.g % 2 == 0 {
            2 * self.g
        } else {
            self.g
        }
    }

    /// `r` with `2^r` the 2-part of `g`.
    pub fn r(&self) -> u32 {
        nu2_u64(self.g).expect("g >= 1").1
    }

    /// Symmetric matrix entry `M_jk`.
    pub fn m_entry(&self, j: usize, k: usize) -> i64 {
        if j <= k {
            self.a[j][k]
        } else {
            self.a[k][j]
        }
    }

    pub fn symmetric_matrix(&self) -> IntMatrix {
        let rows: Vec<Vec<i64>> = (0..self.n)
            .map(|j| (0..self.n).map(|k| self.m_entry(j, k)).collect())
            .collect();
        IntMatrix::from_rows(&rows)
    }

    pub fn same_shape(&self, other: &CellModel) -> bool {
        self.n == other.n && self.g == other.g
    }

    fn require_even(&self, what: &str) -> Result<()> {
        if self.g % 2 == 1 {
            return Err(ModelError::Domain(format!(
                "{what} needs an even g, got g = {}",
                self.g
            )));
        }
        Ok(())
    }

    /// The moduli `2^r` and `2^{r+1}` (requires `g` even).
    pub fn two_power_moduli(&self) -> Result<(u64, u64)> {
        self.require_even("the 2-primary slots")?;
        let low = 1u64 << self.r();
        Ok((low, 2 * low))
    }

    /// Coefficients in the supported set `{∞} ∪ {t : t | 2g}`; includes `2g`,
    /// `g`, and for even `g` also `2^{r+1}` and `2^r`.
    pub fn supports(&self, coefficient: Modulus) -> bool {
        match coefficient {
            Modulus::Infinite => true,
            Modulus::Finite(t) => t >= 1 && (2 * self.g) % t == 0,
        }
    }

    fn check_coefficient(&self, coefficient: Modulus) -> Result<()> {
        if self.supports(coefficient) {
            Ok(())
        } else {
            Err(ModelError::Domain(format!(
                "coefficient Z/{coefficient} is not supported for g = {}",
                self.g
            )))
        }
    }

    /// Order of the torsion summand of `H²(-; Z/t)` (1 when absent).
    fn torsion_order(&self, coefficient: Modulus) -> u64 {
        match coefficient {
            Modulus::Infinite => 1,
            Modulus::Finite(t) => gcd(self.g, t),
        }
    }

    /// Orders of the basis elements of a slot, in basis order; `Infinite`
    /// marks a free generator.
    pub fn basis_orders(&self, coefficient: Modulus, degree: u8) -> Result<Vec<Modulus>> {
        self.check_coefficient(coefficient)?;
        let orders = match (degree, coefficient) {
            (0 | 4, m) => vec![m],
            (1, _) => vec![],
            (2, Modulus::Infinite) => vec![Modulus::Infinite; self.n],
            (2, m @ Modulus::Finite(_)) => {
                let mut v = vec![m; self.n];
                let tor = self.torsion_order(m);
                if tor > 1 {
                    v.push(Modulus::Finite(tor));
                }
                v
            }
            (3, Modulus::Infinite) => {
                if self.g > 1 {
                    vec![Modulus::Finite(self.g)]
                } else {
                    vec![]
                }
            }
            (3, Modulus::Finite(t)) => {
                let tor = gcd(self.g, t);
                if tor > 1 {
                    vec![Modulus::Finite(tor)]
                } else {
                    vec![]
                }
            }
            (d, _) => {
                return Err(ModelError::Domain(format!("degree {d} is outside 0..=4")));
            }
        };
        // Z/1 coefficients: every group is trivial
        Ok(orders.into_iter().filter(|m| *m != Modulus::Finite(1)).collect())
    }

    /// Cyclic decomposition of `H^degree(X; Z/coefficient)`.
    pub fn cohomology_group(&self, coefficient: Modulus, degree: u8) -> Result<Vec<Modulus>> {
        self.basis_orders(coefficient, degree)
    }

    /// Builds an element from coordinates, reducing each one modulo its order.
    pub fn element(&self, coefficient: Modulus, degree: u8, coords: &[i64]) -> Result<CohElement> {
        let orders = self.basis_orders(coefficient, degree)?;
        if orders.len() != coords.len() {
            return Err(ModelError::Usage(format!(
                "slot (Z/{coefficient}, degree {degree}) has {} basis elements, got {} coordinates",
                orders.len(),
                coords.len()
            )));
        }
        let coords = coords
            .iter()
            .zip(&orders)
            .map(|(&x, m)| match m {
                Modulus::Infinite => x,
                Modulus::Finite(o) => rem(x as i128, *o),
            })
            .collect();
        Ok(CohElement {
            coefficient,
            degree,
            coords,
        })
    }

    pub fn zero(&self, coefficient: Modulus, degree: u8) -> Result<CohElement> {
        let k = self.basis_orders(coefficient, degree)?.len();
        self.element(coefficient, degree, &vec![0; k])
    }

    /// The degree-2 class `u_i` (reduced to the slot).
    pub fn u(&self, coefficient: Modulus, i: usize) -> Result<CohElement> {
        if i >= self.n {
            return Err(ModelError::Usage(format!("u_{i} does not exist for n = {}", self.n)));
        }
        let mut x = self.zero(coefficient, 2)?;
        x.coords[i] = 1;
        self.element(coefficient, 2, &x.coords)
    }

    /// The torsion generator of degree 2: `ρ(w)` when `t | g`, `ι(w)` otherwise.
    pub fn w(&self, coefficient: Modulus) -> Result<CohElement> {
        let mut x = self.zero(coefficient, 2)?;
        if x.coords.len() == self.n {
            return Err(ModelError::Domain(format!(
                "H²(-; Z/{coefficient}) has no torsion generator for g = {}",
                self.g
            )));
        }
        x.coords[self.n] = 1;
        Ok(x)
    }

    /// The top class `v` (reduced to the slot).
    pub fn v(&self, coefficient: Modulus) -> Result<CohElement> {
        self.element(coefficient, 4, &[1])
    }

    pub fn add(&self, x: &CohElement, y: &CohElement) -> Result<CohElement> {
        if x.coefficient != y.coefficient || x.degree != y.degree {
            return Err(ModelError::Usage("adding classes from different slots".into()));
        }
        let sum: Vec<i64> = x.coords.iter().zip(&y.coords).map(|(a, b)| a + b).collect();
        self.element(x.coefficient, x.degree, &sum)
    }

    pub fn scale(&self, k: i64, x: &CohElement) -> Result<CohElement> {
        let coords: Vec<i64> = x
            .coords
            .iter()
            .map(|&c| i64::try_from(k as i128 * c as i128).expect("integral coordinate overflow"))
            .collect();
        self.element(x.coefficient, x.degree, &coords)
    }

    pub fn neg(&self, x: &CohElement) -> Result<CohElement> {
        self.scale(-1, x)
    }

    /// Cellular cochain values of a degree-2 class: `n` sphere values and
    /// the bottom-cell value of the Moore space.
    pub(crate) fn cell_values(&self, x: &CohElement) -> (Vec<i128>, i128) {
        let sphere: Vec<i128> = x.coords[..self.n].iter().map(|&c| c as i128).collect();
        let moore = match x.coefficient {
            Modulus::Finite(t) if x.coords.len() > self.n => {
                let step = t / gcd(self.g, t);
                x.coords[self.n] as i128 * step as i128
            }
            _ => 0,
        };
        (sphere, moore)
    }

    /// Inverse of [`cell_values`]; the Moore value must lie in the subgroup
    /// killed by `g`.
    pub(crate) fn from_cell_values(&self, coefficient: Modulus, sphere: &[i128], moore: i128) -> Result<CohElement> {
        let mut coords: Vec<i64> = sphere
            .iter()
            .map(|&s| match coefficient {
                Modulus::Finite(t) => rem(s, t),
                Modulus::Infinite => i64::try_from(s).expect("integral coordinate overflow"),
            })
            .collect();
        if let Modulus::Finite(t) = coefficient {
            let tor = gcd(self.g, t);
            let step = (t / tor) as i128;
            let mv = moore.rem_euclid(t as i128);
            if mv % step != 0 {
                return Err(ModelError::Usage(format!(
                    "bottom-cell value {mv} is not a cocycle mod {t}"
                )));
            }
            if tor > 1 {
                coords.push((mv / step) as i64);
            }
        }
        self.element(coefficient, 2, &coords)
    }

    /// Value of the cup form on two degree-2 classes given by cell values,
    /// before reduction.
    pub(crate) fn cup_form(&self, x: (&[i128], i128), y: (&[i128], i128)) -> i128 {
        let (xs, xw) = x;
        let (ys, yw) = y;
        let mut acc: i128 = 0;
        for j in 0..self.n {
            for k in 0..self.n {
                acc += xs[j] * ys[k] * self.m_entry(j, k) as i128;
            }
        }
        for l in 0..self.n {
            acc += (xs[l] * yw + xw * ys[l]) * self.b[l] as i128;
        }
        acc + xw * yw * self.c as i128
    }

    /// Cup product. Degree 2 times degree 2 lands in degree 4; degree-0
    /// classes act as scalars.
    pub fn cup(&self, x: &CohElement, y: &CohElement) -> Result<CohElement> {
        if x.coefficient != y.coefficient {
            return Err(ModelError::Usage(format!(
                "cup of classes with coefficients Z/{} and Z/{}",
                x.coefficient, y.coefficient
            )));
        }
        let coef = x.coefficient;
        match (x.degree, y.degree) {
            (0, _) => self.scale(x.coords[0], y),
            (_, 0) => self.scale(y.coords[0], x),
            (2, 2) => {
                let (xs, xw) = self.cell_values(x);
                let (ys, yw) = self.cell_values(y);
                let val = self.cup_form((&xs, xw), (&ys, yw));
                let val = match coef {
                    Modulus::Finite(t) => rem(val, t),
                    Modulus::Infinite => i64::try_from(val).expect("integral cup overflow"),
                };
                self.element(coef, 4, &[val])
            }
            (p, q) if p + q > 4 => self
                .zero(coef, p + q)
                .or_else(|_| Err(ModelError::Usage(format!("degree {} exceeds the top degree", p + q)))),
            (p, q) => {
                // H¹ = 0, so the only remaining products (1·k, k·1) vanish
                self.zero(coef, p + q)
            }
        }
    }

    /// Reduction `ρ` (requires `to | from` or `from = ∞`) or inclusion `ι`
    /// (requires `from | to`), acting on cochain values.
    pub fn coefficient_map(&self, kind: MapKind, from: Modulus, to: Modulus, x: &CohElement) -> Result<CohElement> {
        self.check_coefficient(from)?;
        self.check_coefficient(to)?;
        if x.coefficient != from {
            return Err(ModelError::Usage(format!(
                "class has coefficients Z/{} but the map starts at Z/{from}",
                x.coefficient
            )));
        }
        let factor: i128 = match (kind, from, to) {
            (MapKind::Reduce, Modulus::Infinite, _) => 1,
            (MapKind::Reduce, Modulus::Finite(f), Modulus::Finite(t)) if f % t == 0 => 1,
            (MapKind::Include, Modulus::Finite(f), Modulus::Finite(t)) if t % f == 0 => (t / f) as i128,
            _ => {
                return Err(ModelError::Usage(format!("no {kind:?} map from Z/{from} to Z/{to}")));
            }
        };
        match x.degree {
            2 => {
                let (s, m) = self.cell_values(x);
                let s: Vec<i128> = s.iter().map(|v| v * factor).collect();
                self.from_cell_values(to, &s, m * factor)
            }
            3 => {
                let coords: Vec<i64> = x.coords.iter().map(|&c| (c as i128 * factor) as i64).collect();
                let k = self.basis_orders(to, 3)?.len();
                self.element(to, 3, &coords[..k.min(coords.len())])
                    .or_else(|_| self.zero(to, 3))
            }
            _ => {
                let coords: Vec<i64> = x
                    .coords
                    .iter()
                    .map(|&c| i64::try_from(c as i128 * factor).expect("overflow"))
                    .collect();
                self.element(to, x.degree, &coords)
            }
        }
    }

    /// Bockstein `β_t: H²(-; Z/t) → H³(-; Z/t)` of the sequence
    /// `Z/t → Z/t² → Z/t`: lift, apply the cellular coboundary (`g` on the
    /// Moore cell), divide by `t`.
    pub fn bockstein(&self, x: &CohElement) -> Result<CohElement> {
        let Modulus::Finite(t) = x.coefficient else {
            return Err(ModelError::Usage("Bockstein needs finite coefficients".into()));
        };
        if x.degree != 2 {
            return Err(ModelError::Usage("Bockstein is implemented on degree 2".into()));
        }
        let (_, moore) = self.cell_values(x);
        let lifted = moore * self.g as i128;
        debug_assert_eq!(lifted % t as i128, 0);
        let val = lifted / t as i128;
        let k = self.basis_orders(x.coefficient, 3)?.len();
        let coords: Vec<i64> = if k == 0 { vec![] } else { vec![rem(val, gcd(self.g, t))] };
        self.element(x.coefficient, 3, &coords)
    }

    /// `β_r` on `H²(-; Z/2^r)`: `Σ s_i ū_i + s_w w_r ↦ s_w (g/2^r) ζ`.
    pub fn bockstein_w(&self, x: &CohElement) -> Result<CohElement> {
        let (low, _) = self.two_power_moduli()?;
        if x.coefficient != Modulus::Finite(low) || x.degree != 2 {
            return Err(ModelError::Usage(format!("β_r acts on H²(-; Z/{low})")));
        }
        self.bockstein(x)
    }

    /// Pontryagin square `P_r: H²(-; Z/2^r) → H⁴(-; Z/2^{r+1})`:
    /// `Σ s_i² a_ii + s_w² c + 2(Σ_{j<k} s_j s_k a_jk + Σ_l s_l s_w b_l)`.
    pub fn pontryagin(&self, x: &CohElement) -> Result<CohElement> {
        let (low, high) = self.two_power_moduli()?;
        if x.coefficient != Modulus::Finite(low) || x.degree != 2 {
            return Err(ModelError::Usage(format!(
                "the Pontryagin square acts on H²(-; Z/{low})"
            )));
        }
        let s: Vec<i128> = x.coords[..self.n].iter().map(|&v| v as i128).collect();
        let sw = x.coords[self.n] as i128;
        let mut val: i128 = sw * sw * self.c as i128;
        for j in 0..self.n {
            val += s[j] * s[j] * self.a[j][j] as i128;
            for k in j + 1..self.n {
                val += 2 * s[j] * s[k] * self.a[j][k] as i128;
            }
            val += 2 * s[j] * sw * self.b[j] as i128;
        }
        self.element(Modulus::Finite(high), 4, &[rem(val, high)])
    }

    /// All elements of a finite slot, in lexicographic coordinate order.
    pub fn elements(&self, coefficient: Modulus, degree: u8) -> Result<Vec<CohElement>> {
        let orders = self.basis_orders(coefficient, degree)?;
        let mut bounds = Vec::with_capacity(orders.len());
        for m in &orders {
            match m {
                Modulus::Finite(o) => bounds.push(*o as i64),
                Modulus::Infinite => {
                    return Err(ModelError::Usage("cannot list an infinite group".into()));
                }
            }
        }
        let mut out = Vec::new();
        let mut cur = vec![0i64; bounds.len()];
        loop {
            out.push(CohElement {
                coefficient,
                degree,
                coords: cur.clone(),
            });
            let mut i = cur.len();
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < bounds[i] {
                    break;
                }
                cur[i] = 0;
            }
        }
    }

    /// An element `x ∈ H²(-; Z/2^r)` with odd `w_r`-coordinate and
    /// `P_r(x) = 2^r (mod 2^{r+1})`, if one exists (exhaustive search).
    pub fn toric_witness(&self) -> Result<Option<CohElement>> {
        let (low, _) = self.two_power_moduli()?;
        let slot = Modulus::Finite(low);
        for x in self.elements(slot, 2)? {
            if x.coords[self.n] % 2 == 0 {
                continue;
            }
            if self.pontryagin(&x)?.coords[0] == low as i64 {
                return Ok(Some(x));
            }
        }
        Ok(None)
    }

    pub fn toric_witness_exists(&self) -> Result<bool> {
        Ok(self.toric_witness()?.is_some())
    }

    /// Every diagonal entry of `A` is even (`u ∪ u ≡ 0 mod 2`).
    pub fn has_even_diagonal(&self) -> bool {
        (0..self.n).all(|j| self.a[j][j] % 2 == 0)
    }
}
