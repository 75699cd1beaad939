//! Proper isomorphisms between cell models and the homotopy classification.
//!
//! A [`ProperIso`] `φ: X′ ⇢ X` is a family of graded ring isomorphisms
//! `φ_t: H*(X; Z/t) → H*(X′; Z/t)` for `t ∈ {∞, 2g, g}` commuting with the
//! reductions between them. It is recorded by its parameters:
//!
//! * `S` with `φ_∞(u_i) = Σ_j S_ji u′_j`, and `eps` with `φ(v) = eps·v′`;
//! * `t`, `d` with `φ_g(w) = t·w′ + Σ d_j ū′_j`;
//! * `tprime`, `e` with `φ_{2g}(ι(w)) = tprime·ι(w′) + Σ e_j μ′_j`.
//!
//! The maps on every other supported coefficient ring are the reductions of
//! these. Degree-3 components are fixed to the identity.

use std::collections::HashMap;
use std::fmt;
use std::ops::ControlFlow;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cellmodel::{gcd, rem, CellModel, CohElement, MapKind, ModelError};
use crate::exactalg::{smith_normal_form, IntMatrix, Modulus};

type Result<T> = std::result::Result<T, ModelError>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProperIso {
    pub g: u64,
    #[serde(rename = "S")]
    pub s: Vec<Vec<i64>>,
    pub eps: i64,
    pub t: i64,
    pub d: Vec<i64>,
    pub tprime: i64,
    pub e: Vec<i64>,
}

/// A failed condition reported by [`check_proper_iso`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IsoViolation {
    NotUnimodular,
    EpsNotUnit,
    TNotUnit,
    TprimeNotUnit,
    TprimeIncongruent,
    EIncongruent {
        index: usize,
    },
    IntegralForm {
        i: usize,
        j: usize,
    },
    Cup {
        coefficient: Modulus,
        left: String,
        right: String,
    },
    Reduction {
        from: Modulus,
        to: Modulus,
        basis: String,
    },
}

impl fmt::Display for IsoViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsoViolation::NotUnimodular => write!(f, "S is not invertible over Z"),
            IsoViolation::EpsNotUnit => write!(f, "eps is not ±1"),
            IsoViolation::TNotUnit => write!(f, "t is not a unit mod g"),
            IsoViolation::TprimeNotUnit => write!(f, "tprime is not a unit mod g"),
            IsoViolation::TprimeIncongruent => write!(f, "tprime and t disagree after reduction"),
            IsoViolation::EIncongruent { index } => {
                write!(f, "e_{} is not an even lift of 2·d_{}", index + 1, index + 1)
            }
            IsoViolation::IntegralForm { i, j } => {
                write!(f, "integral form differs at ({}, {})", i + 1, j + 1)
            }
            IsoViolation::Cup {
                coefficient,
                left,
                right,
            } => {
                write!(f, "cup product of ({left}, {right}) not preserved mod {coefficient}")
            }
            IsoViolation::Reduction { from, to, basis } => {
                write!(f, "reduction Z/{from} -> Z/{to} does not commute on {basis}")
            }
        }
    }
}

/// Result of [`decide`]. The witness maps `H(X) → H(X′)`; it has zero
/// commutator with the Pontryagin square when `homotopy_equivalent` holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub properly_isomorphic: bool,
    pub homotopy_equivalent: bool,
    pub complete: bool,
    pub witness: Option<ProperIso>,
}

/// Partition of a family into proper-isomorphism classes and, inside each,
/// homotopy classes. Classes hold indices into `models`, listed in model
/// order; the first entry of each class is its smallest model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub models: Vec<CellModel>,
    pub pi_classes: Vec<Vec<usize>>,
    pub he_classes: Vec<Vec<usize>>,
    pub h_values: Vec<usize>,
    pub complete: bool,
    pub defects: Vec<String>,
}

fn units(g: u64) -> Vec<i64> {
    if g == 1 {
        return vec![1];
    }
    (1..g as i64).filter(|&k| gcd(k as u64, g) == 1).collect()
}

fn unit_rem(x: i128, g: u64) -> i64 {
    if g == 1 {
        1
    } else {
        rem(x, g)
    }
}

fn is_unit(x: i64, g: u64) -> bool {
    gcd(x.rem_euclid(g as i64) as u64, g) == 1
}

fn inverse_unit(x: i64, g: u64) -> i64 {
    if g == 1 {
        return 1;
    }
    let x = x.rem_euclid(g as i64);
    (1..g as i64)
        .find(|&y| (x as i128 * y as i128).rem_euclid(g as i128) == 1)
        .expect("unit")
}

fn mat_i64(m: &IntMatrix) -> Vec<Vec<i64>> {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| m.get(i, j).to_i64().expect("small entry"))
                .collect()
        })
        .collect()
}

fn int_matrix(s: &[Vec<i64>]) -> IntMatrix {
    IntMatrix::from_rows(s)
}

/// Inverse of a unimodular matrix: with `u s v = I`, `s⁻¹ = v u`.
fn unimodular_inverse(s: &[Vec<i64>]) -> Vec<Vec<i64>> {
    if s.is_empty() {
        return vec![];
    }
    let snf = smith_normal_form(&int_matrix(s));
    mat_i64(&(&snf.v * &snf.u))
}

fn mat_vec(s: &[Vec<i64>], x: &[i128]) -> Vec<i128> {
    s.iter()
        .map(|row| row.iter().zip(x).map(|(&a, &b)| a as i128 * b).sum())
        .collect()
}

fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

impl ProperIso {
    pub fn identity(n: usize, g: u64) -> Self {
        ProperIso {
            g,
            s: (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect(),
            eps: 1,
            t: 1,
            d: vec![0; n],
            tprime: 1,
            e: vec![0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    fn check_shape(&self, x: &CellModel) -> Result<()> {
        let n = self.n();
        if x.n() != n
            || x.g() != self.g
            || self.s.iter().any(|r| r.len() != n)
            || self.d.len() != n
            || self.e.len() != n
        {
            return Err(ModelError::Usage(format!(
                "iso of shape (n={n}, g={}) does not fit model {x}",
                self.g
            )));
        }
        Ok(())
    }

    /// `φ_m(x)` for a class of `X`, expressed in the basis of `X′`.
    pub fn apply(&self, target: &CellModel, x: &CohElement) -> Result<CohElement> {
        self.check_shape(target)?;
        let n = self.n();
        match x.degree {
            2 => {
                let s: Vec<i128> = x.coords[..n].iter().map(|&c| c as i128).collect();
                let mut img = mat_vec(&self.s, &s);
                let mut torsion = None;
                if let Modulus::Finite(m) = x.coefficient {
                    if x.coords.len() > n {
                        let sw = x.coords[n] as i128;
                        // Z/m with m | g factors through phi_g, otherwise through phi_2g
                        let (shift, lead) = if self.g % m == 0 {
                            (&self.d, self.t)
                        } else {
                            (&self.e, self.tprime)
                        };
                        for (v, &k) in img.iter_mut().zip(shift) {
                            *v += k as i128 * sw;
                        }
                        torsion = Some(rem(lead as i128 * sw, gcd(self.g, m)));
                    }
                }
                let mut out: Vec<i64> = img
                    .into_iter()
                    .map(|v| i64::try_from(v).expect("integral coordinate overflow"))
                    .collect();
                out.extend(torsion);
                target.element(x.coefficient, 2, &out)
            }
            4 => target.scale(self.eps, x),
            _ => target.element(x.coefficient, x.degree, &x.coords),
        }
    }

    /// `[P_r, φ](x) = P_r(φ_{2^r} x) − φ_{2^{r+1}}(P_r x)` in `H⁴(X′; Z/2^{r+1})`.
    pub fn commutator(&self, x_model: &CellModel, target: &CellModel, x: &CohElement) -> Result<CohElement> {
        let lhs = target.pontryagin(&self.apply(target, x)?)?;
        let rhs = self.apply(target, &x_model.pontryagin(x)?)?;
        target.add(&lhs, &target.neg(&rhs)?)
    }
}

fn basis_name(x: &CellModel, m: Modulus, k: usize) -> String {
    let torsion_only_at_2g = matches!(m, Modulus::Finite(t) if x.g() % t != 0);
    match (k < x.n(), torsion_only_at_2g) {
        (true, false) => format!("u{}", k + 1),
        (true, true) => format!("mu{}", k + 1),
        (false, false) => "w".into(),
        (false, true) => "iota_w".into(),
    }
}

fn basis(x: &CellModel, m: Modulus) -> Result<Vec<CohElement>> {
    let k = x.cohomology_group(m, 2)?.len();
    (0..k)
        .map(|i| {
            let mut c = vec![0; k];
            c[i] = 1;
            x.element(m, 2, &c)
        })
        .collect()
}

/// Verifies every defining condition of a proper isomorphism `X′ ⇢ X` by
/// evaluating cup products and reductions on basis classes. An empty list
/// means the iso passes.
pub fn check_proper_iso(iso: &ProperIso, x: &CellModel, xp: &CellModel) -> Result<Vec<IsoViolation>> {
    if !x.same_shape(xp) {
        return Err(ModelError::Usage(format!("models {x} and {xp} have different (n, g)")));
    }
    iso.check_shape(x)?;
    let (n, g) = (x.n(), x.g());
    let mut out = Vec::new();

    if n > 0 {
        let det = int_matrix(&iso.s).determinant().expect("square");
        if det.to_i64().map(|v| v.abs()) != Some(1) {
            out.push(IsoViolation::NotUnimodular);
            // nothing below is meaningful without an invertible S
            return Ok(out);
        }
    }
    if iso.eps.abs() != 1 {
        out.push(IsoViolation::EpsNotUnit);
    }
    if !is_unit(iso.t, g) {
        out.push(IsoViolation::TNotUnit);
    }
    if !is_unit(iso.tprime, g) {
        out.push(IsoViolation::TprimeNotUnit);
    }
    let half = if g % 2 == 0 { g / 2 } else { g };
    if (iso.tprime - iso.t).rem_euclid(half as i64) != 0 {
        out.push(IsoViolation::TprimeIncongruent);
    }
    for i in 0..n {
        let ok_mod_g = (iso.e[i] - 2 * iso.d[i]).rem_euclid(g as i64) == 0;
        if !ok_mod_g || iso.e[i].rem_euclid(2) != 0 {
            out.push(IsoViolation::EIncongruent { index: i });
        }
    }

    // integral: S^T M′ S = eps M
    let m = x.symmetric_matrix();
    let mp = xp.symmetric_matrix();
    let s = int_matrix(&iso.s);
    let lhs = &(&s.transpose() * &mp) * &s;
    let rhs = m.scale(&iso.eps.into());
    for i in 0..n {
        for j in i..n {
            if lhs.get(i, j) != rhs.get(i, j) {
                out.push(IsoViolation::IntegralForm { i, j });
            }
        }
    }

    for modulus in [Modulus::Finite(g), Modulus::Finite(2 * g)] {
        let b = basis(x, modulus)?;
        for i in 0..b.len() {
            for j in i..b.len() {
                let lhs = xp.cup(&iso.apply(xp, &b[i])?, &iso.apply(xp, &b[j])?)?;
                let rhs = iso.apply(xp, &x.cup(&b[i], &b[j])?)?;
                if lhs != rhs {
                    out.push(IsoViolation::Cup {
                        coefficient: modulus,
                        left: basis_name(x, modulus, i),
                        right: basis_name(x, modulus, j),
                    });
                }
            }
        }
    }

    let pairs = [
        (Modulus::Infinite, Modulus::Finite(g)),
        (Modulus::Infinite, Modulus::Finite(2 * g)),
        (Modulus::Finite(2 * g), Modulus::Finite(g)),
    ];
    for (from, to) in pairs {
        for (k, el) in basis(x, from)?.iter().enumerate() {
            let down_then_map = iso.apply(xp, &x.coefficient_map(MapKind::Reduce, from, to, el)?)?;
            let map_then_down = xp.coefficient_map(MapKind::Reduce, from, to, &iso.apply(xp, el)?)?;
            if down_then_map != map_then_down {
                out.push(IsoViolation::Reduction {
                    from,
                    to,
                    basis: basis_name(x, from, k),
                });
            }
        }
    }
    Ok(out)
}

/// Candidate columns for `S`: `±1` when `n = 1`, otherwise all nonzero
/// vectors with entries in `[-bound, bound]`, small ones first.
fn column_candidates(n: usize, bound: u32) -> Vec<Vec<i64>> {
    if n == 1 {
        return vec![vec![1], vec![-1]];
    }
    let b = bound as i64;
    let mut out = Vec::new();
    let mut cur = vec![-b; n];
    loop {
        if cur.iter().any(|&v| v != 0) {
            out.push(cur.clone());
        }
        let mut i = n;
        loop {
            if i == 0 {
                out.sort_by_key(|v| {
                    (
                        v.iter().map(|x| x.abs()).sum::<i64>(),
                        v.iter().map(|x| -x).collect::<Vec<_>>(),
                    )
                });
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] <= b {
                break;
            }
            cur[i] = -b;
        }
    }
}

/// Every choice of one entry per list, in lexicographic order.
fn cartesian(lists: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(lists.len())];
    for list in lists {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                list.iter().map(move |&x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

fn bilinear(u: &[i64], mp: &[Vec<i64>], v: &[i64]) -> i128 {
    let mut acc = 0i128;
    for j in 0..u.len() {
        for k in 0..v.len() {
            acc += u[j] as i128 * mp[j][k] as i128 * v[k] as i128;
        }
    }
    acc
}

/// Backtracking over columns of `S` subject to `S^T M′ S = eps M`.
fn integral_parts(
    x: &CellModel,
    xp: &CellModel,
    bound: u32,
    visit: &mut dyn FnMut(&[Vec<i64>], i64) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let n = x.n();
    let m: Vec<Vec<i64>> = (0..n).map(|j| (0..n).map(|k| x.m_entry(j, k)).collect()).collect();
    let mp: Vec<Vec<i64>> = (0..n).map(|j| (0..n).map(|k| xp.m_entry(j, k)).collect()).collect();
    let cands = column_candidates(n, bound);
    for eps in [1i64, -1] {
        let mut cols: Vec<Vec<i64>> = Vec::with_capacity(n);
        fn rec(
            i: usize,
            n: usize,
            eps: i64,
            m: &[Vec<i64>],
            mp: &[Vec<i64>],
            cands: &[Vec<i64>],
            cols: &mut Vec<Vec<i64>>,
            visit: &mut dyn FnMut(&[Vec<i64>], i64) -> ControlFlow<()>,
        ) -> ControlFlow<()> {
            if i == n {
                let s: Vec<Vec<i64>> = (0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect();
                if n > 0 {
                    let det = int_matrix(&s).determinant().expect("square");
                    if det.to_i64().map(|v| v.abs()) != Some(1) {
                        return ControlFlow::Continue(());
                    }
                }
                return visit(&s, eps);
            }
            for c in cands {
                let fits = (0..i).all(|j| bilinear(c, mp, &cols[j]) == (eps * m[i][j]) as i128)
                    && bilinear(c, mp, c) == (eps * m[i][i]) as i128;
                if !fits {
                    continue;
                }
                cols.push(c.clone());
                let flow = rec(i + 1, n, eps, m, mp, cands, cols, visit);
                cols.pop();
                flow?;
            }
            ControlFlow::Continue(())
        }
        rec(0, n, eps, &m, &mp, &cands, &mut cols, visit)?;
    }
    ControlFlow::Continue(())
}

/// Calls `visit` on every proper isomorphism `X′ ⇢ X` whose `S` has entries
/// bounded by `bound` (for `n ≤ 1` the search is exhaustive regardless).
/// The order is deterministic. Residue conditions are pruned with closed
/// formulas; each survivor is re-verified by [`check_proper_iso`].
pub fn enumerate_proper_isos(
    x: &CellModel,
    xp: &CellModel,
    bound: u32,
    mut visit: impl FnMut(ProperIso) -> ControlFlow<()>,
) -> Result<()> {
    if !x.same_shape(xp) {
        return Err(ModelError::Usage(format!("models {x} and {xp} have different (n, g)")));
    }
    let (n, g) = (x.n(), x.g());
    let g2 = 2 * g;
    let mp: Vec<Vec<i64>> = (0..n).map(|j| (0..n).map(|k| xp.m_entry(j, k)).collect()).collect();
    let bp: Vec<i128> = xp.b().iter().map(|&v| v as i128).collect();
    let (b, c, cp) = (x.b(), x.c() as i128, xp.c() as i128);
    let unit_list = units(g);
    let half = if g % 2 == 0 { g / 2 } else { g };
    let mut failure: Option<ModelError> = None;

    let _ = integral_parts(x, xp, bound, &mut |s, eps| {
        // S^T b′ and S^T M′ (columns of S paired against M′)
        let st_bp: Vec<i128> = (0..n).map(|i| (0..n).map(|j| s[j][i] as i128 * bp[j]).sum()).collect();
        let st_mp: Vec<Vec<i128>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| (0..n).map(|j| s[j][i] as i128 * mp[j][k] as i128).sum())
                    .collect()
            })
            .collect();
        for &t in &unit_list {
            let mut d = vec![0i64; n];
            loop {
                let dd: Vec<i128> = d.iter().map(|&v| v as i128).collect();
                let cross_ok = (0..n).all(|i| {
                    let lhs = t as i128 * st_bp[i] + (0..n).map(|k| st_mp[i][k] * dd[k]).sum::<i128>();
                    (lhs - eps as i128 * b[i] as i128).rem_euclid(g as i128) == 0
                });
                let db: i128 = dd.iter().zip(&bp).map(|(a, b)| a * b).sum();
                let dmd = bilinear(&d, &mp, &d);
                let square = t as i128 * t as i128 * cp + 2 * t as i128 * db + dmd;
                if cross_ok && (square - eps as i128 * c).rem_euclid(g as i128) == 0 {
                    for tp in unit_list
                        .iter()
                        .copied()
                        .filter(|&u| (u - t).rem_euclid(half as i64) == 0)
                    {
                        let lifts: Vec<Vec<i64>> = d
                            .iter()
                            .map(|&di| {
                                let base = (2 * di).rem_euclid(g as i64);
                                [base, base + g as i64].into_iter().filter(|v| v % 2 == 0).collect()
                            })
                            .collect();
                        for e in cartesian(&lifts) {
                            let ee: Vec<i128> = e.iter().map(|&v| v as i128).collect();
                            let cross2 = (0..n).all(|i| {
                                let lhs = 2 * tp as i128 * st_bp[i] + (0..n).map(|k| st_mp[i][k] * ee[k]).sum::<i128>();
                                (lhs - 2 * eps as i128 * b[i] as i128).rem_euclid(g2 as i128) == 0
                            });
                            let eb: i128 = ee.iter().zip(&bp).map(|(a, b)| a * b).sum();
                            let sq2 = 4 * tp as i128 * tp as i128 * cp + 4 * tp as i128 * eb + bilinear(&e, &mp, &e);
                            if !cross2 || (sq2 - 4 * eps as i128 * c).rem_euclid(g2 as i128) != 0 {
                                continue;
                            }
                            let iso = ProperIso {
                                g,
                                s: s.to_vec(),
                                eps,
                                t,
                                d: d.clone(),
                                tprime: tp,
                                e,
                            };
                            match check_proper_iso(&iso, x, xp) {
                                Ok(v) if v.is_empty() => visit(iso)?,
                                Ok(v) => {
                                    failure = Some(ModelError::Invalid(format!(
                                        "enumerated iso fails verification: {}",
                                        v[0]
                                    )));
                                    return ControlFlow::Break(());
                                }
                                Err(err) => {
                                    failure = Some(err);
                                    return ControlFlow::Break(());
                                }
                            }
                        }
                    }
                }
                // advance d over (Z/g)^n
                let mut i = n;
                let mut done = true;
                while i > 0 {
                    i -= 1;
                    d[i] += 1;
                    if (d[i] as u64) < g {
                        done = false;
                        break;
                    }
                    d[i] = 0;
                }
                if done {
                    break;
                }
            }
        }
        ControlFlow::Continue(())
    });
    match failure {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

/// All enumerated isomorphisms, collected.
pub fn proper_isos(x: &CellModel, xp: &CellModel, bound: u32) -> Result<Vec<ProperIso>> {
    let mut out = Vec::new();
    enumerate_proper_isos(x, xp, bound, |iso| {
        out.push(iso);
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// `φ ∘ φ′` for `φ: X′ ⇢ X` and `φ′: X″ ⇢ X′`, mapping `H(X) → H(X″)`.
pub fn compose(phi: &ProperIso, phi_prime: &ProperIso) -> Result<ProperIso> {
    let n = phi.n();
    if phi_prime.n() != n || phi_prime.g != phi.g {
        return Err(ModelError::Usage("composing isos of different shapes".into()));
    }
    let g = phi.g;
    let s = mat_mul(&phi_prime.s, &phi.s);
    let mix = |outer: &[i64], lead: i64, inner: &[i64], modulus: u64| -> Vec<i64> {
        let sd = mat_vec(&phi_prime.s, &inner.iter().map(|&v| v as i128).collect::<Vec<_>>());
        (0..n)
            .map(|i| rem(lead as i128 * outer[i] as i128 + sd[i], modulus))
            .collect()
    };
    Ok(ProperIso {
        g,
        s,
        eps: phi.eps * phi_prime.eps,
        t: unit_rem(phi.t as i128 * phi_prime.t as i128, g),
        d: mix(&phi_prime.d, phi.t, &phi.d, g),
        tprime: unit_rem(phi.tprime as i128 * phi_prime.tprime as i128, g),
        e: mix(&phi_prime.e, phi.tprime, &phi.e, 2 * g),
    })
}

/// Componentwise inverse `X ⇢ X′`.
pub fn invert(phi: &ProperIso) -> ProperIso {
    let g = phi.g;
    let s_inv = unimodular_inverse(&phi.s);
    let t_inv = inverse_unit(phi.t, g);
    let tp_inv = inverse_unit(phi.tprime, g);
    let back = |v: &[i64], lead: i64, modulus: u64| -> Vec<i64> {
        let sv = mat_vec(&s_inv, &v.iter().map(|&x| x as i128).collect::<Vec<_>>());
        sv.iter().map(|&x| rem(-(lead as i128) * x, modulus)).collect()
    };
    ProperIso {
        g,
        eps: phi.eps,
        t: unit_rem(t_inv as i128, g),
        d: back(&phi.d, t_inv, g),
        tprime: unit_rem(tp_inv as i128, g),
        e: back(&phi.e, tp_inv, 2 * g),
        s: s_inv,
    }
}

/// `[P_r, φ](w_r)` from the closed formula: `P_r(t·w′ + Σ d_i ū′_i) − eps·c`.
pub fn commutator_on_w(x: &CellModel, xp: &CellModel, iso: &ProperIso) -> Result<u64> {
    let (low, high) = x.two_power_moduli()?;
    if !x.same_shape(xp) {
        return Err(ModelError::Usage(format!("models {x} and {xp} have different (n, g)")));
    }
    iso.check_shape(x)?;
    let mut coords: Vec<i64> = iso.d.clone();
    coords.push(iso.t);
    let image = xp.element(Modulus::Finite(low), 2, &coords)?;
    let p = xp.pontryagin(&image)?.coords[0] as i128;
    Ok(rem(p - iso.eps as i128 * x.c() as i128, high) as u64)
}

/// Decides proper isomorphism and homotopy equivalence of `X` and `X′`.
pub fn decide(x: &CellModel, xp: &CellModel, bound: u32) -> Result<Verdict> {
    if !x.same_shape(xp) {
        return Err(ModelError::Usage(format!("models {x} and {xp} have different (n, g)")));
    }
    let even = x.g() % 2 == 0;
    let mut first: Option<ProperIso> = None;
    let mut he: Option<ProperIso> = None;
    let mut failure = None;
    enumerate_proper_isos(x, xp, bound, |iso| {
        let zero = if even {
            match commutator_on_w(x, xp, &iso) {
                Ok(v) => v == 0,
                Err(err) => {
                    failure = Some(err);
                    return ControlFlow::Break(());
                }
            }
        } else {
            true
        };
        if zero {
            he = Some(iso);
            return ControlFlow::Break(());
        }
        first.get_or_insert(iso);
        ControlFlow::Continue(())
    })?;
    if let Some(err) = failure {
        return Err(err);
    }
    let homotopy_equivalent = he.is_some();
    let witness = he.or(first);
    Ok(Verdict {
        properly_isomorphic: witness.is_some(),
        homotopy_equivalent,
        complete: x.n() <= 1 || homotopy_equivalent,
        witness,
    })
}

/// Classifies a family up to proper isomorphism and homotopy equivalence.
///
/// Models are processed in sorted order and compared against the current
/// class representatives only, which suffices because both relations are
/// equivalence relations. Comparisons against representatives run in
/// parallel; the first match in class order wins, so the result does not
/// depend on scheduling. Violations of `h = 1` (odd `g`) or `h ≤ 2` are
/// recorded in `defects`.
pub fn classify(family: &[CellModel], bound: u32) -> Result<ClassificationReport> {
    if let Some(first) = family.first() {
        if let Some(bad) = family.iter().find(|m| !m.same_shape(first)) {
            return Err(ModelError::Usage(format!("family mixes shapes: {first} and {bad}")));
        }
    }
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by(|&i, &j| family[i].cmp(&family[j]).then(i.cmp(&j)));

    // pi_classes[k] = members; he_of_pi[k] = indices into he_classes
    let mut pi_classes: Vec<Vec<usize>> = Vec::new();
    let mut he_classes: Vec<Vec<usize>> = Vec::new();
    let mut he_of_pi: Vec<Vec<usize>> = Vec::new();
    let mut complete = true;
    let mut seen: HashMap<&CellModel, (usize, usize)> = HashMap::new();

    for &i in &order {
        let model = &family[i];
        if let Some(&(pk, hk)) = seen.get(model) {
            pi_classes[pk].push(i);
            he_classes[hk].push(i);
            continue;
        }
        let pi_hit = pi_classes
            .par_iter()
            .enumerate()
            .map(|(k, class)| decide(&family[class[0]], model, bound).map(|v| (k, v)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .find(|(_, v)| {
                complete &= v.complete;
                v.properly_isomorphic
            });
        let (pk, hk) = match pi_hit {
            None => {
                pi_classes.push(vec![i]);
                he_classes.push(vec![i]);
                he_of_pi.push(vec![he_classes.len() - 1]);
                (pi_classes.len() - 1, he_classes.len() - 1)
            }
            Some((pk, verdict)) => {
                pi_classes[pk].push(i);
                let he_hit = if verdict.homotopy_equivalent {
                    Some(he_of_pi[pk][0])
                } else {
                    let rest = &he_of_pi[pk][1..];
                    let verdicts = rest
                        .par_iter()
                        .map(|&hk| decide(&family[he_classes[hk][0]], model, bound).map(|v| (hk, v)))
                        .collect::<Result<Vec<_>>>()?;
                    verdicts
                        .into_iter()
                        .find(|(_, v)| {
                            complete &= v.complete;
                            v.homotopy_equivalent
                        })
                        .map(|(hk, _)| hk)
                };
                let hk = match he_hit {
                    Some(hk) => {
                        he_classes[hk].push(i);
                        hk
                    }
                    None => {
                        he_classes.push(vec![i]);
                        he_of_pi[pk].push(he_classes.len() - 1);
                        he_classes.len() - 1
                    }
                };
                (pk, hk)
            }
        };
        seen.insert(model, (pk, hk));
    }

    let h_values: Vec<usize> = he_of_pi.iter().map(|v| v.len()).collect();
    let mut defects = Vec::new();
    if let Some(first) = family.first() {
        let odd = first.g() % 2 == 1;
        for (k, &h) in h_values.iter().enumerate() {
            let rep = &family[pi_classes[k][0]];
            if odd && h != 1 {
                defects.push(format!("g = {} is odd but the class of {rep} has h = {h}", first.g()));
            } else if h > 2 {
                defects.push(format!("the class of {rep} has h = {h} > 2"));
            }
        }
    }
    // reorder homotopy classes to follow their proper-isomorphism classes
    let he_sorted: Vec<Vec<usize>> = he_of_pi.iter().flatten().map(|&k| he_classes[k].clone()).collect();
    Ok(ClassificationReport {
        models: family.to_vec(),
        pi_classes,
        he_classes: he_sorted,
        h_values,
        complete,
        defects,
    })
}

impl ClassificationReport {
    /// Index of the proper-isomorphism class containing model `i`.
    pub fn pi_class_of(&self, i: usize) -> Option<usize> {
        self.pi_classes.iter().position(|c| c.contains(&i))
    }

    /// Index of the homotopy class containing model `i`.
    pub fn he_class_of(&self, i: usize) -> Option<usize> {
        self.he_classes.iter().position(|c| c.contains(&i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank_one(g: u64, a: i64, b: i64, c: i64) -> CellModel {
        CellModel::rank_one(g, a, b, c)
    }

    #[test]
    fn identity_passes() {
        let x = CellModel::from_rows(2, 6, vec![vec![2, 1], vec![0, -3]], vec![1, 4], 7).unwrap();
        assert!(check_proper_iso(&ProperIso::identity(2, 6), &x, &x).unwrap().is_empty());
    }

    #[test]
    fn orientation_reversal_on_torsion_model() {
        let x = rank_one(2, 0, 0, 1);
        let mut iso = ProperIso::identity(1, 2);
        iso.eps = -1;
        assert!(check_proper_iso(&iso, &x, &x).unwrap().is_empty());
    }

    #[test]
    fn odd_counterexample_fails_at_w_squared() {
        let x = rank_one(3, 0, 0, 0);
        let xp = rank_one(3, 0, 0, 1);
        let v = check_proper_iso(&ProperIso::identity(1, 3), &x, &xp).unwrap();
        assert!(v.contains(&IsoViolation::Cup {
            coefficient: Modulus::Finite(3),
            left: "w".into(),
            right: "w".into()
        }));
        assert!(proper_isos(&x, &xp, 3).unwrap().is_empty());
        assert!(!decide(&x, &xp, 3).unwrap().properly_isomorphic);
    }

    #[test]
    fn shape_mismatch_is_usage_error() {
        let x = rank_one(2, 0, 0, 1);
        let y = rank_one(4, 0, 0, 1);
        assert!(matches!(
            check_proper_iso(&ProperIso::identity(1, 2), &x, &y),
            Err(ModelError::Usage(_))
        ));
        assert!(matches!(decide(&x, &y, 3), Err(ModelError::Usage(_))));
    }

    #[test]
    fn sixteen_self_isos() {
        let x = rank_one(2, 0, 0, 1);
        let all = proper_isos(&x, &x, 3).unwrap();
        assert_eq!(all.len(), 16);
        assert!(all.contains(&ProperIso::identity(1, 2)));
        // independent count of the parameter grid
        let mut expected = Vec::new();
        for s in [1, -1] {
            for eps in [1, -1] {
                for d in 0..2 {
                    for e in [2 * d, 2 * d + 2] {
                        expected.push(ProperIso {
                            g: 2,
                            s: vec![vec![s]],
                            eps,
                            t: 1,
                            d: vec![d],
                            tprime: 1,
                            e: vec![e % 4],
                        });
                    }
                }
            }
        }
        for iso in &expected {
            assert!(all.contains(iso), "{iso:?}");
        }
        // inversion permutes the set
        let mut inverses: Vec<ProperIso> = all.iter().map(invert).collect();
        inverses.sort_by_key(|i| format!("{i:?}"));
        let mut sorted = all.clone();
        sorted.sort_by_key(|i| format!("{i:?}"));
        assert_eq!(inverses, sorted);
    }

    #[test]
    fn commutator_examples() {
        let x = rank_one(2, 0, 0, 1);
        let xp = rank_one(2, 0, 0, 3);
        let id = ProperIso::identity(1, 2);
        assert_eq!(commutator_on_w(&x, &xp, &id).unwrap(), 2);
        assert_eq!(commutator_on_w(&x, &x, &id).unwrap(), 0);
        let mut shifted = id.clone();
        shifted.d = vec![1];
        shifted.e = vec![2];
        assert_eq!(commutator_on_w(&x, &xp, &shifted).unwrap(), 2);
        let odd = rank_one(3, 0, 0, 0);
        assert!(matches!(
            commutator_on_w(&odd, &odd, &ProperIso::identity(1, 3)),
            Err(ModelError::Domain(_))
        ));
    }

    #[test]
    fn closed_commutator_matches_generic() {
        for (x, xp) in [
            (rank_one(2, 0, 0, 1), rank_one(2, 0, 0, 3)),
            (rank_one(4, 2, 1, 3), rank_one(4, 2, 1, 3)),
        ] {
            let low = x.two_power_moduli().unwrap().0;
            let w = x.w(Modulus::Finite(low)).unwrap();
            for iso in proper_isos(&x, &xp, 3).unwrap() {
                let generic = iso.commutator(&x, &xp, &w).unwrap().coords[0] as u64;
                assert_eq!(generic, commutator_on_w(&x, &xp, &iso).unwrap());
            }
        }
    }

    #[test]
    fn orientation_reversal_makes_c1_and_c3_equivalent() {
        // v ↦ -v' turns P(w') = 3 into -1 = 3 (mod 4), so the commutator vanishes
        let x = rank_one(2, 0, 0, 1);
        let xp = rank_one(2, 0, 0, 3);
        let verdict = decide(&x, &xp, 3).unwrap();
        assert!(verdict.properly_isomorphic && verdict.homotopy_equivalent && verdict.complete);
        let w = verdict.witness.unwrap();
        assert_eq!(w.eps, -1);
        let comms: Vec<u64> = proper_isos(&x, &xp, 3)
            .unwrap()
            .iter()
            .map(|i| commutator_on_w(&x, &xp, i).unwrap())
            .collect();
        assert_eq!(comms.len(), 16);
        assert_eq!(comms.iter().filter(|&&c| c == 0).count(), 8);
    }

    #[test]
    fn compose_and_invert_roundtrip() {
        let x = rank_one(4, 2, 1, 3);
        let all = proper_isos(&x, &x, 3).unwrap();
        assert!(!all.is_empty());
        let id = ProperIso::identity(1, 4);
        for phi in all.iter().take(40) {
            assert_eq!(&compose(&id, phi).unwrap(), phi);
            assert_eq!(&compose(phi, &id).unwrap(), phi);
            assert_eq!(compose(phi, &invert(phi)).unwrap(), id);
            assert_eq!(&invert(&invert(phi)), phi);
            for psi in all.iter().take(10) {
                let c = compose(phi, psi).unwrap();
                assert!(check_proper_iso(&c, &x, &x).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn compose_multiplies_s_in_reverse_order() {
        let x = CellModel::from_rows(2, 2, vec![vec![0, 1], vec![0, 0]], vec![0, 0], 0).unwrap();
        let all = proper_isos(&x, &x, 1).unwrap();
        let a = all.iter().find(|i| i.s != ProperIso::identity(2, 2).s).unwrap();
        let b = all.iter().rev().find(|i| i.s != a.s).unwrap();
        let c = compose(a, b).unwrap();
        let expected = mat_mul(&b.s, &a.s);
        assert_eq!(c.s, expected);
        // and the composite acts as b after a on integral classes
        let u = x.u(Modulus::Infinite, 0).unwrap();
        let direct = b.apply(&x, &a.apply(&x, &u).unwrap()).unwrap();
        assert_eq!(c.apply(&x, &u).unwrap(), direct);
    }

    #[test]
    fn odd_family_has_single_homotopy_type_per_class() {
        let family: Vec<CellModel> = [0, 1, -1, 2, -2].iter().map(|&a| rank_one(3, a, 0, 0)).collect();
        let r = classify(&family, 3).unwrap();
        assert!(r.h_values.iter().all(|&h| h == 1));
        assert!(r.defects.is_empty());
    }

    #[test]
    fn singleton_family() {
        let r = classify(&[rank_one(2, 0, 0, 1)], 3).unwrap();
        assert_eq!(r.pi_classes, vec![vec![0]]);
        assert_eq!(r.h_values, vec![1]);
    }

    #[test]
    fn even_family_classification_matches_pairwise_decide() {
        let mut family = Vec::new();
        for a in [0, 2, -2] {
            for b in 0..2 {
                for c in 0..4 {
                    family.push(rank_one(2, a, b, c));
                }
            }
        }
        let r = classify(&family, 3).unwrap();
        assert!(r.defects.is_empty());
        assert!(r.h_values.iter().all(|&h| h <= 2));
        assert!(r.h_values.iter().any(|&h| h == 2));
        for i in 0..family.len() {
            for j in 0..family.len() {
                let v = decide(&family[i], &family[j], 3).unwrap();
                assert_eq!(v.properly_isomorphic, r.pi_class_of(i) == r.pi_class_of(j));
                assert_eq!(v.homotopy_equivalent, r.he_class_of(i) == r.he_class_of(j));
            }
        }
        // (0,0,1) and (0,0,3) share a homotopy type
        let i1 = family.iter().position(|m| *m == rank_one(2, 0, 0, 1)).unwrap();
        let i3 = family.iter().position(|m| *m == rank_one(2, 0, 0, 3)).unwrap();
        assert_eq!(r.he_class_of(i1), r.he_class_of(i3));
    }

    #[test]
    fn iso_json_round_trip() {
        let iso = ProperIso {
            g: 4,
            s: vec![vec![-1]],
            eps: -1,
            t: 3,
            d: vec![1],
            tprime: 1,
            e: vec![6],
        };
        let text = serde_json::to_string(&iso).unwrap();
        assert!(text.contains("\"S\""));
        assert_eq!(serde_json::from_str::<ProperIso>(&text).unwrap(), iso);
    }
}
