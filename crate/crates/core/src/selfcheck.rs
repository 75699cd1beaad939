//! Invariant suites shared by the `selftest` command and the acceptance run.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cellmodel::{CellModel, CohElement, MapKind};
use crate::exactalg::Modulus;
use crate::lensoracle::{
    bockstein, build_lens_complex, coboundary, cup_aw, postnikov_square, square_value, Cochain, SimplicialCohomology,
    SquareValue,
};
use crate::properiso::{check_proper_iso, compose, invert, proper_isos, ProperIso};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: u64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.cases > 0
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn merge(&mut self, other: SuiteReport) {
        self.cases += other.cases;
        self.failures.extend(other.failures);
    }
}

const EVEN_GS: [u64; 5] = [2, 4, 6, 8, 12];

fn random_model(rng: &mut ChaCha8Rng) -> CellModel {
    let g = *EVEN_GS.choose(rng).expect("nonempty");
    let n = rng.gen_range(0..=3usize);
    let a: Vec<Vec<i64>> = (0..n)
        .map(|j| (0..n).map(|k| if k >= j { rng.gen_range(-5..=5) } else { 0 }).collect())
        .collect();
    let b: Vec<i64> = (0..n).map(|_| rng.gen_range(0..g as i64)).collect();
    let c = rng.gen_range(0..2 * g as i64);
    CellModel::from_rows(n, g, a, b, c).expect("well-formed random model")
}

fn random_element(x: &CellModel, m: u64, rng: &mut ChaCha8Rng) -> CohElement {
    let k = x.cohomology_group(Modulus::Finite(m), 2).expect("supported").len();
    let coords: Vec<i64> = (0..k).map(|_| rng.gen_range(0..m as i64)).collect();
    x.element(Modulus::Finite(m), 2, &coords).expect("in range")
}

/// Checks the five defining properties of the Pontryagin square on random
/// models with `n ≤ 3` and even `g`, `per_axiom` instances each.
pub fn pontryagin_axioms(seed: u64, per_axiom: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("pontryagin-axioms");
    for _ in 0..per_axiom {
        let x = random_model(&mut rng);
        let (low, high) = x.two_power_moduli().expect("even g");
        let (fl, fh) = (Modulus::Finite(low), Modulus::Finite(high));
        let a = random_element(&x, low, &mut rng);
        let b = random_element(&x, low, &mut rng);
        let z = random_element(&x, high, &mut rng);
        let k = rng.gen_range(0..low as i64);
        let p = |e: &CohElement| x.pontryagin(e).expect("slot");
        let incl = |e: &CohElement| x.coefficient_map(MapKind::Include, fl, fh, e).expect("slot");
        let redu = |e: &CohElement| x.coefficient_map(MapKind::Reduce, fh, fl, e).expect("slot");
        let cup = |u: &CohElement, v: &CohElement| x.cup(u, v).expect("slot");

        rep.check(redu(&p(&a)) == cup(&a, &a), || {
            format!("reduction of square on {x}, {a:?}")
        });
        rep.check(p(&redu(&z)) == cup(&z, &z), || {
            format!("square of reduction on {x}, {z:?}")
        });
        let lhs = p(&x.add(&a, &b).expect("slot"));
        let rhs = x
            .add(&x.add(&p(&a), &p(&b)).expect("slot"), &incl(&cup(&a, &b)))
            .expect("slot");
        rep.check(lhs == rhs, || format!("sum formula on {x}, {a:?}, {b:?}"));
        let scaled = p(&x.scale(k, &a).expect("slot"));
        rep.check(scaled == x.scale(k * k, &p(&a)).expect("slot"), || {
            format!("scalar formula on {x}, {a:?}, k={k}")
        });
        rep.check(x.scale(2, &p(&a)).expect("slot") == incl(&cup(&a, &a)), || {
            format!("doubling formula on {x}, {a:?}")
        });
    }
    rep
}

/// All rank-one models with the given `g` and diagonal entries.
pub fn rank_one_family(g: u64, diagonal: &[i64]) -> Vec<CellModel> {
    let c_mod = if g % 2 == 0 { 2 * g } else { g } as i64;
    let mut out = Vec::new();
    for &a in diagonal {
        for b in 0..g as i64 {
            for c in 0..c_mod {
                out.push(CellModel::rank_one(g, a, b, c));
            }
        }
    }
    out
}

fn comm(phi: &ProperIso, x: &CellModel, xp: &CellModel, e: &CohElement) -> CohElement {
    phi.commutator(x, xp, e).expect("commutator on the 2-primary slot")
}

/// Commutator identities for every enumerated iso between every ordered pair
/// of rank-one models with the given `g` values and diagonal entries.
/// Additivity and vanishing are checked over whole slots; the composition
/// and inverse formulas on basis classes, with the second iso running back
/// from `X′` to `X`.
pub fn commutator_calculus(gs: &[u64], diagonal: &[i64]) -> SuiteReport {
    let mut rep = SuiteReport::new("commutator-calculus");
    for &g in gs {
        let family = rank_one_family(g, diagonal);
        let parts: Vec<SuiteReport> = family
            .par_iter()
            .map(|x| {
                let mut rep = SuiteReport::new("");
                for xp in &family {
                    let isos = proper_isos(x, xp, 1).expect("same shape");
                    if isos.is_empty() {
                        continue;
                    }
                    let back = proper_isos(xp, x, 1).expect("same shape");
                    commutator_checks(&mut rep, x, xp, &isos, &back);
                }
                rep
            })
            .collect();
        for p in parts {
            rep.merge(p);
        }
    }
    rep
}

fn commutator_checks(rep: &mut SuiteReport, x: &CellModel, xp: &CellModel, isos: &[ProperIso], back: &[ProperIso]) {
    let (low, high) = x.two_power_moduli().expect("even g");
    let (fl, fh) = (Modulus::Finite(low), Modulus::Finite(high));
    let slot = x.elements(fl, 2).expect("finite");
    let upper = x.elements(fh, 2).expect("finite");
    let basis_x = x
        .elements(fl, 2)
        .expect("finite")
        .into_iter()
        .filter(|e| e.coords.iter().sum::<i64>() == 1);
    let basis_x: Vec<CohElement> = basis_x.filter(|e| e.coords.iter().all(|&c| c <= 1)).collect();
    let basis_xp: Vec<CohElement> = basis_x
        .iter()
        .map(|e| xp.element(fl, 2, &e.coords).expect("same shape"))
        .collect();
    let zero4 = xp.zero(fh, 4).expect("slot");
    for phi in isos {
        let values: Vec<CohElement> = slot.iter().map(|e| comm(phi, x, xp, e)).collect();
        for (i, ei) in slot.iter().enumerate() {
            rep.check(xp.scale(2, &values[i]).expect("slot") == zero4, || {
                format!("2·[P, φ] ≠ 0 for {x} -> {xp}, {phi:?}, {ei:?}")
            });
            for (j, ej) in slot.iter().enumerate() {
                let sum = x.add(ei, ej).expect("slot");
                let k = slot.iter().position(|e| *e == sum).expect("closed");
                let rhs = xp.add(&values[i], &values[j]).expect("slot");
                rep.check(values[k] == rhs, || {
                    format!("additivity fails for {x} -> {xp}, {phi:?}")
                });
            }
        }
        for z in &upper {
            let r = x.coefficient_map(MapKind::Reduce, fh, fl, z).expect("slot");
            rep.check(comm(phi, x, xp, &r) == zero4, || {
                format!("[P, φ] ∘ ρ ≠ 0 for {x} -> {xp}, {phi:?}, {z:?}")
            });
        }
        // inverse formula on the basis of X′
        let inv = invert(phi);
        rep.check(
            check_proper_iso(&inv, xp, x).map(|v| v.is_empty()).unwrap_or(false),
            || format!("inverse of {phi:?} is not proper"),
        );
        for e in &basis_xp {
            let lhs = comm(&inv, xp, x, e);
            let inner = inv.apply(x, e).expect("slot");
            let rhs = inv.apply(x, &comm(phi, x, xp, &inner)).expect("slot");
            rep.check(lhs == rhs, || format!("inverse formula fails for {phi:?} on {e:?}"));
        }
        // composition with every iso running back to X
        for phi2 in back {
            let psi = compose(phi, phi2).expect("same shape");
            rep.check(
                check_proper_iso(&psi, x, x).map(|v| v.is_empty()).unwrap_or(false),
                || format!("composite of {phi:?} and {phi2:?} is not proper"),
            );
            for e in &basis_x {
                let lhs = comm(&psi, x, x, e);
                let first = phi2.apply(x, &comm(phi, x, xp, e)).expect("slot");
                let second = comm(phi2, xp, x, &phi.apply(xp, e).expect("slot"));
                let rhs = x.add(&first, &second).expect("slot");
                rep.check(lhs == rhs, || {
                    format!("composition formula fails for {phi:?}, {phi2:?} on {e:?}")
                });
            }
        }
    }
}

/// Structural and algebraic checks on triangulated lens spaces.
pub fn lens_properties(seed: u64, quick: bool) -> SuiteReport {
    let mut rep = SuiteReport::new("lens-oracle");
    let spaces: &[(u64, i64)] = if quick {
        &[(2, 1), (4, 1)]
    } else {
        &[(2, 1), (4, 1), (4, 3), (6, 1), (8, 3)]
    };
    let rounds = if quick { 2 } else { 5 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &(b, a) in spaces {
        let tag = format!("L({b};{a})");
        let k = match build_lens_complex(b, a) {
            Ok(k) => k,
            Err(e) => {
                rep.check(false, || format!("{tag}: {e}"));
                continue;
            }
        };
        rep.check(k.is_closed_pseudomanifold(), || {
            format!("{tag}: not a closed pseudomanifold")
        });
        rep.check(k.euler_characteristic() == 0, || {
            format!("{tag}: Euler characteristic ≠ 0")
        });
        let coh = match SimplicialCohomology::new(k) {
            Ok(c) => c,
            Err(e) => {
                rep.check(false, || format!("{tag}: {e}"));
                continue;
            }
        };
        rep.check(
            coh.group(3, Modulus::Infinite).ok() == Some(vec![Modulus::Infinite]),
            || format!("{tag}: top integral group is not Z"),
        );
        let r = crate::exactalg::nu2_u64(b).map(|(_, r)| r).unwrap_or(0);
        match crate::lensoracle::verify_on(&coh, b, a, r, 3.max(r)) {
            Ok(r) => rep.check(r.passed(), || format!("{tag}: {r:?}")),
            Err(e) => rep.check(false, || format!("{tag}: {e}")),
        }
        let k = coh.complex();
        for s in 1..=3u32 {
            let m = 1i64 << s;
            let fm = Modulus::Finite(m as u64);
            let Ok(gens) = coh.generators(1, fm) else {
                rep.check(false, || format!("{tag}: no generators mod {m}"));
                continue;
            };
            let x = &gens[0];
            let y = bockstein(k, x, fm).expect("cocycle");
            let yy = bockstein(k, &y, fm).expect("cocycle");
            rep.check(coh.class(&yy).map(|c| c.is_zero()).unwrap_or(false), || {
                format!("{tag}: β∘β ≠ 0 mod {m}")
            });
            let p = postnikov_square(&coh, x).expect("degree one");
            rep.check(square_value(&p) != SquareValue::Other, || {
                format!("{tag}: square has order > 2")
            });
            for _ in 0..rounds {
                let noise: Vec<i64> = (0..k.count(0)).map(|_| rng.gen_range(0..m)).collect();
                let c = coboundary(k, &Cochain::new(k, 0, fm, &noise).expect("sizes")).expect("cochain");
                let x2 = x.add(&c).expect("same slot");
                let y2 = bockstein(k, &x2, fm).expect("cocycle");
                let same = coh.class(&cup_aw(k, x, &y).expect("cup")).ok()
                    == coh.class(&cup_aw(k, &x2, &y2).expect("cup")).ok();
                rep.check(same, || format!("{tag}: cup product does not descend mod {m}"));
            }
            if b <= 8 {
                let order = coh.group(1, fm).map(|g| g[0].value().unwrap_or(1)).unwrap_or(1) as i64;
                let classes: Vec<Cochain> = (0..order).map(|i| x.scale(i).expect("scale")).collect();
                let squares: Vec<_> = classes.iter().map(|c| postnikov_square(&coh, c).expect("sq")).collect();
                let top = num_bigint::BigInt::from(2 * m);
                for i in 0..classes.len() {
                    for j in 0..classes.len() {
                        let sum = postnikov_square(&coh, &classes[i].add(&classes[j]).expect("add")).expect("sq");
                        let expect: Vec<_> = squares[i]
                            .coords
                            .iter()
                            .zip(&squares[j].coords)
                            .map(|(u, v)| (u + v) % &top)
                            .collect();
                        rep.check(sum.coords == expect, || format!("{tag}: square not additive mod {m}"));
                    }
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        let p = pontryagin_axioms(1, 40);
        assert!(p.passed(), "{:?}", p.failures);
        assert_eq!(p.cases, 200);
        let c = commutator_calculus(&[2], &[0, 2, -2]);
        assert!(c.passed(), "{:?}", c.failures);
    }

    #[test]
    fn suites_are_deterministic() {
        assert_eq!(pontryagin_axioms(7, 20), pontryagin_axioms(7, 20));
    }
}
