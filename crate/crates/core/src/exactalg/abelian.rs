use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{smith_normal_form, IntMatrix, Modulus};

/// The finitely generated abelian group `Z^k / span(relations)`, split into
/// cyclic summands.
#[derive(Clone, Debug)]
pub struct QuotientGroup {
    ambient: usize,
    // coordinate change: component i of an element x is (u x)_i
    u: IntMatrix,
    // (row of u, modulus) for each nontrivial cyclic summand
    components: Vec<(usize, Modulus)>,
    generators: Vec<Vec<BigInt>>,
}

impl QuotientGroup {
    /// `relations` has one column per relation and `ambient` rows.
    pub fn new(relations: &IntMatrix) -> Self {
        let ambient = relations.rows();
        let snf = smith_normal_form(relations);
        let diag = snf.diagonal();
        let mut components = Vec::new();
        let mut generators = Vec::new();
        for i in 0..ambient {
            let d = diag.get(i).cloned().unwrap_or_else(BigInt::zero);
            if d.is_one() {
                continue;
            }
            let order = if d.is_zero() {
                Modulus::Infinite
            } else {
                Modulus::from_bigint(&d)
            };
            components.push((i, order));
            generators.push((0..ambient).map(|r| snf.u_inv.get(r, i).clone()).collect());
        }
        QuotientGroup {
            ambient,
            u: snf.u,
            components,
            generators,
        }
    }

    pub fn orders(&self) -> Vec<Modulus> {
        self.components.iter().map(|&(_, m)| m).collect()
    }

    /// Representatives in `Z^k` of the cyclic generators, in order.
    pub fn generators(&self) -> &[Vec<BigInt>] {
        &self.generators
    }

    /// Coordinates of `x` along the cyclic summands, reduced into `[0, order)`.
    pub fn coordinates(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.ambient, "element has the wrong length");
        let y = self.u.mul_vec(x).expect("length checked");
        self.components
            .iter()
            .map(|&(i, m)| match m {
                Modulus::Infinite => y[i].clone(),
                Modulus::Finite(d) => y[i].mod_floor(&BigInt::from(d)),
            })
            .collect()
    }

    pub fn is_zero(&self, x: &[BigInt]) -> bool {
        self.coordinates(x).iter().all(Zero::is_zero)
    }

    /// Order of the class of `x`; `None` when it has infinite order.
    pub fn order_of(&self, x: &[BigInt]) -> Option<BigInt> {
        let mut acc = BigInt::one();
        for (c, &(_, m)) in self.coordinates(x).iter().zip(&self.components) {
            match m {
                Modulus::Infinite => {
                    if !c.is_zero() {
                        return None;
                    }
                }
                Modulus::Finite(d) => {
                    let d = BigInt::from(d);
                    let o = &d / c.gcd(&d);
                    acc = acc.lcm(&o);
                }
            }
        }
        Some(acc)
    }
}
