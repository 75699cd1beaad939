//! Shrinking a cochain complex by cancelling pairs joined by a unit entry.
//!
//! If `δ(a)` has coefficient `u = ±1` on `b`, the complex splits off the
//! acyclic piece spanned by `a`, `δa` and what remains is homotopy equivalent
//! to the original. Repeating this leaves a tiny core whose coboundaries go to
//! the Smith form. Each step is recorded so that cochains can be moved
//! between the full complex and the core.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;

use super::complex::OrderedSimplicialComplex;
use super::LensError;
use crate::exactalg::IntMatrix;

#[derive(Clone, Debug, Default)]
struct SparseMat {
    rows: Vec<BTreeMap<usize, i128>>,
    cols: Vec<BTreeSet<usize>>,
}

impl SparseMat {
    fn new(rows: usize, cols: usize) -> Self {
        SparseMat {
            rows: vec![BTreeMap::new(); rows],
            cols: vec![BTreeSet::new(); cols],
        }
    }

    fn add(&mut self, r: usize, c: usize, v: i128) -> Result<(), LensError> {
        let entry = self.rows[r].entry(c).or_insert(0);
        *entry = entry
            .checked_add(v)
            .ok_or_else(|| LensError::Internal("coefficient overflow during reduction".into()))?;
        if *entry == 0 {
            self.rows[r].remove(&c);
            self.cols[c].remove(&r);
        } else {
            self.cols[c].insert(r);
        }
        Ok(())
    }

    fn clear_row(&mut self, r: usize) {
        for (c, _) in std::mem::take(&mut self.rows[r]) {
            self.cols[c].remove(&r);
        }
    }

    fn clear_col(&mut self, c: usize) {
        for r in std::mem::take(&mut self.cols[c]) {
            self.rows[r].remove(&c);
        }
    }
}

#[derive(Clone, Debug)]
struct Step {
    degree: usize,
    a: usize,
    b: usize,
    u: i128,
    // row b without a, and column a without b, at the time of the step
    beta: Vec<(usize, i128)>,
    alpha: Vec<(usize, i128)>,
}

#[derive(Clone, Debug)]
pub(crate) struct Reduction {
    sizes: Vec<usize>,
    core: Vec<Vec<usize>>,
    core_coboundary: Vec<IntMatrix>,
    steps: Vec<Step>,
}

fn reduce_value(x: i128, modulus: Option<u64>) -> i128 {
    match modulus {
        Some(m) => x.rem_euclid(m as i128),
        None => x,
    }
}

impl Reduction {
    pub fn new(k: &OrderedSimplicialComplex) -> Result<Self, LensError> {
        let top = k.dim().ok_or_else(|| LensError::Usage("empty complex".into()))?;
        let sizes: Vec<usize> = (0..=top).map(|d| k.count(d)).collect();
        let mut mats: Vec<SparseMat> = (0..top).map(|i| SparseMat::new(sizes[i + 1], sizes[i])).collect();
        for i in 0..top {
            for s in 0..sizes[i + 1] {
                for (j, f) in k.faces(i + 1, s).into_iter().enumerate() {
                    let sign = if j % 2 == 0 { 1 } else { -1 };
                    mats[i].add(s, f, sign)?;
                }
            }
        }
        let mut alive: Vec<Vec<bool>> = sizes.iter().map(|&n| vec![true; n]).collect();
        let mut steps = Vec::new();
        loop {
            let before = steps.len();
            for i in 0..top {
                for a in 0..sizes[i] {
                    if !alive[i][a] {
                        continue;
                    }
                    // unit entry in column a whose row is sparsest
                    let pick = mats[i].cols[a]
                        .iter()
                        .filter(|&&b| mats[i].rows[b][&a].abs() == 1)
                        .min_by_key(|&&b| (mats[i].rows[b].len(), b))
                        .copied();
                    if let Some(b) = pick {
                        steps.push(eliminate(&mut mats, i, a, b)?);
                        alive[i][a] = false;
                        alive[i + 1][b] = false;
                    }
                }
            }
            if steps.len() == before {
                break;
            }
        }
        let core: Vec<Vec<usize>> = alive
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, &l)| l).map(|(i, _)| i).collect())
            .collect();
        let core_coboundary = (0..top)
            .map(|i| {
                let mut m = IntMatrix::zeros(core[i + 1].len(), core[i].len());
                for (r, &row) in core[i + 1].iter().enumerate() {
                    for (c, &col) in core[i].iter().enumerate() {
                        if let Some(&v) = mats[i].rows[row].get(&col) {
                            m.set(r, c, BigInt::from(v));
                        }
                    }
                }
                m
            })
            .collect();
        Ok(Reduction {
            sizes,
            core,
            core_coboundary,
            steps,
        })
    }

    pub fn top(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn core_size(&self, degree: usize) -> usize {
        self.core.get(degree).map_or(0, Vec::len)
    }

    /// Core coboundary out of `degree`; a zero map out of the top degree.
    pub fn core_coboundary(&self, degree: usize) -> IntMatrix {
        match self.core_coboundary.get(degree) {
            Some(m) => m.clone(),
            None => IntMatrix::zeros(0, self.core_size(degree)),
        }
    }

    /// Full cochain to core coordinates (a chain map, applied step by step).
    pub fn to_core(&self, degree: usize, full: &[i128], modulus: Option<u64>) -> Vec<i128> {
        let mut v = full.to_vec();
        for st in &self.steps {
            if st.degree == degree {
                v[st.a] = 0;
            } else if st.degree + 1 == degree {
                let yb = v[st.b];
                if yb != 0 {
                    for &(r, al) in &st.alpha {
                        v[r] = reduce_value(v[r] - yb * st.u * al, modulus);
                    }
                }
                v[st.b] = 0;
            }
        }
        self.core[degree].iter().map(|&i| reduce_value(v[i], modulus)).collect()
    }

    /// Core coordinates to a full cochain (the inverse-direction chain map).
    pub fn from_core(&self, degree: usize, core: &[i128], modulus: Option<u64>) -> Vec<i128> {
        let mut v = vec![0i128; self.sizes[degree]];
        for (&i, &x) in self.core[degree].iter().zip(core) {
            v[i] = reduce_value(x, modulus);
        }
        for st in self.steps.iter().rev() {
            if st.degree == degree {
                let s: i128 = st.beta.iter().map(|&(c, be)| be * v[c]).sum();
                v[st.a] = reduce_value(-st.u * s, modulus);
            }
        }
        v
    }
}

fn eliminate(mats: &mut [SparseMat], i: usize, a: usize, b: usize) -> Result<Step, LensError> {
    let m = &mut mats[i];
    let u = m.rows[b][&a];
    let beta: Vec<(usize, i128)> = m.rows[b]
        .iter()
        .filter(|(&c, _)| c != a)
        .map(|(&c, &v)| (c, v))
        .collect();
    let alpha: Vec<(usize, i128)> = m.cols[a]
        .iter()
        .filter(|&&r| r != b)
        .map(|&r| (r, m.rows[r][&a]))
        .collect();
    for &(r, al) in &alpha {
        for &(c, be) in &beta {
            // u⁻¹ = u for u = ±1
            let delta = al
                .checked_mul(u)
                .and_then(|x| x.checked_mul(be))
                .ok_or_else(|| LensError::Internal("coefficient overflow during reduction".into()))?;
            m.add(r, c, -delta)?;
        }
    }
    m.clear_row(b);
    m.clear_col(a);
    if i > 0 {
        mats[i - 1].clear_row(a);
    }
    if i + 1 < mats.len() {
        mats[i + 1].clear_col(b);
    }
    Ok(Step {
        degree: i,
        a,
        b,
        u,
        beta,
        alpha,
    })
}
