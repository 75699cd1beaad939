use std::collections::{HashMap, HashSet};

use super::LensError;

/// A finite simplicial complex on vertices `0..vertex_count`, with every
/// simplex stored as a strictly increasing vertex list. Simplices of each
/// dimension are kept in lexicographic order, which fixes the cochain bases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedSimplicialComplex {
    vertex_count: usize,
    simplices: Vec<Vec<Vec<u32>>>,
    index: Vec<HashMap<Vec<u32>, usize>>,
}

impl OrderedSimplicialComplex {
    /// Builds the face closure of `facets`.
    pub fn from_facets<I>(vertex_count: usize, facets: I) -> Result<Self, LensError>
    where
        I: IntoIterator<Item = Vec<u32>>,
    {
        let mut by_dim: Vec<HashSet<Vec<u32>>> = Vec::new();
        for mut facet in facets {
            facet.sort_unstable();
            if facet.is_empty() {
                return Err(LensError::Usage("empty facet".into()));
            }
            if facet.windows(2).any(|w| w[0] == w[1]) {
                return Err(LensError::Usage(format!("facet {facet:?} repeats a vertex")));
            }
            if facet.iter().any(|&v| v as usize >= vertex_count) {
                return Err(LensError::Usage(format!("facet {facet:?} uses an unknown vertex")));
            }
            if facet.len() > 16 {
                return Err(LensError::Usage("facets above dimension 15 are not supported".into()));
            }
            let k = facet.len();
            if by_dim.len() < k {
                by_dim.resize_with(k, HashSet::new);
            }
            // every nonempty subset, via bit masks
            for mask in 1u32..(1 << k) {
                let face: Vec<u32> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| facet[i]).collect();
                by_dim[face.len() - 1].insert(face);
            }
        }
        let simplices: Vec<Vec<Vec<u32>>> = by_dim
            .into_iter()
            .map(|set| {
                let mut v: Vec<Vec<u32>> = set.into_iter().collect();
                v.sort_unstable();
                v
            })
            .collect();
        let index = simplices
            .iter()
            .map(|level| level.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        Ok(OrderedSimplicialComplex {
            vertex_count,
            simplices,
            index,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Top dimension (`None` for the empty complex).
    pub fn dim(&self) -> Option<usize> {
        self.simplices.len().checked_sub(1)
    }

    pub fn count(&self, dim: usize) -> usize {
        self.simplices.get(dim).map_or(0, Vec::len)
    }

    pub fn simplices(&self, dim: usize) -> &[Vec<u32>] {
        self.simplices.get(dim).map_or(&[], |v| v.as_slice())
    }

    pub fn index_of(&self, simplex: &[u32]) -> Option<usize> {
        self.index.get(simplex.len().checked_sub(1)?)?.get(simplex).copied()
    }

    /// Indices of the faces of simplex `k` of dimension `dim`; entry `j`
    /// omits vertex `j`.
    pub fn faces(&self, dim: usize, k: usize) -> Vec<usize> {
        let s = &self.simplices[dim][k];
        (0..s.len())
            .map(|j| {
                let face: Vec<u32> = s.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect();
                self.index_of(&face).expect("face closure")
            })
            .collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.simplices
            .iter()
            .enumerate()
            .map(|(d, s)| if d % 2 == 0 { s.len() as i64 } else { -(s.len() as i64) })
            .sum()
    }

    /// Every codimension-one simplex lies in exactly two top simplices.
    pub fn is_closed_pseudomanifold(&self) -> bool {
        let Some(top) = self.dim() else {
            return false;
        };
        if top == 0 {
            return false;
        }
        let mut incidence = vec![0u32; self.count(top - 1)];
        for k in 0..self.count(top) {
            for f in self.faces(top, k) {
                incidence[f] += 1;
            }
        }
        incidence.iter().all(|&c| c == 2)
    }

    fn top_simplices(&self) -> &[Vec<u32>] {
        self.simplices.last().map_or(&[], |v| v.as_slice())
    }
}

/// A complex with a simplicial action of a cyclic group, given by the
/// permutation of vertices induced by a generator.
#[derive(Clone, Debug)]
pub(crate) struct CyclicAction {
    pub complex: OrderedSimplicialComplex,
    pub generator: Vec<u32>,
}

impl CyclicAction {
    fn apply(&self, s: &[u32]) -> Vec<u32> {
        let mut img: Vec<u32> = s.iter().map(|&v| self.generator[v as usize]).collect();
        img.sort_unstable();
        img
    }

    /// Smallest vertex in each vertex orbit.
    fn orbit_min(&self) -> Vec<u32> {
        let n = self.complex.vertex_count();
        let mut out = vec![u32::MAX; n];
        for v in 0..n as u32 {
            if out[v as usize] != u32::MAX {
                continue;
            }
            let mut orbit = vec![v];
            let mut cur = self.generator[v as usize];
            while cur != v {
                orbit.push(cur);
                cur = self.generator[cur as usize];
            }
            let m = *orbit.iter().min().expect("nonempty");
            for w in orbit {
                out[w as usize] = m;
            }
        }
        out
    }

    fn orbit_len(&self) -> usize {
        let mut cur = self.generator[0];
        let mut len = 1;
        while cur != 0 {
            cur = self.generator[cur as usize];
            len += 1;
        }
        len
    }

    /// The quotient is a simplicial complex when the orbit map is injective
    /// on each closed simplex and distinct simplex orbits have distinct
    /// vertex-orbit sets. For a free action each simplex orbit has exactly
    /// `|G|` elements, so the second condition is a count.
    pub fn quotient_is_valid(&self) -> bool {
        let om = self.orbit_min();
        let order = self.orbit_len();
        for facet in self.complex.top_simplices() {
            let mut imgs: Vec<u32> = facet.iter().map(|&v| om[v as usize]).collect();
            imgs.sort_unstable();
            if imgs.windows(2).any(|w| w[0] == w[1]) {
                return false;
            }
        }
        for dim in 0..=self.complex.dim().unwrap_or(0) {
            let images: HashSet<Vec<u32>> = self
                .complex
                .simplices(dim)
                .iter()
                .map(|s| {
                    let mut img: Vec<u32> = s.iter().map(|&v| om[v as usize]).collect();
                    img.sort_unstable();
                    img
                })
                .collect();
            if images.len() * order != self.complex.count(dim) {
                return false;
            }
        }
        true
    }

    /// Barycentric subdivision with the induced action. New vertices are the
    /// old simplices, numbered by dimension and then lexicographically.
    pub fn subdivide(&self) -> Result<CyclicAction, LensError> {
        let k = &self.complex;
        let top = k.dim().ok_or_else(|| LensError::Usage("empty complex".into()))?;
        let mut offset = vec![0usize; top + 2];
        for d in 0..=top {
            offset[d + 1] = offset[d] + k.count(d);
        }
        let id = |s: &[u32]| -> u32 { (offset[s.len() - 1] + k.index_of(s).expect("face")) as u32 };
        let mut facets = Vec::with_capacity(k.count(top) * 24);
        for facet in k.top_simplices() {
            for perm in permutations(facet.len()) {
                let mut chain = Vec::with_capacity(facet.len());
                let mut prefix: Vec<u32> = Vec::with_capacity(facet.len());
                for &p in &perm {
                    prefix.push(facet[p]);
                    let mut sorted = prefix.clone();
                    sorted.sort_unstable();
                    chain.push(id(&sorted));
                }
                facets.push(chain);
            }
        }
        let total = offset[top + 1];
        let mut generator = vec![0u32; total];
        for d in 0..=top {
            for (i, s) in k.simplices(d).iter().enumerate() {
                generator[offset[d] + i] = id(&self.apply(s));
            }
        }
        Ok(CyclicAction {
            complex: OrderedSimplicialComplex::from_facets(total, facets)?,
            generator,
        })
    }

    /// Orbit complex; vertex `i` of the quotient is the orbit whose smallest
    /// member is the `i`-th smallest among orbit minima.
    pub fn quotient(&self) -> Result<OrderedSimplicialComplex, LensError> {
        let om = self.orbit_min();
        let mut mins: Vec<u32> = om.clone();
        mins.sort_unstable();
        mins.dedup();
        let rank: HashMap<u32, u32> = mins.iter().enumerate().map(|(i, &m)| (m, i as u32)).collect();
        let facets = self
            .complex
            .top_simplices()
            .iter()
            .map(|f| f.iter().map(|&v| rank[&om[v as usize]]).collect::<Vec<u32>>());
        OrderedSimplicialComplex::from_facets(mins.len(), facets)
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, k - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

/// `S³` as the join of two `3b`-cycles with the free action
/// `x_i ↦ x_{i+3}`, `y_j ↦ y_{j+3a}`.
pub(crate) fn lens_action(b: u64, a: i64) -> CyclicAction {
    let n = 3 * b as usize;
    let x = |i: usize| (i % n) as u32;
    let y = |j: usize| (n + j % n) as u32;
    let mut facets = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            facets.push(vec![x(i), x(i + 1), y(j), y(j + 1)]);
        }
    }
    let shift = (3 * a).rem_euclid(n as i64) as usize;
    let mut generator = vec![0u32; 2 * n];
    for i in 0..n {
        generator[i] = x(i + 3);
        generator[n + i] = y(i + shift);
    }
    CyclicAction {
        complex: OrderedSimplicialComplex::from_facets(2 * n, facets).expect("well-formed join"),
        generator,
    }
}

/// Triangulation of the lens space `L(b; a)`: the join model of `S³`,
/// subdivided until the orbit complex is simplicial, then divided out.
pub fn build_lens_complex(b: u64, a: i64) -> Result<OrderedSimplicialComplex, LensError> {
    if b < 2 {
        return Err(LensError::Domain(format!("b must be at least 2, got {b}")));
    }
    if num_integer::gcd(a.rem_euclid(b as i64) as u64, b) != 1 {
        return Err(LensError::Domain(format!("gcd({a}, {b}) must be 1")));
    }
    let mut action = lens_action(b, a);
    let mut rounds = 0;
    while !action.quotient_is_valid() {
        if rounds == 3 {
            return Err(LensError::Internal(
                "quotient still invalid after 3 subdivisions".into(),
            ));
        }
        action = action.subdivide()?;
        rounds += 1;
    }
    action.quotient()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn join_is_a_three_sphere_triangulation() {
        let act = lens_action(2, 1);
        let k = &act.complex;
        assert_eq!(k.euler_characteristic(), 0);
        assert!(k.is_closed_pseudomanifold());
        assert_eq!(k.count(3), 36);
        // the unsubdivided quotient is not simplicial
        assert!(!act.quotient_is_valid());
        assert!(act.subdivide().unwrap().quotient_is_valid());
    }

    #[test]
    fn subdivision_counts() {
        let k = OrderedSimplicialComplex::from_facets(3, vec![vec![0, 1, 2]]).unwrap();
        let act = CyclicAction {
            complex: k,
            generator: vec![0, 1, 2],
        };
        let sd = act.subdivide().unwrap();
        assert_eq!(sd.complex.count(0), 7);
        assert_eq!(sd.complex.count(2), 6);
        assert_eq!(sd.complex.euler_characteristic(), 1);
    }

    #[test]
    fn face_closure_and_lookup() {
        let k = OrderedSimplicialComplex::from_facets(4, vec![vec![3, 0, 2], vec![0, 1]]).unwrap();
        assert_eq!(k.count(0), 4);
        assert_eq!(k.count(1), 4);
        assert_eq!(k.count(2), 1);
        assert_eq!(k.simplices(2)[0], vec![0, 2, 3]);
        let faces = k.faces(2, 0);
        assert_eq!(k.simplices(1)[faces[0]], vec![2, 3]);
        assert_eq!(k.simplices(1)[faces[2]], vec![0, 2]);
        assert!(OrderedSimplicialComplex::from_facets(2, vec![vec![0, 0]]).is_err());
        assert!(OrderedSimplicialComplex::from_facets(2, vec![vec![0, 5]]).is_err());
    }

    #[test]
    fn lens_complex_shape() {
        let k = build_lens_complex(2, 1).unwrap();
        assert_eq!(k.euler_characteristic(), 0);
        assert!(k.is_closed_pseudomanifold());
        assert!(matches!(build_lens_complex(4, 2), Err(LensError::Domain(_))));
        assert!(matches!(build_lens_complex(1, 1), Err(LensError::Domain(_))));
    }

    #[test]
    fn quotient_vertex_order_is_deterministic() {
        assert_eq!(build_lens_complex(3, 2).unwrap(), build_lens_complex(3, 2).unwrap());
    }
}
