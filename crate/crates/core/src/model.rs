//! Momentum lattices, admissible collisions and the normality test.
//!
//! Everything that decides conservation or normality is done in exact
//! rational arithmetic; floating-point copies of the momenta are cached for
//! the kinetic evaluations downstream.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{self, Rational, RationalMatrix};

/// Finite set of distinct momenta in `R^d` with exact rational coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumLattice {
    dim: usize,
    momenta: Vec<Vec<Rational>>,
    momenta_f64: Vec<Vec<f64>>,
    energies: Vec<Rational>,
    energies_f64: Vec<f64>,
}

impl MomentumLattice {
    pub fn new(dim: usize, momenta: Vec<Vec<Rational>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidLattice("dimension must be at least 1".into()));
        }
        if momenta.is_empty() {
            return Err(Error::InvalidLattice(
                "lattice needs at least one momentum".into(),
            ));
        }
        for (i, p) in momenta.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidLattice(format!(
                    "momentum {} has {} components, expected {dim}",
                    i + 1,
                    p.len()
                )));
            }
        }
        let mut seen: HashMap<&[Rational], usize> = HashMap::new();
        for (i, p) in momenta.iter().enumerate() {
            if let Some(first) = seen.insert(p.as_slice(), i) {
                return Err(Error::InvalidLattice(format!(
                    "momenta {} and {} coincide",
                    first + 1,
                    i + 1
                )));
            }
        }
        let energies: Vec<Rational> = momenta
            .iter()
            .map(|p| p.iter().fold(Rational::zero(), |acc, x| acc + x * x))
            .collect();
        let momenta_f64 = momenta
            .iter()
            .map(|p| p.iter().map(exact::to_f64).collect())
            .collect();
        let energies_f64 = energies.iter().map(exact::to_f64).collect();
        Ok(Self {
            dim,
            momenta,
            momenta_f64,
            energies,
            energies_f64,
        })
    }

    /// Lattice with integer coordinates.
    pub fn from_integers<P: AsRef<[i64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let momenta = points
            .iter()
            .map(|p| p.as_ref().iter().map(|&x| exact::rational(x, 1)).collect())
            .collect();
        Self::new(dim, momenta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    pub fn momentum(&self, i: usize) -> &[Rational] {
        &self.momenta[i]
    }

    pub fn momenta(&self) -> &[Vec<Rational>] {
        &self.momenta
    }

    pub fn momentum_f64(&self, i: usize) -> &[f64] {
        &self.momenta_f64[i]
    }

    /// `|p_i|^2` as a float.
    pub fn energy(&self, i: usize) -> f64 {
        self.energies_f64[i]
    }

    pub fn exact_energy(&self, i: usize) -> &Rational {
        &self.energies[i]
    }

    /// First momentum component `p_i^1`, the planar transport speed.
    pub fn p1(&self, i: usize) -> f64 {
        self.momenta_f64[i][0]
    }

    /// Lattice whose point `n` is point `perm[n]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(
            self.dim,
            perm.iter().map(|&p| self.momenta[p].clone()).collect(),
        )
    }

    fn conserves(&self, q: [usize; 4]) -> std::result::Result<(), &'static str> {
        let [i, j, k, l] = q;
        let momentum_ok = (0..self.dim).all(|c| {
            &self.momenta[i][c] + &self.momenta[j][c] == &self.momenta[k][c] + &self.momenta[l][c]
        });
        if !momentum_ok {
            return Err("momentum");
        }
        if &self.energies[i] + &self.energies[j] != &self.energies[k] + &self.energies[l] {
            return Err("energy");
        }
        Ok(())
    }
}

/// Collision `{i, j} <-> {k, l}` in canonical form with coefficient `gamma`.
///
/// Indices are 0-based. Canonical form: `i <= j`, `k <= l` and
/// `(i, j) < (k, l)` lexicographically, so one record stands for the whole
/// symmetry class `Γ_ij^kl = Γ_ji^kl = Γ_kl^ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionQuadruple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub gamma: f64,
}

impl CollisionQuadruple {
    pub fn indices(&self) -> [usize; 4] {
        [self.i, self.j, self.k, self.l]
    }

    /// Distinct ordered index tuples `(a, b, c, e)` with `Γ_ab^ce = gamma`.
    ///
    /// Eight tuples for two distinct pairs of distinct indices, fewer when a
    /// pair repeats an index.
    pub fn orbit(&self) -> Vec<[usize; 4]> {
        let (i, j, k, l) = (self.i, self.j, self.k, self.l);
        let mut out = Vec::with_capacity(8);
        for (a, b) in [(i, j), (j, i)] {
            for (c, e) in [(k, l), (l, k)] {
                for t in [[a, b, c, e], [c, e, a, b]] {
                    if !out.contains(&t) {
                        out.push(t);
                    }
                }
            }
        }
        out
    }

    pub fn multiplicity(&self) -> usize {
        self.orbit().len()
    }
}

fn canonical_key(q: [usize; 4]) -> [usize; 4] {
    let [i, j, k, l] = q;
    let lo = (i.min(j), i.max(j));
    let hi = (k.min(l), k.max(l));
    let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    [a.0, a.1, b.0, b.1]
}

fn is_trivial(q: [usize; 4]) -> bool {
    let k = canonical_key(q);
    k[0] == k[2] && k[1] == k[3]
}

/// User-supplied collision before symmetry reduction (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawCollision {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub gamma: f64,
}

impl RawCollision {
    pub fn new(i: usize, j: usize, k: usize, l: usize, gamma: f64) -> Self {
        Self { i, j, k, l, gamma }
    }
}

/// Reduces raw collisions to canonical, conservation-checked quadruples.
///
/// Symmetry-equivalent entries must carry identical coefficients; trivial and
/// zero-coefficient entries are dropped. Output is sorted by `(i, j, k, l)`.
pub fn canonicalize_collisions(
    lattice: &MomentumLattice,
    raw: &[RawCollision],
) -> Result<Vec<CollisionQuadruple>> {
    let n = lattice.len();
    let mut by_key: BTreeMap<[usize; 4], f64> = BTreeMap::new();
    for r in raw {
        let quad = [r.i, r.j, r.k, r.l];
        if let Some(&index) = quad.iter().find(|&&x| x >= n) {
            return Err(Error::IndexOutOfRange { index, n });
        }
        if r.gamma.is_nan() || r.gamma < 0.0 {
            return Err(Error::NegativeCoefficient {
                quad,
                gamma: r.gamma,
            });
        }
        if !r.gamma.is_finite() {
            return Err(Error::InvalidModel(format!(
                "non-finite coefficient for {quad:?}"
            )));
        }
        lattice
            .conserves(quad)
            .map_err(|law| Error::ConservationViolation { quad, law })?;
        if is_trivial(quad) {
            continue;
        }
        let key = canonical_key(quad);
        match by_key.get(&key) {
            Some(&g) if g != r.gamma => {
                return Err(Error::ConflictingCoefficients {
                    quad: key,
                    first: g,
                    second: r.gamma,
                })
            }
            Some(_) => {}
            None => {
                by_key.insert(key, r.gamma);
            }
        }
    }
    Ok(by_key
        .into_iter()
        .filter(|&(_, g)| g > 0.0)
        .map(|([i, j, k, l], gamma)| CollisionQuadruple { i, j, k, l, gamma })
        .collect())
}

/// Exact `(p_i + p_j, |p_i|^2 + |p_j|^2)` of a pair.
type PairKey = (Vec<Rational>, Rational);

/// Every nontrivial collision allowed by momentum and energy conservation,
/// with unit coefficient.
pub fn enumerate_collisions(lattice: &MomentumLattice) -> Vec<CollisionQuadruple> {
    let n = lattice.len();
    let mut groups: BTreeMap<PairKey, Vec<(usize, usize)>> = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            let sum: Vec<Rational> = (0..lattice.dim())
                .map(|c| &lattice.momentum(i)[c] + &lattice.momentum(j)[c])
                .collect();
            let energy = lattice.exact_energy(i) + lattice.exact_energy(j);
            groups.entry((sum, energy)).or_default().push((i, j));
        }
    }
    let mut out = Vec::new();
    for pairs in groups.values() {
        for (a, &(i, j)) in pairs.iter().enumerate() {
            for &(k, l) in &pairs[a + 1..] {
                out.push(CollisionQuadruple {
                    i,
                    j,
                    k,
                    l,
                    gamma: 1.0,
                });
            }
        }
    }
    out.sort_by_key(|q| q.indices());
    out
}

/// Mass, momentum components and energy evaluated on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalInvariants {
    /// `d + 2` rows of length `N`: ones, `p^1 .. p^d`, `|p|^2`.
    pub rows: Vec<Vec<Rational>>,
    pub rank: usize,
}

impl PhysicalInvariants {
    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(exact::to_f64).collect())
            .collect()
    }
}

pub fn physical_invariants(lattice: &MomentumLattice) -> PhysicalInvariants {
    let n = lattice.len();
    let mut rows = Vec::with_capacity(lattice.dim() + 2);
    rows.push(vec![Rational::one(); n]);
    for c in 0..lattice.dim() {
        rows.push((0..n).map(|i| lattice.momentum(i)[c].clone()).collect());
    }
    rows.push((0..n).map(|i| lattice.exact_energy(i).clone()).collect());
    let rank = exact::rank_of(&rows, n);
    PhysicalInvariants { rows, rank }
}

/// Signed count of orbit tuples whose first index is `target`: the
/// collision contributes `gamma * weight * bracket` to `Q_target`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct OrbitWeights {
    pub weights: Vec<(usize, f64)>,
    pub multiplicity: f64,
}

impl OrbitWeights {
    fn of(q: &CollisionQuadruple) -> Self {
        let orbit = q.orbit();
        let mut weights: Vec<(usize, f64)> = Vec::new();
        for t in &orbit {
            let first = (t[0].min(t[1]), t[0].max(t[1]));
            let sign = if first == (q.i, q.j) { 1.0 } else { -1.0 };
            match weights.iter_mut().find(|(idx, _)| *idx == t[0]) {
                Some((_, w)) => *w += sign,
                None => weights.push((t[0], sign)),
            }
        }
        Self {
            weights,
            multiplicity: orbit.len() as f64,
        }
    }
}

/// Lattice, statistics parameter and collision set.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    lattice: MomentumLattice,
    alpha: f64,
    collisions: Vec<CollisionQuadruple>,
    orbits: Vec<OrbitWeights>,
}

impl DiscreteModel {
    /// Builds a model; `collisions` pass through [`canonicalize_collisions`].
    pub fn new(lattice: MomentumLattice, alpha: f64, collisions: &[RawCollision]) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidModel(format!(
                "alpha = {alpha} is outside [0, 1]"
            )));
        }
        let collisions = canonicalize_collisions(&lattice, collisions)?;
        let orbits = collisions.iter().map(OrbitWeights::of).collect();
        Ok(Self {
            lattice,
            alpha,
            collisions,
            orbits,
        })
    }

    /// Model with every admissible collision at unit coefficient.
    pub fn with_all_collisions(lattice: MomentumLattice, alpha: f64) -> Result<Self> {
        let raw: Vec<RawCollision> = enumerate_collisions(&lattice)
            .into_iter()
            .map(|q| RawCollision::new(q.i, q.j, q.k, q.l, q.gamma))
            .collect();
        Self::new(lattice, alpha, &raw)
    }

    pub fn lattice(&self) -> &MomentumLattice {
        &self.lattice
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn collisions(&self) -> &[CollisionQuadruple] {
        &self.collisions
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// Same lattice and collisions with a different statistics parameter.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidModel(format!(
                "alpha = {alpha} is outside [0, 1]"
            )));
        }
        Ok(Self {
            alpha,
            ..self.clone()
        })
    }

    /// Same model with every coefficient multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let raw: Vec<RawCollision> = self
            .collisions
            .iter()
            .map(|q| RawCollision::new(q.i, q.j, q.k, q.l, q.gamma * factor))
            .collect();
        Self::new(self.lattice.clone(), self.alpha, &raw)
    }

    pub(crate) fn orbits(&self) -> impl Iterator<Item = (&CollisionQuadruple, &OrbitWeights)> {
        self.collisions.iter().zip(&self.orbits)
    }

    /// Physical invariants as float rows.
    pub fn invariant_rows(&self) -> Vec<Vec<f64>> {
        physical_invariants(&self.lattice).rows_f64()
    }
}

fn serialize_rational_vecs<S: Serializer>(
    v: &[Vec<Rational>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let strings: Vec<Vec<String>> = v
        .iter()
        .map(|row| row.iter().map(|q| q.to_string()).collect())
        .collect();
    strings.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalityReport {
    pub collision_rank: usize,
    pub invariant_nullspace_dim: usize,
    pub physical_invariant_rank: usize,
    pub is_normal: bool,
    /// Physical invariants are linearly dependent on this lattice.
    pub degenerate: bool,
    /// Vectors completing the physical invariants to a basis of the
    /// collision-invariant space; entries are exact rationals rendered as
    /// strings.
    #[serde(serialize_with = "serialize_rational_vecs")]
    pub spurious_basis: Vec<Vec<Rational>>,
}

/// One row `e_i + e_j - e_k - e_l` per collision with nonzero coefficient.
pub fn collision_relation_matrix(model: &DiscreteModel) -> RationalMatrix {
    let n = model.len();
    let active: Vec<&CollisionQuadruple> = model
        .collisions()
        .iter()
        .filter(|q| q.gamma > 0.0)
        .collect();
    let mut m = RationalMatrix::zeros(active.len(), n);
    for (r, q) in active.iter().enumerate() {
        for (idx, sign) in [(q.i, 1), (q.j, 1), (q.k, -1), (q.l, -1)] {
            let v = m.get(r, idx) + exact::rational(sign, 1);
            m.set(r, idx, v);
        }
    }
    m
}

pub fn normality_check(model: &DiscreteModel) -> NormalityReport {
    let n = model.len();
    let relations = collision_relation_matrix(model);
    let collision_rank = relations.rank();
    let nullspace = relations.nullspace();
    let physical = physical_invariants(model.lattice());
    let contained = physical
        .rows
        .iter()
        .all(|phi| exact::is_zero_vec(&relations.mul_vec(phi)));
    let is_normal = contained && nullspace.len() == physical.rank;
    let spurious_basis = if is_normal {
        Vec::new()
    } else {
        exact::extend_basis(&physical.rows, &nullspace, n)
    };
    NormalityReport {
        collision_rank,
        invariant_nullspace_dim: n - collision_rank,
        physical_invariant_rank: physical.rank,
        is_normal,
        degenerate: physical.rank < model.dim() + 2,
        spurious_basis,
    }
}
