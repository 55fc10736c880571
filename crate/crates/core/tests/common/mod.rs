//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the collision machinery of the library: lattices
//! are plain integer points and every quantity is recomputed by brute force.

#![allow(dead_code)]

use anyon_dbe::model::{DiscreteModel, MomentumLattice, RawCollision};

#[derive(Clone, Debug)]
pub struct Points {
    pub dim: usize,
    pub p: Vec<Vec<i64>>,
}

impl Points {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn energy(&self, i: usize) -> i64 {
        self.p[i].iter().map(|x| x * x).sum()
    }

    pub fn lattice(&self) -> MomentumLattice {
        MomentumLattice::from_integers(self.dim, &self.p).unwrap()
    }

    pub fn model(&self, alpha: f64) -> DiscreteModel {
        DiscreteModel::with_all_collisions(self.lattice(), alpha).unwrap()
    }

    pub fn model_with(&self, alpha: f64, quads: &[[usize; 4]]) -> DiscreteModel {
        let raw: Vec<RawCollision> = quads
            .iter()
            .map(|q| RawCollision::new(q[0], q[1], q[2], q[3], 1.0))
            .collect();
        DiscreteModel::new(self.lattice(), alpha, &raw).unwrap()
    }

    /// Physical invariant rows `1, p^1..p^d, |p|^2`.
    pub fn invariant_rows(&self) -> Vec<Vec<i64>> {
        let mut rows = vec![vec![1; self.len()]];
        for c in 0..self.dim {
            rows.push(self.p.iter().map(|p| p[c]).collect());
        }
        rows.push((0..self.len()).map(|i| self.energy(i)).collect());
        rows
    }
}

pub fn cross() -> Points {
    Points {
        dim: 2,
        p: vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
    }
}

/// `{lo..=hi}^dim`.
pub fn cube(dim: usize, lo: i64, hi: i64) -> Points {
    let side = (hi - lo + 1) as usize;
    let p = (0..side.pow(dim as u32))
        .map(|mut n| {
            (0..dim)
                .map(|_| {
                    let c = lo + (n % side) as i64;
                    n /= side;
                    c
                })
                .collect()
        })
        .collect();
    Points { dim, p }
}

/// Every ordered `(i, j, k, l)` conserving momentum and energy with
/// `{k, l} != {i, j}`.
pub fn brute_quadruples(pts: &Points) -> Vec<[usize; 4]> {
    let n = pts.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    if (k == i && l == j) || (k == j && l == i) {
                        continue;
                    }
                    let mom = (0..pts.dim)
                        .all(|c| pts.p[i][c] + pts.p[j][c] == pts.p[k][c] + pts.p[l][c]);
                    if mom && pts.energy(i) + pts.energy(j) == pts.energy(k) + pts.energy(l) {
                        out.push([i, j, k, l]);
                    }
                }
            }
        }
    }
    out
}

/// Closes a list of quadruples under `(ij)`, `(kl)` and `(ij) <-> (kl)` swaps.
pub fn ordered_closure(quads: &[[usize; 4]]) -> Vec<[usize; 4]> {
    let mut out: Vec<[usize; 4]> = Vec::new();
    for &[i, j, k, l] in quads {
        for q in [
            [i, j, k, l],
            [j, i, k, l],
            [i, j, l, k],
            [j, i, l, k],
            [k, l, i, j],
            [l, k, i, j],
            [k, l, j, i],
            [l, k, j, i],
        ] {
            if !out.contains(&q) {
                out.push(q);
            }
        }
    }
    out
}

pub fn psi(y: f64, alpha: f64) -> f64 {
    (1.0 - alpha * y).powf(alpha) * (1.0 + (1.0 - alpha) * y).powf(1.0 - alpha)
}

/// Ordered quadruple sum with unit coefficients.
pub fn collision_operator(ordered: &[[usize; 4]], alpha: f64, f: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; f.len()];
    for &[i, j, k, l] in ordered {
        q[i] += f[k] * f[l] * psi(f[i], alpha) * psi(f[j], alpha)
            - f[i] * f[j] * psi(f[k], alpha) * psi(f[l], alpha);
    }
    q
}

/// `-R^{-1/2} DQ R^{1/2}` for bosons (`s = +1`) or fermions (`s = -1`),
/// differentiating `Q` by the product rule.
pub fn classical_linearization(ordered: &[[usize; 4]], s: f64, p: &[f64]) -> Vec<Vec<f64>> {
    let n = p.len();
    let mut jac = vec![vec![0.0; n]; n];
    let bare = |x: f64| (x, 1.0);
    let blocked = |x: f64| (1.0 + s * x, s);
    for &[i, j, k, l] in ordered {
        let gain = [
            (k, bare(p[k])),
            (l, bare(p[l])),
            (i, blocked(p[i])),
            (j, blocked(p[j])),
        ];
        let loss = [
            (i, bare(p[i])),
            (j, bare(p[j])),
            (k, blocked(p[k])),
            (l, blocked(p[l])),
        ];
        for (factors, sign) in [(gain, 1.0), (loss, -1.0)] {
            for a in 0..4 {
                let others: f64 = (0..4)
                    .filter(|&b| b != a)
                    .map(|b| factors[b].1 .0)
                    .product();
                jac[i][factors[a].0] += sign * factors[a].1 .1 * others;
            }
        }
    }
    let r: Vec<f64> = p.iter().map(|&x| x * (1.0 + s * x)).collect();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| -jac[a][b] * r[b].sqrt() / r[a].sqrt())
                .collect()
        })
        .collect()
}

/// Rank of an integer matrix by fraction-free elimination.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        for r in rank + 1..m.len() {
            for cc in c + 1..cols {
                m[r][cc] = (m[rank][c] * m[r][cc] - m[r][c] * m[rank][cc]) / prev;
            }
            m[r][c] = 0;
        }
        prev = m[rank][c];
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

pub struct NormalityOracle {
    pub collision_rank: usize,
    pub nullity: usize,
    pub physical_rank: usize,
    pub is_normal: bool,
}

pub fn normality(pts: &Points, quads: &[[usize; 4]]) -> NormalityOracle {
    let n = pts.len();
    let relations: Vec<Vec<i64>> = quads
        .iter()
        .map(|&[i, j, k, l]| {
            let mut row = vec![0; n];
            row[i] += 1;
            row[j] += 1;
            row[k] -= 1;
            row[l] -= 1;
            row
        })
        .collect();
    let collision_rank = integer_rank(&relations);
    let physical = pts.invariant_rows();
    let physical_rank = integer_rank(&physical);
    let contained = relations.iter().all(|r| {
        physical
            .iter()
            .all(|phi| r.iter().zip(phi).map(|(a, b)| a * b).sum::<i64>() == 0)
    });
    let nullity = n - collision_rank;
    NormalityOracle {
        collision_rank,
        nullity,
        physical_rank,
        is_normal: contained && nullity == physical_rank,
    }
}
