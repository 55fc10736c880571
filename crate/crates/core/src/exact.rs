//! Exact linear algebra over arbitrary-precision rationals.
//!
//! Only what the normality decision needs: reduced row echelon form, rank,
//! nullspace and span membership. Matrices are small (rows = collisions,
//! columns = lattice points), so a dense row-major layout is enough.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(q: &Rational) -> f64 {
    // Both parts may exceed f64 range individually; go through a scaled
    // integer division when that happens.
    use num_traits::ToPrimitive;
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = q.denom().bits().saturating_sub(60) as usize;
            let n = q.numer() >> shift;
            let d = q.denom() >> shift;
            n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
        }
    }
}

/// Dense row-major rational matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

/// Result of Gauss-Jordan elimination.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub reduced: RationalMatrix,
    pub pivots: Vec<usize>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<Rational>], cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged row {r}");
            for (c, v) in row.iter().enumerate() {
                m.data[r * cols + c] = v.clone();
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn echelon(&self) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..m.cols {
            if pivot_row == m.rows {
                break;
            }
            let Some(found) = (pivot_row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(pivot_row, found);
            let inv = m.get(pivot_row, col).recip();
            for c in col..m.cols {
                let v = m.get(pivot_row, c) * &inv;
                m.set(pivot_row, c, v);
            }
            for r in 0..m.rows {
                if r == pivot_row || m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col).clone();
                for c in col..m.cols {
                    let v = m.get(r, c) - &factor * m.get(pivot_row, c);
                    m.set(r, c, v);
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        Echelon { reduced: m, pivots }
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    /// Basis of `{x : A x = 0}`, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let Echelon { reduced, pivots } = self.echelon();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![Rational::zero(); self.cols];
                v[free] = Rational::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -reduced.get(r, free).clone();
                }
                v
            })
            .collect()
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Vec<Rational> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }
}

/// Rank of a list of row vectors of common length `cols`.
pub fn rank_of(rows: &[Vec<Rational>], cols: usize) -> usize {
    RationalMatrix::from_rows(rows, cols).rank()
}

/// Greedily extends `base` with vectors from `candidates` that are not in the
/// current span; returns the added vectors.
pub fn extend_basis(
    base: &[Vec<Rational>],
    candidates: &[Vec<Rational>],
    cols: usize,
) -> Vec<Vec<Rational>> {
    let mut span: Vec<Vec<Rational>> = base.to_vec();
    let mut rank = rank_of(&span, cols);
    let mut added = Vec::new();
    for v in candidates {
        span.push(v.clone());
        let r = rank_of(&span, cols);
        if r > rank {
            rank = r;
            added.push(v.clone());
        } else {
            span.pop();
        }
    }
    added
}

pub fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

pub fn max_abs(v: &[Rational]) -> Rational {
    v.iter()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        rational(n, 1)
    }

    #[test]
    fn rank_of_dependent_rows() {
        let m = RationalMatrix::from_rows(
            &[
                vec![q(1), q(2), q(3)],
                vec![q(2), q(4), q(6)],
                vec![q(0), q(1), q(1)],
            ],
            3,
        );
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn nullspace_is_annihilated() {
        let m = RationalMatrix::from_rows(&[vec![q(1), q(1), q(-1), q(-1)]], 4);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 3);
        for v in &ns {
            assert!(is_zero_vec(&m.mul_vec(v)));
        }
        assert_eq!(rank_of(&ns, 4), 3);
    }

    #[test]
    fn empty_matrix_has_full_nullspace() {
        let m = RationalMatrix::zeros(0, 3);
        assert_eq!(m.rank(), 0);
        assert_eq!(m.nullspace().len(), 3);
    }

    #[test]
    fn extend_basis_skips_span_members() {
        let base = vec![vec![q(1), q(0), q(0)]];
        let cands = vec![
            vec![q(2), q(0), q(0)],
            vec![q(0), q(1), q(0)],
            vec![q(1), q(1), q(0)],
        ];
        let added = extend_basis(&base, &cands, 3);
        assert_eq!(added, vec![vec![q(0), q(1), q(0)]]);
    }

    #[test]
    fn to_f64_handles_huge_parts() {
        let big = BigInt::from(10).pow(400);
        let x = Rational::new(big.clone() * 3 + 1, big * 4);
        assert!(x.denom().bits() > 1024);
        assert_eq!(to_f64(&x), 0.75);
        assert_eq!(to_f64(&rational(-1, 3)), -1.0 / 3.0);
    }
}
