//! Dense simplex on a compact (Tucker) tableau with Bland's rule.
//!
//! Solves `max cᵀx` subject to `Ax ≤ b`, `x ≥ 0`, `b ≥ 0`, so the origin is a
//! feasible starting vertex.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Q = Ratio<i128>;

pub trait LpScalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Strictly positive beyond the type's pivoting tolerance.
    fn positive(&self) -> bool;
}

impl LpScalar for f64 {
    fn positive(&self) -> bool {
        *self > 1e-11
    }
}

impl LpScalar for Q {
    fn positive(&self) -> bool {
        *self > Q::zero()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T> {
    pub value: T,
    pub x: Vec<T>,
    /// Dual prices, one per constraint row.
    pub y: Vec<T>,
    pub pivots: usize,
}

pub fn maximize<T: LpScalar>(c: &[T], a: &[Vec<T>], b: &[T]) -> Result<LpSolution<T>> {
    let (m, n) = (a.len(), c.len());
    if b.len() != m {
        return Err(Error::LengthMismatch { expected: m, got: b.len() });
    }
    if let Some(r) = a.iter().find(|r| r.len() != n) {
        return Err(Error::LengthMismatch { expected: n, got: r.len() });
    }
    if b.iter().any(|v| *v < T::zero()) {
        return Err(Error::InvalidArgument("right-hand side must be nonnegative".into()));
    }
    // basic_i = rhs_i − Σ_j t[i][j]·x_{col_j};  z = z0 + Σ_j obj_j·x_{col_j}
    let mut t: Vec<Vec<T>> = a.to_vec();
    let mut rhs = b.to_vec();
    let mut obj = c.to_vec();
    let mut z0 = T::zero();
    let mut col: Vec<usize> = (0..n).collect();
    let mut row: Vec<usize> = (n..n + m).collect();
    let mut pivots = 0usize;
    while let Some(e) = (0..n).filter(|&j| obj[j].positive()).min_by_key(|&j| col[j]) {
        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            if t[i][e].positive() {
                let ratio = rhs[i].clone() / t[i][e].clone();
                let better = match &leave {
                    None => true,
                    Some((r, best)) => ratio < *best || (ratio == *best && row[i] < row[*r]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::Unbounded);
        };
        let p = t[r][e].clone();
        for j in 0..n {
            if j != e {
                t[r][j] = t[r][j].clone() / p.clone();
            }
        }
        t[r][e] = T::one() / p.clone();
        rhs[r] = rhs[r].clone() / p;
        let pivot_row = t[r].clone();
        for i in 0..m {
            if i == r || t[i][e].is_zero() {
                continue;
            }
            let f = t[i][e].clone();
            for j in 0..n {
                if j != e {
                    t[i][j] = t[i][j].clone() - f.clone() * pivot_row[j].clone();
                }
            }
            t[i][e] = -(f.clone() * pivot_row[e].clone());
            rhs[i] = rhs[i].clone() - f * rhs[r].clone();
        }
        let f = obj[e].clone();
        for j in 0..n {
            if j != e {
                obj[j] = obj[j].clone() - f.clone() * pivot_row[j].clone();
            }
        }
        obj[e] = -(f.clone() * pivot_row[e].clone());
        z0 = z0 + f * rhs[r].clone();
        std::mem::swap(&mut col[e], &mut row[r]);
        pivots += 1;
    }
    let mut x = vec![T::zero(); n];
    let mut y = vec![T::zero(); m];
    for (i, &lab) in row.iter().enumerate() {
        if lab < n {
            x[lab] = rhs[i].clone();
        }
    }
    for (j, &lab) in col.iter().enumerate() {
        if lab >= n {
            y[lab - n] = -obj[j].clone();
        }
    }
    Ok(LpSolution { value: z0, x, y, pivots })
}
