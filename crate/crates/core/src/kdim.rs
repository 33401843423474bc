//! Exact count of free parameters in compact stencils of a given accuracy.
//!
//! A stencil on the offsets `S` is consistent to order `M` when its
//! coefficients satisfy one linear constraint per multi-index
//! `l` with `l_1 <= 1` and `|l| <= M + 1`. The constraint for `l` evaluates
//!
//! ```text
//! A_l(p) = sum_{|k| = |l|} prod_j p_j^{k_j} / k_j!  *  T^k_l
//! T^k_l  = delta(k, l)                        if k_1 <= 1
//!        = -sum_{j >= 2} T^{k - 2 e_1 + 2 e_j}_l   otherwise
//! ```
//!
//! at each offset `p`. The nullity of that matrix (number of offsets minus
//! rank) is the dimension `K_M` of the family of order-`M` stencils. The rank
//! is computed exactly with fraction-free (Bareiss) elimination.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact rational number used for constraint entries.
pub type Rational = BigRational;

/// All multi-indices in `dim` variables with total degree `degree`.
pub fn multi_indices(dim: usize, degree: usize) -> Vec<Vec<u8>> {
    fn rec(prefix: &mut Vec<u8>, dim: usize, left: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k as u8);
            rec(prefix, dim, left - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(dim), dim, degree, &mut out);
    out
}

/// Memoized values of the integer table `T^k_l`.
#[derive(Debug, Default)]
pub struct TildeTable {
    memo: BTreeMap<(Vec<u8>, Vec<u8>), BigInt>,
}

impl TildeTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, k: &[u8], l: &[u8]) -> BigInt {
        if k[0] <= 1 {
            return if k == l {
                BigInt::one()
            } else {
                BigInt::zero()
            };
        }
        let key = (k.to_vec(), l.to_vec());
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let mut sum = BigInt::zero();
        let mut kk = k.to_vec();
        kk[0] -= 2;
        for j in 1..k.len() {
            kk[j] += 2;
            sum += self.get(&kk, l);
            kk[j] -= 2;
        }
        let v = -sum;
        self.memo.insert(key, v.clone());
        v
    }

    /// `A_l(p)` as an exact rational.
    pub fn constraint(&mut self, l: &[u8], p: &[i64]) -> Rational {
        let n: usize = l.iter().map(|&x| x as usize).sum();
        let (num, den) = self.scaled_constraint(l, p);
        debug_assert_eq!(den, factorial_big(n));
        Rational::new(num, den)
    }

    /// `|l|! A_l(p)`, an integer, together with `|l|!`.
    fn scaled_constraint(&mut self, l: &[u8], p: &[i64]) -> (BigInt, BigInt) {
        let n: usize = l.iter().map(|&x| x as usize).sum();
        let mut sum = BigInt::zero();
        for k in multi_indices(l.len(), n) {
            let t = self.get(&k, l);
            if t.is_zero() {
                continue;
            }
            let mut term = multinomial(n, &k) * t;
            for (pj, &kj) in p.iter().zip(&k) {
                term *= BigInt::from(*pj).pow(kj as u32);
            }
            sum += term;
        }
        (sum, factorial_big(n))
    }
}

fn factorial_big(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn multinomial(n: usize, k: &[u8]) -> BigInt {
    let den = k
        .iter()
        .fold(BigInt::one(), |acc, &kj| acc * factorial_big(kj as usize));
    factorial_big(n) / den
}

/// The constraint matrix for order `M` on a set of offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub dim: usize,
    pub order: i32,
    /// Row labels `l`.
    pub rows: Vec<Vec<u8>>,
    /// Column labels `p`.
    pub offsets: Vec<Vec<i64>>,
    /// Row-scaled integer entries (row `l` multiplied by `|l|!`).
    pub entries: Vec<Vec<BigInt>>,
}

impl ConstraintSystem {
    pub fn new(dim: usize, order: i32, exclude_corners: bool) -> Result<Self> {
        if dim < 1 {
            return Err(Error::Usage("dimension must be positive".into()));
        }
        if order < -1 {
            return Err(Error::Usage("order must be at least -1".into()));
        }
        let offsets = stencil_offsets(dim, exclude_corners);
        let max_deg = (order + 1) as usize;
        let rows: Vec<Vec<u8>> = (0..=max_deg)
            .flat_map(|n| multi_indices(dim, n))
            .filter(|l| l[0] <= 1)
            .collect();
        let mut table = TildeTable::new();
        let entries = rows
            .iter()
            .map(|l| {
                offsets
                    .iter()
                    .map(|p| table.scaled_constraint(l, p).0)
                    .collect()
            })
            .collect();
        Ok(Self {
            dim,
            order,
            rows,
            offsets,
            entries,
        })
    }

    pub fn rank(&self) -> usize {
        bareiss_rank(self.entries.clone())
    }

    pub fn nullity(&self) -> usize {
        self.offsets.len() - self.rank()
    }
}

/// The `3^d` offsets of the compact stencil (center included), optionally
/// without the corners (all components nonzero).
pub fn stencil_offsets(dim: usize, exclude_corners: bool) -> Vec<Vec<i64>> {
    let total = 3usize.pow(dim as u32);
    (0..total)
        .map(|mut code| {
            (0..dim)
                .map(|_| {
                    let digit = (code % 3) as i64 - 1;
                    code /= 3;
                    digit
                })
                .collect::<Vec<i64>>()
        })
        .filter(|p| !(exclude_corners && dim > 1 && p.iter().all(|&x| x != 0)))
        .collect()
}

/// Rank of an integer matrix by fraction-free elimination.
pub fn bareiss_rank(mut m: Vec<Vec<BigInt>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, piv);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let num = &m[r][c] * &m[i][j] - &m[i][c] * &m[r][j];
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "inexact Bareiss division");
                m[i][j] = q;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        r += 1;
    }
    r
}

/// `K_M`: the number of free stencil parameters at consistency order `M`.
pub fn constraint_nullity(dim: usize, order: i32, exclude_corners: bool) -> Result<usize> {
    Ok(ConstraintSystem::new(dim, order, exclude_corners)?.nullity())
}

/// Both sides of the two-dimensional identity
/// `A_(0,k)(p) + i A_(1,k-1)(p) = (i p_1 + p_2)^k / k!`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormCheck {
    pub table: (Rational, Rational),
    pub closed_form: (Rational, Rational),
}

impl ClosedFormCheck {
    pub fn agrees(&self) -> bool {
        self.table == self.closed_form
    }
}

pub fn closed_form_check_2d(k: usize, p: [i64; 2]) -> Result<ClosedFormCheck> {
    if k < 1 {
        return Err(Error::Usage("closed form needs k >= 1".into()));
    }
    let mut table = TildeTable::new();
    let re = table.constraint(&[0, k as u8], &p);
    let im = table.constraint(&[1, (k - 1) as u8], &p);
    // (i p1 + p2)^k by repeated complex multiplication.
    let (mut zr, mut zi) = (BigInt::one(), BigInt::zero());
    let (br, bi) = (BigInt::from(p[1]), BigInt::from(p[0]));
    for _ in 0..k {
        let nr = &zr * &br - &zi * &bi;
        let ni = &zr * &bi + &zi * &br;
        zr = nr;
        zi = ni;
    }
    let f = factorial_big(k);
    Ok(ClosedFormCheck {
        table: (re, im),
        closed_form: (Rational::new(zr, f.clone()), Rational::new(zi, f)),
    })
}

/// `K_M` for `M = -1 ..= max_order`.
pub fn nullity_table(dim: usize, max_order: i32, exclude_corners: bool) -> Result<Vec<usize>> {
    (-1..=max_order)
        .map(|m| constraint_nullity(dim, m, exclude_corners))
        .collect()
}
