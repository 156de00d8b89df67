//! The elementary abelian group `(Z_p)^k` and its regular permutation action
//! on `R^d`, `d = p^k`.
//!
//! Elements are encoded as integers `0..d` whose base-`p` digits are the
//! coordinates of the group vector, least significant digit first. The
//! identity is always index 0. The action permutes the standard basis
//! `e_h ↦ e_{g·h}`, so basis vectors are indexed by group elements.

use crate::error::{Error, Result};

/// Largest supported dimension `d = p^k`.
pub const MAX_ORDER: usize = 343;

pub type Element = usize;

/// Dense multiplication table for `(Z_p)^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupTable {
    p: usize,
    k: usize,
    d: usize,
    op: Vec<Element>,
    inv: Vec<Element>,
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

impl GroupTable {
    /// Builds `(Z_p)^k` for an odd prime `p` and `k >= 1`, with `p^k <= MAX_ORDER`.
    pub fn new(p: usize, k: usize) -> Result<Self> {
        if !is_prime(p) || p.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("p = {p} must be an odd prime")));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let mut d: usize = 1;
        for _ in 0..k {
            d = d.checked_mul(p).filter(|&d| d <= MAX_ORDER).ok_or(Error::Capacity {
                what: "p^k",
                value: (p as u64).saturating_pow(k as u32),
                cap: MAX_ORDER as u64,
            })?;
        }

        let digits = |mut x: usize| {
            let mut out = vec![0usize; k];
            for slot in out.iter_mut() {
                *slot = x % p;
                x /= p;
            }
            out
        };
        let encode = |digs: &[usize]| digs.iter().rev().fold(0usize, |acc, &c| acc * p + c);

        let all: Vec<Vec<usize>> = (0..d).map(digits).collect();
        let mut op = vec![0; d * d];
        for g in 0..d {
            for h in 0..d {
                let sum: Vec<usize> = all[g].iter().zip(&all[h]).map(|(a, b)| (a + b) % p).collect();
                op[g * d + h] = encode(&sum);
            }
        }
        let inv = (0..d)
            .map(|g| {
                let neg: Vec<usize> = all[g].iter().map(|&a| (p - a) % p).collect();
                encode(&neg)
            })
            .collect();
        Ok(Self { p, k, d, op, inv })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Group order, equal to the ambient dimension.
    pub fn order(&self) -> usize {
        self.d
    }

    pub fn identity(&self) -> Element {
        0
    }

    pub fn elements(&self) -> std::ops::Range<Element> {
        0..self.d
    }

    fn check(&self, g: Element) -> Result<()> {
        if g < self.d {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: g,
                order: self.d,
            })
        }
    }

    /// Group law: componentwise addition mod `p` of the digit vectors.
    pub fn multiply(&self, g: Element, h: Element) -> Result<Element> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.mul(g, h))
    }

    /// Unchecked group law for hot loops; panics on out-of-range indices.
    #[inline]
    pub fn mul(&self, g: Element, h: Element) -> Element {
        self.op[g * self.d + h]
    }

    pub fn inverse(&self, g: Element) -> Result<Element> {
        self.check(g)?;
        Ok(self.inv[g])
    }

    /// Base-`p` digits of `g`, least significant first.
    pub fn digits(&self, g: Element) -> Result<Vec<usize>> {
        self.check(g)?;
        let mut x = g;
        Ok((0..self.k)
            .map(|_| {
                let c = x % self.p;
                x /= self.p;
                c
            })
            .collect())
    }

    /// Multiplicative order of `g` (1 for the identity, `p` otherwise).
    pub fn element_order(&self, g: Element) -> Result<usize> {
        self.check(g)?;
        let mut acc = g;
        let mut n = 1;
        while acc != 0 {
            acc = self.mul(acc, g);
            n += 1;
        }
        Ok(n)
    }
}

/// Left regular action of the group on `R^d`: `g` sends `e_h` to `e_{g·h}`.
#[derive(Debug, Clone, Copy)]
pub struct PermutationAction<'a> {
    table: &'a GroupTable,
}

impl<'a> PermutationAction<'a> {
    pub fn new(table: &'a GroupTable) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &'a GroupTable {
        self.table
    }

    /// The permutation `h ↦ g·h` of `{0..d-1}`.
    pub fn perm(&self, g: Element) -> Result<Vec<usize>> {
        self.table.check(g)?;
        Ok((0..self.table.d).map(|h| self.table.mul(g, h)).collect())
    }

    /// Permutes coordinates of `x`: output coordinate `g·h` is input coordinate `h`.
    pub fn act(&self, g: Element, x: &[f64]) -> Result<Vec<f64>> {
        self.table.check(g)?;
        let d = self.table.d;
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; d];
        for (h, &xh) in x.iter().enumerate() {
            out[self.table.mul(g, h)] = xh;
        }
        Ok(out)
    }

    /// The permutation matrix `P_g` with `P_g e_h = e_{g·h}`.
    pub fn matrix(&self, g: Element) -> Result<nalgebra::DMatrix<f64>> {
        self.table.check(g)?;
        let d = self.table.d;
        let mut m = nalgebra::DMatrix::zeros(d, d);
        for h in 0..d {
            m[(self.table.mul(g, h), h)] = 1.0;
        }
        Ok(m)
    }
}
