//! The base algebra `B = M_d(Q)` with exact rational entries, and dense
//! tables for multilinear maps `B^r -> B`.
//!
//! Multilinear maps are stored against the matrix-unit basis
//! `E_11, E_12, ..., E_dd` (row-major), one output matrix per input basis
//! tuple, with the first input slot most significant in the flat index.
//! That ordering is part of the on-disk format and must not change.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::{Error, Result};

/// Exact scalar: arbitrary-precision rational.
pub type Rat = BigRational;

/// Parse a rational in the strict canonical form `p/q`: lowest terms,
/// explicit positive denominator, no leading zeros, sign only on `p`.
pub fn rat_from_str(s: &str) -> Result<Rat> {
    let reject = || Error::InvalidRational(s.to_string());
    let (num_str, den_str) = s.split_once('/').ok_or_else(reject)?;
    let num_digits = num_str.strip_prefix('-').unwrap_or(num_str);
    for part in [num_digits, den_str] {
        if part.is_empty()
            || !part.bytes().all(|b| b.is_ascii_digit())
            || (part.len() > 1 && part.starts_with('0'))
        {
            return Err(reject());
        }
    }
    let num: BigInt = num_str.parse().map_err(|_| reject())?;
    let den: BigInt = den_str.parse().map_err(|_| reject())?;
    if den.is_zero() {
        return Err(reject());
    }
    let value = Rat::new(num, den);
    // `Rat::new` reduces; accept only strings already in that normal form.
    if rat_to_str(&value) != s {
        return Err(reject());
    }
    Ok(value)
}

/// Render a rational in the canonical form accepted by [`rat_from_str`].
pub fn rat_to_str(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// A `d x d` matrix over `Q`, row-major.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BMatrix {
    d: usize,
    entries: Vec<Rat>,
}

impl BMatrix {
    pub fn zero(d: usize) -> Self {
        BMatrix {
            d,
            entries: vec![Rat::zero(); d * d],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = BMatrix::zero(d);
        for i in 0..d {
            m.entries[i * d + i] = Rat::one();
        }
        m
    }

    /// Matrix unit `E_{ij}` (0-based indices).
    pub fn unit(d: usize, i: usize, j: usize) -> Self {
        let mut m = BMatrix::zero(d);
        m.entries[i * d + j] = Rat::one();
        m
    }

    /// Scalar `r` embedded as `r * 1_B`.
    pub fn scalar(d: usize, r: Rat) -> Self {
        let mut m = BMatrix::zero(d);
        for i in 0..d {
            m.entries[i * d + i] = r.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let d = rows.len();
        let mut entries = Vec::with_capacity(d * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(BMatrix { d, entries })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.entries[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.entries[i * self.d + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Rat::is_zero)
    }

    /// Iterate over nonzero entries as `(row, col, value)`.
    pub fn nonzero_iter(&self) -> impl Iterator<Item = (usize, usize, &Rat)> {
        let d = self.d;
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(move |(k, v)| (k / d, k % d, v))
    }

    fn check_dim(&self, other: &BMatrix) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &BMatrix) -> Result<BMatrix> {
        self.check_dim(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(BMatrix { d: self.d, entries })
    }

    pub fn add_assign(&mut self, other: &BMatrix) {
        debug_assert_eq!(self.d, other.d);
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            if !b.is_zero() {
                *a += b;
            }
        }
    }

    /// `self += other * scale`, skipping zero entries of `other`.
    pub fn add_assign_scaled(&mut self, other: &BMatrix, scale: &Rat) {
        debug_assert_eq!(self.d, other.d);
        if scale.is_zero() {
            return;
        }
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            if !b.is_zero() {
                *a += b * scale;
            }
        }
    }

    pub fn sub(&self, other: &BMatrix) -> Result<BMatrix> {
        self.check_dim(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(BMatrix { d: self.d, entries })
    }

    pub fn neg(&self) -> BMatrix {
        BMatrix {
            d: self.d,
            entries: self.entries.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, r: &Rat) -> BMatrix {
        if r.is_zero() {
            return BMatrix::zero(self.d);
        }
        BMatrix {
            d: self.d,
            entries: self.entries.iter().map(|a| a * r).collect(),
        }
    }

    /// Matrix product, skipping zero entries on both sides; the arguments
    /// met in practice (basis units and their small products) are sparse.
    pub fn mul(&self, other: &BMatrix) -> Result<BMatrix> {
        self.check_dim(other)?;
        let d = self.d;
        let mut out = BMatrix::zero(d);
        for i in 0..d {
            for k in 0..d {
                let a = &self.entries[i * d + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let b = &other.entries[k * d + j];
                    if b.is_zero() {
                        continue;
                    }
                    out.entries[i * d + j] += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `add_assign(scale * a * b)` without intermediate allocations beyond
    /// the scalar products; the workhorse of partitioned evaluation.
    pub fn accumulate_product(&mut self, a: &BMatrix, b: &BMatrix, scale: &Rat) {
        debug_assert_eq!(self.d, a.d);
        debug_assert_eq!(self.d, b.d);
        if scale.is_zero() {
            return;
        }
        let d = self.d;
        for i in 0..d {
            for k in 0..d {
                let x = &a.entries[i * d + k];
                if x.is_zero() {
                    continue;
                }
                let xs = x * scale;
                for j in 0..d {
                    let y = &b.entries[k * d + j];
                    if y.is_zero() {
                        continue;
                    }
                    self.entries[i * d + j] += &xs * y;
                }
            }
        }
    }
}

impl fmt::Display for BMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.d {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.d {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

/// Dense table for a multilinear map `B^arity -> B`: one output matrix per
/// tuple of basis units, the first input slot most significant.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MultilinearCoefficient {
    d: usize,
    arity: usize,
    table: Vec<BMatrix>,
}

impl MultilinearCoefficient {
    pub fn zero(d: usize, arity: usize) -> Self {
        let size = (d * d).pow(arity as u32);
        MultilinearCoefficient {
            d,
            arity,
            table: vec![BMatrix::zero(d); size],
        }
    }

    /// Arity-0 map: a constant element of `B`.
    pub fn constant(value: BMatrix) -> Self {
        MultilinearCoefficient {
            d: value.d(),
            arity: 0,
            table: vec![value],
        }
    }

    pub fn from_table(d: usize, arity: usize, table: Vec<BMatrix>) -> Result<Self> {
        let expected = (d * d).pow(arity as u32);
        if table.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: table.len(),
            });
        }
        if let Some(m) = table.iter().find(|m| m.d() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.d(),
            });
        }
        Ok(MultilinearCoefficient { d, arity, table })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[BMatrix] {
        &self.table
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(BMatrix::is_zero)
    }

    /// Flat index of a tuple of basis indices (each in `0..d*d`).
    pub fn flat_index(&self, basis: &[usize]) -> usize {
        debug_assert_eq!(basis.len(), self.arity);
        let dd = self.d * self.d;
        basis.iter().fold(0, |acc, &b| {
            debug_assert!(b < dd);
            acc * dd + b
        })
    }

    /// Value on a tuple of basis units, by direct lookup.
    pub fn value_at_basis(&self, basis: &[usize]) -> &BMatrix {
        &self.table[self.flat_index(basis)]
    }

    pub fn value_at_basis_mut(&mut self, basis: &[usize]) -> &mut BMatrix {
        let idx = self.flat_index(basis);
        &mut self.table[idx]
    }

    /// Evaluate the map on arbitrary arguments by expanding each one in the
    /// matrix-unit basis. Only nonzero entries of the arguments are visited,
    /// so near-basis arguments cost almost nothing.
    pub fn apply(&self, args: &[BMatrix]) -> Result<BMatrix> {
        if args.len() != self.arity {
            return Err(Error::DimensionMismatch {
                expected: self.arity,
                got: args.len(),
            });
        }
        let d = self.d;
        if let Some(bad) = args.iter().find(|a| a.d() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.d(),
            });
        }
        let mut out = BMatrix::zero(d);
        if self.arity == 0 {
            out.add_assign(&self.table[0]);
            return Ok(out);
        }
        // Nonzero support of each argument as flat basis indices.
        let supports: Vec<Vec<(usize, &Rat)>> = args
            .iter()
            .map(|a| {
                a.nonzero_iter()
                    .map(|(i, j, v)| (i * d + j, v))
                    .collect::<Vec<_>>()
            })
            .collect();
        if supports.iter().any(Vec::is_empty) {
            return Ok(out);
        }
        let mut choice = vec![0usize; self.arity];
        loop {
            let mut flat = 0usize;
            let dd = d * d;
            let mut coeff = Rat::one();
            for (slot, &c) in choice.iter().enumerate() {
                let (idx, v) = supports[slot][c];
                flat = flat * dd + idx;
                coeff *= v;
            }
            let cell = &self.table[flat];
            if !cell.is_zero() {
                out.add_assign_scaled(cell, &coeff);
            }
            // Advance the odometer over support choices.
            let mut slot = self.arity;
            let advanced = loop {
                if slot == 0 {
                    break false;
                }
                slot -= 1;
                choice[slot] += 1;
                if choice[slot] < supports[slot].len() {
                    break true;
                }
                choice[slot] = 0;
            };
            if !advanced {
                break;
            }
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &MultilinearCoefficient) {
        debug_assert_eq!(self.d, other.d);
        debug_assert_eq!(self.arity, other.arity);
        for (a, b) in self.table.iter_mut().zip(&other.table) {
            a.add_assign(b);
        }
    }

    pub fn sub(&self, other: &MultilinearCoefficient) -> Result<MultilinearCoefficient> {
        if self.arity != other.arity || self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.arity,
                got: other.arity,
            });
        }
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        MultilinearCoefficient::from_table(self.d, self.arity, table)
    }

    pub fn scale(&self, r: &Rat) -> MultilinearCoefficient {
        MultilinearCoefficient {
            d: self.d,
            arity: self.arity,
            table: self.table.iter().map(|m| m.scale(r)).collect(),
        }
    }

    /// Compose with a left factor: the map `args -> b * self(args)`.
    pub fn left_multiplied(&self, b: &BMatrix) -> Result<MultilinearCoefficient> {
        let table = self
            .table
            .iter()
            .map(|m| b.mul(m))
            .collect::<Result<Vec<_>>>()?;
        MultilinearCoefficient::from_table(self.d, self.arity, table)
    }
}

/// Iterate over all basis multi-indices of the given arity: `(d*d)^arity`
/// tuples in table order. Calls `f` with the current tuple.
pub fn for_each_basis_tuple(d: usize, arity: usize, mut f: impl FnMut(&[usize])) {
    let dd = d * d;
    let mut tuple = vec![0usize; arity];
    loop {
        f(&tuple);
        let mut slot = arity;
        let advanced = loop {
            if slot == 0 {
                break false;
            }
            slot -= 1;
            tuple[slot] += 1;
            if tuple[slot] < dd {
                break true;
            }
            tuple[slot] = 0;
        };
        if !advanced {
            break;
        }
    }
}
