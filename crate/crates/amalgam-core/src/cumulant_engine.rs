//! Joint moment/cumulant series and the partitioned evaluation engine.
//!
//! A [`SeriesTable`] stores, for each order `n` up to a truncation and each
//! index tuple in `{1..s}^n`, a multilinear coefficient `B^(n-1) -> B`.
//! Absent entries are zero maps, and all-zero tables are never stored, so
//! structural equality of tables is equality of the series.
//!
//! [`eval_partitioned`] evaluates the multiplicative extension of such a
//! family along a noncrossing partition by nested interval contraction.
//! The conversions between moment and cumulant families are defined by the
//! lattice sums over `NC(n)` (see [`partition_sum`]) and computed in
//! production by an equivalent first-block recursion that shares all
//! lower-order tables; the two routes are checked against each other in the
//! test suite.

use std::collections::BTreeMap;
use std::ops::{Deref, DerefMut};

use crate::balgebra::{BMatrix, MultilinearCoefficient, Rat};
use crate::nc_lattice::SetPartition;
use crate::{Error, Result};

/// Truncated series of multilinear coefficients, indexed by tuples over
/// `{1..s}`. The shared carrier of joint moment and joint cumulant data.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SeriesTable {
    d: usize,
    s: usize,
    truncation: usize,
    map: BTreeMap<Vec<usize>, MultilinearCoefficient>,
}

impl SeriesTable {
    pub fn new(d: usize, s: usize, truncation: usize) -> Result<Self> {
        if d == 0 || s == 0 || truncation == 0 {
            return Err(Error::InvalidArgument(
                "dimension, variable count, and truncation must be positive".into(),
            ));
        }
        Ok(SeriesTable {
            d,
            s,
            truncation,
            map: BTreeMap::new(),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of variables.
    pub fn s(&self) -> usize {
        self.s
    }

    /// Highest order with defined coefficients.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    fn check_tuple(&self, tuple: &[usize]) -> Result<()> {
        if tuple.is_empty() {
            return Err(Error::InvalidArgument("empty index tuple".into()));
        }
        if tuple.len() > self.truncation {
            return Err(Error::TruncationExceeded {
                order: tuple.len(),
                truncation: self.truncation,
            });
        }
        if let Some(&v) = tuple.iter().find(|&&v| v == 0 || v > self.s) {
            return Err(Error::InvalidArgument(format!(
                "variable index {v} outside 1..={}",
                self.s
            )));
        }
        Ok(())
    }

    /// Store a coefficient; all-zero tables are dropped so that absence is
    /// the canonical representation of the zero map.
    pub fn insert(&mut self, tuple: Vec<usize>, coeff: MultilinearCoefficient) -> Result<()> {
        self.check_tuple(&tuple)?;
        if coeff.d() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: coeff.d(),
            });
        }
        if coeff.arity() != tuple.len() - 1 {
            return Err(Error::DimensionMismatch {
                expected: tuple.len() - 1,
                got: coeff.arity(),
            });
        }
        if coeff.is_zero() {
            self.map.remove(&tuple);
        } else {
            self.map.insert(tuple, coeff);
        }
        Ok(())
    }

    pub fn coefficient(&self, tuple: &[usize]) -> Option<&MultilinearCoefficient> {
        self.map.get(tuple)
    }

    /// Value of the coefficient at `tuple` on a tuple of basis units;
    /// `None` means the zero map.
    pub fn value_at(&self, tuple: &[usize], basis: &[usize]) -> Option<&BMatrix> {
        self.map.get(tuple).map(|c| c.value_at_basis(basis))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &MultilinearCoefficient)> {
        self.map.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.map.is_empty()
    }

    pub(crate) fn map(&self) -> &BTreeMap<Vec<usize>, MultilinearCoefficient> {
        &self.map
    }

    /// Re-declare the truncation. Raising it asserts that the new orders are
    /// zero maps (the natural reading for polynomial specs); lowering drops
    /// higher entries.
    pub fn with_truncation(&self, truncation: usize) -> Result<SeriesTable> {
        if truncation == 0 {
            return Err(Error::InvalidArgument("truncation must be positive".into()));
        }
        let mut out = self.clone();
        out.truncation = truncation;
        out.map.retain(|k, _| k.len() <= truncation);
        Ok(out)
    }

    /// Relabel variables by a bijection of `{1..s}`: index `v` becomes
    /// `perm[v-1]`.
    pub fn permute_variables(&self, perm: &[usize]) -> Result<SeriesTable> {
        if perm.len() != self.s {
            return Err(Error::DimensionMismatch {
                expected: self.s,
                got: perm.len(),
            });
        }
        let mut seen = vec![false; self.s + 1];
        for &v in perm {
            if v == 0 || v > self.s || seen[v] {
                return Err(Error::InvalidArgument(
                    "variable permutation must be a bijection of 1..=s".into(),
                ));
            }
            seen[v] = true;
        }
        let mut out = SeriesTable::new(self.d, self.s, self.truncation)?;
        for (tuple, coeff) in &self.map {
            let new_tuple: Vec<usize> = tuple.iter().map(|&v| perm[v - 1]).collect();
            out.insert(new_tuple, coeff.clone())?;
        }
        Ok(out)
    }
}

/// Joint cumulant family (`R`-transform data).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct JointCumulantSpec(pub SeriesTable);

/// Joint moment family.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct JointMomentSpec(pub SeriesTable);

impl Deref for JointCumulantSpec {
    type Target = SeriesTable;
    fn deref(&self) -> &SeriesTable {
        &self.0
    }
}

impl DerefMut for JointCumulantSpec {
    fn deref_mut(&mut self) -> &mut SeriesTable {
        &mut self.0
    }
}

impl Deref for JointMomentSpec {
    type Target = SeriesTable;
    fn deref(&self) -> &SeriesTable {
        &self.0
    }
}

impl DerefMut for JointMomentSpec {
    fn deref_mut(&mut self) -> &mut SeriesTable {
        &mut self.0
    }
}

/// A word `x_{i_1} . b_2 x_{i_2} . ... . b_n x_{i_n} . tail`: each slot is a
/// left coefficient together with a variable index.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Word {
    slots: Vec<(BMatrix, usize)>,
    tail: BMatrix,
}

impl Word {
    pub fn new(slots: Vec<(BMatrix, usize)>, tail: BMatrix) -> Result<Self> {
        let d = tail.d();
        if slots.is_empty() {
            return Err(Error::InvalidArgument("word must have at least one slot".into()));
        }
        if let Some((c, _)) = slots.iter().find(|(c, _)| c.d() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.d(),
            });
        }
        Ok(Word { slots, tail })
    }

    /// Word with all coefficients `1_B`.
    pub fn from_vars(vars: &[usize], d: usize) -> Result<Self> {
        Word::new(
            vars.iter().map(|&v| (BMatrix::identity(d), v)).collect(),
            BMatrix::identity(d),
        )
    }

    /// Word `x_{i_1} b_2 x_{i_2} ... b_n x_{i_n}` with `args = (b_2..b_n)`,
    /// leading coefficient and tail `1_B`.
    pub fn with_interior_args(vars: &[usize], args: Vec<BMatrix>, d: usize) -> Result<Self> {
        if args.len() + 1 != vars.len() {
            return Err(Error::DimensionMismatch {
                expected: vars.len().saturating_sub(1),
                got: args.len(),
            });
        }
        let mut slots = Vec::with_capacity(vars.len());
        slots.push((BMatrix::identity(d), vars[0]));
        for (arg, &v) in args.into_iter().zip(&vars[1..]) {
            slots.push((arg, v));
        }
        Word::new(slots, BMatrix::identity(d))
    }

    pub fn slots(&self) -> &[(BMatrix, usize)] {
        &self.slots
    }

    pub fn tail(&self) -> &BMatrix {
        &self.tail
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Evaluate the multiplicative extension of `family` along `p`: contract
/// interval blocks innermost-first (smallest last element), folding each
/// block's value into the next surviving slot's left coefficient (or the
/// tail). The result does not depend on the admissible contraction order;
/// see [`eval_partitioned_in_order`] and the order-independence tests.
pub fn eval_partitioned(family: &SeriesTable, p: &SetPartition, w: &Word) -> Result<BMatrix> {
    let mut order: Vec<usize> = (0..p.num_blocks()).collect();
    order.sort_by_key(|&b| p.blocks()[b].last().copied());
    eval_with_block_order(family, p, w, &order)
}

/// Evaluate along `p` contracting blocks in the caller's order (indices into
/// `p.blocks()`). Each block must be an interval of the live word when its
/// turn comes; otherwise the order is rejected.
pub fn eval_partitioned_in_order(
    family: &SeriesTable,
    p: &SetPartition,
    w: &Word,
    order: &[usize],
) -> Result<BMatrix> {
    if order.len() != p.num_blocks() {
        return Err(Error::InvalidArgument(format!(
            "contraction order has {} entries for {} blocks",
            order.len(),
            p.num_blocks()
        )));
    }
    let mut seen = vec![false; p.num_blocks()];
    for &b in order {
        if b >= p.num_blocks() || seen[b] {
            return Err(Error::InvalidArgument(
                "contraction order must be a permutation of the block indices".into(),
            ));
        }
        seen[b] = true;
    }
    eval_with_block_order(family, p, w, order)
}

fn eval_with_block_order(
    family: &SeriesTable,
    p: &SetPartition,
    w: &Word,
    order: &[usize],
) -> Result<BMatrix> {
    let n = w.len();
    if p.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.n(),
        });
    }
    if !p.is_noncrossing() {
        return Err(Error::NotNoncrossing);
    }
    let d = family.d();
    if w.tail().d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: w.tail().d(),
        });
    }
    for (_, v) in w.slots() {
        if *v == 0 || *v > family.s() {
            return Err(Error::InvalidArgument(format!(
                "variable index {v} outside 1..={}",
                family.s()
            )));
        }
    }
    for block in p.blocks() {
        if block.len() > family.truncation() {
            return Err(Error::TruncationExceeded {
                order: block.len(),
                truncation: family.truncation(),
            });
        }
    }

    let mut live = vec![true; n];
    let mut coeffs: Vec<BMatrix> = w.slots().iter().map(|(c, _)| c.clone()).collect();
    let vars: Vec<usize> = w.slots().iter().map(|(_, v)| *v).collect();
    let mut tail = w.tail().clone();

    for &bi in order {
        let block = &p.blocks()[bi];
        let first = block[0] - 1;
        let last = block[block.len() - 1] - 1;
        // The block must be an interval of the live word.
        let mut member = vec![false; n];
        for &x in block {
            if !live[x - 1] {
                return Err(Error::InvalidArgument(
                    "contraction order revisits a consumed slot".into(),
                ));
            }
            member[x - 1] = true;
        }
        for pos in first..=last {
            if live[pos] && !member[pos] {
                return Err(Error::InvalidArgument(format!(
                    "block {} is not an interval of the live word",
                    bi
                )));
            }
        }
        let key: Vec<usize> = block.iter().map(|&x| vars[x - 1]).collect();
        let coeff = match family.coefficient(&key) {
            Some(c) => c,
            // Absent key: the whole product vanishes.
            None => return Ok(BMatrix::zero(d)),
        };
        let args: Vec<BMatrix> = block[1..].iter().map(|&x| coeffs[x - 1].clone()).collect();
        let u = coeffs[first].mul(&coeff.apply(&args)?)?;
        for &x in block {
            live[x - 1] = false;
        }
        match (last + 1..n).find(|&pos| live[pos]) {
            Some(next) => coeffs[next] = u.mul(&coeffs[next])?,
            None => tail = u.mul(&tail)?,
        }
    }
    Ok(tail)
}

/// Weighted sum of partitioned evaluations over the given partitions, as a
/// multilinear coefficient in the word's interior arguments: the value at
/// basis arguments `(b_2..b_n)` is `sum_i weight_i *
/// eval_partitioned(family, partitions[i], word)`. This is the defining
/// lattice-sum route for the moment/cumulant conversions and the
/// even-partition identities; partitions whose blocks hit absent keys are
/// filtered out once, before the basis loop.
pub fn partition_sum(
    family: &SeriesTable,
    partitions: &[SetPartition],
    weights: Option<&[i64]>,
    vars: &[usize],
) -> Result<MultilinearCoefficient> {
    let n = vars.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty index tuple".into()));
    }
    if n > family.truncation() {
        return Err(Error::TruncationExceeded {
            order: n,
            truncation: family.truncation(),
        });
    }
    if let Some(w) = weights {
        if w.len() != partitions.len() {
            return Err(Error::DimensionMismatch {
                expected: partitions.len(),
                got: w.len(),
            });
        }
    }
    let d = family.d();
    let admissible: Vec<usize> = (0..partitions.len())
        .filter(|&i| {
            partitions[i].blocks().iter().all(|block| {
                let key: Vec<usize> = block.iter().map(|&x| vars[x - 1]).collect();
                family.coefficient(&key).is_some()
            })
        })
        .collect();
    let mut out = MultilinearCoefficient::zero(d, n - 1);
    if admissible.is_empty() {
        return Ok(out);
    }
    let dd = d * d;
    let mut basis = vec![0usize; n - 1];
    loop {
        let word = Word::with_interior_args(
            vars,
            basis.iter().map(|&b| BMatrix::unit(d, b / d, b % d)).collect(),
            d,
        )?;
        let mut acc = BMatrix::zero(d);
        for &i in &admissible {
            let value = eval_partitioned(family, &partitions[i], &word)?;
            match weights {
                Some(w) => acc.add_assign_scaled(&value, &Rat::from_integer(w[i].into())),
                None => acc.add_assign(&value),
            }
        }
        if !acc.is_zero() {
            *out.value_at_basis_mut(&basis) = acc;
        }
        if !advance_odometer(&mut basis, dd) {
            break;
        }
    }
    Ok(out)
}

/// Advance a mixed-radix counter (uniform radix); false when it wraps.
pub(crate) fn advance_odometer(digits: &mut [usize], radix: usize) -> bool {
    let mut slot = digits.len();
    loop {
        if slot == 0 {
            return false;
        }
        slot -= 1;
        digits[slot] += 1;
        if digits[slot] < radix {
            return true;
        }
        digits[slot] = 0;
    }
}

/// Enumerate `{1..s}^n` in lexicographic order.
pub(crate) fn all_tuples(s: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut digits = vec![0usize; n];
    loop {
        out.push(digits.iter().map(|&x| x + 1).collect());
        if !advance_odometer(&mut digits, s) {
            break;
        }
    }
    out
}

/// One term family of the first-block expansion for a fixed index tuple:
/// the block of position 1 (as 0-based positions), the key it reads from the
/// cumulant side, the gap intervals between consecutive block positions, and
/// the suffix interval after the last one. Plans are built once per tuple and
/// reused across all basis tuples; inadmissible terms (any needed key absent)
/// are dropped here, which is what keeps sparse specs fast.
struct MaskPlan {
    key: Vec<usize>,
    positions: Vec<usize>,
    gaps: Vec<Option<(usize, usize)>>,
    suffix: Option<(usize, usize)>,
}

fn build_plans(
    tuple: &[usize],
    cumulant_side: &BTreeMap<Vec<usize>, MultilinearCoefficient>,
    moment_side: &BTreeMap<Vec<usize>, MultilinearCoefficient>,
    skip_full: bool,
) -> Vec<MaskPlan> {
    let n = tuple.len();
    let mut plans = Vec::new();
    'mask: for mask in 0u32..(1u32 << (n - 1)) {
        if skip_full && mask == (1u32 << (n - 1)) - 1 {
            continue;
        }
        let mut positions = vec![0usize];
        for bit in 0..(n - 1) {
            if mask & (1 << bit) != 0 {
                positions.push(bit + 1);
            }
        }
        let key: Vec<usize> = positions.iter().map(|&p| tuple[p]).collect();
        if !cumulant_side.contains_key(&key) {
            continue;
        }
        let mut gaps = Vec::with_capacity(positions.len() - 1);
        for w in positions.windows(2) {
            if w[1] == w[0] + 1 {
                gaps.push(None);
            } else {
                let (l, r) = (w[0] + 1, w[1] - 1);
                if !moment_side.contains_key(&tuple[l..=r]) {
                    continue 'mask;
                }
                gaps.push(Some((l, r)));
            }
        }
        let last = *positions.last().expect("nonempty");
        let suffix = if last + 1 < n {
            let (l, r) = (last + 1, n - 1);
            if !moment_side.contains_key(&tuple[l..=r]) {
                continue 'mask;
            }
            Some((l, r))
        } else {
            None
        };
        plans.push(MaskPlan {
            key,
            positions,
            gaps,
            suffix,
        });
    }
    plans
}

/// Moment value of the segment `[l..=r]` (0-based positions of `tuple`),
/// including position `l`'s own basis unit as a left factor. `basis[j-1]`
/// is the unit index of position `j`.
fn segment_value(
    moment_side: &BTreeMap<Vec<usize>, MultilinearCoefficient>,
    tuple: &[usize],
    basis: &[usize],
    l: usize,
    r: usize,
    d: usize,
) -> Result<BMatrix> {
    let table = moment_side
        .get(&tuple[l..=r])
        .expect("plan admissibility guarantees presence");
    let inner = table.value_at_basis(&basis[l..r]);
    BMatrix::unit(d, basis[l - 1] / d, basis[l - 1] % d).mul(inner)
}

/// Value at one basis tuple of the first-block expansion
/// `sum_{V: 1 in V} (cumulant at V, gaps folded in) * (suffix moment)`.
fn expansion_value(
    plans: &[MaskPlan],
    cumulant_side: &BTreeMap<Vec<usize>, MultilinearCoefficient>,
    moment_side: &BTreeMap<Vec<usize>, MultilinearCoefficient>,
    tuple: &[usize],
    basis: &[usize],
    d: usize,
) -> Result<BMatrix> {
    let mut acc = BMatrix::zero(d);
    'plan: for plan in plans {
        let coeff = cumulant_side
            .get(&plan.key)
            .expect("plan admissibility guarantees presence");
        let mut args = Vec::with_capacity(plan.positions.len() - 1);
        for (i, &pos) in plan.positions.iter().enumerate().skip(1) {
            let unit_idx = basis[pos - 1];
            let unit = BMatrix::unit(d, unit_idx / d, unit_idx % d);
            let arg = match plan.gaps[i - 1] {
                None => unit,
                Some((l, r)) => {
                    let g = segment_value(moment_side, tuple, basis, l, r, d)?;
                    if g.is_zero() {
                        continue 'plan;
                    }
                    g.mul(&unit)?
                }
            };
            args.push(arg);
        }
        let u = coeff.apply(&args)?;
        if u.is_zero() {
            continue;
        }
        match plan.suffix {
            None => acc.add_assign(&u),
            Some((l, r)) => {
                let sfx = segment_value(moment_side, tuple, basis, l, r, d)?;
                acc.add_assign(&u.mul(&sfx)?);
            }
        }
    }
    Ok(acc)
}

/// Shared engine of the two conversions. Rather than summing over all of
/// `NC(n)` per basis tuple, group partitions by the block containing
/// position 1: the gaps between its elements and the tail after its last
/// element carry independent sub-partitions whose sums are exactly
/// lower-order moment tables. This yields
/// `M_n = sum_{V: 1 in V} (kappa at V with gap moments folded) * (suffix moment)`
/// and, solved for the full block, the inverse direction. Values agree with
/// the direct lattice sums (tested).
fn convert_series(src: &SeriesTable, to_moments: bool) -> Result<SeriesTable> {
    let (d, s, trunc) = (src.d(), src.s(), src.truncation());
    let mut out = SeriesTable::new(d, s, trunc)?;
    for n in 1..=trunc {
        for tuple in all_tuples(s, n) {
            let plans = if to_moments {
                build_plans(&tuple, src.map(), out.map(), false)
            } else {
                build_plans(&tuple, out.map(), src.map(), true)
            };
            let mut coeff = MultilinearCoefficient::zero(d, n - 1);
            let mut nonzero = false;
            let mut basis = vec![0usize; n - 1];
            loop {
                let expanded = if to_moments {
                    expansion_value(&plans, src.map(), out.map(), &tuple, &basis, d)?
                } else {
                    expansion_value(&plans, out.map(), src.map(), &tuple, &basis, d)?
                };
                let value = if to_moments {
                    expanded
                } else {
                    match src.value_at(&tuple, &basis) {
                        Some(m) => m.sub(&expanded)?,
                        None => expanded.neg(),
                    }
                };
                if !value.is_zero() {
                    nonzero = true;
                    *coeff.value_at_basis_mut(&basis) = value;
                }
                if !advance_odometer(&mut basis, d * d) {
                    break;
                }
            }
            if nonzero {
                out.insert(tuple, coeff)?;
            }
        }
    }
    Ok(out)
}

/// Joint moments of the family with the given joint cumulants: for every
/// order and tuple, the coefficient value at basis arguments equals
/// `sum_{pi in NC(n)} eval_partitioned(c, pi, word)`.
pub fn moments_from_cumulants(c: &JointCumulantSpec) -> Result<JointMomentSpec> {
    Ok(JointMomentSpec(convert_series(&c.0, true)?))
}

/// Möbius inversion of [`moments_from_cumulants`]: the cumulant coefficient
/// value equals `sum_{pi in NC(n)} mu(pi, 1_n) * eval_partitioned(m, pi, word)`.
pub fn cumulants_from_moments(m: &JointMomentSpec) -> Result<JointCumulantSpec> {
    Ok(JointCumulantSpec(convert_series(&m.0, false)?))
}

/// Direct lattice-sum conversion (the defining formula, unoptimized): kept
/// public as the reference route for cross-checking `moments_from_cumulants`.
pub fn moments_from_cumulants_direct(c: &JointCumulantSpec) -> Result<JointMomentSpec> {
    let (d, s, trunc) = (c.d(), c.s(), c.truncation());
    let mut out = SeriesTable::new(d, s, trunc)?;
    for n in 1..=trunc {
        let partitions = crate::nc_lattice::enumerate_nc(n)?;
        for tuple in all_tuples(s, n) {
            let coeff = partition_sum(&c.0, &partitions, None, &tuple)?;
            if !coeff.is_zero() {
                out.insert(tuple, coeff)?;
            }
        }
    }
    Ok(JointMomentSpec(out))
}

/// Direct Möbius-weighted lattice sum, the reference route for
/// `cumulants_from_moments`.
pub fn cumulants_from_moments_direct(m: &JointMomentSpec) -> Result<JointCumulantSpec> {
    let (d, s, trunc) = (m.d(), m.s(), m.truncation());
    let mut out = SeriesTable::new(d, s, trunc)?;
    for n in 1..=trunc {
        let partitions = crate::nc_lattice::enumerate_nc(n)?;
        let weights = crate::nc_lattice::mobius_to_full(n)?;
        for tuple in all_tuples(s, n) {
            let coeff = partition_sum(&m.0, &partitions, Some(&weights), &tuple)?;
            if !coeff.is_zero() {
                out.insert(tuple, coeff)?;
            }
        }
    }
    Ok(JointCumulantSpec(out))
}

/// Evaluate every stored coefficient at the constant arguments
/// `(b0, ..., b0)`: the symmetric series of the family, with `b0 = 1_B`
/// giving the trivial series.
pub fn extract_series(
    table: &SeriesTable,
    b0: &BMatrix,
) -> Result<BTreeMap<Vec<usize>, BMatrix>> {
    if b0.d() != table.d() {
        return Err(Error::DimensionMismatch {
            expected: table.d(),
            got: b0.d(),
        });
    }
    let mut out = BTreeMap::new();
    for (tuple, coeff) in table.entries() {
        let args = vec![b0.clone(); coeff.arity()];
        out.insert(tuple.clone(), coeff.apply(&args)?);
    }
    Ok(out)
}
