//! The lattice `NC(n)` of noncrossing partitions of `{1..n}`.
//!
//! Provides enumeration, the refinement order, the Kreweras complement, the
//! Möbius function of the lattice, the even-block sublattice filter, and the
//! alternating-union embedding `NC(n) -> NC(2n)` used by boxed convolution.
//!
//! Partitions are kept in a canonical form (blocks sorted by minimum,
//! elements ascending, 1-based), so structural equality is partition
//! equality and enumeration order is reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result};

/// Default cap on the order `n`; `|NC(10)| = 16796` keeps every table cheap.
pub const DEFAULT_MAX_ORDER: usize = 10;

static MAX_ORDER: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_ORDER);

/// Current cap on partition orders accepted by this module.
pub fn max_order() -> usize {
    MAX_ORDER.load(Ordering::Relaxed)
}

/// Raise or lower the order cap. Intended for front-end configuration;
/// enumeration cost grows like the Catalan numbers, so raise with care.
pub fn set_max_order(n: usize) {
    MAX_ORDER.store(n, Ordering::Relaxed);
}

fn check_order(n: usize) -> Result<()> {
    let max = max_order();
    if n == 0 || n > max {
        return Err(Error::OrderOutOfRange { n, max });
    }
    Ok(())
}

/// A set partition of `{1..n}` in canonical form: blocks are pairwise
/// disjoint, cover `{1..n}`, are internally ascending, and are ordered by
/// their minimum element.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Build a partition of `{1..n}` from blocks in any order, validating
    /// disjointness and coverage and canonicalizing the result.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPartition("ground set must be nonempty".into()));
        }
        let mut seen = vec![false; n + 1];
        let mut canonical: Vec<Vec<usize>> = Vec::with_capacity(blocks.len());
        for mut block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &x in &block {
                if x == 0 || x > n {
                    return Err(Error::InvalidPartition(format!(
                        "element {x} outside 1..={n}"
                    )));
                }
                if seen[x] {
                    return Err(Error::InvalidPartition(format!("element {x} repeated")));
                }
                seen[x] = true;
            }
            canonical.push(block);
        }
        if let Some(missing) = (1..=n).find(|&x| !seen[x]) {
            return Err(Error::InvalidPartition(format!("element {missing} missing")));
        }
        canonical.sort_unstable();
        Ok(SetPartition { n, blocks: canonical })
    }

    /// Internal constructor for blocks already known to be canonical.
    fn from_canonical(n: usize, blocks: Vec<Vec<usize>>) -> Self {
        debug_assert!({
            let p = SetPartition::new(n, blocks.clone()).expect("canonical blocks");
            p.blocks == blocks
        });
        SetPartition { n, blocks }
    }

    /// The discrete partition `0_n` (all singletons).
    pub fn discrete(n: usize) -> Self {
        SetPartition {
            n,
            blocks: (1..=n).map(|x| vec![x]).collect(),
        }
    }

    /// The full partition `1_n` (a single block).
    pub fn full(n: usize) -> Self {
        SetPartition {
            n,
            blocks: vec![(1..=n).collect()],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Index (into `blocks`) of the block containing each element; entry 0 is unused.
    fn block_index(&self) -> Vec<usize> {
        let mut idx = vec![usize::MAX; self.n + 1];
        for (b, block) in self.blocks.iter().enumerate() {
            for &x in block {
                idx[x] = b;
            }
        }
        idx
    }

    /// True iff no two blocks cross (no `a < b < c < d` with `a,c` in one
    /// block and `b,d` in another).
    pub fn is_noncrossing(&self) -> bool {
        // Two blocks cross iff merging their sorted elements alternates
        // ownership at least three times (pattern A..B..A..B).
        for i in 0..self.blocks.len() {
            for j in (i + 1)..self.blocks.len() {
                if blocks_cross(&self.blocks[i], &self.blocks[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Refinement order: true iff every block of `self` lies inside a block
    /// of `coarser`.
    pub fn leq_refine(&self, coarser: &SetPartition) -> Result<bool> {
        if self.n != coarser.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: coarser.n,
            });
        }
        let idx = coarser.block_index();
        Ok(self
            .blocks
            .iter()
            .all(|block| block.iter().all(|&x| idx[x] == idx[block[0]])))
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (k, x) in block.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

fn blocks_cross(a: &[usize], b: &[usize]) -> bool {
    let mut alternations = 0;
    let mut last_in_a = None;
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x < y,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!(),
        };
        if last_in_a != Some(take_a) {
            alternations += 1;
            last_in_a = Some(take_a);
        }
        if take_a {
            i += 1;
        } else {
            j += 1;
        }
    }
    alternations >= 4
}

type RawPartition = Vec<Vec<usize>>;

static NC_CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<Vec<SetPartition>>>>> = OnceLock::new();

/// All noncrossing partitions of `{1..n}` in canonical (lexicographic)
/// order. Cached per `n`; the returned list is shared.
pub fn enumerate_nc(n: usize) -> Result<Arc<Vec<SetPartition>>> {
    check_order(n)?;
    let cache = NC_CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().expect("NC cache poisoned");
    if let Some(list) = guard.get(&n) {
        return Ok(Arc::clone(list));
    }
    // Build raw interval partitions bottom-up so each length only looks at
    // strictly smaller ones.
    let mut raw: BTreeMap<usize, Vec<RawPartition>> = BTreeMap::new();
    raw.insert(0, vec![Vec::new()]);
    for m in 1..=n {
        let built = build_interval(m, &raw);
        raw.insert(m, built);
    }
    let mut list: Vec<SetPartition> = raw
        .remove(&n)
        .expect("just built")
        .into_iter()
        .map(|blocks| SetPartition::from_canonical(n, blocks))
        .collect();
    list.sort_unstable();
    let arc = Arc::new(list);
    guard.insert(n, Arc::clone(&arc));
    Ok(arc)
}

/// Noncrossing partitions of an interval of length `m`, positions `1..=m`,
/// by recursion on the block containing 1: the complement of that block
/// splits into independent gap intervals and a tail interval.
fn build_interval(m: usize, smaller: &BTreeMap<usize, Vec<RawPartition>>) -> Vec<RawPartition> {
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << (m - 1)) {
        let mut first_block = vec![1usize];
        for bit in 0..(m - 1) {
            if mask & (1 << bit) != 0 {
                first_block.push(bit + 2);
            }
        }
        // Segments of positions not in the first block: the gaps between
        // consecutive chosen elements and the tail after the last one.
        let mut segments: Vec<(usize, usize)> = Vec::new(); // (offset, length)
        for w in first_block.windows(2) {
            if w[1] > w[0] + 1 {
                segments.push((w[0], w[1] - w[0] - 1));
            }
        }
        let last = *first_block.last().expect("nonempty");
        if last < m {
            segments.push((last, m - last));
        }
        let seg_parts: Vec<&Vec<RawPartition>> = segments
            .iter()
            .map(|&(_, len)| smaller.get(&len).expect("built bottom-up"))
            .collect();
        // Odometer over the choices of a partition for each segment.
        let mut choice = vec![0usize; segments.len()];
        loop {
            let mut blocks: RawPartition = vec![first_block.clone()];
            for (seg_idx, &(offset, _)) in segments.iter().enumerate() {
                for block in &seg_parts[seg_idx][choice[seg_idx]] {
                    blocks.push(block.iter().map(|&x| x + offset).collect());
                }
            }
            blocks.sort_unstable();
            out.push(blocks);
            // Advance the odometer.
            let mut pos = segments.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < seg_parts[pos].len() {
                    break;
                }
                choice[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX || segments.is_empty() {
                break;
            }
        }
    }
    out
}

/// The noncrossing partitions of `{1..n}` all of whose blocks have even
/// size. Errors for odd `n`, where no such partition exists.
pub fn enumerate_nc_even(n: usize) -> Result<Vec<SetPartition>> {
    check_order(n)?;
    if n % 2 != 0 {
        return Err(Error::OrderOutOfRange { n, max: max_order() });
    }
    Ok(enumerate_nc(n)?
        .iter()
        .filter(|p| p.blocks().iter().all(|b| b.len() % 2 == 0))
        .cloned()
        .collect())
}

/// Kreweras complement of a noncrossing partition, via the permutation
/// characterization: with `c` the long cycle `i -> i+1 (mod n)` and
/// `sigma_p` the permutation whose cycles are the blocks of `p` traversed in
/// increasing order, `Kr(p)` has the cycles of `sigma_p^{-1} . c`. This is
/// the unique maximal `q` whose interleave with `p` (odd/even positions of
/// `{1..2n}`) stays noncrossing; the brute-force characterization is kept as
/// a test oracle.
pub fn kreweras(p: &SetPartition) -> Result<SetPartition> {
    check_order(p.n())?;
    if !p.is_noncrossing() {
        return Err(Error::NotNoncrossing);
    }
    let n = p.n();
    // sigma maps each block element to the next one cyclically.
    let mut sigma_inv = vec![0usize; n + 1];
    for block in p.blocks() {
        for k in 0..block.len() {
            let next = block[(k + 1) % block.len()];
            sigma_inv[next] = block[k];
        }
    }
    let mut assigned = vec![false; n + 1];
    let mut blocks = Vec::new();
    for start in 1..=n {
        if assigned[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut x = start;
        loop {
            cycle.push(x);
            assigned[x] = true;
            let c_x = x % n + 1;
            x = sigma_inv[c_x];
            if x == start {
                break;
            }
        }
        blocks.push(cycle);
    }
    SetPartition::new(n, blocks)
}

/// Interleave `p` on odd positions (`k -> 2k-1`) and `q` on even positions
/// (`k -> 2k`) of `{1..2n}`.
fn interleave(p: &SetPartition, q: &SetPartition) -> SetPartition {
    debug_assert_eq!(p.n(), q.n());
    let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(p.num_blocks() + q.num_blocks());
    for block in p.blocks() {
        blocks.push(block.iter().map(|&k| 2 * k - 1).collect());
    }
    for block in q.blocks() {
        blocks.push(block.iter().map(|&k| 2 * k).collect());
    }
    SetPartition::new(2 * p.n(), blocks).expect("interleave of valid partitions")
}

/// The alternating union `p ∪ Kr(p)` in `NC(2n)`: `p` occupies the odd
/// positions and its Kreweras complement the even ones.
pub fn alternating_union(p: &SetPartition) -> Result<SetPartition> {
    let kr = kreweras(p)?;
    if 2 * p.n() > max_order() {
        return Err(Error::OrderOutOfRange {
            n: 2 * p.n(),
            max: max_order(),
        });
    }
    let out = interleave(p, &kr);
    debug_assert!(out.is_noncrossing());
    Ok(out)
}

struct MobiusTable {
    partitions: Arc<Vec<SetPartition>>,
    index: BTreeMap<SetPartition, usize>,
    /// `mu_to_full[i] = mu(partitions[i], 1_n)`.
    mu_to_full: Vec<i64>,
}

static MOBIUS_CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<MobiusTable>>>> = OnceLock::new();

fn mobius_table(n: usize) -> Result<Arc<MobiusTable>> {
    check_order(n)?;
    let cache = MOBIUS_CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().expect("mobius cache poisoned");
    if let Some(t) = guard.get(&n) {
        return Ok(Arc::clone(t));
    }
    let partitions = enumerate_nc(n)?;
    let index: BTreeMap<SetPartition, usize> = partitions
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();
    // mu(p, 1_n) by the dual recursion mu(p,1) = -sum_{p < r <= 1} mu(r,1),
    // processed from coarse to fine so every needed value already exists.
    let mut order: Vec<usize> = (0..partitions.len()).collect();
    order.sort_by_key(|&i| partitions[i].num_blocks());
    let mut mu_to_full = vec![0i64; partitions.len()];
    for &i in &order {
        let p = &partitions[i];
        if p.num_blocks() == 1 {
            mu_to_full[i] = 1;
            continue;
        }
        // Every r with p < r is strictly coarser, hence already processed.
        let mut acc = 0i64;
        for (j, r) in partitions.iter().enumerate() {
            if j != i && p.leq_refine(r)? {
                acc += mu_to_full[j];
            }
        }
        mu_to_full[i] = -acc;
    }
    let table = Arc::new(MobiusTable {
        partitions,
        index,
        mu_to_full,
    });
    guard.insert(n, Arc::clone(&table));
    Ok(table)
}

/// `mu(p, 1_n)` for every `p` in `enumerate_nc(n)`, aligned with that list's
/// order. Cached per `n`.
pub fn mobius_to_full(n: usize) -> Result<Vec<i64>> {
    Ok(mobius_table(n)?.mu_to_full.clone())
}

/// Möbius function of the interval `[p, q]` in `NC(n)`, by the defining
/// recursion `mu(p,p) = 1`, `sum_{p <= r <= q} mu(p,r) = 0` for `p < q`.
pub fn mobius_nc(p: &SetPartition, q: &SetPartition) -> Result<i64> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            got: q.n(),
        });
    }
    check_order(p.n())?;
    if !p.is_noncrossing() || !q.is_noncrossing() {
        return Err(Error::NotNoncrossing);
    }
    if !p.leq_refine(q)? {
        return Err(Error::NotComparable);
    }
    if p == q {
        return Ok(1);
    }
    let table = mobius_table(p.n())?;
    if q.num_blocks() == 1 {
        let i = *table.index.get(p).expect("noncrossing partition enumerated");
        return Ok(table.mu_to_full[i]);
    }
    // Collect the interval [p, q] and run the primal recursion upward,
    // from fine (many blocks) to coarse.
    let mut interval: Vec<usize> = Vec::new();
    for (i, r) in table.partitions.iter().enumerate() {
        if p.leq_refine(r)? && r.leq_refine(q)? {
            interval.push(i);
        }
    }
    interval.sort_by_key(|&i| std::cmp::Reverse(table.partitions[i].num_blocks()));
    let mut mu = BTreeMap::new();
    for &i in &interval {
        let r = &table.partitions[i];
        if r == p {
            mu.insert(i, 1i64);
            continue;
        }
        let mut acc = 0i64;
        for &j in &interval {
            if j != i && table.partitions[j].leq_refine(r)? {
                acc += mu.get(&j).copied().expect("finer value already computed");
            }
        }
        mu.insert(i, -acc);
    }
    let qi = *table.index.get(q).expect("enumerated");
    Ok(*mu.get(&qi).expect("interval contains q"))
}

/// Join of two partitions inside `NC(n)`: the set-partition join followed by
/// the noncrossing closure (merging crossing blocks until none remain).
/// Internal utility for the product-cumulant oracle; both merge phases only
/// coarsen, so the result is the least noncrossing upper bound.
pub fn nc_join(p: &SetPartition, q: &SetPartition) -> Result<SetPartition> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            got: q.n(),
        });
    }
    let n = p.n();
    // Union-find over elements: merge along both partitions' blocks.
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = x;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for part in [p, q] {
        for block in part.blocks() {
            for w in block.windows(2) {
                union(&mut parent, w[0], w[1]);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 1..=n {
        groups.entry(find(&mut parent, x)).or_default().push(x);
    }
    let mut blocks: Vec<Vec<usize>> = groups.into_values().collect();
    // Noncrossing closure: merge any two crossing blocks and repeat.
    loop {
        let mut merged = false;
        'outer: for i in 0..blocks.len() {
            for j in (i + 1)..blocks.len() {
                if blocks_cross(&blocks[i], &blocks[j]) {
                    let other = blocks.remove(j);
                    blocks[i].extend(other);
                    blocks[i].sort_unstable();
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    SetPartition::new(n, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalan(k: usize) -> usize {
        // C_0..C_10
        const C: [usize; 11] = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796];
        C[k]
    }

    /// All set partitions of {1..n} via restricted growth strings.
    fn all_set_partitions(n: usize) -> Vec<SetPartition> {
        fn extend(rgs: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
            if rgs.len() == n {
                out.push(rgs.clone());
                return;
            }
            for label in 0..=max + 1 {
                rgs.push(label);
                extend(rgs, max.max(label), n, out);
                rgs.pop();
            }
        }
        let mut raw = Vec::new();
        let mut rgs = vec![0usize];
        extend(&mut rgs, 0, n, &mut raw);
        raw.into_iter()
            .map(|labels| {
                let nblocks = labels.iter().max().unwrap() + 1;
                let mut blocks = vec![Vec::new(); nblocks];
                for (pos, &label) in labels.iter().enumerate() {
                    blocks[label].push(pos + 1);
                }
                SetPartition::new(n, blocks).unwrap()
            })
            .collect()
    }

    #[test]
    fn canonicalization_and_validation() {
        let p = SetPartition::new(4, vec![vec![3, 1], vec![4, 2]]).unwrap();
        assert_eq!(p.blocks(), &[vec![1, 3], vec![2, 4]]);
        assert_eq!(p.to_string(), "{{1,3},{2,4}}");
        assert!(SetPartition::new(3, vec![vec![1, 2]]).is_err());
        assert!(SetPartition::new(3, vec![vec![1, 2], vec![2, 3]]).is_err());
        assert!(SetPartition::new(3, vec![vec![1, 2, 3], vec![]]).is_err());
        assert!(SetPartition::new(3, vec![vec![1, 2, 4]]).is_err());
        assert!(SetPartition::new(0, vec![]).is_err());
    }

    #[test]
    fn crossing_detection() {
        assert!(SetPartition::discrete(3).is_noncrossing());
        assert!(!SetPartition::new(4, vec![vec![1, 3], vec![2, 4]])
            .unwrap()
            .is_noncrossing());
        assert!(SetPartition::new(4, vec![vec![1, 4], vec![2, 3]])
            .unwrap()
            .is_noncrossing());
    }

    #[test]
    fn enumeration_matches_exhaustive_filter() {
        for n in 1..=7 {
            let by_recursion: std::collections::BTreeSet<_> =
                enumerate_nc(n).unwrap().iter().cloned().collect();
            let by_filter: std::collections::BTreeSet<_> = all_set_partitions(n)
                .into_iter()
                .filter(|p| p.is_noncrossing())
                .collect();
            assert_eq!(by_recursion, by_filter, "n = {n}");
            assert_eq!(by_recursion.len(), catalan(n), "n = {n}");
        }
    }

    #[test]
    fn enumeration_is_sorted_and_deduplicated() {
        let list = enumerate_nc(5).unwrap();
        for w in list.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn order_bounds_are_enforced() {
        assert!(matches!(
            enumerate_nc(0),
            Err(Error::OrderOutOfRange { .. })
        ));
        assert!(matches!(
            enumerate_nc(max_order() + 1),
            Err(Error::OrderOutOfRange { .. })
        ));
    }

    #[test]
    fn refinement_order() {
        let p = SetPartition::new(3, vec![vec![1, 2], vec![3]]).unwrap();
        assert!(SetPartition::discrete(4)
            .leq_refine(&SetPartition::full(4))
            .unwrap());
        assert!(!SetPartition::full(4)
            .leq_refine(&SetPartition::discrete(4))
            .unwrap());
        assert!(p.leq_refine(&SetPartition::full(3)).unwrap());
        assert!(p.leq_refine(&p).unwrap());
        assert!(p.leq_refine(&SetPartition::discrete(4)).is_err());
    }

    #[test]
    fn kreweras_fixed_points_and_example() {
        for n in 1..=6 {
            assert_eq!(
                kreweras(&SetPartition::full(n)).unwrap(),
                SetPartition::discrete(n)
            );
            assert_eq!(
                kreweras(&SetPartition::discrete(n)).unwrap(),
                SetPartition::full(n)
            );
        }
        let p = SetPartition::new(3, vec![vec![1, 2], vec![3]]).unwrap();
        let expected = SetPartition::new(3, vec![vec![1], vec![2, 3]]).unwrap();
        assert_eq!(kreweras(&p).unwrap(), expected);
        assert!(kreweras(&SetPartition::new(4, vec![vec![1, 3], vec![2, 4]]).unwrap()).is_err());
    }

    #[test]
    fn kreweras_matches_maximal_interleave_oracle() {
        for n in 1..=5 {
            for p in enumerate_nc(n).unwrap().iter() {
                let valid: Vec<SetPartition> = enumerate_nc(n)
                    .unwrap()
                    .iter()
                    .filter(|q| interleave(p, q).is_noncrossing())
                    .cloned()
                    .collect();
                let kr = kreweras(p).unwrap();
                assert!(valid.contains(&kr));
                for q in &valid {
                    assert!(
                        q.leq_refine(&kr).unwrap(),
                        "Kr({p}) = {kr} is not above {q}"
                    );
                }
            }
        }
    }

    #[test]
    fn kreweras_is_a_bijection_with_complementary_ranks() {
        for n in 1..=6 {
            let all = enumerate_nc(n).unwrap();
            let mut images = std::collections::BTreeSet::new();
            for p in all.iter() {
                let kr = kreweras(p).unwrap();
                assert_eq!(p.num_blocks() + kr.num_blocks(), n + 1);
                images.insert(kr);
            }
            assert_eq!(images.len(), all.len());
        }
    }

    #[test]
    fn kreweras_reverses_refinement() {
        let all = enumerate_nc(4).unwrap();
        for p in all.iter() {
            for q in all.iter() {
                if p.leq_refine(q).unwrap() {
                    assert!(kreweras(q).unwrap().leq_refine(&kreweras(p).unwrap()).unwrap());
                }
            }
        }
    }

    #[test]
    fn alternating_union_examples() {
        let one = SetPartition::full(1);
        assert_eq!(
            alternating_union(&one).unwrap(),
            SetPartition::discrete(2)
        );
        assert_eq!(
            alternating_union(&SetPartition::full(2)).unwrap(),
            SetPartition::new(4, vec![vec![1, 3], vec![2], vec![4]]).unwrap()
        );
        assert_eq!(
            alternating_union(&SetPartition::discrete(2)).unwrap(),
            SetPartition::new(4, vec![vec![1], vec![3], vec![2, 4]]).unwrap()
        );
    }

    #[test]
    fn alternating_union_stays_noncrossing() {
        for n in 1..=5 {
            for p in enumerate_nc(n).unwrap().iter() {
                let au = alternating_union(p).unwrap();
                assert!(au.is_noncrossing());
                assert_eq!(au.num_blocks(), n + 1);
            }
        }
    }

    #[test]
    fn mobius_closed_form_and_small_values() {
        assert_eq!(
            mobius_nc(&SetPartition::discrete(2), &SetPartition::full(2)).unwrap(),
            -1
        );
        assert_eq!(
            mobius_nc(&SetPartition::discrete(4), &SetPartition::full(4)).unwrap(),
            -5
        );
        for n in 1..=6 {
            let expected = if n % 2 == 1 { 1 } else { -1 } * catalan(n - 1) as i64;
            assert_eq!(
                mobius_nc(&SetPartition::discrete(n), &SetPartition::full(n)).unwrap(),
                expected,
                "n = {n}"
            );
        }
        let p = SetPartition::new(3, vec![vec![1, 2], vec![3]]).unwrap();
        assert_eq!(mobius_nc(&p, &p).unwrap(), 1);
        assert!(matches!(
            mobius_nc(&SetPartition::full(3), &SetPartition::discrete(3)),
            Err(Error::NotComparable)
        ));
    }

    #[test]
    fn mobius_to_full_agrees_with_pairwise() {
        for n in 1..=5 {
            let parts = enumerate_nc(n).unwrap();
            let mu = mobius_to_full(n).unwrap();
            let top = SetPartition::full(n);
            for (i, p) in parts.iter().enumerate() {
                assert_eq!(mu[i], mobius_nc(p, &top).unwrap());
            }
        }
    }

    #[test]
    fn mobius_defining_recursion_sums_to_zero() {
        for n in 1..=5 {
            let parts = enumerate_nc(n).unwrap();
            for p in parts.iter() {
                for q in parts.iter() {
                    if p == q || !p.leq_refine(q).unwrap() {
                        continue;
                    }
                    let mut acc = 0i64;
                    for r in parts.iter() {
                        if p.leq_refine(r).unwrap() && r.leq_refine(q).unwrap() {
                            acc += mobius_nc(r, q).unwrap();
                        }
                    }
                    assert_eq!(acc, 0, "interval [{p}, {q}]");
                }
            }
        }
    }

    #[test]
    fn even_enumeration_counts() {
        assert_eq!(enumerate_nc_even(2).unwrap().len(), 1);
        let even4 = enumerate_nc_even(4).unwrap();
        assert_eq!(even4.len(), 3);
        assert!(even4.contains(&SetPartition::full(4)));
        assert!(even4.contains(&SetPartition::new(4, vec![vec![1, 2], vec![3, 4]]).unwrap()));
        assert!(even4.contains(&SetPartition::new(4, vec![vec![1, 4], vec![2, 3]]).unwrap()));
        assert_eq!(enumerate_nc_even(6).unwrap().len(), 12);
        assert!(enumerate_nc_even(3).is_err());
    }

    #[test]
    fn even_and_odd_split_the_lattice() {
        for n in [2usize, 4, 6] {
            let all = enumerate_nc(n).unwrap();
            let even = enumerate_nc_even(n).unwrap();
            let odd: Vec<_> = all
                .iter()
                .filter(|p| p.blocks().iter().any(|b| b.len() % 2 == 1))
                .collect();
            assert_eq!(even.len() + odd.len(), all.len());
            for p in &even {
                assert!(!odd.contains(&p));
            }
        }
    }

    #[test]
    fn join_is_least_upper_bound() {
        for n in 1..=5 {
            let all = enumerate_nc(n).unwrap();
            for p in all.iter() {
                for q in all.iter() {
                    let j = nc_join(p, q).unwrap();
                    assert!(j.is_noncrossing());
                    assert!(p.leq_refine(&j).unwrap() && q.leq_refine(&j).unwrap());
                    for r in all.iter() {
                        if p.leq_refine(r).unwrap() && q.leq_refine(r).unwrap() {
                            assert!(j.leq_refine(r).unwrap(), "{j} vs upper bound {r}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn join_units() {
        let p = SetPartition::new(4, vec![vec![1, 4], vec![2, 3]]).unwrap();
        assert_eq!(nc_join(&p, &SetPartition::discrete(4)).unwrap(), p);
        assert_eq!(
            nc_join(&p, &SetPartition::full(4)).unwrap(),
            SetPartition::full(4)
        );
    }
}
