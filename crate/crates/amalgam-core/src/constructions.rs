//! Constructions on joint families: free unions, sums of variables, left
//! scaling, products along words, and the boxed convolution of one-variable
//! series.
//!
//! All constructions act at the level of coefficient tables and are exact.
//! `free_union` encodes freeness with amalgamation by leaving every mixed
//! key absent; `product_word_cumulants` goes through a targeted moment
//! expansion and Möbius inversion rather than a block-join formula, and the
//! two routes are compared in the tests.

use num_bigint::BigInt;

use crate::balgebra::{BMatrix, MultilinearCoefficient, Rat};
use crate::cumulant_engine::{
    all_tuples, advance_odometer, cumulants_from_moments, eval_partitioned,
    moments_from_cumulants, JointCumulantSpec, JointMomentSpec, SeriesTable, Word,
};
use crate::nc_lattice::{alternating_union, enumerate_nc, SetPartition};
use crate::{Error, Result};

/// Join two cumulant families into one on the disjoint union of their
/// variables, with every mixed cumulant zero: the defining data of a free
/// pair of families over B. Variables of `b` are shifted up by `a.s()`.
/// The truncation is the smaller of the two.
pub fn free_union(a: &JointCumulantSpec, b: &JointCumulantSpec) -> Result<JointCumulantSpec> {
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch {
            expected: a.d(),
            got: b.d(),
        });
    }
    let trunc = a.truncation().min(b.truncation());
    let mut out = SeriesTable::new(a.d(), a.s() + b.s(), trunc)?;
    for (tuple, coeff) in a.entries() {
        if tuple.len() <= trunc {
            out.insert(tuple.clone(), coeff.clone())?;
        }
    }
    for (tuple, coeff) in b.entries() {
        if tuple.len() <= trunc {
            let shifted: Vec<usize> = tuple.iter().map(|&v| v + a.s()).collect();
            out.insert(shifted, coeff.clone())?;
        }
    }
    Ok(JointCumulantSpec(out))
}

/// Coefficient table of the sums `y_j = sum_{i in groups[j]} x_i`, by
/// multilinear expansion of each slot. Both moments and cumulants are
/// multilinear in the word letters, so this applies to either kind; no
/// freeness is assumed or used.
pub fn sum_variables(u: &SeriesTable, groups: &[Vec<usize>]) -> Result<SeriesTable> {
    if groups.is_empty() {
        return Err(Error::InvalidArgument("no variable groups given".into()));
    }
    for group in groups {
        if group.is_empty() {
            return Err(Error::InvalidArgument("empty variable group".into()));
        }
        let mut seen = vec![false; u.s() + 1];
        for &v in group {
            if v == 0 || v > u.s() {
                return Err(Error::InvalidArgument(format!(
                    "variable index {v} outside 1..={}",
                    u.s()
                )));
            }
            if seen[v] {
                return Err(Error::InvalidArgument(
                    "duplicate variable in group".into(),
                ));
            }
            seen[v] = true;
        }
    }
    let (d, trunc) = (u.d(), u.truncation());
    let mut out = SeriesTable::new(d, groups.len(), trunc)?;
    for n in 1..=trunc {
        for tuple in all_tuples(groups.len(), n) {
            let mut coeff = MultilinearCoefficient::zero(d, n - 1);
            let mut any = false;
            let mut choice = vec![0usize; n];
            loop {
                let src_tuple: Vec<usize> = (0..n)
                    .map(|k| groups[tuple[k] - 1][choice[k]])
                    .collect();
                if let Some(c) = u.coefficient(&src_tuple) {
                    coeff.add_assign(c);
                    any = true;
                }
                // Mixed-radix advance over the group choices.
                let mut slot = n;
                loop {
                    if slot == 0 {
                        break;
                    }
                    slot -= 1;
                    choice[slot] += 1;
                    if choice[slot] < groups[tuple[slot] - 1].len() {
                        break;
                    }
                    choice[slot] = 0;
                }
                if choice.iter().all(|&c| c == 0) {
                    break;
                }
            }
            if any {
                out.insert(tuple, coeff)?;
            }
        }
    }
    Ok(out)
}

/// Cumulants of sums of variables: [`sum_variables`] on the cumulant side.
/// For families declared free (mixed keys absent) this realizes the
/// additivity of the R-transform.
pub fn add_free_variables(
    u: &JointCumulantSpec,
    groups: &[Vec<usize>],
) -> Result<JointCumulantSpec> {
    Ok(JointCumulantSpec(sum_variables(&u.0, groups)?))
}

/// Replace `x_var` by `b * x_var`. Works on either kind of family: both
/// moments and cumulants pull a left B-coefficient out of the first slot and
/// absorb it into the preceding interior coefficient in later slots, so the
/// new table at arguments `(b_2..b_n)` is the old one at `(.., b_j * b, ..)`
/// (for slots holding `var`), left-multiplied by `b` when slot 1 holds `var`.
pub fn left_scale(b: &BMatrix, u: &SeriesTable, var: usize) -> Result<SeriesTable> {
    let d = u.d();
    if b.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: b.d(),
        });
    }
    if var == 0 || var > u.s() {
        return Err(Error::InvalidArgument(format!(
            "variable index {var} outside 1..={}",
            u.s()
        )));
    }
    let mut out = SeriesTable::new(d, u.s(), u.truncation())?;
    for (tuple, coeff) in u.entries() {
        let n = tuple.len();
        let mut new_coeff = MultilinearCoefficient::zero(d, n - 1);
        let mut nonzero = false;
        let mut basis = vec![0usize; n - 1];
        loop {
            let args: Vec<BMatrix> = basis
                .iter()
                .enumerate()
                .map(|(k, &idx)| {
                    let unit = BMatrix::unit(d, idx / d, idx % d);
                    if tuple[k + 1] == var {
                        unit.mul(b)
                    } else {
                        Ok(unit)
                    }
                })
                .collect::<Result<_>>()?;
            let mut value = coeff.apply(&args)?;
            if tuple[0] == var {
                value = b.mul(&value)?;
            }
            if !value.is_zero() {
                *new_coeff.value_at_basis_mut(&basis) = value;
                nonzero = true;
            }
            if !advance_odometer(&mut basis, d * d) {
                break;
            }
        }
        if nonzero {
            out.insert(tuple.clone(), new_coeff)?;
        }
    }
    Ok(out)
}

/// Cumulants of the products `y_j = x_{w_1} x_{w_2} ... x_{w_k}` along
/// `words[j]`, up to order `n_out`. Each y-moment is expanded into a lattice
/// sum over the flattened letter word (interior coefficients `1_B` inside a
/// word, the free argument at each word boundary), then the family is
/// Möbius-inverted. Requires `u` to hold cumulants up to
/// `n_out * max word length`.
pub fn product_word_cumulants(
    u: &JointCumulantSpec,
    words: &[Vec<usize>],
    n_out: usize,
) -> Result<JointCumulantSpec> {
    if words.is_empty() || n_out == 0 {
        return Err(Error::InvalidArgument(
            "need at least one word and a positive output order".into(),
        ));
    }
    for word in words {
        if word.is_empty() {
            return Err(Error::InvalidArgument("empty product word".into()));
        }
        if let Some(&v) = word.iter().find(|&&v| v == 0 || v > u.s()) {
            return Err(Error::InvalidArgument(format!(
                "variable index {v} outside 1..={}",
                u.s()
            )));
        }
    }
    let max_len = words.iter().map(Vec::len).max().expect("nonempty");
    let required = n_out * max_len;
    if required > u.truncation() {
        return Err(Error::TruncationExceeded {
            order: required,
            truncation: u.truncation(),
        });
    }
    let d = u.d();
    let s_out = words.len();
    let mut moments = SeriesTable::new(d, s_out, n_out)?;
    for n in 1..=n_out {
        for tuple in all_tuples(s_out, n) {
            // Flatten the y-word into letters and record where each y starts.
            let mut xvars = Vec::new();
            let mut starts = Vec::with_capacity(n);
            for &j in &tuple {
                starts.push(xvars.len());
                xvars.extend_from_slice(&words[j - 1]);
            }
            let len = xvars.len();
            let partitions = enumerate_nc(len)?;
            let admissible: Vec<&SetPartition> = partitions
                .iter()
                .filter(|p| {
                    p.blocks().iter().all(|block| {
                        let key: Vec<usize> = block.iter().map(|&x| xvars[x - 1]).collect();
                        u.coefficient(&key).is_some()
                    })
                })
                .collect();
            if admissible.is_empty() {
                continue;
            }
            let mut coeff = MultilinearCoefficient::zero(d, n - 1);
            let mut nonzero = false;
            let mut basis = vec![0usize; n - 1];
            loop {
                let slots: Vec<(BMatrix, usize)> = xvars
                    .iter()
                    .enumerate()
                    .map(|(pos, &v)| {
                        let c = match starts[1..].iter().position(|&st| st == pos) {
                            Some(k) => BMatrix::unit(d, basis[k] / d, basis[k] % d),
                            None => BMatrix::identity(d),
                        };
                        (c, v)
                    })
                    .collect();
                let word = Word::new(slots, BMatrix::identity(d))?;
                let mut acc = BMatrix::zero(d);
                for p in &admissible {
                    acc.add_assign(&eval_partitioned(&u.0, p, &word)?);
                }
                if !acc.is_zero() {
                    *coeff.value_at_basis_mut(&basis) = acc;
                    nonzero = true;
                }
                if !advance_odometer(&mut basis, d * d) {
                    break;
                }
            }
            if nonzero {
                moments.insert(tuple, coeff)?;
            }
        }
    }
    cumulants_from_moments(&JointMomentSpec(moments))
}

/// How the second series' interior arguments are filled during a boxed
/// convolution.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GArgs {
    /// Every second-series argument is `1_B`.
    Trivial,
    /// Every second-series argument is the given element.
    Symmetric(BMatrix),
    /// Keep the second-series arguments free: the order-`n` output
    /// coefficient has arity `2n-2`, arguments interleaved as
    /// `(b_2, beta_2, ..., b_n, beta_n)`, stored at the alternating key
    /// `[1,2,1,...,1]` of length `2n-1`.
    Full,
}

/// Boxed convolution of two one-variable series: the order-`n` coefficient
/// is the sum over `pi` in `NC(n)` of the evaluation of the pair family
/// (`f` on variable 1, `g` on variable 2) along `alternating_union(pi)` on
/// the interleaved word `x1 . x2 . b_2 x1 . beta_2 x2 ...` with tail `1_B`.
/// The `beta` slots are filled according to `g_args`.
pub fn boxed_convolution(
    f: &SeriesTable,
    g: &SeriesTable,
    g_args: &GArgs,
) -> Result<SeriesTable> {
    if f.s() != 1 || g.s() != 1 {
        return Err(Error::InvalidArgument(
            "boxed convolution takes one-variable series".into(),
        ));
    }
    let d = f.d();
    if g.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: g.d(),
        });
    }
    if let GArgs::Symmetric(b0) = g_args {
        if b0.d() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: b0.d(),
            });
        }
    }
    let n_max = f.truncation().min(g.truncation());
    let full = matches!(g_args, GArgs::Full);
    let mut out = SeriesTable::new(d, if full { 2 } else { 1 }, if full { 2 * n_max - 1 } else { n_max })?;
    // Pair family: f's coefficients on variable 1, g's on variable 2.
    let mut pair = SeriesTable::new(d, 2, n_max)?;
    for (tuple, coeff) in f.entries() {
        pair.insert(tuple.clone(), coeff.clone())?;
    }
    for (tuple, coeff) in g.entries() {
        pair.insert(vec![2; tuple.len()], coeff.clone())?;
    }

    for n in 1..=n_max {
        let mut unions = Vec::new();
        for p in enumerate_nc(n)?.iter() {
            let au = alternating_union(p)?;
            let ok = au.blocks().iter().all(|block| {
                // Odd positions carry variable 1, even positions variable 2;
                // interleaved blocks are single-variable by construction.
                let key = vec![if block[0] % 2 == 1 { 1 } else { 2 }; block.len()];
                pair.coefficient(&key).is_some()
            });
            if ok {
                unions.push(au);
            }
        }
        let arity = if full { 2 * n - 2 } else { n - 1 };
        let mut coeff = MultilinearCoefficient::zero(d, arity);
        let mut nonzero = false;
        let mut basis = vec![0usize; arity];
        loop {
            let mut slots = Vec::with_capacity(2 * n);
            for j in 1..=n {
                let b_j = if j == 1 {
                    BMatrix::identity(d)
                } else {
                    let idx = if full { basis[2 * (j - 2)] } else { basis[j - 2] };
                    BMatrix::unit(d, idx / d, idx % d)
                };
                slots.push((b_j, 1));
                let beta_j = if j == 1 {
                    BMatrix::identity(d)
                } else {
                    match g_args {
                        GArgs::Trivial => BMatrix::identity(d),
                        GArgs::Symmetric(b0) => b0.clone(),
                        GArgs::Full => {
                            let idx = basis[2 * (j - 2) + 1];
                            BMatrix::unit(d, idx / d, idx % d)
                        }
                    }
                };
                slots.push((beta_j, 2));
            }
            let word = Word::new(slots, BMatrix::identity(d))?;
            let mut acc = BMatrix::zero(d);
            for au in &unions {
                acc.add_assign(&eval_partitioned(&pair, au, &word)?);
            }
            if !acc.is_zero() {
                *coeff.value_at_basis_mut(&basis) = acc;
                nonzero = true;
            }
            if !advance_odometer(&mut basis, d * d) {
                break;
            }
        }
        if nonzero {
            let key: Vec<usize> = if full {
                (0..2 * n - 1).map(|i| 1 + i % 2).collect()
            } else {
                vec![1; n]
            };
            out.insert(key, coeff)?;
        }
    }
    Ok(out)
}

/// Catalan number `C_n`, exactly.
fn catalan(n: usize) -> BigInt {
    let mut c = BigInt::from(1);
    for i in 0..n {
        c = c * BigInt::from(2 * (2 * i + 1)) / BigInt::from(i + 2);
    }
    c
}

fn product_map_table(d: usize, n: usize, scale: &Rat) -> MultilinearCoefficient {
    let mut coeff = MultilinearCoefficient::zero(d, n - 1);
    let mut basis = vec![0usize; n - 1];
    loop {
        let mut prod = BMatrix::identity(d);
        for &idx in basis.iter() {
            prod = prod
                .mul(&BMatrix::unit(d, idx / d, idx % d))
                .expect("same dimension");
        }
        prod = prod.scale(scale);
        if !prod.is_zero() {
            *coeff.value_at_basis_mut(&basis) = prod;
        }
        if !advance_odometer(&mut basis, d * d) {
            break;
        }
    }
    coeff
}

/// The zeta series: order-`n` coefficient is the multiplication map
/// `(b_2..b_n) -> b_2 b_3 ... b_n`. Unit for Möbius inversion; convolving
/// with it on the right is the cumulant-to-moment transform.
pub fn zeta_series(d: usize, truncation: usize) -> Result<SeriesTable> {
    let mut out = SeriesTable::new(d, 1, truncation)?;
    for n in 1..=truncation {
        out.insert(vec![1; n], product_map_table(d, n, &Rat::from_integer(1.into())))?;
    }
    Ok(out)
}

/// The Möbius series, inverse of [`zeta_series`] under trivial boxed
/// convolution: order-`n` coefficient is `(-1)^(n-1) C_(n-1)` times the
/// multiplication map.
pub fn mobius_series(d: usize, truncation: usize) -> Result<SeriesTable> {
    let mut out = SeriesTable::new(d, 1, truncation)?;
    for n in 1..=truncation {
        let mut w = Rat::from_integer(catalan(n - 1));
        if n % 2 == 0 {
            w = -w;
        }
        out.insert(vec![1; n], product_map_table(d, n, &w))?;
    }
    Ok(out)
}

/// The delta series: `1_B` at order one, zero above. Unit for the trivial
/// boxed convolution.
pub fn delta_series(d: usize, truncation: usize) -> Result<SeriesTable> {
    let mut out = SeriesTable::new(d, 1, truncation)?;
    out.insert(vec![1], MultilinearCoefficient::constant(BMatrix::identity(d)))?;
    Ok(out)
}

/// Summation over noncrossing partitions applied to an arbitrary series,
/// treating it as cumulant data: the kind-agnostic core of
/// `moments_from_cumulants`.
pub fn zeta_transform(t: &SeriesTable) -> Result<SeriesTable> {
    Ok(moments_from_cumulants(&JointCumulantSpec(t.clone()))?.0)
}

/// Möbius inversion of [`zeta_transform`].
pub fn mobius_transform(t: &SeriesTable) -> Result<SeriesTable> {
    Ok(cumulants_from_moments(&JointMomentSpec(t.clone()))?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nc_lattice::nc_join;
    use rand::{Rng, SeedableRng};

    fn rat(n: i64, den: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(den))
    }

    fn dense_random(seed: u64, d: usize, s: usize, trunc: usize) -> SeriesTable {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = SeriesTable::new(d, s, trunc).unwrap();
        for n in 1..=trunc {
            for tuple in all_tuples(s, n) {
                let mut coeff = MultilinearCoefficient::zero(d, n - 1);
                let mut basis = vec![0usize; n - 1];
                loop {
                    let cell = coeff.value_at_basis_mut(&basis);
                    for i in 0..d {
                        for j in 0..d {
                            cell.set(i, j, rat(rng.random_range(-3..=3), rng.random_range(1..=2)));
                        }
                    }
                    if !advance_odometer(&mut basis, d * d) {
                        break;
                    }
                }
                out.insert(tuple, coeff).unwrap();
            }
        }
        out
    }

    fn scalar_mean_one(trunc: usize) -> JointCumulantSpec {
        let mut t = SeriesTable::new(1, 1, trunc).unwrap();
        t.insert(vec![1], MultilinearCoefficient::constant(BMatrix::identity(1)))
            .unwrap();
        JointCumulantSpec(t)
    }

    fn scalar_semicircular(trunc: usize) -> JointCumulantSpec {
        let mut t = SeriesTable::new(1, 1, trunc).unwrap();
        let mut k2 = MultilinearCoefficient::zero(1, 1);
        *k2.value_at_basis_mut(&[0]) = BMatrix::identity(1);
        t.insert(vec![1, 1], k2).unwrap();
        JointCumulantSpec(t)
    }

    #[test]
    fn free_union_kills_mixed_cumulants_and_keeps_marginals() {
        let a = scalar_mean_one(3);
        let b = scalar_semicircular(3);
        let u = free_union(&a, &b).unwrap();
        assert_eq!(u.s(), 2);
        assert_eq!(u.coefficient(&[1]), a.coefficient(&[1]));
        assert_eq!(u.coefficient(&[2, 2]), b.coefficient(&[1, 1]));
        assert!(u.coefficient(&[1, 2]).is_none());
        // phi(x y) = k_1(x) k_1(y) = 1 for two mean-one variables.
        let u2 = free_union(&a, &scalar_mean_one(3)).unwrap();
        let m = moments_from_cumulants(&u2).unwrap();
        assert_eq!(m.value_at(&[1, 2], &[0]), Some(&BMatrix::identity(1)));
        assert_eq!(m.value_at(&[2, 1], &[0]), Some(&BMatrix::identity(1)));
    }

    #[test]
    fn sum_of_free_copies_adds_cumulants() {
        let u = free_union(&scalar_semicircular(4), &scalar_semicircular(4)).unwrap();
        let sum = add_free_variables(&u, &[vec![1, 2]]).unwrap();
        assert_eq!(sum.s(), 1);
        assert_eq!(
            sum.value_at(&[1, 1], &[0]),
            Some(&BMatrix::scalar(1, rat(2, 1)))
        );
        assert!(sum.coefficient(&[1]).is_none());
        // phi((x+y)^2) = 2.
        let m = moments_from_cumulants(&sum).unwrap();
        assert_eq!(
            m.value_at(&[1, 1], &[0]),
            Some(&BMatrix::scalar(1, rat(2, 1)))
        );
    }

    #[test]
    fn add_variables_is_multilinear_not_free() {
        // Doubling a single variable quadruples second cumulants.
        let u = JointCumulantSpec(dense_random(71, 2, 1, 3));
        let doubled = add_free_variables(&u, &[vec![1], vec![1]]).unwrap();
        let sum = add_free_variables(&doubled, &[vec![1, 2]]).unwrap();
        let k2 = u.coefficient(&[1, 1]).unwrap();
        let got = sum.coefficient(&[1, 1]).unwrap();
        assert_eq!(got, &k2.scale(&rat(4, 1)));
        assert!(add_free_variables(&u, &[vec![1, 1]]).is_err());
        assert!(add_free_variables(&u, &[vec![]]).is_err());
        assert!(add_free_variables(&u, &[vec![2]]).is_err());
    }

    #[test]
    fn left_scale_by_a_scalar() {
        let u = scalar_semicircular(4);
        let scaled = left_scale(&BMatrix::scalar(1, rat(2, 1)), &u.0, 1).unwrap();
        assert_eq!(
            scaled.value_at(&[1, 1], &[0]),
            Some(&BMatrix::scalar(1, rat(4, 1)))
        );
        let id = left_scale(&BMatrix::identity(1), &u.0, 1).unwrap();
        assert_eq!(id, u.0);
    }

    #[test]
    fn left_scale_commutes_with_the_moment_map() {
        let b = BMatrix::from_rows(vec![
            vec![rat(1, 2), rat(-1, 1)],
            vec![rat(0, 1), rat(2, 1)],
        ])
        .unwrap();
        let c = JointCumulantSpec(dense_random(72, 2, 2, 3));
        let scaled_then_moments =
            moments_from_cumulants(&JointCumulantSpec(left_scale(&b, &c.0, 2).unwrap())).unwrap();
        let moments_then_scaled =
            left_scale(&b, &moments_from_cumulants(&c).unwrap().0, 2).unwrap();
        assert_eq!(scaled_then_moments.0, moments_then_scaled);
    }

    #[test]
    fn singleton_words_select_sub_families() {
        let u = JointCumulantSpec(dense_random(73, 1, 2, 4));
        let swapped = product_word_cumulants(&u, &[vec![2], vec![1]], 4).unwrap();
        assert_eq!(swapped.0, u.permute_variables(&[2, 1]).unwrap());
        let first = product_word_cumulants(&u, &[vec![1]], 4).unwrap();
        for (tuple, coeff) in first.entries() {
            assert_eq!(u.coefficient(tuple), Some(coeff));
        }
        assert_eq!(
            first.entries().count(),
            u.entries().filter(|(t, _)| t.iter().all(|&v| v == 1)).count()
        );
    }

    #[test]
    fn product_word_matches_the_join_formula() {
        // k^y at (j_1..j_n) equals the sum over pi in NC(L) whose join with
        // the word-interval partition is full.
        for (seed, d, s, words) in [
            (81u64, 1usize, 2usize, vec![vec![1, 2]]),
            (82, 2, 1, vec![vec![1, 1]]),
            (83, 2, 2, vec![vec![1, 2], vec![2, 1]]),
        ] {
            let u = JointCumulantSpec(dense_random(seed, d, s, 4));
            let n_out = 2;
            let y = product_word_cumulants(&u, &words, n_out).unwrap();
            for n in 1..=n_out {
                for tuple in all_tuples(words.len(), n) {
                    let mut xvars = Vec::new();
                    let mut starts = Vec::new();
                    for &j in &tuple {
                        starts.push(xvars.len());
                        xvars.extend_from_slice(&words[j - 1]);
                    }
                    let len = xvars.len();
                    let theta = SetPartition::new(
                        len,
                        (0..n)
                            .map(|k| {
                                let end = starts.get(k + 1).copied().unwrap_or(len);
                                (starts[k] + 1..=end).collect()
                            })
                            .collect(),
                    )
                    .unwrap();
                    let joiners: Vec<SetPartition> = enumerate_nc(len)
                        .unwrap()
                        .iter()
                        .filter(|p| nc_join(p, &theta).unwrap() == SetPartition::full(len))
                        .cloned()
                        .collect();
                    let mut basis = vec![0usize; n - 1];
                    loop {
                        let slots: Vec<(BMatrix, usize)> = xvars
                            .iter()
                            .enumerate()
                            .map(|(pos, &v)| {
                                let c = match starts[1..].iter().position(|&st| st == pos) {
                                    Some(k) => BMatrix::unit(d, basis[k] / d, basis[k] % d),
                                    None => BMatrix::identity(d),
                                };
                                (c, v)
                            })
                            .collect();
                        let word = Word::new(slots, BMatrix::identity(d)).unwrap();
                        let mut expected = BMatrix::zero(d);
                        for p in &joiners {
                            expected.add_assign(&eval_partitioned(&u.0, p, &word).unwrap());
                        }
                        let got = y
                            .value_at(&tuple, &basis)
                            .cloned()
                            .unwrap_or_else(|| BMatrix::zero(d));
                        assert_eq!(got, expected, "seed {seed} tuple {tuple:?}");
                        if !advance_odometer(&mut basis, d * d) {
                            break;
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn product_word_requires_enough_truncation() {
        let u = JointCumulantSpec(dense_random(84, 1, 2, 3));
        assert!(matches!(
            product_word_cumulants(&u, &[vec![1, 2]], 2),
            Err(Error::TruncationExceeded { order: 4, truncation: 3 })
        ));
    }

    #[test]
    fn delta_is_the_unit_for_trivial_convolution() {
        let f = dense_random(91, 2, 1, 4);
        let delta = delta_series(2, 4).unwrap();
        assert_eq!(boxed_convolution(&f, &delta, &GArgs::Trivial).unwrap(), f);
        assert_eq!(boxed_convolution(&delta, &f, &GArgs::Trivial).unwrap(), f);
    }

    #[test]
    fn order_one_coefficient_multiplies() {
        let f = dense_random(92, 2, 1, 2);
        let g = dense_random(93, 2, 1, 2);
        let h = boxed_convolution(&f, &g, &GArgs::Trivial).unwrap();
        let f1 = f.coefficient(&[1]).unwrap().apply(&[]).unwrap();
        let g1 = g.coefficient(&[1]).unwrap().apply(&[]).unwrap();
        assert_eq!(
            h.value_at(&[1], &[]).cloned().unwrap_or_else(|| BMatrix::zero(2)),
            f1.mul(&g1).unwrap()
        );
    }

    #[test]
    fn zeta_and_mobius_are_mutually_inverse() {
        for d in [1usize, 2] {
            let zeta = zeta_series(d, 4).unwrap();
            let mobius = mobius_series(d, 4).unwrap();
            let delta = delta_series(d, 4).unwrap();
            assert_eq!(boxed_convolution(&zeta, &mobius, &GArgs::Trivial).unwrap(), delta);
            assert_eq!(boxed_convolution(&mobius, &zeta, &GArgs::Trivial).unwrap(), delta);
        }
    }

    #[test]
    fn convolving_with_zeta_is_the_zeta_transform() {
        let f = dense_random(94, 2, 1, 4);
        let zeta = zeta_series(2, 4).unwrap();
        let mobius = mobius_series(2, 4).unwrap();
        assert_eq!(
            boxed_convolution(&f, &zeta, &GArgs::Trivial).unwrap(),
            zeta_transform(&f).unwrap()
        );
        assert_eq!(
            boxed_convolution(&f, &mobius, &GArgs::Trivial).unwrap(),
            mobius_transform(&f).unwrap()
        );
        assert_eq!(
            mobius_transform(&zeta_transform(&f).unwrap()).unwrap(),
            f
        );
    }

    #[test]
    fn trivial_convolution_is_associative_for_scalars() {
        let f = dense_random(95, 1, 1, 4);
        let g = dense_random(96, 1, 1, 4);
        let h = dense_random(97, 1, 1, 4);
        let left = boxed_convolution(&boxed_convolution(&f, &g, &GArgs::Trivial).unwrap(), &h, &GArgs::Trivial)
            .unwrap();
        let right = boxed_convolution(&f, &boxed_convolution(&g, &h, &GArgs::Trivial).unwrap(), &GArgs::Trivial)
            .unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn full_mode_specializes_to_the_other_modes() {
        for (seed_f, seed_g, d, trunc) in [(101u64, 102u64, 1usize, 3usize), (103, 104, 2, 2)] {
            let f = dense_random(seed_f, d, 1, trunc);
            let g = dense_random(seed_g, d, 1, trunc);
            let b0 = BMatrix::scalar(d, rat(1, 2));
            let full = boxed_convolution(&f, &g, &GArgs::Full).unwrap();
            assert_eq!(full.s(), 2);
            assert_eq!(full.truncation(), 2 * trunc - 1);
            let trivial = boxed_convolution(&f, &g, &GArgs::Trivial).unwrap();
            let symmetric = boxed_convolution(&f, &g, &GArgs::Symmetric(b0.clone())).unwrap();
            for n in 1..=trunc {
                let key: Vec<usize> = (0..2 * n - 1).map(|i| 1 + i % 2).collect();
                let full_coeff = full.coefficient(&key);
                let mut basis = vec![0usize; n - 1];
                loop {
                    let mut trivial_args = Vec::new();
                    let mut symmetric_args = Vec::new();
                    for &idx in basis.iter() {
                        let unit = BMatrix::unit(d, idx / d, idx % d);
                        trivial_args.push(unit.clone());
                        trivial_args.push(BMatrix::identity(d));
                        symmetric_args.push(unit);
                        symmetric_args.push(b0.clone());
                    }
                    let from_full = |args: &[BMatrix]| match full_coeff {
                        Some(c) => c.apply(args).unwrap(),
                        None => BMatrix::zero(d),
                    };
                    let want_trivial = trivial
                        .value_at(&vec![1; n], &basis)
                        .cloned()
                        .unwrap_or_else(|| BMatrix::zero(d));
                    let want_symmetric = symmetric
                        .value_at(&vec![1; n], &basis)
                        .cloned()
                        .unwrap_or_else(|| BMatrix::zero(d));
                    assert_eq!(from_full(&trivial_args), want_trivial);
                    assert_eq!(from_full(&symmetric_args), want_symmetric);
                    if !advance_odometer(&mut basis, d * d) {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn construction_argument_validation() {
        let f = dense_random(111, 1, 1, 3);
        let g2 = dense_random(112, 2, 1, 3);
        assert!(boxed_convolution(&f, &g2, &GArgs::Trivial).is_err());
        let two_vars = dense_random(113, 1, 2, 3);
        assert!(boxed_convolution(&f, &two_vars, &GArgs::Trivial).is_err());
        assert!(boxed_convolution(&f, &f, &GArgs::Symmetric(BMatrix::identity(2))).is_err());
        assert!(free_union(
            &JointCumulantSpec(f.clone()),
            &JointCumulantSpec(g2.clone())
        )
        .is_err());
        assert!(left_scale(&BMatrix::identity(1), &f, 2).is_err());
        assert!(left_scale(&BMatrix::identity(2), &f, 1).is_err());
        assert!(product_word_cumulants(&JointCumulantSpec(f), &[], 1).is_err());
    }

    #[test]
    fn free_union_truncates_to_the_smaller_family() {
        let a = JointCumulantSpec(dense_random(121, 1, 1, 4));
        let b = JointCumulantSpec(dense_random(122, 1, 1, 2));
        let u = free_union(&a, &b).unwrap();
        assert_eq!(u.truncation(), 2);
        assert!(u.coefficient(&[1, 1]).is_some());
        assert!(u.coefficient(&[2, 2]).is_some());
    }
}
