//! Dedekind eta expansions and the k-regular partition generating function.
//!
//! `eta_expand` produces the lattice expansion of eta(A z) directly from the
//! pentagonal number theorem, so an eta factor costs O(sqrt(depth)) nonzero
//! terms instead of a length-depth product. [`EtaQuotient`] assembles
//! products and quotients of such factors; [`bk_series`] specializes to the
//! generating function of b_k, the number of partitions with no part
//! divisible by k; and [`bk_oracle`] recounts the same numbers by dynamic
//! programming with no series machinery at all, as an independent witness.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::One;

use crate::error::Error;
use crate::series::{Ring, Series, LATTICE};

/// Nonzero terms of eta(A z) below the lattice bound: exponents
/// A(1 + 24 g_j) for generalized pentagonal g_j = j(3j -+ 1)/2, sign (-1)^j.
fn pentagonal_terms(a: i64, lattice_end: i64) -> Vec<(i64, BigInt)> {
    let mut terms = Vec::new();
    if a < lattice_end {
        terms.push((a, BigInt::one()));
    }
    let mut j = 1i64;
    loop {
        let sign = if j % 2 == 0 {
            BigInt::one()
        } else {
            -BigInt::one()
        };
        let lo = a * (1 + 24 * (j * (3 * j - 1) / 2));
        let hi = a * (1 + 24 * (j * (3 * j + 1) / 2));
        if lo >= lattice_end {
            break;
        }
        terms.push((lo, sign.clone()));
        if hi < lattice_end {
            terms.push((hi, sign));
        }
        j += 1;
    }
    terms
}

pub(crate) fn eta_series(a: u32, ring: Ring, lattice_end: i64) -> Result<Series, Error> {
    if a == 0 {
        return Err(Error::InvalidParameter(
            "eta argument multiplier must be positive".into(),
        ));
    }
    Series::from_terms(
        ring,
        pentagonal_terms(i64::from(a), lattice_end),
        lattice_end,
    )
}

/// Expansion of eta(A z) in the exact ring, valid through q^depth.
pub fn eta_expand(a: u32, q_depth: u32) -> Result<Series, Error> {
    eta_series(a, Ring::Exact, LATTICE * i64::from(q_depth) + 1)
}

/// Symbolic product prod_i eta(A_i z)^{r_i}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaQuotient {
    factors: Vec<(u32, i32)>,
}

impl EtaQuotient {
    /// Validates and canonicalizes (sorted by argument multiplier) a factor
    /// list of `(A, r)` pairs.
    pub fn new(mut factors: Vec<(u32, i32)>) -> Result<EtaQuotient, Error> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter(
                "eta quotient needs at least one factor".into(),
            ));
        }
        factors.sort_by_key(|&(a, _)| a);
        for w in factors.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "duplicate eta argument multiplier {}",
                    w[0].0
                )));
            }
        }
        for &(a, r) in &factors {
            if a == 0 {
                return Err(Error::InvalidParameter(
                    "eta argument multiplier must be positive".into(),
                ));
            }
            if r == 0 {
                return Err(Error::InvalidParameter(format!(
                    "eta factor {a} has exponent zero"
                )));
            }
        }
        Ok(EtaQuotient { factors })
    }

    pub fn factors(&self) -> &[(u32, i32)] {
        &self.factors
    }

    /// Valuation of the expansion in 1/24 units: sum of A_i * r_i.
    pub fn lattice_valuation(&self) -> i64 {
        self.factors
            .iter()
            .map(|&(a, r)| i64::from(a) * i64::from(r))
            .sum()
    }
}

impl fmt::Display for EtaQuotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|&(a, r)| format!("{a}:{r}"))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for EtaQuotient {
    type Err = Error;

    /// Parses the `A1:r1,A2:r2,...` syntax, e.g. `48:1,24:-1`.
    fn from_str(s: &str) -> Result<EtaQuotient, Error> {
        let mut factors = Vec::new();
        for piece in s.split(',') {
            let piece = piece.trim();
            let (a, r) = piece.split_once(':').ok_or_else(|| {
                Error::InvalidParameter(format!("eta factor `{piece}` is not of the form A:r"))
            })?;
            let a: u32 = a.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("bad eta argument multiplier `{a}`"))
            })?;
            let r: i32 = r
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad eta exponent `{r}`")))?;
            factors.push((a, r));
        }
        EtaQuotient::new(factors)
    }
}

/// Expands an eta-quotient through q^depth in the requested ring.
///
/// Positive factors are multiplied in first, then negative factors are
/// divided out one eta at a time; every eta has leading coefficient 1, so
/// division is always legal and intermediate valuations never go negative
/// when the total valuation is nonnegative.
pub fn expand_quotient(q: &EtaQuotient, q_depth: u32, ring: Ring) -> Result<Series, Error> {
    ring.validate()?;
    let end = LATTICE * i64::from(q_depth) + 1;
    let v = q.lattice_valuation();
    if v < 0 {
        return Err(Error::NegativeValuation(v));
    }
    if v >= end {
        return Series::zero(ring, end);
    }
    let rel = end - v;
    let mut acc = Series::one(ring, rel)?;
    for &(a, r) in &q.factors {
        if r > 0 {
            let e = eta_series(a, ring, i64::from(a) + rel)?;
            for _ in 0..r {
                acc = acc.mul(&e)?;
            }
        }
    }
    for &(a, r) in &q.factors {
        if r < 0 {
            let e = eta_series(a, ring, i64::from(a) + rel)?;
            for _ in 0..(-r) {
                acc = acc.div(&e)?;
            }
        }
    }
    assert!(
        acc.is_zero() || acc.val() == v,
        "eta quotient valuation drifted: expected {v}, got {}",
        acc.val()
    );
    assert_eq!(acc.known_end(), end);
    Ok(acc)
}

/// Generating function of b_k in the chosen ring: the coefficient of q^n is
/// the number of partitions of n with no part divisible by k, for n through
/// `n_max`.
pub fn bk_series_in(k: u32, n_max: u32, ring: Ring) -> Result<Series, Error> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "regularity parameter must be at least 2, got {k}"
        )));
    }
    // eta(kz)/eta(z) = q^{(k-1)/24} prod (1-q^{kn})/(1-q^n): stripping the
    // prefactor leaves b_k(n) exactly at integer exponent n
    let q = EtaQuotient::new(vec![(k, 1), (1, -1)])?;
    let raw = expand_quotient(&q, n_max + (k + 22) / 24, ring)?;
    let shifted = raw.shift(-(i64::from(k) - 1))?;
    shifted.truncate(LATTICE * i64::from(n_max) + 1)
}

/// Exact-ring b_k generating function through q^{n_max}.
pub fn bk_series(k: u32, n_max: u32) -> Result<Series, Error> {
    bk_series_in(k, n_max, Ring::Exact)
}

/// Counts partitions of every n through `n_max` with no part divisible by k,
/// by bounded-coin dynamic programming. Shares nothing with the series path.
pub fn bk_oracle_table(k: u32, n_max: u32) -> Vec<BigInt> {
    let n = n_max as usize;
    let mut dp = vec![BigInt::ZERO; n + 1];
    dp[0] = BigInt::one();
    for part in 1..=n {
        if part % (k as usize) == 0 {
            continue;
        }
        for s in part..=n {
            let add = dp[s - part].clone();
            dp[s] += add;
        }
    }
    dp
}

/// b_k(n) by the dynamic-programming count.
pub fn bk_oracle(k: u32, n: u32) -> BigInt {
    bk_oracle_table(k, n).pop().expect("table covers 0..=n")
}

/// Table of b_k(0..=n_max) computed from the generating function, with the
/// structural sanity checks applied.
#[derive(Clone, Debug)]
pub struct PartitionTable {
    k: u32,
    values: Vec<BigInt>,
}

impl PartitionTable {
    pub fn build(k: u32, n_max: u32) -> Result<PartitionTable, Error> {
        let s = bk_series(k, n_max)?;
        let mut values = Vec::with_capacity(n_max as usize + 1);
        for n in 0..=i64::from(n_max) {
            values.push(s.q_coefficient(n)?);
        }
        if values[0] != BigInt::one() {
            return Err(Error::InvalidParameter(format!(
                "b_{k}(0) computed as {}, expected 1",
                values[0]
            )));
        }
        for n in 2..values.len() {
            if values[n] < values[n - 1] {
                return Err(Error::InvalidParameter(format!(
                    "b_{k} decreased from n={} to n={n}",
                    n - 1
                )));
            }
        }
        Ok(PartitionTable { k, values })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<&BigInt> {
        self.values.get(n)
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    /// Multiplies out prod_{n<=factors}(1 - q^{a n}) with a dense vector
    /// indexed by multiples of a, then applies the q^{a/24} shift by hand.
    fn eta_by_brute_force(a: u32, factors: u32, lattice_end: i64) -> Vec<(i64, BigInt)> {
        let a = i64::from(a);
        // index i holds the lattice exponent a + 24a*i: the q^{a/24}
        // prefactor, then steps of q^{a n} from the product factors
        let unit = 24 * a;
        let len = ((lattice_end - a) / unit).max(0) as usize + 1;
        let mut dense = vec![BigInt::ZERO; len];
        dense[0] = BigInt::one();
        for n in 1..=factors as usize {
            if n >= len {
                break;
            }
            for i in (n..len).rev() {
                let sub = dense[i - n].clone();
                dense[i] -= sub;
            }
        }
        dense
            .into_iter()
            .enumerate()
            .map(|(i, c)| (a + unit * i as i64, c))
            .filter(|(e, c)| *e < lattice_end && !c.is_zero())
            .collect()
    }

    #[test]
    fn eta_expansion_matches_direct_product() {
        for a in [1u32, 5, 24] {
            let end = 4000i64;
            let s = eta_series(a, Ring::Exact, end).unwrap();
            let brute = eta_by_brute_force(a, 300, end);
            let mut expected = std::collections::BTreeMap::new();
            for (e, c) in brute {
                expected.insert(e, c);
            }
            for e in 0..end {
                assert_eq!(
                    s.coefficient(e).unwrap(),
                    expected.get(&e).cloned().unwrap_or_default(),
                    "eta({a}z) coefficient at {e}/24"
                );
            }
        }
    }

    #[test]
    fn eta_24_hits_the_classical_exponents() {
        let s = eta_expand(24, 200).unwrap();
        let want: Vec<(i64, i64)> = vec![(1, 1), (25, -1), (49, -1), (121, 1), (169, 1)];
        for (qe, c) in want {
            assert_eq!(s.q_coefficient(qe).unwrap(), BigInt::from(c));
        }
        // everything else vanishes
        let support = s.support();
        let on_pattern: Vec<i64> = support.iter().map(|e| e / LATTICE).collect();
        for qe in on_pattern {
            let g = (qe - 1) / 24;
            assert_eq!(qe, 24 * g + 1);
            let is_pentagonal = (0..200)
                .flat_map(|j: i64| [j * (3 * j - 1) / 2, j * (3 * j + 1) / 2])
                .any(|p| p == g);
            assert!(is_pentagonal, "q^{qe} is not on the pentagonal pattern");
        }
    }

    #[test]
    fn eta_argument_scales_exponents() {
        let base = eta_expand(1, 300).unwrap();
        let scaled = eta_expand(7, 300).unwrap();
        for e in base.support() {
            if 7 * e < scaled.known_end() {
                assert_eq!(
                    scaled.coefficient(7 * e).unwrap(),
                    base.coefficient(e).unwrap()
                );
            }
        }
        assert_eq!(base.val(), 1);
        assert_eq!(base.coefficient(1).unwrap(), BigInt::one());
    }

    #[test]
    fn quotient_of_single_factor_is_the_expansion() {
        let q: EtaQuotient = "24:1".parse().unwrap();
        let via_quotient = expand_quotient(&q, 500, Ring::Exact).unwrap();
        let direct = eta_expand(24, 500).unwrap();
        assert!(via_quotient
            .eq_through(&direct, via_quotient.known_end())
            .unwrap());
    }

    #[test]
    fn eta_power_congruence_collapses_to_one() {
        // eta(z)^5 / eta(5z) is 1 mod 5 through q^500
        let q: EtaQuotient = "1:5,5:-1".parse().unwrap();
        let s = expand_quotient(&q, 500, Ring::Exact).unwrap();
        let reduced = s.reduce(5).unwrap();
        let one = Series::one(Ring::Mod(5), reduced.known_end()).unwrap();
        assert!(reduced.eq_through(&one, reduced.known_end()).unwrap());
        // the unreduced quotient is NOT 1: the congruence is not an identity
        assert!(s.nnz() > 1);
    }

    #[test]
    fn quotient_parsing_round_trips_and_rejects_garbage() {
        let q: EtaQuotient = " 48:1 , 24:-3 ".parse().unwrap();
        assert_eq!(q.to_string(), "24:-3,48:1");
        assert_eq!(q.lattice_valuation(), 48 - 72);
        assert!("24".parse::<EtaQuotient>().is_err());
        assert!("24:0".parse::<EtaQuotient>().is_err());
        assert!("0:1".parse::<EtaQuotient>().is_err());
        assert!("24:1,24:2".parse::<EtaQuotient>().is_err());
        assert!("24:x".parse::<EtaQuotient>().is_err());
    }

    #[test]
    fn negative_total_valuation_is_rejected() {
        let q: EtaQuotient = "24:-1".parse().unwrap();
        assert!(matches!(
            expand_quotient(&q, 100, Ring::Exact),
            Err(Error::NegativeValuation(_))
        ));
    }

    #[test]
    fn b2_counts_odd_part_partitions() {
        let s = bk_series(2, 6).unwrap();
        let want = [1i64, 1, 1, 2, 2, 3, 4];
        for (n, w) in want.iter().enumerate() {
            assert_eq!(s.q_coefficient(n as i64).unwrap(), BigInt::from(*w));
        }
    }

    #[test]
    fn b3_of_5_is_5() {
        let s = bk_series(3, 10).unwrap();
        assert_eq!(s.q_coefficient(5).unwrap(), BigInt::from(5));
        assert_eq!(bk_oracle(3, 5), BigInt::from(5));
    }

    #[test]
    fn oracle_pins_small_values() {
        assert_eq!(bk_oracle(2, 10), BigInt::from(10));
        for k in 2..=12 {
            assert_eq!(bk_oracle(k, 0), BigInt::one());
            assert_eq!(bk_oracle(k, 1), BigInt::one());
        }
    }

    #[test]
    fn series_and_oracle_agree_on_a_small_grid() {
        for k in [2u32, 3, 5, 8] {
            let s = bk_series(k, 60).unwrap();
            for (n, expected) in bk_oracle_table(k, 60).iter().enumerate() {
                assert_eq!(&s.q_coefficient(n as i64).unwrap(), expected, "b_{k}({n})");
            }
        }
    }

    #[test]
    fn modular_bk_series_matches_reduced_exact() {
        let exact = bk_series(2, 200).unwrap().reduce(5).unwrap();
        let modular = bk_series_in(2, 200, Ring::Mod(5)).unwrap();
        assert!(exact.eq_through(&modular, exact.known_end()).unwrap());
    }

    #[test]
    fn partition_table_invariants_hold() {
        for k in 2..=6 {
            let t = PartitionTable::build(k, 100).unwrap();
            assert_eq!(t.get(0), Some(&BigInt::one()));
            assert_eq!(t.len(), 101);
            assert_eq!(t.k(), k);
        }
    }

    #[test]
    fn distinct_parts_equal_odd_parts_for_b2() {
        // classical Euler involution, with a distinct-parts DP that shares
        // nothing with the odd-parts oracle
        let n_max = 80usize;
        let mut dp = vec![BigInt::ZERO; n_max + 1];
        dp[0] = BigInt::one();
        for part in 1..=n_max {
            for s in (part..=n_max).rev() {
                let add = dp[s - part].clone();
                dp[s] += add;
            }
        }
        let table = bk_oracle_table(2, n_max as u32);
        for n in 0..=n_max {
            assert_eq!(dp[n], table[n], "partitions of {n}");
        }
    }
}
