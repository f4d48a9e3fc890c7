//! Property tests pinning the series engine to a naive dense reference.
//!
//! The reference model stores every coefficient in a BTreeMap keyed by
//! lattice exponent and implements the window rules directly, with no
//! compression and no shortcuts, so any disagreement points at the engine.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use regulus_core::{Ring, Series};

#[derive(Clone, Debug)]
struct Dense {
    end: i64,
    c: BTreeMap<i64, BigInt>,
}

impl Dense {
    fn new(terms: &[(i64, i64)], end: i64) -> Dense {
        let mut c = BTreeMap::new();
        for &(e, v) in terms {
            if v != 0 && e < end {
                c.insert(e, BigInt::from(v));
            }
        }
        Dense { end, c }
    }

    /// Valuation bound: smallest support point, or `end - 1` for zero.
    fn val(&self) -> i64 {
        self.c.keys().next().copied().unwrap_or(self.end - 1)
    }

    fn coeff(&self, e: i64) -> BigInt {
        self.c.get(&e).cloned().unwrap_or_default()
    }

    fn trim(mut self) -> Dense {
        self.c.retain(|&e, v| e < self.end && !v.is_zero());
        self
    }

    fn add(&self, o: &Dense) -> Dense {
        let end = self.end.min(o.end);
        let mut c = self.c.clone();
        for (&e, v) in &o.c {
            *c.entry(e).or_default() += v;
        }
        Dense { end, c }.trim()
    }

    fn mul(&self, o: &Dense) -> Dense {
        let end = (self.end + o.val()).min(o.end + self.val());
        let mut c: BTreeMap<i64, BigInt> = BTreeMap::new();
        for (&ea, va) in &self.c {
            for (&eb, vb) in &o.c {
                if ea + eb < end {
                    *c.entry(ea + eb).or_default() += va * vb;
                }
            }
        }
        Dense { end, c }.trim()
    }

    /// Truncated division for a divisor with leading coefficient +-1,
    /// computed exponent by exponent with no stride awareness at all.
    fn div_unit(&self, o: &Dense) -> Dense {
        let lead = o.coeff(o.val());
        assert!(*lead.magnitude() == num_bigint::BigUint::from(1u32));
        let val = self.val() - o.val();
        let end = val + (self.end - self.val()).min(o.end - o.val());
        let mut c: BTreeMap<i64, BigInt> = BTreeMap::new();
        for e in val..end {
            let mut acc = self.coeff(e + o.val());
            for (&eb, vb) in o.c.range(o.val() + 1..) {
                let prev = e + o.val() - eb;
                if prev < val {
                    continue;
                }
                if let Some(p) = c.get(&prev) {
                    acc -= vb * p;
                }
            }
            if lead.is_negative() {
                acc = -acc;
            }
            c.insert(e, acc);
        }
        Dense { end, c }.trim()
    }

    fn reduce(&self, m: u64) -> Dense {
        let mb = BigInt::from(m);
        let c = self.c.iter().map(|(&e, v)| (e, v.mod_floor(&mb))).collect();
        Dense { end: self.end, c }.trim()
    }
}

fn clip(terms: &[(i64, i64)], end: i64) -> Vec<(i64, i64)> {
    terms.iter().copied().filter(|&(e, _)| e < end).collect()
}

fn build(ring: Ring, terms: &[(i64, i64)], end: i64) -> Series {
    let t = clip(terms, end)
        .into_iter()
        .map(|(e, v)| (e, BigInt::from(v)))
        .collect::<Vec<_>>();
    Series::from_terms(ring, t, end).unwrap()
}

fn assert_matches(s: &Series, d: &Dense, m: Option<u64>) {
    assert_eq!(s.known_end(), d.end, "window ends differ");
    for e in 0..d.end {
        let mut want = d.coeff(e);
        if let Some(m) = m {
            want = want.mod_floor(&BigInt::from(m));
        }
        assert_eq!(s.coefficient(e).unwrap(), want, "coefficient at {e}/24");
    }
}

fn assert_invariants(s: &Series) {
    assert!(s.val() >= 0);
    assert!(s.known_end() > s.val());
    assert!(s.stride() >= 0);
    assert_eq!(s.stride() == 0, s.nnz() <= 1, "stride normal form");
    if !s.is_zero() {
        assert!(
            !s.coefficient(s.val()).unwrap().is_zero(),
            "valuation is tight"
        );
    }
    if s.stride() > 0 {
        for e in s.support() {
            assert_eq!((e - s.val()) % s.stride(), 0, "support off the stored grid");
        }
    }
}

/// Sorted unique (exponent, coefficient) pairs, biased toward shared strides
/// so compressed and uncompressed paths both get exercised.
fn terms_strategy() -> impl Strategy<Value = Vec<(i64, i64)>> {
    let arbitrary = proptest::collection::btree_map(0i64..120, -9i64..=9, 0..10)
        .prop_map(|m| m.into_iter().collect::<Vec<_>>());
    let strided = (
        0i64..24,
        1i64..30,
        proptest::collection::vec(-9i64..=9, 1..8),
    )
        .prop_map(|(base, stride, coeffs)| {
            coeffs
                .into_iter()
                .enumerate()
                .map(|(i, c)| (base + stride * i as i64, c))
                .collect::<Vec<_>>()
        });
    prop_oneof![arbitrary, strided]
}

fn modulus_strategy() -> impl Strategy<Value = u64> {
    prop_oneof![
        Just(2u64),
        Just(3),
        Just(5),
        Just(25),
        Just(97),
        Just(121),
        Just(3125),
        Just((1u64 << 63) + 29),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn add_matches_dense_reference(
        ta in terms_strategy(),
        tb in terms_strategy(),
        ea in 121i64..200,
        eb in 121i64..200,
    ) {
        let (da, db) = (Dense::new(&ta, ea), Dense::new(&tb, eb));
        let (sa, sb) = (build(Ring::Exact, &ta, ea), build(Ring::Exact, &tb, eb));
        let sum = sa.add(&sb).unwrap();
        assert_matches(&sum, &da.add(&db), None);
        assert_invariants(&sum);
        let diff = sa.sub(&sb).unwrap();
        let neg_b: Vec<(i64, i64)> = tb.iter().map(|&(e, v)| (e, -v)).collect();
        assert_matches(&diff, &da.add(&Dense::new(&neg_b, eb)), None);
        assert_invariants(&diff);
    }

    #[test]
    fn mul_matches_dense_reference(
        ta in terms_strategy(),
        tb in terms_strategy(),
        ea in 121i64..200,
        eb in 121i64..200,
    ) {
        let (da, db) = (Dense::new(&ta, ea), Dense::new(&tb, eb));
        let (sa, sb) = (build(Ring::Exact, &ta, ea), build(Ring::Exact, &tb, eb));
        let prod = sa.mul(&sb).unwrap();
        assert_matches(&prod, &da.mul(&db), None);
        assert_invariants(&prod);
        // commutativity comes along for free
        let flip = sb.mul(&sa).unwrap();
        prop_assert!(prod.eq_through(&flip, prod.known_end()).unwrap());
    }

    #[test]
    fn mul_is_associative(
        ta in terms_strategy(),
        tb in terms_strategy(),
        tc in terms_strategy(),
    ) {
        let a = build(Ring::Exact, &ta, 150);
        let b = build(Ring::Exact, &tb, 150);
        let c = build(Ring::Exact, &tc, 150);
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        let end = left.known_end().min(right.known_end());
        prop_assert!(left.truncate(end).unwrap().eq_through(&right.truncate(end).unwrap(), end).unwrap());
    }

    #[test]
    fn div_matches_dense_reference(
        ta in terms_strategy(),
        tb in terms_strategy(),
        lead in prop_oneof![Just(1i64), Just(-1i64)],
        b0 in 0i64..30,
    ) {
        // divisor: unit lead at b0, remaining terms above it
        let mut bt = vec![(b0, lead)];
        for &(e, v) in &tb {
            bt.push((b0 + 1 + e, v));
        }
        // dividend shifted up so the quotient valuation stays nonnegative
        let at: Vec<(i64, i64)> = ta.iter().map(|&(e, v)| (b0 + e, v)).collect();
        let da = Dense::new(&at, 200 + b0);
        let db = Dense::new(&bt, 200 + b0);
        let sa = build(Ring::Exact, &at, 200 + b0);
        let sb = build(Ring::Exact, &bt, 200 + b0);
        if sa.is_zero() {
            return Ok(());
        }
        let q = sa.div(&sb).unwrap();
        assert_matches(&q, &da.div_unit(&db), None);
        assert_invariants(&q);
    }

    #[test]
    fn div_then_mul_round_trips(
        ta in terms_strategy(),
        tb in terms_strategy(),
        lead in prop_oneof![Just(1i64), Just(-1i64)],
    ) {
        let mut bt = vec![(0i64, lead)];
        for &(e, v) in &tb {
            bt.push((1 + e, v));
        }
        let a = build(Ring::Exact, &ta, 160);
        let b = build(Ring::Exact, &bt, 160);
        let p = a.mul(&b).unwrap();
        let back = p.div(&b).unwrap();
        let end = back.known_end().min(a.known_end());
        prop_assert!(back.eq_through(&a, end).unwrap());
    }

    #[test]
    fn reduce_commutes_with_add_and_mul(
        ta in terms_strategy(),
        tb in terms_strategy(),
        m in modulus_strategy(),
    ) {
        let a = build(Ring::Exact, &ta, 150);
        let b = build(Ring::Exact, &tb, 150);
        let am = a.reduce(m).unwrap();
        let bm = b.reduce(m).unwrap();

        let sum_then = a.add(&b).unwrap().reduce(m).unwrap();
        let then_sum = am.add(&bm).unwrap();
        prop_assert!(sum_then.eq_through(&then_sum, sum_then.known_end()).unwrap());
        assert_invariants(&then_sum);

        let mul_then = a.mul(&b).unwrap().reduce(m).unwrap();
        let then_mul = am.mul(&bm).unwrap();
        let end = mul_then.known_end().min(then_mul.known_end());
        prop_assert!(mul_then.eq_through(&then_mul, end).unwrap());
        assert_invariants(&then_mul);
    }

    #[test]
    fn modular_ops_match_dense_reference(
        ta in terms_strategy(),
        tb in terms_strategy(),
        m in modulus_strategy(),
    ) {
        // reduce before operating, mirroring how modular series are built,
        // so the zero series' window bookkeeping matches on both sides
        let da = Dense::new(&ta, 150).reduce(m);
        let db = Dense::new(&tb, 150).reduce(m);
        let sa = build(Ring::Mod(m), &ta, 150);
        let sb = build(Ring::Mod(m), &tb, 150);
        assert_matches(&sa.add(&sb).unwrap(), &da.add(&db).reduce(m), Some(m));
        assert_matches(&sa.mul(&sb).unwrap(), &da.mul(&db).reduce(m), Some(m));
        assert_invariants(&sa.add(&sb).unwrap());
        assert_invariants(&sa.mul(&sb).unwrap());
    }

    #[test]
    fn modular_division_inverts_multiplication(
        ta in terms_strategy(),
        tb in terms_strategy(),
        m in modulus_strategy(),
        lead in 1i64..40,
    ) {
        // any lead coprime to m is a legal unit divisor
        prop_assume!(num_integer::gcd(lead as u64, m) == 1);
        let mut bt = vec![(0i64, lead)];
        for &(e, v) in &tb {
            bt.push((1 + e, v));
        }
        let a = build(Ring::Mod(m), &ta, 150);
        let b = build(Ring::Mod(m), &bt, 150);
        if a.is_zero() {
            return Ok(());
        }
        let q = a.div(&b).unwrap();
        assert_invariants(&q);
        let back = q.mul(&b).unwrap();
        prop_assert!(back.eq_through(&a, back.known_end()).unwrap());
    }

    #[test]
    fn pow_matches_iterated_mul(ta in terms_strategy(), e in 0u32..7) {
        let a = build(Ring::Exact, &ta, 150);
        let fast = a.pow(e).unwrap();
        assert_invariants(&fast);
        let mut slow = Series::one(Ring::Exact, a.prec()).unwrap();
        for _ in 0..e {
            slow = slow.mul(&a).unwrap();
        }
        let end = fast.known_end().min(slow.known_end());
        prop_assert!(fast.eq_through(&slow, end).unwrap());
    }

    #[test]
    fn truncate_shift_scale_match_reference(
        ta in terms_strategy(),
        cut in 1i64..150,
        delta in 0i64..50,
        k in -9i64..=9,
    ) {
        let d = Dense::new(&ta, 150);
        let s = build(Ring::Exact, &ta, 150);
        let t = s.truncate(cut).unwrap();
        assert_invariants(&t);
        assert_eq!(t.known_end(), cut.min(150));
        for e in 0..t.known_end() {
            assert_eq!(t.coefficient(e).unwrap(), d.coeff(e));
        }
        let sh = s.shift(delta).unwrap();
        for e in delta..sh.known_end() {
            assert_eq!(sh.coefficient(e).unwrap(), d.coeff(e - delta));
        }
        let sc = s.scale(&BigInt::from(k));
        assert_invariants(&sc);
        for e in 0..150 {
            assert_eq!(sc.coefficient(e).unwrap(), d.coeff(e) * k);
        }
    }
}
