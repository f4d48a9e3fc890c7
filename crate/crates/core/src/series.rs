//! Truncated power series on the 1/24 exponent lattice.
//!
//! Every series is a window of known coefficients: exponents below `val()`
//! are known to be zero, exponents in `[val(), known_end())` are known and
//! readable, and nothing is claimed from `known_end()` on. Exponents are
//! counted in 1/24 units throughout, so the expansion of eta(A z) has integer
//! lattice valuation A for every positive A and q^n sits at lattice exponent
//! 24 n.
//!
//! Two coefficient rings are supported: exact arbitrary-precision integers,
//! and integers modulo a fixed M >= 2. Operations never switch rings
//! silently; [`Series::reduce`] is the only bridge, and it is a ring
//! homomorphism.
//!
//! Storage is dense over an arithmetic progression `val + stride * i` of
//! lattice exponents. The stride is derived from the operands (gcd of their
//! strides and relative offsets), so series supported on a single residue
//! class - which is every series this engine builds - stay compact, while
//! `coefficient()` behaves exactly as if the whole lattice window were
//! materialized. A stride of 0 is the normal form for a series with at most
//! one stored coefficient.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Lattice units per integer exponent of q.
pub const LATTICE: i64 = 24;

/// Coefficient ring of a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ring {
    /// Arbitrary-precision integers.
    Exact,
    /// Integers modulo the given M >= 2, represented in `[0, M)`.
    Mod(u64),
}

impl Ring {
    /// Rejects moduli below 2.
    pub fn validate(self) -> Result<Self, Error> {
        if let Ring::Mod(m) = self {
            if m < 2 {
                return Err(Error::ModulusTooSmall(m));
            }
        }
        Ok(self)
    }

    pub fn modulus(self) -> Option<u64> {
        match self {
            Ring::Exact => None,
            Ring::Mod(m) => Some(m),
        }
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Exact => write!(f, "exact"),
            Ring::Mod(m) => write!(f, "mod:{m}"),
        }
    }
}

/// Borrowed view of one coefficient, avoiding allocation for the modular ring.
#[derive(Clone, Copy, Debug)]
pub enum CoeffRef<'a> {
    Exact(&'a BigInt),
    Mod(u64),
}

impl CoeffRef<'_> {
    pub fn to_bigint(&self) -> BigInt {
        match self {
            CoeffRef::Exact(b) => (*b).clone(),
            CoeffRef::Mod(v) => BigInt::from(*v),
        }
    }
}

impl fmt::Display for CoeffRef<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffRef::Exact(b) => write!(f, "{b}"),
            CoeffRef::Mod(v) => write!(f, "{v}"),
        }
    }
}

/// First differing coefficient found by [`Series::first_mismatch`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    /// Lattice exponent (1/24 units) of the disagreement.
    pub exp: i64,
    pub left: String,
    pub right: String,
}

#[derive(Clone, Debug)]
enum CoeffVec {
    Exact(Vec<BigInt>),
    Mod(Vec<u64>),
}

/// A truncated q-series with tight valuation and an explicit known window.
#[derive(Clone, Debug)]
pub struct Series {
    ring: Ring,
    /// Lattice exponent of the first stored coefficient. Never negative.
    val: i64,
    /// Gap between stored exponents; 0 iff exactly one coefficient is stored.
    stride: i64,
    /// Exclusive lattice bound of the known window. Always > `val`.
    known_end: i64,
    coeffs: CoeffVec,
}

// ---------------------------------------------------------------------------
// ring-generic coefficient arithmetic

trait RingOps {
    type C: Clone + PartialEq;
    fn zero(&self) -> Self::C;
    fn is_zero(&self, c: &Self::C) -> bool;
    fn is_one(&self, c: &Self::C) -> bool;
    fn is_neg_one(&self, c: &Self::C) -> bool;
    fn add_assign(&self, a: &mut Self::C, b: &Self::C);
    fn sub_assign(&self, a: &mut Self::C, b: &Self::C);
    /// acc += a * b
    fn addmul(&self, acc: &mut Self::C, a: &Self::C, b: &Self::C);
    /// acc -= a * b
    fn submul(&self, acc: &mut Self::C, a: &Self::C, b: &Self::C);
    fn mul(&self, a: &Self::C, b: &Self::C) -> Self::C;
    fn neg(&self, c: &Self::C) -> Self::C;
    /// Multiplicative inverse when `c` is a unit.
    fn inv(&self, c: &Self::C) -> Option<Self::C>;
    fn wrap(&self, v: Vec<Self::C>) -> CoeffVec;
    fn render(&self, c: &Self::C) -> String;
}

struct ExactOps;

impl RingOps for ExactOps {
    type C = BigInt;

    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn is_zero(&self, c: &BigInt) -> bool {
        c.is_zero()
    }
    fn is_one(&self, c: &BigInt) -> bool {
        c.is_one()
    }
    fn is_neg_one(&self, c: &BigInt) -> bool {
        c.is_negative() && c.magnitude().is_one()
    }
    fn add_assign(&self, a: &mut BigInt, b: &BigInt) {
        *a += b;
    }
    fn sub_assign(&self, a: &mut BigInt, b: &BigInt) {
        *a -= b;
    }
    fn addmul(&self, acc: &mut BigInt, a: &BigInt, b: &BigInt) {
        *acc += a * b;
    }
    fn submul(&self, acc: &mut BigInt, a: &BigInt, b: &BigInt) {
        *acc -= a * b;
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn neg(&self, c: &BigInt) -> BigInt {
        -c
    }
    fn inv(&self, c: &BigInt) -> Option<BigInt> {
        if c.magnitude().is_one() {
            Some(c.clone())
        } else {
            None
        }
    }
    fn wrap(&self, v: Vec<BigInt>) -> CoeffVec {
        CoeffVec::Exact(v)
    }
    fn render(&self, c: &BigInt) -> String {
        c.to_string()
    }
}

struct ModOps {
    m: u64,
}

impl ModOps {
    fn reduce_u128(&self, x: u128) -> u64 {
        (x % u128::from(self.m)) as u64
    }
}

impl RingOps for ModOps {
    type C = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn is_zero(&self, c: &u64) -> bool {
        *c == 0
    }
    fn is_one(&self, c: &u64) -> bool {
        *c == 1
    }
    fn is_neg_one(&self, c: &u64) -> bool {
        *c == self.m - 1
    }
    fn add_assign(&self, a: &mut u64, b: &u64) {
        *a = self.reduce_u128(u128::from(*a) + u128::from(*b));
    }
    fn sub_assign(&self, a: &mut u64, b: &u64) {
        *a = self.reduce_u128(u128::from(*a) + u128::from(self.m) - u128::from(*b));
    }
    fn addmul(&self, acc: &mut u64, a: &u64, b: &u64) {
        let t = self.reduce_u128(u128::from(*a) * u128::from(*b));
        self.add_assign(acc, &t);
    }
    fn submul(&self, acc: &mut u64, a: &u64, b: &u64) {
        let t = self.reduce_u128(u128::from(*a) * u128::from(*b));
        self.sub_assign(acc, &t);
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        self.reduce_u128(u128::from(*a) * u128::from(*b))
    }
    fn neg(&self, c: &u64) -> u64 {
        if *c == 0 {
            0
        } else {
            self.m - *c
        }
    }
    fn inv(&self, c: &u64) -> Option<u64> {
        // extended gcd on signed 128-bit; m can use the full u64 range
        let (mut r0, mut r1) = (i128::from(self.m), i128::from(*c));
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        if r0 != 1 {
            return None;
        }
        Some(s0.rem_euclid(i128::from(self.m)) as u64)
    }
    fn wrap(&self, v: Vec<u64>) -> CoeffVec {
        CoeffVec::Mod(v)
    }
    fn render(&self, c: &u64) -> String {
        c.to_string()
    }
}

// ---------------------------------------------------------------------------
// generic kernels

struct View<'a, C> {
    val: i64,
    stride: i64,
    end: i64,
    c: &'a [C],
}

impl<'a, C> View<'a, C> {
    fn rel(&self) -> i64 {
        self.end - self.val
    }
}

fn grid_len(val: i64, stride: i64, end: i64) -> usize {
    debug_assert!(stride >= 1 && end > val);
    ((end - 1 - val) / stride + 1) as usize
}

/// Tightens the valuation, re-derives the stride from the support, and
/// collapses to the singleton/zero normal forms. `stride >= 1` on entry and
/// `v.len() == grid_len(val, stride, end)`.
fn normalize<R: RingOps>(
    r: &R,
    ring: Ring,
    val: i64,
    stride: i64,
    v: Vec<R::C>,
    end: i64,
) -> Series {
    debug_assert_eq!(v.len(), grid_len(val, stride, end));
    let nonzero: Vec<usize> = (0..v.len()).filter(|&i| !r.is_zero(&v[i])).collect();
    match nonzero.len() {
        0 => zero_in(r, ring, end),
        1 => {
            let i = nonzero[0];
            singleton_in(r, ring, val + (i as i64) * stride, v[i].clone(), end)
        }
        _ => {
            let first = nonzero[0];
            let mut g = 0i64;
            for &i in &nonzero[1..] {
                g = g.gcd(&((i - first) as i64));
            }
            let new_val = val + (first as i64) * stride;
            debug_assert!(
                new_val >= 0,
                "negative valuation {new_val} escaped a precondition"
            );
            if first == 0 && g == 1 {
                return Series {
                    ring,
                    val,
                    stride,
                    known_end: end,
                    coeffs: r.wrap(v),
                };
            }
            let new_stride = stride * g;
            let len = grid_len(new_val, new_stride, end);
            let mut out = Vec::with_capacity(len);
            for t in 0..len {
                out.push(v[first + t * (g as usize)].clone());
            }
            Series {
                ring,
                val: new_val,
                stride: new_stride,
                known_end: end,
                coeffs: r.wrap(out),
            }
        }
    }
}

fn zero_in<R: RingOps>(r: &R, ring: Ring, end: i64) -> Series {
    debug_assert!(end >= 1);
    Series {
        ring,
        val: end - 1,
        stride: 0,
        known_end: end,
        coeffs: r.wrap(vec![r.zero()]),
    }
}

fn singleton_in<R: RingOps>(r: &R, ring: Ring, val: i64, c: R::C, end: i64) -> Series {
    debug_assert!(val >= 0 && end > val);
    if r.is_zero(&c) {
        return zero_in(r, ring, end);
    }
    Series {
        ring,
        val,
        stride: 0,
        known_end: end,
        coeffs: r.wrap(vec![c]),
    }
}

/// Coefficient of `a` at lattice exponent `exp`, zero off-grid. The caller
/// guarantees `exp < a.end`.
fn at<'a, C>(a: &View<'a, C>, exp: i64) -> Option<&'a C> {
    if exp < a.val {
        return None;
    }
    let off = exp - a.val;
    if a.stride == 0 {
        return if off == 0 { Some(&a.c[0]) } else { None };
    }
    if off % a.stride != 0 {
        return None;
    }
    let i = (off / a.stride) as usize;
    if i < a.c.len() {
        Some(&a.c[i])
    } else {
        None
    }
}

fn add_impl<R: RingOps>(r: &R, ring: Ring, a: View<R::C>, b: View<R::C>, subtract: bool) -> Series {
    let end = a.end.min(b.end);
    let a_zero = a.c.iter().all(|c| r.is_zero(c));
    let b_zero = b.c.iter().all(|c| r.is_zero(c));
    let base = match (a_zero, b_zero) {
        (true, true) => return zero_in(r, ring, end),
        (false, true) => a.val,
        (true, false) => b.val,
        (false, false) => a.val.min(b.val),
    };
    let mut stride = 0i64;
    if !a_zero {
        stride = stride.gcd(&a.stride).gcd(&(a.val - base));
    }
    if !b_zero {
        stride = stride.gcd(&b.stride).gcd(&(b.val - base));
    }
    if base >= end {
        // all support truncated away by the shorter window
        return zero_in(r, ring, end);
    }
    if stride == 0 {
        // at most one potentially nonzero exponent (both operands sit on it)
        let mut c = at(&a, base).cloned().unwrap_or_else(|| r.zero());
        if let Some(cb) = at(&b, base) {
            if subtract {
                r.sub_assign(&mut c, cb);
            } else {
                r.add_assign(&mut c, cb);
            }
        }
        return singleton_in(r, ring, base, c, end);
    }
    let len = grid_len(base, stride, end);
    let mut out = vec![r.zero(); len];
    let scatter = |out: &mut Vec<R::C>, side: &View<R::C>, negate: bool| {
        let s = side.stride.max(1);
        for (i, c) in side.c.iter().enumerate() {
            if r.is_zero(c) {
                continue;
            }
            let exp = side.val + (i as i64) * s;
            if exp >= end {
                break;
            }
            let t = ((exp - base) / stride) as usize;
            if negate {
                r.sub_assign(&mut out[t], c);
            } else {
                r.add_assign(&mut out[t], c);
            }
        }
    };
    scatter(&mut out, &a, false);
    scatter(&mut out, &b, subtract);
    normalize(r, ring, base, stride, out, end)
}

fn nnz<R: RingOps>(r: &R, v: &View<R::C>) -> usize {
    v.c.iter().filter(|c| !r.is_zero(c)).count()
}

fn mul_impl<R: RingOps>(r: &R, ring: Ring, a: View<R::C>, b: View<R::C>) -> Series {
    let val = a.val + b.val;
    let end = (a.end + b.val).min(b.end + a.val);
    let a_zero = a.c.iter().all(|c| r.is_zero(c));
    let b_zero = b.c.iter().all(|c| r.is_zero(c));
    if a_zero || b_zero {
        return zero_in(r, ring, end);
    }
    // singleton fast path: shift and scale the other operand
    let single = |s: &View<R::C>| s.stride == 0;
    if single(&a) || single(&b) {
        let (m, d) = if single(&a) { (&a, &b) } else { (&b, &a) };
        let c0 = &m.c[0];
        let stride = d.stride;
        if stride == 0 {
            return singleton_in(r, ring, val, r.mul(c0, &d.c[0]), end);
        }
        let len = grid_len(val, stride, end);
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            out.push(r.mul(c0, &d.c[i]));
        }
        return normalize(r, ring, val, stride, out, end);
    }
    let stride = a.stride.gcd(&b.stride);
    let len = grid_len(val, stride, end);
    let mut out = vec![r.zero(); len];
    let (sp, dn) = if nnz(r, &a) <= nnz(r, &b) {
        (&a, &b)
    } else {
        (&b, &a)
    };
    let rel_end = end - val;
    for (i, cs) in sp.c.iter().enumerate() {
        if r.is_zero(cs) {
            continue;
        }
        let off_s = (i as i64) * sp.stride;
        if off_s >= rel_end {
            break;
        }
        let one = r.is_one(cs);
        let neg_one = r.is_neg_one(cs);
        for (j, cd) in dn.c.iter().enumerate() {
            let off = off_s + (j as i64) * dn.stride;
            if off >= rel_end {
                break;
            }
            if r.is_zero(cd) {
                continue;
            }
            let t = (off / stride) as usize;
            if one {
                r.add_assign(&mut out[t], cd);
            } else if neg_one {
                r.sub_assign(&mut out[t], cd);
            } else {
                r.addmul(&mut out[t], cs, cd);
            }
        }
    }
    normalize(r, ring, val, stride, out, end)
}

fn div_impl<R: RingOps>(r: &R, ring: Ring, a: View<R::C>, b: View<R::C>) -> Result<Series, Error> {
    if b.c.iter().all(|c| r.is_zero(c)) {
        return Err(Error::DivisionByZero);
    }
    // b is normalized, so its first stored coefficient is its leading one
    let lead = &b.c[0];
    let inv = r.inv(lead).ok_or_else(|| Error::NonUnitLeading {
        lead: r.render(lead),
        ring: ring.to_string(),
    })?;
    let val = a.val - b.val;
    let rel = a.rel().min(b.rel());
    let end = val + rel;
    if a.c.iter().all(|c| r.is_zero(c)) {
        if end < 1 {
            return Err(Error::EmptyWindow);
        }
        return Ok(zero_in(r, ring, end));
    }
    if val < 0 {
        return Err(Error::NegativeValuation(val));
    }
    // monomial divisor: shift and scale
    if b.stride == 0 {
        let stride = a.stride.max(1);
        let len = grid_len(val, stride, end).min(a.c.len());
        let mut out = Vec::with_capacity(len);
        let inv_is_one = r.is_one(&inv);
        let inv_is_neg_one = r.is_neg_one(&inv);
        for i in 0..len {
            out.push(if inv_is_one {
                a.c[i].clone()
            } else if inv_is_neg_one {
                r.neg(&a.c[i])
            } else {
                r.mul(&inv, &a.c[i])
            });
        }
        out.resize(grid_len(val, stride, end), r.zero());
        return Ok(normalize(r, ring, val, stride, out, end));
    }
    let stride = if a.stride == 0 {
        b.stride
    } else {
        a.stride.gcd(&b.stride)
    };
    let len = grid_len(val, stride, end);
    // nonzero divisor offsets in grid steps, skipping the leading one
    let b_terms: Vec<(usize, &R::C)> =
        b.c.iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| !r.is_zero(c))
            .map(|(j, c)| ((j as i64 * b.stride / stride) as usize, c))
            .collect();
    let a_at = |t: usize| -> R::C {
        at(&a, val + b.val + (t as i64) * stride)
            .cloned()
            .unwrap_or_else(|| r.zero())
    };
    let inv_is_one = r.is_one(&inv);
    let inv_is_neg_one = r.is_neg_one(&inv);
    let mut out: Vec<R::C> = Vec::with_capacity(len);
    for t in 0..len {
        let mut acc = a_at(t);
        for &(u, cb) in &b_terms {
            if u > t {
                break;
            }
            let prev = &out[t - u];
            if r.is_zero(prev) {
                continue;
            }
            if r.is_one(cb) {
                r.sub_assign(&mut acc, prev);
            } else if r.is_neg_one(cb) {
                r.add_assign(&mut acc, prev);
            } else {
                r.submul(&mut acc, cb, prev);
            }
        }
        if inv_is_neg_one {
            acc = r.neg(&acc);
        } else if !inv_is_one {
            acc = r.mul(&inv, &acc);
        }
        out.push(acc);
    }
    Ok(normalize(r, ring, val, stride, out, end))
}

fn scale_impl<R: RingOps>(r: &R, ring: Ring, a: View<R::C>, c: &R::C) -> Series {
    if r.is_zero(c) || a.c.iter().all(|x| r.is_zero(x)) {
        return zero_in(r, ring, a.end);
    }
    if a.stride == 0 {
        return singleton_in(r, ring, a.val, r.mul(c, &a.c[0]), a.end);
    }
    let mut out = Vec::with_capacity(a.c.len());
    for x in a.c {
        out.push(r.mul(c, x));
    }
    normalize(r, ring, a.val, a.stride, out, a.end)
}

// ---------------------------------------------------------------------------
// public interface

impl Series {
    fn view<'a, C>(&'a self, c: &'a [C]) -> View<'a, C> {
        View {
            val: self.val,
            stride: self.stride,
            end: self.known_end,
            c,
        }
    }

    /// The zero series, known through `known_end` (exclusive, >= 1).
    pub fn zero(ring: Ring, known_end: i64) -> Result<Series, Error> {
        ring.validate()?;
        if known_end < 1 {
            return Err(Error::EmptyWindow);
        }
        Ok(match ring {
            Ring::Exact => zero_in(&ExactOps, ring, known_end),
            Ring::Mod(m) => zero_in(&ModOps { m }, ring, known_end),
        })
    }

    /// The constant 1, known through `known_end` (exclusive, >= 1).
    pub fn one(ring: Ring, known_end: i64) -> Result<Series, Error> {
        Series::monomial(ring, 0, BigInt::one(), known_end)
    }

    /// A single term `coeff * q^(exp/24)`.
    pub fn monomial(ring: Ring, exp: i64, coeff: BigInt, known_end: i64) -> Result<Series, Error> {
        Series::from_terms(ring, vec![(exp, coeff)], known_end)
    }

    /// Builds a series from `(lattice exponent, coefficient)` pairs with
    /// strictly ascending nonnegative exponents, all below `known_end`.
    /// Zero coefficients are dropped; in a modular ring the coefficients are
    /// reduced first.
    pub fn from_terms(
        ring: Ring,
        terms: Vec<(i64, BigInt)>,
        known_end: i64,
    ) -> Result<Series, Error> {
        ring.validate()?;
        if known_end < 1 {
            return Err(Error::EmptyWindow);
        }
        let mut prev = -1i64;
        for &(e, _) in &terms {
            if e < 0 {
                return Err(Error::NegativeValuation(e));
            }
            if e <= prev {
                return Err(Error::InvalidParameter(format!(
                    "term exponents must be strictly ascending, got {e}/24 after {prev}/24"
                )));
            }
            if e >= known_end {
                return Err(Error::CoefficientOutOfWindow {
                    exp: e,
                    end: known_end,
                });
            }
            prev = e;
        }
        match ring {
            Ring::Exact => {
                let r = ExactOps;
                let kept: Vec<(i64, BigInt)> =
                    terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
                Ok(from_sparse(&r, ring, kept, known_end))
            }
            Ring::Mod(m) => {
                let r = ModOps { m };
                let mb = BigInt::from(m);
                let kept: Vec<(i64, u64)> = terms
                    .into_iter()
                    .map(|(e, c)| {
                        let red = c.mod_floor(&mb);
                        (
                            e,
                            u64::try_from(red).expect("mod_floor result fits the modulus"),
                        )
                    })
                    .filter(|(_, c)| *c != 0)
                    .collect();
                Ok(from_sparse(&r, ring, kept, known_end))
            }
        }
    }

    /// Convenience for integer-exponent series: `coeffs[n]` becomes the
    /// coefficient of q^n. The window covers exactly the given exponents.
    pub fn from_q_coeffs(ring: Ring, coeffs: &[i64]) -> Result<Series, Error> {
        if coeffs.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(n, &c)| (LATTICE * n as i64, BigInt::from(c)))
            .collect();
        Series::from_terms(ring, terms, LATTICE * (coeffs.len() as i64 - 1) + 1)
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    /// Lattice exponent of the first (potentially) nonzero coefficient.
    /// Tight whenever the series is nonzero.
    pub fn val(&self) -> i64 {
        self.val
    }

    /// Exclusive lattice bound of the known coefficient window.
    pub fn known_end(&self) -> i64 {
        self.known_end
    }

    /// Window length `known_end - val` in lattice units. Always >= 1.
    pub fn prec(&self) -> i64 {
        self.known_end - self.val
    }

    /// Stored-grid stride in lattice units (0 for singleton storage).
    pub fn stride(&self) -> i64 {
        self.stride
    }

    /// True when every known coefficient is zero.
    pub fn is_zero(&self) -> bool {
        // normalized: the zero series is always the stride-0 single zero
        match &self.coeffs {
            CoeffVec::Exact(v) => v.len() == 1 && v[0].is_zero(),
            CoeffVec::Mod(v) => v.len() == 1 && v[0] == 0,
        }
    }

    /// Number of nonzero stored coefficients.
    pub fn nnz(&self) -> usize {
        match &self.coeffs {
            CoeffVec::Exact(v) => v.iter().filter(|c| !c.is_zero()).count(),
            CoeffVec::Mod(v) => v.iter().filter(|&&c| c != 0).count(),
        }
    }

    /// Coefficient at the given lattice exponent. Exponents below the
    /// valuation are zero; exponents at or beyond `known_end` are a hard
    /// error, never silently zero.
    pub fn coefficient(&self, exp: i64) -> Result<BigInt, Error> {
        if exp >= self.known_end {
            return Err(Error::CoefficientOutOfWindow {
                exp,
                end: self.known_end,
            });
        }
        Ok(self
            .stored_at(exp)
            .map(|c| c.to_bigint())
            .unwrap_or_default())
    }

    /// Coefficient of q^n (integer exponent). Same window rules as
    /// [`Series::coefficient`].
    pub fn q_coefficient(&self, n: i64) -> Result<BigInt, Error> {
        self.coefficient(LATTICE * n)
    }

    fn stored_at(&self, exp: i64) -> Option<CoeffRef<'_>> {
        if exp < self.val || exp >= self.known_end {
            return None;
        }
        let off = exp - self.val;
        let idx = if self.stride == 0 {
            if off == 0 {
                0usize
            } else {
                return None;
            }
        } else {
            if off % self.stride != 0 {
                return None;
            }
            (off / self.stride) as usize
        };
        match &self.coeffs {
            CoeffVec::Exact(v) => v.get(idx).map(CoeffRef::Exact),
            CoeffVec::Mod(v) => v.get(idx).copied().map(CoeffRef::Mod),
        }
    }

    /// Visits the nonzero terms in ascending exponent order.
    pub fn for_each_term<F: FnMut(i64, CoeffRef<'_>)>(&self, mut f: F) {
        let step = self.stride.max(1);
        match &self.coeffs {
            CoeffVec::Exact(v) => {
                for (i, c) in v.iter().enumerate() {
                    if !c.is_zero() {
                        f(self.val + step * i as i64, CoeffRef::Exact(c));
                    }
                }
            }
            CoeffVec::Mod(v) => {
                for (i, &c) in v.iter().enumerate() {
                    if c != 0 {
                        f(self.val + step * i as i64, CoeffRef::Mod(c));
                    }
                }
            }
        }
    }

    /// Ascending lattice exponents of the nonzero terms.
    pub fn support(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.nnz());
        self.for_each_term(|e, _| out.push(e));
        out
    }

    fn check_same_ring(&self, other: &Series) -> Result<(), Error> {
        if self.ring != other.ring {
            return Err(Error::ring_mismatch(self.ring, other.ring));
        }
        Ok(())
    }

    pub fn add(&self, other: &Series) -> Result<Series, Error> {
        self.check_same_ring(other)?;
        Ok(match (&self.coeffs, &other.coeffs) {
            (CoeffVec::Exact(a), CoeffVec::Exact(b)) => {
                add_impl(&ExactOps, self.ring, self.view(a), other.view(b), false)
            }
            (CoeffVec::Mod(a), CoeffVec::Mod(b)) => {
                let m = self.ring.modulus().expect("modular ring");
                add_impl(&ModOps { m }, self.ring, self.view(a), other.view(b), false)
            }
            _ => unreachable!("ring equality was checked"),
        })
    }

    pub fn sub(&self, other: &Series) -> Result<Series, Error> {
        self.check_same_ring(other)?;
        Ok(match (&self.coeffs, &other.coeffs) {
            (CoeffVec::Exact(a), CoeffVec::Exact(b)) => {
                add_impl(&ExactOps, self.ring, self.view(a), other.view(b), true)
            }
            (CoeffVec::Mod(a), CoeffVec::Mod(b)) => {
                let m = self.ring.modulus().expect("modular ring");
                add_impl(&ModOps { m }, self.ring, self.view(a), other.view(b), true)
            }
            _ => unreachable!("ring equality was checked"),
        })
    }

    pub fn mul(&self, other: &Series) -> Result<Series, Error> {
        self.check_same_ring(other)?;
        Ok(match (&self.coeffs, &other.coeffs) {
            (CoeffVec::Exact(a), CoeffVec::Exact(b)) => {
                mul_impl(&ExactOps, self.ring, self.view(a), other.view(b))
            }
            (CoeffVec::Mod(a), CoeffVec::Mod(b)) => {
                let m = self.ring.modulus().expect("modular ring");
                mul_impl(&ModOps { m }, self.ring, self.view(a), other.view(b))
            }
            _ => unreachable!("ring equality was checked"),
        })
    }

    /// Binary exponentiation. `pow(a, 0)` is 1 carried at `a`'s relative
    /// precision.
    pub fn pow(&self, e: u32) -> Result<Series, Error> {
        if e == 0 {
            return Series::one(self.ring, self.prec());
        }
        let mut base = self.clone();
        let mut acc: Option<Series> = None;
        let mut e = e;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base)?,
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul(&base)?;
        }
        Ok(acc.expect("e >= 1 always sets the accumulator"))
    }

    /// Truncated division. The divisor's leading coefficient must be a unit,
    /// and the quotient's valuation `val(a) - val(b)` must be nonnegative.
    pub fn div(&self, other: &Series) -> Result<Series, Error> {
        self.check_same_ring(other)?;
        match (&self.coeffs, &other.coeffs) {
            (CoeffVec::Exact(a), CoeffVec::Exact(b)) => {
                div_impl(&ExactOps, self.ring, self.view(a), other.view(b))
            }
            (CoeffVec::Mod(a), CoeffVec::Mod(b)) => {
                let m = self.ring.modulus().expect("modular ring");
                div_impl(&ModOps { m }, self.ring, self.view(a), other.view(b))
            }
            _ => unreachable!("ring equality was checked"),
        }
    }

    /// Ring homomorphism from the exact ring onto Z/M.
    pub fn reduce(&self, modulus: u64) -> Result<Series, Error> {
        let ring = Ring::Mod(modulus).validate()?;
        let CoeffVec::Exact(v) = &self.coeffs else {
            return Err(Error::ring_mismatch(
                self.ring,
                "exact (required by reduce)",
            ));
        };
        let r = ModOps { m: modulus };
        let mb = BigInt::from(modulus);
        let reduced: Vec<u64> = v
            .iter()
            .map(|c| u64::try_from(c.mod_floor(&mb)).expect("mod_floor result fits the modulus"))
            .collect();
        Ok(if self.stride == 0 {
            singleton_in(&r, ring, self.val, reduced[0], self.known_end)
        } else {
            normalize(&r, ring, self.val, self.stride, reduced, self.known_end)
        })
    }

    /// Multiplies every coefficient by a constant.
    pub fn scale(&self, c: &BigInt) -> Series {
        match &self.coeffs {
            CoeffVec::Exact(v) => scale_impl(&ExactOps, self.ring, self.view(v), c),
            CoeffVec::Mod(v) => {
                let m = self.ring.modulus().expect("modular ring");
                let r = ModOps { m };
                let cm = u64::try_from(c.mod_floor(&BigInt::from(m))).expect("reduced scalar fits");
                scale_impl(&r, self.ring, self.view(v), &cm)
            }
        }
    }

    pub fn negate(&self) -> Series {
        self.scale(&BigInt::from(-1))
    }

    /// Shifts all exponents by `delta` lattice units (relabeling only).
    pub fn shift(&self, delta: i64) -> Result<Series, Error> {
        if self.val + delta < 0 {
            return Err(Error::NegativeValuation(self.val + delta));
        }
        let mut out = self.clone();
        out.val += delta;
        out.known_end += delta;
        Ok(out)
    }

    /// Shrinks the known window to end at `new_end`.
    pub fn truncate(&self, new_end: i64) -> Result<Series, Error> {
        if new_end < 1 {
            return Err(Error::EmptyWindow);
        }
        if new_end >= self.known_end {
            return Ok(self.clone());
        }
        if self.val >= new_end {
            return Series::zero(self.ring, new_end);
        }
        if self.stride == 0 {
            let mut out = self.clone();
            out.known_end = new_end;
            return Ok(out);
        }
        let len = grid_len(self.val, self.stride, new_end);
        Ok(match &self.coeffs {
            CoeffVec::Exact(v) => normalize(
                &ExactOps,
                self.ring,
                self.val,
                self.stride,
                v[..len].to_vec(),
                new_end,
            ),
            CoeffVec::Mod(v) => {
                let m = self.ring.modulus().expect("modular ring");
                normalize(
                    &ModOps { m },
                    self.ring,
                    self.val,
                    self.stride,
                    v[..len].to_vec(),
                    new_end,
                )
            }
        })
    }

    /// First coefficient where the two series disagree, scanning lattice
    /// exponents below `end`. Errors if either window stops short of `end`
    /// or the rings differ.
    pub fn first_mismatch(&self, other: &Series, end: i64) -> Result<Option<Mismatch>, Error> {
        self.check_same_ring(other)?;
        for s in [self, other] {
            if s.known_end < end {
                return Err(Error::InsufficientPrecision {
                    needed: end,
                    have: s.known_end,
                });
            }
        }
        let sa = self.support();
        let sb = other.support();
        let (mut i, mut j) = (0usize, 0usize);
        let check = |e: i64| -> Option<Mismatch> {
            let l = self
                .stored_at(e)
                .map(|c| c.to_string())
                .unwrap_or_else(|| "0".into());
            let r = other
                .stored_at(e)
                .map(|c| c.to_string())
                .unwrap_or_else(|| "0".into());
            if l != r {
                Some(Mismatch {
                    exp: e,
                    left: l,
                    right: r,
                })
            } else {
                None
            }
        };
        while i < sa.len() || j < sb.len() {
            let e = match (sa.get(i), sb.get(j)) {
                (Some(&x), Some(&y)) => x.min(y),
                (Some(&x), None) => x,
                (None, Some(&y)) => y,
                (None, None) => unreachable!(),
            };
            if e >= end {
                break;
            }
            if let Some(m) = check(e) {
                return Ok(Some(m));
            }
            if sa.get(i) == Some(&e) {
                i += 1;
            }
            if sb.get(j) == Some(&e) {
                j += 1;
            }
        }
        Ok(None)
    }

    /// True when all coefficients below `end` agree.
    pub fn eq_through(&self, other: &Series, end: i64) -> Result<bool, Error> {
        Ok(self.first_mismatch(other, end)?.is_none())
    }

    /// Renders the first `max_terms` nonzero terms, for logs and the CLI.
    pub fn terms_string(&self, max_terms: usize) -> String {
        let mut parts = Vec::new();
        let mut count = 0usize;
        self.for_each_term(|e, c| {
            if count < max_terms {
                let exp = if e % LATTICE == 0 {
                    format!("{}", e / LATTICE)
                } else {
                    format!("{e}/24")
                };
                parts.push(format!("{c}*q^{exp}"));
            }
            count += 1;
        });
        if count == 0 {
            return format!("0 (known below q^{}/24)", self.known_end);
        }
        let mut s = parts.join(" + ");
        if count > max_terms {
            s.push_str(&format!(" + ... ({} more terms)", count - max_terms));
        }
        s
    }
}

fn from_sparse<R: RingOps>(r: &R, ring: Ring, terms: Vec<(i64, R::C)>, end: i64) -> Series {
    match terms.len() {
        0 => zero_in(r, ring, end),
        1 => {
            let (e, c) = terms.into_iter().next().expect("one term");
            singleton_in(r, ring, e, c, end)
        }
        _ => {
            let val = terms[0].0;
            let mut g = 0i64;
            for &(e, _) in &terms[1..] {
                g = g.gcd(&(e - val));
            }
            let stride = g;
            let len = grid_len(val, stride, end);
            let mut v = vec![r.zero(); len];
            for (e, c) in terms {
                v[((e - val) / stride) as usize] = c;
            }
            normalize(r, ring, val, stride, v, end)
        }
    }
}

// pub(crate) fast paths for the operator layer ------------------------------

pub(crate) enum TermBuf {
    Exact(Vec<(i64, BigInt)>),
    Mod(Vec<(i64, u64)>),
}

impl TermBuf {
    pub(crate) fn for_ring(ring: Ring) -> TermBuf {
        match ring {
            Ring::Exact => TermBuf::Exact(Vec::new()),
            Ring::Mod(_) => TermBuf::Mod(Vec::new()),
        }
    }

    /// Appends a term; exponents must arrive in ascending order.
    pub(crate) fn push(&mut self, exp: i64, c: CoeffRef<'_>) {
        match (self, c) {
            (TermBuf::Exact(v), CoeffRef::Exact(b)) => v.push((exp, b.clone())),
            (TermBuf::Mod(v), CoeffRef::Mod(x)) => v.push((exp, x)),
            _ => unreachable!("term buffer ring matches the source series"),
        }
    }
}

impl Series {
    /// Builds a series from an ascending nonzero term stream produced by
    /// [`TermBuf`]. Used by the operator layer to avoid BigInt round-trips.
    pub(crate) fn from_term_buf(ring: Ring, buf: TermBuf, known_end: i64) -> Result<Series, Error> {
        ring.validate()?;
        if known_end < 1 {
            return Err(Error::EmptyWindow);
        }
        match (ring, buf) {
            (Ring::Exact, TermBuf::Exact(t)) => Ok(from_sparse(&ExactOps, ring, t, known_end)),
            (Ring::Mod(m), TermBuf::Mod(t)) => Ok(from_sparse(&ModOps { m }, ring, t, known_end)),
            _ => unreachable!("term buffer ring matches the target ring"),
        }
    }
}
