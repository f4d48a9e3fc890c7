//! Exponent-contraction and dilation operators, Kronecker characters, and
//! the integral-weight Hecke action on q-expansions.

use std::fmt;

use num_bigint::BigInt;

use crate::error::Error;
use crate::series::{Series, TermBuf, LATTICE};

/// Kronecker symbol (d/n), extending the Jacobi symbol to all integers.
pub fn kronecker(d: i64, n: i64) -> i32 {
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    if d % 2 == 0 && n % 2 == 0 {
        return 0;
    }
    let mut a = d;
    let mut n = n;
    let mut result = 1i32;
    // (d/2) supplement for each factor of 2 in n
    let mut twos = 0u32;
    while n % 2 == 0 {
        n /= 2;
        twos += 1;
    }
    if twos % 2 == 1 {
        match a.rem_euclid(8) {
            1 | 7 => {}
            3 | 5 => result = -result,
            _ => return 0,
        }
    }
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    // Jacobi phase: n odd and positive from here on
    a = a.rem_euclid(n);
    while a != 0 {
        let mut v = 0u32;
        while a % 2 == 0 {
            a /= 2;
            v += 1;
        }
        if v % 2 == 1 && matches!(n % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        let t = n % a;
        n = a;
        a = t;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Deterministic Miller-Rabin, valid for the full u64 range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((u128::from(a) * u128::from(b)) % u128::from(n)) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        acc
    };
    // this witness set decides primality for all n < 2^64
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Kronecker-symbol character (d/.) attached to a level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Character {
    d: i64,
    modulus: u64,
}

impl Character {
    pub fn new(d: i64, modulus: u64) -> Character {
        Character { d, modulus }
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn eval(&self, n: i64) -> i32 {
        kronecker(self.d, n)
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}/.)", self.d)
    }
}

/// Weight stored as twice its value, so half-integral weights stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weight {
    twice: i64,
}

impl Weight {
    pub fn integer(w: i64) -> Weight {
        Weight { twice: 2 * w }
    }

    pub fn from_twice(twice: i64) -> Weight {
        Weight { twice }
    }

    pub fn twice(&self) -> i64 {
        self.twice
    }

    pub fn as_integer(&self) -> Option<i64> {
        if self.twice % 2 == 0 {
            Some(self.twice / 2)
        } else {
            None
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Weight, level, and character metadata carried by a constructed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModularFormMeta {
    pub weight: Weight,
    pub level: u64,
    pub character: Character,
}

/// Keeps the coefficients at exponents divisible by d and contracts
/// q^{dn} to q^n. The input must be supported on integer q-exponents.
pub fn apply_u(f: &Series, d: u32) -> Result<Series, Error> {
    if d == 0 {
        return Err(Error::InvalidParameter("U(0) is undefined".into()));
    }
    let d = i64::from(d);
    let mut bad_exp = None;
    let mut buf = TermBuf::for_ring(f.ring());
    f.for_each_term(|e, c| {
        if e % LATTICE != 0 {
            bad_exp.get_or_insert(e);
        } else if e % (LATTICE * d) == 0 {
            buf.push(e / d, c);
        }
    });
    if let Some(exp) = bad_exp {
        return Err(Error::NonIntegralSupport { exp });
    }
    let out_end = (f.known_end() - 1) / d + 1;
    Series::from_term_buf(f.ring(), buf, out_end)
}

/// Dilates exponents by d: q^n becomes q^{dn} (on the whole lattice).
pub fn apply_v(f: &Series, d: u32) -> Result<Series, Error> {
    if d == 0 {
        return Err(Error::InvalidParameter("V(0) is undefined".into()));
    }
    let d = i64::from(d);
    let mut buf = TermBuf::for_ring(f.ring());
    f.for_each_term(|e, c| buf.push(e * d, c));
    let out_end = d * (f.known_end() - 1) + 1;
    Series::from_term_buf(f.ring(), buf, out_end)
}

/// Hecke action at the prime p on an integral-weight form's q-expansion:
/// the coefficient of q^n becomes a(pn) + chi(p) p^{w-1} a(n/p), with the
/// second term dropped when p does not divide n.
///
/// The result is delivered exactly through q^out_depth; the input must be
/// known through q^{p*out_depth} or the call fails rather than silently
/// truncating.
pub fn hecke_t(
    f: &Series,
    p: u64,
    meta: &ModularFormMeta,
    out_depth: u32,
) -> Result<Series, Error> {
    let w = meta.weight.as_integer().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "Hecke action needs an integer weight, got {}",
            meta.weight
        ))
    })?;
    if w < 1 {
        return Err(Error::InvalidParameter(format!(
            "Hecke action needs a positive weight, got {w}"
        )));
    }
    let out_end = LATTICE * i64::from(out_depth) + 1;
    let needed = (out_end - 1) * p as i64 + 1;
    if f.known_end() < needed {
        return Err(Error::InsufficientPrecision {
            needed,
            have: f.known_end(),
        });
    }
    let u_part = apply_u(f, p as u32)?;
    let chi = meta.character.eval(p as i64);
    if chi == 0 {
        return u_part.truncate(out_end);
    }
    let mut scale = BigInt::from(p).pow(w as u32 - 1);
    if chi < 0 {
        scale = -scale;
    }
    let v_part = apply_v(f, p as u32)?.scale(&scale);
    u_part.truncate(out_end)?.add(&v_part.truncate(out_end)?)
}
