//! Construction of the engine's named forms and the verification routines
//! that compare them coefficient by coefficient.
//!
//! `construct_F` builds the partition-coefficient series supported on a
//! single residue class mod 24; `construct_f_km` and `construct_f_kmj` build
//! the eta-quotient forms congruent to it; the `verify_*` functions check the
//! exact product identity and the congruences and report structured results
//! with an optional proof-grade tier at the Sturm depth.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use crate::error::Error;
use crate::eta::{bk_series_in, expand_quotient, EtaQuotient};
use crate::operators::{apply_u, is_prime, Character, ModularFormMeta, Weight};
use crate::series::{Mismatch, Ring, Series, LATTICE};

/// Which statement a report or certificate is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StatementId {
    Identity31,
    PropJ0Cong,
    PropFkmjCong,
    Lemma32,
    UvCommute,
    HeckeAnnihilation,
    Progression,
    SerreProbe,
}

impl StatementId {
    pub fn as_str(&self) -> &'static str {
        match self {
            StatementId::Identity31 => "identity31",
            StatementId::PropJ0Cong => "prop-j0",
            StatementId::PropFkmjCong => "prop-fkmj",
            StatementId::Lemma32 => "lemma32",
            StatementId::UvCommute => "uv-commute",
            StatementId::HeckeAnnihilation => "hecke-annihilation",
            StatementId::Progression => "progression",
            StatementId::SerreProbe => "serre-probe",
        }
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatementId {
    type Err = Error;

    fn from_str(s: &str) -> Result<StatementId, Error> {
        Ok(match s {
            "identity31" => StatementId::Identity31,
            "prop-j0" => StatementId::PropJ0Cong,
            "prop-fkmj" => StatementId::PropFkmjCong,
            "lemma32" => StatementId::Lemma32,
            "uv-commute" => StatementId::UvCommute,
            "hecke-annihilation" => StatementId::HeckeAnnihilation,
            "progression" => StatementId::Progression,
            "serre-probe" => StatementId::SerreProbe,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown statement id `{other}`"
                )))
            }
        })
    }
}

/// First coefficient that broke a verification, in lattice units.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FailureSite {
    pub exp: i64,
    pub expected: String,
    pub got: String,
}

/// Structured outcome of one verification run.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub statement_id: StatementId,
    pub params: BTreeMap<String, i64>,
    /// Verified q-exponent depth (coefficients of q^0 .. q^depth).
    pub depth_checked: i64,
    pub sturm_bound: Option<i64>,
    pub proof_grade: bool,
    pub passed: bool,
    pub first_failure: Option<FailureSite>,
}

impl VerificationReport {
    fn new(
        statement_id: StatementId,
        params: BTreeMap<String, i64>,
        depth_checked: i64,
        sturm_bound: Option<i64>,
        mismatch: Option<Mismatch>,
    ) -> VerificationReport {
        let passed = mismatch.is_none();
        VerificationReport {
            statement_id,
            params,
            depth_checked,
            sturm_bound,
            proof_grade: passed && sturm_bound.is_some_and(|s| depth_checked >= s),
            passed,
            first_failure: mismatch.map(|m| FailureSite {
                exp: m.exp,
                expected: m.right,
                got: m.left,
            }),
        }
    }
}

pub(crate) fn params_map(pairs: &[(&str, i64)]) -> BTreeMap<String, i64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn validate_km(k: u32, m: u32) -> Result<(), Error> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "regularity parameter must be at least 2, got {k}"
        )));
    }
    if m < 5 {
        return Err(Error::InvalidParameter(format!(
            "prime parameter must be at least 5, got {m}"
        )));
    }
    if !is_prime(u64::from(m)) {
        return Err(Error::NotPrime(u64::from(m)));
    }
    Ok(())
}

fn inverse_mod_24(m: u32) -> u32 {
    (1..24)
        .find(|x| (m * x) % 24 == 1)
        .expect("m is coprime to 24")
}

/// The series whose q^n coefficient, on the class m n = k-1 (mod 24), is the
/// partition count b_k((mn-k+1)/24); zero everywhere else.
pub fn construct_f_in(k: u32, m: u32, q_depth: u32, ring: Ring) -> Result<Series, Error> {
    validate_km(k, m)?;
    let n0 = (u64::from(inverse_mod_24(m)) * u64::from(k - 1) % 24) as u32;
    let end = LATTICE * i64::from(q_depth) + 1;
    let mut max_arg = 0u32;
    let mut slots = Vec::new();
    let mut n = n0;
    while n <= q_depth {
        let arg_num = i64::from(m) * i64::from(n) - i64::from(k) + 1;
        debug_assert_eq!(arg_num.rem_euclid(24), 0);
        if arg_num >= 0 {
            let arg = (arg_num / 24) as u32;
            max_arg = max_arg.max(arg);
            slots.push((n, arg));
        }
        n += 24;
    }
    let bk = bk_series_in(k, max_arg, ring)?;
    let terms = slots
        .into_iter()
        .map(|(n, arg)| Ok((LATTICE * i64::from(n), bk.q_coefficient(i64::from(arg))?)))
        .collect::<Result<Vec<(i64, BigInt)>, Error>>()?;
    Series::from_terms(ring, terms, end)
}

/// Exact-ring [`construct_f_in`].
pub fn construct_f(k: u32, m: u32, q_depth: u32) -> Result<Series, Error> {
    construct_f_in(k, m, q_depth, Ring::Exact)
}

/// Weight/level/character data for the level-j form of the (k, m) family:
/// j = 0 names the base form, j >= 1 the tower above it.
pub fn form_meta(k: u32, m: u32, j: u32) -> Result<ModularFormMeta, Error> {
    validate_km(k, m)?;
    let m64 = i64::from(m);
    let twice_weight = if j == 0 {
        m64 * m64 - m64
    } else {
        let mj = m64
            .checked_pow(j)
            .ok_or_else(|| Error::InvalidParameter(format!("m^{j} overflows for m={m}")))?;
        mj.checked_mul(m64 - 1)
            .ok_or_else(|| Error::InvalidParameter(format!("weight overflows for m={m}, j={j}")))?
    };
    let level = 576 * u64::from(k) * u64::from(m);
    Ok(ModularFormMeta {
        weight: Weight::from_twice(twice_weight),
        level,
        character: Character::new(i64::from(k) * i64::from(m), level),
    })
}

/// Modulus m^{j+1} attached to level j of the (k, m) family.
pub fn tower_modulus(m: u32, j: u32) -> Result<u64, Error> {
    u64::from(m)
        .checked_pow(j + 1)
        .ok_or_else(|| Error::InvalidParameter(format!("m^{} overflows for m={m}", j + 1)))
}

/// The form at level j of the (k, m) tower, delivered through q^depth:
/// j = 0 divides the U(m) image of eta(24kz) eta^{m^2-1}(24z) by eta^m(24z);
/// j >= 1 starts from the U(m) image of eta(24kz) eta^m(24mz)/eta(24z) and
/// multiplies by eta^{m^{j+1}-m}(24z)/eta^{m^j}(24mz).
pub fn construct_form_in(
    k: u32,
    m: u32,
    j: u32,
    q_depth: u32,
    ring: Ring,
) -> Result<Series, Error> {
    validate_km(k, m)?;
    ring.validate()?;
    // padding keeps the delivered window intact after the final eta divisions
    let padded = q_depth + m;
    let out_end = LATTICE * i64::from(q_depth) + 1;
    let u_image = |quotient: EtaQuotient| -> Result<Series, Error> {
        let pre = expand_quotient(&quotient, m * padded, ring)?;
        apply_u(&pre, m)
    };
    let m_sq = m
        .checked_mul(m)
        .and_then(|v| i32::try_from(v).ok())
        .ok_or_else(|| Error::InvalidParameter(format!("m = {m} is too large")))?;
    let result = if j == 0 {
        let u = u_image(EtaQuotient::new(vec![(24 * k, 1), (24, m_sq - 1)])?)?;
        let rel = u.known_end();
        let eta1 = eta_factor(24, ring, rel)?;
        let mut acc = u;
        for _ in 0..m {
            acc = acc.div(&eta1)?;
        }
        acc
    } else {
        let u = u_image(EtaQuotient::new(vec![
            (24 * k, 1),
            (24 * m, m as i32),
            (24, -1),
        ])?)?;
        let rel = u.known_end();
        let eta1 = eta_factor(24, ring, rel)?;
        let eta_m = eta_factor(24 * m, ring, rel)?;
        let up_count = tower_modulus(m, j)? - u64::from(m);
        let down_count = tower_modulus(m, j - 1)?;
        let mut acc = u;
        for _ in 0..up_count {
            acc = acc.mul(&eta1)?;
        }
        for _ in 0..down_count {
            acc = acc.div(&eta_m)?;
        }
        acc
    };
    result.truncate(out_end)
}

fn eta_factor(a: u32, ring: Ring, rel: i64) -> Result<Series, Error> {
    // window [a, a + rel): relative precision matches the series it meets
    crate::eta::eta_series(a, ring, i64::from(a) + rel)
}

/// Base form of the family with its space metadata.
pub fn construct_f_km(k: u32, m: u32, q_depth: u32) -> Result<(Series, ModularFormMeta), Error> {
    Ok((
        construct_form_in(k, m, 0, q_depth, Ring::Exact)?,
        form_meta(k, m, 0)?,
    ))
}

/// Tower form at level j >= 1 with its space metadata.
pub fn construct_f_kmj(
    k: u32,
    m: u32,
    j: u32,
    q_depth: u32,
) -> Result<(Series, ModularFormMeta), Error> {
    if j < 1 {
        return Err(Error::InvalidParameter(
            "tower level j must be at least 1 (the base form is j = 0)".into(),
        ));
    }
    Ok((
        construct_form_in(k, m, j, q_depth, Ring::Exact)?,
        form_meta(k, m, j)?,
    ))
}

/// Exact product identity: the U(m) image of eta(24kz) eta^m(24mz)/eta(24z)
/// equals the partition-coefficient series times eta^m(24z), coefficient for
/// coefficient in the exact ring.
pub fn verify_identity31(k: u32, m: u32, q_depth: u32) -> Result<VerificationReport, Error> {
    validate_km(k, m)?;
    let end = LATTICE * i64::from(q_depth) + 1;
    let pre = expand_quotient(
        &EtaQuotient::new(vec![(24 * k, 1), (24 * m, m as i32), (24, -1)])?,
        m * (q_depth + m),
        Ring::Exact,
    )?;
    let lhs = apply_u(&pre, m)?.truncate(end)?;
    let f = construct_f(k, m, q_depth)?;
    let eta_m = expand_quotient(
        &EtaQuotient::new(vec![(24, m as i32)])?,
        q_depth,
        Ring::Exact,
    )?;
    let rhs = f.mul(&eta_m)?.truncate(end)?;
    let mismatch = lhs.first_mismatch(&rhs, end)?;
    Ok(VerificationReport::new(
        StatementId::Identity31,
        params_map(&[("k", i64::from(k)), ("m", i64::from(m))]),
        i64::from(q_depth),
        None,
        mismatch,
    ))
}

/// Congruence of an eta-power quotient with 1: eta^{n2^i}(n1 z) over
/// eta^{n2^{i-1}}(n1 n2 z), reduced mod n2^i, through q^depth.
pub fn verify_lemma32(n1: u32, n2: u32, i: u32, q_depth: u32) -> Result<VerificationReport, Error> {
    if n1 < 1 || n2 < 2 || i < 1 {
        return Err(Error::InvalidParameter(format!(
            "lemma parameters need n1 >= 1, n2 >= 2, i >= 1; got ({n1}, {n2}, {i})"
        )));
    }
    let hi = n2
        .checked_pow(i)
        .and_then(|v| i32::try_from(v).ok())
        .ok_or_else(|| Error::InvalidParameter(format!("n2^{i} overflows for n2={n2}")))?;
    let lo = hi / i32::try_from(n2).unwrap();
    let modulus = hi as u64;
    // the two eta arguments coincide only if n2 = 1, which is excluded
    let quotient = EtaQuotient::new(vec![(n1, hi), (n1 * n2, -lo)])?;
    let s = expand_quotient(&quotient, q_depth, Ring::Mod(modulus))?;
    let one = Series::one(Ring::Mod(modulus), s.known_end())?;
    let mismatch = s.first_mismatch(&one, s.known_end())?;
    Ok(VerificationReport::new(
        StatementId::Lemma32,
        params_map(&[
            ("n1", i64::from(n1)),
            ("n2", i64::from(n2)),
            ("i", i64::from(i)),
        ]),
        i64::from(q_depth),
        None,
        mismatch,
    ))
}

/// Sturm coefficient bound floor(weight * level / 12 * prod_{p | level}
/// (1 + 1/p)), computed in exact integer arithmetic.
pub fn sturm_bound(meta: &ModularFormMeta) -> Result<i64, Error> {
    let w = meta.weight.as_integer().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "Sturm bound needs an integer weight, got {}",
            meta.weight
        ))
    })?;
    if w < 1 {
        return Err(Error::InvalidParameter(format!(
            "Sturm bound needs a positive weight, got {w}"
        )));
    }
    let mut level = meta.level;
    if level < 1 {
        return Err(Error::InvalidParameter("level must be positive".into()));
    }
    let mut num = w as u128 * meta.level as u128;
    let mut den = 12u128;
    let mut p = 2u64;
    while p as u128 * p as u128 <= level as u128 {
        if level.is_multiple_of(p) {
            num *= u128::from(p) + 1;
            den *= u128::from(p);
            while level.is_multiple_of(p) {
                level /= p;
            }
        }
        p += 1;
    }
    if level > 1 {
        num *= u128::from(level) + 1;
        den *= u128::from(level);
    }
    Ok((num / den) as i64)
}

/// Coefficientwise congruence a = b (mod M) through q^depth. Exact-ring
/// inputs are reduced; modular inputs must already live mod M.
pub fn verify_congruence(
    statement_id: StatementId,
    params: BTreeMap<String, i64>,
    a: &Series,
    b: &Series,
    modulus: u64,
    q_depth: u32,
    sturm: Option<i64>,
) -> Result<VerificationReport, Error> {
    let to_mod = |s: &Series| -> Result<Series, Error> {
        match s.ring() {
            Ring::Exact => s.reduce(modulus),
            Ring::Mod(m) if m == modulus => Ok(s.clone()),
            Ring::Mod(_) => Err(Error::ring_mismatch(s.ring(), Ring::Mod(modulus))),
        }
    };
    let am = to_mod(a)?;
    let bm = to_mod(b)?;
    let end = LATTICE * i64::from(q_depth) + 1;
    let mismatch = am.first_mismatch(&bm, end)?;
    Ok(VerificationReport::new(
        statement_id,
        params,
        i64::from(q_depth),
        sturm,
        mismatch,
    ))
}

/// Base-form congruence: the j = 0 form matches the partition-coefficient
/// series mod m through q^depth, with the Sturm tier attached.
pub fn verify_prop_j0(k: u32, m: u32, q_depth: u32) -> Result<VerificationReport, Error> {
    let meta = form_meta(k, m, 0)?;
    let f = construct_form_in(k, m, 0, q_depth, Ring::Exact)?;
    let big_f = construct_f(k, m, q_depth)?;
    verify_congruence(
        StatementId::PropJ0Cong,
        params_map(&[("k", i64::from(k)), ("m", i64::from(m))]),
        &f,
        &big_f,
        u64::from(m),
        q_depth,
        Some(sturm_bound(&meta)?),
    )
}

/// Tower-form congruence: the level-j form matches the partition-coefficient
/// series mod m^{j+1} through q^depth, with the Sturm tier attached.
pub fn verify_prop_fkmj(k: u32, m: u32, j: u32, q_depth: u32) -> Result<VerificationReport, Error> {
    if j < 1 {
        return Err(Error::InvalidParameter(
            "tower level j must be at least 1 (use the j = 0 check for the base form)".into(),
        ));
    }
    let meta = form_meta(k, m, j)?;
    let modulus = tower_modulus(m, j)?;
    let f = construct_form_in(k, m, j, q_depth, Ring::Exact)?;
    let big_f = construct_f(k, m, q_depth)?;
    verify_congruence(
        StatementId::PropFkmjCong,
        params_map(&[
            ("k", i64::from(k)),
            ("m", i64::from(m)),
            ("j", i64::from(j)),
        ]),
        &f,
        &big_f,
        modulus,
        q_depth,
        Some(sturm_bound(&meta)?),
    )
}
