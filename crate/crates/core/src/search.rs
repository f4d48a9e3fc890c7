//! Discovery side of the engine: scanning prime ranges for Hecke-annihilating
//! primes, assembling them into explicit arithmetic progressions
//! b_k(An + B) = 0 (mod M), verifying every emitted progression against the
//! independent partition oracle, and counting residues of b_k over a range.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::{gcd, Integer};
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::Error;
use crate::eta::{bk_oracle_table, bk_series_in};
use crate::operators::{hecke_t, is_prime};
use crate::series::{Ring, Series, LATTICE};
use crate::theorems::{
    construct_form_in, form_meta, params_map, sturm_bound, tower_modulus, FailureSite, StatementId,
    VerificationReport,
};

/// A prime whose Hecke operator kills the (k, m, j) form mod m^{j+1} through
/// the checked depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnihilationHit {
    pub k: u32,
    pub m: u32,
    pub j: u32,
    pub l: u64,
    /// Whether l = -1 (mod 576 k m^{j+1}), the class the density argument
    /// draws from; annihilation outside the class is still a hit.
    pub residue_ok: bool,
    /// q-exponent depth through which the Hecke image vanished.
    pub depth_checked: u32,
    pub proof_grade: bool,
}

/// How a progression was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Assembled from annihilating primes: L is their product, p_m the
    /// radical of the modulus.
    Assembled { l: u64, p_m: u64, primes: Vec<u64> },
    /// Checked directly from supplied (A, B) with no construction trace.
    DirectScan,
}

/// A verified congruence b_k(An + B) = 0 (mod modulus) for all n up to
/// verified_to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgressionCongruence {
    pub k: u32,
    pub modulus: u64,
    pub a: u64,
    pub b: u64,
    pub provenance: Provenance,
    pub verified_to: u32,
    /// Distinct indices cross-checked against the exact oracle.
    pub oracle_samples: usize,
}

/// Residue statistics of b_k(n) mod a fixed modulus over 0 <= n < n_count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusResult {
    pub k: u32,
    pub modulus: u64,
    pub n_count: u64,
    pub counts: BTreeMap<u64, u64>,
    /// For each class of n mod modulus compatible with 24n = 1-k mod the
    /// radical prime: the least n below n_count whose value is a unit mod
    /// that prime, with the value.
    pub witnesses: BTreeMap<u64, Option<(u64, u64)>>,
}

/// An assembled progression candidate, not yet verified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgressionCandidate {
    pub k: u32,
    pub modulus: u64,
    pub a: u64,
    pub b: u64,
    pub l: u64,
    pub p_m: u64,
    pub primes: Vec<u64>,
}

/// Outcome of the full discovery pipeline for one (k, M) target.
#[derive(Clone, Debug, Default)]
pub struct ProgressionSearch {
    pub hits: Vec<AnnihilationHit>,
    pub progressions: Vec<ProgressionCongruence>,
    /// Candidates dropped without verification, with the reason.
    pub skipped: Vec<(u64, u64, String)>,
}

/// Exact-oracle cross-checks per verified progression.
const ORACLE_SAMPLES: u64 = 20;
/// Largest partition index the exact big-integer oracle is asked for. The
/// oracle recomputes every table entry up to its argument, so cost grows
/// quadratically; past this point the series scan has to stand alone.
const ORACLE_ARG_CEILING: u64 = 6_000;
/// Hard cap on the series depth any single verification may demand.
const DEPTH_CAP: u64 = 10_000_000;

/// Scans primes in [lo, hi] for l with f | T(l) = 0 (mod m^{j+1}) through
/// q^depth. Primes dividing the level are skipped; `require_residue`
/// restricts the scan to l = -1 (mod 576km). Hits come back sorted by l.
pub fn annihilation_search(
    k: u32,
    m: u32,
    j: u32,
    prime_lo: u64,
    prime_hi: u64,
    depth: u32,
    require_residue: bool,
) -> Result<Vec<AnnihilationHit>, Error> {
    let modulus = tower_modulus(m, j)?;
    let meta = form_meta(k, m, j)?;
    let sturm = sturm_bound(&meta)?;
    let level = meta.level;
    let class = 576 * u64::from(k) * u64::from(m);
    let primes: Vec<u64> = (prime_lo.max(2)..=prime_hi)
        .filter(|&l| is_prime(l))
        .filter(|&l| level % l != 0)
        .filter(|&l| !require_residue || l % class == class - 1)
        .collect();
    let Some(&l_max) = primes.last() else {
        return Ok(Vec::new());
    };
    let need = l_max.saturating_mul(u64::from(depth));
    if need > DEPTH_CAP {
        return Err(Error::DepthInfeasible {
            requested: need,
            ceiling: DEPTH_CAP,
        });
    }
    let f = construct_form_in(k, m, j, need as u32, Ring::Mod(modulus))?;
    let residue_class = 576 * u64::from(k) * modulus;
    let checked: Vec<Option<AnnihilationHit>> = primes
        .par_iter()
        .map(|&l| -> Result<Option<AnnihilationHit>, Error> {
            let image = hecke_t(&f, l, &meta, depth)?;
            if !image.is_zero() {
                return Ok(None);
            }
            Ok(Some(AnnihilationHit {
                k,
                m,
                j,
                l,
                residue_ok: l % residue_class == residue_class - 1,
                depth_checked: depth,
                proof_grade: i64::from(depth) >= sturm,
            }))
        })
        .collect::<Result<_, Error>>()?;
    Ok(checked.into_iter().flatten().collect())
}

/// Reproduces a hit's arithmetic consequence from the partition series alone:
/// b_k((m l n - k + 1)/24) = 0 (mod m^{j+1}) for every admissible n <= n_max
/// coprime to l.
pub fn verify_hit_key_step(hit: &AnnihilationHit, n_max: u32) -> Result<VerificationReport, Error> {
    let modulus = tower_modulus(hit.m, hit.j)?;
    let ml = u64::from(hit.m) * hit.l;
    let params = params_map(&[
        ("k", i64::from(hit.k)),
        ("m", i64::from(hit.m)),
        ("j", i64::from(hit.j)),
        ("l", hit.l as i64),
    ]);
    // admissible n form a single class mod 24 since ml is a unit mod 24
    let n0 = (0u64..24)
        .find(|&n| (ml % 24) * n % 24 == u64::from(hit.k - 1) % 24)
        .ok_or_else(|| Error::InvalidParameter(format!("m l = {ml} is not a unit mod 24")))?;
    let max_arg = (ml * u64::from(n_max) + 1) / 24;
    if max_arg > DEPTH_CAP {
        return Err(Error::DepthInfeasible {
            requested: max_arg,
            ceiling: DEPTH_CAP,
        });
    }
    let series = bk_series_in(hit.k, max_arg as u32, Ring::Mod(modulus))?;
    let mut failure = None;
    let mut n = n0;
    while n <= u64::from(n_max) {
        if n % hit.l != 0 {
            let arg = (ml * n) as i64 - i64::from(hit.k) + 1;
            if arg >= 0 {
                let value = series.q_coefficient(arg / 24)?;
                if !value.is_zero() {
                    failure = Some(FailureSite {
                        exp: LATTICE * n as i64,
                        expected: "0".to_string(),
                        got: value.to_string(),
                    });
                    break;
                }
            }
        }
        n += 24;
    }
    let passed = failure.is_none();
    Ok(VerificationReport {
        statement_id: StatementId::HeckeAnnihilation,
        params,
        depth_checked: i64::from(n_max),
        sturm_bound: None,
        proof_grade: false,
        passed,
        first_failure: failure,
    })
}

pub(crate) fn factorize(n: u64) -> Vec<(u64, u32)> {
    let mut n = n;
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Assembles squarefree integers L from per-factor annihilating primes and
/// derives the progression (A, B) = (P L^2, P L + (k-1)(P^2 L^2 - 1)/24 mod A)
/// for the target modulus. One prime is fixed per factor except the last,
/// whose hits all contribute a candidate.
pub fn assemble_progression_candidates(
    k: u32,
    target: u64,
    hits: &[AnnihilationHit],
) -> Result<Vec<ProgressionCandidate>, Error> {
    if target < 5 || gcd(target, 6) != 1 {
        return Err(Error::InvalidParameter(format!(
            "target modulus must exceed 1 and be coprime to 6, got {target}"
        )));
    }
    let factors = factorize(target);
    let p_m: u64 = factors.iter().map(|&(p, _)| p).product();
    // bucket usable hits per factor, smallest primes first
    let mut buckets: Vec<Vec<u64>> = Vec::with_capacity(factors.len());
    for &(p, e) in &factors {
        let mut ls: Vec<u64> = hits
            .iter()
            .filter(|h| h.k == k && u64::from(h.m) == p && h.j == e - 1)
            .map(|h| h.l)
            .filter(|&l| gcd(l, p_m) == 1)
            .collect();
        ls.sort_unstable();
        ls.dedup();
        if ls.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "no annihilation hit covers the factor {p}^{e} of {target}"
            )));
        }
        buckets.push(ls);
    }
    let (last, fixed_buckets) = buckets.split_last().expect("target > 1 has factors");
    let mut fixed: Vec<u64> = Vec::with_capacity(fixed_buckets.len());
    for bucket in fixed_buckets {
        let l = bucket
            .iter()
            .copied()
            .find(|l| !fixed.contains(l))
            .ok_or(Error::DuplicatePrimes)?;
        fixed.push(l);
    }
    let residue_class = 576 * u64::from(k) * target;
    let mut out = Vec::new();
    for &lp in last {
        if fixed.contains(&lp) {
            continue;
        }
        let mut primes = fixed.clone();
        primes.push(lp);
        let l_big: u128 = primes.iter().map(|&l| u128::from(l)).product();
        let a_big = u128::from(p_m) * l_big * l_big;
        let pl = u128::from(p_m) * l_big;
        let sq = pl * pl - 1;
        if !sq.is_multiple_of(24) {
            return Err(Error::NonIntegralOffset(format!(
                "(P L)^2 - 1 = {sq} is not divisible by 24"
            )));
        }
        let b_big = pl + u128::from(k - 1) * (sq / 24);
        let (Ok(a), Ok(l_flat)) = (u64::try_from(a_big), u64::try_from(l_big)) else {
            return Err(Error::DepthInfeasible {
                requested: u64::MAX,
                ceiling: DEPTH_CAP,
            });
        };
        // shifting B into [0, A) reindexes n by a positive integer, which
        // stays admissible and coprime to L
        let b = (b_big % a_big) as u64;
        if primes
            .iter()
            .all(|&l| l % residue_class == residue_class - 1)
        {
            let r = l_flat % residue_class;
            debug_assert!(r == 1 || r == residue_class - 1);
        }
        out.push(ProgressionCandidate {
            k,
            modulus: target,
            a,
            b,
            l: l_flat,
            p_m,
            primes,
        });
    }
    Ok(out)
}

/// Checks b_k(An + B) = 0 (mod modulus) for 0 <= n <= n_max from the
/// generating-function series, cross-sampling the exact dynamic-programming
/// oracle at spread points. A counterexample is an error naming the index.
pub fn direct_verify(
    k: u32,
    a: u64,
    b: u64,
    modulus: u64,
    n_max: u32,
) -> Result<ProgressionCongruence, Error> {
    if a < 1 {
        return Err(Error::InvalidParameter(
            "progression step must be positive".into(),
        ));
    }
    let done = |verified_to, oracle_samples| ProgressionCongruence {
        k,
        modulus,
        a,
        b,
        provenance: Provenance::DirectScan,
        verified_to,
        oracle_samples,
    };
    if modulus == 1 {
        return Ok(done(n_max, 0));
    }
    let depth = a
        .checked_mul(u64::from(n_max))
        .and_then(|d| d.checked_add(b))
        .unwrap_or(u64::MAX);
    if depth > DEPTH_CAP {
        return Err(Error::DepthInfeasible {
            requested: depth,
            ceiling: DEPTH_CAP,
        });
    }
    let series = bk_series_in(k, depth as u32, Ring::Mod(modulus))?;
    for n in 0..=u64::from(n_max) {
        let value = series.q_coefficient((a * n + b) as i64)?;
        if !value.is_zero() {
            return Err(Error::CongruenceCounterexample {
                n,
                residue: (&value).try_into().expect("reduced residue fits u64"),
            });
        }
    }
    // spread the exact-oracle samples as far as the argument ceiling allows
    if b > ORACLE_ARG_CEILING {
        return Err(Error::DepthInfeasible {
            requested: b,
            ceiling: ORACLE_ARG_CEILING,
        });
    }
    let n_cap = u64::from(n_max).min((ORACLE_ARG_CEILING - b) / a);
    let mut sample_ns: Vec<u64> = (0..ORACLE_SAMPLES)
        .map(|t| n_cap * t / (ORACLE_SAMPLES - 1).max(1))
        .collect();
    sample_ns.dedup();
    let max_arg = a * sample_ns.last().copied().unwrap_or(0) + b;
    let oracle = bk_oracle_table(k, max_arg as u32);
    let md = BigInt::from(modulus);
    for &n in &sample_ns {
        let value = oracle[(a * n + b) as usize].mod_floor(&md);
        if !value.is_zero() {
            return Err(Error::CongruenceCounterexample {
                n,
                residue: (&value).try_into().expect("reduced residue fits u64"),
            });
        }
    }
    Ok(done(n_max, sample_ns.len()))
}

/// Full pipeline: factor the target modulus, search each factor for
/// annihilating primes, assemble candidates, and emit only the progressions
/// that survive direct verification.
pub fn search_progressions(
    k: u32,
    target: u64,
    prime_lo: u64,
    prime_hi: u64,
    scan_depth: u32,
    n_max: u32,
    max_emitted: usize,
) -> Result<ProgressionSearch, Error> {
    if target < 5 || gcd(target, 6) != 1 {
        return Err(Error::InvalidParameter(format!(
            "target modulus must exceed 1 and be coprime to 6, got {target}"
        )));
    }
    let mut result = ProgressionSearch::default();
    for (p, e) in factorize(target) {
        let m = u32::try_from(p)
            .map_err(|_| Error::InvalidParameter(format!("prime factor {p} too large")))?;
        let mut hits = annihilation_search(k, m, e - 1, prime_lo, prime_hi, scan_depth, false)?;
        result.hits.append(&mut hits);
    }
    let covered = factorize(target).iter().all(|&(p, e)| {
        result
            .hits
            .iter()
            .any(|h| u64::from(h.m) == p && h.j == e - 1)
    });
    if !covered {
        return Ok(result);
    }
    let candidates = assemble_progression_candidates(k, target, &result.hits)?;
    for cand in candidates.into_iter() {
        if result.progressions.len() >= max_emitted {
            break;
        }
        let scan_cost = u128::from(cand.a) * u128::from(n_max) + u128::from(cand.b);
        if scan_cost > u128::from(DEPTH_CAP) {
            result.skipped.push((
                cand.a,
                cand.b,
                "verification depth exceeds the engine cap".into(),
            ));
            continue;
        }
        match direct_verify(k, cand.a, cand.b, target, n_max) {
            Ok(mut pc) => {
                pc.provenance = Provenance::Assembled {
                    l: cand.l,
                    p_m: cand.p_m,
                    primes: cand.primes,
                };
                result.progressions.push(pc);
            }
            Err(Error::CongruenceCounterexample { n, residue }) => {
                result.skipped.push((
                    cand.a,
                    cand.b,
                    format!("counterexample at n = {n} (residue {residue})"),
                ));
            }
            Err(Error::DepthInfeasible { requested, ceiling }) => {
                result.skipped.push((
                    cand.a,
                    cand.b,
                    format!("verification depth {requested} exceeds the engine cap {ceiling}"),
                ));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(result)
}

/// Counts residues of b_k(n) mod modulus for n < n_count and locates the
/// least unit-value witness in each compatible class of n.
pub fn census(k: u32, modulus: u64, n_count: u64) -> Result<CensusResult, Error> {
    if n_count < 1 {
        return Err(Error::InvalidParameter(
            "census range must be nonempty".into(),
        ));
    }
    if modulus == 1 {
        return Ok(CensusResult {
            k,
            modulus,
            n_count,
            counts: BTreeMap::from([(0, n_count)]),
            witnesses: BTreeMap::new(),
        });
    }
    if n_count > DEPTH_CAP {
        return Err(Error::DepthInfeasible {
            requested: n_count,
            ceiling: DEPTH_CAP,
        });
    }
    let series = bk_series_in(k, (n_count - 1) as u32, Ring::Mod(modulus))?;
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut nonzero = 0u64;
    series.for_each_term(|exp, c| {
        debug_assert_eq!(exp % LATTICE, 0);
        let r = match c {
            crate::series::CoeffRef::Mod(v) => v,
            crate::series::CoeffRef::Exact(_) => unreachable!("census runs in a modular ring"),
        };
        *counts.entry(r).or_insert(0) += 1;
        nonzero += 1;
    });
    *counts.entry(0).or_insert(0) += n_count - nonzero;
    let witnesses = census_witnesses(k, modulus, &series, n_count)?;
    Ok(CensusResult {
        k,
        modulus,
        n_count,
        counts,
        witnesses,
    })
}

fn census_witnesses(
    k: u32,
    modulus: u64,
    series: &Series,
    n_count: u64,
) -> Result<BTreeMap<u64, Option<(u64, u64)>>, Error> {
    let factors = factorize(modulus);
    let [(p, _)] = factors.as_slice() else {
        return Ok(BTreeMap::new());
    };
    let p = *p;
    if p < 5 {
        return Ok(BTreeMap::new());
    }
    // class of n with 24n = 1 - k mod p
    let inv24 = (1..p).find(|x| 24 * x % p == 1).expect("p coprime to 24");
    let c0 = inv24 * ((1 - i64::from(k)).rem_euclid(p as i64) as u64) % p;
    let mut witnesses: BTreeMap<u64, Option<(u64, u64)>> = (0..modulus)
        .filter(|r| r % p == c0)
        .map(|r| (r, None))
        .collect();
    let mut remaining = witnesses.len();
    for n in 0..n_count {
        if remaining == 0 {
            break;
        }
        let r = n % modulus;
        let Some(slot) = witnesses.get_mut(&r) else {
            continue;
        };
        if slot.is_some() {
            continue;
        }
        let value = series.q_coefficient(n as i64)?;
        let e: u64 = (&value).try_into().expect("reduced residue fits u64");
        if !e.is_multiple_of(p) {
            *slot = Some((n, e));
            remaining -= 1;
        }
    }
    Ok(witnesses)
}

/// Empirical probe of the multiplicativity pattern a(n l^r) = (r+1) a(n)
/// (mod modulus) for n <= depth coprime to l. Evidence, not proof: whether l
/// lies in the special set is not decidable here.
pub fn serre_multiplicativity_probe(
    f: &Series,
    l: u64,
    r: u32,
    modulus: u64,
    depth: u32,
) -> Result<VerificationReport, Error> {
    if !is_prime(l) {
        return Err(Error::NotPrime(l));
    }
    if modulus < 2 {
        return Err(Error::ModulusTooSmall(modulus));
    }
    if let Ring::Mod(mf) = f.ring() {
        if mf % modulus != 0 {
            return Err(Error::ring_mismatch(f.ring(), Ring::Mod(modulus)));
        }
    }
    let lr = l
        .checked_pow(r)
        .ok_or_else(|| Error::InvalidParameter(format!("l^{r} overflows for l={l}")))?;
    let needed = LATTICE * (lr * u64::from(depth)) as i64 + 1;
    if f.known_end() < needed {
        return Err(Error::InsufficientPrecision {
            needed,
            have: f.known_end(),
        });
    }
    let md = BigInt::from(modulus);
    let mut failure = None;
    for n in 0..=u64::from(depth) {
        if n % l == 0 {
            continue;
        }
        let lhs = f.q_coefficient((n * lr) as i64)?.mod_floor(&md);
        let rhs = (f.q_coefficient(n as i64)? * (r + 1)).mod_floor(&md);
        if lhs != rhs {
            failure = Some(FailureSite {
                exp: LATTICE * (n * lr) as i64,
                expected: rhs.to_string(),
                got: lhs.to_string(),
            });
            break;
        }
    }
    let passed = failure.is_none();
    Ok(VerificationReport {
        statement_id: StatementId::SerreProbe,
        params: params_map(&[("l", l as i64), ("r", i64::from(r)), ("M", modulus as i64)]),
        depth_checked: i64::from(depth),
        sturm_bound: None,
        proof_grade: false,
        passed,
        first_failure: failure,
    })
}
