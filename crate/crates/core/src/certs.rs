//! Reproducible verification certificates.
//!
//! A [`Certificate`] pins everything needed to re-run a verification: the
//! statement kind, its integer parameters, the depth, the verdict, and a
//! digest of the coefficient window the run actually examined. Checking a
//! certificate re-executes the named verification with the recorded
//! parameters and compares both the verdict and the digest, so a stored
//! certificate cannot silently drift away from what the engine would say
//! today.
//!
//! Files are canonical JSON: sorted keys, plain decimal integers, a single
//! trailing newline. Two runs with the same parameters produce byte-identical
//! files regardless of thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::eta::{bk_series_in, expand_quotient, EtaQuotient};
use crate::search::{census, direct_verify, CensusResult};
use crate::series::Ring;
use crate::theorems::{
    construct_f, construct_f_in, tower_modulus, verify_identity31, verify_lemma32,
    verify_prop_fkmj, verify_prop_j0, FailureSite, StatementId, VerificationReport,
};
use crate::ENGINE_VERSION;

pub const SCHEMA_VERSION: &str = "1";

/// How a certificate's verdict was reached, from weakest to strongest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    /// Exact-ring equality of two series on the stated window.
    ExactIdentity,
    /// Modular congruence checked coefficient-by-coefficient on the window.
    CoefficientScan,
    /// Coefficient scan reaching the Sturm bound for the recorded space.
    SturmProofGrade,
    /// Progression scan cross-checked against the exact partition oracle.
    DirectOracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::ExactIdentity => "EXACT_IDENTITY",
            Method::CoefficientScan => "COEFFICIENT_SCAN",
            Method::SturmProofGrade => "STURM_PROOF_GRADE",
            Method::DirectOracle => "DIRECT_ORACLE",
        };
        f.write_str(s)
    }
}

/// Build and ring configuration stamped into every certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStamp {
    pub version: String,
    /// Window convention identifier; coefficients at or past `known_end` are
    /// never trusted, and truncation is always exact (no rounding tier).
    pub truncation: String,
    /// Coefficient ring of the checked object: "exact" or "mod:M".
    pub ring: String,
}

const TRUNCATION_CONVENTION: &str = "sharp-lattice-window";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: String,
    /// Statement id ("identity31", "prop-j0", ...) or "census".
    pub kind: String,
    pub params: BTreeMap<String, i64>,
    pub statement: String,
    pub method: Method,
    pub depth: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sturm_bound: Option<i64>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<FailureSite>,
    pub assumptions: Vec<String>,
    pub engine: EngineStamp,
    /// SHA-256 (hex) over the canonical rendering of the checked coefficient
    /// window; recomputed and compared on every check.
    pub digest: String,
}

/// A verification the certificate layer knows how to run and re-run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertRequest {
    Identity31 {
        k: u32,
        m: u32,
        depth: u32,
    },
    PropJ0 {
        k: u32,
        m: u32,
        depth: u32,
    },
    PropFkmj {
        k: u32,
        m: u32,
        j: u32,
        depth: u32,
    },
    Lemma32 {
        n1: u32,
        n2: u32,
        i: u32,
        depth: u32,
    },
    HeckeAnnihilation {
        k: u32,
        m: u32,
        j: u32,
        l: u64,
        n_max: u32,
    },
    Progression {
        k: u32,
        a: u64,
        b: u64,
        modulus: u64,
        n_max: u32,
    },
    Census {
        k: u32,
        modulus: u64,
        n_count: u64,
    },
}

/// Outcome of re-running a certificate's verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub digest_match: bool,
    pub verdict_match: bool,
    pub stored_passed: bool,
}

impl CheckReport {
    /// A check is good when the re-run reproduces both digest and verdict.
    pub fn consistent(&self) -> bool {
        self.digest_match && self.verdict_match
    }
}

fn sha256_hex(payload: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(payload);
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in out {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Canonical rendering of a series window: one `exp:value` line per nonzero
/// stored coefficient, ascending exponents, values in decimal.
fn series_window_digest(series: &crate::series::Series) -> String {
    let mut payload = String::new();
    series.for_each_term(|exp, coeff| {
        payload.push_str(&format!("{exp}:{}\n", coeff.to_bigint()));
    });
    sha256_hex(payload.as_bytes())
}

/// Canonical rendering of an indexed residue scan: `index:residue` lines. On
/// a passing run every residue is zero; on a failing run the lines stop at
/// the first counterexample.
fn residue_scan_digest(lines: &[(u64, u64)]) -> String {
    let mut payload = String::new();
    for (n, r) in lines {
        payload.push_str(&format!("{n}:{r}\n"));
    }
    sha256_hex(payload.as_bytes())
}

fn census_digest(result: &CensusResult) -> String {
    let mut payload = String::new();
    for (residue, count) in &result.counts {
        payload.push_str(&format!("{residue}:{count}\n"));
    }
    for (class, witness) in &result.witnesses {
        match witness {
            Some((n, value)) => payload.push_str(&format!("w{class}:{n},{value}\n")),
            None => payload.push_str(&format!("w{class}:none\n")),
        }
    }
    sha256_hex(payload.as_bytes())
}

fn params_from(pairs: &[(&str, i64)]) -> BTreeMap<String, i64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn require_param(cert: &Certificate, key: &str) -> Result<i64, Error> {
    cert.params
        .get(key)
        .copied()
        .ok_or_else(|| Error::MalformedCertificate(format!("missing parameter '{key}'")))
}

fn param_u32(cert: &Certificate, key: &str) -> Result<u32, Error> {
    let v = require_param(cert, key)?;
    u32::try_from(v)
        .map_err(|_| Error::MalformedCertificate(format!("parameter '{key}' = {v} out of range")))
}

fn param_u64(cert: &Certificate, key: &str) -> Result<u64, Error> {
    let v = require_param(cert, key)?;
    u64::try_from(v)
        .map_err(|_| Error::MalformedCertificate(format!("parameter '{key}' = {v} out of range")))
}

impl CertRequest {
    pub fn from_certificate(cert: &Certificate) -> Result<CertRequest, Error> {
        match cert.kind.as_str() {
            "identity31" => Ok(CertRequest::Identity31 {
                k: param_u32(cert, "k")?,
                m: param_u32(cert, "m")?,
                depth: param_u32(cert, "depth")?,
            }),
            "prop-j0" => Ok(CertRequest::PropJ0 {
                k: param_u32(cert, "k")?,
                m: param_u32(cert, "m")?,
                depth: param_u32(cert, "depth")?,
            }),
            "prop-fkmj" => Ok(CertRequest::PropFkmj {
                k: param_u32(cert, "k")?,
                m: param_u32(cert, "m")?,
                j: param_u32(cert, "j")?,
                depth: param_u32(cert, "depth")?,
            }),
            "lemma32" => Ok(CertRequest::Lemma32 {
                n1: param_u32(cert, "n1")?,
                n2: param_u32(cert, "n2")?,
                i: param_u32(cert, "i")?,
                depth: param_u32(cert, "depth")?,
            }),
            "hecke-annihilation" => Ok(CertRequest::HeckeAnnihilation {
                k: param_u32(cert, "k")?,
                m: param_u32(cert, "m")?,
                j: param_u32(cert, "j")?,
                l: param_u64(cert, "l")?,
                n_max: param_u32(cert, "n_max")?,
            }),
            "progression" => Ok(CertRequest::Progression {
                k: param_u32(cert, "k")?,
                a: param_u64(cert, "a")?,
                b: param_u64(cert, "b")?,
                modulus: param_u64(cert, "modulus")?,
                n_max: param_u32(cert, "n_max")?,
            }),
            "census" => Ok(CertRequest::Census {
                k: param_u32(cert, "k")?,
                modulus: param_u64(cert, "modulus")?,
                n_count: param_u64(cert, "n_count")?,
            }),
            other => Err(Error::MalformedCertificate(format!(
                "unknown certificate kind '{other}'"
            ))),
        }
    }
}

fn stamp(ring: String) -> EngineStamp {
    EngineStamp {
        version: ENGINE_VERSION.to_string(),
        truncation: TRUNCATION_CONVENTION.to_string(),
        ring,
    }
}

const SPACE_ASSUMPTION: &str =
    "the constructed form lies in the cusp-form space of the recorded weight, level, and character";
const SCAN_ASSUMPTION: &str =
    "coefficient scan below the Sturm bound: strong evidence, not a proof for all coefficients";
const WINDOW_ASSUMPTION: &str = "exact equality checked on a finite window";
const PROGRESSION_ASSUMPTION: &str =
    "series scan over the stated index range with exact-oracle spot checks; asserted for that range";

fn congruence_certificate(
    report: &VerificationReport,
    statement: String,
    ring: String,
    mut assumptions: Vec<String>,
    digest: String,
) -> Certificate {
    let method = if report.proof_grade {
        Method::SturmProofGrade
    } else {
        Method::CoefficientScan
    };
    if !report.proof_grade && report.sturm_bound.is_some() {
        assumptions.push(SCAN_ASSUMPTION.to_string());
    }
    let mut params = report.params.clone();
    params.insert("depth".to_string(), report.depth_checked);
    Certificate {
        schema_version: SCHEMA_VERSION.to_string(),
        kind: report.statement_id.as_str().to_string(),
        params,
        statement,
        method,
        depth: report.depth_checked,
        sturm_bound: report.sturm_bound,
        passed: report.passed,
        first_failure: report.first_failure.clone(),
        assumptions,
        engine: stamp(ring),
        digest,
    }
}

/// Runs the requested verification and wraps the outcome in a certificate.
/// Failed verifications still produce a certificate, with `passed = false`
/// and the first failing site recorded.
pub fn run_request(req: &CertRequest) -> Result<Certificate, Error> {
    match *req {
        CertRequest::Identity31 { k, m, depth } => {
            let report = verify_identity31(k, m, depth)?;
            let f = construct_f(k, m, depth)?;
            let statement =
                format!("identity31 for (k={k}, m={m}): exact window equality through q^{depth}");
            let mut cert = congruence_certificate(
                &report,
                statement,
                "exact".to_string(),
                vec![WINDOW_ASSUMPTION.to_string()],
                series_window_digest(&f),
            );
            cert.method = Method::ExactIdentity;
            Ok(cert)
        }
        CertRequest::PropJ0 { k, m, depth } => {
            let report = verify_prop_j0(k, m, depth)?;
            let modulus = u64::from(m);
            let f = construct_f_in(k, m, depth, Ring::Mod(modulus))?;
            let statement =
                format!("prop-j0 for (k={k}, m={m}): congruence mod {modulus} through q^{depth}");
            Ok(congruence_certificate(
                &report,
                statement,
                format!("mod:{modulus}"),
                vec![SPACE_ASSUMPTION.to_string()],
                series_window_digest(&f),
            ))
        }
        CertRequest::PropFkmj { k, m, j, depth } => {
            let report = verify_prop_fkmj(k, m, j, depth)?;
            let modulus = tower_modulus(m, j)?;
            let f = construct_f_in(k, m, depth, Ring::Mod(modulus))?;
            let statement = format!(
                "prop-fkmj for (k={k}, m={m}, j={j}): congruence mod {modulus} through q^{depth}"
            );
            Ok(congruence_certificate(
                &report,
                statement,
                format!("mod:{modulus}"),
                vec![SPACE_ASSUMPTION.to_string()],
                series_window_digest(&f),
            ))
        }
        CertRequest::Lemma32 { n1, n2, i, depth } => {
            let report = verify_lemma32(n1, n2, i, depth)?;
            let modulus = u64::from(n2).pow(i);
            let quotient = EtaQuotient::new(vec![
                (
                    n1,
                    i32::try_from(modulus).map_err(|_| {
                        Error::InvalidParameter(format!("n2^i = {modulus} too large"))
                    })?,
                ),
                (
                    n1 * n2,
                    -i32::try_from(modulus / u64::from(n2)).expect("smaller power fits"),
                ),
            ])?;
            let s = expand_quotient(&quotient, depth, Ring::Mod(modulus))?;
            let statement = format!(
                "lemma32 for (n1={n1}, n2={n2}, i={i}): eta-power quotient congruent to 1 mod {modulus} through q^{depth}"
            );
            Ok(congruence_certificate(
                &report,
                statement,
                format!("mod:{modulus}"),
                Vec::new(),
                series_window_digest(&s),
            ))
        }
        CertRequest::HeckeAnnihilation { k, m, j, l, n_max } => {
            hecke_annihilation_certificate(k, m, j, l, n_max)
        }
        CertRequest::Progression {
            k,
            a,
            b,
            modulus,
            n_max,
        } => progression_certificate(k, a, b, modulus, n_max),
        CertRequest::Census {
            k,
            modulus,
            n_count,
        } => {
            let result = census(k, modulus, n_count)?;
            census_certificate(&result)
        }
    }
}

/// Certificate for an already-computed census; `run_request` goes through
/// here too, so checking reproduces the same bytes.
pub fn census_certificate(result: &CensusResult) -> Result<Certificate, Error> {
    let (k, modulus, n_count) = (result.k, result.modulus, result.n_count);
    let statement = format!("census: residues of b_{k}(n) mod {modulus} for n < {n_count}");
    let depth = depth_i64(n_count)?;
    Ok(Certificate {
        schema_version: SCHEMA_VERSION.to_string(),
        kind: "census".to_string(),
        params: params_from(&[
            ("k", i64::from(k)),
            ("modulus", depth_i64(modulus)?),
            ("n_count", depth),
        ]),
        statement,
        method: Method::CoefficientScan,
        depth,
        sturm_bound: None,
        passed: true,
        first_failure: None,
        assumptions: Vec::new(),
        engine: stamp(format!("mod:{modulus}")),
        digest: census_digest(result),
    })
}

fn depth_i64(v: u64) -> Result<i64, Error> {
    i64::try_from(v).map_err(|_| Error::InvalidParameter(format!("value {v} exceeds i64 range")))
}

/// Re-derives the key congruence behind an annihilation hit on its own,
/// independently of the search module's scan: admissible indices are the n
/// with m*l*n = k - 1 (mod 24) and gcd(n, l) = 1, and the checked residue at
/// n is b_k((m*l*n - k + 1)/24) reduced mod m^{j+1}.
fn hecke_annihilation_certificate(
    k: u32,
    m: u32,
    j: u32,
    l: u64,
    n_max: u32,
) -> Result<Certificate, Error> {
    let modulus = tower_modulus(m, j)?;
    let stride = u64::from(m) * l;
    let target = (u64::from(k) - 1) % 24;
    let mut lines: Vec<(u64, u64)> = Vec::new();
    let mut failure: Option<FailureSite> = None;
    let max_arg = (stride * u64::from(n_max) + 1) / 24;
    let max_arg_u32 = u32::try_from(max_arg)
        .map_err(|_| Error::InvalidParameter(format!("argument depth {max_arg} too large")))?;
    let series = bk_series_in(k, max_arg_u32, Ring::Mod(modulus))?;
    for n in 0..=u64::from(n_max) {
        let shifted = stride * n + 1;
        if shifted < u64::from(k) || (stride * n) % 24 != target || n.gcd(&l) != 1 {
            continue;
        }
        let value = series.q_coefficient(((shifted - u64::from(k)) / 24) as i64)?;
        let residue = u64::try_from(&value).expect("reduced residue fits u64");
        lines.push((n, residue));
        if !value.is_zero() {
            failure = Some(FailureSite {
                exp: n as i64,
                expected: "0".to_string(),
                got: residue.to_string(),
            });
            break;
        }
    }
    let passed = failure.is_none();
    let statement = format!(
        "hecke-annihilation for (k={k}, m={m}, j={j}, l={l}): slot congruence mod {modulus} for admissible n <= {n_max}"
    );
    Ok(Certificate {
        schema_version: SCHEMA_VERSION.to_string(),
        kind: StatementId::HeckeAnnihilation.as_str().to_string(),
        params: params_from(&[
            ("k", i64::from(k)),
            ("m", i64::from(m)),
            ("j", i64::from(j)),
            ("l", depth_i64(l)?),
            ("n_max", i64::from(n_max)),
        ]),
        statement,
        method: Method::CoefficientScan,
        depth: i64::from(n_max),
        sturm_bound: None,
        passed,
        first_failure: failure,
        assumptions: vec![SPACE_ASSUMPTION.to_string()],
        engine: stamp(format!("mod:{modulus}")),
        digest: residue_scan_digest(&lines),
    })
}

fn progression_certificate(
    k: u32,
    a: u64,
    b: u64,
    modulus: u64,
    n_max: u32,
) -> Result<Certificate, Error> {
    let (passed, failure, lines) = match direct_verify(k, a, b, modulus, n_max) {
        Ok(_) => {
            let lines: Vec<(u64, u64)> = (0..=u64::from(n_max)).map(|n| (n, 0)).collect();
            (true, None, lines)
        }
        Err(Error::CongruenceCounterexample { n, residue }) => {
            let mut lines: Vec<(u64, u64)> = (0..n).map(|i| (i, 0)).collect();
            lines.push((n, residue));
            let failure = FailureSite {
                exp: n as i64,
                expected: "0".to_string(),
                got: residue.to_string(),
            };
            (false, Some(failure), lines)
        }
        Err(e) => return Err(e),
    };
    assemble_progression_certificate(k, a, b, modulus, n_max, passed, failure, &lines)
}

/// Certificate for a progression that `direct_verify` has already accepted
/// (the residue window is all zeros by construction); produces the same bytes
/// a fresh `run_request` would.
pub fn certify_verified_progression(
    pc: &crate::search::ProgressionCongruence,
) -> Result<Certificate, Error> {
    let lines: Vec<(u64, u64)> = (0..=u64::from(pc.verified_to)).map(|n| (n, 0)).collect();
    assemble_progression_certificate(
        pc.k,
        pc.a,
        pc.b,
        pc.modulus,
        pc.verified_to,
        true,
        None,
        &lines,
    )
}

#[allow(clippy::too_many_arguments)]
fn assemble_progression_certificate(
    k: u32,
    a: u64,
    b: u64,
    modulus: u64,
    n_max: u32,
    passed: bool,
    failure: Option<FailureSite>,
    lines: &[(u64, u64)],
) -> Result<Certificate, Error> {
    let statement =
        format!("progression: b_{k}({a}n + {b}) == 0 (mod {modulus}) for 0 <= n <= {n_max}");
    Ok(Certificate {
        schema_version: SCHEMA_VERSION.to_string(),
        kind: StatementId::Progression.as_str().to_string(),
        params: params_from(&[
            ("k", i64::from(k)),
            ("a", depth_i64(a)?),
            ("b", depth_i64(b)?),
            ("modulus", depth_i64(modulus)?),
            ("n_max", i64::from(n_max)),
        ]),
        statement,
        method: Method::DirectOracle,
        depth: i64::from(n_max),
        sturm_bound: None,
        passed,
        first_failure: failure,
        assumptions: vec![PROGRESSION_ASSUMPTION.to_string()],
        engine: stamp(format!("mod:{modulus}")),
        digest: residue_scan_digest(lines),
    })
}

impl Certificate {
    /// Structural invariants every certificate must satisfy, checked before
    /// any re-run: schema version, method/Sturm consistency, digest shape.
    pub fn validate(&self) -> Result<(), Error> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion(self.schema_version.clone()));
        }
        if self.method == Method::SturmProofGrade {
            let bound = self.sturm_bound.ok_or_else(|| {
                Error::MalformedCertificate("proof-grade claim without a Sturm bound".to_string())
            })?;
            if self.depth < bound {
                return Err(Error::MalformedCertificate(format!(
                    "proof-grade claim at depth {} below the Sturm bound {bound}",
                    self.depth
                )));
            }
        }
        if self.digest.len() != 64 || !self.digest.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::MalformedCertificate(
                "digest is not a 64-character hex string".to_string(),
            ));
        }
        Ok(())
    }

    /// Canonical file rendering: compact JSON with sorted keys and a trailing
    /// newline. Byte-identical for identical certificates.
    pub fn canonical_json(&self) -> Result<String, Error> {
        let value = serde_json::to_value(self)?;
        let mut text = serde_json::to_string(&value)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Certificate, Error> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_to(&self, path: &Path) -> Result<(), Error> {
        let text = self.canonical_json()?;
        Ok(fs::write(path, text)?)
    }

    pub fn read_from(path: &Path) -> Result<Certificate, Error> {
        let text = fs::read_to_string(path)?;
        Certificate::from_json(&text)
    }
}

/// Re-runs the certificate's verification with its recorded parameters and
/// compares digest and verdict against the stored values.
pub fn check_certificate(cert: &Certificate) -> Result<CheckReport, Error> {
    cert.validate()?;
    let request = CertRequest::from_certificate(cert)?;
    let fresh = run_request(&request)?;
    Ok(CheckReport {
        digest_match: fresh.digest == cert.digest,
        verdict_match: fresh.passed == cert.passed,
        stored_passed: cert.passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_certificate_round_trips() {
        let cert = run_request(&CertRequest::Identity31 {
            k: 2,
            m: 5,
            depth: 120,
        })
        .unwrap();
        assert!(cert.passed);
        assert_eq!(cert.method, Method::ExactIdentity);
        assert_eq!(cert.kind, "identity31");
        assert_eq!(cert.params["k"], 2);
        assert_eq!(cert.params["depth"], 120);
        cert.validate().unwrap();

        let text = cert.canonical_json().unwrap();
        let parsed = Certificate::from_json(&text).unwrap();
        assert_eq!(parsed, cert);
        assert_eq!(parsed.canonical_json().unwrap(), text);
    }

    #[test]
    fn canonical_json_is_sorted_and_stable() {
        let cert = run_request(&CertRequest::Lemma32 {
            n1: 1,
            n2: 5,
            i: 1,
            depth: 60,
        })
        .unwrap();
        let a = cert.canonical_json().unwrap();
        let b = cert.canonical_json().unwrap();
        assert_eq!(a, b);
        assert!(a.ends_with('\n'));
        let keys: Vec<&str> = a
            .trim()
            .trim_start_matches('{')
            .split("\",\"")
            .filter_map(|chunk| chunk.split(':').next())
            .collect();
        let top = ["assumptions", "depth", "digest", "engine"];
        for pair in top.windows(2) {
            let ia = a.find(&format!("\"{}\"", pair[0])).unwrap();
            let ib = a.find(&format!("\"{}\"", pair[1])).unwrap();
            assert!(ia < ib, "keys out of order: {keys:?}");
        }
    }

    #[test]
    fn fresh_certificates_check_clean() {
        for req in [
            CertRequest::PropJ0 {
                k: 2,
                m: 5,
                depth: 80,
            },
            CertRequest::Census {
                k: 2,
                modulus: 5,
                n_count: 500,
            },
            CertRequest::Progression {
                k: 5,
                a: 245,
                b: 239,
                modulus: 5,
                n_max: 20,
            },
        ] {
            let cert = run_request(&req).unwrap();
            let report = check_certificate(&cert).unwrap();
            assert!(report.consistent(), "{req:?}");
            assert!(report.stored_passed, "{req:?}");
        }
    }

    #[test]
    fn edited_digest_fails_the_check() {
        let cert = run_request(&CertRequest::Census {
            k: 2,
            modulus: 5,
            n_count: 300,
        })
        .unwrap();
        let mut doctored = cert.clone();
        let flipped = if cert.digest.starts_with('0') {
            "1"
        } else {
            "0"
        };
        doctored.digest = format!("{flipped}{}", &cert.digest[1..]);
        let report = check_certificate(&doctored).unwrap();
        assert!(!report.digest_match);
        assert!(report.verdict_match);
        assert!(!report.consistent());
    }

    #[test]
    fn edited_params_change_the_recomputed_digest() {
        let cert = run_request(&CertRequest::Census {
            k: 2,
            modulus: 5,
            n_count: 300,
        })
        .unwrap();
        let mut doctored = cert.clone();
        doctored.params.insert("n_count".to_string(), 301);
        let report = check_certificate(&doctored).unwrap();
        assert!(!report.digest_match);
    }

    #[test]
    fn failing_progression_still_gets_a_certificate() {
        let cert = run_request(&CertRequest::Progression {
            k: 2,
            a: 5,
            b: 4,
            modulus: 5,
            n_max: 50,
        })
        .unwrap();
        assert!(!cert.passed);
        let site = cert.first_failure.clone().unwrap();
        assert_eq!(site.exp, 0);
        assert_eq!(site.got, "2");
        let report = check_certificate(&cert).unwrap();
        assert!(report.consistent());
        assert!(!report.stored_passed);
    }

    #[test]
    fn proof_grade_invariant_is_enforced() {
        let mut cert = run_request(&CertRequest::PropJ0 {
            k: 2,
            m: 5,
            depth: 80,
        })
        .unwrap();
        assert_eq!(cert.method, Method::CoefficientScan);
        assert_eq!(cert.sturm_bound, Some(11520));
        assert!(cert.assumptions.iter().any(|a| a.contains("Sturm")));

        cert.method = Method::SturmProofGrade;
        assert!(cert.validate().is_err());
        cert.sturm_bound = None;
        assert!(cert.validate().is_err());
    }

    #[test]
    fn annihilation_certificate_matches_the_search_verdict() {
        let good = run_request(&CertRequest::HeckeAnnihilation {
            k: 7,
            m: 5,
            j: 0,
            l: 19,
            n_max: 400,
        })
        .unwrap();
        assert!(good.passed);
        assert!(check_certificate(&good).unwrap().consistent());

        let bad = run_request(&CertRequest::HeckeAnnihilation {
            k: 7,
            m: 5,
            j: 0,
            l: 13,
            n_max: 400,
        })
        .unwrap();
        assert!(!bad.passed);
        assert_eq!(bad.first_failure.as_ref().unwrap().exp, 6);
        assert!(check_certificate(&bad).unwrap().consistent());
        assert_ne!(good.digest, bad.digest);
    }

    #[test]
    fn shortcut_certificate_matches_a_fresh_run() {
        let pc = direct_verify(5, 245, 239, 5, 20).unwrap();
        let via_search = certify_verified_progression(&pc).unwrap();
        let via_rerun = run_request(&CertRequest::Progression {
            k: 5,
            a: 245,
            b: 239,
            modulus: 5,
            n_max: 20,
        })
        .unwrap();
        assert_eq!(via_search, via_rerun);
        assert_eq!(
            via_search.canonical_json().unwrap(),
            via_rerun.canonical_json().unwrap()
        );
    }

    #[test]
    fn digest_oracle_small_series() {
        // independent rendering of the same window: the q^0..q^2 part of the
        // k=2 series has coefficients 1, 1, 1 at lattice 0, 24, 48
        let series = bk_series_in(2, 2, Ring::Exact).unwrap();
        let expected = sha256_hex(b"0:1\n24:1\n48:1\n");
        assert_eq!(series_window_digest(&series), expected);
    }

    #[test]
    fn request_parsing_rejects_unknown_kinds_and_missing_params() {
        let mut cert = run_request(&CertRequest::Census {
            k: 2,
            modulus: 5,
            n_count: 100,
        })
        .unwrap();
        cert.kind = "mystery".to_string();
        assert!(CertRequest::from_certificate(&cert).is_err());
        cert.kind = "census".to_string();
        cert.params.remove("n_count");
        assert!(CertRequest::from_certificate(&cert).is_err());
    }

    #[test]
    fn schema_version_gate() {
        let mut cert = run_request(&CertRequest::Census {
            k: 2,
            modulus: 5,
            n_count: 100,
        })
        .unwrap();
        cert.schema_version = "0".to_string();
        assert!(check_certificate(&cert).is_err());
    }
}
