//! Command-line front end: every verification and discovery run through here
//! leaves a certificate file behind, so results can be re-checked later with
//! `regulus cert check`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use regulus_core::certs::{
    census_certificate, certify_verified_progression, check_certificate, run_request, CertRequest,
    Certificate,
};
use regulus_core::config::EngineConfig;
use regulus_core::error::Error;
use regulus_core::eta::{bk_oracle_table, bk_series, EtaQuotient};
use regulus_core::search::{annihilation_search, census, search_progressions, Provenance};
use regulus_core::series::Ring;
use regulus_core::theorems::{form_meta, sturm_bound};

#[derive(Parser)]
#[command(
    name = "regulus",
    version,
    about = "q-series engine for k-regular partition congruences"
)]
struct Cli {
    /// Directory certificate files are written into
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads (0 = machine default)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Coefficient ring for series printing: "exact" or "mod:M"
    #[arg(long, global = true, value_name = "RING")]
    ring: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print b_k(0..=max), cross-checked against the exact partition oracle
    Bk {
        /// Regularity index: parts divisible by k are forbidden
        #[arg(long)]
        k: u32,
        /// Largest index printed
        #[arg(long)]
        max: u32,
    },
    /// Expand an eta quotient given as "A1:r1,A2:r2,..."
    Eta {
        #[arg(long)]
        quotient: String,
        /// q-depth of the expansion window
        #[arg(long)]
        depth: u32,
    },
    /// Run one verification and write its certificate
    Verify {
        #[command(subcommand)]
        statement: VerifyCmd,
    },
    /// Search for annihilating Hecke operators or full progressions
    Search {
        #[command(subcommand)]
        job: SearchCmd,
    },
    /// Residue statistics of b_k(n) mod M with per-class witnesses
    Census {
        #[arg(long)]
        k: u32,
        /// Modulus the residues are reduced by
        #[arg(long = "mod")]
        modulus: u64,
        /// Number of indices counted: 0 <= n < max
        #[arg(long)]
        max: u64,
    },
    /// Certificate file operations
    Cert {
        #[command(subcommand)]
        action: CertCmd,
    },
}

#[derive(Args)]
struct KmDepth {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    m: u32,
    /// q-depth; defaults come from the engine configuration
    #[arg(long)]
    depth: Option<u32>,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Exact window identity satisfied by the transformed eta quotient
    Identity31 {
        #[command(flatten)]
        km: KmDepth,
    },
    /// Congruence of the ground-level form with the slot series, mod m
    PropJ0 {
        #[command(flatten)]
        km: KmDepth,
        /// Verify through the Sturm bound (proof grade)
        #[arg(long)]
        sturm: bool,
    },
    /// Congruence of the tower form at level j, mod m^{j+1}
    PropFkmj {
        #[command(flatten)]
        km: KmDepth,
        #[arg(long)]
        j: u32,
        /// Verify through the Sturm bound (proof grade)
        #[arg(long)]
        sturm: bool,
    },
    /// Eta-power quotient congruent to 1: --k is the argument multiplier n1,
    /// --m is the congruence base n2, --j is the power index i
    Lemma32 {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        j: u32,
        #[arg(long)]
        depth: Option<u32>,
    },
}

#[derive(Subcommand)]
enum SearchCmd {
    /// Scan a prime range for Hecke operators annihilating the tower form
    Annihilate {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 0)]
        j: u32,
        /// Prime range "LO..HI" (inclusive); defaults from configuration
        #[arg(long)]
        primes: Option<String>,
        /// q-depth of the annihilation scan
        #[arg(long)]
        depth: Option<u32>,
        /// Only scan primes in the residue class -1 mod 576*k*m^{j+1}
        #[arg(long)]
        residue: bool,
    },
    /// Assemble and verify progressions b_k(An+B) == 0 (mod M)
    Progressions {
        #[arg(long)]
        k: u32,
        /// Target modulus; must be coprime to 6
        #[arg(long = "M")]
        target: u64,
        /// q-depth of the per-factor annihilation scans
        #[arg(long)]
        depth: Option<u32>,
    },
}

#[derive(Subcommand)]
enum CertCmd {
    /// Re-run a certificate's verification and compare digest and verdict
    Check { file: PathBuf },
}

fn main() -> ExitCode {
    // die quietly when a pipe reader closes early, as line printers should
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let mut config = EngineConfig::load()?;
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    config.validate()?;
    if config.threads > 0 {
        // a pool may already exist when tests drive run() twice; the second
        // build is a no-op and the earlier pool wins
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global();
    }
    let ring = match cli.ring.as_deref() {
        None => Ring::Exact,
        Some(s) => parse_ring(s)?,
    };

    match cli.command {
        Command::Bk { k, max } => cmd_bk(k, max),
        Command::Eta { quotient, depth } => cmd_eta(&quotient, depth, ring),
        Command::Verify { statement } => cmd_verify(statement, &config),
        Command::Search { job } => cmd_search(job, &config),
        Command::Census { k, modulus, max } => cmd_census(k, modulus, max, &config),
        Command::Cert {
            action: CertCmd::Check { file },
        } => cmd_cert_check(&file),
    }
}

fn parse_ring(s: &str) -> Result<Ring, Error> {
    if s == "exact" {
        return Ok(Ring::Exact);
    }
    if let Some(m) = s.strip_prefix("mod:") {
        let m: u64 = m
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad modulus in ring `{s}`")))?;
        return Ok(Ring::Mod(m));
    }
    Err(Error::InvalidParameter(format!(
        "ring must be `exact` or `mod:M`, got `{s}`"
    )))
}

fn cmd_bk(k: u32, max: u32) -> Result<ExitCode, Error> {
    let series = bk_series(k, max)?;
    let oracle = bk_oracle_table(k, max);
    for n in 0..=max {
        let value = series.q_coefficient(i64::from(n))?;
        if value != oracle[n as usize] {
            return Err(Error::InvalidParameter(format!(
                "internal mismatch at n = {n}: series {value}, oracle {}",
                oracle[n as usize]
            )));
        }
        println!("{n}\t{value}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eta(quotient: &str, depth: u32, ring: Ring) -> Result<ExitCode, Error> {
    let q = EtaQuotient::from_str(quotient)?;
    let series = regulus_core::eta::expand_quotient(&q, depth, ring)?;
    println!("# {q} through q^{depth}, exponents in 1/24 units");
    series.for_each_term(|exp, coeff| {
        println!("{exp}\t{}", coeff.to_bigint());
    });
    Ok(ExitCode::SUCCESS)
}

/// Writes the certificate, prints the one-line summary, and turns the verdict
/// into the process exit code.
fn finish(cert: &Certificate, config: &EngineConfig) -> Result<ExitCode, Error> {
    let path = write_certificate(cert, config)?;
    let verdict = if cert.passed { "PASS" } else { "FAIL" };
    println!(
        "{} [{}] depth {}: {verdict} -> {}",
        cert.kind,
        cert.method,
        cert.depth,
        path.display()
    );
    if let Some(site) = &cert.first_failure {
        println!(
            "  first failure at index {}: expected {}, got {}",
            site.exp, site.expected, site.got
        );
    }
    Ok(exit_for(cert.passed))
}

fn exit_for(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn write_certificate(cert: &Certificate, config: &EngineConfig) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(&config.out_dir)?;
    let mut name = cert.kind.clone();
    for (key, value) in &cert.params {
        name.push_str(&format!("-{key}_{value}"));
    }
    name.push_str(".json");
    let path = config.out_dir.join(name);
    cert.write_to(&path)?;
    Ok(path)
}

fn cmd_verify(statement: VerifyCmd, config: &EngineConfig) -> Result<ExitCode, Error> {
    let request = match statement {
        VerifyCmd::Identity31 { km } => CertRequest::Identity31 {
            k: km.k,
            m: km.m,
            depth: km.depth.unwrap_or(config.identity_depth),
        },
        VerifyCmd::PropJ0 { km, sturm } => CertRequest::PropJ0 {
            k: km.k,
            m: km.m,
            depth: proof_depth(km.k, km.m, 0, km.depth, sturm, config)?,
        },
        VerifyCmd::PropFkmj { km, j, sturm } => CertRequest::PropFkmj {
            k: km.k,
            m: km.m,
            j,
            depth: proof_depth(km.k, km.m, j, km.depth, sturm, config)?,
        },
        VerifyCmd::Lemma32 { k, m, j, depth } => CertRequest::Lemma32 {
            n1: k,
            n2: m,
            i: j,
            depth: depth.unwrap_or(config.congruence_depth),
        },
    };
    let cert = run_request(&request)?;
    finish(&cert, config)
}

/// Depth for a congruence verification: the flag, raised to the Sturm bound
/// when proof grade was requested.
fn proof_depth(
    k: u32,
    m: u32,
    j: u32,
    depth: Option<u32>,
    sturm: bool,
    config: &EngineConfig,
) -> Result<u32, Error> {
    let base = depth.unwrap_or(config.congruence_depth);
    if !sturm {
        return Ok(base);
    }
    let bound = sturm_bound(&form_meta(k, m, j)?)?;
    let bound = u32::try_from(bound)
        .map_err(|_| Error::InvalidParameter(format!("Sturm bound {bound} out of range")))?;
    Ok(base.max(bound))
}

fn parse_prime_range(s: &str, config: &EngineConfig) -> Result<(u64, u64), Error> {
    let Some((lo, hi)) = s.split_once("..") else {
        return Err(Error::InvalidParameter(format!(
            "prime range must be LO..HI, got `{s}`"
        )));
    };
    let lo = if lo.is_empty() {
        config.prime_lo
    } else {
        lo.parse()
            .map_err(|_| Error::InvalidParameter(format!("bad prime bound `{lo}`")))?
    };
    let hi = if hi.is_empty() {
        config.prime_hi
    } else {
        hi.parse()
            .map_err(|_| Error::InvalidParameter(format!("bad prime bound `{hi}`")))?
    };
    Ok((lo, hi))
}

fn cmd_search(job: SearchCmd, config: &EngineConfig) -> Result<ExitCode, Error> {
    match job {
        SearchCmd::Annihilate {
            k,
            m,
            j,
            primes,
            depth,
            residue,
        } => {
            let (lo, hi) = match primes {
                Some(s) => parse_prime_range(&s, config)?,
                None => (config.prime_lo, config.prime_hi),
            };
            let depth = depth.unwrap_or(config.search_depth);
            let hits = annihilation_search(k, m, j, lo, hi, depth, residue)?;
            if hits.is_empty() {
                println!("no annihilating primes in {lo}..{hi} at depth {depth}");
                return Ok(ExitCode::SUCCESS);
            }
            let mut all_passed = true;
            for hit in &hits {
                println!(
                    "hit: l={} (residue class: {}, proof grade: {})",
                    hit.l,
                    if hit.residue_ok { "yes" } else { "no" },
                    if hit.proof_grade { "yes" } else { "no" }
                );
                let cert = run_request(&CertRequest::HeckeAnnihilation {
                    k,
                    m,
                    j,
                    l: hit.l,
                    n_max: config.n_max,
                })?;
                let path = write_certificate(&cert, config)?;
                println!(
                    "  key congruence for n <= {}: {} -> {}",
                    config.n_max,
                    if cert.passed { "PASS" } else { "FAIL" },
                    path.display()
                );
                all_passed &= cert.passed;
            }
            Ok(exit_for(all_passed))
        }
        SearchCmd::Progressions { k, target, depth } => {
            let depth = depth.unwrap_or(config.search_depth);
            let out = search_progressions(
                k,
                target,
                config.prime_lo,
                config.prime_hi,
                depth,
                config.n_max,
                config.max_emitted,
            )?;
            for hit in &out.hits {
                println!(
                    "hit: factor m={} j={} annihilated by l={}",
                    hit.m, hit.j, hit.l
                );
            }
            for (a, b, reason) in &out.skipped {
                println!("skipped candidate ({a}, {b}): {reason}");
            }
            if out.progressions.is_empty() {
                println!("no progressions emitted");
                return Ok(ExitCode::SUCCESS);
            }
            for pc in &out.progressions {
                let cert = certify_verified_progression(pc)?;
                let path = write_certificate(&cert, config)?;
                let primes = match &pc.provenance {
                    Provenance::Assembled { primes, .. } => format!("{primes:?}"),
                    Provenance::DirectScan => "direct".to_string(),
                };
                println!(
                    "progression: b_{}({}n + {}) == 0 (mod {}) for n <= {} via {primes} -> {}",
                    pc.k,
                    pc.a,
                    pc.b,
                    pc.modulus,
                    pc.verified_to,
                    path.display()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_census(k: u32, modulus: u64, max: u64, config: &EngineConfig) -> Result<ExitCode, Error> {
    let result = census(k, modulus, max)?;
    println!("# residues of b_{k}(n) mod {modulus}, 0 <= n < {max}");
    for (residue, count) in &result.counts {
        println!("{residue}\t{count}");
    }
    for (class, witness) in &result.witnesses {
        match witness {
            Some((n, value)) => println!("witness class {class}: n={n} value={value}"),
            None => println!("witness class {class}: none below {max}"),
        }
    }
    let cert = census_certificate(&result)?;
    let path = write_certificate(&cert, config)?;
    println!("census certificate -> {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_cert_check(file: &Path) -> Result<ExitCode, Error> {
    let cert = Certificate::read_from(file)?;
    let report = check_certificate(&cert)?;
    println!(
        "digest: {}, verdict: {}, stored verdict: {}",
        if report.digest_match {
            "match"
        } else {
            "MISMATCH"
        },
        if report.verdict_match {
            "match"
        } else {
            "MISMATCH"
        },
        if report.stored_passed { "PASS" } else { "FAIL" }
    );
    Ok(exit_for(report.consistent() && report.stored_passed))
}
