//! Exact prime counting against a sieve: counts in arithmetic
//! progressions and by Frobenius class, the Brun-Titchmarsh inequality as
//! a falsifiable check, the good/bad split-prime classifier for subfields,
//! and empirical verification of the pigeonhole splitting arguments for
//! rank-2 and rank-3 extensions.
//!
//! Counting convention: all counts include primes p with p <= x.

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::abelian_fields::AbelianExtension;
use crate::arith;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CountError {
    #[error("residue {a} is not coprime to modulus {q}")]
    NotCoprime { a: u64, q: u64 },
    #[error("query needs primes up to {required} but the sieve stops at {limit}")]
    SieveTooSmall { required: u64, limit: u64 },
    #[error("bound {x} must exceed the modulus {q}")]
    RangeViolation { x: u64, q: u64 },
    #[error("{0}")]
    WrongShape(String),
}

/// Bit-packed odd-only primality table. A set bit marks an odd composite
/// (1 included), so primality queries for any n up to the limit are exact.
pub struct PrimeSieve {
    limit: u64,
    bits: Vec<u64>,
}

impl PrimeSieve {
    /// Sieve all primes up to and including `limit`.
    pub fn new(limit: u64) -> PrimeSieve {
        let limit = limit.max(2);
        let odds = (limit + 1) / 2;
        let mut bits = vec![0u64; (odds as usize + 63) / 64];
        bits[0] |= 1; // 1 is not prime
        let mut p = 3u64;
        while p * p <= limit {
            if bits[(p / 2) as usize / 64] >> ((p / 2) % 64) & 1 == 0 {
                let mut m = p * p;
                while m <= limit {
                    bits[(m / 2) as usize / 64] |= 1 << ((m / 2) % 64);
                    m += 2 * p;
                }
            }
            p += 2;
        }
        PrimeSieve { limit, bits }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn is_prime(&self, n: u64) -> Result<bool, CountError> {
        if n > self.limit {
            return Err(CountError::SieveTooSmall { required: n, limit: self.limit });
        }
        if n < 2 {
            return Ok(false);
        }
        if n % 2 == 0 {
            return Ok(n == 2);
        }
        Ok(self.bits[(n / 2) as usize / 64] >> ((n / 2) % 64) & 1 == 0)
    }

    /// All primes up to and including `x`, ascending. `x` must not exceed
    /// the sieve limit (checked by the counting operations).
    pub fn primes_up_to(&self, x: u64) -> impl Iterator<Item = u64> + '_ {
        let x = x.min(self.limit);
        std::iter::once(2)
            .filter(move |_| x >= 2)
            .chain((3..=x).step_by(2).filter(move |&n| {
                self.bits[(n / 2) as usize / 64] >> ((n / 2) % 64) & 1 == 0
            }))
    }

    fn check_range(&self, x: u64) -> Result<(), CountError> {
        if x > self.limit {
            Err(CountError::SieveTooSmall { required: x, limit: self.limit })
        } else {
            Ok(())
        }
    }
}

/// pi(x): number of primes up to x.
pub fn pi(sieve: &PrimeSieve, x: u64) -> Result<u64, CountError> {
    sieve.check_range(x)?;
    Ok(sieve.primes_up_to(x).count() as u64)
}

/// pi(x; q, a): primes p <= x with p = a mod q. The pair q = 1, a = 0
/// degenerates to the full count.
pub fn pi_progression(sieve: &PrimeSieve, x: u64, q: u64, a: u64) -> Result<u64, CountError> {
    sieve.check_range(x)?;
    if q == 0 || arith::gcd(a % q.max(1), q) != 1 {
        return Err(CountError::NotCoprime { a, q });
    }
    let a = a % q;
    Ok(sieve.primes_up_to(x).filter(|&p| p % q == a).count() as u64)
}

/// The right-hand side of the Brun-Titchmarsh inequality at (x, q):
/// 2x / (phi(q) ln x (1 - ln q / ln x)).
fn brun_titchmarsh_bound(x: u64, q: u64) -> f64 {
    let lx = (x as f64).ln();
    let lq = (q as f64).ln();
    2.0 / (1.0 - lq / lx) * x as f64 / (arith::euler_phi(q) as f64 * lx)
}

#[derive(Debug, Clone, Serialize)]
pub struct BrunTitchmarshReport {
    pub x: u64,
    pub q: u64,
    pub a: u64,
    pub count: u64,
    pub bound: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// Checks pi(x; q, a) against the Brun-Titchmarsh bound. The inequality
/// is a theorem for x > q, so `holds` is expected to be true always; a
/// false value would expose a counting bug.
pub fn brun_titchmarsh_check(
    sieve: &PrimeSieve,
    x: u64,
    q: u64,
    a: u64,
) -> Result<BrunTitchmarshReport, CountError> {
    if x <= q {
        return Err(CountError::RangeViolation { x, q });
    }
    let count = pi_progression(sieve, x, q, a)?;
    let bound = brun_titchmarsh_bound(x, q);
    Ok(BrunTitchmarshReport {
        x,
        q,
        a,
        count,
        bound,
        ratio: count as f64 / bound,
        holds: (count as f64) <= bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BtGridCell {
    pub q: u64,
    pub a: u64,
    pub x: u64,
    pub count: u64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BtGridReport {
    pub q_max: u64,
    pub x_max: u64,
    pub cells_checked: u64,
    pub violations: Vec<BtGridCell>,
    /// Tightest cell observed: the largest count/bound ratio.
    pub max_ratio_cell: Option<BtGridCell>,
}

/// Scans the Brun-Titchmarsh inequality over every modulus q <= q_max and
/// every coprime residue, with snapshots at x in {q+1, q^2, q^4, x_max}
/// clipped to (q, x_max]. One pass over the sieve per modulus; moduli run
/// in parallel.
pub fn brun_titchmarsh_grid(
    sieve: &PrimeSieve,
    q_max: u64,
    x_max: u64,
) -> Result<BtGridReport, CountError> {
    sieve.check_range(x_max)?;
    let per_q: Vec<(u64, Vec<BtGridCell>, Option<BtGridCell>)> = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let mut snapshots: Vec<u64> = [
                q + 1,
                q.saturating_mul(q),
                q.saturating_mul(q).saturating_mul(q).saturating_mul(q),
                x_max,
            ]
            .into_iter()
            .filter(|&x| x > q && x <= x_max)
            .collect();
            snapshots.sort_unstable();
            snapshots.dedup();
            let mut counts = vec![0u64; q as usize];
            let mut cells = 0u64;
            let mut violations = Vec::new();
            let mut tightest: Option<BtGridCell> = None;
            let mut snap = snapshots.iter().peekable();
            let mut flush = |x: u64, counts: &[u64], cells: &mut u64| {
                for a in 0..q {
                    if arith::gcd(a, q) != 1 && q != 1 {
                        continue;
                    }
                    let count = counts[a as usize];
                    let bound = brun_titchmarsh_bound(x, q);
                    let cell = BtGridCell { q, a, x, count, bound, ratio: count as f64 / bound };
                    *cells += 1;
                    if count as f64 > bound {
                        violations.push(cell.clone());
                    }
                    if tightest.as_ref().is_none_or(|t| cell.ratio > t.ratio) {
                        tightest = Some(cell);
                    }
                }
            };
            for p in sieve.primes_up_to(x_max) {
                while let Some(&&x) = snap.peek() {
                    if p > x {
                        flush(x, &counts, &mut cells);
                        snap.next();
                    } else {
                        break;
                    }
                }
                if snap.peek().is_none() {
                    break;
                }
                counts[(p % q) as usize] += 1;
            }
            for &x in snap {
                flush(x, &counts, &mut cells);
            }
            (cells, violations, tightest)
        })
        .collect();
    let mut report = BtGridReport {
        q_max,
        x_max,
        cells_checked: 0,
        violations: Vec::new(),
        max_ratio_cell: None,
    };
    for (cells, violations, tightest) in per_q {
        report.cells_checked += cells;
        report.violations.extend(violations);
        if let Some(t) = tightest {
            if report.max_ratio_cell.as_ref().is_none_or(|m| t.ratio > m.ratio) {
                report.max_ratio_cell = Some(t);
            }
        }
    }
    Ok(report)
}

/// Which Frobenius elements to count. Vectors are exponent coordinates in
/// the extension's character basis; a kernel vector `w` selects the
/// index-p subgroup {v : w.v = 0}, whose members are exactly the primes
/// splitting in the degree-p subfield attached to `w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrobeniusTarget {
    Identity,
    NotIdentity,
    Element(Vec<u64>),
    NotElement(Vec<u64>),
    InKernel(Vec<u64>),
    NotInKernel(Vec<u64>),
}

fn target_matches(target: &FrobeniusTarget, v: &[u64], p: u64) -> bool {
    let dot = |w: &[u64]| {
        w.iter().zip(v).map(|(&a, &b)| arith::mul_mod(a % p, b, p)).sum::<u64>() % p == 0
    };
    let eq = |w: &[u64]| w.iter().zip(v).all(|(&a, &b)| a % p == b);
    match target {
        FrobeniusTarget::Identity => v.iter().all(|&c| c == 0),
        FrobeniusTarget::NotIdentity => v.iter().any(|&c| c != 0),
        FrobeniusTarget::Element(w) => eq(w),
        FrobeniusTarget::NotElement(w) => !eq(w),
        FrobeniusTarget::InKernel(w) => dot(w),
        FrobeniusTarget::NotInKernel(w) => !dot(w),
    }
}

/// Counts unramified primes q <= x whose Frobenius lies in the target
/// set. Ramified primes (the divisors of the conductor) are excluded from
/// every target.
pub fn pi_frobenius(
    sieve: &PrimeSieve,
    ext: &AbelianExtension,
    x: u64,
    target: &FrobeniusTarget,
) -> Result<u64, CountError> {
    sieve.check_range(x)?;
    let r = ext.rank() as usize;
    match target {
        FrobeniusTarget::Element(w)
        | FrobeniusTarget::NotElement(w)
        | FrobeniusTarget::InKernel(w)
        | FrobeniusTarget::NotInKernel(w)
            if w.len() != r =>
        {
            return Err(CountError::WrongShape(format!(
                "target vector has length {} but the extension has rank {r}",
                w.len()
            )));
        }
        _ => {}
    }
    let mut count = 0u64;
    for p in sieve.primes_up_to(x) {
        if let Some(v) = ext.frobenius_vector(p) {
            if target_matches(target, &v, ext.p()) {
                count += 1;
            }
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Good,
    Bad,
}

/// Audit record for the split-prime classifier: a field is BAD for
/// (theta, c) when the number of completely split primes up to
/// Y = Disc^theta is at most c Y / ln Y.
#[derive(Debug, Clone, Serialize)]
pub struct GoodBadVerdict {
    pub field: String,
    pub disc: String,
    pub theta: f64,
    pub c: f64,
    /// Unrounded Y = Disc^theta; sieve queries use the floor.
    pub y: f64,
    pub y_floor: u64,
    pub split_count: u64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Default classifier constant; theorems only require it to be a small
/// fixed positive number, so it is a parameter everywhere.
pub const DEFAULT_GOODBAD_C: f64 = 0.05;

pub fn classify_good_bad(
    sieve: &PrimeSieve,
    field: &AbelianExtension,
    theta: f64,
    c: f64,
) -> Result<GoodBadVerdict, CountError> {
    if !(theta >= 0.0) || !(c >= 0.0) {
        return Err(CountError::WrongShape(
            "classifier parameters theta and c must be nonnegative".to_owned(),
        ));
    }
    let disc = field.discriminant();
    let disc_f = disc.to_f64().unwrap_or(f64::INFINITY);
    let y = disc_f.powf(theta);
    let y_floor = y.floor() as u64;
    sieve.check_range(y_floor)?;
    let split_count = pi_frobenius(sieve, field, y_floor, &FrobeniusTarget::Identity)?;
    // y >= 1 always (|Disc| >= 3, theta >= 0); at y = 1 the threshold
    // diverges and the field is vacuously BAD
    let threshold = if c == 0.0 { 0.0 } else { c * y / y.ln() };
    let verdict = if (split_count as f64) <= threshold { Verdict::Bad } else { Verdict::Good };
    Ok(GoodBadVerdict {
        field: field.encode(),
        disc: disc.to_string(),
        theta,
        c,
        y,
        y_floor,
        split_count,
        threshold,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SubfieldTally {
    pub label: String,
    pub description: String,
    pub splits: u64,
}

/// Split tallies for primes with prescribed nonsplit behavior in a
/// distinguished subfield, together with the structural claim they must
/// satisfy (`violations` counts primes breaking it, and must be 0).
#[derive(Debug, Clone, Serialize)]
pub struct PigeonholeReport {
    pub shape: String,
    pub x: u64,
    /// The distinguished subfield: smallest-discriminant degree-p
    /// subfield (rank 2) or quartic subfield (rank 3).
    pub base: String,
    pub inert_count: u64,
    pub required_splits_per_prime: u64,
    pub tallies: Vec<SubfieldTally>,
    pub violations: u64,
    /// Label of the tally receiving the largest share: the witness the
    /// pigeonhole argument extracts.
    pub max_share: Option<String>,
}

/// Rank 2 (any p): for every unramified prime not splitting in the
/// smallest-discriminant degree-p subfield K1, checks it splits in
/// exactly one of the remaining subfields. Rank 3 with p = 2: for every
/// unramified prime not splitting completely in the smallest quartic
/// subfield M1, checks it splits in exactly two of the four quadratic
/// subfields outside M1.
pub fn pigeonhole_report(
    sieve: &PrimeSieve,
    ext: &AbelianExtension,
    x: u64,
) -> Result<PigeonholeReport, CountError> {
    sieve.check_range(x)?;
    match (ext.rank(), ext.p()) {
        (2, _) => pigeonhole_rank2(sieve, ext, x),
        (3, 2) => pigeonhole_rank3(sieve, ext, x),
        (r, p) => Err(CountError::WrongShape(format!(
            "pigeonhole check needs rank 2 (any p) or rank 3 with p = 2, got p = {p}, r = {r}"
        ))),
    }
}

fn pigeonhole_rank2(
    sieve: &PrimeSieve,
    ext: &AbelianExtension,
    x: u64,
) -> Result<PigeonholeReport, CountError> {
    let mut subfields = ext
        .degree_p_subfields()
        .map_err(|e| CountError::WrongShape(e.to_string()))?;
    subfields.sort_by_key(|k| (k.discriminant(), k.encode()));
    let mut splits = vec![0u64; subfields.len()];
    let mut inert_count = 0u64;
    let mut violations = 0u64;
    for q in sieve.primes_up_to(x) {
        if ext.frobenius_vector(q).is_none_or(|v| v.iter().all(|&c| c == 0)) {
            continue;
        }
        let split_in: Vec<usize> = subfields
            .iter()
            .enumerate()
            .filter(|(_, k)| k.frobenius_vector(q) == Some(vec![0]))
            .map(|(i, _)| i)
            .collect();
        if split_in.len() != 1 {
            violations += 1;
            continue;
        }
        if subfields[0].frobenius_vector(q) != Some(vec![0]) {
            inert_count += 1;
            splits[split_in[0]] += 1;
        }
    }
    debug_assert_eq!(inert_count, splits.iter().skip(1).sum::<u64>());
    let tallies: Vec<SubfieldTally> = subfields
        .iter()
        .zip(&splits)
        .enumerate()
        .map(|(i, (k, &s))| SubfieldTally {
            label: format!("K{}", i + 1),
            description: format!("{} disc {}", k.encode(), k.discriminant()),
            splits: s,
        })
        .collect();
    let max_share = tallies
        .iter()
        .skip(1)
        .max_by_key(|t| t.splits)
        .map(|t| t.label.clone());
    Ok(PigeonholeReport {
        shape: "rank-2".to_owned(),
        x,
        base: tallies[0].description.clone(),
        inert_count,
        required_splits_per_prime: 1,
        tallies,
        violations,
        max_share,
    })
}

fn pigeonhole_rank3(
    sieve: &PrimeSieve,
    ext: &AbelianExtension,
    x: u64,
) -> Result<PigeonholeReport, CountError> {
    let frame = ext
        .minimal_quartic_frame()
        .ok_or_else(|| CountError::WrongShape("rank-3 check needs p = 2".to_owned()))?;
    let inside = frame.inside;
    let labeled: Vec<(String, i64)> = std::iter::once(("Km".to_owned(), frame.outside_min))
        .chain((0..3).map(|i| (format!("K'{}", i + 1), frame.partners[i])))
        .collect();
    let f = ext.conductor();
    let mut splits = vec![0u64; 4];
    let mut inert_count = 0u64;
    let mut violations = 0u64;
    for q in sieve.primes_up_to(x) {
        if f % q == 0 {
            continue;
        }
        let split_in_m1 = inside.iter().all(|&d| arith::kronecker(d, q as i64) == 1);
        if split_in_m1 {
            continue;
        }
        inert_count += 1;
        let where_split: Vec<usize> = labeled
            .iter()
            .enumerate()
            .filter(|(_, (_, d))| arith::kronecker(*d, q as i64) == 1)
            .map(|(i, _)| i)
            .collect();
        if where_split.len() != 2 {
            violations += 1;
            continue;
        }
        for i in where_split {
            splits[i] += 1;
        }
    }
    let tallies: Vec<SubfieldTally> = labeled
        .iter()
        .zip(&splits)
        .map(|((label, d), &s)| SubfieldTally {
            label: label.clone(),
            description: format!("quadratic disc {d}"),
            splits: s,
        })
        .collect();
    let max_share = tallies.iter().max_by_key(|t| t.splits).map(|t| t.label.clone());
    Ok(PigeonholeReport {
        shape: "rank-3".to_owned(),
        x,
        base: format!("quartic with quadratic discs {inside:?}"),
        inert_count,
        required_splits_per_prime: 2,
        tallies,
        violations,
        max_share,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    pub q: u64,
    pub s: f64,
    pub x: u64,
    pub count: u64,
    /// pi(x; q, a) phi(q) ln x / x, near 1 under equidistribution.
    pub density: f64,
    /// density * sqrt(q) / ln q, the shape of the lower-bound statistic
    /// for primes in short progression ranges.
    pub maynard: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub a: u64,
    pub rows: Vec<DensityRow>,
}

/// Report-only density table over the grid x = q^s. No pass/fail: the
/// reference inequalities involve unspecified absolute constants, so this
/// is an observational companion, not a check.
pub fn density_scan(
    sieve: &PrimeSieve,
    moduli: &[u64],
    exponents: &[f64],
    a: u64,
) -> Result<DensityReport, CountError> {
    let mut rows = Vec::new();
    for &q in moduli {
        if q < 2 || arith::gcd(a % q, q) != 1 {
            continue;
        }
        for &s in exponents {
            let x = (q as f64).powf(s).floor() as u64;
            sieve.check_range(x)?;
            let count = pi_progression(sieve, x, q, a)?;
            let lx = (x as f64).ln();
            let density = count as f64 * arith::euler_phi(q) as f64 * lx / x as f64;
            let maynard = density * (q as f64).sqrt() / (q as f64).ln();
            rows.push(DensityRow { q, s, x, count, density, maynard });
        }
    }
    Ok(DensityReport { a, rows })
}
