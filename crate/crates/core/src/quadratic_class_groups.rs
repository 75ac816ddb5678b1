//! Class groups of quadratic fields, computed exactly through binary
//! quadratic forms.
//!
//! For a fundamental discriminant D, the primitive forms ax^2 + bxy + cy^2
//! of discriminant D = b^2 - 4ac, taken up to proper (SL2) equivalence, form
//! a finite abelian group under Gauss composition:
//!
//! - D < 0: positive-definite forms; each class has a unique reduced
//!   representative (|b| <= a <= c, with b >= 0 when |b| = a or a = c), and
//!   the group is the ideal class group of Q(sqrt(D)).
//! - D > 0: indefinite forms; reduced representatives (0 < b < sqrt(D),
//!   sqrt(D) - b < 2|a| < sqrt(D) + b) are grouped into cycles by the
//!   reduction step rho, one cycle per class, and the group is the *narrow*
//!   class group of Q(sqrt(D)). The narrow and ordinary class groups differ
//!   at most by an elementary 2-group, so they agree on odd torsion; this
//!   module therefore refuses even torsion queries for D > 0 instead of
//!   silently answering for the wrong group.
//!
//! The group structure (invariant factors) is obtained by order-counting
//! inside each Sylow subgroup, and the group order is cross-checked against
//! the raw count of reduced forms, which needs no composition at all.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith;

/// Errors for form arithmetic and class-group queries.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormError {
    /// The input has square (or zero) squarefree part, so it defines no
    /// quadratic field.
    #[error("{0} is a perfect square (or zero); no quadratic field attached")]
    PerfectSquare(i64),
    /// The discriminant is not a fundamental discriminant.
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    /// Two forms of different discriminants cannot be composed.
    #[error("discriminant mismatch: {left} vs {right}")]
    DiscMismatch { left: BigInt, right: BigInt },
    /// The requested discriminant exceeds the configured bound.
    #[error("|{disc}| exceeds the class-group bound {bound}")]
    BoundExceeded { disc: i64, bound: u64 },
    /// Torsion for an even modulus over a real field would depend on the
    /// narrow-versus-ordinary distinction, which this module does not decide.
    #[error("even torsion {ell} over the real field of discriminant {disc} is ambiguous (narrow vs ordinary class group)")]
    EvenEllRealField { disc: i64, ell: u64 },
    /// Torsion moduli must exceed 1.
    #[error("torsion modulus must be at least 2, got {0}")]
    InvalidEll(u64),
}

/// A binary quadratic form ax^2 + bxy + cy^2 with arbitrary-precision
/// coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadraticForm {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
}

impl std::fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

impl QuadraticForm {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>, c: impl Into<BigInt>) -> Self {
        QuadraticForm { a: a.into(), b: b.into(), c: c.into() }
    }

    /// b^2 - 4ac.
    pub fn discriminant(&self) -> BigInt {
        &self.b * &self.b - BigInt::from(4) * &self.a * &self.c
    }

    /// gcd(a, b, c) = 1.
    pub fn is_primitive(&self) -> bool {
        self.a.gcd(&self.b).gcd(&self.c).is_one()
    }

    /// The principal form (1, b0, c0) of discriminant `d`, with b0 = 0 or 1
    /// matching the parity of d. This is the identity class.
    pub fn principal(d: i64) -> Self {
        let b0 = d.rem_euclid(2);
        let c0 = (b0 * b0 - d) / 4;
        QuadraticForm::new(1, b0, c0)
    }

    /// The inverse class: (a, -b, c).
    pub fn inverse(&self) -> Self {
        QuadraticForm::new(self.a.clone(), -&self.b, self.c.clone())
    }

    /// Reduced test, for either signature of the discriminant.
    pub fn is_reduced(&self) -> bool {
        let d = self.discriminant();
        if d.is_negative() {
            self.is_reduced_definite()
        } else {
            self.is_reduced_indefinite(&d)
        }
    }

    fn is_reduced_definite(&self) -> bool {
        let abs_b = self.b.abs();
        if !(abs_b <= self.a && self.a <= self.c) {
            return false;
        }
        if (abs_b == self.a || self.a == self.c) && self.b.is_negative() {
            return false;
        }
        true
    }

    /// 0 < b < sqrt(D) and sqrt(D) - b < 2|a| < sqrt(D) + b, checked with
    /// integer squarings only.
    fn is_reduced_indefinite(&self, d: &BigInt) -> bool {
        if !self.b.is_positive() {
            return false;
        }
        if &(&self.b * &self.b) >= d {
            return false;
        }
        let two_abs_a = BigInt::from(2) * self.a.abs();
        let upper = &two_abs_a + &self.b;
        if &(&upper * &upper) <= d {
            return false; // 2|a| + b <= sqrt(D)
        }
        let lower = &two_abs_a - &self.b;
        if lower.is_positive() && &(&lower * &lower) >= d {
            return false; // 2|a| - b >= sqrt(D)
        }
        true
    }

    /// Reduce to the unique reduced representative (D < 0) or to a reduced
    /// form on the cycle of this class (D > 0). The form must be primitive
    /// with nonsquare discriminant.
    pub fn reduce(&self) -> QuadraticForm {
        let d = self.discriminant();
        if d.is_negative() {
            self.reduce_definite()
        } else {
            self.reduce_indefinite(&d)
        }
    }

    fn reduce_definite(&self) -> QuadraticForm {
        assert!(self.a.is_positive(), "definite form must have a > 0, got {self}");
        let d = self.discriminant();
        let mut f = self.clone();
        loop {
            // Normalize b into (-a, a], keeping the discriminant fixed.
            if f.b > f.a || f.b <= -(&f.a) {
                let two_a = BigInt::from(2) * &f.a;
                let mut b = (&f.b + &f.a).mod_floor(&two_a) - &f.a;
                if b == -(&f.a) {
                    b = f.a.clone();
                }
                let c = (&b * &b - &d) / (BigInt::from(4) * &f.a);
                f.b = b;
                f.c = c;
            }
            if f.a > f.c {
                f = QuadraticForm::new(f.c.clone(), -&f.b, f.a.clone());
                continue;
            }
            break;
        }
        if (f.a == f.c || f.b.abs() == f.a) && f.b.is_negative() {
            f.b = -f.b;
        }
        f
    }

    /// One step of the indefinite reduction operator rho. Applied to a
    /// reduced form it yields the next form on the class cycle.
    pub fn rho(&self, d: &BigInt) -> QuadraticForm {
        let c = &self.c;
        let two_abs_c = BigInt::from(2) * c.abs();
        let base = (-&self.b).mod_floor(&two_abs_c);
        let sqrt_d = d.sqrt();
        let r = if &(c * c) > d {
            // |c| > sqrt(D): pick r in (-|c|, |c|].
            if base > c.abs() { base - &two_abs_c } else { base }
        } else {
            // |c| < sqrt(D): pick the unique r in (sqrt(D) - 2|c|, sqrt(D)).
            &sqrt_d - (&sqrt_d - &base).mod_floor(&two_abs_c)
        };
        let new_c = (&r * &r - d) / (BigInt::from(4) * c);
        QuadraticForm::new(c.clone(), r, new_c)
    }

    fn reduce_indefinite(&self, d: &BigInt) -> QuadraticForm {
        let mut f = self.clone();
        for _ in 0..10_000 {
            if f.is_reduced_indefinite(d) {
                return f;
            }
            f = f.rho(d);
        }
        panic!("indefinite reduction did not terminate for {self}");
    }
}

/// Extended gcd: (g, u, v) with g = u*a + v*b, g >= 0.
fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let (mut old_r, mut r) = (a.clone(), b.clone());
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    let (mut old_t, mut t) = (BigInt::zero(), BigInt::one());
    while !r.is_zero() {
        let q = &old_r / &r;
        let next_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = &old_s - &q * &s;
        old_s = std::mem::replace(&mut s, next_s);
        let next_t = &old_t - &q * &t;
        old_t = std::mem::replace(&mut t, next_t);
    }
    if old_r.is_negative() {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Extended gcd of three values: (g, u, v, w) with g = u*a + v*b + w*c.
fn ext_gcd3(a: &BigInt, b: &BigInt, c: &BigInt) -> (BigInt, BigInt, BigInt, BigInt) {
    let (g1, u1, v1) = ext_gcd(a, b);
    let (g, x, w) = ext_gcd(&g1, c);
    (g, &x * &u1, &x * &v1, w)
}

/// Gauss composition of two primitive forms of the same discriminant.
/// The result is reduced: for D < 0 it is the canonical representative of
/// the product class, for D > 0 a reduced form on the product's cycle.
pub fn compose(f1: &QuadraticForm, f2: &QuadraticForm) -> Result<QuadraticForm, FormError> {
    let d = f1.discriminant();
    let d2 = f2.discriminant();
    if d != d2 {
        return Err(FormError::DiscMismatch { left: d, right: d2 });
    }
    assert!(f1.is_primitive() && f2.is_primitive(), "composition needs primitive forms");

    let s = (&f1.b + &f2.b) / BigInt::from(2);
    let n = (&f1.b - &f2.b) / BigInt::from(2);
    let (g, _u, v, w) = ext_gcd3(&f1.a, &f2.a, &s);
    // g divides a2, so a2/g and hence B below are exact integers.
    let a2_over_g = &f2.a / &g;
    debug_assert_eq!(&a2_over_g * &g, f2.a);

    let a3 = &f1.a * &f2.a / (&g * &g);
    let b_raw = &f2.b + BigInt::from(2) * &a2_over_g * (&v * &n - &w * &f2.c);
    let two_a3 = BigInt::from(2) * &a3;
    let mut b3 = b_raw.mod_floor(&two_a3);
    if b3 > a3 {
        b3 -= &two_a3;
    }
    let c3 = (&b3 * &b3 - &d) / (BigInt::from(4) * &a3);
    Ok(QuadraticForm { a: a3, b: b3, c: c3 }.reduce())
}

/// The fundamental discriminant of Q(sqrt(d)): the squarefree kernel d0 of
/// d when d0 = 1 mod 4, and 4*d0 otherwise.
pub fn fundamental_discriminant(d: i64) -> Result<i64, FormError> {
    if d == 0 {
        return Err(FormError::PerfectSquare(0));
    }
    let kernel = arith::squarefree_kernel(d.unsigned_abs()) as i64;
    if d > 0 && kernel == 1 {
        return Err(FormError::PerfectSquare(d));
    }
    let d0 = if d < 0 { -kernel } else { kernel };
    if d0.rem_euclid(4) == 1 {
        Ok(d0)
    } else {
        Ok(4 * d0)
    }
}

/// Group law on fundamental discriminants: the discriminant of the third
/// quadratic subfield of the biquadratic field Q(sqrt(d1), sqrt(d2)).
/// Fails only when d1 = d2 (the product is a square).
pub fn compose_discriminants(d1: i64, d2: i64) -> Result<i64, FormError> {
    fundamental_discriminant(d1 * d2)
}

/// Whether `d` is a fundamental discriminant.
pub fn is_fundamental(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    let squarefree = |n: i64| arith::squarefree_kernel(n.unsigned_abs()) == n.unsigned_abs();
    match d.rem_euclid(4) {
        1 => squarefree(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && squarefree(m)
        }
        _ => false,
    }
}

/// Group structure of a form class group as invariant factors
/// n1 | n2 | ... with product the (narrow, when D > 0) class number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGroupStructure {
    #[serde(rename = "D")]
    pub disc: i64,
    pub narrow: bool,
    #[serde(rename = "factors")]
    pub invariant_factors: Vec<u64>,
}

impl ClassGroupStructure {
    /// The class number (narrow class number when `narrow` is set).
    pub fn order(&self) -> u64 {
        self.invariant_factors.iter().product()
    }

    /// |Cl[ell]| = prod gcd(n_i, ell) over the invariant factors. The
    /// narrow-vs-ordinary caveat for even ell is enforced by callers.
    pub fn torsion(&self, ell: u64) -> u64 {
        self.invariant_factors.iter().map(|&n| arith::gcd(n, ell)).product()
    }
}

/// All reduced primitive definite forms of discriminant `d < 0`. One form
/// per class; the count is the class number. This enumeration is the
/// composition-free oracle for group orders.
pub fn reduced_definite_forms(d: i64) -> Vec<QuadraticForm> {
    assert!(d < 0, "definite enumeration needs d < 0");
    let mut out = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= -d {
        for b in (-a + 1)..=a {
            if (b - d).rem_euclid(2) != 0 {
                continue;
            }
            let t = b * b - d;
            if t % (4 * a) != 0 {
                continue;
            }
            let c = t / (4 * a);
            if c < a {
                continue;
            }
            if a == c && b < 0 {
                continue;
            }
            let g = arith::gcd(arith::gcd(a as u64, b.unsigned_abs()), c as u64);
            if g != 1 {
                continue;
            }
            out.push(QuadraticForm::new(a, b, c));
        }
        a += 1;
    }
    out.sort();
    out
}

/// All reduced primitive indefinite forms of nonsquare discriminant `d > 0`.
/// These split into rho-cycles, one cycle per narrow class.
pub fn reduced_indefinite_forms(d: i64) -> Vec<QuadraticForm> {
    assert!(d > 0, "indefinite enumeration needs d > 0");
    let sqrt_d = (d as u64).isqrt() as i64;
    let mut out = Vec::new();
    for b in 1..=sqrt_d {
        if (d - b).rem_euclid(2) != 0 {
            continue;
        }
        let n = (d - b * b) / 4;
        let mut aa = 1i64;
        while aa * aa <= n {
            if n % aa == 0 {
                for abs_a in [aa, n / aa] {
                    // sqrt(D) - b < 2|a| < sqrt(D) + b, via integer squares
                    let up = 2 * abs_a + b;
                    let low = 2 * abs_a - b;
                    if up * up <= d || (low > 0 && low * low >= d) {
                        continue;
                    }
                    let g = arith::gcd(
                        arith::gcd(abs_a as u64, b as u64),
                        (n / abs_a) as u64,
                    );
                    if g != 1 {
                        continue;
                    }
                    out.push(QuadraticForm::new(abs_a, b, -(n / abs_a)));
                    out.push(QuadraticForm::new(-abs_a, b, n / abs_a));
                    if aa == n / aa {
                        break;
                    }
                }
            }
            aa += 1;
        }
    }
    out.sort();
    out.dedup();
    out
}

/// A form class group with composition made available through class ids.
/// Ids are assigned in sorted order of canonical representatives, so they
/// are deterministic for a given discriminant.
pub struct FormClassGroup {
    pub disc: i64,
    reps: Vec<QuadraticForm>,
    index: HashMap<QuadraticForm, usize>,
    identity: usize,
}

impl FormClassGroup {
    /// Build the class group for a fundamental discriminant.
    pub fn build(d: i64) -> Result<FormClassGroup, FormError> {
        if !is_fundamental(d) {
            return Err(FormError::NotFundamental(d));
        }
        let mut index = HashMap::new();
        let mut reps: Vec<QuadraticForm>;
        if d < 0 {
            reps = reduced_definite_forms(d);
            for (i, f) in reps.iter().enumerate() {
                index.insert(f.clone(), i);
            }
        } else {
            // Group the reduced forms into rho-cycles; the canonical
            // representative of a class is the least form on its cycle.
            let all = reduced_indefinite_forms(d);
            let big_d = BigInt::from(d);
            let mut seen: HashMap<&QuadraticForm, bool> =
                all.iter().map(|f| (f, false)).collect();
            let mut cycles: Vec<(QuadraticForm, Vec<QuadraticForm>)> = Vec::new();
            for start in &all {
                if seen[start] {
                    continue;
                }
                let mut cycle = Vec::new();
                let mut f = start.clone();
                loop {
                    *seen.get_mut(&f).expect("rho left the reduced set") = true;
                    cycle.push(f.clone());
                    f = f.rho(&big_d);
                    if &f == start {
                        break;
                    }
                }
                let canon = cycle.iter().min().expect("nonempty cycle").clone();
                cycles.push((canon, cycle));
            }
            cycles.sort_by(|x, y| x.0.cmp(&y.0));
            reps = Vec::with_capacity(cycles.len());
            for (i, (canon, cycle)) in cycles.into_iter().enumerate() {
                for f in cycle {
                    index.insert(f, i);
                }
                reps.push(canon);
            }
        }
        let identity = *index
            .get(&QuadraticForm::principal(d).reduce())
            .expect("principal class missing from enumeration");
        Ok(FormClassGroup { disc: d, reps, index, identity })
    }

    /// Number of classes (narrow class number when disc > 0).
    pub fn order(&self) -> u64 {
        self.reps.len() as u64
    }

    pub fn identity_id(&self) -> usize {
        self.identity
    }

    pub fn representative(&self, id: usize) -> &QuadraticForm {
        &self.reps[id]
    }

    /// Class id of a form of this discriminant.
    pub fn class_of(&self, f: &QuadraticForm) -> usize {
        *self
            .index
            .get(&f.reduce())
            .expect("form of foreign discriminant or broken reduction")
    }

    pub fn compose_ids(&self, i: usize, j: usize) -> usize {
        let f = compose(&self.reps[i], &self.reps[j]).expect("same discriminant");
        self.class_of(&f)
    }

    pub fn pow_id(&self, id: usize, e: u64) -> usize {
        let mut acc = self.identity;
        let mut base = id;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.compose_ids(acc, base);
            }
            base = self.compose_ids(base, base);
            e >>= 1;
        }
        acc
    }

    /// Invariant factors n1 | n2 | ..., computed per Sylow subgroup by
    /// counting solutions of y^(q^j) = e among q-power torsion elements.
    pub fn invariant_factors(&self) -> Vec<u64> {
        let h = self.order();
        if h == 1 {
            return Vec::new();
        }
        // partitions[q] = multiplicities lambda_1 >= lambda_2 >= ... of q
        let mut partitions: Vec<(u64, Vec<u32>)> = Vec::new();
        for (q, e) in arith::factorize(h) {
            let cofactor = h / q.pow(e);
            let mut sylow: Vec<usize> = (0..self.reps.len())
                .map(|id| self.pow_id(id, cofactor))
                .collect();
            sylow.sort_unstable();
            sylow.dedup();
            assert_eq!(
                sylow.len() as u64,
                q.pow(e),
                "Sylow {q}-subgroup size mismatch for disc {}",
                self.disc
            );
            // counts[j] = #{y in Sylow : y^(q^j) = identity}, as exponents of q
            let mut prev_log = 0u32;
            let mut parts_at_least: Vec<u32> = Vec::new();
            for j in 1..=e {
                let killed = sylow
                    .iter()
                    .filter(|&&y| self.pow_id(y, q.pow(j)) == self.identity)
                    .count() as u64;
                let log = log_exact(killed, q);
                parts_at_least.push(log - prev_log);
                prev_log = log;
                if killed == q.pow(e) {
                    break;
                }
            }
            // parts_at_least[j-1] = number of parts >= j; unfold to parts
            let max_parts = parts_at_least[0];
            let parts: Vec<u32> = (1..=max_parts)
                .map(|i| parts_at_least.iter().filter(|&&m| m >= i).count() as u32)
                .collect();
            partitions.push((q, parts));
        }
        let width = partitions.iter().map(|(_, p)| p.len()).max().unwrap_or(0);
        let mut factors: Vec<u64> = (0..width)
            .map(|k| {
                partitions
                    .iter()
                    .map(|(q, parts)| parts.get(k).map_or(1, |&lam| q.pow(lam)))
                    .product()
            })
            .collect();
        factors.reverse(); // ascending: n1 | n2 | ...
        assert_eq!(
            factors.iter().product::<u64>(),
            h,
            "invariant factors do not multiply to the class number for disc {}",
            self.disc
        );
        factors
    }
}

fn log_exact(n: u64, q: u64) -> u32 {
    let mut n = n;
    let mut log = 0;
    while n > 1 {
        assert_eq!(n % q, 0, "{n} is not a power of {q}");
        n /= q;
        log += 1;
    }
    log
}

/// Class group of the quadratic field with fundamental discriminant `d`,
/// as invariant factors. For d > 0 this is the narrow class group.
pub fn class_group(d: i64, bound: u64) -> Result<ClassGroupStructure, FormError> {
    if d.unsigned_abs() > bound {
        return Err(FormError::BoundExceeded { disc: d, bound });
    }
    let group = FormClassGroup::build(d)?;
    Ok(ClassGroupStructure {
        disc: d,
        narrow: d > 0,
        invariant_factors: group.invariant_factors(),
    })
}

/// |Cl[ell]| for the quadratic field of fundamental discriminant `d`.
/// For d > 0 the narrow and ordinary groups agree on odd torsion; even
/// `ell` is refused there rather than answered for the wrong group.
pub fn ell_torsion(d: i64, ell: u64, bound: u64) -> Result<u64, FormError> {
    check_torsion_query(d, ell)?;
    Ok(class_group(d, bound)?.torsion(ell))
}

fn check_torsion_query(d: i64, ell: u64) -> Result<(), FormError> {
    if ell < 2 {
        return Err(FormError::InvalidEll(ell));
    }
    if d > 0 && ell % 2 == 0 {
        return Err(FormError::EvenEllRealField { disc: d, ell });
    }
    Ok(())
}

/// Errors from the persistent class-group cache.
#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt cache record at {path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

/// Append-only JSON-lines cache of class-group structures, safe for
/// concurrent readers with serialized writes. Records look like
/// `{"D":-23,"narrow":false,"factors":[3]}`.
pub struct ClassGroupCache {
    inner: Mutex<CacheInner>,
}

struct CacheInner {
    map: HashMap<i64, ClassGroupStructure>,
    file: Option<(PathBuf, File)>,
}

impl ClassGroupCache {
    /// Purely in-memory cache (no persistence).
    pub fn in_memory() -> Self {
        ClassGroupCache {
            inner: Mutex::new(CacheInner { map: HashMap::new(), file: None }),
        }
    }

    /// Open or create a JSONL cache file and load every record in it.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let io_err = |source| CacheError::Io { path: path.to_path_buf(), source };
        let mut map = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io_err)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(|source| CacheError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: ClassGroupStructure =
                    serde_json::from_str(&line).map_err(|e| CacheError::Corrupt {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                map.insert(record.disc, record);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| CacheError::Io { path: path.to_path_buf(), source })?;
        Ok(ClassGroupCache {
            inner: Mutex::new(CacheInner {
                map,
                file: Some((path.to_path_buf(), file)),
            }),
        })
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache poisoned").map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Structure for `d`, computed on a miss and persisted. Inserts are
    /// idempotent: recomputing a cached discriminant never rewrites it.
    pub fn structure(&self, d: i64, bound: u64) -> Result<ClassGroupStructure, FormError> {
        if let Some(hit) = self.inner.lock().expect("cache poisoned").map.get(&d) {
            return Ok(hit.clone());
        }
        let computed = class_group(d, bound)?;
        let mut inner = self.inner.lock().expect("cache poisoned");
        if !inner.map.contains_key(&d) {
            if let Some((path, file)) = inner.file.as_mut() {
                let line = serde_json::to_string(&computed).expect("serializable record");
                if let Err(source) = writeln!(file, "{line}") {
                    let path = path.clone();
                    drop(inner);
                    // Surface the write failure; the computed value is still correct,
                    // but a silently non-persistent cache would break reproducibility.
                    panic!("{}", CacheError::Io { path, source });
                }
            }
            inner.map.insert(d, computed.clone());
        }
        Ok(computed)
    }

    /// Torsion through the cache, with the same even-ell guard as
    /// [`ell_torsion`].
    pub fn torsion(&self, d: i64, ell: u64, bound: u64) -> Result<u64, FormError> {
        check_torsion_query(d, ell)?;
        Ok(self.structure(d, bound)?.torsion(ell))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cg(d: i64) -> ClassGroupStructure {
        class_group(d, 1_000_000).expect("valid discriminant")
    }

    #[test]
    fn fundamental_discriminant_cases() {
        assert_eq!(fundamental_discriminant(5), Ok(5));
        assert_eq!(fundamental_discriminant(-1), Ok(-4));
        assert_eq!(fundamental_discriminant(12), Ok(12));
        assert_eq!(fundamental_discriminant(8), Ok(8));
        assert_eq!(fundamental_discriminant(18), Ok(8));
        assert_eq!(fundamental_discriminant(-45), Ok(-20));
        assert_eq!(fundamental_discriminant(-23), Ok(-23));
        assert_eq!(fundamental_discriminant(49), Err(FormError::PerfectSquare(49)));
        assert_eq!(fundamental_discriminant(0), Err(FormError::PerfectSquare(0)));
    }

    #[test]
    fn is_fundamental_matches_definition() {
        let known = [-3, -4, -7, -8, -11, -15, -19, -20, -23, 5, 8, 12, 13, 40, 60];
        for d in known {
            assert!(is_fundamental(d), "{d} should be fundamental");
        }
        for d in [-1, 0, 1, 2, 3, 4, -9, -12, 16, 25, 45] {
            assert!(!is_fundamental(d), "{d} should not be fundamental");
        }
    }

    #[test]
    fn definite_reduction_fixed_points_and_steps() {
        let f = QuadraticForm::new(1, 1, 6);
        assert!(f.is_reduced());
        assert_eq!(f.reduce(), f);
        let g = QuadraticForm::new(6, 1, 1);
        assert_eq!(g.reduce(), f);
    }

    #[test]
    fn indefinite_reduction_lands_on_cycle() {
        let f = QuadraticForm::new(3, 2, -3);
        assert_eq!(f.discriminant(), BigInt::from(40));
        let r = f.reduce();
        assert!(r.is_reduced());
        assert_eq!(r.discriminant(), BigInt::from(40));
    }

    #[test]
    fn composition_identity_inverse_and_square() {
        let id = QuadraticForm::principal(-23);
        let f = QuadraticForm::new(2, 1, 3);
        assert_eq!(compose(&id, &f).unwrap(), f);
        assert_eq!(compose(&f, &f.inverse()).unwrap(), id);
        assert_eq!(compose(&f, &f).unwrap(), QuadraticForm::new(2, -1, 3));
    }

    #[test]
    fn composition_rejects_mixed_discriminants() {
        let f = QuadraticForm::principal(-23);
        let g = QuadraticForm::principal(-15);
        assert!(matches!(compose(&f, &g), Err(FormError::DiscMismatch { .. })));
    }

    #[test]
    fn small_class_groups_match_known_structure() {
        assert_eq!(cg(-23).invariant_factors, vec![3]);
        assert_eq!(cg(-4).invariant_factors, Vec::<u64>::new());
        assert_eq!(cg(-15).invariant_factors, vec![2]);
        assert_eq!(cg(-115).invariant_factors, vec![2]);
        // Narrow class groups of real fields: cycle counting.
        let d40 = cg(40);
        assert!(d40.narrow);
        assert_eq!(d40.invariant_factors, vec![2]);
        assert_eq!(cg(229).invariant_factors, vec![3]);
        assert_eq!(cg(60).invariant_factors, vec![2, 2]);
    }

    #[test]
    fn torsion_counts_follow_gcd_rule() {
        assert_eq!(ell_torsion(-23, 3, 1000), Ok(3));
        assert_eq!(ell_torsion(-23, 5, 1000), Ok(1));
        assert_eq!(ell_torsion(-4, 9, 1000), Ok(1));
        assert_eq!(ell_torsion(40, 3, 1000), Ok(1));
        assert_eq!(
            ell_torsion(40, 2, 1000),
            Err(FormError::EvenEllRealField { disc: 40, ell: 2 })
        );
        assert_eq!(ell_torsion(-23, 1, 1000), Err(FormError::InvalidEll(1)));
        assert_eq!(
            ell_torsion(-23, 3, 10),
            Err(FormError::BoundExceeded { disc: -23, bound: 10 })
        );
    }

    #[test]
    fn torsion_multiplicative_over_coprime_moduli() {
        for d in [-23, -455, -759, -1003] {
            if !is_fundamental(d) {
                continue;
            }
            let s = cg(d);
            for (l1, l2) in [(3u64, 5u64), (3, 7), (5, 9), (3, 25)] {
                assert_eq!(
                    s.torsion(l1 * l2),
                    s.torsion(l1) * s.torsion(l2),
                    "d={d} l1={l1} l2={l2}"
                );
            }
        }
    }

    #[test]
    fn genus_theory_two_rank_for_definite_range() {
        for d in (-1000..0).filter(|&d| is_fundamental(d)) {
            let s = cg(d);
            let even = s.invariant_factors.iter().filter(|n| *n % 2 == 0).count();
            let omega = arith::factorize(d.unsigned_abs()).len();
            assert_eq!(even, omega - 1, "2-rank mismatch at d={d}: {:?}", s.invariant_factors);
        }
    }

    #[test]
    fn order_matches_reduced_form_count_on_sample() {
        for d in (-500..0).filter(|&d| is_fundamental(d)) {
            let forms = reduced_definite_forms(d);
            assert_eq!(cg(d).order(), forms.len() as u64, "d={d}");
        }
    }

    #[test]
    fn cache_round_trips_and_detects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = ClassGroupCache::open(&path).unwrap();
        assert_eq!(cache.torsion(-23, 3, 1000).unwrap(), 3);
        assert_eq!(cache.structure(-15, 1000).unwrap().invariant_factors, vec![2]);
        drop(cache);

        let reopened = ClassGroupCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 2);
        assert_eq!(reopened.torsion(-23, 3, 1000).unwrap(), 3);
        drop(reopened);

        std::fs::write(&path, "{\"D\":-23,\"narrow\":false").unwrap();
        assert!(matches!(
            ClassGroupCache::open(&path),
            Err(CacheError::Corrupt { line: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn class_composition_is_commutative_and_associative(
            d_pick in 0usize..4,
            i in 0usize..20,
            j in 0usize..20,
            k in 0usize..20,
        ) {
            let d = [-23i64, -47, -71, -2383][d_pick];
            let g = FormClassGroup::build(d).unwrap();
            let h = g.order() as usize;
            let (i, j, k) = (i % h, j % h, k % h);
            prop_assert_eq!(g.compose_ids(i, j), g.compose_ids(j, i));
            prop_assert_eq!(
                g.compose_ids(g.compose_ids(i, j), k),
                g.compose_ids(i, g.compose_ids(j, k))
            );
        }

        #[test]
        fn every_class_has_an_inverse(d_pick in 0usize..3, i in 0usize..30) {
            let d = [-23i64, -71, 1345][d_pick];
            let g = FormClassGroup::build(d).unwrap();
            let i = i % g.order() as usize;
            let inv = g.class_of(&g.representative(i).inverse());
            prop_assert_eq!(g.compose_ids(i, inv), g.identity_id());
        }
    }
}
