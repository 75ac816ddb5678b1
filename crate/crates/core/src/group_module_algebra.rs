//! Brute-force verification of the idempotent decomposition of modules
//! over (Z/lZ)[A] for A = (Z/pZ)^r with gcd(l, p) = 1.
//!
//! A module is given concretely: the free module (Z/lZ)^n together with r
//! commuting n x n action matrices of multiplicative order dividing p, one
//! per generator of A. Since p is invertible mod l, every index-p subgroup
//! A_i of A (a hyperplane) yields an idempotent
//!
//!   e_i = (1/|A_i|) * sum of the actions of the elements of A_i,
//!
//! and when the coinvariants M_A = M / (sum of images of (action - 1)) are
//! trivial, M splits as the direct sum of the images e_i M, so that
//! |M| = prod_i |e_i M|. This module checks that splitting exhaustively on
//! small dimensions and by seeded random sampling beyond, independent of
//! any number-field input.
//!
//! Orders of submodules are counted by additive closure, which works for
//! any modulus l; ranks are reported only when l is prime.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{arith, linalg};

/// Dense square matrix over Z/lZ.
pub type Matrix = Vec<Vec<u64>>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModuleError {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),
    #[error("group order parameter {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {ell} shares a factor with group order {p}")]
    NotCoprime { ell: u64, p: u64 },
    #[error("rank must be at least 1")]
    InvalidRank,
    #[error("expected {expected} square action matrices of equal size, got a {found_rows}x{found_cols} entry at position {index}")]
    DimensionMismatch { expected: usize, index: usize, found_rows: usize, found_cols: usize },
    #[error("action matrices {i} and {j} do not commute")]
    NotCommuting { i: usize, j: usize },
    #[error("action matrix {index} does not have order dividing {p}")]
    WrongOrder { index: usize, p: u64 },
    #[error("module is not faithful: coinvariants have order {coinvariant_order}")]
    NotFaithful { coinvariant_order: u64 },
    #[error("verification needs about {needed} candidates but the budget is {budget} and sampling is unavailable")]
    BudgetExceeded { needed: u128, budget: u64 },
}

pub fn identity_matrix(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect()
}

fn mat_mul(a: &Matrix, b: &Matrix, ell: u64) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![0u64; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..n {
                out[i][j] = (out[i][j] + arith::mul_mod(a[i][k], b[k][j], ell)) % ell;
            }
        }
    }
    out
}

fn mat_pow(m: &Matrix, e: u64, ell: u64) -> Matrix {
    let mut acc = identity_matrix(m.len());
    let mut base = m.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = mat_mul(&acc, &base, ell);
        }
        base = mat_mul(&base, &base, ell);
        e >>= 1;
    }
    acc
}

fn mat_add(a: &Matrix, b: &Matrix, ell: u64) -> Matrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(&x, &y)| (x + y) % ell).collect())
        .collect()
}

fn mat_scale(m: &Matrix, s: u64, ell: u64) -> Matrix {
    m.iter()
        .map(|row| row.iter().map(|&x| arith::mul_mod(x, s, ell)).collect())
        .collect()
}

/// Gauss-Jordan inverse over Z/lZ for prime l.
fn mat_inverse_prime(m: &Matrix, ell: u64) -> Option<Matrix> {
    let n = m.len();
    let mut a: Matrix = m.iter().map(|r| r.iter().map(|&x| x % ell).collect()).collect();
    let mut inv = identity_matrix(n);
    for col in 0..n {
        let pivot = (col..n).find(|&i| a[i][col] != 0)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = arith::inv_mod(a[col][col], ell).expect("nonzero mod prime");
        for j in 0..n {
            a[col][j] = arith::mul_mod(a[col][j], scale, ell);
            inv[col][j] = arith::mul_mod(inv[col][j], scale, ell);
        }
        for i in 0..n {
            if i != col && a[i][col] != 0 {
                let f = a[i][col];
                for j in 0..n {
                    let s1 = arith::mul_mod(f, a[col][j], ell);
                    a[i][j] = (a[i][j] + ell - s1) % ell;
                    let s2 = arith::mul_mod(f, inv[col][j], ell);
                    inv[i][j] = (inv[i][j] + ell - s2) % ell;
                }
            }
        }
    }
    Some(inv)
}

/// Order of the additive subgroup of (Z/lZ)^n generated by `gens`.
fn additive_closure_order(gens: &[Vec<u64>], n: usize, ell: u64) -> u64 {
    let zero = vec![0u64; n];
    let mut set: HashSet<Vec<u64>> = HashSet::from([zero.clone()]);
    let mut frontier = vec![zero];
    while let Some(v) = frontier.pop() {
        for g in gens {
            let w: Vec<u64> = v.iter().zip(g).map(|(&a, &b)| (a + b) % ell).collect();
            if set.insert(w.clone()) {
                frontier.push(w);
            }
        }
    }
    set.len() as u64
}

/// A projector attached to an index-p subgroup of A: the normalized sum of
/// the actions of the subgroup's elements.
#[derive(Debug, Clone)]
pub struct Idempotent {
    /// Normal vector in F_p^r cutting out the subgroup {a : normal . a = 0},
    /// normalized so its first nonzero entry is 1.
    pub normal: Vec<u64>,
    pub matrix: Matrix,
}

/// Image of I_A M = sum of the images of (action - 1), and the coinvariant
/// quotient M_A = M / I_A M. Ranks are available only for prime moduli.
#[derive(Debug, Clone)]
pub struct Coinvariants {
    pub image_generators: Vec<Vec<u64>>,
    pub image_order: u64,
    pub coinvariant_order: u64,
    pub image_rank: Option<usize>,
    /// The module is faithful (in the sense that the decomposition is an
    /// equality) exactly when this is trivial.
    pub faithful: bool,
}

/// One summand of the decomposition: the idempotent and the size of its
/// image.
#[derive(Debug, Clone)]
pub struct DecompositionPart {
    pub idempotent: Idempotent,
    pub image_order: u64,
    pub image_rank: Option<usize>,
}

/// A concrete (Z/lZ)[(Z/pZ)^r]-module: the free module of the given
/// dimension with one action matrix per group generator.
#[derive(Debug, Clone)]
pub struct GroupRingModule {
    ell: u64,
    p: u64,
    r: u32,
    dim: usize,
    actions: Vec<Matrix>,
}

impl GroupRingModule {
    pub fn new(ell: u64, p: u64, r: u32, actions: Vec<Matrix>) -> Result<Self, ModuleError> {
        if ell < 2 {
            return Err(ModuleError::InvalidModulus(ell));
        }
        if arith::factorize(p) != vec![(p, 1)] {
            return Err(ModuleError::NotPrime(p));
        }
        if arith::gcd(ell, p) != 1 {
            return Err(ModuleError::NotCoprime { ell, p });
        }
        if r == 0 {
            return Err(ModuleError::InvalidRank);
        }
        let dim = actions.first().map_or(0, Vec::len);
        if actions.len() != r as usize || dim == 0 {
            return Err(ModuleError::DimensionMismatch {
                expected: r as usize,
                index: actions.len(),
                found_rows: dim,
                found_cols: dim,
            });
        }
        for (index, m) in actions.iter().enumerate() {
            if m.len() != dim || m.iter().any(|row| row.len() != dim) {
                return Err(ModuleError::DimensionMismatch {
                    expected: r as usize,
                    index,
                    found_rows: m.len(),
                    found_cols: m.first().map_or(0, Vec::len),
                });
            }
        }
        let actions: Vec<Matrix> = actions
            .into_iter()
            .map(|m| m.into_iter().map(|row| row.into_iter().map(|x| x % ell).collect()).collect())
            .collect();
        let id = identity_matrix(dim);
        for (index, m) in actions.iter().enumerate() {
            if mat_pow(m, p, ell) != id {
                return Err(ModuleError::WrongOrder { index, p });
            }
        }
        for i in 0..actions.len() {
            for j in i + 1..actions.len() {
                if mat_mul(&actions[i], &actions[j], ell) != mat_mul(&actions[j], &actions[i], ell) {
                    return Err(ModuleError::NotCommuting { i, j });
                }
            }
        }
        Ok(GroupRingModule { ell, p, r, dim, actions })
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn actions(&self) -> &[Matrix] {
        &self.actions
    }

    /// |M| = l^dim.
    pub fn order(&self) -> u64 {
        self.ell
            .checked_pow(self.dim as u32)
            .expect("module order fits in u64 at supported sizes")
    }

    fn ell_is_prime(&self) -> bool {
        arith::factorize(self.ell) == vec![(self.ell, 1)]
    }

    /// Action of the group element with exponent vector `a`.
    pub fn group_action(&self, a: &[u64]) -> Matrix {
        let mut m = identity_matrix(self.dim);
        for (g, &e) in self.actions.iter().zip(a) {
            if e % self.p != 0 {
                m = mat_mul(&m, &mat_pow(g, e % self.p, self.ell), self.ell);
            }
        }
        m
    }

    /// Canonical normals of the (p^r - 1)/(p - 1) index-p subgroups of A.
    fn hyperplane_normals(&self) -> Vec<Vec<u64>> {
        let total = self.p.pow(self.r);
        let mut out = Vec::new();
        for k in 1..total {
            let v = digits(k, self.p, self.r);
            if v.iter().find(|&&c| c != 0) == Some(&1) {
                out.push(v);
            }
        }
        out
    }

    /// The idempotents e_i, one per hyperplane, with e_i^2 = e_i checked.
    pub fn idempotents(&self) -> Vec<Idempotent> {
        let scale = arith::inv_mod(arith::pow_mod(self.p, u64::from(self.r) - 1, self.ell), self.ell)
            .expect("p is invertible mod ell");
        self.hyperplane_normals()
            .into_iter()
            .map(|normal| {
                let mut sum = vec![vec![0u64; self.dim]; self.dim];
                for k in 0..self.p.pow(self.r) {
                    let a = digits(k, self.p, self.r);
                    let dot: u64 = normal
                        .iter()
                        .zip(&a)
                        .map(|(&x, &y)| arith::mul_mod(x, y, self.p))
                        .sum::<u64>()
                        % self.p;
                    if dot == 0 {
                        sum = mat_add(&sum, &self.group_action(&a), self.ell);
                    }
                }
                let matrix = mat_scale(&sum, scale, self.ell);
                assert_eq!(
                    mat_mul(&matrix, &matrix, self.ell),
                    matrix,
                    "projector for {normal:?} is not idempotent"
                );
                Idempotent { normal, matrix }
            })
            .collect()
    }

    /// I_A M and the coinvariant quotient.
    pub fn coinvariants(&self) -> Coinvariants {
        let mut gens: Vec<Vec<u64>> = Vec::new();
        for m in &self.actions {
            for col in 0..self.dim {
                let v: Vec<u64> = (0..self.dim)
                    .map(|row| (m[row][col] + self.ell - u64::from(row == col)) % self.ell)
                    .collect();
                if v.iter().any(|&x| x != 0) {
                    gens.push(v);
                }
            }
        }
        let image_order = additive_closure_order(&gens, self.dim, self.ell);
        let coinvariant_order = self.order() / image_order;
        let image_rank = self.ell_is_prime().then(|| linalg::rank(&gens, self.dim, self.ell));
        Coinvariants {
            image_generators: gens,
            image_order,
            coinvariant_order,
            image_rank,
            faithful: coinvariant_order == 1,
        }
    }

    /// Image data for each idempotent, without the faithfulness gate.
    fn epsilon_images(&self) -> Vec<DecompositionPart> {
        self.idempotents()
            .into_iter()
            .map(|idem| {
                let cols: Vec<Vec<u64>> = (0..self.dim)
                    .map(|col| (0..self.dim).map(|row| idem.matrix[row][col]).collect())
                    .collect();
                let image_order = additive_closure_order(&cols, self.dim, self.ell);
                let image_rank =
                    self.ell_is_prime().then(|| linalg::rank(&cols, self.dim, self.ell));
                DecompositionPart { idempotent: idem, image_order, image_rank }
            })
            .collect()
    }

    /// The direct-sum decomposition of a faithful module into idempotent
    /// images. Checks that the summands are independent (pairwise trivial
    /// intersections, total order |M|) and that each summand is fixed
    /// pointwise by its subgroup.
    pub fn idempotent_decomposition(&self) -> Result<Vec<DecompositionPart>, ModuleError> {
        let co = self.coinvariants();
        if !co.faithful {
            return Err(ModuleError::NotFaithful { coinvariant_order: co.coinvariant_order });
        }
        let parts = self.epsilon_images();
        let total: u64 = parts.iter().map(|p| p.image_order).product();
        assert_eq!(
            total,
            self.order(),
            "idempotent images do not fill a faithful module of dimension {}",
            self.dim
        );
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                let mut gens = part_columns(&parts[i]);
                gens.extend(part_columns(&parts[j]));
                let joint = additive_closure_order(&gens, self.dim, self.ell);
                assert_eq!(
                    joint,
                    parts[i].image_order * parts[j].image_order,
                    "images {i} and {j} overlap"
                );
            }
        }
        // every element of the subgroup acts as the identity on its image
        for part in &parts {
            for k in 0..self.p.pow(self.r) {
                let a = digits(k, self.p, self.r);
                let dot: u64 = part
                    .idempotent
                    .normal
                    .iter()
                    .zip(&a)
                    .map(|(&x, &y)| arith::mul_mod(x, y, self.p))
                    .sum::<u64>()
                    % self.p;
                if dot == 0 {
                    let fixed = mat_mul(&self.group_action(&a), &part.idempotent.matrix, self.ell);
                    assert_eq!(
                        fixed, part.idempotent.matrix,
                        "subgroup element {a:?} moves the image of {:?}",
                        part.idempotent.normal
                    );
                }
            }
        }
        Ok(parts)
    }

    /// Conjugate every action by an invertible matrix: the same module in a
    /// different basis.
    pub fn conjugate(&self, t: &Matrix) -> Result<Self, ModuleError> {
        assert!(self.ell_is_prime(), "conjugation helper needs a prime modulus");
        let t_inv = mat_inverse_prime(t, self.ell).expect("conjugating matrix must be invertible");
        let actions = self
            .actions
            .iter()
            .map(|m| mat_mul(&mat_mul(t, m, self.ell), &t_inv, self.ell))
            .collect();
        GroupRingModule::new(self.ell, self.p, self.r, actions)
    }
}

fn part_columns(part: &DecompositionPart) -> Vec<Vec<u64>> {
    let n = part.idempotent.matrix.len();
    (0..n)
        .map(|col| (0..n).map(|row| part.idempotent.matrix[row][col]).collect())
        .collect()
}

/// Base-p digits of k, most significant first, length r.
fn digits(k: u64, p: u64, r: u32) -> Vec<u64> {
    (0..r).rev().map(|j| (k / p.pow(j)) % p).collect()
}

/// Outcome of a decomposition sweep. `failures` holds one line per
/// violated instance; an empty list means every faithful module tested
/// satisfied |M| = prod |e_i M|.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub ell: u64,
    pub p: u64,
    pub r: u32,
    pub max_dim: usize,
    /// "exhaustive" when every dimension was fully enumerated, "sampled"
    /// when at least one dimension fell back to seeded random instances.
    pub mode: String,
    pub instances_tested: u64,
    pub faithful_tested: u64,
    /// Recorded when sampling was used, for reproducibility.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub failures: Vec<String>,
}

/// Sweep all modules up to `max_dim` and check the decomposition identity
/// on every faithful one. Dimensions whose enumeration would exceed
/// `enumeration_budget` candidates are covered by `samples` random
/// change-of-basis instances instead (per dimension, from the given seed);
/// with no sampling allowance the sweep fails rather than silently
/// shrinking.
pub fn verify_decomposition(
    ell: u64,
    p: u64,
    r: u32,
    max_dim: usize,
    enumeration_budget: u64,
    samples: u64,
    seed: u64,
) -> Result<VerifyReport, ModuleError> {
    // Constructor-level validation on a throwaway instance.
    GroupRingModule::new(ell, p, r, vec![identity_matrix(1); r as usize])?;
    if max_dim == 0 || max_dim > 4 {
        return Err(ModuleError::BudgetExceeded {
            needed: (ell as u128).saturating_pow((max_dim * max_dim) as u32),
            budget: enumeration_budget,
        });
    }
    let mut report = VerifyReport {
        ell,
        p,
        r,
        max_dim,
        mode: "exhaustive".to_owned(),
        instances_tested: 0,
        faithful_tested: 0,
        seed: None,
        failures: Vec::new(),
    };
    for dim in 1..=max_dim {
        let matrix_count = (ell as u128).saturating_pow((dim * dim) as u32);
        let mut exhaustive = matrix_count <= enumeration_budget as u128;
        let mut order_p: Vec<Matrix> = Vec::new();
        if exhaustive {
            order_p = enumerate_order_p_matrices(ell, p, dim);
            let tuple_bound = (order_p.len() as u128).saturating_pow(r);
            if tuple_bound > enumeration_budget as u128 {
                exhaustive = false;
            }
        }
        if exhaustive {
            let mut chosen: Vec<Matrix> = Vec::new();
            enumerate_commuting_tuples(&order_p, r as usize, ell, &mut chosen, &mut |tuple| {
                let module = GroupRingModule::new(ell, p, r, tuple.to_vec())
                    .expect("enumerated actions are valid");
                check_instance(&module, &mut report);
            });
        } else {
            if samples == 0 {
                return Err(ModuleError::BudgetExceeded {
                    needed: matrix_count,
                    budget: enumeration_budget,
                });
            }
            if arith::factorize(ell) != vec![(ell, 1)] {
                // sampling builds bases with GL_n over a field
                return Err(ModuleError::BudgetExceeded {
                    needed: matrix_count,
                    budget: enumeration_budget,
                });
            }
            report.mode = "sampled".to_owned();
            report.seed = Some(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (dim as u64).wrapping_mul(0x9e37));
            for _ in 0..samples {
                if let Some(module) = sample_module(ell, p, r, dim, &mut rng) {
                    check_instance(&module, &mut report);
                }
            }
        }
    }
    Ok(report)
}

fn check_instance(module: &GroupRingModule, report: &mut VerifyReport) {
    report.instances_tested += 1;
    let co = module.coinvariants();
    if !co.faithful {
        return;
    }
    report.faithful_tested += 1;
    let product: u64 = module.epsilon_images().iter().map(|p| p.image_order).product();
    if product != module.order() {
        report.failures.push(format!(
            "ell={} p={} dim={} actions={:?}: |M|={} but prod |e_i M|={}",
            module.ell,
            module.p,
            module.dim,
            module.actions,
            module.order(),
            product
        ));
    }
}

/// All n x n matrices over Z/lZ with M^p = I.
fn enumerate_order_p_matrices(ell: u64, p: u64, n: usize) -> Vec<Matrix> {
    let cells = n * n;
    let total = ell.pow(cells as u32);
    let id = identity_matrix(n);
    let mut out = Vec::new();
    for code in 0..total {
        let mut m = vec![vec![0u64; n]; n];
        let mut k = code;
        for cell in 0..cells {
            m[cell / n][cell % n] = k % ell;
            k /= ell;
        }
        if mat_pow(&m, p, ell) == id {
            out.push(m);
        }
    }
    out
}

fn enumerate_commuting_tuples(
    pool: &[Matrix],
    r: usize,
    ell: u64,
    chosen: &mut Vec<Matrix>,
    visit: &mut impl FnMut(&[Matrix]),
) {
    if chosen.len() == r {
        visit(chosen);
        return;
    }
    for m in pool {
        if chosen.iter().all(|c| mat_mul(c, m, ell) == mat_mul(m, c, ell)) {
            chosen.push(m.clone());
            enumerate_commuting_tuples(pool, r, ell, chosen, visit);
            chosen.pop();
        }
    }
}

/// A random module in a random basis: blocks are irreducible constituents
/// (companion powers for nonzero characters of A, 1 for the trivial one),
/// conjugated by a random invertible matrix. Returns `None` when no block
/// profile fits the requested dimension.
fn sample_module<R: Rng>(
    ell: u64,
    p: u64,
    r: u32,
    dim: usize,
    rng: &mut R,
) -> Option<GroupRingModule> {
    let m = block_degree(ell, p);
    let companion = companion_block(ell, p, m);
    // choose how many trivial lines to include: usually none, so most
    // samples are faithful
    let max_trivial = dim.min(2);
    let trivial = if rng.gen_ratio(1, 4) { rng.gen_range(0..=max_trivial) } else { 0 };
    let rest = dim - trivial;
    if rest % m != 0 || (rest == 0 && trivial == 0) {
        return None;
    }
    let blocks = rest / m;
    let mut characters: Vec<Vec<u64>> = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        loop {
            let w: Vec<u64> = (0..r).map(|_| rng.gen_range(0..p)).collect();
            if w.iter().any(|&x| x != 0) {
                characters.push(w);
                break;
            }
        }
    }
    let mut actions = Vec::with_capacity(r as usize);
    for j in 0..r as usize {
        let mut big = vec![vec![0u64; dim]; dim];
        for (b, w) in characters.iter().enumerate() {
            let power = mat_pow(&companion, w[j], ell);
            for i in 0..m {
                for k in 0..m {
                    big[b * m + i][b * m + k] = power[i][k];
                }
            }
        }
        for t in 0..trivial {
            big[blocks * m + t][blocks * m + t] = 1;
        }
        actions.push(big);
    }
    let module = GroupRingModule::new(ell, p, r, actions).expect("block actions are valid");
    let t = random_invertible(dim, ell, rng);
    let conjugated = module.conjugate(&t).expect("conjugation preserves validity");
    // structural cross-check: the trivial multiplicity is exactly what we
    // planted
    debug_assert_eq!(
        conjugated.coinvariants().coinvariant_order,
        ell.pow(trivial as u32)
    );
    Some(conjugated)
}

/// Degree of the irreducible factors of (x^p - 1)/(x - 1) over F_l: the
/// multiplicative order of l mod p.
fn block_degree(ell: u64, p: u64) -> usize {
    let mut k = 1;
    let mut x = ell % p;
    while x != 1 {
        x = arith::mul_mod(x, ell % p, p);
        k += 1;
        assert!(k <= p, "order of {ell} mod {p} did not divide p - 1");
    }
    k as usize
}

/// Companion matrix of one monic degree-m irreducible factor of
/// (x^p - 1)/(x - 1) over F_l; its powers realize the nontrivial
/// characters of Z/pZ.
fn companion_block(ell: u64, p: u64, m: usize) -> Matrix {
    // poly coefficients, low degree first
    let quotient: Vec<u64> = vec![1; p as usize]; // 1 + x + ... + x^(p-1)
    let h = (0..ell.pow(m as u32))
        .map(|code| {
            let mut coeffs: Vec<u64> = Vec::with_capacity(m + 1);
            let mut k = code;
            for _ in 0..m {
                coeffs.push(k % ell);
                k /= ell;
            }
            coeffs.push(1); // monic
            coeffs
        })
        .find(|h| poly_rem(&quotient, h, ell).iter().all(|&c| c == 0))
        .expect("the cyclotomic quotient factors into degree-m pieces");
    let mut c = vec![vec![0u64; m]; m];
    for i in 1..m {
        c[i][i - 1] = 1;
    }
    for i in 0..m {
        c[i][m - 1] = (ell - h[i] % ell) % ell;
    }
    let cp = mat_pow(&c, p, ell);
    assert_eq!(cp, identity_matrix(m), "companion block must have order dividing p");
    c
}

/// Remainder of a by the monic polynomial b, coefficients low-first mod l.
fn poly_rem(a: &[u64], b: &[u64], ell: u64) -> Vec<u64> {
    let mut rem: Vec<u64> = a.iter().map(|&c| c % ell).collect();
    let db = b.len() - 1;
    while rem.len() > db {
        let lead = *rem.last().expect("nonempty");
        let shift = rem.len() - 1 - db;
        if lead != 0 {
            for i in 0..=db {
                let sub = arith::mul_mod(lead, b[i], ell);
                rem[shift + i] = (rem[shift + i] + ell - sub) % ell;
            }
        }
        rem.pop();
    }
    rem
}

fn random_invertible<R: Rng>(n: usize, ell: u64, rng: &mut R) -> Matrix {
    loop {
        let t: Matrix = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(0..ell)).collect())
            .collect();
        if mat_inverse_prime(&t, ell).is_some() {
            return t;
        }
    }
}
