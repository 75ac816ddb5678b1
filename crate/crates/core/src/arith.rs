//! Small-integer arithmetic helpers shared across the crate.
//!
//! Everything here works on `u64`/`i64` scalars with `u128` intermediates,
//! which covers every modulus, conductor, and residue this crate touches.
//! Arbitrary-precision work (discriminant products, exact rationals) lives
//! with its callers and uses `num-bigint` directly.

use num_integer::Integer;

/// Greatest common divisor of two `u64` values.
pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Least common multiple, panicking on overflow rather than wrapping.
pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a, b) * b
}

/// `a * b mod m` without overflow.
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `a^e mod m` by binary exponentiation. `m` must be nonzero.
pub fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Modular inverse of `a` mod `m`, if `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs in
/// ascending prime order. Intended for moduli and conductors at desk scale.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Euler's totient.
pub fn euler_phi(n: u64) -> u64 {
    let mut phi = n;
    for (p, _) in factorize(n) {
        phi = phi / p * (p - 1);
    }
    phi
}

/// The squarefree kernel of `n > 0`: the product of the primes dividing `n`
/// to an odd power. Returns 1 exactly when `n` is a perfect square.
pub fn squarefree_kernel(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .filter(|&(_, e)| e % 2 == 1)
        .map(|(p, _)| p)
        .product()
}

/// Solve `x = a mod m`, `x = b mod n` for coprime `m`, `n`; result in `[0, mn)`.
pub fn crt_pair(a: u64, m: u64, b: u64, n: u64) -> u64 {
    debug_assert_eq!(gcd(m, n), 1, "crt moduli must be coprime");
    let m_inv = inv_mod(m % n, n).expect("coprime moduli");
    let diff = (b + n - a % n) % n;
    let k = mul_mod(diff, m_inv, n);
    a + m * k
}

/// The Kronecker symbol (a|n), extending the Jacobi and Legendre symbols to
/// all integer pairs. For a fundamental discriminant D, x -> (D|x) is the
/// quadratic character of conductor |D|.
pub fn kronecker(a: i64, n: i64) -> i64 {
    if n == 0 {
        return if a.unsigned_abs() == 1 { 1 } else { 0 };
    }
    let mut sign = 1i64;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            sign = -sign;
        }
    }
    while n % 2 == 0 {
        n /= 2;
        match a.rem_euclid(8) {
            1 | 7 => {}
            3 | 5 => sign = -sign,
            _ => return 0, // a even
        }
    }
    // Jacobi symbol for odd n > 0 by reciprocity.
    let mut a = a.rem_euclid(n.max(1));
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_mod_matches_naive() {
        for m in [2u64, 7, 12, 97] {
            for a in 0..m {
                let mut acc = 1 % m;
                for e in 0..10 {
                    assert_eq!(pow_mod(a, e, m), acc, "a={a} e={e} m={m}");
                    acc = mul_mod(acc, a, m);
                }
            }
        }
    }

    #[test]
    fn inv_mod_inverts_units_and_rejects_nonunits() {
        for m in [2u64, 9, 15, 101] {
            for a in 1..m {
                match inv_mod(a, m) {
                    Some(inv) => {
                        assert_eq!(gcd(a, m), 1);
                        assert_eq!(mul_mod(a, inv, m), 1 % m);
                    }
                    None => assert_ne!(gcd(a, m), 1),
                }
            }
        }
    }

    #[test]
    fn factorize_reconstructs_and_orders() {
        for n in 2..2000u64 {
            let f = factorize(n);
            let back: u64 = f.iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(back, n);
            assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn phi_matches_unit_count() {
        for n in 1..500u64 {
            let direct = (1..=n).filter(|&k| gcd(k, n) == 1).count() as u64;
            assert_eq!(euler_phi(n), direct, "n={n}");
        }
    }

    #[test]
    fn squarefree_kernel_detects_squares() {
        assert_eq!(squarefree_kernel(1), 1);
        assert_eq!(squarefree_kernel(12), 3);
        assert_eq!(squarefree_kernel(49), 1);
        assert_eq!(squarefree_kernel(360), 10);
    }

    #[test]
    fn crt_pair_solves_both_congruences() {
        for m in [3u64, 4, 5, 8] {
            for n in [7u64, 9, 11] {
                if gcd(m, n) != 1 {
                    continue;
                }
                for a in 0..m {
                    for b in 0..n {
                        let x = crt_pair(a, m, b, n);
                        assert!(x < m * n);
                        assert_eq!(x % m, a);
                        assert_eq!(x % n, b);
                    }
                }
            }
        }
    }

    #[test]
    fn kronecker_matches_euler_criterion_at_odd_primes() {
        for q in [3i64, 5, 7, 11, 13, 101] {
            for a in -30..30i64 {
                let euler = pow_mod(a.rem_euclid(q) as u64, ((q - 1) / 2) as u64, q as u64);
                let expected = match euler {
                    0 => 0,
                    1 => 1,
                    e if e as i64 == q - 1 => -1,
                    _ => unreachable!(),
                };
                assert_eq!(kronecker(a, q), expected, "a={a} q={q}");
            }
        }
    }

    #[test]
    fn kronecker_is_completely_multiplicative_in_both_arguments() {
        for a in -12..12i64 {
            for (m, n) in [(3i64, 5), (4, 9), (7, 8), (-3, 5)] {
                assert_eq!(kronecker(a, m * n), kronecker(a, m) * kronecker(a, n));
            }
        }
        for n in 1..40i64 {
            for (a, b) in [(-3i64, 5), (8, 5), (-4, -4), (12, 21)] {
                assert_eq!(kronecker(a * b, n), kronecker(a, n) * kronecker(b, n));
            }
        }
    }

    #[test]
    fn kronecker_of_fundamental_discriminants_has_right_period() {
        // (-4|x): 1 for x = 1 mod 4, -1 for x = 3 mod 4
        for x in (1..50i64).step_by(2) {
            let expect = if x % 4 == 1 { 1 } else { -1 };
            assert_eq!(kronecker(-4, x), expect, "x={x}");
        }
        // (8|x): 1 for x = 1,7 mod 8
        for x in (1..50i64).step_by(2) {
            let expect = if matches!(x % 8, 1 | 7) { 1 } else { -1 };
            assert_eq!(kronecker(8, x), expect, "x={x}");
        }
    }
}
