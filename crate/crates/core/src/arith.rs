//! Scalar number-theoretic utilities on u64/i64: modular arithmetic,
//! deterministic primality, Jacobi symbols, CRT, primitive roots, discrete
//! logarithms in small unit groups, and trial-division factorization.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("{0} is not invertible modulo {1}")]
    NotInvertible(u64, u64),
    #[error("no primitive root modulo {0}")]
    NoPrimitiveRoot(u64),
    #[error("discrete logarithm does not exist")]
    NoDiscreteLog,
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut out = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            out = mul_mod(out, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    out
}

/// Deterministic Miller–Rabin for u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a.abs(), if a >= 0 { 1 } else { -1 }, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

pub fn inverse_mod(a: u64, m: u64) -> Result<u64, ArithError> {
    let (g, x, _) = egcd(a as i128, m as i128);
    if g != 1 {
        return Err(ArithError::NotInvertible(a, m));
    }
    Ok(x.rem_euclid(m as i128) as u64)
}

/// Solve x ≡ r1 (mod m1), x ≡ r2 (mod m2) for coprime moduli.
pub fn crt2(r1: u64, m1: u64, r2: u64, m2: u64) -> Result<u64, ArithError> {
    let (g, _, _) = egcd(m1 as i128, m2 as i128);
    if g != 1 {
        return Err(ArithError::NotCoprime(m1, m2));
    }
    let m = m1 as u128 * m2 as u128;
    let inv = inverse_mod(m1 % m2, m2)? as u128;
    let diff = ((r2 as i128 - r1 as i128).rem_euclid(m2 as i128)) as u128;
    let x = r1 as u128 + (diff * inv % m2 as u128) * m1 as u128;
    Ok((x % m) as u64)
}

/// Jacobi symbol (a / n), n odd positive.
pub fn jacobi(a: i64, mut n: u64) -> i32 {
    assert!(n % 2 == 1 && n > 0, "Jacobi symbol needs odd positive n");
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut t = 1i32;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Legendre symbol (a / p) for odd prime p.
pub fn legendre(a: i64, p: u64) -> i32 {
    jacobi(a, p)
}

pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d as u128 * d as u128 <= n as u128 {
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

/// Euler totient.
pub fn totient(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .map(|(p, e)| (p - 1) * p.pow(e - 1))
        .product()
}

/// Smallest primitive root modulo p^k (p odd prime) or modulo 2 or 4.
pub fn primitive_root(m: u64) -> Result<u64, ArithError> {
    if m == 2 {
        return Ok(1);
    }
    if m == 4 {
        return Ok(3);
    }
    let fac = factorize(m);
    let (p, k) = match fac.as_slice() {
        [(p, k)] if *p != 2 => (*p, *k),
        _ => return Err(ArithError::NoPrimitiveRoot(m)),
    };
    let phi_p = p - 1;
    let prime_parts: Vec<u64> = factorize(phi_p).into_iter().map(|(q, _)| q).collect();
    let mut g = 0;
    for cand in 2..p {
        if prime_parts.iter().all(|&q| pow_mod(cand, phi_p / q, p) != 1) {
            g = cand;
            break;
        }
    }
    debug_assert!(g != 0);
    if k == 1 {
        return Ok(g);
    }
    // Lift to p^k: g stays primitive unless g^{p−1} ≡ 1 mod p², then g+p works.
    if pow_mod(g, p - 1, p * p) == 1 {
        g += p;
    }
    Ok(g)
}

/// Discrete log of `target` to base `base` in (ℤ/m)ˣ, where base has the
/// given multiplicative order. Brute force; intended for m up to ~10⁷.
pub fn discrete_log(base: u64, target: u64, m: u64, order: u64) -> Result<u64, ArithError> {
    let mut x = 1u64 % m;
    for k in 0..order {
        if x == target % m {
            return Ok(k);
        }
        x = mul_mod(x, base, m);
    }
    Err(ArithError::NoDiscreteLog)
}

/// All primes ≤ n by a sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return vec![];
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

pub fn log2_exact(n: u64) -> Option<u32> {
    if n.is_power_of_two() {
        Some(n.trailing_zeros())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_known_values() {
        assert!(is_prime(2));
        assert!(is_prime(3));
        assert!(is_prime(233));
        assert!(is_prime(1_000_000_007));
        assert!(is_prime(18_446_744_073_709_551_557)); // largest u64 prime
        assert!(!is_prime(1));
        assert!(!is_prime(561)); // Carmichael
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to 2,3,5,7
    }

    #[test]
    fn jacobi_known_values() {
        assert_eq!(legendre(2, 7), 1);
        assert_eq!(legendre(3, 7), -1);
        assert_eq!(legendre(-1, 13), 1); // 13 ≡ 1 mod 4
        assert_eq!(legendre(-1, 7), -1); // 7 ≡ 3 mod 4
        assert_eq!(legendre(13, 3), 1); // 13 ≡ 1 mod 3
        assert_eq!(jacobi(2, 15), 1);
        assert_eq!(jacobi(5, 15), 0);
    }

    #[test]
    fn crt_and_inverse() {
        let x = crt2(2, 3, 3, 5).unwrap();
        assert_eq!(x % 3, 2);
        assert_eq!(x % 5, 3);
        assert_eq!(inverse_mod(3, 7).unwrap(), 5);
        assert!(crt2(0, 4, 1, 6).is_err());
    }

    #[test]
    fn primitive_roots_generate() {
        for m in [3u64, 5, 7, 9, 25, 27, 121, 4] {
            let g = primitive_root(m).unwrap();
            let ord = totient(m);
            // g has full order.
            let parts = factorize(ord);
            for (q, _) in parts {
                assert_ne!(pow_mod(g, ord / q, m), 1, "m={m}");
            }
        }
        assert!(primitive_root(8).is_err());
        assert!(primitive_root(15).is_err());
    }

    #[test]
    fn dlog_roundtrip() {
        let m = 27;
        let g = primitive_root(m).unwrap();
        for k in 0..totient(m) {
            let t = pow_mod(g, k, m);
            assert_eq!(discrete_log(g, t, m, totient(m)).unwrap(), k);
        }
    }

    #[test]
    fn totient_and_factorize() {
        assert_eq!(totient(1), 1);
        assert_eq!(totient(8), 4);
        assert_eq!(totient(100), 40);
        assert_eq!(factorize(720), vec![(2, 4), (3, 2), (5, 1)]);
    }
}
