//! The unit group (ℤ/m)ˣ with explicit discrete-log coordinates, factored
//! nonzero rationals, and Hilbert symbols over ℚ.

use crate::abelian::{FiniteAbelianGroup, GroupElement};
use crate::arith::{
    discrete_log, factorize, inverse_mod, is_prime, jacobi, mul_mod, pow_mod, primitive_root,
    totient,
};
use crate::lattice::FgAbelianPresentation;
use crate::matrix::IntMat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UnitError {
    #[error("{0} is not a unit modulo {1}")]
    NotUnit(u64, u64),
    #[error("modulus must be ≥ 1, got {0}")]
    BadModulus(u64),
    #[error("rational has a factor of {0}, not a unit modulo {1}")]
    NotCoprime(u64, u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
}

/// One prime-power block of (ℤ/m)ˣ with its cyclic generators: a single
/// primitive root for odd p^a, ⟨−1⟩ for 4, and ⟨−1⟩ × ⟨5⟩ for 2^a, a ≥ 3.
#[derive(Debug, Clone)]
struct UnitComponent {
    prime: u64,
    modulus: u64, // p^a
    /// (generator residue mod p^a, order); in fixed order.
    gens: Vec<(u64, u64)>,
}

/// (ℤ/m)ˣ with invariant-factor coordinates. The "raw" layer is the direct
/// product of the component cyclic groups (discrete-log coordinates); the
/// normalized layer is its invariant-factor form, used for all subgroup and
/// quotient computations.
#[derive(Debug, Clone)]
pub struct UnitGroup {
    modulus: u64,
    components: Vec<UnitComponent>,
    raw_orders: Vec<u64>,
    raw_gen_residues: Vec<u64>,
    pres: FgAbelianPresentation,
    structure: FiniteAbelianGroup,
    gen_residues: Vec<u64>,
}

impl UnitGroup {
    pub fn new(modulus: u64) -> Result<Self, UnitError> {
        if modulus == 0 {
            return Err(UnitError::BadModulus(modulus));
        }
        let mut components = Vec::new();
        for (p, a) in factorize(modulus) {
            let pa = p.pow(a);
            let gens = if p == 2 {
                match a {
                    1 => vec![],
                    2 => vec![(3, 2)], // −1 mod 4
                    _ => vec![(pa - 1, 2), (5, pa / 4)],
                }
            } else {
                let g = primitive_root(pa).expect("odd prime power");
                vec![(g, totient(pa))]
            };
            components.push(UnitComponent { prime: p, modulus: pa, gens });
        }
        let mut raw_orders = Vec::new();
        let mut raw_gen_residues = Vec::new();
        for c in &components {
            for &(g, ord) in &c.gens {
                raw_orders.push(ord);
                // CRT-lift: g at this component, 1 at the others.
                let mut res = 1u64;
                let mut m_acc = 1u64;
                for c2 in &components {
                    let part = if std::ptr::eq(c, c2) { g % c2.modulus } else { 1 };
                    res = crate::arith::crt2(res, m_acc, part, c2.modulus)
                        .expect("coprime prime powers");
                    m_acc *= c2.modulus;
                }
                raw_gen_residues.push(res);
            }
        }
        let k = raw_orders.len();
        let mut rel = IntMat::zeros(k, k);
        for (i, &d) in raw_orders.iter().enumerate() {
            rel.set(i, i, BigInt::from(d));
        }
        let pres = FgAbelianPresentation::from_relations(k, &rel);
        let factors: Vec<u64> = pres
            .divisors
            .iter()
            .map(|d| d.to_u64().expect("finite unit group"))
            .collect();
        let structure = FiniteAbelianGroup::new(factors)
            .expect("invariant factors from Smith form");
        // Residues of the normalized generators: integer combinations of the
        // raw generators given by the lift matrix.
        let mut gen_residues = Vec::new();
        for j in 0..pres.coords() {
            let mut res = 1u64;
            for i in 0..k {
                let e = pres
                    .lift
                    .get(i, j)
                    .mod_floor(&BigInt::from(raw_orders[i]))
                    .to_u64()
                    .expect("reduced exponent");
                res = mul_mod(res, pow_mod(raw_gen_residues[i], e, modulus), modulus);
            }
            gen_residues.push(res);
        }
        Ok(UnitGroup {
            modulus,
            components,
            raw_orders,
            raw_gen_residues,
            pres,
            structure,
            gen_residues,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.structure
    }

    /// Residues (mod m) of the invariant-factor generators.
    pub fn generator_residues(&self) -> &[u64] {
        &self.gen_residues
    }

    pub fn order(&self) -> u64 {
        totient(self.modulus)
    }

    /// Raw discrete-log coordinates of a unit, one per component generator.
    pub fn raw_dlog(&self, x: u64) -> Result<Vec<u64>, UnitError> {
        let x = x % self.modulus;
        if crate::abelian::gcd(x, self.modulus) != 1 {
            return Err(UnitError::NotUnit(x, self.modulus));
        }
        let mut out = Vec::new();
        for c in &self.components {
            let xc = x % c.modulus;
            if c.prime != 2 {
                let (g, ord) = c.gens[0];
                out.push(discrete_log(g, xc, c.modulus, ord).expect("primitive root"));
            } else {
                match c.gens.len() {
                    0 => {}
                    1 => out.push(if xc == 3 { 1 } else { 0 }),
                    _ => {
                        // xc = (−1)^s · 5^f mod 2^a.
                        let half = c.gens[1].1;
                        let mut found = false;
                        let mut t = 1u64;
                        for f in 0..half {
                            if t == xc {
                                out.push(0);
                                out.push(f);
                                found = true;
                                break;
                            }
                            if c.modulus - t == xc {
                                out.push(1);
                                out.push(f);
                                found = true;
                                break;
                            }
                            t = mul_mod(t, 5, c.modulus);
                        }
                        assert!(found, "2-adic unit decomposition");
                    }
                }
            }
        }
        Ok(out)
    }

    /// The raw cyclic orders, and the (offset, count) of the coordinates
    /// belonging to a given prime.
    pub fn raw_orders(&self) -> &[u64] {
        &self.raw_orders
    }

    /// Residues (mod m) of the raw component generators, in coordinate order.
    pub fn raw_generator_residues(&self) -> &[u64] {
        &self.raw_gen_residues
    }

    pub fn raw_range_of_prime(&self, p: u64) -> Option<(usize, usize)> {
        let mut off = 0;
        for c in &self.components {
            if c.prime == p {
                return Some((off, c.gens.len()));
            }
            off += c.gens.len();
        }
        None
    }

    /// Residue of ∏ raw_genᵢ^{eᵢ} (exponents may be negative).
    pub fn residue_from_raw(&self, exps: &[BigInt]) -> u64 {
        assert_eq!(exps.len(), self.raw_orders.len());
        let mut res = 1u64 % self.modulus;
        for (i, e) in exps.iter().enumerate() {
            let k = e
                .mod_floor(&BigInt::from(self.raw_orders[i]))
                .to_u64()
                .expect("reduced exponent");
            res = mul_mod(res, pow_mod(self.raw_gen_residues[i], k, self.modulus), self.modulus);
        }
        res
    }

    /// Class of a unit in invariant-factor coordinates.
    pub fn class_of(&self, x: u64) -> Result<GroupElement, UnitError> {
        let raw = self.raw_dlog(x)?;
        let mut v = IntMat::zeros(raw.len(), 1);
        for (i, &r) in raw.iter().enumerate() {
            v.set(i, 0, BigInt::from(r));
        }
        let img = self.pres.project(&v);
        let coords: Vec<u64> = (0..self.pres.coords())
            .map(|i| img.get(i, 0).to_u64().expect("reduced"))
            .collect();
        Ok(GroupElement { coords })
    }

    /// Residue representative of an invariant-factor class.
    pub fn residue_of(&self, e: &GroupElement) -> u64 {
        let mut res = 1u64 % self.modulus;
        for (i, &k) in e.coords.iter().enumerate() {
            res = mul_mod(res, pow_mod(self.gen_residues[i], k, self.modulus), self.modulus);
        }
        res
    }

    /// Classes of the kernel of (ℤ/m)ˣ → (ℤ/m′)ˣ for m′ | m.
    pub fn kernel_to(&self, m2: u64) -> Vec<GroupElement> {
        assert!(m2 >= 1 && self.modulus % m2 == 0);
        let mut out = Vec::new();
        let mut x = 1u64;
        while x < self.modulus.max(2) {
            if crate::abelian::gcd(x % self.modulus, self.modulus) == 1 {
                out.push(self.class_of(x % self.modulus).expect("unit"));
            }
            x += m2;
        }
        if out.is_empty() {
            out.push(GroupElement { coords: vec![0; self.structure.rank()] });
        }
        out
    }
}

/// A nonzero rational as sign · ∏ p^e.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalNonzero {
    negative: bool,
    /// Sorted by prime; exponents nonzero.
    factors: Vec<(u64, i64)>,
}

impl RationalNonzero {
    pub fn one() -> Self {
        RationalNonzero { negative: false, factors: vec![] }
    }

    pub fn from_integer(x: i64) -> Option<Self> {
        if x == 0 {
            return None;
        }
        let negative = x < 0;
        let factors = factorize(x.unsigned_abs())
            .into_iter()
            .map(|(p, e)| (p, e as i64))
            .collect();
        Some(RationalNonzero { negative, factors })
    }

    pub fn from_prime(p: u64) -> Result<Self, UnitError> {
        if !is_prime(p) {
            return Err(UnitError::NotPrime(p));
        }
        Ok(RationalNonzero { negative: false, factors: vec![(p, 1)] })
    }

    pub fn from_parts(negative: bool, mut factors: Vec<(u64, i64)>) -> Result<Self, UnitError> {
        factors.retain(|&(_, e)| e != 0);
        factors.sort_unstable();
        for w in factors.windows(2) {
            assert_ne!(w[0].0, w[1].0, "duplicate primes");
        }
        for &(p, _) in &factors {
            if !is_prime(p) {
                return Err(UnitError::NotPrime(p));
            }
        }
        Ok(RationalNonzero { negative, factors })
    }

    pub fn is_positive(&self) -> bool {
        !self.negative
    }

    pub fn support(&self) -> Vec<u64> {
        self.factors.iter().map(|&(p, _)| p).collect()
    }

    pub fn valuation(&self, ell: u64) -> i64 {
        self.factors
            .iter()
            .find(|&&(p, _)| p == ell)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    /// The rational with the ℓ-part removed.
    pub fn unit_part_at(&self, ell: u64) -> RationalNonzero {
        RationalNonzero {
            negative: self.negative,
            factors: self.factors.iter().cloned().filter(|&(p, _)| p != ell).collect(),
        }
    }

    /// Residue modulo n; requires every prime in the support to be coprime
    /// to n.
    pub fn residue_mod(&self, n: u64) -> Result<u64, UnitError> {
        let mut res = if self.negative { (n - 1) % n } else { 1 % n };
        for &(p, e) in &self.factors {
            if crate::abelian::gcd(p % n, n) != 1 {
                return Err(UnitError::NotCoprime(p, n));
            }
            let base = if e >= 0 {
                p % n
            } else {
                inverse_mod(p % n, n).expect("coprime")
            };
            res = mul_mod(res, pow_mod(base, e.unsigned_abs(), n), n);
        }
        Ok(res)
    }
}

impl std::fmt::Display for RationalNonzero {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.negative {
            write!(f, "-")?;
        }
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|&(p, e)| if e == 1 { format!("{p}") } else { format!("{p}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// A place of ℚ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Place {
    Real,
    Finite(u64),
}

/// Hilbert symbol (a, b) at a place of ℚ, for nonzero integers a, b.
pub fn hilbert_symbol(a: i64, b: i64, place: Place) -> i32 {
    assert!(a != 0 && b != 0, "Hilbert symbol needs nonzero entries");
    match place {
        Place::Real => {
            if a < 0 && b < 0 {
                -1
            } else {
                1
            }
        }
        Place::Finite(2) => {
            let (alpha, u) = split_val(a, 2);
            let (beta, v) = split_val(b, 2);
            // Both invariants only depend on x mod 8; reduce first so the
            // square cannot overflow.
            let eps = |x: i64| ((x.rem_euclid(4) - 1) / 2).rem_euclid(2);
            let omega = |x: i64| {
                let r = x.rem_euclid(8);
                ((r * r - 1) / 8).rem_euclid(2)
            };
            let e = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u);
            if e % 2 == 0 {
                1
            } else {
                -1
            }
        }
        Place::Finite(l) => {
            assert!(is_prime(l), "finite place must be prime");
            let (alpha, u) = split_val(a, l);
            let (beta, v) = split_val(b, l);
            let eps = ((l - 1) / 2 % 2) as i64;
            let mut sign = if (alpha * beta * eps) % 2 == 1 { -1 } else { 1 };
            if beta % 2 == 1 {
                sign *= jacobi(u, l);
            }
            if alpha % 2 == 1 {
                sign *= jacobi(v, l);
            }
            sign
        }
    }
}

fn split_val(x: i64, p: u64) -> (i64, i64) {
    let mut v = 0i64;
    let mut u = x;
    while u % (p as i64) == 0 {
        u /= p as i64;
        v += 1;
    }
    (v, u)
}
