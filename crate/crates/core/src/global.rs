//! Abelian CM fields as cyclotomic data: conductor + subgroup of (ℤ/m)ˣ.
//! Provides decomposition/inertia groups, the local Artin map, rational
//! norm-membership tests for the quadratic layer L/L⁺, deciders for the two
//! global norm-principality questions, the structural negativity checker,
//! and bounded-search generators for four families of negative examples.

use crate::abelian::{
    gcd, lcm, quotient, enumerate_subgroups, FiniteAbelianGroup, GroupElement, GroupError,
    Quotient, Subgroup,
};
use crate::arith::{crt2, factorize, inverse_mod, is_prime, jacobi, pow_mod, primes_up_to};
use crate::lattice::{independent_generators, LatticeError};
use crate::local::{decide_r_circ, decide_r_oracle, LocalError, LocalExtensionDescriptor};
use crate::matrix::{preimage_lattice, solve, IntMat};
use crate::units::{RationalNonzero, UnitError, UnitGroup};
use crate::verdict::{Question, QuestionVerdict, Witness};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GlobalError {
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Local(#[from] LocalError),
    #[error("field is not CM: complex conjugation is trivial on it")]
    NotCm,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("auxiliary prime {0} must be ≡ 1 mod 4")]
    NotOneModFour(u64),
    #[error("variant {variant} does not accept p = {p}")]
    VariantPrime { p: u64, variant: &'static str },
    #[error("variant {variant} does not accept degree {degree}: {why}")]
    VariantDegree { degree: u64, variant: &'static str, why: &'static str },
    #[error("only 2-power degrees are generated, got {0}")]
    DegreeUnsupported(u64),
    #[error("search bound {bound} exhausted: found {found} of {requested} fields")]
    SearchExhausted { found: usize, requested: usize, bound: u64 },
    #[error("cannot parse field descriptor line: {0}")]
    Parse(String),
}

/// An abelian field L = ℚ(ζ_m)^H given by its conductor m and a subgroup
/// H ≤ (ℤ/m)ˣ. All Galois-theoretic data is modular arithmetic on
/// Γ = (ℤ/m)ˣ/H.
#[derive(Debug, Clone)]
pub struct CyclotomicFieldDescriptor {
    modulus: u64,
    h_gens: Vec<u64>,
    units: UnitGroup,
    h: Subgroup,
    quot: Quotient,
    degree: u64,
    /// Set when the constructor reduced a non-minimal modulus.
    normalized_from: Option<u64>,
}

impl PartialEq for CyclotomicFieldDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.modulus == other.modulus && self.h == other.h
    }
}
impl Eq for CyclotomicFieldDescriptor {}

impl std::fmt::Display for CyclotomicFieldDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let gens: Vec<String> = self.h_gens.iter().map(|g| g.to_string()).collect();
        write!(f, "m={} H=[{}]", self.modulus, gens.join(","))
    }
}

impl std::str::FromStr for CyclotomicFieldDescriptor {
    type Err = GlobalError;

    /// Parses the line format `m=<int> H=[g1,g2,...]`.
    fn from_str(s: &str) -> Result<Self, GlobalError> {
        let bad = || GlobalError::Parse(s.to_string());
        let mut m = None;
        let mut gens = None;
        for tok in s.split_whitespace() {
            if let Some(v) = tok.strip_prefix("m=") {
                m = Some(v.parse::<u64>().map_err(|_| bad())?);
            } else if let Some(v) = tok.strip_prefix("H=") {
                let inner = v.strip_prefix('[').and_then(|v| v.strip_suffix(']')).ok_or_else(bad)?;
                let mut list = Vec::new();
                if !inner.is_empty() {
                    for part in inner.split(',') {
                        list.push(part.trim().parse::<u64>().map_err(|_| bad())?);
                    }
                }
                gens = Some(list);
            } else {
                return Err(bad());
            }
        }
        make_field(m.ok_or_else(bad)?, &gens.ok_or_else(bad)?)
    }
}

impl CyclotomicFieldDescriptor {
    pub fn conductor(&self) -> u64 {
        self.modulus
    }

    /// Canonical generating residues of H (independent generators).
    pub fn subgroup_generators(&self) -> &[u64] {
        &self.h_gens
    }

    pub fn galois_group(&self) -> &FiniteAbelianGroup {
        &self.quot.group
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn normalized_from(&self) -> Option<u64> {
        self.normalized_from
    }

    /// Class in Γ of a residue coprime to the conductor.
    pub fn class_of(&self, x: u64) -> Result<GroupElement, GlobalError> {
        let c = self.units.class_of(x % self.modulus.max(1))?;
        Ok(self.quot.project(self.units.group(), &c))
    }

    /// Complex conjugation: the class of −1.
    pub fn conjugation(&self) -> GroupElement {
        let m = self.modulus;
        self.class_of(if m <= 1 { 0 } else { m - 1 }).expect("-1 is a unit")
    }

    /// −1 ∉ H: L is totally imaginary and the fixed field of ⟨H,−1⟩ is its
    /// totally real index-2 subfield.
    pub fn is_cm(&self) -> bool {
        self.conjugation() != self.galois_group().identity()
    }
}

/// Build a descriptor, validating the generators and normalizing the
/// conductor (dropping any prime-power part on which H contains the full
/// reduction kernel).
pub fn make_field(m: u64, generators: &[u64]) -> Result<CyclotomicFieldDescriptor, GlobalError> {
    if m == 0 {
        return Err(GlobalError::Unit(UnitError::BadModulus(0)));
    }
    let mut cur_m = m;
    let mut gens: Vec<u64> = generators.to_vec();
    // Validate up front so errors mention the caller's modulus.
    for &g in &gens {
        if gcd(g % cur_m, cur_m) != 1 {
            return Err(GlobalError::Unit(UnitError::NotUnit(g % cur_m, cur_m)));
        }
    }
    loop {
        let units = UnitGroup::new(cur_m)?;
        let classes: Result<Vec<GroupElement>, UnitError> =
            gens.iter().map(|&g| units.class_of(g % cur_m)).collect();
        let h = Subgroup::new(units.group(), classes?)?;
        let mut reduced = false;
        for (q, _) in factorize(cur_m) {
            let m2 = cur_m / q;
            if units.kernel_to(m2).iter().all(|k| h.contains(k)) {
                gens = gens.iter().map(|&g| g % m2).collect();
                cur_m = m2;
                reduced = true;
                break;
            }
        }
        if reduced {
            continue;
        }
        let quot = quotient(units.group(), &h)?;
        let degree = quot.group.order();
        let h_gens: Vec<u64> = {
            let mut v: Vec<u64> = independent_generators(&h)?
                .iter()
                .map(|(e, _)| units.residue_of(e))
                .collect();
            v.sort_unstable();
            v
        };
        return Ok(CyclotomicFieldDescriptor {
            modulus: cur_m,
            h_gens,
            units,
            h,
            quot,
            degree,
            normalized_from: if cur_m == m { None } else { Some(m) },
        });
    }
}

/// Inertia group I_ℓ ≤ Γ: the image of the units ≡ 1 mod m/ℓ^{v_ℓ(m)}.
pub fn inertia_group(field: &CyclotomicFieldDescriptor, ell: u64) -> Result<Subgroup, GlobalError> {
    if !is_prime(ell) {
        return Err(GlobalError::NotPrime(ell));
    }
    let gamma = field.galois_group();
    let mut gens = Vec::new();
    if let Some((off, cnt)) = field.units.raw_range_of_prime(ell) {
        // The ℓ-component raw generators are exactly CRT(gᵢ, 1 mod m/ℓ^v).
        for i in off..off + cnt {
            let r = field.units.raw_generator_residues()[i];
            gens.push(field.class_of(r)?);
        }
    }
    Ok(Subgroup::new(gamma, gens)?)
}

/// The class of a Frobenius representative at ℓ: ℓ on the prime-to-ℓ part,
/// 1 on the ℓ-part.
pub fn frobenius_class(
    field: &CyclotomicFieldDescriptor,
    ell: u64,
) -> Result<GroupElement, GlobalError> {
    if !is_prime(ell) {
        return Err(GlobalError::NotPrime(ell));
    }
    let m = field.modulus;
    let v = factorize(m).iter().find(|&&(p, _)| p == ell).map(|&(_, a)| a).unwrap_or(0);
    let lv = ell.pow(v);
    let m2 = m / lv;
    let t = crt2(ell % m2.max(1), m2, 1 % lv, lv).expect("coprime moduli");
    field.class_of(t)
}

/// Decomposition group D_ℓ = ⟨I_ℓ, Frobenius⟩.
pub fn decomposition_group(
    field: &CyclotomicFieldDescriptor,
    ell: u64,
) -> Result<Subgroup, GlobalError> {
    let i = inertia_group(field, ell)?;
    let f = Subgroup::new(field.galois_group(), vec![frobenius_class(field, ell)?])?;
    Ok(i.join(&f)?)
}

/// Primes with nontrivial inertia (equivalently, primes dividing the
/// conductor after normalization).
pub fn ramified_primes(field: &CyclotomicFieldDescriptor) -> Result<Vec<u64>, GlobalError> {
    let mut out = Vec::new();
    for (p, _) in factorize(field.modulus) {
        if !inertia_group(field, p)?.is_trivial() {
            out.push(p);
        }
    }
    Ok(out)
}

/// Primes ℓ where L/L⁺ is ramified at every place above ℓ (conjugation lies
/// in I_ℓ) and D_ℓ = I_ℓ. Such ℓ are necessarily ramified in L, so only
/// conductor divisors are scanned.
pub fn s_set(field: &CyclotomicFieldDescriptor) -> Result<Vec<u64>, GlobalError> {
    if !field.is_cm() {
        return Err(GlobalError::NotCm);
    }
    let c = field.conjugation();
    let mut out = Vec::new();
    for ell in ramified_primes(field)? {
        let i = inertia_group(field, ell)?;
        if !i.contains(&c) {
            continue;
        }
        let d = decomposition_group(field, ell)?;
        if d.order() == i.order() {
            out.push(ell);
        }
    }
    Ok(out)
}

/// Local Artin map for ℚ(ζ_m)/ℚ at ℓ, projected to Γ: writing m = ℓ^v·m′
/// and x = ℓ^k·u, the class is u⁻¹ on the ℓ-part and ℓ^k on the m′-part.
pub fn artin_local(
    field: &CyclotomicFieldDescriptor,
    ell: u64,
    x: &RationalNonzero,
) -> Result<GroupElement, GlobalError> {
    if !is_prime(ell) {
        return Err(GlobalError::NotPrime(ell));
    }
    let m = field.modulus;
    let v = factorize(m).iter().find(|&&(p, _)| p == ell).map(|&(_, a)| a).unwrap_or(0);
    let lv = ell.pow(v);
    let m2 = m / lv;
    let k = x.valuation(ell);
    // Unramified part: ℓ^k mod m′ (inverted for negative k).
    let unram = {
        let base = ell % m2.max(1);
        let pk = pow_mod(base, k.unsigned_abs(), m2.max(1));
        if k >= 0 {
            pk
        } else {
            inverse_mod(pk, m2.max(1)).expect("ℓ coprime to m′")
        }
    };
    // Ramified part: u⁻¹ mod ℓ^v.
    let ram = if lv == 1 {
        0
    } else {
        let u_res = x.unit_part_at(ell).residue_mod(lv)?;
        inverse_mod(u_res, lv).expect("unit residue")
    };
    let t = crt2(unram % m2.max(1), m2.max(1), ram % lv.max(1), lv.max(1)).expect("coprime");
    field.class_of(if m == 1 { 0 } else { t % m })
}

/// Does x ∈ ℚˣ lie in the local norm group of L_w/L⁺_v for every v | ℓ?
/// Split places always accept; otherwise the Artin class of x raised to
/// [L⁺_v : ℚ_ℓ] = |D_ℓ|/2 must be trivial.
pub fn is_local_norm(
    field: &CyclotomicFieldDescriptor,
    ell: u64,
    x: &RationalNonzero,
) -> Result<bool, GlobalError> {
    if !field.is_cm() {
        return Err(GlobalError::NotCm);
    }
    let c = field.conjugation();
    let d = decomposition_group(field, ell)?;
    if !d.contains(&c) {
        return Ok(true);
    }
    let r = artin_local(field, ell, x)?;
    debug_assert!(d.contains(&r), "reciprocity image must lie in D_ℓ");
    let dv = d.order() / 2;
    let y = field.galois_group().mul_scalar(&r, dv);
    debug_assert!(y == field.galois_group().identity() || y == c);
    Ok(y == field.galois_group().identity())
}

/// x ∈ N_{L/L⁺}(Lˣ) by the Hasse norm principle for the cyclic (quadratic)
/// extension L/L⁺: positivity plus local norm at every ramified prime and
/// every prime in the support of x.
pub fn is_global_norm(
    field: &CyclotomicFieldDescriptor,
    x: &RationalNonzero,
) -> Result<bool, GlobalError> {
    if !field.is_cm() {
        return Err(GlobalError::NotCm);
    }
    if !x.is_positive() {
        return Ok(false);
    }
    let mut primes = ramified_primes(field)?;
    primes.extend(x.support());
    primes.sort_unstable();
    primes.dedup();
    for ell in primes {
        if !is_local_norm(field, ell, x)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of the four structural negativity conditions at an auxiliary
/// prime ℓ₀.
#[derive(Debug, Clone)]
pub struct NgaxReport {
    pub ell0: u64,
    /// 2-exponent of the cyclic inertia at ℓ₀ (0 when condition 1 fails
    /// before it is determined).
    pub m_exponent: u32,
    /// Galois group splits as ℤ/2^m × H with D = I at ℓ₀ the first factor,
    /// conjugation its involution, and H of exponent dividing 2^{m−1}.
    pub structure_ok: bool,
    /// The subfield cut out by squares-of-the-first-factor times H is
    /// exactly ℚ(√ℓ₀).
    pub quadratic_subfield_ok: bool,
    /// Every ramified prime other than p and ℓ₀ is a global norm.
    pub ramified_norms_ok: bool,
    /// p is a local norm at p but not at ℓ₀.
    pub local_pair_ok: bool,
    pub notes: Vec<String>,
}

impl NgaxReport {
    pub fn ok(&self) -> bool {
        self.structure_ok && self.quadratic_subfield_ok && self.ramified_norms_ok && self.local_pair_ok
    }
}

impl std::fmt::Display for NgaxReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "l0={} ok={} structure={} quadratic-subfield={} ramified-norms={} local-pair={}",
            self.ell0,
            self.ok(),
            self.structure_ok,
            self.quadratic_subfield_ok,
            self.ramified_norms_ok,
            self.local_pair_ok
        )
    }
}

/// Verify the four structural conditions that certify a negative answer for
/// both global questions at p, using the auxiliary prime ℓ₀ ≡ 1 mod 4.
pub fn check_ngax(
    field: &CyclotomicFieldDescriptor,
    p: u64,
    ell0: u64,
) -> Result<NgaxReport, GlobalError> {
    if !field.is_cm() {
        return Err(GlobalError::NotCm);
    }
    if !is_prime(p) {
        return Err(GlobalError::NotPrime(p));
    }
    if !is_prime(ell0) {
        return Err(GlobalError::NotPrime(ell0));
    }
    if ell0 % 4 != 1 {
        return Err(GlobalError::NotOneModFour(ell0));
    }
    let gamma = field.galois_group();
    let c = field.conjugation();
    let mut report = NgaxReport {
        ell0,
        m_exponent: 0,
        structure_ok: false,
        quadratic_subfield_ok: false,
        ramified_norms_ok: false,
        local_pair_ok: false,
        notes: Vec::new(),
    };

    // Condition 1: Γ a 2-group, D = I at ℓ₀ cyclic of order 2^m (m ≥ 2),
    // conjugation the involution of I, and a complement of exponent
    // ≤ 2^{m−1}.
    let i0 = inertia_group(field, ell0)?;
    let d0 = decomposition_group(field, ell0)?;
    let two_group = crate::arith::log2_exact(gamma.order()).is_some();
    if !two_group {
        report.notes.push("galois group is not a 2-group".into());
    }
    if d0.order() != i0.order() {
        report.notes.push(format!("decomposition at {ell0} exceeds inertia"));
    }
    let m_exp = crate::arith::log2_exact(i0.order()).unwrap_or(0);
    report.m_exponent = m_exp;
    let shape_ok = two_group && d0.order() == i0.order() && i0.is_cyclic() && m_exp >= 2;
    let mut complement_ok = false;
    let mut u0: Option<Subgroup> = None;
    if shape_ok {
        if !i0.contains(&c) {
            report.notes.push("conjugation is not inertial at l0".into());
        } else {
            let all = enumerate_subgroups(gamma)?;
            let half = 1u64 << (m_exp - 1);
            complement_ok = all.iter().any(|hp| {
                hp.intersection(&i0).map(|s| s.is_trivial()).unwrap_or(false)
                    && hp.join(&i0).map(|s| s.order() == gamma.order()).unwrap_or(false)
                    && hp.structure().exponent() <= half
                    && half % hp.structure().exponent().max(1) == 0
            });
            if !complement_ok {
                report.notes.push("no low-torsion complement to the inertia factor".into());
            }
        }
    }
    report.structure_ok = shape_ok && complement_ok;

    // Condition 2: the index-2 subgroup of Γ cut out by the quadratic
    // character of ℓ₀ exists (so ℚ(√ℓ₀) ⊆ L), does not contain the inertia
    // generator, and still admits a complement as in condition 1.
    if shape_ok && field.modulus % ell0 == 0 {
        let chi = |r: u64| jacobi((r % ell0) as i64, ell0);
        let h_in_kernel = field.h_gens.iter().all(|&g| chi(g) == 1);
        if h_in_kernel {
            // Generators of the kernel-of-χ subgroup of Γ.
            let mut gens: Vec<GroupElement> = Vec::new();
            let residues = field.units.generator_residues().to_vec();
            if let Some(n) = residues.iter().copied().find(|&r| chi(r) == -1) {
                for &r in &residues {
                    let lifted = if chi(r) == 1 {
                        r
                    } else {
                        ((r as u128 * n as u128) % field.modulus as u128) as u64
                    };
                    gens.push(field.class_of(lifted)?);
                }
                gens.push(field.class_of(
                    ((n as u128 * n as u128) % field.modulus as u128) as u64,
                )?);
                let u0_sub = Subgroup::new(gamma, gens)?;
                if u0_sub.order() * 2 == gamma.order() {
                    u0 = Some(u0_sub);
                } else {
                    report.notes.push("quadratic character of l0 is trivial on L".into());
                }
            } else {
                report.notes.push("quadratic character of l0 is trivial on L".into());
            }
        } else {
            report.notes.push("L does not contain the quadratic field of l0".into());
        }
    }
    if let (Some(u0), true) = (&u0, shape_ok) {
        let g = i0.cyclic_generator()?;
        let g_in_u0 = u0.contains(&g);
        if g_in_u0 {
            report.notes.push("inertia generator fixes the quadratic field of l0".into());
        } else {
            let all = enumerate_subgroups(gamma)?;
            let half = 1u64 << (m_exp - 1);
            report.quadratic_subfield_ok = all.iter().any(|hp| {
                hp.is_subset_of(u0)
                    && hp.intersection(&i0).map(|s| s.is_trivial()).unwrap_or(false)
                    && hp.join(&i0).map(|s| s.order() == gamma.order()).unwrap_or(false)
                    && half % hp.structure().exponent().max(1) == 0
            });
            if !report.quadratic_subfield_ok {
                report.notes.push("no complement inside the l0-kernel subgroup".into());
            }
        }
    }

    // Condition 3: all other ramified primes are global norms.
    let mut ok3 = true;
    for ell in ramified_primes(field)? {
        if ell == p || ell == ell0 {
            continue;
        }
        let x = RationalNonzero::from_prime(ell)?;
        if !is_global_norm(field, &x)? {
            ok3 = false;
            report.notes.push(format!("ramified prime {ell} is not a global norm"));
        }
    }
    report.ramified_norms_ok = ok3;

    // Condition 4: p is a norm locally at p but not at ℓ₀.
    let xp = RationalNonzero::from_prime(p)?;
    let at_p = is_local_norm(field, p, &xp)?;
    let at_l0 = is_local_norm(field, ell0, &xp)?;
    report.local_pair_ok = at_p && !at_l0;
    if !at_p {
        report.notes.push("p is not a local norm at p".into());
    }
    if at_l0 {
        report.notes.push("p is a local norm at l0".into());
    }
    Ok(report)
}

/// Express an element of a subgroup S ≤ ambient in the invariant-factor
/// coordinates of S's abstract structure, given S's independent generators.
fn express_in(
    ambient: &FiniteAbelianGroup,
    gens: &[(GroupElement, u64)],
    abstract_group: &FiniteAbelianGroup,
    y: &GroupElement,
) -> GroupElement {
    let k = ambient.rank();
    let t = gens.len();
    if t == 0 {
        return abstract_group.identity();
    }
    let mut a = IntMat::zeros(k, t + k);
    for (j, (g, _)) in gens.iter().enumerate() {
        for i in 0..k {
            a.set(i, j, BigInt::from(g.coords[i]));
        }
    }
    for i in 0..k {
        a.set(i, t + i, BigInt::from(ambient.factors()[i]));
    }
    let b = IntMat::col_from(&y.coords.iter().map(|&c| c as i64).collect::<Vec<_>>());
    let z = solve(&a, &b).expect("element lies in the subgroup");
    let coords: Vec<u64> = (0..t)
        .map(|j| {
            z.get(j, 0)
                .mod_floor(&BigInt::from(abstract_group.factors()[j]))
                .to_u64()
                .expect("reduced coordinate")
        })
        .collect();
    GroupElement { coords }
}

/// The completion data of L at p, reduced to the 2-power subfield: the
/// 2-part image of D_p as an abstract group, with inertia, quadratic-layer
/// subgroup, and Frobenius expressed inside it.
pub fn local_descriptor_at(
    field: &CyclotomicFieldDescriptor,
    p: u64,
) -> Result<LocalExtensionDescriptor, GlobalError> {
    let gamma = field.galois_group();
    let c = field.conjugation();
    let i_p = inertia_group(field, p)?;
    let d_p = decomposition_group(field, p)?;
    // 2-part quotient of Γ, coordinatewise.
    let mut kept = Vec::new();
    let mut two_factors = Vec::new();
    for (i, &d) in gamma.factors().iter().enumerate() {
        let two = 1u64 << d.trailing_zeros();
        if two > 1 {
            kept.push((i, two));
            two_factors.push(two);
        }
    }
    let g2 = FiniteAbelianGroup::new(two_factors)?;
    let proj2 = |e: &GroupElement| GroupElement {
        coords: kept.iter().map(|&(i, two)| e.coords[i] % two).collect(),
    };
    let i_gens2: Vec<GroupElement> = i_p.gens().iter().map(&proj2).collect();
    let frob2 = proj2(&frobenius_class(field, p)?);
    let mut s_gens = i_gens2.clone();
    s_gens.push(frob2.clone());
    let s = Subgroup::new(&g2, s_gens)?;
    let gens = independent_generators(&s)?;
    let orders: Vec<u64> = gens.iter().map(|&(_, o)| o).collect();
    let g_abs = FiniteAbelianGroup::new(orders)?;
    let expr = |y: &GroupElement| express_in(&g2, &gens, &g_abs, y);
    let i_abs = Subgroup::new(&g_abs, i_gens2.iter().map(&expr).collect())?;
    let h_plus = if d_p.contains(&c) {
        Subgroup::new(&g_abs, vec![expr(&proj2(&c))])?
    } else {
        Subgroup::new(&g_abs, vec![])?
    };
    let sigma = expr(&frob2);
    Ok(LocalExtensionDescriptor::new(g_abs, h_plus, i_abs, sigma, 1, p)?)
}

/// Does L contain a quadratic subfield ramified at p? True iff the image of
/// I_p in Γ/Γ² is nontrivial.
fn has_ramified_quadratic_subfield(
    field: &CyclotomicFieldDescriptor,
    p: u64,
) -> Result<bool, GlobalError> {
    let gamma = field.galois_group();
    let i_p = inertia_group(field, p)?;
    let nontrivial = i_p.gens().iter().any(|g| {
        g.coords
            .iter()
            .zip(gamma.factors())
            .any(|(&x, &d)| d % 2 == 0 && x % 2 == 1)
    });
    Ok(nontrivial)
}

/// Decide the global question (A): norm-principality at p of the full
/// maximal-compact class for the CM torus of L.
pub fn decide_a(field: &CyclotomicFieldDescriptor, p: u64) -> Result<QuestionVerdict, GlobalError> {
    decide_global(field, p, Question::A)
}

/// Decide the global question (A°): the Kottwitz-kernel variant.
pub fn decide_a_circ(
    field: &CyclotomicFieldDescriptor,
    p: u64,
) -> Result<QuestionVerdict, GlobalError> {
    decide_global(field, p, Question::ACirc)
}

fn decide_global(
    field: &CyclotomicFieldDescriptor,
    p: u64,
    question: Question,
) -> Result<QuestionVerdict, GlobalError> {
    if !field.is_cm() {
        return Err(GlobalError::NotCm);
    }
    if !is_prime(p) {
        return Err(GlobalError::NotPrime(p));
    }
    let gamma = field.galois_group();
    let c = field.conjugation();
    let d_p = decomposition_group(field, p)?;
    let i_p = inertia_group(field, p)?;

    // Step 1: closed-form affirmative conditions.
    if !d_p.contains(&c) {
        return Ok(QuestionVerdict::affirmative_with(
            question,
            "quadratic layer splits at every place above p",
            Witness::ConditionMet { name: "split-at-p".into() },
        ));
    }
    let e_plus = {
        let c_sub = Subgroup::new(gamma, vec![c.clone()])?;
        i_p.order() / i_p.intersection(&c_sub)?.order()
    };
    if e_plus % 2 == 1 {
        return Ok(QuestionVerdict::affirmative_with(
            question,
            "totally real layer has odd ramification index at p",
            Witness::ConditionMet { name: "odd-ramification-index".into() },
        ));
    }
    if p != 2 && field.degree() % 32 != 0 {
        return Ok(QuestionVerdict::affirmative_with(
            question,
            "odd p with degree not divisible by 32",
            Witness::ConditionMet { name: "degree-not-32-divisible".into() },
        ));
    }
    if p == 2 && field.degree() % 8 != 0 {
        return Ok(QuestionVerdict::affirmative_with(
            question,
            "p = 2 with degree not divisible by 8",
            Witness::ConditionMet { name: "degree-not-8-divisible".into() },
        ));
    }

    // Step 2: local machinery on the completion at p (2-power subfield
    // reduction). The reduction is unconditional for (A); for (A°) in the
    // ramified case it additionally needs the odd part of Γ inside D_p.
    let mut diagnostics: Vec<String> = Vec::new();
    let desc = local_descriptor_at(field, p)?;
    let ramified_layer = i_p.contains(&c);
    let odd_part_in_dp = {
        let odd = |n: u64| n >> n.trailing_zeros();
        odd(d_p.order()) == odd(gamma.order())
    };
    match question {
        Question::A => {
            let local = decide_r_oracle(&desc)?;
            if local.is_affirmative() {
                let v = QuestionVerdict::affirmative_with(
                    question,
                    "local decider certifies the completion at p",
                    local.witness.clone().unwrap_or(Witness::ConditionMet {
                        name: "local-oracle".into(),
                    }),
                );
                return Ok(v.push_reason(&format!("local: {}", local.reason.join("; "))));
            }
            diagnostics.push("local oracle found no certifying subgroup".into());
            if p != 2 && has_ramified_quadratic_subfield(field, p)? {
                return Ok(QuestionVerdict::affirmative_with(
                    question,
                    "quadratic subfield ramified at p",
                    Witness::ConditionMet { name: "ramified-quadratic-subfield".into() },
                ));
            }
            diagnostics.push("no quadratic subfield ramified at p".into());
            // The smaller-class decider also certifies (A).
            if !ramified_layer || odd_part_in_dp {
                let circ = decide_r_circ(&desc)?;
                if circ.is_affirmative() {
                    let v = QuestionVerdict::affirmative_with(
                        question,
                        "kottwitz-kernel decider certifies the completion at p",
                        circ.witness.clone().unwrap_or(Witness::ConditionMet {
                            name: "local-kottwitz".into(),
                        }),
                    );
                    return Ok(v.push_reason(&format!("local: {}", circ.reason.join("; ")))); 
                }
                diagnostics.push("kottwitz-kernel decider negative or inconclusive".into());
            }
        }
        Question::ACirc => {
            if !ramified_layer {
                // Unramified quadratic layer: the two classes coincide.
                let local = decide_r_oracle(&desc)?;
                if local.is_affirmative() {
                    let v = QuestionVerdict::affirmative_with(
                        question,
                        "classes coincide (unramified layer); local decider certifies",
                        local.witness.clone().unwrap_or(Witness::ConditionMet {
                            name: "local-oracle".into(),
                        }),
                    );
                    return Ok(v.push_reason(&format!("local: {}", local.reason.join("; ")))); 
                }
                diagnostics.push("local oracle found no certifying subgroup".into());
            } else if odd_part_in_dp {
                let circ = decide_r_circ(&desc)?;
                if circ.is_affirmative() {
                    let v = QuestionVerdict::affirmative_with(
                        question,
                        "kottwitz-kernel decider certifies the completion at p",
                        circ.witness.clone().unwrap_or(Witness::ConditionMet {
                            name: "local-kottwitz".into(),
                        }),
                    );
                    return Ok(v.push_reason(&format!("local: {}", circ.reason.join("; ")))); 
                }
                diagnostics.push("kottwitz-kernel decider negative or inconclusive".into());
            } else {
                diagnostics
                    .push("odd-degree reduction unavailable for the ramified kernel case".into());
            }
        }
        _ => unreachable!("global decider only handles A and A-circ"),
    }

    // Step 3: structural negative certificate at an auxiliary ramified
    // prime. A negative for the full class forces a negative for the
    // kernel class, so the same certificate serves both questions.
    for ell0 in s_set(field)? {
        if ell0 == p || ell0 % 4 != 1 {
            continue;
        }
        let report = check_ngax(field, p, ell0)?;
        if report.ok() {
            let v = QuestionVerdict::negative(
                question,
                "structural negativity certificate at auxiliary prime",
                Witness::NegativeCertificate { ell0 },
            );
            return Ok(v.push_reason(&report.to_string()));
        }
        diagnostics.push(format!("certificate at {ell0} failed: {report}"));
    }

    // Step 4: honest out-of-scope.
    let mut v = QuestionVerdict::out_of_scope(
        question,
        "no affirmative condition holds and no negativity certificate found",
    );
    for d in diagnostics {
        v = v.push_reason(&d);
    }
    Ok(v)
}

/// The four generated families of negative examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyVariant {
    /// Odd p, quadratic layer unramified above p.
    OddPMain,
    /// Odd p ≡ 1 mod 4, second construction (layer ramified above p).
    OddPUnramified,
    /// p = 2, quadratic layer unramified above 2.
    TwoAdicUnramified,
    /// p = 2, quadratic layer ramified above 2.
    TwoAdicRamified,
}

impl FamilyVariant {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyVariant::OddPMain => "odd_p_main",
            FamilyVariant::OddPUnramified => "odd_p_unramified",
            FamilyVariant::TwoAdicUnramified => "two_adic_unramified",
            FamilyVariant::TwoAdicRamified => "two_adic_ramified",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FamilySpec {
    pub p: u64,
    pub degree: u64,
    pub variant: FamilyVariant,
    pub count: usize,
    pub search_bound: u64,
}

impl FamilySpec {
    fn validate(&self) -> Result<u32, GlobalError> {
        let v = self.variant.name();
        if !is_prime(self.p) {
            return Err(GlobalError::NotPrime(self.p));
        }
        let two_exp = crate::arith::log2_exact(self.degree)
            .ok_or(GlobalError::DegreeUnsupported(self.degree))?;
        match self.variant {
            FamilyVariant::OddPMain | FamilyVariant::OddPUnramified => {
                if self.p == 2 {
                    return Err(GlobalError::VariantPrime { p: self.p, variant: v });
                }
                if self.variant == FamilyVariant::OddPUnramified && self.p % 4 != 1 {
                    return Err(GlobalError::VariantPrime { p: self.p, variant: v });
                }
                if self.degree % 32 != 0 {
                    return Err(GlobalError::VariantDegree {
                        degree: self.degree,
                        variant: v,
                        why: "degree must be a multiple of 32",
                    });
                }
                Ok(two_exp - 2) // degree 2^{m+2}
            }
            FamilyVariant::TwoAdicUnramified | FamilyVariant::TwoAdicRamified => {
                if self.p != 2 {
                    return Err(GlobalError::VariantPrime { p: self.p, variant: v });
                }
                if self.degree % 8 != 0 {
                    return Err(GlobalError::VariantDegree {
                        degree: self.degree,
                        variant: v,
                        why: "degree must be a multiple of 8",
                    });
                }
                Ok(two_exp - 3) // degree 2^{m+3}
            }
        }
    }
}

/// Subgroup of (ℤ/m)ˣ cut out by linear conditions on the raw discrete-log
/// coordinates: rows of `cond` (as (prime, component index, coefficient)
/// triples) must land in the lattice spanned by `w_gens` and
/// diag(`target_moduli`).
fn field_with_conditions(
    m: u64,
    cond_rows: &[Vec<(u64, usize, i64)>],
    target_moduli: &[u64],
    w_gens: &[Vec<i64>],
) -> Result<CyclotomicFieldDescriptor, GlobalError> {
    let u = UnitGroup::new(m)?;
    let k = u.raw_orders().len();
    let t = cond_rows.len();
    assert_eq!(target_moduli.len(), t);
    let mut c = IntMat::zeros(t, k);
    for (r, row) in cond_rows.iter().enumerate() {
        for &(prime, which, coeff) in row {
            let (off, cnt) = u.raw_range_of_prime(prime).expect("prime divides modulus");
            assert!(which < cnt);
            c.set(r, off + which, BigInt::from(coeff));
        }
    }
    let mut w = IntMat::zeros(t, w_gens.len() + t);
    for (j, g) in w_gens.iter().enumerate() {
        for (i, &x) in g.iter().enumerate() {
            w.set(i, j, BigInt::from(x));
        }
    }
    for (i, &d) in target_moduli.iter().enumerate() {
        w.set(i, w_gens.len() + i, BigInt::from(d));
    }
    let basis = preimage_lattice(&c, &w);
    let mut gens = Vec::with_capacity(basis.cols());
    for j in 0..basis.cols() {
        let exps: Vec<BigInt> = (0..k).map(|i| basis.get(i, j).clone()).collect();
        gens.push(u.residue_from_raw(&exps));
    }
    make_field(m, &gens)
}

/// Compositum L₁·L₂: intersection of the subgroup preimages in
/// (ℤ/lcm(m₁,m₂))ˣ, conductor re-minimized.
pub fn compositum(
    f1: &CyclotomicFieldDescriptor,
    f2: &CyclotomicFieldDescriptor,
) -> Result<CyclotomicFieldDescriptor, GlobalError> {
    let m = lcm(f1.modulus, f2.modulus);
    let u = UnitGroup::new(m)?;
    let pre1 = preimage_subgroup(&u, f1)?;
    let pre2 = preimage_subgroup(&u, f2)?;
    let h = pre1.intersection(&pre2)?;
    let gens: Vec<u64> = independent_generators(&h)?.iter().map(|(e, _)| u.residue_of(e)).collect();
    make_field(m, &gens)
}

/// Preimage in (ℤ/M)ˣ of a field's subgroup H: the kernel of the induced
/// map (ℤ/M)ˣ → Γ.
fn preimage_subgroup(
    u: &UnitGroup,
    f: &CyclotomicFieldDescriptor,
) -> Result<Subgroup, GlobalError> {
    let t = u.group().rank();
    let rg = f.galois_group().rank();
    let mut a = IntMat::zeros(rg, t);
    for (j, &r) in u.generator_residues().iter().enumerate() {
        let img = f.class_of(r % f.modulus)?;
        for i in 0..rg {
            a.set(i, j, BigInt::from(img.coords[i]));
        }
    }
    let basis = preimage_lattice(&a, &f.galois_group().relation_matrix());
    let mut gens = Vec::with_capacity(basis.cols());
    for j in 0..basis.cols() {
        let coords: Vec<u64> = (0..t)
            .map(|i| {
                basis
                    .get(i, j)
                    .mod_floor(&BigInt::from(u.group().factors()[i]))
                    .to_u64()
                    .expect("reduced")
            })
            .collect();
        gens.push(GroupElement { coords });
    }
    Ok(Subgroup::new(u.group(), gens)?)
}

/// Candidate pairs (i, j) in ascending weight(i)·weight(j) order.
struct ProductOrder {
    heap: BinaryHeap<Reverse<(u128, usize, usize)>>,
    wa: Vec<u128>,
    wb: Vec<u128>,
}

impl ProductOrder {
    fn new(wa: Vec<u128>, wb: Vec<u128>) -> Self {
        let mut heap = BinaryHeap::new();
        if !wb.is_empty() {
            for (i, &w) in wa.iter().enumerate() {
                heap.push(Reverse((w * wb[0], i, 0)));
            }
        }
        ProductOrder { heap, wa, wb }
    }

    fn next(&mut self) -> Option<(usize, usize)> {
        let Reverse((_, i, j)) = self.heap.pop()?;
        if j + 1 < self.wb.len() {
            self.heap.push(Reverse((self.wa[i] * self.wb[j + 1], i, j + 1)));
        }
        Some((i, j))
    }
}

/// Generate `count` distinct ngax-certified fields for the given variant,
/// ordered by conductor. Every emitted field is re-verified structurally;
/// running out of candidates below the bound is an error, never a silent
/// truncation.
pub fn generate_family(
    spec: &FamilySpec,
) -> Result<Vec<(CyclotomicFieldDescriptor, NgaxReport)>, GlobalError> {
    let m_exp = spec.validate()?;
    match spec.variant {
        FamilyVariant::OddPMain | FamilyVariant::OddPUnramified => generate_odd_p(spec, m_exp),
        FamilyVariant::TwoAdicUnramified | FamilyVariant::TwoAdicRamified => {
            generate_two_adic(spec, m_exp)
        }
    }
}

fn generate_odd_p(
    spec: &FamilySpec,
    m_exp: u32,
) -> Result<Vec<(CyclotomicFieldDescriptor, NgaxReport)>, GlobalError> {
    let p = spec.p;
    let unram = spec.variant == FamilyVariant::OddPUnramified;
    let primes = primes_up_to(spec.search_bound);
    // ℓ: quadratic residue mod p, with the congruence class mod 8 matching
    // the residue class of p mod 4.
    let ell_class = if p % 4 == 1 { 1 } else { 5 };
    let ells: Vec<u64> = primes
        .iter()
        .copied()
        .filter(|&l| l != p && l % 8 == ell_class && jacobi(l as i64, p) == 1)
        .collect();
    // ℓ′ congruence depends on the variant and on p mod 8.
    let step = 1u64 << (m_exp + 1);
    let lp_class = if !unram || p % 8 == 1 { (1u64 << m_exp) + 1 } else { 1 };
    let ellps: Vec<u64> =
        primes.iter().copied().filter(|&l| l != p && l % step == lp_class % step).collect();

    let mut order = ProductOrder::new(
        ells.iter().map(|&l| l as u128).collect(),
        ellps.iter().map(|&l| l as u128).collect(),
    );
    let mut out: Vec<(CyclotomicFieldDescriptor, NgaxReport)> = Vec::new();
    let mut seen_conductors = Vec::new();
    while let Some((i, j)) = order.next() {
        if out.len() >= spec.count {
            break;
        }
        let (ell, ellp) = (ells[i], ellps[j]);
        if ell == ellp {
            continue;
        }
        // Frobenius-class conditions, tested exactly on the partial
        // compositum over {ℓ, p}: ℓ′ splits totally in the index-2
        // subextension but not in the full quartic-times-quadratic layer.
        let f_l1 = field_with_conditions(
            ell * p,
            &[vec![(ell, 0, 1)], vec![(p, 0, 1)]],
            &[4, 2],
            &[],
        )?;
        let f_l2 = field_with_conditions(
            ell * p,
            &[vec![(ell, 0, 1)], vec![(p, 0, 1)]],
            &[4, 2],
            &[vec![2, 1]],
        )?;
        if frobenius_class(&f_l2, ellp)? != f_l2.galois_group().identity() {
            continue;
        }
        if frobenius_class(&f_l1, ellp)? == f_l1.galois_group().identity() {
            continue;
        }
        let other = if unram {
            // Index-4 subextension of the ℓ′p-layer (conductor ℓ′p).
            field_with_conditions(
                ellp * p,
                &[vec![(ellp, 0, 1)], vec![(p, 0, 1)]],
                &[1u64 << m_exp, 4],
                &[vec![1i64 << (m_exp - 2), 1]],
            )?
        } else {
            // Degree-2^m subextension of ℚ(ζ_{ℓ′}).
            field_with_conditions(ellp, &[vec![(ellp, 0, 1)]], &[1u64 << m_exp], &[])?
        };
        let field = compositum(&f_l2, &other)?;
        if field.degree() != spec.degree || !field.is_cm() {
            continue;
        }
        if seen_conductors.contains(&field.conductor()) {
            continue;
        }
        let report = check_ngax(&field, p, ellp)?;
        if !report.ok() {
            continue;
        }
        seen_conductors.push(field.conductor());
        out.push((field, report));
    }
    if out.len() < spec.count {
        return Err(GlobalError::SearchExhausted {
            found: out.len(),
            requested: spec.count,
            bound: spec.search_bound,
        });
    }
    out.sort_by_key(|(f, _)| f.conductor());
    Ok(out)
}

fn generate_two_adic(
    spec: &FamilySpec,
    m_exp: u32,
) -> Result<Vec<(CyclotomicFieldDescriptor, NgaxReport)>, GlobalError> {
    let ramified = spec.variant == FamilyVariant::TwoAdicRamified;
    let primes = primes_up_to(spec.search_bound);
    let ells: Vec<u64> = primes.iter().copied().filter(|&l| l % 4 == 3).collect();
    // For each ℓ′ ≡ 5 mod 8, the auxiliary split primes ℓᵢ ≡ 1 mod 8 are the
    // m smallest quadratic residues mod ℓ′ in that class.
    struct LpEntry {
        ellp: u64,
        aux: Vec<u64>,
        weight: u128,
    }
    let mut lps: Vec<LpEntry> = Vec::new();
    for &lp in primes.iter().filter(|&&l| l % 8 == 5) {
        let mut aux = Vec::new();
        for &q in primes.iter().filter(|&&q| q % 8 == 1) {
            if aux.len() == m_exp as usize {
                break;
            }
            if jacobi(q as i64, lp) == 1 {
                aux.push(q);
            }
        }
        if aux.len() < m_exp as usize {
            continue;
        }
        let weight = aux.iter().fold(lp as u128, |w, &q| w * q as u128);
        lps.push(LpEntry { ellp: lp, aux, weight });
    }
    let mut order = ProductOrder::new(
        ells.iter().map(|&l| l as u128).collect(),
        lps.iter().map(|e| e.weight).collect(),
    );
    let mut out: Vec<(CyclotomicFieldDescriptor, NgaxReport)> = Vec::new();
    let mut seen_conductors = Vec::new();
    while let Some((i, j)) = order.next() {
        if out.len() >= spec.count {
            break;
        }
        let ell = ells[i];
        let entry = &lps[j];
        let ellp = entry.ellp;
        if ell == ellp || jacobi(ell as i64, ellp) != 1 || entry.aux.contains(&ell) {
            continue;
        }
        // ℓ′-layer: unramified variant takes the quartic inside ℚ(ζ_{ℓ′});
        // the ramified variant glues it with √2 and descends to the index-2
        // subextension (conductor 8ℓ′).
        let base = if ramified {
            field_with_conditions(
                8 * ellp,
                &[vec![(ellp, 0, 1)], vec![(2, 1, 1)]],
                &[4, 2],
                &[vec![2, 1]],
            )?
        } else {
            field_with_conditions(ellp, &[vec![(ellp, 0, 1)]], &[4], &[])?
        };
        // √ℓ for ℓ ≡ 3 mod 4 (conductor 4ℓ: sign character times the
        // Legendre character), and √ℓᵢ for ℓᵢ ≡ 1 mod 8 (conductor ℓᵢ).
        let mut field = compositum(
            &base,
            &field_with_conditions(4 * ell, &[vec![(2, 0, 1), (ell, 0, 1)]], &[2], &[])?,
        )?;
        for &q in &entry.aux {
            field = compositum(
                &field,
                &field_with_conditions(q, &[vec![(q, 0, 1)]], &[2], &[])?,
            )?;
        }
        if field.degree() != spec.degree || !field.is_cm() {
            continue;
        }
        if seen_conductors.contains(&field.conductor()) {
            continue;
        }
        let report = check_ngax(&field, 2, ellp)?;
        if !report.ok() {
            continue;
        }
        seen_conductors.push(field.conductor());
        out.push((field, report));
    }
    if out.len() < spec.count {
        return Err(GlobalError::SearchExhausted {
            found: out.len(),
            requested: spec.count,
            bound: spec.search_bound,
        });
    }
    out.sort_by_key(|(f, _)| f.conductor());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verdict::Status;

    fn gaussian() -> CyclotomicFieldDescriptor {
        make_field(4, &[]).unwrap()
    }

    fn zeta5() -> CyclotomicFieldDescriptor {
        make_field(5, &[]).unwrap()
    }

    #[test]
    fn basic_fields() {
        let qi = gaussian();
        assert_eq!(qi.conductor(), 4);
        assert_eq!(qi.degree(), 2);
        assert!(qi.is_cm());
        // ℚ(√5): −1 ≡ 4 lies in H, so conjugation is trivial.
        let sqrt5 = make_field(5, &[4]).unwrap();
        assert_eq!(sqrt5.degree(), 2);
        assert!(!sqrt5.is_cm());
        // ℚ(ζ₅) is CM of degree 4.
        assert_eq!(zeta5().degree(), 4);
        assert!(zeta5().is_cm());
    }

    #[test]
    fn conductor_normalization() {
        // ℚ(i) presented inside ℚ(ζ₁₂).
        let f = make_field(12, &[5]).unwrap();
        assert_eq!(f.conductor(), 4);
        assert_eq!(f.degree(), 2);
        assert_eq!(f.normalized_from(), Some(12));
        assert_eq!(f, gaussian());
        // m ≡ 2 mod 4 always drops the factor of 2.
        let f = make_field(6, &[]).unwrap();
        assert_eq!(f.conductor(), 3);
        assert_eq!(f.degree(), 2);
    }

    #[test]
    fn line_format_roundtrip() {
        let f = make_field(20, &[11]).unwrap();
        let line = f.to_string();
        let g: CyclotomicFieldDescriptor = line.parse().unwrap();
        assert_eq!(f, g);
        assert!("m=4 H".parse::<CyclotomicFieldDescriptor>().is_err());
        assert!("m=4 H=[3,x]".parse::<CyclotomicFieldDescriptor>().is_err());
    }

    #[test]
    fn decomposition_and_inertia() {
        let qi = gaussian();
        // 5 ≡ 1 mod 4 splits.
        assert!(decomposition_group(&qi, 5).unwrap().is_trivial());
        // 2 is totally ramified.
        let i2 = inertia_group(&qi, 2).unwrap();
        let d2 = decomposition_group(&qi, 2).unwrap();
        assert_eq!(i2.order(), 2);
        assert_eq!(d2.order(), 2);
        // ℚ(ζ₅): 2 has order 4 mod 5, inert; 5 totally ramified.
        let z5 = zeta5();
        assert!(inertia_group(&z5, 2).unwrap().is_trivial());
        assert_eq!(decomposition_group(&z5, 2).unwrap().order(), 4);
        assert_eq!(inertia_group(&z5, 5).unwrap().order(), 4);
    }

    #[test]
    fn s_set_examples() {
        assert_eq!(s_set(&gaussian()).unwrap(), vec![2]);
        assert_eq!(s_set(&zeta5()).unwrap(), vec![5]);
        // ℚ(√−5) (conductor 20): 2 ramifies in L/L⁺ with D = I; 5 ramifies
        // but D₅ ⊋ I₅ fails or holds depending on the splitting — computed,
        // not assumed.
        let f = make_field(20, &[11]).unwrap();
        assert!(f.is_cm());
        for ell in s_set(&f).unwrap() {
            let i = inertia_group(&f, ell).unwrap();
            assert_eq!(decomposition_group(&f, ell).unwrap().order(), i.order());
            assert!(i.contains(&f.conjugation()));
        }
    }

    #[test]
    fn artin_map_basics() {
        let qi = gaussian();
        // x = 1 is the identity everywhere.
        let one = RationalNonzero::one();
        assert_eq!(artin_local(&qi, 2, &one).unwrap(), qi.galois_group().identity());
        // x = −1 at 2 is nontrivial, matching (−1,−1)₂ = −1.
        let minus_one = RationalNonzero::from_integer(-1).unwrap();
        assert_ne!(artin_local(&qi, 2, &minus_one).unwrap(), qi.galois_group().identity());
        assert_eq!(crate::units::hilbert_symbol(-1, -1, crate::units::Place::Finite(2)), -1);
        // Unramified Frobenius consistency on ℚ(ζ₅).
        let z5 = zeta5();
        for ell in [2u64, 3, 7, 11, 13] {
            let x = RationalNonzero::from_prime(ell).unwrap();
            assert_eq!(
                artin_local(&z5, ell, &x).unwrap(),
                z5.class_of(ell % 5).unwrap(),
                "Frobenius at {ell}"
            );
        }
    }

    #[test]
    fn gaussian_norms_match_two_squares() {
        let qi = gaussian();
        // n > 0 is a norm from ℚ(i) iff every prime ≡ 3 mod 4 divides it to
        // an even power.
        let two_squares = |n: i64| -> bool {
            if n <= 0 {
                return false;
            }
            factorize(n as u64).iter().all(|&(p, e)| p % 4 != 3 || e % 2 == 0)
        };
        for n in -30i64..=30 {
            if n == 0 {
                continue;
            }
            let x = RationalNonzero::from_integer(n).unwrap();
            assert_eq!(
                is_global_norm(&qi, &x).unwrap(),
                two_squares(n),
                "norm test disagrees at {n}"
            );
        }
        assert!(is_global_norm(&qi, &RationalNonzero::from_integer(2).unwrap()).unwrap());
        assert!(!is_global_norm(&qi, &RationalNonzero::from_integer(3).unwrap()).unwrap());
    }

    #[test]
    fn ngax_rejects_small_field() {
        let report = check_ngax(&gaussian(), 3, 5).unwrap();
        assert!(!report.ok());
        assert!(!report.structure_ok);
    }

    #[test]
    fn decide_small_fields_affirmative() {
        for (m, gens) in [(4u64, vec![]), (3, vec![]), (20, vec![11u64])] {
            let f = make_field(m, &gens).unwrap();
            for p in [2u64, 3, 5, 7] {
                let a = decide_a(&f, p).unwrap();
                let ac = decide_a_circ(&f, p).unwrap();
                assert_eq!(a.status, Status::Affirmative, "A for m={m} p={p}");
                assert_eq!(ac.status, Status::Affirmative, "A° for m={m} p={p}");
            }
        }
        // Degree-4 CM field at p = 5: degree ∉ 32ℤ.
        let v = decide_a(&zeta5(), 5).unwrap();
        assert_eq!(v.status, Status::Affirmative);
    }

    #[test]
    fn family_odd_p_main_first_instance() {
        let spec = FamilySpec {
            p: 3,
            degree: 32,
            variant: FamilyVariant::OddPMain,
            count: 1,
            search_bound: 1000,
        };
        let fields = generate_family(&spec).unwrap();
        assert_eq!(fields.len(), 1);
        let (f, report) = &fields[0];
        assert_eq!(f.degree(), 32);
        assert!(f.is_cm());
        assert!(report.ok());
        // Smallest admissible pair: ℓ = 37, ℓ′ = 41 (ℓ = 13 needs ℓ′ = 233,
        // giving a larger conductor).
        assert_eq!(f.conductor(), 3 * 37 * 41);
        // The certified field is negative for both global questions.
        let a = decide_a(f, 3).unwrap();
        let ac = decide_a_circ(f, 3).unwrap();
        assert_eq!(a.status, Status::Negative);
        assert_eq!(ac.status, Status::Negative);
    }

    #[test]
    fn family_two_adic_first_instances() {
        for (variant, want_conductor) in [
            (FamilyVariant::TwoAdicUnramified, 4 * 3 * 13),
            (FamilyVariant::TwoAdicRamified, 8 * 3 * 13),
        ] {
            let spec = FamilySpec {
                p: 2,
                degree: 8,
                variant,
                count: 1,
                search_bound: 200,
            };
            let fields = generate_family(&spec).unwrap();
            let (f, report) = &fields[0];
            assert_eq!(f.degree(), 8, "{}", variant.name());
            assert!(report.ok(), "{}", variant.name());
            assert_eq!(f.conductor(), want_conductor, "{}", variant.name());
            assert_eq!(decide_a(f, 2).unwrap().status, Status::Negative);
            assert_eq!(decide_a_circ(f, 2).unwrap().status, Status::Negative);
        }
    }

    #[test]
    fn family_spec_validation() {
        let base = FamilySpec {
            p: 3,
            degree: 48,
            variant: FamilyVariant::OddPMain,
            count: 1,
            search_bound: 100,
        };
        assert!(matches!(generate_family(&base), Err(GlobalError::DegreeUnsupported(48))));
        let bad_p = FamilySpec { p: 2, degree: 32, ..base.clone() };
        assert!(matches!(generate_family(&bad_p), Err(GlobalError::VariantPrime { .. })));
        let bad_variant_p =
            FamilySpec { p: 3, degree: 32, variant: FamilyVariant::OddPUnramified, ..base.clone() };
        assert!(matches!(generate_family(&bad_variant_p), Err(GlobalError::VariantPrime { .. })));
        let exhausted = FamilySpec { degree: 32, search_bound: 20, ..base };
        assert!(matches!(
            generate_family(&exhausted),
            Err(GlobalError::SearchExhausted { found: 0, requested: 1, bound: 20 })
        ));
    }

}
