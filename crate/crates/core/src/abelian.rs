//! Finite abelian groups in invariant-factor form, their subgroups
//! (canonicalised as Hermite bases of preimage lattices), subgroup
//! enumeration, joins, intersections and quotients.

use crate::matrix::{
    hermite_col, lattice_contains, lattice_intersection, smith_normal_form, solve,
    IntMat,
};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashSet;
use thiserror::Error;

/// Hard cap on group orders for element-level algorithms (enumeration etc.).
pub const MAX_ENUM_ORDER: u64 = 1 << 14;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("invariant factors must form a divisibility chain of integers ≥ 2, got {0:?}")]
    BadInvariantFactors(Vec<u64>),
    #[error("element has {got} coordinates, group has {want} invariant factors")]
    BadElement { got: usize, want: usize },
    #[error("subgroup belongs to a different ambient group")]
    AmbientMismatch,
    #[error("group order {0} exceeds the enumeration bound {MAX_ENUM_ORDER}")]
    BoundExceeded(u64),
    #[error("subgroup is not cyclic")]
    NotCyclic,
}

/// A finite abelian group ⊕ᵢ ℤ/dᵢ with d₁ | d₂ | … | d_k, each dᵢ ≥ 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteAbelianGroup {
    factors: Vec<u64>,
}

/// An element, as coordinates modulo the invariant factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub coords: Vec<u64>,
}

impl FiniteAbelianGroup {
    pub fn new(factors: Vec<u64>) -> Result<Self, GroupError> {
        for w in factors.windows(2) {
            if w[1] % w[0] != 0 {
                return Err(GroupError::BadInvariantFactors(factors));
            }
        }
        if factors.iter().any(|&d| d < 2) {
            return Err(GroupError::BadInvariantFactors(factors));
        }
        Ok(FiniteAbelianGroup { factors })
    }

    /// Build from an arbitrary list of cyclic orders (not necessarily a
    /// divisibility chain); normalises via Smith form.
    pub fn from_orders(orders: &[u64]) -> Self {
        let nontrivial: Vec<u64> = orders.iter().copied().filter(|&d| d > 1).collect();
        if nontrivial.is_empty() {
            return FiniteAbelianGroup { factors: vec![] };
        }
        let n = nontrivial.len();
        let mut diag = IntMat::zeros(n, n);
        for (i, d) in nontrivial.iter().enumerate() {
            diag.set(i, i, BigInt::from(*d));
        }
        let snf = smith_normal_form(&diag);
        let factors = snf
            .diag()
            .iter()
            .filter(|d| !d.is_one())
            .map(|d| d.to_u64().expect("factor fits u64"))
            .collect();
        FiniteAbelianGroup { factors }
    }

    pub fn trivial() -> Self {
        FiniteAbelianGroup { factors: vec![] }
    }

    pub fn cyclic(n: u64) -> Self {
        if n <= 1 {
            Self::trivial()
        } else {
            FiniteAbelianGroup { factors: vec![n] }
        }
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> u64 {
        self.factors.iter().product()
    }

    pub fn exponent(&self) -> u64 {
        self.factors.last().copied().unwrap_or(1)
    }

    pub fn is_cyclic(&self) -> bool {
        self.factors.len() <= 1
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty()
    }

    /// True iff the order is a power of the prime p.
    pub fn is_p_group(&self, p: u64) -> bool {
        self.factors.iter().all(|&d| {
            let mut d = d;
            while d % p == 0 {
                d /= p;
            }
            d == 1
        })
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement { coords: vec![0; self.factors.len()] }
    }

    pub fn element(&self, coords: &[u64]) -> Result<GroupElement, GroupError> {
        if coords.len() != self.factors.len() {
            return Err(GroupError::BadElement { got: coords.len(), want: self.factors.len() });
        }
        Ok(GroupElement {
            coords: coords.iter().zip(&self.factors).map(|(&c, &d)| c % d).collect(),
        })
    }

    /// Element from possibly-negative coordinates.
    pub fn element_signed(&self, coords: &[i64]) -> Result<GroupElement, GroupError> {
        if coords.len() != self.factors.len() {
            return Err(GroupError::BadElement { got: coords.len(), want: self.factors.len() });
        }
        Ok(GroupElement {
            coords: coords
                .iter()
                .zip(&self.factors)
                .map(|(&c, &d)| c.rem_euclid(d as i64) as u64)
                .collect(),
        })
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement {
            coords: a
                .coords
                .iter()
                .zip(&b.coords)
                .zip(&self.factors)
                .map(|((&x, &y), &d)| (x + y) % d)
                .collect(),
        }
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        GroupElement {
            coords: a.coords.iter().zip(&self.factors).map(|(&x, &d)| (d - x) % d).collect(),
        }
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.add(a, &self.neg(b))
    }

    pub fn mul_scalar(&self, a: &GroupElement, k: u64) -> GroupElement {
        GroupElement {
            coords: a
                .coords
                .iter()
                .zip(&self.factors)
                .map(|(&x, &d)| (((x as u128) * (k as u128)) % d as u128) as u64)
                .collect(),
        }
    }

    pub fn element_order(&self, a: &GroupElement) -> u64 {
        let mut ord: u64 = 1;
        for (&x, &d) in a.coords.iter().zip(&self.factors) {
            if x == 0 {
                continue;
            }
            let g = gcd(x, d);
            ord = lcm(ord, d / g);
        }
        ord
    }

    /// All elements in a fixed lexicographic order. Requires the order to be
    /// within [MAX_ENUM_ORDER].
    pub fn elements(&self) -> Result<Vec<GroupElement>, GroupError> {
        let n = self.order();
        if n > MAX_ENUM_ORDER {
            return Err(GroupError::BoundExceeded(n));
        }
        let mut out = Vec::with_capacity(n as usize);
        let k = self.factors.len();
        let mut cur = vec![0u64; k];
        loop {
            out.push(GroupElement { coords: cur.clone() });
            let mut i = k;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < self.factors[i] {
                    break;
                }
                cur[i] = 0;
                if i == 0 {
                    return Ok(out);
                }
            }
        }
    }

    /// Relation lattice diag(d₁,…,d_k) as a matrix.
    pub fn relation_matrix(&self) -> IntMat {
        let k = self.factors.len();
        let mut m = IntMat::zeros(k, k);
        for (i, &d) in self.factors.iter().enumerate() {
            m.set(i, i, BigInt::from(d));
        }
        m
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// A subgroup of a [FiniteAbelianGroup], canonicalised as the column Hermite
/// basis of its preimage lattice in ℤ^k (which always contains diag(dᵢ)).
#[derive(Debug, Clone)]
pub struct Subgroup {
    ambient: FiniteAbelianGroup,
    gens: Vec<GroupElement>,
    basis: IntMat, // k×k column HNF, full rank
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.basis == other.basis
    }
}
impl Eq for Subgroup {}

impl std::hash::Hash for Subgroup {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.ambient.hash(state);
        self.basis.hash(state);
    }
}

impl Subgroup {
    pub fn new(ambient: &FiniteAbelianGroup, gens: Vec<GroupElement>) -> Result<Self, GroupError> {
        let k = ambient.rank();
        for g in &gens {
            if g.coords.len() != k {
                return Err(GroupError::BadElement { got: g.coords.len(), want: k });
            }
        }
        let mut m = IntMat::zeros(k, gens.len() + k);
        for (j, g) in gens.iter().enumerate() {
            for (i, &c) in g.coords.iter().enumerate() {
                m.set(i, j, BigInt::from(c));
            }
        }
        for (i, &d) in ambient.factors().iter().enumerate() {
            m.set(i, gens.len() + i, BigInt::from(d));
        }
        let basis = hermite_col(&m);
        Ok(Subgroup { ambient: ambient.clone(), gens, basis })
    }

    pub fn trivial(ambient: &FiniteAbelianGroup) -> Self {
        Subgroup::new(ambient, vec![]).expect("trivial subgroup")
    }

    pub fn whole(ambient: &FiniteAbelianGroup) -> Self {
        let k = ambient.rank();
        let gens = (0..k)
            .map(|i| {
                let mut c = vec![0u64; k];
                c[i] = 1;
                GroupElement { coords: c }
            })
            .collect();
        Subgroup::new(ambient, gens).expect("whole subgroup")
    }

    pub fn ambient(&self) -> &FiniteAbelianGroup {
        &self.ambient
    }

    pub fn gens(&self) -> &[GroupElement] {
        &self.gens
    }

    /// The canonical preimage-lattice basis (column HNF, full rank k×k).
    pub fn basis(&self) -> &IntMat {
        &self.basis
    }

    pub fn order(&self) -> u64 {
        let idx = self.basis.det().abs();
        let total = BigInt::from(self.ambient.order());
        (total / idx).to_u64().expect("subgroup order fits u64")
    }

    pub fn contains(&self, e: &GroupElement) -> bool {
        let v = IntMat::col_from(
            &e.coords.iter().map(|&c| c as i64).collect::<Vec<_>>(),
        );
        lattice_contains(&self.basis, &v)
    }

    pub fn is_subset_of(&self, other: &Subgroup) -> bool {
        self.ambient == other.ambient && solve(&other.basis, &self.basis).is_some()
    }

    pub fn join(&self, other: &Subgroup) -> Result<Subgroup, GroupError> {
        if self.ambient != other.ambient {
            return Err(GroupError::AmbientMismatch);
        }
        let mut gens = self.gens.clone();
        gens.extend(other.gens.iter().cloned());
        Subgroup::new(&self.ambient, gens)
    }

    pub fn intersection(&self, other: &Subgroup) -> Result<Subgroup, GroupError> {
        if self.ambient != other.ambient {
            return Err(GroupError::AmbientMismatch);
        }
        let basis = lattice_intersection(&self.basis, &other.basis);
        // Convert basis columns back to elements for the generator list.
        let gens = basis_columns_as_elements(&self.ambient, &basis);
        Subgroup::new(&self.ambient, gens)
    }

    /// Abstract structure of the subgroup (invariant factors).
    pub fn structure(&self) -> FiniteAbelianGroup {
        // S ≅ L / diag(d) where L is the preimage lattice: express diag(d)
        // in the basis of L and take the Smith form.
        let rel = self.ambient.relation_matrix();
        let coeff = solve(&self.basis, &rel).expect("relations lie in preimage lattice");
        let snf = smith_normal_form(&coeff);
        let factors: Vec<u64> = snf
            .diag()
            .iter()
            .filter(|d| !d.is_one() && !d.is_zero())
            .map(|d| d.to_u64().expect("fits"))
            .collect();
        FiniteAbelianGroup::new(factors).expect("SNF yields a divisibility chain")
    }

    pub fn is_cyclic(&self) -> bool {
        self.structure().is_cyclic()
    }

    pub fn is_trivial(&self) -> bool {
        self.order() == 1
    }

    /// All elements of the subgroup (ambient order must be small).
    pub fn elements(&self) -> Result<Vec<GroupElement>, GroupError> {
        Ok(self
            .ambient
            .elements()?
            .into_iter()
            .filter(|e| self.contains(e))
            .collect())
    }

    /// A single generator, if the subgroup is cyclic.
    pub fn cyclic_generator(&self) -> Result<GroupElement, GroupError> {
        let n = self.order();
        for e in self.elements()? {
            if self.ambient.element_order(&e) == n {
                return Ok(e);
            }
        }
        Err(GroupError::NotCyclic)
    }
}

fn basis_columns_as_elements(g: &FiniteAbelianGroup, basis: &IntMat) -> Vec<GroupElement> {
    let mut out = Vec::new();
    for j in 0..basis.cols() {
        let coords: Vec<u64> = (0..g.rank())
            .map(|i| {
                let d = BigInt::from(g.factors()[i]);
                let v = basis.get(i, j).mod_floor(&d);
                v.to_u64().expect("reduced coordinate fits")
            })
            .collect();
        let e = GroupElement { coords };
        if e.coords.iter().any(|&c| c != 0) {
            out.push(e);
        }
    }
    out
}

use num_integer::Integer as _;

/// Enumerate all subgroups, by breadth-first cyclic extension with
/// canonical-form deduplication. Deterministic order: sorted by (order,
/// canonical basis entries).
pub fn enumerate_subgroups(g: &FiniteAbelianGroup) -> Result<Vec<Subgroup>, GroupError> {
    let n = g.order();
    if n > MAX_ENUM_ORDER {
        return Err(GroupError::BoundExceeded(n));
    }
    let elems = g.elements()?;
    let mut seen: HashSet<IntMat> = HashSet::new();
    let mut out: Vec<Subgroup> = Vec::new();
    let mut frontier = vec![Subgroup::trivial(g)];
    seen.insert(frontier[0].basis.clone());
    out.push(frontier[0].clone());
    while let Some(s) = frontier.pop() {
        for e in &elems {
            if s.contains(e) {
                continue;
            }
            let mut gens = s.gens.clone();
            gens.push(e.clone());
            let ext = Subgroup::new(g, gens)?;
            if seen.insert(ext.basis.clone()) {
                out.push(ext.clone());
                frontier.push(ext);
            }
        }
    }
    out.sort_by(|a, b| {
        a.order()
            .cmp(&b.order())
            .then_with(|| format!("{:?}", a.basis).cmp(&format!("{:?}", b.basis)))
    });
    Ok(out)
}

/// Quotient G/S: the abstract group together with the projection data.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub group: FiniteAbelianGroup,
    /// Matrix q (r×k): coordinates of the image of an ambient element x are
    /// q·x reduced modulo the quotient's invariant factors.
    pub proj: IntMat,
}

impl Quotient {
    pub fn project(&self, g: &FiniteAbelianGroup, e: &GroupElement) -> GroupElement {
        assert_eq!(g.rank(), self.proj.cols());
        let v = IntMat::col_from(&e.coords.iter().map(|&c| c as i64).collect::<Vec<_>>());
        let img = self.proj.mul(&v);
        let coords: Vec<u64> = (0..self.group.rank())
            .map(|i| {
                let d = BigInt::from(self.group.factors()[i]);
                img.get(i, 0).mod_floor(&d).to_u64().expect("fits")
            })
            .collect();
        GroupElement { coords }
    }
}

/// Compute G/S with projection.
pub fn quotient(g: &FiniteAbelianGroup, s: &Subgroup) -> Result<Quotient, GroupError> {
    if s.ambient() != g {
        return Err(GroupError::AmbientMismatch);
    }
    // G/S = ℤ^k / L with L the preimage lattice of S; Smith form of L gives
    // the invariant factors and the (unimodular) coordinate change.
    let snf = smith_normal_form(&s.basis);
    let diag = snf.diag();
    let keep: Vec<usize> = (0..diag.len()).filter(|&i| !diag[i].is_one()).collect();
    let factors: Vec<u64> =
        keep.iter().map(|&i| diag[i].to_u64().expect("finite quotient")).collect();
    let group = FiniteAbelianGroup::new(factors)?;
    let proj = snf.u.select_rows(&keep);
    Ok(Quotient { group, proj })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grp(f: &[u64]) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(f.to_vec()).unwrap()
    }

    #[test]
    fn invariant_factor_validation() {
        assert!(FiniteAbelianGroup::new(vec![2, 4]).is_ok());
        assert!(FiniteAbelianGroup::new(vec![4, 2]).is_err());
        assert!(FiniteAbelianGroup::new(vec![2, 3]).is_err());
        assert!(FiniteAbelianGroup::new(vec![1]).is_err());
    }

    #[test]
    fn from_orders_normalises() {
        let g = FiniteAbelianGroup::from_orders(&[2, 3]);
        assert_eq!(g.factors(), &[6]);
        let g = FiniteAbelianGroup::from_orders(&[4, 2, 1]);
        assert_eq!(g.factors(), &[2, 4]);
    }

    #[test]
    fn element_orders() {
        let g = grp(&[2, 4]);
        assert_eq!(g.element_order(&g.element(&[1, 0]).unwrap()), 2);
        assert_eq!(g.element_order(&g.element(&[1, 1]).unwrap()), 4);
        assert_eq!(g.element_order(&g.identity()), 1);
    }

    #[test]
    fn subgroup_counts_small() {
        // ℤ/2 has 2 subgroups; ℤ/2×ℤ/2 has 5; ℤ/2×ℤ/4 has 8.
        assert_eq!(enumerate_subgroups(&grp(&[2])).unwrap().len(), 2);
        assert_eq!(enumerate_subgroups(&grp(&[2, 2])).unwrap().len(), 5);
        assert_eq!(enumerate_subgroups(&grp(&[2, 4])).unwrap().len(), 8);
        // ℤ/12 has one subgroup per divisor: 6.
        assert_eq!(enumerate_subgroups(&grp(&[12])).unwrap().len(), 6);
    }

    #[test]
    fn subgroup_order_membership_join() {
        let g = grp(&[2, 4]);
        let s = Subgroup::new(&g, vec![g.element(&[0, 2]).unwrap()]).unwrap();
        assert_eq!(s.order(), 2);
        assert!(s.contains(&g.element(&[0, 2]).unwrap()));
        assert!(!s.contains(&g.element(&[1, 0]).unwrap()));
        let t = Subgroup::new(&g, vec![g.element(&[1, 0]).unwrap()]).unwrap();
        let j = s.join(&t).unwrap();
        assert_eq!(j.order(), 4);
        assert_eq!(j.structure().factors(), &[2, 2]);
        let i = s.intersection(&t).unwrap();
        assert!(i.is_trivial());
    }

    #[test]
    fn quotient_z4xz2_by_diagonal_involution() {
        // (ℤ/4×ℤ/2)/⟨(2,0)⟩ ≅ ℤ/2×ℤ/2.
        let g = grp(&[2, 4]);
        let s = Subgroup::new(&g, vec![g.element(&[0, 2]).unwrap()]).unwrap();
        let q = quotient(&g, &s).unwrap();
        assert_eq!(q.group.factors(), &[2, 2]);
        // Projection is a homomorphism killing exactly S.
        let e = g.element(&[0, 2]).unwrap();
        assert_eq!(q.project(&g, &e), q.group.identity());
        let f = g.element(&[0, 1]).unwrap();
        assert_ne!(q.project(&g, &f), q.group.identity());
    }

    #[test]
    fn cyclic_generator_and_structure() {
        let g = grp(&[2, 8]);
        let s = Subgroup::new(&g, vec![g.element(&[1, 2]).unwrap()]).unwrap();
        assert!(s.is_cyclic());
        let gen = s.cyclic_generator().unwrap();
        assert_eq!(g.element_order(&gen), s.order());
        let w = Subgroup::whole(&g);
        assert_eq!(w.structure().factors(), &[2, 8]);
    }
}
