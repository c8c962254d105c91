//! Local decision procedures for the norm-principality questions attached to
//! a quadratic extension of non-archimedean étale algebras, presented purely
//! by Galois data (G, H⁺, I, σ, r).
//!
//! Two independent deciders are provided for the maximal-compact question:
//! a structural classifier matching the known negative patterns, and a
//! brute-force subgroup-criterion oracle; plus a direct cocharacter-level
//! surjectivity test for the Kottwitz-kernel variant.

use crate::abelian::{
    enumerate_subgroups, FiniteAbelianGroup, GroupElement, GroupError, Subgroup,
};
use crate::arith::{is_prime, log2_exact};
use crate::lattice::{
    build_torus_modules, coinvariants, sigma_fixed, FgAbelianPresentation, LatticeError,
    TorusModules,
};
use crate::matrix::{lattice_intersection, IntMat, LinearSolver};
use crate::verdict::{Question, QuestionVerdict, Status, Witness};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LocalError {
    #[error("group error: {0}")]
    Group(#[from] GroupError),
    #[error("lattice error: {0}")]
    Lattice(#[from] LatticeError),
    #[error("Galois group order {0} is not a power of 2")]
    NotTwoGroup(u64),
    #[error("quadratic layer subgroup must have order 1 or 2, got {0}")]
    QuadraticLayerInvalid(u64),
    #[error("Frobenius does not generate the quotient by inertia")]
    FrobeniusDoesNotGenerate,
    #[error("residue characteristic {0} is not prime")]
    ResidueCharNotPrime(u64),
    #[error("odd residue characteristic requires cyclic (tame) inertia")]
    TameInertiaNotCyclic,
    #[error("number of factors r must be ≥ 1")]
    ZeroFactors,
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
}

/// Shape of the inertia subgroup relative to the supported classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InertiaShape {
    /// Cyclic of order 2^m (m ≥ 0).
    Cyclic { m: u32 },
    /// ℤ/2^m × ℤ/2 with m ≥ 1.
    RankTwoWithInvolution { m: u32 },
    Unsupported,
}

/// Image of ν on the F₀-points of the torus, by valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuPointImage {
    Full,
    IndexTwoUnramified,
    IndexTwoRamified,
}

/// The Galois data of r copies of a quadratic extension F/F⁺ of étale
/// algebras over a local field F₀, inside an abelian 2-power splitting
/// field with group G: H⁺ cuts out the quadratic layer (order 2, or order 1
/// in the split case), I is inertia, σ a Frobenius lift.
#[derive(Debug, Clone)]
pub struct LocalExtensionDescriptor {
    group: FiniteAbelianGroup,
    h_plus: Subgroup,
    inertia: Subgroup,
    sigma: GroupElement,
    n_factors: usize,
    residue_char: u64,
}

impl LocalExtensionDescriptor {
    pub fn new(
        group: FiniteAbelianGroup,
        h_plus: Subgroup,
        inertia: Subgroup,
        sigma: GroupElement,
        n_factors: usize,
        residue_char: u64,
    ) -> Result<Self, LocalError> {
        if log2_exact(group.order()).is_none() {
            return Err(LocalError::NotTwoGroup(group.order()));
        }
        if h_plus.ambient() != &group || inertia.ambient() != &group {
            return Err(LocalError::Group(GroupError::AmbientMismatch));
        }
        let hp = h_plus.order();
        if hp > 2 {
            return Err(LocalError::QuadraticLayerInvalid(hp));
        }
        if n_factors == 0 {
            return Err(LocalError::ZeroFactors);
        }
        if !is_prime(residue_char) {
            return Err(LocalError::ResidueCharNotPrime(residue_char));
        }
        // ⟨σ⟩·I = G.
        let sig_sub = Subgroup::new(&group, vec![sigma.clone()])?;
        if sig_sub.join(&inertia)?.order() != group.order() {
            return Err(LocalError::FrobeniusDoesNotGenerate);
        }
        let desc = LocalExtensionDescriptor {
            group,
            h_plus,
            inertia,
            sigma,
            n_factors,
            residue_char,
        };
        if desc.residue_char != 2 && !matches!(desc.inertia_shape(), InertiaShape::Cyclic { .. })
        {
            return Err(LocalError::TameInertiaNotCyclic);
        }
        Ok(desc)
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }
    pub fn h_plus(&self) -> &Subgroup {
        &self.h_plus
    }
    pub fn inertia(&self) -> &Subgroup {
        &self.inertia
    }
    pub fn sigma(&self) -> &GroupElement {
        &self.sigma
    }
    pub fn n_factors(&self) -> usize {
        self.n_factors
    }
    pub fn residue_char(&self) -> u64 {
        self.residue_char
    }

    /// Split étale algebra: the quadratic layer is trivial.
    pub fn is_split(&self) -> bool {
        self.h_plus.is_trivial()
    }

    pub fn inertia_shape(&self) -> InertiaShape {
        inertia_shape_of(&self.inertia)
    }

    /// m = log₂ of the order of the cyclic part of inertia.
    pub fn m_exponent(&self) -> Option<u32> {
        match self.inertia_shape() {
            InertiaShape::Cyclic { m } | InertiaShape::RankTwoWithInvolution { m } => Some(m),
            InertiaShape::Unsupported => None,
        }
    }

    /// n = log₂ [G : I], the residue-field extension exponent.
    pub fn n_exponent(&self) -> u32 {
        log2_exact(self.group.order() / self.inertia.order()).expect("2-group index")
    }

    /// F/F⁺ is ramified exactly when the quadratic layer sits inside inertia.
    pub fn quadratic_layer_ramified(&self) -> bool {
        !self.is_split() && self.h_plus.is_subset_of(&self.inertia)
    }
}

pub fn inertia_shape_of(inertia: &Subgroup) -> InertiaShape {
    let s = inertia.structure();
    let f = s.factors();
    match f.len() {
        0 => InertiaShape::Cyclic { m: 0 },
        1 => match log2_exact(f[0]) {
            Some(m) => InertiaShape::Cyclic { m },
            None => InertiaShape::Unsupported,
        },
        2 if f[0] == 2 => match log2_exact(f[1]) {
            Some(m) => InertiaShape::RankTwoWithInvolution { m },
            None => InertiaShape::Unsupported,
        },
        _ => InertiaShape::Unsupported,
    }
}

/// Valuation image of ν on the F₀-points: full unless the algebra is a field
/// tower with cyclic G, in which case ν's image is the norm group of the
/// unique quadratic subextension — index two, ramified iff I = G.
pub fn nu_point_image(desc: &LocalExtensionDescriptor) -> NuPointImage {
    if desc.is_split() || !desc.group.is_cyclic() {
        return NuPointImage::Full;
    }
    // Cyclic G: the quadratic subextension is unramified iff I lies in the
    // unique index-2 subgroup, i.e. iff I ≠ G.
    if desc.inertia.order() == desc.group.order() {
        NuPointImage::IndexTwoRamified
    } else {
        NuPointImage::IndexTwoUnramified
    }
}

/// The two Kottwitz-type subgroups of the F₀-points coincide exactly when
/// no factor is a ramified quadratic field extension (torsion-freeness of
/// the inertia coinvariants).
pub fn kottwitz_equal_k(desc: &LocalExtensionDescriptor) -> bool {
    !desc.quadratic_layer_ramified()
}

/// Reusable brute-force decider for the maximal-compact question over a
/// fixed (G, H⁺): caches, per subgroup H′ ≤ G, whether ν is surjective on
/// the H′-fixed cocharacters, so sweeps over inertia subgroups are cheap.
pub struct OracleContext {
    group: FiniteAbelianGroup,
    split: bool,
    subgroups: Vec<Subgroup>,
    /// For each subgroup index: gcd of ν over a basis of X_*(T)^{H′} is 1.
    nu_surjective: Vec<Option<bool>>,
    /// Ambient basis of X_*(T) (r = 1) and fixed-point data, lazily used.
    ambient_basis: IntMat,
    elems: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
}

impl OracleContext {
    pub fn new(group: &FiniteAbelianGroup, h_plus: &Subgroup) -> Result<Self, LocalError> {
        if h_plus.ambient() != group {
            return Err(LocalError::Group(GroupError::AmbientMismatch));
        }
        if h_plus.order() > 2 {
            return Err(LocalError::QuadraticLayerInvalid(h_plus.order()));
        }
        // The verdict is independent of r, so the context always uses r = 1.
        let tm = build_torus_modules(group, h_plus, 1)?;
        let subgroups = enumerate_subgroups(group)?;
        let n = subgroups.len();
        let elems = group.elements()?;
        let index = elems.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        Ok(OracleContext {
            group: group.clone(),
            split: h_plus.is_trivial(),
            subgroups,
            nu_surjective: vec![None; n],
            ambient_basis: tm.ambient_basis,
            elems,
            index,
        })
    }

    /// ν(X_*(T)^{H′}) = ℤ? Computed in ambient coordinates: the fixed
    /// sublattice is the intersection with the span of H′-orbit sums, and ν
    /// is the last ambient coordinate.
    fn nu_surjective_on_fixed(&mut self, idx: usize) -> bool {
        if let Some(v) = self.nu_surjective[idx] {
            return v;
        }
        let h = &self.subgroups[idx];
        let orb = orbit_sum_basis(&self.group, &self.elems, &self.index, h, 1);
        let fixed = lattice_intersection(&self.ambient_basis, &orb);
        let last = fixed.rows() - 1;
        let mut g = BigInt::zero();
        for j in 0..fixed.cols() {
            g = g.gcd(fixed.get(last, j));
        }
        let v = g.is_one();
        self.nu_surjective[idx] = Some(v);
        v
    }

    /// Decide the maximal-compact question for a given inertia subgroup.
    pub fn decide(&mut self, inertia: &Subgroup) -> Result<QuestionVerdict, LocalError> {
        if inertia.ambient() != &self.group {
            return Err(LocalError::Group(GroupError::AmbientMismatch));
        }
        if self.group.is_cyclic() {
            return Ok(QuestionVerdict::affirmative(Question::R, "cyclic-galois-group"));
        }
        if self.split {
            return Ok(QuestionVerdict::affirmative(Question::R, "split-algebra"));
        }
        let order = self.group.order();
        for idx in 0..self.subgroups.len() {
            if self.subgroups[idx].join(inertia)?.order() != order {
                continue;
            }
            if self.nu_surjective_on_fixed(idx) {
                let generators = self.subgroups[idx]
                    .gens()
                    .iter()
                    .map(|e| e.coords.clone())
                    .collect();
                return Ok(QuestionVerdict::affirmative_with(
                    Question::R,
                    "certifying-subgroup-found",
                    Witness::CertifyingSubgroup { generators },
                ));
            }
        }
        Ok(QuestionVerdict::negative(
            Question::R,
            "subgroup-sweep-exhausted",
            Witness::SweepExhausted { subgroups_checked: self.subgroups.len() },
        ))
    }
}

/// Brute-force decider for the maximal-compact question: affirmative iff G
/// is cyclic, the algebra is split, or some subgroup H′ with H′·I = G has
/// ν surjective on X_*(T)^{H′}. Independent of r and σ.
pub fn decide_r_oracle(desc: &LocalExtensionDescriptor) -> Result<QuestionVerdict, LocalError> {
    let mut ctx = OracleContext::new(&desc.group, &desc.h_plus)?;
    ctx.decide(&desc.inertia)
}

/// Ambient basis of X^H for X = ℤ[G]^{⊕r} ⊕ ℤ: orbit sums of H on the group
/// coordinates, plus the scalar coordinate.
fn orbit_sum_basis(
    group: &FiniteAbelianGroup,
    elems: &[GroupElement],
    index: &HashMap<GroupElement, usize>,
    h: &Subgroup,
    r: usize,
) -> IntMat {
    let n = elems.len();
    let h_elems = h.elements().expect("small group");
    let mut orbit_of = vec![usize::MAX; n];
    let mut n_orbits = 0usize;
    for (i, e) in elems.iter().enumerate() {
        if orbit_of[i] != usize::MAX {
            continue;
        }
        for he in &h_elems {
            orbit_of[index[&group.add(e, he)]] = n_orbits;
        }
        n_orbits += 1;
    }
    let mut m = IntMat::zeros(r * n + 1, r * n_orbits + 1);
    for f in 0..r {
        for (i, _) in elems.iter().enumerate() {
            m.set(f * n + i, f * n_orbits + orbit_of[i], BigInt::one());
        }
    }
    m.set(r * n, r * n_orbits, BigInt::one());
    m
}

// ---------------------------------------------------------------------------
// Structural classifier: negative patterns.
// ---------------------------------------------------------------------------

struct PatternHit {
    name: &'static str,
    exponents: Vec<u32>,
}

/// Classify the maximal-compact question by matching (G, H⁺, I) against the
/// known complete list of negative structural patterns. Agrees with
/// `decide_r_oracle` on every supported input.
pub fn classify_r(desc: &LocalExtensionDescriptor) -> QuestionVerdict {
    if matches!(desc.inertia_shape(), InertiaShape::Unsupported) {
        return QuestionVerdict::out_of_scope(Question::R, "unsupported-inertia-shape");
    }
    if desc.is_split() {
        return QuestionVerdict::affirmative(Question::R, "split-algebra");
    }
    if desc.group.is_cyclic() {
        return QuestionVerdict::affirmative(Question::R, "cyclic-galois-group");
    }
    match negative_pattern_match(&desc.group, &desc.h_plus, &desc.inertia) {
        Some(hit) => QuestionVerdict::negative(
            Question::R,
            "matched-negative-pattern",
            Witness::NegativePattern {
                name: hit.name.to_string(),
                exponents: hit.exponents,
            },
        ),
        None => QuestionVerdict::affirmative(Question::R, "no-negative-pattern"),
    }
}

fn negative_pattern_match(
    g: &FiniteAbelianGroup,
    h_plus: &Subgroup,
    inertia: &Subgroup,
) -> Option<PatternHit> {
    // All patterns have a nontrivial quadratic layer.
    if h_plus.order() != 2 {
        return None;
    }
    let h = h_plus.cyclic_generator().expect("order-2 subgroup");
    match inertia_shape_of(inertia) {
        InertiaShape::Cyclic { m } => cyclic_inertia_patterns(g, &h, inertia, m),
        InertiaShape::RankTwoWithInvolution { m } => {
            rank_two_inertia_patterns(g, &h, inertia, m)
        }
        InertiaShape::Unsupported => None,
    }
}

/// All x with k·x = target.
fn scalar_preimages(g: &FiniteAbelianGroup, k: u64, target: &GroupElement) -> Vec<GroupElement> {
    g.elements()
        .expect("small group")
        .into_iter()
        .filter(|x| &g.mul_scalar(x, k) == target)
        .collect()
}

fn elements_of_order(sub: &Subgroup, order: u64) -> Vec<GroupElement> {
    sub.elements()
        .expect("small group")
        .into_iter()
        .filter(|e| sub.ambient().element_order(e) == order)
        .collect()
}

/// The chosen elements generate G as an internal direct sum with the given
/// orders (orders must multiply up to |G|).
fn is_direct_basis(g: &FiniteAbelianGroup, parts: &[(GroupElement, u64)]) -> bool {
    let mut prod = 1u64;
    for (e, ord) in parts {
        if g.element_order(e) != *ord {
            return false;
        }
        prod = match prod.checked_mul(*ord) {
            Some(p) => p,
            None => return false,
        };
    }
    if prod != g.order() {
        return false;
    }
    let gens: Vec<GroupElement> = parts.iter().map(|(e, _)| e.clone()).collect();
    Subgroup::new(g, gens).expect("elements of g").order() == g.order()
}

fn sorted_powers(exps: &[u32]) -> Vec<u64> {
    let mut v: Vec<u64> = exps.iter().map(|&e| 1u64 << e).collect();
    v.sort_unstable();
    v
}

/// Negative patterns with cyclic inertia of order 2^m: either the
/// unramified-quadratic-layer family (G ≅ ℤ/2^m × ℤ/2^n, 0 < m < n,
/// H⁺ = ⟨(0, 2^{n−1})⟩, I = ⟨(1,0)⟩) or the merged family
/// (G ≅ ℤ/2^u × ℤ/2^{m+n−u}, 0 < u < min(m,n), H⁺ = ⟨(0, 2^{m+n−u−1})⟩,
/// I = ⟨(1, 2^{n−u})⟩).
fn cyclic_inertia_patterns(
    g: &FiniteAbelianGroup,
    h: &GroupElement,
    inertia: &Subgroup,
    m: u32,
) -> Option<PatternHit> {
    let total = log2_exact(g.order()).expect("2-group");
    if m == 0 || m >= total {
        return None;
    }
    let n = total - m;

    // Family (i): unramified quadratic layer.
    if m < n && g.factors() == sorted_powers(&[m, n]).as_slice() {
        for b in scalar_preimages(g, 1 << (n - 1), h) {
            if g.element_order(&b) != 1 << n {
                continue;
            }
            for a in elements_of_order(inertia, 1 << m) {
                if is_direct_basis(g, &[(a.clone(), 1 << m), (b.clone(), 1 << n)]) {
                    return Some(PatternHit {
                        name: "cyclic-inertia-unramified",
                        exponents: vec![m, n],
                    });
                }
            }
        }
    }

    // Family (ii): inertia glued across both cyclic summands.
    if g.rank() == 2 {
        let u = log2_exact(g.factors()[0]).expect("2-group");
        if u >= 1 && u < m.min(n) && g.factors() == sorted_powers(&[u, m + n - u]).as_slice() {
            let big = m + n - u;
            for b in scalar_preimages(g, 1 << (big - 1), h) {
                if g.element_order(&b) != 1 << big {
                    continue;
                }
                let shift = g.mul_scalar(&b, 1 << (n - u));
                for t in elements_of_order(inertia, 1 << m) {
                    let a = g.sub(&t, &shift);
                    if is_direct_basis(g, &[(a, 1 << u), (b.clone(), 1 << big)]) {
                        return Some(PatternHit {
                            name: "cyclic-inertia-glued",
                            exponents: vec![m, n, u],
                        });
                    }
                }
            }
        }
    }
    None
}

/// Negative patterns with inertia ≅ ℤ/2^m × ℤ/2 (wild 2-adic shapes).
fn rank_two_inertia_patterns(
    g: &FiniteAbelianGroup,
    h: &GroupElement,
    inertia: &Subgroup,
    m: u32,
) -> Option<PatternHit> {
    let total = log2_exact(g.order()).expect("2-group");
    // |I| = 2^{m+1}, so n = total − m − 1.
    if total < m + 1 {
        return None;
    }
    let n = total - m - 1;
    if m == 0 || n == 0 {
        return None;
    }
    let i_elems = inertia.elements().expect("small group");
    let involutions: Vec<GroupElement> = i_elems
        .iter()
        .filter(|e| g.element_order(e) == 2)
        .cloned()
        .collect();

    // (a) G ≅ ℤ/2^m × ℤ/2^n × ℤ/2, m < n, H⁺ = ⟨(0, 2^{n−1}, 0)⟩,
    //     I = ⟨(1,0,0), (0,0,1)⟩.
    if m < n && g.factors() == sorted_powers(&[m, n, 1]).as_slice() {
        for b in scalar_preimages(g, 1 << (n - 1), h) {
            if g.element_order(&b) != 1 << n {
                continue;
            }
            for c in &involutions {
                for a in elements_of_order(inertia, 1 << m) {
                    if !is_direct_basis(
                        g,
                        &[(a.clone(), 1 << m), (b.clone(), 1 << n), (c.clone(), 2)],
                    ) {
                        continue;
                    }
                    let img = Subgroup::new(g, vec![a.clone(), c.clone()]).expect("in g");
                    if &img == inertia {
                        return Some(PatternHit {
                            name: "wild-inertia-split-involution",
                            exponents: vec![m, n],
                        });
                    }
                }
            }
        }
    }

    // (b) G ≅ ℤ/2^m × ℤ/2^{n+1}, m ≤ n, H⁺ = ⟨(0, 2^n)⟩ ⊆ I,
    //     I = ⟨(1,0), (0,2^n)⟩.
    if m <= n
        && g.factors() == sorted_powers(&[m, n + 1]).as_slice()
        && inertia.contains(h)
    {
        for b in scalar_preimages(g, 1 << n, h) {
            if g.element_order(&b) != 1 << (n + 1) {
                continue;
            }
            for a in elements_of_order(inertia, 1 << m) {
                if !is_direct_basis(g, &[(a.clone(), 1 << m), (b.clone(), 1 << (n + 1))]) {
                    continue;
                }
                let img = Subgroup::new(g, vec![a.clone(), h.clone()]).expect("in g");
                if &img == inertia {
                    return Some(PatternHit {
                        name: "wild-inertia-ramified-involution",
                        exponents: vec![m, n],
                    });
                }
            }
        }
    }

    // (c) G ≅ ℤ/2^u × ℤ/2^{m+n−u} × ℤ/2, 0 < u < min(m,n),
    //     H⁺ = ⟨(0, 2^{m+n−u−1}, 0)⟩, I = ⟨(1, 2^{n−u}, 0), (0,0,1)⟩.
    for u in 1..m.min(n) {
        let big = m + n - u;
        if g.factors() != sorted_powers(&[u, big, 1]).as_slice() {
            continue;
        }
        for b in scalar_preimages(g, 1 << (big - 1), h) {
            if g.element_order(&b) != 1 << big {
                continue;
            }
            let shift = g.mul_scalar(&b, 1 << (n - u));
            for c in &involutions {
                for t in &i_elems {
                    let a = g.sub(t, &shift);
                    if !is_direct_basis(
                        g,
                        &[(a.clone(), 1 << u), (b.clone(), 1 << big), (c.clone(), 2)],
                    ) {
                        continue;
                    }
                    let img = Subgroup::new(g, vec![t.clone(), c.clone()]).expect("in g");
                    if &img == inertia {
                        return Some(PatternHit {
                            name: "wild-inertia-glued-split-involution",
                            exponents: vec![m, n, u],
                        });
                    }
                }
            }
        }
    }

    // (d) G ≅ ℤ/2^{u+1} × ℤ/2^{m+n−u}, 0 ≤ u < min(m,n),
    //     H⁺ = ⟨(0, 2^{m+n−u−1})⟩, I = ⟨(1, 2^{n−u}), (2^u, 0)⟩.
    for u in 0..m.min(n) {
        let big = m + n - u;
        if g.factors() != sorted_powers(&[u + 1, big]).as_slice() {
            continue;
        }
        for b in scalar_preimages(g, 1 << (big - 1), h) {
            if g.element_order(&b) != 1 << big {
                continue;
            }
            let shift = g.mul_scalar(&b, 1 << (n - u));
            for t in &i_elems {
                let a = g.sub(t, &shift);
                if !is_direct_basis(g, &[(a.clone(), 1 << (u + 1)), (b.clone(), 1 << big)]) {
                    continue;
                }
                let second = g.mul_scalar(&a, 1 << u);
                let img = Subgroup::new(g, vec![t.clone(), second]).expect("in g");
                if &img == inertia {
                    return Some(PatternHit {
                        name: "wild-inertia-glued-ramified",
                        exponents: vec![m, n, u],
                    });
                }
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Kottwitz-kernel variant: direct surjectivity test.
// ---------------------------------------------------------------------------

/// Reusable decider for the Kottwitz-kernel question over fixed
/// (G, H⁺, I, r): all σ-independent work (torus, coinvariants, fixed-point
/// bases of every subgroup, coset structures) is done at construction, so a
/// sweep over Frobenius lifts is cheap.
pub struct CircContext {
    group: FiniteAbelianGroup,
    elems: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
    tm: TorusModules,
    coinv: FgAbelianPresentation,
    solver: LinearSolver,
    /// One entry per subgroup H with nonzero fixed part: the ambient basis
    /// of X_*(T)^H and the coset decomposition of G by J = I·H.
    blocks: Vec<CandidateBlock>,
    n_factors: usize,
}

struct CandidateBlock {
    fixed_ambient: IntMat,
    coset_of: Vec<usize>,
    reps: Vec<GroupElement>,
}

impl CircContext {
    pub fn new(
        group: &FiniteAbelianGroup,
        h_plus: &Subgroup,
        inertia: &Subgroup,
        n_factors: usize,
    ) -> Result<Self, LocalError> {
        if h_plus.ambient() != group || inertia.ambient() != group {
            return Err(LocalError::Group(GroupError::AmbientMismatch));
        }
        let tm = build_torus_modules(group, h_plus, n_factors)?;
        let coinv = coinvariants(&tm.t, inertia)?;
        let elems = group.elements()?;
        let index: HashMap<GroupElement, usize> =
            elems.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut blocks = Vec::new();
        for h in enumerate_subgroups(group)? {
            let orb = orbit_sum_basis(group, &elems, &index, &h, n_factors);
            let fixed_ambient = lattice_intersection(&tm.ambient_basis, &orb);
            if fixed_ambient.cols() == 0 {
                continue;
            }
            let j = h.join(inertia)?;
            let j_elems = j.elements()?;
            let mut coset_of = vec![usize::MAX; elems.len()];
            let mut reps = Vec::new();
            for (i, e) in elems.iter().enumerate() {
                if coset_of[i] != usize::MAX {
                    continue;
                }
                let c = reps.len();
                for je in &j_elems {
                    coset_of[index[&group.add(e, je)]] = c;
                }
                reps.push(e.clone());
            }
            blocks.push(CandidateBlock { fixed_ambient, coset_of, reps });
        }
        let solver = LinearSolver::new(tm.ambient_basis.clone());
        Ok(CircContext {
            group: group.clone(),
            elems,
            index,
            tm,
            coinv,
            solver,
            blocks,
            n_factors,
        })
    }

    /// Ambient coordinate permutation of the action of `e` on ℤ[G]^r ⊕ ℤ.
    fn perm_of(&self, e: &GroupElement) -> Vec<usize> {
        let n = self.elems.len();
        let r = self.n_factors;
        let mut perm = vec![0usize; r * n + 1];
        for (j, x) in self.elems.iter().enumerate() {
            let img = self.index[&self.group.add(e, x)];
            for f in 0..r {
                perm[f * n + j] = f * n + img;
            }
        }
        perm[r * n] = r * n;
        perm
    }

    /// Decide the Kottwitz-kernel question for a Frobenius lift σ: the
    /// σ-fixed parts of the coinvariants of the coflasque cover must surject
    /// onto those of the torus.
    pub fn decide(&self, sigma: &GroupElement) -> Result<QuestionVerdict, LocalError> {
        if self.coinv.coords() == 0 {
            return Ok(QuestionVerdict::affirmative(Question::RCirc, "trivial-target"));
        }
        let sigma_perm = self.perm_of(sigma);
        let amb_rank = self.tm.ambient_basis.rows();

        // Induced σ on X_*(T): solve B·x = P_σ·B.
        let mut pb = IntMat::zeros(amb_rank, self.tm.ambient_basis.cols());
        for i in 0..amb_rank {
            for j in 0..self.tm.ambient_basis.cols() {
                pb.set(sigma_perm[i], j, self.tm.ambient_basis.get(i, j).clone());
            }
        }
        let sigma_t = self.solver.solve(&pb).expect("torus lattice is G-stable");
        let fixed = sigma_fixed(&self.coinv, &sigma_t)?;

        // Candidate generators: one per σ-orbit of J-cosets per fixed basis
        // vector, as ambient columns.
        let mut cand_amb = IntMat::zeros(amb_rank, 0);
        for b in &self.blocks {
            let nc = b.reps.len();
            let mut visited = vec![false; nc];
            for c0 in 0..nc {
                if visited[c0] {
                    continue;
                }
                visited[c0] = true;
                // Walk the σ-orbit, accumulating Σ_j P_σ^j · P_{rep} · W.
                let rep_perm = self.perm_of(&b.reps[c0]);
                let mut acc = apply_perm(&rep_perm, &b.fixed_ambient);
                let mut total = acc.clone();
                let mut cur = self.group.add(sigma, &b.reps[c0]);
                loop {
                    let c = b.coset_of[self.index[&cur]];
                    if c == c0 {
                        break;
                    }
                    visited[c] = true;
                    acc = apply_perm(&sigma_perm, &acc);
                    total = total.add(&acc);
                    cur = self.group.add(sigma, &cur);
                }
                cand_amb = cand_amb.hstack(&total);
            }
        }
        let cand_t = self.solver.solve(&cand_amb).expect("candidates lie in the torus lattice");
        let cand = self.coinv.project(&cand_t);
        let rel = self.coinv.relation_lattice();
        match fixed.spanned_by(&cand, &rel) {
            Ok(()) => Ok(QuestionVerdict::affirmative(
                Question::RCirc,
                "fixed-coinvariants-surjective",
            )),
            Err(factors) => {
                let invariant_factors: Vec<u64> = factors
                    .iter()
                    .map(|f| f.to_u64().expect("finite cokernel factor"))
                    .collect();
                Ok(QuestionVerdict::negative(
                    Question::RCirc,
                    "fixed-coinvariants-not-surjective",
                    Witness::Cokernel { invariant_factors },
                ))
            }
        }
    }
}

fn apply_perm(perm: &[usize], m: &IntMat) -> IntMat {
    let mut out = IntMat::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            if !v.is_zero() {
                out.set(perm[i], j, v.clone());
            }
        }
    }
    out
}

/// Decide the Kottwitz-kernel question directly on cocharacter lattices.
pub fn decide_r_circ(desc: &LocalExtensionDescriptor) -> Result<QuestionVerdict, LocalError> {
    let ctx = CircContext::new(&desc.group, &desc.h_plus, &desc.inertia, desc.n_factors)?;
    ctx.decide(&desc.sigma)
}

/// Closed-form decider for the Kottwitz-kernel question. Requires the
/// maximal-compact question to be affirmative. When the two compact-type
/// subgroups coincide the verdict transfers; in the everywhere-ramified
/// cyclic-inertia case the answer is affirmative iff G is cyclic or m ≤ n.
pub fn classify_r_circ(desc: &LocalExtensionDescriptor) -> Result<QuestionVerdict, LocalError> {
    let r_verdict = classify_r(desc);
    if r_verdict.status == Status::Negative {
        return Err(LocalError::PreconditionUnmet(
            "maximal-compact question is negative".to_string(),
        ));
    }
    if kottwitz_equal_k(desc) {
        return Ok(QuestionVerdict::affirmative(
            Question::RCirc,
            "kottwitz-subgroups-coincide",
        ));
    }
    // Ramified quadratic layer: the closed form needs cyclic inertia.
    let m = match desc.inertia_shape() {
        InertiaShape::Cyclic { m } => m,
        _ => {
            return Ok(QuestionVerdict::out_of_scope(
                Question::RCirc,
                "ramified-noncyclic-inertia",
            ))
        }
    };
    if desc.group.is_cyclic() || m <= desc.n_exponent() {
        Ok(QuestionVerdict::affirmative(Question::RCirc, "cyclic-or-small-ramification"))
    } else {
        Ok(QuestionVerdict::negative(
            Question::RCirc,
            "ramification-exceeds-residue-extension",
            Witness::Cokernel { invariant_factors: vec![2] },
        ))
    }
}

/// Invariant-factor shapes of all abelian 2-groups of order 2..=`max_order`
/// (each shape ascending, entries powers of two).
pub fn two_group_shapes(max_order: u64) -> Vec<Vec<u64>> {
    fn extend(shapes: &mut Vec<Vec<u64>>, cur: &mut Vec<u64>, min: u64, budget: u64) {
        let mut f = min;
        while f <= budget {
            cur.push(f);
            shapes.push(cur.clone());
            extend(shapes, cur, f, budget / f);
            cur.pop();
            f = f.checked_mul(2).unwrap_or(u64::MAX);
        }
    }
    let mut shapes = Vec::new();
    extend(&mut shapes, &mut Vec::new(), 2, max_order);
    shapes
}

/// Result of an exhaustive oracle/closed-form cross-check.
#[derive(Debug, Clone, Default)]
pub struct AgreementSweep {
    pub descriptors_checked: u64,
    pub negatives: u64,
    /// Sorted, deduplicated names of the negative patterns encountered.
    pub negative_patterns: Vec<String>,
    /// Human-readable records of any oracle/closed-form mismatches.
    pub disagreements: Vec<String>,
}

/// Cross-check the closed-form classifier against the brute-force decider on
/// every descriptor with an abelian 2-group of order ≤ `max_order`, every
/// quadratic-layer subgroup, every supported inertia subgroup, and every
/// Frobenius lift. Any mismatch is recorded, never panicked on.
pub fn agreement_sweep(max_order: u64, residue_char: u64) -> Result<AgreementSweep, LocalError> {
    if !is_prime(residue_char) {
        return Err(LocalError::ResidueCharNotPrime(residue_char));
    }
    let mut out = AgreementSweep::default();
    let mut patterns = std::collections::BTreeSet::new();
    for shape in two_group_shapes(max_order) {
        let g = FiniteAbelianGroup::new(shape.clone())?;
        let subs = enumerate_subgroups(&g)?;
        let elems = g.elements()?;
        // Supported inertia subgroups paired with the quotient they must be
        // complemented in; a Frobenius lift exists iff G/I is cyclic.
        let mut inertias = Vec::new();
        for inr in &subs {
            match inertia_shape_of(inr) {
                InertiaShape::Unsupported => continue,
                InertiaShape::Cyclic { .. } => {}
                _ if residue_char == 2 => {}
                _ => continue,
            }
            let q = crate::abelian::quotient(&g, inr)?;
            if q.group.is_cyclic() {
                inertias.push((inr, q));
            }
        }
        for hp in subs.iter().filter(|s| s.order() <= 2) {
            let mut ctx = OracleContext::new(&g, hp)?;
            for (inr, q) in &inertias {
                let oracle = ctx.decide(inr)?;
                for sigma in &elems {
                    let img = q.project(&g, sigma);
                    if q.group.element_order(&img) != q.group.order() {
                        continue;
                    }
                    let d = match LocalExtensionDescriptor::new(
                        g.clone(),
                        hp.clone(),
                        (*inr).clone(),
                        sigma.clone(),
                        1,
                        residue_char,
                    ) {
                        Ok(d) => d,
                        Err(_) => continue,
                    };
                    let closed = classify_r(&d);
                    out.descriptors_checked += 1;
                    if closed.status != oracle.status {
                        out.disagreements.push(format!(
                            "G={:?} hp={:?} inertia={:?} sigma={:?} p={}: oracle {} vs closed {}",
                            g.factors(),
                            hp.gens(),
                            inr.gens(),
                            sigma,
                            residue_char,
                            oracle.status,
                            closed.status,
                        ));
                    }
                    if closed.status == Status::Negative {
                        out.negatives += 1;
                        if let Some(Witness::NegativePattern { name, .. }) = &closed.witness {
                            patterns.insert(name.clone());
                        }
                    }
                }
            }
        }
    }
    out.negative_patterns = patterns.into_iter().collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grp(f: &[u64]) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(f.to_vec()).unwrap()
    }

    fn sub(g: &FiniteAbelianGroup, gens: &[&[u64]]) -> Subgroup {
        Subgroup::new(g, gens.iter().map(|c| g.element(c).unwrap()).collect()).unwrap()
    }

    fn desc(
        g: &FiniteAbelianGroup,
        hp: &[&[u64]],
        inr: &[&[u64]],
        sigma: &[u64],
        p: u64,
    ) -> LocalExtensionDescriptor {
        LocalExtensionDescriptor::new(
            g.clone(),
            sub(g, hp),
            sub(g, inr),
            g.element(sigma).unwrap(),
            1,
            p,
        )
        .unwrap()
    }

    #[test]
    fn descriptor_validation() {
        let g = grp(&[2, 4]);
        // Frobenius must generate the quotient by inertia.
        let bad = LocalExtensionDescriptor::new(
            g.clone(),
            sub(&g, &[&[0, 2]]),
            sub(&g, &[&[1, 0]]),
            g.element(&[0, 0]).unwrap(),
            1,
            2,
        );
        assert!(matches!(bad, Err(LocalError::FrobeniusDoesNotGenerate)));
        // Odd residue characteristic needs cyclic inertia.
        let g2 = grp(&[2, 2, 2]);
        let bad2 = LocalExtensionDescriptor::new(
            g2.clone(),
            sub(&g2, &[&[1, 0, 0]]),
            sub(&g2, &[&[1, 0, 0], &[0, 1, 0]]),
            g2.element(&[0, 0, 1]).unwrap(),
            1,
            3,
        );
        assert!(matches!(bad2, Err(LocalError::TameInertiaNotCyclic)));
    }

    #[test]
    fn nu_image_cases() {
        // Non-cyclic G → full.
        let g = grp(&[2, 2]);
        let d = desc(&g, &[&[1, 0]], &[&[0, 1]], &[1, 0], 2);
        assert_eq!(nu_point_image(&d), NuPointImage::Full);
        // Cyclic totally ramified → index two, ramified.
        let g = grp(&[4]);
        let d = desc(&g, &[&[2]], &[&[1]], &[0], 2);
        assert_eq!(nu_point_image(&d), NuPointImage::IndexTwoRamified);
        // Unramified quadratic → index two, unramified.
        let g = grp(&[2]);
        let d = desc(&g, &[&[1]], &[], &[1], 3);
        assert_eq!(nu_point_image(&d), NuPointImage::IndexTwoUnramified);
    }

    #[test]
    fn oracle_spec_cases() {
        // Negative: G = ℤ/2×ℤ/4, H⁺ = ⟨(0,2)⟩, I = ⟨(1,0)⟩.
        let g = grp(&[2, 4]);
        let d = desc(&g, &[&[0, 2]], &[&[1, 0]], &[0, 1], 3);
        assert_eq!(decide_r_oracle(&d).unwrap().status, Status::Negative);
        // Affirmative: cyclic ℤ/8.
        let g = grp(&[8]);
        let d = desc(&g, &[&[4]], &[&[2]], &[1], 3);
        assert_eq!(decide_r_oracle(&d).unwrap().status, Status::Affirmative);
        // Affirmative: ℤ/4×ℤ/4 with diagonal inertia.
        let g = grp(&[4, 4]);
        let d = desc(&g, &[&[0, 2]], &[&[1, 1]], &[0, 1], 3);
        assert_eq!(decide_r_oracle(&d).unwrap().status, Status::Affirmative);
    }

    #[test]
    fn classifier_spec_cases() {
        // Unramified cyclic-inertia family instance (m=1 < n=2).
        let g = grp(&[2, 4]);
        let d = desc(&g, &[&[0, 2]], &[&[1, 0]], &[0, 1], 3);
        let v = classify_r(&d);
        assert_eq!(v.status, Status::Negative);
        // Wild ramified-involution instance (m=1 ≤ n=1): G = ℤ/2×ℤ/4,
        // H⁺ = ⟨(0,2)⟩, I = ⟨(1,0),(0,2)⟩.
        let d = desc(&g, &[&[0, 2]], &[&[1, 0], &[0, 2]], &[0, 1], 2);
        let v = classify_r(&d);
        assert_eq!(v.status, Status::Negative);
        // No pattern matches (totally ramified tower direction) → affirmative.
        let d = desc(&g, &[&[0, 2]], &[&[0, 1]], &[1, 0], 2);
        assert_eq!(classify_r(&d).status, Status::Affirmative);
    }

    #[test]
    fn classifier_oracle_agree_on_sample() {
        // Sampled agreement (the exhaustive sweep lives in the acceptance
        // tests): all inertia/h_plus choices in ℤ/2×ℤ/8.
        let g = grp(&[2, 8]);
        let subs = enumerate_subgroups(&g).unwrap();
        let mut checked = 0;
        for hp in subs.iter().filter(|s| s.order() <= 2) {
            let mut ctx = OracleContext::new(&g, hp).unwrap();
            for inr in &subs {
                if matches!(inertia_shape_of(inr), InertiaShape::Unsupported) {
                    continue;
                }
                // Need some σ with ⟨σ⟩·I = G.
                let sigma = g
                    .elements()
                    .unwrap()
                    .into_iter()
                    .find(|s| {
                        Subgroup::new(&g, vec![s.clone()])
                            .unwrap()
                            .join(inr)
                            .unwrap()
                            .order()
                            == g.order()
                    });
                let sigma = match sigma {
                    Some(s) => s,
                    None => continue,
                };
                let d = LocalExtensionDescriptor::new(
                    g.clone(),
                    hp.clone(),
                    inr.clone(),
                    sigma,
                    1,
                    2,
                )
                .unwrap();
                let a = ctx.decide(&d.inertia).unwrap();
                let b = classify_r(&d);
                assert_eq!(a.status, b.status, "disagreement at {d:?}");
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn circ_totally_ramified_affirmative() {
        // I = G: split by a totally ramified extension.
        let g = grp(&[4]);
        let d = desc(&g, &[&[2]], &[&[1]], &[0], 2);
        assert_eq!(decide_r_circ(&d).unwrap().status, Status::Affirmative);
    }

    #[test]
    fn circ_negative_with_order_two_cokernel() {
        // m=2 > n=1, non-cyclic, ramified quadratic layer:
        // G = ℤ/2×ℤ/4, I = ⟨(0,1)⟩, H⁺ = ⟨(0,2)⟩ ⊆ I, σ = (1,0).
        let g = grp(&[2, 4]);
        let d = desc(&g, &[&[0, 2]], &[&[0, 1]], &[1, 0], 2);
        assert_eq!(decide_r_oracle(&d).unwrap().status, Status::Affirmative);
        let v = decide_r_circ(&d).unwrap();
        assert_eq!(v.status, Status::Negative);
        assert_eq!(
            v.witness,
            Some(Witness::Cokernel { invariant_factors: vec![2] })
        );
        // Closed form agrees.
        let c = classify_r_circ(&d).unwrap();
        assert_eq!(c.status, Status::Negative);
    }

    #[test]
    fn circ_cyclic_affirmative() {
        let g = grp(&[8]);
        let d = desc(&g, &[&[4]], &[&[2]], &[1], 2);
        assert_eq!(decide_r_circ(&d).unwrap().status, Status::Affirmative);
        assert_eq!(classify_r_circ(&d).unwrap().status, Status::Affirmative);
    }

    #[test]
    fn circ_m_leq_n_affirmative() {
        // m = n = 1: G = ℤ/2×ℤ/2, I = ⟨(0,1)⟩ = H⁺·…, H⁺ = ⟨(0,1)⟩ ⊆ I.
        let g = grp(&[2, 2]);
        let d = desc(&g, &[&[0, 1]], &[&[0, 1]], &[1, 0], 2);
        assert_eq!(decide_r_circ(&d).unwrap().status, Status::Affirmative);
        assert_eq!(classify_r_circ(&d).unwrap().status, Status::Affirmative);
    }

    #[test]
    fn classify_circ_precondition() {
        let g = grp(&[2, 4]);
        let d = desc(&g, &[&[0, 2]], &[&[1, 0]], &[0, 1], 3);
        assert!(matches!(
            classify_r_circ(&d),
            Err(LocalError::PreconditionUnmet(_))
        ));
    }

    #[test]
    fn kottwitz_subgroup_equality() {
        let g = grp(&[2, 4]);
        // Split: equal.
        let d = desc(&g, &[], &[&[1, 0]], &[0, 1], 2);
        assert!(kottwitz_equal_k(&d));
        // Unramified quadratic layer: equal.
        let d = desc(&g, &[&[0, 2]], &[&[1, 0]], &[0, 1], 2);
        assert!(kottwitz_equal_k(&d));
        // Ramified quadratic layer: not equal.
        let d = desc(&g, &[&[0, 2]], &[&[0, 1]], &[1, 0], 2);
        assert!(!kottwitz_equal_k(&d));
    }

    #[test]
    fn circ_implies_r() {
        // Sampled: wherever R° is affirmative, R is affirmative.
        let g = grp(&[2, 4]);
        let subs = enumerate_subgroups(&g).unwrap();
        for hp in subs.iter().filter(|s| s.order() == 2) {
            for inr in &subs {
                let sigma = g.elements().unwrap().into_iter().find(|s| {
                    Subgroup::new(&g, vec![s.clone()])
                        .unwrap()
                        .join(inr)
                        .unwrap()
                        .order()
                        == g.order()
                });
                let sigma = match sigma {
                    Some(s) => s,
                    None => continue,
                };
                let d = LocalExtensionDescriptor::new(
                    g.clone(),
                    hp.clone(),
                    inr.clone(),
                    sigma,
                    1,
                    2,
                )
                .unwrap();
                let circ = decide_r_circ(&d).unwrap();
                if circ.status == Status::Affirmative {
                    assert_eq!(decide_r_oracle(&d).unwrap().status, Status::Affirmative);
                }
            }
        }
    }
}
