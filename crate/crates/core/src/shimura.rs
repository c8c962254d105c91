//! Transitivity verdicts for CM unitary Shimura data.
//!
//! For an abelian CM reflex field, an odd number of variables, and a level
//! subgroup at p that is either the full maximal compact (Bruhat–Tits) or its
//! connected parahoric part, the Hecke-transitivity question reduces to one of
//! the two global norm-principality questions on the field alone. The
//! hermitian form and signatures never enter: only (field, p, level type) do.

use thiserror::Error;

use crate::global::{decide_a, decide_a_circ, CyclotomicFieldDescriptor, GlobalError};
use crate::verdict::{Question, QuestionVerdict};

#[derive(Debug, Error)]
pub enum ShimuraError {
    #[error(transparent)]
    Global(#[from] GlobalError),
    #[error("number of variables must be odd, got {0}")]
    EvenVariables(u64),
    #[error("number of variables must be positive")]
    ZeroVariables,
}

/// Level subgroup shape at p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LevelType {
    /// Full stabilizer of the lattice multichain.
    BruhatTits,
    /// Its connected (Kottwitz-kernel) subgroup.
    Parahoric,
}

impl LevelType {
    pub fn name(self) -> &'static str {
        match self {
            LevelType::BruhatTits => "bruhat-tits",
            LevelType::Parahoric => "parahoric",
        }
    }
}

/// The data of a CM unitary Shimura datum that the verdict depends on.
#[derive(Debug, Clone)]
pub struct ShimuraLevelDescriptor {
    pub field: CyclotomicFieldDescriptor,
    pub p: u64,
    pub n_variables: u64,
    pub level_type: LevelType,
}

impl ShimuraLevelDescriptor {
    pub fn new(
        field: CyclotomicFieldDescriptor,
        p: u64,
        n_variables: u64,
        level_type: LevelType,
    ) -> Result<Self, ShimuraError> {
        if n_variables == 0 {
            return Err(ShimuraError::ZeroVariables);
        }
        if n_variables % 2 == 0 {
            return Err(ShimuraError::EvenVariables(n_variables));
        }
        Ok(ShimuraLevelDescriptor { field, p, n_variables, level_type })
    }
}

/// A transitivity verdict: the underlying global verdict plus the question it
/// reduced to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitivityVerdict {
    pub status: QuestionVerdict,
    pub reduced_question: Question,
}

/// Which global question a level type reduces to: the full maximal compact
/// maps under the norm cocharacter onto the full norm-one local subgroup, the
/// parahoric onto its Kottwitz-kernel part.
pub fn reduce_level(level_type: LevelType) -> Question {
    match level_type {
        LevelType::BruhatTits => Question::A,
        LevelType::Parahoric => Question::ACirc,
    }
}

/// Decide Hecke-orbit transitivity. Independent of the number of variables
/// (which only needs to be odd) and of the hermitian form.
pub fn decide_t(desc: &ShimuraLevelDescriptor) -> Result<TransitivityVerdict, ShimuraError> {
    let reduced_question = reduce_level(desc.level_type);
    let inner = match reduced_question {
        Question::A => decide_a(&desc.field, desc.p)?,
        Question::ACirc => decide_a_circ(&desc.field, desc.p)?,
        _ => unreachable!("reduce_level only yields global questions"),
    };
    let status = QuestionVerdict {
        question: Question::T,
        status: inner.status,
        reason: {
            let mut r = vec![format!(
                "level {} reduces to question {}",
                desc.level_type.name(),
                reduced_question
            )];
            r.extend(inner.reason);
            r
        },
        witness: inner.witness,
    };
    Ok(TransitivityVerdict { status, reduced_question })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::global::make_field;
    use crate::verdict::Status;

    #[test]
    fn rejects_even_or_zero_variables() {
        let f = make_field(4, &[]).unwrap();
        assert!(matches!(
            ShimuraLevelDescriptor::new(f.clone(), 5, 2, LevelType::BruhatTits),
            Err(ShimuraError::EvenVariables(2))
        ));
        assert!(matches!(
            ShimuraLevelDescriptor::new(f, 5, 0, LevelType::Parahoric),
            Err(ShimuraError::ZeroVariables)
        ));
    }

    #[test]
    fn level_reduction() {
        assert_eq!(reduce_level(LevelType::BruhatTits), Question::A);
        assert_eq!(reduce_level(LevelType::Parahoric), Question::ACirc);
    }

    #[test]
    fn imaginary_quadratic_affirmative_any_level() {
        let f = make_field(4, &[]).unwrap();
        for level in [LevelType::BruhatTits, LevelType::Parahoric] {
            for p in [2u64, 3, 5, 7, 11] {
                let d = ShimuraLevelDescriptor::new(f.clone(), p, 3, level).unwrap();
                let v = decide_t(&d).unwrap();
                assert_eq!(v.status.status, Status::Affirmative, "p={p} {}", level.name());
                assert_eq!(v.status.question, Question::T);
                assert_eq!(v.reduced_question, reduce_level(level));
            }
        }
    }

    #[test]
    fn verdict_independent_of_variable_count() {
        let f = make_field(20, &[11]).unwrap();
        for level in [LevelType::BruhatTits, LevelType::Parahoric] {
            let verdicts: Vec<_> = [1u64, 3, 5, 7]
                .iter()
                .map(|&n| {
                    decide_t(&ShimuraLevelDescriptor::new(f.clone(), 5, n, level).unwrap())
                        .unwrap()
                })
                .collect();
            for v in &verdicts[1..] {
                assert_eq!(v.status, verdicts[0].status);
            }
        }
    }

    #[test]
    fn parahoric_affirmative_implies_bruhat_tits_affirmative() {
        for (m, h, p) in [(4u64, vec![], 3u64), (5, vec![], 5), (20, vec![11], 2), (7, vec![2], 7)]
        {
            let f = make_field(m, &h).unwrap();
            let para = decide_t(
                &ShimuraLevelDescriptor::new(f.clone(), p, 3, LevelType::Parahoric).unwrap(),
            )
            .unwrap();
            let bt = decide_t(
                &ShimuraLevelDescriptor::new(f, p, 3, LevelType::BruhatTits).unwrap(),
            )
            .unwrap();
            if para.status.status == Status::Affirmative {
                assert_eq!(bt.status.status, Status::Affirmative, "m={m} p={p}");
            }
        }
    }
}
