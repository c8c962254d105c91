//! Verdict types shared by the local, global, and transitivity deciders:
//! which question was asked, the three-valued outcome, a machine-checkable
//! reason trace, and optional witness data for negative answers.

use std::fmt;

/// The question being decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Question {
    /// Norm-principality of the maximal-compact subgroup (local).
    R,
    /// Same for the Kottwitz-kernel subgroup (local).
    RCirc,
    /// Global norm-principality over ℚ at a prime p.
    A,
    /// Global Kottwitz-kernel variant.
    ACirc,
    /// Hecke-orbit transitivity for a CM unitary Shimura datum.
    T,
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Question::R => "R",
            Question::RCirc => "R-circ",
            Question::A => "A",
            Question::ACirc => "A-circ",
            Question::T => "T",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Affirmative,
    Negative,
    OutOfScope,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Affirmative => "affirmative",
            Status::Negative => "negative",
            Status::OutOfScope => "out-of-scope",
        };
        f.write_str(s)
    }
}

/// Witness payloads attached to verdicts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// A subgroup H′ certifying an affirmative local answer, as generator
    /// coordinate vectors.
    CertifyingSubgroup { generators: Vec<Vec<u64>> },
    /// A matched negative structural pattern with its exponent parameters.
    NegativePattern { name: String, exponents: Vec<u32> },
    /// An exhaustive subgroup sweep found no certificate.
    SweepExhausted { subgroups_checked: usize },
    /// Invariant factors of a nonzero cokernel.
    Cokernel { invariant_factors: Vec<u64> },
    /// A global negative certificate: the auxiliary ramified prime at which
    /// the structural conditions were verified.
    NegativeCertificate { ell0: u64 },
    /// The theorem-level condition that settled an affirmative answer.
    ConditionMet { name: String },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::CertifyingSubgroup { generators } => {
                write!(f, "certifying-subgroup {generators:?}")
            }
            Witness::NegativePattern { name, exponents } => {
                write!(f, "pattern {name} {exponents:?}")
            }
            Witness::SweepExhausted { subgroups_checked } => {
                write!(f, "sweep-exhausted after {subgroups_checked} subgroups")
            }
            Witness::Cokernel { invariant_factors } => {
                write!(f, "cokernel {invariant_factors:?}")
            }
            Witness::NegativeCertificate { ell0 } => {
                write!(f, "negative-certificate l0={ell0}")
            }
            Witness::ConditionMet { name } => write!(f, "condition {name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionVerdict {
    pub question: Question,
    pub status: Status,
    /// Rule identifiers applied in order; always nonempty.
    pub reason: Vec<String>,
    pub witness: Option<Witness>,
}

impl QuestionVerdict {
    pub fn affirmative(question: Question, reason: &str) -> Self {
        QuestionVerdict {
            question,
            status: Status::Affirmative,
            reason: vec![reason.to_string()],
            witness: None,
        }
    }

    pub fn affirmative_with(question: Question, reason: &str, witness: Witness) -> Self {
        QuestionVerdict {
            question,
            status: Status::Affirmative,
            reason: vec![reason.to_string()],
            witness: Some(witness),
        }
    }

    pub fn negative(question: Question, reason: &str, witness: Witness) -> Self {
        QuestionVerdict {
            question,
            status: Status::Negative,
            reason: vec![reason.to_string()],
            witness: Some(witness),
        }
    }

    pub fn out_of_scope(question: Question, reason: &str) -> Self {
        QuestionVerdict {
            question,
            status: Status::OutOfScope,
            reason: vec![reason.to_string()],
            witness: None,
        }
    }

    pub fn push_reason(mut self, reason: &str) -> Self {
        self.reason.push(reason.to_string());
        self
    }

    pub fn is_affirmative(&self) -> bool {
        self.status == Status::Affirmative
    }

    pub fn is_negative(&self) -> bool {
        self.status == Status::Negative
    }
}

impl fmt::Display for QuestionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "question={} status={} reason={}",
            self.question,
            self.status,
            self.reason.join(",")
        )?;
        if let Some(w) = &self.witness {
            write!(f, " witness=[{w}]")?;
        }
        Ok(())
    }
}
