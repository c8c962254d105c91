//! Command-line front end: decide the local and global norm-principality
//! questions and the Shimura transitivity verdict, generate certified
//! counterexample families, run the exhaustive classifier/oracle sweep, and
//! re-verify stored family files.
//!
//! Exit codes: 0 success, 2 parse error, 3 out-of-scope verdict, 4
//! oracle/classifier disagreement, 5 non-CM field, 6 search exhausted.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use norm_tori::abelian::{FiniteAbelianGroup, GroupElement, Subgroup};
use norm_tori::global::{
    check_ngax, decide_a, decide_a_circ, generate_family, CyclotomicFieldDescriptor,
    FamilySpec, FamilyVariant, GlobalError,
};
use norm_tori::local::{
    agreement_sweep, classify_r, classify_r_circ, decide_r_circ, decide_r_oracle,
    LocalExtensionDescriptor,
};
use norm_tori::shimura::{decide_t, LevelType, ShimuraLevelDescriptor};
use norm_tori::verdict::{QuestionVerdict, Status};

const EXIT_PARSE: u8 = 2;
const EXIT_OUT_OF_SCOPE: u8 = 3;
const EXIT_DISAGREEMENT: u8 = 4;
const EXIT_NOT_CM: u8 = 5;
const EXIT_EXHAUSTED: u8 = 6;

#[derive(Parser)]
#[command(name = "norm-tori", version, about = "Norm-principality deciders for CM tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the local question for an explicit Galois datum.
    DecideLocal(DecideLocalArgs),
    /// Decide a global question for an abelian CM field at a prime.
    DecideGlobal(DecideGlobalArgs),
    /// Decide Hecke-orbit transitivity for a CM unitary datum.
    DecideShimura(DecideShimuraArgs),
    /// Generate certified negative-example fields, ordered by conductor.
    Generate(GenerateArgs),
    /// Exhaustively cross-check the closed-form classifier against the
    /// brute-force decider.
    Sweep(SweepArgs),
    /// Re-verify a file produced by `generate`.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct DecideLocalArgs {
    /// Invariant factors of the Galois group, e.g. "2,4".
    #[arg(long)]
    group: String,
    /// Generators of the quadratic-layer subgroup, ";"-separated coordinate
    /// tuples (empty or "-" for trivial).
    #[arg(long, default_value = "-")]
    hplus: String,
    /// Generators of the inertia subgroup ("full" for the whole group).
    #[arg(long)]
    inertia: String,
    /// Frobenius lift, one coordinate tuple.
    #[arg(long)]
    sigma: String,
    /// Residue characteristic.
    #[arg(long)]
    p: u64,
    #[arg(long, value_enum, default_value_t = LocalQuestion::R)]
    question: LocalQuestion,
    /// Number of étale factors of the torus.
    #[arg(long, default_value_t = 1)]
    factors: usize,
    /// Run the brute-force decider only.
    #[arg(long, conflicts_with_all = ["classify", "both"])]
    oracle: bool,
    /// Run the closed-form classifier only.
    #[arg(long, conflicts_with = "both")]
    classify: bool,
    /// Run both and fail on disagreement.
    #[arg(long)]
    both: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LocalQuestion {
    R,
    Rcirc,
}

#[derive(Args)]
struct DecideGlobalArgs {
    /// Field descriptor, e.g. "m=20;H=11" or "m=20 H=[11]".
    #[arg(long)]
    field: String,
    #[arg(long)]
    p: u64,
    #[arg(long, value_enum, default_value_t = GlobalQuestion::A)]
    question: GlobalQuestion,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GlobalQuestion {
    A,
    Acirc,
}

#[derive(Args)]
struct DecideShimuraArgs {
    #[arg(long)]
    field: String,
    #[arg(long)]
    p: u64,
    /// Level subgroup shape at p.
    #[arg(long, value_enum)]
    level: LevelArg,
    /// Number of variables of the hermitian form (odd).
    #[arg(long)]
    n: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Bt,
    Parahoric,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    degree: u64,
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[arg(long, default_value_t = 5)]
    count: usize,
    #[arg(long, default_value_t = 1_000_000)]
    bound: u64,
    /// Output path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    OddMain,
    OddUnramified,
    TwoAdicUnramified,
    TwoAdicRamified,
}

impl From<VariantArg> for FamilyVariant {
    fn from(v: VariantArg) -> FamilyVariant {
        match v {
            VariantArg::OddMain => FamilyVariant::OddPMain,
            VariantArg::OddUnramified => FamilyVariant::OddPUnramified,
            VariantArg::TwoAdicUnramified => FamilyVariant::TwoAdicUnramified,
            VariantArg::TwoAdicRamified => FamilyVariant::TwoAdicRamified,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 64)]
    max_order: u64,
    /// Residue characteristic: "2" or "odd".
    #[arg(long, default_value = "odd")]
    p: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// File written by `generate`.
    #[arg(long = "in")]
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Global(#[from] GlobalError),
    #[error(transparent)]
    Local(#[from] norm_tori::local::LocalError),
    #[error(transparent)]
    Shimura(#[from] norm_tori::shimura::ShimuraError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
}

fn exit_code_for(e: &CliError) -> u8 {
    match e {
        CliError::Parse(_) => EXIT_PARSE,
        CliError::Global(GlobalError::NotCm) => EXIT_NOT_CM,
        CliError::Global(GlobalError::SearchExhausted { .. }) => EXIT_EXHAUSTED,
        CliError::Global(GlobalError::Parse(_)) => EXIT_PARSE,
        CliError::Shimura(norm_tori::shimura::ShimuraError::EvenVariables(_)) => EXIT_PARSE,
        CliError::Shimura(norm_tori::shimura::ShimuraError::ZeroVariables) => EXIT_PARSE,
        CliError::Shimura(norm_tori::shimura::ShimuraError::Global(g)) => {
            match g {
                GlobalError::NotCm => EXIT_NOT_CM,
                GlobalError::Parse(_) => EXIT_PARSE,
                _ => 1,
            }
        }
        CliError::Local(_) => EXIT_PARSE,
        CliError::Global(_) => 1,
        CliError::Io(_) => 1,
        CliError::VerifyFailed(_) => 1,
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::DecideLocal(a) => decide_local_cmd(a),
        Command::DecideGlobal(a) => decide_global_cmd(a),
        Command::DecideShimura(a) => decide_shimura_cmd(a),
        Command::Generate(a) => generate_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn parse_group(s: &str) -> Result<FiniteAbelianGroup, CliError> {
    let factors: Vec<u64> = s
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Parse(format!("bad group list `{s}`")))?;
    FiniteAbelianGroup::new(factors)
        .map_err(|e| CliError::Parse(format!("bad group `{s}`: {e}")))
}

fn parse_element(g: &FiniteAbelianGroup, s: &str) -> Result<GroupElement, CliError> {
    let coords: Vec<u64> = s
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Parse(format!("bad element `{s}`")))?;
    g.element(&coords).map_err(|e| CliError::Parse(format!("bad element `{s}`: {e}")))
}

fn parse_subgroup(g: &FiniteAbelianGroup, s: &str) -> Result<Subgroup, CliError> {
    let s = s.trim();
    if s.is_empty() || s == "-" {
        return Subgroup::new(g, vec![])
            .map_err(|e| CliError::Parse(format!("trivial subgroup: {e}")));
    }
    // "full" (optionally prefixed with the group order, e.g. "8-full") means
    // the whole group.
    if s == "full" || s.ends_with("-full") {
        let gens = (0..g.rank())
            .map(|i| {
                let mut c = vec![0u64; g.rank()];
                c[i] = 1;
                g.element(&c).expect("canonical generator")
            })
            .collect();
        return Subgroup::new(g, gens)
            .map_err(|e| CliError::Parse(format!("full subgroup: {e}")));
    }
    let gens: Vec<GroupElement> = s
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_element(g, t))
        .collect::<Result<_, _>>()?;
    Subgroup::new(g, gens).map_err(|e| CliError::Parse(format!("bad subgroup `{s}`: {e}")))
}

/// Accepts both `m=20 H=[11]` and the flag-friendly `m=20;H=11,19` form.
fn parse_field(s: &str) -> Result<CyclotomicFieldDescriptor, CliError> {
    let canonical = if s.contains(';') || !s.contains('[') {
        let mut m_part = None;
        let mut h_part = None;
        for tok in s.split([';', ' ']).filter(|t| !t.trim().is_empty()) {
            let tok = tok.trim();
            if let Some(v) = tok.strip_prefix("m=") {
                m_part = Some(v.to_string());
            } else if let Some(v) = tok.strip_prefix("H=") {
                h_part = Some(v.trim_matches(['[', ']']).to_string());
            } else {
                return Err(CliError::Parse(format!("bad field descriptor `{s}`")));
            }
        }
        let m = m_part.ok_or_else(|| CliError::Parse(format!("missing m in `{s}`")))?;
        format!("m={m} H=[{}]", h_part.unwrap_or_default())
    } else {
        s.to_string()
    };
    CyclotomicFieldDescriptor::from_str(&canonical).map_err(CliError::from)
}

fn scope_exit(verdicts: &[&QuestionVerdict]) -> ExitCode {
    if verdicts.iter().any(|v| v.status == Status::OutOfScope) {
        ExitCode::from(EXIT_OUT_OF_SCOPE)
    } else {
        ExitCode::SUCCESS
    }
}

fn decide_local_cmd(a: DecideLocalArgs) -> Result<ExitCode, CliError> {
    let group = parse_group(&a.group)?;
    let h_plus = parse_subgroup(&group, &a.hplus)?;
    let inertia = parse_subgroup(&group, &a.inertia)?;
    let sigma = parse_element(&group, &a.sigma)?;
    let desc = LocalExtensionDescriptor::new(group, h_plus, inertia, sigma, a.factors, a.p)
        .map_err(|e| CliError::Parse(format!("invalid local descriptor: {e}")))?;
    let (oracle, classify) = match a.question {
        LocalQuestion::R => (
            decide_r_oracle(&desc)?,
            classify_r(&desc),
        ),
        LocalQuestion::Rcirc => (decide_r_circ(&desc)?, classify_r_circ(&desc)?),
    };
    if a.both {
        println!("oracle    {oracle}");
        println!("classify  {classify}");
        if oracle.status != classify.status {
            eprintln!("error: oracle and classifier disagree");
            return Ok(ExitCode::from(EXIT_DISAGREEMENT));
        }
        println!("agreement ok");
        return Ok(scope_exit(&[&oracle, &classify]));
    }
    let v = if a.classify { classify } else { oracle };
    println!("{v}");
    Ok(scope_exit(&[&v]))
}

fn decide_global_cmd(a: DecideGlobalArgs) -> Result<ExitCode, CliError> {
    let field = parse_field(&a.field)?;
    let v = match a.question {
        GlobalQuestion::A => decide_a(&field, a.p)?,
        GlobalQuestion::Acirc => decide_a_circ(&field, a.p)?,
    };
    println!("field {field} p={}", a.p);
    println!("{v}");
    Ok(scope_exit(&[&v]))
}

fn decide_shimura_cmd(a: DecideShimuraArgs) -> Result<ExitCode, CliError> {
    let field = parse_field(&a.field)?;
    let level = match a.level {
        LevelArg::Bt => LevelType::BruhatTits,
        LevelArg::Parahoric => LevelType::Parahoric,
    };
    let desc = ShimuraLevelDescriptor::new(field.clone(), a.p, a.n, level)?;
    let v = decide_t(&desc)?;
    println!("field {field} p={} level={} n={}", a.p, level.name(), a.n);
    println!("reduced-question={}", v.reduced_question);
    println!("{}", v.status);
    Ok(scope_exit(&[&v.status]))
}

fn family_lines(spec: &FamilySpec, fields: &[(CyclotomicFieldDescriptor, u64)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# family p={} degree={} variant={} bound={}\n",
        spec.p,
        spec.degree,
        spec.variant.name(),
        spec.search_bound
    ));
    for (f, ell0) in fields {
        out.push_str(&format!("{f} p={} ell0={ell0}\n", spec.p));
    }
    out
}

fn generate_cmd(a: GenerateArgs) -> Result<ExitCode, CliError> {
    let mut spec = FamilySpec {
        p: a.p,
        degree: a.degree,
        variant: a.variant.into(),
        count: a.count,
        search_bound: a.bound,
    };
    let (fields, exhausted) = match generate_family(&spec) {
        Ok(fs) => (fs, false),
        Err(GlobalError::SearchExhausted { found, requested, bound }) => {
            // Preserve the partial output before reporting exhaustion.
            let partial = if found > 0 {
                spec.count = found;
                generate_family(&spec)?
            } else {
                Vec::new()
            };
            eprintln!(
                "error: search exhausted: found {found} of {requested} below bound {bound}"
            );
            (partial, true)
        }
        Err(e) => return Err(e.into()),
    };
    let rows: Vec<(CyclotomicFieldDescriptor, u64)> =
        fields.into_iter().map(|(f, rep)| (f, rep.ell0)).collect();
    let text = family_lines(&spec, &rows);
    match &a.out {
        Some(path) => fs::write(path, &text)?,
        None => print!("{text}"),
    }
    if exhausted {
        return Ok(ExitCode::from(EXIT_EXHAUSTED));
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep_cmd(a: SweepArgs) -> Result<ExitCode, CliError> {
    let p = match a.p.as_str() {
        "2" => 2,
        "odd" => 3,
        other => {
            return Err(CliError::Parse(format!("--p must be `2` or `odd`, got `{other}`")))
        }
    };
    let s = agreement_sweep(a.max_order, p)?;
    println!(
        "checked {} descriptors: {} negative, patterns {:?}",
        s.descriptors_checked, s.negatives, s.negative_patterns
    );
    if !s.disagreements.is_empty() {
        for d in &s.disagreements {
            eprintln!("disagreement: {d}");
        }
        return Ok(ExitCode::from(EXIT_DISAGREEMENT));
    }
    println!("agreement ok");
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(a: VerifyArgs) -> Result<ExitCode, CliError> {
    let text = fs::read_to_string(&a.input)?;
    let mut verified = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut field_tokens = Vec::new();
        let mut p = None;
        let mut ell0 = None;
        for tok in line.split_whitespace() {
            if let Some(v) = tok.strip_prefix("p=") {
                p = v.parse::<u64>().ok();
            } else if let Some(v) = tok.strip_prefix("ell0=") {
                ell0 = v.parse::<u64>().ok();
            } else {
                field_tokens.push(tok);
            }
        }
        let bad =
            |what: &str| CliError::VerifyFailed(format!("line {}: {what}", lineno + 1));
        let p = p.ok_or_else(|| bad("missing p"))?;
        let ell0 = ell0.ok_or_else(|| bad("missing ell0"))?;
        let field = CyclotomicFieldDescriptor::from_str(&field_tokens.join(" "))
            .map_err(|e| bad(&format!("bad field: {e}")))?;
        let report = check_ngax(&field, p, ell0).map_err(|e| bad(&e.to_string()))?;
        if !report.ok() {
            return Err(bad(&format!("certificate rejected: {report}")));
        }
        verified += 1;
    }
    println!("verified {verified} fields");
    Ok(ExitCode::SUCCESS)
}
