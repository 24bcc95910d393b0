//! Input parsing, the analysis pipeline and report rendering behind the `idsq` binary.
//!
//! All indices in reports and messages are 1-based.

use std::fmt::{self, Write as _};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use idsq_core::divisibility::{critical_bound, discordant_pairs, non_id_certificate, CriticalBound};
use idsq_core::mclass::{find_signature, is_associated_candidate, is_m_matrix};
use idsq_core::series::{truncated_id_check, TruncatedVerdict, DEFAULT_BUDGET};
use idsq_core::{Error, Scalar, SymMatrix, Tolerance};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "idsq", version, about = "Infinite divisibility of squared Gaussian vectors with shifted mean")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analyze a covariance or inverse-covariance matrix.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    /// JSON or whitespace-delimited matrix file.
    #[arg(long)]
    pub input: PathBuf,
    /// Meaning of the matrix; overrides the JSON "mode" field.
    #[arg(long, value_enum)]
    pub mode: Option<InputMode>,
    /// Mean shift α.
    #[arg(long, default_value = "0")]
    pub alpha: String,
    /// Truncation order of the series check; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub series_order: u32,
    /// Comma-separated t values for the series check.
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<String>>,
    /// Rational arithmetic throughout.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, conflicts_with = "text")]
    pub json: bool,
    #[arg(long)]
    pub text: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    Covariance,
    Inverse,
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputMode::Covariance => "covariance",
            InputMode::Inverse => "inverse",
        })
    }
}

/// Failure carrying the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Maps a core error to an exit code with 1-based indices in the message.
fn classify(context: &str, e: Error) -> CliError {
    let message = match &e {
        Error::NotSquare { row, len, expected } => format!("row {} has {len} entries, expected {expected}", row + 1),
        Error::NotSymmetric { row, col } => {
            format!("matrix is not symmetric: entry ({},{}) differs from ({},{})", row + 1, col + 1, col + 1, row + 1)
        }
        Error::NotEntrywisePositive { row, col } => format!("non-positive entry at ({},{})", row + 1, col + 1),
        other => other.to_string(),
    };
    let message = format!("{context}: {message}");
    match e {
        Error::OrderTooLarge { .. } | Error::BudgetExceeded { .. } | Error::AssertionViolation(_) => CliError::internal(message),
        _ => CliError::validation(message),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawEntry {
    Text(String),
    Number(serde_json::Number),
}

#[derive(Deserialize)]
struct RawInput {
    mode: Option<InputMode>,
    n: Option<usize>,
    entries: Vec<Vec<RawEntry>>,
}

/// A parsed matrix file before the symmetry and definiteness checks.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixInput {
    pub mode: InputMode,
    pub entries: Vec<Vec<Scalar>>,
}

fn parse_entry(text: &str, row: usize, col: usize) -> Result<Scalar, CliError> {
    Scalar::parse_exact(text).map_err(|_| CliError::validation(format!("entry ({},{}): cannot parse {text:?}", row + 1, col + 1)))
}

/// Accepts JSON `{"mode", "n", "entries"}` or whitespace-delimited rows.
///
/// Plain text has no mode field, so `mode` must be given for it. `#` starts a
/// comment in plain text.
pub fn parse_input(text: &str, mode: Option<InputMode>) -> Result<MatrixInput, CliError> {
    if text.trim_start().starts_with('{') {
        let raw: RawInput = serde_json::from_str(text).map_err(|e| CliError::validation(format!("invalid JSON input: {e}")))?;
        let mode = mode.or(raw.mode).ok_or_else(|| CliError::validation("input mode missing: set \"mode\" or pass --mode"))?;
        let entries = raw
            .entries
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, e)| match e {
                        RawEntry::Text(s) => parse_entry(s, i, j),
                        RawEntry::Number(x) => parse_entry(&x.to_string(), i, j),
                    })
                    .collect()
            })
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        if let Some(n) = raw.n {
            if n != entries.len() {
                return Err(CliError::validation(format!("\"n\" is {n} but {} rows were given", entries.len())));
            }
        }
        return Ok(MatrixInput { mode, entries });
    }
    let mode = mode.ok_or_else(|| CliError::validation("plain-text input needs --mode"))?;
    let entries = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| l.split_whitespace().enumerate().map(|(j, tok)| parse_entry(tok, i, j)).collect())
        .collect::<Result<Vec<Vec<_>>, _>>()?;
    Ok(MatrixInput { mode, entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub mode: InputMode,
    pub n: usize,
    pub exact: bool,
    pub matrix: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CriticalBoundReport {
    NoCriticalPoint,
    BoundZero { witness: [usize; 2] },
    Bound { radicand: String, value: f64, witness: [usize; 2] },
    NotApplicable,
}

impl From<&CriticalBound> for CriticalBoundReport {
    fn from(b: &CriticalBound) -> Self {
        let one_based = |(i, j): (usize, usize)| [i + 1, j + 1];
        match b {
            CriticalBound::NoCriticalPoint => CriticalBoundReport::NoCriticalPoint,
            CriticalBound::BoundZero { witness } => CriticalBoundReport::BoundZero { witness: one_based(*witness) },
            CriticalBound::Bound { radicand, value, witness } => CriticalBoundReport::Bound {
                radicand: radicand.to_string(),
                value: *value,
                witness: one_based(*witness),
            },
            CriticalBound::NotApplicable => CriticalBoundReport::NotApplicable,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesVerdict {
    AllNonneg,
    NegativeFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesCheckReport {
    pub order: u32,
    pub alpha: String,
    pub ladder: Vec<String>,
    pub verdict: SeriesVerdict,
    pub first_negative_key: Option<String>,
    pub negative_keys: Vec<String>,
    pub undetermined_keys: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub input: InputEcho,
    pub positive_definite: bool,
    pub irreducible: bool,
    pub signature: Option<Vec<i8>>,
    pub m_matrix: bool,
    pub row_sums: Vec<String>,
    pub discordant_pairs: Vec<[usize; 2]>,
    pub critical_bound: CriticalBoundReport,
    pub non_id_certificate: Option<[usize; 3]>,
    pub associated_candidate: bool,
    pub series_check: Option<SeriesCheckReport>,
    pub warnings: Vec<String>,
}

/// Options of the analysis independent of where the matrix came from.
#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub alpha: Scalar,
    pub series_order: u32,
    pub ladder: Option<Vec<Scalar>>,
    pub exact: bool,
    pub budget: u128,
}

impl AnalysisOptions {
    pub fn from_args(args: &AnalyzeArgs) -> Result<Self, CliError> {
        let alpha = Scalar::parse_exact(&args.alpha).map_err(|_| CliError::validation(format!("--alpha: cannot parse {:?}", args.alpha)))?;
        let ladder = args
            .ladder
            .as_ref()
            .map(|l| {
                l.iter()
                    .map(|t| Scalar::parse_exact(t).map_err(|_| CliError::validation(format!("--ladder: cannot parse {t:?}"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        Ok(AnalysisOptions { alpha, series_order: args.series_order, ladder, exact: args.exact, budget: DEFAULT_BUDGET })
    }

    fn scalar(&self, x: &Scalar) -> Scalar {
        x.clone().with_exactness(self.exact)
    }
}

fn display_matrix(m: &SymMatrix) -> Vec<Vec<String>> {
    m.rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect()
}

/// Runs every check on the matrix and collects the report.
pub fn analyze(input: &MatrixInput, opts: &AnalysisOptions) -> Result<AnalysisReport, CliError> {
    let tol = Tolerance::default();
    let rows: Vec<Vec<Scalar>> = input.entries.iter().map(|r| r.iter().map(|x| opts.scalar(x)).collect()).collect();
    let given = SymMatrix::new(rows).map_err(|e| classify("input", e))?;
    if let Some(minor) = given.first_nonpositive_minor(tol) {
        return Err(CliError::validation(format!(
            "input: {} matrix is not strictly positive definite (leading minor {minor} is not positive)",
            input.mode
        )));
    }
    let inverse = given.invert(tol).map_err(|e| classify("input", e))?;
    let (gamma, gamma_inv) = match input.mode {
        InputMode::Covariance => (given.clone(), inverse),
        InputMode::Inverse => (inverse, given.clone()),
    };
    let n = gamma.dim();
    let mut warnings = Vec::new();

    let irreducible = gamma_inv.is_irreducible(tol);
    let signature = find_signature(&gamma_inv, tol).map_err(|e| classify("signature search", e))?;
    let m_matrix = is_m_matrix(&gamma_inv, tol).map_err(|e| classify("M-matrix test", e))?.is_m_matrix;
    if let Some(sig) = signature.as_ref().filter(|s| !s.is_trivial()) {
        warnings.push(format!(
            "G² is infinitely divisible through the signature {:?}, but Γ⁻¹ itself is not an M-matrix, so the critical bound for the mean direction 𝟏 is not applicable",
            sig.signs()
        ));
    }
    if signature.is_some() && !irreducible {
        warnings.push("Γ⁻¹ is reducible; the components are independent blocks".into());
    }

    let d = gamma_inv.row_sums();
    let pairs = discordant_pairs(&d, tol);
    let bound = critical_bound(&gamma_inv, &d, tol).map_err(|e| classify("critical bound", e))?;
    let certificate = match non_id_certificate(&gamma, tol) {
        Ok(c) => c.map(|c| [c.triple.0 + 1, c.triple.1 + 1, c.triple.2 + 1]),
        Err(Error::NotEntrywisePositive { .. }) => None,
        Err(e) => return Err(classify("non-divisibility certificate", e)),
    };
    let associated = is_associated_candidate(&gamma, tol);
    if associated {
        warnings.push("associated-vector condition Γij ≤ min(Γii, Γjj) holds; it is necessary, not sufficient".into());
    }
    let d_scale = d.scale();
    for (i, x) in d.values().iter().enumerate() {
        if tol.is_negative(x, d_scale) {
            warnings.push(format!("row sum D{} = {x} is negative, so the vector is not associated", i + 1));
        }
    }

    let series_check = if opts.series_order > 0 {
        let alpha = opts.scalar(&opts.alpha);
        let ladder: Option<Vec<Scalar>> = opts.ladder.as_ref().map(|l| l.iter().map(|t| opts.scalar(t)).collect());
        let check = truncated_id_check(&gamma, &alpha, opts.series_order, ladder.as_deref(), opts.budget, tol)
            .map_err(|e| classify("series check", e))?;
        let (verdict, first) = match &check.verdict {
            TruncatedVerdict::AllNonneg => (SeriesVerdict::AllNonneg, None),
            TruncatedVerdict::NegativeFound(k) => (SeriesVerdict::NegativeFound, Some(k.to_string())),
        };
        let undetermined: Vec<String> = check.undetermined_keys().iter().map(|k| k.to_string()).collect();
        if verdict == SeriesVerdict::AllNonneg {
            warnings.push(format!("series check is a semi-decision: only coefficients up to order {} were examined", opts.series_order));
        }
        if !undetermined.is_empty() {
            warnings.push(format!("{} coefficient signs could not be settled on the ladder", undetermined.len()));
        }
        Some(SeriesCheckReport {
            order: opts.series_order,
            alpha: alpha.to_string(),
            ladder: check.ladder.iter().map(|t| t.to_string()).collect(),
            verdict,
            first_negative_key: first,
            negative_keys: check.negative_keys().iter().map(|k| k.to_string()).collect(),
            undetermined_keys: undetermined,
        })
    } else {
        None
    };

    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        input: InputEcho { mode: input.mode, n, exact: opts.exact, matrix: display_matrix(&given) },
        positive_definite: true,
        irreducible,
        signature: signature.map(|s| s.signs().to_vec()),
        m_matrix,
        row_sums: d.values().iter().map(|x| x.to_string()).collect(),
        discordant_pairs: pairs.pairs.iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
        critical_bound: CriticalBoundReport::from(&bound),
        non_id_certificate: certificate,
        associated_candidate: associated,
        series_check,
        warnings,
    })
}

pub fn render_text(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(out, "input: {} matrix, n = {} ({})", r.input.mode, r.input.n, if r.input.exact { "exact" } else { "float" });
    for row in &r.input.matrix {
        let _ = writeln!(out, "  {}", row.join("  "));
    }
    let _ = writeln!(out, "positive definite: {}", yes_no(r.positive_definite));
    let _ = writeln!(out, "irreducible: {}", yes_no(r.irreducible));
    match &r.signature {
        Some(s) => {
            let _ = writeln!(out, "zero-mean squares infinitely divisible: yes, signature {s:?}");
        }
        None => {
            let _ = writeln!(out, "zero-mean squares infinitely divisible: no");
        }
    }
    let _ = writeln!(out, "inverse is an M-matrix: {}", yes_no(r.m_matrix));
    let _ = writeln!(out, "row sums: {}", r.row_sums.join(", "));
    let pairs: Vec<String> = r.discordant_pairs.iter().map(|[i, j]| format!("({i},{j})")).collect();
    let _ = writeln!(out, "discordant pairs: {}", if pairs.is_empty() { "none".to_string() } else { pairs.join(" ") });
    let bound = match &r.critical_bound {
        CriticalBoundReport::NoCriticalPoint => "none, every α gives infinitely divisible squares".to_string(),
        CriticalBoundReport::BoundZero { witness } => format!("critical point is 0 (zero entry at ({},{}))", witness[0], witness[1]),
        CriticalBoundReport::Bound { radicand, value, witness } => {
            format!("α₀ ≤ sqrt({radicand}) ≈ {value:.6} at ({},{})", witness[0], witness[1])
        }
        CriticalBoundReport::NotApplicable => "not applicable".to_string(),
    };
    let _ = writeln!(out, "critical bound: {bound}");
    if let Some([i, j, k]) = r.non_id_certificate {
        let _ = writeln!(out, "never infinitely divisible: certificate ({i},{j},{k})");
    }
    let _ = writeln!(out, "associated candidate: {}", yes_no(r.associated_candidate));
    if let Some(s) = &r.series_check {
        let verdict = match (&s.verdict, &s.first_negative_key) {
            (SeriesVerdict::NegativeFound, Some(k)) => format!("negative coefficient at {k}"),
            _ => "all coefficients nonnegative".to_string(),
        };
        let _ = writeln!(out, "series check (α = {}, order {}): {verdict}", s.alpha, s.order);
        let _ = writeln!(out, "  ladder: {}", s.ladder.join(", "));
        if s.negative_keys.len() > 1 {
            let _ = writeln!(out, "  negative keys: {}", s.negative_keys.join(", "));
        }
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

/// Reads the input, runs the analysis and prints the report.
pub fn run_analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", args.input.display())))?;
    let input = parse_input(&text, args.mode)?;
    let report = analyze(&input, &AnalysisOptions::from_args(args)?)?;
    if args.json {
        serde_json::to_string_pretty(&report).map_err(|e| CliError::internal(e.to_string()))
    } else {
        Ok(render_text(&report))
    }
}

/// Exit code of a full invocation.
pub fn run(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Analyze(args) => match run_analyze(args) {
            Ok(out) => {
                println!("{}", out.trim_end());
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.code
            }
        },
    }
}
