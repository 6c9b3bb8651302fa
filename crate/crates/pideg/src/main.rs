use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::json;

use skewpi::families::{closed_form_pidegree, family_matrix, family_ore_spec_at, generic_spec, ExponentAssignment, FamilyId, FamilyKind};
use skewpi::ore::OreSpec;
use skewpi::pidegree::{pi_degree, IntMatrix, PiDegreeReport};
use skewpi::removal::iterate_removal;
use skewpi::sweep::{sweep, to_csv, Strategy};
use skewpi::verify::{failures, run_suite, Suite};
use skewpi::Error;

/// PI degrees of quantum affine spaces and derivation removal for iterated
/// q-skew Ore extensions.
#[derive(Parser)]
#[command(name = "pideg", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output format (defaults to text, or the manifest's choice).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the result to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Print more detail (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Cmd {
    /// PI degree, exponent matrix or presentation of a named family.
    Family(FamilyArgs),
    /// PI degree of an exponent matrix read from JSON.
    Matrix(MatrixArgs),
    /// Run a self-check suite.
    Verify(VerifyArgs),
    /// Compare computed PI degrees with the closed forms over a grid.
    Sweep(SweepArgs),
    /// Delete derivations until a quantum torus is reached.
    Remove(RemoveArgs),
    /// Execute a JSON run manifest.
    Run { manifest: PathBuf },
}

#[derive(Args)]
struct FamilyArgs {
    kind: FamilyKind,
    #[arg(long)]
    n: usize,
    /// Root-of-unity order: a single value or an inclusive range a..b.
    #[arg(long)]
    r: Option<Range>,
    #[arg(long, value_enum, default_value_t = Emit::Report)]
    emit: Emit,
    /// Exponent assignment (JSON) for multi-parameter families.
    #[arg(long)]
    assign: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    r: Range,
}

#[derive(Args)]
struct VerifyArgs {
    suite: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    kind: FamilyKind,
    #[arg(long)]
    n: Range,
    #[arg(long)]
    r: Range,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct RemoveArgs {
    kind: Option<FamilyKind>,
    #[arg(long)]
    n: Option<usize>,
    /// Work at a primitive root of unity of this order instead of generically.
    #[arg(long)]
    r: Option<u64>,
    #[arg(long)]
    assign: Option<PathBuf>,
    /// Presentation (JSON) to start from instead of a family.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    max_index: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Emit {
    Report,
    Matrix,
    Spec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    Family,
    Matrix,
    Verify,
    Sweep,
    Remove,
}

/// Inclusive integer range, written `7` or `2..13`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Range(u64, u64);

impl Range {
    fn values(self) -> Vec<u64> {
        (self.0..=self.1).collect()
    }

    fn single(self, what: &str) -> Result<u64, Error> {
        if self.0 == self.1 {
            Ok(self.0)
        } else {
            Err(Error::Usage(format!("{what} takes a single value here")))
        }
    }
}

impl std::str::FromStr for Range {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad number {t:?}"));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
            None => (num(s)?, num(s)?),
        };
        if a > b {
            return Err(format!("empty range {s}"));
        }
        Ok(Range(a, b))
    }
}

impl<'de> Deserialize<'de> for Range {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum R {
            Num(u64),
            Text(String),
        }
        match R::deserialize(d)? {
            R::Num(v) => Ok(Range(v, v)),
            R::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Everything one run needs; built from the command line or read from JSON.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunManifest {
    command: Command,
    family: Option<FamilyKind>,
    n: Option<Range>,
    r: Option<Range>,
    /// Matrix file (matrix) or presentation file (remove).
    input: Option<PathBuf>,
    assign: Option<ExponentAssignment>,
    emit: Option<Emit>,
    suite: Option<String>,
    seed: Option<u64>,
    max_index: Option<usize>,
    #[serde(default)]
    sequential: bool,
    format: Option<Format>,
    #[serde(default)]
    verbosity: u8,
}

impl RunManifest {
    fn empty(command: Command) -> Self {
        Self {
            command,
            family: None,
            n: None,
            r: None,
            input: None,
            assign: None,
            emit: None,
            suite: None,
            seed: None,
            max_index: None,
            sequential: false,
            format: None,
            verbosity: 0,
        }
    }

    fn from_cli(cmd: Cmd) -> Result<Self, Error> {
        Ok(match cmd {
            Cmd::Family(a) => Self {
                family: Some(a.kind),
                n: Some(Range(a.n as u64, a.n as u64)),
                r: a.r,
                assign: a.assign.as_deref().map(read_assignment).transpose()?,
                emit: Some(a.emit),
                ..Self::empty(Command::Family)
            },
            Cmd::Matrix(a) => Self { input: Some(a.input), r: Some(a.r), ..Self::empty(Command::Matrix) },
            Cmd::Verify(a) => Self { suite: Some(a.suite), seed: Some(a.seed), ..Self::empty(Command::Verify) },
            Cmd::Sweep(a) => Self {
                family: Some(a.kind),
                n: Some(a.n),
                r: Some(a.r),
                sequential: a.sequential,
                ..Self::empty(Command::Sweep)
            },
            Cmd::Remove(a) => Self {
                family: a.kind,
                n: a.n.map(|n| Range(n as u64, n as u64)),
                r: a.r.map(|r| Range(r, r)),
                assign: a.assign.as_deref().map(read_assignment).transpose()?,
                input: a.input,
                max_index: a.max_index,
                ..Self::empty(Command::Remove)
            },
            Cmd::Run { manifest } => {
                let text = read(&manifest)?;
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", manifest.display())))?
            }
        })
    }

    fn family_id(&self) -> Result<FamilyId, Error> {
        let kind = self.family.ok_or_else(|| Error::Usage("a family is required".into()))?;
        let n = self.n.ok_or_else(|| Error::Usage("--n is required".into()))?.single("--n")?;
        FamilyId::new(kind, n as usize)
    }

    /// Exactly one of a family or an input file.
    fn check_source(&self) -> Result<(), Error> {
        let needs_source = matches!(self.command, Command::Family | Command::Matrix | Command::Remove | Command::Sweep);
        if needs_source && self.family.is_some() == self.input.is_some() {
            return Err(Error::Usage("give exactly one input source: a family or --input".into()));
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn read_assignment(path: &Path) -> Result<ExponentAssignment, Error> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

struct Outcome {
    text: String,
    /// True when a computed value disagreed with its oracle or a check failed.
    failed: bool,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn no_csv(what: &str) -> Error {
    Error::Usage(format!("csv output is not available for {what}"))
}

#[derive(Serialize)]
struct PiRow {
    #[serde(flatten)]
    report: PiDegreeReport,
    #[serde(serialize_with = "skewpi::bigjson::option::serialize")]
    closed_form: Option<num_bigint::BigInt>,
    #[serde(rename = "match")]
    matches: Option<bool>,
}

fn pi_rows(m: &IntMatrix, rs: &[u64], kind: Option<(FamilyKind, usize)>) -> Result<Vec<PiRow>, Error> {
    rs.iter()
        .map(|&r| {
            if r == 0 {
                return Err(Error::Domain("r must be positive".into()));
            }
            let report = pi_degree(m, r)?;
            let closed_form = match kind {
                Some((k, n)) if r >= 2 => match closed_form_pidegree(k, n, r) {
                    Ok(c) => Some(c),
                    Err(Error::NoClosedForm(_)) => None,
                    Err(e) => return Err(e),
                },
                _ => None,
            };
            let matches = closed_form.as_ref().map(|c| *c == report.pi_degree);
            Ok(PiRow { report, closed_form, matches })
        })
        .collect()
}

fn render_pi(title: &str, m: &IntMatrix, rows: &[PiRow], format: Format, verbosity: u8) -> String {
    match format {
        Format::Json => to_json(&json!({ "input": title, "results": rows })),
        Format::Csv => {
            let mut s = String::from("ell,invariant_factors,h,pi_degree,closed_form,match\n");
            for r in rows {
                let f: Vec<String> = r.report.invariant_factors.iter().map(|x| x.to_string()).collect();
                let cf = r.closed_form.as_ref().map(|c| c.to_string()).unwrap_or_default();
                let mt = r.matches.map(|b| b.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{},{},{},{},{cf},{mt}", r.report.ell, f.join(" "), r.report.h, r.report.pi_degree);
            }
            s
        }
        Format::Text => {
            let mut s = format!("{title}\n");
            if verbosity > 0 {
                let _ = writeln!(s, "exponent matrix:\n{m}");
            }
            for r in rows {
                let f: Vec<String> = r.report.invariant_factors.iter().map(|x| x.to_string()).collect();
                let _ = write!(
                    s,
                    "ell = {}\n  invariant factors: {}\n  h = {}\n  PI degree = {}\n",
                    r.report.ell,
                    f.join(" "),
                    r.report.h,
                    r.report.pi_degree
                );
                if let (Some(c), Some(ok)) = (&r.closed_form, r.matches) {
                    let _ = writeln!(s, "  closed form = {c} ({})", if ok { "match" } else { "MISMATCH" });
                }
            }
            s
        }
    }
}

fn render_matrix(m: &IntMatrix, format: Format) -> String {
    match format {
        Format::Json => to_json(m),
        Format::Text => format!("{m}\n"),
        Format::Csv => m
            .entries()
            .iter()
            .map(|row| row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",") + "\n")
            .collect(),
    }
}

/// Presentation of a family: generic when `r` is absent, otherwise at a
/// primitive `r`-th root of unity.
fn family_spec(id: &FamilyId, r: Option<u64>, assign: Option<&ExponentAssignment>) -> Result<OreSpec, Error> {
    match (r, assign) {
        (None, None) => generic_spec(id),
        (r, Some(a)) => {
            let mut a = a.clone();
            if let Some(r) = r {
                a.r = r;
            }
            family_ore_spec_at(id, &a)
        }
        (Some(r), None) if id.kind.is_single() => family_ore_spec_at(id, &ExponentAssignment::canonical(id.kind, id.n, r)),
        (Some(_), None) => Err(Error::Usage(format!("{} needs --assign", id.kind))),
    }
}

fn execute(m: &RunManifest, format: Format) -> Result<Outcome, Error> {
    m.check_source()?;
    let ok = |text: String| Ok(Outcome { text, failed: false });
    match m.command {
        Command::Family => {
            let id = m.family_id()?;
            let assign = m.assign.as_ref();
            match m.emit.unwrap_or(Emit::Report) {
                Emit::Matrix => ok(render_matrix(&family_matrix(&id, assign)?, format)),
                Emit::Spec => {
                    if format == Format::Csv {
                        return Err(no_csv("presentations"));
                    }
                    let r = m.r.map(|r| r.single("--r")).transpose()?;
                    ok(family_spec(&id, r, assign)?.to_json() + "\n")
                }
                Emit::Report => {
                    let rs = match (m.r, assign) {
                        (Some(r), _) => r.values(),
                        (None, Some(a)) => vec![a.r],
                        (None, None) => return Err(Error::Usage("--r is required".into())),
                    };
                    let mat = family_matrix(&id, assign)?;
                    if let Some(a) = assign {
                        for &r in &rs {
                            let mut a = a.clone();
                            a.r = r;
                            family_matrix(&id, Some(&a))?;
                        }
                    }
                    let rows = pi_rows(&mat, &rs, Some((id.kind, id.n)))?;
                    let failed = rows.iter().any(|r| r.matches == Some(false));
                    Ok(Outcome { text: render_pi(&id.to_string(), &mat, &rows, format, m.verbosity), failed })
                }
            }
        }
        Command::Matrix => {
            let path = m.input.as_ref().expect("checked");
            let mat: IntMatrix =
                serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            if !mat.is_skew_symmetric() {
                return Err(Error::Domain("exponent matrix must be square and skew-symmetric".into()));
            }
            let rs = m.r.ok_or_else(|| Error::Usage("--r is required".into()))?.values();
            let rows = pi_rows(&mat, &rs, None)?;
            ok(render_pi(&path.display().to_string(), &mat, &rows, format, m.verbosity))
        }
        Command::Verify => {
            let suite: Suite = m.suite.as_deref().ok_or_else(|| Error::Usage("a suite is required".into()))?.parse()?;
            let checks = run_suite(suite, m.seed.unwrap_or(1));
            let failed = failures(&checks) > 0;
            let text = match format {
                Format::Json => to_json(&checks),
                Format::Csv => return Err(no_csv("verify")),
                Format::Text => {
                    let mut s = String::new();
                    for c in &checks {
                        let _ = write!(s, "{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.suite, c.name);
                        if !c.passed {
                            let _ = write!(s, "\n     {}", c.detail);
                        }
                        s.push('\n');
                    }
                    let _ = writeln!(s, "{} checks, {} failed", checks.len(), failures(&checks));
                    s
                }
            };
            Ok(Outcome { text, failed })
        }
        Command::Sweep => {
            let kind = m.family.expect("checked");
            let ns: Vec<usize> =
                m.n.ok_or_else(|| Error::Usage("--n is required".into()))?.values().into_iter().map(|n| n as usize).collect();
            let rs = m.r.ok_or_else(|| Error::Usage("--r is required".into()))?.values();
            if rs[0] < 2 {
                return Err(Error::Domain("r must be at least 2".into()));
            }
            let strategy = if m.sequential { Strategy::Sequential } else { Strategy::Parallel };
            let rows = sweep(kind, &ns, &rs, strategy)?;
            let failed = rows.iter().any(|r| r.mismatch());
            let text = match format {
                Format::Csv => to_csv(&rows),
                Format::Json => to_json(&rows),
                Format::Text => {
                    let mut s = format!("{:<16} {:>3} {:>3} {:>14} {:>10} {:>12}  match\n", "family", "n", "r", "h", "PI degree", "closed form");
                    for r in &rows {
                        let cf = r.closed_form.as_ref().map(|c| c.to_string()).unwrap_or_else(|| "-".into());
                        let mt = match r.matches {
                            Some(true) => "yes",
                            Some(false) => "NO",
                            None => "-",
                        };
                        let _ = writeln!(s, "{:<16} {:>3} {:>3} {:>14} {:>10} {:>12}  {mt}", r.family.to_string(), r.n, r.r, r.h, r.pi_degree, cf);
                    }
                    s
                }
            };
            Ok(Outcome { text, failed })
        }
        Command::Remove => {
            if format == Format::Csv {
                return Err(no_csv("remove"));
            }
            let mut spec = match &m.input {
                Some(path) => OreSpec::from_json(&read(path)?)?,
                None => {
                    let r = m.r.map(|r| r.single("--r")).transpose()?;
                    family_spec(&m.family_id()?, r, m.assign.as_ref())?
                }
            };
            if let Some(k) = m.max_index {
                spec = spec.with_max_index(k);
            }
            let res = iterate_removal(&spec)?;
            ok(match format {
                Format::Json => res.to_json() + "\n",
                _ => res.to_text(),
            })
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Verification(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = RunManifest::from_cli(cli.command).and_then(|mut m| {
        m.verbosity = m.verbosity.max(cli.verbose);
        let format = cli.format.or(m.format).unwrap_or(Format::Text);
        execute(&m, format)
    });
    match result {
        Ok(out) => {
            match &cli.output {
                Some(p) => {
                    if let Err(e) = fs::write(p, &out.text) {
                        eprintln!("error: {}: {e}", p.display());
                        return ExitCode::from(1);
                    }
                }
                None => print!("{}", out.text),
            }
            if out.failed {
                eprintln!("error: a computed value disagrees with its check");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
