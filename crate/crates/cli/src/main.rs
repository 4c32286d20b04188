//! Command-line front end: single-step branch tables, scheme comparison,
//! region sweeps, oracle verification, and plan search.
//!
//! Exit codes: 0 success, 1 validation error, 2 verification failure,
//! 3 infeasible plan. All output is byte-deterministic for a given
//! invocation; tables print at 6 significant digits, JSON keeps full
//! precision. `GHZPURIFY_EXACT=1` switches `step` and `compare` to
//! exact-rational arithmetic (plain decimal arguments parse exactly).

use clap::{Args, Parser, Subcommand, ValueEnum};
use ghzpurify::bitflip::{class_outcomes, cross_residual, purify_identity, second_round};
use ghzpurify::link::{entanglement_link, extract_mixture};
use ghzpurify::metrics::{
    closed_form, deviation_csv, oracle_deviation_rows, p1_report, p1prime_report,
    preferred_scheme, region_sweep, sweep_csv, DeviationRow, GridSpec, RegionPredicate,
    SchemeReport, SweepPoint,
};
use ghzpurify::oracle::oracle_bitflip;
use ghzpurify::pattern::{pattern_count, ParityClass};
use ghzpurify::phaseflip::{phase_identity, phase_residual, PhaseEnsemble};
use ghzpurify::planner::{search_plan, Objective, PlanOutcome, PlannerInputs, SearchConfig};
use ghzpurify::{Error, GhzDiagonalEnsemble, Scalar, F64_TOL, MAX_PHOTONS};
use num::BigRational;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ghzpurify",
    version,
    about = "Recurrence purification calculator for GHZ-diagonal photon ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one branch operation and print its branch table.
    Step(StepArgs),
    /// Compare the recycling schemes for symmetric three-photon inputs.
    Compare(CompareArgs),
    /// Evaluate a region predicate over an (f1, f2) grid.
    Sweep(SweepArgs),
    /// Check every closed form against the circuit oracle.
    Verify(VerifyArgs),
    /// Search for the best delivery plan against a fidelity target.
    Plan(PlanArgs),
}

#[derive(Args)]
struct StepArgs {
    /// Branch to evaluate: p1-identity, p1-classes, p1-second-round,
    /// p1-link, p2-identity or p2-residual.
    #[arg(long)]
    scheme: String,
    #[command(flatten)]
    inputs: BitInputs,
    /// Leading phase weights of the two inputs (p2 schemes).
    #[arg(long, num_args = 2, value_names = ["P1", "P2"])]
    p0: Option<Vec<String>>,
    /// Photon count for the p2 schemes.
    #[arg(long, default_value_t = 3)]
    photons: u8,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Symmetric inputs: photon count (must be 3) and two leading weights.
    #[arg(long, num_args = 3, value_names = ["N", "F1", "F2"], required = true)]
    sym: Vec<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Region to evaluate: eq7, fig3, fig5-choice, fig7, fig8, fig9, fig10.
    #[arg(long)]
    predicate: String,
    /// Round budget (fig10 only).
    #[arg(long)]
    rounds: Option<u8>,
    /// Grid as MIN MAX STEPS; once for both axes, twice for separate f1 and
    /// f2 axes. Defaults to 0 1 101.
    #[arg(long, num_args = 3, action = clap::ArgAction::Append, value_names = ["MIN", "MAX", "STEPS"])]
    grid: Vec<f64>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = SweepFormat::Csv)]
    format: SweepFormat,
}

#[derive(Args)]
struct VerifyArgs {
    /// Photon counts to verify (2 to 5).
    #[arg(long, num_args = 1.., default_values_t = [3u8])]
    photons: Vec<u8>,
    /// Symmetric weight grid as MIN MAX STEPS. Defaults to 0.1 0.9 5.
    #[arg(long, num_args = 3, value_names = ["MIN", "MAX", "STEPS"])]
    grid: Option<Vec<f64>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    inputs: BitInputs,
    /// Leading phase weights of a phase-track input pair.
    #[arg(long, num_args = 2, value_names = ["P1", "P2"])]
    p0: Option<Vec<String>>,
    /// Photon count for the phase pair.
    #[arg(long, default_value_t = 3)]
    photons: u8,
    /// Fidelity every delivered stream must reach.
    #[arg(long)]
    target: String,
    /// Round budget.
    #[arg(long, default_value_t = 2)]
    rounds: u8,
    /// Search objective.
    #[arg(long, value_enum, default_value_t = ObjectiveArg::YieldFirst)]
    objective: ObjectiveArg,
    /// Demand at least one recycling stream (link or residual round).
    #[arg(long)]
    require_recycle: bool,
    /// Write the plan JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BitInputs {
    /// Symmetric inputs: photon count and two leading weights.
    #[arg(long, num_args = 3, value_names = ["N", "F1", "F2"])]
    sym: Option<Vec<String>>,
    /// First input ensemble as a JSON file.
    #[arg(long, requires = "in2", conflicts_with = "sym")]
    in1: Option<PathBuf>,
    /// Second input ensemble as a JSON file.
    #[arg(long, requires = "in1", conflicts_with = "sym")]
    in2: Option<PathBuf>,
}

impl BitInputs {
    fn is_empty(&self) -> bool {
        self.sym.is_none() && self.in1.is_none()
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write the rendered output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SweepFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ObjectiveArg {
    YieldFirst,
    FidelityFirst,
}

impl From<ObjectiveArg> for Objective {
    fn from(value: ObjectiveArg) -> Self {
        match value {
            ObjectiveArg::YieldFirst => Objective::YieldFirst,
            ObjectiveArg::FidelityFirst => Objective::FidelityFirst,
        }
    }
}

/// A command failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn verification(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn infeasible(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::validation(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Step(args) => cmd_step(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Plan(args) => cmd_plan(&args),
    }
}

fn exact_mode() -> bool {
    std::env::var("GHZPURIFY_EXACT").map(|v| v == "1").unwrap_or(false)
}

/// Parses a plain decimal literal exactly (so `0.8` becomes 4/5 in rational
/// mode); scientific notation or very long literals fall back through f64.
fn decimal<T: Scalar>(text: &str) -> Result<T, Failure> {
    let bad = || Failure::validation(format!("`{text}` is not a number"));
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    let plain = !int_part.is_empty() || !frac_part.is_empty();
    let plain = plain
        && int_part.chars().all(|c| c.is_ascii_digit())
        && frac_part.chars().all(|c| c.is_ascii_digit())
        && int_part.len() + frac_part.len() <= 15;
    if !plain {
        let value: f64 = text.parse().map_err(|_| bad())?;
        return Ok(T::from_f64(value));
    }
    let mut num: i64 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        num = num * 10 + i64::from(c as u8 - b'0');
    }
    if negative {
        num = -num;
    }
    Ok(T::from_ratio(num, 10i64.pow(frac_part.len() as u32)))
}

fn unit<T: Scalar>(value: T, what: &str) -> Result<T, Failure> {
    if value < T::zero() || value > T::one() {
        return Err(Failure::validation(format!(
            "{what} must lie in [0, 1], got {}",
            Scalar::to_f64(&value)
        )));
    }
    Ok(value)
}

fn parse_photons(text: &str) -> Result<u8, Failure> {
    let n: u8 = text
        .parse()
        .map_err(|_| Failure::validation(format!("`{text}` is not a photon count")))?;
    if !(2..=MAX_PHOTONS).contains(&n) {
        return Err(Failure::validation(format!(
            "photon count {n} outside 2..={MAX_PHOTONS}"
        )));
    }
    Ok(n)
}

fn read_ensemble(path: &PathBuf) -> Result<GhzDiagonalEnsemble, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    GhzDiagonalEnsemble::from_json(&text)
        .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

fn load_bit_pair<T: Scalar>(
    inputs: &BitInputs,
) -> Result<(GhzDiagonalEnsemble<T>, GhzDiagonalEnsemble<T>), Failure> {
    if let Some(sym) = &inputs.sym {
        let n = parse_photons(&sym[0])?;
        let f1 = unit(decimal::<T>(&sym[1])?, "f1")?;
        let f2 = unit(decimal::<T>(&sym[2])?, "f2")?;
        return Ok((
            GhzDiagonalEnsemble::symmetric(n, f1)?,
            GhzDiagonalEnsemble::symmetric(n, f2)?,
        ));
    }
    if let (Some(p1), Some(p2)) = (&inputs.in1, &inputs.in2) {
        return Ok((read_ensemble(p1)?.map_scalar(), read_ensemble(p2)?.map_scalar()));
    }
    Err(Failure::validation("inputs required: --sym N F1 F2 or --in1/--in2"))
}

fn load_phase_pair<T: Scalar>(
    p0: &[String],
    photons: u8,
) -> Result<(PhaseEnsemble<T>, PhaseEnsemble<T>), Failure> {
    let p1 = unit(decimal::<T>(&p0[0])?, "p1")?;
    let p2 = unit(decimal::<T>(&p0[1])?, "p2")?;
    Ok((PhaseEnsemble::new(photons, p1)?, PhaseEnsemble::new(photons, p2)?))
}

/// Six significant digits for human-readable tables.
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..=8).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn emit(text: &str, out: &Option<PathBuf>) -> CliResult {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::validation(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---- step ----

#[derive(Serialize)]
struct StepRow {
    class: String,
    probability: f64,
    weights: Vec<f64>,
}

#[derive(Serialize)]
struct StepDoc {
    command: &'static str,
    scheme: String,
    exact: bool,
    rows: Vec<StepRow>,
}

fn step_row<T: Scalar>(class: String, probability: &T, weights: &[T]) -> StepRow {
    StepRow {
        class,
        probability: Scalar::to_f64(probability),
        weights: weights.iter().map(|w| Scalar::to_f64(w)).collect(),
    }
}

fn step_rows<T: Scalar>(args: &StepArgs) -> Result<Vec<StepRow>, Failure> {
    let scheme = args.scheme.as_str();
    if let Some(branch) = scheme.strip_prefix("p2-") {
        let p0 = args
            .p0
            .as_ref()
            .ok_or_else(|| Failure::validation("p2 schemes need --p0 P1 P2"))?;
        let (a, b) = load_phase_pair::<T>(p0, args.photons)?;
        let (label, out) = match branch {
            "identity" => ("even", phase_identity(&a, &b)?),
            "residual" => ("odd", phase_residual(&a, &b)?),
            _ => return Err(unknown_scheme(scheme)),
        };
        return Ok(vec![step_row(
            label.into(),
            &out.branch_probability,
            &[out.ensemble.p0().clone(), out.ensemble.p1()],
        )]);
    }

    let (a, b) = load_bit_pair::<T>(&args.inputs)?;
    let rows = match scheme {
        "p1-identity" => {
            let out = purify_identity(&a, &b)?;
            let label = ParityClass::from_index(a.n(), 0)?.label();
            vec![step_row(label, &out.branch_probability, out.ensemble.weights())]
        }
        "p1-classes" => class_outcomes(&a, &b)?
            .into_iter()
            .map(|(class, out)| {
                step_row(class.label(), &out.branch_probability, out.ensemble.weights())
            })
            .collect(),
        "p1-second-round" => {
            let mut rows = Vec::new();
            for c in 1..pattern_count(a.n()) {
                let class = ParityClass::from_index(a.n(), c)?;
                let residual = match cross_residual(&a, &b, &class) {
                    Ok(out) => out,
                    Err(Error::DegenerateBranch) => continue,
                    Err(e) => return Err(e.into()),
                };
                let again = second_round(&residual.ensemble, &residual.ensemble)?;
                rows.push(step_row(
                    class.label(),
                    &again.branch_probability,
                    again.ensemble.weights(),
                ));
            }
            rows
        }
        "p1-link" => {
            let (cross_probability, bell) = extract_mixture(&a, &b)?
                .ok_or_else(|| Failure::validation("no cross combinations to extract"))?;
            let fused = entanglement_link(&bell, &bell, 1, 1)?;
            vec![
                step_row("extract".into(), &cross_probability, bell.weights()),
                step_row("linked".into(), &fused.branch_probability, fused.ensemble.weights()),
            ]
        }
        _ => return Err(unknown_scheme(scheme)),
    };
    if rows.is_empty() {
        return Err(Failure::validation(
            "the requested branches cannot occur for these inputs",
        ));
    }
    Ok(rows)
}

fn unknown_scheme(scheme: &str) -> Failure {
    Failure::validation(format!(
        "unknown scheme `{scheme}`; expected p1-identity, p1-classes, \
         p1-second-round, p1-link, p2-identity or p2-residual"
    ))
}

fn render_step(doc: &StepDoc, format: Format) -> String {
    match format {
        Format::Table => {
            let mut text = format!("scheme {}\n", doc.scheme);
            text.push_str("class         probability   weights\n");
            for row in &doc.rows {
                let weights: Vec<String> = row.weights.iter().map(|w| sig6(*w)).collect();
                text.push_str(&format!(
                    "{:<13} {:<13} {}\n",
                    row.class,
                    sig6(row.probability),
                    weights.join(" ")
                ));
            }
            text
        }
        Format::Csv => {
            let width = doc.rows.first().map_or(0, |r| r.weights.len());
            let mut text = String::from("class,probability");
            for i in 0..width {
                text.push_str(&format!(",w{i}"));
            }
            text.push('\n');
            for row in &doc.rows {
                text.push_str(&format!("{},{}", row.class, row.probability));
                for w in &row.weights {
                    text.push_str(&format!(",{w}"));
                }
                text.push('\n');
            }
            text
        }
        Format::Json => pretty_json(doc),
    }
}

fn cmd_step(args: &StepArgs) -> CliResult {
    let exact = exact_mode();
    let rows = if exact { step_rows::<BigRational>(args)? } else { step_rows::<f64>(args)? };
    let doc = StepDoc { command: "step", scheme: args.scheme.clone(), exact, rows };
    emit(&render_step(&doc, args.output.format), &args.output.out)
}

// ---- compare ----

#[derive(Serialize)]
struct CompareDoc {
    command: &'static str,
    exact: bool,
    f1: f64,
    f2: f64,
    recycled_fidelity: f64,
    linked_fidelity: f64,
    p1: SchemeReport,
    p1prime: SchemeReport,
    preferred: String,
}

fn report_to_f64<T: Scalar>(report: &SchemeReport<T>) -> SchemeReport {
    SchemeReport {
        scheme: report.scheme.clone(),
        total_yield: Scalar::to_f64(&report.total_yield),
        average_fidelity: Scalar::to_f64(&report.average_fidelity),
        components: report
            .components
            .iter()
            .map(|c| ghzpurify::metrics::SchemeComponent {
                label: c.label.clone(),
                probability: Scalar::to_f64(&c.probability),
                fidelity: Scalar::to_f64(&c.fidelity),
            })
            .collect(),
    }
}

fn compare_doc<T: Scalar>(args: &CompareArgs, exact: bool) -> Result<CompareDoc, Failure> {
    let n = parse_photons(&args.sym[0])?;
    if n != 3 {
        return Err(Failure::validation(
            "compare models the three-photon recycling trade-off; use --sym 3 F1 F2",
        ));
    }
    let f1 = unit(decimal::<T>(&args.sym[1])?, "f1")?;
    let f2 = unit(decimal::<T>(&args.sym[2])?, "f2")?;
    let p1 = p1_report(&f1, &f2)?;
    let p1prime = p1prime_report(&f1, &f2)?;
    Ok(CompareDoc {
        command: "compare",
        exact,
        f1: Scalar::to_f64(&f1),
        f2: Scalar::to_f64(&f2),
        recycled_fidelity: Scalar::to_f64(&closed_form::second_round_fidelity(&f1, &f2)),
        linked_fidelity: Scalar::to_f64(&closed_form::linked_fidelity(&f1, &f2)),
        p1: report_to_f64(&p1),
        p1prime: report_to_f64(&p1prime),
        preferred: preferred_scheme(&f1, &f2)?.to_string(),
    })
}

fn render_compare(doc: &CompareDoc, format: Format) -> String {
    match format {
        Format::Table => format!(
            "f1 {}  f2 {}\n\
             recycled_fidelity   {}\n\
             linked_fidelity     {}\n\
             p1_fidelity         {}\n\
             p1prime_fidelity    {}\n\
             p1_yield            {}\n\
             p1prime_yield       {}\n\
             preferred           {}\n",
            sig6(doc.f1),
            sig6(doc.f2),
            sig6(doc.recycled_fidelity),
            sig6(doc.linked_fidelity),
            sig6(doc.p1.average_fidelity),
            sig6(doc.p1prime.average_fidelity),
            sig6(doc.p1.total_yield),
            sig6(doc.p1prime.total_yield),
            doc.preferred
        ),
        Format::Csv => format!(
            "f1,f2,recycled_fidelity,linked_fidelity,p1_fidelity,p1prime_fidelity,\
             p1_yield,p1prime_yield,preferred\n{},{},{},{},{},{},{},{},{}\n",
            doc.f1,
            doc.f2,
            doc.recycled_fidelity,
            doc.linked_fidelity,
            doc.p1.average_fidelity,
            doc.p1prime.average_fidelity,
            doc.p1.total_yield,
            doc.p1prime.total_yield,
            doc.preferred
        ),
        Format::Json => pretty_json(doc),
    }
}

fn cmd_compare(args: &CompareArgs) -> CliResult {
    let exact = exact_mode();
    let doc = if exact {
        compare_doc::<BigRational>(args, exact)?
    } else {
        compare_doc::<f64>(args, exact)?
    };
    emit(&render_compare(&doc, args.output.format), &args.output.out)
}

// ---- sweep ----

#[derive(Serialize)]
struct SweepDoc {
    command: &'static str,
    predicate: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<u8>,
    rows: Vec<SweepPoint>,
}

fn parse_grids(flat: &[f64]) -> Result<(GridSpec, GridSpec), Failure> {
    let spec = |chunk: &[f64]| -> Result<GridSpec, Failure> {
        let steps = chunk[2];
        if steps.fract() != 0.0 || !(0.0..=1e6).contains(&steps) {
            return Err(Failure::validation(format!("step count {steps} is not an integer")));
        }
        Ok(GridSpec::new(chunk[0], chunk[1], steps as u32)?)
    };
    match flat.len() {
        0 => {
            let both = GridSpec::new(0.0, 1.0, 101)?;
            Ok((both, both))
        }
        3 => {
            let both = spec(&flat[..3])?;
            Ok((both, both))
        }
        6 => Ok((spec(&flat[..3])?, spec(&flat[3..])?)),
        _ => Err(Failure::validation("--grid takes MIN MAX STEPS, at most twice")),
    }
}

fn cmd_sweep(args: &SweepArgs) -> CliResult {
    let predicate = RegionPredicate::parse(&args.predicate, args.rounds)?;
    let (f1_axis, f2_axis) = parse_grids(&args.grid)?;
    let rows = region_sweep(&f1_axis, &f2_axis, predicate)?;
    let text = match args.format {
        SweepFormat::Csv => sweep_csv(&rows),
        SweepFormat::Json => pretty_json(&SweepDoc {
            command: "sweep",
            predicate: predicate.token().into(),
            rounds: args.rounds,
            rows,
        }),
    };
    emit(&text, &args.out)
}

// ---- verify ----

#[derive(Serialize)]
struct VerifyDoc {
    command: &'static str,
    tolerance: f64,
    worst: f64,
    pass: bool,
    rows: Vec<DeviationRow>,
}

fn cmd_verify(args: &VerifyArgs) -> CliResult {
    let grid = match &args.grid {
        Some(chunk) => parse_grids(chunk)?.0,
        None => GridSpec::new(0.1, 0.9, 5)?,
    };
    let mut rows = oracle_deviation_rows(&args.photons, &grid)?;
    if std::env::var("GHZPURIFY_VERIFY_CORRUPT").map(|v| v == "1").unwrap_or(false) {
        // Negative control: a deliberately wrong identity-yield formula must
        // trip the oracle comparison.
        let probe = GhzDiagonalEnsemble::symmetric(3, 0.5)?;
        let wrong = closed_form::identity_yield(&0.5, &0.5) + 1e-6;
        let reference = oracle_bitflip(&probe, &probe)?
            .into_iter()
            .find(|b| b.class.is_identity())
            .map_or(0.0, |b| b.probability);
        rows.push(DeviationRow {
            n: 3,
            class: "identity-corrupted".into(),
            max_abs_deviation: (wrong - reference).abs(),
        });
    }
    let worst = rows.iter().fold(0.0f64, |acc, r| acc.max(r.max_abs_deviation));
    let pass = worst <= F64_TOL;
    let doc = VerifyDoc { command: "verify", tolerance: F64_TOL, worst, pass, rows };
    let text = match args.output.format {
        Format::Table => {
            let mut text = String::from("n  class         max_abs_deviation\n");
            for row in &doc.rows {
                text.push_str(&format!(
                    "{}  {:<13} {:.2e}\n",
                    row.n, row.class, row.max_abs_deviation
                ));
            }
            text.push_str(&format!(
                "verification {} (worst {:.2e}, tolerance {:.0e})\n",
                if pass { "PASS" } else { "FAIL" },
                worst,
                F64_TOL
            ));
            text
        }
        Format::Csv => deviation_csv(&doc.rows),
        Format::Json => pretty_json(&doc),
    };
    emit(&text, &args.output.out)?;
    if !pass {
        return Err(Failure::verification(format!(
            "closed forms deviate from the oracle by {worst:.2e} (tolerance {F64_TOL:.0e})"
        )));
    }
    Ok(())
}

// ---- plan ----

fn cmd_plan(args: &PlanArgs) -> CliResult {
    let mut inputs = PlannerInputs { bit_pair: None, phase_pair: None };
    if !args.inputs.is_empty() {
        inputs.bit_pair = Some(load_bit_pair::<f64>(&args.inputs)?);
    }
    if let Some(p0) = &args.p0 {
        inputs.phase_pair = Some(load_phase_pair::<f64>(p0, args.photons)?);
    }
    if inputs.is_empty() {
        return Err(Failure::validation(
            "plan needs inputs: --sym/--in1/--in2 for the bit track and/or --p0 for the phase track",
        ));
    }
    let target = unit(decimal::<f64>(&args.target)?, "target")?;
    let mut config = SearchConfig::new(target, args.rounds)?.with_objective(args.objective.into());
    if args.require_recycle {
        config = config.require_recycling();
    }
    let outcome = search_plan(&inputs, &config)?;
    emit(&pretty_json(&outcome), &args.out)?;
    if let PlanOutcome::Infeasible { best_fidelity } = &outcome {
        let best = best_fidelity
            .map(|f| format!("best reachable fidelity {}", sig6(f)))
            .unwrap_or_else(|| "no candidate stream exists".into());
        return Err(Failure::infeasible(format!(
            "no feasible plan within {} rounds ({best})",
            args.rounds
        )));
    }
    Ok(())
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text
}
