use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qosc::charlier::{charlier_explicit_scaled, weight_rho};
use qosc::coherent::{self, CoherentParams};
use qosc::fourier::{self, KernelMatrix};
use qosc::oscillator::{wave_value, WaveBasis};
use qosc::qcore::e_number;
use qosc::verify::{self, OutputFormat, RunConfig, VerificationReport};
use qosc::{CNum, QContext, QError};

#[derive(Parser)]
#[command(name = "qosc", version, about = "q-oscillator numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one object of the model
    Eval(EvalArgs),
    /// Run verification suites; exit 0 iff every check passes
    Verify(VerifyArgs),
    /// Write a CSV table
    Table(TableArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    #[arg(long, default_value_t = 0.3)]
    mu: f64,
    #[arg(long, default_value_t = 20)]
    n_max: usize,
    #[arg(long, default_value_t = 60)]
    s_max: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Clone, Default)]
struct ComplexArgs {
    /// Kernel parameter; `i` is shorthand for --t-re 0 --t-im 1
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_im: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha_re: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha_im: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Subject {
    Poly,
    Weight,
    Wavefunction,
    Coherent,
    Kernel,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(value_enum)]
    subject: Subject,
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Lattice site; every site when omitted
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[command(flatten)]
    complex: ComplexArgs,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// all, or one suite name (see --list)
    suite: Option<String>,
    /// Print the suites and the identities each one checks
    #[arg(long)]
    list: bool,
    /// Record wall-clock time per check (output is then not reproducible)
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableKind {
    Spectrum,
    Wavefunctions,
    Kernel,
}

#[derive(Args)]
struct TableArgs {
    #[arg(value_enum)]
    kind: TableKind,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    complex: ComplexArgs,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug)]
enum CliError {
    Config(QError),
    Eval(QError),
    Io(String),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-5, 1e16)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl ModelArgs {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            q: self.q,
            mu: self.mu,
            n_max: self.n_max,
            s_max: self.s_max,
            tol: self.tol,
            output_format: match self.format {
                Format::Text => OutputFormat::Text,
                Format::Json => OutputFormat::Json,
                Format::Csv => OutputFormat::Csv,
            },
            seed: self.seed,
            timings: false,
        }
    }

    fn ctx(&self) -> CliResult<QContext> {
        self.run_config().validate().map_err(CliError::Config)
    }
}

impl ComplexArgs {
    fn t(&self) -> CliResult<CNum> {
        let bad = |m: String| CliError::Config(QError::Domain(m));
        match (&self.t, self.t_re, self.t_im) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                Err(bad("use either --t or --t-re/--t-im".into()))
            }
            (Some(s), None, None) => match s.trim() {
                "i" => Ok(CNum::new(0.0, 1.0)),
                "-i" => Ok(CNum::new(0.0, -1.0)),
                v => v
                    .parse::<f64>()
                    .map(|x| CNum::new(x, 0.0))
                    .map_err(|_| bad(format!("cannot read --t {v}"))),
            },
            (None, re, im) => Ok(CNum::new(re.unwrap_or(0.0), im.unwrap_or(0.0))),
        }
    }

    fn alpha(&self) -> CNum {
        CNum::new(self.alpha_re, self.alpha_im)
    }
}

/// A table with a fixed header, rendered in any of the output formats.
struct Table {
    comment: Option<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            comment: None,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn write(&self, format: Format, out: &mut dyn Write) -> CliResult<()> {
        match format {
            Format::Csv => {
                if let Some(c) = &self.comment {
                    writeln!(out, "# {c}")?;
                }
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(out);
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
            Format::Json => {
                let objs: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|r| {
                        self.header
                            .iter()
                            .zip(r)
                            .map(|(k, v)| {
                                let val = v
                                    .parse::<i64>()
                                    .ok()
                                    .map(serde_json::Number::from)
                                    .or_else(|| {
                                        v.parse::<f64>().ok().and_then(serde_json::Number::from_f64)
                                    })
                                    .map(serde_json::Value::Number)
                                    .unwrap_or_else(|| serde_json::Value::String(v.clone()));
                                (k.clone(), val)
                            })
                            .collect()
                    })
                    .collect();
                serde_json::to_writer_pretty(&mut *out, &objs)
                    .map_err(|e| CliError::Io(e.to_string()))?;
                writeln!(out)?;
            }
            Format::Text => {
                if let Some(c) = &self.comment {
                    writeln!(out, "# {c}")?;
                }
                let widths: Vec<usize> = (0..self.header.len())
                    .map(|i| {
                        self.rows
                            .iter()
                            .map(|r| r[i].len())
                            .chain([self.header[i].len()])
                            .max()
                            .unwrap_or(0)
                    })
                    .collect();
                let line = |cells: &[String]| {
                    cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:>w$}"))
                        .collect::<Vec<_>>()
                        .join("  ")
                };
                writeln!(out, "{}", line(&self.header))?;
                for r in &self.rows {
                    writeln!(out, "{}", line(r))?;
                }
            }
        }
        Ok(())
    }
}

fn sites(s: Option<usize>, ctx: &QContext) -> CliResult<Vec<usize>> {
    match s {
        Some(s) if s > ctx.s_max() => Err(CliError::Config(QError::Domain(format!(
            "s = {s} exceeds s_max = {}",
            ctx.s_max()
        )))),
        Some(s) => Ok(vec![s]),
        None => Ok((0..=ctx.s_max()).collect()),
    }
}

fn kernel_entry(t: CNum, s: usize, p: usize, ctx: &QContext) -> Result<CNum, QError> {
    match fourier::kernel_closed(t, s, p, ctx) {
        Err(QError::DenominatorPole { .. }) => fourier::kernel_series(t, s, p, ctx),
        other => other,
    }
}

fn eval(args: &EvalArgs) -> CliResult<Table> {
    let ctx = args.model.ctx()?;
    let n = args.n;
    let table = match args.subject {
        Subject::Poly => {
            let mut t = Table::new(&["n", "s", "x", "value"]);
            for s in sites(args.s, &ctx)? {
                let v = charlier_explicit_scaled(n, s, &ctx).to_f64();
                t.rows.push(vec![
                    n.to_string(),
                    s.to_string(),
                    num(ctx.lattice(s).x()),
                    num(v),
                ]);
            }
            t
        }
        Subject::Weight => {
            let mut t = Table::new(&["s", "rho"]);
            for s in sites(args.s, &ctx)? {
                t.rows.push(vec![s.to_string(), num(weight_rho(s, &ctx))]);
            }
            t
        }
        Subject::Wavefunction => {
            let mut t = Table::new(&["n", "s", "psi"]);
            for s in sites(args.s, &ctx)? {
                t.rows.push(vec![
                    n.to_string(),
                    s.to_string(),
                    num(wave_value(n, s, &ctx)),
                ]);
            }
            t
        }
        Subject::Coherent => {
            let p = CoherentParams::new(args.complex.alpha(), ctx).map_err(CliError::Config)?;
            let state = match coherent::coherent_closed(&p) {
                Ok(st) => st,
                Err(QError::Domain(why)) => {
                    eprintln!("warning: product form not available ({why}); using the series");
                    coherent::coherent_series(&p).map_err(CliError::Eval)?
                }
                Err(e) => return Err(CliError::Eval(e)),
            };
            let mut t = Table::new(&["s", "re", "im"]);
            for s in sites(args.s, &ctx)? {
                let v = state.values()[s];
                t.rows.push(vec![s.to_string(), num(v.re), num(v.im)]);
            }
            t
        }
        Subject::Kernel => {
            let tv = args.complex.t()?;
            let mut t = Table::new(&["s", "p", "re", "im"]);
            for s in sites(args.s, &ctx)? {
                for p in sites(args.p, &ctx)? {
                    let v = kernel_entry(tv, s, p, &ctx).map_err(CliError::Eval)?;
                    t.rows
                        .push(vec![s.to_string(), p.to_string(), num(v.re), num(v.im)]);
                }
            }
            t
        }
    };
    Ok(table)
}

fn table(args: &TableArgs) -> CliResult<Table> {
    let ctx = args.model.ctx()?;
    let n_max = args.model.n_max;
    Ok(match args.kind {
        TableKind::Spectrum => {
            let mut t = Table::new(&["n", "e_n"]);
            for n in 0..=n_max {
                t.rows.push(vec![n.to_string(), num(e_number(n, ctx.q()))]);
            }
            t
        }
        TableKind::Wavefunctions => {
            let basis = WaveBasis::new(&ctx, n_max);
            let mut header = vec!["s".to_string()];
            header.extend((0..=n_max).map(|n| format!("psi_{n}")));
            let mut t = Table {
                comment: None,
                header,
                rows: Vec::new(),
            };
            for s in 0..=ctx.s_max() {
                let mut row = vec![s.to_string()];
                row.extend(basis.iter().map(|f| num(f.values()[s].re)));
                t.rows.push(row);
            }
            t
        }
        TableKind::Kernel => {
            let tv = args.complex.t()?;
            let k = match KernelMatrix::new(tv, &ctx) {
                Err(QError::DenominatorPole { .. }) => KernelMatrix::from_series(tv, &ctx),
                other => other,
            }
            .map_err(CliError::Eval)?;
            let margin = fourier::default_margin(&ctx);
            let mut header = vec!["s".to_string()];
            for p in 0..=ctx.s_max() {
                header.push(format!("re_{p}"));
                header.push(format!("im_{p}"));
            }
            let mut t = Table {
                comment: Some(format!(
                    "t={} unitarity_residual={} margin={margin}",
                    tv,
                    num(fourier::unitarity_residual(&k, margin))
                )),
                header,
                rows: Vec::new(),
            };
            for s in 0..=ctx.s_max() {
                let mut row = vec![s.to_string()];
                for v in k.row(s) {
                    row.push(num(v.re));
                    row.push(num(v.im));
                }
                t.rows.push(row);
            }
            t
        }
    })
}

#[derive(Serialize)]
struct CsvReport<'a> {
    check_name: &'a str,
    max_residual: String,
    tolerance: String,
    pass: bool,
    runtime_ms: u64,
    parameters: String,
}

fn write_reports(
    reports: &[VerificationReport],
    format: Format,
    out: &mut dyn Write,
) -> CliResult<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, reports)
                .map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(out);
            for r in reports {
                w.serialize(CsvReport {
                    check_name: &r.check_name,
                    max_residual: num(r.max_residual),
                    tolerance: num(r.tolerance),
                    pass: r.pass,
                    runtime_ms: r.runtime_ms,
                    parameters: r
                        .parameters
                        .iter()
                        .map(|(k, v)| format!("{k}={v}"))
                        .collect::<Vec<_>>()
                        .join(";"),
                })?;
            }
            w.flush()?;
        }
        Format::Text => {
            for r in reports {
                writeln!(
                    out,
                    "{} {:<40} residual {:<24} tolerance {}{}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.check_name,
                    num(r.max_residual),
                    num(r.tolerance),
                    r.parameters
                        .get("error")
                        .map(|e| format!("  ({e})"))
                        .unwrap_or_default()
                )?;
            }
            let failed = reports.iter().filter(|r| !r.pass).count();
            writeln!(out, "{} checks, {} failed", reports.len(), failed)?;
        }
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> CliResult<bool> {
    let mut out = io::stdout().lock();
    if args.list {
        for s in verify::SUITES {
            writeln!(out, "{:<14} {}", s.name, s.identities)?;
        }
        return Ok(true);
    }
    let suite = args.suite.as_deref().unwrap_or("all");
    if !verify::suite_names().contains(&suite) {
        return Err(CliError::Config(QError::Domain(format!(
            "unknown suite {suite}; expected one of {}",
            verify::suite_names().join(", ")
        ))));
    }
    let cfg = RunConfig {
        timings: args.timings,
        ..args.model.run_config()
    };
    let reports = verify::run(suite, &cfg).map_err(CliError::Config)?;
    write_reports(&reports, args.model.format, &mut out)?;
    Ok(reports.iter().all(|r| r.pass))
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("QOSC_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Config(QError::Domain(format!(
                "QOSC_THREADS={v} is not a positive integer"
            )))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn emit(table: Table, format: Format, path: Option<&PathBuf>) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut f =
                File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            table.write(format, &mut f).map_err(|e| match e {
                CliError::Io(m) => CliError::Io(format!("{}: {m}", p.display())),
                other => other,
            })
        }
        None => table.write(format, &mut io::stdout().lock()),
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    configure_threads()?;
    match cli.command {
        Command::Eval(a) => {
            let t = eval(&a)?;
            emit(t, a.model.format, None)?;
            Ok(true)
        }
        Command::Verify(a) => verify(&a),
        Command::Table(a) => {
            let t = table(&a)?;
            // tables are CSV unless a format is asked for explicitly
            let format = if a.model.format == Format::Text {
                Format::Csv
            } else {
                a.model.format
            };
            emit(t, format, a.out.as_ref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(CliError::Eval(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
