//! Command-line front end.
//!
//! Exit codes: 0 success, 1 an identity check failed, 2 the field violates the
//! normal-form conditions, 3 malformed input, I/O failure or a bad cache.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::borel::{borel, borel_phi, evaluate, BorelMould};
use crate::io::{self, IoError};
use crate::moulds::{check_symmetral, residual_mould_equation, Mould};
use crate::normalisation::{
    comould_apply, compose_check, formal_integral_residual, inverse_series, normalising_series,
    oracle_phi, phi_n_by_words, psi_n_by_words, word_count, YPolynomial,
};
use crate::saddlenode::{pde_residual, PhiSeries, SaddleNodeField, Validation};
use crate::scalar::{parse_rational, Scalar};
use crate::series::TruncatedSeries;
use crate::words::{all_words, beta, shuffle_coeff, Letter, Word};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IDENTITY: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "SADDLE_MOULDS_CACHE_DIR";

#[derive(Parser, Debug)]
#[command(name = "saddle-moulds", version, about = "Exact normalisation of saddle-node fields by mould expansion")]
pub struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute phi_n and psi_n for n <= n-max.
    Normalize(NormalizeArgs),
    /// Run identity checks; exit 1 if any residual is nonzero.
    Check(CheckArgs),
    /// Compute Borel transforms of phi_n.
    Borel(BorelArgs),
    /// Inspect or clear the mould cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Args, Debug)]
pub struct FieldArgs {
    /// Field file (JSON).
    #[arg(long)]
    pub field: PathBuf,
    /// Overwrite terms violating A(0, y) = y or d^2A/dxdy(0, 0) = 0 instead of
    /// rejecting the field.
    #[arg(long)]
    pub repair: bool,
    /// Keep only these letters of the field, e.g. `--support=-1,0,2`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub support: Option<Vec<Letter>>,
}

#[derive(Args, Debug)]
pub struct CacheArgs {
    /// Cache directory.
    #[arg(long, env = CACHE_DIR_ENV, default_value = ".mould-cache")]
    pub cache: PathBuf,
    /// Ignore and overwrite an existing cache file.
    #[arg(long)]
    pub rebuild_cache: bool,
    /// Neither read nor write the cache.
    #[arg(long, conflicts_with = "rebuild_cache")]
    pub no_cache: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct NormalizeArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 10)]
    pub x_order: usize,
    #[arg(long, default_value_t = 3)]
    pub n_max: usize,
    /// Above this many words per run, skip the word-by-word sum (and the
    /// cache) and use grouped summation only.
    #[arg(long, default_value_t = 100_000)]
    pub word_warn: u128,
    #[command(flatten)]
    pub cache: CacheArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    All,
    Symmetrality,
    MouldEquation,
    Inverse,
    Valuation,
    Cosymmetrality,
    Beta,
    Oracle,
    Pde,
    Compose,
    FormalIntegral,
    Borel,
}

impl Suite {
    const EACH: [Suite; 11] = [
        Suite::Symmetrality,
        Suite::MouldEquation,
        Suite::Inverse,
        Suite::Valuation,
        Suite::Cosymmetrality,
        Suite::Beta,
        Suite::Oracle,
        Suite::Pde,
        Suite::Compose,
        Suite::FormalIntegral,
        Suite::Borel,
    ];

    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    pub suite: Vec<Suite>,
    #[arg(long, default_value_t = 8)]
    pub x_order: usize,
    /// Largest y-component for the series-level suites.
    #[arg(long, default_value_t = 4)]
    pub n_max: usize,
    /// Longest word (or total length of a word pair) for the word-level suites.
    #[arg(long, default_value_t = 3)]
    pub max_len: usize,
    /// Report file; defaults to `check_report.json` in the current directory.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub cache: CacheArgs,
}

#[derive(Args, Debug)]
pub struct BorelArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// x-order the Borel data corresponds to; `--zeta-order` defaults to one less.
    #[arg(long, default_value_t = 13)]
    pub x_order: usize,
    #[arg(long)]
    pub zeta_order: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub n_max: usize,
    /// Rational points at which to sum the truncated series, e.g. `--eval 1/2`.
    #[arg(long, allow_hyphen_values = true)]
    pub eval: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Subcommand, Debug)]
pub enum CacheAction {
    /// Summarise every cache file.
    Inspect {
        #[arg(long, env = CACHE_DIR_ENV, default_value = ".mould-cache")]
        cache: PathBuf,
    },
    /// Delete every cache file.
    Clear {
        #[arg(long, env = CACHE_DIR_ENV, default_value = ".mould-cache")]
        cache: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Identity(String),
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Identity(_) => EXIT_IDENTITY,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Identity(m) | CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Field(f) => CliError::Validation(format!("invalid field: {f}")),
            other => CliError::Io(other.to_string()),
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let result = match &cli.command {
        Command::Normalize(args) => cmd_normalize(args),
        Command::Check(args) => cmd_check(args),
        Command::Borel(args) => cmd_borel(args),
        Command::Cache { action } => cmd_cache(action),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn load_field(args: &FieldArgs) -> Result<SaddleNodeField, CliError> {
    let validation = if args.repair {
        Validation::Repair
    } else {
        Validation::Strict
    };
    let field = io::read_field(&args.field, validation)?;
    let Some(support) = &args.support else {
        return Ok(field);
    };
    let keep: BTreeSet<Letter> = support.iter().copied().collect();
    let letters = field
        .letters()
        .iter()
        .filter(|(n, _)| keep.contains(n))
        .map(|(&n, a)| (n, a.clone()))
        .collect();
    SaddleNodeField::from_letters(field.x_order(), letters).map_err(|e| CliError::Validation(e.to_string()))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

/// Solver mould seeded from the cache when one is usable.
fn cached_solver(field: &SaddleNodeField, x_order: usize, cache: &CacheArgs) -> Result<Mould, CliError> {
    let v = Mould::solver(field, x_order);
    if cache.no_cache || cache.rebuild_cache {
        return Ok(v);
    }
    let path = io::cache_path(&cache.cache, field, x_order);
    if !path.exists() {
        return Ok(v);
    }
    let entries = io::read_cache(&path, field, x_order)
        .map_err(|e| CliError::Io(format!("{e} (rerun with --rebuild-cache)")))?;
    v.preload(entries)
        .map_err(|e| CliError::Io(format!("cache {}: {e} (rerun with --rebuild-cache)", path.display())))?;
    Ok(v)
}

fn save_solver(field: &SaddleNodeField, v: &Mould, cache: &CacheArgs) -> Result<(), CliError> {
    if cache.no_cache {
        return Ok(());
    }
    let path = io::cache_path(&cache.cache, field, v.x_order());
    io::write_cache(&path, field, v.x_order(), &v.memo_entries())?;
    Ok(())
}

fn write_component(
    output: &OutputArgs,
    stem: &str,
    n: usize,
    order: usize,
    coeffs: &[Scalar],
    words: u128,
    borel_plane: bool,
) -> Result<(), CliError> {
    let (path, text) = match output.format {
        Format::Json => {
            let text = if borel_plane {
                io::borel_component_json(n, order, coeffs, words)
            } else {
                io::component_json(n, order, coeffs, words)
            };
            (output.out.join(format!("{stem}_{n}.json")), text)
        }
        Format::Csv => (output.out.join(format!("{stem}_{n}.csv")), io::component_csv(coeffs)?),
    };
    io::write_text(&path, &text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_normalize(args: &NormalizeArgs) -> Result<(), CliError> {
    let field = load_field(&args.field)?;
    let k = args.x_order;
    let counts: Vec<u128> = (0..=args.n_max).map(|n| word_count(&field, n, k)).collect();
    let total = counts.iter().fold(0u128, |a, &b| a.saturating_add(b));

    let phi = normalising_series(&field, args.n_max, k);
    let psi = inverse_series(&field, args.n_max, k);
    if total > args.word_warn {
        eprintln!(
            "warning: {total} words exceed --word-warn {}; using grouped summation only",
            args.word_warn
        );
    } else {
        let v = cached_solver(&field, k, &args.cache)?;
        for n in 0..=args.n_max {
            let by_words = phi_n_by_words(&field, &v, n).map_err(|e| CliError::Identity(e.to_string()))?;
            if &by_words != phi.component(n).expect("computed") {
                return Err(CliError::Identity(format!("phi_{n}: word sum and grouped sum differ")));
            }
            let by_words = psi_n_by_words(&field, &v, n).map_err(|e| CliError::Identity(e.to_string()))?;
            if &by_words != psi.component(n).expect("computed") {
                return Err(CliError::Identity(format!("psi_{n}: word sum and grouped sum differ")));
            }
        }
        save_solver(&field, &v, &args.cache)?;
    }

    create_dir(&args.output.out)?;
    for (stem, series) in [("phi", &phi), ("psi", &psi)] {
        for (n, c) in series.components().iter().enumerate() {
            write_component(&args.output, stem, n, k, c.coeffs(), counts[n], false)?;
        }
    }
    Ok(())
}

fn cmd_borel(args: &BorelArgs) -> Result<(), CliError> {
    let field = load_field(&args.field)?;
    let zeta_order = match args.zeta_order {
        Some(z) => z,
        None => args
            .x_order
            .checked_sub(1)
            .ok_or_else(|| CliError::Io("--x-order must be at least 1".into()))?,
    };
    let points = args
        .eval
        .iter()
        .map(|p| parse_rational(p).map_err(|e| CliError::Io(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let components = borel_phi(&field, args.n_max, zeta_order);
    create_dir(&args.output.out)?;
    for (n, c) in components.iter().enumerate() {
        let words = word_count(&field, n, zeta_order + 1);
        write_component(&args.output, "phi_hat", n, zeta_order, c.coeffs(), words, true)?;
    }
    if points.is_empty() {
        return Ok(());
    }
    let mut evaluations = Vec::new();
    for (n, c) in components.iter().enumerate() {
        for zeta in &points {
            let e = evaluate(c, zeta);
            let zeta_s = io::rational_string(zeta);
            let [re, im] = io::scalar_strings(&e.partial_sum);
            let tail = e.tail_bound.as_ref().map(io::rational_string);
            match &tail {
                Some(t) => println!("phi_hat_{n}({zeta_s}) = {re} + ({im})i, tail <= {t}"),
                None => {
                    eprintln!("warning: |zeta| >= 1 at {zeta_s}; no tail bound for the partial sum");
                    println!("phi_hat_{n}({zeta_s}) = {re} + ({im})i");
                }
            }
            evaluations.push(json!({
                "n": n,
                "zeta": zeta_s,
                "zeta_order": zeta_order,
                "partial_sum": [re, im],
                "tail_bound": tail,
            }));
        }
    }
    let path = args.output.out.join("phi_hat_eval.json");
    let mut text = serde_json::to_string_pretty(&evaluations).expect("serializable");
    text.push('\n');
    io::write_text(&path, &text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_cache(action: &CacheAction) -> Result<(), CliError> {
    let dir = match action {
        CacheAction::Inspect { cache } | CacheAction::Clear { cache } => cache,
    };
    let files = cache_files(dir)?;
    match action {
        CacheAction::Inspect { .. } => {
            let mut bad = Vec::new();
            for path in &files {
                match io::inspect_cache(path) {
                    Ok(info) => println!(
                        "{}: version {}, x-order {}, {} entries, words up to length {}",
                        path.display(),
                        info.version,
                        info.x_order,
                        info.entries,
                        info.max_len
                    ),
                    Err(e) => {
                        println!("{}: unreadable ({e})", path.display());
                        bad.push(path.display().to_string());
                    }
                }
            }
            if files.is_empty() {
                println!("no cache files in {}", dir.display());
            }
            if !bad.is_empty() {
                return Err(CliError::Io(format!("corrupt cache files: {}", bad.join(", "))));
            }
        }
        CacheAction::Clear { .. } => {
            for path in &files {
                fs::remove_file(path).map_err(|e| CliError::Io(format!("cannot remove {}: {e}", path.display())))?;
            }
            println!("removed {} cache files from {}", files.len(), dir.display());
        }
    }
    Ok(())
}

/// Files named `<sha256>-x<order>.json` in `dir`, sorted.
fn cache_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let entries = fs::read_dir(dir).map_err(|e| CliError::Io(format!("cannot read {}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::Io(e.to_string()))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_suffix(".json") else { continue };
        let Some((hash, order)) = stem.split_once("-x") else { continue };
        if hash.len() == 64
            && hash.bytes().all(|b| b.is_ascii_hexdigit())
            && !order.is_empty()
            && order.bytes().all(|b| b.is_ascii_digit())
        {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Serialize)]
struct SuiteReport {
    suite: String,
    range: String,
    checked: usize,
    passed: bool,
    failures: Vec<String>,
}

const MAX_REPORTED: usize = 10;

struct Tally {
    checked: usize,
    failures: Vec<String>,
    failed: usize,
}

impl Tally {
    fn new() -> Self {
        Tally {
            checked: 0,
            failures: Vec::new(),
            failed: 0,
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_REPORTED {
                self.failures.push(what());
            }
        }
    }

    fn report(self, suite: Suite, range: String) -> SuiteReport {
        let mut failures = self.failures;
        if self.failed > failures.len() {
            failures.push(format!("... {} more", self.failed - failures.len()));
        }
        SuiteReport {
            suite: suite.name(),
            range,
            checked: self.checked,
            passed: self.failed == 0,
            failures,
        }
    }
}

fn first_nonzero(s: &TruncatedSeries) -> String {
    match s.coeffs().iter().position(|c| !c.is_zero()) {
        Some(k) => format!("x^{k} coefficient {}", s.coeffs()[k]),
        None => "zero".into(),
    }
}

fn show_alphabet(a: &[Letter]) -> String {
    let parts: Vec<String> = a.iter().map(|l| l.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

fn cmd_check(args: &CheckArgs) -> Result<(), CliError> {
    let field = load_field(&args.field)?;
    let k = args.x_order;
    let suites: BTreeSet<Suite> = if args.suite.contains(&Suite::All) {
        Suite::EACH.into_iter().collect()
    } else {
        args.suite.iter().copied().collect()
    };
    let mut alphabet: Vec<Letter> = field.support().into_iter().collect();
    if alphabet.is_empty() {
        alphabet = vec![-1, 0, 1];
    }
    let words = all_words(&alphabet, args.max_len);
    let v = cached_solver(&field, k, &args.cache)?;
    let err = |e: crate::moulds::MouldError| CliError::Identity(e.to_string());
    let word_range = format!("words of length <= {} over {}, x-order {k}", args.max_len, show_alphabet(&alphabet));

    let mut reports = Vec::new();
    for suite in suites {
        let mut t = Tally::new();
        let range = match suite {
            Suite::All => unreachable!("expanded above"),
            Suite::Symmetrality => {
                for w1 in &words {
                    for w2 in &words {
                        if w1.len() + w2.len() > args.max_len {
                            continue;
                        }
                        let r = check_symmetral(&v, w1, w2).map_err(err)?;
                        t.record(r.is_zero(), || format!("pair {w1} {w2}: {}", first_nonzero(&r)));
                    }
                }
                format!("word pairs with total length <= {} over {}, x-order {k}", args.max_len, show_alphabet(&alphabet))
            }
            Suite::MouldEquation => {
                for w in &words {
                    let r = residual_mould_equation(&v, &field, w).map_err(err)?;
                    t.record(r.is_zero(), || format!("word {w}: {}", first_nonzero(&r)));
                }
                word_range.clone()
            }
            Suite::Inverse => {
                let product = v.mul(&v.symmetral_inverse());
                let general = v.inverse().map_err(err)?;
                let unit = Mould::unit(k);
                for w in std::iter::once(Word::empty()).chain(words.iter().cloned()) {
                    let p = product.value(&w).map_err(err)?;
                    t.record(p == unit.value(&w).map_err(err)?, || format!("V x V^-1 on {w}"));
                    let a = general.value(&w).map_err(err)?;
                    let b = v.symmetral_inverse().value(&w).map_err(err)?;
                    t.record(a == b, || format!("inverses differ on {w}"));
                }
                word_range.clone()
            }
            Suite::Valuation => {
                for w in &words {
                    let val = v.value(w).map_err(err)?.valuation().lower_bound();
                    let bound = w.len().div_ceil(2);
                    t.record(val >= bound, || format!("word {w}: valuation {val} < {bound}"));
                }
                word_range.clone()
            }
            Suite::Cosymmetrality => {
                check_cosymmetrality(&words, k, &mut t);
                format!("words of length <= {} over {} on y, y^2, xy", args.max_len, show_alphabet(&alphabet))
            }
            Suite::Beta => {
                let beta_words = all_words(&[-1, 0, 1], args.max_len.max(1));
                let y = YPolynomial::y(0);
                for w in &beta_words {
                    let b = beta(w).expect("non-empty");
                    if w.weight() <= -2 {
                        t.record(b == 0.into(), || format!("beta{w} = {b} for weight {}", w.weight()));
                        continue;
                    }
                    let mut expected = YPolynomial::new();
                    expected.add_term((w.weight() + 1) as usize, TruncatedSeries::constant(Scalar::from_bigint(b), 0));
                    let got = comould_apply(w, &y);
                    t.record(got.sub(&expected).is_zero(), || format!("B{w} y differs from beta y^(|w|+1)"));
                }
                format!("words of length <= {} over {{-1,0,1}}", args.max_len.max(1))
            }
            Suite::Oracle => {
                let mould = normalising_series(&field, args.n_max, k);
                let oracle = oracle_phi(&field, args.n_max, k);
                for n in 0..=args.n_max {
                    let (a, b) = (mould.component(n).expect("n"), oracle.component(n).expect("n"));
                    t.record(a == b, || format!("phi_{n}: {}", first_nonzero(&a.sub(b))));
                }
                format!("n <= {}, x-order {k}", args.n_max)
            }
            Suite::Pde => {
                let phi = normalising_series(&field, args.n_max, k);
                let r = pde_residual(&field.to_bivariate(), &phi);
                for (n, row) in r.rows().iter().enumerate() {
                    t.record(row.is_zero(), || format!("y^{n} row: {}", first_nonzero(row)));
                }
                format!("n <= {}, x-order {k}", args.n_max)
            }
            Suite::Compose => {
                let phi = normalising_series(&field, args.n_max + k, k);
                let psi = inverse_series(&field, args.n_max, k);
                let r = compose_check(&phi, &psi, k, args.n_max).map_err(|e| CliError::Identity(e.to_string()))?;
                for (n, row) in r.rows().iter().enumerate() {
                    t.record(row.is_zero(), || format!("y^{n} row: {}", first_nonzero(row)));
                }
                format!("x-order {k}, y-order {}", r.y_order())
            }
            Suite::FormalIntegral => {
                let phi = normalising_series(&field, args.n_max, k);
                let r = formal_integral_residual(&field, &phi, args.n_max, k)
                    .map_err(|e| CliError::Identity(e.to_string()))?;
                for (n, row) in r.rows.iter().enumerate() {
                    t.record(row.is_zero(), || format!("u^{n} row: z^-{}", first_nonzero(row)));
                }
                format!("u <= {}, z-order {k}", args.n_max)
            }
            Suite::Borel => {
                check_borel(&field, &v, &words, args.n_max, &mut t).map_err(err)?;
                format!("{word_range}; phi_hat_n for n <= {}", args.n_max)
            }
        };
        reports.push(t.report(suite, range));
    }
    save_solver(&field, &v, &args.cache)?;

    for r in &reports {
        let status = if r.passed { "ok  " } else { "FAIL" };
        println!("{status} {:<16} {} checks; {}", r.suite, r.checked, r.range);
        for f in &r.failures {
            println!("       {f}");
        }
    }
    let report_path = args.report.clone().unwrap_or_else(|| PathBuf::from("check_report.json"));
    let mut text = serde_json::to_string_pretty(&json!({
        "field_hash": field.fingerprint(),
        "suites": reports,
    }))
    .expect("serializable");
    text.push('\n');
    io::write_text(&report_path, &text)?;
    println!("wrote {}", report_path.display());
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.suite.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Identity(format!("nonzero residuals in: {}", failed.join(", "))))
    }
}

fn check_cosymmetrality(words: &[Word], k: usize, t: &mut Tally) {
    let monomials = [
        ("y", YPolynomial::monomial(0, 1, k)),
        ("y^2", YPolynomial::monomial(0, 2, k)),
        ("xy", YPolynomial::monomial(1, 1, k)),
    ];
    for w in words {
        let mut pairs = BTreeSet::new();
        for mask in 0u64..(1 << w.len()) {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (i, &l) in w.letters().iter().enumerate() {
                if mask & (1 << i) != 0 {
                    a.push(l);
                } else {
                    b.push(l);
                }
            }
            pairs.insert((Word::from_slice(&a), Word::from_slice(&b)));
        }
        for (fname, f) in &monomials {
            for (gname, g) in &monomials {
                let left = comould_apply(w, &f.mul(g));
                let mut right = YPolynomial::new();
                for (w1, w2) in &pairs {
                    let sh = shuffle_coeff(w1, w2, w) as i64;
                    let term = comould_apply(w1, f).mul(&comould_apply(w2, g));
                    right = right.add(&term.scale_scalar(&Scalar::from_int(sh)));
                }
                t.record(left.sub(&right).is_zero(), || format!("word {w} on {fname} * {gname}"));
            }
        }
    }
}

fn check_borel(
    field: &SaddleNodeField,
    v: &Mould,
    words: &[Word],
    n_max: usize,
    t: &mut Tally,
) -> Result<(), crate::moulds::MouldError> {
    let k = v.x_order();
    if k == 0 {
        return Ok(());
    }
    let hat = BorelMould::new(field, k - 1);
    for w in words {
        let x_route = borel(&v.value(w)?.to_z_coeffs().expect("valuation >= 1")).expect("order >= 1");
        let b_route = hat.value(w).expect("valid field");
        t.record(x_route == b_route, || format!("word {w}: Borel routes differ"));
    }
    let phi: PhiSeries = normalising_series(field, n_max, k);
    for (n, hat_n) in borel_phi(field, n_max, k - 1).iter().enumerate() {
        let expected = borel(&phi.component(n).expect("n").to_z_coeffs().expect("valuation >= 1")).expect("order >= 1");
        t.record(&expected == hat_n, || format!("phi_hat_{n}: Borel routes differ"));
    }
    Ok(())
}
