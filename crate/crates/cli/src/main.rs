//! `condlab`: experiment driver for conditionality measurements.

mod config;
mod inputs;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use condlab_core::acceptance::{run_all, run_criterion, AcceptConfig, CriterionResult};
use condlab_core::conditionality::*;
use condlab_core::fit::{fit_log_power, fit_power, ratio_stabilization, FitReport, BOUNDED_SLOPE};
use condlab_core::io::{fmt17, write_atomic};
use condlab_core::spaces::harmonic;
use condlab_core::systems::FiniteSystem;
use condlab_core::weight::{dirichlet_norm, fm_norm, WeightFourierTable, WeightParams, DEFAULT_TOL};
use condlab_core::Error;

use config::ExperimentConfig;
use inputs::{parse_range, parse_space, parse_system};

const EXIT_VERDICT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "condlab", version, about = "Conditionality measurements for weighted trigonometric systems and DKK-type bases")]
#[command(after_help = "Exit codes: 0 success, 1 acceptance verdict failure, 2 usage error, 3 numerical failure.\n\
Systems: JSON constructor tree, a file holding one (or a config with a system key),\n\
or a short form: orthonormal:N, trig:LAMBDA,N[,raw|complex|real], aa_diamond:BETA,ALPHA,N, almost_greedy:BETA,ALPHA,N,K.\n\
Ranges: a..b (all integers), a..b*2 (doubling), or a comma list.\n\
Spaces: lp:P, lp:inf, lorentz:P,Q, wlorentz:PATH,Q.")]
struct Cli {
    /// key=value config whose entries act as flags; explicit flags override them.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the resolved configuration of this run.
    #[arg(long, global = true, value_name = "FILE")]
    emit_config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Fourier coefficients ŵ_λ(n), n = 0..nmax, of the power weight |t|^λ on [-1/2, 1/2].
    Wcoef(WcoefArgs),
    /// Norms of the Dirichlet kernel D_m in H_λ with a power fit; the exponent should be (1-λ)/2.
    Dirichlet(DirichletArgs),
    /// ‖f_m‖² in H_{-α} for f_m = Σ_{n≤m} n^{-(1+α)/2} e_n, against the harmonic number H_m.
    Fm(FmArgs),
    /// Dense Gram matrix of a system.
    Gram(GramArgs),
    /// Conditionality k_m (or k̃_m with --tilde): largest coordinate-projection norm over |A| ≤ m.
    Kmeasure(KmeasureArgs),
    /// Domination constants δ_m (or δ̃_m) between two systems of equal dimension.
    Delta(DeltaArgs),
    /// Fundamental function φ_m: largest norm of a signed sum of m basis vectors.
    Phi(PhiArgs),
    /// Hilbertian or besselian transform ratios of a system against a sequence space, per scale.
    Transform(TransformArgs),
    /// Lifted k̃_m witnesses on a DKK system built from the span of each block average.
    Dkk(DkkArgs),
    /// Greedy error over best m-term coordinate-projection error on random vectors.
    Greedy(GreedyArgs),
    /// Power, log-power, or bounded-ratio fit of a CSV series.
    Fit(FitArgs),
    /// Run the acceptance suite; exit 1 if any criterion fails.
    Accept(AcceptArgs),
    /// Merge CSV outputs into a Markdown summary.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct Out {
    /// Output file (written atomically); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitOut {
    /// Fit report (JSON); printed to stderr when absent.
    #[arg(long)]
    fit_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Search {
    /// Random restarts for heuristic searches.
    #[arg(long, default_value_t = SearchConfig::default().restarts)]
    restarts: usize,
    /// Evaluation budget per restart.
    #[arg(long, default_value_t = SearchConfig::default().budget)]
    budget: usize,
    /// Largest m for exact k̃_m.
    #[arg(long, default_value_t = SearchConfig::default().ktilde_exact_cap)]
    ktilde_cap: usize,
    /// Largest dimension for exact k_m.
    #[arg(long, default_value_t = SearchConfig::default().k_exact_dim_cap)]
    k_dim_cap: usize,
}

impl Search {
    fn config(&self) -> SearchConfig {
        SearchConfig { restarts: self.restarts, budget: self.budget, ktilde_exact_cap: self.ktilde_cap, k_exact_dim_cap: self.k_dim_cap, ..SearchConfig::default() }
    }
}

#[derive(Args, Debug)]
struct WcoefArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 1024)]
    nmax: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[command(flatten)]
    out: Out,
}

#[derive(Args, Debug)]
struct DirichletArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 4096)]
    mmax: usize,
    /// Smallest m; m runs over powers of two from here.
    #[arg(long, default_value_t = 16)]
    mmin: usize,
    #[command(flatten)]
    out: Out,
    #[command(flatten)]
    fit: FitOut,
}

#[derive(Args, Debug)]
struct FmArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 4096)]
    mmax: usize,
    #[arg(long, default_value_t = 64)]
    mmin: usize,
    #[command(flatten)]
    out: Out,
    #[command(flatten)]
    fit: FitOut,
}

#[derive(Args, Debug)]
struct GramArgs {
    #[arg(long)]
    system: String,
    #[command(flatten)]
    out: Out,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Exact,
    Heuristic,
}

#[derive(Args, Debug)]
struct KmeasureArgs {
    #[arg(long)]
    system: String,
    #[arg(long)]
    m: String,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    /// Measure k̃_m (sets inside the first m coordinates) instead of k_m.
    #[arg(long)]
    tilde: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    search: Search,
    #[command(flatten)]
    out: Out,
}

#[derive(Args, Debug)]
struct DeltaArgs {
    #[arg(long)]
    left: String,
    #[arg(long)]
    right: String,
    #[arg(long)]
    m: String,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long)]
    tilde: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    search: Search,
    #[command(flatten)]
    out: Out,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SignsArg {
    /// Every sign pattern on a structured family of sets (exact for small systems).
    All,
    /// Random sign patterns.
    Random,
}

#[derive(Args, Debug)]
struct PhiArgs {
    #[arg(long)]
    system: String,
    #[arg(long)]
    m: String,
    #[arg(long, value_enum, default_value = "all")]
    signs: SignsArg,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    search: Search,
    #[command(flatten)]
    out: Out,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DirectionArg {
    Hilbertian,
    Besselian,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[arg(long)]
    system: String,
    /// Sequence space compared against.
    #[arg(long)]
    space: String,
    #[arg(long, value_enum)]
    direction: DirectionArg,
    /// Support sizes of the test vectors.
    #[arg(long)]
    scales: String,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: Out,
    #[command(flatten)]
    fit: FitOut,
}

#[derive(Args, Debug)]
struct DkkArgs {
    /// A DKK or almost-greedy system.
    #[arg(long)]
    system: String,
    #[arg(long)]
    m: String,
    #[command(flatten)]
    search: Search,
    #[command(flatten)]
    out: Out,
    #[command(flatten)]
    fit: FitOut,
}

#[derive(Args, Debug)]
struct GreedyArgs {
    #[arg(long)]
    system: String,
    /// Vectors are uniform on [-1, 1] over the first `support` coordinates.
    #[arg(long)]
    support: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Greedy step; drawn uniformly from 1..support when absent.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    search: Search,
    #[command(flatten)]
    out: Out,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModelArg {
    Power,
    LogPower,
    Ratio,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// CSV with an `m` (or first) column and a `value` (or second) column.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "power")]
    model: ModelArg,
    #[arg(long)]
    min_m: Option<f64>,
    #[arg(long)]
    max_m: Option<f64>,
    /// |slope| threshold for the bounded verdict of the ratio model.
    #[arg(long, default_value_t = BOUNDED_SLOPE)]
    threshold: f64,
    #[command(flatten)]
    out: Out,
}

#[derive(Args, Debug)]
struct AcceptArgs {
    #[arg(long, default_value_t = AcceptConfig::default().seed)]
    seed: u64,
    /// Run only these criteria (1-9), e.g. 1,4,6.
    #[arg(long)]
    only: Option<String>,
    /// JSON results.
    #[command(flatten)]
    out: Out,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 40)]
    max_rows: usize,
    #[command(flatten)]
    out: Out,
}

enum Failure {
    Usage(String),
    Numeric(Error),
    Verdict,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

type Run = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn module_of(e: &Error) -> &'static str {
    match e {
        Error::NotPositiveDefinite(_) | Error::NoConvergence(_) => "linalg",
        Error::InvalidExponent(_) => "weight",
        Error::UnsupportedPair(_) => "spaces",
        Error::IncompatibleOracles(_) | Error::OddDimension(_) | Error::BlockOverrun { .. } => "systems",
        Error::BudgetExceeded { .. } => "conditionality",
        Error::InsufficientData { .. } => "fit",
        Error::InvalidParameter(_) | Error::DimensionMismatch { .. } | Error::Parse(_) => "input",
        Error::Io(_) => "io",
    }
}

fn emit(out: &Out, text: &str) -> Run {
    match &out.out {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_fit(fit: &FitOut, report: &str) -> Run {
    match &fit.fit_out {
        Some(p) => Ok(write_atomic(p, format!("{report}\n").as_bytes())?),
        None => {
            eprintln!("{report}");
            Ok(())
        }
    }
}

fn system(text: &str) -> Result<FiniteSystem, Failure> {
    Ok(parse_system(text).map_err(usage)?.build()?)
}

fn range(text: &str) -> Result<Vec<usize>, Failure> {
    parse_range(text).map_err(usage)
}

fn need_seed(seed: Option<u64>, what: &str) -> Result<u64, Failure> {
    seed.ok_or_else(|| usage(format!("--seed is required for {what}")))
}

fn mode(m: ModeArg, seed: Option<u64>) -> Result<Mode, Failure> {
    Ok(match m {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Heuristic => Mode::Heuristic { seed: need_seed(seed, "heuristic mode")? },
    })
}

fn doubling_points(lo: usize, hi: usize) -> Result<Vec<usize>, Failure> {
    if lo == 0 || lo > hi {
        return Err(usage(format!("need 1 ≤ mmin ≤ mmax, got {lo}, {hi}")));
    }
    Ok(std::iter::successors(Some(lo), |&m| Some(m * 2)).take_while(|&m| m <= hi).collect())
}

fn table(lambda: f64, max_index: usize, tol: f64) -> Result<WeightFourierTable, Failure> {
    Ok(WeightFourierTable::load_or_build(WeightParams::new(lambda)?, max_index, tol)?)
}

fn wcoef(a: &WcoefArgs) -> Run {
    let t = table(a.lambda, a.nmax, a.tol)?;
    let mut s = String::from("n,coeff\n");
    for (n, c) in t.coeffs().iter().enumerate() {
        let _ = writeln!(s, "{n},{}", fmt17(*c));
    }
    emit(&a.out, &s)
}

fn dirichlet(a: &DirichletArgs) -> Run {
    let ms = doubling_points(a.mmin, a.mmax)?;
    let t = table(a.lambda, 2 * a.mmax, DEFAULT_TOL)?;
    let pts: Vec<(f64, f64)> = ms.iter().map(|&m| Ok((m as f64, dirichlet_norm(&t, m)?))).collect::<Result<_, Error>>()?;
    let mut s = String::from("m,norm\n");
    for &(m, v) in &pts {
        let _ = writeln!(s, "{m},{}", fmt17(v));
    }
    emit(&a.out, &s)?;
    emit_fit(&a.fit, &fit_power(&pts)?.to_json())
}

fn fm(a: &FmArgs) -> Run {
    let ms = doubling_points(a.mmin, a.mmax)?;
    let t = table(-a.alpha, a.mmax, DEFAULT_TOL)?;
    let mut s = String::from("m,norm_sq,harmonic,ratio\n");
    let mut pts = Vec::new();
    for &m in &ms {
        let v = fm_norm(&t, m)?.powi(2);
        let h = harmonic(m);
        pts.push((h, v));
        let _ = writeln!(s, "{m},{},{},{}", fmt17(v), fmt17(h), fmt17(v / h));
    }
    emit(&a.out, &s)?;
    // The power fit of (H_m, ‖f_m‖²) is the slope of log‖f_m‖² against log H_m.
    emit_fit(&a.fit, &fit_power(&pts)?.to_json())
}

fn gram(a: &GramArgs) -> Run {
    let sys = system(&a.system)?;
    let g = sys.gram().ok_or_else(|| Error::IncompatibleOracles(format!("no dense Gram for {}", sys.label())))?;
    let mut s = String::new();
    for i in 0..g.order() {
        let row: Vec<String> = g.row(i).iter().map(|v| fmt17(*v)).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    emit(&a.out, &s)
}

fn kmeasure(a: &KmeasureArgs) -> Run {
    let sys = system(&a.system)?;
    let ms = range(&a.m)?;
    let md = mode(a.mode, a.seed)?;
    let cfg = a.search.config();
    let name = if a.tilde { "ktilde" } else { "k" };
    let mut series = GrowthSeries::new(name, sys.label());
    let mut sorted = ms.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if md == Mode::Exact {
        let top = *sorted.last().unwrap();
        let all = if a.tilde { ktilde_exact_series(&sys, top, &cfg)? } else { k_exact_series(&sys, top, &cfg)? };
        for &m in &sorted {
            series.push(m, all[m.min(all.len()) - 1], Kind::Exact)?;
        }
    } else {
        for &m in &sorted {
            let e = if a.tilde { ktilde_measure(&sys, m, md, &cfg)? } else { k_measure(&sys, m, md, &cfg)? };
            series.push(e.m, e.value, e.kind)?;
        }
    }
    emit(&a.out, &series.to_csv())
}

fn delta(a: &DeltaArgs) -> Run {
    let (s1, s2) = (system(&a.left)?, system(&a.right)?);
    let md = mode(a.mode, a.seed)?;
    let cfg = a.search.config();
    let mut series = GrowthSeries::new(if a.tilde { "delta_tilde" } else { "delta" }, format!("{} -> {}", s1.label(), s2.label()));
    let mut ms = range(&a.m)?;
    ms.sort_unstable();
    ms.dedup();
    for m in ms {
        let e = delta_between(&s1, &s2, m, a.tilde, md, &cfg)?;
        series.push(e.m, e.value, e.kind)?;
    }
    emit(&a.out, &series.to_csv())
}

fn phi(a: &PhiArgs) -> Run {
    let sys = system(&a.system)?;
    let (signs, seed) = match a.signs {
        SignsArg::All => (SignMode::AllSignsExact, a.seed.unwrap_or(0)),
        SignsArg::Random => (SignMode::RandomSigns, need_seed(a.seed, "random signs")?),
    };
    let cfg = a.search.config();
    let mut series = GrowthSeries::new("phi", sys.label());
    let mut ms = range(&a.m)?;
    ms.sort_unstable();
    ms.dedup();
    for m in ms {
        let r = phi_fundamental(&sys, m, signs, seed, &cfg)?;
        series.push(m, r.value, r.kind)?;
    }
    emit(&a.out, &series.to_csv())
}

fn transform(a: &TransformArgs) -> Run {
    let sys = system(&a.system)?;
    let space = parse_space(&a.space).map_err(usage)?;
    let dir = match a.direction {
        DirectionArg::Hilbertian => Direction::Hilbertian,
        DirectionArg::Besselian => Direction::Besselian,
    };
    let seed = need_seed(a.seed, "transform batteries")?;
    let rep = transform_norms(&sys, &space, dir, &range(&a.scales)?, seed)?;
    let mut s = String::from("scale,ratio\n");
    for &(n, v) in &rep.per_scale {
        let _ = writeln!(s, "{n},{}", fmt17(v));
    }
    emit(&a.out, &s)?;
    let pts: Vec<(f64, f64)> = rep.per_scale.iter().map(|&(n, v)| (n as f64, v)).collect();
    let mut summary = serde_json::json!({ "constant": rep.constant });
    if let Ok(st) = ratio_stabilization(&pts, BOUNDED_SLOPE) {
        summary["stabilization"] = serde_json::to_value(st).expect("serializable");
    }
    emit_fit(&a.fit, &serde_json::to_string_pretty(&summary).expect("serializable"))
}

fn dkk(a: &DkkArgs) -> Run {
    let sys = system(&a.system)?;
    let cfg = a.search.config();
    let mut series = GrowthSeries::new("ktilde_witness", sys.label());
    let mut ms = range(&a.m)?;
    ms.sort_unstable();
    ms.dedup();
    for m in ms {
        let w = dkk_ktilde_witness(&sys, m, &cfg)?;
        series.push(m, w.ratio, Kind::LowerWitness)?;
    }
    emit(&a.out, &series.to_csv())?;
    let pts: Vec<(f64, f64)> = series.fit_points().into_iter().filter(|p| p.0 >= 3.0).collect();
    match fit_log_power(&pts) {
        Ok(f) => emit_fit(&a.fit, &f.to_json()),
        Err(e) => emit_fit(&a.fit, &format!("{{\"fit\": null, \"reason\": \"{e}\"}}")),
    }
}

fn greedy(a: &GreedyArgs) -> Run {
    let sys = system(&a.system)?;
    let seed = need_seed(a.seed, "greedy sampling")?;
    if a.support < 2 || a.support > sys.dim() {
        return Err(usage(format!("--support must lie in 2..={}", sys.dim())));
    }
    if let Some(m) = a.m {
        if m == 0 || m >= a.support {
            return Err(usage("--m must lie in 1..support"));
        }
    }
    let cfg = a.search.config();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("sample,m,greedy_error,best_error,ratio,exact\n");
    for i in 0..a.samples {
        let f: Vec<f64> = (0..a.support).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = a.m.unwrap_or_else(|| rng.gen_range(1..a.support));
        let r = greedy_ratio(&sys, &f, m, rng.gen(), &cfg)?;
        let _ = writeln!(s, "{i},{m},{},{},{},{}", fmt17(r.greedy_error), fmt17(r.best_error), fmt17(r.ratio), r.exact);
    }
    emit(&a.out, &s)
}

/// `(header, rows)` of a simple CSV (quoted fields may contain commas).
fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
    let split = |line: &str| -> Vec<String> {
        let (mut out, mut cur, mut quoted) = (Vec::new(), String::new(), false);
        let mut chars = line.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '"' if quoted && chars.peek() == Some(&'"') => {
                    cur.push('"');
                    chars.next();
                }
                '"' => quoted = !quoted,
                ',' if !quoted => out.push(std::mem::take(&mut cur)),
                _ => cur.push(c),
            }
        }
        out.push(cur);
        out
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = split(lines.next().ok_or_else(|| usage(format!("{} is empty", path.display())))?);
    Ok((header, lines.map(split).collect()))
}

fn series_points(header: &[String], rows: &[Vec<String>]) -> Vec<(f64, f64)> {
    let col = |names: &[&str], fallback: usize| header.iter().position(|h| names.contains(&h.as_str())).unwrap_or(fallback);
    let (xi, yi) = (col(&["m", "n", "scale"], 0), col(&["value", "norm", "ratio", "coeff"], 1));
    let ki = header.iter().position(|h| h == "kind");
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| ki.is_none_or(|k| r.get(k).map(String::as_str) != Some("upper_envelope")))
        .filter_map(|r| Some((r.get(xi)?.parse().ok()?, r.get(yi)?.parse().ok()?)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|b, a| {
        let same = a.0 == b.0;
        if same {
            a.1 = a.1.max(b.1);
        }
        same
    });
    pts
}

fn fit(a: &FitArgs) -> Run {
    let (header, rows) = read_csv(&a.input)?;
    let pts: Vec<(f64, f64)> = series_points(&header, &rows)
        .into_iter()
        .filter(|p| a.min_m.is_none_or(|lo| p.0 >= lo) && a.max_m.is_none_or(|hi| p.0 <= hi))
        .collect();
    let json = match a.model {
        ModelArg::Power => fit_power(&pts)?.to_json(),
        ModelArg::LogPower => fit_log_power(&pts)?.to_json(),
        ModelArg::Ratio => serde_json::to_string_pretty(&ratio_stabilization(&pts, a.threshold)?).expect("serializable"),
    };
    emit(&a.out, &format!("{json}\n"))
}

fn accept(a: &AcceptArgs) -> Run {
    let cfg = AcceptConfig { seed: a.seed, ..AcceptConfig::default() };
    let print = |r: &CriterionResult| println!("{}", r.line());
    let results: Vec<CriterionResult> = match &a.only {
        None => run_all(&cfg, print),
        Some(list) => {
            let ids = parse_range(list).map_err(usage)?;
            if let Some(bad) = ids.iter().find(|&&i| i > 9) {
                return Err(usage(format!("--only: criterion {bad} is not individually runnable (1-9)")));
            }
            ids.into_iter()
                .map(|i| {
                    let r = run_criterion(i as u32, &cfg);
                    print(&r);
                    r
                })
                .collect()
        }
    };
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed} of {} criteria passed", results.len());
    if let Some(p) = &a.out.out {
        write_atomic(p, serde_json::to_string_pretty(&results).expect("serializable").as_bytes())?;
    }
    if passed == results.len() {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn report(a: &ReportArgs) -> Run {
    let mut md = String::from("# condlab report\n");
    for path in &a.inputs {
        let (header, rows) = read_csv(path)?;
        let _ = write!(md, "\n## {}\n\n{} rows.\n\n", path.display(), rows.len());
        let _ = writeln!(md, "| {} |", header.join(" | "));
        let _ = writeln!(md, "|{}", "---|".repeat(header.len()));
        for r in rows.iter().take(a.max_rows) {
            let _ = writeln!(md, "| {} |", r.join(" | "));
        }
        if rows.len() > a.max_rows {
            let _ = writeln!(md, "\n({} further rows omitted.)", rows.len() - a.max_rows);
        }
        let pts: Vec<(f64, f64)> = series_points(&header, &rows).into_iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
        if let Ok(FitReport { gamma, r2, range, .. }) = fit_power(&pts) {
            let _ = writeln!(md, "\nPower fit over [{}, {}]: exponent {gamma:.4}, R² {r2:.5}.", range.0, range.1);
        }
    }
    emit(&a.out, &md)
}

/// Splices config entries in front of the user's flags, so explicit flags win.
fn resolve_argv(argv: Vec<String>) -> Result<(Vec<String>, Option<ExperimentConfig>), Failure> {
    let mut rest = Vec::new();
    let mut config_path = None;
    let mut it = argv.into_iter();
    let prog = it.next().unwrap_or_else(|| "condlab".into());
    while let Some(a) = it.next() {
        if a == "--config" {
            config_path = Some(it.next().ok_or_else(|| usage("--config needs a file"))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config_path else {
        let mut v = vec![prog];
        v.extend(rest);
        return Ok((v, None));
    };
    let text = std::fs::read_to_string(&path).map_err(|e| usage(format!("--config {path}: {e}")))?;
    let cfg = ExperimentConfig::parse(&text).map_err(|e| usage(format!("--config {path}: {e}")))?;
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let pos = rest.iter().position(|a| names.contains(a));
    let sub = match (pos, cfg.subcommand.is_empty()) {
        (Some(i), true) => rest.remove(i),
        (Some(i), false) if rest[i] == cfg.subcommand => rest.remove(i),
        (Some(i), false) => return Err(usage(format!("subcommand {} conflicts with config subcommand {}", rest[i], cfg.subcommand))),
        (None, false) => cfg.subcommand.clone(),
        (None, true) => return Err(usage("no subcommand given on the command line or in the config")),
    };
    let mut v = vec![prog, sub];
    v.extend(cfg.to_args());
    v.extend(rest);
    Ok((v, Some(cfg)))
}

/// Configuration of this run: every argument with a value, defaults included.
fn resolved_config(name: &str, m: &clap::ArgMatches) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { subcommand: name.to_string(), ..Default::default() };
    let cmd = Cli::command();
    let args: Vec<String> = cmd.find_subcommand(name).map(|c| c.get_arguments().map(|a| a.get_id().to_string()).collect()).unwrap_or_default();
    for id in m.ids() {
        let key = id.as_str();
        // Argument groups from flattened structs also appear as ids.
        if !args.iter().any(|a| a == key) || matches!(key, "config" | "emit_config" | "jobs") || m.value_source(key) == Some(ValueSource::EnvVariable) {
            continue;
        }
        let Ok(Some(raw)) = m.try_get_raw(key) else { continue };
        let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        cfg.entries.insert(key.replace('_', "-"), vals.join(" "));
    }
    cfg
}

fn run(argv: Vec<String>) -> Run {
    let (argv, _) = resolve_argv(argv)?;
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|c| c.get_name().to_string()).collect();
    for n in names {
        cmd = cmd.mut_subcommand(n, |c| c.args_override_self(true));
    }
    let matches = match cmd.args_override_self(true).try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { Ok(()) } else { Err(Failure::Usage(String::new())) };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| usage(e.to_string()))?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().map_err(|e| usage(e.to_string()))?;
    }
    if let Some(p) = &cli.emit_config {
        let (name, sub) = matches.subcommand().expect("subcommand is required");
        write_atomic(p, resolved_config(name, sub).emit().as_bytes())?;
    }
    match &cli.cmd {
        Cmd::Wcoef(a) => wcoef(a),
        Cmd::Dirichlet(a) => dirichlet(a),
        Cmd::Fm(a) => fm(a),
        Cmd::Gram(a) => gram(a),
        Cmd::Kmeasure(a) => kmeasure(a),
        Cmd::Delta(a) => delta(a),
        Cmd::Phi(a) => phi(a),
        Cmd::Transform(a) => transform(a),
        Cmd::Dkk(a) => dkk(a),
        Cmd::Greedy(a) => greedy(a),
        Cmd::Fit(a) => fit(a),
        Cmd::Accept(a) => accept(a),
        Cmd::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(EXIT_VERDICT),
        Err(Failure::Usage(msg)) => {
            if !msg.is_empty() {
                eprintln!("usage error: {msg}");
            }
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error ({}): {e}", module_of(&e));
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
