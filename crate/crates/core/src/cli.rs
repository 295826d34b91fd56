//! Command-line surface: configuration, report and tree emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bch::BchTable;
use crate::cyclotomic::{CycElt, PrimeContext, Valuation};
use crate::error::Error;
use crate::frame::{enumerate_frame, FrameGroup};
use crate::homs::{images_to_coeffs, in_hhat, GammaCoeffs};
use crate::liering::{check_class_bounds, default_work_prec, jacobi_exponent, jacobi_work_prec, LieRingSpec};
use crate::suites::{self, Faults, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "coclass", version, about = "Frame groups of p-groups of maximal class")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Jacobi exponent λ of L_i(γ) with its lower bound.
    Jacobi(Flags),
    /// Build S_{i,m}(γ) and verify maximal class.
    Build(Flags),
    /// Enumerate the frame tree over a coefficient grid.
    Enumerate(Flags),
    /// Run the verification suites.
    Verify(Flags),
    /// Sweep Jacobi exponents over a coefficient grid.
    #[command(name = "scan-conjecture1")]
    ScanConjecture1(Flags),
    /// Regenerate the BCH coefficient table.
    #[command(name = "bch-table")]
    BchTable(Flags),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub i: Option<u32>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long = "m-max")]
    pub m_max: Option<u32>,
    /// Comma-separated integer coefficients c_2, …, c_{(p−1)/2}.
    #[arg(long)]
    pub coeffs: Option<String>,
    /// Comma-separated probe images `e:n`, meaning n·κ^e.
    #[arg(long)]
    pub images: Option<String>,
    #[arg(long = "coeff-mod")]
    pub coeff_mod: Option<u32>,
    #[arg(long = "work-prec")]
    pub work_prec: Option<u32>,
    #[arg(long)]
    pub budget: Option<u128>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long = "i-max")]
    pub i_max: Option<u32>,
    #[arg(long)]
    pub degree: Option<u32>,
    /// Fault injection for `verify`: `bch:<term>` or `epsilon:<a>,<i>,<j>`.
    #[arg(long)]
    pub inject: Vec<String>,
    /// File of `key = value` lines using the flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_resource_limit() { EXIT_RESOURCE } else { EXIT_CONFIG };
        CliError { code, message: e.to_string() }
    }
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError { code: EXIT_CONFIG, message: message.into() }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// How the homomorphism is specified.
#[derive(Debug, Clone)]
pub enum CoeffSpec {
    Coeffs(Vec<i64>),
    Images(Vec<(u32, i64)>),
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub p: u64,
    pub i: Option<u32>,
    pub m: Option<u32>,
    pub m_max: Option<u32>,
    pub coeffs: Option<CoeffSpec>,
    pub coeff_mod: u32,
    pub work_prec: Option<u32>,
    pub budget: u128,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub samples: usize,
    pub i_max: Option<u32>,
    pub degree: u32,
    pub faults: Faults,
}

fn parse_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_error(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().trim_matches('"').to_string());
    }
    Ok(map)
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| config_error(format!("invalid value for {key}: {v}"))),
    }
}

fn parse_ints(s: &str) -> CliResult<Vec<i64>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| config_error(format!("invalid coefficient: {t}"))))
        .collect()
}

fn parse_images(s: &str) -> CliResult<Vec<(u32, i64)>> {
    s.split(',')
        .map(|t| {
            let (e, n) = t.trim().split_once(':').ok_or_else(|| config_error(format!("image must be e:n, got {t}")))?;
            let e = e.trim().parse().map_err(|_| config_error(format!("invalid exponent: {e}")))?;
            let n = n.trim().parse().map_err(|_| config_error(format!("invalid multiplier: {n}")))?;
            Ok((e, n))
        })
        .collect()
}

fn parse_fault(s: &str, faults: &mut Faults) -> CliResult<()> {
    let bad = || config_error(format!("invalid fault: {s}"));
    match s.split_once(':') {
        Some(("bch", k)) => faults.bch_term = Some(k.trim().parse().map_err(|_| bad())?),
        Some(("epsilon", rest)) => {
            let v: Vec<u32> = rest.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
            let [a, i, j] = v[..] else { return Err(bad()) };
            faults.epsilon = Some((a as usize, i, j));
        }
        _ => return Err(bad()),
    }
    Ok(())
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

impl RunConfig {
    pub fn resolve(flags: &Flags, default_format: Format) -> CliResult<RunConfig> {
        let file = match &flags.config {
            Some(path) => parse_config_file(path)?,
            None => BTreeMap::new(),
        };
        let known = [
            "p", "i", "m", "m-max", "coeffs", "images", "coeff-mod", "work-prec", "budget", "format", "out", "seed",
            "samples", "i-max", "degree", "inject",
        ];
        if let Some(k) = file.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(config_error(format!("unknown config key: {k}")));
        }
        let p = pick(flags.p, &file, "p")?.unwrap_or(5);
        if p < 5 || !is_prime(p) {
            return Err(config_error(format!("p must be a prime >= 5, got {p}")));
        }
        let coeffs_text = flags.coeffs.clone().or_else(|| file.get("coeffs").cloned());
        let images_text = flags.images.clone().or_else(|| file.get("images").cloned());
        let coeffs = match (coeffs_text, images_text) {
            (Some(_), Some(_)) => return Err(config_error("give either --coeffs or --images")),
            (Some(c), None) => Some(CoeffSpec::Coeffs(parse_ints(&c)?)),
            (None, Some(im)) => Some(CoeffSpec::Images(parse_images(&im)?)),
            (None, None) => None,
        };
        let format = match flags.format {
            Some(f) => f,
            None => match file.get("format").map(String::as_str) {
                None => default_format,
                Some("json") => Format::Json,
                Some("dot") => Format::Dot,
                Some("text") => Format::Text,
                Some(other) => return Err(config_error(format!("invalid format: {other}"))),
            },
        };
        let budget = pick(flags.budget, &file, "budget")?.unwrap_or(10_000_000);
        if budget == 0 {
            return Err(config_error("budget must be positive"));
        }
        let coeff_mod = pick(flags.coeff_mod, &file, "coeff-mod")?.unwrap_or(1);
        if coeff_mod == 0 {
            return Err(config_error("coeff-mod must be positive"));
        }
        let mut faults = Faults::none();
        let mut injects = flags.inject.clone();
        if let Some(v) = file.get("inject") {
            injects.extend(v.split(';').map(|s| s.trim().to_string()));
        }
        for s in &injects {
            parse_fault(s, &mut faults)?;
        }
        Ok(RunConfig {
            p,
            i: pick(flags.i, &file, "i")?,
            m: pick(flags.m, &file, "m")?,
            m_max: pick(flags.m_max, &file, "m-max")?,
            coeffs,
            coeff_mod,
            work_prec: pick(flags.work_prec, &file, "work-prec")?,
            budget,
            format,
            out: flags.out.clone().or_else(|| file.get("out").map(PathBuf::from)),
            seed: pick(flags.seed, &file, "seed")?.unwrap_or(1),
            samples: pick(flags.samples, &file, "samples")?.unwrap_or(200),
            i_max: pick(flags.i_max, &file, "i-max")?,
            degree: pick(flags.degree, &file, "degree")?.unwrap_or(crate::bch::EMBEDDED_DEGREE),
            faults,
        })
    }

    fn need_i(&self) -> CliResult<u32> {
        self.i.ok_or_else(|| config_error("--i is required"))
    }

    /// The homomorphism, in a context of precision `work_prec`.
    fn gamma(&self, ctx: &Arc<PrimeContext>, i: u32) -> CliResult<GammaCoeffs> {
        let g = match &self.coeffs {
            None => return Err(config_error("--coeffs or --images is required")),
            Some(CoeffSpec::Coeffs(c)) => {
                if c.len() != ctx.l() {
                    return Err(config_error(format!("expected {} coefficients for p = {}", ctx.l(), ctx.p())));
                }
                GammaCoeffs::from_ints(ctx, i, c)?
            }
            Some(CoeffSpec::Images(im)) => {
                let images: Vec<CycElt> = im
                    .iter()
                    .map(|&(e, n)| CycElt::from_int(ctx, n).mul(&CycElt::kappa_pow(ctx, e)))
                    .collect::<Result<_, _>>()?;
                images_to_coeffs(ctx, i, &images)?.gamma
            }
        };
        if !in_hhat(&g, i)? {
            return Err(config_error(format!("{} is not in Ĥ_{i}", g.label())));
        }
        Ok(g)
    }
}

/// Parses the arguments, runs the command, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run(command: &Command) -> CliResult<i32> {
    match command {
        Command::Jacobi(f) => cmd_jacobi(&RunConfig::resolve(f, Format::Text)?),
        Command::Build(f) => cmd_build(&RunConfig::resolve(f, Format::Text)?),
        Command::Enumerate(f) => cmd_enumerate(&RunConfig::resolve(f, Format::Dot)?),
        Command::Verify(f) => cmd_verify(&RunConfig::resolve(f, Format::Text)?),
        Command::ScanConjecture1(f) => cmd_scan_conjecture1(&RunConfig::resolve(f, Format::Text)?),
        Command::BchTable(f) => cmd_bch_table(&RunConfig::resolve(f, Format::Json)?),
    }
}

fn emit(cfg: &RunConfig, text: &str) -> CliResult<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| config_error(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn cmd_jacobi(cfg: &RunConfig) -> CliResult<i32> {
    let i = cfg.need_i()?;
    let p = cfg.p;
    let ctx = PrimeContext::new(p, cfg.work_prec.unwrap_or(jacobi_work_prec(p, i)))?;
    let g = cfg.gamma(&ctx, i)?;
    let lambda = jacobi_exponent(&g, i)?;
    let lower = (i as i64 > p as i64 - 2).then(|| 3 * i + 3 - p as u32);
    let bound_ok = lower.map(|b| match lambda {
        Valuation::Exact(v) => v >= b,
        Valuation::AtLeast(_) => true,
    });
    if cfg.format == Format::Json {
        emit(
            cfg,
            &to_json(&json!({
                "p": p, "i": i, "gamma": g.to_json(), "work_prec": ctx.work_prec(),
                "lambda": lambda.to_string(), "lambda_exact": lambda.is_exact(),
                "lower_bound": lower, "bound_ok": bound_ok,
            })),
        )?;
    } else {
        let mut s = String::new();
        let _ = writeln!(s, "p = {p}, i = {i}, gamma = {}, M_work = {}", g.label(), ctx.work_prec());
        match lower {
            Some(b) => {
                let _ = writeln!(s, "lambda = {lambda}    bound 3i+3-p = {b}    {}", verdict(bound_ok == Some(true)));
            }
            None => {
                let _ = writeln!(s, "lambda = {lambda}");
                let _ = writeln!(s, "notice: i <= p-2, lower bound check skipped");
            }
        }
        emit(cfg, &s)?;
    }
    Ok(if bound_ok == Some(false) { EXIT_VIOLATION } else { EXIT_OK })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

pub fn cmd_build(cfg: &RunConfig) -> CliResult<i32> {
    let i = cfg.need_i()?;
    let p = cfg.p;
    let probe = PrimeContext::new(p, cfg.work_prec.unwrap_or(jacobi_work_prec(p, i)))?;
    let lambda = jacobi_exponent(&cfg.gamma(&probe, i)?, i)?;
    let m = cfg.m.unwrap_or(lambda.bound());
    if m > lambda.bound() {
        return Err(config_error(format!("m = {m} exceeds the Jacobi exponent {lambda}")));
    }
    if m == lambda.bound() && !lambda.is_exact() {
        return Err(Error::PrecisionExhausted { needed: m + 1, available: probe.work_prec() }.into());
    }
    let ctx = match cfg.work_prec {
        Some(_) => probe,
        None => PrimeContext::new(p, default_work_prec(p, m).max(m + 2 * crate::homs::denominator_cap(&probe) + 2))?,
    };
    let g = cfg.gamma(&ctx, i)?;
    let spec = LieRingSpec::with_lambda(&g, m, lambda)?;
    let s = FrameGroup::new(&spec)?;
    let lcs = s.s_group_lcs()?;
    let lie = spec.lcs_profile()?;
    let class_report = (m == lambda.bound() && lambda.is_exact()).then(|| check_class_bounds(&spec)).transpose()?;
    let basis = spec.basis();
    let mut table = Vec::new();
    for h in 0..basis.len() {
        for k in h + 1..basis.len() {
            table.push(json!({"h": h, "k": k, "bracket": basis[h].bracket(&basis[k])?.cofactor().digits()}));
        }
    }
    let class_ok = class_report.as_ref().is_none_or(|r| r.violations.is_empty());
    let ok = lcs.maximal_class && class_ok;
    if cfg.format == Format::Json {
        emit(
            cfg,
            &to_json(&json!({
                "p": p, "i": i, "m": m, "lambda": lambda.to_string(), "gamma": g.to_json(),
                "work_prec": ctx.work_prec(),
                "order_exp": s.order_exp(), "classification": s.classification(),
                "group_lcs": lcs, "lie_lcs": lie, "class_report": class_report,
                "structure": {"basis": "kappa^(i+r), r = 0..p-2", "cofactor_brackets": table},
            })),
        )?;
    } else {
        let mut out = String::new();
        let _ = writeln!(out, "S_{{{i},{m}}}(gamma) for p = {p}, gamma = {}, lambda = {lambda}", g.label());
        let _ = writeln!(out, "order = p^{}    expected p^(m-i+1) = p^{}", s.order_exp(), m - i + 1);
        let _ = writeln!(out, "classification = {}    (mainline iff m <= 2i+1 = {})", s.classification(), 2 * i + 1);
        let _ = writeln!(out, "group lcs exponents = {:?}    class {}", lcs.exponents, lcs.class);
        let _ = writeln!(out, "maximal class = {}    {}", lcs.maximal_class, verdict(lcs.maximal_class));
        let _ = writeln!(out, "Lie ring lcs exponents = {:?}    class {}", lie.exponents, lie.class);
        if let Some(r) = &class_report {
            if let Some(b) = r.bounds.classbound {
                let _ = writeln!(out, "class {} <= 3 + (2p-8)/(i-(p-2)) = {b:.3}", r.class);
            }
            if let Some(b) = r.bounds.class_at_most {
                let _ = writeln!(out, "class {} <= p-1 = {b}", r.class);
            }
            if let Some(v) = r.bounds.class_exactly_3 {
                let _ = writeln!(out, "class exactly 3 (i > 3p-10): {}", verdict(v));
            }
            for v in &r.violations {
                let _ = writeln!(out, "VIOLATION: {v}");
            }
        }
        emit(cfg, &out)?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

pub fn cmd_enumerate(cfg: &RunConfig) -> CliResult<i32> {
    let i = cfg.need_i()?;
    let p = cfg.p;
    let m_max = cfg.m_max.or(cfg.m).ok_or_else(|| config_error("--m-max is required"))?;
    let ctx = PrimeContext::new(p, cfg.work_prec.unwrap_or(jacobi_work_prec(p, i).max(m_max + 2 * (p as u32 - 1))))?;
    let tree = enumerate_frame(&ctx, i, m_max, cfg.coeff_mod, cfg.budget)?;
    let ok = tree.nodes.iter().all(|n| n.maximal_class);
    match (&cfg.out, cfg.format) {
        (Some(path), _) if path.extension().is_none() => {
            let dot = path.with_extension("dot");
            let js = path.with_extension("json");
            std::fs::write(&dot, tree.to_dot()).map_err(|e| config_error(format!("{}: {e}", dot.display())))?;
            std::fs::write(&js, tree.to_json_string() + "\n")
                .map_err(|e| config_error(format!("{}: {e}", js.display())))?;
        }
        (_, Format::Dot) => emit(cfg, &tree.to_dot())?,
        (_, Format::Json) => emit(cfg, &(tree.to_json_string() + "\n"))?,
        (_, Format::Text) => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "p = {p}, i = {i}, m <= {m_max}, coefficients mod p^{}: {} of {} vectors in Ĥ_{i}",
                cfg.coeff_mod, tree.hhat_count, tree.grid_size
            );
            let _ = writeln!(s, "{} vertices, {} edges, {} certified merges", tree.nodes.len(), tree.edges.len(), tree.merged_by.len());
            for c in &tree.counts {
                let _ = writeln!(s, "m = {:>3}  class {:>3}  at most {} types", c.m, c.class, c.count);
            }
            if i >= p as u32 - 1 {
                let _ = writeln!(s, "the same vectors serve index {} (i + p - 1)", i + p as u32 - 1);
            }
            let _ = writeln!(s, "all vertices of maximal class: {}", verdict(ok));
            emit(cfg, &s)?;
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

pub fn cmd_verify(cfg: &RunConfig) -> CliResult<i32> {
    let suite = SuiteConfig { primes: vec![cfg.p], seed: cfg.seed, samples: cfg.samples, faults: cfg.faults.clone() };
    let results = suites::run_all(&suite)?;
    let ok = results.iter().all(|r| r.passed);
    if cfg.format == Format::Json {
        emit(cfg, &to_json(&json!({"config": suite, "passed": ok, "results": results})))?;
    } else {
        let mut s = String::new();
        for r in &results {
            let _ = writeln!(s, "{}", r.line());
            for f in &r.failures {
                let _ = writeln!(s, "    failure: {f}");
            }
            for n in &r.notes {
                let _ = writeln!(s, "    note: {n}");
            }
        }
        let _ = writeln!(s, "{}", if ok { "all suites passed" } else { "SUITE VIOLATION" });
        emit(cfg, &s)?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

pub fn cmd_scan_conjecture1(cfg: &RunConfig) -> CliResult<i32> {
    let i_max = cfg.i_max.or(cfg.i).unwrap_or(12);
    let work = cfg.work_prec.unwrap_or(60);
    let report = suites::scan_jacobi(cfg.p, i_max, work, cfg.coeff_mod, cfg.budget)?;
    if cfg.format == Format::Json {
        emit(cfg, &to_json(&report))?;
    } else {
        let mut s = String::new();
        let _ = writeln!(s, "p = {}, i <= {i_max}, M_work = {work}, coefficients mod p^{}", cfg.p, cfg.coeff_mod);
        for r in &report.rows {
            let _ = writeln!(
                s,
                "i = {:>3}: {:>5} vectors, {:>5} exact, {:>3} unresolved, lambda-(3i+3-p): {:?}",
                r.i, r.members, r.exact, r.at_least, r.excess
            );
        }
        for u in &report.unresolved {
            let _ = writeln!(s, "flagged (needs more precision): {u}");
        }
        for f in &report.shift_failures {
            let _ = writeln!(s, "shift by 3(p-1) fails: {f}");
        }
        emit(cfg, &s)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_bch_table(cfg: &RunConfig) -> CliResult<i32> {
    let table = BchTable::generate(cfg.degree)?;
    emit(cfg, &table.to_json_string())?;
    Ok(EXIT_OK)
}
