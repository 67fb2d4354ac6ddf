//! `indefspec` command-line front end.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 degenerate pair (`σ(A) = ℂ`),
//! 4 a tolerance test landed in its ambiguity band, 5 numerical failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use indefspec::critical::WeightFile;
use indefspec::eigen::{Region, K_MAX};
use indefspec::roots::Rect;
use indefspec::spec::{load_file, MeasureSpec, ZoneFile};
use indefspec::sturm::PotentialFile;
use indefspec::{Error, Side, SpectralPair, Tolerances, WeylCoefficient, C64};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "indefspec", version, about = "Spectra of indefinite Sturm-Liouville operators")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Zero-test tolerance (classify, spectrum) or Weyl disk radius target (mfun).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Largest algebraic multiplicity searched for.
    #[arg(long, global = true, default_value_t = K_MAX)]
    kmax: usize,
    /// Worker threads for grid evaluations (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether λ is an eigenvalue and find its multiplicities.
    Classify {
        #[arg(long)]
        plus: PathBuf,
        #[arg(long)]
        minus: PathBuf,
        #[arg(long, value_parser = parse_c64, allow_hyphen_values = true)]
        lambda: C64,
    },
    /// Essential spectrum and discrete eigenvalues in a region.
    Spectrum {
        #[arg(long, requires = "minus", conflicts_with = "zone")]
        plus: Option<PathBuf>,
        #[arg(long)]
        minus: Option<PathBuf>,
        /// Infinite-zone spec; Weyl data are reconstructed from it.
        #[arg(long)]
        zone: Option<PathBuf>,
        /// Real search interval `a b`.
        #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true, conflicts_with = "rect")]
        interval: Option<Vec<f64>>,
        /// Complex search rectangle `x0 x1 y0 y1`.
        #[arg(long, num_args = 4, value_names = ["X0", "X1", "Y0", "Y1"], allow_hyphen_values = true)]
        rect: Option<Vec<f64>>,
        /// Φ sample grid `nx ny` over the rectangle, written with `--format csv`.
        #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
        grid: Option<Vec<usize>>,
    },
    /// Infinite-zone Weyl data: level, bands, `A₀` eigenvalues, identity check.
    Infzone {
        #[arg(long)]
        spec: PathBuf,
        /// Check `h·g - k² = f` on a fixed sample set.
        #[arg(long)]
        identity_check: bool,
        /// Points at which to report `M±`.
        #[arg(long, value_parser = parse_c64, allow_hyphen_values = true)]
        lambda: Vec<C64>,
    },
    /// Titchmarsh-Weyl coefficient of a potential.
    Mfun {
        #[arg(long)]
        q: PathBuf,
        #[arg(long, value_parser = parse_c64, allow_hyphen_values = true, required = true)]
        lambda: Vec<C64>,
        #[arg(long, value_enum, default_value_t = SideArg::Plus)]
        side: SideArg,
    },
    /// Test zero for a singular critical point of `(sgn x/|r|)(-d²/dx²)`.
    Critical {
        #[arg(long)]
        weight: PathBuf,
    },
    /// Parse and build an input file without computing anything.
    Validate {
        #[arg(value_enum)]
        kind: Kind,
        file: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Plus,
    Minus,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Plus => Side::Plus,
            SideArg::Minus => Side::Minus,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Measure,
    Zone,
    Potential,
    Weight,
}

/// Accepts `a`, `bi`, `a+bi`, `a-bi`, with `i` alone meaning `1i`.
fn parse_c64(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.replace('j', "i");
    let fixed = if t == "i" || t.ends_with("+i") || t.ends_with("-i") {
        format!("{}1i", &t[..t.len() - 1])
    } else {
        t
    };
    fixed.parse::<C64>().map_err(|e| format!("cannot parse complex number {s:?}: {e}"))
}

/// Failure carrying its exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        let code = match e {
            Error::Spec(_) | Error::Expr(_) => 2,
            Error::Degenerate => 3,
            Error::BranchAmbiguity(_) => 4,
            _ => 5,
        };
        Fail { code, msg: e.to_string() }
    }
}

fn spec_fail(msg: impl Into<String>) -> Fail {
    Fail { code: 2, msg: msg.into() }
}

/// What a command produced: a JSON report, optional CSV rows, and an exit
/// code for results that are valid but flagged.
struct Output {
    json: serde_json::Value,
    csv: Option<(Vec<&'static str>, Vec<Vec<f64>>)>,
    code: u8,
    note: Option<String>,
}

impl Output {
    fn json<T: Serialize>(v: &T) -> Result<Output, Fail> {
        Ok(Output {
            json: serde_json::to_value(v).map_err(|e| Fail { code: 5, msg: e.to_string() })?,
            csv: None,
            code: 0,
            note: None,
        })
    }
}

fn load<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T, Fail> {
    Ok(load_file(p)?)
}

fn measure(p: &Path) -> Result<(indefspec::SpectralMeasure, f64), Fail> {
    let spec: MeasureSpec = load(p)?;
    let m = spec.build()?;
    let bad = m.validate();
    if !bad.is_empty() {
        return Err(spec_fail(format!("{}: {bad:?}", p.display())));
    }
    Ok((m, spec.constant()))
}

fn weyl(p: &Path) -> Result<WeylCoefficient, Fail> {
    let (m, c) = measure(p)?;
    Ok(WeylCoefficient::new(m, c))
}

fn tolerances(g: &Global) -> Result<Tolerances, Fail> {
    let mut t = Tolerances::default();
    if let Some(z) = g.tol {
        t.zero = z;
    }
    Ok(t)
}

fn region(interval: &Option<Vec<f64>>, rect: &Option<Vec<f64>>) -> Result<Region, Fail> {
    match (interval, rect) {
        (Some(v), None) if v[0] <= v[1] => Ok(Region::Interval(v[0], v[1])),
        (None, Some(v)) if v[0] <= v[1] && v[2] <= v[3] => Ok(Region::Rect(Rect::new(v[0], v[1], v[2], v[3]))),
        (None, None) => Err(spec_fail("a region is required: --interval A B or --rect X0 X1 Y0 Y1")),
        _ => Err(spec_fail("region bounds are reversed")),
    }
}

/// `Φ` on an `nx × ny` grid covering the rectangle, row-major in `y`.
fn phi_grid(pair: &SpectralPair, r: Region, n: &[usize]) -> Result<Vec<Vec<f64>>, Fail> {
    let Region::Rect(r) = r else {
        return Err(spec_fail("--grid needs --rect"));
    };
    let (nx, ny) = (n[0].max(2), n[1].max(2));
    let pts: Vec<C64> = (0..ny)
        .flat_map(|j| {
            (0..nx).map(move |i| {
                C64::new(
                    r.x0 + (r.x1 - r.x0) * i as f64 / (nx - 1) as f64,
                    r.y0 + (r.y1 - r.y0) * j as f64 / (ny - 1) as f64,
                )
            })
        })
        .collect();
    // points on the support have no value; NaN marks them
    Ok(pts
        .par_iter()
        .map(|&l| {
            let v = pair.phi.eval(l).unwrap_or(C64::new(f64::NAN, f64::NAN));
            vec![l.re, l.im, v.re, v.im]
        })
        .collect())
}

fn cmd_classify(g: &Global, plus: &Path, minus: &Path, l: C64) -> Result<Output, Fail> {
    let pair = SpectralPair::new(weyl(plus)?, weyl(minus)?).with_tolerances(tolerances(g)?);
    let rep = pair.classify_eigenvalue(l, g.kmax)?;
    let mut out = Output::json(&rep)?;
    if pair.degenerate_check() {
        out.code = 3;
        out.note = Some("sigma(A)=C".into());
    } else if rep.ambiguous {
        out.code = 4;
        out.note = Some("a zero test fell in its ambiguity band".into());
    }
    Ok(out)
}

#[derive(Serialize)]
struct SpectrumOut {
    #[serde(flatten)]
    report: indefspec::SpectrumReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<usize>,
}

fn cmd_spectrum(
    g: &Global,
    plus: &Option<PathBuf>,
    minus: &Option<PathBuf>,
    zone: &Option<PathBuf>,
    reg: Region,
    grid: &Option<Vec<usize>>,
) -> Result<Output, Fail> {
    let tol = tolerances(g)?;
    let empty = match reg {
        Region::Interval(a, b) => a == b,
        Region::Rect(r) => r.x0 == r.x1 || r.y0 == r.y1,
    };
    // a region without interior holds no discrete eigenvalues
    let nothing = |pair: &SpectralPair| -> Result<indefspec::SpectrumReport, Fail> {
        Ok(indefspec::SpectrumReport {
            essential: pair.essential_spectrum()?,
            discrete: Vec::new(),
            degenerate: false,
            warnings: Vec::new(),
        })
    };
    let (pair, report, level) = match (plus, minus, zone) {
        (Some(p), Some(m), None) => {
            let pair = SpectralPair::new(weyl(p)?, weyl(m)?).with_tolerances(tol);
            let rep = if empty { nothing(&pair)? } else { pair.discrete_spectrum(reg, g.kmax)? };
            (pair, rep, None)
        }
        (None, None, Some(z)) => {
            let zs = load::<ZoneFile>(z)?.build()?;
            let pair = zs.spectral_pair()?.with_tolerances(tol);
            let rep = if empty { nothing(&pair)? } else { zs.indefinite_spectrum(reg, g.kmax)? };
            (pair, rep, Some(zs.global_level()?))
        }
        _ => return Err(spec_fail("give either --plus and --minus, or --zone")),
    };
    let mut out = Output::json(&SpectrumOut { report, level })?;
    if let Some(n) = grid {
        out.csv = Some((vec!["re_lambda", "im_lambda", "re_phi", "im_phi"], phi_grid(&pair, reg, n)?));
    }
    Ok(out)
}

#[derive(Serialize)]
struct MPoint {
    lambda: C64,
    m_plus: C64,
    m_minus: C64,
}

#[derive(Serialize)]
struct InfzoneOut {
    level: usize,
    bands: indefspec::IntervalSet,
    a0_plus: Vec<indefspec::infzone::A0Eigenvalue>,
    a0_minus: Vec<indefspec::infzone::A0Eigenvalue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    identity_residual: Option<f64>,
    values: Vec<MPoint>,
}

/// Fixed sample set for the identity check, off ℝ in both half-planes.
fn identity_samples() -> Vec<C64> {
    let mut v = Vec::new();
    for i in 0..10 {
        let a = -5.0 + 2.5 * i as f64;
        for b in [-5.0, -2.0, -0.5, 0.5, 2.0, 5.0] {
            v.push(C64::new(a, b));
        }
    }
    v
}

fn cmd_infzone(spec: &Path, check: bool, lambdas: &[C64]) -> Result<Output, Fail> {
    let z = load::<ZoneFile>(spec)?.build()?;
    let level = z.global_level()?;
    let identity_residual = if check {
        Some(z.identity_residual(&identity_samples(), level)?)
    } else {
        None
    };
    let values = lambdas
        .par_iter()
        .map(|&l| {
            Ok(MPoint {
                lambda: l,
                m_plus: z.indefinite_weyl(l, Side::Plus)?,
                m_minus: z.indefinite_weyl(l, Side::Minus)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let out = InfzoneOut {
        level,
        bands: z.bands(level),
        a0_plus: z.a0_discrete(Side::Plus)?,
        a0_minus: z.a0_discrete(Side::Minus)?,
        identity_residual,
        values,
    };
    let rows = out
        .values
        .iter()
        .map(|p| vec![p.lambda.re, p.lambda.im, p.m_plus.re, p.m_plus.im, p.m_minus.re, p.m_minus.im])
        .collect();
    let mut o = Output::json(&out)?;
    o.csv = Some((vec!["re_lambda", "im_lambda", "re_m_plus", "im_m_plus", "re_m_minus", "im_m_minus"], rows));
    if identity_residual.is_some_and(|r| r >= 1e-10) {
        o.code = 5;
        o.note = Some(format!("identity residual {:e} exceeds 1e-10", identity_residual.unwrap_or(f64::NAN)));
    }
    Ok(o)
}

#[derive(Serialize)]
struct MfunPoint {
    lambda: C64,
    side: Side,
    m: C64,
    radius: f64,
    x: f64,
}

fn cmd_mfun(g: &Global, q: &Path, lambdas: &[C64], side: Side) -> Result<Output, Fail> {
    let pot = load::<PotentialFile>(q)?.build()?;
    let tol = g.tol.unwrap_or(1e-10);
    let pts = lambdas
        .par_iter()
        .map(|&l| {
            let r = pot.m_numeric(side, l, tol)?;
            Ok(MfunPoint {
                lambda: l,
                side,
                m: r.m,
                radius: r.radius,
                x: r.x,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let rows = pts
        .iter()
        .map(|p| vec![p.lambda.re, p.lambda.im, p.m.re, p.m.im, p.radius])
        .collect();
    let mut o = Output::json(&pts)?;
    o.csv = Some((vec!["re_lambda", "im_lambda", "re_m", "im_m", "radius"], rows));
    Ok(o)
}

fn cmd_critical(weight: &Path) -> Result<Output, Fail> {
    let w = load::<WeightFile>(weight)?;
    if w.exponents.is_none() {
        return Err(spec_fail("weight files need \"exponents\": {\"plus\", \"minus\"}"));
    }
    let w = w.build()?;
    let v = w.critical_verdict()?;
    let mut o = Output::json(&v)?;
    if v.zero_is_eigenvalue {
        let xs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.25).collect();
        let rows = xs
            .par_iter()
            .map(|&x| Ok(vec![x, w.y1_eval(x)?]))
            .collect::<Result<Vec<_>, Error>>()?;
        o.csv = Some((vec!["x", "y1"], rows));
    }
    Ok(o)
}

#[derive(Serialize)]
struct Valid {
    kind: Kind,
    valid: bool,
}

fn cmd_validate(kind: Kind, file: &Path) -> Result<Output, Fail> {
    match kind {
        Kind::Measure => {
            measure(file)?;
        }
        Kind::Zone => {
            load::<ZoneFile>(file)?.build()?;
        }
        Kind::Potential => {
            load::<PotentialFile>(file)?.build()?;
        }
        Kind::Weight => {
            load::<WeightFile>(file)?.build()?;
        }
    }
    Output::json(&Valid { kind, valid: true })
}

fn write_output(g: &Global, o: &Output) -> Result<(), Fail> {
    let io = |e: std::io::Error| Fail { code: 2, msg: e.to_string() };
    let mut buf: Vec<u8> = Vec::new();
    match g.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &o.json).map_err(|e| Fail { code: 5, msg: e.to_string() })?;
            buf.push(b'\n');
        }
        Format::Csv => {
            let Some((head, rows)) = &o.csv else {
                return Err(spec_fail("this command has no CSV output with the given options"));
            };
            let mut w = csv::Writer::from_writer(&mut buf);
            let c = |e: csv::Error| Fail { code: 5, msg: e.to_string() };
            w.write_record(head).map_err(c)?;
            for r in rows {
                w.write_record(r.iter().map(|x| format!("{x:e}"))).map_err(c)?;
            }
            w.flush().map_err(io)?;
        }
    }
    match &g.out {
        Some(p) => std::fs::write(p, &buf).map_err(io),
        None => std::io::stdout().write_all(&buf).map_err(io),
    }
}

fn check_precision() -> Result<(), Fail> {
    match std::env::var("INDEFSPEC_PRECISION") {
        Err(_) => Ok(()),
        Ok(v) if matches!(v.to_ascii_lowercase().as_str(), "" | "64" | "f64" | "double") => Ok(()),
        Ok(v) => Err(spec_fail(format!(
            "INDEFSPEC_PRECISION={v}: only the 64-bit backend is available"
        ))),
    }
}

fn run(cli: &Cli) -> Result<Output, Fail> {
    check_precision()?;
    if let Some(t) = cli.global.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(spec_fail(format!("--tol {t} outside (0, 1)")));
        }
    }
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Fail { code: 5, msg: e.to_string() })?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Classify { plus, minus, lambda } => cmd_classify(g, plus, minus, *lambda),
        Command::Spectrum {
            plus,
            minus,
            zone,
            interval,
            rect,
            grid,
        } => cmd_spectrum(g, plus, minus, zone, region(interval, rect)?, grid),
        Command::Infzone {
            spec,
            identity_check,
            lambda,
        } => cmd_infzone(spec, *identity_check, lambda),
        Command::Mfun { q, lambda, side } => cmd_mfun(g, q, lambda, (*side).into()),
        Command::Critical { weight } => cmd_critical(weight),
        Command::Validate { kind, file } => cmd_validate(*kind, file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = run(&cli).and_then(|o| write_output(&cli.global, &o).map(|_| o));
    match res {
        Ok(o) => {
            if let Some(n) = &o.note {
                eprintln!("{n}");
            }
            ExitCode::from(o.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
