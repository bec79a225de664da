//! Command-line front end: config loading, subcommand dispatch and CSV/JSON
//! emission. Every emitted rational appears exactly (`p/q`) next to a
//! 12-significant-digit `_dec` column.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{self, SystemConfig};
use crate::error::Error;
use crate::flow::{self, OracleMode, SampleSpec, VerificationReport};
use crate::models::{self, ModelKind};
use crate::rational::{self, Rational};
use crate::threshold::{ThresholdCurve, TradeoffPoint};

pub const EXIT_OK: i32 = 0;
/// Runtime failure not caused by the config (enumeration guard, I/O on --out).
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "rackregen", version, about = "Storage/repair-bandwidth tradeoff curves for rack-aware regenerating codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Threshold curve of one model: knees or segments.
    Curve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, value_enum, default_value_t = Table::Knees)]
        table: Table,
    },
    /// MSR and MBR tradeoff points.
    Points {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModelArg::Rack)]
        model: ModelArg,
    },
    /// Knees of several models side by side.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        models: Vec<ModelArg>,
    },
    /// One curve per tau value.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModelArg::Rack)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_rational)]
        tau: Vec<Rational>,
    },
    /// Check the analytic mincut against max-flow on explicit flow graphs.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Structured)]
        mode: ModeArg,
        /// Add one to the coefficient at this index before checking
        /// (negative control).
        #[arg(long, value_name = "INDEX")]
        inflate_coeff: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Rack,
    Static,
    Basic,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Rack => ModelKind::Rack,
            ModelArg::Static => ModelKind::Static,
            ModelArg::Basic => ModelKind::Basic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Structured,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Table {
    Knees,
    Segments,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).ok_or_else(|| format!("`{s}` is not a rational"))
}

/// A failure with its exit status.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Schema(_) | Error::InvalidConfig(_) | Error::InvalidModelParams(_) | Error::PreconditionUnmet(_) => {
                EXIT_CONFIG
            }
            _ => EXIT_FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

type Outcome = Result<(String, i32), Failure>;

/// Runs the tool on `argv` (program name first). Output goes to `out` unless
/// `--out` names a file; diagnostics go to `err`. Returns the exit status.
pub fn run<O: Write, E: Write>(argv: &[String], out: &mut O, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (common, result) = match &cli.command {
        Command::Curve { common, model, table } => (common, curve(common, *model, *table)),
        Command::Points { common, model } => (common, points(common, *model)),
        Command::Compare { common, models } => (common, compare(common, models, err)),
        Command::Sweep { common, model, tau } => (common, sweep(common, *model, tau)),
        Command::Verify { common, samples, seed, mode, inflate_coeff } => {
            (common, verify(common, *samples, *seed, *mode, *inflate_coeff))
        }
    };
    match result {
        Ok((text, code)) => {
            let written = match &common.out {
                Some(path) => fs::write(path, text.as_bytes()),
                None => out.write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: cannot write output: {e}");
                return EXIT_FAILURE;
            }
            code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load(common: &Common) -> Result<SystemConfig, Failure> {
    let raw = fs::read_to_string(&common.config).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("cannot read config {}: {e}", common.config.display()),
    })?;
    config::parse_and_validate(&raw).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", common.config.display()),
    })
}

/// gamma/beta_e and cost/beta_e per column for a model's repair metrics.
/// The rack model has one column per rack; the static model uses rack 1's
/// helper split; the basic model treats all d helpers as cross-rack.
fn metric_coeffs(cfg: &SystemConfig, kind: ModelKind) -> (Vec<Rational>, Vec<Rational>) {
    match kind {
        ModelKind::Rack => (
            (0..cfg.rack_count()).map(|j| cfg.rack_bandwidth_coeff(j)).collect(),
            (0..cfg.rack_count()).map(|j| cfg.rack_cost_coeff(j)).collect(),
        ),
        ModelKind::Static => (vec![cfg.rack_bandwidth_coeff(0)], vec![cfg.rack_cost_coeff(0)]),
        ModelKind::Basic => {
            let d = rational::from_usize(cfg.d);
            (vec![d.clone()], vec![&cfg.expensive_cost * d])
        }
    }
}

fn exact(q: &Rational) -> [String; 2] {
    [rational::render(q), rational::decimal(q)]
}

#[derive(Debug, Serialize)]
struct KneeRow {
    knee_index: usize,
    i: usize,
    #[serde(rename = "L_i")]
    coeff: String,
    beta_e: String,
    beta_e_dec: String,
    alpha: String,
    alpha_dec: String,
    gamma: Vec<String>,
    gamma_dec: Vec<String>,
    cost: Vec<String>,
    cost_dec: Vec<String>,
}

impl KneeRow {
    fn new(index: usize, i: usize, coeff: &Rational, beta: &Rational, alpha: &Rational, metrics: &(Vec<Rational>, Vec<Rational>)) -> Self {
        let gamma: Vec<Rational> = metrics.0.iter().map(|c| c * beta).collect();
        let cost: Vec<Rational> = metrics.1.iter().map(|c| c * beta).collect();
        KneeRow {
            knee_index: index,
            i,
            coeff: rational::render(coeff),
            beta_e: rational::render(beta),
            beta_e_dec: rational::decimal(beta),
            alpha: rational::render(alpha),
            alpha_dec: rational::decimal(alpha),
            gamma: gamma.iter().map(rational::render).collect(),
            gamma_dec: gamma.iter().map(rational::decimal).collect(),
            cost: cost.iter().map(rational::render).collect(),
            cost_dec: cost.iter().map(rational::decimal).collect(),
        }
    }

    fn header(columns: usize) -> Vec<String> {
        let mut h: Vec<String> = ["knee_index", "L_i", "beta_e", "beta_e_dec", "alpha", "alpha_dec"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for j in 1..=columns {
            h.push(format!("gamma_{j}"));
            h.push(format!("gamma_{j}_dec"));
        }
        for j in 1..=columns {
            h.push(format!("cost_{j}"));
            h.push(format!("cost_{j}_dec"));
        }
        h
    }

    fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.knee_index.to_string(),
            self.coeff.clone(),
            self.beta_e.clone(),
            self.beta_e_dec.clone(),
            self.alpha.clone(),
            self.alpha_dec.clone(),
        ];
        for (g, gd) in self.gamma.iter().zip(&self.gamma_dec) {
            r.push(g.clone());
            r.push(gd.clone());
        }
        for (c, cd) in self.cost.iter().zip(&self.cost_dec) {
            r.push(c.clone());
            r.push(cd.clone());
        }
        r
    }
}

fn knee_rows(cfg: &SystemConfig, kind: ModelKind, curve: &ThresholdCurve) -> Vec<KneeRow> {
    let metrics = metric_coeffs(cfg, kind);
    curve
        .knee_points()
        .iter()
        .enumerate()
        .map(|(n, (i, beta, alpha))| KneeRow::new(n, *i, &curve.coeffs().values()[*i], beta, alpha, &metrics))
        .collect()
}

#[derive(Debug, Serialize)]
struct SegmentRow {
    segment_index: usize,
    i: usize,
    #[serde(rename = "L_i")]
    coeff: String,
    g_i: String,
    beta_lo: String,
    beta_lo_dec: String,
    beta_hi: String,
    beta_hi_dec: String,
    alpha_lo: String,
    alpha_lo_dec: String,
    alpha_hi: String,
    alpha_hi_dec: String,
}

const SEGMENT_HEADER: [&str; 8] = ["segment_index", "i", "L_i", "g_i", "beta_lo", "beta_hi", "alpha_lo", "alpha_hi"];

/// Segment rows, MSR plateau first. `alpha_lo` is alpha at `beta_hi` (the
/// smaller alpha), `alpha_hi` is alpha at `beta_lo`.
fn segment_rows(curve: &ThresholdCurve) -> Vec<SegmentRow> {
    let m = curve.file_size();
    curve
        .segments()
        .iter()
        .enumerate()
        .map(|(n, s)| {
            let alpha_hi = s.alpha(&s.beta_lo, m, curve.k());
            let alpha_lo = match &s.beta_hi {
                Some(hi) => s.alpha(hi, m, curve.k()),
                None => alpha_hi.clone(),
            };
            let [beta_hi, beta_hi_dec] = match &s.beta_hi {
                Some(hi) => exact(hi),
                None => ["inf".to_string(), "inf".to_string()],
            };
            let [beta_lo, beta_lo_dec] = exact(&s.beta_lo);
            let [alpha_lo, alpha_lo_dec] = exact(&alpha_lo);
            let [alpha_hi, alpha_hi_dec] = exact(&alpha_hi);
            SegmentRow {
                segment_index: n,
                i: s.i,
                coeff: rational::render(&s.coeff),
                g_i: rational::render(&s.g),
                beta_lo,
                beta_lo_dec,
                beta_hi,
                beta_hi_dec,
                alpha_lo,
                alpha_lo_dec,
                alpha_hi,
                alpha_hi_dec,
            }
        })
        .collect()
}

impl SegmentRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.segment_index.to_string(),
            self.i.to_string(),
            self.coeff.clone(),
            self.g_i.clone(),
            self.beta_lo.clone(),
            self.beta_hi.clone(),
            self.alpha_lo.clone(),
            self.alpha_hi.clone(),
        ]
    }
}

fn csv_table(prefix_header: &[&str], header: Vec<String>, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut full: Vec<String> = prefix_header.iter().map(|s| s.to_string()).collect();
    full.extend(header);
    w.write_record(&full).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
struct CurveDoc {
    model: &'static str,
    config: config::ConfigDocument,
    #[serde(rename = "L")]
    coeffs: Vec<String>,
    knees: Vec<KneeRow>,
    segments: Vec<SegmentRow>,
}

fn curve_doc(cfg: &SystemConfig, kind: ModelKind) -> Result<CurveDoc, Failure> {
    let curve = models::model_curve(cfg, kind)?;
    Ok(CurveDoc {
        model: kind.name(),
        config: cfg.to_document(),
        coeffs: curve.coeffs().values().iter().map(rational::render).collect(),
        knees: knee_rows(cfg, kind, &curve),
        segments: segment_rows(&curve),
    })
}

fn curve(common: &Common, model: ModelArg, table: Table) -> Outcome {
    let cfg = load(common)?;
    let kind = ModelKind::from(model);
    let doc = curve_doc(&cfg, kind)?;
    let text = match (common.format, table) {
        (Format::Json, _) => json(&doc),
        (Format::Csv, Table::Knees) => {
            let columns = metric_coeffs(&cfg, kind).0.len();
            csv_table(&[], KneeRow::header(columns), doc.knees.iter().map(KneeRow::record))
        }
        (Format::Csv, Table::Segments) => csv_table(
            &[],
            SEGMENT_HEADER.iter().map(|s| s.to_string()).collect(),
            doc.segments.iter().map(SegmentRow::record),
        ),
    };
    Ok((text, EXIT_OK))
}

#[derive(Debug, Serialize)]
struct PointRow {
    point: &'static str,
    #[serde(flatten)]
    knee: KneeRow,
}

fn points(common: &Common, model: ModelArg) -> Outcome {
    let cfg = load(common)?;
    let kind = ModelKind::from(model);
    let curve = models::model_curve(&cfg, kind)?;
    let (msr, mbr) = crate::threshold::extremal_points(&curve, &cfg);
    let metrics = metric_coeffs(&cfg, kind);
    let row = |name: &'static str, p: &TradeoffPoint, index: usize| {
        let seg = curve.segment_at(&p.beta_e).expect("extremal points lie on the curve");
        PointRow { point: name, knee: KneeRow::new(index, seg.i, &seg.coeff, &p.beta_e, &p.alpha, &metrics) }
    };
    let last = curve.segments().len() - 1;
    let rows = [row("msr", &msr, 0), row("mbr", &mbr, last)];
    let text = match common.format {
        Format::Json => json(&rows),
        Format::Csv => csv_table(
            &["point"],
            KneeRow::header(metrics.0.len()),
            rows.iter().map(|r| {
                let mut rec = vec![r.point.to_string()];
                rec.extend(r.knee.record());
                rec
            }),
        ),
    };
    Ok((text, EXIT_OK))
}

/// Rack knee beta_e <= static knee beta_e at every index where both exist.
fn dominance_violations(rack: &ThresholdCurve, stat: &ThresholdCurve) -> Vec<usize> {
    (0..rack.coeffs().len().min(stat.coeffs().len()))
        .filter(|&i| match (rack.knee(i), stat.knee(i)) {
            (Some(r), Some(s)) => r > s,
            _ => false,
        })
        .collect()
}

fn compare<E: Write>(common: &Common, models_arg: &[ModelArg], err: &mut E) -> Outcome {
    let cfg = load(common)?;
    let mut kinds: Vec<ModelKind> = Vec::new();
    for m in models_arg {
        let k = ModelKind::from(*m);
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    let docs: Vec<CurveDoc> = kinds.iter().map(|&k| curve_doc(&cfg, k)).collect::<Result<_, _>>()?;

    let mut code = EXIT_OK;
    let dominance_applies = cfg.tau > rational::int(1) && cfg.k > cfg.cheap_degree(0) + 1;
    if dominance_applies && kinds.contains(&ModelKind::Rack) && kinds.contains(&ModelKind::Static) {
        let rack = models::model_curve(&cfg, ModelKind::Rack)?;
        let stat = models::model_curve(&cfg, ModelKind::Static)?;
        let bad = dominance_violations(&rack, &stat);
        if bad.is_empty() {
            let _ = writeln!(err, "dominance: rack beta_e <= static beta_e at every segment index");
        } else {
            let _ = writeln!(err, "dominance violated at segment indices {bad:?}");
            code = EXIT_MISMATCH;
        }
    }

    let text = match common.format {
        Format::Json => json(&docs),
        Format::Csv => {
            let header: Vec<String> = ["knee_index", "i", "L_i", "beta_e", "beta_e_dec", "alpha", "alpha_dec"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows = docs.iter().flat_map(|d| {
                d.knees.iter().map(move |k| {
                    vec![
                        d.model.to_string(),
                        k.knee_index.to_string(),
                        k.i.to_string(),
                        k.coeff.clone(),
                        k.beta_e.clone(),
                        k.beta_e_dec.clone(),
                        k.alpha.clone(),
                        k.alpha_dec.clone(),
                    ]
                })
            });
            csv_table(&["model"], header, rows)
        }
    };
    Ok((text, code))
}

#[derive(Debug, Serialize)]
struct SweepBlock {
    tau: String,
    curve: CurveDoc,
}

fn sweep(common: &Common, model: ModelArg, taus: &[Rational]) -> Outcome {
    let base = load(common)?;
    let kind = ModelKind::from(model);
    let mut blocks = Vec::with_capacity(taus.len());
    for tau in taus {
        let cfg = base.with_tau(tau.clone()).map_err(|e| Failure {
            code: EXIT_CONFIG,
            message: format!("tau = {}: {e}", rational::render(tau)),
        })?;
        blocks.push(SweepBlock { tau: rational::render(tau), curve: curve_doc(&cfg, kind)? });
    }
    let text = match common.format {
        Format::Json => json(&blocks),
        Format::Csv => {
            let columns = metric_coeffs(&base, kind).0.len();
            let rows = blocks.iter().flat_map(|b| {
                b.curve.knees.iter().map(move |k| {
                    let mut rec = vec![b.tau.clone()];
                    rec.extend(k.record());
                    rec
                })
            });
            csv_table(&["tau"], KneeRow::header(columns), rows)
        }
    };
    Ok((text, EXIT_OK))
}

#[derive(Debug, Serialize)]
struct SampleRow {
    kind: String,
    beta_e: String,
    alpha: String,
    analytic: String,
    all_orders: String,
    oracle: String,
    matches: bool,
    witness: String,
}

#[derive(Debug, Serialize)]
struct ReportDoc {
    mode: &'static str,
    coeffs: Vec<String>,
    inflated_index: Option<usize>,
    samples: usize,
    mismatches: usize,
    candidate_audit: AuditDoc,
    rows: Vec<SampleRow>,
}

#[derive(Debug, Serialize)]
struct AuditDoc {
    greedy_sum: String,
    exhaustive_sum: String,
    agrees: bool,
}

fn report_doc(report: &VerificationReport, coeffs: &[Rational], inflated: Option<usize>) -> ReportDoc {
    ReportDoc {
        mode: report.mode.name(),
        coeffs: coeffs.iter().map(rational::render).collect(),
        inflated_index: inflated,
        samples: report.samples.len(),
        mismatches: report.mismatches.len(),
        candidate_audit: AuditDoc {
            greedy_sum: rational::render(&report.candidate_audit.greedy_sum),
            exhaustive_sum: rational::render(&report.candidate_audit.exhaustive_sum),
            agrees: report.candidate_audit.agrees(),
        },
        rows: report
            .samples
            .iter()
            .map(|s| SampleRow {
                kind: s.kind.to_string(),
                beta_e: rational::render(&s.beta_e),
                alpha: rational::render(&s.alpha),
                analytic: rational::render(&s.analytic),
                all_orders: rational::render(&s.all_orders),
                oracle: rational::render(&s.oracle),
                matches: s.matches(),
                witness: s.witness.to_string(),
            })
            .collect(),
    }
}

fn verify(common: &Common, samples: usize, seed: u64, mode: ModeArg, inflate: Option<usize>) -> Outcome {
    let cfg = load(common)?;
    let mode = match mode {
        ModeArg::Structured => OracleMode::Structured,
        ModeArg::Exhaustive => OracleMode::Exhaustive,
    };
    let spec = SampleSpec { count: samples, seed, mode };
    let (_, mut coeffs) = crate::income::rack_coeffs(&cfg)?;
    if let Some(index) = inflate {
        let bumped = coeffs
            .values()
            .get(index)
            .map(|v| v + rational::int(1))
            .ok_or_else(|| Failure {
                code: EXIT_USAGE,
                message: format!("--inflate-coeff {index}: list has {} coefficients", coeffs.len()),
            })?;
        coeffs = coeffs.with_replaced(index, bumped)?;
    }
    let report = flow::verify_coeffs(&cfg, &coeffs, &spec)?;
    let doc = report_doc(&report, coeffs.values(), inflate);
    let code = if report.passed() && report.candidate_audit.agrees() { EXIT_OK } else { EXIT_MISMATCH };
    let text = match common.format {
        Format::Json => json(&doc),
        Format::Csv => {
            let mut s = String::new();
            s.push_str(&format!("mode: {}\n", doc.mode));
            s.push_str(&format!("coeffs: {}\n", doc.coeffs.join(" ")));
            if let Some(i) = inflate {
                s.push_str(&format!("inflated_index: {i}\n"));
            }
            s.push_str(&format!("samples: {}\n", doc.samples));
            s.push_str(&format!("mismatches: {}\n", doc.mismatches));
            s.push_str(&format!(
                "candidate_audit: greedy {} exhaustive {} {}\n",
                doc.candidate_audit.greedy_sum,
                doc.candidate_audit.exhaustive_sum,
                if doc.candidate_audit.agrees { "agree" } else { "disagree" }
            ));
            let rows = doc.rows.iter().map(|r| {
                vec![
                    r.kind.clone(),
                    r.beta_e.clone(),
                    r.alpha.clone(),
                    r.analytic.clone(),
                    r.all_orders.clone(),
                    r.oracle.clone(),
                    if r.matches { "ok" } else { "MISMATCH" }.to_string(),
                    r.witness.clone(),
                ]
            });
            let header = ["kind", "beta_e", "alpha", "analytic", "all_orders", "oracle", "status", "witness"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            s.push_str(&csv_table(&[], header, rows));
            s
        }
    };
    Ok((text, code))
}
