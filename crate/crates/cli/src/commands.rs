use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use dobinski::expansion::{DigitProgram, Limsup, Verdict};
use dobinski::gauge::{
    box_count, covering_sum, critical_exponent, dim_fit, grid_box_count_log2, jarnik_critical_exponent, jarnik_series,
    khintchine_series, series_classify, BoxSample, FitMode, GaugeSpec, PsiSpec, SeriesVerdict,
};
use dobinski::identity::{bell_number, product_trace, BellMode, BellValue};
use dobinski::limsup::{
    membership_in_stage, quasi_independence_audit, stage_family, stage_radius, Limits, OmegaSpec, PhiSpec, SetSpec,
};
use dobinski::numerics::ball::format_decimal;
use dobinski::numerics::{format_rational, log2_rational, Measure, Radius};
use dobinski::willow::{
    frostman_audit, frostman_hypothesis_check, frostman_measure, generation_ratio_profile, plan_schedule,
    symbolic_generation_ratios, Mode, Status,
};
use dobinski::{Error, Result};

use crate::report::Report;

/// Digits used for secondary quantities such as error bounds.
const SHORT_DIGITS: u32 = 6;

/// Finest box scale `2^-m` counted by enumeration; finer scales use the grid formula.
const ENUMERATED_SCALE: u64 = 1024;

pub struct Context {
    pub digits: u32,
    pub limits: Limits,
    pub seed: u64,
}

fn parse<T: std::str::FromStr<Err = Error>>(text: &str) -> Result<T> {
    text.parse()
}

#[derive(Args, Debug, Serialize)]
pub struct ExpandArgs {
    /// Digit program, e.g. `periodic:;01` or `finite:1011`.
    #[arg(long)]
    x: String,
    #[arg(long, default_value_t = 16)]
    n: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ProductArgs {
    #[arg(long)]
    x: String,
    #[arg(long, default_value_t = 20)]
    n: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    x: String,
    /// Test membership in stage `n` of this limsup set instead.
    #[arg(long, requires = "n")]
    set: Option<String>,
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct CoverArgs {
    /// Limsup set, e.g. `dobinski:1`, `grid:1/4`, `run:1/2`.
    #[arg(long)]
    set: String,
    #[arg(long)]
    n: u64,
    /// Gauge for the covering sum.
    #[arg(long, default_value = "power:1")]
    gauge: String,
}

#[derive(Args, Debug, Serialize)]
pub struct SeriesArgs {
    /// `phi(n)` for the dyadic-grid series.
    #[arg(long, conflicts_with = "psi", required_unless_present = "psi")]
    phi: Option<String>,
    /// `psi(q)` for the Khintchine or Jarnik series.
    #[arg(long)]
    psi: Option<String>,
    /// Classify the Khintchine series of `psi` (no gauge).
    #[arg(long, requires = "psi")]
    khintchine: bool,
    #[arg(long, default_value = "power:1")]
    gauge: String,
    #[arg(long, default_value_t = 40)]
    horizon: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct QuasiArgs {
    #[arg(long, default_value = "1/4")]
    omega: String,
    #[arg(long, default_value_t = 12)]
    nmax: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct WillowArgs {
    /// `tamed:<c>` or `true`.
    #[arg(long, default_value = "tamed:2")]
    mode: String,
    #[arg(long, default_value_t = 3)]
    generations: usize,
    #[arg(long, default_value_t = 3)]
    n1: u64,
    #[arg(long)]
    m1: Option<u64>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WillowCommand {
    /// Schedule, constraint checks and gauge hypothesis.
    Plan(WillowArgs),
    /// Enumerate the intervals of each generation.
    Build {
        #[command(flatten)]
        #[serde(flatten)]
        schedule: WillowArgs,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// List every interval instead of per-generation totals.
        #[arg(long)]
        intervals: bool,
    },
    /// Largest ratio of the Frostman measure to a gauge.
    Audit {
        #[command(flatten)]
        #[serde(flatten)]
        schedule: WillowArgs,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value = "log:1")]
        gauge: String,
        #[arg(long, default_value_t = 1000)]
        probes: usize,
    },
}

impl WillowCommand {
    pub fn name(&self) -> &'static str {
        match self {
            WillowCommand::Plan(_) => "willow-plan",
            WillowCommand::Build { .. } => "willow-build",
            WillowCommand::Audit { .. } => "willow-audit",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fit {
    Ordinary,
    Log,
}

#[derive(Args, Debug, Serialize)]
pub struct BoxdimArgs {
    #[arg(long)]
    set: String,
    #[arg(long, default_value_t = 4)]
    nmin: u64,
    #[arg(long, default_value_t = 12)]
    nmax: u64,
    #[arg(long, value_enum, default_value_t = Fit::Ordinary)]
    fit: Fit,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BellKind {
    Recurrence,
    Series,
}

#[derive(Args, Debug, Serialize)]
pub struct BellArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, value_enum, default_value_t = BellKind::Recurrence)]
    mode: BellKind,
    /// Series terms kept (at least `n`).
    #[arg(long, default_value_t = 40)]
    terms: u64,
}

pub fn run(cmd: &crate::Command, ctx: &Context) -> Result<Report> {
    use crate::Command as C;
    match cmd {
        C::Expand(a) => expand(a),
        C::Product(a) => product(a, ctx),
        C::Classify(a) => classify(a, ctx),
        C::Cover(a) => cover(a, ctx),
        C::Series(a) => series(a),
        C::Quasi(a) => quasi(a, ctx),
        C::Willow(w) => willow(w, ctx),
        C::Boxdim(a) => boxdim(a, ctx),
        C::Bell(a) => bell(a, ctx),
    }
}

fn expand(a: &ExpandArgs) -> Result<Report> {
    let p: DigitProgram = parse(&a.x)?;
    let mut r = Report::new(&["n", "digit", "z", "P_n", "distance"]);
    for n in 1..=a.n {
        let nd = p.nearest_dyadic(n);
        r.row(vec![
            json!(n),
            json!(p.digit(n)),
            json!(p.run_length(n).to_string()),
            json!(nd.point.to_string()),
            json!(nd.distance.to_string()),
        ]);
    }
    r.set("program", p.to_string());
    if let Some(v) = p.value() {
        r.set("value", format_rational(&v));
    }
    Ok(r)
}

fn product(a: &ProductArgs, ctx: &Context) -> Result<Report> {
    let p: DigitProgram = parse(&a.x)?;
    let trace = product_trace(&p, a.n, ctx.digits)?;
    let mut r = Report::new(&["n", "partial", "tail", "target", "error"]);
    for t in &trace {
        r.row(vec![
            json!(t.n),
            json!(t.partial.to_decimal(ctx.digits)),
            json!(t.tail.to_decimal(ctx.digits)),
            json!(t.target.to_decimal(ctx.digits)),
            json!(format_decimal(&t.error_bound(), SHORT_DIGITS)),
        ]);
    }
    Ok(r)
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::InD(k) => format!("in-D({k})"),
        Verdict::NotInD => "not-in-D".into(),
        Verdict::UnknownBeyondHorizon(h) => format!("unknown-beyond-{h}"),
    }
}

fn limsup_text(l: &Limsup) -> String {
    match l {
        Limsup::Infinite => "inf".into(),
        Limsup::Exact(q) => format_rational(q),
        Limsup::Unknown => "unknown".into(),
    }
}

fn classify(a: &ClassifyArgs, ctx: &Context) -> Result<Report> {
    let p: DigitProgram = parse(&a.x)?;
    let mut r = Report::new(&[]);
    r.set("program", p.to_string());
    match (&a.set, a.n) {
        (Some(set), Some(n)) => {
            let spec: SetSpec = parse(set)?;
            r.set("set", spec.to_string());
            r.set("n", n);
            r.set("member", membership_in_stage(&p, &spec, n, &ctx.limits)?.to_string());
        }
        _ => {
            let m = p.classify_membership();
            r.set("verdict", verdict_text(&m.verdict));
            r.set("limsup", limsup_text(&m.limsup));
        }
    }
    Ok(r)
}

fn radius_text(r: &Radius) -> String {
    match r {
        Radius::Pow2(e) => format!("2^-({e})"),
        Radius::Rational(q) => format_rational(q),
        Radius::Enclosed { lo, hi } => format!("[{}, {}]", format_decimal(lo, SHORT_DIGITS), format_decimal(hi, SHORT_DIGITS)),
    }
}

fn measure_text(m: &Measure) -> String {
    match m {
        Measure::Exact(v) => format_rational(v),
        Measure::Enclosure { lo, hi } => format!("[{}, {}]", format_decimal(lo, SHORT_DIGITS), format_decimal(hi, SHORT_DIGITS)),
    }
}

fn cover(a: &CoverArgs, ctx: &Context) -> Result<Report> {
    let spec: SetSpec = parse(&a.set)?;
    let h: GaugeSpec = parse(&a.gauge)?;
    let f = stage_family(&spec, a.n, &ctx.limits)?;
    let radius = stage_radius(&spec, a.n, &ctx.limits)?;
    let mut r = Report::new(&[]);
    r.set("set", spec.to_string());
    r.set("n", a.n);
    r.set("members", f.len());
    r.set("radius", radius_text(&radius));
    r.set("measure", measure_text(&f.exact_measure()?));
    r.set("max_overlap", f.max_overlap()?);
    r.set("gauge", h.to_string());
    r.set("covering_sum", covering_sum(&f, &h)?.to_decimal(ctx.digits));
    Ok(r)
}

fn series_report(v: &SeriesVerdict, r: &mut Report) {
    for t in &v.trace {
        r.row(vec![
            json!(t.n),
            t.log2_exact.as_ref().map_or(json!(t.log2_term), |q| json!(format_rational(q))),
            json!(t.term),
        ]);
    }
    r.set("verdict", v.verdict.to_string());
    r.set("certificate", v.certificate.to_string());
    r.set("partial_sum", v.partial_sum);
    r.set("tail_bound", v.tail_bound.map_or(Value::Null, |b| json!(b)));
    if !v.hypotheses.is_empty() {
        let hyp: Vec<Value> = v
            .hypotheses
            .iter()
            .map(|h| json!({ "name": h.name, "holds": h.holds, "detail": h.detail }))
            .collect();
        r.set("hypotheses_hold", v.hypotheses_hold());
        r.set("hypotheses", hyp);
    }
}

fn series(a: &SeriesArgs) -> Result<Report> {
    let mut r = Report::new(&["n", "log2_term", "term"]);
    if let Some(phi) = &a.phi {
        let phi: PhiSpec = parse(phi)?;
        let h: GaugeSpec = parse(&a.gauge)?;
        let v = series_classify(&phi, &h, a.horizon)?;
        series_report(&v, &mut r);
        r.set("critical_exponent", critical_exponent(&phi, &h)?.to_string());
    } else {
        let psi: PsiSpec = parse(a.psi.as_deref().expect("clap enforces phi or psi"))?;
        if a.khintchine {
            series_report(&khintchine_series(&psi, a.horizon)?, &mut r);
        } else {
            let h: GaugeSpec = parse(&a.gauge)?;
            series_report(&jarnik_series(&psi, &h, a.horizon)?, &mut r);
            r.set("critical_exponent", jarnik_critical_exponent(&psi, &h).to_string());
        }
    }
    Ok(r)
}

fn quasi(a: &QuasiArgs, ctx: &Context) -> Result<Report> {
    let omega: OmegaSpec = parse(&a.omega)?;
    let audit = quasi_independence_audit(&omega, a.nmax, &ctx.limits)?;
    let mut r = Report::new(&["n", "m", "measure_n", "measure_m", "measure_both", "ratio"]);
    for p in &audit.pairs {
        r.row(vec![
            json!(p.n),
            json!(p.m),
            json!(format_rational(&p.measure_n)),
            json!(format_rational(&p.measure_m)),
            json!(format_rational(&p.measure_both)),
            json!(format_rational(&p.ratio)),
        ]);
    }
    r.set("max_ratio", format_rational(&audit.max_ratio));
    r.set("argmax", format!("({}, {})", audit.argmax.0, audit.argmax.1));
    r.set("overlap_constant", audit.overlap_constant);
    Ok(r)
}

fn status_text(s: &Status) -> (&'static str, &str) {
    match s {
        Status::Pass(d) => ("pass", d),
        Status::SymbolicPass(d) => ("symbolic-pass", d),
        Status::Fail(d) => ("fail", d),
    }
}

fn willow(cmd: &WillowCommand, ctx: &Context) -> Result<Report> {
    let args = match cmd {
        WillowCommand::Plan(s) | WillowCommand::Build { schedule: s, .. } | WillowCommand::Audit { schedule: s, .. } => s,
    };
    let mode: Mode = parse(&args.mode)?;
    let (s, report) = plan_schedule(mode, args.generations, args.n1, args.m1, &ctx.limits)?;
    match cmd {
        WillowCommand::Plan(_) => {
            let mut r = Report::new(&["constraint", "k", "status", "detail"]);
            for row in &report.rows {
                let (label, detail) = status_text(&row.status);
                r.row(vec![json!(row.constraint.to_string()), json!(row.k), json!(label), json!(detail)]);
            }
            r.set("schedule", s.to_json());
            r.set("all_pass", report.all_pass());
            let hyp: Vec<Value> = frostman_hypothesis_check(&s)
                .iter()
                .map(|h| json!({ "k": h.k, "x_min": h.x_min, "x_max": h.x_max, "holds": h.holds, "margin": h.margin }))
                .collect();
            r.set("gauge_hypothesis", hyp);
            r.set("symbolic_ratios", symbolic_generation_ratios(&s));
            Ok(r)
        }
        WillowCommand::Build { depth, intervals, .. } => {
            let t = frostman_measure(&s, *depth)?;
            if *intervals {
                let mut r = Report::new(&["k", "j", "lo", "hi", "mass"]);
                for layer in &t.by_generation[1..] {
                    for &i in layer {
                        let n = &t.nodes[i];
                        r.row(vec![
                            json!(n.k),
                            json!(n.j),
                            json!(format_rational(&n.lo())),
                            json!(format_rational(&n.hi())),
                            json!(format_rational(&n.weight)),
                        ]);
                    }
                }
                r.set("intervals", t.nodes.len() - 1);
                return Ok(r);
            }
            let mut r = Report::new(&["k", "n_k", "M_k", "intervals", "e_min", "e_max"]);
            for (k, layer) in t.by_generation.iter().enumerate().skip(1) {
                let es = layer.iter().map(|&i| t.nodes[i].e);
                let (lo, hi) = es.fold((u64::MAX, 0), |(a, b), e| (a.min(e), b.max(e)));
                let g = s.generation(k);
                r.row(vec![json!(k), json!(g.n), json!(g.m), json!(layer.len()), json!(lo), json!(hi)]);
            }
            r.set("mode", s.mode.to_string());
            Ok(r)
        }
        WillowCommand::Audit { depth, gauge, probes, .. } => {
            let h: GaugeSpec = parse(gauge)?;
            let t = frostman_measure(&s, *depth)?;
            let audit = frostman_audit(&t, &h, *probes, ctx.seed)?;
            let mut r = Report::new(&["k", "max_generation_ratio"]);
            for (k, v) in generation_ratio_profile(&t, &h).iter().enumerate() {
                r.row(vec![json!(k + 1), json!(v)]);
            }
            if let Value::Object(map) = audit.to_json() {
                for (key, v) in map {
                    r.set(&key, v);
                }
            }
            Ok(r)
        }
    }
}

/// `ceil(log2(1/r))` for a stage radius.
fn radius_scale(r: &Radius) -> Result<u64> {
    let e = match r {
        Radius::Pow2(e) => e.ceil(),
        Radius::Rational(q) => num_bigint::BigInt::from((-log2_rational(q)).ceil() as i64),
        Radius::Enclosed { lo, .. } => num_bigint::BigInt::from((-log2_rational(lo)).ceil() as i64),
    };
    u64::try_from(e).map_err(|_| Error::Domain("radius must lie below 1".into()))
}

fn boxdim(a: &BoxdimArgs, ctx: &Context) -> Result<Report> {
    let spec: SetSpec = parse(&a.set)?;
    if a.nmin == 0 || a.nmin > a.nmax {
        return Err(Error::Domain("need 1 <= nmin <= nmax".into()));
    }
    let uncapped = Limits {
        exponent_cap: u64::MAX,
        ..ctx.limits
    };
    let mut r = Report::new(&["n", "m", "log2_count", "method"]);
    let mut samples = Vec::new();
    for n in a.nmin..=a.nmax {
        let m = radius_scale(&stage_radius(&spec, n, &uncapped)?)?;
        let sample = if n <= ctx.limits.max_level && m <= ENUMERATED_SCALE.min(ctx.limits.exponent_cap) {
            let f = stage_family(&spec, n, &ctx.limits)?;
            (BoxSample::new(m, &box_count(&f, m, ctx.limits.exponent_cap)?), "enumerated")
        } else {
            let l = grid_box_count_log2(n, m, m)?;
            (BoxSample { m, log2_count: l as f64 }, "exponent-space")
        };
        r.row(vec![json!(n), json!(m), json!(sample.0.log2_count), json!(sample.1)]);
        samples.push(sample.0);
    }
    let mode = match a.fit {
        Fit::Ordinary => FitMode::Ordinary,
        Fit::Log => FitMode::Logarithmic,
    };
    let fit = dim_fit(&samples, mode)?;
    r.set("slope", fit.slope);
    r.set("intercept", fit.intercept);
    r.set("residual", fit.residual);
    Ok(r)
}

fn bell(a: &BellArgs, ctx: &Context) -> Result<Report> {
    let mode = match a.mode {
        BellKind::Recurrence => BellMode::Recurrence,
        BellKind::Series => BellMode::Series(a.terms),
    };
    let mut r = Report::new(&["n", "value", "truncation"]);
    for n in 0..=a.n {
        match bell_number(n, mode, ctx.digits)? {
            BellValue::Exact(v) => r.row(vec![json!(n), json!(v.to_string()), Value::Null]),
            BellValue::Series { value, truncation } => r.row(vec![
                json!(n),
                json!(value.to_decimal(ctx.digits)),
                json!(format_decimal(&truncation, SHORT_DIGITS)),
            ]),
        }
    }
    Ok(r)
}
