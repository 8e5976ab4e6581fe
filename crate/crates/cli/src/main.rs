use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use motivic_forge::crepant::{self, build_crepant_stack, check_crepancy, DivisorSum, RankConvention, ResolutionData};
use motivic_forge::heights::{
    batch_check, build_presentation, check_key_identity, height_profile_partial, ArcOnCover, Family, Polynomial,
};
use motivic_forge::jets::{
    self, group_order, groupoid_count_for, measure_from_levels, stabilizer_order, CountLimits, CountMethod, CovCase,
    Cylinder,
};
use motivic_forge::parse::parse_motivic_expression;
use motivic_forge::scalar::{Fp, PrimeField};
use motivic_forge::series::{SeriesMatrix, TruncatedSeries, DEFAULT_PRECISION};

const SCHEMA: &str = "motivic-forge/1";

#[derive(Parser, Debug)]
#[command(name = "motivic-forge", version, about = "Exact motivic-integration computations on quotient stacks")]
struct Cli {
    /// Series precision N (work modulo t^N).
    #[arg(long, global = true, default_value_t = DEFAULT_PRECISION)]
    precision: usize,
    /// Prime base field for arcs.
    #[arg(long, global = true, default_value_t = 5)]
    prime: u32,
    /// Emit a JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for random arc sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, canonicalize and evaluate a motivic expression.
    Motivic {
        expression: String,
        /// Evaluate at L = q (repeatable).
        #[arg(long = "at")]
        at: Vec<u64>,
    },
    /// Jet-space enumeration.
    Jets {
        #[command(subcommand)]
        command: JetsCommand,
    },
    /// Heights of arcs on the built-in covers.
    Heights {
        #[command(subcommand)]
        command: HeightsCommand,
    },
    /// Recover the K-coefficient of a worked change-of-variables example.
    VerifyCov {
        /// lemma83 or example82.
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 2)]
        r: usize,
    },
    /// Build the crepant stack descriptor for log resolution data.
    Resolve {
        /// Input JSON file, or `-` for stdin.
        #[arg(long = "in")]
        input: String,
        /// certificate or paper-literal.
        #[arg(long, default_value = "certificate")]
        convention: String,
    },
}

#[derive(Args, Debug)]
struct JetParams {
    #[arg(long)]
    r: usize,
    /// Jet level: work in F_q[t]/(t^{n+1}).
    #[arg(long)]
    n: usize,
    /// Prime field size.
    #[arg(long)]
    q: u32,
}

#[derive(Subcommand, Debug)]
enum JetsCommand {
    /// Groupoid count of a cylinder at level n over F_q.
    Count {
        #[command(flatten)]
        params: JetParams,
        /// brute, rowreduce or both.
        #[arg(long, default_value = "both")]
        method: String,
        /// lemma83 or example82 (the latter forces r = 2).
        #[arg(long, default_value = "lemma83")]
        cylinder: String,
        #[arg(long, default_value_t = jets::BRUTE_FORCE_LIMIT)]
        brute_limit: u64,
        #[arg(long, default_value_t = jets::ROW_REDUCE_LIMIT)]
        rowreduce_limit: u64,
    },
    /// Stabilizer order of diag(t, 1, ..., 1).
    Stabilizer {
        #[command(flatten)]
        params: JetParams,
    },
    /// Cylinder measure from levels 1 and 2.
    Measure {
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value = "lemma83")]
        cylinder: String,
    },
}

#[derive(Subcommand, Debug)]
enum HeightsCommand {
    /// Height profile and key identity for one arc.
    Profile {
        /// Arc JSON: a file path or an inline object.
        #[arg(long)]
        arc: String,
        /// Relative canonical divisor, e.g. "D'=-1" (defaults to (1-r)D' for slr).
        #[arg(long)]
        k: Option<String>,
        /// Gorenstein index m.
        #[arg(long, default_value_t = 1)]
        m: u32,
    },
    /// Identity checks on seeded random slr(r) arcs.
    Batch {
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Number of seeded arcs.
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
}

/// A failure before any verification could run.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

struct Outcome {
    report: Value,
    text: String,
    ok: bool,
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                let mut report = out.report;
                if let Value::Object(m) = &mut report {
                    m.insert("schema".into(), json!(SCHEMA));
                    m.insert("seed".into(), json!(cli.seed));
                    m.insert("ok".into(), json!(out.ok));
                }
                emit(&format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")));
            } else {
                emit(&out.text);
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(InputError(msg)) => {
            if cli.json {
                emit(&format!("{}\n", json!({"schema": SCHEMA, "seed": cli.seed, "ok": false, "error": msg})));
            }
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, InputError> {
    if cli.precision == 0 {
        return Err(InputError("--precision must be positive".into()));
    }
    match &cli.command {
        Command::Motivic { expression, at } => motivic(expression, at),
        Command::Jets { command } => match command {
            JetsCommand::Count { params, method, cylinder, brute_limit, rowreduce_limit } => {
                let limits = CountLimits { brute_force: *brute_limit, row_reduce: *rowreduce_limit };
                jets_count(params, method, cylinder, limits)
            }
            JetsCommand::Stabilizer { params } => jets_stabilizer(params),
            JetsCommand::Measure { r, cylinder } => jets_measure(*r, cylinder),
        },
        Command::Heights { command } => match command {
            HeightsCommand::Profile { arc, k, m } => heights_profile(cli, arc, k.as_deref(), *m),
            HeightsCommand::Batch { r, count } => heights_batch(cli, *r, *count),
        },
        Command::VerifyCov { case, r } => verify_cov(case, *r),
        Command::Resolve { input, convention } => resolve(input, convention),
    }
}

fn motivic(expression: &str, at: &[u64]) -> Result<Outcome, InputError> {
    let e = parse_motivic_expression(expression)?;
    let mut text = format!("{e}\n");
    let mut evals = Vec::new();
    for &q in at {
        let v = e.evaluate_at(q)?;
        let _ = writeln!(text, "  at L = {q}: {v}");
        evals.push(json!({"q": q, "value": v.to_string()}));
    }
    Ok(Outcome {
        report: json!({"command": "motivic", "input": expression, "canonical": e.to_string(), "index": e.index(), "evaluations": evals}),
        text,
        ok: true,
    })
}

fn parse_cylinder(name: &str, r: usize) -> Result<Cylinder, InputError> {
    match name {
        "lemma83" if r >= 2 => Ok(Cylinder::Lemma83 { r }),
        "lemma83" => Err(InputError("lemma83 needs r >= 2".into())),
        "example82" if r == 2 => Ok(Cylinder::Example82),
        "example82" => Err(InputError("example82 is defined for r = 2".into())),
        other => Err(InputError(format!("unknown cylinder `{other}` (lemma83|example82)"))),
    }
}

/// `(L-1)*L^k` style text for the closed forms.
fn factored(shift: i64) -> String {
    if shift == 0 {
        "L-1".into()
    } else if shift == 1 {
        "(L-1)*L".into()
    } else {
        format!("(L-1)*L^{shift}")
    }
}

fn cylinder_shift(cyl: &Cylinder, n: usize) -> i64 {
    match cyl {
        Cylinder::Lemma83 { r } => n as i64 - *r as i64,
        Cylinder::Example82 => n as i64 - 4,
    }
}

fn jets_count(p: &JetParams, method: &str, cylinder: &str, limits: CountLimits) -> Result<Outcome, InputError> {
    let method: CountMethod = method.parse().map_err(InputError)?;
    let cyl = parse_cylinder(cylinder, p.r)?;
    if p.n < cyl.min_level() {
        return Err(InputError(format!("the closed form needs n >= {}", cyl.min_level())));
    }
    let c = match groupoid_count_for(&cyl, p.n, p.q, method, limits) {
        Ok(c) => c,
        Err(jets::JetError::MethodsDisagree { brute, rowreduce }) => {
            let text = format!("brute force counted {brute}, row reduction counted {rowreduce}\n");
            let report = json!({"command": "jets count", "brute": brute, "rowreduce": rowreduce, "match": false});
            return Ok(Outcome { report, text, ok: false });
        }
        Err(e) => return Err(e.into()),
    };
    let symbolic = cyl.class_at_level(p.n);
    let sym_value = symbolic.evaluate_at(p.q as u64)?;
    let matches = sym_value == c.value;
    let text = format!(
        "{} at (r, n, q) = ({}, {}, {}): {}/{} = {}\nsymbolic {} = {} at q = {}: {}\n",
        cyl.name(),
        p.r,
        p.n,
        p.q,
        c.numerator,
        c.denominator,
        c.value,
        factored(cylinder_shift(&cyl, p.n)),
        sym_value,
        p.q,
        if matches { "match" } else { "MISMATCH" }
    );
    let report = json!({
        "command": "jets count",
        "cylinder": cyl.name(),
        "r": p.r, "n": p.n, "q": p.q,
        "method": method,
        "numerator": c.numerator.to_string().parse::<u64>().map(Value::from).unwrap_or_else(|_| json!(c.numerator.to_string())),
        "denominator": c.denominator.to_string().parse::<u64>().map(Value::from).unwrap_or_else(|_| json!(c.denominator.to_string())),
        "value": c.value.to_string(),
        "symbolic": factored(cylinder_shift(&cyl, p.n)),
        "symbolic_value": sym_value.to_string(),
        "match": matches,
    });
    Ok(Outcome { report, text, ok: matches })
}

fn jets_stabilizer(p: &JetParams) -> Result<Outcome, InputError> {
    let order = stabilizer_order(p.r, p.n, p.q)?;
    let expected = (p.q as u64).pow(p.r as u32 - 1);
    let ok = order == expected;
    let text = format!("stabilizer of diag(t,1,...,1): {order} (expected q^(r-1) = {expected})\n");
    let report = json!({"command": "jets stabilizer", "r": p.r, "n": p.n, "q": p.q, "order": order, "expected": expected, "match": ok, "group_order": group_order(p.r, p.n, p.q)?.to_string()});
    Ok(Outcome { report, text, ok })
}

fn jets_measure(r: usize, cylinder: &str) -> Result<Outcome, InputError> {
    let cyl = parse_cylinder(cylinder, r)?;
    let levels: Vec<(usize, _)> = [1usize, 2].iter().map(|&n| (n, cyl.class_at_level(n))).collect();
    let mu = measure_from_levels(&levels, cyl.stack_dim())?;
    let text = format!("mu({}) = {mu}\n", cyl.name());
    let report = json!({
        "command": "jets measure",
        "cylinder": cyl.name(),
        "levels": levels.iter().map(|(n, e)| json!({"n": n, "class": e.to_string()})).collect::<Vec<_>>(),
        "measure": mu.to_string(),
    });
    Ok(Outcome { report, text, ok: true })
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ArcInput {
    family: String,
    r: Option<usize>,
    matrix: Option<Vec<Vec<String>>>,
    f: Option<String>,
    target_vars: Option<Vec<String>>,
    source_vars: Option<Vec<String>>,
    cover: Option<Vec<String>>,
    arc: Option<Vec<String>>,
    precision: Option<usize>,
    prime: Option<u32>,
}

fn read_source(arg: &str) -> Result<String, InputError> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return Ok(arg.to_string());
    }
    if arg == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(arg).map_err(|e| InputError(format!("cannot read `{arg}`: {e}")))
}

fn parse_k(spec: &str) -> Result<DivisorSum, InputError> {
    let mut k = DivisorSum::zero();
    for part in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let (label, c) = part
            .split_once('=')
            .ok_or_else(|| InputError(format!("expected label=coefficient, got `{part}`")))?;
        k.add_term(label.trim(), crepant::parse_rational(c)?);
    }
    Ok(k)
}

fn build_arc(cli: &Cli, input: &ArcInput) -> Result<ArcOnCover<Fp>, InputError> {
    let precision = input.precision.unwrap_or(cli.precision);
    let prime = input.prime.unwrap_or(cli.prime);
    let field = PrimeField::new(prime).ok_or_else(|| InputError(format!("{prime} is not a prime <= 97")))?;
    if precision == 0 {
        return Err(InputError("precision must be positive".into()));
    }
    let series = |s: &str| TruncatedSeries::<Fp>::parse(&field, s, precision).map_err(InputError::from);
    match input.family.as_str() {
        "slr" => {
            let rows = input.matrix.as_ref().ok_or_else(|| InputError("slr arcs need `matrix`".into()))?;
            if let Some(r) = input.r {
                if r != rows.len() {
                    return Err(InputError(format!("r = {r} but the matrix has {} rows", rows.len())));
                }
            }
            let rows = rows
                .iter()
                .map(|row| row.iter().map(|s| series(s)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            let a = SeriesMatrix::from_rows(&field, precision, rows)?;
            Ok(ArcOnCover::slr(&a)?)
        }
        "hypersurface" => {
            let need = |o: &Option<Vec<String>>, name: &str| {
                o.clone().ok_or_else(|| InputError(format!("hypersurface arcs need `{name}`")))
            };
            let tv = need(&input.target_vars, "target_vars")?;
            let sv = need(&input.source_vars, "source_vars")?;
            let tv: Vec<&str> = tv.iter().map(String::as_str).collect();
            let sv: Vec<&str> = sv.iter().map(String::as_str).collect();
            let f = Polynomial::parse(input.f.as_deref().ok_or_else(|| InputError("hypersurface arcs need `f`".into()))?, &tv)?;
            let cover = need(&input.cover, "cover")?
                .iter()
                .map(|c| Polynomial::parse(c, &sv))
                .collect::<Result<Vec<_>, _>>()?;
            let coords = need(&input.arc, "arc")?.iter().map(|s| series(s)).collect::<Result<Vec<_>, _>>()?;
            Ok(ArcOnCover::new(Family::hypersurface(f, cover)?, &field, precision, coords)?)
        }
        other => Err(InputError(format!("unsupported family `{other}` (slr|hypersurface)"))),
    }
}

fn heights_profile(cli: &Cli, arc_arg: &str, k: Option<&str>, m: u32) -> Result<Outcome, InputError> {
    if m == 0 {
        return Err(InputError("--m must be positive".into()));
    }
    let input: ArcInput = serde_json::from_str(&read_source(arc_arg)?)?;
    let arc = build_arc(cli, &input)?;
    let pres = build_presentation(&arc)?;
    let partial = height_profile_partial(&pres);
    let k = match (k, &arc.family) {
        (Some(spec), _) => Some(parse_k(spec)?),
        (None, Family::Slr { r }) => Some(DivisorSum::single("D'", crepant::parse_rational(&(1 - *r as i64).to_string())?)),
        (None, _) => None,
    };
    let mut text = format!(
        "family {}: d0 {}x{}, d1 {}x{}\nheights (ht_-1, ht0, ht1) = ({}, {}, {})\n",
        arc.family.name(),
        pres.d0.rows(),
        pres.d0.cols(),
        pres.d1.rows(),
        pres.d1.cols(),
        partial.ht_minus1,
        partial.ht0,
        partial.ht1
    );
    let mut report = json!({
        "command": "heights profile",
        "family": arc.family.name(),
        "precision": arc.precision(),
        "prime": input.prime.unwrap_or(cli.prime),
        "heights": partial,
    });
    let mut ok = true;
    if let Some(k) = k {
        match check_key_identity(&arc, m, &k) {
            Ok(rep) => {
                let _ = writeln!(
                    text,
                    "ord_(mK) with K = {}: {} vs m*ht0 - m*ht1 - m*ht_-1 = {}: {}\neuler valuation {}: {}",
                    rep.k,
                    rep.lhs,
                    rep.rhs,
                    if rep.passes { "pass" } else { "FAIL" },
                    rep.euler_valuation,
                    if rep.euler_matches { "matches" } else { "MISMATCH" }
                );
                ok = rep.passes && rep.euler_matches;
                report["identity"] = serde_json::to_value(&rep)?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome { report, text, ok })
}

fn heights_batch(cli: &Cli, r: usize, count: usize) -> Result<Outcome, InputError> {
    if r < 2 {
        return Err(InputError("batch mode needs r >= 2".into()));
    }
    let field = PrimeField::new(cli.prime).ok_or_else(|| InputError(format!("{} is not a prime <= 97", cli.prime)))?;
    let rep = batch_check(r, count, cli.seed, field, cli.precision)?;
    let failures = rep.entries.iter().filter(|e| !(e.identity_holds && e.euler_matches)).count();
    let text = format!(
        "slr({r}) over F_{}: {} arcs (seed {}), {} failures\n",
        cli.prime,
        rep.entries.len(),
        cli.seed,
        failures
    );
    let ok = rep.all_pass;
    let mut report = serde_json::to_value(&rep)?;
    report["command"] = json!("heights batch");
    Ok(Outcome { report, text, ok })
}

fn verify_cov(case: &str, r: usize) -> Result<Outcome, InputError> {
    let case = match case {
        "lemma83" if r >= 2 => CovCase::Lemma83 { r },
        "lemma83" => return Err(InputError("lemma83 needs r >= 2".into())),
        "example82" => CovCase::Example82,
        other => return Err(InputError(format!("unknown case `{other}` (lemma83|example82)"))),
    };
    let rep = match jets::verify_change_of_variables(case) {
        Ok(rep) => rep,
        Err(jets::JetError::VerificationFailed(msg)) => {
            return Ok(Outcome {
                report: json!({"command": "verify-cov", "error": msg}),
                text: format!("verification failed: {msg}\n"),
                ok: false,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut text = format!(
        "{}: mu_Y(D) = {}, mu_X(C) = {}, shift {} so ord_K = {}, ord_D = {}\nrecovered coefficient {} (expected {}): {}\n",
        rep.case,
        rep.mu_y,
        rep.mu_x,
        rep.shift,
        rep.ord_k,
        rep.ord_d,
        rep.coefficient,
        rep.expected,
        if rep.passes { "pass" } else { "FAIL" }
    );
    for c in &rep.checks {
        let _ = writeln!(
            text,
            "  q={} n={} {}: counted {} symbolic {} {}",
            c.q,
            c.level,
            c.quantity,
            c.counted,
            c.symbolic,
            if c.matches { "ok" } else { "MISMATCH" }
        );
    }
    for s in &rep.skipped {
        let _ = writeln!(text, "  skipped: {s}");
    }
    let ok = rep.passes;
    let mut report = serde_json::to_value(&rep)?;
    report["command"] = json!("verify-cov");
    Ok(Outcome { report, text, ok })
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ResolutionInput {
    name: String,
    gorenstein_index: u32,
    divisors: Vec<DivisorInput>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct DivisorInput {
    label: String,
    discrepancy: Value,
}

fn resolve(path: &str, convention: &str) -> Result<Outcome, InputError> {
    let convention: RankConvention = convention.parse().map_err(InputError)?;
    let raw: ResolutionInput = serde_json::from_str(&read_source(path)?)?;
    let mut divisors = Vec::new();
    for d in raw.divisors {
        let text = match &d.discrepancy {
            Value::String(s) => s.clone(),
            Value::Number(n) if n.is_i64() => n.to_string(),
            other => return Err(InputError(format!("discrepancy of `{}` must be \"p/q\" or an integer, got {other}", d.label))),
        };
        divisors.push((d.label, crepant::parse_rational(&text)?));
    }
    let data = ResolutionData { name: raw.name, gorenstein_index: raw.gorenstein_index, divisors };
    let desc = build_crepant_stack(&data, convention)?;
    let ledger = check_crepancy(&desc, &data.discrepancy_divisor())?;

    let factors: Vec<Value> = desc
        .factors
        .iter()
        .map(|f| {
            json!({"label": f.label, "r": f.r, "d": f.d, "rank": f.rank, "coefficient": f.coefficient.to_string()})
        })
        .collect();
    let certificate: Vec<Value> = desc
        .certificate
        .iter()
        .map(|c| json!({"label": c.label, "lhs": c.lhs.to_string(), "passes": c.passes}))
        .collect();
    let mut text = format!("{} under the {} convention\n", desc.name, desc.convention.name());
    for (f, c) in desc.factors.iter().zip(&desc.certificate) {
        let _ = writeln!(
            text,
            "  {}: m = {}, (r, d) = ({}, {}), rank {}, certificate (d - rank) + m*d = {} {}",
            f.label,
            f.discrepancy,
            f.r,
            f.d,
            f.rank,
            c.lhs,
            if c.passes { "ok" } else { "FAIL" }
        );
    }
    let _ = writeln!(text, "K_X/Z = {}", ledger.k_stack_over_resolution);
    let _ = writeln!(text, "pi^* K_Z/Y = {}", ledger.pulled_back_discrepancy);
    let _ = writeln!(text, "K_X/Y = {}: crepant = {}", ledger.total, desc.crepant);
    let _ = writeln!(text, "{}", desc.fiber_product());
    let _ = writeln!(text, "{}", desc.moduli_interpretation());
    for w in &desc.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    let report = json!({
        "command": "resolve",
        "name": desc.name,
        "factors": factors,
        "convention": desc.convention.name(),
        "crepant": desc.crepant,
        "moduli": desc.moduli_interpretation(),
        "fiber_product": desc.fiber_product(),
        "certificate": certificate,
        "k_stack_over_resolution": ledger.k_stack_over_resolution.to_string(),
        "k_total": ledger.total.to_string(),
        "warnings": desc.warnings,
    });
    let labels: BTreeMap<_, _> = desc.factors.iter().map(|f| (f.label.clone(), f.residual().to_string())).collect();
    let mut report = report;
    report["residuals"] = json!(labels);
    Ok(Outcome { report, text, ok: desc.crepant })
}
