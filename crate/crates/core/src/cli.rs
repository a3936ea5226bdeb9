//! Command-line driver.
//!
//! Exit codes: 0 success, 1 malformed arguments, 2 invalid configuration
//! (including a modulus incompatible with the group), 3 a certificate that
//! failed replay.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::config::{Config, OutputMode};
use crate::dimgroup::{DimElem, DimError, DimGroupParams};
use crate::fungroup::{fundamental_group, uhf_fundamental_group, verify_witness, SupernaturalNumber};
use crate::orderauto::{
    classify_residues, commutation_obstruction, obstruction_with_escalation, ClassifyError, IntMat2, Obstruction,
    ObstructionCertificate, ResidueClass,
};
use crate::pell::{cf_expand, fundamental_unit, solve_norm_equation_with, Certificate, SolveOptions};
use crate::quad::{QuadRat, RingParams};
use crate::sunits::positive_unit_generators;

pub const CONFIG_ENV: &str = "DIMFORGE_CONFIG";

#[derive(Parser, Debug)]
#[command(name = "dimforge", version, about = "Exact computations for a congruence dimension group over Z[1/p]+Z[1/p]sqrt(d)")]
pub struct Cli {
    /// Config file (key = value lines); falls back to $DIMFORGE_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// One JSON record per result.
    #[arg(long, global = true)]
    structured: bool,
    /// Re-verify every certificate before reporting.
    #[arg(long, global = true)]
    replay: bool,
    #[arg(long, global = true)]
    search_bound: Option<u64>,
    #[arg(long, global = true)]
    sieve_cap: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve x^2 - d*y^2 = n.
    Pell {
        #[arg(long)]
        d: u64,
        #[arg(long, allow_negative_numbers = true)]
        n: i64,
    },
    /// Fundamental unit of Z[sqrt(d)].
    Unit {
        #[arg(long)]
        d: u64,
    },
    /// Generators of the positive unit group of Z[1/p]+Z[1/p]sqrt(d).
    Implus {
        #[arg(long)]
        d: Option<u64>,
        #[arg(long)]
        p: Option<u64>,
    },
    /// Membership of (i,j,k,x,y), meaning ((j+k*sqrt(d))/p^(s*i), (x,y)).
    Dimcheck {
        #[arg(long, allow_hyphen_values = true)]
        elem: String,
    },
    /// Residue classes of matrices admissible for a scaling.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long = "mod")]
        modulus: Option<u64>,
        #[arg(long, allow_negative_numbers = true)]
        det_sign: Option<i8>,
    },
    /// Check that (lambda, M) is an order automorphism scaling the trace by lambda.
    VerifyWitness {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
    },
    /// Decide whether two scalings admit commuting residue classes.
    Obstruction {
        #[arg(long, allow_hyphen_values = true)]
        l1: String,
        #[arg(long, allow_hyphen_values = true)]
        l2: String,
        #[arg(long = "mod")]
        modulus: Option<u64>,
    },
    /// Fundamental group, or of a UHF algebra with --uhf 2:inf,3:inf.
    Fungroup {
        #[arg(long)]
        uhf: Option<String>,
    },
    /// Full pipeline for the configured group.
    Report,
}

enum Failure {
    Usage(String),
    Config(String),
    Replay(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Config(_) => 2,
            Failure::Replay(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Config(m) | Failure::Replay(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn from_classify(e: ClassifyError) -> Failure {
    match e {
        ClassifyError::BadModulus { .. } => Failure::Config(e.to_string()),
        ClassifyError::NotPositiveUnit(_) => Failure::Usage(e.to_string()),
    }
}

struct Ctx {
    cfg: Config,
    replay: bool,
}

/// Text and the equivalent structured record for one result.
struct Outcome {
    text: String,
    record: Value,
}

/// Runs the tool with `args` (including the program name), reading the
/// config fallback from the environment.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_env(args, std::env::var_os(CONFIG_ENV), out, err)
}

pub fn run_with_env<I, T>(args: I, env_config: Option<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{e}");
            return 1;
        }
    };
    match execute(&cli, env_config) {
        Ok((mode, outcome)) => {
            let written = match mode {
                OutputMode::Text => writeln!(out, "{}", outcome.text.trim_end()),
                OutputMode::Structured => writeln!(out, "{}", outcome.record),
            };
            if written.is_err() {
                return 1;
            }
            0
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn load_config(cli: &Cli, env_config: Option<OsString>) -> Result<Config, Failure> {
    let path = cli.config.clone().or_else(|| env_config.map(PathBuf::from));
    let mut cfg = match path {
        Some(p) => Config::load(&p).map_err(|e| Failure::Config(e.to_string()))?,
        None => Config::default(),
    };
    if let Some(b) = cli.search_bound {
        if b == 0 {
            return Err(Failure::Usage("--search-bound must be positive".into()));
        }
        cfg.search_bound = b;
    }
    if let Some(c) = cli.sieve_cap {
        if c == 0 {
            return Err(Failure::Usage("--sieve-cap must be positive".into()));
        }
        cfg.sieve_cap = c;
    }
    if cli.structured {
        cfg.output_mode = OutputMode::Structured;
    }
    Ok(cfg)
}

fn execute(cli: &Cli, env_config: Option<OsString>) -> Result<(OutputMode, Outcome), Failure> {
    let cfg = load_config(cli, env_config)?;
    let ctx = Ctx { cfg, replay: cli.replay };
    let outcome = match &cli.command {
        Command::Pell { d, n } => pell(&ctx, *d, *n),
        Command::Unit { d } => unit(*d),
        Command::Implus { d, p } => implus(&ctx, *d, *p),
        Command::Dimcheck { elem } => dimcheck(&ctx, elem),
        Command::Classify { lambda, modulus, det_sign } => classify(&ctx, lambda, *modulus, *det_sign),
        Command::VerifyWitness { lambda, matrix } => verify(&ctx, lambda, matrix),
        Command::Obstruction { l1, l2, modulus } => obstruction(&ctx, l1, l2, *modulus),
        Command::Fungroup { uhf } => fungroup(&ctx, uhf.as_deref()),
        Command::Report => report(&ctx),
    }?;
    Ok((ctx.cfg.output_mode, outcome))
}

fn replay_pell(ctx: &Ctx, certs: &[Certificate], text: &mut String, record: &mut Value) -> Result<(), Failure> {
    if !ctx.replay {
        return Ok(());
    }
    for c in certs {
        c.replay().map_err(|e| Failure::Replay(format!("certificate `{c}` failed replay: {e}")))?;
    }
    text.push_str("replay: ok\n");
    record["replay"] = json!("ok");
    Ok(())
}

fn replay_obstruction(
    ctx: &Ctx,
    cert: &ObstructionCertificate,
    text: &mut String,
    record: &mut Value,
) -> Result<(), Failure> {
    if !ctx.replay {
        return Ok(());
    }
    cert.replay().map_err(|e| Failure::Replay(format!("obstruction certificate failed replay: {e}")))?;
    text.push_str("replay: ok\n");
    record["replay"] = json!("ok");
    Ok(())
}

fn pell(ctx: &Ctx, d: u64, n: i64) -> Result<Outcome, Failure> {
    let opts = SolveOptions { sieve_cap: ctx.cfg.sieve_cap, ..SolveOptions::default() };
    let v = solve_norm_equation_with(d, n, opts).map_err(usage)?;
    let verdict = if v.is_solvable() { "solvable" } else { "unsolvable" };
    let mut text = format!("x^2-{d}y^2={n}: {verdict}\n");
    let sols: Vec<String> = v.solutions.iter().map(|(x, y)| format!("({x},{y})")).collect();
    if v.is_solvable() {
        let _ = writeln!(text, "solutions: {}", sols.join(", "));
    }
    if let Some(c) = &v.certificate {
        let _ = writeln!(text, "certificate: {c}");
    }
    let mut record = json!({
        "command": "pell",
        "d": d,
        "n": n,
        "verdict": verdict,
        "solutions": v.solutions.iter().map(|(x, y)| json!([x.to_string(), y.to_string()])).collect::<Vec<_>>(),
        "search_bound": v.search_bound.to_string(),
        "certificate": v.certificate,
    });
    let certs: Vec<Certificate> = v.certificate.into_iter().collect();
    replay_pell(ctx, &certs, &mut text, &mut record)?;
    Ok(Outcome { text, record })
}

fn surd(x: &BigInt, y: &BigInt, d: u64) -> String {
    format!("{x}+{y}*sqrt({d})")
}

fn unit(d: u64) -> Result<Outcome, Failure> {
    let u = fundamental_unit(d).map_err(usage)?;
    let cf = cf_expand(d).map_err(usage)?;
    let sign = if u.norm_sign > 0 { "+1" } else { "-1" };
    let text = format!("fundamental unit of Z[sqrt({d})]: {} norm={sign}\nsqrt({d}) = {cf}\n", surd(&u.x, &u.y, d));
    let record = json!({
        "command": "unit",
        "verdict": "ok",
        "d": d,
        "unit": {"x": u.x.to_string(), "y": u.y.to_string(), "norm": u.norm_sign},
        "continued_fraction": cf.to_string(),
    });
    Ok(Outcome { text, record })
}

fn implus(ctx: &Ctx, d: Option<u64>, p: Option<u64>) -> Result<Outcome, Failure> {
    let base = ctx.cfg.params.ring();
    let ring = RingParams::new(d.unwrap_or(base.d()), p.unwrap_or(base.p())).map_err(usage)?;
    let group = positive_unit_generators(ring).map_err(usage)?;
    let split = group.splitting();
    let pretty: Vec<String> = group.generators().iter().map(|g| g.pretty()).collect();
    let mut text = format!("{ring}: p={} {}\n", ring.p(), split.kind);
    let _ = writeln!(text, "rank={} generators={{{}}}", group.rank(), pretty.join(", "));
    for c in &split.certificates {
        let _ = writeln!(text, "certificate: {c}");
    }
    let mut record = json!({
        "command": "implus",
        "verdict": "ok",
        "ring": ring.to_string(),
        "splitting": split.kind,
        "rank": group.rank(),
        "generators": group.generators(),
        "certificates": split.certificates,
    });
    replay_pell(ctx, &split.certificates, &mut text, &mut record)?;
    Ok(Outcome { text, record })
}

fn parse_lambda(params: DimGroupParams, s: &str) -> Result<QuadRat, Failure> {
    QuadRat::parse_in(params.ring(), s).map_err(|e| Failure::Usage(format!("bad scaling `{s}`: {e}")))
}

fn dimcheck(ctx: &Ctx, elem: &str) -> Result<Outcome, Failure> {
    let params = ctx.cfg.params;
    let bad = || Failure::Usage(format!("bad element `{elem}` (expected i,j,k,x,y)"));
    let parts: Vec<&str> = elem.split(',').map(str::trim).collect();
    let [i, j, k, x, y] = parts.as_slice() else {
        return Err(bad());
    };
    let i: i64 = i.parse().map_err(|_| bad())?;
    let big = |s: &str| s.parse::<BigInt>().map_err(|_| bad());
    let (j, k, x, y) = (big(j)?, big(k)?, big(x)?, big(y)?);
    match DimElem::new(params, i, j, k, x, y) {
        Ok(e) => Ok(Outcome {
            text: format!("MEMBER: {e}\npositive={}\n", e.is_positive()),
            record: json!({
                "command": "dimcheck",
                "verdict": "member",
                "element": e.to_string(),
                "positive": e.is_positive(),
            }),
        }),
        Err(v @ DimError::CongruenceViolation { .. }) => Ok(Outcome {
            text: format!("NOT A MEMBER: {v}\n"),
            record: json!({"command": "dimcheck", "verdict": "not-a-member", "reason": v.to_string()}),
        }),
        Err(e) => Err(usage(e)),
    }
}

fn class_record(c: &ResidueClass) -> Value {
    json!({"matrix": c.matrix_string(), "modulus": c.modulus, "det_sign": c.det_sign})
}

fn classify(ctx: &Ctx, lambda: &str, modulus: Option<u64>, det_sign: Option<i8>) -> Result<Outcome, Failure> {
    let params = ctx.cfg.params;
    let l = parse_lambda(params, lambda)?;
    let modulus = modulus.unwrap_or_else(|| params.base_modulus());
    if let Some(s) = det_sign {
        if s != 1 && s != -1 {
            return Err(Failure::Usage(format!("--det-sign must be 1 or -1, got {s}")));
        }
    }
    let classes: Vec<ResidueClass> = classify_residues(params, &l, modulus)
        .map_err(from_classify)?
        .into_iter()
        .filter(|c| det_sign.is_none_or(|s| c.det_sign == s))
        .collect();
    let filter = det_sign.map(|s| format!(" det={s:+}")).unwrap_or_default();
    let mut text = format!("classes for lambda={} mod {modulus}{filter}: {}\n", l.pretty(), classes.len());
    for c in &classes {
        let _ = writeln!(text, "{c}");
    }
    let record = json!({
        "command": "classify",
        "verdict": "ok",
        "lambda": l,
        "modulus": modulus,
        "det_sign": det_sign,
        "classes": classes.iter().map(class_record).collect::<Vec<_>>(),
    });
    Ok(Outcome { text, record })
}

fn show_elem(e: &DimElem) -> String {
    format!("({}, ({}, {}))", e.trace_state().pretty(), e.x(), e.y())
}

fn verify(ctx: &Ctx, lambda: &str, matrix: &str) -> Result<Outcome, Failure> {
    let params = ctx.cfg.params;
    let l = parse_lambda(params, lambda)?;
    let m: IntMat2 = matrix.parse().map_err(usage)?;
    Ok(match verify_witness(params, &l, &m) {
        Ok(v) => Outcome {
            text: format!("VERIFIED: lambda={} M={m} phi(u)={}\n", l.pretty(), show_elem(&v.unit_image)),
            record: json!({
                "command": "verify-witness",
                "verdict": "verified",
                "lambda": l,
                "matrix": m.to_string(),
                "unit_image": show_elem(&v.unit_image),
            }),
        },
        Err(e) => Outcome {
            text: format!("REJECTED: {e}\n"),
            record: json!({
                "command": "verify-witness",
                "verdict": "rejected",
                "lambda": l,
                "matrix": m.to_string(),
                "reason": e.to_string(),
            }),
        },
    })
}

fn obstruction(ctx: &Ctx, l1: &str, l2: &str, modulus: Option<u64>) -> Result<Outcome, Failure> {
    let params = ctx.cfg.params;
    let (a, b) = (parse_lambda(params, l1)?, parse_lambda(params, l2)?);
    let modulus = modulus.unwrap_or_else(|| params.base_modulus());
    let verdict = commutation_obstruction(params, &a, &b, modulus).map_err(from_classify)?;
    let head = format!("lambda1={} lambda2={} mod {modulus}", a.pretty(), b.pretty());
    match &verdict {
        Obstruction::Possible { witness: (c1, c2), .. } => Ok(Outcome {
            text: format!("POSSIBLE (residue level): {head}\ncommuting pair: {c1} ; {c2}\n"),
            record: json!({
                "command": "obstruction",
                "verdict": "possible",
                "modulus": modulus,
                "witnesses": [class_record(c1), class_record(c2)],
            }),
        }),
        Obstruction::Impossible(cert) => {
            let mut text = format!("IMPOSSIBLE: {head}: no commuting residue pair\n{cert}");
            let mut record = json!({
                "command": "obstruction",
                "verdict": "impossible",
                "modulus": modulus,
                "certificate": cert,
            });
            replay_obstruction(ctx, cert, &mut text, &mut record)?;
            Ok(Outcome { text, record })
        }
    }
}

fn fungroup(ctx: &Ctx, uhf: Option<&str>) -> Result<Outcome, Failure> {
    if let Some(kind) = uhf {
        let n: SupernaturalNumber = kind.parse().map_err(usage)?;
        let gens = uhf_fundamental_group(&n);
        let list: Vec<String> = gens.iter().map(u64::to_string).collect();
        return Ok(Outcome {
            text: format!("UHF type {n}: F(A) free abelian on {{{}}}\n", list.join(", ")),
            record: json!({"command": "fungroup", "verdict": "ok", "uhf": n.to_string(), "generators": gens}),
        });
    }
    let params = ctx.cfg.params;
    let report = fundamental_group(params, ctx.cfg.search_bound).map_err(usage)?;
    let text = format!("{params}\n{report}\n");
    let record = json!({
        "command": "fungroup",
        "verdict": report.equality.to_string(),
        "equality": report.equality,
        "search_bound": report.search_bound,
        "generators": report.upper_bound.generators(),
        "witnesses": witnesses_record(&report.witnessed),
        "missing": report.missing,
    });
    Ok(Outcome { text, record })
}

fn witnesses_record(w: &[(QuadRat, crate::orderauto::OrderAuto)]) -> Vec<Value> {
    w.iter().map(|(l, a)| json!({"lambda": l, "matrix": a.matrix().to_string()})).collect()
}

fn report(ctx: &Ctx) -> Result<Outcome, Failure> {
    let params = ctx.cfg.params;
    params.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let fg = fundamental_group(params, ctx.cfg.search_bound).map_err(usage)?;
    let modulus = params.base_modulus();
    let mut text = format!(
        "group {params}: {p}^{s} = 1 mod {m1} and mod {m2}\n{fg}\n",
        p = params.p(),
        s = params.s(),
        m1 = params.m1(),
        m2 = params.m2()
    );
    for (lambda, _) in &fg.witnessed {
        let classes = classify_residues(params, lambda, modulus).map_err(from_classify)?;
        let list: Vec<String> = classes.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(text, "classes for {} mod {modulus}: {}", lambda.pretty(), list.join("; "));
    }
    let mut record = json!({
        "command": "report",
        "params": params.to_string(),
        "equality": fg.equality,
        "generators": fg.upper_bound.generators(),
        "witnesses": witnesses_record(&fg.witnessed),
    });

    let gens = fg.witnessed_generators();
    let mut escalated = modulus;
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[i + 1..] {
            match obstruction_with_escalation(params, a, b, modulus).map_err(from_classify)? {
                Obstruction::Impossible(cert) => {
                    let names = format!("{{{}, {}}}", a.pretty(), b.pretty());
                    let _ = write!(text, "{cert}");
                    replay_obstruction(ctx, &cert, &mut text, &mut record)?;
                    let _ = writeln!(text, "NO commuting trace-scaling pair at K0 level for generators {names}");
                    record["verdict"] = json!("no-commuting-pair");
                    record["modulus"] = json!(cert.modulus);
                    record["certificate"] = serde_json::to_value(&cert).expect("certificate serializes");
                    return Ok(Outcome { text, record });
                }
                Obstruction::Possible { modulus: m, .. } => escalated = escalated.max(m),
            }
        }
    }
    let _ = writeln!(
        text,
        "OBSTRUCTION NOT FOUND (residue level) up to modulus {escalated}; \
         a commuting residue pair is only a necessary condition"
    );
    record["verdict"] = json!("obstruction-not-found");
    record["modulus"] = json!(escalated);
    Ok(Outcome { text, record })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["dimforge"];
        argv.extend_from_slice(args);
        let code = run_with_env(argv, None, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn pell_negative_rhs() {
        let (code, out, _) = call(&["pell", "--d", "3", "--n", "-1", "--replay"]);
        assert_eq!(code, 0);
        assert!(out.contains("unsolvable"), "{out}");
        assert!(out.contains("kind=modular-sieve d=3 n=-1 modulus=3"), "{out}");
        assert!(out.contains("replay: ok"));
    }

    #[test]
    fn dimcheck_reports_violation() {
        let (code, out, _) = call(&["dimcheck", "--elem", "0,1,0,2,0"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "NOT A MEMBER: x≢j mod 9");
        let (code, out, _) = call(&["dimcheck", "--elem", "0,1,0,10,3"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("MEMBER"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["pell", "--d", "3"]).0, 1);
        assert_eq!(call(&["nonsense"]).0, 1);
        assert_eq!(call(&["classify", "--lambda", "5", "--mod", "6"]).0, 2);
        assert_eq!(call(&["classify", "--lambda", "3", "--mod", "9"]).0, 1);
        assert_eq!(call(&["dimcheck", "--elem", "1,2"]).0, 1);
        assert_eq!(call(&["verify-witness", "--lambda", "5", "--matrix", "1,2,3"]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn text_and_structured_agree() {
        for args in [
            vec!["pell", "--d", "3", "--n", "-5"],
            vec!["pell", "--d", "2", "--n", "7"],
            vec!["verify-witness", "--lambda", "5", "--matrix", "2,3,1,2"],
            vec!["obstruction", "--l1", "5", "--l2", "5", "--mod", "9"],
            vec!["dimcheck", "--elem", "0,1,0,2,0"],
        ] {
            let (_, text, _) = call(&args);
            let mut s = vec!["--structured"];
            s.extend(args.iter());
            let (_, json_line, _) = call(&s);
            let rec: Value = serde_json::from_str(json_line.trim()).unwrap();
            let verdict = rec["verdict"].as_str().unwrap().to_uppercase().replace('-', " ");
            assert!(text.to_uppercase().contains(&verdict), "{text} vs {verdict}");
        }
    }
}
