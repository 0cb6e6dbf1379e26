use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cmreflex::arith::primes_up_to;
use cmreflex::closure::galois_closure;
use cmreflex::cm::{cm_check, enumerate_cm_types, reflex_field, verify_reflex_identities, Ambient, VerifyOptions};
use cmreflex::embed::to_f64;
use cmreflex::nf::{certified_embeddings, NumberField};
use cmreflex::stverify::{st_row, CMCurveQ};
use cmreflex::wire::{parse_records, CurveWire, FieldWire};
use cmreflex::Error;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TOO_LARGE: u8 = 3;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Records,
    Summary,
}

#[derive(Parser, Debug)]
#[command(name = "cmreflex", version, about = "CM types, reflex norms and Shimura-Taniyama checks")]
struct Cli {
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Precision of the certified complex embeddings.
    #[arg(long, global = true, default_value_t = 128)]
    bits: u32,
    /// Enumeration node budget (overrides CMREFLEX_BUDGET).
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Records)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// CM recognition, CM types and reflex fields for each field in the file.
    Cm { field_file: PathBuf },
    /// Reflex-norm identity suite for one CM type.
    ReflexVerify {
        field_file: PathBuf,
        #[arg(long = "type", default_value_t = 0)]
        type_index: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 200)]
        prime_bound: u64,
        /// Multiply every ideal norm by a prime above 2 (the suite must then fail).
        #[arg(long)]
        inject_fault: bool,
    },
    /// Frobenius elements and the ideal and valuation checks over a range of primes.
    St {
        /// Curve records; the two built-in curves when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        p_min: u64,
        #[arg(long, default_value_t = 1000)]
        p_max: u64,
    },
}

struct Run {
    format: Format,
    lines: Vec<String>,
}

impl Run {
    fn new(cli: &Cli, command: &str, input: Value) -> Run {
        let header = json!({
            "config": {
                "command": command,
                "input": input,
                "seed": cli.seed,
                "bits": cli.bits,
                "budget": cmreflex::lattice::budget(),
                "format": format!("{:?}", cli.format).to_lowercase(),
                "version": env!("CARGO_PKG_VERSION"),
            }
        });
        Run { format: cli.format, lines: vec![header.to_string()] }
    }

    fn record(&mut self, v: Value) {
        if matches!(self.format, Format::Records) {
            self.lines.push(v.to_string());
        }
    }

    fn finish(mut self, summary: Value, human: &str, code: u8) -> ExitCode {
        self.lines.push(json!({ "summary": summary }).to_string());
        let mut out = std::io::stdout().lock();
        for l in &self.lines {
            if writeln!(out, "{l}").is_err() {
                break;
            }
        }
        eprintln!("{human}");
        ExitCode::from(code)
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn read_fields(path: &Path) -> Result<Vec<NumberField>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let recs: Vec<FieldWire> = parse_records(&text).map_err(|e| e.to_string())?;
    if recs.is_empty() {
        return Err("no field records".into());
    }
    recs.iter().map(|r| r.field().map_err(|e| e.to_string())).collect()
}

/// -log2 of the isolating radius, or null for an exact root.
fn radius_bits(r: &cmreflex::Rational) -> Value {
    if r == &cmreflex::Rational::from_integer(0.into()) {
        return Value::Null;
    }
    json!(r.denom().bits() as i64 - r.numer().bits() as i64)
}

fn coeffs(k: &NumberField) -> Value {
    serde_json::to_value(FieldWire::from_field(k)).expect("serializable")
}

fn cmd_cm(cli: &Cli, path: &Path) -> ExitCode {
    let fields = match read_fields(path) {
        Ok(f) => f,
        Err(e) => return usage_error(&e),
    };
    let mut run = Run::new(cli, "cm", json!(path.display().to_string()));
    let mut cm_count = 0;
    let mut type_count = 0;
    for k in &fields {
        let embeddings: Vec<Value> = certified_embeddings(k, cli.bits.max(64))
            .iter()
            .map(|e| json!({"re": to_f64(&e.disc.re), "im": to_f64(&e.disc.im), "radius_bits": radius_bits(&e.disc.rad)}))
            .collect();
        // the closure is the expensive part and bounds everything after it
        let closure = if k.is_totally_imaginary() && k.degree() % 2 == 0 {
            match galois_closure(k) {
                Ok(cl) => Some(cl),
                Err(e @ Error::ClosureTooLarge { .. }) => {
                    run.record(json!({"field": coeffs(k), "degree": k.degree(), "error": e.to_string()}));
                    let summary = json!({"fields": fields.len(), "error": "closure too large"});
                    return run.finish(summary, &e.to_string(), EXIT_TOO_LARGE);
                }
                Err(e) => return usage_error(&e.to_string()),
            }
        } else {
            None
        };
        let (Some(cl), Some(cm)) = (closure, cm_check(k)) else {
            run.record(json!({"field": coeffs(k), "degree": k.degree(), "cm": false, "embeddings": embeddings}));
            continue;
        };
        cm_count += 1;
        let cm = Arc::new(cm);
        let group = cl.group_name();
        let mut types = vec![];
        for (i, t) in enumerate_cm_types(&cm).iter().enumerate() {
            match reflex_field(t) {
                Ok(r) => types.push(json!({
                    "index": i,
                    "phi": t.phi,
                    "reflex_field": coeffs(&r.field),
                    "reflex_degree": r.degree(),
                    "reflex_type": r.reflex_type.phi,
                })),
                Err(e @ Error::ClosureTooLarge { .. }) => {
                    return run.finish(json!({"error": "closure too large"}), &e.to_string(), EXIT_TOO_LARGE)
                }
                Err(e) => return usage_error(&e.to_string()),
            }
        }
        type_count += types.len();
        run.record(json!({
            "field": coeffs(k),
            "degree": k.degree(),
            "cm": true,
            "embeddings": embeddings,
            "real_subfield": coeffs(&cm.real_subfield),
            "galois_group": group,
            "types": types,
        }));
    }
    let human = format!("{} field(s), {cm_count} CM, {type_count} CM type(s)", fields.len());
    run.finish(json!({"fields": fields.len(), "cm_fields": cm_count, "cm_types": type_count}), &human, 0)
}

fn cmd_reflex_verify(cli: &Cli, path: &Path, type_index: usize, samples: usize, prime_bound: u64, fault: bool) -> ExitCode {
    let fields = match read_fields(path) {
        Ok(f) => f,
        Err(e) => return usage_error(&e),
    };
    let k = &fields[0];
    let Some(cm) = cm_check(k) else { return usage_error("the field is not CM") };
    let types = enumerate_cm_types(&Arc::new(cm));
    let Some(t) = types.get(type_index) else {
        return usage_error(&format!("type index {type_index} out of range (0..{})", types.len()));
    };
    let input = json!({"field_file": path.display().to_string(), "type": type_index, "samples": samples,
        "prime_bound": prime_bound, "inject_fault": fault});
    let mut run = Run::new(cli, "reflex-verify", input);
    let r = match reflex_field(t) {
        Ok(r) => r,
        Err(e @ Error::ClosureTooLarge { .. }) => {
            return run.finish(json!({"error": "closure too large"}), &e.to_string(), EXIT_TOO_LARGE)
        }
        Err(e) => return usage_error(&e.to_string()),
    };
    let opts = VerifyOptions { samples, seed: cli.seed, prime_norm_bound: prime_bound, corrupt: fault };
    let report = match verify_reflex_identities(&Ambient::closure(&r), &opts) {
        Ok(rep) => rep,
        Err(e) => {
            let code = if matches!(e, Error::ClosureTooLarge { .. }) { EXIT_TOO_LARGE } else { EXIT_FAIL };
            return run.finish(json!({"error": e.to_string()}), &e.to_string(), code);
        }
    };
    for c in &report.checks {
        run.record(serde_json::to_value(c).expect("serializable"));
    }
    let pass = report.all_pass();
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed()).map(|c| c.identity.as_str()).collect();
    let human = if pass {
        format!("all {} identities pass for phi = {:?}", report.checks.len(), t.phi)
    } else {
        format!("failed: {}", failed.join(", "))
    };
    let summary = json!({"phi": t.phi, "checks": report.checks.len(), "failed": failed, "pass": pass});
    run.finish(summary, &human, if pass { 0 } else { EXIT_FAIL })
}

fn cmd_st(cli: &Cli, corpus: Option<&Path>, p_min: u64, p_max: u64) -> ExitCode {
    if p_max < p_min {
        return usage_error("p-max is smaller than p-min");
    }
    let curves: Vec<CMCurveQ> = match corpus {
        None => vec![CMCurveQ::x3_minus_x(), CMCurveQ::x3_plus_1()],
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return usage_error(&format!("{}: {e}", path.display())),
            };
            let recs: Vec<CurveWire> = match parse_records(&text) {
                Ok(r) => r,
                Err(e) => return usage_error(&e.to_string()),
            };
            match recs.iter().map(|r| r.curve()).collect::<Result<Vec<_>, _>>() {
                Ok(c) => c,
                Err(e) => return usage_error(&e.to_string()),
            }
        }
    };
    let input = json!({"corpus": corpus.map(|p| p.display().to_string()), "p_min": p_min, "p_max": p_max});
    let mut run = Run::new(cli, "st", input);
    let (mut ok, mut skipped, mut failed) = (0, 0, 0);
    for c in &curves {
        for p in primes_up_to(p_max).into_iter().filter(|&p| p >= p_min) {
            let row = st_row(c, p, cli.seed);
            if row.failed() {
                failed += 1;
            } else if row.ideal_match.is_some() {
                ok += 1;
            } else {
                skipped += 1;
            }
            run.record(serde_json::to_value(&row).expect("serializable"));
        }
    }
    let human = format!("{ok} ordinary row(s) pass, {failed} fail, {skipped} skipped");
    let summary = json!({"curves": curves.len(), "pass": ok, "fail": failed, "skipped": skipped});
    run.finish(summary, &human, if failed == 0 { 0 } else { EXIT_FAIL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(b) = cli.budget {
        std::env::set_var("CMREFLEX_BUDGET", b.to_string());
    }
    match &cli.command {
        Command::Cm { field_file } => cmd_cm(&cli, field_file),
        Command::ReflexVerify { field_file, type_index, samples, prime_bound, inject_fault } => {
            cmd_reflex_verify(&cli, field_file, *type_index, *samples, *prime_bound, *inject_fault)
        }
        Command::St { corpus, p_min, p_max } => cmd_st(&cli, corpus.as_deref(), *p_min, *p_max),
    }
}
