use std::collections::BTreeMap;
use std::io::Read;

use locconv_core::convert::quote_with_tol;
use locconv_core::protocols::{
    convert_gate_sampled_with_tol, convert_gate_with_tol, random_inputs, standard_test_inputs,
};
use locconv_core::{classify, ProtocolReport};
use serde::Serialize;

use crate::error::CliError;
use crate::gate_source::{self, InputEcho, ParsedGate};
use crate::report::{analyze as analyze_gate, QuoteJson};
use crate::{ConvertArgs, GateArgs, Outcome, RunMode};

pub const CONVERT_SCHEMA: &str = "locconv/convert/v1";
pub const BATCH_SCHEMA: &str = "locconv/batch-record/v1";

fn read_source(arg: &str, stdin: &mut dyn Read) -> Result<String, CliError> {
    if arg == "-" {
        let mut s = String::new();
        stdin.read_to_string(&mut s).map_err(|e| CliError::Input(format!("reading stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::Input(format!("reading {arg}: {e}")))
    }
}

pub fn load_gate(args: &GateArgs, stdin: &mut dyn Read) -> Result<ParsedGate, CliError> {
    if let Some(name) = &args.name {
        return Ok(gate_source::from_name(name)?);
    }
    if let Some(mu) = &args.mu {
        let mu: [f64; 3] = mu
            .as_slice()
            .try_into()
            .map_err(|_| CliError::Input(format!("--mu takes three values, got {}", mu.len())))?;
        return Ok(gate_source::from_mu(mu)?);
    }
    let src = args.gate.as_deref().ok_or_else(|| CliError::Input("no gate given".into()))?;
    let text = if src.trim_start().starts_with('{') { src.to_string() } else { read_source(src, stdin)? };
    Ok(gate_source::from_json_str(&text)?)
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

pub fn analyze(args: &GateArgs, rank_tol: f64, stdin: &mut dyn Read) -> Result<Outcome, CliError> {
    let p = load_gate(args, stdin)?;
    let r = analyze_gate(&p.gate, p.echo, rank_tol)?;
    Ok(Outcome { stdout: pretty(&r), stderr: format!("{}\n", r.summary()), code: 0 })
}

#[derive(Debug, Serialize)]
struct ExactConversion<'a> {
    schema: &'static str,
    input: InputEcho,
    mode: &'static str,
    target: &'static str,
    seed: u64,
    quote: QuoteJson,
    report: &'a ProtocolReport,
}

#[derive(Debug, Serialize)]
struct SampledConversion {
    schema: &'static str,
    input: InputEcho,
    mode: &'static str,
    target: &'static str,
    seed: u64,
    quote: QuoteJson,
    samples: usize,
    successes: usize,
    success_frequency: f64,
    /// Enumerated success probability on the sampled input.
    reference_probability: f64,
    sigma: f64,
    within_4_sigma: bool,
    counts: BTreeMap<String, usize>,
}

pub fn convert(args: &ConvertArgs, rank_tol: f64, stdin: &mut dyn Read) -> Result<Outcome, CliError> {
    let p = load_gate(&args.gate, stdin)?;
    let target = args.target;
    let quote = QuoteJson::from(&quote_with_tol(&p.gate, target, rank_tol)?);
    match args.mode {
        RunMode::Exact => {
            let inputs = standard_test_inputs(args.seed, args.random_inputs);
            let report = convert_gate_with_tol(&p.gate, target, &inputs, rank_tol)?;
            let stderr = format!(
                "convert to {target}: success probability {:.12} over {} branches, verified={}\n",
                report.success_probability_exact,
                report.branches.len(),
                report.verified()
            );
            let out = ExactConversion {
                schema: CONVERT_SCHEMA,
                input: p.echo,
                mode: "exact",
                target: target.name(),
                seed: args.seed,
                quote,
                report: &report,
            };
            Ok(Outcome { stdout: pretty(&out), stderr, code: 0 })
        }
        RunMode::Sample => {
            let input = random_inputs(args.seed, 1).remove(0);
            let reference = convert_gate_with_tol(&p.gate, target, std::slice::from_ref(&input), rank_tol)?
                .success_probability_exact;
            let table = convert_gate_sampled_with_tol(&p.gate, target, &input, args.seed, args.samples, rank_tol)?;
            let freq = table.success_frequency();
            let sigma = (reference * (1.0 - reference) / table.samples as f64).max(0.0).sqrt();
            let within = (freq - reference).abs() <= 4.0 * sigma + 1e-12;
            let stderr = format!(
                "convert to {target}: {} of {} samples succeeded ({freq:.6}, exact {reference:.6}, 4 sigma {})\n",
                table.successes,
                table.samples,
                if within { "ok" } else { "exceeded" }
            );
            let out = SampledConversion {
                schema: CONVERT_SCHEMA,
                input: p.echo,
                mode: "sample",
                target: target.name(),
                seed: args.seed,
                quote,
                samples: table.samples,
                successes: table.successes,
                success_frequency: freq,
                reference_probability: reference,
                sigma,
                within_4_sigma: within,
                counts: table.counts,
            };
            Ok(Outcome { stdout: pretty(&out), stderr, code: 0 })
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum BatchRecord {
    Ok { schema: &'static str, line: usize, digest: String, d: usize, schmidt_number: usize, class: &'static str },
    Err { schema: &'static str, line: usize, error: String, exit_code: i32 },
}

fn classify_line(text: &str, rank_tol: f64) -> Result<(String, usize, usize, &'static str), CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Input("empty line".into()));
    }
    let p = gate_source::from_json_str(text)?;
    let c = classify(&p.gate, rank_tol)?;
    Ok((p.echo.digest, p.gate.d(), c.schmidt_number, c.label.as_str()))
}

/// One record per input line, in order. Exit 1 when any line failed.
pub fn classify_batch(path: &str, rank_tol: f64, stdin: &mut dyn Read) -> Result<Outcome, CliError> {
    let text = read_source(path, stdin)?;
    let mut stdout = String::new();
    let mut failures = 0;
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let rec = match classify_line(line, rank_tol) {
            Ok((digest, d, schmidt_number, class)) => {
                *counts.entry(class).or_insert(0) += 1;
                BatchRecord::Ok { schema: BATCH_SCHEMA, line: i + 1, digest, d, schmidt_number, class }
            }
            Err(e) => {
                failures += 1;
                BatchRecord::Err { schema: BATCH_SCHEMA, line: i + 1, error: e.to_string(), exit_code: e.exit_code() }
            }
        };
        stdout += &serde_json::to_string(&rec).expect("records serialize");
        stdout.push('\n');
    }
    let tally: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let stderr = format!("classified {} lines, {failures} failed; {}\n", text.lines().count(), tally.join(" "));
    Ok(Outcome { stdout, stderr, code: if failures == 0 { 0 } else { 1 } })
}
