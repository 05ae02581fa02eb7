//! JSON report documents emitted by the diagnostic subcommands, plus their
//! plain-text renderings. Every report embeds the tool version and the
//! command line that produced it, so saved reports are self-describing.

use std::fmt::Write as _;

use amalgam_core::balgebra::{rat_to_str, BMatrix};
use amalgam_core::diagnostics::{ProductPairReport, Verdict};
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
pub struct VerdictDto {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_tuple: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_args: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<Vec<Vec<String>>>,
    pub checked_orders: Vec<usize>,
}

fn matrix_rows(m: &BMatrix) -> Vec<Vec<String>> {
    (0..m.d())
        .map(|i| (0..m.d()).map(|j| rat_to_str(m.get(i, j))).collect())
        .collect()
}

impl From<&Verdict> for VerdictDto {
    fn from(v: &Verdict) -> Self {
        VerdictDto {
            pass: v.pass,
            witness_tuple: v.witness_tuple.clone(),
            witness_args: v.witness_args.clone(),
            residual: v.residual.as_ref().map(matrix_rows),
            checked_orders: v.checked_orders.clone(),
        }
    }
}

/// Report for the single-verdict checks (evenness, traciality,
/// alternating support).
#[derive(Serialize)]
pub struct CheckReport {
    pub version: String,
    pub command: String,
    pub check: String,
    pub pass: bool,
    pub verdict: VerdictDto,
}

impl CheckReport {
    pub fn new(command: &str, check: &str, verdict: &Verdict) -> Self {
        CheckReport {
            version: VERSION.into(),
            command: command.into(),
            check: check.into(),
            pass: verdict.pass,
            verdict: VerdictDto::from(verdict),
        }
    }
}

/// Report emitted when a command's precondition check refutes its input
/// (for example, a determining-series request on a non-R-diagonal pair).
#[derive(Serialize)]
pub struct PreconditionReport {
    pub version: String,
    pub command: String,
    pub precondition: String,
    pub pass: bool,
    pub verdict: VerdictDto,
}

impl PreconditionReport {
    pub fn new(command: &str, precondition: &str, verdict: &Verdict) -> Self {
        PreconditionReport {
            version: VERSION.into(),
            command: command.into(),
            precondition: precondition.into(),
            pass: false,
            verdict: VerdictDto::from(verdict),
        }
    }
}

/// Report for `det-series`: the two scalar-direction determining series and
/// the reconstruction verdict.
#[derive(Serialize)]
pub struct DetSeriesReport {
    pub version: String,
    pub command: String,
    pub order: usize,
    pub pass: bool,
    pub f: crate::spec_file::SpecDoc,
    pub g: crate::spec_file::SpecDoc,
    pub reconstruction: VerdictDto,
}

/// One seed's worth of `verify-thm27` output.
#[derive(Serialize)]
pub struct VerifyRunDto {
    pub seed: u64,
    pub pass: bool,
    pub mixed_moments_vanish: VerdictDto,
    pub sum_is_b_even: VerdictDto,
    pub pair_is_r_diagonal: VerdictDto,
    pub determining_series_consistent: VerdictDto,
    pub traciality: VerdictDto,
}

impl From<&ProductPairReport> for VerifyRunDto {
    fn from(r: &ProductPairReport) -> Self {
        VerifyRunDto {
            seed: r.seed,
            pass: r.pass,
            mixed_moments_vanish: VerdictDto::from(&r.mixed_moments_vanish),
            sum_is_b_even: VerdictDto::from(&r.sum_is_b_even),
            pair_is_r_diagonal: VerdictDto::from(&r.pair_is_r_diagonal),
            determining_series_consistent: VerdictDto::from(&r.determining_series_consistent),
            traciality: VerdictDto::from(&r.traciality),
        }
    }
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub dim: usize,
    pub order: usize,
    pub count: usize,
    pub pass: bool,
    pub runs: Vec<VerifyRunDto>,
}

/// Report for the `nc` subcommand.
#[derive(Serialize)]
pub struct NcReport {
    pub version: String,
    pub command: String,
    pub n: usize,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub even_count: Option<usize>,
    pub partitions: Vec<NcPartitionDto>,
}

#[derive(Serialize)]
pub struct NcPartitionDto {
    pub blocks: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kreweras: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mobius_to_full: Option<i64>,
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut body = serde_json::to_string_pretty(value).expect("plain data serializes");
    body.push('\n');
    body
}

fn verdict_text(out: &mut String, label: &str, v: &VerdictDto) {
    let _ = write!(out, "  {label}: {}", if v.pass { "pass" } else { "FAIL" });
    if !v.checked_orders.is_empty() {
        let _ = write!(out, " (orders {:?})", v.checked_orders);
    }
    let _ = writeln!(out);
    if let Some(tuple) = &v.witness_tuple {
        let _ = writeln!(out, "    witness tuple: {tuple:?}");
    }
    if let Some(args) = &v.witness_args {
        let _ = writeln!(out, "    witness args:  {args:?}");
    }
    if let Some(residual) = &v.residual {
        let _ = writeln!(out, "    residual:      {residual:?}");
    }
}

pub fn check_text(r: &CheckReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}: {}",
        r.check,
        if r.pass { "PASS" } else { "FAIL" }
    );
    verdict_text(&mut out, "verdict", &r.verdict);
    out
}

pub fn precondition_text(r: &PreconditionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "precondition {}: FAIL", r.precondition);
    verdict_text(&mut out, "verdict", &r.verdict);
    out
}

pub fn det_series_text(r: &DetSeriesReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "det-series (order {}): {}",
        r.order,
        if r.pass { "PASS" } else { "FAIL" }
    );
    verdict_text(&mut out, "reconstruction", &r.reconstruction);
    let _ = writeln!(out, "f: {} entries", r.f.entries.len());
    let _ = writeln!(out, "g: {} entries", r.g.entries.len());
    out
}

pub fn verify_text(r: &VerifyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "verify (seed {}, dim {}, order {}, count {}): {}",
        r.seed,
        r.dim,
        r.order,
        r.count,
        if r.pass { "PASS" } else { "FAIL" }
    );
    for run in &r.runs {
        let _ = writeln!(out, "seed {}: {}", run.seed, if run.pass { "pass" } else { "FAIL" });
        verdict_text(&mut out, "mixed moments vanish", &run.mixed_moments_vanish);
        verdict_text(&mut out, "sum is B-even", &run.sum_is_b_even);
        verdict_text(&mut out, "pair is R-diagonal", &run.pair_is_r_diagonal);
        verdict_text(
            &mut out,
            "determining series consistent",
            &run.determining_series_consistent,
        );
        verdict_text(&mut out, "traciality (recorded)", &run.traciality);
    }
    out
}

pub fn nc_text(r: &NcReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "NC({}): {} partitions", r.n, r.count);
    if let Some(even) = r.even_count {
        let _ = write!(out, " ({even} with all blocks even)");
    }
    let _ = writeln!(out);
    for p in &r.partitions {
        let blocks: Vec<String> = p
            .blocks
            .iter()
            .map(|b| {
                let parts: Vec<String> = b.iter().map(|v| v.to_string()).collect();
                format!("{{{}}}", parts.join(","))
            })
            .collect();
        let _ = write!(out, "{}", blocks.join(" "));
        if let Some(kr) = &p.kreweras {
            let blocks: Vec<String> = kr
                .iter()
                .map(|b| {
                    let parts: Vec<String> = b.iter().map(|v| v.to_string()).collect();
                    format!("{{{}}}", parts.join(","))
                })
                .collect();
            let _ = write!(out, "  Kr: {}", blocks.join(" "));
        }
        if let Some(mu) = p.mobius_to_full {
            let _ = write!(out, "  mu_to_full: {mu}");
        }
        let _ = writeln!(out);
    }
    out
}
