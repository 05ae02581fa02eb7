//! Batch front-end: load series specs from JSON files, run transforms and
//! diagnostics from `amalgam-core`, and emit machine-readable reports.
//!
//! Exit codes separate refutation from misuse: 0 means every check passed
//! (or the requested output was produced), 1 means a diagnostic refuted its
//! input (the witness is in the report), 2 means the command could not run
//! (bad flags, malformed files, orders beyond the truncation or safety cap).

pub mod report;
pub mod spec_file;

use std::path::{Path, PathBuf};

use amalgam_core::balgebra::BMatrix;
use amalgam_core::constructions::{boxed_convolution, GArgs};
use amalgam_core::cumulant_engine::{
    cumulants_from_moments, moments_from_cumulants, JointCumulantSpec, JointMomentSpec,
    SeriesTable,
};
use amalgam_core::diagnostics::{
    check_b_trace, determining_series, is_b_even, is_r_diagonal, verify_even_product_pair,
};
use amalgam_core::nc_lattice::{
    enumerate_nc, enumerate_nc_even, kreweras, mobius_to_full, set_max_order, SetPartition,
    DEFAULT_MAX_ORDER,
};
use amalgam_core::Error as CoreError;
use clap::{Parser, Subcommand, ValueEnum};

use report::{
    CheckReport, DetSeriesReport, NcPartitionDto, NcReport, PreconditionReport, VerdictDto,
    VerifyReport, VerifyRunDto,
};
use spec_file::{doc_from_table, load_matrix, load_spec, save_spec, LoadedSpec, SpecKind};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(
    name = "amalgam",
    version,
    about = "Exact operator-valued free probability: transforms and diagnostics on truncated series"
)]
pub struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Safety cap on lattice orders (overrides the AMALGAM_MAX_N
    /// environment variable; default 10).
    #[arg(long, global = true, value_name = "N")]
    pub max_n: Option<usize>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Dump the noncrossing partition lattice NC(n).
    Nc {
        /// Ground-set size.
        #[arg(long)]
        n: usize,
        /// List only partitions whose blocks all have even size.
        #[arg(long)]
        even: bool,
        /// Include each partition's Kreweras complement.
        #[arg(long)]
        kreweras: bool,
        /// Include each partition's Moebius value against the one-block partition.
        #[arg(long)]
        mobius: bool,
    },
    /// Convert a cumulant spec to its moment series.
    Moments {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Output truncation order (at most the spec's N).
        #[arg(long)]
        order: usize,
    },
    /// Convert a moment spec to its cumulant series.
    Cumulants {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Output truncation order (at most the spec's N).
        #[arg(long)]
        order: usize,
    },
    /// Check that one variable's coefficients vanish at odd orders.
    CheckEven {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Variable index to test (1-based).
        #[arg(long)]
        var: usize,
        /// Highest order to test.
        #[arg(long)]
        order: usize,
    },
    /// Check cyclic-rotation invariance of a moment family.
    CheckTrace {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Highest order to test.
        #[arg(long)]
        order: usize,
    },
    /// Check that a two-variable cumulant family is supported on even
    /// alternating tuples.
    CheckRdiag {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Highest order to test.
        #[arg(long)]
        order: usize,
    },
    /// Extract the two determining series of an alternating pair and check
    /// that they reconstruct the pair's cumulants.
    DetSeries {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Number of determining-series coefficients (the spec must reach
        /// order 2*ORDER).
        #[arg(long)]
        order: usize,
    },
    /// Boxed convolution of two one-variable series.
    Boxconv {
        #[arg(long, value_name = "FILE")]
        f: PathBuf,
        #[arg(long, value_name = "FILE")]
        g: PathBuf,
        /// Interior arguments for the second series: "trivial" (all
        /// identity) or "symm:FILE" (one fixed matrix).
        #[arg(long, default_value = "trivial")]
        gargs: String,
    },
    /// Run the even-pair product harness: build two free B-even variables
    /// x and y, form the products (xy, yx), and verify vanishing mixed
    /// moments, B-evenness of the sum, R-diagonality of the product pair,
    /// and determining-series reconstruction.
    #[command(name = "verify-thm27")]
    VerifyThm27 {
        /// Seed for the first run.
        #[arg(long)]
        seed: u64,
        /// Matrix dimension d of the scalar algebra.
        #[arg(long)]
        dim: usize,
        /// Pair truncation order.
        #[arg(long)]
        order: usize,
        /// Number of consecutive seeds to run.
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

/// Reconstruct a display form of the invocation for report headers, with
/// the binary path reduced to its file name so reports do not depend on
/// where the tool is installed.
pub fn display_command() -> String {
    let mut parts: Vec<String> = std::env::args().collect();
    if let Some(first) = parts.first_mut() {
        if let Some(name) = Path::new(first.as_str()).file_name().and_then(|s| s.to_str()) {
            *first = name.to_string();
        }
    }
    parts.join(" ")
}

/// Errors that prevent a command from running at all (exit code 2).
type Usage = String;

fn core_usage(e: CoreError) -> Usage {
    e.to_string()
}

fn resolve_cap(flag: Option<usize>) -> Result<usize, Usage> {
    let cap = match flag {
        Some(v) => v,
        None => match std::env::var("AMALGAM_MAX_N") {
            Ok(text) => text
                .trim()
                .parse::<usize>()
                .map_err(|_| format!("AMALGAM_MAX_N is not a valid order: {text:?}"))?,
            Err(std::env::VarError::NotPresent) => DEFAULT_MAX_ORDER,
            Err(e) => return Err(format!("AMALGAM_MAX_N: {e}")),
        },
    };
    if cap == 0 {
        return Err("the order cap must be positive".into());
    }
    Ok(cap)
}

fn check_cap(order: usize, cap: usize) -> Result<(), Usage> {
    if order == 0 {
        return Err("the requested order must be positive".into());
    }
    if order > cap {
        return Err(format!(
            "order {order} exceeds the safety cap {cap} (raise it with --max-n or AMALGAM_MAX_N)"
        ));
    }
    Ok(())
}

fn require_kind(loaded: &LoadedSpec, kind: SpecKind, why: &str) -> Result<(), Usage> {
    if loaded.kind != kind {
        return Err(format!(
            "{why} requires a {} spec, got kind \"{}\"",
            kind.name(),
            loaded.kind.name()
        ));
    }
    Ok(())
}

fn require_order_within(order: usize, table: &SeriesTable) -> Result<(), Usage> {
    if order > table.truncation() {
        return Err(format!(
            "order {order} exceeds the spec's truncation N={}",
            table.truncation()
        ));
    }
    Ok(())
}

/// Truncate to `order` and convert to moments if the file holds cumulants.
fn as_moments(loaded: LoadedSpec, order: usize) -> Result<JointMomentSpec, Usage> {
    require_order_within(order, &loaded.table)?;
    let table = loaded.table.with_truncation(order).map_err(core_usage)?;
    match loaded.kind {
        SpecKind::Moment => Ok(JointMomentSpec(table)),
        SpecKind::Cumulant => {
            moments_from_cumulants(&JointCumulantSpec(table)).map_err(core_usage)
        }
    }
}

/// Truncate to `order` and convert to cumulants if the file holds moments.
fn as_cumulants(loaded: LoadedSpec, order: usize) -> Result<JointCumulantSpec, Usage> {
    require_order_within(order, &loaded.table)?;
    let table = loaded.table.with_truncation(order).map_err(core_usage)?;
    match loaded.kind {
        SpecKind::Cumulant => Ok(JointCumulantSpec(table)),
        SpecKind::Moment => {
            cumulants_from_moments(&JointMomentSpec(table)).map_err(core_usage)
        }
    }
}

fn table_output(table: &SeriesTable, kind: SpecKind, format: Format) -> String {
    match format {
        Format::Json => save_spec(table, kind),
        Format::Text => spec_file::describe_table(table, kind),
    }
}

fn run_nc(
    n: usize,
    even: bool,
    want_kreweras: bool,
    want_mobius: bool,
    cap: usize,
    command: &str,
    format: Format,
) -> Result<(String, i32), Usage> {
    check_cap(n, cap)?;
    let all = enumerate_nc(n).map_err(core_usage)?;
    let listed: Vec<SetPartition> = if even {
        enumerate_nc_even(n).map_err(core_usage)?
    } else {
        all.as_ref().clone()
    };
    let mobius_values = if want_mobius {
        Some(mobius_to_full(n).map_err(core_usage)?)
    } else {
        None
    };
    // `mobius_to_full` is aligned with the enumeration order; index the
    // listed subset through the full list.
    let index_of = |p: &SetPartition| -> usize {
        all.iter().position(|q| q == p).expect("listed partitions come from NC(n)")
    };
    let mut partitions = Vec::with_capacity(listed.len());
    for p in &listed {
        let kr = if want_kreweras {
            Some(kreweras(p).map_err(core_usage)?.blocks().to_vec())
        } else {
            None
        };
        let mobius = mobius_values.as_ref().map(|values| values[index_of(p)]);
        partitions.push(NcPartitionDto {
            blocks: p.blocks().to_vec(),
            kreweras: kr,
            mobius_to_full: mobius,
        });
    }
    let report = NcReport {
        version: report::VERSION.into(),
        command: command.into(),
        n,
        count: all.len(),
        even_count: even.then_some(listed.len()),
        partitions,
    };
    let body = match format {
        Format::Json => report::to_json(&report),
        Format::Text => report::nc_text(&report),
    };
    Ok((body, EXIT_PASS))
}

fn run_check(
    command: &str,
    format: Format,
    check: &str,
    verdict: &amalgam_core::diagnostics::Verdict,
) -> (String, i32) {
    let report = CheckReport::new(command, check, verdict);
    let body = match format {
        Format::Json => report::to_json(&report),
        Format::Text => report::check_text(&report),
    };
    (body, if verdict.pass { EXIT_PASS } else { EXIT_REFUTED })
}

fn parse_gargs(text: &str, d: usize) -> Result<GArgs, Usage> {
    if text == "trivial" {
        return Ok(GArgs::Trivial);
    }
    if let Some(path) = text.strip_prefix("symm:") {
        let b0: BMatrix = load_matrix(Path::new(path), d)?;
        return Ok(GArgs::Symmetric(b0));
    }
    Err(format!(
        "--gargs must be \"trivial\" or \"symm:FILE\", got {text:?}"
    ))
}

fn dispatch(cmd: &Cmd, cap: usize, command: &str, format: Format) -> Result<(String, i32), Usage> {
    match cmd {
        Cmd::Nc {
            n,
            even,
            kreweras,
            mobius,
        } => run_nc(*n, *even, *kreweras, *mobius, cap, command, format),

        Cmd::Moments { spec, order } => {
            check_cap(*order, cap)?;
            let loaded = load_spec(spec)?;
            require_kind(&loaded, SpecKind::Cumulant, "moments")?;
            let moments = as_moments(loaded, *order)?;
            Ok((table_output(&moments.0, SpecKind::Moment, format), EXIT_PASS))
        }

        Cmd::Cumulants { spec, order } => {
            check_cap(*order, cap)?;
            let loaded = load_spec(spec)?;
            require_kind(&loaded, SpecKind::Moment, "cumulants")?;
            let cumulants = as_cumulants(loaded, *order)?;
            Ok((table_output(&cumulants.0, SpecKind::Cumulant, format), EXIT_PASS))
        }

        Cmd::CheckEven { spec, var, order } => {
            check_cap(*order, cap)?;
            let loaded = load_spec(spec)?;
            require_order_within(*order, &loaded.table)?;
            let verdict = is_b_even(&loaded.table, *var, *order).map_err(core_usage)?;
            Ok(run_check(command, format, "b-even", &verdict))
        }

        Cmd::CheckTrace { spec, order } => {
            check_cap(*order, cap)?;
            let moments = as_moments(load_spec(spec)?, *order)?;
            let verdict = check_b_trace(&moments, *order).map_err(core_usage)?;
            Ok(run_check(command, format, "b-trace", &verdict))
        }

        Cmd::CheckRdiag { spec, order } => {
            check_cap(*order, cap)?;
            let loaded = load_spec(spec)?;
            if loaded.table.s() != 2 {
                return Err(format!(
                    "check-rdiag requires a two-variable spec, got s={}",
                    loaded.table.s()
                ));
            }
            let cumulants = as_cumulants(loaded, *order)?;
            let verdict = is_r_diagonal(&cumulants, *order).map_err(core_usage)?;
            Ok(run_check(command, format, "r-diagonal", &verdict))
        }

        Cmd::DetSeries { spec, order } => {
            check_cap(2 * order, cap)?;
            let loaded = load_spec(spec)?;
            if loaded.table.s() != 2 {
                return Err(format!(
                    "det-series requires a two-variable spec, got s={}",
                    loaded.table.s()
                ));
            }
            let cumulants = as_cumulants(loaded, 2 * order)?;
            match determining_series(&cumulants, *order) {
                Ok((f, g, verdict)) => {
                    let pass = verdict.pass;
                    let report = DetSeriesReport {
                        version: report::VERSION.into(),
                        command: command.into(),
                        order: *order,
                        pass,
                        f: doc_from_table(&f, SpecKind::Cumulant),
                        g: doc_from_table(&g, SpecKind::Cumulant),
                        reconstruction: VerdictDto::from(&verdict),
                    };
                    let body = match format {
                        Format::Json => report::to_json(&report),
                        Format::Text => report::det_series_text(&report),
                    };
                    Ok((body, if pass { EXIT_PASS } else { EXIT_REFUTED }))
                }
                Err(CoreError::PreconditionFailed { check, verdict }) => {
                    let report = PreconditionReport::new(command, check, &verdict);
                    let body = match format {
                        Format::Json => report::to_json(&report),
                        Format::Text => report::precondition_text(&report),
                    };
                    Ok((body, EXIT_REFUTED))
                }
                Err(e) => Err(core_usage(e)),
            }
        }

        Cmd::Boxconv { f, g, gargs } => {
            let f_loaded = load_spec(f)?;
            let g_loaded = load_spec(g)?;
            if f_loaded.kind != g_loaded.kind {
                return Err(format!(
                    "boxconv requires matching spec kinds, got \"{}\" and \"{}\"",
                    f_loaded.kind.name(),
                    g_loaded.kind.name()
                ));
            }
            // Order n of the convolution sums over interleaved words of
            // length 2n, so the lattice cap must cover twice the result
            // truncation.
            let n_max = f_loaded.table.truncation().min(g_loaded.table.truncation());
            check_cap(2 * n_max, cap)?;
            let g_args = parse_gargs(gargs, f_loaded.table.d())?;
            let result =
                boxed_convolution(&f_loaded.table, &g_loaded.table, &g_args).map_err(core_usage)?;
            Ok((table_output(&result, f_loaded.kind, format), EXIT_PASS))
        }

        Cmd::VerifyThm27 {
            seed,
            dim,
            order,
            count,
        } => {
            check_cap(2 * order, cap)?;
            if *dim == 0 {
                return Err("--dim must be positive".into());
            }
            if *count == 0 {
                return Err("--count must be positive".into());
            }
            let mut runs = Vec::with_capacity(*count);
            for i in 0..*count {
                let s = seed.wrapping_add(i as u64);
                let run = verify_even_product_pair(s, *dim, *order).map_err(core_usage)?;
                runs.push(VerifyRunDto::from(&run));
            }
            runs.sort_by_key(|r| r.seed);
            let pass = runs.iter().all(|r| r.pass);
            let report = VerifyReport {
                version: report::VERSION.into(),
                command: command.into(),
                seed: *seed,
                dim: *dim,
                order: *order,
                count: *count,
                pass,
                runs,
            };
            let body = match format {
                Format::Json => report::to_json(&report),
                Format::Text => report::verify_text(&report),
            };
            Ok((body, if pass { EXIT_PASS } else { EXIT_REFUTED }))
        }
    }
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), Usage> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: &Cli, command: &str) -> i32 {
    let outcome = resolve_cap(cli.max_n).and_then(|cap| {
        set_max_order(cap);
        dispatch(&cli.cmd, cap, command, cli.format)
    });
    match outcome {
        Ok((body, code)) => match emit(&cli.out, &body) {
            Ok(()) => code,
            Err(msg) => {
                eprintln!("error: {msg}");
                EXIT_USAGE
            }
        },
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}
