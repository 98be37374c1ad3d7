//! Command-line front end for the verification suites: subgroup structure,
//! cusp tables, Siegel-unit expansions, and height-bound scans.
//!
//! Exit codes: `0` when every executed assertion passed, `1` when an
//! assertion failed (including a closed-form comparison recorded as a
//! mismatch in the ledger), `2` for usage or precondition errors, and `3`
//! when a series verdict was inconclusive (truncation too short to decide).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nscartan::fp::PrimeContext;
use nscartan::gl2::{build_subgroup, SubgroupKind};
use nscartan::par;
use nscartan::report::{
    self, CuspReport, GroupsReport, LedgerEntry, RungeReport, ThresholdJson, UnitReport,
};
use nscartan::runge::{self, ConstantsSource, JLogBound};
use nscartan::units::Mode;

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

/// Conjugator count for the generated-closure check.
const N_CONJUGATORS: u32 = 20;

#[derive(Parser)]
#[command(
    name = "nscartan",
    version,
    about = "Verification suites for Cartan-type subgroup structure, cusp \
             combinatorics, Siegel-unit expansions, and height bounds",
    after_help = "Reports are canonical JSON, printed to stdout and written \
                  under --out (or $NSCARTAN_OUT) when set. Runs with the same \
                  configuration produce byte-identical reports."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Coefficient arithmetic for series computations.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,

    /// Series truncation (number of q^(1/p) slots); default 2p + 1, the
    /// shortest window on which the full-product verdict is conclusive.
    #[arg(long = "K", global = true, value_name = "SLOTS")]
    k: Option<usize>,

    /// Source of the height-bound branch constants.
    #[arg(long, global = true, value_enum, default_value_t = ConstantsArg::Paper)]
    constants: ConstantsArg,

    /// Output directory for JSON reports (default: $NSCARTAN_OUT if set).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for scans and sampling (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Seed for the sampled checks (conjugators, residual sample points).
    #[arg(long, global = true, default_value_t = 17)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Structural subgroup checks at one prime: family orders, the cube
    /// subgroup's containments and quotient, and generated closures.
    Groups {
        /// Odd prime, 5 <= p <= 127 (the dense element-table limit).
        p: u32,
    },
    /// Cusp table and closed-form comparisons for one curve.
    Cusps {
        /// Odd prime, 5 <= p <= 199.
        p: u32,
        /// Curve label: x0, sp, sp+, ns, ns+, G, or Hp.
        curve: String,
    },
    /// Siegel-unit report for the cube orbit at m = 3: leading exponent,
    /// full-product identity, twisted order, and sampled remainder bounds.
    Unit {
        /// Prime with p = 2 (mod 3), 5 <= p <= 127.
        p: u32,
    },
    /// Height-bound reports: a single evaluation, the threshold crossing,
    /// or a log-spaced scan.
    Runge {
        /// Evaluate the bound at this prime (or real parameter) >= 100.
        p: Option<f64>,

        /// Locate the crossing of the bound with 7*sqrt(p).
        #[arg(long)]
        threshold: bool,

        /// Scan a log-spaced grid: minimum, maximum, and point count.
        /// The certified regime is [100, 1.4e7].
        #[arg(long, num_args = 3, value_names = ["PMIN", "PMAX", "N"])]
        scan: Option<Vec<f64>>,

        /// With --scan: also write a CSV projection of the scan rows.
        #[arg(long)]
        csv: bool,
    },
    /// Run every suite at a fixed set of small primes and write one bundle
    /// (ignores --K; the unit section uses its conclusive default).
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Exact cyclotomic-integer coefficients.
    Exact,
    /// Floating-point coefficients (faster, tolerance-checked).
    Complex,
}

impl ModeArg {
    fn to_mode(self) -> Mode {
        match self {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Complex => Mode::Complex,
        }
    }
    fn label(self) -> &'static str {
        match self {
            ModeArg::Exact => "exact",
            ModeArg::Complex => "complex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConstantsArg {
    /// The branch constants as displayed in the source derivation.
    Paper,
    /// Constants re-derived from the computed cusp orders.
    Oracle,
}

impl ConstantsArg {
    fn to_source(self) -> ConstantsSource {
        match self {
            ConstantsArg::Paper => ConstantsSource::Published,
            ConstantsArg::Oracle => ConstantsSource::Derived,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    par::configure_jobs(cli.jobs);
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    let out = resolve_out(cli.out.clone());
    match &cli.command {
        Command::Groups { p } => cmd_groups(*p, cli.seed, out.as_deref()),
        Command::Cusps { p, curve } => cmd_cusps(*p, curve, out.as_deref()),
        Command::Unit { p } => cmd_unit(*p, cli, out.as_deref()),
        Command::Runge { p, threshold, scan, csv } => {
            cmd_runge(*p, *threshold, scan.as_deref(), *csv, cli, out.as_deref())
        }
        Command::All => cmd_all(cli, out.as_deref()),
    }
}

/// Output directory: the flag wins, then the environment default.
fn resolve_out(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os("NSCARTAN_OUT").map(PathBuf::from))
}

/// Print the canonical JSON to stdout and persist it when a directory is
/// configured.
fn emit<T: Serialize>(dir: Option<&Path>, name: &str, value: &T) -> Result<(), String> {
    let bytes = report::to_canonical_json(value);
    std::io::stdout()
        .write_all(&bytes)
        .map_err(|e| format!("writing stdout: {e}"))?;
    write_file(dir, name, &bytes)
}

fn write_file(dir: Option<&Path>, name: &str, bytes: &[u8]) -> Result<(), String> {
    let Some(dir) = dir else { return Ok(()) };
    std::fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn exit_flag(passed: bool) -> u8 {
    if passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// A ledger passes when nothing is recorded as a mismatch or an
/// inconsistent bound.
fn ledger_passes(ledger: &[LedgerEntry]) -> bool {
    ledger
        .iter()
        .all(|e| e.status == "match" || e.status == "consistent")
}

fn context(p: u32, limit: u32, what: &str) -> Result<PrimeContext, String> {
    if p > limit {
        return Err(format!("{what} is limited to p <= {limit}; got p = {p}"));
    }
    PrimeContext::new(p).map_err(|e| e.to_string())
}

fn cmd_groups(p: u32, seed: u64, out: Option<&Path>) -> Result<u8, String> {
    let ctx = context(p, 127, "the group suite's dense element table")?;
    let rep = report::groups_report(&ctx, N_CONJUGATORS, seed);
    emit(out, &format!("groups_p{p}.json"), &rep)?;
    Ok(exit_flag(rep.all_passed))
}

fn cmd_cusps(p: u32, curve: &str, out: Option<&Path>) -> Result<u8, String> {
    let kind = SubgroupKind::from_label(curve).ok_or_else(|| {
        format!("unknown curve label '{curve}' (expected one of x0, sp, sp+, ns, ns+, G, Hp)")
    })?;
    let ctx = context(p, 199, "cusp enumeration in this front end")?;
    let sub = build_subgroup(&ctx, kind);
    let table = nscartan::cusps::enumerate_cusps(&ctx, &sub).map_err(|e| e.to_string())?;
    let rep = report::cusp_report(&table);
    emit(out, &format!("cusps_p{p}_{curve}.json"), &rep)?;
    Ok(exit_flag(ledger_passes(&rep.ledger)))
}

fn cmd_unit(p: u32, cli: &Cli, out: Option<&Path>) -> Result<u8, String> {
    let ctx = context(p, 127, "the unit suite")?;
    if p % 3 != 2 {
        return Err(format!(
            "the cube-orbit unit requires p = 2 (mod 3), so that the cube \
             classes meet every determinant; got p = {p} = {} (mod 3)",
            p % 3
        ));
    }
    let slots = cli.k.unwrap_or(2 * p as usize + 1);
    if slots < 2 {
        return Err(format!("--K must be at least 2; got {slots}"));
    }
    let rep = report::unit_report(&ctx, slots, cli.mode.to_mode(), 20, cli.seed)
        .map_err(|e| e.to_string())?;
    emit(out, &format!("unit_p{p}.json"), &rep)?;
    Ok(if rep.inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        exit_flag(rep.all_passed)
    })
}

#[derive(Serialize)]
struct ScanAggregate {
    source: &'static str,
    pmin: f64,
    pmax: f64,
    n: usize,
    all_headline_ok: bool,
    worst_margin: f64,
    worst_p: f64,
    ledger: Vec<LedgerEntry>,
    rows: Vec<JLogBound>,
}

fn cmd_runge(
    p: Option<f64>,
    threshold: bool,
    scan: Option<&[f64]>,
    csv: bool,
    cli: &Cli,
    out: Option<&Path>,
) -> Result<u8, String> {
    let selected = usize::from(p.is_some()) + usize::from(threshold) + usize::from(scan.is_some());
    if selected != 1 {
        return Err("pass exactly one of a prime, --threshold, or --scan".into());
    }
    if csv && scan.is_none() {
        return Err("--csv only applies to --scan".into());
    }
    let source = cli.constants.to_source();

    if threshold {
        let rep = report::threshold_report(&runge::threshold());
        emit(out, "runge_threshold.json", &rep)?;
        return Ok(exit_flag(rep.consistent));
    }

    if let Some(p) = p {
        let bound = runge::j_log_bound(p, source).map_err(|e| e.to_string())?;
        let rep = report::runge_report(&bound);
        emit(out, &format!("runge_p{}_{}.json", trim_float(p), source.label()), &rep)?;
        return Ok(exit_flag(bound.headline_ok && ledger_passes(&rep.ledger)));
    }

    let scan = scan.expect("selection checked above");
    let (pmin, pmax, n) = (scan[0], scan[1], scan[2]);
    if !(pmin >= 100.0 && pmax <= 1.4e7 && pmin < pmax) {
        return Err(format!(
            "scan range [{pmin}, {pmax}] is outside the certified regime: the \
             branch constants and the correction term are validated only for \
             100 <= p <= 1.4e7"
        ));
    }
    if !(n.fract() == 0.0 && n >= 2.0) {
        return Err(format!("scan point count must be an integer >= 2; got {n}"));
    }
    let n = n as usize;

    let branches = source.branches();
    let rows: Vec<JLogBound> = par::par_map(runge::log_spaced(pmin, pmax, n), |p| {
        runge::j_log_bound_with(p, &branches, runge::DEFAULT_C0, source)
            .expect("grid points stay inside the validated regime")
    });
    let worst = rows
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .expect("n >= 2");
    let all_ok = rows.iter().all(|r| r.headline_ok);
    let aggregate = ScanAggregate {
        source: source.label(),
        pmin,
        pmax,
        n,
        all_headline_ok: all_ok,
        worst_margin: worst.margin,
        worst_p: worst.p,
        ledger: vec![LedgerEntry::bounded(
            "scan_min_margin_vs_zero",
            0.0,
            worst.margin,
            all_ok,
        )],
        rows,
    };

    // The scan always persists its aggregate; fall back to the working
    // directory when no output directory is configured.
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let name = format!("runge_scan_{}.json", source.label());
    write_file(Some(&dir), &name, &report::to_canonical_json(&aggregate))?;
    if csv {
        let mut text = String::from("p,bound,seven_sqrt_p,margin,headline_ok\n");
        for r in &aggregate.rows {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                r.p, r.bound, r.seven_sqrt_p, r.margin, r.headline_ok
            ));
        }
        write_file(
            Some(&dir),
            &format!("runge_scan_{}.csv", source.label()),
            text.as_bytes(),
        )?;
    }
    println!(
        "scan [{pmin}, {pmax}] n={n} constants={}: all_headline_ok={all_ok} \
         worst margin {:.6} at p = {:.1} -> {}",
        source.label(),
        aggregate.worst_margin,
        aggregate.worst_p,
        dir.join(&name).display()
    );
    Ok(exit_flag(all_ok))
}

fn trim_float(p: f64) -> String {
    if p.fract() == 0.0 && p.abs() < 1e15 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

#[derive(Serialize)]
struct BundleConfig {
    mode: &'static str,
    constants: &'static str,
    seed: u64,
    groups_primes: Vec<u32>,
    cusp_primes: Vec<u32>,
    unit_prime: u32,
    unit_slots: usize,
    runge_primes: Vec<f64>,
}

#[derive(Serialize)]
struct VerificationBundle {
    config: BundleConfig,
    groups: Vec<GroupsReport>,
    cusps: Vec<CuspReport>,
    unit: UnitReport,
    runge: Vec<RungeReport>,
    threshold: ThresholdJson,
    /// Every closed-form comparison from every section, exactly once, with
    /// the section and prime recorded in the quantity.
    ledger: Vec<LedgerEntry>,
    overall_pass: bool,
}

fn prefixed(ledger: &[LedgerEntry], tag: &str) -> Vec<LedgerEntry> {
    ledger
        .iter()
        .map(|e| LedgerEntry {
            quantity: format!("{tag}.{}", e.quantity),
            ..e.clone()
        })
        .collect()
}

fn cmd_all(cli: &Cli, out: Option<&Path>) -> Result<u8, String> {
    let config = BundleConfig {
        mode: cli.mode.label(),
        constants: cli.constants.to_source().label(),
        seed: cli.seed,
        groups_primes: vec![11, 13, 17, 23, 29],
        cusp_primes: vec![5, 7, 11, 13],
        unit_prime: 11,
        unit_slots: 23,
        runge_primes: vec![100.0, 10007.0, 1.0e6, 1.4e7],
    };
    let source = cli.constants.to_source();
    let mut ledger: Vec<LedgerEntry> = Vec::new();
    let mut pass = true;
    let mut inconclusive = false;

    let mut groups = Vec::new();
    for &p in &config.groups_primes {
        let ctx = PrimeContext::new(p).map_err(|e| e.to_string())?;
        let rep = report::groups_report(&ctx, N_CONJUGATORS, cli.seed);
        pass &= rep.all_passed;
        ledger.extend(prefixed(&rep.ledger, &format!("groups[p={p}]")));
        groups.push(rep);
    }

    let mut cusps = Vec::new();
    for &p in &config.cusp_primes {
        let ctx = PrimeContext::new(p).map_err(|e| e.to_string())?;
        let mut labels = vec!["x0", "sp", "sp+", "ns", "ns+", "Hp"];
        if p % 3 == 2 {
            labels.insert(5, "G");
        }
        for label in labels {
            let kind = SubgroupKind::from_label(label).expect("fixed labels");
            let table = nscartan::cusps::enumerate_cusps(&ctx, &build_subgroup(&ctx, kind))
                .map_err(|e| e.to_string())?;
            let rep = report::cusp_report(&table);
            pass &= ledger_passes(&rep.ledger);
            ledger.extend(prefixed(&rep.ledger, &format!("cusps[p={p},{label}]")));
            cusps.push(rep);
        }
    }

    let ctx = PrimeContext::new(config.unit_prime).map_err(|e| e.to_string())?;
    let unit = report::unit_report(&ctx, config.unit_slots, cli.mode.to_mode(), 20, cli.seed)
        .map_err(|e| e.to_string())?;
    pass &= unit.all_passed;
    inconclusive |= unit.inconclusive;
    ledger.extend(prefixed(&unit.ledger, &format!("unit[p={}]", config.unit_prime)));

    let mut runge_reports = Vec::new();
    for &p in &config.runge_primes {
        let bound = runge::j_log_bound(p, source).map_err(|e| e.to_string())?;
        let rep = report::runge_report(&bound);
        pass &= bound.headline_ok;
        ledger.extend(prefixed(
            &rep.ledger,
            &format!("runge[p={},{}]", trim_float(p), source.label()),
        ));
        runge_reports.push(rep);
    }

    let threshold = report::threshold_report(&runge::threshold());
    pass &= threshold.consistent;
    ledger.extend(prefixed(&threshold.ledger, "threshold"));

    let bundle = VerificationBundle {
        config,
        groups,
        cusps,
        unit,
        runge: runge_reports,
        threshold,
        ledger,
        overall_pass: pass && !inconclusive,
    };
    emit(out, "all.json", &bundle)?;
    Ok(if inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        exit_flag(pass)
    })
}
