//! Command-line interface: `build-db`, `scan`, `batch` and `stats`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nativerisk_core::cve::{
    build_database, BuildEvent, BuildOptions, MiningOptions, DEFAULT_WINDOW,
};
use nativerisk_core::elf::DEFAULT_MIN_STRING_LEN;
use nativerisk_core::fingerprint::{parse_signatures, SignatureSet};
use nativerisk_core::pipeline::ScanOptions;
use nativerisk_core::report::{aggregate_stats, GroupKey};
use nativerisk_core::risk::RiskLevel;

use crate::dbfile::{load_database, to_bytes};
use crate::feed::ingest_feed;
use crate::metadata::load_sidecar;
use crate::report_io::{emit_app_report, stats_csv};
use crate::scan::{list_apks, load_reports, Scanner};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MEDIUM: i32 = 2;
pub const EXIT_HIGH: i32 = 3;
pub const EXIT_CRITICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "nativerisk",
    version,
    about = "Rate Android apps by the known CVEs of their native libraries"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the CVE database from NVD JSON feeds or JSONL mirror files.
    BuildDb(BuildDbArgs),
    /// Scan one APK and write its report; the exit status encodes the risk.
    Scan(ScanArgs),
    /// Scan every APK in a directory.
    Batch(BatchArgs),
    /// Count apps per risk level, grouped by year or market.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct BuildDbArgs {
    /// Feed file; repeat for several.
    #[arg(long = "feed", required = true)]
    pub feeds: Vec<PathBuf>,
    /// Signature file; the built-in set when omitted.
    #[arg(long)]
    pub signatures: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Read "before X" in descriptions as `< X` instead of `<= X`.
    #[arg(long)]
    pub strict_before: bool,
    /// Keep records scored only with CVSS v2.
    #[arg(long)]
    pub include_cvss_v2: bool,
    /// Words on each side of a version checked for before/after cues.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct ScanSettings {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long)]
    pub signatures: Option<PathBuf>,
    /// CSV with `sha256,dex_date,market`.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Scan this ABI instead of armeabi-v7a, arm64-v8a, x86_64.
    #[arg(long)]
    pub abi: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MIN_STRING_LEN, value_parser = clap::value_parser!(usize))]
    pub min_string_len: usize,
    /// RFC 3339 time stamped into reports; defaults to SOURCE_DATE_EPOCH,
    /// then the current time.
    #[arg(long)]
    pub scan_time: Option<String>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    pub apk: PathBuf,
    #[command(flatten)]
    pub settings: ScanSettings,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    pub dir: PathBuf,
    #[command(flatten)]
    pub settings: ScanSettings,
    /// Worker threads; all cores by default.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KeyArg {
    Year,
    Market,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub report_dir: PathBuf,
    #[arg(long, value_enum)]
    pub key: KeyArg,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn exit_code_for(risk: RiskLevel) -> i32 {
    match risk {
        RiskLevel::None | RiskLevel::Low => EXIT_OK,
        RiskLevel::Medium => EXIT_MEDIUM,
        RiskLevel::High => EXIT_HIGH,
        RiskLevel::Critical => EXIT_CRITICAL,
    }
}

pub fn load_signatures(path: Option<&Path>) -> Result<SignatureSet> {
    match path {
        None => Ok(SignatureSet::default_set()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_signatures(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

/// `--scan-time`, else `SOURCE_DATE_EPOCH`, else now.
pub fn resolve_scan_time(flag: Option<&str>) -> Result<DateTime<Utc>> {
    if let Some(raw) = flag {
        return Ok(DateTime::parse_from_rfc3339(raw)
            .with_context(|| format!("bad --scan-time `{raw}`"))?
            .with_timezone(&Utc));
    }
    if let Ok(raw) = std::env::var("SOURCE_DATE_EPOCH") {
        let secs: i64 = raw
            .trim()
            .parse()
            .with_context(|| format!("bad SOURCE_DATE_EPOCH `{raw}`"))?;
        return DateTime::from_timestamp(secs, 0).context("SOURCE_DATE_EPOCH out of range");
    }
    Ok(Utc::now())
}

fn require_exists(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}

fn scanner(settings: &ScanSettings) -> Result<Scanner> {
    require_exists(&settings.db, "database")?;
    if let Some(p) = &settings.signatures {
        require_exists(p, "signature file")?;
    }
    if let Some(p) = &settings.sidecar {
        require_exists(p, "sidecar")?;
    }
    let scan_time = resolve_scan_time(settings.scan_time.as_deref())?;
    let signatures = load_signatures(settings.signatures.as_deref())?;
    let database = load_database(&settings.db)
        .with_context(|| format!("loading {}", settings.db.display()))?;
    let mut scanner = Scanner::new(signatures, database, scan_time);
    if let Some(p) = &settings.sidecar {
        let (sidecar, malformed) = load_sidecar(p, scan_time.date_naive())?;
        for m in malformed {
            log::warn!("{}: {m}", p.display());
        }
        scanner.sidecar = Some(sidecar);
    }
    scanner.abi_override = settings.abi.clone();
    scanner.options = ScanOptions {
        min_string_len: settings.min_string_len.max(1),
    };
    Ok(scanner)
}

pub fn cmd_build_db(args: &BuildDbArgs) -> Result<i32> {
    for feed in &args.feeds {
        require_exists(feed, "feed")?;
    }
    let sigs = load_signatures(args.signatures.as_deref())?;
    let mut raw = Vec::new();
    for feed in &args.feeds {
        let (records, skipped) = ingest_feed(feed)?;
        for s in skipped {
            eprintln!(
                "skipped record {} in {}: {}",
                s.cve_id.as_deref().unwrap_or("?"),
                feed.display(),
                s.reason
            );
        }
        raw.extend(records);
    }
    let opts = BuildOptions {
        mining: MiningOptions {
            window: args.window,
            strict_before: args.strict_before,
        },
        include_cvss_v2: args.include_cvss_v2,
    };
    let (db, events) = build_database(&raw, &sigs, opts);
    for event in &events {
        match event {
            BuildEvent::StructuredPreferred {
                cve_id, product, ..
            } => {
                log::info!("{cve_id} {product}: structured versions used over description")
            }
            other => eprintln!("{}", describe_event(other)),
        }
    }
    std::fs::write(&args.out, to_bytes(&db))
        .with_context(|| format!("writing {}", args.out.display()))?;
    for (product, count) in db.entry_counts() {
        eprintln!("{product:<16} {count}");
    }
    eprintln!(
        "{} entries from {} records -> {}",
        db.entries().len(),
        raw.len(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn describe_event(event: &BuildEvent) -> String {
    match event {
        BuildEvent::InvalidRecord { cve_id, reason } => format!("skipped {cve_id}: {reason}"),
        BuildEvent::SkippedUnscored { cve_id } => format!("skipped {cve_id}: no CVSS subscores"),
        BuildEvent::SkippedCvssV2 { cve_id } => {
            format!("skipped {cve_id}: CVSS v2 only (use --include-cvss-v2)")
        }
        BuildEvent::PartiallyScored { cve_id } => {
            format!("{cve_id}: one subscore missing, kept as unscored")
        }
        BuildEvent::StructuredPreferred {
            cve_id, product, ..
        } => format!("{cve_id} {product}: structured versions used"),
        BuildEvent::ConflictingRelations { cve_id, product } => {
            format!("{cve_id} {product}: conflicting version relations, flagged for review")
        }
    }
}

pub fn cmd_scan(args: &ScanArgs) -> Result<i32> {
    require_exists(&args.apk, "APK")?;
    let scanner = scanner(&args.settings)?;
    let report = scanner.scan_apk(&args.apk)?;
    std::fs::create_dir_all(&args.settings.out_dir)?;
    let out = args
        .settings
        .out_dir
        .join(format!("{}.json", report.apk_id));
    std::fs::write(&out, emit_app_report(&report))
        .with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "{}: {} -> {}",
        args.apk.display(),
        report.app_risk,
        out.display()
    );
    Ok(exit_code_for(report.app_risk))
}

pub fn cmd_batch(args: &BatchArgs) -> Result<i32> {
    require_exists(&args.dir, "directory")?;
    let scanner = scanner(&args.settings)?;
    let apks = list_apks(&args.dir).with_context(|| format!("listing {}", args.dir.display()))?;
    let outcome = scanner.scan_batch(&apks, args.jobs);
    outcome.write_outputs(&args.settings.out_dir)?;
    eprintln!("{}", outcome.summary_line());
    Ok(EXIT_OK)
}

pub fn cmd_stats(args: &StatsArgs) -> Result<i32> {
    require_exists(&args.report_dir, "report directory")?;
    let reports = load_reports(&args.report_dir)?;
    if reports.is_empty() {
        bail!("no reports found in {}", args.report_dir.display());
    }
    let key = match args.key {
        KeyArg::Year => GroupKey::Year,
        KeyArg::Market => GroupKey::Market,
    };
    let table = aggregate_stats(&reports, key);
    std::fs::write(&args.out, stats_csv(&table))
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(EXIT_OK)
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::BuildDb(a) => cmd_build_db(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Stats(a) => cmd_stats(a),
    }
}
