use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use roadsense::config::{load_config, Overrides, API_KEY_ENV};
use roadsense::error::{exit_code, ErrorKind, StageContext, StageError};
use roadsense::geojson::{export_geojson, parse_tracts, ExportMode};
use roadsense::labels_csv::parse_labels;
use roadsense::netfile::{read_network, write_network};
use roadsense::osm::parse_osm;
use roadsense::pipeline::{
    coverage_json, fetch_into, make_plan, run_pipeline, segment_network, write_atomic, RunStatus, COVERAGE_JSON,
};
use roadsense::streetview::mock::{MockFixture, MockServer};
use roadsense::streetview::{ClientConfig, Clock, FixedClock, SystemClock, UreqTransport, DEFAULT_BASE_URL};
use roadsense::study::{
    regression_rows, regression_table, render_text, summary_table, unresolved_table, LabelledSample, QuintileBasis,
};
use roadsense::tables::{
    consensus_table, export_csv, plan_table, read_consensus, read_queries, read_segments, segments_table, Table,
};
use roadsense_core::analysis::{build_design, expected_incidents, ols_fit, summarize_city, Covariance, Factor};
use roadsense_core::coverage::estimate_coverage;
use roadsense_core::labels::{aggregate, aggregate_with_qc, score_workers, Attribute};
use roadsense_core::sample::{sample_points, SamplePlan};
use roadsense_core::HighwayClass;

#[derive(Parser)]
#[command(name = "roadsense", version, about = "Measure road condition from sampled street-level imagery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an OSM XML extract into a network file
    Ingest {
        #[arg(long)]
        osm: PathBuf,
        #[arg(long)]
        city: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cut the selected road classes into fixed-length segments
    Segment {
        #[arg(long)]
        network: PathBuf,
        /// Comma-separated highway classes
        #[arg(long, default_value = "trunk,primary,secondary,tertiary")]
        classes: String,
        #[arg(long, default_value_t = 500.0)]
        target_m: f64,
        /// Skip ways shorter than 1 m instead of failing
        #[arg(long)]
        skip_degenerate: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a seeded random sample of segments
    Sample {
        #[arg(long)]
        segments: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Allocate the sample across highway classes proportionally
        #[arg(long)]
        stratify_by_class: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query imagery at every sampled start point (resumable)
    Fetch(FetchArgs),
    /// Estimate coverage from a queries table
    Coverage {
        #[arg(long)]
        queries: PathBuf,
        /// Also write the estimate as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crowdsourced label batches
    #[command(subcommand)]
    Labels(LabelsCommand),
    /// Per-city condition proportions
    Summarize {
        /// Consensus table; repeat together with --city for several cities
        #[arg(long, required = true)]
        consensus: Vec<PathBuf>,
        #[arg(long, required = true)]
        city: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linear probability model of one attribute on categorical factors
    Regress(RegressArgs),
    /// Write a plan as GeoJSON for plotting
    Export {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value = "points")]
        mode: ExportMode,
        /// Network file used to recover full segment shapes in lines mode
        #[arg(long)]
        network: Option<PathBuf>,
        /// Segment length the plan was cut with (lines mode with --network)
        #[arg(long, default_value_t = 500.0)]
        target_m: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run ingest, segment, sample, fetch and coverage for one city
    Run(RunArgs),
    /// Expected incidents on a journey: rate x journey_km / capture_km
    Incidents {
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        journey_km: f64,
        #[arg(long, default_value_t = 0.5)]
        capture_km: f64,
    },
    /// Serve a mock imagery API from a fixture file until interrupted
    ServeMock {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long, default_value_t = 8089)]
        port: u16,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum LabelsCommand {
    /// Validate a batch and report what was read
    Parse {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Agreement of each worker with the provisional consensus
    Score {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        qc: QcArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Majority verdict per segment
    Aggregate {
        #[arg(long = "in", required = true)]
        input: Vec<PathBuf>,
        /// Drop flagged workers and recompute once
        #[arg(long)]
        exclude_flagged: bool,
        #[command(flatten)]
        qc: QcArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct QcArgs {
    #[arg(long, default_value_t = roadsense_core::labels::DEFAULT_AGREEMENT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = roadsense_core::labels::DEFAULT_MIN_OVERLAP)]
    min_overlap: usize,
}

#[derive(Args)]
struct FetchArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Directory for queries.csv and images/
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value = DEFAULT_BASE_URL)]
    base_url: String,
    #[arg(long, default_value_t = 4)]
    max_concurrency: usize,
    /// Requests per second; 0 disables the limit
    #[arg(long, default_value_t = 10.0)]
    rate_per_s: f64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    #[arg(long, default_value_t = 200)]
    backoff_ms: u64,
    /// Only check availability, do not download images
    #[arg(long)]
    no_images: bool,
    /// Timestamp to record instead of the wall clock
    #[arg(long)]
    fixed_clock: Option<String>,
}

#[derive(Args)]
struct RegressArgs {
    /// Attribute used as the 0/1 outcome
    #[arg(long)]
    outcome: String,
    /// Comma-separated factors: road_class, city, income_quintile
    #[arg(long)]
    factors: String,
    /// Consensus table; repeat together with --plan
    #[arg(long, required = true)]
    consensus: Vec<PathBuf>,
    /// Plan the consensus images were sampled from, one per --consensus
    #[arg(long, required = true)]
    plan: Vec<PathBuf>,
    /// Tract polygons with per-capita income (GeoJSON)
    #[arg(long)]
    tracts: Option<PathBuf>,
    /// Baseline level, as factor=level; repeatable
    #[arg(long)]
    baseline: Vec<String>,
    /// HC1 heteroskedasticity-consistent standard errors
    #[arg(long)]
    robust: bool,
    /// Estimate quintile cuts from distinct tracts rather than segments
    #[arg(long)]
    by_tract: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    city: Option<String>,
    #[arg(long)]
    osm: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    classes: Option<String>,
    #[arg(long)]
    target_m: Option<f64>,
    #[arg(long)]
    sample_n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    max_concurrency: Option<u64>,
    #[arg(long)]
    rate_per_s: Option<f64>,
    #[arg(long)]
    retries: Option<u64>,
    #[arg(long)]
    backoff_ms: Option<u64>,
    #[arg(long)]
    fixed_clock: Option<String>,
    #[arg(long)]
    stratify_by_class: bool,
    #[arg(long)]
    skip_degenerate: bool,
    #[arg(long)]
    no_images: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        use toml::Value;
        let mut o = Overrides::new();
        let mut set = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                o.insert(k.to_string(), v);
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| Value::from(p.display().to_string()));
        // u64 values above i64::MAX travel as strings
        let int = |v: Option<u64>| v.map(|v| i64::try_from(v).map_or_else(|_| Value::from(v.to_string()), Value::from));
        set("city", self.city.clone().map(Value::from));
        set("osm_path", path(&self.osm));
        set("out_dir", path(&self.out_dir));
        set("classes", self.classes.clone().map(Value::from));
        set("target_m", self.target_m.map(Value::from));
        set("sample_n", int(self.sample_n));
        set("seed", int(self.seed));
        set("base_url", self.base_url.clone().map(Value::from));
        set("max_concurrency", int(self.max_concurrency));
        set("rate_per_s", self.rate_per_s.map(Value::from));
        set("retries", int(self.retries));
        set("backoff_ms", int(self.backoff_ms));
        set("fixed_clock", self.fixed_clock.clone().map(Value::from));
        set("stratify_by_class", self.stratify_by_class.then_some(Value::Boolean(true)));
        set("skip_degenerate", self.skip_degenerate.then_some(Value::Boolean(true)));
        set("download_images", self.no_images.then_some(Value::Boolean(false)));
        o
    }
}

fn read(path: &Path, stage: &'static str) -> Result<Vec<u8>, StageError> {
    std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .stage(stage, ErrorKind::Input)
}

fn write(path: &Path, bytes: &[u8], stage: &'static str) -> Result<(), StageError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))
            .stage(stage, ErrorKind::Input)?;
    }
    write_atomic(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .stage(stage, ErrorKind::Input)
}

fn parse_classes(s: &str) -> BTreeSet<HighwayClass> {
    s.split(',')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(HighwayClass::from_tag)
        .collect()
}

fn plan_from(segments: Vec<roadsense_core::segment::RoadSegment>) -> SamplePlan {
    SamplePlan {
        seed: 0,
        requested_n: segments.len(),
        population_n: segments.len(),
        segments,
        exhausted_population: false,
    }
}

fn emit(table: &Table, format: Format, out: Option<&Path>, stage: &'static str) -> Result<(), StageError> {
    let bytes = match format {
        Format::Text => render_text(table).into_bytes(),
        Format::Csv => export_csv(table),
    };
    match out {
        Some(path) => write(path, &bytes, stage),
        None => std::io::stdout().write_all(&bytes).stage(stage, ErrorKind::Input),
    }
}

fn labels(cmd: LabelsCommand) -> anyhow::Result<()> {
    let load = |path: &Path| -> Result<_, StageError> {
        let parsed = parse_labels(&read(path, "labels")?)
            .with_context(|| format!("parsing {}", path.display()))
            .stage("labels", ErrorKind::Input)?;
        if parsed.coerced_markings_clear > 0 {
            log::warn!(
                "{}: {} markings_clear answers set to na because no markings were present",
                path.display(),
                parsed.coerced_markings_clear
            );
        }
        Ok(parsed)
    };
    match cmd {
        LabelsCommand::Parse { input } => {
            let parsed = load(&input)?;
            let workers: BTreeSet<&str> = parsed.records.iter().map(|r| r.worker_id.as_str()).collect();
            let segments: BTreeSet<&str> = parsed.records.iter().map(|r| r.segment_id.as_str()).collect();
            println!(
                "{} records, {} workers, {} segments, {} markings_clear coerced to na",
                parsed.records.len(),
                workers.len(),
                segments.len(),
                parsed.coerced_markings_clear
            );
        }
        LabelsCommand::Score { input, qc, out } => {
            let parsed = load(&input)?;
            let report = score_workers(&parsed.records, qc.threshold, qc.min_overlap);
            if report.inert {
                log::warn!("no segment has more than one worker; quality control is inert");
            }
            let mut t = Table::new(["worker_id", "n_labels", "agreement", "flagged"]);
            for s in &report.scores {
                t.push(vec![
                    s.worker_id.clone(),
                    s.n_labels.to_string(),
                    format!("{:.3}", s.agreement),
                    s.flagged.to_string(),
                ]);
            }
            let format = if out.is_some() { Format::Csv } else { Format::Text };
            emit(&t, format, out.as_deref(), "labels")?;
        }
        LabelsCommand::Aggregate {
            input,
            exclude_flagged,
            qc,
            out,
        } => {
            let mut records = Vec::new();
            for path in &input {
                records.extend(load(path)?.records);
            }
            let agg = if exclude_flagged {
                let (report, agg) = aggregate_with_qc(&records, qc.threshold, qc.min_overlap);
                let flagged = report.flagged();
                if !flagged.is_empty() {
                    eprintln!("excluded {} flagged workers: {}", flagged.len(), flagged.into_iter().collect::<Vec<_>>().join(", "));
                }
                agg
            } else {
                aggregate(&records, &BTreeSet::new())
            };
            if agg.omitted_segments > 0 {
                log::warn!("{} segments had no remaining labels", agg.omitted_segments);
            }
            write(&out, &export_csv(&consensus_table(&agg.labels)), "labels")?;
            println!("{} consensus labels written to {}", agg.labels.len(), out.display());
        }
    }
    Ok(())
}

fn regress(args: RegressArgs) -> anyhow::Result<()> {
    let outcome = Attribute::from_name(&args.outcome)
        .with_context(|| {
            let names: Vec<_> = Attribute::ALL.iter().map(Attribute::name).collect();
            format!("unknown outcome `{}` (expected one of {})", args.outcome, names.join(", "))
        })
        .stage("regress", ErrorKind::Config)?;
    let factors = args
        .factors
        .split(',')
        .map(str::trim)
        .map(|f| Factor::from_name(f).with_context(|| format!("unknown factor `{f}` (expected road_class, city or income_quintile)")))
        .collect::<anyhow::Result<Vec<_>>>()
        .stage("regress", ErrorKind::Config)?;
    if args.consensus.len() != args.plan.len() {
        return Err(StageError::new(
            "regress",
            ErrorKind::Config,
            anyhow::anyhow!("give one --plan per --consensus ({} vs {})", args.plan.len(), args.consensus.len()),
        )
        .into());
    }
    let mut baselines = BTreeMap::new();
    for b in &args.baseline {
        let parsed = b
            .split_once('=')
            .and_then(|(f, level)| Some((Factor::from_name(f)?, level.to_string())))
            .with_context(|| format!("baseline `{b}` must look like factor=level"))
            .stage("regress", ErrorKind::Config)?;
        baselines.insert(parsed.0, parsed.1);
    }

    let mut loaded = Vec::new();
    for (c, p) in args.consensus.iter().zip(&args.plan) {
        let consensus = read_consensus(&read(c, "regress")?)
            .with_context(|| format!("parsing {}", c.display()))
            .stage("regress", ErrorKind::Input)?;
        let plan = read_segments(&read(p, "regress")?)
            .with_context(|| format!("parsing {}", p.display()))
            .stage("regress", ErrorKind::Input)?;
        loaded.push((consensus, plan));
    }
    let tracts = match &args.tracts {
        Some(path) => Some(
            parse_tracts(&read(path, "regress")?)
                .with_context(|| format!("parsing {}", path.display()))
                .stage("regress", ErrorKind::Input)?,
        ),
        None => None,
    };
    let samples: Vec<LabelledSample<'_>> = loaded
        .iter()
        .map(|(consensus, plan)| LabelledSample { consensus, plan })
        .collect();
    let basis = if args.by_tract {
        QuintileBasis::Tracts
    } else {
        QuintileBasis::Segments
    };
    let input = regression_rows(&samples, outcome, &factors, tracts.as_deref(), basis).stage("regress", ErrorKind::Analysis)?;
    let design = build_design(&input.rows, &factors, &baselines).stage("regress", ErrorKind::Analysis)?;
    let covariance = if args.robust { Covariance::Hc1 } else { Covariance::Classical };
    let fit = ols_fit(&design.matrix, &design.response, &design.names, covariance).stage("regress", ErrorKind::Analysis)?;

    emit(&regression_table(&fit), args.format, args.out.as_deref(), "regress")?;
    eprintln!(
        "n = {}, R^2 = {:.4}, {} standard errors; dropped {} unresolved, {} not in plan, {} outside tracts",
        fit.n,
        fit.r_squared,
        if args.robust { "HC1" } else { "classical" },
        input.dropped_unresolved,
        input.dropped_unplanned,
        input.dropped_no_tract
    );
    for c in &design.coding {
        eprintln!("baseline {}={}", c.factor, c.baseline);
    }
    if let Some(b) = &input.binning {
        for (i, label) in b.bin_labels.iter().enumerate() {
            eprintln!("{label}: income {}", b.describe(i));
        }
    }
    Ok(())
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let env_key = std::env::var(API_KEY_ENV).ok();
    let config = load_config(args.config.as_deref(), &args.overrides(), env_key)?;
    let transport = UreqTransport::default();
    let report = run_pipeline(&config, &transport)?;
    match report.status {
        RunStatus::UpToDate => println!("up to date: {} (no queries issued)", config.out_dir.display()),
        RunStatus::Completed => {
            println!(
                "{} segments, {} sampled, {} queried, {} reused",
                report.segments, report.sampled, report.fetched, report.reused
            );
            if let Some(c) = report.coverage {
                println!(
                    "coverage {:.3} ({} of {}), 95% CI [{:.3}, {:.3}]",
                    c.proportion, c.successes, c.total, c.ci_low, c.ci_high
                );
            }
            println!("artifacts in {}", config.out_dir.display());
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { osm, city, out } => {
            let (net, stats) = parse_osm(&read(&osm, "ingest")?, &city)
                .with_context(|| format!("parsing {}", osm.display()))
                .stage("ingest", ErrorKind::Input)?;
            if stats.duplicate_nodes > 0 {
                log::warn!("{} node ids were defined more than once; the last definition was kept", stats.duplicate_nodes);
            }
            write(&out, write_network(&net).as_bytes(), "ingest")?;
            println!(
                "{} nodes, {} highway ways ({} untagged ways and {} relations ignored)",
                stats.nodes, stats.highway_ways, stats.dropped_ways, stats.relations
            );
        }
        Command::Segment {
            network,
            classes,
            target_m,
            skip_degenerate,
            out,
        } => {
            let text = String::from_utf8(read(&network, "segment")?).stage("segment", ErrorKind::Input)?;
            let net = read_network(&text).stage("segment", ErrorKind::Input)?;
            let chunked = segment_network(&net, &parse_classes(&classes), target_m, skip_degenerate)
                .stage("segment", ErrorKind::Input)?;
            if !chunked.skipped.is_empty() {
                log::warn!("skipped degenerate ways: {:?}", chunked.skipped);
            }
            write(&out, &export_csv(&segments_table(&chunked.segments)), "segment")?;
            println!("{} segments", chunked.segments.len());
        }
        Command::Sample {
            segments,
            n,
            seed,
            stratify_by_class,
            out,
        } => {
            let population = read_segments(&read(&segments, "sample")?).stage("sample", ErrorKind::Input)?;
            let plan = make_plan(&population, n, seed, stratify_by_class);
            if plan.exhausted_population {
                log::warn!("requested {n} segments but only {} exist; using all", plan.population_n);
            }
            write(&out, &export_csv(&plan_table(&plan)), "sample")?;
            println!("{} of {} segments sampled with seed {seed}", plan.len(), plan.population_n);
        }
        Command::Fetch(a) => {
            let plan = plan_from(read_segments(&read(&a.plan, "fetch")?).stage("fetch", ErrorKind::Input)?);
            let client = ClientConfig {
                base_url: a.base_url,
                api_key: std::env::var(API_KEY_ENV).unwrap_or_default(),
                max_concurrency: a.max_concurrency,
                rate_per_s: a.rate_per_s,
                retries: a.retries,
                backoff_ms: a.backoff_ms,
                out_dir: (!a.no_images).then(|| a.out_dir.clone()),
                ..ClientConfig::default()
            };
            let clock: Box<dyn Clock> = match a.fixed_clock {
                Some(t) => Box::new(FixedClock(t)),
                None => Box::new(SystemClock),
            };
            let out = fetch_into(&a.out_dir, &sample_points(&plan), &client, &UreqTransport::default(), clock.as_ref())?;
            println!("{} queried, {} reused", out.fetched, out.reused);
        }
        Command::Coverage { queries, out } => {
            let records = read_queries(&read(&queries, "coverage")?).stage("coverage", ErrorKind::Input)?;
            let est = estimate_coverage(&records).stage("coverage", ErrorKind::Analysis)?;
            println!(
                "coverage {} ({} of {} usable queries), 95% CI [{:.4}, {:.4}]",
                est.proportion, est.successes, est.total, est.ci_low, est.ci_high
            );
            if let Some(out) = out {
                let path = if out.is_dir() { out.join(COVERAGE_JSON) } else { out };
                write(&path, coverage_json(&est, &records).as_bytes(), "coverage")?;
            }
        }
        Command::Labels(cmd) => labels(cmd)?,
        Command::Summarize {
            consensus,
            city,
            format,
            out,
        } => {
            if consensus.len() != city.len() {
                bail!(StageError::new(
                    "summarize",
                    ErrorKind::Config,
                    anyhow::anyhow!("give one --city per --consensus ({} vs {})", city.len(), consensus.len()),
                ));
            }
            let mut summaries = Vec::new();
            for (path, name) in consensus.iter().zip(&city) {
                let labels = read_consensus(&read(path, "summarize")?)
                    .with_context(|| format!("parsing {}", path.display()))
                    .stage("summarize", ErrorKind::Input)?;
                summaries.push(summarize_city(&labels, name).stage("summarize", ErrorKind::Analysis)?);
            }
            emit(&summary_table(&summaries), format, out.as_deref(), "summarize")?;
            if matches!(format, Format::Text) && out.is_none() {
                println!("\nunresolved verdicts (excluded above):");
                print!("{}", render_text(&unresolved_table(&summaries)));
            }
        }
        Command::Regress(args) => regress(args)?,
        Command::Export {
            plan,
            mode,
            network,
            target_m,
            out,
        } => {
            let mut plan = plan_from(read_segments(&read(&plan, "export")?).stage("export", ErrorKind::Input)?);
            if let (ExportMode::Lines, Some(path)) = (mode, network) {
                let text = String::from_utf8(read(&path, "export")?).stage("export", ErrorKind::Input)?;
                let net = read_network(&text).stage("export", ErrorKind::Input)?;
                let classes: BTreeSet<HighwayClass> = plan.segments.iter().map(|s| s.highway_class.clone()).collect();
                let full = segment_network(&net, &classes, target_m, true).stage("export", ErrorKind::Input)?;
                let shapes: HashMap<String, _> = full.segments.into_iter().map(|s| (s.segment_id, s.geometry)).collect();
                for s in &mut plan.segments {
                    s.geometry = shapes.get(&s.segment_id).cloned().flatten();
                }
            }
            write(&out, export_geojson(&plan, mode).as_bytes(), "export")?;
            println!("{} features written to {}", plan.len(), out.display());
        }
        Command::Run(args) => run(args)?,
        Command::Incidents {
            rate,
            journey_km,
            capture_km,
        } => {
            let n = expected_incidents(rate, journey_km, capture_km).stage("incidents", ErrorKind::Analysis)?;
            // 0.23 * 10 is 2.3000000000000003 in binary; print what a reader expects
            let text = format!("{n:.9}");
            println!("{}", text.trim_end_matches('0').trim_end_matches('.'));
            eprintln!(
                "note: computed as rate x journey_km / capture_km. With a 0.5 km capture, 0.23 x 10 / 0.5 = 4.6; \
                 a figure of 2.3 per 10 km corresponds to a 1 km capture."
            );
        }
        Command::ServeMock { fixture, port } => {
            let f = MockFixture::from_json(&read(&fixture, "serve-mock")?)
                .map_err(anyhow::Error::msg)
                .stage("serve-mock", ErrorKind::Input)?;
            let server = MockServer::bind(&format!("127.0.0.1:{port}"), f).stage("serve-mock", ErrorKind::Network)?;
            println!("serving mock imagery API at {}", server.base_url());
            server.wait();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
