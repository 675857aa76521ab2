//! `heritage-forge`: catalog records to a validated CIDOC CRM graph.

mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use heritage_forge::enrich::{enrich_graph, load_thesaurus, EnrichPolicy, Thesaurus};
use heritage_forge::mapping::{check_base, map_record, parse_rules, RuleSet};
use heritage_forge::ontology::{load_ontology, validate_graph, Ontology, Severity, ValidationReport};
use heritage_forge::provenance::{annotate_all, parse_predictions};
use heritage_forge::records::parse_records;
use heritage_forge::store::{execute, parse_ntriples, parse_query, serialize_ntriples, Graph};
use heritage_forge::vocab::{DEFAULT_BASE, MINT_HASH, RDF_TYPE, RECONCILED_FROM};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use config::FileConfig;

/// Exit status when validation reports errors (or warnings under `--strict`).
const EXIT_INVALID: u8 = 1;
/// Exit status for unreadable or malformed input.
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "heritage-forge",
    version,
    about = "Museum catalog records to a CIDOC CRM knowledge graph"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Base namespace for minted IRIs.
    #[arg(long, global = true, env = "HERITAGE_FORGE_BASE")]
    base: Option<String>,
    /// TOML file with defaults for any of these options.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Ontology definition (JSON); the bundled one by default.
    #[arg(long, global = true)]
    ontology: Option<PathBuf>,
    /// Treat warnings as errors for the exit status.
    #[arg(long, global = true)]
    strict: bool,
    /// One JSON object per log line on stderr.
    #[arg(long, global = true)]
    log_json: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Map records, optionally enrich, validate and export N-Triples.
    Convert {
        records: PathBuf,
        /// Rule documents, applied in order.
        #[arg(short, long = "rules")]
        rules: Vec<PathBuf>,
        /// Thesaurus to reconcile vocabulary terms against.
        #[arg(short, long)]
        thesaurus: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Institution for record documents that do not name one.
        #[arg(long)]
        institution: Option<String>,
        /// Language tag for literals where the rules set none.
        #[arg(long)]
        language: Option<String>,
        /// Worker threads for mapping; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Add classifier predictions with their provenance.
    Annotate {
        graph: PathBuf,
        predictions: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Thesaurus for resolving prediction labels.
        #[arg(short, long)]
        thesaurus: Option<PathBuf>,
    },
    /// Check a graph against the ontology.
    Validate { graph: PathBuf },
    /// Run a query and print the bindings as TSV.
    Query {
        graph: PathBuf,
        #[arg(short, long)]
        query: PathBuf,
    },
    /// Triple, node and class counts.
    Stats { graph: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli.global);
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn init_logging(opts: &GlobalOpts) {
    let level = match opts.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let mut builder = env_logger::Builder::new();
    builder.filter_level(level).parse_default_env();
    if opts.log_json {
        builder.format(|buf, record| {
            let line = serde_json::json!({
                "level": record.level().as_str(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        });
    }
    let _ = builder.try_init();
}

/// Options after merging flags, environment and the config file.
struct Settings {
    base: String,
    ontology: Ontology,
    ontology_path: Option<PathBuf>,
    strict: bool,
    file: FileConfig,
}

impl Settings {
    fn resolve(opts: &GlobalOpts) -> Result<Settings> {
        let file = match &opts.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let base = opts
            .base
            .clone()
            .or_else(|| file.base.clone())
            .unwrap_or_else(|| DEFAULT_BASE.to_string());
        check_base(&base).with_context(|| format!("base namespace {base:?}"))?;
        let ontology_path = opts.ontology.clone().or_else(|| file.ontology.clone());
        let ontology = match &ontology_path {
            Some(path) => load_ontology(&read(path)?).with_context(|| format!("{}", path.display()))?,
            None => Ontology::builtin().clone(),
        };
        Ok(Settings {
            base,
            ontology,
            ontology_path,
            strict: opts.strict || file.strict.unwrap_or(false),
            file,
        })
    }

    /// Exit status for a validation outcome.
    fn status(&self, report: &ValidationReport) -> u8 {
        if report.has_errors() || (self.strict && report.warning_count() > 0) {
            EXIT_INVALID
        } else {
            0
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let settings = Settings::resolve(&cli.global)?;
    match cli.command {
        Command::Convert {
            records,
            rules,
            thesaurus,
            output,
            institution,
            language,
            workers,
        } => {
            let rules = if rules.is_empty() {
                settings.file.rules.clone()
            } else {
                rules
            };
            let opts = ConvertOpts {
                thesaurus: thesaurus.or_else(|| settings.file.thesaurus.clone()),
                institution: institution.or_else(|| settings.file.institution.clone()),
                language: language.or_else(|| settings.file.language.clone()),
                workers: workers.or(settings.file.workers).unwrap_or(0),
            };
            convert(&settings, &records, &rules, &output, &opts)
        }
        Command::Annotate {
            graph,
            predictions,
            output,
            thesaurus,
        } => annotate(
            &settings,
            &graph,
            &predictions,
            &output,
            thesaurus.or_else(|| settings.file.thesaurus.clone()),
        ),
        Command::Validate { graph } => {
            let g = load_graph(&graph)?;
            let report = validate_graph(&settings.ontology, &g);
            let mut out = String::new();
            for v in &report.violations {
                writeln!(out, "{v}")?;
            }
            writeln!(
                out,
                "{} errors, {} warnings",
                report.error_count(),
                report.warning_count()
            )?;
            print!("{out}");
            Ok(settings.status(&report))
        }
        Command::Query { graph, query } => {
            let g = load_graph(&graph)?;
            let q = parse_query(&read(&query)?).with_context(|| format!("{}", query.display()))?;
            print!("{}", execute(&g, &q).to_tsv());
            Ok(0)
        }
        Command::Stats { graph } => {
            print!("{}", stats(&load_graph(&graph)?));
            Ok(0)
        }
    }
}

struct ConvertOpts {
    thesaurus: Option<PathBuf>,
    institution: Option<String>,
    language: Option<String>,
    workers: usize,
}

fn convert(
    settings: &Settings,
    records_path: &Path,
    rule_paths: &[PathBuf],
    output: &Path,
    opts: &ConvertOpts,
) -> Result<u8> {
    if rule_paths.is_empty() {
        bail!("no rule documents given (use -r or `rules` in the config file)");
    }
    let ont = &settings.ontology;
    let mut inputs = vec![records_path.to_path_buf()];
    let mut rules = RuleSet::default();
    for path in rule_paths {
        let set = parse_rules(&read(path)?, ont).with_context(|| format!("{}", path.display()))?;
        rules.merge(set).with_context(|| format!("{}", path.display()))?;
        inputs.push(path.clone());
    }
    if let Some(lang) = &opts.language {
        rules.set_default_language(lang)?;
    }

    let parsed = parse_records(&read(records_path)?, opts.institution.as_deref())
        .with_context(|| format!("{}", records_path.display()))?;
    for (i, p) in parsed.iter().enumerate() {
        for w in &p.warnings {
            log::warn!("{} record #{i} ({}): {w}", records_path.display(), p.record.record_id);
        }
    }
    let warnings: usize = parsed.iter().map(|p| p.warnings.len()).sum();

    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build()?;
    let mapped = pool.install(|| {
        parsed
            .par_iter()
            .map(|p| map_record(&rules, &p.record, &settings.base, ont))
            .collect::<Result<Vec<_>, _>>()
    })?;
    // Single writer: merge in record order.
    let mut graph = Graph::new();
    let mut fallbacks = 0;
    for (part, log) in &mapped {
        graph.extend_from(part);
        for f in log.fallbacks() {
            log::info!(
                "{}: no rule for field {:?}; kept as an observation note",
                log.object,
                f.label
            );
            fallbacks += 1;
        }
    }
    log::info!(
        "mapped {} records, {} triples, {fallbacks} unmapped fields",
        mapped.len(),
        graph.len()
    );

    if let Some(path) = &opts.thesaurus {
        let th = load_thesaurus(&read(path)?).with_context(|| format!("{}", path.display()))?;
        let (enriched, elog) = enrich_graph(&graph, &th, &EnrichPolicy::default_for(ont));
        log::info!(
            "enrichment: {} matched, {} ambiguous, {} unmatched",
            elog.matched().count(),
            elog.ambiguous().count(),
            elog.unmatched().count()
        );
        for e in elog.ambiguous() {
            log::warn!("{}: label {:?} is ambiguous: {:?}", e.node, e.label, e.result);
        }
        graph = enriched;
        inputs.push(path.clone());
    }

    let report = validate_graph(ont, &graph);
    report_violations(&report);
    write_export(settings, output, &graph, &inputs, false)?;
    let status = settings.status(&report);
    if status == 0 && settings.strict && warnings > 0 {
        return Ok(EXIT_INVALID);
    }
    Ok(status)
}

fn annotate(
    settings: &Settings,
    graph_path: &Path,
    predictions: &Path,
    output: &Path,
    thesaurus: Option<PathBuf>,
) -> Result<u8> {
    let g = load_graph(graph_path)?;
    let parsed = parse_predictions(&read(predictions)?).with_context(|| format!("{}", predictions.display()))?;
    let mut inputs = vec![graph_path.to_path_buf(), predictions.to_path_buf()];
    let th = match &thesaurus {
        Some(path) => {
            inputs.push(path.clone());
            load_thesaurus(&read(path)?).with_context(|| format!("{}", path.display()))?
        }
        None => Thesaurus::from_concepts(Vec::new()),
    };
    for r in &parsed.rejected {
        log::error!("{}: {r}", predictions.display());
    }
    let (out, fragments, errors) = annotate_all(&g, &parsed.predictions, &settings.base, &th, &settings.ontology);
    for (i, e) in &errors {
        log::error!("{}: prediction {i}: {e}", predictions.display());
    }
    log::info!(
        "annotated {} predictions, {} triples added",
        fragments.len(),
        out.len() - g.len()
    );

    let report = validate_graph(&settings.ontology, &out);
    report_violations(&report);
    write_export(settings, output, &out, &inputs, true)?;
    if !parsed.rejected.is_empty() || !errors.is_empty() {
        return Ok(EXIT_INVALID);
    }
    Ok(settings.status(&report))
}

fn report_violations(report: &ValidationReport) {
    for v in &report.violations {
        match v.kind.severity() {
            Severity::Error => log::error!("{v}"),
            Severity::Warning => log::warn!("{v}"),
        }
    }
    log::info!("{} errors, {} warnings", report.error_count(), report.warning_count());
}

fn stats(g: &Graph) -> String {
    let mut subjects = std::collections::BTreeSet::new();
    let mut predicates = std::collections::BTreeSet::new();
    let mut objects = std::collections::BTreeSet::new();
    let mut classes: BTreeMap<String, usize> = BTreeMap::new();
    for t in g.iter() {
        subjects.insert(t.subject);
        predicates.insert(t.predicate);
        objects.insert(t.object);
        if t.predicate.as_str() == RDF_TYPE {
            *classes.entry(t.object.lexical().to_string()).or_default() += 1;
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "triples\t{}", g.len());
    let _ = writeln!(out, "subjects\t{}", subjects.len());
    let _ = writeln!(out, "predicates\t{}", predicates.len());
    let _ = writeln!(out, "objects\t{}", objects.len());
    for (class, n) in classes {
        let _ = writeln!(out, "class\t{class}\t{n}");
    }
    out
}

// ---- files ----

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_graph(path: &Path) -> Result<Graph> {
    parse_ntriples(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Comment lines recording how the export was produced.
fn export_header(settings: &Settings, inputs: &[PathBuf], predictions: bool) -> Result<String> {
    let mut h = String::new();
    writeln!(h, "# heritage-forge {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(h, "# iri-hash: {MINT_HASH}")?;
    writeln!(h, "# base: {}", settings.base)?;
    match &settings.ontology_path {
        Some(p) => writeln!(h, "# ontology: {} sha256:{}", p.display(), sha256_file(p)?)?,
        None => writeln!(h, "# ontology: builtin")?,
    }
    for p in inputs {
        writeln!(h, "# input: {} sha256:{}", p.display(), sha256_file(p)?)?;
    }
    writeln!(
        h,
        "# reconciled-from: <{RECONCILED_FROM}> links a thesaurus concept to the term it replaced"
    )?;
    if predictions {
        writeln!(
            h,
            "# predictions: asserted in the default graph and reified as rdf:Statement with prov:wasGeneratedBy"
        )?;
    }
    Ok(h)
}

fn write_export(settings: &Settings, path: &Path, g: &Graph, inputs: &[PathBuf], predictions: bool) -> Result<()> {
    let mut text = export_header(settings, inputs, predictions)?;
    text.push_str(&serialize_ntriples(g));
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
