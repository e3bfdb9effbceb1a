//! `covloop` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analyzer::{analyze_report, consolidate, contexts_from_json, contexts_to_json, HoleContext};
use crate::closure::{
    benchmark, bind_design, make_backend, run_closure, BackendChoice, ClosureConfig, ClosureError, Design, HilMode,
    Manifest,
};
use crate::coverage::adapter::import_tsv;
use crate::coverage::{enumerate_targets, read_report, CoverageReport, TargetKind};
use crate::formal::{FormalBackend, ProofJob, ProofRun};
use crate::rtl::resolve_signals;
use crate::sva::{
    generate_property, merge_into_file, name_and_dedup, parse_sva, GenOptions, GenerationBackend, LlmConfig,
    SvaProperty, SvaResources,
};

/// Exit code for command-line usage errors.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "covloop", version, about = "Coverage closure for formal verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the parsed design as JSON.
    Parse(ParseArgs),
    /// List coverage targets.
    Targets(TargetsArgs),
    /// Measure coverage, or convert a foreign export.
    Report(ReportArgs),
    /// Hole contexts for uncovered targets.
    Analyze(AnalyzeArgs),
    /// Generate properties for the holes.
    Generate(GenerateArgs),
    /// Prove the property file and report coverage.
    Prove(ProveArgs),
    /// Run the closure loop.
    Close(CloseArgs),
    /// Compare closure with and without generation across a corpus.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// RTL source files.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Module to work on; the first module by default.
    #[arg(long)]
    pub top: Option<String>,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindFilter {
    Statement,
    Branch,
}

#[derive(Debug, Args)]
pub struct TargetsArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Only list targets of this kind.
    #[arg(long, value_enum)]
    pub kind: Option<KindFilter>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ProofArgs {
    /// Property file.
    #[arg(long)]
    pub sva: Option<PathBuf>,
    /// `builtin` or `replay:<path>`.
    #[arg(long)]
    pub backend: Option<BackendChoice>,
    /// Proof worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Leave unreachable targets out of the denominator.
    #[arg(long)]
    pub exclude_unreachable: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub proof: ProofArgs,
    /// Convert this tab-separated export instead of proving.
    #[arg(long)]
    pub import: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub proof: ProofArgs,
    /// Canonical coverage report; measured with the backend when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Keep one context per hole instead of merging equal logic.
    #[arg(long)]
    pub no_consolidate: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Seed for generated property names.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model endpoint settings; the template generator is used without it.
    #[arg(long)]
    pub llm_config: Option<PathBuf>,
    /// Also emit a cover next to each branch assertion.
    #[arg(long)]
    pub emit_covers: bool,
    /// Use `|-> ##N` instead of `|=>`.
    #[arg(long)]
    pub delay: Option<u32>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub proof: ProofArgs,
    /// Hole contexts from `analyze`; derived from a proof run when absent.
    #[arg(long)]
    pub contexts: Option<PathBuf>,
    #[command(flatten)]
    pub generation: GenArgs,
    /// Output the merged property file instead of the new blocks.
    #[arg(long)]
    pub merge: bool,
    /// Iteration recorded in trace comments.
    #[arg(long, default_value_t = 1)]
    pub iteration: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub proof: ProofArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CloseArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub proof: ProofArgs,
    #[command(flatten)]
    pub generation: GenArgs,
    /// Coverage percentage that ends the loop.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Upper bound on prove passes.
    #[arg(long)]
    pub max_iters: Option<u32>,
    /// `interactive`, `queue` or `auto`.
    #[arg(long)]
    pub hil: Option<HilMode>,
    /// Directory for queue-mode review files.
    #[arg(long)]
    pub review_dir: Option<PathBuf>,
    /// Keep iterating even when nothing changes.
    #[arg(long)]
    pub no_stall_detection: bool,
    /// Run manifest destination; stdout when absent.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Final coverage report destination.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of designs with optional `<name>_sva.sv` seeds.
    pub corpus: PathBuf,
    /// Seed for generated property names.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Proof worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Coverage percentage that ends the loop.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Upper bound on prove passes.
    #[arg(long)]
    pub max_iters: Option<u32>,
    /// Print JSON instead of the aligned table.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub common: Common,
}

struct Io<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

fn io_error(path: &Path, e: std::io::Error) -> ClosureError {
    ClosureError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, ClosureError> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), ClosureError> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serializes") + "\n"
}

impl Io<'_> {
    fn emit(&mut self, out: Option<&Path>, text: &str) -> Result<(), ClosureError> {
        match out {
            Some(p) => write_file(p, text),
            None => self.stdout.write_all(text.as_bytes()).map_err(|e| io_error(Path::new("<stdout>"), e)),
        }
    }
}

fn base_config(common: &Common) -> Result<ClosureConfig, ClosureError> {
    match &common.config {
        Some(p) => ClosureConfig::load(p),
        None => Ok(ClosureConfig::default()),
    }
}

fn apply_proof(cfg: &mut ClosureConfig, p: &ProofArgs) {
    if let Some(b) = &p.backend {
        cfg.backend = b.clone();
    }
    if let Some(j) = p.jobs {
        cfg.jobs = j;
    }
    cfg.exclude_unreachable |= p.exclude_unreachable;
}

fn apply_gen(cfg: &mut ClosureConfig, g: &GenArgs) -> Result<(), ClosureError> {
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(p) = &g.llm_config {
        cfg.generation = GenerationBackend::Llm(LlmConfig::load(p)?);
    }
    cfg.emit_covers |= g.emit_covers;
    if g.delay.is_some() {
        cfg.delay_cycles = g.delay;
    }
    Ok(())
}

fn load_design(d: &DesignArgs, cfg: &ClosureConfig) -> Result<Design, ClosureError> {
    Design::load(&d.files, d.top.as_deref().or(cfg.top.as_deref()))
}

fn load_sva(p: &Option<PathBuf>) -> Result<String, ClosureError> {
    p.as_deref().map(read).unwrap_or_else(|| Ok(String::new()))
}

fn prove_once(design: &Design, sva: &str, cfg: &ClosureConfig) -> Result<(ProofRun, SvaResources), ClosureError> {
    let parsed = parse_sva(sva)?;
    let mut res = parsed.resources.clone();
    bind_design(&mut res, &resolve_signals(design.unit())?);
    let file = design.file_name();
    let job = ProofJob {
        unit: design.unit(),
        file: &file,
        properties: &parsed.properties,
        macros: &res.macros,
        iteration: 0,
        exclude_unreachable: cfg.exclude_unreachable,
    };
    let mut backend: Box<dyn FormalBackend> = make_backend(cfg)?;
    Ok((backend.run(&job)?, res))
}

fn contexts_for(design: &Design, report: &CoverageReport) -> Result<Vec<HoleContext>, ClosureError> {
    let file = design.file_name();
    let targets = enumerate_targets(design.unit(), &file);
    Ok(analyze_report(report, &targets, design.unit(), design.source(), &file)?)
}

fn cmd_parse(a: &ParseArgs, io: &mut Io) -> Result<i32, ClosureError> {
    let design = Design::load(&a.files, None)?;
    let files: Vec<_> = design
        .sources
        .iter()
        .map(|f| json!({ "file": f.path, "units": f.units }))
        .collect();
    io.emit(a.common.out.as_deref(), &to_json(&files))?;
    Ok(0)
}

#[derive(Serialize)]
struct TargetLine {
    id: String,
    kind: TargetKind,
    start: [u32; 2],
    end: [u32; 2],
    path_condition: String,
    isolated: bool,
}

fn cmd_targets(a: &TargetsArgs, io: &mut Io) -> Result<i32, ClosureError> {
    let cfg = base_config(&a.common)?;
    let design = load_design(&a.design, &cfg)?;
    let lines: Vec<TargetLine> = enumerate_targets(design.unit(), &design.file_name())
        .into_iter()
        .filter(|t| match a.kind {
            None => true,
            Some(KindFilter::Statement) => t.kind == TargetKind::Statement,
            Some(KindFilter::Branch) => t.kind == TargetKind::Branch,
        })
        .map(|t| TargetLine {
            isolated: t.is_isolated(),
            path_condition: t.path_condition.to_string(),
            start: [t.span.start_line, t.span.start_col],
            end: [t.span.end_line, t.span.end_col],
            kind: t.kind,
            id: t.id,
        })
        .collect();
    io.emit(a.common.out.as_deref(), &to_json(&lines))?;
    Ok(0)
}

fn cmd_report(a: &ReportArgs, io: &mut Io) -> Result<i32, ClosureError> {
    let mut cfg = base_config(&a.common)?;
    apply_proof(&mut cfg, &a.proof);
    let design = load_design(&a.design, &cfg)?;
    let report = match &a.import {
        Some(p) => {
            let targets = enumerate_targets(design.unit(), &design.file_name());
            import_tsv(&read(p)?, &design.unit().name, 0, &targets, cfg.exclude_unreachable)?
        }
        None => prove_once(&design, &load_sva(&a.proof.sva)?, &cfg)?.0.report,
    };
    io.emit(a.common.out.as_deref(), &(report.to_json() + "\n"))?;
    Ok(0)
}

fn cmd_analyze(a: &AnalyzeArgs, io: &mut Io) -> Result<i32, ClosureError> {
    let mut cfg = base_config(&a.common)?;
    apply_proof(&mut cfg, &a.proof);
    let design = load_design(&a.design, &cfg)?;
    let report = match &a.report {
        Some(p) => read_report(p)?,
        None => prove_once(&design, &load_sva(&a.proof.sva)?, &cfg)?.0.report,
    };
    let mut contexts = contexts_for(&design, &report)?;
    if !a.no_consolidate {
        contexts = consolidate(contexts);
    }
    io.emit(a.common.out.as_deref(), &(contexts_to_json(&contexts) + "\n"))?;
    Ok(0)
}

fn cmd_generate(a: &GenerateArgs, io: &mut Io) -> Result<i32, ClosureError> {
    let mut cfg = base_config(&a.common)?;
    apply_proof(&mut cfg, &a.proof);
    apply_gen(&mut cfg, &a.generation)?;
    cfg.validate()?;
    let design = load_design(&a.design, &cfg)?;
    let sva = load_sva(&a.proof.sva)?;
    let (contexts, res) = match &a.contexts {
        Some(p) => {
            let mut res = parse_sva(&sva)?.resources;
            bind_design(&mut res, &resolve_signals(design.unit())?);
            let text = read(p)?;
            (contexts_from_json(&text)?, res)
        }
        None => {
            let (run, res) = prove_once(&design, &sva, &cfg)?;
            (consolidate(contexts_for(&design, &run.report)?), res)
        }
    };
    let opts = GenOptions {
        emit_covers: cfg.emit_covers,
        delay_cycles: cfg.delay_cycles,
        iteration: a.iteration,
    };
    let mut props: Vec<SvaProperty> = Vec::new();
    let mut chat = match &cfg.generation {
        GenerationBackend::Llm(lc) => Some((crate::sva::HttpChat::new(lc.clone()), lc.clone())),
        GenerationBackend::Template => None,
    };
    for ctx in &contexts {
        let generated = match chat.as_mut() {
            Some((c, lc)) => crate::sva::llm_generate(ctx, &res, c, lc, &opts).map(|o| o.properties),
            None => generate_property(ctx, &res, &opts),
        };
        match generated {
            Ok(v) => props.extend(v),
            Err(e) => writeln!(io.stderr, "{}: {e}", ctx.targets.join(", ")).map_err(|e| io_error(Path::new("<stderr>"), e))?,
        }
    }
    let props = name_and_dedup(props, &res, cfg.seed.wrapping_add(a.iteration as u64));
    let text = if a.merge {
        merge_into_file(&sva, &props)?
    } else {
        props.iter().map(SvaProperty::render_with_trace).collect::<Vec<_>>().join("\n")
    };
    io.emit(a.common.out.as_deref(), &text)?;
    Ok(0)
}

fn cmd_prove(a: &ProveArgs, io: &mut Io) -> Result<i32, ClosureError> {
    let mut cfg = base_config(&a.common)?;
    apply_proof(&mut cfg, &a.proof);
    let design = load_design(&a.design, &cfg)?;
    let (run, _) = prove_once(&design, &load_sva(&a.proof.sva)?, &cfg)?;
    let doc = json!({ "results": run.results, "report": run.report });
    io.emit(a.common.out.as_deref(), &to_json(&doc))?;
    Ok(0)
}

fn cmd_close(a: &CloseArgs, io: &mut Io) -> Result<i32, ClosureError> {
    let mut cfg = base_config(&a.common)?;
    apply_proof(&mut cfg, &a.proof);
    apply_gen(&mut cfg, &a.generation)?;
    if let Some(t) = a.threshold {
        cfg.coverage_threshold = t;
    }
    if let Some(n) = a.max_iters {
        cfg.max_iterations = n;
    }
    if let Some(h) = a.hil {
        cfg.hil_mode = h;
    }
    if let Some(d) = &a.review_dir {
        cfg.review_dir = d.clone();
    }
    if a.no_stall_detection {
        cfg.stall_detection = false;
    }
    if let Some(t) = &a.design.top {
        cfg.top = Some(t.clone());
    }
    cfg.validate()?;
    let design = load_design(&a.design, &cfg)?;
    let sva = load_sva(&a.proof.sva)?;
    let backend_name = match &cfg.backend {
        BackendChoice::Builtin => "builtin".to_string(),
        BackendChoice::Replay(p) => format!("replay:{}", p.display()),
    };
    let run = run_closure(&design, &sva, &cfg)?;
    let out = match (&a.common.out, &a.proof.sva) {
        (Some(o), _) => o.clone(),
        (None, Some(s)) => s.clone(),
        (None, None) => {
            let first = &a.design.files[0];
            let stem = first.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            first.with_file_name(format!("{stem}_sva.sv"))
        }
    };
    write_file(&out, &run.sva_text)?;
    if let Some(p) = &a.report {
        write_file(p, &(run.report.to_json() + "\n"))?;
    }
    let manifest = Manifest::new(&design, &backend_name, &cfg, &run);
    io.emit(a.manifest.as_deref(), &(manifest.to_json() + "\n"))?;
    writeln!(
        io.stderr,
        "{}: {:?} after {} iteration(s), coverage {:.2}%, {} new properties ({:.2}% proven)",
        design.unit().name,
        run.state.outcome,
        run.state.iteration,
        run.kpis.coverage_pct,
        run.kpis.num_properties,
        run.kpis.proven_pct
    )
    .map_err(|e| io_error(Path::new("<stderr>"), e))?;
    Ok(run.state.outcome.exit_code())
}

fn cmd_bench(a: &BenchArgs, io: &mut Io) -> Result<i32, ClosureError> {
    let mut cfg = base_config(&a.common)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(j) = a.jobs {
        cfg.jobs = j;
    }
    if let Some(t) = a.threshold {
        cfg.coverage_threshold = t;
    }
    if let Some(n) = a.max_iters {
        cfg.max_iterations = n;
    }
    cfg.validate()?;
    let table = benchmark(&a.corpus, &cfg)?;
    let text = if a.json { table.to_json() + "\n" } else { table.render_text() };
    io.emit(a.common.out.as_deref(), &text)?;
    Ok(0)
}

/// Run one invocation. Usage errors return 64, pipeline errors 1 with a JSON
/// error object on stderr, `close` returns its outcome code.
pub fn dispatch<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut io = Io { stdout, stderr };
    let result = match &cli.command {
        Command::Parse(a) => cmd_parse(a, &mut io),
        Command::Targets(a) => cmd_targets(a, &mut io),
        Command::Report(a) => cmd_report(a, &mut io),
        Command::Analyze(a) => cmd_analyze(a, &mut io),
        Command::Generate(a) => cmd_generate(a, &mut io),
        Command::Prove(a) => cmd_prove(a, &mut io),
        Command::Close(a) => cmd_close(a, &mut io),
        Command::Bench(a) => cmd_bench(a, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let doc = json!({ "error": e.kind(), "message": e.to_string() });
            let _ = writeln!(io.stderr, "{doc}");
            1
        }
    }
}
