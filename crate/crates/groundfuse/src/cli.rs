//! Command-line entry points. Exit codes: 0 success, 1 usage error,
//! 2 runtime error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use groundfuse_core::corpus::{generate_corpus_with, CorpusConfig};
use groundfuse_core::dataset::Dataset;
use groundfuse_core::eval::{eval_nll, split_by_region, NllReport};
use groundfuse_core::expert::{fit_expert_params, ChanceModel, ExpertModel, ExpertParams, FitConfig};
use groundfuse_core::grounding::GroundingModel;
use groundfuse_core::lgn::synth::{synthesize_stage1, synthesize_stage2, SynthConfig, SynthData};
use groundfuse_core::lgn::train::train_curriculum;
use groundfuse_core::lgn::{LgnCheckpoint, LgnConfig, LgnModel, TrainConfig, TrainSet};
use groundfuse_core::map::WorldMap;
use groundfuse_core::parser::Lexicon;
use groundfuse_core::rng::{seeded, stream};
use groundfuse_core::search::{run_scenario, ScenarioConfig, SearchMode, SearchResult};
use serde::{Deserialize, Serialize};

use crate::assets;
use crate::io::{self, read_json, write_json, write_jsonl, write_text};
use crate::parallel::RayonBackend;
use crate::stats::{compare, comparison_table};
use crate::study::{run_study, StudyConfig};

type Result<T> = std::result::Result<T, Box<dyn std::error::Error + Send + Sync>>;

#[derive(Debug, Parser)]
#[command(name = "groundfuse", version, about = "Spatial-language grounding and fused target search")]
pub struct Cli {
    /// Seed for every random draw of the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a grounding network through the curriculum.
    Train(TrainArgs),
    /// Per-point NLL statistics of one or more models.
    EvalNll(EvalArgs),
    /// Maximum-likelihood fit of the expert parameters.
    FitExpert(FitArgs),
    /// Run one search scenario.
    Simulate(SimulateArgs),
    /// Run a search study from a config directory.
    Batch(BatchArgs),
    /// Generate synthetic training data, sentences or maps.
    GenData(GenArgs),
    /// Start the session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training job file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-epoch log.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `chance`, `expert` or a checkpoint path; repeat to compare models.
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,
    /// Expert parameters (defaults when absent).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Annotation records (JSON lines); synthetic stage-2 points otherwise.
    #[arg(long, requires = "maps")]
    pub points: Option<PathBuf>,
    #[arg(long)]
    pub maps: Option<PathBuf>,
    /// Number of synthetic points when no records are given.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub maps: PathBuf,
    /// Starting parameters (defaults when absent).
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    HumanRobot,
    RobotOnly,
    HumanOnly,
    Uninformed,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::HumanRobot => SearchMode::HumanRobot,
            ModeArg::RobotOnly => SearchMode::RobotOnly,
            ModeArg::HumanOnly => SearchMode::HumanOnly,
            ModeArg::Uninformed => SearchMode::Uninformed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Map file or directory; bundled maps otherwise.
    #[arg(long)]
    pub maps: Option<PathBuf>,
    /// Expert parameters for grounding and the scripted observer.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Directory holding `study.json` and optionally `maps/`.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Balanced hard labels from the expert rules.
    Stage1 {
        #[arg(long, default_value_t = 8)]
        maps: usize,
        /// Synthesis settings (JSON); defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bernoulli labels drawn from the expert likelihoods.
    Stage2 {
        #[arg(long, default_value_t = 8)]
        maps: usize,
        #[arg(long, default_value_t = 20)]
        draws: u32,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sentences with their expected tuples.
    Corpus {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Fraction of sentences with a typo.
        #[arg(long)]
        typo_rate: Option<f64>,
        /// Map whose building names are used; the demo map otherwise.
        #[arg(long)]
        maps: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search maps at city scale.
    Maps {
        #[arg(long, value_delimiter = ',', default_values_t = assets::CITY_IDS.map(String::from))]
        ids: Vec<String>,
        /// Also write the three-building demo map.
        #[arg(long)]
        demo: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Bind address; `GROUNDFUSE_ADDR` or 127.0.0.1:8080 otherwise.
    #[arg(long)]
    pub addr: Option<String>,
}

/// Stage sizes for synthetic curriculum data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthStage {
    pub maps: usize,
    pub val_maps: usize,
    pub draws: u32,
}

impl Default for SynthStage {
    fn default() -> Self {
        Self { maps: 8, val_maps: 2, draws: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub points: PathBuf,
    pub maps: PathBuf,
}

/// Training job. Relative paths resolve against the job file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainJob {
    pub model: LgnConfig,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub stage1: SynthStage,
    pub stage2: SynthStage,
    pub stage3: Option<DataSource>,
}

impl Default for TrainJob {
    fn default() -> Self {
        Self {
            model: LgnConfig::default(),
            train: TrainConfig::default(),
            synth: SynthConfig::default(),
            stage1: SynthStage::default(),
            stage2: SynthStage::default(),
            stage3: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct TrainOutput<'a> {
    job: &'a TrainJob,
    seed: u64,
    logs: Vec<groundfuse_core::lgn::TrainLog>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub config: ScenarioConfig,
    pub result: SearchResult,
}

#[derive(Debug, Serialize)]
struct ScenarioRecord<'a> {
    map_id: &'a str,
    mode: SearchMode,
    seed: u64,
    start: (usize, usize),
    target: (usize, usize),
    success: bool,
    steps: usize,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 1,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Train(a) => train(&a, seed),
        Command::EvalNll(a) => eval(&a, seed),
        Command::FitExpert(a) => fit(&a),
        Command::Simulate(a) => simulate(&a, cli.seed),
        Command::Batch(a) => batch(&a, cli.seed),
        Command::GenData(a) => gen(&a.kind, seed),
        Command::Serve(a) => serve(&a, seed),
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.into()
    } else {
        base.join(p)
    }
}

fn expert_params(path: Option<&PathBuf>) -> Result<ExpertParams> {
    let p = match path {
        Some(p) => read_json::<ExpertParams>(p)?,
        None => ExpertParams::default(),
    };
    p.validate()?;
    Ok(p)
}

fn load_checkpoint(path: &Path) -> Result<LgnModel> {
    let ck: LgnCheckpoint = read_json(path)?;
    Ok(LgnModel::from_checkpoint(ck, None)?)
}

/// Training and validation sets from disjoint synthetic maps.
fn synth_stage(
    job: &TrainJob,
    stage: &SynthStage,
    make: impl Fn(&mut groundfuse_core::rng::Rng, usize, &SynthConfig) -> SynthData,
    seed: u64,
    tag: &str,
) -> Result<(TrainSet, TrainSet)> {
    let mut rng = seeded(seed, stream::SYNTH);
    let train_cfg = SynthConfig { id_prefix: format!("{tag}-train-"), ..job.synth.clone() };
    let val_cfg = SynthConfig { id_prefix: format!("{tag}-val-"), ..job.synth.clone() };
    let train = make(&mut rng, stage.maps, &train_cfg);
    let val = make(&mut rng, stage.val_maps, &val_cfg);
    Ok((TrainSet::from_synth(&train, &job.model)?, TrainSet::from_synth(&val, &job.model)?))
}

fn train(a: &TrainArgs, seed: u64) -> Result<()> {
    let job: TrainJob = read_json(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let s1 = synth_stage(&job, &job.stage1, |r, n, c| synthesize_stage1(r, n, c), seed, "s1")?;
    let draws = job.stage2.draws;
    let s2 = synth_stage(&job, &job.stage2, move |r, n, c| synthesize_stage2(r, n, draws, c), seed ^ 0x5eed_0002, "s2")?;
    let s3 = match &job.stage3 {
        Some(src) => {
            let data = io::load_dataset(&resolve(base, &src.points), &resolve(base, &src.maps))?;
            let (tr, va) = split_by_region(&data, &mut seeded(seed, stream::SPLIT))?;
            Some((TrainSet::from_dataset(&tr, &job.model)?, TrainSet::from_dataset(&va, &job.model)?))
        }
        None => None,
    };
    let model = LgnModel::init(job.model, &mut seeded(seed, stream::INIT))?;
    let cfg = TrainConfig { seed, ..job.train };
    let (model, logs) = train_curriculum(&model, [Some(&s1), Some(&s2), s3.as_ref()], &cfg, &RayonBackend)?;
    write_json(&a.out, &model.checkpoint())?;
    if let Some(log) = &a.log {
        write_json(log, &TrainOutput { job: &job, seed, logs: logs.clone() })?;
    }
    for l in &logs {
        println!("stage {}: {} epochs, best val NLL {:.4} at epoch {}", l.stage, l.epochs.len(), l.best_val_nll, l.best_epoch);
        for w in &l.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}

fn eval_points(a: &EvalArgs, seed: u64) -> Result<Dataset> {
    match (&a.points, &a.maps) {
        (Some(p), Some(m)) => Ok(io::load_dataset(p, m)?),
        _ => {
            // one label per location, enough maps to reach n points
            let cfg = SynthConfig { id_prefix: "eval-".into(), ..SynthConfig::default() };
            let per_map = cfg.focus_per_map * cfg.locations * cfg.relations.len();
            let maps = a.n.div_ceil(per_map.max(1));
            let mut data = synthesize_stage2(&mut seeded(seed, stream::SYNTH), maps, 1, &cfg).to_dataset();
            data.points.truncate(a.n);
            Ok(data)
        }
    }
}

fn model_by_name(name: &str, params: &ExpertParams, seed: u64) -> Result<Box<dyn GroundingModel>> {
    Ok(match name {
        "chance" => Box::new(ChanceModel::new(seed)),
        "expert" => Box::new(ExpertModel::new(params.clone())?),
        path => Box::new(load_checkpoint(Path::new(path))?),
    })
}

fn histogram_tsv(reports: &[NllReport]) -> String {
    let mut s = String::from("bin_low\tbin_high");
    for r in reports {
        s.push('\t');
        s.push_str(&r.model);
    }
    s.push('\n');
    let bins = reports.first().map_or(0, |r| r.histogram.len());
    for k in 0..bins {
        let lo = k as f64 * groundfuse_core::eval::HISTOGRAM_WIDTH;
        s.push_str(&format!("{lo:.2}\t{:.2}", lo + groundfuse_core::eval::HISTOGRAM_WIDTH));
        for r in reports {
            s.push_str(&format!("\t{}", r.histogram[k]));
        }
        s.push('\n');
    }
    s.push_str("overflow\t-");
    for r in reports {
        s.push_str(&format!("\t{}", r.overflow));
    }
    s.push('\n');
    s
}

fn eval(a: &EvalArgs, seed: u64) -> Result<()> {
    let params = expert_params(a.params.as_ref())?;
    let data = eval_points(a, seed)?;
    let mut reports = Vec::new();
    let mut vectors = Vec::new();
    for name in &a.models {
        let model = model_by_name(name, &params, seed)?;
        let (report, values) = eval_nll(model.as_ref(), &data)?;
        println!("{}\tn={}\tmean={:.4}\tsd={:.4}", report.model, report.n, report.mean, report.sd);
        vectors.push((name.clone(), values));
        reports.push(report);
    }
    let summary: Vec<(&String, &NllReport)> = a.models.iter().zip(&reports).collect();
    write_json(&a.out.join("report.json"), &summary)?;
    write_text(&a.out.join("histogram.tsv"), &histogram_tsv(&reports))?;
    let mut per_point = String::from("index");
    for (name, _) in &vectors {
        per_point.push('\t');
        per_point.push_str(name);
    }
    per_point.push('\n');
    for i in 0..data.len() {
        per_point.push_str(&i.to_string());
        for (_, v) in &vectors {
            per_point.push_str(&format!("\t{:.6}", v[i]));
        }
        per_point.push('\n');
    }
    write_text(&a.out.join("nll.tsv"), &per_point)?;
    if vectors.len() > 1 {
        write_text(&a.out.join("comparison.tsv"), &comparison_table(&compare(&vectors)?))?;
    }
    Ok(())
}

fn fit(a: &FitArgs) -> Result<()> {
    let data = io::load_dataset(&a.points, &a.maps)?;
    let init = expert_params(a.init.as_ref())?;
    let (params, fits) = fit_expert_params(&data, &init, &FitConfig::default())?;
    write_json(&a.out, &params)?;
    for f in &fits {
        let p = params.get(f.relation);
        println!("{}\tn={}\trho={:.4}\ttau={:.4}\tll={:.5}", f.relation, f.samples, p.rho, p.tau, f.log_likelihood);
    }
    Ok(())
}

fn search_maps(path: Option<&PathBuf>) -> Result<Vec<WorldMap>> {
    Ok(match path {
        Some(p) => io::load_maps(p)?,
        None => assets::bundled_maps(),
    })
}

fn simulate(a: &SimulateArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg: ScenarioConfig = read_json(&a.config)?;
    if let Some(m) = a.mode {
        cfg.mode = m.into();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let maps = search_maps(a.maps.as_ref())?;
    let map = maps.iter().find(|m| m.id == cfg.map_id).ok_or_else(|| format!("unknown map {:?}", cfg.map_id))?;
    let expert = ExpertModel::new(expert_params(a.params.as_ref())?)?;
    let result = run_scenario(map, &cfg, &expert, &expert.params)?;
    println!("{}: success={} steps={}", cfg.mode.name(), result.success, result.steps);
    write_json(&a.out, &SimulationOutput { config: cfg, result })?;
    Ok(())
}

fn batch(a: &BatchArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg: StudyConfig = read_json(&a.config.join("study.json"))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let map_dir = a.config.join("maps");
    let maps = if map_dir.is_dir() { io::load_maps(&map_dir)? } else { assets::city_maps() };
    let expert = ExpertModel::default();
    let (results, report) = run_study(&maps, &cfg, &expert)?;
    let records: Vec<ScenarioRecord> = results
        .iter()
        .map(|(c, r)| ScenarioRecord {
            map_id: &c.map_id,
            mode: c.mode,
            seed: c.seed,
            start: c.start,
            target: c.target,
            success: r.success,
            steps: r.steps,
        })
        .collect();
    write_jsonl(&a.out.join("results.jsonl"), &records)?;
    write_json(&a.out.join("metrics.json"), &report)?;
    write_text(&a.out.join("table.tsv"), &report.table())?;
    write_text(&a.out.join("curves.tsv"), &report.curves_tsv())?;
    print!("{}", report.table());
    Ok(())
}

fn gen(kind: &GenKind, seed: u64) -> Result<()> {
    match kind {
        GenKind::Stage1 { maps, config, out } => {
            let cfg = match config {
                Some(p) => read_json(p)?,
                None => SynthConfig::default(),
            };
            let data = synthesize_stage1(&mut seeded(seed, stream::SYNTH), *maps, &cfg);
            io::save_dataset(out, &data.to_dataset())?;
        }
        GenKind::Stage2 { maps, draws, config, out } => {
            let cfg = match config {
                Some(p) => read_json(p)?,
                None => SynthConfig::default(),
            };
            let data = synthesize_stage2(&mut seeded(seed, stream::SYNTH), *maps, *draws, &cfg);
            io::save_dataset(out, &data.to_dataset())?;
            write_jsonl(&out.join("locations.jsonl"), &data.locations)?;
        }
        GenKind::Corpus { n, typo_rate, maps, out } => {
            let map = match maps {
                Some(p) => io::load_maps(p)?.into_iter().next().ok_or("no map in file")?,
                None => assets::demo_map(),
            };
            let mut cfg = CorpusConfig::default();
            if let Some(t) = typo_rate {
                cfg.typo_rate = *t;
            }
            let entries = generate_corpus_with(&mut seeded(seed, stream::CORPUS), *n, &Lexicon::from_map(&map), &cfg);
            write_jsonl(out, &entries)?;
        }
        GenKind::Maps { ids, demo, out } => {
            if *demo {
                write_json(&out.join("demo.json"), &groundfuse_core::map::synth::demo_map())?;
            }
            let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
            for m in assets::generate_maps(seed, &ids, &assets::city_config()) {
                write_json(&out.join(format!("{}.json", m.id)), &m)?;
            }
        }
    }
    Ok(())
}

fn serve(a: &ServeArgs, seed: u64) -> Result<()> {
    let addr = a.addr.clone().or_else(|| std::env::var("GROUNDFUSE_ADDR").ok()).unwrap_or_else(|| "127.0.0.1:8080".into());
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(crate::service::serve(&addr, seed))?;
    Ok(())
}
