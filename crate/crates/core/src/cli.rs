//! The `topomap` command line. Data goes to `--out` or stdout, logs to
//! stderr, and failures end in one `error[category]: message` line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::classifiers::{
    head_logits, load_head, load_mlp, load_subset_names, mlp_predict, mlp_train_detailed, resolve_subset,
    save_mlp, subset_softmax, topk_labels, TrainConfig, DEFAULT_OBJECT_CLASSES,
};
use crate::config::{ParamOverrides, RunConfig};
use crate::dataset::{generate_synthetic, load_stream, save_stream, FeatureStream, SynthConfig};
use crate::error::{Error, Result};
use crate::evaluation::{
    crossval_place, eval_over_time, eval_topology, lhs_sample, localization_crossval, object_protocol,
    EvalReport, LabelSpace, NodeTruth, Replication,
};
use crate::localization::RelevanceCache;
use crate::map::{build_from_streams, CoverageLog, TopologicalMap};
use crate::map_store::{load_map, save_map};
use crate::metrics::Vec2;
use crate::params::{Hyperparameters, Variant};
use crate::plot::{render_svg, PlotOptions};

#[derive(Debug, Parser)]
#[command(name = "topomap", version, about = "Topological maps with consolidated visual features")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Run configuration document (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    pub params: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub slope: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long = "top-k", global = true, value_name = "N")]
    pub top_k: Option<usize>,
    /// Replicate a fraction of build frames, e.g. `0.1:40`.
    #[arg(long, global = true, value_name = "FRAC:COPIES")]
    pub replicate: Option<Replication>,
    #[arg(long, global = true, value_enum)]
    pub variant: Option<Variant>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a map from one or more feature streams.
    Build {
        streams: Vec<PathBuf>,
        /// Also write one JSON line per build step.
        #[arg(long, value_name = "FILE")]
        steps: Option<PathBuf>,
    },
    /// Rank map nodes for every frame of a query stream.
    Localize {
        #[arg(long)]
        map: Option<PathBuf>,
        query: Option<PathBuf>,
    },
    /// Object labels of every node through the imported linear head.
    ClassifyObjects {
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        head: Option<PathBuf>,
        /// Class-name list for the subset softmax (one per line).
        #[arg(long)]
        subset: Option<PathBuf>,
    },
    /// Place category of every node through a trained MLP.
    ClassifyPlace {
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train the place MLP on labeled frames.
    TrainMlp {
        streams: Vec<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        hidden: Option<usize>,
    },
    /// Generate synthetic streams (one bundle per run plus `synth.toml`).
    Synth {
        /// Feature dimension of the built-in two-room layout.
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        sequences: usize,
    },
    /// Run an evaluation protocol and write its report.
    Eval {
        protocol: Option<Protocol>,
        streams: Vec<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        head: Option<PathBuf>,
        #[arg(long)]
        subset: Option<PathBuf>,
        /// Training stream of the over-time protocol.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Synthetic layout giving node ground truth by room.
        #[arg(long, value_name = "FILE")]
        synth: Option<PathBuf>,
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Latin hypercube samples of the hyperparameters.
    Lhs {
        #[arg(short, long, default_value_t = 10)]
        n: usize,
    },
    /// Render a map as SVG.
    Plot {
        #[arg(long)]
        map: Option<PathBuf>,
        /// Color nodes by the place class of this MLP.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Color nodes from a text file with one label per node.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Streams whose capture positions are drawn under the map.
        #[arg(long = "positions")]
        positions: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Topology,
    Objects,
    Place,
    OverTime,
    Localization,
}

impl Protocol {
    fn parse(s: &str) -> Result<Self> {
        <Self as ValueEnum>::from_str(s, true).map_err(|_| Error::Usage(format!("unknown protocol {s:?}")))
    }
}

/// Flag values layered over a run configuration.
struct Ctx {
    g: GlobalArgs,
    cfg: RunConfig,
}

impl Ctx {
    fn new(g: GlobalArgs) -> Result<Self> {
        let cfg = match &g.params {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::new(),
        };
        Ok(Self { g, cfg })
    }

    fn params(&self) -> Result<Hyperparameters> {
        let g = &self.g;
        self.cfg.hyperparameters(ParamOverrides {
            lambda: g.lambda,
            alpha: g.alpha,
            tau: g.tau,
            gamma: g.gamma,
            beta: g.beta,
            s_slope: g.slope,
            epsilon: g.epsilon,
        })
    }

    fn seed(&self) -> u64 {
        self.g.seed.or(self.cfg.seed).unwrap_or(0)
    }

    fn variant(&self) -> Variant {
        self.g.variant.or(self.cfg.variant).unwrap_or_default()
    }

    fn variants(&self, default: &[Variant]) -> Vec<Variant> {
        if let Some(v) = self.g.variant {
            vec![v]
        } else if !self.cfg.variants.is_empty() {
            self.cfg.variants.clone()
        } else if let Some(v) = self.cfg.variant {
            vec![v]
        } else {
            default.to_vec()
        }
    }

    fn top_k(&self, default: usize) -> usize {
        self.g.top_k.or(self.cfg.top_k).unwrap_or(default)
    }

    fn replication(&self) -> Result<Replication> {
        match (self.g.replicate, &self.cfg.replicate) {
            (Some(r), _) => Ok(r),
            (None, Some(s)) => s.parse(),
            (None, None) => Ok(Replication::NONE),
        }
    }

    fn out(&self) -> Option<PathBuf> {
        self.g.out.clone().or_else(|| self.cfg.out.clone())
    }

    fn require_out(&self, what: &str) -> Result<PathBuf> {
        self.out().ok_or_else(|| Error::Usage(format!("--out is required for {what}")))
    }

    fn path(&self, flag: &Option<PathBuf>, cfg: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
        flag.clone()
            .or_else(|| cfg.clone())
            .ok_or_else(|| Error::Usage(format!("missing --{name}")))
    }

    fn stream_paths(&self, flag: &[PathBuf]) -> Vec<PathBuf> {
        if flag.is_empty() {
            self.cfg.streams.clone()
        } else {
            flag.to_vec()
        }
    }

    fn load_streams(&self, flag: &[PathBuf]) -> Result<Vec<FeatureStream>> {
        let paths = self.stream_paths(flag);
        if paths.is_empty() {
            return Err(Error::Usage("no input streams given".into()));
        }
        paths.iter().map(load_stream).collect()
    }

    fn mlp_config(&self) -> TrainConfig {
        let mut c = self.cfg.mlp.clone().unwrap_or_default();
        if let Some(seed) = self.g.seed.or(if self.cfg.mlp.is_none() { self.cfg.seed } else { None }) {
            c.rng_seed = seed;
        }
        c
    }

    /// Writes `text` to `--out` when given, otherwise to stdout.
    fn emit(&self, text: &str) -> Result<()> {
        match self.out() {
            Some(p) => write_file(&p, text),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| Error::io("<stdout>", e))
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn json_lines<T: serde::Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(&r).expect("rows serialize"));
        s.push('\n');
    }
    s
}

/// Parses arguments and runs; the exit code is returned rather than applied.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let line = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage]: {line}");
            return 2;
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::new(cli.global)?;
    match cli.command {
        Command::Build { streams, steps } => cmd_build(&ctx, &streams, steps.as_deref()),
        Command::Localize { map, query } => cmd_localize(&ctx, &map, &query),
        Command::ClassifyObjects { map, head, subset } => cmd_classify_objects(&ctx, &map, &head, &subset),
        Command::ClassifyPlace { map, model } => cmd_classify_place(&ctx, &map, &model),
        Command::TrainMlp {
            streams,
            epochs,
            learning_rate,
            hidden,
        } => {
            let mut cfg = ctx.mlp_config();
            cfg.epochs = epochs.unwrap_or(cfg.epochs);
            cfg.learning_rate = learning_rate.unwrap_or(cfg.learning_rate);
            cfg.hidden = hidden.unwrap_or(cfg.hidden);
            cmd_train_mlp(&ctx, &streams, &cfg)
        }
        Command::Synth { dim, sequences } => cmd_synth(&ctx, dim, sequences),
        Command::Eval {
            protocol,
            streams,
            map,
            head,
            subset,
            train,
            synth,
            repetitions,
        } => {
            let protocol = match (protocol, &ctx.cfg.protocol) {
                (Some(p), _) => p,
                (None, Some(s)) => Protocol::parse(s)?,
                (None, None) => return Err(Error::Usage("missing evaluation protocol".into())),
            };
            let args = EvalArgs {
                streams,
                map,
                head,
                subset,
                train,
                synth,
                repetitions,
            };
            cmd_eval(&ctx, protocol, &args)
        }
        Command::Lhs { n } => cmd_lhs(&ctx, n),
        Command::Plot {
            map,
            model,
            labels,
            positions,
        } => cmd_plot(&ctx, &map, &model, &labels, &positions),
    }
}

fn cmd_build(ctx: &Ctx, streams: &[PathBuf], steps: Option<&Path>) -> Result<()> {
    let streams = ctx.load_streams(streams)?;
    let out = ctx.require_out("build")?;
    let params = ctx.params()?;
    if streams.iter().all(FeatureStream::is_empty) {
        return Err(Error::EmptyInput);
    }
    let dim = streams[0].feature_dim;
    let mut map = TopologicalMap::with_variant(dim, params, ctx.variant())?;
    let mut log = CoverageLog::default();
    let mut step_lines = String::new();
    for s in &streams {
        s.validate()?;
        map.begin_sequence();
        for f in &s.frames {
            let o = map.process_observation(f.position, &f.features)?;
            log.record(&s.sequence_id, &f.frame_id, &o);
            if steps.is_some() {
                step_lines.push_str(&json_lines([json!({
                    "sequence_id": s.sequence_id,
                    "frame_id": f.frame_id,
                    "step": o,
                })]));
            }
        }
    }
    map.finalize();
    save_map(&map, Some(&log), &out)?;
    if let Some(p) = steps {
        write_file(p, &step_lines)?;
    }
    log::info!("built {} nodes, {} edges into {}", map.len(), map.edges().len(), out.display());
    Ok(())
}

fn cmd_localize(ctx: &Ctx, map: &Option<PathBuf>, query: &Option<PathBuf>) -> Result<()> {
    let (map, _) = load_map(ctx.path(map, &ctx.cfg.map, "map")?)?;
    let query = load_stream(ctx.path(query, &ctx.cfg.query, "query")?)?;
    let k = ctx.top_k(5);
    let cache = RelevanceCache::new(&map);
    let mut rows = Vec::with_capacity(query.len());
    for f in &query.frames {
        rows.push(json!({
            "frame_id": f.frame_id,
            "ranking": cache.localize(&f.features, k)?,
        }));
    }
    ctx.emit(&json_lines(rows))
}

fn cmd_classify_objects(ctx: &Ctx, map: &Option<PathBuf>, head: &Option<PathBuf>, subset: &Option<PathBuf>) -> Result<()> {
    let (map, _) = load_map(ctx.path(map, &ctx.cfg.map, "map")?)?;
    let head = load_head(ctx.path(head, &ctx.cfg.head, "head")?)?;
    let names = match subset.clone().or_else(|| ctx.cfg.subset.clone()) {
        Some(p) => load_subset_names(p)?,
        None => DEFAULT_OBJECT_CLASSES.iter().map(|s| s.to_string()).collect(),
    };
    let subset = resolve_subset(&names, head.class_names())?;
    let k = ctx.top_k(5);
    let mut rows = Vec::with_capacity(map.len());
    for n in map.nodes() {
        let logits = head_logits(&head, &n.c)?;
        let top: Vec<_> = topk_labels(&logits, k)
            .into_iter()
            .map(|i| json!({"class": i, "name": head.class_names()[i], "logit": logits[i]}))
            .collect();
        let probs = subset_softmax(&logits, &subset)?;
        let sub: Vec<_> = subset
            .iter()
            .zip(&probs)
            .map(|(&i, p)| json!({"name": head.class_names()[i], "p": p}))
            .collect();
        rows.push(json!({"node_id": n.id, "top_k": top, "subset": sub}));
    }
    ctx.emit(&json_lines(rows))
}

fn cmd_classify_place(ctx: &Ctx, map: &Option<PathBuf>, model: &Option<PathBuf>) -> Result<()> {
    let (map, _) = load_map(ctx.path(map, &ctx.cfg.map, "map")?)?;
    let model = load_mlp(ctx.path(model, &ctx.cfg.model, "model")?)?;
    let mut rows = Vec::with_capacity(map.len());
    for n in map.nodes() {
        let p = mlp_predict(&model, &n.c)?;
        rows.push(json!({
            "node_id": n.id,
            "class": p.class,
            "name": model.class_names()[p.class],
            "probabilities": p.probabilities,
        }));
    }
    ctx.emit(&json_lines(rows))
}

fn cmd_train_mlp(ctx: &Ctx, streams: &[PathBuf], cfg: &TrainConfig) -> Result<()> {
    let streams = ctx.load_streams(streams)?;
    let out = ctx.require_out("train-mlp")?;
    let space = LabelSpace::from_streams(&streams);
    let mut xs: Vec<&[f32]> = Vec::new();
    let mut ys = Vec::new();
    for s in &streams {
        for f in &s.frames {
            if let Some(l) = f.label.and_then(|l| space.global(s, l)) {
                xs.push(&f.features);
                ys.push(l);
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let outcome = mlp_train_detailed(&xs, &ys, space.names.clone(), cfg)?;
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    if let Some(loss) = outcome.loss_history.last() {
        log::info!("final training loss {loss:.6}");
    }
    save_mlp(&outcome.model, out)
}

fn cmd_synth(ctx: &Ctx, dim: usize, sequences: usize) -> Result<()> {
    let out = ctx.require_out("synth")?;
    let mut cfg = ctx
        .cfg
        .synth
        .clone()
        .unwrap_or_else(|| SynthConfig::two_rooms(dim, sequences, 0));
    if ctx.cfg.synth.is_none() || ctx.g.seed.is_some() {
        cfg.rng_seed = ctx.seed();
    }
    let streams = generate_synthetic(&cfg)?;
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    for s in &streams {
        save_stream(s, out.join(&s.sequence_id))?;
    }
    let text = toml::to_string_pretty(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    write_file(&out.join("synth.toml"), &text)?;
    log::info!("wrote {} streams to {}", streams.len(), out.display());
    Ok(())
}

struct EvalArgs {
    streams: Vec<PathBuf>,
    map: Option<PathBuf>,
    head: Option<PathBuf>,
    subset: Option<PathBuf>,
    train: Option<PathBuf>,
    synth: Option<PathBuf>,
    repetitions: Option<usize>,
}

fn load_synth(path: &Path) -> Result<SynthConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: SynthConfig = toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_eval(ctx: &Ctx, protocol: Protocol, a: &EvalArgs) -> Result<()> {
    let params = ctx.params()?;
    let seed = ctx.seed();
    let truth = || -> Result<NodeTruth> {
        Ok(match (&a.synth, &ctx.cfg.synth) {
            (Some(p), _) => NodeTruth::Regions(load_synth(p)?),
            (None, Some(c)) => NodeTruth::Regions(c.clone()),
            (None, None) => NodeTruth::MajorityVote,
        })
    };
    let repetitions = a.repetitions.or(ctx.cfg.repetitions).unwrap_or(10);
    let report = match protocol {
        Protocol::Topology => {
            let streams = ctx.load_streams(&a.streams)?;
            let map = match a.map.clone().or_else(|| ctx.cfg.map.clone()) {
                Some(p) => load_map(p)?.0,
                None => build_from_streams(&streams.iter().collect::<Vec<_>>(), params, ctx.variant())?.0,
            };
            let positions: Vec<Vec2> = streams.iter().flat_map(|s| s.frames.iter().map(|f| f.position)).collect();
            let stats = eval_topology(&map, &positions)?;
            let mut r = EvalReport::new(
                "topology",
                seed,
                1,
                json!({"hyperparameters": map.params(), "variant": map.variant().as_str(), "nodes": map.len()}),
            );
            r.insert("mean_dist", vec![stats.mean_dist]);
            r.insert("max_dist", vec![stats.max_dist]);
            if stats.max_dist > map.params().lambda {
                r.warn(format!("max distance {} exceeds lambda", stats.max_dist));
            }
            r
        }
        Protocol::Objects => {
            let streams = ctx.load_streams(&a.streams)?;
            let head = load_head(ctx.path(&a.head, &ctx.cfg.head, "head")?)?;
            let names = match a.subset.clone().or_else(|| ctx.cfg.subset.clone()) {
                Some(p) => load_subset_names(p)?,
                None => DEFAULT_OBJECT_CLASSES.iter().map(|s| s.to_string()).collect(),
            };
            let subset = resolve_subset(&names, head.class_names())?;
            let variants = ctx.variants(&[Variant::Pm, Variant::PmNoVh, Variant::PmNoVp]);
            object_protocol(&streams, &head, &subset, params, &variants, seed)?
        }
        Protocol::Place => {
            let streams = ctx.load_streams(&a.streams)?;
            crossval_place(&streams, &ctx.mlp_config(), params, ctx.variant(), &truth()?, seed)?
        }
        Protocol::OverTime => {
            let train = load_stream(ctx.path(&a.train, &ctx.cfg.train, "train")?)?;
            let streams = ctx.load_streams(&a.streams)?;
            eval_over_time(&train, &streams, &ctx.mlp_config(), params, ctx.variant(), &truth()?, repetitions, seed)?
        }
        Protocol::Localization => {
            let streams = ctx.load_streams(&a.streams)?;
            let variants = ctx.variants(&[Variant::Pm, Variant::PmNoVh]);
            localization_crossval(&streams, params, ctx.replication()?, &variants, seed)?
        }
    };
    ctx.emit(&report.to_json())
}

fn cmd_lhs(ctx: &Ctx, n: usize) -> Result<()> {
    let ranges = ctx.cfg.lhs.unwrap_or_default();
    let base = ctx.params()?;
    let samples = lhs_sample(&ranges, n, ctx.seed(), &base)?;
    let mut text = serde_json::to_string_pretty(&samples).expect("samples serialize");
    text.push('\n');
    ctx.emit(&text)
}

fn cmd_plot(
    ctx: &Ctx,
    map: &Option<PathBuf>,
    model: &Option<PathBuf>,
    labels: &Option<PathBuf>,
    positions: &[PathBuf],
) -> Result<()> {
    let (map, _) = load_map(ctx.path(map, &ctx.cfg.map, "map")?)?;
    let mut names: Vec<String> = Vec::new();
    let mut node_labels: Option<Vec<usize>> = None;
    if let Some(p) = model.clone().or_else(|| ctx.cfg.model.clone()) {
        let model = load_mlp(p)?;
        let classes = map
            .nodes()
            .iter()
            .map(|n| mlp_predict(&model, &n.c).map(|p| p.class))
            .collect::<Result<Vec<_>>>()?;
        names = model.class_names().to_vec();
        node_labels = Some(classes);
    } else if let Some(p) = labels {
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if rows.len() != map.len() {
            return Err(Error::format(p, format!("{} labels for {} nodes", rows.len(), map.len())));
        }
        let mut ids = Vec::with_capacity(rows.len());
        for r in rows {
            let id = match names.iter().position(|n| n == r) {
                Some(i) => i,
                None => {
                    names.push(r.to_owned());
                    names.len() - 1
                }
            };
            ids.push(id);
        }
        node_labels = Some(ids);
    }
    let mut inputs = Vec::new();
    for p in positions {
        inputs.extend(load_stream(p)?.frames.iter().map(|f| f.position));
    }
    let svg = render_svg(
        &map,
        &PlotOptions {
            node_labels: node_labels.as_deref(),
            label_names: &names,
            inputs: &inputs,
            width: 800.0,
        },
    );
    ctx.emit(&svg)
}
