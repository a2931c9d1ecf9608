use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qs_core::losses::{canonical_name, enumerated_constant, LOSS_NAMES, exact_constant, sharp_constant, FScoreSide, LossFamily, ObservationSpace};
use qs_core::synth::{assemble_report, rate_replication, rate_setup, SyntheticSpec};
use qs_core::{DecodeBudget, DiscreteLoss, LossConfig, OutputLabel, Subset};
use rayon::prelude::*;
use serde_json::{json, Value};

use qs_cli::check::check_loss;
use qs_cli::config::RunConfig;
use qs_cli::data::{parse_multilabel, DataFormat, MultilabelDataset, ParseOptions};
use qs_cli::model_io;
use qs_cli::workflow::{self, FitOptions, KernelKind, LambdaChoice};

#[derive(Parser)]
#[command(name = "qs", version, about = "Quadratic surrogate structured prediction")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    P,
    A,
}

#[derive(Args, Clone)]
struct LossArgs {
    /// Loss name (see `qs constants` for the list).
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Highest relevance level R for ndcg-type losses.
    #[arg(long = "max-relevance")]
    max_relevance: Option<u32>,
    #[arg(long = "fscore-side", value_enum)]
    fscore_side: Option<SideArg>,
    /// Adds a constant to the decomposition offset (fault injection).
    #[arg(long = "inject-offset-error", hide = true)]
    inject_offset_error: Option<f64>,
}

#[derive(Args, Clone)]
struct FitArgs {
    #[arg(long, value_enum)]
    kernel: Option<KernelKind>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Choose λ on validation data; without values the grid is 10^k·n^{-1/2}, k = -3..1.
    #[arg(long = "lambda-grid", num_args = 0.., value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
}

#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "data-format", value_enum, default_value_t = DataFormat::LibsvmMultilabel)]
    data_format: DataFormat,
    /// Feature dimension (inferred from the file when absent).
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sharp constants, embedding dimensions and decoder costs.
    Constants {
        #[command(flatten)]
        loss: LossArgs,
    },
    /// Verifies decompositions and decoders; exits 1 on any failure.
    Check {
        #[command(flatten)]
        loss: LossArgs,
        /// Random decoding instances per loss.
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
    /// Fits a model and writes it as JSON.
    Train {
        #[command(flatten)]
        loss: LossArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        data: DataArgs,
        /// Validation file for --lambda-grid (default: 25% of the data, seeded).
        #[arg(long)]
        val: Option<PathBuf>,
        #[arg(long = "no-standardize")]
        no_standardize: bool,
    },
    /// Predicts labels for every row of a dataset.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Use the weighted brute-force argmin instead of the decoder.
        #[arg(long = "decompose-free")]
        decompose_free: bool,
    },
    /// 0-1, Hamming and F1 on a labelled dataset.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        /// Refit one model per metric loss on this model's training data.
        #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
        model: Option<PathBuf>,
        /// Predictions as written by `qs predict` in text format.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long = "decompose-free")]
        decompose_free: bool,
    },
    /// Learning-rate experiment from a JSON spec.
    Rates {
        #[arg(long)]
        spec: PathBuf,
        /// JSON summary path (default: stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

/// A failed `check`, reported with exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("check failed for: {0}")]
struct CheckFailed(String);

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

impl Table {
    fn render(&self, format: OutputFormat) -> Result<String> {
        Ok(match format {
            OutputFormat::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
                    .collect();
                serde_json::to_string_pretty(&rows)? + "\n"
            }
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(cell))?;
                }
                String::from_utf8(w.into_inner()?)?
            }
            OutputFormat::Text => {
                let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(cell).collect()).collect();
                let widths: Vec<usize> = (0..self.columns.len())
                    .map(|j| cells.iter().map(|r| r[j].len()).chain([self.columns[j].len()]).max().unwrap_or(0))
                    .collect();
                let mut s = String::new();
                let line = |s: &mut String, items: Vec<&str>| {
                    let parts: Vec<String> = items.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
                    s.push_str(parts.join("  ").trim_end());
                    s.push('\n');
                };
                line(&mut s, self.columns.clone());
                for r in &cells {
                    line(&mut s, r.iter().map(String::as_str).collect());
                }
                s
            }
        })
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

struct Ctx {
    config: RunConfig,
    seed: u64,
    /// `--seed` or the config's seed, when either is given.
    seed_override: Option<u64>,
    format: OutputFormat,
    out: Option<PathBuf>,
}

impl Ctx {
    fn budget(&self) -> DecodeBudget {
        DecodeBudget {
            seed: self.seed,
            ..self.config.budget.unwrap_or_default()
        }
    }

    /// Flags first, then the config file.
    fn loss_config(&self, args: &LossArgs, default_m: impl Fn(&str) -> Option<usize>) -> Result<Option<LossConfig>> {
        let base = self.config.loss.clone();
        let name = match (&args.loss, &base) {
            (Some(n), _) => n.clone(),
            (None, Some(b)) => b.name.clone(),
            (None, None) => return Ok(None),
        };
        let Some(canonical) = canonical_name(&name) else {
            bail!("unknown loss `{name}`; expected one of {}", LOSS_NAMES.join(", "));
        };
        // the config's parameters only apply when it names the same loss
        let mut cfg = match base {
            Some(b) if args.loss.is_none() || b.name == name => b,
            _ => LossConfig::new(&name, 0),
        };
        cfg.name = name;
        if let Some(m) = args.m {
            cfg.m = m;
        }
        if cfg.m == 0 {
            match default_m(canonical) {
                Some(m) => cfg.m = m,
                None => bail!("--m is required"),
            }
        }
        if args.k.is_some() {
            cfg.k = args.k;
        }
        if canonical == "block" && cfg.partition.is_none() && cfg.m <= qs_core::losses::MAX_DENSE_SUBSET_M {
            cfg.partition = Some(by_cardinality(cfg.m));
        }
        if args.max_relevance.is_some() {
            cfg.max_relevance = args.max_relevance;
        }
        if let Some(side) = args.fscore_side {
            cfg = cfg.with_fscore_side(match side {
                SideArg::P => FScoreSide::P,
                SideArg::A => FScoreSide::A,
            });
        }
        Ok(Some(cfg))
    }

    fn build_loss(&self, cfg: &LossConfig, args: &LossArgs) -> Result<DiscreteLoss> {
        let loss = cfg.build()?;
        Ok(match args.inject_offset_error {
            Some(delta) => loss.with_offset_error(delta),
            None => loss,
        })
    }

    fn fit_options(&self, args: &FitArgs) -> Result<FitOptions> {
        if args.lambda.is_some() && args.lambda_grid.is_some() {
            bail!("--lambda and --lambda-grid are mutually exclusive");
        }
        let lambda = if let Some(l) = args.lambda {
            LambdaChoice::Fixed(l)
        } else if let Some(g) = &args.lambda_grid {
            LambdaChoice::Grid(g.clone())
        } else if let Some(l) = self.config.lambda {
            LambdaChoice::Fixed(l)
        } else if let Some(g) = &self.config.lambda_grid {
            LambdaChoice::Grid(g.clone())
        } else {
            LambdaChoice::Default
        };
        let bad = match &lambda {
            LambdaChoice::Fixed(l) => (!(*l > 0.0)).then_some(*l),
            LambdaChoice::Grid(g) => g.iter().copied().find(|l| !(*l > 0.0)),
            LambdaChoice::Default => None,
        };
        if let Some(l) = bad {
            bail!("λ must be positive, got {l}");
        }
        Ok(FitOptions {
            kernel: args.kernel.or(self.config.kernel).unwrap_or_default(),
            bandwidth: args.bandwidth.or(self.config.bandwidth),
            lambda,
            budget: self.budget(),
        })
    }
}

/// Subsets of `{0..m}` grouped by cardinality; the default block partition.
fn by_cardinality(m: usize) -> Vec<Vec<Vec<usize>>> {
    let mut blocks = vec![Vec::new(); m + 1];
    for code in 0u64..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|&j| code >> j & 1 == 1).collect();
        blocks[idx.len()].push(idx);
    }
    blocks
}

fn is_ranking(canonical: &str) -> bool {
    matches!(canonical, "ndcg" | "eru" | "ndcg_type" | "pd" | "map")
}

fn default_losses(m_subsets: usize, m_perms: usize) -> Vec<LossConfig> {
    vec![
        LossConfig::new("0-1", m_subsets),
        LossConfig::new("block", m_subsets).with_partition(by_cardinality(m_subsets)),
        LossConfig::new("hamming", m_subsets),
        LossConfig::new("prec@k", m_subsets).with_k((m_subsets / 2).max(1)),
        LossConfig::new("fscore", m_subsets),
        LossConfig::new("ndcg", m_perms),
        LossConfig::new("eru", m_perms),
        LossConfig::new("pd", m_perms),
        LossConfig::new("map", m_perms),
    ]
}

fn fmt_f(v: f64) -> Value {
    json!(v)
}

fn cmd_constants(ctx: &Ctx, args: &LossArgs) -> Result<()> {
    let configs = match ctx.loss_config(args, |_| Some(4))? {
        Some(c) => vec![c],
        None => {
            let m = args.m.unwrap_or(4);
            default_losses(m, m)
        }
    };
    let mut rows = Vec::new();
    for cfg in configs {
        let loss = ctx.build_loss(&cfg, args)?;
        let c = sharp_constant(&loss);
        let exact = exact_constant(&loss);
        let enumerated = enumerated_constant(&loss).ok().map(|e| e.a);
        let note = match loss.family() {
            LossFamily::ZeroOne => "r = 2^m",
            LossFamily::Block => "r = b",
            LossFamily::Hamming | LossFamily::PrecAtK | LossFamily::NdcgType => "r = m",
            LossFamily::FScore => "r = m^2 + 1",
            LossFamily::PairwiseDisagreement => "r = m(m-1)/2",
            LossFamily::MeanAveragePrecision => "r = m(m+1)/2",
        };
        rows.push(vec![
            json!(loss.name()),
            json!(loss.m()),
            json!(c.r),
            fmt_f(c.f_inf_norm),
            fmt_f(c.u_max),
            fmt_f(c.a),
            json!(format!("{:?}", c.kind).to_lowercase()),
            fmt_f(exact.a),
            enumerated.map_or(Value::Null, fmt_f),
            json!(loss.decoder_complexity()),
            json!(note),
        ]);
    }
    let table = Table {
        columns: vec!["loss", "m", "r", "f_inf_norm", "u_max", "a", "kind", "exact_a", "enumerated_a", "decoder", "note"],
        rows,
    };
    emit(&ctx.out, &table.render(ctx.format)?)
}

fn cmd_check(ctx: &Ctx, args: &LossArgs, instances: usize) -> Result<()> {
    let configs = match ctx.loss_config(args, |name| Some(if is_ranking(name) { 5 } else { 6 }))? {
        Some(c) => vec![c],
        None => default_losses(args.m.unwrap_or(6), args.m.unwrap_or(5)),
    };
    let budget = ctx.budget();
    let results: Vec<Result<_>> = configs
        .par_iter()
        .map(|cfg| {
            let loss = ctx.build_loss(cfg, args)?;
            Ok(check_loss(&loss, instances, ctx.seed, &budget)?)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        let r = r?;
        if !r.passed {
            failed.push(format!("{} (m={})", r.loss, r.m));
        }
        rows.push(vec![
            json!(r.loss),
            json!(r.m),
            fmt_f(r.decomposition_error),
            json!(r.instances),
            json!(r.mismatches),
            json!(if r.passed { "pass" } else { "fail" }),
        ]);
    }
    let table = Table {
        columns: vec!["loss", "m", "decomposition_error", "instances", "mismatches", "status"],
        rows,
    };
    emit(&ctx.out, &table.render(ctx.format)?)?;
    if !failed.is_empty() {
        return Err(CheckFailed(failed.join(", ")).into());
    }
    Ok(())
}

fn load_data(args: &DataArgs, m: Option<usize>) -> Result<MultilabelDataset> {
    parse_multilabel(&args.data, args.data_format, ParseOptions { m, d: args.d })
        .with_context(|| format!("loading {}", args.data.display()))
}

fn needs_subsets(loss: &DiscreteLoss) -> Result<()> {
    if loss.observation_space() != ObservationSpace::Subsets {
        bail!("loss `{}` needs relevance-score observations, which multilabel files do not carry", loss.name());
    }
    Ok(())
}

fn cmd_train(ctx: &Ctx, largs: &LossArgs, fargs: &FitArgs, dargs: &DataArgs, val: &Option<PathBuf>, no_std: bool) -> Result<()> {
    let cfg_m = ctx.loss_config(largs, |_| Some(usize::MAX))?;
    let Some(mut cfg) = cfg_m else {
        bail!("--loss is required");
    };
    let m_known = (cfg.m != usize::MAX).then_some(cfg.m);
    let ds = load_data(dargs, m_known)?;
    cfg.m = ds.m;
    let loss = ctx.build_loss(&cfg, largs)?;
    needs_subsets(&loss)?;
    let opts = ctx.fit_options(fargs)?;

    let (train, val_ds) = match (val, &opts.lambda) {
        (Some(path), _) => {
            let v = parse_multilabel(path, dargs.data_format, ParseOptions { m: Some(ds.m), d: Some(ds.d) })
                .with_context(|| format!("loading {}", path.display()))?;
            (ds, Some(v))
        }
        (None, LambdaChoice::Grid(_)) => {
            let s = qs_cli::data::split(ds.n(), (0.75, 0.25, 0.0), ctx.seed)?;
            (ds.subset(&s.train), Some(ds.subset(&s.val)))
        }
        (None, _) => (ds, None),
    };
    let raw = train.dense();
    let standardizer = (!no_std).then(|| qs_cli::data::Standardizer::fit(&raw));
    let tx = |rows: Vec<Vec<f64>>| match &standardizer {
        Some(s) => s.apply_all(&rows),
        None => rows,
    };
    let x = tx(raw.clone());
    let y = train.observations();
    let val_xy = val_ds.map(|v| (tx(v.dense()), v.observations()));
    let (model, curve) = workflow::fit(&loss, &x, &y, val_xy.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())), &opts)?;
    for p in &curve {
        eprintln!("lambda {:e}: validation risk {:.6}", p.lambda, p.risk);
    }
    eprintln!("trained {} on n = {} with lambda = {:e}", loss.name(), model.n(), model.lambda());
    let file = model_io::ModelFile::from_model(&model, standardizer);
    let text = serde_json::to_string(&file)? + "\n";
    emit(&ctx.out, &text)
}

fn format_label(z: &OutputLabel) -> String {
    match z {
        OutputLabel::Subset(s) | OutputLabel::KSubset { bits: s, .. } => {
            s.ones().map(|j| j.to_string()).collect::<Vec<_>>().join(",")
        }
        OutputLabel::Permutation(p) => p.order().iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" "),
    }
}

fn parse_prediction_line(line: &str, m: usize, lineno: usize) -> Result<Subset> {
    let mut s = Subset::empty(m);
    for t in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let j: usize = t.parse().with_context(|| format!("predictions line {lineno}: bad label `{t}`"))?;
        if j >= m {
            bail!("predictions line {lineno}: label {j} is out of range for m = {m}");
        }
        s.set(j, true);
    }
    Ok(s)
}

fn transform(std: &Option<qs_cli::data::Standardizer>, rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    match std {
        Some(s) => s.apply_all(&rows),
        None => rows,
    }
}

fn cmd_predict(ctx: &Ctx, model_path: &Path, dargs: &DataArgs, decompose_free: bool) -> Result<()> {
    let (model, std) = model_io::load(model_path)?;
    let loss_m = model.loss().m();
    let ds = load_data(dargs, Some(loss_m))?;
    if ds.d > model.input_dim() {
        bail!("data has {} features but the model was trained on {}", ds.d, model.input_dim());
    }
    let mut rows = ds.dense();
    rows.iter_mut().for_each(|r| r.resize(model.input_dim(), 0.0));
    let x = transform(&std, rows);
    let preds = workflow::predict_all(&model, &x, &ctx.budget(), decompose_free)?;
    let text = match ctx.format {
        OutputFormat::Text => preds.iter().map(|z| format_label(z) + "\n").collect(),
        _ => Table {
            columns: vec!["index", "prediction"],
            rows: preds.iter().enumerate().map(|(i, z)| vec![json!(i), json!(format_label(z))]).collect(),
        }
        .render(ctx.format)?,
    };
    emit(&ctx.out, &text)
}

fn metrics_table(ctx: &Ctx, name: &str, m: &workflow::Metrics) -> Result<()> {
    let table = Table {
        columns: vec!["dataset", "zero_one_loss", "hamming_loss", "f1_score"],
        rows: vec![vec![json!(name), fmt_f(m.zero_one_loss), fmt_f(m.hamming_loss), fmt_f(m.f1_score)]],
    };
    emit(&ctx.out, &table.render(ctx.format)?)
}

fn cmd_eval(ctx: &Ctx, dargs: &DataArgs, model: &Option<PathBuf>, predictions: &Option<PathBuf>, decompose_free: bool) -> Result<()> {
    if let Some(path) = predictions {
        let ds = load_data(dargs, None)?;
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let lines: Vec<&str> = text.lines().collect();
        let preds = lines
            .iter()
            .enumerate()
            .map(|(i, l)| parse_prediction_line(l, ds.m, i + 1))
            .collect::<Result<Vec<_>>>()?;
        let m = workflow::multilabel_metrics(&preds, &ds.labels)?;
        return metrics_table(ctx, &ds.name, &m);
    }
    let (base, std) = model_io::load(model.as_ref().expect("clap requires one"))?;
    let m = base.loss().m();
    let ds = load_data(dargs, Some(m))?;
    let mut rows = ds.dense();
    rows.iter_mut().for_each(|r| r.resize(base.input_dim(), 0.0));
    let x = transform(&std, rows);
    // one fit per metric loss on the stored training data, same kernel and λ
    let mut per_loss = Vec::new();
    for name in ["0-1", "hamming", "fscore"] {
        let loss = LossConfig::new(name, m).build()?;
        let fitted = qs_core::QsModel::fit(&loss, *base.kernel(), base.lambda(), base.x_train(), base.observations())?;
        let preds = workflow::predict_all(&fitted, &x, &ctx.budget(), decompose_free)?;
        let preds: Vec<Subset> = preds.iter().map(|z| z.as_subset().expect("subset loss").clone()).collect();
        per_loss.push(workflow::multilabel_metrics(&preds, &ds.labels)?);
    }
    let metrics = workflow::Metrics {
        zero_one_loss: per_loss[0].zero_one_loss,
        hamming_loss: per_loss[1].hamming_loss,
        f1_score: per_loss[2].f1_score,
    };
    metrics_table(ctx, &ds.name, &metrics)
}

fn cmd_rates(ctx: &Ctx, spec_path: &Path, summary: &Option<PathBuf>) -> Result<()> {
    let text = fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let mut spec: SyntheticSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    if let Some(seed) = ctx.seed_override {
        spec.seed = seed;
    }
    let setup = rate_setup(&spec)?;
    let records: Vec<_> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| rate_replication(&setup, rep))
        .collect::<qs_core::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let report = assemble_report(&setup, records);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["loss", "noise_mode", "n", "replication", "excess_exact", "excess_test", "seed"])?;
    for r in &report.records {
        w.write_record([
            report.loss.clone(),
            report.noise_mode.clone(),
            r.n.to_string(),
            r.replication.to_string(),
            format!("{:?}", r.excess_exact),
            r.excess_test.map_or(String::new(), |t| format!("{t:?}")),
            r.seed.to_string(),
        ])?;
    }
    emit(&ctx.out, &String::from_utf8(w.into_inner()?)?)?;
    let summary_json = serde_json::to_string_pretty(&json!({
        "loss": report.loss,
        "noise_mode": report.noise_mode,
        "seed": spec.seed,
        "n_grid": spec.n_grid,
        "replications": spec.replications,
        "slope": report.slope,
        "slope_stderr": report.slope_stderr,
        "replication_slopes": report.replication_slopes,
        "notes": report.notes,
    }))? + "\n";
    match summary {
        Some(p) => fs::write(p, summary_json).with_context(|| format!("writing {}", p.display()))?,
        None => eprint!("{summary_json}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let threads = cli.global.threads.or(config.threads);
    if let Some(t) = threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    let seed_override = cli.global.seed.or(config.seed);
    let ctx = Ctx {
        seed: seed_override.unwrap_or(0),
        seed_override,
        config,
        format: cli.global.format,
        out: cli.global.out.clone(),
    };
    match &cli.command {
        Command::Constants { loss } => cmd_constants(&ctx, loss),
        Command::Check { loss, instances } => cmd_check(&ctx, loss, *instances),
        Command::Train {
            loss,
            fit,
            data,
            val,
            no_standardize,
        } => cmd_train(&ctx, loss, fit, data, val, *no_standardize),
        Command::Predict {
            model,
            data,
            decompose_free,
        } => cmd_predict(&ctx, model, data, *decompose_free),
        Command::Eval {
            data,
            model,
            predictions,
            decompose_free,
        } => cmd_eval(&ctx, data, model, predictions, *decompose_free),
        Command::Rates { spec, summary } => cmd_rates(&ctx, spec, summary),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailed>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
