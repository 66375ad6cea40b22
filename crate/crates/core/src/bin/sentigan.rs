//! Command-line front end: reproducible pipelines from corpus synthesis
//! through image export, GAN training, prediction, and the baseline
//! comparison harness.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use sentigan::baselines::{self, FeatureVector, HarnessConfig};
use sentigan::corpus::{
    self, load_corpus, load_labels, store_corpus, store_labels, synth_corpus, Label,
    SynthProfile, WindowSpec,
};
use sentigan::emotion::{lexicon_to_tsv, load_lexicon, synth_lexicon};
use sentigan::gan::{self, TrainConfig, TrainMode};
use sentigan::imaging::{
    build_all_images, default_reference_time, export_image, import_image_csv,
    SentimentImage,
};
use sentigan::textstats::{cooccurrence_graph, graph_to_csv};

#[derive(Debug)]
enum CliError {
    /// Bad flags, bad config values, missing required settings.
    Usage(String),
    /// Unreadable or malformed data, or failing domain preconditions.
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

fn usage(msg: impl Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn data(msg: impl Display) -> CliError {
    CliError::Data(msg.to_string())
}

#[derive(Parser)]
#[command(name = "sentigan", version, about = "Relapse-prediction pipeline over sentiment images")]
struct Cli {
    /// Plain-text key=value config file; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus, labels file, and lexicon.
    Synth(SynthArgs),
    /// Export the phi-coefficient word co-occurrence graph as CSV.
    Cooccur(CooccurArgs),
    /// Build per-user sentiment images (CSV + PGM) and a manifest.
    Images(ImagesArgs),
    /// Train the semi-supervised GAN; write checkpoint and loss CSV.
    Train(TrainArgs),
    /// Score users with a trained checkpoint.
    Predict(PredictArgs),
    /// Run the LogReg/SVM/KNN/GAN comparison harness.
    Evaluate(EvaluateArgs),
    /// Export who-replies-to-whom edges as CSV.
    ExportEdges(ExportEdgesArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for corpus.jsonl, labels.tsv, lexicon.tsv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of users (>= 2).
    #[arg(long)]
    users: Option<usize>,
    /// Fraction of users labeled Relapsed, in (0, 1).
    #[arg(long)]
    relapse_fraction: Option<f64>,
    /// Class-separation signal in [0, 1]; 0 = indistinguishable classes.
    #[arg(long)]
    margin: Option<f64>,
}

#[derive(Args)]
struct CooccurArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    min_phi: Option<f64>,
    #[arg(long)]
    min_count: Option<u64>,
    /// Optional stoplist file, one word per line.
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImagesArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Optional user-label TSV applied before imaging.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    observation_days: Option<u32>,
    /// Reference epoch second; default = newest comment + 1.
    #[arg(long)]
    reference_time: Option<i64>,
    /// Output directory for per-user files plus manifest.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Manifest written by `images`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    noise_dim: Option<usize>,
    #[arg(long)]
    d_steps: Option<usize>,
    /// `semi-supervised` (default) or `vanilla`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for model.ckpt and loss.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output CSV path (user_id,relapse_probability).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Comma-separated training fractions in (0, 1).
    #[arg(long)]
    fractions: Option<String>,
    /// Comma-separated seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// GAN epochs per harness cell.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    noise_dim: Option<usize>,
    #[arg(long)]
    knn_k: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportEdgesArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output CSV path (user_from,user_to,count).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// key=value config file; `#` starts a comment; flags override entries.
struct Settings {
    entries: HashMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Settings, CliError> {
        let mut entries = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    usage(format!("config line {}: expected key=value", idx + 1))
                })?;
                entries.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Settings { entries })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| usage(format!("config key `{key}`: cannot parse `{raw}`"))),
        }
    }

    fn resolve<T: FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        Ok(flag.or(self.get(key)?).unwrap_or(default))
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        flag.or(self.get(key)?)
            .ok_or_else(|| usage(format!("missing required setting `{key}` (flag --{})", key.replace('_', "-"))))
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = Settings::load(cli.config.as_deref()).and_then(|settings| {
        match cli.command {
            Command::Synth(args) => cmd_synth(&settings, args),
            Command::Cooccur(args) => cmd_cooccur(&settings, args),
            Command::Images(args) => cmd_images(&settings, args),
            Command::Train(args) => cmd_train(&settings, args),
            Command::Predict(args) => cmd_predict(&settings, args),
            Command::Evaluate(args) => cmd_evaluate(&settings, args),
            Command::ExportEdges(args) => cmd_export_edges(&settings, args),
        }
    });
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.code());
    }
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| usage(format!("cannot create output directory {}: {e}", dir.display())))
}

fn ensure_parent_dir(file: &Path) -> Result<(), CliError> {
    if let Some(parent) = file.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                usage(format!("cannot create output directory {}: {e}", parent.display()))
            })?;
        }
    }
    Ok(())
}

fn ensure_readable(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(usage(format!("{what} {} does not exist", path.display())));
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| data(format!("cannot write {}: {e}", path.display())))
}

fn cmd_synth(settings: &Settings, args: SynthArgs) -> Result<(), CliError> {
    let out: PathBuf = settings.require(args.out, "out")?;
    let seed = settings.resolve(args.seed, "seed", 0)?;
    let users = settings.resolve(args.users, "users", 1000)?;
    let relapse_fraction = settings.resolve(args.relapse_fraction, "relapse_fraction", 0.67)?;
    let mut profile = SynthProfile::default();
    profile.margin = settings.resolve(args.margin, "margin", profile.margin)?;

    if users < 2 {
        return Err(usage("--users must be >= 2"));
    }
    if !(relapse_fraction > 0.0 && relapse_fraction < 1.0) {
        return Err(usage("--relapse-fraction must lie in (0, 1)"));
    }
    if !(0.0..=1.0).contains(&profile.margin) {
        return Err(usage("--margin must lie in [0, 1]"));
    }
    ensure_out_dir(&out)?;

    let corpus = synth_corpus(seed, users, relapse_fraction, &profile)
        .map_err(|e| data(e.to_string()))?;
    store_corpus(&corpus, out.join("corpus.jsonl")).map_err(|e| data(e.to_string()))?;
    store_labels(&corpus, out.join("labels.tsv")).map_err(|e| data(e.to_string()))?;
    write_file(&out.join("lexicon.tsv"), &lexicon_to_tsv(&synth_lexicon()))?;
    println!(
        "wrote corpus.jsonl, labels.tsv, lexicon.tsv for {} users to {}",
        users,
        out.display()
    );
    Ok(())
}

fn load_stoplist(path: &Path) -> Result<HashSet<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| data(format!("cannot read stoplist {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

fn cmd_cooccur(settings: &Settings, args: CooccurArgs) -> Result<(), CliError> {
    let corpus_path: PathBuf = settings.require(args.corpus, "corpus")?;
    let out: PathBuf = settings.require(args.out, "out")?;
    let min_phi = settings.resolve(args.min_phi, "min_phi", 0.2)?;
    let min_count = settings.resolve(args.min_count, "min_count", 1)?;
    let stoplist_path: Option<PathBuf> = args.stoplist.or(settings.get("stoplist")?);

    if min_count < 1 {
        return Err(usage("--min-count must be >= 1"));
    }
    ensure_readable(&corpus_path, "corpus")?;
    if let Some(p) = &stoplist_path {
        ensure_readable(p, "stoplist")?;
    }
    ensure_parent_dir(&out)?;

    let corpus = load_corpus(&corpus_path).map_err(|e| data(e.to_string()))?;
    let stoplist = stoplist_path.as_deref().map(load_stoplist).transpose()?;
    let scores = cooccurrence_graph(&corpus, min_phi, min_count, stoplist.as_ref())
        .map_err(|e| data(e.to_string()))?;
    write_file(&out, &graph_to_csv(&scores))?;
    println!("wrote {} word pairs to {}", scores.len(), out.display());
    Ok(())
}

const MANIFEST_HEADER: &str = "user_id,label,file";

fn cmd_images(settings: &Settings, args: ImagesArgs) -> Result<(), CliError> {
    let corpus_path: PathBuf = settings.require(args.corpus, "corpus")?;
    let lexicon_path: PathBuf = settings.require(args.lexicon, "lexicon")?;
    let labels_path: Option<PathBuf> = args.labels.or(settings.get("labels")?);
    let out: PathBuf = settings.require(args.out, "out")?;
    let window = WindowSpec {
        observation_days: settings.resolve(
            args.observation_days,
            "observation_days",
            WindowSpec::default().observation_days,
        )?,
        ..WindowSpec::default()
    };
    if window.observation_days == 0 {
        return Err(usage("--observation-days must be >= 1"));
    }
    ensure_readable(&corpus_path, "corpus")?;
    ensure_readable(&lexicon_path, "lexicon")?;
    if let Some(p) = &labels_path {
        ensure_readable(p, "labels")?;
    }
    ensure_out_dir(&out)?;

    let mut corpus = load_corpus(&corpus_path).map_err(|e| data(e.to_string()))?;
    if let Some(p) = &labels_path {
        load_labels(&mut corpus, p).map_err(|e| data(e.to_string()))?;
    }
    let lexicon = load_lexicon(&lexicon_path).map_err(|e| data(e.to_string()))?;
    let reference_time = settings
        .resolve(args.reference_time, "reference_time", default_reference_time(&corpus))?;

    let images = build_all_images(&corpus, &lexicon, &window, reference_time);
    let mut manifest = String::from(MANIFEST_HEADER);
    manifest.push('\n');
    for image in &images {
        export_image(image, out.join(&image.user_id)).map_err(|e| data(e.to_string()))?;
        manifest.push_str(&format!(
            "{},{},{}.csv\n",
            image.user_id,
            image.label.as_str(),
            image.user_id
        ));
    }
    write_file(&out.join("manifest.csv"), &manifest)?;
    println!("wrote {} images and manifest.csv to {}", images.len(), out.display());
    Ok(())
}

/// Load every image referenced by a manifest; paths resolve relative to
/// the manifest's directory.
fn load_manifest(path: &Path) -> Result<Vec<SentimentImage>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| data(format!("cannot read manifest {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == MANIFEST_HEADER => {}
        _ => return Err(data(format!("manifest {}: bad header", path.display()))),
    }
    let mut images = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(data(format!("manifest line {}: expected 3 fields", idx + 2)));
        }
        let image = import_image_csv(base.join(fields[2])).map_err(|e| data(e.to_string()))?;
        if image.user_id != fields[0] {
            return Err(data(format!(
                "manifest line {}: user_id mismatch ({} vs {})",
                idx + 2,
                fields[0],
                image.user_id
            )));
        }
        images.push(image);
    }
    Ok(images)
}

fn parse_mode(mode: &str) -> Result<TrainMode, CliError> {
    match mode {
        "semi-supervised" | "semi" => Ok(TrainMode::SemiSupervised),
        "vanilla" => Ok(TrainMode::Vanilla),
        other => Err(usage(format!("unknown mode `{other}` (semi-supervised | vanilla)"))),
    }
}

fn split_examples(
    images: &[SentimentImage],
) -> (Vec<(sentigan::tensornet::Tensor, usize)>, Vec<sentigan::tensornet::Tensor>) {
    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    for image in images {
        let tensor = gan::image_tensor(image);
        match gan::class_index(image.label) {
            Some(class) => labeled.push((tensor, class)),
            None => unlabeled.push(tensor),
        }
    }
    (labeled, unlabeled)
}

fn cmd_train(settings: &Settings, args: TrainArgs) -> Result<(), CliError> {
    let manifest: PathBuf = settings.require(args.manifest, "manifest")?;
    let out: PathBuf = settings.require(args.out, "out")?;
    let defaults = TrainConfig::default();
    let mode = parse_mode(&settings.resolve(
        args.mode,
        "mode",
        "semi-supervised".to_string(),
    )?)?;
    let config = TrainConfig {
        epochs: settings.resolve(args.epochs, "epochs", defaults.epochs)?,
        batch_size: settings.resolve(args.batch_size, "batch_size", defaults.batch_size)?,
        learning_rate: settings.resolve(
            args.learning_rate,
            "learning_rate",
            defaults.learning_rate,
        )?,
        d_steps_per_g_step: settings.resolve(args.d_steps, "d_steps", defaults.d_steps_per_g_step)?,
        noise_dim: settings.resolve(args.noise_dim, "noise_dim", defaults.noise_dim)?,
        seed: settings.resolve(args.seed, "seed", defaults.seed)?,
        mode,
    };
    if config.epochs == 0 || config.batch_size == 0 || config.noise_dim == 0 {
        return Err(usage("epochs, batch-size and noise-dim must be >= 1"));
    }
    if config.d_steps_per_g_step == 0 {
        return Err(usage("--d-steps must be >= 1"));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(usage("--learning-rate must be positive"));
    }
    ensure_readable(&manifest, "manifest")?;
    ensure_out_dir(&out)?;

    let images = load_manifest(&manifest)?;
    let (labeled, unlabeled) = split_examples(&images);
    let config = TrainConfig {
        batch_size: config.batch_size.min(labeled.len().max(1)),
        ..config
    };
    let (model, reports) =
        gan::train(&labeled, &unlabeled, &config).map_err(|e| data(e.to_string()))?;
    gan::store_gan_model(&model, out.join("model.ckpt")).map_err(|e| data(e.to_string()))?;
    write_file(&out.join("loss.csv"), &gan::loss_history_csv(&reports))?;
    println!(
        "trained {} epochs on {} labeled / {} unlabeled images; wrote model.ckpt and loss.csv to {}",
        config.epochs,
        labeled.len(),
        unlabeled.len(),
        out.display()
    );
    Ok(())
}

fn cmd_predict(settings: &Settings, args: PredictArgs) -> Result<(), CliError> {
    let checkpoint: PathBuf = settings.require(args.checkpoint, "checkpoint")?;
    let manifest: PathBuf = settings.require(args.manifest, "manifest")?;
    let out: PathBuf = settings.require(args.out, "out")?;
    ensure_readable(&checkpoint, "checkpoint")?;
    ensure_readable(&manifest, "manifest")?;
    ensure_parent_dir(&out)?;

    let model = gan::load_gan_model(&checkpoint).map_err(|e| data(e.to_string()))?;
    let images = load_manifest(&manifest)?;
    let mut csv = String::from("user_id,relapse_probability\n");
    for image in &images {
        let p = gan::predict_relapse(&model, image).map_err(|e| data(e.to_string()))?;
        csv.push_str(&format!("{},{:.6}\n", image.user_id, p));
    }
    write_file(&out, &csv)?;
    println!("wrote {} predictions to {}", images.len(), out.display());
    Ok(())
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| usage(format!("bad {what} entry `{s}`"))))
        .collect()
}

fn cmd_evaluate(settings: &Settings, args: EvaluateArgs) -> Result<(), CliError> {
    let manifest: PathBuf = settings.require(args.manifest, "manifest")?;
    let out: PathBuf = settings.require(args.out, "out")?;
    let fractions: Vec<f64> = parse_list(
        &settings.resolve(args.fractions, "fractions", "0.9,0.8,0.7,0.6,0.5".to_string())?,
        "fraction",
    )?;
    let seeds: Vec<u64> =
        parse_list(&settings.resolve(args.seeds, "seeds", "0".to_string())?, "seed")?;
    if fractions.is_empty() || seeds.is_empty() {
        return Err(usage("--fractions and --seeds must be non-empty"));
    }
    if fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
        return Err(usage("all fractions must lie in (0, 1)"));
    }
    let mut config = HarnessConfig::default();
    config.knn_k = settings.resolve(args.knn_k, "knn_k", config.knn_k)?;
    config.gan.epochs = settings.resolve(args.epochs, "epochs", 60)?;
    config.gan.batch_size = settings.resolve(args.batch_size, "batch_size", config.gan.batch_size)?;
    config.gan.learning_rate =
        settings.resolve(args.learning_rate, "learning_rate", config.gan.learning_rate)?;
    config.gan.noise_dim = settings.resolve(args.noise_dim, "noise_dim", config.gan.noise_dim)?;
    if config.knn_k == 0 {
        return Err(usage("--knn-k must be >= 1"));
    }
    ensure_readable(&manifest, "manifest")?;
    ensure_parent_dir(&out)?;

    let images = load_manifest(&manifest)?;
    let mut dataset = Vec::new();
    for image in &images {
        let relapsed = match image.label {
            Label::Relapsed => true,
            Label::Abstinent => false,
            Label::Unlabeled => continue,
        };
        let features =
            FeatureVector::from_image(image);
        dataset.push((features, relapsed));
    }
    let rows = baselines::compare_harness(&dataset, &fractions, &seeds, &config)
        .map_err(|e| data(e.to_string()))?;
    write_file(&out, &baselines::harness_to_csv(&rows))?;
    println!("wrote {} harness rows to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_export_edges(settings: &Settings, args: ExportEdgesArgs) -> Result<(), CliError> {
    let corpus_path: PathBuf = settings.require(args.corpus, "corpus")?;
    let out: PathBuf = settings.require(args.out, "out")?;
    ensure_readable(&corpus_path, "corpus")?;
    ensure_parent_dir(&out)?;

    let corpus = load_corpus(&corpus_path).map_err(|e| data(e.to_string()))?;
    let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for comment in corpus.comments.values() {
        let Some(parent_id) = &comment.parent_id else { continue };
        let Some(parent) = corpus.comments.get(parent_id) else { continue };
        if parent.author == comment.author {
            continue; // self-replies carry no interaction signal
        }
        *counts
            .entry((comment.author.clone(), parent.author.clone()))
            .or_default() += 1;
    }
    let mut csv = String::from("user_from,user_to,count\n");
    for ((from, to), count) in &counts {
        csv.push_str(&format!("{from},{to},{count}\n"));
    }
    write_file(&out, &csv)?;
    println!("wrote {} reply edges to {}", counts.len(), out.display());
    Ok(())
}

// Referenced by integration tests to keep paths consistent.
#[allow(dead_code)]
fn _api_surface_check() {
    let _ = corpus::SYNTH_NEUTRAL_WORDS;
}
