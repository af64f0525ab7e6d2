use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::order::{order_study, OrderRule};
use crate::bench::pca::{pca_2d, write_points, PcaPoint};
use crate::bench::report::{evaluate, write_wall_times, EvalReport, EVAL_SEEDS};
use crate::cuts::SolveConfig;
use crate::error::{Error, Result};
use crate::features::NUM_FEATURES;
use crate::generate::{generate, write_corpus, FamilyKind, GenSpec, Manifest};
use crate::hem::{HemParams, HemSelector, HemVariant};
use crate::milp::MilpInstance;
use crate::nn::{Checkpoint, CHECKPOINT_SCHEMA_VERSION};
use crate::select::{
    CutSelector, Efficacy, NoCuts, NormalizedViolation, RandomSelector, SbpParams, SbpSelector,
};
use crate::train::{es_train_sbp, root_pool, train, EsConfig, TrainConfig};

pub const INSTANCES_DIR: &str = "instances";
pub const CHECKPOINTS_DIR: &str = "checkpoints";
pub const RUN_MANIFEST: &str = "run_manifest.json";
/// Training instances used for model selection during training.
const MODEL_SELECTION_POOL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        }
    }
}

/// A selector that can appear in a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    NoCuts,
    Random,
    #[serde(rename = "NV")]
    Nv,
    Eff,
    #[serde(rename = "SBP")]
    Sbp,
    #[serde(rename = "HEM")]
    Hem,
    #[serde(rename = "HEM w/o H")]
    HemNoH,
    #[serde(rename = "HEM-ratio")]
    HemRatio,
    #[serde(rename = "HEM-ratio-order")]
    HemRatioOrder,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::NoCuts,
        Method::Random,
        Method::Nv,
        Method::Eff,
        Method::Sbp,
        Method::Hem,
        Method::HemNoH,
        Method::HemRatio,
        Method::HemRatioOrder,
    ];

    /// Checkpoint file under `checkpoints/`, for learned methods.
    pub fn checkpoint(&self) -> Option<&'static str> {
        match self {
            Method::Sbp => Some("sbp.json"),
            Method::Hem => Some("hem.json"),
            Method::HemNoH => Some("hem_no_h.json"),
            Method::HemRatio | Method::HemRatioOrder => Some("hem_ratio.json"),
            _ => None,
        }
    }

    fn hem_variant(&self, ratio: f64) -> Option<HemVariant> {
        match self {
            Method::Hem => Some(HemVariant::Full),
            Method::HemNoH => Some(HemVariant::NoHigher),
            Method::HemRatio | Method::HemRatioOrder => Some(HemVariant::FixedRatio(ratio)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrderConfig {
    pub rule: OrderRule,
    pub n_orders: usize,
    /// Instances with fewer candidates are ignored by the spread summary.
    pub min_candidates: usize,
}

impl Default for OrderConfig {
    fn default() -> Self {
        OrderConfig {
            rule: OrderRule::RandomAll,
            n_orders: 10,
            min_candidates: 5,
        }
    }
}

/// Everything a command needs. `solve` and `ratio` override the copies
/// inside `train` and `es` so every stage sees the same solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilyKind,
    pub preset: Preset,
    pub count: usize,
    /// Master seed: instance generation, and training unless overridden.
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Selection ratio of the fixed-ratio rules, SBP and HEM-ratio.
    pub ratio: f64,
    pub solve: SolveConfig,
    pub train: TrainConfig,
    pub es: EsConfig,
    pub eval_seeds: Vec<u64>,
    pub order: OrderConfig,
    pub scales: Vec<f64>,
    /// Instances generated per scale by `generalize`.
    pub generalize_count: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            family: FamilyKind::SetCovering,
            preset: Preset::Desk,
            count: 100,
            seed: 1,
            methods: Method::ALL.to_vec(),
            ratio: 0.2,
            solve: SolveConfig::default(),
            train: TrainConfig::default(),
            es: EsConfig::default(),
            eval_seeds: EVAL_SEEDS.to_vec(),
            order: OrderConfig::default(),
            scales: vec![2.0],
            generalize_count: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Sets the master, training and ES seeds at once.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self.es.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if self.count == 0 {
            return fail("count must be positive");
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty");
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return fail("ratio must lie in (0, 1]");
        }
        if self.eval_seeds.is_empty() {
            return fail("eval_seeds must not be empty");
        }
        if self.order.n_orders == 0 {
            return fail("order.n_orders must be positive");
        }
        if self.scales.iter().any(|&s| s.is_nan() || s <= 0.0) {
            return fail("scales must be positive");
        }
        if self.generalize_count == 0 {
            return fail("generalize_count must be positive");
        }
        self.solve.validate()?;
        self.train_config().validate()?;
        self.gen_spec().family.validate()
    }

    pub fn gen_spec(&self) -> GenSpec {
        match self.preset {
            Preset::Desk => GenSpec::desk(self.family, self.seed, self.count),
            Preset::Paper => GenSpec::paper(self.family, self.seed, self.count),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            solve: self.solve,
            ..self.train
        }
    }

    pub fn es_config(&self) -> EsConfig {
        EsConfig {
            solve: self.solve,
            ratio: self.ratio,
            ..self.es
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(serde_json::to_vec(self)?);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seeds: BTreeMap<String, serde_json::Value>,
    pub versions: BTreeMap<String, String>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Result<Self> {
        let seeds = BTreeMap::from([
            ("master".to_string(), config.seed.into()),
            ("train".to_string(), config.train.seed.into()),
            ("es".to_string(), config.es.seed.into()),
            ("eval".to_string(), config.eval_seeds.clone().into()),
        ]);
        let versions = BTreeMap::from([
            ("hemcut".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            (
                "checkpoint_schema".to_string(),
                CHECKPOINT_SCHEMA_VERSION.to_string(),
            ),
        ]);
        Ok(RunManifest {
            command: command.into(),
            config_hash: config.hash()?,
            seeds,
            versions,
            config: config.clone(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(RUN_MANIFEST), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Output directories of the commands under `--out`.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn instances(&self) -> PathBuf {
        self.root.join(INSTANCES_DIR)
    }

    pub fn checkpoints(&self) -> PathBuf {
        self.root.join(CHECKPOINTS_DIR)
    }

    pub fn command(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn split(&self, test: bool) -> Result<Vec<MilpInstance>> {
        let dir = self.instances();
        Manifest::load(&dir)?.load_split(&dir, test)
    }
}

/// Builds the selectors for `methods`, loading learned ones from `checkpoints`.
pub fn load_selectors(
    methods: &[Method],
    ratio: f64,
    checkpoints: &Path,
) -> Result<Vec<Arc<dyn CutSelector>>> {
    let mut hem_cache: BTreeMap<&str, Arc<HemParams>> = BTreeMap::new();
    methods
        .iter()
        .map(|&m| -> Result<Arc<dyn CutSelector>> {
            Ok(match m {
                Method::NoCuts => Arc::new(NoCuts),
                Method::Random => Arc::new(RandomSelector { ratio }),
                Method::Nv => Arc::new(NormalizedViolation { ratio }),
                Method::Eff => Arc::new(Efficacy { ratio }),
                Method::Sbp => {
                    let ckpt = Checkpoint::load(&checkpoints.join("sbp.json"))?;
                    Arc::new(SbpSelector {
                        params: SbpParams::from_checkpoint(&ckpt)?,
                    })
                }
                _ => {
                    let file = m.checkpoint().unwrap_or_default();
                    let params = match hem_cache.get(file) {
                        Some(p) => p.clone(),
                        None => {
                            let p = Arc::new(HemParams::load(&checkpoints.join(file))?);
                            hem_cache.insert(file, p.clone());
                            p
                        }
                    };
                    Arc::new(match m {
                        Method::Hem => HemSelector::hem(params),
                        Method::HemNoH => HemSelector::no_h(params),
                        Method::HemRatio => HemSelector::ratio(params, ratio),
                        _ => HemSelector::ratio_order(params, ratio),
                    })
                }
            })
        })
        .collect()
}

/// Writes the corpus to `instances/`.
pub fn run_generate(config: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let layout = Layout::new(out);
    let manifest = write_corpus(&config.gen_spec(), &layout.instances())?;
    RunManifest::new("generate", config)?.write(&layout.instances())?;
    Ok(manifest)
}

/// Trains every learned method in `config.methods` on the train split and
/// writes the selected parameters to `checkpoints/`.
pub fn run_train(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(out);
    let train_set = layout.split(false)?;
    let eval_slice = &train_set[..train_set.len().min(MODEL_SELECTION_POOL)];
    let ckpt_dir = layout.checkpoints();
    std::fs::create_dir_all(&ckpt_dir)?;
    let mut written = Vec::new();
    let mut done: Vec<&str> = Vec::new();
    for &m in &config.methods {
        let Some(file) = m.checkpoint() else { continue };
        if done.contains(&file) {
            continue;
        }
        done.push(file);
        let path = ckpt_dir.join(file);
        if m == Method::Sbp {
            let (params, outcome) = es_train_sbp(&train_set, &config.es_config())?;
            params.to_checkpoint().save(&path)?;
            let history = ckpt_dir.join("sbp_history.csv");
            let mut wtr = csv::Writer::from_path(history)?;
            wtr.write_record(["generation", "fitness"])?;
            for (g, f) in outcome.history.iter().enumerate() {
                wtr.write_record([g.to_string(), f.to_string()])?;
            }
            wtr.flush()?;
        } else {
            let variant = m.hem_variant(config.ratio).unwrap_or(HemVariant::Full);
            let tc = TrainConfig {
                variant,
                ..config.train_config()
            };
            let init = HemParams::with_hidden(tc.hidden, &mut ChaCha8Rng::seed_from_u64(tc.seed));
            let run_dir = ckpt_dir.join(file.trim_end_matches(".json"));
            let outcome = train(init, &train_set, eval_slice, &tc, Some(&run_dir))?;
            outcome.best.save(&path)?;
        }
        log::info!("wrote {}", path.display());
        written.push(path);
    }
    RunManifest::new("train", config)?.write(&ckpt_dir)?;
    Ok(written)
}

fn write_eval(
    config: &ExperimentConfig,
    instances: &[MilpInstance],
    checkpoints: &Path,
    dir: &Path,
    command: &str,
) -> Result<EvalReport> {
    let selectors = load_selectors(&config.methods, config.ratio, checkpoints)?;
    let (report, walls) = evaluate(&selectors, instances, &config.solve, &config.eval_seeds)?;
    report.write(dir)?;
    write_wall_times(&walls, &dir.join("wall_time.csv"))?;
    RunManifest::new(command, config)?.write(dir)?;
    Ok(report)
}

/// Evaluates every method on the test split; writes `evaluate/`.
pub fn run_evaluate(config: &ExperimentConfig, out: &Path) -> Result<EvalReport> {
    let layout = Layout::new(out);
    let test = layout.split(true)?;
    write_eval(
        config,
        &test,
        &layout.checkpoints(),
        &layout.command("evaluate"),
        "evaluate",
    )
}

/// Solves the test split under `config.order.n_orders` random orders; writes `order_study/`.
pub fn run_order_study(config: &ExperimentConfig, out: &Path) -> Result<crate::bench::OrderStudy> {
    let layout = Layout::new(out);
    let test = layout.split(true)?;
    let study = order_study(
        &test,
        config.order.rule,
        config.order.n_orders,
        &config.solve,
    )?;
    let dir = layout.command("order_study");
    study.write(&dir)?;
    let (mean, stdev) = study.summary();
    let summary = serde_json::json!({
        "instances": study.rows.len(),
        "mean_pd_integral": mean,
        "mean_stdev_pd_integral": stdev,
        "min_candidates": config.order.min_candidates,
        "fraction_with_spread": study.fraction_with_spread(config.order.min_candidates),
    });
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    RunManifest::new("order-study", config)?.write(&dir)?;
    Ok(study)
}

/// Projects the root cuts chosen by each method onto the top two principal
/// components of their union, per test instance; writes `pca/points.csv`.
pub fn run_pca(config: &ExperimentConfig, out: &Path) -> Result<Vec<PcaPoint>> {
    let layout = Layout::new(out);
    let test = layout.split(true)?;
    let methods: Vec<Method> = config
        .methods
        .iter()
        .copied()
        .filter(|&m| m != Method::NoCuts)
        .collect();
    let selectors = load_selectors(&methods, config.ratio, &layout.checkpoints())?;
    let seed = config.eval_seeds[0];
    let mut points = Vec::new();
    let mut spectra = BTreeMap::new();
    for inst in &test {
        let pool = root_pool(inst)?;
        let rows = pool.state.rows();
        let mut chosen: Vec<(String, usize)> = Vec::new();
        for sel in &selectors {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in sel.select(&pool.state, &pool.cuts, &mut rng) {
                chosen.push((sel.name(), i));
            }
        }
        let data: Vec<[f64; NUM_FEATURES]> = chosen.iter().map(|&(_, i)| rows[i]).collect();
        if data.len() < 2 {
            log::info!("{}: fewer than 2 selected cuts, skipped", inst.name);
            continue;
        }
        let proj = pca_2d(&data)?;
        spectra.insert(inst.name.clone(), proj.eigenvalues.clone());
        for sel in &selectors {
            let name = sel.name();
            let idx: Vec<usize> = (0..chosen.len()).filter(|&j| chosen[j].0 == name).collect();
            let coords: Vec<[f64; 2]> = idx.iter().map(|&j| proj.coords[j]).collect();
            let hull = crate::bench::hull_mask(&coords);
            for (h, &j) in hull.into_iter().zip(&idx) {
                points.push(PcaPoint {
                    instance: inst.name.clone(),
                    method: name.clone(),
                    cut: pool.cuts[chosen[j].1].id,
                    x: proj.coords[j][0],
                    y: proj.coords[j][1],
                    hull: h && !proj.degenerate,
                    degenerate: proj.degenerate,
                });
            }
        }
    }
    let dir = layout.command("pca");
    std::fs::create_dir_all(&dir)?;
    write_points(&points, &dir.join("points.csv"))?;
    std::fs::write(
        dir.join("eigenvalues.json"),
        serde_json::to_string_pretty(&spectra)?,
    )?;
    RunManifest::new("pca", config)?.write(&dir)?;
    Ok(points)
}

/// Evaluates the trained checkpoints on fresh instances `k` times the
/// training size for each `k` in `config.scales`; writes `generalize/scale_<k>/`.
pub fn run_generalize(config: &ExperimentConfig, out: &Path) -> Result<Vec<(f64, EvalReport)>> {
    let layout = Layout::new(out);
    let base = config.gen_spec();
    let checkpoints = layout.checkpoints();
    load_selectors(&config.methods, config.ratio, &checkpoints)?;
    let root = layout.command("generalize");
    let mut reports = Vec::new();
    for &k in &config.scales {
        let spec = GenSpec {
            family: base.family.scaled(k),
            seed: base.seed.wrapping_add(1_000),
            count: config.generalize_count,
            ..base
        };
        let instances = generate(&spec)?;
        let dir = root.join(format!("scale_{k}"));
        let report = write_eval(config, &instances, &checkpoints, &dir, "generalize")?;
        reports.push((k, report));
    }
    Ok(reports)
}
