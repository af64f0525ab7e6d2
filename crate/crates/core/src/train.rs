//! Policy-gradient training of the hierarchical policy and evolution
//! strategies for the score-based baseline.
//!
//! Each rollout is a one-step bandit: the root pool of an instance is
//! featurized once, the policy picks an ordered subset, and a full
//! branch-and-cut solve with that subset injected at the root yields the
//! reward. Rollouts of a batch run in parallel against a frozen parameter
//! snapshot; the update is applied once the whole batch is in.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cuts::{branch_and_cut, generate_cuts_from, Cut, SolveConfig, SolveStats};
use crate::error::{Error, Result};
use crate::features::{featurize, CutSelState};
use crate::hem::{HemAction, HemParams, HemSelector, HemVariant, Mode};
use crate::milp::{solve_lp, MilpInstance};
use crate::nn::{AdamState, Grads};
use crate::select::{CutSelector, Injected, NoCuts};
use crate::select::{SbpParams, SbpSelector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RewardKind {
    /// Minus the solve time in the solve's clock.
    NegSolveTime,
    /// Minus the primal-dual integral.
    #[default]
    NegPdIntegral,
    /// Minus the root LP bound movement caused by the cuts.
    NegDualBoundImprovement,
}

pub fn reward(kind: RewardKind, stats: &SolveStats) -> f64 {
    match kind {
        RewardKind::NegSolveTime => -stats.clock_time(),
        RewardKind::NegPdIntegral => -stats.pd_integral,
        RewardKind::NegDualBoundImprovement => match (stats.root.lp_before, stats.root.lp_after) {
            (Some(before), Some(after)) => -(after - before),
            _ => 0.0,
        },
    }
}

/// The first separation round's candidate pool, as branch-and-cut sees it.
#[derive(Debug, Clone)]
pub struct RootPool {
    pub instance: MilpInstance,
    pub cuts: Vec<Cut>,
    pub state: CutSelState,
}

pub fn root_pool(inst: &MilpInstance) -> Result<RootPool> {
    let lp = solve_lp(inst)?;
    let (cuts, state) = if lp.is_optimal() {
        let cuts = generate_cuts_from(inst, &lp, 0, 0);
        let state = featurize(inst, &lp, &cuts)?;
        (cuts, state)
    } else {
        (Vec::new(), CutSelState::new(Vec::new()))
    };
    Ok(RootPool {
        instance: inst.clone(),
        cuts,
        state,
    })
}

/// Instances with a nonempty root pool plus the solve and reward settings.
#[derive(Debug, Clone)]
pub struct Env {
    pub pools: Vec<RootPool>,
    pub solve: SolveConfig,
    pub reward: RewardKind,
}

impl Env {
    pub fn new(instances: &[MilpInstance], solve: SolveConfig, reward: RewardKind) -> Result<Self> {
        let all: Vec<RootPool> = instances.par_iter().map(root_pool).collect::<Result<_>>()?;
        let pools: Vec<RootPool> = all
            .into_iter()
            .filter(|p| {
                if p.cuts.is_empty() {
                    log::info!("skipping {}: empty candidate pool", p.instance.name);
                }
                !p.cuts.is_empty()
            })
            .collect();
        if pools.is_empty() {
            return Err(Error::Config("no instance has candidate cuts".into()));
        }
        Ok(Env {
            pools,
            solve,
            reward,
        })
    }

    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn solve_with(&self, pool: usize, selector: &dyn CutSelector) -> Result<(SolveStats, f64)> {
        let stats = branch_and_cut(&self.pools[pool].instance, selector, &self.solve)?;
        let r = reward(self.reward, &stats);
        Ok((stats, r))
    }

    /// Solves with `indices` of the root pool injected in order.
    pub fn rollout(&self, pool: usize, indices: &[usize]) -> Result<(SolveStats, f64)> {
        self.solve_with(
            pool,
            &Injected {
                indices: indices.to_vec(),
            },
        )
    }

    /// Mean `|reward|` without cuts; 1 when that is zero.
    pub fn reward_scale(&self) -> Result<f64> {
        let rs: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| self.solve_with(i, &NoCuts).map(|(_, r)| r.abs()))
            .collect::<Result<_>>()?;
        let mean = rs.iter().sum::<f64>() / rs.len() as f64;
        Ok(if mean > 0.0 && mean.is_finite() {
            mean
        } else {
            1.0
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSample {
    /// Index into the environment's pools.
    pub pool: usize,
    pub state: CutSelState,
    pub action: HemAction,
    /// Raw, unnormalized reward.
    pub reward: f64,
}

/// `batch_size` instances drawn with replacement, each solved with a sampled action.
pub fn collect_batch(
    params: &HemParams,
    env: &Env,
    variant: HemVariant,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<RolloutSample>> {
    let draws: Vec<(usize, u64)> = (0..batch_size)
        .map(|_| (rng.random_range(0..env.len()), rng.next_u64()))
        .collect();
    draws
        .par_iter()
        .map(|&(pool, seed)| {
            let state = env.pools[pool].state.clone();
            let mut local = ChaCha8Rng::seed_from_u64(seed);
            let action = params.act(&state, variant, Mode::Sample(&mut local))?;
            let (_, reward) = env.rollout(pool, &action.indices)?;
            if !reward.is_finite() {
                return Err(Error::NonFiniteDetected("reward".into()));
            }
            Ok(RolloutSample {
                pool,
                state,
                action,
                reward,
            })
        })
        .collect()
}

/// Ascent direction `mean_i (r_i / scale - b) grad log pi(a_i | s_i)` with
/// `b` the batch mean of the scaled rewards when `baseline` is on.
pub fn policy_gradient(
    params: &HemParams,
    variant: HemVariant,
    batch: &[RolloutSample],
    baseline: bool,
    scale: f64,
) -> Result<Grads> {
    if batch.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let n = batch.len() as f64;
    let scaled: Vec<f64> = batch.iter().map(|s| s.reward / scale).collect();
    let b = if baseline {
        scaled.iter().sum::<f64>() / n
    } else {
        0.0
    };
    let parts: Vec<Grads> = batch
        .par_iter()
        .zip(&scaled)
        .map(|(s, &r)| {
            let w = (r - b) / n;
            let mut g = params.store.zeros_like();
            if w != 0.0 {
                params.accumulate_grads(&s.state, variant, &s.action, w, w, &mut g)?;
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;
    let mut total = params.store.zeros_like();
    for g in &parts {
        total.add_scaled(g, 1.0);
    }
    if !total.is_finite() {
        return Err(Error::NonFiniteDetected("policy gradient".into()));
    }
    Ok(total)
}

/// Separate optimizers for the two levels.
#[derive(Debug, Clone)]
pub struct HemOptimizer {
    pub high: AdamState,
    pub low: AdamState,
}

impl HemOptimizer {
    pub fn new(params: &HemParams, lr_high: f64, lr_low: f64) -> Self {
        HemOptimizer {
            high: AdamState::new(&params.store, params.theta1(), lr_high),
            low: AdamState::new(&params.store, params.theta2(), lr_low),
        }
    }
}

/// Whether the higher level is updated at `epoch` (0-based).
pub fn updates_theta1(epoch: usize, delay_freq: usize) -> bool {
    epoch % delay_freq == delay_freq - 1
}

/// One ascent step: `theta2` every epoch, `theta1` every `delay_freq` epochs.
/// Nothing is modified when the gradient is not finite.
pub fn hierarchical_pg_step(
    params: &mut HemParams,
    batch: &[RolloutSample],
    opt: &mut HemOptimizer,
    config: &TrainConfig,
    epoch: usize,
    scale: f64,
) -> Result<()> {
    let mut g = policy_gradient(params, config.variant, batch, config.baseline, scale)?;
    g.scale(-1.0);
    opt.low.update(&mut params.store, &g);
    if config.variant.uses_theta1() && updates_theta1(epoch, config.delay_freq) {
        opt.high.update(&mut params.store, &g);
    }
    if !params.store.is_finite() {
        return Err(Error::NonFiniteDetected("parameters".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    /// Learning rate of the lower level (`theta2`).
    pub lr_low: f64,
    /// Learning rate of the higher level (`theta1`).
    pub lr_high: f64,
    pub delay_freq: usize,
    pub reward: RewardKind,
    pub baseline: bool,
    /// Divide rewards by the mean `|reward|` of a no-cut probe run.
    pub normalize_rewards: bool,
    pub variant: HemVariant,
    pub hidden: usize,
    pub seed: u64,
    /// Rollout threads; 0 uses every core.
    pub workers: usize,
    pub solve: SolveConfig,
    /// Greedy evaluation period in epochs; 0 disables it.
    pub eval_every: usize,
    /// Checkpoint period in epochs; 0 keeps only the final and best ones.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 100,
            lr_low: 1e-4,
            lr_high: 5e-4,
            delay_freq: 2,
            reward: RewardKind::NegPdIntegral,
            baseline: true,
            normalize_rewards: true,
            variant: HemVariant::Full,
            hidden: crate::hem::HEM_HIDDEN,
            seed: 0,
            workers: 0,
            solve: SolveConfig::default(),
            eval_every: 10,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.delay_freq == 0 {
            return Err(Error::Config("delay_freq must be at least 1".into()));
        }
        if !(self.lr_low > 0.0 && self.lr_high > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden must be positive".into()));
        }
        if let HemVariant::FixedRatio(r) = self.variant {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("ratio {r} outside [0, 1]")));
            }
        }
        self.solve.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean raw reward of the epoch's batch.
    pub mean_reward: f64,
    /// Greedy mean PD integral on the evaluation pool, when evaluated.
    pub eval_metric: Option<f64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: HemParams,
    /// Parameters with the lowest evaluation metric seen.
    pub best: HemParams,
    pub best_metric: Option<f64>,
    pub metrics: Vec<EpochMetrics>,
}

/// Greedy mean PD integral of a selector over `instances`.
pub fn mean_pd_integral(
    selector: &dyn CutSelector,
    instances: &[MilpInstance],
    solve: &SolveConfig,
) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::Config("empty evaluation pool".into()));
    }
    let v: Vec<f64> = instances
        .par_iter()
        .map(|inst| branch_and_cut(inst, selector, solve).map(|s| s.pd_integral))
        .collect::<Result<_>>()?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs `config.epochs` rounds of batch collection and policy-gradient steps.
///
/// With `out` set, writes `metrics.csv`, `final.json`, `best.json` and the
/// periodic `epoch_XXXX.json` checkpoints there. On a non-finite step the last
/// good parameters are saved as `last_good.json` before the error is returned.
pub fn train(
    init: HemParams,
    train_pool: &[MilpInstance],
    eval_pool: &[MilpInstance],
    config: &TrainConfig,
    out: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let pool = thread_pool(config.workers)?;
    pool.install(|| train_inner(init, train_pool, eval_pool, config, out))
}

fn train_inner(
    init: HemParams,
    train_pool: &[MilpInstance],
    eval_pool: &[MilpInstance],
    config: &TrainConfig,
    out: Option<&Path>,
) -> Result<TrainOutcome> {
    let start = Instant::now();
    let mut params = init;
    let mut metrics = Vec::with_capacity(config.epochs);
    let evaluate = |p: &HemParams| -> Result<Option<f64>> {
        if eval_pool.is_empty() || config.eval_every == 0 {
            return Ok(None);
        }
        let sel = HemSelector {
            params: std::sync::Arc::new(p.clone()),
            variant: config.variant,
            sort_by_id: false,
        };
        mean_pd_integral(&sel, eval_pool, &config.solve).map(Some)
    };
    let mut best = params.clone();
    let mut best_metric = evaluate(&params)?;
    if config.epochs == 0 {
        return Ok(TrainOutcome {
            params,
            best,
            best_metric,
            metrics,
        });
    }

    let env = Env::new(train_pool, config.solve, config.reward)?;
    let scale = if config.normalize_rewards {
        env.reward_scale()?
    } else {
        1.0
    };
    log::info!(
        "training on {} instances, reward scale {scale:.4}",
        env.len()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = HemOptimizer::new(&params, config.lr_high, config.lr_low);

    for epoch in 0..config.epochs {
        let batch = collect_batch(&params, &env, config.variant, config.batch_size, &mut rng)?;
        let mean_reward = batch.iter().map(|s| s.reward).sum::<f64>() / batch.len() as f64;
        let last_good = params.clone();
        if let Err(e) = hierarchical_pg_step(&mut params, &batch, &mut opt, config, epoch, scale) {
            if let Some(dir) = out {
                last_good.save(&dir.join("last_good.json"))?;
            }
            return Err(e);
        }
        let last = epoch + 1 == config.epochs;
        let eval_metric = if config.eval_every > 0 && ((epoch + 1) % config.eval_every == 0 || last)
        {
            evaluate(&params)?
        } else {
            None
        };
        if let (Some(m), Some(b)) = (eval_metric, best_metric) {
            if m < b {
                best = params.clone();
                best_metric = Some(m);
            }
        }
        let row = EpochMetrics {
            epoch: epoch + 1,
            mean_reward,
            eval_metric,
            wall_time: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {:>4} mean reward {:.3} eval {:?}",
            row.epoch,
            row.mean_reward,
            row.eval_metric
        );
        metrics.push(row);
        if let Some(dir) = out {
            if config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0 {
                params.save(&dir.join(format!("epoch_{:04}.json", epoch + 1)))?;
            }
        }
    }
    if best_metric.is_none() {
        best = params.clone();
    }
    if let Some(dir) = out {
        params.save(&dir.join("final.json"))?;
        best.save(&dir.join("best.json"))?;
        write_metrics(&metrics, std::fs::File::create(dir.join("metrics.csv"))?)?;
    }
    Ok(TrainOutcome {
        params,
        best,
        best_metric,
        metrics,
    })
}

pub fn write_metrics<W: Write>(metrics: &[EpochMetrics], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["epoch", "mean_reward", "eval_metric", "wall_time"])?;
    for m in metrics {
        wtr.write_record([
            m.epoch.to_string(),
            m.mean_reward.to_string(),
            m.eval_metric.map(|v| v.to_string()).unwrap_or_default(),
            m.wall_time.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EsConfig {
    /// Perturbations per generation; rounded up to an even number.
    pub population: usize,
    pub sigma: f64,
    pub step: f64,
    pub generations: usize,
    /// Instances in the fixed fitness pool.
    pub mini_pool: usize,
    pub hidden: usize,
    pub ratio: f64,
    pub reward: RewardKind,
    pub normalize_rewards: bool,
    pub seed: u64,
    pub workers: usize,
    pub solve: SolveConfig,
}

impl Default for EsConfig {
    fn default() -> Self {
        EsConfig {
            population: 16,
            sigma: 0.05,
            step: 0.01,
            generations: 50,
            mini_pool: 16,
            hidden: crate::select::SBP_HIDDEN,
            ratio: crate::select::DEFAULT_RATIO,
            reward: RewardKind::NegPdIntegral,
            normalize_rewards: true,
            seed: 0,
            workers: 0,
            solve: SolveConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsOutcome {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    /// Search center after the last generation.
    pub center: Vec<f64>,
    /// Fitness of the center at the start of each generation.
    pub history: Vec<f64>,
}

/// Ranks scaled to `[-0.5, 0.5]`; tied values share their average rank.
pub fn centered_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg / (n - 1) as f64 - 0.5;
        }
        i = j + 1;
    }
    ranks
}

/// Antithetic Gaussian ES maximizing `fitness`; returns the best center seen.
pub fn es_optimize<F>(theta0: Vec<f64>, config: &EsConfig, fitness: F) -> Result<EsOutcome>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let pairs = config.population.div_ceil(2).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut center = theta0;
    let mut best = center.clone();
    let mut best_fitness = f64::NEG_INFINITY;
    let mut history = Vec::with_capacity(config.generations);
    for _ in 0..config.generations {
        let f0 = fitness(&center)?;
        history.push(f0);
        if f0 > best_fitness {
            best_fitness = f0;
            best.clone_from(&center);
        }
        let noise: Vec<Vec<f64>> = (0..pairs)
            .map(|_| {
                (0..center.len())
                    .map(|_| rng.sample(StandardNormal))
                    .collect()
            })
            .collect();
        let fits: Vec<f64> = (0..2 * pairs)
            .into_par_iter()
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let theta: Vec<f64> = center
                    .iter()
                    .zip(&noise[i / 2])
                    .map(|(c, e)| c + sign * config.sigma * e)
                    .collect();
                fitness(&theta)
            })
            .collect::<Result<_>>()?;
        let ranks = centered_ranks(&fits);
        let factor = config.step / (2.0 * pairs as f64 * config.sigma);
        for (p, eps) in noise.iter().enumerate() {
            let w = ranks[2 * p] - ranks[2 * p + 1];
            if w == 0.0 {
                continue;
            }
            for (c, e) in center.iter_mut().zip(eps) {
                *c += factor * w * e;
            }
        }
    }
    let f_final = fitness(&center)?;
    if f_final > best_fitness {
        best_fitness = f_final;
        best.clone_from(&center);
    }
    Ok(EsOutcome {
        best,
        best_fitness,
        center,
        history,
    })
}

/// Trains the SBP scorer with ES; fitness is the mean scaled reward over a
/// fixed random subset of the pool.
pub fn es_train_sbp(
    instances: &[MilpInstance],
    config: &EsConfig,
) -> Result<(SbpParams, EsOutcome)> {
    let pool = thread_pool(config.workers)?;
    pool.install(|| {
        let env = Env::new(instances, config.solve, config.reward)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..env.len()).collect();
        order.shuffle(&mut rng);
        order.truncate(config.mini_pool.max(1));
        let scale = if config.normalize_rewards {
            env.reward_scale()?
        } else {
            1.0
        };
        let mut init = SbpParams::with_hidden(config.hidden, &mut rng);
        init.ratio = config.ratio;
        let template = init.clone();
        let fitness = |theta: &[f64]| -> Result<f64> {
            let mut p = template.clone();
            p.store.set_flat(theta)?;
            let sel = SbpSelector { params: p };
            let total: f64 = order
                .iter()
                .map(|&i| env.solve_with(i, &sel).map(|(_, r)| r / scale))
                .sum::<Result<f64>>()?;
            Ok(total / order.len() as f64)
        };
        let outcome = es_optimize(init.store.flatten(), config, fitness)?;
        let mut params = template.clone();
        params.store.set_flat(&outcome.best)?;
        Ok((params, outcome))
    })
}
