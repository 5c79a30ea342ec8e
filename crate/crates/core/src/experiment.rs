//! Learning regimes, the fitness pipeline and multi-seed experiment runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{PreparedData, SeriesSource, SeriesSpec, WindowedDataset};
use crate::error::{Error, Result};
use crate::evolution::{evolve, EaConfig, GeneSpace, Problem, RunHistory};
use crate::fuzzy::{
    FisKind, FuzzyInferenceSystem, FuzzyVariable, MfShape, OperatorParams, TsConsequent, Universe,
};
use crate::genome::{EncodingSpec, Genome, OperatorMode};
use crate::gradient::{gd_finetune, TrainSpec};
use crate::rulegen::{default_partition, grid_partition};

/// Fitness assigned to genomes that cannot be decoded or trained.
pub const PENALTY: f64 = f64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearningMode {
    /// Everything evolved, plus gradient fine-tuning of the MFs.
    Type1,
    /// Evolution only.
    Type2,
    /// Fixed min/max operators, gradient fine-tuning on.
    Type3,
}

impl LearningMode {
    pub const ALL: [LearningMode; 3] = [LearningMode::Type1, LearningMode::Type2, LearningMode::Type3];

    pub fn uses_gradient(self) -> bool {
        !matches!(self, LearningMode::Type2)
    }

    pub fn operator_mode(self) -> OperatorMode {
        match self {
            LearningMode::Type3 => OperatorMode::FixedMin,
            _ => OperatorMode::Parameterized,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LearningMode::Type1 => "Type 1",
            LearningMode::Type2 => "Type 2",
            LearningMode::Type3 => "Type 3",
        }
    }
}

impl std::str::FromStr for LearningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace([' ', '_', '-'], "").as_str() {
            "type1" | "1" => Ok(LearningMode::Type1),
            "type2" | "2" => Ok(LearningMode::Type2),
            "type3" | "3" => Ok(LearningMode::Type3),
            _ => Err(Error::Config(format!("unknown learning mode {s:?}"))),
        }
    }
}

/// The three benchmark series with their published iteration budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    MackeyGlass,
    GasFurnace,
    WasteWater,
}

impl Benchmark {
    pub fn generations(self, mode: LearningMode) -> usize {
        use Benchmark::*;
        use LearningMode::*;
        match (self, mode) {
            (MackeyGlass, Type2) => 90,
            (GasFurnace, Type2) => 135,
            (WasteWater, Type2) => 180,
            (WasteWater, _) => 65,
            _ => 60,
        }
    }

    /// Literature ANFIS (train, test) RMSE quoted next to results.
    pub fn anfis_reference(self) -> (f64, f64) {
        match self {
            Benchmark::MackeyGlass => (0.0019, 0.0018),
            Benchmark::GasFurnace => (0.0137, 0.0570),
            Benchmark::WasteWater => (0.0530, 0.0810),
        }
    }

    pub fn initial_counts(self) -> Vec<usize> {
        match self {
            Benchmark::GasFurnace => vec![3, 3],
            _ => vec![4; 4],
        }
    }
}

/// Chromosome options that are not derived from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    /// MF counts of the grid-partitioned individual seeded into generation 0.
    pub initial_counts: Vec<usize>,
    pub initial_shape: MfShape,
    pub shapes: Vec<MfShape>,
    pub width_range: (f64, f64),
    pub slope_range: (f64, f64),
    pub learning_rate_range: (f64, f64),
    pub evolve_label_masks: bool,
    pub repair: bool,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        let unit = EncodingSpec::unit(1);
        EncodingConfig {
            initial_counts: Vec::new(),
            initial_shape: MfShape::Gaussian,
            shapes: unit.shapes,
            width_range: unit.width_range,
            slope_range: unit.slope_range,
            learning_rate_range: unit.learning_rate_range,
            evolve_label_masks: unit.evolve_label_masks,
            repair: unit.repair,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub series: SeriesSpec,
    pub mode: LearningMode,
    #[serde(default)]
    pub ea: EaConfig,
    #[serde(default)]
    pub encoding: EncodingConfig,
    /// Gradient epochs per fitness evaluation (Type 1 / Type 3).
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub tune_operators: bool,
    /// Master seeds, one independent run each.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Score fitness on a validation tail of the training split instead of
    /// the test split.
    #[serde(default)]
    pub holdout: bool,
    #[serde(default = "default_holdout_fraction")]
    pub holdout_fraction: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_epochs() -> usize {
    100
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_holdout_fraction() -> f64 {
    0.2
}

impl ExperimentConfig {
    /// Published settings for `benchmark` under `mode`.
    pub fn preset(benchmark: Benchmark, mode: LearningMode) -> Result<Self> {
        let series = match benchmark {
            Benchmark::MackeyGlass => SeriesSpec::mackey_glass(),
            Benchmark::GasFurnace => SeriesSpec::gas_furnace(),
            Benchmark::WasteWater => {
                return Err(Error::Config(
                    "the waste-water series is not bundled; use a csv source".into(),
                ))
            }
        };
        Ok(ExperimentConfig {
            name: format!("{benchmark:?} {}", mode.label()),
            series,
            mode,
            ea: EaConfig {
                generations: benchmark.generations(mode),
                ..EaConfig::default()
            },
            encoding: EncodingConfig {
                initial_counts: benchmark.initial_counts(),
                ..EncodingConfig::default()
            },
            epochs: default_epochs(),
            tune_operators: false,
            seeds: default_seeds(),
            holdout: false,
            holdout_fraction: default_holdout_fraction(),
            output_dir: None,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.series.validate()?;
        self.ea.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds".into()));
        }
        if self.mode.uses_gradient() && self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.holdout && !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config(format!(
                "holdout_fraction {} outside (0, 1)",
                self.holdout_fraction
            )));
        }
        let n = self.series.lags.len();
        if !self.encoding.initial_counts.is_empty() && self.encoding.initial_counts.len() != n {
            return Err(Error::Config(format!(
                "initial_counts has {} entries for {n} inputs",
                self.encoding.initial_counts.len()
            )));
        }
        Ok(())
    }

    pub fn benchmark(&self) -> Option<Benchmark> {
        match self.series.source {
            SeriesSource::MackeyGlass(_) => Some(Benchmark::MackeyGlass),
            SeriesSource::GasFurnace => Some(Benchmark::GasFurnace),
            SeriesSource::Csv { .. } => None,
        }
    }

    /// Chromosome layout for `data`: one input per lag, universes are the
    /// unit interval when normalized, the training range otherwise.
    pub fn encoding_spec(&self, train: &WindowedDataset) -> Result<EncodingSpec> {
        let n = self.series.lags.len();
        let universes = (0..n)
            .map(|j| {
                if self.series.normalize {
                    Ok(Universe::unit())
                } else {
                    let (lo, hi) = train
                        .column(j)
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                            (lo.min(v), hi.max(v))
                        });
                    Universe::new(lo, hi)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let e = &self.encoding;
        let spec = EncodingSpec {
            input_names: self
                .series
                .lags
                .iter()
                .map(|l| format!("{}(t-{})", l.column, l.lag))
                .collect(),
            universes,
            shapes: e.shapes.clone(),
            width_range: e.width_range,
            slope_range: e.slope_range,
            learning_rate_range: e.learning_rate_range,
            operator_mode: self.mode.operator_mode(),
            evolve_label_masks: e.evolve_label_masks,
            repair: e.repair,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn initial_counts(&self) -> Vec<usize> {
        if self.encoding.initial_counts.is_empty() {
            vec![4; self.series.lags.len()]
        } else {
            self.encoding.initial_counts.clone()
        }
    }
}

/// Grid-partitioned system with evenly spaced MFs and zero consequents.
pub fn grid_fis(
    spec: &EncodingSpec,
    counts: &[usize],
    shape: MfShape,
    mode: LearningMode,
) -> Result<FuzzyInferenceSystem> {
    let inputs = spec
        .input_names
        .iter()
        .zip(&spec.universes)
        .zip(counts)
        .map(|((name, &u), &m)| FuzzyVariable::new(name.clone(), u, default_partition(u, m, shape)?))
        .collect::<Result<Vec<_>>>()?;
    let rules = grid_partition(&inputs, &TsConsequent::zeros(inputs.len()));
    let operators = match mode.operator_mode() {
        OperatorMode::FixedMin => OperatorParams::fixed_min(),
        OperatorMode::Parameterized => OperatorParams::new(1.0, 1.0)?,
    };
    FuzzyInferenceSystem::new(inputs, rules, operators, FisKind::TakagiSugeno)
}

/// Everything one fitness evaluation needs; also the EA's [`Problem`].
#[derive(Debug)]
pub struct FitnessContext {
    pub mode: LearningMode,
    pub encoding: EncodingSpec,
    space: GeneSpace,
    /// Data the gradient stage trains on.
    pub train: WindowedDataset,
    /// Data the fitness RMSE is measured on.
    pub fitness_data: WindowedDataset,
    pub epochs: usize,
    pub tune_operators: bool,
    /// Replaces the genome's learning-rate gene when set.
    pub learning_rate_override: Option<f64>,
    pub seeds: Vec<Genome>,
    gradient_calls: AtomicUsize,
    penalties: AtomicUsize,
}

/// A decoded, possibly fine-tuned candidate.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub fis: FuzzyInferenceSystem,
    pub fitness: f64,
    pub initial_train_rmse: Option<f64>,
}

impl FitnessContext {
    pub fn new(
        mode: LearningMode,
        encoding: EncodingSpec,
        train: WindowedDataset,
        fitness_data: WindowedDataset,
        epochs: usize,
    ) -> Result<Self> {
        encoding.validate()?;
        if mode.operator_mode() != encoding.operator_mode {
            return Err(Error::Config(format!(
                "{} requires {:?} operators",
                mode.label(),
                mode.operator_mode()
            )));
        }
        Ok(FitnessContext {
            mode,
            space: encoding.gene_space(),
            encoding,
            train,
            fitness_data,
            epochs,
            tune_operators: false,
            learning_rate_override: None,
            seeds: Vec::new(),
            gradient_calls: AtomicUsize::new(0),
            penalties: AtomicUsize::new(0),
        })
    }

    pub fn gradient_calls(&self) -> usize {
        self.gradient_calls.load(Ordering::Relaxed)
    }

    pub fn penalties(&self) -> usize {
        self.penalties.load(Ordering::Relaxed)
    }

    /// Decode, fine-tune (Type 1 / Type 3) and score; errors are returned.
    pub fn evaluate(&self, genome: &Genome) -> Result<Evaluation> {
        let mut fis = self.encoding.decode(genome)?;
        let mut initial = None;
        if self.mode.uses_gradient() {
            self.gradient_calls.fetch_add(1, Ordering::Relaxed);
            let spec = TrainSpec {
                learning_rate: self
                    .learning_rate_override
                    .unwrap_or_else(|| self.encoding.learning_rate(genome)),
                epochs: self.epochs,
                tune_operators: self.tune_operators,
                strict: false,
            };
            let (tuned, trace) = gd_finetune(&fis, &self.train, &spec)?;
            initial = Some(trace.initial());
            fis = tuned;
        }
        let fitness = fis.rmse(&self.fitness_data)?;
        Ok(Evaluation {
            fis,
            fitness,
            initial_train_rmse: initial,
        })
    }
}

/// Fitness of `genome`: RMSE on the fitness split after the mode's training,
/// or [`PENALTY`] (counted) when it cannot be decoded, trained or scored.
pub fn fitness_pipeline(genome: &Genome, ctx: &FitnessContext) -> f64 {
    match ctx.evaluate(genome) {
        Ok(e) if e.fitness.is_finite() => e.fitness,
        _ => {
            ctx.penalties.fetch_add(1, Ordering::Relaxed);
            PENALTY
        }
    }
}

impl Problem for FitnessContext {
    fn gene_space(&self) -> &GeneSpace {
        &self.space
    }

    fn random_genome(&self, rng: &mut ChaCha8Rng) -> Genome {
        self.encoding.random_genome(rng)
    }

    fn initial_genomes(&self) -> Vec<Genome> {
        self.seeds.clone()
    }

    fn fitness(&self, genome: &Genome) -> Result<f64> {
        Ok(fitness_pipeline(genome, self))
    }

    fn rule_count(&self, genome: &Genome) -> usize {
        self.encoding.active_rule_count(genome)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub fitness: f64,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub initial_mf_counts: Vec<usize>,
    pub initial_rules: usize,
    pub mf_counts: Vec<usize>,
    pub active_rules: usize,
    pub generations: usize,
    pub wall_time_ms: u64,
    pub gradient_calls: usize,
    pub penalties: usize,
    pub tnorm_p: f64,
    pub tconorm_p: f64,
    pub fixed_min: bool,
    pub best_genome: String,
    #[serde(skip)]
    pub history: RunHistory,
}

/// Best, median and worst of one metric across seeds (lower is better).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub best: f64,
    pub median: f64,
    pub worst: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Spread {
            best: v[0],
            median,
            worst: v[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub train_rmse: Spread,
    pub test_rmse: Spread,
    pub active_rules: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub mode: LearningMode,
    pub benchmark: Option<Benchmark>,
    /// `"test"` or `"holdout"`: which split the fitness was measured on.
    pub fitness_protocol: String,
    pub seeds: Vec<SeedReport>,
    pub aggregate: Aggregate,
}

impl RunReport {
    pub fn from_seeds(
        name: String,
        mode: LearningMode,
        benchmark: Option<Benchmark>,
        holdout: bool,
        seeds: Vec<SeedReport>,
    ) -> Self {
        let metric = |f: fn(&SeedReport) -> f64| Spread::of(&seeds.iter().map(f).collect::<Vec<_>>());
        let aggregate = Aggregate {
            train_rmse: metric(|s| s.train_rmse),
            test_rmse: metric(|s| s.test_rmse),
            active_rules: metric(|s| s.active_rules as f64),
        };
        RunReport {
            name,
            mode,
            benchmark,
            fitness_protocol: if holdout { "holdout" } else { "test" }.into(),
            seeds,
            aggregate,
        }
    }
}

fn fitness_context(config: &ExperimentConfig, data: &PreparedData) -> Result<FitnessContext> {
    let encoding = config.encoding_spec(&data.train)?;
    let (gd_data, fitness_data) = if config.holdout {
        let cut = ((1.0 - config.holdout_fraction) * data.train.len() as f64).round() as usize;
        if cut == 0 || cut >= data.train.len() {
            return Err(Error::DegenerateSplit {
                fraction: config.holdout_fraction,
                len: data.train.len(),
            });
        }
        (data.train.slice(0..cut), data.train.slice(cut..data.train.len()))
    } else {
        (data.train.clone(), data.test.clone())
    };
    let mut ctx = FitnessContext::new(config.mode, encoding, gd_data, fitness_data, config.epochs)?;
    ctx.tune_operators = config.tune_operators;
    Ok(ctx)
}

/// Run every seed of `config` and collect the report. Configuration and
/// data problems surface before any evolution starts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let data = config.series.prepare()?;
    let mut ctx = fitness_context(config, &data)?;
    let counts = config.initial_counts();
    let grid = grid_fis(&ctx.encoding, &counts, config.encoding.initial_shape, config.mode)?;
    let initial_rules = grid.active_rule_count();
    ctx.seeds = vec![ctx.encoding.encode(&grid)?];

    let mut seeds = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        ctx.gradient_calls.store(0, Ordering::Relaxed);
        ctx.penalties.store(0, Ordering::Relaxed);
        seeds.push(run_seed(config, &ctx, &data, seed, &counts, initial_rules)?);
    }
    Ok(RunReport::from_seeds(
        config.name.clone(),
        config.mode,
        config.benchmark(),
        config.holdout,
        seeds,
    ))
}

fn run_seed(
    config: &ExperimentConfig,
    ctx: &FitnessContext,
    data: &PreparedData,
    seed: u64,
    counts: &[usize],
    initial_rules: usize,
) -> Result<SeedReport> {
    let start = Instant::now();
    let ea = EaConfig {
        seed,
        ..config.ea.clone()
    };
    let (best, history) = evolve(&ea, ctx)?;
    let eval = ctx.evaluate(&best.genome)?;
    let wall_time_ms = if ea.record_wall_time {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok(SeedReport {
        seed,
        fitness: best.fitness,
        train_rmse: eval.fis.rmse(&data.train)?,
        test_rmse: eval.fis.rmse(&data.test)?,
        initial_mf_counts: counts.to_vec(),
        initial_rules,
        mf_counts: eval.fis.mf_counts(),
        active_rules: eval.fis.active_rule_count(),
        generations: ea.generations,
        wall_time_ms,
        gradient_calls: ctx.gradient_calls(),
        penalties: ctx.penalties(),
        tnorm_p: eval.fis.operators.tnorm_p,
        tconorm_p: eval.fis.operators.tconorm_p,
        fixed_min: eval.fis.operators.fixed_min,
        best_genome: best.genome.to_csv_line(),
        history,
    })
}

/// Human-readable summary table.
pub fn render_table(report: &RunReport) -> String {
    let mut out = String::new();
    let title = if report.name.is_empty() {
        report.mode.label().to_string()
    } else {
        report.name.clone()
    };
    out.push_str(&format!(
        "{title}\nmode: {}   fitness measured on: {} split\n\n",
        report.mode.label(),
        report.fitness_protocol
    ));
    out.push_str(&format!(
        "{:>6} | {:>12} {:>7} | {:>12} {:>7} | {:>11} {:>11}\n",
        "seed", "MFs before", "rules", "MFs after", "rules", "train RMSE", "test RMSE"
    ));
    out.push_str(&format!("{}\n", "-".repeat(80)));
    let join = |c: &[usize]| c.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    for s in &report.seeds {
        out.push_str(&format!(
            "{:>6} | {:>12} {:>7} | {:>12} {:>7} | {:>11.6} {:>11.6}\n",
            s.seed,
            join(&s.initial_mf_counts),
            s.initial_rules,
            join(&s.mf_counts),
            s.active_rules,
            s.train_rmse,
            s.test_rmse
        ));
    }
    out.push_str(&format!("{}\n", "-".repeat(80)));
    let a = &report.aggregate;
    for (label, train, test) in [
        ("best", a.train_rmse.best, a.test_rmse.best),
        ("median", a.train_rmse.median, a.test_rmse.median),
        ("worst", a.train_rmse.worst, a.test_rmse.worst),
    ] {
        out.push_str(&format!("{label:>6} | {:>50} {train:>11.6} {test:>11.6}\n", ""));
    }
    if let Some(b) = report.benchmark {
        let (train, test) = b.anfis_reference();
        out.push_str(&format!(
            "\nANFIS (literature): train {train:.4}  test {test:.4}\n"
        ));
    }
    out
}

/// Write `report.json`, `report.txt` and one `history_seed<k>.csv` per seed.
pub fn emit_report(report: &RunReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut write = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    write("report.json".into(), json + "\n")?;
    write("report.txt".into(), render_table(report))?;
    for s in &report.seeds {
        write(format!("history_seed{}.csv", s.seed), s.history.to_csv())?;
    }
    Ok(written)
}

/// Read back a `report.json` written by [`emit_report`].
pub fn load_report(dir: impl AsRef<Path>) -> Result<RunReport> {
    let path = dir.as_ref().join("report.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_data() -> (WindowedDataset, WindowedDataset) {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 39.0]).collect();
        let ys: Vec<f64> = rows.iter().map(|r| (3.0 * r[0]).sin() * 0.5 + 0.5).collect();
        let all = WindowedDataset::new(rows, ys).unwrap();
        (all.slice(0..20), all.slice(20..40))
    }

    fn ctx(mode: LearningMode) -> FitnessContext {
        let (train, test) = tiny_data();
        let mut enc = EncodingSpec::unit(1);
        enc.operator_mode = mode.operator_mode();
        FitnessContext::new(mode, enc, train, test, 10).unwrap()
    }

    fn genome(ctx: &FitnessContext, seed: u64) -> Genome {
        use rand::SeedableRng;
        ctx.encoding.random_genome(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn type2_is_plain_rmse() {
        let c = ctx(LearningMode::Type2);
        let g = genome(&c, 3);
        let expected = c.encoding.decode(&g).unwrap().rmse(&c.fitness_data).unwrap();
        assert_eq!(fitness_pipeline(&g, &c), expected);
        assert_eq!(c.gradient_calls(), 0);
    }

    #[test]
    fn zero_rate_type1_equals_type2() {
        let mut c1 = ctx(LearningMode::Type1);
        c1.learning_rate_override = Some(0.0);
        let c2 = ctx(LearningMode::Type2);
        for seed in 0..5 {
            let g = genome(&c1, seed);
            assert_eq!(fitness_pipeline(&g, &c1), fitness_pipeline(&g, &c2));
        }
        assert_eq!(c1.gradient_calls(), 5);
    }

    #[test]
    fn spread_ordering() {
        let s = Spread::of(&[0.3, 0.1, 0.2]);
        assert_eq!((s.best, s.median, s.worst), (0.1, 0.2, 0.3));
        let s = Spread::of(&[0.4, 0.1]);
        assert_eq!(s.median, 0.25);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("type1".parse::<LearningMode>().unwrap(), LearningMode::Type1);
        assert_eq!("Type-3".parse::<LearningMode>().unwrap(), LearningMode::Type3);
        assert!("type4".parse::<LearningMode>().is_err());
    }

    #[test]
    fn mismatched_operator_mode_is_rejected() {
        let (train, test) = tiny_data();
        let enc = EncodingSpec::unit(1);
        assert!(FitnessContext::new(LearningMode::Type3, enc, train, test, 10).is_err());
    }

    #[test]
    fn published_budgets() {
        assert_eq!(Benchmark::MackeyGlass.generations(LearningMode::Type2), 90);
        assert_eq!(Benchmark::GasFurnace.generations(LearningMode::Type2), 135);
        assert_eq!(Benchmark::WasteWater.generations(LearningMode::Type2), 180);
        assert_eq!(Benchmark::WasteWater.generations(LearningMode::Type1), 65);
        assert_eq!(Benchmark::GasFurnace.generations(LearningMode::Type3), 60);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ExperimentConfig::preset(Benchmark::MackeyGlass, LearningMode::Type1).unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }
}
