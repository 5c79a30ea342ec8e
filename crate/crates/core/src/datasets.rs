//! Benchmark series and their conversion into lag-embedded regression data.
//!
//! Windowed samples are rows of a flat row-major matrix; normalization
//! is min-max per column, fitted on the training split only.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable overriding where the gas furnace file is read from.
pub const GAS_FURNACE_ENV: &str = "EVONF_GAS_FURNACE";

/// Location of the Box-Jenkins gas furnace file (columns `u`, `y`; 296 rows):
/// `$EVONF_GAS_FURNACE` if set, else `data/gas_furnace.csv` in this crate.
pub fn gas_furnace_path() -> PathBuf {
    std::env::var_os(GAS_FURNACE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data/gas_furnace.csv"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    n_inputs: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl WindowedDataset {
    pub fn new(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: targets.len(),
            });
        }
        let n_inputs = rows.first().map_or(0, Vec::len);
        let mut inputs = Vec::with_capacity(rows.len() * n_inputs);
        for row in &rows {
            if row.len() != n_inputs {
                return Err(Error::DimensionMismatch {
                    expected: n_inputs,
                    got: row.len(),
                });
            }
            inputs.extend_from_slice(row);
        }
        Ok(WindowedDataset {
            n_inputs,
            inputs,
            targets,
        })
    }

    pub fn from_flat(n_inputs: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != n_inputs * targets.len() {
            return Err(Error::DimensionMismatch {
                expected: n_inputs * targets.len(),
                got: inputs.len(),
            });
        }
        Ok(WindowedDataset {
            n_inputs,
            inputs,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.n_inputs..(i + 1) * self.n_inputs]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    /// Contiguous sub-range of samples.
    pub fn slice(&self, range: std::ops::Range<usize>) -> WindowedDataset {
        WindowedDataset {
            n_inputs: self.n_inputs,
            inputs: self.inputs[range.start * self.n_inputs..range.end * self.n_inputs].to_vec(),
            targets: self.targets[range].to_vec(),
        }
    }
}

/// Per-column min/max used to map data into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub input_min: Vec<f64>,
    pub input_max: Vec<f64>,
    pub target_min: f64,
    pub target_max: f64,
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

impl Normalization {
    pub fn fit(data: &WindowedDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut input_min = Vec::with_capacity(data.n_inputs());
        let mut input_max = Vec::with_capacity(data.n_inputs());
        for j in 0..data.n_inputs() {
            let (lo, hi) = min_max(data.column(j));
            if lo >= hi {
                return Err(Error::ConstantColumn(j));
            }
            input_min.push(lo);
            input_max.push(hi);
        }
        let (target_min, target_max) = min_max(data.targets().iter().copied());
        if target_min >= target_max {
            return Err(Error::ConstantColumn(data.n_inputs()));
        }
        Ok(Normalization {
            input_min,
            input_max,
            target_min,
            target_max,
        })
    }

    pub fn apply(&self, data: &WindowedDataset) -> Result<WindowedDataset> {
        if data.n_inputs() != self.input_min.len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_min.len(),
                got: data.n_inputs(),
            });
        }
        let n = data.n_inputs();
        let inputs = data
            .inputs
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let j = k % n;
                (v - self.input_min[j]) / (self.input_max[j] - self.input_min[j])
            })
            .collect();
        let targets = data
            .targets
            .iter()
            .map(|v| (v - self.target_min) / (self.target_max - self.target_min))
            .collect();
        WindowedDataset::from_flat(n, inputs, targets)
    }

    /// Map normalized target values back to the original scale.
    pub fn denormalize(&self, values: &[f64]) -> Vec<f64> {
        let span = self.target_max - self.target_min;
        values.iter().map(|v| v * span + self.target_min).collect()
    }

    pub fn denormalize_inputs(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| v * (self.input_max[j] - self.input_min[j]) + self.input_min[j])
            .collect()
    }
}

/// Fit min-max scaling on `data` and apply it.
pub fn normalize_minmax(data: &WindowedDataset) -> Result<(WindowedDataset, Normalization)> {
    let record = Normalization::fit(data)?;
    Ok((record.apply(data)?, record))
}

/// Chronological split: the first `round(fraction * len)` samples train.
pub fn split(data: &WindowedDataset, fraction: f64) -> Result<(WindowedDataset, WindowedDataset)> {
    let n = data.len();
    let degenerate = Error::DegenerateSplit { fraction, len: n };
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(degenerate);
    }
    let cut = (fraction * n as f64).round() as usize;
    if cut == 0 || cut >= n {
        return Err(degenerate);
    }
    Ok((data.slice(0..cut), data.slice(cut..n)))
}

/// Named, equally long numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl RawSeries {
    pub fn single(name: impl Into<String>, values: Vec<f64>) -> Self {
        RawSeries {
            names: vec![name.into()],
            columns: vec![values],
        }
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

/// One embedded input: the value of `column` `lag` steps before the reference time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lag {
    pub column: String,
    pub lag: usize,
}

impl Lag {
    pub fn new(column: impl Into<String>, lag: usize) -> Self {
        Lag {
            column: column.into(),
            lag,
        }
    }
}

/// Sample at reference time `t` has inputs `[col_k(t - lag_k)]` and target
/// `target(t + horizon)`.
pub fn embed(
    series: &RawSeries,
    lags: &[Lag],
    target: &str,
    horizon: usize,
) -> Result<WindowedDataset> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if lags.is_empty() {
        return Err(Error::Config("at least one input lag is required".into()));
    }
    let cols = lags
        .iter()
        .map(|l| series.column_index(&l.column))
        .collect::<Result<Vec<_>>>()?;
    let target_col = series.column_index(target)?;
    let max_lag = lags.iter().map(|l| l.lag).max().unwrap_or(0);
    let len = series.len();
    if len <= max_lag + horizon {
        return Err(Error::InsufficientLength {
            needed: max_lag + horizon,
            have: len,
        });
    }
    let samples = len - max_lag - horizon;
    let mut inputs = Vec::with_capacity(samples * lags.len());
    let mut targets = Vec::with_capacity(samples);
    for t in max_lag..max_lag + samples {
        for (l, &c) in lags.iter().zip(&cols) {
            inputs.push(series.columns[c][t - l.lag]);
        }
        targets.push(series.columns[target_col][t + horizon]);
    }
    WindowedDataset::from_flat(lags.len(), inputs, targets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MackeyGlassParams {
    /// Delay in time units.
    pub tau: f64,
    /// Samples returned, one per time unit, after the washout.
    pub n: usize,
    /// Integration step; `1 / dt` must be an integer.
    pub dt: f64,
    pub x0: f64,
    /// Time units discarded before sampling starts.
    pub washout: usize,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        MackeyGlassParams {
            tau: 17.0,
            n: 1024,
            dt: 0.1,
            x0: 1.2,
            washout: 200,
        }
    }
}

#[inline]
fn mackey_glass_rhs(x: f64, delayed: f64) -> f64 {
    0.2 * delayed / (1.0 + delayed.powi(10)) - 0.1 * x
}

/// Integrate `dx/dt = 0.2 x(t - tau) / (1 + x(t - tau)^10) - 0.1 x(t)` with
/// classical RK4. Off-grid delayed values come from cubic Hermite
/// interpolation of the stored trajectory; the history before `t = 0` is `x0`.
pub fn gen_mackey_glass(params: &MackeyGlassParams) -> Result<Vec<f64>> {
    let MackeyGlassParams {
        tau,
        n,
        dt,
        x0,
        washout,
    } = *params;
    if n == 0 {
        return Err(Error::InsufficientLength { needed: 0, have: 0 });
    }
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(Error::Config(format!("integration step {dt} must lie in (0, 1]")));
    }
    let per_unit = (1.0 / dt).round();
    if ((1.0 / dt) - per_unit).abs() > 1e-9 {
        return Err(Error::Config(format!("1/dt must be an integer, dt = {dt}")));
    }
    if !(tau == 0.0 || tau >= dt) {
        return Err(Error::Config(format!("delay {tau} must be 0 or at least dt = {dt}")));
    }
    let per_unit = per_unit as usize;
    let steps = (washout + n - 1) * per_unit;
    let mut xs = Vec::with_capacity(steps + 1);
    let mut ds = Vec::with_capacity(steps + 1);

    let delayed = |xs: &[f64], ds: &[f64], s: f64| -> f64 {
        if s <= 0.0 {
            return x0;
        }
        let pos = s / dt;
        let k = pos.floor() as usize;
        let theta = pos - k as f64;
        if theta < 1e-12 || k + 1 >= xs.len() {
            return xs[k.min(xs.len() - 1)];
        }
        let (y0, y1, m0, m1) = (xs[k], xs[k + 1], ds[k] * dt, ds[k + 1] * dt);
        let t2 = theta * theta;
        let t3 = t2 * theta;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + theta) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    };

    xs.push(x0);
    ds.push(mackey_glass_rhs(x0, x0));
    for step in 0..steps {
        let t = step as f64 * dt;
        let x = xs[step];
        let (k1, k2, k3, k4);
        if tau == 0.0 {
            k1 = mackey_glass_rhs(x, x);
            let a = x + 0.5 * dt * k1;
            k2 = mackey_glass_rhs(a, a);
            let b = x + 0.5 * dt * k2;
            k3 = mackey_glass_rhs(b, b);
            let c = x + dt * k3;
            k4 = mackey_glass_rhs(c, c);
        } else {
            let d_now = delayed(&xs, &ds, t - tau);
            let d_half = delayed(&xs, &ds, t + 0.5 * dt - tau);
            let d_next = delayed(&xs, &ds, t + dt - tau);
            k1 = mackey_glass_rhs(x, d_now);
            k2 = mackey_glass_rhs(x + 0.5 * dt * k1, d_half);
            k3 = mackey_glass_rhs(x + 0.5 * dt * k2, d_half);
            k4 = mackey_glass_rhs(x + dt * k3, d_next);
        }
        let next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        xs.push(next);
        let d = if tau == 0.0 {
            next
        } else {
            delayed(&xs, &ds, t + dt - tau)
        };
        ds.push(mackey_glass_rhs(next, d));
    }
    Ok((0..n).map(|i| xs[(washout + i) * per_unit]).collect())
}

/// Load the named numeric columns of a comma-separated file with a header row.
pub fn load_csv_series(path: impl AsRef<Path>, columns: &[String]) -> Result<RawSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_series(&text, columns)
}

/// [`load_csv_series`] over in-memory text. Row numbers in errors are file
/// line numbers (the header is line 1).
pub fn parse_csv_series(text: &str, columns: &[String]) -> Result<RawSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            column: String::new(),
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Parse {
            row: 1,
            column: String::new(),
            message: "missing header row".into(),
        });
    }
    let idx = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::MissingColumn(c.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Vec::new(); columns.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        for ((col, &j), name) in out.iter_mut().zip(&idx).zip(columns) {
            let cell = record.get(j).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: name.clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            col.push(v);
        }
    }
    if out.first().is_none_or(Vec::is_empty) {
        return Err(Error::Parse {
            row: 2,
            column: String::new(),
            message: "no data rows".into(),
        });
    }
    Ok(RawSeries {
        names: columns.to_vec(),
        columns: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeriesSource {
    MackeyGlass(MackeyGlassParams),
    /// The Box-Jenkins gas furnace file at [`gas_furnace_path`].
    GasFurnace,
    Csv { path: PathBuf, columns: Vec<String> },
}

/// How to turn a raw series into train/test regression data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub source: SeriesSource,
    pub lags: Vec<Lag>,
    pub target: String,
    pub horizon: usize,
    /// Fraction of samples (chronologically first) used for training.
    pub split: f64,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_true() -> bool {
    true
}

impl SeriesSpec {
    /// `x(t-18), x(t-12), x(t-6), x(t) -> x(t+6)`, 1000 samples.
    pub fn mackey_glass() -> Self {
        SeriesSpec {
            source: SeriesSource::MackeyGlass(MackeyGlassParams::default()),
            lags: [18, 12, 6, 0].into_iter().map(|l| Lag::new("x", l)).collect(),
            target: "x".into(),
            horizon: 6,
            split: 0.5,
            normalize: true,
        }
    }

    /// `u(t-4), y(t-1) -> y(t)` on the file at [`gas_furnace_path`].
    pub fn gas_furnace() -> Self {
        SeriesSpec {
            source: SeriesSource::GasFurnace,
            lags: vec![Lag::new("u", 3), Lag::new("y", 0)],
            target: "y".into(),
            horizon: 1,
            split: 0.5,
            normalize: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!("split {} outside (0, 1)", self.split)));
        }
        if self.lags.is_empty() {
            return Err(Error::Config("no input lags".into()));
        }
        Ok(())
    }

    pub fn load_raw(&self) -> Result<RawSeries> {
        match &self.source {
            SeriesSource::MackeyGlass(p) => Ok(RawSeries::single("x", gen_mackey_glass(p)?)),
            SeriesSource::GasFurnace => {
                load_csv_series(gas_furnace_path(), &["u".to_string(), "y".to_string()])
            }
            SeriesSource::Csv { path, columns } => load_csv_series(path, columns),
        }
    }

    /// Embed, split chronologically, and (optionally) normalize with
    /// statistics of the training part only.
    pub fn prepare(&self) -> Result<PreparedData> {
        self.validate()?;
        let raw = self.load_raw()?;
        let windowed = embed(&raw, &self.lags, &self.target, self.horizon)?;
        let (train, test) = split(&windowed, self.split)?;
        if !self.normalize {
            return Ok(PreparedData {
                train,
                test,
                normalization: None,
            });
        }
        let record = Normalization::fit(&train)?;
        Ok(PreparedData {
            train: record.apply(&train)?,
            test: record.apply(&test)?,
            normalization: Some(record),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub train: WindowedDataset,
    pub test: WindowedDataset,
    pub normalization: Option<Normalization>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> RawSeries {
        RawSeries::single("x", values.to_vec())
    }

    #[test]
    fn embed_direct_indexing() {
        let ds = embed(&series(&[0.0, 1.0, 2.0, 3.0, 4.0]), &[Lag::new("x", 1), Lag::new("x", 0)], "x", 1).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.row(0), &[0.0, 1.0]);
        assert_eq!(ds.row(2), &[2.0, 3.0]);
        assert_eq!(ds.targets(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn embed_too_short() {
        assert!(matches!(
            embed(&series(&[0.0, 1.0, 2.0]), &[Lag::new("x", 2)], "x", 1),
            Err(Error::InsufficientLength { .. })
        ));
        assert!(matches!(
            embed(&series(&[0.0, 1.0, 2.0]), &[Lag::new("z", 0)], "x", 1),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn embed_multi_column() {
        let raw = RawSeries {
            names: vec!["u".into(), "y".into()],
            columns: vec![(0..10).map(f64::from).collect(), (100..110).map(f64::from).collect()],
        };
        // u(t-4), y(t-1) -> y(t)
        let ds = embed(&raw, &[Lag::new("u", 3), Lag::new("y", 0)], "y", 1).unwrap();
        assert_eq!(ds.len(), 6);
        assert_eq!(ds.row(0), &[0.0, 103.0]);
        assert_eq!(ds.targets()[0], 104.0);
    }

    #[test]
    fn normalization_examples() {
        let ds = WindowedDataset::new(vec![vec![2.0], vec![4.0]], vec![1.0, 3.0]).unwrap();
        let (norm, rec) = normalize_minmax(&ds).unwrap();
        assert_eq!(norm.row(0), &[0.0]);
        assert_eq!(norm.row(1), &[1.0]);
        assert_eq!(rec.denormalize(norm.targets()), vec![1.0, 3.0]);

        let flat = WindowedDataset::new(vec![vec![2.0], vec![2.0]], vec![1.0, 3.0]).unwrap();
        assert!(matches!(normalize_minmax(&flat), Err(Error::ConstantColumn(0))));
    }

    #[test]
    fn split_examples() {
        let ds = WindowedDataset::new((0..1000).map(|i| vec![i as f64]).collect(), vec![0.0; 1000]).unwrap();
        let (a, b) = split(&ds, 0.5).unwrap();
        assert_eq!((a.len(), b.len()), (500, 500));
        assert!(a.row(a.len() - 1)[0] < b.row(0)[0]);

        let ds = ds.slice(0..296);
        let (a, b) = split(&ds, 0.5).unwrap();
        assert_eq!((a.len(), b.len()), (148, 148));

        assert!(matches!(split(&ds.slice(0..1), 0.5), Err(Error::DegenerateSplit { .. })));
        assert!(split(&ds, 1.0).is_err());
    }

    #[test]
    fn normalization_fitted_on_train_only() {
        let mut spec = SeriesSpec::mackey_glass();
        if let SeriesSource::MackeyGlass(p) = &mut spec.source {
            p.n = 300;
        }
        let data = spec.prepare().unwrap();
        let rec = data.normalization.unwrap();
        for j in 0..4 {
            let (lo, hi) = min_max(data.train.column(j));
            assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
            // test columns are mapped with the same record
            assert!(rec.input_min[j] < rec.input_max[j]);
        }
    }

    #[test]
    fn csv_errors() {
        let cols = vec!["u".to_string(), "y".to_string()];
        let bad = "u,y\n1.0,2.0\n1.5,abc\n";
        match parse_csv_series(bad, &cols) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "y");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_csv_series("", &cols).is_err());
        assert!(parse_csv_series("u,y\n", &cols).is_err());
        assert!(matches!(
            parse_csv_series("u,z\n1,2\n", &cols),
            Err(Error::MissingColumn(_))
        ));
        assert!(matches!(
            load_csv_series("/definitely/not/here.csv", &cols),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn gas_furnace_file_has_296_rows() {
        // The series is not shipped with the crate; see `gas_furnace_path`.
        if !gas_furnace_path().exists() {
            eprintln!("gas furnace file absent, skipping");
            return;
        }
        let raw = SeriesSpec::gas_furnace().load_raw().unwrap();
        assert_eq!(raw.len(), 296);
        assert_eq!(raw.names, vec!["u", "y"]);
    }

    #[test]
    fn mackey_glass_without_delay_settles_at_one() {
        let p = MackeyGlassParams {
            tau: 0.0,
            n: 400,
            dt: 0.1,
            x0: 1.2,
            washout: 0,
        };
        let xs = gen_mackey_glass(&p).unwrap();
        assert_eq!(xs[0], 1.2);
        for w in xs.windows(2) {
            assert!(w[1] <= w[0] && w[1] >= 1.0 - 1e-12);
        }
        assert!((xs[399] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mackey_glass_is_deterministic() {
        let p = MackeyGlassParams {
            n: 200,
            ..Default::default()
        };
        assert_eq!(gen_mackey_glass(&p).unwrap(), gen_mackey_glass(&p).unwrap());
    }

    #[test]
    fn mackey_glass_converges_under_step_halving() {
        // Chaos amplifies any difference, so only the early transient is compared.
        let run = |dt| {
            gen_mackey_glass(&MackeyGlassParams {
                n: 100,
                dt,
                washout: 0,
                ..Default::default()
            })
            .unwrap()
        };
        let (coarse, fine) = (run(0.1), run(0.05));
        let worst = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst:e}");
    }

    #[test]
    fn mackey_glass_rejects_bad_steps() {
        let p = MackeyGlassParams {
            dt: 0.3,
            ..Default::default()
        };
        assert!(gen_mackey_glass(&p).is_err());
        let p = MackeyGlassParams {
            n: 0,
            ..Default::default()
        };
        assert!(matches!(gen_mackey_glass(&p), Err(Error::InsufficientLength { .. })));
    }
}
