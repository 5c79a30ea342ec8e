use serde::{Deserialize, Serialize};

use super::membership::{MembershipFunction, Universe};
use super::operators::OperatorParams;
use super::{MAX_LABELS, MIN_LABELS};
use crate::datasets::WindowedDataset;
use crate::error::{Error, Result};

/// Below this total firing strength the output falls back to the plain mean
/// of the rule consequents.
pub const FIRE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyVariable {
    pub name: String,
    pub universe: Universe,
    pub partitions: Vec<MembershipFunction>,
}

impl FuzzyVariable {
    pub fn new(
        name: impl Into<String>,
        universe: Universe,
        partitions: Vec<MembershipFunction>,
    ) -> Result<Self> {
        let v = FuzzyVariable {
            name: name.into(),
            universe,
            partitions,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.partitions.len();
        if !(MIN_LABELS..=MAX_LABELS).contains(&m) {
            return Err(Error::InvalidCount {
                count: m,
                min: MIN_LABELS,
                max: MAX_LABELS,
            });
        }
        if let Some(mf) = self
            .partitions
            .iter()
            .find(|mf| !self.universe.contains(mf.center()))
        {
            return Err(Error::InvalidParameter(format!(
                "variable {:?}: center {} outside [{}, {}]",
                self.name,
                mf.center(),
                self.universe.lo,
                self.universe.hi
            )));
        }
        Ok(())
    }
}

/// Linear consequent `p_0 + sum_j p_j x_j`, stored as `[p_0, p_1, .., p_n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsConsequent {
    pub coeffs: Vec<f64>,
}

impl TsConsequent {
    pub fn zeros(n_inputs: usize) -> Self {
        TsConsequent {
            coeffs: vec![0.0; n_inputs + 1],
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs[0]
            + self.coeffs[1..]
                .iter()
                .zip(x)
                .map(|(p, xi)| p * xi)
                .sum::<f64>()
    }
}

/// One rule: a label bitmask per input variable (bit `k` selects label `k`,
/// an all-zero mask leaves the variable out of the premise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub antecedent: Vec<u8>,
    pub consequent: TsConsequent,
    pub active: bool,
}

impl FuzzyRule {
    pub fn is_empty(&self) -> bool {
        self.antecedent.iter().all(|&m| m == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisKind {
    TakagiSugeno,
    Mamdani,
    Tsukamoto,
}

impl FisKind {
    pub const ALL: [FisKind; 3] = [FisKind::TakagiSugeno, FisKind::Mamdani, FisKind::Tsukamoto];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyInferenceSystem {
    pub inputs: Vec<FuzzyVariable>,
    pub rules: Vec<FuzzyRule>,
    pub operators: OperatorParams,
    pub kind: FisKind,
}

/// Membership degrees of one input vector, `[variable][label]`.
pub(crate) type Degrees = Vec<[f64; MAX_LABELS]>;

impl FuzzyInferenceSystem {
    /// Validates dimensions and forces premise-less rules inactive.
    pub fn new(
        inputs: Vec<FuzzyVariable>,
        mut rules: Vec<FuzzyRule>,
        operators: OperatorParams,
        kind: FisKind,
    ) -> Result<Self> {
        for v in &inputs {
            v.validate()?;
        }
        let n = inputs.len();
        for rule in &mut rules {
            if rule.antecedent.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: rule.antecedent.len(),
                });
            }
            if rule.consequent.coeffs.len() != n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: n + 1,
                    got: rule.consequent.coeffs.len(),
                });
            }
            for (mask, var) in rule.antecedent.iter().zip(&inputs) {
                if u32::from(*mask) >> var.partitions.len() != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "mask {mask:#06b} references a label beyond the {} sets of {:?}",
                        var.partitions.len(),
                        var.name
                    )));
                }
            }
            if rule.is_empty() {
                rule.active = false;
            }
        }
        if !rules.iter().any(|r| r.active) {
            return Err(Error::NoActiveRules);
        }
        Ok(FuzzyInferenceSystem {
            inputs,
            rules,
            operators,
            kind,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn active_rule_count(&self) -> usize {
        self.rules.iter().filter(|r| r.active).count()
    }

    pub fn mf_counts(&self) -> Vec<usize> {
        self.inputs.iter().map(|v| v.partitions.len()).collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn degrees_into(&self, x: &[f64], out: &mut Degrees) {
        out.resize(self.inputs.len(), [0.0; MAX_LABELS]);
        for ((row, var), &xi) in out.iter_mut().zip(&self.inputs).zip(x) {
            for (d, mf) in row.iter_mut().zip(&var.partitions) {
                *d = mf.eval(xi);
            }
        }
    }

    /// Aggregated degree of one variable under `mask`: the single degree, or
    /// the T-conorm of all selected labels.
    #[inline]
    pub(crate) fn label_degree(&self, mask: u8, row: &[f64; MAX_LABELS]) -> f64 {
        if mask.is_power_of_two() {
            return row[mask.trailing_zeros() as usize];
        }
        let mut buf = [0.0; MAX_LABELS];
        let mut k = 0;
        for (bit, &d) in row.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                buf[k] = d;
                k += 1;
            }
        }
        self.operators.tconorm_many(&buf[..k])
    }

    #[inline]
    pub(crate) fn strength_from_degrees(&self, rule: &FuzzyRule, degrees: &Degrees) -> f64 {
        let mut buf = [0.0; 16];
        let mut k = 0;
        for (&mask, row) in rule.antecedent.iter().zip(degrees) {
            if mask != 0 {
                if k == buf.len() {
                    let folded = self.operators.tnorm_many(&buf);
                    buf[0] = folded;
                    k = 1;
                }
                buf[k] = self.label_degree(mask, row);
                k += 1;
            }
        }
        self.operators.tnorm_many(&buf[..k])
    }

    /// Degree to which `x` satisfies the premise of `rule`.
    pub fn firing_strength(&self, rule: &FuzzyRule, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        if rule.is_empty() {
            let idx = self.rules.iter().position(|r| r == rule).unwrap_or(usize::MAX);
            return Err(Error::MalformedRule(idx));
        }
        let mut degrees = Degrees::new();
        self.degrees_into(x, &mut degrees);
        Ok(self.strength_from_degrees(rule, &degrees))
    }

    #[inline]
    pub(crate) fn output_from_degrees(&self, x: &[f64], degrees: &Degrees) -> f64 {
        let (mut num, mut den, mut plain, mut count) = (0.0, 0.0, 0.0, 0usize);
        for rule in self.rules.iter().filter(|r| r.active) {
            let w = self.strength_from_degrees(rule, degrees);
            let f = rule.consequent.eval(x);
            num += w * f;
            den += w;
            plain += f;
            count += 1;
        }
        if den < FIRE_EPSILON {
            plain / count as f64
        } else {
            num / den
        }
    }

    /// Takagi-Sugeno output: firing-strength weighted mean of the active rule
    /// consequents.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.ensure_executable()?;
        self.check_input(x)?;
        let mut degrees = Degrees::new();
        self.degrees_into(x, &mut degrees);
        Ok(self.output_from_degrees(x, &degrees))
    }

    pub fn predict(&self, data: &WindowedDataset) -> Result<Vec<f64>> {
        self.ensure_executable()?;
        if data.n_inputs() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                got: data.n_inputs(),
            });
        }
        let mut degrees = Degrees::new();
        Ok(data
            .rows()
            .map(|x| {
                self.degrees_into(x, &mut degrees);
                self.output_from_degrees(x, &degrees)
            })
            .collect())
    }

    pub fn rmse(&self, data: &WindowedDataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let predictions = self.predict(data)?;
        let sse: f64 = predictions
            .iter()
            .zip(data.targets())
            .map(|(y, t)| (y - t) * (y - t))
            .sum();
        Ok((sse / data.len() as f64).sqrt())
    }

    pub(crate) fn ensure_executable(&self) -> Result<()> {
        match self.kind {
            FisKind::TakagiSugeno => Ok(()),
            other => Err(Error::UnsupportedFisKind(other)),
        }
    }

    /// Flattened MF parameters, variable by variable, label by label.
    pub fn mf_params(&self) -> Vec<f64> {
        self.inputs
            .iter()
            .flat_map(|v| v.partitions.iter().flat_map(|mf| mf.params()))
            .collect()
    }

    /// Inverse of [`mf_params`](Self::mf_params); projects every MF back
    /// onto its feasible set.
    pub fn set_mf_params(&mut self, values: &[f64]) {
        let mut offset = 0;
        for var in &mut self.inputs {
            let universe = var.universe;
            for mf in &mut var.partitions {
                let n = mf.n_params();
                mf.set_params(&values[offset..offset + n], universe);
                offset += n;
            }
        }
    }
}
