//! The layered chromosome and its mapping to fuzzy inference systems.
//!
//! A [`Genome`] is a flat vector of genes whose layout is fixed by an
//! [`EncodingSpec`]; every candidate of one spec has the same length so all
//! genetic operators work position by position. Field order (see
//! [`Layout`]):
//!
//! | block            | genes                                   |
//! |------------------|-----------------------------------------|
//! | MF counts        | `n` integers in `{2,3,4}`               |
//! | MF shapes        | `n` categoricals (0 = bell, 1 = Gaussian)|
//! | MF parameters    | `n * 4 * 3` reals, slot order `p, q, r` |
//! | consequent angles| `R * (n + 1)` reals, degrees            |
//! | rule bits        | `R` booleans                            |
//! | label masks      | `R * n * 4` booleans                    |
//! | operators        | `tnorm_p`, `tconorm_p`                  |
//! | learning rate    | 1 real                                  |
//! | FIS kind         | 1 categorical (pinned to Takagi-Sugeno) |
//!
//! with `R = 4^n` rule slots, slot `j` being the `j`-th grid rule over four
//! labels per variable. Gaussian MFs reuse the slots as `sigma = p`, `mu = r`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Gene, GeneSpace};
use crate::fuzzy::{
    FisKind, FuzzyInferenceSystem, FuzzyRule, FuzzyVariable, MembershipFunction, MfShape,
    OperatorParams, TsConsequent, Universe, MAX_LABELS, MIN_LABELS, P_MAX, P_MIN,
};
use crate::rulegen::{default_partition, grid_labels};

/// Angle genes live in `[-ANGLE_BOUND, ANGLE_BOUND]` degrees.
pub const ANGLE_BOUND: f64 = 89.9;

const SHAPES: [MfShape; 2] = [MfShape::Bell, MfShape::Gaussian];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub genes: Vec<f64>,
}

impl Genome {
    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// One line of comma-separated gene values (round-trippable `f64` text).
    pub fn to_csv_line(&self) -> String {
        self.genes
            .iter()
            .map(|g| format!("{g:?}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn from_csv_line(line: &str) -> Result<Self> {
        let genes = line
            .trim()
            .split(',')
            .enumerate()
            .map(|(i, s)| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    row: 1,
                    column: i.to_string(),
                    message: format!("{s:?} is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Genome { genes })
    }
}

/// `tan(alpha)` for `alpha` in degrees strictly inside `(-90, 90)`.
pub fn angle_to_coeff(alpha: f64) -> Result<f64> {
    if !(alpha > -90.0 && alpha < 90.0) {
        return Err(Error::AngleOutOfRange(alpha));
    }
    Ok(alpha.to_radians().tan())
}

/// `atan(p)` in degrees.
pub fn coeff_to_angle(p: f64) -> f64 {
    p.atan().to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorMode {
    /// Schweizer-Sklar operators with evolved parameters.
    Parameterized,
    /// `min`/`max`; the operator genes are frozen and ignored.
    FixedMin,
}

/// Everything that determines the chromosome layout and gene bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub input_names: Vec<String>,
    pub universes: Vec<Universe>,
    /// Shapes the shape gene may take; a single entry pins it.
    pub shapes: Vec<MfShape>,
    /// Bounds of `p` / `sigma` as fractions of the universe width.
    pub width_range: (f64, f64),
    pub slope_range: (f64, f64),
    pub learning_rate_range: (f64, f64),
    pub operator_mode: OperatorMode,
    pub evolve_label_masks: bool,
    /// Switch an all-inactive decoded rule base back on (slot 0).
    pub repair: bool,
}

/// Gene offsets of each block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_inputs: usize,
    pub max_rules: usize,
    pub counts: usize,
    pub shapes: usize,
    pub mf_params: usize,
    pub angles: usize,
    pub rule_bits: usize,
    pub masks: usize,
    pub operators: usize,
    pub learning_rate: usize,
    pub kind: usize,
    pub len: usize,
}

impl EncodingSpec {
    /// Defaults for `n_inputs` variables on `[0, 1]`.
    pub fn unit(n_inputs: usize) -> Self {
        EncodingSpec {
            input_names: (1..=n_inputs).map(|i| format!("x{i}")).collect(),
            universes: vec![Universe::unit(); n_inputs],
            shapes: SHAPES.to_vec(),
            width_range: (0.02, 1.0),
            slope_range: (0.5, 4.0),
            learning_rate_range: (0.05, 0.20),
            operator_mode: OperatorMode::Parameterized,
            evolve_label_masks: false,
            repair: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_inputs();
        if n == 0 || n > 6 {
            return Err(Error::Config(format!("encoding supports 1..=6 inputs, got {n}")));
        }
        if self.universes.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.universes.len(),
            });
        }
        if self.shapes.is_empty() {
            return Err(Error::Config("no membership function shape allowed".into()));
        }
        for (name, (lo, hi)) in [
            ("width_range", self.width_range),
            ("slope_range", self.slope_range),
            ("learning_rate_range", self.learning_rate_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= 0.0) {
                return Err(Error::Config(format!("{name} [{lo}, {hi}] is not a valid range")));
            }
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.input_names.len()
    }

    /// `MAX_LABELS ^ n_inputs`.
    pub fn max_rules(&self) -> usize {
        MAX_LABELS.pow(self.n_inputs() as u32)
    }

    pub fn layout(&self) -> Layout {
        let n = self.n_inputs();
        let r = self.max_rules();
        let counts = 0;
        let shapes = counts + n;
        let mf_params = shapes + n;
        let angles = mf_params + n * MAX_LABELS * 3;
        let rule_bits = angles + r * (n + 1);
        let masks = rule_bits + r;
        let operators = masks + r * n * MAX_LABELS;
        let learning_rate = operators + 2;
        let kind = learning_rate + 1;
        Layout {
            n_inputs: n,
            max_rules: r,
            counts,
            shapes,
            mf_params,
            angles,
            rule_bits,
            masks,
            operators,
            learning_rate,
            kind,
            len: kind + 1,
        }
    }

    fn shape_index(shape: MfShape) -> f64 {
        SHAPES.iter().position(|s| *s == shape).unwrap() as f64
    }

    fn slot_bounds(&self, v: usize) -> [(f64, f64); 3] {
        let u = self.universes[v];
        let w = u.width();
        [
            (self.width_range.0 * w, self.width_range.1 * w),
            self.slope_range,
            (u.lo, u.hi),
        ]
    }

    /// Bounds and kind of every gene position.
    pub fn gene_space(&self) -> GeneSpace {
        let l = self.layout();
        let n = l.n_inputs;
        let mut genes = Vec::with_capacity(l.len);
        for _ in 0..n {
            genes.push(Gene::integer(MIN_LABELS as f64, MAX_LABELS as f64));
        }
        for _ in 0..n {
            let g = Gene::categorical(SHAPES.len());
            genes.push(match self.shapes.as_slice() {
                [only] => g.pinned(Self::shape_index(*only)),
                _ => g,
            });
        }
        for v in 0..n {
            let bounds = self.slot_bounds(v);
            for _ in 0..MAX_LABELS {
                for (lo, hi) in bounds {
                    genes.push(Gene::real(lo, hi));
                }
            }
        }
        for _ in 0..l.max_rules * (n + 1) {
            genes.push(Gene::real(-ANGLE_BOUND, ANGLE_BOUND));
        }
        for _ in 0..l.max_rules {
            genes.push(Gene::boolean());
        }
        for _ in 0..l.max_rules * n * MAX_LABELS {
            let g = Gene::boolean();
            genes.push(if self.evolve_label_masks { g } else { g.frozen() });
        }
        for _ in 0..2 {
            let g = Gene::real(P_MIN, P_MAX);
            genes.push(match self.operator_mode {
                OperatorMode::Parameterized => g,
                OperatorMode::FixedMin => g.pinned(P_MAX),
            });
        }
        genes.push(Gene::real(self.learning_rate_range.0, self.learning_rate_range.1));
        genes.push(Gene::categorical(FisKind::ALL.len()).pinned(0.0));
        debug_assert_eq!(genes.len(), l.len);
        GeneSpace::new(genes)
    }

    fn check_len(&self, genome: &Genome) -> Result<Layout> {
        let l = self.layout();
        if genome.len() != l.len {
            return Err(Error::SpecMismatch(l.len, genome.len()));
        }
        Ok(l)
    }

    /// Random genome: every free gene uniform within its bounds, all rule
    /// bits set, label masks in the grid pattern.
    pub fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> Genome {
        let space = self.gene_space();
        let mut genome = space.sample(rng);
        let l = self.layout();
        self.write_grid_masks(&mut genome, &l);
        genome.genes[l.rule_bits..l.rule_bits + l.max_rules].fill(1.0);
        genome
    }

    fn write_grid_masks(&self, genome: &mut Genome, l: &Layout) {
        let counts = vec![MAX_LABELS; l.n_inputs];
        for j in 0..l.max_rules {
            let labels = grid_labels(j, &counts);
            for (v, label) in labels.into_iter().enumerate() {
                let base = l.masks + (j * l.n_inputs + v) * MAX_LABELS;
                for k in 0..MAX_LABELS {
                    genome.genes[base + k] = if k == label { 1.0 } else { 0.0 };
                }
            }
        }
    }

    fn mask_of(genome: &Genome, l: &Layout, slot: usize, v: usize) -> u8 {
        let base = l.masks + (slot * l.n_inputs + v) * MAX_LABELS;
        (0..MAX_LABELS)
            .filter(|&k| genome.genes[base + k] >= 0.5)
            .fold(0u8, |m, k| m | (1 << k))
    }

    pub fn mf_counts(&self, genome: &Genome) -> Vec<usize> {
        let l = self.layout();
        (0..l.n_inputs)
            .map(|v| {
                (genome.genes[l.counts + v].round() as usize).clamp(MIN_LABELS, MAX_LABELS)
            })
            .collect()
    }

    pub fn learning_rate(&self, genome: &Genome) -> f64 {
        genome.genes[self.layout().learning_rate]
    }

    pub fn set_learning_rate(&self, genome: &mut Genome, rate: f64) {
        let l = self.layout();
        genome.genes[l.learning_rate] = rate;
    }

    /// Number of rules that survive decoding (before repair).
    pub fn active_rule_count(&self, genome: &Genome) -> usize {
        let l = self.layout();
        let counts = self.mf_counts(genome);
        (0..l.max_rules)
            .filter(|&j| self.slot_rule_masks(genome, &l, &counts, j).is_some())
            .count()
    }

    /// Masks of slot `j` if its rule bit is set and it references only
    /// existing labels and at least one variable.
    fn slot_rule_masks(
        &self,
        genome: &Genome,
        l: &Layout,
        counts: &[usize],
        j: usize,
    ) -> Option<Vec<u8>> {
        if genome.genes[l.rule_bits + j] < 0.5 {
            return None;
        }
        let masks: Vec<u8> = (0..l.n_inputs).map(|v| Self::mask_of(genome, l, j, v)).collect();
        let in_range = masks
            .iter()
            .zip(counts)
            .all(|(&m, &c)| u32::from(m) >> c == 0);
        (in_range && masks.iter().any(|&m| m != 0)).then_some(masks)
    }

    fn consequent(genome: &Genome, l: &Layout, j: usize) -> Result<TsConsequent> {
        let base = l.angles + j * (l.n_inputs + 1);
        let coeffs = genome.genes[base..base + l.n_inputs + 1]
            .iter()
            .map(|&a| angle_to_coeff(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(TsConsequent { coeffs })
    }

    /// Genotype to phenotype. Rule slots with a cleared bit, with a label
    /// beyond their variable's count, or with no label at all are dropped.
    pub fn decode(&self, genome: &Genome) -> Result<FuzzyInferenceSystem> {
        let l = self.check_len(genome)?;
        let n = l.n_inputs;
        let counts = self.mf_counts(genome);

        let mut inputs = Vec::with_capacity(n);
        for v in 0..n {
            let shape_gene = genome.genes[l.shapes + v].round() as usize;
            let shape = SHAPES[shape_gene.min(SHAPES.len() - 1)];
            let universe = self.universes[v];
            let partitions = (0..counts[v])
                .map(|k| {
                    let base = l.mf_params + (v * MAX_LABELS + k) * 3;
                    let (p, q, r) = (
                        genome.genes[base],
                        genome.genes[base + 1],
                        universe.clamp(genome.genes[base + 2]),
                    );
                    match shape {
                        MfShape::Bell => MembershipFunction::bell(p, q, r),
                        MfShape::Gaussian => MembershipFunction::gaussian(r, p),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            inputs.push(FuzzyVariable::new(self.input_names[v].clone(), universe, partitions)?);
        }

        let mut rules = Vec::new();
        for j in 0..l.max_rules {
            if let Some(antecedent) = self.slot_rule_masks(genome, &l, &counts, j) {
                rules.push(FuzzyRule {
                    antecedent,
                    consequent: Self::consequent(genome, &l, j)?,
                    active: true,
                });
            }
        }
        if rules.is_empty() {
            if !self.repair {
                return Err(Error::NoActiveRules);
            }
            let own: Vec<u8> = (0..n).map(|v| Self::mask_of(genome, &l, 0, v)).collect();
            let usable = own.iter().any(|&m| m != 0)
                && own.iter().zip(&counts).all(|(&m, &c)| u32::from(m) >> c == 0);
            rules.push(FuzzyRule {
                antecedent: if usable { own } else { vec![1; n] },
                consequent: Self::consequent(genome, &l, 0)?,
                active: true,
            });
        }

        let operators = match self.operator_mode {
            OperatorMode::FixedMin => OperatorParams::fixed_min(),
            OperatorMode::Parameterized => OperatorParams::new(
                genome.genes[l.operators].clamp(P_MIN, P_MAX),
                genome.genes[l.operators + 1].clamp(P_MIN, P_MAX),
            )?,
        };
        let kind_gene = genome.genes[l.kind].round() as usize;
        let kind = FisKind::ALL[kind_gene.min(FisKind::ALL.len() - 1)];
        FuzzyInferenceSystem::new(inputs, rules, operators, kind)
    }

    /// Phenotype to genotype; the learning-rate gene is set to the middle of
    /// its range. Inactive rules are not encoded.
    pub fn encode(&self, fis: &FuzzyInferenceSystem) -> Result<Genome> {
        self.validate()?;
        let l = self.layout();
        let n = l.n_inputs;
        let bad = |msg: String| Err(Error::NotRepresentable(msg));
        if fis.n_inputs() != n {
            return bad(format!("{} inputs, encoding has {n}", fis.n_inputs()));
        }
        let space = self.gene_space();
        let mut genome = Genome {
            genes: space.genes().iter().map(|g| g.pinned_value().unwrap_or(g.lo)).collect(),
        };
        self.write_grid_masks(&mut genome, &l);
        genome.genes[l.learning_rate] =
            0.5 * (self.learning_rate_range.0 + self.learning_rate_range.1);

        for (v, var) in fis.inputs.iter().enumerate() {
            if var.universe != self.universes[v] || var.name != self.input_names[v] {
                return bad(format!("variable {v} differs from the encoding's name/universe"));
            }
            let m = var.partitions.len();
            genome.genes[l.counts + v] = m as f64;
            let shape = var.partitions[0].shape();
            if var.partitions.iter().any(|mf| mf.shape() != shape) {
                return bad(format!("variable {v} mixes MF shapes"));
            }
            if !self.shapes.contains(&shape) {
                return bad(format!("shape {shape:?} not allowed"));
            }
            genome.genes[l.shapes + v] = Self::shape_index(shape);
            let bounds = self.slot_bounds(v);
            let filler = default_partition(var.universe, MAX_LABELS, shape)?;
            for k in 0..MAX_LABELS {
                let base = l.mf_params + (v * MAX_LABELS + k) * 3;
                let mf = var.partitions.get(k).unwrap_or(&filler[k]);
                let slot = match *mf {
                    MembershipFunction::Bell { p, q, r } => [p, q, r],
                    MembershipFunction::Gaussian { mu, sigma } => {
                        [sigma, 0.5 * (bounds[1].0 + bounds[1].1), mu]
                    }
                };
                for (i, (value, (lo, hi))) in slot.into_iter().zip(bounds).enumerate() {
                    if !(lo..=hi).contains(&value) {
                        if k < m {
                            return bad(format!(
                                "variable {v} MF {k} parameter {i} = {value} outside [{lo}, {hi}]"
                            ));
                        }
                        genome.genes[base + i] = value.clamp(lo, hi);
                    } else {
                        genome.genes[base + i] = value;
                    }
                }
            }
        }

        let active: Vec<&FuzzyRule> = fis.rules.iter().filter(|r| r.active).collect();
        if active.len() > l.max_rules {
            return bad(format!("{} rules exceed {} slots", active.len(), l.max_rules));
        }
        let counts = vec![MAX_LABELS; n];
        let grid_slot = |rule: &FuzzyRule| -> Option<usize> {
            rule.antecedent.iter().try_fold(0usize, |acc, &m| {
                (m.count_ones() == 1).then(|| acc * MAX_LABELS + m.trailing_zeros() as usize)
            })
        };
        let grid_slots: Option<Vec<usize>> = active.iter().map(|r| grid_slot(r)).collect();
        let slots: Vec<usize> = match grid_slots {
            Some(s) if s.windows(2).all(|w| w[0] < w[1]) => s,
            _ => (0..active.len()).collect(),
        };
        debug_assert!(slots.iter().all(|&s| grid_labels(s, &counts).len() == n));
        for (rule, &j) in active.iter().zip(&slots) {
            genome.genes[l.rule_bits + j] = 1.0;
            for (v, &mask) in rule.antecedent.iter().enumerate() {
                let base = l.masks + (j * n + v) * MAX_LABELS;
                for k in 0..MAX_LABELS {
                    genome.genes[base + k] = f64::from((mask >> k) & 1);
                }
            }
            for (i, &c) in rule.consequent.coeffs.iter().enumerate() {
                let angle = coeff_to_angle(c);
                if angle.abs() > ANGLE_BOUND {
                    return bad(format!("coefficient {c} needs angle {angle} beyond the gene bound"));
                }
                genome.genes[l.angles + j * (n + 1) + i] = angle;
            }
        }

        match (self.operator_mode, fis.operators.fixed_min) {
            (OperatorMode::FixedMin, true) => {}
            (OperatorMode::Parameterized, false) => {
                genome.genes[l.operators] = fis.operators.tnorm_p;
                genome.genes[l.operators + 1] = fis.operators.tconorm_p;
            }
            _ => return bad("operator mode differs from the encoding".into()),
        }
        if fis.kind != FisKind::TakagiSugeno {
            return bad(format!("kind {:?} is pinned to Takagi-Sugeno", fis.kind));
        }
        Ok(genome)
    }
}
