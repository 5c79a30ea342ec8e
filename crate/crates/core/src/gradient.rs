//! Gradient-descent fine-tuning of membership-function parameters.
//!
//! The loss is `L = 1/2 * mean((y_hat - y)^2)`. Derivatives follow the chain
//! rule through the weighted average, the T-norm over premise terms, the
//! T-conorm over multi-label masks and the membership functions. In fixed
//! min/max mode the derivative is routed to the first arg-min / arg-max.

use serde::{Deserialize, Serialize};

use crate::datasets::WindowedDataset;
use crate::error::{Error, Result};
use crate::fuzzy::{
    schweizer_sklar_grad, FuzzyInferenceSystem, FuzzyRule, MfShape, FIRE_EPSILON, MAX_LABELS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Also descend on the T-norm / T-conorm parameters.
    pub tune_operators: bool,
    /// Fail with `NonDifferentiablePoint` instead of using subgradients.
    pub strict: bool,
}

impl TrainSpec {
    pub fn new(learning_rate: f64, epochs: usize) -> Self {
        TrainSpec {
            learning_rate,
            epochs,
            tune_operators: false,
            strict: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec::new(0.1, 100)
    }
}

/// Training RMSE before the first update and after every epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub train_rmse: Vec<f64>,
}

impl LossTrace {
    pub fn initial(&self) -> f64 {
        self.train_rmse[0]
    }

    pub fn last(&self) -> f64 {
        *self.train_rmse.last().expect("trace is never empty")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_rmse\n");
        for (epoch, rmse) in self.train_rmse.iter().enumerate() {
            out.push_str(&format!("{epoch},{rmse}\n"));
        }
        out
    }
}

/// Loss value, the matching RMSE and the gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub loss: f64,
    pub rmse: f64,
    /// MF parameters in [`FuzzyInferenceSystem::mf_params`] order, followed by
    /// `[tnorm_p, tconorm_p]` when operators were included.
    pub values: Vec<f64>,
}

/// `1/2 * mean((y_hat - y)^2)`.
pub fn loss(fis: &FuzzyInferenceSystem, data: &WindowedDataset) -> Result<f64> {
    let rmse = fis.rmse(data)?;
    Ok(0.5 * rmse * rmse)
}

/// Gradient of the loss with respect to every MF parameter (parameters of
/// labels no active rule uses get 0).
pub fn mf_gradients(fis: &FuzzyInferenceSystem, data: &WindowedDataset) -> Result<Vec<f64>> {
    Ok(gradients(fis, data, false, false)?.values)
}

pub fn gradients(
    fis: &FuzzyInferenceSystem,
    data: &WindowedDataset,
    with_operators: bool,
    strict: bool,
) -> Result<Gradient> {
    fis.ensure_executable()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.n_inputs() != fis.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: fis.n_inputs(),
            got: data.n_inputs(),
        });
    }
    let mut ws = Workspace::new(fis, with_operators);
    let mut grad = vec![0.0; ws.n_mf_params + if with_operators { 2 } else { 0 }];
    let mut op_grad = [0.0; 2];
    let mut sse = 0.0;
    let scale = 1.0 / data.len() as f64;
    for (x, &y) in data.rows().zip(data.targets()) {
        let y_hat = ws.forward(fis, x, strict)?;
        let e = y_hat - y;
        sse += e * e;
        ws.backward(fis, e * scale, &mut grad, &mut op_grad);
    }
    if with_operators && !fis.operators.fixed_min {
        let n = ws.n_mf_params;
        grad[n] = op_grad[0];
        grad[n + 1] = op_grad[1];
    }
    let mse = sse / data.len() as f64;
    Ok(Gradient {
        loss: 0.5 * mse,
        rmse: mse.sqrt(),
        values: grad,
    })
}

/// Full-batch gradient descent with projection onto the parameter floors and
/// universes after every step. Rules, masks and consequents are untouched.
pub fn gd_finetune(
    fis: &FuzzyInferenceSystem,
    data: &WindowedDataset,
    spec: &TrainSpec,
) -> Result<(FuzzyInferenceSystem, LossTrace)> {
    spec.validate()?;
    let mut tuned = fis.clone();
    let tune_ops = spec.tune_operators && !fis.operators.fixed_min;
    let mut params = tuned.mf_params();
    let mut trace = Vec::with_capacity(spec.epochs + 1);
    for _ in 0..spec.epochs {
        let g = gradients(&tuned, data, tune_ops, spec.strict)?;
        trace.push(g.rmse);
        for (p, d) in params.iter_mut().zip(&g.values) {
            *p -= spec.learning_rate * d;
        }
        tuned.set_mf_params(&params);
        params = tuned.mf_params();
        if tune_ops {
            let n = params.len();
            tuned.operators.tnorm_p -= spec.learning_rate * g.values[n];
            tuned.operators.tconorm_p -= spec.learning_rate * g.values[n + 1];
            tuned.operators.clamp();
        }
    }
    trace.push(tuned.rmse(data)?);
    Ok((tuned, LossTrace { train_rmse: trace }))
}

/// Per-sample scratch buffers, reused across samples.
struct Workspace {
    n: usize,
    n_mf_params: usize,
    /// Offset of each `(variable, label)` in the flat parameter vector.
    offsets: Vec<[usize; MAX_LABELS]>,
    n_params: Vec<[usize; MAX_LABELS]>,
    deg: Vec<[f64; MAX_LABELS]>,
    dgrad: Vec<[[f64; 3]; MAX_LABELS]>,
    /// `ln deg` and `deg^(-p) - 1` for the T-norm parameter.
    ln_deg: Vec<[f64; MAX_LABELS]>,
    pow_m1: Vec<[f64; MAX_LABELS]>,
    /// `(variable, label)` premise terms of each active rule whose masks are
    /// all single labels; `None` routes the rule through the general path.
    single_terms: Vec<Option<Vec<(usize, usize)>>>,
    need_dp: bool,
    /// Per active rule: strength, consequent, dT/dd per variable, dT/dp.
    w: Vec<f64>,
    f: Vec<f64>,
    dw: Vec<f64>,
    dwdp: Vec<f64>,
    /// Accumulated dL/d(deg) for the current sample.
    g_deg: Vec<[f64; MAX_LABELS]>,
    y_hat: f64,
    total: f64,
    fallback: bool,
}

impl Workspace {
    fn new(fis: &FuzzyInferenceSystem, need_dp: bool) -> Self {
        let n = fis.n_inputs();
        let mut offsets = vec![[0; MAX_LABELS]; n];
        let mut n_params = vec![[0; MAX_LABELS]; n];
        let mut offset = 0;
        for (v, var) in fis.inputs.iter().enumerate() {
            for (l, mf) in var.partitions.iter().enumerate() {
                offsets[v][l] = offset;
                n_params[v][l] = mf.n_params();
                offset += mf.n_params();
            }
        }
        let active = fis.active_rule_count();
        let single_terms = fis
            .rules
            .iter()
            .filter(|r| r.active)
            .map(|r| {
                r.antecedent
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m != 0)
                    .map(|(v, &m)| m.is_power_of_two().then_some((v, m.trailing_zeros() as usize)))
                    .collect::<Option<Vec<_>>>()
                    .filter(|terms| terms.len() > 1)
            })
            .collect();
        Workspace {
            n,
            n_mf_params: offset,
            offsets,
            n_params,
            deg: vec![[0.0; MAX_LABELS]; n],
            dgrad: vec![[[0.0; 3]; MAX_LABELS]; n],
            ln_deg: vec![[0.0; MAX_LABELS]; n],
            pow_m1: vec![[0.0; MAX_LABELS]; n],
            single_terms,
            need_dp,
            w: vec![0.0; active],
            f: vec![0.0; active],
            dw: vec![0.0; active * n],
            dwdp: vec![0.0; active],
            g_deg: vec![[0.0; MAX_LABELS]; n],
            y_hat: 0.0,
            total: 0.0,
            fallback: false,
        }
    }

    fn forward(&mut self, fis: &FuzzyInferenceSystem, x: &[f64], strict: bool) -> Result<f64> {
        let p = fis.operators.tnorm_p;
        for (v, var) in fis.inputs.iter().enumerate() {
            for (l, mf) in var.partitions.iter().enumerate() {
                if strict && mf.shape() == MfShape::Bell && x[v] == mf.center() {
                    return Err(Error::NonDifferentiablePoint(format!(
                        "input {v} sits on the center of label {l}"
                    )));
                }
                let d = mf.eval_with_grad(x[v], &mut self.dgrad[v][l]);
                self.deg[v][l] = d;
                if !fis.operators.fixed_min && d > 0.0 {
                    let ln = d.ln();
                    let pm1 = (-p * ln).exp_m1();
                    self.ln_deg[v][l] = ln;
                    self.pow_m1[v][l] = pm1;
                }
            }
        }
        let (mut num, mut den, mut plain) = (0.0, 0.0, 0.0);
        let n = self.n;
        for (k, rule) in fis.rules.iter().filter(|r| r.active).enumerate() {
            let dw = &mut self.dw[k * n..(k + 1) * n];
            let (w, dp) = if fis.operators.fixed_min {
                min_strength(fis, rule, &self.deg, dw, strict)?
            } else if let Some(terms) = &self.single_terms[k] {
                single_strength(
                    terms,
                    p,
                    self.need_dp,
                    &self.deg,
                    &self.ln_deg,
                    &self.pow_m1,
                    dw,
                )
            } else {
                strength(fis, rule, &self.deg, &self.ln_deg, &self.pow_m1, dw)
            };
            let f = rule.consequent.eval(x);
            self.w[k] = w;
            self.dwdp[k] = dp;
            self.f[k] = f;
            num += w * f;
            den += w;
            plain += f;
        }
        self.fallback = den < FIRE_EPSILON;
        self.total = den;
        self.y_hat = if self.fallback {
            plain / self.w.len() as f64
        } else {
            num / den
        };
        Ok(self.y_hat)
    }

    /// Accumulate the gradient of `dl_dy * y_hat` into `grad` / `op_grad`.
    fn backward(
        &mut self,
        fis: &FuzzyInferenceSystem,
        dl_dy: f64,
        grad: &mut [f64],
        op_grad: &mut [f64; 2],
    ) {
        // The unweighted-mean fallback does not depend on any MF parameter.
        if self.fallback || dl_dy == 0.0 {
            return;
        }
        let n = self.n;
        for row in &mut self.g_deg {
            *row = [0.0; MAX_LABELS];
        }
        let inv_total = 1.0 / self.total;
        for (k, rule) in fis.rules.iter().filter(|r| r.active).enumerate() {
            let coef = dl_dy * (self.f[k] - self.y_hat) * inv_total;
            if coef == 0.0 {
                continue;
            }
            op_grad[0] += coef * self.dwdp[k];
            for (v, &mask) in rule.antecedent.iter().enumerate() {
                let gd = coef * self.dw[k * n + v];
                if mask == 0 || gd == 0.0 {
                    continue;
                }
                if mask.is_power_of_two() {
                    self.g_deg[v][mask.trailing_zeros() as usize] += gd;
                } else {
                    let mut partial = [0.0; MAX_LABELS];
                    let dp = conorm_grad(fis, mask, &self.deg[v], &mut partial);
                    for (l, d) in partial.iter().enumerate() {
                        self.g_deg[v][l] += gd * d;
                    }
                    op_grad[1] += gd * dp;
                }
            }
        }
        for v in 0..n {
            for l in 0..fis.inputs[v].partitions.len() {
                let g = self.g_deg[v][l];
                if g == 0.0 {
                    continue;
                }
                let off = self.offsets[v][l];
                for j in 0..self.n_params[v][l] {
                    grad[off + j] += g * self.dgrad[v][l][j];
                }
            }
        }
    }
}

/// Premise degree of one variable and its partials with respect to the
/// label degrees (`partial`) and the T-conorm parameter (return value).
fn conorm_grad(
    fis: &FuzzyInferenceSystem,
    mask: u8,
    row: &[f64; MAX_LABELS],
    partial: &mut [f64; MAX_LABELS],
) -> f64 {
    let labels: Vec<usize> = (0..MAX_LABELS).filter(|l| mask & (1 << l) != 0).collect();
    if fis.operators.fixed_min {
        let best = labels
            .iter()
            .copied()
            .fold(labels[0], |b, l| if row[l] > row[b] { l } else { b });
        partial[best] = 1.0;
        return 0.0;
    }
    let dual: Vec<f64> = labels.iter().map(|&l| 1.0 - row[l]).collect();
    let mut g = vec![0.0; dual.len()];
    let (_, dp) = schweizer_sklar_grad(&dual, fis.operators.tconorm_p, &mut g);
    for (&l, gi) in labels.iter().zip(&g) {
        partial[l] = *gi;
    }
    -dp
}

/// Parameterized T-norm strength of `rule` with `dT/d(term)` written into
/// `dw` (one slot per variable) and `dT/dp` returned.
fn strength(
    fis: &FuzzyInferenceSystem,
    rule: &FuzzyRule,
    deg: &[[f64; MAX_LABELS]],
    ln_deg: &[[f64; MAX_LABELS]],
    pow_m1: &[[f64; MAX_LABELS]],
    dw: &mut [f64],
) -> (f64, f64) {
    let p = fis.operators.tnorm_p;
    dw.fill(0.0);
    let mut terms = [(0usize, 0.0f64, 0.0f64, 0.0f64); 16];
    let mut k = 0;
    for (v, &mask) in rule.antecedent.iter().enumerate() {
        if mask == 0 {
            continue;
        }
        let entry = if mask.is_power_of_two() {
            let l = mask.trailing_zeros() as usize;
            (v, deg[v][l], ln_deg[v][l], pow_m1[v][l])
        } else {
            let d = fis.label_degree(mask, &deg[v]);
            let ln = d.ln();
            (v, d, ln, (-p * ln).exp_m1())
        };
        terms[k] = entry;
        k += 1;
    }
    let terms = &terms[..k];
    if let [(v, d, _, _)] = terms {
        dw[*v] = 1.0;
        return (*d, 0.0);
    }
    if terms.iter().any(|t| t.1 <= 0.0) {
        return (0.0, 0.0);
    }
    let acc: f64 = terms.iter().map(|t| t.3).sum();
    if !acc.is_finite() {
        // Some d^(-p) overflowed: the log-sum-exp path of the operator.
        let values: Vec<f64> = terms.iter().map(|t| t.1).collect();
        let mut g = vec![0.0; values.len()];
        let (w, dp) = schweizer_sklar_grad(&values, p, &mut g);
        for (t, gi) in terms.iter().zip(g) {
            dw[t.0] = gi;
        }
        return (w, dp);
    }
    let ls = acc.ln_1p();
    let w = (-ls / p).exp();
    let inv_s = 1.0 / (1.0 + acc);
    let mut weighted = 0.0;
    for &(v, d, ln, pm1) in terms {
        let share = (pm1 + 1.0) * inv_s;
        dw[v] = w * share / d;
        weighted += share * (-p * ln);
    }
    (w, w * (ls - weighted) / (p * p))
}

/// Fast path of [`strength`] for premises made of single labels, using the
/// per-sample caches; `dT/dp` is only formed when `need_dp`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn single_strength(
    terms: &[(usize, usize)],
    p: f64,
    need_dp: bool,
    deg: &[[f64; MAX_LABELS]],
    ln_deg: &[[f64; MAX_LABELS]],
    pow_m1: &[[f64; MAX_LABELS]],
    dw: &mut [f64],
) -> (f64, f64) {
    let mut acc = 0.0;
    for &(v, l) in terms {
        if deg[v][l] <= 0.0 {
            dw.fill(0.0);
            return (0.0, 0.0);
        }
        acc += pow_m1[v][l];
    }
    if !acc.is_finite() {
        let values: Vec<f64> = terms.iter().map(|&(v, l)| deg[v][l]).collect();
        let mut g = vec![0.0; values.len()];
        let (w, dp) = schweizer_sklar_grad(&values, p, &mut g);
        dw.fill(0.0);
        for (&(v, _), gi) in terms.iter().zip(g) {
            dw[v] = gi;
        }
        return (w, dp);
    }
    let ls = acc.ln_1p();
    let w = (-ls / p).exp();
    let inv_s = 1.0 / (1.0 + acc);
    for &(v, l) in terms {
        dw[v] = w * ((pow_m1[v][l] + 1.0) * inv_s) / deg[v][l];
    }
    if !need_dp {
        return (w, 0.0);
    }
    // Normalize each share before weighting: `d^(-p) * ln d` alone can overflow.
    let weighted: f64 = terms
        .iter()
        .map(|&(v, l)| (pow_m1[v][l] + 1.0) * inv_s * (-p * ln_deg[v][l]))
        .sum();
    (w, w * (ls - weighted) / (p * p))
}

/// `min` strength with the subgradient on the first arg-min.
fn min_strength(
    fis: &FuzzyInferenceSystem,
    rule: &FuzzyRule,
    deg: &[[f64; MAX_LABELS]],
    dw: &mut [f64],
    strict: bool,
) -> Result<(f64, f64)> {
    dw.fill(0.0);
    let mut best: Option<(usize, f64)> = None;
    let mut tie = false;
    for (v, &mask) in rule.antecedent.iter().enumerate() {
        if mask == 0 {
            continue;
        }
        let d = fis.label_degree(mask, &deg[v]);
        match best {
            Some((_, b)) if d == b => tie = true,
            Some((_, b)) if d > b => {}
            _ => {
                best = Some((v, d));
                tie = false;
            }
        }
    }
    let (v, w) = best.unwrap_or((0, 1.0));
    if strict && tie {
        return Err(Error::NonDifferentiablePoint(format!(
            "tie in the minimum at variable {v}"
        )));
    }
    if best.is_some() {
        dw[v] = 1.0;
    }
    Ok((w, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{FisKind, FuzzyVariable, MembershipFunction, OperatorParams, TsConsequent, Universe};

    fn toy(op: OperatorParams) -> (FuzzyInferenceSystem, WindowedDataset) {
        let var = FuzzyVariable::new(
            "x",
            Universe::unit(),
            vec![
                MembershipFunction::bell(0.4, 2.0, 0.0).unwrap(),
                MembershipFunction::bell(0.4, 2.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        let rules = vec![
            FuzzyRule {
                antecedent: vec![1],
                consequent: TsConsequent { coeffs: vec![0.1, 0.0] },
                active: true,
            },
            FuzzyRule {
                antecedent: vec![2],
                consequent: TsConsequent { coeffs: vec![0.9, 0.0] },
                active: true,
            },
        ];
        let fis = FuzzyInferenceSystem::new(vec![var], rules, op, FisKind::TakagiSugeno).unwrap();
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0]).collect();
        (fis, WindowedDataset::new(xs, ys).unwrap())
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let (fis, data) = toy(OperatorParams::new(1.0, 1.0).unwrap());
        let (tuned, trace) = gd_finetune(&fis, &data, &TrainSpec::new(0.0, 25)).unwrap();
        assert_eq!(tuned, fis);
        assert_eq!(trace.train_rmse.len(), 26);
        assert!(trace.train_rmse.iter().all(|&r| r == trace.initial()));
    }

    #[test]
    fn toy_fit_reduces_rmse() {
        let (fis, data) = toy(OperatorParams::new(1.0, 1.0).unwrap());
        let (tuned, trace) = gd_finetune(&fis, &data, &TrainSpec::new(0.1, 100)).unwrap();
        assert!(trace.last() < trace.initial(), "{trace:?}");
        assert_eq!(tuned.rules, fis.rules);
        assert!((trace.initial() - fis.rmse(&data).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn fixed_min_trace_is_finite() {
        let (fis, data) = toy(OperatorParams::fixed_min());
        let (_, trace) = gd_finetune(&fis, &data, &TrainSpec::new(0.2, 100)).unwrap();
        assert!(trace.train_rmse.iter().all(|r| r.is_finite()));
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let (mut fis, data) = toy(OperatorParams::new(1.0, 1.0).unwrap());
        for rule in &mut fis.rules {
            rule.consequent.coeffs = vec![0.0, 1.0];
        }
        let g = mf_gradients(&fis, &data).unwrap();
        assert!(g.iter().all(|&v| v.abs() < 1e-15), "{g:?}");
    }

    #[test]
    fn matches_finite_differences() {
        let (mut fis, data) = toy(OperatorParams::new(0.7, 2.0).unwrap());
        // Keep the centers away from the universe edges, where projection
        // makes the difference quotient one-sided.
        fis.set_mf_params(&[0.4, 2.0, 0.1, 0.3, 1.5, 0.85]);
        let g = gradients(&fis, &data, false, false).unwrap();
        let theta = fis.mf_params();
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut plus = fis.clone();
            let mut minus = fis.clone();
            let mut t = theta.clone();
            t[i] += h;
            plus.set_mf_params(&t);
            t[i] -= 2.0 * h;
            minus.set_mf_params(&t);
            let fd = (loss(&plus, &data).unwrap() - loss(&minus, &data).unwrap()) / (2.0 * h);
            let err = (fd - g.values[i]).abs() / fd.abs().max(g.values[i].abs()).max(1e-8);
            assert!(err < 1e-5, "param {i}: {} vs {fd}", g.values[i]);
        }
    }

    #[test]
    fn strict_mode_reports_center_hits() {
        let (fis, data) = toy(OperatorParams::new(1.0, 1.0).unwrap());
        assert!(matches!(
            gradients(&fis, &data, false, true),
            Err(Error::NonDifferentiablePoint(_))
        ));
        assert!(gradients(&fis, &data, false, false).is_ok());
    }

    #[test]
    fn trace_csv() {
        let trace = LossTrace { train_rmse: vec![0.5, 0.25] };
        assert_eq!(trace.to_csv(), "epoch,train_rmse\n0,0.5\n1,0.25\n");
    }
}
