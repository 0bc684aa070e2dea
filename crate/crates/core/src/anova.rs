//! Allocation of variation for a balanced full-factorial table with one
//! result per cell: overall mean, main effects, first-order interactions and
//! the share of total variation each explains.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::scalar::{CompensatedSum, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnovaError {
    #[error("the table has no rows")]
    Empty,
    #[error("factor index {0} is out of range")]
    UnknownFactor(usize),
    #[error("unknown factor '{0}'")]
    UnknownFactorName(String),
    #[error("level {level} does not exist for factor '{factor}'")]
    UnknownLevel { factor: String, level: usize },
    #[error("an interaction needs two distinct factors")]
    SameFactor,
    #[error("row has {got} levels, the schema has {expected} factors")]
    Arity { expected: usize, got: usize },
    #[error("result for cell {0:?} is not finite")]
    NonFinite(Vec<usize>),
    #[error("cell {0:?} appears more than once")]
    Duplicate(Vec<usize>),
    #[error("table is not a full factorial: {present} of {expected} cells present")]
    Unbalanced { present: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSchema {
    pub name: String,
    pub levels: Vec<String>,
}

impl FactorSchema {
    pub fn new(name: impl Into<String>, levels: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            name: name.into(),
            levels: levels.into_iter().map(Into::into).collect(),
        }
    }
}

/// Level-index tuple to result.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTable<S> {
    pub label: String,
    pub factors: Vec<FactorSchema>,
    rows: Vec<(Vec<usize>, S)>,
}

impl<S: Scalar> ResponseTable<S> {
    pub fn new(label: impl Into<String>, factors: Vec<FactorSchema>) -> Self {
        Self {
            label: label.into(),
            factors,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, levels: Vec<usize>, value: S) -> Result<(), AnovaError> {
        if levels.len() != self.factors.len() {
            return Err(AnovaError::Arity {
                expected: self.factors.len(),
                got: levels.len(),
            });
        }
        for (f, &l) in self.factors.iter().zip(&levels) {
            if l >= f.levels.len() {
                return Err(AnovaError::UnknownLevel {
                    factor: f.name.clone(),
                    level: l,
                });
            }
        }
        if !value.to_f64().is_some_and(f64::is_finite) {
            return Err(AnovaError::NonFinite(levels));
        }
        self.rows.push((levels, value));
        Ok(())
    }

    pub fn rows(&self) -> &[(Vec<usize>, S)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn factor_index(&self, name: &str) -> Result<usize, AnovaError> {
        self.factors
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| AnovaError::UnknownFactorName(name.to_string()))
    }

    fn check_level(&self, factor: usize, level: usize) -> Result<(), AnovaError> {
        let f = self.factors.get(factor).ok_or(AnovaError::UnknownFactor(factor))?;
        if level >= f.levels.len() {
            return Err(AnovaError::UnknownLevel {
                factor: f.name.clone(),
                level,
            });
        }
        Ok(())
    }

    /// Every level combination present exactly once.
    pub fn check_balanced(&self) -> Result<(), AnovaError> {
        if self.rows.is_empty() {
            return Err(AnovaError::Empty);
        }
        let dims: Vec<usize> = self.factors.iter().map(|f| f.levels.len()).collect();
        let expected: usize = dims.iter().product();
        let mut seen = vec![false; expected];
        for (levels, _) in &self.rows {
            let cell = levels.iter().zip(&dims).fold(0, |acc, (&l, &d)| acc * d + l);
            if std::mem::replace(&mut seen[cell], true) {
                return Err(AnovaError::Duplicate(levels.clone()));
            }
        }
        if self.rows.len() != expected {
            return Err(AnovaError::Unbalanced {
                present: self.rows.len(),
                expected,
            });
        }
        Ok(())
    }

    fn mean_where(&self, pred: impl Fn(&[usize]) -> bool) -> S {
        let mut sum = CompensatedSum::default();
        let mut n = 0;
        for (levels, v) in &self.rows {
            if pred(levels) {
                sum.add(*v);
                n += 1;
            }
        }
        sum.value() / S::from_count(n)
    }
}

pub fn overall_mean<S: Scalar>(table: &ResponseTable<S>) -> Result<S, AnovaError> {
    if table.is_empty() {
        return Err(AnovaError::Empty);
    }
    Ok(table.mean_where(|_| true))
}

/// Mean over rows at `level` of `factor`, minus the overall mean.
pub fn main_effect<S: Scalar>(
    table: &ResponseTable<S>,
    factor: usize,
    level: usize,
) -> Result<S, AnovaError> {
    table.check_level(factor, level)?;
    let mean = overall_mean(table)?;
    Ok(table.mean_where(|l| l[factor] == level) - mean)
}

/// Cell mean at `(a, b)` minus the overall mean and both main effects.
pub fn interaction<S: Scalar>(
    table: &ResponseTable<S>,
    (fa, a): (usize, usize),
    (fb, b): (usize, usize),
) -> Result<S, AnovaError> {
    if fa == fb {
        return Err(AnovaError::SameFactor);
    }
    table.check_level(fa, a)?;
    table.check_level(fb, b)?;
    let mean = overall_mean(table)?;
    let ea = main_effect(table, fa, a)?;
    let eb = main_effect(table, fb, b)?;
    let cell = table.mean_where(|l| l[fa] == a && l[fb] == b);
    Ok(cell - (mean + ea + eb))
}

/// `Σ result² − N·mean²`, evaluated as the sum of squared deviations.
pub fn total_variation<S: Scalar>(table: &ResponseTable<S>) -> Result<S, AnovaError> {
    let mean = overall_mean(table)?;
    Ok(table.rows.iter().map(|(_, v)| (*v - mean).square()).collect::<CompensatedSum<S>>().value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    Main(usize),
    Pair(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<S> {
    pub term: Term,
    pub label: String,
    pub variation: S,
    pub percent: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEffects<S> {
    pub factors: (usize, usize),
    /// `values[a][b]` for level `a` of the first factor and `b` of the second.
    pub values: Vec<Vec<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaReport<S> {
    pub label: String,
    pub factors: Vec<FactorSchema>,
    pub runs: usize,
    pub overall_mean: S,
    /// Per factor, per level.
    pub main_effects: Vec<Vec<S>>,
    pub interactions: Vec<PairEffects<S>>,
    pub total_variation: S,
    /// Main effects in factor order, then pairs in lexicographic order.
    pub allocations: Vec<Allocation<S>>,
    /// Share left to higher-order interactions.
    pub residual_percent: S,
}

impl<S: Scalar> AnovaReport<S> {
    pub fn allocation(&self, term: Term) -> Option<&Allocation<S>> {
        self.allocations.iter().find(|a| a.term == term)
    }

    pub fn main(&self, factor_name: &str) -> Option<&Allocation<S>> {
        let k = self.factors.iter().position(|f| f.name == factor_name)?;
        self.allocation(Term::Main(k))
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&Allocation<S>> {
        let ia = self.factors.iter().position(|f| f.name == a)?;
        let ib = self.factors.iter().position(|f| f.name == b)?;
        self.allocation(Term::Pair(ia.min(ib), ia.max(ib)))
    }

    /// Allocations from largest to smallest; ties keep report order.
    pub fn ranked(&self) -> Vec<&Allocation<S>> {
        let mut v: Vec<_> = self.allocations.iter().collect();
        v.sort_by(|a, b| b.percent.partial_cmp(&a.percent).unwrap_or(std::cmp::Ordering::Equal));
        v
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,variation,allocation_percent\n");
        let f = |x: S| x.to_f64().unwrap_or(f64::NAN);
        for a in &self.allocations {
            let _ = writeln!(out, "\"{}\",{},{}", a.label, f(a.variation), f(a.percent));
        }
        let _ = writeln!(out, "residual,,{}", f(self.residual_percent));
        let _ = writeln!(out, "total,{},100", f(self.total_variation));
        out
    }
}

impl<S: Scalar> fmt::Display for AnovaReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |x: S| x.to_f64().unwrap_or(f64::NAN);
        writeln!(f, "Allocation of variation: {} ({} runs)", self.label, self.runs)?;
        writeln!(f, "overall mean {:.6}, total variation {:.6}", v(self.overall_mean), v(self.total_variation))?;
        writeln!(f)?;
        let width = self.allocations.iter().map(|a| a.label.len()).max().unwrap_or(0).max(18);
        writeln!(f, "{:<width$}  {:>8}", "Factor/Interaction", "%")?;
        for a in self.ranked() {
            writeln!(f, "{:<width$}  {:>8.2}", a.label, v(a.percent))?;
        }
        writeln!(f, "{:<width$}  {:>8.2}", "(higher order)", v(self.residual_percent))
    }
}

pub fn allocate_variation<S: Scalar>(table: &ResponseTable<S>) -> Result<AnovaReport<S>, AnovaError> {
    table.check_balanced()?;
    let n = table.len();
    let k = table.factors.len();
    let dims: Vec<usize> = table.factors.iter().map(|f| f.levels.len()).collect();
    let mean = overall_mean(table)?;

    // one pass for level sums and level-pair sums
    let mut level_sums: Vec<Vec<CompensatedSum<S>>> = dims.iter().map(|&d| vec![CompensatedSum::default(); d]).collect();
    let mut pair_sums: Vec<Vec<CompensatedSum<S>>> = Vec::new();
    let mut pairs = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            pairs.push((a, b));
            pair_sums.push(vec![CompensatedSum::default(); dims[a] * dims[b]]);
        }
    }
    for (levels, v) in table.rows() {
        for a in 0..k {
            level_sums[a][levels[a]].add(*v);
        }
        for (p, &(a, b)) in pairs.iter().enumerate() {
            pair_sums[p][levels[a] * dims[b] + levels[b]].add(*v);
        }
    }

    let main_effects: Vec<Vec<S>> = level_sums
        .iter()
        .enumerate()
        .map(|(a, sums)| {
            let per_level = S::from_count(n / dims[a]);
            sums.iter().map(|s| s.value() / per_level - mean).collect()
        })
        .collect();

    let total = total_variation(table)?;
    let percent = |var: S| {
        if total == S::zero() {
            S::zero()
        } else {
            var / total * S::hundred()
        }
    };
    let mut allocations = Vec::new();
    for a in 0..k {
        let ss: CompensatedSum<S> = main_effects[a].iter().map(|e| e.square()).collect();
        let variation = S::from_count(n / dims[a]) * ss.value();
        allocations.push(Allocation {
            term: Term::Main(a),
            label: table.factors[a].name.clone(),
            variation,
            percent: percent(variation),
        });
    }
    let mut interactions = Vec::new();
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let per_cell = S::from_count(n / (dims[a] * dims[b]));
        let values: Vec<Vec<S>> = (0..dims[a])
            .map(|la| {
                (0..dims[b])
                    .map(|lb| {
                        let cell = pair_sums[p][la * dims[b] + lb].value() / per_cell;
                        cell - (mean + main_effects[a][la] + main_effects[b][lb])
                    })
                    .collect()
            })
            .collect();
        let ss: CompensatedSum<S> = values.iter().flatten().map(|e| e.square()).collect();
        let variation = per_cell * ss.value();
        allocations.push(Allocation {
            term: Term::Pair(a, b),
            label: format!("{} - {}", table.factors[a].name, table.factors[b].name),
            variation,
            percent: percent(variation),
        });
        interactions.push(PairEffects {
            factors: (a, b),
            values,
        });
    }
    let explained: CompensatedSum<S> = allocations.iter().map(|a| a.percent).collect();
    Ok(AnovaReport {
        label: table.label.clone(),
        factors: table.factors.clone(),
        runs: n,
        overall_mean: mean,
        main_effects,
        interactions,
        total_variation: total,
        allocations,
        residual_percent: S::hundred() - explained.value(),
    })
}
