//! Countable Markov shifts on `{b_1, b_2, ...}` whose predecessor columns are
//! all equal from some index `j0` on.
//!
//! Two finite reductions are offered: exact lumping of the tail symbols into
//! one super-symbol `b_inf` carrying the summed a-priori weight, and finite
//! sections on `{b_1 .. b_K}`. Symbol numbers in this module are 1-based, as
//! in `b_k`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::model::{build_model, Alphabet, AprioriMeasure, SubshiftModel};
use crate::potential::Potential;
use crate::transfer::{assemble_operator, eigendata, SpectralData};
use crate::{Error, Result};

/// Predecessor set of a column: which `b_i` may precede it.
#[derive(Debug, Clone, PartialEq)]
pub enum PredSet {
    All,
    Only(Vec<usize>),
    AllExcept(Vec<usize>),
}

impl PredSet {
    pub fn contains(&self, i: usize) -> bool {
        match self {
            PredSet::All => true,
            PredSet::Only(v) => v.contains(&i),
            PredSet::AllExcept(v) => !v.contains(&i),
        }
    }

    fn max_listed(&self) -> usize {
        match self {
            PredSet::All => 0,
            PredSet::Only(v) | PredSet::AllExcept(v) => v.iter().copied().max().unwrap_or(0),
        }
    }
}

/// `p(b_k) = (1 - r) r^(k - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricWeights {
    pub ratio: f64,
}

impl GeometricWeights {
    pub fn weight(&self, k: usize) -> f64 {
        (1.0 - self.ratio) * self.ratio.powi(k as i32 - 1)
    }

    /// `sum_{k >= from} p(b_k) = r^(from - 1)`.
    pub fn tail_sum(&self, from: usize) -> f64 {
        self.ratio.powi(from as i32 - 1)
    }
}

impl Default for GeometricWeights {
    fn default() -> Self {
        Self { ratio: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailMatrixSpec {
    j0: usize,
    head_columns: Vec<PredSet>,
    tail_column: PredSet,
    weights: GeometricWeights,
}

impl TailMatrixSpec {
    /// `head_columns` lists the predecessor sets of `b_1 .. b_{j0-1}`.
    pub fn new(head_columns: Vec<PredSet>, tail_column: PredSet, weights: GeometricWeights) -> Result<Self> {
        if !(weights.ratio > 0.0 && weights.ratio < 1.0) {
            return Err(Error::NonPositiveWeight {
                symbol: "geometric ratio".into(),
                weight: weights.ratio,
            });
        }
        let sets = head_columns.iter().chain(std::iter::once(&tail_column));
        for s in sets {
            if let PredSet::Only(v) | PredSet::AllExcept(v) = s {
                if v.contains(&0) {
                    return Err(Error::UnknownSymbol("b_0".into()));
                }
            }
        }
        Ok(Self {
            j0: head_columns.len() + 1,
            head_columns,
            tail_column,
            weights,
        })
    }

    /// Every `b_j` is preceded by `b_1` only, `b_1` by everything.
    pub fn star(weights: GeometricWeights) -> Self {
        Self::new(vec![PredSet::All], PredSet::Only(vec![1]), weights).unwrap()
    }

    /// Every transition allowed.
    pub fn full(weights: GeometricWeights) -> Self {
        Self::new(Vec::new(), PredSet::All, weights).unwrap()
    }

    pub fn j0(&self) -> usize {
        self.j0
    }

    pub fn weights(&self) -> GeometricWeights {
        self.weights
    }

    pub fn column(&self, j: usize) -> &PredSet {
        if j < self.j0 {
            &self.head_columns[j - 1]
        } else {
            &self.tail_column
        }
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.column(j).contains(i)
    }

    /// `b_k = 1 - 2^-k`; `b_inf = 1`.
    pub fn coord(k: usize) -> f64 {
        1.0 - 0.5f64.powi(k as i32)
    }

    /// First index from which rows are identical: rows of `b_i` differ only
    /// through explicitly listed symbols.
    fn row_level(&self) -> usize {
        self.head_columns
            .iter()
            .chain(std::iter::once(&self.tail_column))
            .map(PredSet::max_listed)
            .max()
            .unwrap_or(0)
            + 1
    }

    /// `|sum_{k < J} p(b_k) + tail_sum(J) - 1|` for the given split point.
    pub fn weight_sum_error(&self, split: usize) -> f64 {
        let head: f64 = (1..split).map(|k| self.weights.weight(k)).sum();
        (head + self.weights.tail_sum(split) - 1.0).abs()
    }
}

/// Potential rules on the countable alphabet. Head tables index symbols
/// `b_1 .. b_h`; every later symbol takes the tail value.
#[derive(Debug, Clone, PartialEq)]
pub enum CmsPotential {
    Zero,
    Constant(f64),
    Depth1 {
        head: Vec<f64>,
        tail: f64,
    },
    /// `(h + 1) x (h + 1)` table; index `h` is the tail class.
    Depth2 {
        table: Vec<Vec<f64>>,
    },
    /// `beta * coord(x_1)`; not constant along the tail.
    FirstCoord(f64),
}

impl CmsPotential {
    fn head_len(&self) -> Result<Option<usize>> {
        match self {
            CmsPotential::Zero | CmsPotential::Constant(_) => Ok(Some(0)),
            CmsPotential::Depth1 { head, .. } => Ok(Some(head.len())),
            CmsPotential::Depth2 { table } => {
                let h = table.len().checked_sub(1).ok_or(Error::LengthZero)?;
                if table.iter().any(|r| r.len() != h + 1) {
                    return Err(Error::DimensionMismatch {
                        rows: table.len(),
                        cols: table.iter().map(Vec::len).max().unwrap_or(0),
                        expected: h + 1,
                    });
                }
                Ok(Some(h))
            }
            CmsPotential::FirstCoord(_) => Ok(None),
        }
    }

    fn depth(&self) -> usize {
        match self {
            CmsPotential::Depth2 { .. } => 2,
            _ => 1,
        }
    }

    /// Value on a word of original symbol numbers; `None` stands for `b_inf`.
    fn value(&self, word: &[Option<usize>]) -> f64 {
        let class = |s: Option<usize>, h: usize| s.map_or(h, |k| (k - 1).min(h));
        match self {
            CmsPotential::Zero => 0.0,
            CmsPotential::Constant(c) => *c,
            CmsPotential::Depth1 { head, tail } => {
                let i = class(word[0], head.len());
                head.get(i).copied().unwrap_or(*tail)
            }
            CmsPotential::Depth2 { table } => {
                let h = table.len() - 1;
                table[class(word[0], h)][class(word[1], h)]
            }
            CmsPotential::FirstCoord(beta) => {
                beta * word[0].map_or(1.0, TailMatrixSpec::coord)
            }
        }
    }

    fn label(&self) -> String {
        match self {
            CmsPotential::Zero => "zero".into(),
            CmsPotential::Constant(c) => format!("constant {c}"),
            CmsPotential::Depth1 { .. } => "depth-1 head/tail table".into(),
            CmsPotential::Depth2 { .. } => "depth-2 class table".into(),
            CmsPotential::FirstCoord(beta) => format!("{beta} * coord(x1)"),
        }
    }
}

/// A finite reduction: the model, the potential on it, and the original
/// symbol behind each finite symbol (`None` for `b_inf`).
#[derive(Debug, Clone)]
pub struct Reduction {
    pub model: SubshiftModel,
    pub potential: Potential,
    pub symbols: Vec<Option<usize>>,
}

fn potential_on(
    model: &SubshiftModel,
    symbols: &[Option<usize>],
    rule: &CmsPotential,
) -> Result<Potential> {
    Potential::from_fn(model, rule.depth(), rule.label(), |w| {
        let orig: Vec<Option<usize>> = w.0.iter().map(|&s| symbols[s]).collect();
        rule.value(&orig)
    })
}

/// Lump `b_J, b_{J+1}, ...` into `b_inf` where `J` is the first index past
/// which columns, rows and the potential no longer change.
pub fn compactify(spec: &TailMatrixSpec, rule: &CmsPotential) -> Result<Reduction> {
    let h = rule.head_len()?.ok_or_else(|| {
        Error::NonAggregableTail(format!(
            "potential '{}' is not constant along the tail; use the truncate-sweep method",
            rule.label()
        ))
    })?;
    let split = spec.j0.max(spec.row_level()).max(h + 1);
    let mut symbols: Vec<Option<usize>> = (1..split).map(Some).collect();
    symbols.push(None);
    let rep = |s: Option<usize>| s.unwrap_or(split);
    let n = symbols.len();
    let matrix: Vec<Vec<bool>> = (0..n)
        .map(|a| (0..n).map(|b| spec.allows(rep(symbols[a]), rep(symbols[b]))).collect())
        .collect();
    let mut weights: Vec<f64> = (1..split).map(|k| spec.weights.weight(k)).collect();
    weights.push(spec.weights.tail_sum(split));
    let names = symbols
        .iter()
        .map(|s| s.map_or("b_inf".to_string(), |k| format!("b{k}")))
        .collect();
    let coords = symbols
        .iter()
        .map(|s| s.map_or(1.0, TailMatrixSpec::coord))
        .collect();
    let model = build_model(
        Alphabet::new(names, coords)?,
        matrix,
        AprioriMeasure::new(weights),
    )?;
    let potential = potential_on(&model, &symbols, rule)?;
    Ok(Reduction {
        model,
        potential,
        symbols,
    })
}

/// Finite section on `b_1 .. b_K`. Weights are kept as they are unless
/// `renormalize` is set.
pub fn truncate(
    spec: &TailMatrixSpec,
    level: usize,
    rule: &CmsPotential,
    renormalize: bool,
) -> Result<Reduction> {
    if level < spec.j0 {
        return Err(Error::SectionNotIrreducible {
            level,
            reason: format!("level is below the column threshold j0 = {}", spec.j0),
        });
    }
    let symbols: Vec<Option<usize>> = (1..=level).map(Some).collect();
    let matrix: Vec<Vec<bool>> = (1..=level)
        .map(|i| (1..=level).map(|j| spec.allows(i, j)).collect())
        .collect();
    let mut weights: Vec<f64> = (1..=level).map(|k| spec.weights.weight(k)).collect();
    if renormalize {
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
    }
    let names = (1..=level).map(|k| format!("b{k}")).collect();
    let coords = (1..=level).map(TailMatrixSpec::coord).collect();
    let model = build_model(
        Alphabet::new(names, coords)?,
        matrix,
        AprioriMeasure::new(weights),
    )
    .map_err(|e| match e {
        Error::NotIrreducible | Error::EmptyRowOrColumn { .. } => Error::SectionNotIrreducible {
            level,
            reason: e.to_string(),
        },
        other => other,
    })?;
    let potential = potential_on(&model, &symbols, rule)?;
    Ok(Reduction {
        model,
        potential,
        symbols,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub levels: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub aggregated_lambda: Option<f64>,
    /// `|lambda_K - lambda_agg|`, empty without an aggregated value.
    pub deviations: Vec<f64>,
    pub strictly_decreasing: bool,
    pub renormalized: bool,
}

/// Generalized operator with weights `p` against the classical operator
/// (`p = 1`) with potential `phi + log p(x_1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacyCheck {
    pub matrix_deviation: f64,
    pub lambda_deviation: f64,
    /// Sup distance of the eigenfunctions after scaling both to sup norm 1.
    pub eigenfunction_deviation: f64,
}

pub fn conjugacy_check(
    model: &SubshiftModel,
    phi: &Potential,
    tol: f64,
    max_iter: usize,
) -> Result<ConjugacyCheck> {
    let classical_model = model.with_apriori(AprioriMeasure::ones(model.size()))?;
    let p = model.apriori().weights().to_vec();
    let log_p = Potential::from_fn(model, 1, "log p(x1)", |w| p[w.first()].ln())?;
    let classical = phi.add(model, &log_p)?;
    let a = assemble_operator(model, phi)?;
    let b = assemble_operator(&classical_model, &classical)?;
    let sa = eigendata(model, phi, tol, max_iter)?;
    let sb = eigendata(&classical_model, &classical, tol, max_iter)?;
    let unit = |v: &[f64]| {
        let m = v.iter().copied().fold(0.0, f64::max);
        v.iter().map(|x| x / m).collect::<Vec<_>>()
    };
    let (fa, fb) = (unit(sa.eigenfunction()), unit(sb.eigenfunction()));
    Ok(ConjugacyCheck {
        matrix_deviation: a.entries().max_abs_diff(b.entries()),
        lambda_deviation: (sa.lambda() - sb.lambda()).abs(),
        eigenfunction_deviation: fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmsMethod {
    Aggregate,
    TruncateSweep,
}

#[derive(Debug, Clone)]
pub struct CmsResult {
    /// The reduction whose eigendata is reported: the lumped model for
    /// `Aggregate`, the largest section for `TruncateSweep`.
    pub reduction: Reduction,
    pub spectral: SpectralData,
    pub report: TruncationReport,
    pub conjugacy: ConjugacyCheck,
}

pub const DEFAULT_LEVELS: [usize; 6] = [3, 5, 8, 13, 21, 34];

pub fn cms_eigendata(
    spec: &TailMatrixSpec,
    rule: &CmsPotential,
    method: CmsMethod,
    levels: &[usize],
    renormalize: bool,
    tol: f64,
    max_iter: usize,
) -> Result<CmsResult> {
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Unsupported("truncation levels must be increasing".into()));
    }
    let aggregated = match compactify(spec, rule) {
        Ok(r) => {
            let s = eigendata(&r.model, &r.potential, tol, max_iter)?;
            Some((r, s))
        }
        Err(e @ Error::NonAggregableTail(_)) if method == CmsMethod::Aggregate => return Err(e),
        Err(Error::NonAggregableTail(_)) => None,
        Err(e) => return Err(e),
    };
    let sections: Vec<Result<(Reduction, SpectralData)>> = levels
        .par_iter()
        .map(|&k| {
            let r = truncate(spec, k, rule, renormalize)?;
            let s = eigendata(&r.model, &r.potential, tol, max_iter)?;
            Ok((r, s))
        })
        .collect();
    let sections: Vec<(Reduction, SpectralData)> = sections.into_iter().collect::<Result<_>>()?;
    let lambdas: Vec<f64> = sections.iter().map(|(_, s)| s.lambda()).collect();
    let aggregated_lambda = aggregated.as_ref().map(|(_, s)| s.lambda());
    let deviations: Vec<f64> = match aggregated_lambda {
        Some(l) => lambdas.iter().map(|x| (x - l).abs()).collect(),
        None => Vec::new(),
    };
    let strictly_decreasing = if deviations.is_empty() {
        lambdas.windows(2).all(|w| (w[1] - w[0]).abs() > 0.0)
            && lambdas
                .windows(3)
                .all(|w| (w[2] - w[1]).abs() < (w[1] - w[0]).abs())
    } else {
        deviations.windows(2).all(|w| w[1] < w[0])
    };
    let report = TruncationReport {
        levels: levels.to_vec(),
        lambdas,
        aggregated_lambda,
        deviations,
        strictly_decreasing,
        renormalized: renormalize,
    };
    let (reduction, spectral) = match (method, aggregated) {
        (CmsMethod::Aggregate, Some(a)) => a,
        _ => sections.into_iter().last().unwrap(),
    };
    let conjugacy = conjugacy_check(&reduction.model, &reduction.potential, tol, max_iter)?;
    Ok(CmsResult {
        reduction,
        spectral,
        report,
        conjugacy,
    })
}

/// Original symbol names of the words of a reduction, for reports.
pub fn symbol_table(red: &Reduction) -> BTreeMap<String, String> {
    red.symbols
        .iter()
        .enumerate()
        .map(|(i, s)| {
            (
                red.model.alphabet().symbols()[i].clone(),
                s.map_or("b_J, b_J+1, ...".to_string(), |k| format!("b_{k}")),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{DEFAULT_MAX_ITER, DEFAULT_TOL};

    fn star_lambda(p1: f64) -> f64 {
        // lambda^2 - p1 lambda - p1 (1 - p1) = 0
        (p1 + (p1 * p1 + 4.0 * p1 * (1.0 - p1)).sqrt()) / 2.0
    }

    #[test]
    fn star_shift_lumps_to_two_states() {
        let spec = TailMatrixSpec::star(GeometricWeights::default());
        let r = compactify(&spec, &CmsPotential::Zero).unwrap();
        assert_eq!(r.symbols, vec![Some(1), None]);
        assert_eq!(r.model.apriori().weights(), &[0.5, 0.5]);
        let s = eigendata(&r.model, &r.potential, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((s.lambda() - (1.0 + 5f64.sqrt()) / 4.0).abs() < 1e-12);
        let f = s.eigenfunction();
        assert!((f[0] / f[1] - s.lambda() / 0.5).abs() < 1e-10);
    }

    #[test]
    fn star_shift_other_ratio() {
        let spec = TailMatrixSpec::star(GeometricWeights { ratio: 1.0 / 3.0 });
        let r = compactify(&spec, &CmsPotential::Zero).unwrap();
        let s = eigendata(&r.model, &r.potential, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((s.lambda() - star_lambda(2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn full_countable_shift_is_stochastic() {
        let spec = TailMatrixSpec::full(GeometricWeights { ratio: 0.3 });
        let r = compactify(&spec, &CmsPotential::Zero).unwrap();
        assert_eq!(r.model.size(), 1);
        let s = eigendata(&r.model, &r.potential, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((s.lambda() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_sweep_converges() {
        let spec = TailMatrixSpec::star(GeometricWeights::default());
        let res = cms_eigendata(
            &spec,
            &CmsPotential::Zero,
            CmsMethod::Aggregate,
            &DEFAULT_LEVELS,
            false,
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )
        .unwrap();
        let rep = &res.report;
        assert!(rep.strictly_decreasing, "{:?}", rep.deviations);
        assert!(rep.deviations[1] < 0.02);
        assert!(*rep.deviations.last().unwrap() <= 1e-8);
        assert!(rep.lambdas.windows(2).all(|w| w[1] > w[0]));
        assert!(res.conjugacy.matrix_deviation <= 1e-12);
        assert!(res.conjugacy.lambda_deviation <= 1e-12);
    }

    #[test]
    fn weight_rule_sums_to_one() {
        let spec = TailMatrixSpec::star(GeometricWeights { ratio: 0.7 });
        for split in 1..40 {
            assert!(spec.weight_sum_error(split) < 1e-12);
        }
    }

    #[test]
    fn non_aggregable_rule() {
        let spec = TailMatrixSpec::star(GeometricWeights::default());
        let rule = CmsPotential::FirstCoord(1.0);
        assert!(matches!(
            compactify(&spec, &rule),
            Err(Error::NonAggregableTail(_))
        ));
        let res = cms_eigendata(
            &spec,
            &rule,
            CmsMethod::TruncateSweep,
            &[4, 8, 16],
            false,
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )
        .unwrap();
        assert!(res.report.aggregated_lambda.is_none());
        assert_eq!(res.reduction.model.size(), 16);
    }

    #[test]
    fn section_below_head() {
        // b_1 and b_2 are only reachable from b_3
        let spec = TailMatrixSpec::new(
            vec![PredSet::Only(vec![3]), PredSet::Only(vec![3])],
            PredSet::All,
            GeometricWeights::default(),
        )
        .unwrap();
        assert!(matches!(
            truncate(&spec, 2, &CmsPotential::Zero, false),
            Err(Error::SectionNotIrreducible { .. })
        ));
        assert!(truncate(&spec, 3, &CmsPotential::Zero, false).is_ok());
        let r = compactify(&spec, &CmsPotential::Zero).unwrap();
        assert_eq!(r.symbols, vec![Some(1), Some(2), Some(3), None]);
    }

    #[test]
    fn depth2_table_lumps() {
        let spec = TailMatrixSpec::star(GeometricWeights::default());
        let rule = CmsPotential::Depth2 {
            table: vec![vec![0.1, 0.4], vec![-0.2, 0.0]],
        };
        let r = compactify(&spec, &rule).unwrap();
        let agg = eigendata(&r.model, &r.potential, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let t = truncate(&spec, 40, &rule, false).unwrap();
        let fin = eigendata(&t.model, &t.potential, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((agg.lambda() - fin.lambda()).abs() < 1e-10);
    }
}
