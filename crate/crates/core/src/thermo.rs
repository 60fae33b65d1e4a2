//! Entropy relative to the a priori measure, pressure, the variational
//! principle, and positive-recurrence sums.

use std::ops::RangeInclusive;

use crate::measure::CylinderMeasure;
use crate::model::{enumerate_words, SubshiftModel, Word};
use crate::potential::Potential;
use crate::transfer::{assemble_operator, eigendata, gibbs_cylinders, SpectralData};
use crate::{Error, Result, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Largest left-consistency defect accepted for a measure treated as
/// shift-invariant.
pub const INVARIANCE_TOL: f64 = 1e-9;

/// `h(mu) = -mu(normalized potential)` for the Gibbs state of `spec`.
pub fn entropy_of_gibbs(spec: &SpectralData, gibbs: &CylinderMeasure) -> Result<f64> {
    if !gibbs.is_invariant() {
        return Err(Error::NonInvariantTrial {
            deviation: f64::NAN,
        });
    }
    if gibbs.depth() < spec.depth() {
        return Err(Error::DepthTooSmall {
            required: spec.depth(),
            got: gibbs.depth(),
        });
    }
    Ok(-gibbs.integrate(spec.normalized_potential())?)
}

/// Entropy of an invariant measure from its deepest stored cylinders:
/// `-sum nu(w) log(nu(w) / nu(w_1..w_{D-1})) + sum nu(a) log p(a)`.
/// Exact for Markov measures of order at most `D - 1`.
pub fn markov_entropy(model: &SubshiftModel, nu: &CylinderMeasure) -> Result<f64> {
    let d = nu.depth();
    if d < 2 {
        return Err(Error::DepthTooSmall { required: 2, got: d });
    }
    let mut h = 0.0;
    for (w, m) in nu.level(d) {
        if m > 0.0 {
            h -= m * (m / nu.mass(&w.prefix(d - 1))).ln();
        }
    }
    h += nu.integrate_first_symbol(|a| model.apriori().weight(a).ln());
    Ok(h)
}

/// `min_u mu(log L_0 u - log u)` over positive candidates `u` given on the
/// admissible words of length `state_len`. Each term bounds `h(mu)` from above.
pub fn entropy_upper_bound_scan(
    model: &SubshiftModel,
    mu: &CylinderMeasure,
    state_len: usize,
    candidates: &[Vec<f64>],
) -> Result<f64> {
    if mu.depth() < state_len {
        return Err(Error::DepthTooSmall {
            required: state_len,
            got: mu.depth(),
        });
    }
    let zero = Potential::zero(model, state_len + 1)?;
    let op = assemble_operator(model, &zero)?;
    let weights: Vec<f64> = op.states().iter().map(|s| mu.mass(s)).collect();
    let mut best = f64::INFINITY;
    for u in candidates {
        if u.len() != op.len() || u.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::NonPositiveCandidate);
        }
        let lu = op.apply(u);
        let value: f64 = weights
            .iter()
            .zip(lu.iter().zip(u))
            .map(|(m, (l, x))| if *m > 0.0 { m * (l.ln() - x.ln()) } else { 0.0 })
            .sum();
        best = best.min(value);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialAudit {
    pub entropy: f64,
    pub energy: f64,
    /// `log lambda - h(nu) - nu(phi)`, nonnegative up to rounding.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoReport {
    /// `h(mu_phi) = -mu_phi(normalized potential)`.
    pub entropy: f64,
    /// `log lambda_phi`.
    pub pressure: f64,
    /// `mu_phi(phi)`.
    pub energy: f64,
    /// `pressure - entropy - energy`.
    pub variational_slack: f64,
    /// Markov closed form evaluated on the Gibbs state, for cross-checking.
    pub gibbs_markov_entropy: f64,
    pub trials: Vec<TrialAudit>,
    pub recurrence_band: Option<(f64, f64)>,
}

impl ThermoReport {
    /// Largest `h(nu) + nu(phi) - log lambda` over the trials.
    pub fn max_trial_excess(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| -t.slack)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Most negative trial entropy.
    pub fn min_trial_entropy(&self) -> Option<f64> {
        self.trials.iter().map(|t| t.entropy).reduce(f64::min)
    }
}

/// Compare `h(nu) + nu(phi)` against `log lambda_phi` for the Gibbs state and
/// every trial measure.
pub fn variational_audit(
    model: &SubshiftModel,
    phi: &Potential,
    spec: &SpectralData,
    trials: &[CylinderMeasure],
) -> Result<ThermoReport> {
    let k = spec.depth();
    let g = phi.lift(model, k)?;
    let gibbs = gibbs_cylinders(model, phi, spec, k)?;
    let entropy = entropy_of_gibbs(spec, &gibbs)?;
    let energy = gibbs.integrate(&g)?;
    let pressure = spec.log_lambda();
    let gibbs_markov_entropy = markov_entropy(model, &gibbs)?;

    let mut audits = Vec::with_capacity(trials.len());
    for nu in trials {
        let deviation = nu.left_consistency_deviation(model);
        if !nu.is_invariant() || deviation > INVARIANCE_TOL {
            return Err(Error::NonInvariantTrial { deviation });
        }
        if nu.depth() < k {
            return Err(Error::DepthTooSmall {
                required: k,
                got: nu.depth(),
            });
        }
        let h = markov_entropy(model, nu)?;
        let e = nu.integrate(&g)?;
        audits.push(TrialAudit {
            entropy: h,
            energy: e,
            slack: pressure - h - e,
        });
    }
    Ok(ThermoReport {
        entropy,
        pressure,
        energy,
        variational_slack: pressure - entropy - energy,
        gibbs_markov_entropy,
        trials: audits,
        recurrence_band: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceReport {
    pub symbol: usize,
    pub lambda: f64,
    /// `(n, Z_n(phi, a) / lambda^n)` for every `n` in the requested range.
    pub values: Vec<(usize, f64)>,
    /// First `n` from which every value in the range is positive.
    pub start: usize,
    /// `(min, max)` of the values from `start` on.
    pub band: (f64, f64),
}

impl RecurrenceReport {
    pub fn spread(&self) -> f64 {
        self.band.1 / self.band.0
    }
}

/// `Z_n(phi, a) / lambda^n` where `Z_n` is the `(a, a)` entry of `T^n`,
/// `T[a][b] = p(a) exp(g(a, b)) 1[a -> b]`.
pub fn recurrence_sums(
    model: &SubshiftModel,
    phi: &Potential,
    a: usize,
    n_range: RangeInclusive<usize>,
) -> Result<RecurrenceReport> {
    if !model.is_aperiodic() {
        return Err(Error::PeriodicModel {
            period: model.period(),
        });
    }
    if phi.depth() > 2 {
        return Err(Error::Unsupported(
            "recurrence sums need a potential of depth at most 2".into(),
        ));
    }
    if a >= model.size() {
        return Err(Error::UnknownSymbol(a.to_string()));
    }
    let g = phi.lift(model, 2)?;
    let lambda = eigendata(model, &g, DEFAULT_TOL, DEFAULT_MAX_ITER)?.lambda();
    let n = model.size();
    let weight = |x: usize, y: usize| {
        if model.allows(x, y) {
            model.apriori().weight(x) * g.value(&Word(vec![x, y])).exp() / lambda
        } else {
            0.0
        }
    };
    // column a of (T / lambda)^n
    let mut col = vec![0.0; n];
    col[a] = 1.0;
    let (lo_n, hi_n) = (*n_range.start(), *n_range.end());
    let mut values = Vec::new();
    for step in 1..=hi_n {
        col = (0..n)
            .map(|x| (0..n).map(|y| weight(x, y) * col[y]).sum())
            .collect();
        if step >= lo_n {
            values.push((step, col[a]));
        }
    }
    let start_idx = values
        .iter()
        .rposition(|&(_, v)| v <= 0.0)
        .map_or(0, |i| i + 1);
    let tail = &values[start_idx..];
    if tail.is_empty() {
        return Err(Error::Unsupported(format!(
            "no returns to symbol {a} in the requested range"
        )));
    }
    let band = tail.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &(_, v)| {
        (lo.min(v), hi.max(v))
    });
    Ok(RecurrenceReport {
        symbol: a,
        lambda,
        values: values.clone(),
        start: tail[0].0,
        band,
    })
}

/// All admissible words of length `len` closing up into a periodic orbit.
pub fn periodic_words(model: &SubshiftModel, len: usize) -> Result<Vec<Word>> {
    Ok(enumerate_words(model, len)?
        .into_iter()
        .filter(|w| model.allows(w.last(), w.first()))
        .collect())
}
