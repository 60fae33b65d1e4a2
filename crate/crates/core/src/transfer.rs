//! The generalized Ruelle operator for a locally constant potential and its
//! maximal eigendata.
//!
//! For a potential `g` of depth `k >= 2` the operator
//!
//! ```text
//! (L psi)(x) = sum_{a in s(x_1)} p(a) exp(g(a x_1 .. x_{k-1})) psi(a x_1 .. x_{k-2})
//! ```
//!
//! maps functions of the leading `k - 1` symbols to functions of the leading
//! `k - 1` symbols, so it is an exact square matrix over the admissible
//! `(k - 1)`-words ("states"). Row `u`, column `v` holds the weight with which
//! the prepended state `v = a u_1 .. u_{k-2}` contributes to `(L psi)(u)`.
//! Depth-1 potentials are lifted to depth 2.

use std::collections::BTreeMap;

use crate::linalg::{dot, log_sum_exp, sup_norm, DenseMatrix};
use crate::measure::CylinderMeasure;
use crate::model::{enumerate_words, SubshiftModel, Word};
use crate::potential::Potential;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct TransferMatrix {
    model: SubshiftModel,
    potential: Potential,
    states: Vec<Word>,
    index: BTreeMap<Word, usize>,
    entries: DenseMatrix,
}

/// Assemble the operator matrix for `phi` on `model`.
pub fn assemble_operator(model: &SubshiftModel, phi: &Potential) -> Result<TransferMatrix> {
    phi.check_against(model)?;
    let potential = phi.lift(model, phi.depth().max(2))?;
    let k = potential.depth();
    let states = enumerate_words(model, k - 1)?;
    let index: BTreeMap<Word, usize> = states
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    let n = states.len();
    let mut entries = DenseMatrix::zeros(n, n);
    for (u, state) in states.iter().enumerate() {
        for &a in model.admissibility().section(state.first()) {
            let word = state.prepend(a);
            let weight = model.apriori().weight(a) * potential.value(&word).exp();
            if !weight.is_finite() {
                return Err(Error::NumericalOverflow(format!(
                    "exp of potential value {} on {}",
                    potential.value(&word),
                    model.format_word(&word)
                )));
            }
            entries[(u, index[&word.prefix(k - 1)])] = weight;
        }
    }
    Ok(TransferMatrix {
        model: model.clone(),
        potential,
        states,
        index,
        entries,
    })
}

impl TransferMatrix {
    pub fn model(&self) -> &SubshiftModel {
        &self.model
    }

    /// The (lifted) potential the matrix was built from; depth is at least 2.
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn depth(&self) -> usize {
        self.potential.depth()
    }

    pub fn states(&self) -> &[Word] {
        &self.states
    }

    pub fn state_index(&self, state: &Word) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn entries(&self) -> &DenseMatrix {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `L psi` for `psi` given on states.
    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        self.entries.mul_vec(psi)
    }

    /// Cyclic class of each state (the class of its first symbol).
    pub fn state_classes(&self) -> Vec<usize> {
        self.states
            .iter()
            .map(|s| self.model.class_of(s.first()))
            .collect()
    }
}

/// `|lambda_2| / lambda_1`, or a marker that the model is periodic and the
/// peripheral spectrum has more than one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapRatio {
    Ratio(f64),
    Periodic,
}

impl GapRatio {
    pub fn ratio(&self) -> Option<f64> {
        match self {
            GapRatio::Ratio(r) => Some(*r),
            GapRatio::Periodic => None,
        }
    }
}

/// Maximal eigendata of an operator: `L f = lambda f`, `rho L = lambda rho`,
/// `sum rho = 1`, `rho(f) = 1`, together with the normalized potential.
#[derive(Debug, Clone)]
pub struct SpectralData {
    lambda: f64,
    depth: usize,
    period: usize,
    states: Vec<Word>,
    eigenfunction: Vec<f64>,
    eigenmeasure_base: Vec<f64>,
    normalized_potential: Potential,
    gap_ratio: GapRatio,
    residual: f64,
    adjoint_residual: f64,
    normalization_residual: f64,
    iterations: usize,
}

impl SpectralData {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn log_lambda(&self) -> f64 {
        self.lambda.ln()
    }

    /// Depth of the (lifted) potential; states have `depth - 1` symbols.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn states(&self) -> &[Word] {
        &self.states
    }

    pub fn eigenfunction(&self) -> &[f64] {
        &self.eigenfunction
    }

    pub fn eigenmeasure_base(&self) -> &[f64] {
        &self.eigenmeasure_base
    }

    /// `f * rho` on states: the Gibbs state on `(depth - 1)`-cylinders.
    pub fn gibbs_base(&self) -> Vec<f64> {
        self.eigenfunction
            .iter()
            .zip(&self.eigenmeasure_base)
            .map(|(f, r)| f * r)
            .collect()
    }

    pub fn normalized_potential(&self) -> &Potential {
        &self.normalized_potential
    }

    pub fn gap_ratio(&self) -> GapRatio {
        self.gap_ratio
    }

    /// `||L f - lambda f||_inf / ||f||_inf`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `||rho L - lambda rho||_inf / ||rho||_inf`.
    pub fn adjoint_residual(&self) -> f64 {
        self.adjoint_residual
    }

    /// `||L_{normalized}(1) - 1||_inf`.
    pub fn normalization_residual(&self) -> f64 {
        self.normalization_residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn state_value(&self, state: &Word) -> Option<(f64, f64)> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| (self.eigenfunction[i], self.eigenmeasure_base[i]))
    }
}

struct Perron {
    value: f64,
    vector: Vec<f64>,
    iterations: usize,
}

/// Shifted power iteration `f <- (M + s I) f` with `s` the current
/// Collatz-Wielandt lower bound. The shift keeps the Perron vector and damps
/// eigenvalues near `-lambda`, which appear at low temperature. Stops when the
/// bracket `[min (Mf)_i/f_i, max (Mf)_i/f_i]` has relative width below `tol`,
/// then polishes while the bracket keeps shrinking.
fn perron(m: &DenseMatrix, start: &[f64], tol: f64, max_iter: usize) -> Result<Perron> {
    if start.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::NonPositiveCandidate);
    }
    let mut f: Vec<f64> = start.to_vec();
    let scale = sup_norm(&f);
    f.iter_mut().for_each(|x| *x /= scale);

    let bracket = |f: &[f64]| {
        let g = m.mul_vec(f);
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (gi, fi) in g.iter().zip(f) {
            let r = gi / fi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (g, lo, hi)
    };
    let step = |f: &mut Vec<f64>, g: Vec<f64>, lo: f64, hi: f64| {
        let shift = if lo > 0.0 { lo } else { 0.5 * hi };
        let mut next: Vec<f64> = g.iter().zip(f.iter()).map(|(a, b)| a + shift * b).collect();
        let s = sup_norm(&next);
        next.iter_mut().for_each(|x| *x /= s);
        *f = next;
    };

    let mut width = f64::INFINITY;
    for it in 0..max_iter {
        let (g, lo, hi) = bracket(&f);
        if !(hi.is_finite() && lo.is_finite()) || hi == 0.0 {
            return Err(Error::NumericalOverflow("power iteration diverged".into()));
        }
        width = (hi - lo) / hi;
        if width <= tol {
            let mut best = (f.clone(), lo, hi);
            let (mut g, mut lo, mut hi) = (g, lo, hi);
            for _ in 0..64 {
                step(&mut f, g, lo, hi);
                let next = bracket(&f);
                if next.2 - next.1 >= best.2 - best.1 {
                    break;
                }
                best = (f.clone(), next.1, next.2);
                (g, lo, hi) = next;
            }
            let (vector, lo, hi) = best;
            return Ok(Perron {
                value: 0.5 * (lo + hi),
                vector,
                iterations: it + 1,
            });
        }
        step(&mut f, g, lo, hi);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: width,
    })
}

/// Perron data of an irreducible matrix with cyclic state classes. For
/// `period > 1` the iteration runs on the diagonal block of `M^period` for
/// class 0; the eigenvalue is its positive `period`-th root and the vector is
/// propagated to the other classes by `M / lambda`.
fn perron_cyclic(
    m: &DenseMatrix,
    classes: &[usize],
    period: usize,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Perron> {
    if period == 1 {
        return perron(m, start, tol, max_iter);
    }
    let block: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == 0).collect();
    let mq = m.pow(period as u32).submatrix(&block);
    if (0..block.len()).any(|i| mq.row(i).iter().all(|&x| x == 0.0)) {
        return Err(Error::NonPrimitiveBlock);
    }
    let block_start: Vec<f64> = block.iter().map(|&i| start[i]).collect();
    let inner = perron(&mq, &block_start, tol, max_iter)?;
    let lambda = inner.value.powf(1.0 / period as f64);
    let mut cur = vec![0.0; classes.len()];
    for (&i, &x) in block.iter().zip(&inner.vector) {
        cur[i] = x;
    }
    let mut acc = cur.clone();
    for _ in 1..period {
        cur = m.mul_vec(&cur).into_iter().map(|x| x / lambda).collect();
        for (a, c) in acc.iter_mut().zip(&cur) {
            *a += c;
        }
    }
    if acc.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::NonPrimitiveBlock);
    }
    Ok(Perron {
        value: lambda,
        vector: acc,
        iterations: inner.iterations,
    })
}

/// Maximal eigendata by power iteration from the constant start vector.
pub fn power_iterate(op: &TransferMatrix, tol: f64, max_iter: usize) -> Result<SpectralData> {
    power_iterate_from(op, &vec![1.0; op.len()], tol, max_iter)
}

/// Maximal eigendata by power iteration from a given positive start vector
/// for the eigenfunction.
pub fn power_iterate_from(
    op: &TransferMatrix,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SpectralData> {
    let m = op.entries();
    let classes = op.state_classes();
    let period = op.model().period();
    let right = perron_cyclic(m, &classes, period, start, tol, max_iter)?;
    let adjoint = m.transpose();
    let left = perron_cyclic(&adjoint, &classes, period, &vec![1.0; op.len()], tol, max_iter)?;
    let lambda = right.value;

    let mut rho = left.vector;
    let total: f64 = rho.iter().sum();
    rho.iter_mut().for_each(|x| *x /= total);
    let mut f = right.vector;
    let pairing = dot(&rho, &f);
    f.iter_mut().for_each(|x| *x /= pairing);

    let lf = m.mul_vec(&f);
    let residual = lf
        .iter()
        .zip(&f)
        .map(|(a, b)| (a - lambda * b).abs())
        .fold(0.0, f64::max)
        / sup_norm(&f);
    let rl = m.vec_mul(&rho);
    let adjoint_residual = rl
        .iter()
        .zip(&rho)
        .map(|(a, b)| (a - lambda * b).abs())
        .fold(0.0, f64::max)
        / sup_norm(&rho);

    let normalized_potential = normalize_potential(op, &f, lambda)?;
    let normalization_residual = {
        let nop = assemble_operator(op.model(), &normalized_potential)?;
        nop.apply(&vec![1.0; op.len()])
            .iter()
            .map(|x| (x - 1.0).abs())
            .fold(0.0, f64::max)
    };

    let mut spec = SpectralData {
        lambda,
        depth: op.depth(),
        period,
        states: op.states().to_vec(),
        eigenfunction: f,
        eigenmeasure_base: rho,
        normalized_potential,
        gap_ratio: GapRatio::Periodic,
        residual,
        adjoint_residual,
        normalization_residual,
        iterations: right.iterations.max(left.iterations),
    };
    if period == 1 {
        spec.gap_ratio = GapRatio::Ratio(spectral_gap_estimate(op, &spec)?);
    }
    Ok(spec)
}

/// `g + log f - log f o sigma - log lambda` on words of the operator depth.
fn normalize_potential(op: &TransferMatrix, f: &[f64], lambda: f64) -> Result<Potential> {
    let k = op.depth();
    let log_lambda = lambda.ln();
    let label = format!("normalized({})", op.potential().label());
    Potential::from_fn(op.model(), k, label, |w| {
        let head = op.state_index(&w.prefix(k - 1)).unwrap();
        let tail = op.state_index(&w.suffix_from(1)).unwrap();
        op.potential().value(w) + f[head].ln() - f[tail].ln() - log_lambda
    })
}

/// Solve the eigendata for `phi` directly.
pub fn eigendata(
    model: &SubshiftModel,
    phi: &Potential,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralData> {
    power_iterate(&assemble_operator(model, phi)?, tol, max_iter)
}

/// `|lambda_2| / lambda_1` by power iteration restricted to
/// `V = {psi : rho(psi) = 0}`, which `L` preserves. Each step re-projects onto
/// `V` along `f`; the growth rate is averaged over the second half of
/// doubling windows until two consecutive estimates agree.
pub fn spectral_gap_estimate(op: &TransferMatrix, spec: &SpectralData) -> Result<f64> {
    if op.model().period() > 1 {
        return Err(Error::PeriodicModel {
            period: op.model().period(),
        });
    }
    let n = op.len();
    let f = spec.eigenfunction();
    let rho = spec.eigenmeasure_base();
    let lambda = spec.lambda();
    let project = |v: &mut Vec<f64>| {
        let c = dot(rho, v);
        v.iter_mut().zip(f).for_each(|(x, fi)| *x -= c * fi);
    };
    // Deterministic, irregular start vector.
    let mut psi: Vec<f64> = (0..n)
        .map(|i| ((i as f64 + 1.0) * 0.754_877_666).fract() - 0.5 + 0.1 * (i % 3) as f64)
        .collect();
    project(&mut psi);
    let s = sup_norm(&psi);
    if s == 0.0 {
        return Ok(0.0);
    }
    psi.iter_mut().for_each(|x| *x /= s);

    const BUDGET: usize = 8192;
    let mut logs = Vec::with_capacity(BUDGET);
    let mut window = 32;
    let mut previous: Option<f64> = None;
    while logs.len() < BUDGET {
        let mut next = op.apply(&psi);
        next.iter_mut().for_each(|x| *x /= lambda);
        project(&mut next);
        let norm = sup_norm(&next);
        if !(norm > 1e-300) {
            return Ok(0.0);
        }
        logs.push(norm.ln());
        next.iter_mut().for_each(|x| *x /= norm);
        psi = next;
        if logs.len() == window {
            let half = &logs[window / 2..];
            let est = (half.iter().sum::<f64>() / half.len() as f64).exp();
            if let Some(prev) = previous {
                if (est - prev).abs() <= 1e-10 * est.max(1e-300) {
                    previous = Some(est);
                    break;
                }
            }
            previous = Some(est);
            window *= 2;
        }
    }
    let est = previous.unwrap_or(0.0);
    // Estimates within rounding of 1 only occur for nearly decoupled or nearly
    // periodic operators; report the largest value below 1.
    Ok(if est < 1.0 { est } else { 1.0 - f64::EPSILON })
}

/// `L^n psi`.
pub fn apply_iterate(op: &TransferMatrix, psi: &[f64], n: usize) -> Vec<f64> {
    let mut v = psi.to_vec();
    for _ in 0..n {
        v = op.apply(&v);
    }
    v
}

/// Outcome of iterating the normalized operator on a test function.
#[derive(Debug, Clone)]
pub struct UniformLimit {
    /// Smallest `n` with `||L^n psi - mu(psi)||_inf <= tol`.
    pub n_star: usize,
    /// `mu(psi)`.
    pub limit: f64,
    /// Sup-norm deviations for `n = 0 ..= n_star`.
    pub deviations: Vec<f64>,
    /// Steps where the deviation increased by more than rounding noise.
    pub warnings: Vec<String>,
}

/// Iterate `L_{normalized}` on `psi` until it is uniformly within `tol` of
/// `mu(psi)`. The normalized operator averages, so the deviation is
/// non-increasing; increases up to `1e-14` are treated as rounding and larger
/// ones are reported as warnings.
pub fn check_uniform_limit(
    model: &SubshiftModel,
    spec: &SpectralData,
    psi: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<UniformLimit> {
    if spec.period() > 1 {
        return Err(Error::PeriodicModel {
            period: spec.period(),
        });
    }
    let op = assemble_operator(model, spec.normalized_potential())?;
    let limit = dot(&spec.gibbs_base(), psi);
    let mut v = psi.to_vec();
    let mut deviations = Vec::new();
    let mut warnings = Vec::new();
    for n in 0..=max_iter {
        let dev = v.iter().map(|x| (x - limit).abs()).fold(0.0, f64::max);
        if let Some(&prev) = deviations.last() {
            if dev > prev + 1e-14 {
                warnings.push(format!("deviation increased at n={n}: {prev:e} -> {dev:e}"));
            }
        }
        deviations.push(dev);
        if dev <= tol {
            return Ok(UniformLimit {
                n_star: n,
                limit,
                deviations,
                warnings,
            });
        }
        v = op.apply(&v);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: *deviations.last().unwrap(),
    })
}

/// Fixed point of the contraction `u -> log L(exp(t u))`.
#[derive(Debug, Clone)]
pub struct ContractionFixedPoint {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Largest observed ratio of consecutive step sizes (at most `t`).
    pub max_step_ratio: f64,
}

/// Iterate `u -> log L_phi(exp(t u))` from `u = 0` until
/// `||T(u) - u||_inf <= tol`. Works in the log domain throughout.
pub fn contraction_solve(
    model: &SubshiftModel,
    phi: &Potential,
    t: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ContractionFixedPoint> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Unsupported(format!("contraction parameter {t} not in (0, 1)")));
    }
    phi.check_against(model)?;
    let potential = phi.lift(model, phi.depth().max(2))?;
    let k = potential.depth();
    let states = enumerate_words(model, k - 1)?;
    let index: BTreeMap<&Word, usize> = states.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let terms: Vec<Vec<(usize, f64)>> = states
        .iter()
        .map(|u| {
            model
                .admissibility()
                .section(u.first())
                .iter()
                .map(|&a| {
                    let word = u.prepend(a);
                    let v = index[&word.prefix(k - 1)];
                    (v, model.apriori().weight(a).ln() + potential.value(&word))
                })
                .collect()
        })
        .collect();
    let apply = |u: &[f64]| -> Vec<f64> {
        terms
            .iter()
            .map(|row| {
                let xs: Vec<f64> = row.iter().map(|&(v, lw)| lw + t * u[v]).collect();
                log_sum_exp(&xs)
            })
            .collect()
    };

    let mut u = vec![0.0; states.len()];
    let mut prev_step: Option<f64> = None;
    let mut max_ratio: f64 = 0.0;
    for it in 1..=max_iter {
        let next = apply(&u);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalOverflow("contraction iterate".into()));
        }
        let step = next
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if let Some(p) = prev_step {
            // Ratios of steps at rounding level carry no information.
            if p > 1e-8 * (1.0 + sup_norm(&u)) {
                max_ratio = max_ratio.max(step / p);
            }
        }
        prev_step = Some(step);
        u = next;
        if step <= tol {
            return Ok(ContractionFixedPoint {
                u,
                iterations: it,
                residual: step,
                max_step_ratio: max_ratio,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: prev_step.unwrap_or(f64::INFINITY),
    })
}

fn check_depth(spec: &SpectralData, depth: usize) -> Result<()> {
    let required = (spec.depth() - 1).max(1);
    if depth < required {
        return Err(Error::DepthTooSmall {
            required,
            got: depth,
        });
    }
    Ok(())
}

/// Masses of `rho` on cylinders up to `depth`, from the recursion
/// `rho(a w) = lambda^-1 p(a) exp(g(a w_1 .. w_{k-1})) rho(w)` started at the
/// base vector on `(k - 1)`-words.
pub fn eigenmeasure_cylinders(
    model: &SubshiftModel,
    phi: &Potential,
    spec: &SpectralData,
    depth: usize,
) -> Result<CylinderMeasure> {
    check_depth(spec, depth)?;
    let k = spec.depth();
    let g = phi.lift(model, k)?;
    let mut level: BTreeMap<Word, f64> = spec
        .states()
        .iter()
        .cloned()
        .zip(spec.eigenmeasure_base().iter().copied())
        .collect();
    for len in k..=depth {
        let mut next = BTreeMap::new();
        for w in enumerate_words(model, len)? {
            let a = w.first();
            let rest = w.suffix_from(1);
            let mass = model.apriori().weight(a) * g.eval(&w.0).exp() * level[&rest] / spec.lambda();
            next.insert(w, mass);
        }
        level = next;
    }
    CylinderMeasure::from_top_level(model, depth, level, false)
}

/// Gibbs state `d mu = f d rho` on cylinders up to `depth`; flagged invariant.
pub fn gibbs_cylinders(
    model: &SubshiftModel,
    phi: &Potential,
    spec: &SpectralData,
    depth: usize,
) -> Result<CylinderMeasure> {
    check_depth(spec, depth)?;
    let k = spec.depth();
    let rho = eigenmeasure_cylinders(model, phi, spec, depth.max(k - 1))?;
    let f: BTreeMap<&Word, f64> = spec
        .states()
        .iter()
        .zip(spec.eigenfunction().iter().copied())
        .collect();
    let top = rho
        .level(depth)
        .map(|(w, m)| (w.clone(), m * f[&w.prefix(k - 1)]))
        .collect();
    CylinderMeasure::from_top_level(model, depth, top, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::*;
    use crate::{DEFAULT_MAX_ITER, DEFAULT_TOL};

    fn golden_lambda() -> f64 {
        (1.0 + 5f64.sqrt()) / 4.0
    }

    #[test]
    fn golden_mean_operator_entries() {
        let m = golden_mean();
        let op = assemble_operator(&m, &Potential::zero(&m, 1).unwrap()).unwrap();
        let e = op.entries();
        assert_eq!(e.to_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.0]]);
    }

    #[test]
    fn product_type_operator_entries() {
        let m = signed_full_shift();
        let s = 0.7;
        let phi = Potential::from_fn(&m, 1, "s x1", |w| if w.first() == 1 { s } else { -s }).unwrap();
        let op = assemble_operator(&m, &phi).unwrap();
        for u in 0..2 {
            assert_eq!(op.entries()[(u, 1)], s.exp());
            assert_eq!(op.entries()[(u, 0)], (-s).exp());
        }
    }

    #[test]
    fn golden_mean_eigendata() {
        let m = golden_mean();
        let spec = eigendata(&m, &Potential::zero(&m, 1).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((spec.lambda() - golden_lambda()).abs() < 1e-12);
        assert!(spec.residual() <= 1e-12 * spec.lambda());
        assert!((spec.eigenmeasure_base().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((dot(spec.eigenfunction(), spec.eigenmeasure_base()) - 1.0).abs() < 1e-14);
        assert!(spec.normalization_residual() < 1e-12);
        let r = spec.gap_ratio().ratio().unwrap();
        let expected = (5f64.sqrt() - 1.0) / (5f64.sqrt() + 1.0);
        assert!((r - expected).abs() < 1e-9, "{r} vs {expected}");
    }

    #[test]
    fn full_shift_is_stochastic() {
        let m = full_shift(2);
        let spec = eigendata(&m, &Potential::zero(&m, 1).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((spec.lambda() - 1.0).abs() < 1e-14);
        for (&f, &r) in spec.eigenfunction().iter().zip(spec.eigenmeasure_base()) {
            assert!((f - 1.0).abs() < 1e-14 && (r - 0.5).abs() < 1e-14);
        }
        assert!(spec.gap_ratio().ratio().unwrap() < 1e-12);
    }

    #[test]
    fn two_cycle_uses_period_reduction() {
        let m = two_cycle();
        let op = assemble_operator(&m, &Potential::zero(&m, 1).unwrap()).unwrap();
        let spec = power_iterate(&op, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(spec.period(), 2);
        assert_eq!(spec.gap_ratio(), GapRatio::Periodic);
        assert!((spec.lambda() - 0.5).abs() < 1e-14);
        assert_eq!(
            spectral_gap_estimate(&op, &spec),
            Err(Error::PeriodicModel { period: 2 })
        );
    }

    #[test]
    fn eigenmeasure_recursion_on_golden_mean() {
        let m = golden_mean();
        let phi = Potential::zero(&m, 1).unwrap();
        let spec = eigendata(&m, &phi, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let rho = eigenmeasure_cylinders(&m, &phi, &spec, 4).unwrap();
        let r1 = rho.mass(&Word(vec![1]));
        assert!((rho.mass(&Word(vec![0, 1])) - 0.5 * r1 / spec.lambda()).abs() < 1e-15);
        assert!(rho.right_consistency_deviation(&m) < 1e-12);
        let mu = gibbs_cylinders(&m, &phi, &spec, 4).unwrap();
        assert_eq!(mu.mass(&Word(vec![1, 1])), 0.0);
        assert!(mu.left_consistency_deviation(&m) < 1e-12);
        assert!(mu.right_consistency_deviation(&m) < 1e-12);
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depth_too_small_is_rejected() {
        let m = golden_mean();
        let phi = Potential::zero(&m, 3).unwrap();
        let spec = eigendata(&m, &phi, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(
            eigenmeasure_cylinders(&m, &phi, &spec, 1).unwrap_err(),
            Error::DepthTooSmall { required: 2, got: 1 }
        );
    }

    #[test]
    fn contraction_with_stochastic_operator_is_zero() {
        let m = full_shift(3);
        let fp = contraction_solve(&m, &Potential::zero(&m, 1).unwrap(), 0.5, 1e-14, 1000).unwrap();
        assert!(sup_norm(&fp.u) < 1e-14);
    }

    #[test]
    fn contraction_factor_is_bounded_by_t() {
        let m = golden_mean();
        let fp = contraction_solve(&m, &Potential::zero(&m, 1).unwrap(), 0.9, 1e-12, 10_000).unwrap();
        assert!(fp.max_step_ratio <= 0.9 + 1e-6, "{}", fp.max_step_ratio);
        assert!(contraction_solve(&m, &Potential::zero(&m, 1).unwrap(), 1.0, 1e-12, 10).is_err());
    }

    #[test]
    fn uniform_limit_of_constant_is_immediate() {
        let m = golden_mean();
        let spec = eigendata(&m, &Potential::zero(&m, 1).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let res = check_uniform_limit(&m, &spec, &[1.0, 1.0], 1e-12, 100).unwrap();
        assert_eq!(res.n_star, 0);
    }

    #[test]
    fn uniform_limit_rate_matches_gap() {
        let m = golden_mean();
        let spec = eigendata(&m, &Potential::zero(&m, 1).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let tol = 1e-10;
        let res = check_uniform_limit(&m, &spec, &[1.0, 0.0], tol, 10_000).unwrap();
        let gap = spec.gap_ratio().ratio().unwrap();
        let bound = (tol.ln() / gap.ln()).ceil() as usize + 3;
        assert!(res.n_star <= bound, "{} > {}", res.n_star, bound);
        assert!(res.warnings.is_empty());
        assert!(res.deviations.windows(2).all(|w| w[1] <= w[0] + 1e-14));
    }
}
