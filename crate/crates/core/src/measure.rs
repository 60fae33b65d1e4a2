//! Measures represented by their values on admissible cylinders up to a
//! fixed depth.
//!
//! Every stored measure satisfies right (Kolmogorov) consistency,
//! `m(w) = sum_b m(w b)`, since `[w]` is the disjoint union of the `[w b]`.
//! Left consistency, `m(w) = sum_a m(a w)`, is shift invariance and is only
//! required of measures flagged invariant.

use std::collections::BTreeMap;

use rand::Rng;

use crate::linalg::{solve, DenseMatrix};
use crate::model::{enumerate_words, SubshiftModel, Word};
use crate::potential::Potential;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderMeasure {
    depth: usize,
    masses: BTreeMap<Word, f64>,
    invariant: bool,
}

impl CylinderMeasure {
    /// Build from masses on the admissible words of length `depth`; shorter
    /// cylinders are filled in by summing right extensions.
    pub fn from_top_level(
        model: &SubshiftModel,
        depth: usize,
        top: BTreeMap<Word, f64>,
        invariant: bool,
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::LengthZero);
        }
        let mut masses = BTreeMap::new();
        for w in enumerate_words(model, depth)? {
            let m = top.get(&w).copied().unwrap_or(0.0);
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::NonFinite(format!(
                    "cylinder mass {m} on {}",
                    model.format_word(&w)
                )));
            }
            masses.insert(w, m);
        }
        for len in (1..depth).rev() {
            for w in enumerate_words(model, len)? {
                let total = model
                    .admissibility()
                    .successors(w.last())
                    .map(|b| masses[&w.append(b)])
                    .sum();
                masses.insert(w, total);
            }
        }
        Ok(Self {
            depth,
            masses,
            invariant,
        })
    }

    /// Stationary Markov measure for a row-stochastic matrix supported on the
    /// admissible transitions.
    pub fn markov(model: &SubshiftModel, transition: &DenseMatrix, depth: usize) -> Result<Self> {
        let n = model.size();
        for a in 0..n {
            let row_sum: f64 = transition.row(a).iter().sum();
            if (row_sum - 1.0).abs() > 1e-12 {
                return Err(Error::Unsupported(format!(
                    "transition row {a} sums to {row_sum}"
                )));
            }
            for b in 0..n {
                if transition[(a, b)] < 0.0 || (transition[(a, b)] > 0.0 && !model.allows(a, b)) {
                    return Err(Error::Unsupported(format!(
                        "transition {a}->{b} is negative or not admissible"
                    )));
                }
            }
        }
        let pi = stationary_distribution(transition)?;
        let mut top = BTreeMap::new();
        for w in enumerate_words(model, depth)? {
            let mut m = pi[w.first()];
            for pair in w.0.windows(2) {
                m *= transition[(pair[0], pair[1])];
            }
            top.insert(w, m);
        }
        Self::from_top_level(model, depth, top, true)
    }

    /// Random Markov measure: independent uniform(0.05, 1) weights on the
    /// admissible transitions, row-normalized.
    pub fn random_markov<R: Rng + ?Sized>(
        model: &SubshiftModel,
        rng: &mut R,
        depth: usize,
    ) -> Result<Self> {
        let n = model.size();
        let mut p = DenseMatrix::zeros(n, n);
        for a in 0..n {
            let succ: Vec<usize> = model.admissibility().successors(a).collect();
            let w: Vec<f64> = succ.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            for (b, x) in succ.into_iter().zip(w) {
                p[(a, b)] = x / total;
            }
        }
        Self::markov(model, &p, depth)
    }

    /// Uniform measure on the periodic orbit generated by `cycle`
    /// (a closed admissible walk `c_0 -> c_1 -> ... -> c_{n-1} -> c_0`).
    pub fn periodic_orbit(model: &SubshiftModel, cycle: &[usize], depth: usize) -> Result<Self> {
        let n = cycle.len();
        if n == 0 {
            return Err(Error::LengthZero);
        }
        for i in 0..n {
            if !model.allows(cycle[i], cycle[(i + 1) % n]) {
                return Err(Error::InadmissibleWord(format!("{cycle:?}")));
            }
        }
        let mut top = BTreeMap::new();
        for start in 0..n {
            let w = Word((0..depth).map(|j| cycle[(start + j) % n]).collect());
            *top.entry(w).or_insert(0.0) += 1.0 / n as f64;
        }
        Self::from_top_level(model, depth, top, true)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_invariant(&self) -> bool {
        self.invariant
    }

    /// Mass of a cylinder; zero for inadmissible words of stored length.
    pub fn mass(&self, word: &Word) -> f64 {
        self.masses.get(word).copied().unwrap_or(0.0)
    }

    /// `(word, mass)` pairs of one length in lexicographic order.
    pub fn level(&self, len: usize) -> impl Iterator<Item = (&Word, f64)> {
        self.masses
            .iter()
            .filter(move |(w, _)| w.len() == len)
            .map(|(w, &m)| (w, m))
    }

    pub fn total_mass(&self) -> f64 {
        self.level(1).map(|(_, m)| m).sum()
    }

    /// Largest violation of `m(w) = sum_b m(w b)` over stored words.
    pub fn right_consistency_deviation(&self, model: &SubshiftModel) -> f64 {
        let mut worst: f64 = 0.0;
        for (w, m) in &self.masses {
            if w.len() >= self.depth {
                continue;
            }
            let ext: f64 = model
                .admissibility()
                .successors(w.last())
                .map(|b| self.mass(&w.append(b)))
                .sum();
            worst = worst.max((ext - m).abs());
        }
        worst
    }

    /// Largest violation of `m(w) = sum_a m(a w)` (shift invariance).
    pub fn left_consistency_deviation(&self, model: &SubshiftModel) -> f64 {
        let mut worst: f64 = 0.0;
        for (w, m) in &self.masses {
            if w.len() >= self.depth {
                continue;
            }
            let ext: f64 = model
                .admissibility()
                .section(w.first())
                .iter()
                .map(|&a| self.mass(&w.prepend(a)))
                .sum();
            worst = worst.max((ext - m).abs());
        }
        worst
    }

    /// `int g dm` for a potential of depth at most the stored depth.
    pub fn integrate(&self, g: &Potential) -> Result<f64> {
        if g.depth() > self.depth {
            return Err(Error::DepthTooSmall {
                required: g.depth(),
                got: self.depth,
            });
        }
        Ok(self.level(g.depth()).map(|(w, m)| m * g.value(w)).sum())
    }

    /// Integral of a function of the first symbol.
    pub fn integrate_first_symbol(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.level(1).map(|(w, m)| m * f(w.first())).sum()
    }

    /// Total variation distance on cylinders of length `len`.
    pub fn total_variation(&self, other: &CylinderMeasure, len: usize) -> Result<f64> {
        if len > self.depth || len > other.depth {
            return Err(Error::DepthTooSmall {
                required: len,
                got: self.depth.min(other.depth),
            });
        }
        let mut keys: Vec<&Word> = self.level(len).map(|(w, _)| w).collect();
        keys.extend(other.level(len).map(|(w, _)| w));
        keys.sort();
        keys.dedup();
        Ok(0.5
            * keys
                .into_iter()
                .map(|w| (self.mass(w) - other.mass(w)).abs())
                .sum::<f64>())
    }

    /// Average of measures with equal depth.
    pub fn average(model: &SubshiftModel, items: &[&CylinderMeasure]) -> Result<Self> {
        let depth = items.first().ok_or(Error::LengthZero)?.depth;
        let mut top = BTreeMap::new();
        for m in items {
            for (w, x) in m.level(depth) {
                *top.entry(w.clone()).or_insert(0.0) += x / items.len() as f64;
            }
        }
        Self::from_top_level(model, depth, top, items.iter().all(|m| m.invariant))
    }
}

/// Stationary vector of an irreducible row-stochastic matrix, by solving
/// `pi (P - I) = 0` with one equation replaced by `sum pi = 1`.
pub fn stationary_distribution(p: &DenseMatrix) -> Result<Vec<f64>> {
    let n = p.rows();
    let mut a = p.transpose();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let pi = solve(&a, &rhs).ok_or(Error::NotIrreducible)?;
    Ok(pi.into_iter().map(|x| x.max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::*;
    use rand::SeedableRng;

    #[test]
    fn markov_measure_is_consistent_both_ways() {
        let m = golden_mean();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mu = CylinderMeasure::random_markov(&m, &mut rng, 4).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        assert!(mu.right_consistency_deviation(&m) < 1e-14);
        assert!(mu.left_consistency_deviation(&m) < 1e-14);
        assert_eq!(mu.mass(&Word(vec![1, 1])), 0.0);
    }

    #[test]
    fn periodic_orbit_masses() {
        let m = golden_mean();
        let mu = CylinderMeasure::periodic_orbit(&m, &[0, 1], 3).unwrap();
        assert_eq!(mu.mass(&Word(vec![0, 1])), 0.5);
        assert_eq!(mu.mass(&Word(vec![1, 0, 1])), 0.5);
        assert_eq!(mu.mass(&Word(vec![0, 0])), 0.0);
        assert!(mu.left_consistency_deviation(&m) < 1e-15);
        assert!(CylinderMeasure::periodic_orbit(&m, &[1], 2).is_err());
    }

    #[test]
    fn total_variation_of_distinct_orbits() {
        let m = golden_mean();
        let a = CylinderMeasure::periodic_orbit(&m, &[0], 2).unwrap();
        let b = CylinderMeasure::periodic_orbit(&m, &[0, 1], 2).unwrap();
        assert!((a.total_variation(&b, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((a.total_variation(&b, 2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(a.total_variation(&a, 2).unwrap(), 0.0);
    }
}
