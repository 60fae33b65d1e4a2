//! Subshift models: alphabet with coordinates, admissibility relation,
//! a priori weights, and the combinatorics derived from them (sections,
//! admissible words, period and cyclic components).

use std::collections::VecDeque;
use std::fmt;

use crate::{Error, Result};

/// Finite alphabet. Each symbol carries a coordinate in `[0, 1]`, used by the
/// sequence metric and by coordinate-valued potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    symbols: Vec<String>,
    coords: Vec<f64>,
}

impl Alphabet {
    pub fn new(symbols: Vec<String>, coords: Vec<f64>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet is empty".into()));
        }
        if symbols.len() != coords.len() {
            return Err(Error::InvalidAlphabet(format!(
                "{} symbols but {} coordinates",
                symbols.len(),
                coords.len()
            )));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol `{s}`")));
            }
        }
        if let Some((s, c)) = symbols
            .iter()
            .zip(&coords)
            .find(|(_, c)| !c.is_finite() || !(0.0..=1.0).contains(*c))
        {
            return Err(Error::InvalidAlphabet(format!(
                "coordinate {c} of `{s}` is outside [0, 1]"
            )));
        }
        Ok(Self { symbols, coords })
    }

    /// Symbols `0..n` with coordinates evenly spaced on `[0, 1]`.
    pub fn indexed(n: usize) -> Result<Self> {
        let coords = (0..n)
            .map(|i| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 })
            .collect();
        Self::new((0..n).map(|i| i.to_string()).collect(), coords)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coord(&self, symbol: usize) -> f64 {
        self.coords[symbol]
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }
}

/// The admissibility relation `a -> b` together with its sections
/// `s(b) = {a : a -> b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityModel {
    matrix: Vec<Vec<bool>>,
    sections: Vec<Vec<usize>>,
}

impl AdmissibilityModel {
    fn new(matrix: Vec<Vec<bool>>) -> Self {
        let n = matrix.len();
        let sections = (0..n)
            .map(|b| (0..n).filter(|&a| matrix[a][b]).collect())
            .collect();
        Self { matrix, sections }
    }

    pub fn matrix(&self) -> &[Vec<bool>] {
        &self.matrix
    }

    pub fn allows(&self, a: usize, b: usize) -> bool {
        self.matrix[a][b]
    }

    pub fn section(&self, b: usize) -> &[usize] {
        &self.sections[b]
    }

    pub fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.matrix[a]
            .iter()
            .enumerate()
            .filter_map(|(b, &ok)| ok.then_some(b))
    }
}

/// Full-support weights on the alphabet. `normalized` is set when the weights
/// sum to one; unnormalized weights (e.g. all ones) give the classical operator.
#[derive(Debug, Clone, PartialEq)]
pub struct AprioriMeasure {
    weights: Vec<f64>,
    normalized: bool,
}

impl AprioriMeasure {
    pub fn new(weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        Self {
            normalized: (total - 1.0).abs() <= 1e-12,
            weights,
        }
    }

    pub fn uniform(n: usize) -> Self {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Counting measure, `p = 1` on every symbol.
    pub fn ones(n: usize) -> Self {
        Self::new(vec![1.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, symbol: usize) -> f64 {
        self.weights[symbol]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// A finite admissible word, stored as symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n].to_vec())
    }

    pub fn suffix_from(&self, start: usize) -> Word {
        Word(self.0[start..].to_vec())
    }

    pub fn prepend(&self, a: usize) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(a);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn append(&self, b: usize) -> Word {
        let mut v = self.0.clone();
        v.push(b);
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// A validated subshift: irreducible admissibility graph with full-support
/// a priori weights, plus its cyclic decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubshiftModel {
    alphabet: Alphabet,
    admissibility: AdmissibilityModel,
    apriori: AprioriMeasure,
    period: usize,
    components: Vec<Vec<usize>>,
    class_of: Vec<usize>,
}

/// Validate the admissibility table and weights and compute the period and
/// cyclic components of the graph.
pub fn build_model(
    alphabet: Alphabet,
    admissible_pairs: Vec<Vec<bool>>,
    apriori: AprioriMeasure,
) -> Result<SubshiftModel> {
    let n = alphabet.len();
    let cols = admissible_pairs.first().map_or(0, Vec::len);
    if admissible_pairs.len() != n || admissible_pairs.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            rows: admissible_pairs.len(),
            cols,
            expected: n,
        });
    }
    if apriori.weights().len() != n {
        return Err(Error::InvalidAlphabet(format!(
            "{} a priori weights for {} symbols",
            apriori.weights().len(),
            n
        )));
    }
    for (s, &w) in alphabet.symbols().iter().zip(apriori.weights()) {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::NonPositiveWeight {
                symbol: s.clone(),
                weight: w,
            });
        }
    }
    for (i, s) in alphabet.symbols().iter().enumerate() {
        if !admissible_pairs[i].iter().any(|&x| x) {
            return Err(Error::EmptyRowOrColumn {
                symbol: s.clone(),
                which: "row (no successors)",
            });
        }
        if !admissible_pairs.iter().any(|row| row[i]) {
            return Err(Error::EmptyRowOrColumn {
                symbol: s.clone(),
                which: "column (no predecessors)",
            });
        }
    }
    let admissibility = AdmissibilityModel::new(admissible_pairs);
    let (period, class_of) = cyclic_structure(&admissibility, n)?;
    let mut components = vec![Vec::new(); period];
    for (v, &c) in class_of.iter().enumerate() {
        components[c].push(v);
    }
    Ok(SubshiftModel {
        alphabet,
        admissibility,
        apriori,
        period,
        components,
        class_of,
    })
}

/// BFS levels from symbol 0; the period is the gcd of `level(u) + 1 - level(v)`
/// over all edges, and classes are levels mod the period.
fn cyclic_structure(adm: &AdmissibilityModel, n: usize) -> Result<(usize, Vec<usize>)> {
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let edge = if forward { adm.allows(u, v) } else { adm.allows(v, u) };
                if edge && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    };
    if reach(true).iter().chain(reach(false).iter()).any(|s| !s) {
        return Err(Error::NotIrreducible);
    }

    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in adm.successors(u) {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0i64;
    for u in 0..n {
        for v in adm.successors(u) {
            let d = level[u] as i64 + 1 - level[v] as i64;
            g = gcd(g, d.abs());
        }
    }
    let period = g.max(1) as usize;
    Ok((period, level.iter().map(|l| l % period).collect()))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl SubshiftModel {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn admissibility(&self) -> &AdmissibilityModel {
        &self.admissibility
    }

    pub fn apriori(&self) -> &AprioriMeasure {
        &self.apriori
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period == 1
    }

    /// Cyclic classes; every admissible edge goes from class `i` to class
    /// `(i + 1) mod period`.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn class_of(&self, symbol: usize) -> usize {
        self.class_of[symbol]
    }

    pub fn allows(&self, a: usize, b: usize) -> bool {
        self.admissibility.allows(a, b)
    }

    pub fn is_admissible(&self, word: &Word) -> bool {
        !word.is_empty()
            && word.0.iter().all(|&s| s < self.size())
            && word.0.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    pub fn symbol_index(&self, symbol: &str) -> Result<usize> {
        self.alphabet.index_of(symbol)
    }

    pub fn parse_word(&self, symbols: &[&str]) -> Result<Word> {
        let w = Word(
            symbols
                .iter()
                .map(|s| self.symbol_index(s))
                .collect::<Result<_>>()?,
        );
        if !self.is_admissible(&w) {
            return Err(Error::InadmissibleWord(self.format_word(&w)));
        }
        Ok(w)
    }

    pub fn format_word(&self, word: &Word) -> String {
        word.0
            .iter()
            .map(|&s| self.alphabet.symbols()[s].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Same alphabet and weights with every transition reversed.
    pub fn transposed(&self) -> SubshiftModel {
        let n = self.size();
        let matrix = (0..n)
            .map(|a| (0..n).map(|b| self.allows(b, a)).collect())
            .collect();
        build_model(self.alphabet.clone(), matrix, self.apriori.clone())
            .expect("transpose of an irreducible model is irreducible")
    }

    /// Replace the a priori weights, keeping the graph.
    pub fn with_apriori(&self, apriori: AprioriMeasure) -> Result<SubshiftModel> {
        build_model(
            self.alphabet.clone(),
            self.admissibility.matrix.clone(),
            apriori,
        )
    }
}

/// Predecessor set `s(b)`.
pub fn section(model: &SubshiftModel, b: &str) -> Result<Vec<usize>> {
    let b = model.symbol_index(b)?;
    Ok(model.admissibility.section(b).to_vec())
}

/// All admissible words of length `n`, in lexicographic order of symbol
/// indices.
pub fn enumerate_words(model: &SubshiftModel, n: usize) -> Result<Vec<Word>> {
    if n == 0 {
        return Err(Error::LengthZero);
    }
    let mut words: Vec<Vec<usize>> = (0..model.size()).map(|a| vec![a]).collect();
    for _ in 1..n {
        words = words
            .into_iter()
            .flat_map(|w| {
                let last = *w.last().unwrap();
                model.admissibility.successors(last).map(move |b| {
                    let mut next = w.clone();
                    next.push(b);
                    next
                })
            })
            .collect();
    }
    Ok(words.into_iter().map(Word).collect())
}

/// Truncated sequence metric `sum_n 2^-n |coord(x_n) - coord(y_n)|`.
pub fn sequence_distance(model: &SubshiftModel, x: &Word, y: &Word) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let c = model.alphabet.coords();
    let mut scale = 1.0;
    let mut total = 0.0;
    for (&a, &b) in x.0.iter().zip(&y.0) {
        scale *= 0.5;
        total += scale * (c[a] - c[b]).abs();
    }
    Ok(total)
}

/// Ready-made models used throughout tests, benches and fixtures.
pub mod catalog {
    use super::*;

    fn binary(matrix: Vec<Vec<bool>>, apriori: AprioriMeasure) -> SubshiftModel {
        build_model(Alphabet::indexed(2).unwrap(), matrix, apriori).unwrap()
    }

    /// All transitions allowed on `{0, 1}`, uniform weights.
    pub fn full_shift(n: usize) -> SubshiftModel {
        build_model(
            Alphabet::indexed(n).unwrap(),
            vec![vec![true; n]; n],
            AprioriMeasure::uniform(n),
        )
        .unwrap()
    }

    /// `{0, 1}` with `1 -> 1` forbidden, uniform weights.
    pub fn golden_mean() -> SubshiftModel {
        binary(
            vec![vec![true, true], vec![true, false]],
            AprioriMeasure::uniform(2),
        )
    }

    /// Only `0 -> 1` and `1 -> 0`.
    pub fn two_cycle() -> SubshiftModel {
        binary(
            vec![vec![false, true], vec![true, false]],
            AprioriMeasure::uniform(2),
        )
    }

    /// Full shift on `{-1, 1}` with counting weights, coordinates 0 and 1.
    pub fn signed_full_shift() -> SubshiftModel {
        build_model(
            Alphabet::new(vec!["-1".into(), "1".into()], vec![0.0, 1.0]).unwrap(),
            vec![vec![true; 2]; 2],
            AprioriMeasure::ones(2),
        )
        .unwrap()
    }

    /// Four symbols with self-loops at 1 and 2 joined through 0 and 3:
    /// `1->1, 1->0, 0->2, 2->2, 2->3, 3->1`. Swapping 1<->2 and 0<->3 is a
    /// graph automorphism.
    pub fn two_loops() -> SubshiftModel {
        let mut m = vec![vec![false; 4]; 4];
        for (a, b) in [(1, 1), (1, 0), (0, 2), (2, 2), (2, 3), (3, 1)] {
            m[a][b] = true;
        }
        build_model(Alphabet::indexed(4).unwrap(), m, AprioriMeasure::uniform(4)).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::catalog::*;
    use super::*;

    #[test]
    fn periods_of_small_models() {
        let full = full_shift(2);
        assert_eq!(full.period(), 1);
        assert_eq!(full.components().len(), 1);
        assert_eq!(golden_mean().period(), 1);
        let cyc = two_cycle();
        assert_eq!(cyc.period(), 2);
        assert_eq!(cyc.components(), &[vec![0], vec![1]]);
    }

    #[test]
    fn sections_of_golden_mean() {
        let m = golden_mean();
        assert_eq!(section(&m, "1").unwrap(), vec![0]);
        assert_eq!(section(&m, "0").unwrap(), vec![0, 1]);
        assert_eq!(section(&full_shift(2), "1").unwrap(), vec![0, 1]);
        assert!(matches!(section(&m, "7"), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn word_enumeration() {
        let w = |v: &[usize]| Word(v.to_vec());
        assert_eq!(
            enumerate_words(&golden_mean(), 2).unwrap(),
            vec![w(&[0, 0]), w(&[0, 1]), w(&[1, 0])]
        );
        assert_eq!(enumerate_words(&full_shift(2), 2).unwrap().len(), 4);
        assert_eq!(
            enumerate_words(&two_cycle(), 3).unwrap(),
            vec![w(&[0, 1, 0]), w(&[1, 0, 1])]
        );
        assert_eq!(enumerate_words(&golden_mean(), 0), Err(Error::LengthZero));
    }

    #[test]
    fn distance_examples() {
        let m = golden_mean();
        let w = |v: &[usize]| Word(v.to_vec());
        assert_eq!(sequence_distance(&m, &w(&[0, 1]), &w(&[0, 1])).unwrap(), 0.0);
        assert_eq!(sequence_distance(&m, &w(&[1, 0]), &w(&[0, 0])).unwrap(), 0.5);
        assert_eq!(sequence_distance(&m, &w(&[0, 1]), &w(&[1, 0])).unwrap(), 0.75);
        assert!(matches!(
            sequence_distance(&m, &w(&[0]), &w(&[0, 0])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_models() {
        let a = Alphabet::indexed(2).unwrap();
        let dead = build_model(
            a.clone(),
            vec![vec![true, false], vec![true, false]],
            AprioriMeasure::uniform(2),
        );
        assert!(matches!(dead, Err(Error::EmptyRowOrColumn { .. })));
        let reducible = build_model(
            a.clone(),
            vec![vec![true, true], vec![false, true]],
            AprioriMeasure::uniform(2),
        );
        assert_eq!(reducible, Err(Error::NotIrreducible));
        let weights = build_model(
            a,
            vec![vec![true; 2]; 2],
            AprioriMeasure::new(vec![0.5, 0.0]),
        );
        assert!(matches!(weights, Err(Error::NonPositiveWeight { .. })));
        assert!(Alphabet::new(vec!["a".into(), "a".into()], vec![0.0, 1.0]).is_err());
        assert!(Alphabet::new(vec!["a".into()], vec![1.5]).is_err());
    }

    #[test]
    fn transpose_is_an_involution() {
        let m = two_loops();
        assert_eq!(m.transposed().transposed(), m);
        assert_eq!(m.transposed().period(), m.period());
    }
}
