//! Locally constant potentials: a value for every admissible word of a fixed
//! depth `k`. Such a potential reads only `x_1 .. x_k`.

use std::collections::BTreeMap;

use crate::model::{enumerate_words, SubshiftModel, Word};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    depth: usize,
    table: BTreeMap<Word, f64>,
    label: String,
}

impl Potential {
    /// Tabulate `g` on every admissible word of length `depth`.
    pub fn from_fn(
        model: &SubshiftModel,
        depth: usize,
        label: impl Into<String>,
        mut g: impl FnMut(&Word) -> f64,
    ) -> Result<Self> {
        let words = enumerate_words(model, depth)?;
        let mut table = BTreeMap::new();
        for w in words {
            let v = g(&w);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "potential value {v} on word {}",
                    model.format_word(&w)
                )));
            }
            table.insert(w, v);
        }
        Ok(Self {
            depth,
            table,
            label: label.into(),
        })
    }

    /// Build from an explicit table; every admissible word of length `depth`
    /// must be present. Entries for inadmissible words are ignored.
    pub fn from_table(
        model: &SubshiftModel,
        depth: usize,
        label: impl Into<String>,
        entries: &BTreeMap<Word, f64>,
    ) -> Result<Self> {
        let words = enumerate_words(model, depth)?;
        let mut table = BTreeMap::new();
        for w in words {
            let v = *entries
                .get(&w)
                .ok_or_else(|| Error::MissingPotentialEntry(model.format_word(&w)))?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "potential value {v} on word {}",
                    model.format_word(&w)
                )));
            }
            table.insert(w, v);
        }
        Ok(Self {
            depth,
            table,
            label: label.into(),
        })
    }

    pub fn zero(model: &SubshiftModel, depth: usize) -> Result<Self> {
        Self::from_fn(model, depth, "zero", |_| 0.0)
    }

    pub fn constant(model: &SubshiftModel, depth: usize, c: f64) -> Result<Self> {
        Self::from_fn(model, depth, format!("constant {c}"), |_| c)
    }

    /// `scale * coord(x_1)`.
    pub fn first_coordinate(model: &SubshiftModel, scale: f64) -> Result<Self> {
        let coords = model.alphabet().coords().to_vec();
        Self::from_fn(model, 1, format!("{scale} * coord(x1)"), |w| {
            scale * coords[w.first()]
        })
    }

    /// `scale * (coord(x_1) + coord(x_2))`.
    pub fn pair_coordinate_sum(model: &SubshiftModel, scale: f64) -> Result<Self> {
        let coords = model.alphabet().coords().to_vec();
        Self::from_fn(model, 2, format!("{scale} * (coord(x1) + coord(x2))"), |w| {
            scale * (coords[w.0[0]] + coords[w.0[1]])
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Value on an admissible word of exactly `depth` symbols.
    pub fn value(&self, word: &Word) -> f64 {
        self.table[word]
    }

    /// Value on any admissible word with at least `depth` symbols.
    pub fn eval(&self, word: &[usize]) -> f64 {
        self.table[&Word(word[..self.depth].to_vec())]
    }

    pub fn get(&self, word: &Word) -> Option<f64> {
        self.table.get(word).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.table.iter().map(|(w, &v)| (w, v))
    }

    pub fn max_value(&self) -> f64 {
        self.table.values().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.table.values().copied().fold(f64::INFINITY, f64::min)
    }

    /// The same function viewed as a depth-`depth` potential.
    pub fn lift(&self, model: &SubshiftModel, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::DepthTooSmall {
                required: self.depth,
                got: depth,
            });
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        Self::from_fn(model, depth, self.label.clone(), |w| self.eval(&w.0))
    }

    /// Apply `f` to every value.
    pub fn map(&self, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            depth: self.depth,
            table: self.table.iter().map(|(w, &v)| (w.clone(), f(v))).collect(),
            label: label.into(),
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(format!("{t} * ({})", self.label), |v| t * v)
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.map(format!("({}) + {c}", self.label), |v| v + c)
    }

    /// Pointwise sum, lifting both to the larger depth.
    pub fn add(&self, model: &SubshiftModel, other: &Potential) -> Result<Self> {
        let depth = self.depth.max(other.depth);
        let a = self.lift(model, depth)?;
        let b = other.lift(model, depth)?;
        Potential::from_fn(model, depth, format!("{} + {}", self.label, other.label), |w| {
            a.value(w) + b.value(w)
        })
    }

    /// Check that the table matches the admissible words of `model`.
    pub fn check_against(&self, model: &SubshiftModel) -> Result<()> {
        let words = enumerate_words(model, self.depth)?;
        if words.len() != self.table.len() {
            for w in &words {
                if !self.table.contains_key(w) {
                    return Err(Error::MissingPotentialEntry(model.format_word(w)));
                }
            }
            return Err(Error::Unsupported(
                "potential table has entries for inadmissible words".into(),
            ));
        }
        for w in &words {
            if !self.table.contains_key(w) {
                return Err(Error::MissingPotentialEntry(model.format_word(w)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::*;

    #[test]
    fn missing_entry_is_reported() {
        let m = golden_mean();
        let mut t = BTreeMap::new();
        t.insert(Word(vec![0, 0]), 1.0);
        t.insert(Word(vec![0, 1]), 1.0);
        let err = Potential::from_table(&m, 2, "partial", &t).unwrap_err();
        assert!(matches!(err, Error::MissingPotentialEntry(_)));
        t.insert(Word(vec![1, 0]), 2.0);
        let p = Potential::from_table(&m, 2, "full", &t).unwrap();
        assert_eq!(p.value(&Word(vec![1, 0])), 2.0);
    }

    #[test]
    fn lift_preserves_values() {
        let m = golden_mean();
        let p = Potential::first_coordinate(&m, 3.0).unwrap();
        let q = p.lift(&m, 3).unwrap();
        for (w, v) in q.entries() {
            assert_eq!(v, 3.0 * w.first() as f64);
        }
        assert!(q.lift(&m, 2).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        let m = full_shift(2);
        assert!(Potential::from_fn(&m, 1, "nan", |_| f64::NAN).is_err());
    }
}
