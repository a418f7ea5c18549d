//! Finite-resolution view of the one-sided full shift on `d` symbols.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};

/// Largest alphabet supported.
pub const MAX_SYMBOLS: usize = 64;

/// A finite word over `{1, ..., d}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Word {
    d: usize,
    symbols: Vec<u8>,
}

impl Word {
    pub fn new(d: usize, symbols: Vec<u8>) -> Result<Self> {
        check_alphabet(d)?;
        if let Some(&s) = symbols.iter().find(|&&s| s == 0 || s as usize > d) {
            return Err(QError::InvalidInput(format!(
                "symbol {s} outside the alphabet 1..={d}"
            )));
        }
        Ok(Self { d, symbols })
    }

    /// Parses a compact digit string such as `"12212"` (alphabets up to 9 symbols).
    pub fn parse(d: usize, s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|v| v as u8)
                    .ok_or_else(|| QError::InvalidInput(format!("non-digit symbol {c:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(d, symbols)
    }

    pub fn empty(d: usize) -> Self {
        Self {
            d,
            symbols: Vec::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Word {
            d: self.d,
            symbols,
        }
    }

    /// The word with its first `n` symbols removed.
    pub fn shifted(&self, n: usize) -> Word {
        Word {
            d: self.d,
            symbols: self.symbols[n.min(self.len())..].to_vec(),
        }
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sep = if self.d > 9 { "," } else { "" };
        let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(sep))
    }
}

fn check_alphabet(d: usize) -> Result<()> {
    if (2..=MAX_SYMBOLS).contains(&d) {
        Ok(())
    } else {
        Err(QError::InvalidInput(format!(
            "alphabet size must be in 2..={MAX_SYMBOLS}, got {d}"
        )))
    }
}

/// Lexicographic index of a word of 1-based symbols.
pub fn word_index(d: usize, symbols: &[u8]) -> usize {
    symbols
        .iter()
        .fold(0usize, |acc, &s| acc * d + (s as usize - 1))
}

/// The word of length `len` with lexicographic index `idx`.
pub fn index_word(d: usize, len: usize, mut idx: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut().rev() {
        *slot = (idx % d) as u8 + 1;
        idx /= d;
    }
    out
}

/// Length of the context words on which functions of a memory-`m` problem live.
pub fn context_len(memory: usize) -> usize {
    memory.saturating_sub(1).max(1)
}

/// JSON description of a potential: either `{"d", "memory", "values"}` with values in
/// lexicographic word order, or `{"values_named": {"11": .., "12": ..}}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub memory: Option<usize>,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub values_named: Option<BTreeMap<String, f64>>,
}

impl PotentialSpec {
    pub fn into_potential(self) -> Result<Potential> {
        match (self.values, self.values_named) {
            (Some(values), None) => {
                let d = self.d.ok_or_else(|| QError::InvalidInput("field \"d\" is required with \"values\"".into()))?;
                let memory = self
                    .memory
                    .ok_or_else(|| QError::InvalidInput("field \"memory\" is required with \"values\"".into()))?;
                Potential::new(d, memory, values)
            }
            (None, Some(named)) => {
                let p = Potential::from_named(named.iter().map(|(k, v)| (k.as_str(), *v)))?;
                if self.d.is_some_and(|d| d != p.d()) || self.memory.is_some_and(|m| m != p.memory()) {
                    return Err(QError::InvalidInput("\"d\"/\"memory\" disagree with the named keys".into()));
                }
                Ok(p)
            }
            (Some(_), Some(_)) => Err(QError::InvalidInput("give either \"values\" or \"values_named\", not both".into())),
            (None, None) => Err(QError::InvalidInput("missing \"values\" or \"values_named\"".into())),
        }
    }
}

impl From<&Potential> for PotentialSpec {
    fn from(p: &Potential) -> Self {
        Self {
            d: Some(p.d),
            memory: Some(p.memory),
            values: Some(p.values.clone()),
            values_named: None,
        }
    }
}

/// A locally constant potential of memory `m`, stored as a table over length-`m` words.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Potential {
    d: usize,
    memory: usize,
    values: Vec<f64>,
}

impl Potential {
    pub fn new(d: usize, memory: usize, values: Vec<f64>) -> Result<Self> {
        check_alphabet(d)?;
        if memory == 0 {
            return Err(QError::InvalidInput("memory must be at least 1".into()));
        }
        let expected = d
            .checked_pow(memory as u32)
            .filter(|&n| n <= 1 << 24)
            .ok_or_else(|| QError::SizeGuard(format!("table d^m with d={d}, m={memory}")))?;
        if values.is_empty() {
            return Err(QError::InvalidInput("potential table is empty".into()));
        }
        if values.len() != expected {
            return Err(QError::InvalidInput(format!(
                "table length {} does not equal d^m = {expected}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(QError::InvalidInput(format!("table entry {i} is not finite")));
        }
        Ok(Self { d, memory, values })
    }

    pub fn constant(d: usize, memory: usize, a: f64) -> Result<Self> {
        let n = d.checked_pow(memory as u32).unwrap_or(0);
        Self::new(d, memory, vec![a; n])
    }

    /// Builds a potential from keys such as `"12"` (alphabets up to 9 symbols, memory up to 2).
    pub fn from_named<'a, I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let entries: Vec<(&str, f64)> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(QError::InvalidInput("no named values".into()));
        }
        let memory = entries[0].0.len();
        if !(1..=2).contains(&memory) {
            return Err(QError::InvalidInput(format!(
                "named keys must have length 1 or 2, got {:?}",
                entries[0].0
            )));
        }
        let mut words = Vec::with_capacity(entries.len());
        let mut d = 0usize;
        for (key, v) in &entries {
            if key.len() != memory {
                return Err(QError::InvalidInput(format!("key {key:?} has inconsistent length")));
            }
            let w = Word::parse(9, key)?;
            d = d.max(*w.symbols().iter().max().unwrap_or(&1) as usize);
            words.push((w, *v));
        }
        let d = d.max(2);
        let n = d.pow(memory as u32);
        let mut values = vec![f64::NAN; n];
        for (w, v) in words {
            if w.symbols().iter().any(|&s| s as usize > d) {
                return Err(QError::InvalidInput(format!("key {w} outside alphabet")));
            }
            values[word_index(d, w.symbols())] = v;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            let missing = index_word(d, memory, i);
            let key: String = missing.iter().map(|s| s.to_string()).collect();
            return Err(QError::InvalidInput(format!("missing named value {key:?}")));
        }
        Self::new(d, memory, values)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Context length `k = max(m - 1, 1)`.
    pub fn context_len(&self) -> usize {
        context_len(self.memory)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value on the cylinder given by the first `m` symbols of `symbols`.
    pub fn eval_symbols(&self, symbols: &[u8]) -> Result<f64> {
        if symbols.len() < self.memory {
            return Err(QError::InvalidInput(format!(
                "word of length {} shorter than memory {}",
                symbols.len(),
                self.memory
            )));
        }
        Ok(self.values[word_index(self.d, &symbols[..self.memory])])
    }

    pub fn eval(&self, w: &Word) -> Result<f64> {
        self.eval_symbols(w.symbols())
    }

    /// The same function viewed as a table over longer words.
    pub fn with_memory(&self, memory: usize) -> Result<Self> {
        if memory < self.memory {
            return Err(QError::InvalidInput(format!(
                "cannot shorten memory {} to {memory}",
                self.memory
            )));
        }
        let extra = self.d.pow((memory - self.memory) as u32);
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat(v).take(extra))
            .collect();
        Self::new(self.d, memory, values)
    }

    /// Entrywise transform.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.d, self.memory, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two potentials on a common memory.
    pub fn zip_with(&self, other: &Potential, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.d != other.d {
            return Err(QError::InvalidInput("alphabet sizes differ".into()));
        }
        let m = self.memory.max(other.memory);
        let a = self.with_memory(m)?;
        let b = other.with_memory(m)?;
        Self::new(
            self.d,
            m,
            a.values.iter().zip(&b.values).map(|(&x, &y)| f(x, y)).collect(),
        )
    }

    pub fn add(&self, other: &Potential) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Potential, s: f64) -> Result<Self> {
        self.zip_with(other, |x, y| x + s * y)
    }

    /// The coboundary `f∘σ - f` of a table `f` over words of length `len(f)`.
    pub fn coboundary(f: &Potential) -> Result<Self> {
        let m = f.memory + 1;
        let n = f.d.pow(m as u32);
        let stride = f.d.pow(f.memory as u32);
        let values = (0..n)
            .map(|i| f.values[i % stride] - f.values[i / f.d])
            .collect();
        Self::new(f.d, m, values)
    }

    /// Lipschitz constant bound `(max - min)·2^{m-1}` for the metric `2^{-k}`.
    pub fn lipschitz_bound(&self) -> f64 {
        (self.max() - self.min()) * 2f64.powi(self.memory as i32 - 1)
    }

    /// Birkhoff sum `S_n A(w·tail)` with `n = len(w)`.
    pub fn birkhoff_sum(&self, w: &Word, tail: &Word) -> Result<f64> {
        if tail.len() + 1 < self.memory {
            return Err(QError::InvalidInput(format!(
                "tail of length {} too short for memory {}",
                tail.len(),
                self.memory
            )));
        }
        if w.is_empty() {
            return Ok(0.0);
        }
        let full = w.concat(tail);
        let s = full.symbols();
        let m = self.memory;
        let mut idx = word_index(self.d, &s[..m]);
        let modulus = self.d.pow(m as u32 - 1);
        let mut sum = 0.0;
        for j in 0..w.len() {
            sum += self.values[idx];
            if j + 1 < w.len() {
                idx = (idx % modulus) * self.d + (s[j + m] as usize - 1);
            }
        }
        Ok(sum)
    }

    /// Birkhoff sum by evaluating every shifted word separately.
    pub fn birkhoff_sum_naive(&self, w: &Word, tail: &Word) -> Result<f64> {
        let full = w.concat(tail);
        (0..w.len()).map(|j| self.eval(&full.shifted(j))).sum()
    }
}

/// Distance `2^{-k}` where `k` is the first (0-based) coordinate at which the words differ.
pub fn distance(x: &[u8], y: &[u8]) -> f64 {
    match x.iter().zip(y).position(|(a, b)| a != b) {
        Some(k) => 2f64.powi(-(k as i32)),
        None => 0.0,
    }
}

/// Iterator over all length-`n` words in lexicographic order.
#[derive(Debug, Clone)]
pub struct Preimages {
    d: usize,
    current: Vec<u8>,
    done: bool,
}

impl Iterator for Preimages {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let out = Word {
            d: self.d,
            symbols: self.current.clone(),
        };
        let mut i = self.current.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if (self.current[i] as usize) < self.d {
                self.current[i] += 1;
                break;
            }
            self.current[i] = 1;
        }
        Some(out)
    }
}

/// All `d^n` words `w` with `σ^n(w·x) = x`, in lexicographic order.
pub fn preimages(d: usize, n: usize) -> Preimages {
    Preimages {
        d,
        current: vec![1; n],
        done: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_branch_example() -> Potential {
        Potential::new(2, 2, vec![0.0, 2.0, 3.5, 0.0]).unwrap()
    }

    #[test]
    fn eval_by_table_index() {
        let a = two_branch_example();
        assert_eq!(a.eval(&Word::parse(2, "12").unwrap()).unwrap(), 2.0);
        assert_eq!(a.eval(&Word::parse(2, "2112").unwrap()).unwrap(), 3.5);
        assert!(a.eval(&Word::parse(2, "1").unwrap()).is_err());
    }

    #[test]
    fn constant_potential_everywhere() {
        let a = Potential::constant(3, 2, 0.7).unwrap();
        for w in preimages(3, 4) {
            assert_eq!(a.eval(&w).unwrap(), 0.7);
        }
    }

    #[test]
    fn birkhoff_counts_symbol_two() {
        let a = Potential::new(2, 1, vec![0.0, 1.0]).unwrap();
        let w = Word::parse(2, "12212").unwrap();
        for tail in ["", "1", "222"] {
            let t = Word::parse(2, tail).unwrap();
            assert_eq!(a.birkhoff_sum(&w, &t).unwrap(), 3.0);
        }
        let c = Potential::constant(2, 2, 1.5).unwrap();
        let t = Word::parse(2, "1").unwrap();
        assert_eq!(c.birkhoff_sum(&Word::parse(2, "12121").unwrap(), &t).unwrap(), 7.5);
    }

    #[test]
    fn birkhoff_requires_context() {
        let a = Potential::constant(2, 3, 1.0).unwrap();
        let w = Word::parse(2, "12").unwrap();
        assert!(a.birkhoff_sum(&w, &Word::parse(2, "1").unwrap()).is_err());
        assert!(a.birkhoff_sum(&w, &Word::parse(2, "11").unwrap()).is_ok());
    }

    #[test]
    fn preimage_enumeration() {
        let all: Vec<Word> = preimages(2, 0).collect();
        assert_eq!(all, vec![Word::empty(2)]);
        let words: Vec<String> = preimages(2, 3).map(|w| w.to_string()).collect();
        assert_eq!(
            words,
            ["111", "112", "121", "122", "211", "212", "221", "222"]
        );
    }

    #[test]
    fn memory_one_partition_function() {
        let a = Potential::new(3, 1, vec![0.2, -0.4, 1.1]).unwrap();
        let tail = Word::parse(3, "").unwrap();
        for n in 1..=6 {
            let s: f64 = preimages(3, n)
                .map(|w| a.birkhoff_sum(&w, &tail).unwrap().exp())
                .sum();
            let z: f64 = a.values().iter().map(|v| v.exp()).sum();
            assert!((s - z.powi(n as i32)).abs() <= 1e-12 * s);
        }
    }

    #[test]
    fn named_values() {
        let a = Potential::from_named([("11", 0.0), ("12", 2.0), ("21", 3.5), ("22", 0.0)]).unwrap();
        assert_eq!(a, two_branch_example());
        assert!(Potential::from_named([("11", 0.0), ("12", 2.0)]).is_err());
    }

    #[test]
    fn malformed_tables() {
        assert!(Potential::new(2, 2, vec![]).is_err());
        assert!(Potential::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Potential::new(2, 1, vec![1.0, f64::NAN]).is_err());
        assert!(Potential::new(1, 1, vec![1.0]).is_err());
        assert!(Word::new(2, vec![3]).is_err());
    }

    #[test]
    fn coboundary_is_f_shift_minus_f() {
        let f = Potential::new(2, 1, vec![0.3, -1.2]).unwrap();
        let g = Potential::coboundary(&f).unwrap();
        assert_eq!(g.memory(), 2);
        assert_eq!(g.eval(&Word::parse(2, "12").unwrap()).unwrap(), -1.2 - 0.3);
        assert_eq!(g.eval(&Word::parse(2, "21").unwrap()).unwrap(), 0.3 + 1.2);
        assert_eq!(g.eval(&Word::parse(2, "22").unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn memory_extension_preserves_values() {
        let a = two_branch_example();
        let b = a.with_memory(4).unwrap();
        for w in preimages(2, 4) {
            assert_eq!(a.eval(&w).unwrap(), b.eval(&w).unwrap());
        }
    }

    #[test]
    fn distance_has_diameter_one() {
        assert_eq!(distance(&[1, 2], &[2, 2]), 1.0);
        assert_eq!(distance(&[1, 2, 1], &[1, 2, 2]), 0.25);
        assert_eq!(distance(&[1, 2], &[1, 2]), 0.0);
    }
}
