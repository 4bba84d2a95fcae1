//! Locally constant functions on a subshift: potentials and observables of
//! finite range, their Birkhoff sums, and higher-block recoding down to
//! range <= 2 so that transfer operators become finite matrices.
//!
//! A function of range r depends only on the first r symbols of a one-sided
//! sequence, so it is fully described by a table over admissible r-words.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sft::{Sft, Symbol, Word};

/// Cap on the recoded block alphabet.
pub const BLOCK_ALPHABET_CAP: usize = 4096;

/// A real-valued function on the shift space depending only on the first
/// `range` symbols, given by a total table over admissible `range`-words.
#[derive(Debug, Clone, PartialEq)]
pub struct LocallyConstantFn {
    range: usize,
    alphabet_size: usize,
    values: HashMap<Vec<Symbol>, f64>,
    /// var[k] = sup |f(x) - f(y)| over pairs agreeing on the first k symbols,
    /// for k < range; zero from `range` on.
    var: Vec<f64>,
}

impl LocallyConstantFn {
    /// Build from a total table over admissible `range`-words (0-based
    /// symbols). Rejects missing, extra, or inadmissible entries.
    pub fn new(sft: &Sft, range: usize, values: HashMap<Vec<Symbol>, f64>) -> Result<Self> {
        if range == 0 {
            return Err(Error::Validation("function range must be >= 1".into()));
        }
        let words = sft.enumerate_words(range)?;
        for w in &words {
            if !values.contains_key(w.symbols()) {
                return Err(Error::Validation(format!(
                    "function table is missing admissible word {:?}",
                    w.key(sft.alphabet_size())
                )));
            }
        }
        if values.len() != words.len() {
            let extra = values
                .keys()
                .find(|k| k.len() != range || !sft.is_admissible(k))
                .expect("length mismatch implies an invalid key");
            return Err(Error::Validation(format!(
                "function table has an entry for the invalid word {:?}",
                Word::new(extra.clone()).key(sft.alphabet_size())
            )));
        }
        let var = variation_profile(&words, range, &values);
        Ok(LocallyConstantFn {
            range,
            alphabet_size: sft.alphabet_size(),
            values,
            var,
        })
    }

    /// Build from 1-based word keys as used in the JSON input format.
    pub fn from_word_table(
        sft: &Sft,
        range: usize,
        table: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self> {
        let mut values = HashMap::new();
        for (key, v) in table {
            let w = Word::parse_key(&key, sft.alphabet_size())?;
            if values.insert(w.symbols().to_vec(), v).is_some() {
                return Err(Error::Validation(format!(
                    "function table repeats the word {key:?}"
                )));
            }
        }
        LocallyConstantFn::new(sft, range, values)
    }

    /// The constant function c (range 1).
    pub fn constant(sft: &Sft, c: f64) -> Self {
        let values = (0..sft.alphabet_size() as Symbol)
            .map(|s| (vec![s], c))
            .collect();
        LocallyConstantFn::new(sft, 1, values).expect("constant table is total")
    }

    /// Indicator of the 0-based symbol `sym` in coordinate 0 (range 1).
    pub fn symbol_indicator(sft: &Sft, sym: Symbol) -> Self {
        let values = (0..sft.alphabet_size() as Symbol)
            .map(|s| (vec![s], if s == sym { 1.0 } else { 0.0 }))
            .collect();
        LocallyConstantFn::new(sft, 1, values).expect("indicator table is total")
    }

    pub fn range(&self) -> usize {
        self.range
    }

    /// var_k: oscillation over cylinders of depth k; zero for k >= range.
    pub fn variation(&self, k: usize) -> f64 {
        self.var.get(k).copied().unwrap_or(0.0)
    }

    pub fn variation_profile(&self) -> &[f64] {
        &self.var
    }

    /// Value determined by the first `range` symbols of `w`.
    pub fn evaluate(&self, w: &Word) -> Result<f64> {
        self.value_of(w.symbols())
    }

    /// Same as `evaluate` on a raw symbol slice.
    pub fn value_of(&self, symbols: &[Symbol]) -> Result<f64> {
        if symbols.len() < self.range {
            return Err(Error::WordTooShort {
                len: symbols.len(),
                needed: self.range,
            });
        }
        self.values
            .get(&symbols[..self.range])
            .copied()
            .ok_or_else(|| {
                Error::Validation(format!(
                    "word {:?} is not admissible for this function",
                    Word::new(symbols[..self.range].to_vec()).key(self.alphabet_size)
                ))
            })
    }

    /// Birkhoff sum S_n f(w) = sum_{k=0}^{n-1} f(shift^k w).
    pub fn birkhoff_sum(&self, w: &Word, n: usize) -> Result<f64> {
        let needed = n + self.range - 1;
        if w.len() < needed {
            return Err(Error::WordTooShort {
                len: w.len(),
                needed,
            });
        }
        let mut total = 0.0;
        for k in 0..n {
            total += self.value_of(&w.symbols()[k..])?;
        }
        Ok(total)
    }

    /// Iterate (word-symbols, value) pairs in unspecified order.
    pub fn entries(&self) -> impl Iterator<Item = (&[Symbol], f64)> {
        self.values.iter().map(|(k, &v)| (k.as_slice(), v))
    }
}

fn variation_profile(
    words: &[Word],
    range: usize,
    values: &HashMap<Vec<Symbol>, f64>,
) -> Vec<f64> {
    let mut var = vec![0.0; range];
    for (k, slot) in var.iter_mut().enumerate() {
        let mut groups: HashMap<&[Symbol], (f64, f64)> = HashMap::new();
        for w in words {
            let v = values[w.symbols()];
            let entry = groups
                .entry(&w.symbols()[..k])
                .or_insert((f64::INFINITY, f64::NEG_INFINITY));
            entry.0 = entry.0.min(v);
            entry.1 = entry.1.max(v);
        }
        *slot = groups
            .values()
            .map(|&(lo, hi)| hi - lo)
            .fold(0.0, f64::max);
    }
    var
}

/// A higher-block presentation of a base SFT: block symbols are the
/// admissible (M-1)-words of the base, where M is the common recoding range.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    base: Sft,
    block_sft: Sft,
    /// Decode table: block id -> base word of length `block_len`.
    block_words: Vec<Word>,
    /// Encode table: base (M-1)-word -> block id.
    index: HashMap<Vec<Symbol>, usize>,
    block_len: usize,
}

impl BlockSystem {
    pub fn base(&self) -> &Sft {
        &self.base
    }

    pub fn block_sft(&self) -> &Sft {
        &self.block_sft
    }

    pub fn block_count(&self) -> usize {
        self.block_words.len()
    }

    /// Length of the base word a single block stands for (M-1).
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn block_word(&self, id: usize) -> &Word {
        &self.block_words[id]
    }

    pub fn block_id(&self, base_word: &[Symbol]) -> Option<usize> {
        self.index.get(base_word).copied()
    }

    /// Sliding-window encoding: a base word of length L >= M-1 becomes a
    /// block word of length L - M + 2.
    pub fn encode(&self, base_word: &[Symbol]) -> Result<Vec<usize>> {
        if base_word.len() < self.block_len {
            return Err(Error::WordTooShort {
                len: base_word.len(),
                needed: self.block_len,
            });
        }
        base_word
            .windows(self.block_len)
            .map(|w| {
                self.index.get(w).copied().ok_or_else(|| {
                    Error::Validation(format!(
                        "word contains the inadmissible factor {:?}",
                        Word::new(w.to_vec()).key(self.base.alphabet_size())
                    ))
                })
            })
            .collect()
    }

    /// Inverse of `encode`: first block in full, then the trailing symbol of
    /// each further block.
    pub fn decode(&self, blocks: &[usize]) -> Word {
        let mut symbols = Vec::with_capacity(self.block_len + blocks.len().saturating_sub(1));
        if let Some((&first, rest)) = blocks.split_first() {
            symbols.extend_from_slice(self.block_words[first].symbols());
            for &b in rest {
                symbols.push(*self.block_words[b].symbols().last().unwrap());
            }
        }
        Word::new(symbols)
    }

    /// Blocks whose base word starts with `prefix` (prefix shorter than a
    /// block); used to express short cylinders as unions of block cylinders.
    pub fn blocks_with_prefix(&self, prefix: &[Symbol]) -> Vec<usize> {
        (0..self.block_count())
            .filter(|&id| self.block_words[id].symbols().starts_with(prefix))
            .collect()
    }
}

/// Recode a family of functions on a shared base SFT to a common block
/// system on which every function has range <= 2. Birkhoff sums are
/// preserved exactly under `encode`.
pub fn recode_to_blocks(
    sft: &Sft,
    fns: &[LocallyConstantFn],
) -> Result<(BlockSystem, Vec<LocallyConstantFn>)> {
    let max_range = fns.iter().map(|f| f.range()).max().unwrap_or(1);
    let m = max_range.max(2);
    let block_len = m - 1;
    let count = sft.word_count(block_len);
    if count > BLOCK_ALPHABET_CAP as u128 {
        return Err(Error::BlockAlphabetTooLarge {
            count: count as usize,
            cap: BLOCK_ALPHABET_CAP,
        });
    }
    let block_words = sft.enumerate_words(block_len)?;
    let index: HashMap<Vec<Symbol>, usize> = block_words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.symbols().to_vec(), i))
        .collect();
    let nb = block_words.len();
    let mut transitions = vec![0u8; nb * nb];
    for (u, uw) in block_words.iter().enumerate() {
        for (v, vw) in block_words.iter().enumerate() {
            let us = uw.symbols();
            let vs = vw.symbols();
            if us[1..] == vs[..block_len - 1] && sft.is_allowed(us[block_len - 1], vs[block_len - 1])
            {
                transitions[u * nb + v] = 1;
            }
        }
    }
    let block_sft = Sft::new(nb, transitions)?;
    let system = BlockSystem {
        base: sft.clone(),
        block_sft,
        block_words,
        index,
        block_len,
    };
    let recoded = fns
        .iter()
        .map(|f| recode_fn(&system, f))
        .collect::<Result<Vec<_>>>()?;
    Ok((system, recoded))
}

fn recode_fn(system: &BlockSystem, f: &LocallyConstantFn) -> Result<LocallyConstantFn> {
    let new_range = if f.range() <= system.block_len() { 1 } else { 2 };
    let block_words = system.block_sft().enumerate_words(new_range)?;
    let mut values = HashMap::with_capacity(block_words.len());
    for bw in &block_words {
        let ids: Vec<usize> = bw.symbols().iter().map(|&s| s as usize).collect();
        let base_word = system.decode(&ids);
        values.insert(bw.symbols().to_vec(), f.value_of(base_word.symbols())?);
    }
    LocallyConstantFn::new(system.block_sft(), new_range, values)
}

/// Dense, index-aligned form of a range <= 2 function on a block system,
/// for the numerical inner loops.
///
/// `PerEdge` rows are parallel to `Sft::successors(u)` in increasing order
/// of the successor symbol.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockFn {
    PerBlock(Vec<f64>),
    PerEdge(Vec<Vec<f64>>),
}

impl BlockFn {
    pub fn new(block_sft: &Sft, f: &LocallyConstantFn) -> Result<BlockFn> {
        let n = block_sft.alphabet_size();
        match f.range() {
            1 => {
                let vals = (0..n as Symbol)
                    .map(|u| f.value_of(&[u]))
                    .collect::<Result<Vec<_>>>()?;
                Ok(BlockFn::PerBlock(vals))
            }
            2 => {
                let rows = (0..n as Symbol)
                    .map(|u| {
                        block_sft
                            .successors(u)
                            .map(|v| f.value_of(&[u, v]))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(BlockFn::PerEdge(rows))
            }
            r => Err(Error::RangeTooLarge { range: r, max: 2 }),
        }
    }

    /// Value on the edge from `u` to its `succ_idx`-th successor.
    pub fn value(&self, u: usize, succ_idx: usize) -> f64 {
        match self {
            BlockFn::PerBlock(v) => v[u],
            BlockFn::PerEdge(rows) => rows[u][succ_idx],
        }
    }

    pub fn is_per_block(&self) -> bool {
        matches!(self, BlockFn::PerBlock(_))
    }

    /// Pointwise combination self + t * other, staying per-block when both
    /// operands are, lifting to edge alignment otherwise.
    pub fn add_scaled(&self, block_sft: &Sft, t: f64, other: &BlockFn) -> BlockFn {
        match (self, other) {
            (BlockFn::PerBlock(a), BlockFn::PerBlock(b)) => {
                BlockFn::PerBlock(a.iter().zip(b).map(|(&x, &y)| x + t * y).collect())
            }
            _ => {
                let rows = (0..block_sft.alphabet_size())
                    .map(|u| {
                        (0..block_sft.successors(u as Symbol).count())
                            .map(|k| self.value(u, k) + t * other.value(u, k))
                            .collect()
                    })
                    .collect();
                BlockFn::PerEdge(rows)
            }
        }
    }

    pub fn per_block(&self) -> Option<&[f64]> {
        match self {
            BlockFn::PerBlock(v) => Some(v),
            BlockFn::PerEdge(_) => None,
        }
    }
}
