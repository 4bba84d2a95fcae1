//! Subshifts of finite type: transition matrices, admissible words,
//! periodic orbits, mixing time, and topological entropy.
//!
//! Symbols are stored 0-based throughout the crate and rendered 1-based in
//! all external formats (word keys, reports), matching the convention that an
//! alphabet of size N is written {1..N}.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::power;

/// 0-based symbol index. Block alphabets can reach 4096, hence u16.
pub type Symbol = u16;

/// Default cap on materialised word enumerations.
pub const WORD_ENUMERATION_CAP: u128 = 10_000_000;
/// Default cap on periodic-point enumerations (counted via trace(A^p)).
pub const PERIODIC_POINT_CAP: u128 = 10_000_000;

/// A finite admissible word over an SFT alphabet.
///
/// Stores 0-based symbol indices; [`Word::key`] renders the 1-based digit
/// string used by the JSON/CSV formats ("121" for N <= 9, "1-2-1" above).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<Symbol>,
}

impl Word {
    /// Wrap raw 0-based symbols without admissibility checking.
    /// Use [`Sft::word`] when validation against a system is wanted.
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word { symbols }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// 1-based digit key: "112" for alphabets up to 9 symbols, "1-1-2" above.
    pub fn key(&self, alphabet_size: usize) -> String {
        let sep = if alphabet_size <= 9 { "" } else { "-" };
        self.symbols
            .iter()
            .map(|&s| (s as usize + 1).to_string())
            .collect::<Vec<_>>()
            .join(sep)
    }

    /// Parse a 1-based digit key back into a word.
    pub fn parse_key(key: &str, alphabet_size: usize) -> Result<Word> {
        let parts: Vec<String> = if alphabet_size <= 9 {
            key.chars().map(|c| c.to_string()).collect()
        } else {
            key.split('-').map(|s| s.to_string()).collect()
        };
        let mut symbols = Vec::with_capacity(parts.len());
        for p in &parts {
            let v: usize = p
                .parse()
                .map_err(|_| Error::Validation(format!("bad symbol {p:?} in word key {key:?}")))?;
            if v < 1 || v > alphabet_size {
                return Err(Error::Validation(format!(
                    "symbol {v} in word key {key:?} outside 1..={alphabet_size}"
                )));
            }
            symbols.push((v - 1) as Symbol);
        }
        if symbols.is_empty() {
            return Err(Error::Validation(format!("empty word key {key:?}")));
        }
        Ok(Word { symbols })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Display uses the compact 1-based form; unambiguous for N <= 9.
        for &s in &self.symbols {
            write!(f, "{}", s as usize + 1)?;
        }
        Ok(())
    }
}

/// A periodic orbit, stored as the lexicographically minimal rotation of its
/// defining cycle word (the canonical representative).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeriodicOrbit {
    /// Canonical cycle word; `word.len() == period`.
    #[serde(serialize_with = "serialize_word_display")]
    pub word: Word,
    pub period: usize,
}

fn serialize_word_display<S: serde::Serializer>(w: &Word, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

/// A subshift of finite type: alphabet {1..N} with a 0/1 transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Sft {
    n: usize,
    /// Row-major 0/1 entries, `transitions[a * n + b]` allows a -> b.
    transitions: Vec<u8>,
    /// Least M with A^M strictly positive, if one exists within the N^2 bound.
    mixing_time: Option<usize>,
    /// log of the Perron root of A.
    entropy: f64,
}

impl Sft {
    /// Validate a transition matrix and precompute mixing time and entropy.
    ///
    /// Every row and column must contain a 1 (no stranded symbols). The
    /// mixing-time search runs up to N^2 (a cover of the Wielandt bound
    /// (N-1)^2 + 1); absence of a primitivising power is flagged by
    /// `mixing_time() == None`, not an error.
    pub fn new(alphabet_size: usize, transitions: Vec<u8>) -> Result<Sft> {
        if alphabet_size == 0 {
            return Err(Error::Validation("alphabet_size must be positive".into()));
        }
        if transitions.len() != alphabet_size * alphabet_size {
            return Err(Error::Validation(format!(
                "transition matrix has {} entries, expected {}",
                transitions.len(),
                alphabet_size * alphabet_size
            )));
        }
        if let Some(bad) = transitions.iter().find(|&&t| t > 1) {
            return Err(Error::Validation(format!(
                "transition entries must be 0 or 1, found {bad}"
            )));
        }
        let n = alphabet_size;
        for a in 0..n {
            if (0..n).all(|b| transitions[a * n + b] == 0) {
                return Err(Error::RowOrColumnEmpty {
                    index: a,
                    symbol: a + 1,
                });
            }
        }
        for b in 0..n {
            if (0..n).all(|a| transitions[a * n + b] == 0) {
                return Err(Error::RowOrColumnEmpty {
                    index: b,
                    symbol: b + 1,
                });
            }
        }
        let mixing_time = mixing_time(n, &transitions);
        let rows: power::SparseRows = (0..n)
            .map(|a| {
                (0..n)
                    .filter(|&b| transitions[a * n + b] == 1)
                    .map(|b| (b, 1.0))
                    .collect()
            })
            .collect();
        let radius = power::spectral_radius(n, &rows, 1e-12, 100_000);
        let entropy = radius.lambda.ln().max(0.0);
        Ok(Sft {
            n,
            transitions,
            mixing_time,
            entropy,
        })
    }

    /// Full shift on `n` symbols (all transitions allowed).
    pub fn full_shift(n: usize) -> Sft {
        Sft::new(n, vec![1; n * n]).expect("full shift is always valid")
    }

    /// The golden-mean shift: forbid the word 22 on two symbols.
    pub fn golden_mean() -> Sft {
        Sft::new(2, vec![1, 1, 1, 0]).expect("golden mean matrix is valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.n
    }

    pub fn is_allowed(&self, a: Symbol, b: Symbol) -> bool {
        self.transitions[a as usize * self.n + b as usize] == 1
    }

    /// Row-major 0/1 entries.
    pub fn transitions(&self) -> &[u8] {
        &self.transitions
    }

    /// Least M with A^M all-positive, if within the N^2 search bound.
    pub fn mixing_time(&self) -> Option<usize> {
        self.mixing_time
    }

    pub fn is_mixing(&self) -> bool {
        self.mixing_time.is_some()
    }

    /// Topological entropy log(rho(A)).
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    /// Admissible successors of `a` in increasing order.
    pub fn successors(&self, a: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        let n = self.n;
        let base = a as usize * n;
        (0..n)
            .filter(move |&b| self.transitions[base + b] == 1)
            .map(|b| b as Symbol)
    }

    /// Materialised successor lists, increasing order, indexed by source.
    pub fn successor_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|a| self.successors(a as Symbol).map(|b| b as usize).collect())
            .collect()
    }

    /// Validate and wrap a 0-based symbol sequence as an admissible word.
    pub fn word(&self, symbols: Vec<Symbol>) -> Result<Word> {
        for &s in &symbols {
            if s as usize >= self.n {
                return Err(Error::Validation(format!(
                    "symbol index {s} outside alphabet of size {}",
                    self.n
                )));
            }
        }
        for pair in symbols.windows(2) {
            if !self.is_allowed(pair[0], pair[1]) {
                return Err(Error::Validation(format!(
                    "forbidden transition {} -> {}",
                    pair[0] as usize + 1,
                    pair[1] as usize + 1
                )));
            }
        }
        Ok(Word::new(symbols))
    }

    pub fn is_admissible(&self, symbols: &[Symbol]) -> bool {
        symbols.iter().all(|&s| (s as usize) < self.n)
            && symbols.windows(2).all(|p| self.is_allowed(p[0], p[1]))
    }

    /// Number of admissible words of length `n`, exactly, via the count
    /// recursion c_{m+1}[b] = sum_a A[a][b] c_m[a].
    pub fn word_count(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let mut counts = vec![1u128; self.n];
        for _ in 1..n {
            let mut next = vec![0u128; self.n];
            for a in 0..self.n {
                for b in 0..self.n {
                    if self.transitions[a * self.n + b] == 1 {
                        next[b] += counts[a];
                    }
                }
            }
            counts = next;
        }
        counts.iter().sum()
    }

    /// All admissible words of length `n` in lexicographic order.
    pub fn enumerate_words(&self, n: usize) -> Result<Vec<Word>> {
        self.enumerate_words_capped(n, WORD_ENUMERATION_CAP)
    }

    pub fn enumerate_words_capped(&self, n: usize, cap: u128) -> Result<Vec<Word>> {
        if n == 0 {
            return Err(Error::Validation("word length must be >= 1".into()));
        }
        let count = self.word_count(n);
        if count > cap {
            return Err(Error::LengthTooLarge { n, count, cap });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut stack: Vec<Symbol> = Vec::with_capacity(n);
        // Iterative lexicographic DFS.
        fn rec(sft: &Sft, n: usize, stack: &mut Vec<Symbol>, out: &mut Vec<Word>) {
            if stack.len() == n {
                out.push(Word::new(stack.clone()));
                return;
            }
            if stack.is_empty() {
                for s in 0..sft.alphabet_size() as Symbol {
                    stack.push(s);
                    rec(sft, n, stack, out);
                    stack.pop();
                }
            } else {
                let last = *stack.last().unwrap();
                for s in sft.successors(last).collect::<Vec<_>>() {
                    stack.push(s);
                    rec(sft, n, stack, out);
                    stack.pop();
                }
            }
        }
        rec(self, n, &mut stack, &mut out);
        Ok(out)
    }

    /// Trace of A^p (number of periodic points of period dividing p).
    pub fn periodic_point_count(&self, p: usize) -> u128 {
        // Integer matrix power by repeated multiplication; sizes are small.
        let n = self.n;
        let mut m: Vec<u128> = self.transitions.iter().map(|&t| t as u128).collect();
        for _ in 1..p {
            let mut next = vec![0u128; n * n];
            for a in 0..n {
                for k in 0..n {
                    if m[a * n + k] == 0 {
                        continue;
                    }
                    let mak = m[a * n + k];
                    for b in 0..n {
                        if self.transitions[k * n + b] == 1 {
                            next[a * n + b] += mak;
                        }
                    }
                }
            }
            m = next;
        }
        (0..n).map(|a| m[a * n + a]).sum()
    }

    /// All canonical periodic orbits of period <= `max_period`.
    ///
    /// An orbit of period p is an admissible cycle word of length p that is
    /// primitive (not a power of a shorter cycle); the stored representative
    /// is the lexicographically minimal rotation.
    pub fn periodic_orbits(&self, max_period: usize) -> Result<Vec<PeriodicOrbit>> {
        self.periodic_orbits_capped(max_period, PERIODIC_POINT_CAP)
    }

    pub fn periodic_orbits_capped(
        &self,
        max_period: usize,
        cap: u128,
    ) -> Result<Vec<PeriodicOrbit>> {
        if max_period == 0 {
            return Err(Error::Validation("max_period must be >= 1".into()));
        }
        let total: u128 = (1..=max_period).map(|p| self.periodic_point_count(p)).sum();
        if total > cap {
            return Err(Error::PeriodTooLarge {
                max_period,
                count: total,
                cap,
            });
        }
        let mut orbits = Vec::new();
        for p in 1..=max_period {
            let mut stack: Vec<Symbol> = Vec::with_capacity(p);
            collect_cycles(self, p, &mut stack, &mut orbits);
        }
        Ok(orbits)
    }
}

/// DFS over admissible words of length p closing up cyclically; keeps only
/// primitive, rotation-minimal representatives.
fn collect_cycles(sft: &Sft, p: usize, stack: &mut Vec<Symbol>, out: &mut Vec<PeriodicOrbit>) {
    if stack.len() == p {
        let w = stack.as_slice();
        if sft.is_allowed(w[p - 1], w[0]) && is_primitive(w) && is_minimal_rotation(w) {
            out.push(PeriodicOrbit {
                word: Word::new(stack.clone()),
                period: p,
            });
        }
        return;
    }
    let candidates: Vec<Symbol> = if stack.is_empty() {
        (0..sft.alphabet_size() as Symbol).collect()
    } else {
        sft.successors(*stack.last().unwrap()).collect()
    };
    for s in candidates {
        stack.push(s);
        collect_cycles(sft, p, stack, out);
        stack.pop();
    }
}

fn is_primitive(w: &[Symbol]) -> bool {
    let p = w.len();
    for d in 1..p {
        if p % d == 0 && (0..p).all(|i| w[i] == w[i % d]) {
            return false;
        }
    }
    true
}

fn is_minimal_rotation(w: &[Symbol]) -> bool {
    let p = w.len();
    let rot_ge = |r: usize| (0..p).all(|i| w[(r + i) % p] >= w[i]) || {
        // lexicographic comparison: first differing position decides
        for i in 0..p {
            let (a, b) = (w[(r + i) % p], w[i]);
            if a != b {
                return a > b;
            }
        }
        true
    };
    (1..p).all(rot_ge)
}

/// Least M <= N^2 with A^M strictly positive, via bit-packed boolean powers.
fn mixing_time(n: usize, transitions: &[u8]) -> Option<usize> {
    let words = n.div_ceil(64);
    let pack = |get: &dyn Fn(usize, usize) -> bool| -> Vec<u64> {
        let mut rows = vec![0u64; n * words];
        for a in 0..n {
            for b in 0..n {
                if get(a, b) {
                    rows[a * words + b / 64] |= 1 << (b % 64);
                }
            }
        }
        rows
    };
    let a_rows = pack(&|a, b| transitions[a * n + b] == 1);
    let all_ones: Vec<u64> = (0..words)
        .map(|w| {
            let bits = if w == words - 1 && n % 64 != 0 {
                n % 64
            } else {
                64
            };
            if bits == 64 {
                !0u64
            } else {
                (1u64 << bits) - 1
            }
        })
        .collect();
    let full = |rows: &[u64]| -> bool {
        (0..n).all(|a| (0..words).all(|w| rows[a * words + w] == all_ones[w]))
    };
    let mut cur = a_rows.clone();
    for m in 1..=n * n {
        if full(&cur) {
            return Some(m);
        }
        // cur <- cur (bool*) A
        let mut next = vec![0u64; n * words];
        for a in 0..n {
            for k in 0..n {
                if cur[a * words + k / 64] >> (k % 64) & 1 == 1 {
                    for w in 0..words {
                        next[a * words + w] |= a_rows[k * words + w];
                    }
                }
            }
        }
        cur = next;
    }
    if full(&cur) {
        return Some(n * n);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fib(n: usize) -> u128 {
        let (mut a, mut b) = (1u128, 1u128);
        for _ in 0..n {
            let c = a + b;
            a = b;
            b = c;
        }
        a
    }

    #[test]
    fn golden_mean_basics() {
        let s = Sft::golden_mean();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert_eq!(s.mixing_time(), Some(2));
        assert!((s.entropy() - phi.ln()).abs() < 1e-12);
    }

    #[test]
    fn full_shift_basics() {
        let s = Sft::full_shift(2);
        assert_eq!(s.mixing_time(), Some(1));
        assert!((s.entropy() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn identity_matrix_not_mixing() {
        let s = Sft::new(2, vec![1, 0, 0, 1]).unwrap();
        assert_eq!(s.mixing_time(), None);
        assert!(!s.is_mixing());
        assert!(s.entropy().abs() < 1e-9);
    }

    #[test]
    fn stranded_symbol_rejected() {
        // symbol 2 has no successors
        let err = Sft::new(2, vec![1, 0, 0, 0]).unwrap_err();
        assert!(matches!(err, Error::RowOrColumnEmpty { symbol: 2, .. }));
        // symbol 2 has no predecessors
        let err = Sft::new(2, vec![1, 0, 1, 0]).unwrap_err();
        assert!(matches!(err, Error::RowOrColumnEmpty { symbol: 2, .. }));
    }

    #[test]
    fn non_binary_entries_rejected() {
        let err = Sft::new(2, vec![1, 2, 1, 0]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn golden_mean_word_enumeration() {
        let s = Sft::golden_mean();
        let w2 = s.enumerate_words(2).unwrap();
        let keys: Vec<String> = w2.iter().map(|w| w.key(2)).collect();
        assert_eq!(keys, ["11", "12", "21"]);
        assert_eq!(s.enumerate_words(5).unwrap().len(), 13);
        // counts follow the Fibonacci recurrence: count(n) = F(n+2)
        for n in 1..=15 {
            assert_eq!(s.word_count(n), fib(n + 1));
        }
    }

    #[test]
    fn full_shift_word_count() {
        let s = Sft::full_shift(2);
        assert_eq!(s.enumerate_words(3).unwrap().len(), 8);
    }

    #[test]
    fn enumeration_cap_errors() {
        let s = Sft::full_shift(2);
        let err = s.enumerate_words_capped(30, 1000).unwrap_err();
        assert!(matches!(err, Error::LengthTooLarge { .. }));
    }

    #[test]
    fn enumeration_lexicographic_and_extension_closed() {
        let s = Sft::golden_mean();
        let w5 = s.enumerate_words(5).unwrap();
        let mut sorted = w5.clone();
        sorted.sort();
        assert_eq!(w5, sorted);
        let w4: std::collections::HashSet<Vec<Symbol>> = s
            .enumerate_words(4)
            .unwrap()
            .into_iter()
            .map(|w| w.symbols().to_vec())
            .collect();
        for w in &w5 {
            assert!(w4.contains(&w.symbols()[..4].to_vec()));
        }
    }

    #[test]
    fn golden_mean_orbits() {
        let s = Sft::golden_mean();
        let o1 = s.periodic_orbits(1).unwrap();
        assert_eq!(o1.len(), 1); // only the fixed point (1): A[2][2] = 0
        assert_eq!(o1[0].word.to_string(), "1");
        let o2 = s.periodic_orbits(2).unwrap();
        assert_eq!(o2.len(), 2);
        assert_eq!(o2[1].word.to_string(), "12");
        assert_eq!(s.periodic_point_count(2), 3); // trace(A^2)
    }

    #[test]
    fn trace_formula_exhaustive() {
        // sum over orbits of period q | p of q equals trace(A^p)
        for sft in [Sft::golden_mean(), Sft::full_shift(3)] {
            let orbits = sft.periodic_orbits(8).unwrap();
            for p in 1..=8usize {
                let total: usize = orbits
                    .iter()
                    .filter(|o| p % o.period == 0)
                    .map(|o| o.period)
                    .sum();
                assert_eq!(total as u128, sft.periodic_point_count(p), "period {p}");
            }
        }
    }

    #[test]
    fn entropy_matches_word_growth() {
        let s = Sft::golden_mean();
        let n = 20;
        let growth = (s.word_count(n) as f64).ln() / n as f64;
        assert!((growth - s.entropy()).abs() < 1e-3 * 10.0_f64);
        // tighter: the defect is O(1/n), about log(prefactor)/n
        assert!((growth - s.entropy()).abs() < 0.05);
    }

    #[test]
    fn word_keys_roundtrip() {
        let w = Word::new(vec![0, 10, 3]);
        let key = w.key(12);
        assert_eq!(key, "1-11-4");
        assert_eq!(Word::parse_key(&key, 12).unwrap(), w);
        let w = Word::new(vec![0, 1, 0]);
        assert_eq!(w.key(2), "121");
        assert_eq!(Word::parse_key("121", 2).unwrap(), w);
        assert!(Word::parse_key("913", 2).is_err());
        assert!(Word::parse_key("", 2).is_err());
    }

    #[test]
    fn admissibility_checks() {
        let s = Sft::golden_mean();
        assert!(s.word(vec![0, 1, 0, 0]).is_ok());
        assert!(s.word(vec![1, 1]).is_err());
        assert!(s.word(vec![2]).is_err());
        assert!(s.is_admissible(&[0, 1, 0]));
        assert!(!s.is_admissible(&[1, 1]));
    }
}
