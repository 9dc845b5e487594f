//! Words over the alphabet `{n in Z : n >= -1}` and their combinatorics.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Letter = i64;

/// Smallest admissible letter (the homogeneity degree of `d/dy`).
pub const MIN_LETTER: Letter = -1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("letter {0} is below -1")]
    BadLetter(Letter),
    #[error("operation needs a non-empty word")]
    Empty,
}

/// A finite sequence of letters, each `>= -1`.
///
/// Words order by length first, then lexicographically, so that sets and maps
/// keyed by words iterate deterministically.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Letter>", into = "Vec<Letter>")]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Result<Self, WordError> {
        if let Some(&bad) = letters.iter().find(|&&n| n < MIN_LETTER) {
            return Err(WordError::BadLetter(bad));
        }
        Ok(Word(letters))
    }

    /// Panicking constructor for literals in tests and fixtures.
    pub fn from_slice(letters: &[Letter]) -> Self {
        Word::new(letters.to_vec()).expect("letters must be >= -1")
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `n_1 + ... + n_r`.
    pub fn weight(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    /// The word without its first letter; empty for the empty word.
    pub fn tail(&self) -> Word {
        Word(self.0.iter().skip(1).copied().collect())
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }

    pub fn suffix_from(&self, start: usize) -> Word {
        Word(self.0[start..].to_vec())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// The word with `letter` prepended.
    pub fn prepend(&self, letter: Letter) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(letter);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// All `r + 1` deconcatenations `self = left · right`.
    pub fn splittings(&self) -> impl Iterator<Item = (Word, Word)> + '_ {
        (0..=self.len()).map(move |i| (self.prefix(i), self.suffix_from(i)))
    }
}

impl TryFrom<Vec<Letter>> for Word {
    type Error = WordError;
    fn try_from(v: Vec<Letter>) -> Result<Self, Self::Error> {
        Word::new(v)
    }
}

impl From<Word> for Vec<Letter> {
    fn from(w: Word) -> Self {
        w.0
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Number of order-preserving interleavings of `w1` and `w2` that spell `w`.
pub fn shuffle_coeff(w1: &Word, w2: &Word, w: &Word) -> u64 {
    let (a, b, c) = (w1.letters(), w2.letters(), w.letters());
    if a.len() + b.len() != c.len() {
        return 0;
    }
    // ways[i][j]: interleavings of a[..i] and b[..j] spelling c[..i+j].
    let mut ways = vec![vec![0u64; b.len() + 1]; a.len() + 1];
    ways[0][0] = 1;
    for i in 0..=a.len() {
        for j in 0..=b.len() {
            if i == 0 && j == 0 {
                continue;
            }
            let k = i + j - 1;
            let mut n = 0;
            if i > 0 && a[i - 1] == c[k] {
                n += ways[i - 1][j];
            }
            if j > 0 && b[j - 1] == c[k] {
                n += ways[i][j - 1];
            }
            ways[i][j] = n;
        }
    }
    ways[a.len()][b.len()]
}

/// The distinct words appearing in the shuffle of `w1` and `w2`, each with its
/// shuffle coefficient.
pub fn shuffles(w1: &Word, w2: &Word) -> BTreeMap<Word, u64> {
    fn go(a: &[Letter], b: &[Letter], acc: &mut Vec<Letter>, out: &mut BTreeSet<Word>) {
        if a.is_empty() && b.is_empty() {
            out.insert(Word(acc.clone()));
            return;
        }
        if let Some((&x, rest)) = a.split_first() {
            acc.push(x);
            go(rest, b, acc, out);
            acc.pop();
        }
        if let Some((&y, rest)) = b.split_first() {
            acc.push(y);
            go(a, rest, acc, out);
            acc.pop();
        }
    }
    let mut distinct = BTreeSet::new();
    go(w1.letters(), w2.letters(), &mut Vec::new(), &mut distinct);
    distinct
        .into_iter()
        .map(|w| {
            let c = shuffle_coeff(w1, w2, &w);
            (w, c)
        })
        .collect()
}

/// `beta_w = (n_1 + 1)(n_1 + n_2 + 1)...(n_1 + ... + n_{r-1} + 1)`, the scalar
/// with `B_w y = beta_w y^{|w| + 1}`.
pub fn beta(w: &Word) -> Result<BigInt, WordError> {
    if w.is_empty() {
        return Err(WordError::Empty);
    }
    let mut prefix = 0i64;
    let mut product = BigInt::from(1);
    for &n in &w.letters()[..w.len() - 1] {
        prefix += n;
        product *= prefix + 1;
        if prefix == -1 {
            return Ok(BigInt::from(0));
        }
    }
    Ok(product)
}

/// Calls `visit` on every word of length `len` over `support` (sorted, no
/// duplicates) whose weight is `target`.
fn for_each_word_of_weight(
    support: &[Letter],
    len: usize,
    target: i64,
    visit: &mut dyn FnMut(&[Letter]),
) {
    fn go(
        support: &[Letter],
        remaining: usize,
        target: i64,
        acc: &mut Vec<Letter>,
        visit: &mut dyn FnMut(&[Letter]),
    ) {
        if remaining == 0 {
            if target == 0 {
                visit(acc);
            }
            return;
        }
        let lo = support[0];
        let hi = support[support.len() - 1];
        for &n in support {
            let rest = target - n;
            let slots = remaining as i64 - 1;
            if rest < lo * slots || rest > hi * slots {
                continue;
            }
            acc.push(n);
            go(support, remaining - 1, rest, acc, visit);
            acc.pop();
        }
    }
    if support.is_empty() {
        return;
    }
    go(support, len, target, &mut Vec::with_capacity(len), visit);
}

fn normalized_support(support: &BTreeSet<Letter>) -> Vec<Letter> {
    support.iter().copied().filter(|&n| n >= MIN_LETTER).collect()
}

/// Non-empty words over `support` with weight `n - 1` and length at most
/// `2 * x_order`: the index set of the sum giving the `y^n` coefficient of the
/// normalisation at x-order `x_order`.
pub fn enumerate_words(n: i64, x_order: usize, support: &BTreeSet<Letter>) -> BTreeSet<Word> {
    let support = normalized_support(support);
    let mut out = BTreeSet::new();
    for len in 1..=2 * x_order {
        for_each_word_of_weight(&support, len, n - 1, &mut |w| {
            out.insert(Word(w.to_vec()));
        });
    }
    out
}

/// Size of [`enumerate_words`] without materialising the set.
pub fn count_words(n: i64, x_order: usize, support: &BTreeSet<Letter>) -> u128 {
    let support = normalized_support(support);
    if support.is_empty() {
        return 0;
    }
    let max_len = 2 * x_order;
    let lo = support[0].min(0);
    let hi = support[support.len() - 1].max(0);
    // counts[s - offset]: words of the current length with weight s.
    let offset = lo * max_len as i64;
    let width = ((hi - lo) * max_len as i64 + 1) as usize;
    let mut counts = vec![0u128; width];
    counts[(-offset) as usize] = 1;
    let mut total = 0u128;
    for _ in 0..max_len {
        let mut next = vec![0u128; width];
        for (idx, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &letter in &support {
                let j = idx as i64 + letter;
                if j >= 0 && (j as usize) < width {
                    next[j as usize] = next[j as usize].saturating_add(c);
                }
            }
        }
        counts = next;
        let idx = n - 1 - offset;
        if idx >= 0 && (idx as usize) < width {
            total = total.saturating_add(counts[idx as usize]);
        }
    }
    total
}

/// All words (over the full alphabet) with `weight + 2 * length <= delta`.
///
/// Since every letter is at least `-1`, each letter adds at least one to
/// `weight + 2 * length`, which keeps the set finite.
pub fn enumerate_bounded_weight(delta: i64) -> BTreeSet<Word> {
    fn go(budget: i64, acc: &mut Vec<Letter>, out: &mut BTreeSet<Word>) {
        out.insert(Word(acc.clone()));
        // letter n costs n + 2 >= 1
        for n in MIN_LETTER..=budget - 2 {
            acc.push(n);
            go(budget - (n + 2), acc, out);
            acc.pop();
        }
    }
    let mut out = BTreeSet::new();
    if delta >= 0 {
        go(delta, &mut Vec::new(), &mut out);
    }
    out
}

/// Every word of length `1..=max_len` over `support`, in canonical order.
pub fn all_words(support: &[Letter], max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut layer = vec![Word::empty()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * support.len());
        for w in &layer {
            for &n in support {
                let mut v = w.0.clone();
                v.push(n);
                next.push(Word(v));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(letters: &[Letter]) -> Word {
        Word::from_slice(letters)
    }

    /// Counts interleavings by enumerating every choice of positions for `w1`.
    fn shuffle_coeff_by_positions(w1: &Word, w2: &Word, target: &Word) -> u64 {
        let (r1, r) = (w1.len(), w1.len() + w2.len());
        if r != target.len() {
            return 0;
        }
        let mut count = 0;
        for mask in 0u32..(1 << r) {
            if mask.count_ones() as usize != r1 {
                continue;
            }
            let (mut i, mut j) = (0, 0);
            let mut spelled = Vec::with_capacity(r);
            for pos in 0..r {
                if mask & (1 << pos) != 0 {
                    spelled.push(w1.letters()[i]);
                    i += 1;
                } else {
                    spelled.push(w2.letters()[j]);
                    j += 1;
                }
            }
            if spelled == target.letters() {
                count += 1;
            }
        }
        count
    }

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn letters_are_checked() {
        assert_eq!(Word::new(vec![0, -2]), Err(WordError::BadLetter(-2)));
        assert!(serde_json::from_str::<Word>("[1, -3]").is_err());
        assert_eq!(serde_json::from_str::<Word>("[1, -1]").unwrap(), w(&[1, -1]));
    }

    #[test]
    fn weights() {
        assert_eq!(Word::empty().weight(), 0);
        assert_eq!(w(&[-1, 2]).weight(), 1);
        assert_eq!(w(&[-1, -1, -1]).weight(), -3);
    }

    #[test]
    fn canonical_order_is_length_then_lex() {
        let mut v = vec![w(&[0, 0]), w(&[5]), Word::empty(), w(&[-1, 3]), w(&[-1])];
        v.sort();
        assert_eq!(v, vec![Word::empty(), w(&[-1]), w(&[5]), w(&[-1, 3]), w(&[0, 0])]);
    }

    #[test]
    fn shuffle_examples() {
        assert_eq!(shuffle_coeff(&w(&[3]), &w(&[7]), &w(&[3, 7])), 1);
        assert_eq!(shuffle_coeff(&w(&[1]), &w(&[1]), &w(&[1, 1])), 2);
        assert_eq!(shuffle_coeff(&w(&[1, 2]), &w(&[3]), &w(&[1, 3, 2])), 1);
        assert_eq!(shuffle_coeff(&w(&[1, 2]), &w(&[3]), &w(&[1, 3])), 0);
        assert_eq!(shuffle_coeff(&w(&[1, 2]), &w(&[3]), &w(&[2, 3, 1])), 0);
    }

    #[test]
    fn shuffle_dp_matches_position_enumeration() {
        let letters = [-1, 0, 1];
        let words: Vec<Word> = std::iter::once(Word::empty())
            .chain(all_words(&letters, 3))
            .collect();
        for a in &words {
            for b in &words {
                let mut total = 0;
                for (target, c) in shuffles(a, b) {
                    assert_eq!(c, shuffle_coeff_by_positions(a, b, &target));
                    assert_eq!(c, shuffle_coeff(b, a, &target), "symmetry");
                    total += c;
                }
                let n = (a.len() + b.len()) as u64;
                assert_eq!(total, binomial(n, a.len() as u64), "{a} {b}");
            }
        }
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta(&w(&[5])).unwrap(), BigInt::from(1));
        assert_eq!(beta(&w(&[-1, -1])).unwrap(), BigInt::from(0));
        assert_eq!(beta(&w(&[1, 1])).unwrap(), BigInt::from(2));
        assert_eq!(beta(&w(&[2, 0, 1])).unwrap(), BigInt::from(9));
        assert_eq!(beta(&Word::empty()), Err(WordError::Empty));
    }

    #[test]
    fn beta_vanishes_below_weight_minus_one() {
        for word in all_words(&[-1, 0, 1], 5) {
            if word.weight() <= -2 {
                assert_eq!(beta(&word).unwrap(), BigInt::from(0), "{word}");
            }
        }
    }

    #[test]
    fn enumerate_words_examples() {
        let s = |v: &[Letter]| v.iter().copied().collect::<BTreeSet<_>>();
        assert_eq!(
            enumerate_words(0, 5, &s(&[-1])),
            [w(&[-1])].into_iter().collect()
        );
        assert_eq!(
            enumerate_words(0, 1, &s(&[-1, 0, 1])),
            [w(&[-1]), w(&[0, -1]), w(&[-1, 0])].into_iter().collect()
        );
        assert!(enumerate_words(1, 4, &s(&[])).is_empty());
    }

    #[test]
    fn word_count_matches_enumeration() {
        let support: BTreeSet<Letter> = [-1, 0, 1, 2].into_iter().collect();
        for n in 0..4 {
            for k in 0..4 {
                let listed = enumerate_words(n, k, &support);
                assert_eq!(count_words(n, k, &support), listed.len() as u128);
                for word in &listed {
                    assert_eq!(word.weight(), n - 1);
                    assert!(!word.is_empty() && word.len() <= 2 * k);
                }
            }
        }
    }

    #[test]
    fn bounded_weight_examples() {
        assert_eq!(
            enumerate_bounded_weight(0),
            [Word::empty()].into_iter().collect()
        );
        assert_eq!(
            enumerate_bounded_weight(2),
            [Word::empty(), w(&[-1]), w(&[0]), w(&[-1, -1])].into_iter().collect()
        );
        assert!(enumerate_bounded_weight(-1).is_empty());
    }

    #[test]
    fn bounded_weight_matches_brute_force() {
        for delta in 0..=8i64 {
            let mut brute = BTreeSet::new();
            for r in 0..=delta as usize {
                // other letters sum to at least -(r - 1)
                let top = delta - r as i64 - 1;
                let letters: Vec<Letter> = (MIN_LETTER..=top.max(MIN_LETTER)).collect();
                let candidates = if r == 0 {
                    vec![Word::empty()]
                } else {
                    all_words(&letters, r).into_iter().filter(|w| w.len() == r).collect()
                };
                for c in candidates {
                    if c.weight() + 2 * c.len() as i64 <= delta {
                        brute.insert(c);
                    }
                }
            }
            assert_eq!(enumerate_bounded_weight(delta), brute, "delta={delta}");
        }
    }

    #[test]
    fn splittings_of_a_pair() {
        let parts: Vec<_> = w(&[4, 5]).splittings().collect();
        assert_eq!(
            parts,
            vec![
                (Word::empty(), w(&[4, 5])),
                (w(&[4]), w(&[5])),
                (w(&[4, 5]), Word::empty())
            ]
        );
    }
}
