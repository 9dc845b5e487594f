//! Moulds: maps from words to series in `x`, with their algebra.
//!
//! A [`Mould`] is a lazily evaluated rule plus a memo table. Values are
//! truncated at the mould's x-order. Algebra operations build new moulds that
//! reference their operands, so evaluating a product on a word only touches
//! the words it needs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use thiserror::Error;

use crate::saddlenode::SaddleNodeField;
use crate::scalar::Scalar;
use crate::series::{SeriesError, TruncatedSeries};
use crate::words::{shuffles, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MouldError {
    #[error("homogeneous equation for word {word} is ill-posed: {source}")]
    IllPosedWord { word: Word, source: SeriesError },
    #[error("mould is not invertible: its value on the empty word has zero constant term")]
    NonInvertible,
    #[error("value on {word} is known to x^{got} only, x^{wanted} needed")]
    Precision { word: Word, got: usize, wanted: usize },
}

/// Where a mould comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// The normalising mould of a field.
    Solver,
    /// Given directly (tables, constants, `J_a`).
    Constructed,
    /// Built from other moulds by an algebra operation.
    Derived,
}

enum Rule {
    /// Listed values, zero elsewhere.
    Table(BTreeMap<Word, TruncatedSeries>),
    /// The same value on every word.
    Constant(TruncatedSeries),
    Product(Mould, Mould),
    Sum(Mould, Mould),
    Inverse { base: Mould, empty_inv: TruncatedSeries },
    SymmetralInverse(Mould),
    Nabla(Mould),
    EulerDerivation(Mould),
    Override { base: Mould, word: Word, value: TruncatedSeries },
    LetterMould(Arc<SaddleNodeField>),
    Solver(Arc<SaddleNodeField>),
}

struct Inner {
    x_order: usize,
    provenance: Provenance,
    rule: Rule,
    memo: RwLock<HashMap<Word, TruncatedSeries>>,
}

/// A memoizing map from words to truncated series. Cheap to clone.
#[derive(Clone)]
pub struct Mould {
    inner: Arc<Inner>,
}

impl fmt::Debug for Mould {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mould")
            .field("x_order", &self.inner.x_order)
            .field("provenance", &self.inner.provenance)
            .field("memoized", &self.memo_len())
            .finish()
    }
}

impl Mould {
    fn build(x_order: usize, provenance: Provenance, rule: Rule) -> Self {
        Mould {
            inner: Arc::new(Inner {
                x_order,
                provenance,
                rule,
                memo: RwLock::new(HashMap::new()),
            }),
        }
    }

    /// `1` on the empty word, `0` elsewhere.
    pub fn unit(x_order: usize) -> Self {
        let table = [(Word::empty(), TruncatedSeries::one(x_order))].into_iter().collect();
        Self::build(x_order, Provenance::Constructed, Rule::Table(table))
    }

    /// Finitely supported mould; words not listed map to zero.
    pub fn from_table(x_order: usize, values: BTreeMap<Word, TruncatedSeries>) -> Self {
        let values = values.into_iter().map(|(w, s)| (w, s.truncate(x_order))).collect();
        Self::build(x_order, Provenance::Constructed, Rule::Table(values))
    }

    /// The same series on every word, the empty one included.
    pub fn constant(value: TruncatedSeries) -> Self {
        Self::build(value.order(), Provenance::Constructed, Rule::Constant(value))
    }

    /// `J_a`: `a_{n_1}` on one-letter words `(n_1)`, zero elsewhere.
    pub fn j_a(field: &SaddleNodeField, x_order: usize) -> Self {
        Self::build(
            x_order,
            Provenance::Constructed,
            Rule::LetterMould(Arc::new(field.clone())),
        )
    }

    /// The normalising mould of `field`: the unique solution of
    /// `x^2 dV/dx + nabla V = J_a x V` with `V^{()} = 1` and all other values
    /// in `x C[[x]]`.
    ///
    /// Values are computed on demand by
    /// `V^{(n_1, ..., n_r)} = (x^2 d/dx + n_1 + ... + n_r)^{-1} (a_{n_1} V^{(n_2, ..., n_r)})`,
    /// memoized on suffixes.
    pub fn solver(field: &SaddleNodeField, x_order: usize) -> Self {
        Self::build(x_order, Provenance::Solver, Rule::Solver(Arc::new(field.clone())))
    }

    pub fn x_order(&self) -> usize {
        self.inner.x_order
    }

    pub fn provenance(&self) -> Provenance {
        self.inner.provenance
    }

    /// Product `(M x N)^w = sum over w = w1 . w2 of M^{w1} N^{w2}`.
    pub fn mul(&self, other: &Mould) -> Mould {
        let x_order = self.x_order().min(other.x_order());
        Self::build(x_order, Provenance::Derived, Rule::Product(self.clone(), other.clone()))
    }

    pub fn add(&self, other: &Mould) -> Mould {
        let x_order = self.x_order().min(other.x_order());
        Self::build(x_order, Provenance::Derived, Rule::Sum(self.clone(), other.clone()))
    }

    /// Multiplicative inverse, defined when `M^{()}` is a unit of `C[[x]]`.
    pub fn inverse(&self) -> Result<Mould, MouldError> {
        let empty = self.value(&Word::empty())?;
        let empty_inv = empty.inverse().map_err(|_| MouldError::NonInvertible)?;
        Ok(Self::build(
            self.x_order(),
            Provenance::Derived,
            Rule::Inverse {
                base: self.clone(),
                empty_inv,
            },
        ))
    }

    /// `w -> (-1)^r M^{reverse(w)}`: the inverse of a symmetral mould.
    ///
    /// The formula is applied blindly; it is the inverse only when `self` is
    /// symmetral.
    pub fn symmetral_inverse(&self) -> Mould {
        Self::build(self.x_order(), Provenance::Derived, Rule::SymmetralInverse(self.clone()))
    }

    /// `(nabla M)^w = weight(w) M^w`.
    pub fn nabla(&self) -> Mould {
        Self::build(self.x_order(), Provenance::Derived, Rule::Nabla(self.clone()))
    }

    /// `x^2 dM/dx`, wordwise.
    pub fn euler_derivation(&self) -> Mould {
        Self::build(self.x_order(), Provenance::Derived, Rule::EulerDerivation(self.clone()))
    }

    /// `self` with the value on `word` replaced.
    pub fn overriding(&self, word: Word, value: TruncatedSeries) -> Mould {
        Self::build(
            self.x_order(),
            Provenance::Derived,
            Rule::Override {
                base: self.clone(),
                word,
                value,
            },
        )
    }

    /// The value on `w`, truncated at the mould's x-order.
    pub fn value(&self, w: &Word) -> Result<TruncatedSeries, MouldError> {
        if let Some(v) = self.inner.memo.read().expect("memo lock").get(w) {
            return Ok(v.clone());
        }
        let v = self.compute(w)?;
        let mut memo = self.inner.memo.write().expect("memo lock");
        Ok(memo.entry(w.clone()).or_insert(v).clone())
    }

    /// Values on many words, evaluated in parallel; output order follows
    /// `words`.
    pub fn values_par(&self, words: &[Word]) -> Result<Vec<TruncatedSeries>, MouldError> {
        words.par_iter().map(|w| self.value(w)).collect()
    }

    fn compute(&self, w: &Word) -> Result<TruncatedSeries, MouldError> {
        let k = self.x_order();
        let v = match &self.inner.rule {
            Rule::Table(values) => values
                .get(w)
                .cloned()
                .unwrap_or_else(|| TruncatedSeries::zero(k)),
            Rule::Constant(value) => value.clone(),
            Rule::Product(m, n) => {
                let mut acc = TruncatedSeries::zero(k);
                for (left, right) in w.splittings() {
                    acc.add_assign(&m.value(&left)?.mul(&n.value(&right)?));
                }
                acc
            }
            Rule::Sum(m, n) => m.value(w)?.add(&n.value(w)?),
            Rule::Inverse { base, empty_inv } => {
                if w.is_empty() {
                    empty_inv.clone()
                } else {
                    // M^() W^w = -sum_{i >= 1} M^{w[..i]} W^{w[i..]}
                    let mut acc = TruncatedSeries::zero(k);
                    for i in 1..=w.len() {
                        let left = base.value(&w.prefix(i))?;
                        let right = self.value(&w.suffix_from(i))?;
                        acc.add_assign(&left.mul(&right));
                    }
                    acc.mul(empty_inv).neg()
                }
            }
            Rule::SymmetralInverse(base) => {
                let v = base.value(&w.reversed())?;
                if w.len() % 2 == 1 {
                    v.neg()
                } else {
                    v
                }
            }
            Rule::Nabla(base) => base.value(w)?.scale_int(w.weight()),
            Rule::EulerDerivation(base) => base.value(w)?.euler_derivation(),
            Rule::Override { base, word, value } => {
                if w == word {
                    value.clone()
                } else {
                    base.value(w)?
                }
            }
            Rule::LetterMould(field) => match w.letters() {
                [n] => field.letter_at(*n, k),
                _ => TruncatedSeries::zero(k),
            },
            Rule::Solver(field) => self.solve_word(field, w)?,
        };
        if v.order() < k {
            return Err(MouldError::Precision {
                word: w.clone(),
                got: v.order(),
                wanted: k,
            });
        }
        Ok(v.truncate(k))
    }

    fn solve_word(&self, field: &SaddleNodeField, w: &Word) -> Result<TruncatedSeries, MouldError> {
        let k = self.x_order();
        let Some(first) = w.first() else {
            return Ok(TruncatedSeries::one(k));
        };
        // One extra order: the mu = 0 branch consumes it.
        let letter = field.letter_at(first, k + 1);
        if letter.is_zero() {
            return Ok(TruncatedSeries::zero(k));
        }
        let tail = self.value(&w.tail())?;
        let rhs = letter.mul(&tail);
        let mu = Scalar::from_int(w.weight());
        rhs.solve_euler_shifted(&mu)
            .map_err(|source| MouldError::IllPosedWord {
                word: w.clone(),
                source,
            })
    }

    /// Number of memoized words.
    pub fn memo_len(&self) -> usize {
        self.inner.memo.read().expect("memo lock").len()
    }

    /// Memoized values in canonical word order.
    pub fn memo_entries(&self) -> Vec<(Word, TruncatedSeries)> {
        let memo = self.inner.memo.read().expect("memo lock");
        let mut entries: Vec<_> = memo.iter().map(|(w, s)| (w.clone(), s.clone())).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        entries
    }

    /// Seeds the memo table, e.g. from a cache file. Values are truncated at
    /// the mould's order; entries of lower order are rejected.
    pub fn preload<I>(&self, entries: I) -> Result<(), MouldError>
    where
        I: IntoIterator<Item = (Word, TruncatedSeries)>,
    {
        let k = self.x_order();
        let mut memo = self.inner.memo.write().expect("memo lock");
        for (w, s) in entries {
            if s.order() < k {
                return Err(MouldError::Precision {
                    word: w,
                    got: s.order(),
                    wanted: k,
                });
            }
            memo.insert(w, s.truncate(k));
        }
        Ok(())
    }
}

/// `sum_w sh(w1, w2; w) M^w - M^{w1} M^{w2}`; the zero series means the
/// symmetrality identity holds for this pair.
pub fn check_symmetral(m: &Mould, w1: &Word, w2: &Word) -> Result<TruncatedSeries, MouldError> {
    let shuffled = shuffle_sum(m, w1, w2)?;
    let product = m.value(w1)?.mul(&m.value(w2)?);
    Ok(shuffled.sub(&product).truncate(m.x_order()))
}

/// `sum_w sh(w1, w2; w) M^w`; the zero series means the alternality identity
/// holds for this pair.
pub fn check_alternal(m: &Mould, w1: &Word, w2: &Word) -> Result<TruncatedSeries, MouldError> {
    shuffle_sum(m, w1, w2)
}

fn shuffle_sum(m: &Mould, w1: &Word, w2: &Word) -> Result<TruncatedSeries, MouldError> {
    let mut acc = TruncatedSeries::zero(m.x_order());
    for (w, count) in shuffles(w1, w2) {
        acc.add_assign(&m.value(&w)?.scale_int(count as i64));
    }
    Ok(acc)
}

/// `x^2 dV^w/dx + weight(w) V^w - (J_a x V)^w`, evaluated through the generic
/// mould product.
pub fn residual_mould_equation(
    v: &Mould,
    field: &SaddleNodeField,
    w: &Word,
) -> Result<TruncatedSeries, MouldError> {
    let k = v.x_order();
    let rhs = Mould::j_a(field, k).mul(v);
    let value = v.value(w)?;
    Ok(value
        .euler_derivation()
        .add(&value.scale_int(w.weight()))
        .sub(&rhs.value(w)?)
        .truncate(k))
}
