//! Prepared saddle-node fields `x^2 d/dx + A(x, y) d/dy`.
//!
//! The input `A` must satisfy `A(0, y) = y` and `d^2A/dxdy(0, 0) = 0`. It is
//! split into homogeneous letters `a_n(x)` with
//! `A = y + sum_{n >= -1} a_n(x) y^{n+1}`.
//!
//! Bivariate data is stored as rows: `rows[n]` is the coefficient of `y^n`,
//! a [`TruncatedSeries`] in `x`.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::series::TruncatedSeries;
use crate::words::Letter;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("condition A(0, y) = y violated: coefficient of y^{n} at x^0 is {value}")]
    NotNormalized { n: usize, value: Scalar },
    #[error("condition d^2A/dxdy(0, 0) = 0 violated: coefficient of x*y is {0}")]
    BadMixedTerm(Scalar),
    #[error("monomial x^{m} y^{n} lies outside the declared orders (x <= {x_order}, y <= {y_order})")]
    MonomialOutOfRange {
        m: usize,
        n: usize,
        x_order: usize,
        y_order: usize,
    },
    #[error("letter a_{n} has a nonzero constant term {value}")]
    LetterConstantTerm { n: Letter, value: Scalar },
    #[error("letter index {0} is below -1")]
    BadLetter(Letter),
    #[error("phi_{n} has a nonzero constant term {value}")]
    PhiConstantTerm { n: usize, value: Scalar },
}

/// How [`extract_letters`] treats terms that violate the normal-form
/// conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validation {
    /// Reject the field.
    #[default]
    Strict,
    /// Overwrite offending terms so that the conditions hold.
    Repair,
}

/// A bivariate series truncated at `x^{x_order}` and `y^{y_order}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BivariateSeries {
    x_order: usize,
    rows: Vec<TruncatedSeries>,
}

impl BivariateSeries {
    pub fn zero(x_order: usize, y_order: usize) -> Self {
        BivariateSeries {
            x_order,
            rows: vec![TruncatedSeries::zero(x_order); y_order + 1],
        }
    }

    /// Builds from rows, truncating every row to `x_order`.
    ///
    /// Panics if a row is known to a lower order than `x_order`.
    pub fn from_rows(rows: Vec<TruncatedSeries>, x_order: usize) -> Self {
        assert!(!rows.is_empty(), "at least the y^0 row is required");
        let rows = rows
            .into_iter()
            .map(|r| {
                assert!(
                    r.order() >= x_order,
                    "row known to x^{} only, {} requested",
                    r.order(),
                    x_order
                );
                r.truncate(x_order)
            })
            .collect();
        BivariateSeries { x_order, rows }
    }

    pub fn from_monomials<I>(x_order: usize, y_order: usize, monomials: I) -> Result<Self, FieldError>
    where
        I: IntoIterator<Item = (usize, usize, Scalar)>,
    {
        let mut table = vec![vec![Scalar::zero(); x_order + 1]; y_order + 1];
        for (m, n, c) in monomials {
            if m > x_order || n > y_order {
                return Err(FieldError::MonomialOutOfRange {
                    m,
                    n,
                    x_order,
                    y_order,
                });
            }
            table[n][m] += c;
        }
        Ok(BivariateSeries {
            x_order,
            rows: table.into_iter().map(TruncatedSeries::from_coeffs).collect(),
        })
    }

    pub fn x_order(&self) -> usize {
        self.x_order
    }

    pub fn y_order(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn rows(&self) -> &[TruncatedSeries] {
        &self.rows
    }

    pub fn row(&self, n: usize) -> Option<&TruncatedSeries> {
        self.rows.get(n)
    }

    /// Coefficient of `x^m y^n`; zero outside the stored range.
    pub fn coeff(&self, m: usize, n: usize) -> Scalar {
        self.rows
            .get(n)
            .and_then(|r| r.coeff(m))
            .cloned()
            .unwrap_or_default()
    }

    /// Nonzero monomials `(m, n, c)` in row-major order.
    pub fn monomials(&self) -> Vec<(usize, usize, Scalar)> {
        let mut out = Vec::new();
        for (n, row) in self.rows.iter().enumerate() {
            for (m, c) in row.coeffs().iter().enumerate() {
                if !c.is_zero() {
                    out.push((m, n, c.clone()));
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(TruncatedSeries::is_zero)
    }

    /// Difference, truncated to the common orders.
    pub fn sub(&self, other: &Self) -> Self {
        let x_order = self.x_order.min(other.x_order);
        let y_order = self.y_order().min(other.y_order());
        let rows = (0..=y_order)
            .map(|n| self.rows[n].sub(&other.rows[n]).truncate(x_order))
            .collect();
        BivariateSeries { x_order, rows }
    }

    fn set(&mut self, m: usize, n: usize, c: Scalar) {
        let mut coeffs = self.rows[n].coeffs().to_vec();
        coeffs[m] = c;
        self.rows[n] = TruncatedSeries::from_coeffs(coeffs);
    }
}

/// The letters `a_n(x)` of a validated saddle-node field.
///
/// Letters are exact polynomials in `x` (degree at most `x_order`); only
/// nonzero letters are stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SaddleNodeField {
    x_order: usize,
    letters: BTreeMap<Letter, TruncatedSeries>,
}

impl SaddleNodeField {
    /// Validates `a_n(0) = 0` for all `n` and `a_0'(0) = 0`.
    pub fn from_letters(
        x_order: usize,
        letters: BTreeMap<Letter, TruncatedSeries>,
    ) -> Result<Self, FieldError> {
        let mut kept = BTreeMap::new();
        for (n, a) in letters {
            if n < -1 {
                return Err(FieldError::BadLetter(n));
            }
            let c0 = &a.coeffs()[0];
            if !c0.is_zero() {
                return Err(FieldError::LetterConstantTerm {
                    n,
                    value: c0.clone(),
                });
            }
            if n == 0 {
                if let Some(c1) = a.coeff(1) {
                    if !c1.is_zero() {
                        return Err(FieldError::BadMixedTerm(c1.clone()));
                    }
                }
            }
            let a = a.resized(x_order.max(a.order()));
            if !a.is_zero() {
                kept.insert(n, a);
            }
        }
        let x_order = kept.values().map(|a| a.order()).fold(x_order, usize::max);
        let letters = kept.into_iter().map(|(n, a)| (n, a.resized(x_order))).collect();
        Ok(SaddleNodeField { x_order, letters })
    }

    /// Euler's field `A = x + y`.
    pub fn euler() -> Self {
        let letters = [(-1, TruncatedSeries::from_ints(&[0, 1]))].into_iter().collect();
        SaddleNodeField::from_letters(1, letters).expect("Euler field is normalized")
    }

    /// The normal form itself, `A = y`.
    pub fn trivial() -> Self {
        SaddleNodeField {
            x_order: 0,
            letters: BTreeMap::new(),
        }
    }

    pub fn x_order(&self) -> usize {
        self.x_order
    }

    /// Largest `n + 1` over nonzero letters; 1 when there are none.
    pub fn y_order(&self) -> usize {
        self.letters
            .keys()
            .next_back()
            .map_or(1, |&n| (n + 1).max(1) as usize)
    }

    pub fn letters(&self) -> &BTreeMap<Letter, TruncatedSeries> {
        &self.letters
    }

    pub fn letter(&self, n: Letter) -> Option<&TruncatedSeries> {
        self.letters.get(&n)
    }

    /// `a_n` as a series of the given order (zero when absent).
    pub fn letter_at(&self, n: Letter, order: usize) -> TruncatedSeries {
        match self.letters.get(&n) {
            Some(a) => a.resized(order),
            None => TruncatedSeries::zero(order),
        }
    }

    /// Letters with a nonzero coefficient.
    pub fn support(&self) -> BTreeSet<Letter> {
        self.letters.keys().copied().collect()
    }

    /// `A = y + sum a_n y^{n+1}` as a bivariate series.
    pub fn to_bivariate(&self) -> BivariateSeries {
        let y_order = self.y_order();
        let mut rows = vec![TruncatedSeries::zero(self.x_order); y_order + 1];
        rows[1] = TruncatedSeries::one(self.x_order);
        for (&n, a) in &self.letters {
            let idx = (n + 1) as usize;
            rows[idx] = rows[idx].add(a);
        }
        BivariateSeries {
            x_order: self.x_order,
            rows,
        }
    }

    /// Rows of `sum_n a_n Y^{n+1}` (the part of `A` beyond `Y`), at `order`.
    pub(crate) fn perturbation_rows(&self, order: usize) -> Vec<TruncatedSeries> {
        let y_order = self.y_order();
        (0..=y_order)
            .map(|j| self.letter_at(j as Letter - 1, order))
            .collect()
    }

    /// SHA-256 over a canonical rendering of the letters.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (n, a) in &self.letters {
            let last = a.coeffs().iter().rposition(|c| !c.is_zero()).unwrap_or(0);
            hasher.update(format!("a[{n}]:"));
            for c in &a.coeffs()[..=last] {
                hasher.update(format!("{},{};", c.re(), c.im()));
            }
            hasher.update("\n");
        }
        hex::encode(hasher.finalize())
    }
}

/// Splits `A` into letters after checking the normal-form conditions.
///
/// The stored monomials of `A` are read as an exact polynomial.
pub fn extract_letters(a: &BivariateSeries, validation: Validation) -> Result<SaddleNodeField, FieldError> {
    let mut a = a.clone();
    if a.y_order() < 1 {
        // A(0, y) = y needs the y row
        let mut rows = a.rows.clone();
        rows.push(TruncatedSeries::zero(a.x_order));
        a = BivariateSeries {
            x_order: a.x_order,
            rows,
        };
    }
    for n in 0..=a.y_order() {
        let expected = if n == 1 { Scalar::one() } else { Scalar::zero() };
        let value = a.coeff(0, n);
        if value != expected {
            match validation {
                Validation::Strict => return Err(FieldError::NotNormalized { n, value }),
                Validation::Repair => a.set(0, n, expected),
            }
        }
    }
    if a.x_order >= 1 {
        let mixed = a.coeff(1, 1);
        if !mixed.is_zero() {
            match validation {
                Validation::Strict => return Err(FieldError::BadMixedTerm(mixed)),
                Validation::Repair => a.set(1, 1, Scalar::zero()),
            }
        }
    }
    let one = TruncatedSeries::one(a.x_order);
    let letters = a
        .rows
        .iter()
        .enumerate()
        .map(|(j, row)| {
            let n = j as Letter - 1;
            let letter = if n == 0 { row.sub(&one) } else { row.clone() };
            (n, letter)
        })
        .collect();
    SaddleNodeField::from_letters(a.x_order, letters)
}

/// The components `phi_0..=phi_N` of `phi(x, y) = y + sum phi_n(x) y^n`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PhiSeries {
    x_order: usize,
    components: Vec<TruncatedSeries>,
}

impl PhiSeries {
    /// Truncates every component to the smallest order among them.
    pub fn new(components: Vec<TruncatedSeries>) -> Result<Self, FieldError> {
        assert!(!components.is_empty(), "phi_0 is required");
        for (n, c) in components.iter().enumerate() {
            if !c.coeffs()[0].is_zero() {
                return Err(FieldError::PhiConstantTerm {
                    n,
                    value: c.coeffs()[0].clone(),
                });
            }
        }
        let x_order = components.iter().map(|c| c.order()).min().unwrap_or(0);
        let components = components.into_iter().map(|c| c.truncate(x_order)).collect();
        Ok(PhiSeries { x_order, components })
    }

    /// `phi(x, y) = y`.
    pub fn identity(x_order: usize, y_order: usize) -> Self {
        PhiSeries {
            x_order,
            components: vec![TruncatedSeries::zero(x_order); y_order + 1],
        }
    }

    pub fn x_order(&self) -> usize {
        self.x_order
    }

    /// Largest `n` whose component is known.
    pub fn y_order(&self) -> usize {
        self.components.len() - 1
    }

    pub fn components(&self) -> &[TruncatedSeries] {
        &self.components
    }

    pub fn component(&self, n: usize) -> Option<&TruncatedSeries> {
        self.components.get(n)
    }

    /// The rows of `phi(x, y)` itself, i.e. with the leading `y` added.
    pub fn rows(&self) -> Vec<TruncatedSeries> {
        let mut rows = self.components.clone();
        if rows.len() < 2 {
            rows.push(TruncatedSeries::zero(self.x_order));
        }
        rows[1] = rows[1].add(&TruncatedSeries::one(self.x_order));
        rows
    }
}

/// Product of two row-represented bivariate series, keeping `y^0..=y^{y_order}`
/// and truncating at `x_order`.
pub(crate) fn rows_mul(
    p: &[TruncatedSeries],
    q: &[TruncatedSeries],
    y_order: usize,
    x_order: usize,
) -> Vec<TruncatedSeries> {
    (0..=y_order)
        .map(|k| {
            let mut acc: Option<TruncatedSeries> = None;
            for (i, pi) in p.iter().enumerate().take(k + 1) {
                let Some(qj) = q.get(k - i) else { continue };
                let term = pi.mul(qj).truncate(x_order);
                acc = Some(match acc {
                    Some(a) => a.add(&term),
                    None => term,
                });
            }
            acc.unwrap_or_else(|| TruncatedSeries::zero(x_order))
        })
        .collect()
}

/// `sum_j outer[j](x) * inner(x, y)^j`, keeping `y^0..=y^{y_order}`.
///
/// `inner`'s `y^0` row must lie in `x C[[x]]`, so that high powers of `inner`
/// only reach high x-orders. Rows are truncated at `x_order` but may be known
/// to less if the inputs are.
pub(crate) fn substitute_rows(
    outer: &[TruncatedSeries],
    inner: &[TruncatedSeries],
    x_order: usize,
    y_order: usize,
) -> Vec<TruncatedSeries> {
    debug_assert!(inner[0].coeffs()[0].is_zero());
    let mut power = vec![TruncatedSeries::zero(x_order + 1); y_order + 1];
    power[0] = TruncatedSeries::one(x_order + 1);
    let mut out: Vec<TruncatedSeries> = vec![TruncatedSeries::zero(x_order); y_order + 1];
    for (j, coeff) in outer.iter().enumerate() {
        if j > 0 {
            power = rows_mul(&power, inner, y_order, x_order + 1);
        }
        if coeff.is_zero() && coeff.order() >= x_order {
            continue;
        }
        for (k, row) in power.iter().enumerate() {
            let term = coeff.mul(row).truncate(x_order);
            out[k] = out[k].add(&term);
        }
    }
    out
}

/// `A(x, phi(x, y))`, with `A` read as the polynomial given by its monomials.
pub fn substitute_phi(a: &BivariateSeries, phi: &PhiSeries) -> BivariateSeries {
    let x_order = phi.x_order();
    let outer: Vec<TruncatedSeries> = a.rows().iter().map(|r| r.resized(x_order)).collect();
    let rows = substitute_rows(&outer, &phi.rows(), x_order, phi.y_order());
    BivariateSeries::from_rows(rows, x_order)
}

/// `x^2 d_x phi + y d_y phi - A(x, phi)`; zero exactly when `phi` conjugates
/// the field to its normal form up to the stored orders.
pub fn pde_residual(a: &BivariateSeries, phi: &PhiSeries) -> BivariateSeries {
    let substituted = substitute_phi(a, phi);
    let rows = phi
        .rows()
        .iter()
        .enumerate()
        .map(|(n, row)| {
            row.euler_derivation()
                .add(&row.scale_int(n as i64))
                .truncate(phi.x_order())
        })
        .collect();
    BivariateSeries::from_rows(rows, phi.x_order()).sub(&substituted)
}
