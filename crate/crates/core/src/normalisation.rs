//! The normalising series `phi(x, y) = y + sum phi_n(x) y^n` and its inverse,
//! assembled from the mould expansion, plus independent checks.
//!
//! `phi_n` is `sum beta_w V^w` over words of weight `n - 1`. Enumerating those
//! words is exponential in the x-order, so [`phi_n`] and [`psi_n`] group them
//! by length and suffix weight and run the solver recursion on whole groups.
//! [`phi_n_by_words`] and [`psi_n_by_words`] keep the literal word sums.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::moulds::{Mould, MouldError};
use crate::saddlenode::{substitute_rows, BivariateSeries, FieldError, PhiSeries, SaddleNodeField};
use crate::scalar::Scalar;
use crate::series::TruncatedSeries;
use crate::words::{beta, count_words, enumerate_words, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalisationError {
    #[error("{needed} components are needed, only {available} given")]
    MissingComponents { needed: usize, available: usize },
    #[error(transparent)]
    Mould(#[from] MouldError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A polynomial in `y` with coefficients in `C[[x]]`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct YPolynomial {
    coeffs: BTreeMap<usize, TruncatedSeries>,
}

impl YPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    /// `x^m y^n` at x-order `x_order`.
    pub fn monomial(m: usize, n: usize, x_order: usize) -> Self {
        let mut p = Self::new();
        p.add_term(n, TruncatedSeries::monomial(m, Scalar::one(), x_order));
        p
    }

    /// `y` at x-order `x_order`.
    pub fn y(x_order: usize) -> Self {
        Self::monomial(0, 1, x_order)
    }

    pub fn add_term(&mut self, n: usize, c: TruncatedSeries) {
        match self.coeffs.get_mut(&n) {
            Some(existing) => existing.add_assign(&c),
            None => {
                self.coeffs.insert(n, c);
            }
        }
    }

    pub fn coeff(&self, n: usize) -> Option<&TruncatedSeries> {
        self.coeffs.get(&n)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &TruncatedSeries)> {
        self.coeffs.iter().map(|(&n, c)| (n, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(TruncatedSeries::is_zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (n, c) in other.terms() {
            out.add_term(n, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_scalar(&Scalar::from_int(-1)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::new();
        for (i, a) in self.terms() {
            for (j, b) in other.terms() {
                out.add_term(i + j, a.mul(b));
            }
        }
        out
    }

    /// Multiplies every coefficient by `s`.
    pub fn scale(&self, s: &TruncatedSeries) -> Self {
        let coeffs = self.coeffs.iter().map(|(&n, a)| (n, a.mul(s))).collect();
        YPolynomial { coeffs }
    }

    pub fn scale_scalar(&self, c: &Scalar) -> Self {
        let coeffs = self.coeffs.iter().map(|(&n, a)| (n, a.scale(c))).collect();
        YPolynomial { coeffs }
    }

    pub fn truncate(&self, x_order: usize) -> Self {
        let coeffs = self.coeffs.iter().map(|(&n, a)| (n, a.truncate(x_order))).collect();
        YPolynomial { coeffs }
    }

    /// `B_n = y^{n+1} d/dy`.
    pub fn apply_b(&self, letter: Letter) -> Self {
        let mut out = Self::new();
        for (k, c) in self.terms() {
            if k == 0 {
                continue;
            }
            let exponent = k as i64 + letter;
            assert!(exponent >= 0, "B_{letter} produced y^{exponent}");
            out.add_term(exponent as usize, c.scale_int(k as i64));
        }
        out
    }

    /// `x^2 d/dx + y d/dy`.
    pub fn apply_normal_form(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&n, c)| (n, c.euler_derivation().add(&c.scale_int(n as i64))))
            .collect();
        YPolynomial { coeffs }
    }

    /// Lower bound for `nu(x^m y^n) = 4m + n` over the terms; a coefficient
    /// that vanishes to its order `K` counts as `x^{K+1}`. `None` for the empty
    /// polynomial.
    pub fn nu_lower_bound(&self) -> Option<usize> {
        self.terms()
            .map(|(n, c)| 4 * c.valuation().lower_bound() + n)
            .min()
    }
}

/// `B_w f = B_{n_r} ... B_{n_1} f`: `B_{n_1}` acts first.
pub fn comould_apply(w: &Word, f: &YPolynomial) -> YPolynomial {
    w.letters().iter().fold(f.clone(), |acc, &n| acc.apply_b(n))
}

/// `sum_{w in words} M^w B_w f`.
pub fn mould_expansion(m: &Mould, words: &[Word], f: &YPolynomial) -> Result<YPolynomial, MouldError> {
    let mut out = YPolynomial::new();
    for w in words {
        let value = m.value(w)?;
        out = out.add(&comould_apply(w, f).scale(&value));
    }
    Ok(out.truncate(m.x_order()))
}

/// Number of words in the literal sum for `phi_n` (or `psi_n`).
pub fn word_count(field: &SaddleNodeField, n: usize, x_order: usize) -> u128 {
    count_words(n as i64, x_order, &field.support())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Assembly {
    Direct,
    Inverse,
}

/// `y^n` coefficient of `phi`, to x-order `x_order`.
pub fn phi_n(field: &SaddleNodeField, n: usize, x_order: usize) -> TruncatedSeries {
    grouped_sum(field, n, x_order, Assembly::Direct)
}

/// `y^n` coefficient of the inverse map `psi`, to x-order `x_order`.
pub fn psi_n(field: &SaddleNodeField, n: usize, x_order: usize) -> TruncatedSeries {
    grouped_sum(field, n, x_order, Assembly::Inverse)
}

/// `phi_0..=phi_{n_max}` computed in parallel.
pub fn normalising_series(field: &SaddleNodeField, n_max: usize, x_order: usize) -> PhiSeries {
    collect_components(field, n_max, x_order, Assembly::Direct)
}

/// `psi_0..=psi_{n_max}` computed in parallel.
pub fn inverse_series(field: &SaddleNodeField, n_max: usize, x_order: usize) -> PhiSeries {
    collect_components(field, n_max, x_order, Assembly::Inverse)
}

fn collect_components(field: &SaddleNodeField, n_max: usize, x_order: usize, assembly: Assembly) -> PhiSeries {
    let components: Vec<TruncatedSeries> = (0..=n_max)
        .into_par_iter()
        .map(|n| grouped_sum(field, n, x_order, assembly))
        .collect();
    PhiSeries::new(components).expect("components lie in x C[[x]]")
}

/// Runs the solver recursion on sums of words sharing length and weight.
///
/// With `n0 . s` the word `s` prefixed by `n0`, `V^{n0 . s}` is
/// `R_{w}(a_{n0} V^s)` with `R_mu = (x^2 d/dx + mu)^{-1}` and `w` the weight of
/// `n0 . s`; the coefficient of `V^w` in the sum factors over proper suffixes,
/// so `W[r][t] = sum_{n0 + s = t} R_t(a_{n0} c(s) W[r-1][s])`.
fn grouped_sum(field: &SaddleNodeField, n: usize, x_order: usize, assembly: Assembly) -> TruncatedSeries {
    let k = x_order;
    let target = n as i64 - 1;
    let letters: Vec<(Letter, TruncatedSeries)> = field
        .support()
        .into_iter()
        .map(|l| (l, field.letter_at(l, k + 1)))
        .collect();
    let mut total = TruncatedSeries::zero(k);
    let (Some(lo), Some(hi)) = (letters.first().map(|p| p.0), letters.last().map(|p| p.0)) else {
        return total;
    };
    let (lo, hi) = (lo.min(0), hi.max(0));
    let max_len = 2 * k;
    let reachable = |s: i64, len: usize| {
        let rem = (max_len - len) as i64;
        let gap = target - s;
        gap >= rem * lo && gap <= rem * hi
    };
    let solve = |rhs: TruncatedSeries, mu: i64| {
        rhs.solve_euler_shifted(&Scalar::from_int(mu))
            .expect("letters of a valid field keep every step well posed")
            .truncate(k)
    };
    let sign = match assembly {
        Assembly::Direct => 1,
        Assembly::Inverse => -1,
    };

    let mut layer: BTreeMap<i64, TruncatedSeries> = BTreeMap::new();
    for (l, a) in &letters {
        if reachable(*l, 1) {
            layer.insert(*l, solve(a.scale_int(sign), *l));
        }
    }
    for len in 1..=max_len {
        if let Some(w) = layer.get(&target) {
            total.add_assign(w);
        }
        if len == max_len {
            break;
        }
        let mut next: BTreeMap<i64, TruncatedSeries> = BTreeMap::new();
        for (&s, w) in &layer {
            let factor = match assembly {
                Assembly::Direct => target + 1 - s,
                Assembly::Inverse => -(s + 1),
            };
            if factor == 0 || w.is_zero() {
                continue;
            }
            let scaled = w.scale_int(factor);
            for (l, a) in &letters {
                let t = s + l;
                if !reachable(t, len + 1) {
                    continue;
                }
                let term = solve(a.mul(&scaled), t);
                match next.get_mut(&t) {
                    Some(e) => e.add_assign(&term),
                    None => {
                        next.insert(t, term);
                    }
                }
            }
        }
        layer = next;
    }
    total
}

/// `phi_n` as the literal sum of `beta_w V^w` over
/// [`enumerate_words`]; `v` must be the solver mould of `field`.
pub fn phi_n_by_words(
    field: &SaddleNodeField,
    v: &Mould,
    n: usize,
) -> Result<TruncatedSeries, MouldError> {
    word_sum(v, n, &field.support())
}

/// `psi_n` as the literal sum over words, with the symmetral inverse of `v`.
pub fn psi_n_by_words(
    field: &SaddleNodeField,
    v: &Mould,
    n: usize,
) -> Result<TruncatedSeries, MouldError> {
    word_sum(&v.symmetral_inverse(), n, &field.support())
}

fn word_sum(m: &Mould, n: usize, support: &BTreeSet<Letter>) -> Result<TruncatedSeries, MouldError> {
    let words: Vec<Word> = enumerate_words(n as i64, m.x_order(), support)
        .into_iter()
        .filter(|w| !beta(w).expect("non-empty").is_zero())
        .collect();
    let terms: Vec<TruncatedSeries> = words
        .par_iter()
        .map(|w| {
            let b = beta(w).expect("non-empty");
            Ok(m.value(w)?.scale(&Scalar::from_bigint(b)))
        })
        .collect::<Result<_, MouldError>>()?;
    let mut total = TruncatedSeries::zero(m.x_order());
    for t in &terms {
        total.add_assign(t);
    }
    Ok(total)
}

/// Solves `x^2 d_x phi + y d_y phi = A(x, phi)` row by row, without moulds.
///
/// Row `n` reads `(x^2 d/dx + n - 1 - P) phi_n = E_n` with
/// `P = sum (k + 1) a_k phi_0^k` and `E_n` the `y^n` row of
/// `sum a_k F^{k+1}`, `F = y + sum_{j<n} phi_j y^j`.
pub fn oracle_phi(field: &SaddleNodeField, n_max: usize, x_order: usize) -> PhiSeries {
    let k = x_order;
    let outer = field.perturbation_rows(k + 1);
    let mut components = vec![oracle_phi0(field, k)];
    if n_max == 0 {
        return PhiSeries::new(components).expect("phi_0 in x C[[x]]");
    }
    let mut inner = vec![components[0].clone(), TruncatedSeries::one(k + 1)];
    let p = substitute_rows(&outer, &inner, k + 1, 1).swap_remove(1);
    for n in 1..=n_max {
        let e = substitute_rows(&outer, &inner, k + 1, n).swap_remove(n);
        let mut c = vec![Scalar::zero(); k + 1];
        if n == 1 {
            assert!(e.coeffs()[1].is_zero(), "row 1 is resonant");
            for m in 2..=k + 1 {
                let mut rhs = e.coeffs()[m].clone();
                for i in 2..m {
                    rhs += &p.coeffs()[i] * &c[m - i];
                }
                c[m - 1] = &rhs / &Scalar::from_int(m as i64 - 1);
            }
        } else {
            let inv = Scalar::from_int(n as i64 - 1).inv().expect("n != 1");
            for m in 1..=k {
                let mut rhs = e.coeffs()[m].clone() - c[m - 1].scale_int(m as i64 - 1);
                for i in 2..m {
                    rhs += &p.coeffs()[i] * &c[m - i];
                }
                c[m] = &rhs * &inv;
            }
        }
        let phi = TruncatedSeries::from_coeffs(c);
        if n == 1 {
            inner[1] = inner[1].add(&phi);
        } else {
            inner.push(phi.clone());
        }
        components.push(phi);
    }
    PhiSeries::new(components).expect("components in x C[[x]]")
}

/// Row 0: `(x^2 d/dx - 1) phi_0 = sum a_k phi_0^{k+1}`, i.e.
/// `c_m = (m - 1) c_{m-1} - [x^m] G(phi_0)`, where the right side only sees
/// `c_1..c_{m-1}`.
fn oracle_phi0(field: &SaddleNodeField, k: usize) -> TruncatedSeries {
    let outer = field.perturbation_rows(k);
    let mut c = vec![Scalar::zero(); k + 1];
    for m in 1..=k {
        let partial = TruncatedSeries::from_coeffs(c.clone());
        let g = substitute_rows(&outer, &[partial], k, 0).swap_remove(0);
        c[m] = c[m - 1].scale_int(m as i64 - 1) - g.coeffs()[m].clone();
    }
    TruncatedSeries::from_coeffs(c)
}

/// `phi(x, psi(x, y)) - y`.
///
/// The residual keeps the rows that the given components determine: y-order
/// `min(y_order, N_psi, N_phi + 1 - x_order)`.
pub fn compose_check(
    phi: &PhiSeries,
    psi: &PhiSeries,
    x_order: usize,
    y_order: usize,
) -> Result<BivariateSeries, NormalisationError> {
    let x_order = x_order.min(phi.x_order()).min(psi.x_order());
    if phi.y_order() + 1 < x_order {
        return Err(NormalisationError::MissingComponents {
            needed: x_order,
            available: phi.y_order() + 1,
        });
    }
    let y_order = y_order.min(psi.y_order()).min(phi.y_order() + 1 - x_order);
    let outer: Vec<TruncatedSeries> = phi.rows().iter().map(|r| r.truncate(x_order)).collect();
    let inner: Vec<TruncatedSeries> = psi.rows().iter().map(|r| r.truncate(x_order)).collect();
    let mut rows = substitute_rows(&outer, &inner, x_order, y_order);
    if y_order >= 1 {
        rows[1] = rows[1].sub(&TruncatedSeries::one(x_order));
    }
    Ok(BivariateSeries::from_rows(rows, x_order))
}

/// Residuals of the formal integral ansatz, row `n` for `u^n e^{nz}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalIntegralResidual {
    /// `rows[n]` in the variable `t = 1/z`: the `t^k` coefficient is the
    /// residual at `z^{-k}`.
    pub rows: Vec<TruncatedSeries>,
}

impl FormalIntegralResidual {
    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(TruncatedSeries::is_zero)
    }

    /// Nonzero entries as `(n, k, value)`.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, Scalar)> {
        let mut out = Vec::new();
        for (n, row) in self.rows.iter().enumerate() {
            for (k, c) in row.coeffs().iter().enumerate() {
                if !c.is_zero() {
                    out.push((n, k, c.clone()));
                }
            }
        }
        out
    }
}

/// Substitutes `Y(z, u) = u e^z + sum u^n e^{nz} phi~_n(z)` into
/// `dY/dz = A(-1/z, Y)` with `phi~_n` the z-form of `phi_n`.
///
/// Row `n` is `phi~_n' + (n - 1) phi~_n - [U^n] sum a_k(-1/z) Y^{k+1}` with
/// `U = u e^z`; everything is computed in `t = 1/z`, where `d/dz = -t^2 d/dt`.
pub fn formal_integral_residual(
    field: &SaddleNodeField,
    phi: &PhiSeries,
    u_order: usize,
    z_order: usize,
) -> Result<FormalIntegralResidual, NormalisationError> {
    if phi.y_order() < u_order {
        return Err(NormalisationError::MissingComponents {
            needed: u_order + 1,
            available: phi.y_order() + 1,
        });
    }
    let z_order = z_order.min(phi.x_order());
    let tilde: Vec<TruncatedSeries> = phi.components()[..=u_order]
        .iter()
        .map(|c| {
            c.truncate(z_order)
                .to_z_coeffs()
                .expect("components lie in x C[[x]]")
                .as_t_series()
        })
        .collect();
    let mut inner = tilde.clone();
    if u_order >= 1 {
        inner[1] = inner[1].add(&TruncatedSeries::one(z_order));
    }
    let outer: Vec<TruncatedSeries> = field
        .perturbation_rows(z_order)
        .iter()
        .map(|a| {
            let flipped = a
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, c)| if k % 2 == 1 { -c } else { c.clone() })
                .collect();
            TruncatedSeries::from_coeffs(flipped)
        })
        .collect();
    let g = substitute_rows(&outer, &inner, z_order, u_order);
    let rows = tilde
        .iter()
        .zip(&g)
        .enumerate()
        .map(|(n, (f, gn))| {
            f.euler_derivation()
                .neg()
                .add(&f.scale_int(n as i64 - 1))
                .sub(gn)
                .truncate(z_order)
        })
        .collect();
    Ok(FormalIntegralResidual { rows })
}
