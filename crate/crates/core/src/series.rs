//! Truncated power series in `x` over exact complex rationals.
//!
//! A [`TruncatedSeries`] of order `K` stores `c_0..=c_K` and promises nothing
//! about `x^{K+1}` and beyond. Every operation returns the largest order to
//! which its result is exactly determined by its inputs.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("series has a nonzero constant term {0}")]
    NonzeroConstant(Scalar),
    #[error("(x^2 d/dx)^-1 needs a zero x^1 coefficient, found {0}")]
    ResonantLinearTerm(Scalar),
    #[error("series with zero constant term is not invertible")]
    NotInvertible,
}

/// Valuation of a truncated series.
///
/// A series whose stored coefficients all vanish only certifies a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Exact(usize),
    AtLeast(usize),
}

impl Valuation {
    /// The certified lower bound.
    pub fn lower_bound(self) -> usize {
        match self {
            Valuation::Exact(v) | Valuation::AtLeast(v) => v,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Exact(v) => write!(f, "{v}"),
            Valuation::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

/// `c_0 + c_1 x + ... + c_K x^K + O(x^{K+1})`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruncatedSeries {
    coeffs: Vec<Scalar>,
}

impl TruncatedSeries {
    /// Builds a series from `c_0..=c_K`; the order is `coeffs.len() - 1`.
    ///
    /// Panics on an empty vector.
    pub fn from_coeffs(coeffs: Vec<Scalar>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series stores at least c_0");
        TruncatedSeries { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| Scalar::from_int(c)).collect())
    }

    /// A polynomial given by `coeffs`, zero-padded or cut to `order`.
    pub fn polynomial(coeffs: &[Scalar], order: usize) -> Self {
        let mut out = vec![Scalar::zero(); order + 1];
        for (k, c) in coeffs.iter().enumerate().take(order + 1) {
            out[k] = c.clone();
        }
        TruncatedSeries { coeffs: out }
    }

    pub fn zero(order: usize) -> Self {
        TruncatedSeries {
            coeffs: vec![Scalar::zero(); order + 1],
        }
    }

    pub fn constant(c: Scalar, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(Scalar::one(), order)
    }

    /// `c x^k`, truncated at `order`.
    pub fn monomial(k: usize, c: Scalar, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    /// Coefficient of `x^k`; `None` beyond the order.
    pub fn coeff(&self, k: usize) -> Option<&Scalar> {
        self.coeffs.get(k)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    pub fn valuation(&self) -> Valuation {
        match self.coeffs.iter().position(|c| !c.is_zero()) {
            Some(v) => Valuation::Exact(v),
            None => Valuation::AtLeast(self.order() + 1),
        }
    }

    fn certified_valuation(&self) -> usize {
        self.valuation().lower_bound()
    }

    /// Drops coefficients above `order` (no-op if already lower).
    pub fn truncate(&self, order: usize) -> Self {
        let k = order.min(self.order());
        TruncatedSeries {
            coeffs: self.coeffs[..=k].to_vec(),
        }
    }

    /// Treats the stored coefficients as an exact polynomial and re-truncates
    /// at `order`, padding with zeros when `order` exceeds the current one.
    pub fn resized(&self, order: usize) -> Self {
        Self::polynomial(&self.coeffs, order)
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        TruncatedSeries {
            coeffs: (0..=k).map(|i| &self.coeffs[i] + &other.coeffs[i]).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        TruncatedSeries {
            coeffs: (0..=k).map(|i| &self.coeffs[i] - &other.coeffs[i]).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn scale_int(&self, k: i64) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|a| a.scale_int(k)).collect(),
        }
    }

    /// In-place `self += other`, truncating to the smaller order.
    pub fn add_assign(&mut self, other: &Self) {
        let k = self.order().min(other.order());
        self.coeffs.truncate(k + 1);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    /// Cauchy product.
    ///
    /// The result order is `min(K_a + v_b, K_b + v_a)` with `v` the certified
    /// valuations: this is `min(K_a, K_b)` whenever both constant terms are
    /// nonzero, and grows when a factor is known to start at a higher power.
    pub fn mul(&self, other: &Self) -> Self {
        let (va, vb) = (self.certified_valuation(), other.certified_valuation());
        let order = (self.order() + vb).min(other.order() + va);
        let mut out = vec![Scalar::zero(); order + 1];
        for (i, a) in self.coeffs.iter().enumerate().skip(va) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().skip(vb) {
                if i + j > order {
                    break;
                }
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        TruncatedSeries { coeffs: out }
    }

    /// Multiplicative inverse; needs a nonzero constant term.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let c0_inv = self.coeffs[0].inv().ok_or(SeriesError::NotInvertible)?;
        let k = self.order();
        let mut out: Vec<Scalar> = Vec::with_capacity(k + 1);
        out.push(c0_inv.clone());
        for n in 1..=k {
            let s: Scalar = (1..=n).map(|i| &self.coeffs[i] * &out[n - i]).sum();
            out.push(-(&s * &c0_inv));
        }
        Ok(TruncatedSeries { coeffs: out })
    }

    /// `x^2 d/dx`: sends `x^k` to `k x^{k+1}`; valid one order higher.
    pub fn euler_derivation(&self) -> Self {
        let mut out = vec![Scalar::zero(); self.order() + 2];
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            out[k + 1] = c.scale_int(k as i64);
        }
        TruncatedSeries { coeffs: out }
    }

    /// The unique `V` in `x C[[x]]` with `x^2 V' + mu V = self`.
    ///
    /// For `mu != 0` the result has the order of `self`; for `mu = 0` it is
    /// one lower, since `c_j = b_{j+1} / j`.
    pub fn solve_euler_shifted(&self, mu: &Scalar) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstant(self.coeffs[0].clone()));
        }
        let k = self.order();
        if mu.is_zero() {
            if let Some(b1) = self.coeffs.get(1) {
                if !b1.is_zero() {
                    return Err(SeriesError::ResonantLinearTerm(b1.clone()));
                }
            }
            let order = k.saturating_sub(1);
            let mut out = vec![Scalar::zero(); order + 1];
            for (j, c) in out.iter_mut().enumerate().skip(1) {
                *c = &self.coeffs[j + 1] / &Scalar::from_int(j as i64);
            }
            return Ok(TruncatedSeries { coeffs: out });
        }
        let mu_inv = mu.inv().expect("mu is nonzero");
        let mut out = vec![Scalar::zero(); k + 1];
        for n in 1..=k {
            let rhs = &self.coeffs[n] - &out[n - 1].scale_int(n as i64 - 1);
            out[n] = &rhs * &mu_inv;
        }
        Ok(TruncatedSeries { coeffs: out })
    }

    /// Substitution `x = -1/z`: the `x^k` coefficient becomes `(-1)^k` times
    /// the `z^{-k}` coefficient.
    pub fn to_z_coeffs(&self) -> Result<ZSeries, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstant(self.coeffs[0].clone()));
        }
        Ok(ZSeries {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| if k % 2 == 0 { c.clone() } else { -c })
                .collect(),
        })
    }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})x")?,
                _ => write!(f, "({c})x^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(x^{})", self.order() + 1)
    }
}

/// A series in `z^{-1} C[[z^{-1}]]`, stored as the coefficients of
/// `z^{-1}, ..., z^{-order}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ZSeries {
    coeffs: Vec<Scalar>,
}

impl ZSeries {
    /// `coeffs[k-1]` is the coefficient of `z^{-k}`.
    pub fn from_coeffs(coeffs: Vec<Scalar>) -> Self {
        ZSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        ZSeries {
            coeffs: vec![Scalar::zero(); order],
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of `z^{-k}`, `k >= 1`.
    pub fn coeff(&self, k: usize) -> Option<&Scalar> {
        if k == 0 {
            return None;
        }
        self.coeffs.get(k - 1)
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    /// Inverse of [`TruncatedSeries::to_z_coeffs`].
    pub fn to_x_coeffs(&self) -> TruncatedSeries {
        let mut out = vec![Scalar::zero()];
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| if (i + 1) % 2 == 0 { c.clone() } else { -c }),
        );
        TruncatedSeries::from_coeffs(out)
    }

    /// The same coefficients read as a series in `t = 1/z`.
    pub fn as_t_series(&self) -> TruncatedSeries {
        let mut out = vec![Scalar::zero()];
        out.extend(self.coeffs.iter().cloned());
        TruncatedSeries::from_coeffs(out)
    }

    /// Inverse of [`ZSeries::as_t_series`]; needs a zero constant term.
    pub fn from_t_series(t: &TruncatedSeries) -> Result<Self, SeriesError> {
        if !t.coeffs()[0].is_zero() {
            return Err(SeriesError::NonzeroConstant(t.coeffs()[0].clone()));
        }
        Ok(ZSeries {
            coeffs: t.coeffs()[1..].to_vec(),
        })
    }

    /// Cauchy product in `z^{-1}`, with the same order rule as
    /// [`TruncatedSeries::mul`].
    pub fn mul(&self, other: &Self) -> Self {
        ZSeries::from_t_series(&self.as_t_series().mul(&other.as_t_series()))
            .expect("product of series without constant term")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn factorial(n: u64) -> num_bigint::BigInt {
        (1..=n).fold(num_bigint::BigInt::from(1), |acc, k| acc * k)
    }

    #[test]
    fn product_examples() {
        let a = TruncatedSeries::from_ints(&[1, 1, 0]);
        let b = TruncatedSeries::from_ints(&[1, -1, 0]);
        assert_eq!(a.mul(&b), TruncatedSeries::from_ints(&[1, 0, -1]));

        let a = TruncatedSeries::from_ints(&[3, 1, 0]);
        let b = TruncatedSeries::from_ints(&[1, 2, 0]);
        assert_eq!(a.mul(&b), TruncatedSeries::from_ints(&[3, 7, 2]));

        let a = TruncatedSeries::from_ints(&[1, 1, 1]);
        let b = TruncatedSeries::from_ints(&[2, 0, 0, 0, 0, 1]);
        assert_eq!(a.mul(&b).order(), 2);
    }

    #[test]
    fn product_order_grows_with_valuation() {
        // x·(1 + x) known to x^2 and x^3 resp.: x(1+x)·(x + ...) is known to x^4.
        let a = TruncatedSeries::from_ints(&[0, 1, 1]);
        let b = TruncatedSeries::from_ints(&[0, 1, 0, 0]);
        let p = a.mul(&b);
        assert_eq!(p.order(), 3);
        assert_eq!(p, TruncatedSeries::from_ints(&[0, 0, 1, 1]));
        // O(x^3) · O(x^6) is O(x^9).
        let z = TruncatedSeries::zero(2).mul(&TruncatedSeries::zero(5));
        assert_eq!(z.order(), 8);
        assert!(z.is_zero());
    }

    #[test]
    fn euler_derivation_examples() {
        assert!(TruncatedSeries::one(3).euler_derivation().is_zero());
        assert_eq!(
            TruncatedSeries::from_ints(&[0, 1]).euler_derivation(),
            TruncatedSeries::from_ints(&[0, 0, 1])
        );
        assert_eq!(
            TruncatedSeries::from_ints(&[0, 2, 0, 5]).euler_derivation(),
            TruncatedSeries::from_ints(&[0, 0, 2, 0, 15])
        );
    }

    #[test]
    fn euler_series_from_shifted_solve() {
        let order = 20;
        let b = TruncatedSeries::monomial(1, Scalar::one(), order);
        let v = b.solve_euler_shifted(&Scalar::from_int(-1)).unwrap();
        assert_eq!(v.order(), order);
        assert!(v.coeff(0).unwrap().is_zero());
        for k in 1..=order {
            assert_eq!(v.coeff(k).unwrap(), &Scalar::from_bigint(-factorial(k as u64 - 1)));
        }
    }

    #[test]
    fn resonant_solve_of_x_squared() {
        let b = TruncatedSeries::from_ints(&[0, 0, 1, 0, 0]);
        let v = b.solve_euler_shifted(&Scalar::zero()).unwrap();
        assert_eq!(v.order(), 3);
        assert_eq!(v, TruncatedSeries::from_ints(&[0, 1, 0, 0]));
    }

    #[test]
    fn shifted_solve_with_positive_mu_matches_closed_form() {
        // Closed form (-1)^{k-1} (k-1)! / n^k, evaluated independently.
        for n in 1..=4i64 {
            let order = 12;
            let b = TruncatedSeries::monomial(1, Scalar::one(), order);
            let v = b.solve_euler_shifted(&Scalar::from_int(n)).unwrap();
            for k in 1..=order {
                let sign = if k % 2 == 1 { 1 } else { -1 };
                let num = factorial(k as u64 - 1) * sign;
                let den = num_bigint::BigInt::from(n).pow(k as u32);
                let expected = Scalar::real(num_rational::BigRational::new(num, den));
                assert_eq!(v.coeff(k).unwrap(), &expected, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn shifted_solve_precondition_errors() {
        let b = TruncatedSeries::from_ints(&[1, 0, 0]);
        assert!(matches!(
            b.solve_euler_shifted(&Scalar::from_int(2)),
            Err(SeriesError::NonzeroConstant(_))
        ));
        let b = TruncatedSeries::from_ints(&[0, 3, 0]);
        assert!(matches!(
            b.solve_euler_shifted(&Scalar::zero()),
            Err(SeriesError::ResonantLinearTerm(_))
        ));
    }

    #[test]
    fn z_coefficient_signs() {
        let x = TruncatedSeries::from_ints(&[0, 1]);
        assert_eq!(x.to_z_coeffs().unwrap().coeffs(), &[Scalar::from_int(-1)]);
        let x2 = TruncatedSeries::from_ints(&[0, 0, 1]);
        assert_eq!(
            x2.to_z_coeffs().unwrap().coeffs(),
            &[Scalar::zero(), Scalar::one()]
        );
        let euler = TruncatedSeries::monomial(1, Scalar::one(), 10)
            .solve_euler_shifted(&Scalar::from_int(-1))
            .unwrap();
        let z = euler.to_z_coeffs().unwrap();
        for k in 1..=10usize {
            let sign = if (k + 1) % 2 == 0 { 1 } else { -1 };
            assert_eq!(
                z.coeff(k).unwrap(),
                &Scalar::from_bigint(factorial(k as u64 - 1) * sign)
            );
        }
        assert!(TruncatedSeries::one(2).to_z_coeffs().is_err());
    }

    #[test]
    fn valuation_reports() {
        assert_eq!(
            TruncatedSeries::from_ints(&[0, 0, 3]).valuation(),
            Valuation::Exact(2)
        );
        assert_eq!(TruncatedSeries::zero(4).valuation(), Valuation::AtLeast(5));
    }

    #[test]
    fn inverse_of_one_minus_x() {
        let s = TruncatedSeries::from_ints(&[1, -1, 0, 0, 0]);
        assert_eq!(s.inverse().unwrap(), TruncatedSeries::from_ints(&[1, 1, 1, 1, 1]));
        assert!(TruncatedSeries::from_ints(&[0, 1]).inverse().is_err());
    }

    fn small_scalar() -> impl Strategy<Value = Scalar> {
        (-4i64..=4, 1i64..=3, -2i64..=2).prop_map(|(p, q, im)| {
            Scalar::ratio(p, q) + Scalar::i() * Scalar::ratio(im, q)
        })
    }

    fn series(max_order: usize) -> impl Strategy<Value = TruncatedSeries> {
        prop::collection::vec(small_scalar(), 1..=max_order + 1)
            .prop_map(TruncatedSeries::from_coeffs)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ring_axioms(a in series(12), b in series(12), c in series(12)) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            let left = a.mul(&b).mul(&c);
            let right = a.mul(&b.mul(&c));
            let k = left.order().min(right.order());
            prop_assert_eq!(left.truncate(k), right.truncate(k));
        }

        #[test]
        fn shifted_solve_is_two_sided_inverse(
            tail in prop::collection::vec(small_scalar(), 1..12),
            mu in prop_oneof![-3i64..=-1, 1i64..=3],
        ) {
            let mut coeffs = vec![Scalar::zero()];
            coeffs.extend(tail);
            let b = TruncatedSeries::from_coeffs(coeffs);
            let mu = Scalar::from_int(mu);
            let v = b.solve_euler_shifted(&mu).unwrap();
            let back = v.euler_derivation().add(&v.scale(&mu));
            prop_assert_eq!(back, b.truncate(v.order()));
        }

        #[test]
        fn resonant_solve_is_two_sided_inverse(tail in prop::collection::vec(small_scalar(), 1..12)) {
            let mut coeffs = vec![Scalar::zero(), Scalar::zero()];
            coeffs.extend(tail);
            let b = TruncatedSeries::from_coeffs(coeffs);
            let v = b.solve_euler_shifted(&Scalar::zero()).unwrap();
            prop_assert_eq!(v.order(), b.order() - 1);
            prop_assert_eq!(v.euler_derivation(), b);
        }

        #[test]
        fn z_round_trip(tail in prop::collection::vec(small_scalar(), 0..12)) {
            let z = ZSeries::from_coeffs(tail);
            prop_assert_eq!(z.to_x_coeffs().to_z_coeffs().unwrap(), z);
        }
    }
}
