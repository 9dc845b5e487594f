//! Formal Borel transforms `sum c_n z^{-n-1} -> sum c_n zeta^n / n!`, carried
//! as truncated Taylor polynomials at `zeta = 0`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::saddlenode::SaddleNodeField;
use crate::scalar::Scalar;
use crate::series::ZSeries;
use crate::words::{Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BorelError {
    #[error("division by zeta needs a zero constant term, found {0}")]
    NonzeroConstant(Scalar),
    #[error("no coefficient would be known")]
    NoCoefficients,
    #[error("Borel transform of the empty word is not defined")]
    EmptyWord,
}

/// Taylor coefficients of `zeta^0..=zeta^order`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BorelPoly {
    coeffs: Vec<Scalar>,
}

impl BorelPoly {
    /// Panics on an empty vector.
    pub fn from_coeffs(coeffs: Vec<Scalar>) -> Self {
        assert!(!coeffs.is_empty(), "a Borel polynomial knows at least zeta^0");
        BorelPoly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| Scalar::from_int(c)).collect())
    }

    pub fn zero(order: usize) -> Self {
        BorelPoly {
            coeffs: vec![Scalar::zero(); order + 1],
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> Option<&Scalar> {
        self.coeffs.get(n)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    /// Index of the first nonzero coefficient, or `order + 1`.
    pub fn valuation(&self) -> usize {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .unwrap_or(self.coeffs.len())
    }

    pub fn truncate(&self, order: usize) -> Self {
        BorelPoly {
            coeffs: self.coeffs[..=order.min(self.order())].to_vec(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        BorelPoly {
            coeffs: (0..=order).map(|k| &self.coeffs[k] + &other.coeffs[k]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.coeffs.truncate(other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        BorelPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        BorelPoly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn scale_int(&self, k: i64) -> Self {
        BorelPoly {
            coeffs: self.coeffs.iter().map(|a| a.scale_int(k)).collect(),
        }
    }

    /// Plain Taylor product, with the valuation-aware order rule.
    fn taylor_mul(&self, other: &Self) -> Self {
        let (va, vb) = (self.valuation(), other.valuation());
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
                out[i + j] += a * b;
            }
        }
        BorelPoly { coeffs: out }
    }
}

fn factorials(n: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(BigInt::one());
    for k in 1..=n {
        let next = &out[k - 1] * k;
        out.push(next);
    }
    out
}

/// `z^{-n-1}` coefficient `c_n` becomes `c_n / n!` on `zeta^n`.
pub fn borel(f: &ZSeries) -> Result<BorelPoly, BorelError> {
    if f.order() == 0 {
        return Err(BorelError::NoCoefficients);
    }
    let fact = factorials(f.order());
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| c / &Scalar::from_bigint(fact[n].clone()))
        .collect();
    Ok(BorelPoly { coeffs })
}

/// Inverse of [`borel`].
pub fn inverse_borel(f: &BorelPoly) -> ZSeries {
    let fact = factorials(f.order());
    ZSeries::from_coeffs(
        f.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * &Scalar::from_bigint(fact[n].clone()))
            .collect(),
    )
}

/// Convolution `(f * g)(zeta) = int_0^zeta f(s) g(zeta - s) ds`.
///
/// `zeta^i * zeta^j = i! j! / (i + j + 1)! zeta^{i+j+1}`. The result is known to
/// `min(N_f + v_g, N_g + v_f) + 1`.
pub fn conv(f: &BorelPoly, g: &BorelPoly) -> BorelPoly {
    let (vf, vg) = (f.valuation(), g.valuation());
    let order = (f.order() + vg).min(g.order() + vf) + 1;
    let fact = factorials(order);
    let mut out = vec![Scalar::zero(); order + 1];
    for (i, a) in f.coeffs.iter().enumerate().skip(vf) {
        if a.is_zero() {
            continue;
        }
        for (j, b) in g.coeffs.iter().enumerate().skip(vg) {
            let d = i + j + 1;
            if d > order {
                break;
            }
            if b.is_zero() {
                continue;
            }
            let weight = BigRational::new(&fact[i] * &fact[j], fact[d].clone());
            out[d] += &(a * b) * &Scalar::real(weight);
        }
    }
    BorelPoly { coeffs: out }
}

/// `f / (zeta - m)`. For `m != 0` this is the product with
/// `-(1/m) sum (zeta/m)^k`; for `m = 0`, `f` must vanish at 0 and the
/// coefficients shift down by one.
pub fn divide_by_zeta_minus(m: i64, f: &BorelPoly) -> Result<BorelPoly, BorelError> {
    if m == 0 {
        if !f.coeffs[0].is_zero() {
            return Err(BorelError::NonzeroConstant(f.coeffs[0].clone()));
        }
        if f.order() == 0 {
            return Err(BorelError::NoCoefficients);
        }
        return Ok(BorelPoly {
            coeffs: f.coeffs[1..].to_vec(),
        });
    }
    let inv_m = Scalar::from_int(m).inv().expect("m != 0");
    let mut geometric = Vec::with_capacity(f.coeffs.len());
    let mut term = -&inv_m;
    for _ in 0..f.coeffs.len() {
        geometric.push(term.clone());
        term = &term * &inv_m;
    }
    Ok(f.taylor_mul(&BorelPoly { coeffs: geometric }))
}

/// `a_n` in the Borel plane, known to `zeta^order`.
fn letter_hat(field: &SaddleNodeField, n: Letter, order: usize) -> BorelPoly {
    let z = field
        .letter_at(n, order + 1)
        .to_z_coeffs()
        .expect("letters lie in x C[[x]]");
    borel(&z).expect("order + 1 >= 1")
}

/// `V^w` in the Borel plane, by the nested formula
/// `V^{n_1 . s} = -(1/(zeta - |n_1 . s|)) (a_{n_1} * V^s)` with
/// `V^{(n)} = -(1/(zeta - n)) a_n`, memoized on suffixes.
pub struct BorelMould {
    field: Arc<SaddleNodeField>,
    zeta_order: usize,
    letters: BTreeMap<Letter, BorelPoly>,
    memo: RwLock<HashMap<Word, BorelPoly>>,
}

impl BorelMould {
    pub fn new(field: &SaddleNodeField, zeta_order: usize) -> Self {
        let letters = field
            .support()
            .into_iter()
            .map(|n| (n, letter_hat(field, n, zeta_order + 1)))
            .collect();
        BorelMould {
            field: Arc::new(field.clone()),
            zeta_order,
            letters,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn zeta_order(&self) -> usize {
        self.zeta_order
    }

    pub fn field(&self) -> &SaddleNodeField {
        &self.field
    }

    pub fn value(&self, w: &Word) -> Result<BorelPoly, BorelError> {
        if let Some(v) = self.memo.read().expect("memo lock").get(w) {
            return Ok(v.clone());
        }
        let first = w.first().ok_or(BorelError::EmptyWord)?;
        let Some(a) = self.letters.get(&first) else {
            return Ok(BorelPoly::zero(self.zeta_order));
        };
        let inner = if w.len() == 1 {
            a.clone()
        } else {
            conv(a, &self.value(&w.tail())?)
        };
        let v = divide_by_zeta_minus(w.weight(), &inner)?
            .neg()
            .truncate(self.zeta_order);
        debug_assert_eq!(v.order(), self.zeta_order);
        let mut memo = self.memo.write().expect("memo lock");
        Ok(memo.entry(w.clone()).or_insert(v).clone())
    }
}

/// `V^w` in the Borel plane to `zeta^zeta_order`; `w` must be non-empty.
pub fn borel_v(field: &SaddleNodeField, w: &Word, zeta_order: usize) -> Result<BorelPoly, BorelError> {
    BorelMould::new(field, zeta_order).value(w)
}

/// `sum beta_w V^w` over words of weight `n - 1` in the Borel plane.
///
/// Words are grouped by length and suffix weight exactly as in the x-plane
/// sum; the length bound is `2 (zeta_order + 1)`.
pub fn borel_phi_n(field: &SaddleNodeField, n: usize, zeta_order: usize) -> BorelPoly {
    let target = n as i64 - 1;
    let letters: Vec<(Letter, BorelPoly)> = field
        .support()
        .into_iter()
        .map(|l| (l, letter_hat(field, l, zeta_order + 1)))
        .collect();
    let mut total = BorelPoly::zero(zeta_order);
    let (Some(lo), Some(hi)) = (letters.first().map(|p| p.0), letters.last().map(|p| p.0)) else {
        return total;
    };
    let (lo, hi) = (lo.min(0), hi.max(0));
    let max_len = 2 * (zeta_order + 1);
    let reachable = |s: i64, len: usize| {
        let rem = (max_len - len) as i64;
        let gap = target - s;
        gap >= rem * lo && gap <= rem * hi
    };
    let step = |inner: &BorelPoly, mu: i64| {
        divide_by_zeta_minus(mu, inner)
            .expect("letters of a valid field keep every step regular")
            .neg()
            .truncate(zeta_order)
    };
    let mut layer: BTreeMap<i64, BorelPoly> = BTreeMap::new();
    for (l, a) in &letters {
        if reachable(*l, 1) {
            layer.insert(*l, step(a, *l));
        }
    }
    for len in 1..=max_len {
        if let Some(v) = layer.get(&target) {
            total.add_assign(v);
        }
        if len == max_len {
            break;
        }
        let mut next: BTreeMap<i64, BorelPoly> = BTreeMap::new();
        for (&s, v) in &layer {
            let factor = target + 1 - s;
            if factor == 0 || v.is_zero() {
                continue;
            }
            let scaled = v.scale_int(factor);
            for (l, a) in &letters {
                let t = s + l;
                if !reachable(t, len + 1) {
                    continue;
                }
                let term = step(&conv(a, &scaled), t);
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

/// `borel_phi_n` for `n = 0..=n_max`, in parallel.
pub fn borel_phi(field: &SaddleNodeField, n_max: usize, zeta_order: usize) -> Vec<BorelPoly> {
    (0..=n_max)
        .into_par_iter()
        .map(|n| borel_phi_n(field, n, zeta_order))
        .collect()
}

/// A truncated sum `sum_{n <= N} c_n zeta^n` at a real rational point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub zeta: BigRational,
    pub partial_sum: Scalar,
    /// `C |zeta|^{N+1} / (1 - |zeta|)` with `C` the largest `|re| + |im|`
    /// among the computed coefficients; `None` when `|zeta| >= 1`. It bounds
    /// the tail under the assumption that later coefficients stay below `C`.
    pub tail_bound: Option<BigRational>,
}

pub fn evaluate(f: &BorelPoly, zeta: &BigRational) -> Evaluation {
    let point = Scalar::real(zeta.clone());
    let mut sum = Scalar::zero();
    for c in f.coeffs.iter().rev() {
        sum = &(&sum * &point) + c;
    }
    let abs = zeta.abs();
    let tail_bound = (abs < BigRational::one()).then(|| {
        let c = f
            .coeffs
            .iter()
            .map(|s| s.re().abs() + s.im().abs())
            .fold(BigRational::zero(), |a, b| if b > a { b } else { a });
        let power = num_traits::pow(abs.clone(), f.order() + 1);
        c * power / (BigRational::one() - abs)
    });
    Evaluation {
        zeta: zeta.clone(),
        partial_sum: sum,
        tail_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cubic_test_field, quadratic_test_field, random_field};
    use crate::moulds::Mould;
    use crate::normalisation::phi_n;
    use crate::scalar::parse_rational;
    use crate::words::all_words;
    use proptest::prelude::*;

    fn ratio(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    #[test]
    fn borel_examples() {
        let z1 = ZSeries::from_coeffs(vec![Scalar::one(), Scalar::zero(), Scalar::zero()]);
        assert_eq!(borel(&z1).unwrap(), BorelPoly::from_ints(&[1, 0, 0]));
        let z4 = ZSeries::from_coeffs(vec![Scalar::zero(), Scalar::zero(), Scalar::zero(), Scalar::one()]);
        assert_eq!(
            borel(&z4).unwrap().coeffs()[3],
            ratio(1, 6)
        );
        assert_eq!(borel(&ZSeries::zero(0)), Err(BorelError::NoCoefficients));
        let f = BorelPoly::from_coeffs(vec![ratio(1, 2), ratio(-3, 1), Scalar::i()]);
        assert_eq!(borel(&inverse_borel(&f)).unwrap(), f);
    }

    #[test]
    fn conv_examples() {
        assert_eq!(conv(&BorelPoly::from_ints(&[1]), &BorelPoly::from_ints(&[1])), BorelPoly::from_ints(&[0, 1]));
        let c = conv(&BorelPoly::from_ints(&[0, 1]), &BorelPoly::from_ints(&[1, 0]));
        assert_eq!(c.coeffs()[..3], [Scalar::zero(), Scalar::zero(), ratio(1, 2)]);
        // zeta^2/2! * zeta^3/3! = zeta^6/6!
        let a = BorelPoly::from_coeffs(vec![Scalar::zero(), Scalar::zero(), ratio(1, 2)]);
        let b = BorelPoly::from_coeffs(vec![Scalar::zero(), Scalar::zero(), Scalar::zero(), ratio(1, 6)]);
        let c = conv(&a, &b);
        assert_eq!(c.order(), 6);
        assert_eq!(c.coeffs()[6], ratio(1, 720));
        assert!(c.coeffs()[..6].iter().all(Scalar::is_zero));
    }

    #[test]
    fn division_examples() {
        let one = BorelPoly::from_ints(&[1, 0, 0, 0]);
        assert_eq!(divide_by_zeta_minus(-1, &one).unwrap(), BorelPoly::from_ints(&[1, -1, 1, -1]));
        assert_eq!(
            divide_by_zeta_minus(2, &one).unwrap(),
            BorelPoly::from_coeffs(vec![ratio(-1, 2), ratio(-1, 4), ratio(-1, 8), ratio(-1, 16)])
        );
        assert_eq!(divide_by_zeta_minus(0, &BorelPoly::from_ints(&[0, 1])).unwrap(), BorelPoly::from_ints(&[1]));
        assert_eq!(
            divide_by_zeta_minus(0, &BorelPoly::from_ints(&[1, 0])),
            Err(BorelError::NonzeroConstant(Scalar::one()))
        );
    }

    #[test]
    fn euler_signature() {
        let euler = SaddleNodeField::euler();
        let v = borel_v(&euler, &Word::from_slice(&[-1]), 24).unwrap();
        let phi0 = borel_phi_n(&euler, 0, 24);
        assert_eq!(v, phi0);
        for (n, c) in phi0.coeffs().iter().enumerate() {
            assert_eq!(c, &Scalar::from_int(if n % 2 == 0 { 1 } else { -1 }));
        }
        assert!(borel_phi_n(&euler, 1, 10).is_zero());
        assert!(borel_phi_n(&SaddleNodeField::trivial(), 0, 10).is_zero());
        assert_eq!(borel_v(&euler, &Word::empty(), 3), Err(BorelError::EmptyWord));
    }

    #[test]
    fn route_equivalence_on_words() {
        for field in [quadratic_test_field(), cubic_test_field()] {
            let k = 7;
            let x_route = Mould::solver(&field, k);
            let b_route = BorelMould::new(&field, k - 1);
            for word in all_words(&[-1, 0, 1, 2], 3) {
                let expected = borel(&x_route.value(&word).unwrap().to_z_coeffs().unwrap()).unwrap();
                assert_eq!(b_route.value(&word).unwrap(), expected, "{word}");
            }
        }
    }

    #[test]
    fn route_equivalence_on_components() {
        let field = random_field(3);
        let k = 6;
        for n in 0..=3 {
            let expected = borel(&phi_n(&field, n, k).to_z_coeffs().unwrap()).unwrap();
            assert_eq!(borel_phi_n(&field, n, k - 1), expected, "n = {n}");
        }
    }

    #[test]
    fn evaluation_at_a_half() {
        let euler = SaddleNodeField::euler();
        let phi0 = borel_phi_n(&euler, 0, 9);
        let e = evaluate(&phi0, &parse_rational("1/2").unwrap());
        // sum_{n<=9} (-1/2)^n = (1 - (1/2)^10) / (3/2)
        assert_eq!(e.partial_sum, ratio(1023 * 2, 1024 * 3));
        assert_eq!(e.tail_bound, Some(parse_rational("1/512").unwrap()));
        let exact = BigRational::new(2.into(), 3.into());
        let err = (e.partial_sum.re() - &exact).abs();
        assert!(err <= e.tail_bound.unwrap());
        assert!(evaluate(&phi0, &parse_rational("3/2").unwrap()).tail_bound.is_none());
    }

    fn zseries_strategy() -> impl Strategy<Value = ZSeries> {
        prop::collection::vec((-4i64..=4, 1i64..=3), 1..7).prop_map(|v| {
            ZSeries::from_coeffs(v.into_iter().map(|(n, d)| Scalar::ratio(n, d)).collect())
        })
    }

    proptest! {
        #[test]
        fn borel_turns_products_into_convolutions(f in zseries_strategy(), g in zseries_strategy()) {
            let product = borel(&f.mul(&g)).unwrap();
            let convolved = conv(&borel(&f).unwrap(), &borel(&g).unwrap());
            let order = product.order().min(convolved.order());
            prop_assert_eq!(product.truncate(order), convolved.truncate(order));
        }

        #[test]
        fn conv_is_commutative_and_associative(
            f in zseries_strategy(), g in zseries_strategy(), h in zseries_strategy()
        ) {
            let (f, g, h) = (borel(&f).unwrap(), borel(&g).unwrap(), borel(&h).unwrap());
            prop_assert_eq!(conv(&f, &g), conv(&g, &f));
            let left = conv(&conv(&f, &g), &h);
            let right = conv(&f, &conv(&g, &h));
            let order = left.order().min(right.order());
            prop_assert_eq!(left.truncate(order), right.truncate(order));
        }
    }
}
