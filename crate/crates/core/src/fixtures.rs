//! Reproducible sample fields used by the test suites and the CLI `check`
//! command.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::saddlenode::SaddleNodeField;
use crate::scalar::Scalar;
use crate::series::TruncatedSeries;
use crate::words::Letter;

fn poly(coeffs: &[Scalar]) -> TruncatedSeries {
    TruncatedSeries::from_coeffs(coeffs.to_vec())
}

/// Letters `{-1, 0, 1, 2}`, each at most quadratic in `x`, one with a
/// complex coefficient.
pub fn quadratic_test_field() -> SaddleNodeField {
    let z = Scalar::zero;
    let q = Scalar::ratio;
    let letters: BTreeMap<Letter, TruncatedSeries> = [
        (-1, poly(&[z(), q(1, 1), q(1, 2)])),
        (0, poly(&[z(), z(), q(-1, 1)])),
        (1, poly(&[z(), q(1, 1), q(-2, 1)])),
        (2, poly(&[z(), q(1, 3), Scalar::i()])),
    ]
    .into_iter()
    .collect();
    SaddleNodeField::from_letters(2, letters).expect("valid test field")
}

/// Letters `{-1, 0, 1}` with cubic terms.
pub fn cubic_test_field() -> SaddleNodeField {
    let z = Scalar::zero;
    let q = Scalar::ratio;
    let letters: BTreeMap<Letter, TruncatedSeries> = [
        (-1, poly(&[z(), q(-1, 1), q(3, 1)])),
        (0, poly(&[z(), z(), q(1, 2), q(-1, 1)])),
        (1, poly(&[z(), q(2, 1)])),
    ]
    .into_iter()
    .collect();
    SaddleNodeField::from_letters(3, letters).expect("valid test field")
}

/// A pseudo-random polynomial field with y-degree at most 3 and x-degree at
/// most 3, satisfying the normal-form conditions. Deterministic in `seed`.
pub fn random_field(seed: u64) -> SaddleNodeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut letters = BTreeMap::new();
        for n in -1..=2 {
            let mut coeffs = vec![Scalar::zero(); 4];
            let first = if n == 0 { 2 } else { 1 };
            for c in coeffs.iter_mut().skip(first) {
                if rng.random_bool(0.6) {
                    *c = random_scalar(&mut rng);
                }
            }
            letters.insert(n, TruncatedSeries::from_coeffs(coeffs));
        }
        let field = SaddleNodeField::from_letters(3, letters).expect("constructed normalized");
        if field.support().len() >= 2 {
            return field;
        }
    }
}

fn random_scalar(rng: &mut ChaCha8Rng) -> Scalar {
    let mut num = 0;
    while num == 0 {
        num = rng.random_range(-3..=3);
    }
    let den = rng.random_range(1..=4);
    let re = Scalar::ratio(num, den);
    if rng.random_bool(0.2) {
        re + Scalar::i() * Scalar::ratio(rng.random_range(-2..=2), den)
    } else {
        re
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_fields_are_reproducible_and_varied() {
        assert_eq!(random_field(7), random_field(7));
        assert_ne!(random_field(7), random_field(8));
        for seed in 0..20 {
            let f = random_field(seed);
            assert!(f.y_order() <= 3);
            assert!(f.letters().values().all(|a| a.order() == 3));
        }
    }
}
