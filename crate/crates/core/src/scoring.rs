//! Cell-set precision, recall and the recall-weighted F-score.
//!
//! With `o = |candidate ∩ reference|`, `P = o / |candidate|` and
//! `R = o / |reference|`, the score is
//!
//! ```text
//! F_α = (1 + α²) · P · R / (α² · P + R)
//! ```
//!
//! and `0` when `P + R = 0`. Everything is computed in exact rationals;
//! floating point only appears in the convenience fields of [`ScoreReport`]
//! and in 4-decimal half-even rounding for serialized output.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::table::CellSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("reference cell set is empty")]
    EmptyReference,
    #[error("alpha must be a positive finite number, got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub alpha: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { alpha: 1.5 }
    }
}

impl ScoreConfig {
    pub fn new(alpha: f64) -> Result<Self, ScoreError> {
        let cfg = Self { alpha };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        if self.alpha.is_finite() && self.alpha > 0.0 {
            Ok(())
        } else {
            Err(ScoreError::InvalidAlpha(self.alpha))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f_alpha: f64,
    pub overlap_cells: usize,
    pub candidate_cells: usize,
    pub reference_cells: usize,
    pub exact_precision: BigRational,
    pub exact_recall: BigRational,
    pub exact_f_alpha: BigRational,
}

impl ScoreReport {
    /// `f_alpha` rounded half-even to 4 decimals.
    pub fn f_alpha_rounded(&self) -> Decimal {
        round4(&self.exact_f_alpha)
    }
}

impl Serialize for ScoreReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            precision: f64,
            recall: f64,
            f_alpha: f64,
            overlap_cells: usize,
            candidate_cells: usize,
            reference_cells: usize,
        }
        Wire {
            precision: decimal_to_f64(round4(&self.exact_precision)),
            recall: decimal_to_f64(round4(&self.exact_recall)),
            f_alpha: decimal_to_f64(round4(&self.exact_f_alpha)),
            overlap_cells: self.overlap_cells,
            candidate_cells: self.candidate_cells,
            reference_cells: self.reference_cells,
        }
        .serialize(s)
    }
}

pub(crate) fn decimal_to_f64(d: Decimal) -> f64 {
    d.to_string().parse().unwrap_or(f64::NAN)
}

/// Exact value of a positive finite `f64`, read through its shortest decimal
/// representation (so `1.5` is `3/2`, `1.7` is `17/10`).
pub fn alpha_to_rational(alpha: f64) -> BigRational {
    let text = format!("{alpha}");
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let digits: BigInt = format!("{int}{frac}").parse().expect("f64 Display is plain decimal");
    BigRational::new(digits, num_traits::pow(BigInt::from(10), frac.len()))
}

/// Half-even rounding of a non-negative rational to 4 decimal places.
pub fn round4(x: &BigRational) -> Decimal {
    let scaled = x.numer() * BigInt::from(10_000);
    let den = x.denom();
    let mut q = &scaled / den;
    let rem = &scaled % den;
    let twice = rem.abs() * 2;
    if twice > *den || (twice == *den && (&q % 2) != BigInt::zero()) {
        q += if x.is_negative() { -1 } else { 1 };
    }
    Decimal::new(q.to_i64().expect("score fits in i64"), 4)
}

fn ratio(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Scores `candidate` against `reference`. An empty candidate scores 0.
pub fn score(candidate: &CellSet, reference: &CellSet, cfg: &ScoreConfig) -> Result<ScoreReport, ScoreError> {
    cfg.validate()?;
    if reference.is_empty() {
        return Err(ScoreError::EmptyReference);
    }
    let overlap = candidate.intersection_len(reference);
    let precision = if candidate.is_empty() { BigRational::zero() } else { ratio(overlap, candidate.len()) };
    let recall = ratio(overlap, reference.len());
    let a = alpha_to_rational(cfg.alpha);
    let a2 = &a * &a;
    let f = if (&precision + &recall).is_zero() {
        BigRational::zero()
    } else {
        (BigRational::one() + &a2) * &precision * &recall / (&a2 * &precision + &recall)
    };
    Ok(ScoreReport {
        precision: to_f64(&precision),
        recall: to_f64(&recall),
        f_alpha: to_f64(&f),
        overlap_cells: overlap,
        candidate_cells: candidate.len(),
        reference_cells: reference.len(),
        exact_precision: precision,
        exact_recall: recall,
        exact_f_alpha: f,
    })
}

/// Evaluates the same pair under several α values.
pub fn score_limits_check(candidate: &CellSet, reference: &CellSet, alphas: &[f64]) -> Result<Vec<ScoreReport>, ScoreError> {
    alphas.iter().map(|&alpha| score(candidate, reference, &ScoreConfig { alpha })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{canonicalize, fixtures::employees, Cell, CellValue};
    use proptest::prelude::*;

    /// Closed form `(1+α²)·o / (α²·|ref| + |cand|)`, independent of the P/R route.
    fn closed_form(o: usize, c: usize, r: usize, alpha: f64) -> f64 {
        if o == 0 {
            return 0.0;
        }
        let a2 = alpha * alpha;
        (1.0 + a2) * o as f64 / (a2 * r as f64 + c as f64)
    }

    fn cells(ids: &[(usize, usize)]) -> CellSet {
        ids.iter().map(|&(row, col)| Cell { row, col, value: CellValue::parse(&format!("{}", row * 10 + col)) }).collect()
    }

    #[test]
    fn identity_is_one() {
        let s = cells(&[(1, 0), (2, 0), (2, 1)]);
        let r = score(&s, &s, &ScoreConfig::default()).unwrap();
        assert!(r.exact_f_alpha.is_one() && r.exact_precision.is_one() && r.exact_recall.is_one());
        assert_eq!(r.f_alpha, 1.0);
    }

    #[test]
    fn employee_intermediate_vs_final() {
        let raw = employees();
        let mid = canonicalize(&raw.select_row_positions(&[0, 2, 6]), &raw).unwrap();
        let gold = canonicalize(&raw.select_row_positions(&[6]).project_positions(&[0, 2, 3, 4]), &raw).unwrap();
        let r = score(&mid, &gold, &ScoreConfig::default()).unwrap();
        assert_eq!((r.overlap_cells, r.candidate_cells, r.reference_cells), (4, 21, 4));
        assert_eq!(r.exact_f_alpha, BigRational::new(13.into(), 30.into()));
        assert_eq!(r.f_alpha_rounded(), Decimal::new(4333, 4));
        assert!((r.f_alpha - closed_form(4, 21, 4, 1.5)).abs() < 1e-12);
    }

    #[test]
    fn losing_one_gold_cell() {
        let gold = cells(&[(1, 0), (1, 1), (2, 0), (2, 1)]);
        let lossy = cells(&[(1, 0), (1, 1), (2, 0)]);
        let r15 = score(&lossy, &gold, &ScoreConfig { alpha: 1.5 }).unwrap();
        let r1 = score(&lossy, &gold, &ScoreConfig { alpha: 1.0 }).unwrap();
        assert_eq!(r15.exact_f_alpha, BigRational::new(13.into(), 16.into()));
        assert_eq!(r1.exact_f_alpha, BigRational::new(6.into(), 7.into()));
        assert!(r15.f_alpha < r1.f_alpha);
    }

    #[test]
    fn large_alpha_approaches_recall() {
        let gold = cells(&[(1, 0), (1, 1), (2, 0), (2, 1)]);
        let lossy = cells(&[(1, 0), (1, 1), (2, 0)]);
        let reps = score_limits_check(&lossy, &gold, &[1.0, 1.5, 2.0, 5.0, 100.0]).unwrap();
        assert!((reps[4].f_alpha - reps[4].recall).abs() < 0.02);
        let gaps: Vec<f64> = reps.iter().map(|r| (r.f_alpha - r.recall).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
        // α = 1 is the plain harmonic mean.
        let (p, r) = (reps[0].precision, reps[0].recall);
        assert!((reps[0].f_alpha - 2.0 * p * r / (p + r)).abs() < 1e-12);
    }

    #[test]
    fn empty_cases() {
        let gold = cells(&[(1, 0)]);
        let r = score(&CellSet::new(), &gold, &ScoreConfig::default()).unwrap();
        assert!(r.exact_f_alpha.is_zero() && r.exact_recall.is_zero() && r.exact_precision.is_zero());
        assert_eq!(score(&gold, &CellSet::new(), &ScoreConfig::default()), Err(ScoreError::EmptyReference));
        assert_eq!(score(&gold, &gold, &ScoreConfig { alpha: 0.0 }), Err(ScoreError::InvalidAlpha(0.0)));
    }

    #[test]
    fn rounding_is_half_even() {
        let r = |n: i64, d: i64| round4(&BigRational::new(n.into(), d.into()));
        assert_eq!(r(1, 3), Decimal::new(3333, 4));
        assert_eq!(r(2, 3), Decimal::new(6667, 4));
        assert_eq!(r(1, 20000), Decimal::new(0, 4));
        assert_eq!(r(3, 20000), Decimal::new(2, 4));
        assert_eq!(r(1, 1), Decimal::new(10000, 4));
        assert_eq!(alpha_to_rational(1.7), BigRational::new(17.into(), 10.into()));
    }

    #[test]
    fn precision_monotone_for_fixed_recall() {
        for r in 1..=10 {
            let recall = BigRational::new(r.into(), 10.into());
            let mut prev = BigRational::zero();
            for p in 1..=10 {
                let precision = BigRational::new(p.into(), 10.into());
                let a2 = BigRational::new(9.into(), 4.into());
                let f = (BigRational::one() + &a2) * &precision * &recall / (&a2 * &precision + &recall);
                assert!(f > prev);
                prev = f;
            }
        }
    }

    fn arb_sets() -> impl Strategy<Value = (CellSet, CellSet)> {
        let grid = proptest::collection::btree_set((1usize..6, 0usize..4), 1..16);
        (grid.clone(), grid).prop_map(|(a, b)| {
            let to_set = |s: std::collections::BTreeSet<(usize, usize)>| cells(&s.into_iter().collect::<Vec<_>>());
            (to_set(a), to_set(b))
        })
    }

    proptest! {
        #[test]
        fn matches_closed_form_and_bounds((cand, gold) in arb_sets(), alpha in 0.25f64..4.0) {
            let rep = score(&cand, &gold, &ScoreConfig { alpha }).unwrap();
            prop_assert!(rep.f_alpha >= 0.0 && rep.f_alpha <= 1.0);
            prop_assert!((rep.f_alpha - closed_form(rep.overlap_cells, cand.len(), gold.len(), alpha)).abs() < 1e-9);
            prop_assert_eq!(rep.exact_f_alpha.is_one(), cand == gold);
        }

        #[test]
        fn recall_bias_direction((cand, gold) in arb_sets()) {
            let a = score(&cand, &gold, &ScoreConfig { alpha: 1.5 }).unwrap();
            let b = score(&cand, &gold, &ScoreConfig { alpha: 1.0 }).unwrap();
            if a.exact_recall < a.exact_precision {
                prop_assert!(a.exact_f_alpha < b.exact_f_alpha);
            } else if a.exact_recall > a.exact_precision && !a.exact_precision.is_zero() {
                prop_assert!(a.exact_f_alpha > b.exact_f_alpha);
            }
        }
    }
}
