//! Weighted fusion of perspective scores and the recommendation rule.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::agents::Perspective;
use crate::host::CountryCode;

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct WeightVector {
    pub cultural: f64,
    pub emotional: f64,
    pub ethical: f64,
}

impl Default for WeightVector {
    fn default() -> Self {
        Self { cultural: 0.4, emotional: 0.3, ethical: 0.3 }
    }
}

impl WeightVector {
    pub fn new(cultural: f64, emotional: f64, ethical: f64) -> Result<Self, EngineError> {
        let w = Self { cultural, emotional, ethical };
        w.validate()?;
        Ok(w)
    }

    pub fn equal() -> Self {
        let third = 1.0 / 3.0;
        Self { cultural: third, emotional: third, ethical: third }
    }

    pub fn get(&self, perspective: Perspective) -> f64 {
        match perspective {
            Perspective::Cultural => self.cultural,
            Perspective::Emotional => self.emotional,
            Perspective::Ethical => self.ethical,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let parts = [self.cultural, self.emotional, self.ethical];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(EngineError::InvalidWeights(format!("weights must be finite and non-negative, got {self}")));
        }
        let sum = exact_sum(parts);
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(EngineError::InvalidWeights(format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Raise one perspective's weight to `w` and rescale the other two so
    /// their ratio is kept and the total stays 1.
    pub fn shifted(&self, perspective: Perspective, w: f64) -> Result<Self, EngineError> {
        let rest = 1.0 - self.get(perspective);
        let scale = |v: f64| if rest > 0.0 { v / rest * (1.0 - w) } else { (1.0 - w) / 2.0 };
        let mut out = Self { cultural: scale(self.cultural), emotional: scale(self.emotional), ethical: scale(self.ethical) };
        match perspective {
            Perspective::Cultural => out.cultural = w,
            Perspective::Emotional => out.emotional = w,
            Perspective::Ethical => out.ethical = w,
        }
        out.validate()?;
        Ok(out)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.cultural, self.emotional, self.ethical)
    }
}

/// `c,e,t` in cultural, emotional, ethical order.
impl FromStr for WeightVector {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, EngineError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [c, e, t] = parts.as_slice() else {
            return Err(EngineError::InvalidWeights(format!("expected three comma-separated weights, got `{s}`")));
        };
        let parse = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| EngineError::InvalidWeights(format!("`{v}` is not a number")))
        };
        Self::new(parse(c)?, parse(e)?, parse(t)?)
    }
}

/// Sum of floats, correctly rounded: the result is the double nearest to
/// the exact real sum, ties to even.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    let Some(mut k) = partials.len().checked_sub(1) else {
        return 0.0;
    };
    let mut hi = partials[k];
    let mut lo = 0.0;
    while k > 0 {
        k -= 1;
        let x = hi;
        let y = partials[k];
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    // Half-way case: the discarded tail pushes past the midpoint.
    if k > 0 && ((lo < 0.0 && partials[k - 1] < 0.0) || (lo > 0.0 && partials[k - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// Correctly rounded `Σ a_i · b_i`. Each product is split exactly into a
/// high and low part with a fused multiply-add before the exact sum.
pub fn exact_dot(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    exact_sum(pairs.into_iter().flat_map(|(a, b)| {
        let p = a * b;
        [p, a.mul_add(b, -p)]
    }))
}

/// `Σ_x w_x · s_x` over all three perspectives, at full precision.
pub fn fuse_scores(scores: &BTreeMap<Perspective, f64>, weights: &WeightVector) -> Result<f64, EngineError> {
    weights.validate()?;
    let mut terms = Vec::with_capacity(3);
    for p in Perspective::FUSION_ORDER {
        let s = *scores.get(&p).ok_or(EngineError::MissingPerspective(p))?;
        terms.push((weights.get(p), s));
    }
    Ok(exact_dot(terms))
}

/// One-decimal display form. Values are truncated toward zero on the 0.1
/// grid, with a 1e-9 allowance for representation error below a grid point.
pub fn display_score(value: f64) -> String {
    format!("{:.1}", ((value * 10.0) + 1e-9).floor() / 10.0)
}

/// Country with the highest fused score; ties go to the smallest code.
pub fn recommend(fused: &BTreeMap<CountryCode, f64>) -> Result<CountryCode, EngineError> {
    let mut best: Option<(&CountryCode, f64)> = None;
    // BTreeMap iterates in ascending code order, so strict `>` keeps the
    // first of any tied group.
    for (code, &score) in fused {
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((code, score));
        }
    }
    best.map(|(c, _)| c.clone()).ok_or(EngineError::EmptyCandidateSet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::Signed;

    fn scores(c: f64, e: f64, t: f64) -> BTreeMap<Perspective, f64> {
        BTreeMap::from([(Perspective::Cultural, c), (Perspective::Emotional, e), (Perspective::Ethical, t)])
    }

    fn rational(x: f64) -> BigRational {
        BigRational::from_float(x).unwrap()
    }

    fn next_up(x: f64) -> f64 {
        f64::from_bits(x.to_bits() + 1)
    }

    fn next_down(x: f64) -> f64 {
        f64::from_bits(x.to_bits() - 1)
    }

    /// `r` is a nearest double to the exact rational value.
    fn is_nearest(r: f64, exact: &BigRational) -> bool {
        let d = (rational(r) - exact).abs();
        d <= (rational(next_up(r)) - exact).abs() && d <= (rational(next_down(r)) - exact).abs()
    }

    #[test]
    fn case_study_fusions_are_exact() {
        let w = WeightVector::default();
        assert_eq!(fuse_scores(&scores(9.1, 8.7, 8.9), &w).unwrap(), 8.92);
        assert_eq!(fuse_scores(&scores(9.2, 8.3, 8.7), &w).unwrap(), 8.78);
        assert_eq!(fuse_scores(&scores(8.0, 7.0, 6.0), &w).unwrap(), 7.1);
        // left-to-right float arithmetic misses the last case by one ulp
        assert_ne!(8.0 * 0.4 + 7.0 * 0.3 + 6.0 * 0.3, 7.1);
    }

    #[test]
    fn display_truncates_to_tenths() {
        assert_eq!(display_score(8.92), "8.9");
        assert_eq!(display_score(8.78), "8.7");
        assert_eq!(display_score(7.1), "7.1");
        assert_eq!(display_score(7.099999999999999), "7.1");
        assert_eq!(display_score(10.0), "10.0");
    }

    #[test]
    fn exact_sum_matches_rational_oracle() {
        let cases: &[&[f64]] = &[
            &[0.1, 0.2, 0.3],
            &[1e16, 1.0, -1e16],
            &[1e308, 1e308, -1e308],
            &[0.1; 10],
            &[3.2, 2.1, 1.8],
            &[1.0, 1e-16, 1e-16],
        ];
        for values in cases {
            let got = exact_sum(values.iter().copied());
            let exact = values.iter().fold(BigRational::from_integer(BigInt::from(0)), |acc, v| acc + rational(*v));
            if got.is_finite() {
                assert!(is_nearest(got, &exact), "{values:?} -> {got}");
            }
        }
        assert_eq!(exact_sum([1.0, 1e-16, 1e-16]), 1.0000000000000002);
        assert_eq!(exact_sum(std::iter::empty()), 0.0);
    }

    #[test]
    fn equal_thirds_on_case_three() {
        assert_eq!(fuse_scores(&scores(8.0, 7.0, 6.0), &WeightVector::equal()).unwrap(), 7.0);
        let cultural_only = WeightVector::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(fuse_scores(&scores(9.1, 8.7, 8.9), &cultural_only).unwrap(), 9.1);
    }

    #[test]
    fn missing_perspective_and_bad_weights() {
        let mut s = scores(1.0, 2.0, 3.0);
        s.remove(&Perspective::Ethical);
        assert!(matches!(fuse_scores(&s, &WeightVector::default()), Err(EngineError::MissingPerspective(Perspective::Ethical))));
        assert!(WeightVector::new(0.5, 0.5, 0.5).is_err());
        assert!(WeightVector::new(-0.1, 0.6, 0.5).is_err());
        assert!("0.4,0.3".parse::<WeightVector>().is_err());
        assert_eq!("0.4, 0.3, 0.3".parse::<WeightVector>().unwrap(), WeightVector::default());
    }

    #[test]
    fn recommendation_tie_break() {
        let codes = ["USA", "SWE", "DEU", "CAN", "AUS"];
        let equal: BTreeMap<_, _> = codes.iter().map(|c| (CountryCode::new(c).unwrap(), 7.0)).collect();
        assert_eq!(recommend(&equal).unwrap().as_str(), "AUS");
        let single = BTreeMap::from([(CountryCode::new("SWE").unwrap(), 3.0)]);
        assert_eq!(recommend(&single).unwrap().as_str(), "SWE");
        assert!(matches!(recommend(&BTreeMap::new()), Err(EngineError::EmptyCandidateSet)));
        let mut m = equal.clone();
        m.insert(CountryCode::new("DEU").unwrap(), 8.92);
        assert_eq!(recommend(&m).unwrap().as_str(), "DEU");
    }

    #[test]
    fn shifted_keeps_ratio() {
        let w = WeightVector::default().shifted(Perspective::Cultural, 0.6).unwrap();
        assert!((w.emotional - 0.2).abs() < 1e-12 && (w.ethical - 0.2).abs() < 1e-12);
    }
}
