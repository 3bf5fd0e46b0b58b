//! Datasets over the three data universes and the replacement adjacency relation.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::queries::BitString;
use crate::signs::{Sign, SignVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniverseTag {
    SignBit,
    BitString,
    UnitReal,
}

/// An owned element of one of the universes.
#[derive(Debug, Clone, PartialEq)]
pub enum UniverseElement {
    Sign(Sign),
    Bits(BitString),
    Real(f64),
}

impl UniverseElement {
    pub fn tag(&self) -> UniverseTag {
        match self {
            UniverseElement::Sign(_) => UniverseTag::SignBit,
            UniverseElement::Bits(_) => UniverseTag::BitString,
            UniverseElement::Real(_) => UniverseTag::UnitReal,
        }
    }

    pub fn as_row(&self) -> RowRef<'_> {
        match self {
            UniverseElement::Sign(s) => RowRef::Sign(*s),
            UniverseElement::Bits(b) => RowRef::Bits(b),
            UniverseElement::Real(r) => RowRef::Real(*r),
        }
    }
}

/// A borrowed view of one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowRef<'a> {
    Sign(Sign),
    Bits(&'a BitString),
    Real(f64),
}

/// An ordered tuple of rows drawn from a single universe.
///
/// Storage is per universe, so rows cannot mix tags. `UnitReal` rows are
/// checked to lie in `[0, 1]` on construction.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Signs(SignVector),
    Strings(Vec<BitString>),
    Reals(Vec<f64>),
}

impl Dataset {
    pub fn signs(v: SignVector) -> Self {
        Dataset::Signs(v)
    }

    pub fn strings(rows: Vec<BitString>) -> Self {
        Dataset::Strings(rows)
    }

    pub fn reals(rows: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = rows.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return param(format!("row {i} = {v} lies outside [0, 1]"));
        }
        Ok(Dataset::Reals(rows))
    }

    pub fn universe(&self) -> UniverseTag {
        match self {
            Dataset::Signs(_) => UniverseTag::SignBit,
            Dataset::Strings(_) => UniverseTag::BitString,
            Dataset::Reals(_) => UniverseTag::UnitReal,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Signs(v) => v.len(),
            Dataset::Strings(v) => v.len(),
            Dataset::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> RowRef<'_> {
        match self {
            Dataset::Signs(v) => RowRef::Sign(v.get(i)),
            Dataset::Strings(v) => RowRef::Bits(&v[i]),
            Dataset::Reals(v) => RowRef::Real(v[i]),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = RowRef<'_>> {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn as_signs(&self) -> Result<&SignVector> {
        match self {
            Dataset::Signs(v) => Ok(v),
            _ => param(format!("expected a sign-bit dataset, got {:?}", self.universe())),
        }
    }

    pub fn as_strings(&self) -> Result<&[BitString]> {
        match self {
            Dataset::Strings(v) => Ok(v),
            _ => param(format!("expected a bit-string dataset, got {:?}", self.universe())),
        }
    }

    pub fn as_reals(&self) -> Result<&[f64]> {
        match self {
            Dataset::Reals(v) => Ok(v),
            _ => param(format!("expected a unit-real dataset, got {:?}", self.universe())),
        }
    }

    fn differences(&self, other: &Dataset) -> Result<usize> {
        if self.universe() != other.universe() || self.len() != other.len() {
            return param(format!(
                "cannot compare a {:?} dataset of length {} with a {:?} dataset of length {}",
                self.universe(),
                self.len(),
                other.universe(),
                other.len()
            ));
        }
        Ok(match (self, other) {
            (Dataset::Signs(a), Dataset::Signs(b)) => a.hamming(b),
            (Dataset::Strings(a), Dataset::Strings(b)) => a.iter().zip(b).filter(|(x, y)| x != y).count(),
            (Dataset::Reals(a), Dataset::Reals(b)) => a.iter().zip(b).filter(|(x, y)| x != y).count(),
            _ => unreachable!(),
        })
    }
}

/// True iff the datasets differ in at most one row.
pub fn adjacent(x: &Dataset, x2: &Dataset) -> Result<bool> {
    Ok(x.differences(x2)? <= 1)
}

/// Copy of `x` with row `index` replaced.
pub fn neighbor_of(x: &Dataset, index: usize, replacement: UniverseElement) -> Result<Dataset> {
    if index >= x.len() {
        return param(format!("row index {index} out of range for {} rows", x.len()));
    }
    let mut out = x.clone();
    match (&mut out, replacement) {
        (Dataset::Signs(v), UniverseElement::Sign(s)) => v.set(index, s),
        (Dataset::Strings(v), UniverseElement::Bits(b)) => v[index] = b,
        (Dataset::Reals(v), UniverseElement::Real(r)) => {
            if !(0.0..=1.0).contains(&r) {
                return param(format!("replacement {r} lies outside [0, 1]"));
            }
            v[index] = r;
        }
        (_, e) => {
            return param(format!(
                "replacement from {:?} does not match a {:?} dataset",
                e.tag(),
                x.universe()
            ))
        }
    }
    Ok(out)
}

/// `(ε, δ)` with `ε > 0` and `δ ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return param(format!("epsilon must be positive, got {epsilon}"));
        }
        if !(0.0..1.0).contains(&delta) {
            return param(format!("delta must lie in [0, 1), got {delta}"));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use proptest::prelude::*;

    fn signs(v: &[i64]) -> Dataset {
        Dataset::signs(SignVector::from_ints(v).unwrap())
    }

    #[test]
    fn adjacency_examples() {
        let x = signs(&[1, 1, 1]);
        assert!(adjacent(&x, &x).unwrap());
        assert!(adjacent(&x, &signs(&[1, -1, 1])).unwrap());
        assert!(!adjacent(&x, &signs(&[-1, -1, 1])).unwrap());
        assert!(adjacent(&x, &signs(&[1, 1])).is_err());
        assert!(adjacent(&x, &Dataset::reals(vec![0.0; 3]).unwrap()).is_err());
    }

    #[test]
    fn neighbor_examples() {
        let x = signs(&[1, 1]);
        let same = neighbor_of(&x, 0, UniverseElement::Sign(Sign::Plus)).unwrap();
        assert_eq!(same, x);
        assert!(adjacent(&x, &same).unwrap());
        let changed = neighbor_of(&x, 1, UniverseElement::Sign(Sign::Minus)).unwrap();
        assert_eq!(changed, signs(&[1, -1]));
        assert!(neighbor_of(&x, 2, UniverseElement::Sign(Sign::Minus)).is_err());
        assert!(neighbor_of(&x, 0, UniverseElement::Real(0.5)).is_err());
    }

    #[test]
    fn reals_are_range_checked() {
        assert!(Dataset::reals(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(Dataset::reals(vec![1.5]).is_err());
        assert!(Dataset::reals(vec![f64::NAN]).is_err());
        let x = Dataset::reals(vec![0.2]).unwrap();
        assert!(neighbor_of(&x, 0, UniverseElement::Real(-0.1)).is_err());
    }

    #[test]
    fn privacy_params_validation() {
        assert!(PrivacyParams::new(1.0, 0.0).is_ok());
        assert!(PrivacyParams::new(0.0, 0.0).is_err());
        assert!(PrivacyParams::new(1.0, 1.0).is_err());
        assert!(PrivacyParams::new(1.0, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn adjacency_is_symmetric_and_reflexive(seed in any::<u64>(), n in 1usize..40, flips in 0usize..3) {
            let mut rng = RandomSource::new(seed, 0).rng();
            let x = SignVector::random(n, &mut rng);
            let mut y = x.clone();
            for i in 0..flips.min(n) {
                y.set(i, y.get(i).flip());
            }
            let (x, y) = (Dataset::signs(x), Dataset::signs(y));
            prop_assert!(adjacent(&x, &x).unwrap());
            prop_assert_eq!(adjacent(&x, &y).unwrap(), adjacent(&y, &x).unwrap());
            prop_assert_eq!(adjacent(&x, &y).unwrap(), flips.min(n) <= 1);
        }
    }
}
