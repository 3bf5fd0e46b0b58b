use std::cmp::Ordering;
use std::fmt;

use crate::error::Result;
use crate::signs::{Sign, SignVector};

/// A finite string over `{-1, +1}`, possibly empty.
///
/// Ordered by length first, then lexicographically with `-` before `+`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString(SignVector);

impl BitString {
    pub fn empty() -> Self {
        BitString(SignVector::all_minus(0))
    }

    pub fn from_signs(signs: &[Sign]) -> Self {
        BitString(SignVector::from_signs(signs))
    }

    pub fn from_ints(values: &[i64]) -> Result<Self> {
        SignVector::from_ints(values).map(BitString)
    }

    /// Parses `+`/`-` characters; `""` and `"∅"` both denote the empty string.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "∅" {
            return Ok(Self::empty());
        }
        SignVector::parse_pm(s).map(BitString)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Sign {
        self.0.get(i)
    }

    pub fn push(&mut self, s: Sign) {
        self.0.push(s)
    }

    pub fn extend<I: IntoIterator<Item = Sign>>(&mut self, signs: I) {
        for s in signs {
            self.0.push(s);
        }
    }

    /// The first `len` symbols.
    pub fn prefix(&self, len: usize) -> BitString {
        BitString(self.0.truncated(len))
    }

    pub fn as_signs(&self) -> &SignVector {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Sign> + '_ {
        self.0.iter()
    }
}

/// True iff `|y| <= |x|` and `x` starts with `y`.
pub fn is_prefix(y: &BitString, x: &BitString) -> bool {
    y.0.is_prefix_of(&x.0)
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            // words hold symbol 0 in the lowest bit; reversing makes numeric order lexicographic
            let a = self.0.words().iter().map(|w| w.reverse_bits());
            let b = other.0.words().iter().map(|w| w.reverse_bits());
            a.cmp(b)
        })
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("∅")
        } else {
            f.write_str(&self.0.to_pm_string())
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use proptest::prelude::*;
    use rand::Rng;

    fn bs(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    #[test]
    fn prefix_examples() {
        assert!(is_prefix(&BitString::empty(), &bs("-+-")));
        assert!(is_prefix(&BitString::empty(), &BitString::empty()));
        assert!(is_prefix(&bs("+-+"), &bs("+-+")));
        assert!(!is_prefix(&bs("+"), &bs("-+")));
        assert!(!is_prefix(&bs("+-+"), &bs("+-")));
    }

    #[test]
    fn ordering_is_length_then_lexicographic() {
        let mut v = [bs("+"), bs("--"), bs("-"), BitString::empty(), bs("+-"), bs("-+")];
        v.sort();
        let shown: Vec<String> = v.iter().map(|b| b.to_string()).collect();
        assert_eq!(shown, ["∅", "-", "+", "--", "-+", "+-"]);
    }

    #[test]
    fn long_strings_order_lexicographically() {
        let mut a = bs(&"-".repeat(70));
        let mut b = a.clone();
        a.0.set(0, Sign::Plus);
        b.0.set(69, Sign::Plus);
        assert!(b < a);
    }

    fn random_string(rng: &mut crate::rng::Rng, max_len: usize) -> BitString {
        let len = rng.random_range(0..=max_len);
        BitString(SignVector::random(len, rng))
    }

    proptest! {
        #[test]
        fn prefix_is_transitive(seed in any::<u64>()) {
            let mut rng = RandomSource::new(seed, 0).rng();
            let c = random_string(&mut rng, 10);
            // bias towards related triples so the implication is exercised
            let b = if rng.random_bool(0.7) { c.prefix(rng.random_range(0..=c.len())) } else { random_string(&mut rng, 10) };
            let a = if rng.random_bool(0.7) { b.prefix(rng.random_range(0..=b.len())) } else { random_string(&mut rng, 10) };
            if is_prefix(&a, &b) && is_prefix(&b, &c) {
                prop_assert!(is_prefix(&a, &c));
            }
        }

        #[test]
        fn display_parse_roundtrip(seed in any::<u64>()) {
            let mut rng = RandomSource::new(seed, 1).rng();
            let s = random_string(&mut rng, 80);
            prop_assert_eq!(BitString::parse(&s.to_string()).unwrap(), s);
        }
    }
}
