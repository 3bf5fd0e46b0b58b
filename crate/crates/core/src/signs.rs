//! Packed vectors over `{-1, +1}`.

use std::fmt;

use rand::RngCore;

use crate::error::{param, Result};

/// A single `±1` value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn from_int(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => param(format!("expected +1 or -1, got {v}")),
        }
    }

    /// Sign of `v`, with zero mapped to `+1`.
    pub fn of(v: f64) -> Self {
        if v >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// A fixed-length vector in `{-1, +1}^n`, one bit per entry (`1` encodes `+1`).
///
/// Bits past `len` in the last word are always zero, so word-wise equality and
/// hashing agree with entry-wise equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignVector {
    len: usize,
    words: Vec<u64>,
}

fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl SignVector {
    pub fn all_minus(len: usize) -> Self {
        Self {
            len,
            words: vec![0; word_count(len)],
        }
    }

    pub fn all_plus(len: usize) -> Self {
        let mut v = Self {
            len,
            words: vec![u64::MAX; word_count(len)],
        };
        v.clear_tail();
        v
    }

    pub fn from_signs(signs: &[Sign]) -> Self {
        let mut v = Self::all_minus(signs.len());
        for (i, s) in signs.iter().enumerate() {
            if *s == Sign::Plus {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        v
    }

    pub fn from_ints(values: &[i64]) -> Result<Self> {
        let signs = values.iter().map(|&v| Sign::from_int(v)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_signs(&signs))
    }

    /// Parses a string of `+` and `-` characters.
    pub fn parse_pm(s: &str) -> Result<Self> {
        let signs = s
            .chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' => Ok(Sign::Minus),
                other => param(format!("unexpected character {other:?} in sign string")),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_signs(&signs))
    }

    /// Uniformly random vector.
    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = Self {
            len,
            words: (0..word_count(len)).map(|_| rng.next_u64()).collect(),
        };
        v.clear_tail();
        v
    }

    /// Independent entries equal to `+1` with probability `(1 + mean) / 2`.
    pub fn random_with_mean<R: RngCore + ?Sized>(len: usize, mean: f64, rng: &mut R) -> Self {
        let p_plus = (1.0 + mean) / 2.0;
        let mut v = Self::all_minus(len);
        for w in v.words.iter_mut() {
            *w = bernoulli_word(p_plus, rng);
        }
        v.clear_tail();
        v
    }

    /// Copy of `self` with each entry negated independently with probability `p`.
    pub fn with_flips<R: RngCore + ?Sized>(&self, p: f64, rng: &mut R) -> Self {
        let mut out = self.clone();
        for w in out.words.iter_mut() {
            *w ^= bernoulli_word(p, rng);
        }
        out.clear_tail();
        out
    }

    /// Coordinate-wise majority of equal-length vectors, `+1` on ties.
    ///
    /// Counts `+1` entries with a bit-sliced counter (one bit plane per
    /// binary digit of the count), so the cost is word-parallel.
    pub fn majority(vectors: &[&SignVector]) -> Result<SignVector> {
        let Some(first) = vectors.first() else {
            return param("majority of an empty list");
        };
        let len = first.len;
        if let Some(v) = vectors.iter().find(|v| v.len != len) {
            return param(format!("majority over lengths {len} and {}", v.len));
        }
        let k = vectors.len();
        let planes = (usize::BITS - k.leading_zeros()) as usize;
        let words = word_count(len);
        let mut counter = vec![0u64; words * planes];
        for v in vectors {
            for (w, &bits) in v.words.iter().enumerate() {
                let slot = &mut counter[w * planes..(w + 1) * planes];
                let mut carry = bits;
                for plane in slot.iter_mut() {
                    if carry == 0 {
                        break;
                    }
                    let next = *plane & carry;
                    *plane ^= carry;
                    carry = next;
                }
            }
        }
        let mut out = Self::all_minus(len);
        for w in 0..words {
            let slot = &counter[w * planes..(w + 1) * planes];
            let mut word = 0u64;
            for lane in 0..64 {
                let count: usize = slot
                    .iter()
                    .enumerate()
                    .map(|(b, p)| ((p >> lane & 1) as usize) << b)
                    .sum();
                if 2 * count >= k {
                    word |= 1 << lane;
                }
            }
            out.words[w] = word;
        }
        out.clear_tail();
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> Sign {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        if self.words[i / 64] >> (i % 64) & 1 == 1 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn set(&mut self, i: usize, s: Sign) {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        match s {
            Sign::Plus => self.words[i / 64] |= 1 << (i % 64),
            Sign::Minus => self.words[i / 64] &= !(1 << (i % 64)),
        }
    }

    pub fn push(&mut self, s: Sign) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, s);
    }

    pub fn iter(&self) -> impl Iterator<Item = Sign> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Number of `+1` entries.
    pub fn count_plus(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `Σ_i self_i`.
    pub fn sum(&self) -> i64 {
        2 * self.count_plus() as i64 - self.len as i64
    }

    /// Number of positions where the vectors differ. Panics on length mismatch.
    pub fn hamming(&self, other: &SignVector) -> usize {
        assert_eq!(self.len, other.len, "length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// `⟨self, other⟩`. Panics on length mismatch.
    pub fn inner(&self, other: &SignVector) -> i64 {
        self.len as i64 - 2 * self.hamming(other) as i64
    }

    pub fn negated(&self) -> Self {
        let mut v = Self {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        v.clear_tail();
        v
    }

    /// The first `len` entries.
    pub fn truncated(&self, len: usize) -> Self {
        assert!(len <= self.len);
        let mut v = Self {
            len,
            words: self.words[..word_count(len)].to_vec(),
        };
        v.clear_tail();
        v
    }

    /// True iff `self` agrees with `other` on the first `self.len()` entries.
    pub fn is_prefix_of(&self, other: &SignVector) -> bool {
        if self.len > other.len {
            return false;
        }
        let full = self.len / 64;
        if self.words[..full] != other.words[..full] {
            return false;
        }
        let rem = self.len % 64;
        rem == 0 || (self.words[full] ^ other.words[full]) & ((1u64 << rem) - 1) == 0
    }

    pub fn to_pm_string(&self) -> String {
        self.iter().map(Sign::as_char).collect()
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "SignVector({})", self.to_pm_string())
        } else {
            write!(f, "SignVector(len={}, plus={})", self.len, self.count_plus())
        }
    }
}

/// Bernoulli draw with success probability `p`, compared at 64-bit resolution.
/// Bits of `p` kept by [`bernoulli_word`].
const WORD_PRECISION: u32 = 48;

/// A word whose 64 bits are independent Bernoulli(`p`) draws, with `p`
/// rounded to a multiple of 2⁻⁴⁸.
///
/// Reads the binary expansion of `p` from its least significant set bit up:
/// OR-ing a fair random word for a 1 digit and AND-ing for a 0 digit maps
/// P(bit) from q to (q + d)/2, so after the last digit P(bit) equals the
/// truncated expansion.
pub(crate) fn bernoulli_word<R: RngCore + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return u64::MAX;
    }
    let digits = (p * (1u64 << WORD_PRECISION) as f64).round() as u64;
    if digits == 0 {
        return 0;
    }
    if digits >= 1 << WORD_PRECISION {
        return u64::MAX;
    }
    let mut w = 0u64;
    for i in digits.trailing_zeros()..WORD_PRECISION {
        let r = rng.next_u64();
        w = if digits >> i & 1 == 1 { w | r } else { w & r };
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use proptest::prelude::*;

    fn naive_inner(a: &SignVector, b: &SignVector) -> i64 {
        a.iter().zip(b.iter()).map(|(x, y)| x.value() * y.value()).sum()
    }

    #[test]
    fn parse_and_print() {
        let v = SignVector::parse_pm("+-+").unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.to_pm_string(), "+-+");
        assert_eq!(v.sum(), 1);
        assert!(SignVector::parse_pm("+x").is_err());
        assert!(SignVector::from_ints(&[1, 0]).is_err());
    }

    #[test]
    fn push_across_word_boundary() {
        let mut v = SignVector::all_minus(0);
        for i in 0..130 {
            v.push(if i % 3 == 0 { Sign::Plus } else { Sign::Minus });
        }
        assert_eq!(v.len(), 130);
        assert_eq!(v.count_plus(), 44);
        assert_eq!(v.get(129), Sign::Plus);
    }

    #[test]
    fn flips_at_rate() {
        let mut rng = RandomSource::new(3, 0).rng();
        let x = SignVector::random(100_000, &mut rng);
        let y = x.with_flips(0.25, &mut rng);
        let rate = x.hamming(&y) as f64 / 1e5;
        assert!((rate - 0.25).abs() < 0.005, "{rate}");
    }

    #[test]
    fn majority_matches_naive_sum() {
        let mut rng = RandomSource::new(5, 0).rng();
        for k in 1..12 {
            let vs: Vec<SignVector> = (0..k).map(|_| SignVector::random(150, &mut rng)).collect();
            let refs: Vec<&SignVector> = vs.iter().collect();
            let m = SignVector::majority(&refs).unwrap();
            for i in 0..150 {
                let s: i64 = vs.iter().map(|v| v.get(i).value()).sum();
                assert_eq!(m.get(i), if s >= 0 { Sign::Plus } else { Sign::Minus });
            }
        }
        assert!(SignVector::majority(&[]).is_err());
    }

    #[test]
    fn word_bernoulli_rate() {
        let mut rng = RandomSource::new(4, 0).rng();
        for p in [0.0, 0.1, 1.0 / 3.0, 0.9, 1.0] {
            let words = 20_000;
            let ones: u32 = (0..words).map(|_| bernoulli_word(p, &mut rng).count_ones()).sum();
            let total = (words * 64) as f64;
            let sd = (p * (1.0 - p) / total).sqrt();
            assert!((ones as f64 / total - p).abs() <= 4.0 * sd + 1e-12, "p={p}");
        }
        let v = SignVector::random_with_mean(1000, -1.0, &mut rng);
        assert_eq!(v.count_plus(), 0);
        let v = SignVector::random_with_mean(1000, 1.0, &mut rng);
        assert_eq!(v.count_plus(), 1000);
    }

    proptest! {
        #[test]
        fn inner_matches_naive(bits_a in proptest::collection::vec(any::<bool>(), 0..200), seed in any::<u64>()) {
            let a = SignVector::from_signs(&bits_a.iter().map(|&b| if b { Sign::Plus } else { Sign::Minus }).collect::<Vec<_>>());
            let mut rng = RandomSource::new(seed, 0).rng();
            let b = SignVector::random(a.len(), &mut rng);
            prop_assert_eq!(a.inner(&b), naive_inner(&a, &b));
            prop_assert_eq!(a.negated().inner(&a), -(a.len() as i64));
        }

        #[test]
        fn truncation_is_prefix(seed in any::<u64>(), len in 0usize..200, cut in 0usize..200) {
            let mut rng = RandomSource::new(seed, 1).rng();
            let v = SignVector::random(len, &mut rng);
            let cut = cut.min(len);
            let t = v.truncated(cut);
            prop_assert!(t.is_prefix_of(&v));
            prop_assert_eq!(t.len(), cut);
            if cut < len {
                let mut bad = t.clone();
                bad.push(v.get(cut).flip());
                prop_assert!(!bad.is_prefix_of(&v));
            }
        }
    }
}
