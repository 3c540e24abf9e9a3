//! Reduced words in the free group on `r` generators.
//!
//! Letters are ordered `a1 < A1 < a2 < A2 < ...` (capital = inverse). This
//! order fixes every enumeration in the crate: spheres are emitted
//! lexicographically under it, and table indices follow it.

use num_bigint::BigUint;
use num_traits::One;
use std::fmt;

use crate::error::{Error, Result};

/// A generator `a_i` or its inverse. Stored as `2(i-1) + inverse`, so the
/// derived order is the canonical letter order and inversion flips bit 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(u16);

impl Letter {
    pub fn new(index: usize, inverse: bool) -> Letter {
        assert!(index >= 1, "generator indices start at 1");
        Letter(((index - 1) * 2 + inverse as usize) as u16)
    }

    pub fn generator(index: usize) -> Letter {
        Letter::new(index, false)
    }

    pub fn from_code(code: usize) -> Letter {
        Letter(code as u16)
    }

    /// Position in the canonical order, `0..2r`.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn index(self) -> usize {
        (self.0 as usize >> 1) + 1
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn sign(self) -> i8 {
        if self.is_inverse() {
            -1
        } else {
            1
        }
    }

    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = if self.is_inverse() { 'A' } else { 'a' };
        write!(f, "{c}{}", self.index())
    }
}

/// The free group of a fixed rank `r >= 2`. Cheap to copy; every word carries it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreeGroup {
    rank: usize,
}

impl FreeGroup {
    pub fn new(rank: usize) -> Result<FreeGroup> {
        if rank < 2 {
            return Err(Error::InvalidParameter(format!("rank must be >= 2, got {rank}")));
        }
        Ok(FreeGroup { rank })
    }

    pub fn rank(self) -> usize {
        self.rank
    }

    /// `|S| = 2r`.
    pub fn num_letters(self) -> usize {
        2 * self.rank
    }

    /// `2r - 1`, the branching factor of the Cayley tree past the root.
    pub fn branching(self) -> usize {
        2 * self.rank - 1
    }

    pub fn letters(self) -> impl Iterator<Item = Letter> + Clone {
        (0..self.num_letters()).map(Letter::from_code)
    }

    pub fn contains(self, l: Letter) -> bool {
        l.code() < self.num_letters()
    }

    pub fn identity(self) -> ReducedWord {
        ReducedWord { group: self, letters: Vec::new() }
    }

    pub fn letter_word(self, l: Letter) -> Result<ReducedWord> {
        self.reduce([l])
    }

    /// Freely reduces a letter sequence.
    pub fn reduce<I: IntoIterator<Item = Letter>>(self, seq: I) -> Result<ReducedWord> {
        let mut out: Vec<Letter> = Vec::new();
        for l in seq {
            if !self.contains(l) {
                return Err(Error::RankMismatch { expected: self.rank, found: l.index() });
            }
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Ok(ReducedWord { group: self, letters: out })
    }

    /// Builds a word that is already known to be reduced, checking that it is.
    pub fn reduced(self, letters: Vec<Letter>) -> Result<ReducedWord> {
        for (i, l) in letters.iter().enumerate() {
            if !self.contains(*l) {
                return Err(Error::RankMismatch { expected: self.rank, found: l.index() });
            }
            if i > 0 && letters[i - 1] == l.inverse() {
                return Err(Error::InvalidParameter(format!("word not reduced at position {}", i + 1)));
            }
        }
        Ok(ReducedWord { group: self, letters })
    }

    /// Parses `e` or a run of `a<i>` / `A<i>` tokens, e.g. `a1A2a1`.
    pub fn parse_word(self, text: &str) -> Result<ReducedWord> {
        let text = text.trim();
        if text == "e" {
            return Ok(self.identity());
        }
        let bytes = text.as_bytes();
        let mut letters = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let inverse = match bytes[i] {
                b'a' => false,
                b'A' => true,
                _ => return Err(Error::parse(1, i + 1, format!("expected 'a' or 'A' in {text:?}"))),
            };
            let start = i + 1;
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            let index: usize = text[start..end]
                .parse()
                .map_err(|_| Error::parse(1, start + 1, format!("missing generator index in {text:?}")))?;
            if index == 0 || index > self.rank {
                return Err(Error::parse(1, start + 1, format!("generator a{index} outside rank {}", self.rank)));
            }
            letters.push(Letter::new(index, inverse));
            i = end;
        }
        if letters.is_empty() {
            return Err(Error::parse(1, 1, "empty word; write 'e' for the identity"));
        }
        self.reduce(letters)
    }

    /// `|S_n(e)|`: 1 for `n = 0`, else `2r(2r-1)^{n-1}`.
    pub fn sphere_size(self, n: usize) -> BigUint {
        if n == 0 {
            BigUint::one()
        } else {
            BigUint::from(self.num_letters()) * BigUint::from(self.branching()).pow(n as u32 - 1)
        }
    }

    /// `|S_n(e)|` as a machine integer, when it fits.
    pub fn sphere_len(self, n: usize) -> Option<u128> {
        if n == 0 {
            return Some(1);
        }
        (self.branching() as u128)
            .checked_pow(n as u32 - 1)?
            .checked_mul(self.num_letters() as u128)
    }

    /// Lazy lexicographic enumeration of `S_n(e)`.
    pub fn sphere(self, n: usize) -> Sphere {
        let end = self.sphere_len(n).expect("sphere too large to enumerate");
        Sphere { group: self, radius: n, next: 0, end }
    }

    /// Position of a word inside the lexicographic enumeration of its sphere.
    pub fn sphere_index(self, w: &ReducedWord) -> usize {
        let mut idx = 0usize;
        let mut prev: Option<Letter> = None;
        for &l in &w.letters {
            idx = match prev {
                None => l.code(),
                Some(p) => {
                    let forbidden = p.inverse().code();
                    let digit = if l.code() < forbidden { l.code() } else { l.code() - 1 };
                    idx * self.branching() + digit
                }
            };
            prev = Some(l);
        }
        idx
    }

    /// Inverse of [`FreeGroup::sphere_index`].
    pub fn word_at(self, radius: usize, mut index: usize) -> ReducedWord {
        let mut digits = vec![0usize; radius];
        for i in (1..radius).rev() {
            digits[i] = index % self.branching();
            index /= self.branching();
        }
        if radius > 0 {
            digits[0] = index;
        }
        let mut letters: Vec<Letter> = Vec::with_capacity(radius);
        for (i, &d) in digits.iter().enumerate() {
            let l = if i == 0 {
                Letter::from_code(d)
            } else {
                let forbidden = letters[i - 1].inverse().code();
                Letter::from_code(if d < forbidden { d } else { d + 1 })
            };
            letters.push(l);
        }
        ReducedWord { group: self, letters }
    }
}

/// Iterator over `S_n(e)` in lexicographic order.
#[derive(Clone, Debug)]
pub struct Sphere {
    group: FreeGroup,
    radius: usize,
    next: u128,
    end: u128,
}

impl Iterator for Sphere {
    type Item = ReducedWord;

    fn next(&mut self) -> Option<ReducedWord> {
        if self.next >= self.end {
            return None;
        }
        let w = self.group.word_at(self.radius, self.next as usize);
        self.next += 1;
        Some(w)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = (self.end - self.next).min(usize::MAX as u128) as usize;
        (rest, Some(rest))
    }
}

/// An element of the free group in reduced form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedWord {
    group: FreeGroup,
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn group(&self) -> FreeGroup {
        self.group
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    /// 1-based access, matching the `ξ_i` convention.
    pub fn letter(&self, i: usize) -> Letter {
        self.letters[i - 1]
    }

    pub fn prefix(&self, k: usize) -> ReducedWord {
        ReducedWord { group: self.group, letters: self.letters[..k].to_vec() }
    }

    pub fn suffix_from(&self, k: usize) -> ReducedWord {
        ReducedWord { group: self.group, letters: self.letters[k..].to_vec() }
    }

    /// Appends `l` if the result stays reduced.
    pub fn extended(&self, l: Letter) -> Option<ReducedWord> {
        if self.last() == Some(l.inverse()) || !self.group.contains(l) {
            return None;
        }
        let mut letters = self.letters.clone();
        letters.push(l);
        Some(ReducedWord { group: self.group, letters })
    }

    /// Reduced one-letter extensions, in letter order.
    pub fn children(&self) -> impl Iterator<Item = ReducedWord> + '_ {
        self.group.letters().filter_map(move |l| self.extended(l))
    }

    pub fn invert(&self) -> ReducedWord {
        ReducedWord {
            group: self.group,
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    fn check_rank(&self, other: &ReducedWord) -> Result<()> {
        if self.group != other.group {
            return Err(Error::RankMismatch { expected: self.group.rank, found: other.group.rank });
        }
        Ok(())
    }

    /// Product `self · other` and the number of cancelled letter pairs.
    pub fn multiply(&self, other: &ReducedWord) -> Result<(ReducedWord, usize)> {
        self.check_rank(other)?;
        let mut k = 0;
        let (u, v) = (&self.letters, &other.letters);
        while k < u.len() && k < v.len() && u[u.len() - 1 - k] == v[k].inverse() {
            k += 1;
        }
        let mut letters = Vec::with_capacity(u.len() + v.len() - 2 * k);
        letters.extend_from_slice(&u[..u.len() - k]);
        letters.extend_from_slice(&v[k..]);
        Ok((ReducedWord { group: self.group, letters }, k))
    }

    /// `self · other` without the cancellation count.
    pub fn times(&self, other: &ReducedWord) -> Result<ReducedWord> {
        self.multiply(other).map(|(w, _)| w)
    }

    /// Word metric `d(g, h) = |g^{-1} h|`.
    pub fn distance(&self, other: &ReducedWord) -> Result<usize> {
        Ok(self.invert().multiply(other)?.0.len())
    }

    /// Membership in the index-2 subgroup of even-length words.
    pub fn in_even_subgroup(&self) -> bool {
        self.letters.len().is_multiple_of(2)
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> FreeGroup {
        FreeGroup::new(2).unwrap()
    }

    fn w(s: &str) -> ReducedWord {
        f2().parse_word(s).unwrap()
    }

    /// Rescan-until-stable cancellation, kept naive on purpose.
    fn naive_reduce(mut seq: Vec<Letter>) -> Vec<Letter> {
        loop {
            let pos = seq.windows(2).position(|p| p[0] == p[1].inverse());
            match pos {
                Some(i) => {
                    seq.drain(i..i + 2);
                }
                None => return seq,
            }
        }
    }

    fn random_letters(rng: &mut impl Rng, g: FreeGroup, max_len: usize) -> Vec<Letter> {
        let len = rng.gen_range(0..=max_len);
        (0..len).map(|_| Letter::from_code(rng.gen_range(0..g.num_letters()))).collect()
    }

    fn random_word(rng: &mut impl Rng, g: FreeGroup, max_len: usize) -> ReducedWord {
        g.reduce(random_letters(rng, g, max_len)).unwrap()
    }

    #[test]
    fn letter_order_and_inverse() {
        let order: Vec<String> = f2().letters().map(|l| l.to_string()).collect();
        assert_eq!(order, ["a1", "A1", "a2", "A2"]);
        let l = Letter::new(2, true);
        assert_eq!(l.inverse().inverse(), l);
        assert_eq!(l.inverse().index(), 2);
        assert_eq!(l.sign(), -1);
    }

    #[test]
    fn reduce_examples() {
        let a1 = Letter::generator(1);
        let a2 = Letter::generator(2);
        assert!(f2().reduce([a1, a1.inverse()]).unwrap().is_identity());
        let r = f2().reduce([a1, a2, a2.inverse(), a1]).unwrap();
        assert_eq!(r.to_string(), "a1a1");
        assert_eq!(
            f2().reduce([Letter::generator(3)]),
            Err(Error::RankMismatch { expected: 2, found: 3 })
        );
    }

    #[test]
    fn reduce_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let seq = random_letters(&mut rng, f2(), 20);
            let fast = f2().reduce(seq.clone()).unwrap();
            assert_eq!(fast.letters(), naive_reduce(seq).as_slice());
            assert_eq!(f2().reduce(fast.letters().to_vec()).unwrap(), fast);
        }
    }

    #[test]
    fn multiply_examples() {
        let (p, k) = w("a1a2").multiply(&w("A2A1")).unwrap();
        assert!(p.is_identity());
        assert_eq!(k, 2);
        let (p, k) = w("a1a2").multiply(&w("A2a1")).unwrap();
        assert_eq!(p, w("a1a1"));
        assert_eq!(k, 1);
        let f3 = FreeGroup::new(3).unwrap();
        assert!(w("a1").multiply(&f3.parse_word("a1").unwrap()).is_err());
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let (a, b, c) = (
                random_word(&mut rng, f2(), 12),
                random_word(&mut rng, f2(), 12),
                random_word(&mut rng, f2(), 12),
            );
            let ab = a.distance(&b).unwrap();
            assert_eq!(ab, b.distance(&a).unwrap());
            assert_eq!(a.distance(&a).unwrap(), 0);
            assert!(a.distance(&c).unwrap() <= ab + b.distance(&c).unwrap());
        }
    }

    #[test]
    fn sphere_sizes() {
        assert_eq!(f2().sphere(1).count(), 4);
        assert_eq!(f2().sphere(3).count(), 36);
        assert_eq!(f2().sphere_size(3), BigUint::from(36u32));
        for r in 2..=3 {
            let g = FreeGroup::new(r).unwrap();
            assert_eq!(g.sphere_size(1), g.sphere_size(0) * BigUint::from(2 * r));
            for n in 1..10 {
                assert_eq!(g.sphere_size(n + 1), g.sphere_size(n) * BigUint::from(2 * r - 1));
            }
        }
    }

    #[test]
    fn sphere_matches_filtered_raw_strings() {
        for r in 2..=3 {
            let g = FreeGroup::new(r).unwrap();
            for n in 0..=5usize {
                if r == 3 && n == 5 {
                    continue;
                }
                let mut expected = Vec::new();
                let total = g.num_letters().pow(n as u32);
                for mut code in 0..total {
                    let mut letters = Vec::new();
                    for _ in 0..n {
                        letters.push(Letter::from_code(code % g.num_letters()));
                        code /= g.num_letters();
                    }
                    letters.reverse();
                    let red = g.reduce(letters.clone()).unwrap();
                    if red.len() == n {
                        expected.push(red);
                    }
                }
                // raw strings were generated in lexicographic order already
                let got: Vec<_> = g.sphere(n).collect();
                assert_eq!(got, expected, "r={r} n={n}");
            }
        }
    }

    #[test]
    fn sphere_index_round_trip() {
        let g = FreeGroup::new(3).unwrap();
        for (i, word) in g.sphere(4).enumerate() {
            assert_eq!(g.sphere_index(&word), i);
        }
    }

    #[test]
    fn even_subgroup() {
        assert!(f2().identity().in_even_subgroup());
        assert!(!w("a1").in_even_subgroup());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 100 {
            let (u, v) = (random_word(&mut rng, f2(), 9), random_word(&mut rng, f2(), 9));
            if u.len() % 2 == 1 && v.len() % 2 == 1 {
                assert!(u.times(&v).unwrap().in_even_subgroup());
                checked += 1;
            }
        }
    }

    #[test]
    fn text_round_trip() {
        for s in ["e", "a1A2a1", "A1A1a2"] {
            assert_eq!(w(s).to_string(), s);
        }
        assert_eq!(w("a1A1").to_string(), "e");
        assert!(f2().parse_word("a3").is_err());
        assert!(f2().parse_word("b1").is_err());
        assert!(f2().parse_word("").is_err());
    }

    proptest! {
        #[test]
        fn inverse_and_parity(codes in proptest::collection::vec(0usize..4, 0..30),
                              other in proptest::collection::vec(0usize..4, 0..30)) {
            let g = f2();
            let u = g.reduce(codes.into_iter().map(Letter::from_code)).unwrap();
            let v = g.reduce(other.into_iter().map(Letter::from_code)).unwrap();
            prop_assert!(u.times(&u.invert()).unwrap().is_identity());
            let (uv, k) = u.multiply(&v).unwrap();
            prop_assert_eq!(uv.len(), u.len() + v.len() - 2 * k);
            prop_assert_eq!(uv.len() % 2, (u.len() + v.len()) % 2);
            prop_assert_eq!(g.parse_word(&uv.to_string()).unwrap(), uv);
        }
    }
}
