//! Transfer-operator recursion for sums over spheres.
//!
//! `V_n^t(x)` is the sum of `f(g^{-1}x)` over reduced `g` of length `n` whose
//! first letter is `t`. Writing `g = t·g'` gives
//!
//! ```text
//! V_1^t(x)     = f(t^{-1}x)
//! V_{n+1}^t(x) = Σ_{s ≠ t^{-1}} V_n^s(t^{-1}x)
//! ```
//!
//! and each step costs `O(2r·N)` once the per-point totals are kept.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::actions::FiniteAction;
use crate::free_group::Letter;
use super::Averages;
use crate::actions::Observable;
use crate::rational::{to_f64, Rational};

const PAR_MIN_LEN: usize = 2048;

pub(crate) trait Scalar: Clone + Send + Sync + Zero {
    fn add_checked(&self, other: &Self) -> Option<Self>;
    fn sub_checked(&self, other: &Self) -> Option<Self>;
}

impl Scalar for i128 {
    fn add_checked(&self, other: &Self) -> Option<Self> {
        self.checked_add(*other)
    }
    fn sub_checked(&self, other: &Self) -> Option<Self> {
        self.checked_sub(*other)
    }
}

impl Scalar for BigInt {
    fn add_checked(&self, other: &Self) -> Option<Self> {
        Some(self + other)
    }
    fn sub_checked(&self, other: &Self) -> Option<Self> {
        Some(self - other)
    }
}

impl Scalar for f64 {
    fn add_checked(&self, other: &Self) -> Option<Self> {
        Some(self + other)
    }
    fn sub_checked(&self, other: &Self) -> Option<Self> {
        Some(self - other)
    }
}

/// The tables of one level of the recursion.
#[derive(Clone)]
pub(crate) struct Levels<'a, T> {
    action: &'a FiniteAction,
    level: usize,
    base: Vec<T>,
    /// `v[t.code()][x] = V_level^t(x)`; empty at level 0.
    v: Vec<Vec<T>>,
    /// `Σ_t V_level^t(x)`, or `f(x)` at level 0.
    totals: Vec<T>,
}

impl<'a, T: Scalar> Levels<'a, T> {
    pub(crate) fn new(action: &'a FiniteAction, f: Vec<T>) -> Self {
        Levels { action, level: 0, totals: f.clone(), base: f, v: Vec::new() }
    }

    pub(crate) fn level(&self) -> usize {
        self.level
    }

    /// Advances one level; `None` on arithmetic overflow, leaving `self` unchanged.
    pub(crate) fn step(&mut self) -> Option<()> {
        let group = self.action.group();
        let n = self.action.len();
        let mut next = Vec::with_capacity(group.num_letters());
        for t in group.letters() {
            let back = self.action.table(t.inverse());
            let row: Option<Vec<T>> = if self.level == 0 {
                Some(back.iter().map(|&y| self.base[y as usize].clone()).collect())
            } else {
                let skip = &self.v[t.inverse().code()];
                (0..n)
                    .into_par_iter()
                    .with_min_len(PAR_MIN_LEN)
                    .map(|x| {
                        let y = back[x] as usize;
                        self.totals[y].sub_checked(&skip[y])
                    })
                    .collect()
            };
            next.push(row?);
        }
        let totals: Option<Vec<T>> = (0..n)
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|x| next.iter().try_fold(T::zero(), |acc, row| acc.add_checked(&row[x])))
            .collect();
        self.totals = totals?;
        self.v = next;
        self.level += 1;
        Some(())
    }

    /// `Σ_{|g| = level} f(g^{-1}y)`.
    pub(crate) fn total(&self, y: usize) -> &T {
        &self.totals[y]
    }

    /// The sum over words of the current length whose first letter avoids
    /// `excluded`. At level 0 this is `f(y)` whatever is excluded.
    pub(crate) fn excluding(&self, y: usize, excluded: &[Letter]) -> Option<T> {
        if self.level == 0 {
            return Some(self.base[y].clone());
        }
        excluded.iter().try_fold(self.totals[y].clone(), |acc, l| acc.sub_checked(&self.v[l.code()][y]))
    }

    fn map<U: Scalar>(&self, f: impl Fn(&T) -> U + Sync) -> Levels<'a, U> {
        Levels {
            action: self.action,
            level: self.level,
            base: self.base.iter().map(&f).collect(),
            v: self.v.iter().map(|row| row.iter().map(&f).collect()).collect(),
            totals: self.totals.iter().map(&f).collect(),
        }
    }
}

/// Exact engine: `f` is scaled to integers by the lcm of its denominators and
/// summed in `i128`, switching to big integers on the first overflow.
#[derive(Clone)]
pub(crate) enum ExactLevels<'a> {
    Small(Levels<'a, i128>),
    Big(Levels<'a, BigInt>),
}

pub(crate) fn common_denominator(values: &[Rational]) -> BigInt {
    values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

impl<'a> ExactLevels<'a> {
    /// Returns the engine and the scale `D`: sums are `D` times the true sums.
    pub(crate) fn new(action: &'a FiniteAction, f: &[Rational]) -> (Self, BigInt) {
        let d = common_denominator(f);
        let scaled: Vec<BigInt> = f.iter().map(|v| v.numer() * (&d / v.denom())).collect();
        let small: Option<Vec<i128>> = scaled.iter().map(|v| v.to_i128()).collect();
        let engine = match small {
            Some(s) => ExactLevels::Small(Levels::new(action, s)),
            None => ExactLevels::Big(Levels::new(action, scaled)),
        };
        (engine, d)
    }

    pub(crate) fn level(&self) -> usize {
        match self {
            ExactLevels::Small(l) => l.level(),
            ExactLevels::Big(l) => l.level(),
        }
    }

    pub(crate) fn step(&mut self) {
        if let ExactLevels::Small(l) = self {
            if l.step().is_some() {
                return;
            }
            *self = ExactLevels::Big(l.map(|&v| BigInt::from(v)));
        }
        if let ExactLevels::Big(l) = self {
            l.step().expect("big integers do not overflow");
        }
    }

    pub(crate) fn advance_to(&mut self, level: usize) {
        assert!(level >= self.level(), "the recursion only moves forward");
        while self.level() < level {
            self.step();
        }
    }

    pub(crate) fn total(&self, y: usize) -> BigInt {
        match self {
            ExactLevels::Small(l) => BigInt::from(*l.total(y)),
            ExactLevels::Big(l) => l.total(y).clone(),
        }
    }

    pub(crate) fn excluding(&self, y: usize, excluded: &[Letter]) -> BigInt {
        match self {
            ExactLevels::Small(l) => match l.excluding(y, excluded) {
                Some(v) => BigInt::from(v),
                None => excluded.iter().fold(BigInt::from(l.totals[y]), |acc, e| acc - l.v[e.code()][y]),
            },
            ExactLevels::Big(l) => l.excluding(y, excluded).unwrap(),
        }
    }
}

/// What the averaging operators need from a recursion: sums over words of
/// the current length, optionally with some first letters excluded.
pub(crate) trait SumEngine {
    type Value: Clone + Zero + std::ops::Add<Output = Self::Value> + std::ops::Mul<Output = Self::Value>;
    fn level(&self) -> usize;
    fn advance_to(&mut self, level: usize);
    fn total(&self, y: usize) -> Self::Value;
    fn excluding(&self, y: usize, excluded: &[Letter]) -> Self::Value;
    /// True sums are engine sums times this.
    fn unit(&self) -> Rational;
    /// A rational weight times the integer `scale`, in engine arithmetic.
    fn weight(q: &Rational, scale: &BigInt) -> Self::Value;
    fn finish(sums: Vec<Self::Value>, scale: &Rational) -> Averages;
}

/// [`ExactLevels`] together with its scale.
pub(crate) struct Exact<'a> {
    levels: ExactLevels<'a>,
    denom: BigInt,
}

impl<'a> Exact<'a> {
    pub(crate) fn new(action: &'a FiniteAction, f: &[Rational]) -> Self {
        let (levels, denom) = ExactLevels::new(action, f);
        Exact { levels, denom }
    }
}

impl SumEngine for Exact<'_> {
    type Value = BigInt;

    fn level(&self) -> usize {
        self.levels.level()
    }
    fn advance_to(&mut self, level: usize) {
        self.levels.advance_to(level)
    }
    fn total(&self, y: usize) -> BigInt {
        self.levels.total(y)
    }
    fn excluding(&self, y: usize, excluded: &[Letter]) -> BigInt {
        self.levels.excluding(y, excluded)
    }
    fn unit(&self) -> Rational {
        Rational::new(BigInt::one(), self.denom.clone())
    }
    fn weight(q: &Rational, scale: &BigInt) -> BigInt {
        (q * Rational::from_integer(scale.clone())).to_integer()
    }
    fn finish(sums: Vec<BigInt>, scale: &Rational) -> Averages {
        Averages::Exact(Observable::new(sums.into_iter().map(|s| Rational::from_integer(s) * scale).collect()))
    }
}

impl SumEngine for Levels<'_, f64> {
    type Value = f64;

    fn level(&self) -> usize {
        self.level
    }
    fn advance_to(&mut self, level: usize) {
        assert!(level >= self.level, "the recursion only moves forward");
        while self.level < level {
            self.step().expect("floats do not overflow");
        }
    }
    fn total(&self, y: usize) -> f64 {
        self.totals[y]
    }
    fn excluding(&self, y: usize, excluded: &[Letter]) -> f64 {
        Levels::excluding(self, y, excluded).unwrap()
    }
    fn unit(&self) -> Rational {
        Rational::one()
    }
    fn weight(q: &Rational, scale: &BigInt) -> f64 {
        to_f64(&(q * Rational::from_integer(scale.clone())))
    }
    fn finish(sums: Vec<f64>, scale: &Rational) -> Averages {
        let s = to_f64(scale);
        Averages::Approx(sums.into_iter().map(|v| v * s).collect())
    }
}
