//! Finite measure-preserving actions of the free group.
//!
//! An action on `X = {0, …, N−1}` is given by one bijection per generator.
//! Freeness means no relations need checking: any `r` bijections define an
//! action. Inverse-letter tables are derived once at construction.

use num_traits::{One, Signed, Zero};
use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::free_group::{FreeGroup, Letter, ReducedWord};
use crate::rational::{fmt_fraction, parse_rational, to_f64, Rational};

/// A real-valued function on the points of an action, stored exactly.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Observable(Vec<Rational>);

impl Observable {
    pub fn new(values: Vec<Rational>) -> Observable {
        Observable(values)
    }

    pub fn constant(len: usize, c: Rational) -> Observable {
        Observable(vec![c; len])
    }

    /// `χ_A` for the listed points.
    pub fn indicator(len: usize, points: &[usize]) -> Observable {
        let mut v = vec![Rational::zero(); len];
        for &x in points {
            v[x] = Rational::one();
        }
        Observable(v)
    }

    /// Small random integers in `[-bound, bound]`.
    pub fn random<R: Rng>(len: usize, bound: i64, rng: &mut R) -> Observable {
        Observable((0..len).map(|_| Rational::from_integer(rng.gen_range(-bound..=bound).into())).collect())
    }

    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_values(self) -> Vec<Rational> {
        self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }

    pub fn abs(&self) -> Observable {
        Observable(self.0.iter().map(|v| v.abs()).collect())
    }

    pub fn sub(&self, other: &[Rational]) -> Observable {
        Observable(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }
}

impl Deref for Observable {
    type Target = [Rational];

    fn deref(&self) -> &[Rational] {
        &self.0
    }
}

impl From<Vec<Rational>> for Observable {
    fn from(v: Vec<Rational>) -> Self {
        Observable(v)
    }
}

/// The partition of `X` into orbits of the even subgroup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orbits {
    label: Vec<usize>,
    count: usize,
}

impl Orbits {
    /// Orbit number of each point; orbits are numbered by first appearance.
    pub fn labels(&self) -> &[usize] {
        &self.label
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn orbit_of(&self, x: usize) -> usize {
        self.label[x]
    }

    /// Members of every orbit, each sorted.
    pub fn parts(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.count];
        for (x, &l) in self.label.iter().enumerate() {
            parts[l].push(x);
        }
        parts
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAction {
    group: FreeGroup,
    weights: Vec<Rational>,
    /// One table per letter code: `tables[l.code()][x] = σ_l(x)`.
    tables: Vec<Vec<u32>>,
}

impl FiniteAction {
    /// Builds and validates an action. `weights = None` means uniform `λ`.
    pub fn from_permutations(
        group: FreeGroup,
        weights: Option<Vec<Rational>>,
        generators: Vec<Vec<usize>>,
    ) -> Result<FiniteAction> {
        if generators.len() != group.rank() {
            return Err(Error::InvalidParameter(format!(
                "rank {} action needs {} generator tables, got {}",
                group.rank(),
                group.rank(),
                generators.len()
            )));
        }
        let n = generators[0].len();
        if n == 0 || n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("unsupported point count {n}")));
        }
        let weights = weights.unwrap_or_else(|| vec![Rational::new(1.into(), n.into()); n]);
        if weights.len() != n {
            return Err(Error::InvalidParameter(format!("{} weights for {n} points", weights.len())));
        }
        if let Some(x) = weights.iter().position(|w| w.is_negative()) {
            return Err(Error::InvalidParameter(format!("negative weight at point {x}")));
        }
        if !weights.iter().sum::<Rational>().is_one() {
            return Err(Error::InvalidParameter("weights do not sum to 1".into()));
        }
        let mut tables = Vec::with_capacity(2 * group.rank());
        for (i, gen) in generators.into_iter().enumerate() {
            let violation = |point, reason: String| Error::ActionViolation { generator: i + 1, point, reason };
            if gen.len() != n {
                return Err(violation(0, format!("table has {} entries, expected {n}", gen.len())));
            }
            let mut inverse = vec![u32::MAX; n];
            for (x, &y) in gen.iter().enumerate() {
                if y >= n {
                    return Err(violation(x, format!("image {y} out of range")));
                }
                if inverse[y] != u32::MAX {
                    return Err(violation(x, format!("image {y} already hit by {}", inverse[y])));
                }
                if weights[y] != weights[x] {
                    return Err(violation(
                        x,
                        format!("weight {} moved to weight {}", weights[x], weights[y]),
                    ));
                }
                inverse[y] = x as u32;
            }
            tables.push(gen.into_iter().map(|y| y as u32).collect());
            tables.push(inverse);
        }
        Ok(FiniteAction { group, weights, tables })
    }

    /// The Sanov pair `[[1,2],[0,1]]`, `[[1,0],[2,1]]` acting on `(ℤ/N)²`,
    /// point `(x, y)` stored at index `x·N + y`, uniform weights.
    pub fn sanov_mod(modulus: usize) -> Result<FiniteAction> {
        if modulus < 3 || modulus.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("sanov action needs odd N >= 3, got {modulus}")));
        }
        let n = modulus;
        let idx = |x: usize, y: usize| (x % n) * n + (y % n);
        let a1 = (0..n * n).map(|p| idx(p / n + 2 * (p % n), p % n)).collect();
        let a2 = (0..n * n).map(|p| idx(p / n, 2 * (p / n) + p % n)).collect();
        FiniteAction::from_permutations(FreeGroup::new(2)?, None, vec![a1, a2])
    }

    /// Uniform weights and independent uniformly random permutations.
    pub fn random(group: FreeGroup, points: usize, seed: u64) -> Result<FiniteAction> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens = (0..group.rank())
            .map(|_| {
                let mut p: Vec<usize> = (0..points).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        FiniteAction::from_permutations(group, None, gens)
    }

    /// Random non-uniform weights: points are split into blocks, each block
    /// gets its own weight and every generator permutes within blocks.
    pub fn random_weighted(group: FreeGroup, points: usize, blocks: usize, seed: u64) -> Result<FiniteAction> {
        if blocks == 0 || blocks > points {
            return Err(Error::InvalidParameter(format!("{blocks} blocks for {points} points")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut block_of: Vec<usize> = (0..points).map(|x| if x < blocks { x } else { rng.gen_range(0..blocks) }).collect();
        block_of.shuffle(&mut rng);
        let raw: Vec<i64> = (0..blocks).map(|_| rng.gen_range(1..10)).collect();
        let total: i64 = block_of.iter().map(|&b| raw[b]).sum();
        let weights = block_of.iter().map(|&b| Rational::new(raw[b].into(), total.into())).collect();
        let mut members = vec![Vec::new(); blocks];
        for (x, &b) in block_of.iter().enumerate() {
            members[b].push(x);
        }
        let gens = (0..group.rank())
            .map(|_| {
                let mut table = vec![0; points];
                for m in &members {
                    let mut img = m.clone();
                    img.shuffle(&mut rng);
                    for (&x, &y) in m.iter().zip(&img) {
                        table[x] = y;
                    }
                }
                table
            })
            .collect();
        FiniteAction::from_permutations(group, Some(weights), gens)
    }

    pub fn group(&self) -> FreeGroup {
        self.group
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> &Rational {
        &self.weights[x]
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.iter().all(|w| *w == self.weights[0])
    }

    /// `σ_l` as an image table.
    pub fn table(&self, l: Letter) -> &[u32] {
        &self.tables[l.code()]
    }

    /// `σ_l(x)`.
    pub fn step(&self, l: Letter, x: usize) -> usize {
        self.tables[l.code()][x] as usize
    }

    /// `w·x`: letters act right to left.
    pub fn apply_word(&self, w: &ReducedWord, x: usize) -> usize {
        w.letters().iter().rev().fold(x, |x, &l| self.step(l, x))
    }

    /// Orbits of the even subgroup, generated by all `σ_s σ_t`.
    pub fn even_orbits(&self) -> Orbits {
        let n = self.len();
        let mut uf = UnionFind::<usize>::new(n);
        for s in &self.tables {
            for t in &self.tables {
                for x in 0..n {
                    uf.union(x, s[t[x] as usize] as usize);
                }
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut root_label = vec![usize::MAX; n];
        let mut count = 0;
        for (x, slot) in label.iter_mut().enumerate() {
            let r = uf.find(x);
            if root_label[r] == usize::MAX {
                root_label[r] = count;
                count += 1;
            }
            *slot = root_label[r];
        }
        Orbits { label, count }
    }

    /// `E[f | even-invariant sets]`: the `λ`-weighted mean over each even orbit.
    pub fn cond_exp_even(&self, f: &[Rational]) -> Observable {
        self.cond_exp_on(&self.even_orbits(), f)
    }

    pub fn cond_exp_on(&self, orbits: &Orbits, f: &[Rational]) -> Observable {
        let mut mass = vec![Rational::zero(); orbits.count];
        let mut sum = vec![Rational::zero(); orbits.count];
        for (x, v) in f.iter().enumerate() {
            let o = orbits.label[x];
            mass[o] += &self.weights[x];
            sum[o] += &self.weights[x] * v;
        }
        let means: Vec<Rational> = sum.into_iter().zip(mass).map(|(s, m)| s / m).collect();
        Observable((0..self.len()).map(|x| means[orbits.label[x]].clone()).collect())
    }

    /// `∫ f dλ`.
    pub fn integral(&self, f: &[Rational]) -> Rational {
        f.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Text form: `rank r points N`, optional `lambda x n/d` lines, then
    /// `gen i: j0 j1 …` per generator.
    pub fn dump(&self) -> String {
        let mut out = format!("rank {} points {}\n", self.group.rank(), self.len());
        if !self.is_uniform() {
            for (x, w) in self.weights.iter().enumerate() {
                writeln!(out, "lambda {x} {}", fmt_fraction(w)).unwrap();
            }
        }
        for i in 1..=self.group.rank() {
            write!(out, "gen {i}:").unwrap();
            for y in self.table(Letter::generator(i)) {
                write!(out, " {y}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses an action file; `obs x v` lines, if any, form an observable.
    pub fn parse(text: &str) -> Result<(FiniteAction, Option<Observable>)> {
        let mut header: Option<(FreeGroup, usize)> = None;
        let mut lambda: Vec<Option<Rational>> = Vec::new();
        let mut gens: Vec<Option<Vec<usize>>> = Vec::new();
        let mut obs: Vec<Option<Rational>> = Vec::new();
        let mut any_lambda = false;
        let mut any_obs = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let col_of = |s: &str| raw.len() - raw.trim_start().len() + (s.as_ptr() as usize - t.as_ptr() as usize) + 1;
            let toks: Vec<&str> = t.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(line, col_of(s), format!("expected an integer, got {s:?}")));
            match (toks[0], &header) {
                ("rank", None) => {
                    if toks.len() != 4 || toks[2] != "points" {
                        return Err(Error::parse(line, 1, "expected `rank r points N`"));
                    }
                    let group = FreeGroup::new(num(toks[1])?).map_err(|e| Error::parse(line, col_of(toks[1]), e.to_string()))?;
                    let n = num(toks[3])?;
                    header = Some((group, n));
                    lambda = vec![None; n];
                    obs = vec![None; n];
                    gens = vec![None; group.rank()];
                }
                ("rank", Some(_)) => return Err(Error::parse(line, 1, "duplicate header")),
                (_, None) => return Err(Error::parse(line, 1, "expected header `rank r points N` first")),
                ("lambda" | "obs", Some((_, n))) => {
                    if toks.len() != 3 {
                        return Err(Error::parse(line, 1, format!("expected `{} x value`", toks[0])));
                    }
                    let x = num(toks[1])?;
                    if x >= *n {
                        return Err(Error::parse(line, col_of(toks[1]), format!("point {x} out of range")));
                    }
                    let v = parse_rational(toks[2], line, col_of(toks[2]))?;
                    let slot = if toks[0] == "lambda" {
                        any_lambda = true;
                        &mut lambda[x]
                    } else {
                        any_obs = true;
                        &mut obs[x]
                    };
                    if slot.replace(v).is_some() {
                        return Err(Error::parse(line, 1, format!("duplicate {} for point {x}", toks[0])));
                    }
                }
                ("gen", Some((group, n))) => {
                    let rest = t[3..].trim_start();
                    let (id, images) = rest
                        .split_once(':')
                        .ok_or_else(|| Error::parse(line, col_of(rest), "expected `gen i: images`"))?;
                    let id = num(id.trim())?;
                    if id == 0 || id > group.rank() {
                        return Err(Error::parse(line, col_of(rest), format!("generator {id} out of range")));
                    }
                    let table = images.split_whitespace().map(num).collect::<Result<Vec<_>>>()?;
                    if table.len() != *n {
                        return Err(Error::parse(line, 1, format!("{} images for {n} points", table.len())));
                    }
                    if gens[id - 1].replace(table).is_some() {
                        return Err(Error::parse(line, 1, format!("duplicate generator {id}")));
                    }
                }
                (other, _) => return Err(Error::parse(line, 1, format!("unknown directive {other:?}"))),
            }
        }
        let (group, _) = header.ok_or_else(|| Error::parse(1, 1, "missing header"))?;
        let gens = gens
            .into_iter()
            .enumerate()
            .map(|(i, g)| g.ok_or_else(|| Error::parse(1, 1, format!("missing generator {}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        let weights = if any_lambda {
            Some(
                lambda
                    .into_iter()
                    .enumerate()
                    .map(|(x, w)| w.ok_or_else(|| Error::parse(1, 1, format!("missing lambda for point {x}"))))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        let observable = if any_obs {
            Some(Observable(obs.into_iter().map(|v| v.unwrap_or_else(Rational::zero)).collect()))
        } else {
            None
        };
        Ok((FiniteAction::from_permutations(group, weights, gens)?, observable))
    }
}

/// Text form of an observable: one `obs x value` line per point.
pub fn dump_observable(f: &[Rational]) -> String {
    let mut out = String::new();
    for (x, v) in f.iter().enumerate() {
        writeln!(out, "obs {x} {}", fmt_fraction(v)).unwrap();
    }
    out
}
