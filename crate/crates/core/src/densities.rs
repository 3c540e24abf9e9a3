//! Simple densities on the boundary and probability measures on spheres.
//!
//! Both are stored as dense tables indexed by the lexicographic position of a
//! word in its sphere (see [`FreeGroup::sphere_index`]). With that indexing
//! the descendants of a word at a deeper level form one contiguous block,
//! which makes refinement and projection plain index arithmetic.

use num_traits::{One, Signed, Zero};
use rand::Rng;
use std::fmt::Write as _;

use crate::boundary::BoundaryPrefix;
use crate::error::{Error, Result};
use crate::free_group::{FreeGroup, ReducedWord};
use crate::rational::{fmt_fraction, from_biguint, parse_rational, weighted_lq, Exponent, Norm, Rational};

/// Largest table (number of entries) any measure or density may materialize.
pub const DEFAULT_TABLE_CAP: u128 = 1 << 23;

fn table_len(group: FreeGroup, depth: usize, cap: u128, what: &'static str) -> Result<usize> {
    let size = group.sphere_len(depth).unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::ResourceCap { what, size, cap });
    }
    Ok(size as usize)
}

/// Number of depth-`deep` words below one depth-`shallow` word.
fn block(group: FreeGroup, shallow: usize, deep: usize) -> usize {
    if shallow == 0 {
        group.sphere_len(deep).unwrap() as usize
    } else {
        group.branching().pow((deep - shallow) as u32)
    }
}

fn ancestor_index(group: FreeGroup, index: usize, shallow: usize, deep: usize) -> usize {
    if shallow == 0 {
        0
    } else {
        index / block(group, shallow, deep)
    }
}

fn check_group(a: FreeGroup, b: FreeGroup) -> Result<()> {
    if a != b {
        return Err(Error::RankMismatch { expected: a.rank(), found: b.rank() });
    }
    Ok(())
}

/// A nonnegative function on the boundary that is constant on each
/// depth-`m` cylinder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryDensity {
    group: FreeGroup,
    depth: usize,
    values: Vec<Rational>,
}

impl BoundaryDensity {
    pub fn new(group: FreeGroup, depth: usize, values: Vec<Rational>) -> Result<BoundaryDensity> {
        if depth == 0 {
            return Err(Error::InvalidParameter("density depth must be >= 1".into()));
        }
        let len = table_len(group, depth, DEFAULT_TABLE_CAP, "density table")?;
        if values.len() != len {
            return Err(Error::InvalidParameter(format!(
                "depth-{depth} density needs {len} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.is_negative()) {
            return Err(Error::InvalidParameter(format!(
                "negative density value on {}",
                group.word_at(depth, i)
            )));
        }
        Ok(BoundaryDensity { group, depth, values })
    }

    pub fn from_fn(
        group: FreeGroup,
        depth: usize,
        mut f: impl FnMut(&ReducedWord) -> Rational,
    ) -> Result<BoundaryDensity> {
        table_len(group, depth, DEFAULT_TABLE_CAP, "density table")?;
        let values = group.sphere(depth).map(|w| f(&w)).collect();
        BoundaryDensity::new(group, depth, values)
    }

    pub fn constant(group: FreeGroup, c: Rational) -> Result<BoundaryDensity> {
        BoundaryDensity::from_fn(group, 1, |_| c.clone())
    }

    /// `ψ ≡ 1`.
    pub fn uniform(group: FreeGroup) -> BoundaryDensity {
        BoundaryDensity::constant(group, Rational::one()).unwrap()
    }

    /// A random probability density of the given depth with small integer
    /// ratios between cells.
    pub fn random<R: Rng>(group: FreeGroup, depth: usize, rng: &mut R) -> Result<BoundaryDensity> {
        let len = table_len(group, depth, DEFAULT_TABLE_CAP, "density table")?;
        let mut raw: Vec<i64> = (0..len).map(|_| rng.gen_range(0..10)).collect();
        if raw.iter().all(|&v| v == 0) {
            raw[rng.gen_range(0..len)] = 1;
        }
        let total: i64 = raw.iter().sum();
        let values = raw.into_iter().map(|v| Rational::new((v * len as i64).into(), total.into())).collect();
        BoundaryDensity::new(group, depth, values)
    }

    pub fn group(&self) -> FreeGroup {
        self.group
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Values in lexicographic order of the depth-`m` words.
    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// `ν(O_w)` for a single cell.
    pub fn cell_measure(&self) -> Rational {
        Rational::new(1.into(), self.values.len().into())
    }

    /// The value on `O_w`, `|w| = depth`.
    pub fn value(&self, w: &ReducedWord) -> Result<&Rational> {
        check_group(self.group, w.group())?;
        if w.len() != self.depth {
            return Err(Error::InvalidParameter(format!("{w} is not a depth-{} word", self.depth)));
        }
        Ok(&self.values[self.group.sphere_index(w)])
    }

    /// The value at a boundary point known to at least `depth` letters.
    pub fn value_at(&self, p: &BoundaryPrefix) -> Result<&Rational> {
        p.require_depth(self.depth)?;
        self.value(&p.word().prefix(self.depth))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ReducedWord, &Rational)> + '_ {
        self.group.sphere(self.depth).zip(&self.values)
    }

    /// The same function on the finer partition into depth-`depth` cylinders.
    pub fn refine(&self, depth: usize) -> Result<BoundaryDensity> {
        if depth < self.depth {
            return Err(Error::InvalidParameter(format!(
                "cannot refine depth {} to {depth}",
                self.depth
            )));
        }
        let len = table_len(self.group, depth, DEFAULT_TABLE_CAP, "density table")?;
        let b = block(self.group, self.depth, depth);
        let values = (0..len).map(|j| self.values[j / b].clone()).collect();
        Ok(BoundaryDensity { group: self.group, depth, values })
    }

    /// `∫ ψ dν`.
    pub fn integral(&self) -> Rational {
        self.values.iter().sum::<Rational>() * self.cell_measure()
    }

    pub fn is_probability(&self) -> bool {
        self.integral().is_one()
    }

    /// `∫ ψ φ dν`.
    pub fn pairing(&self, other: &BoundaryDensity) -> Result<Rational> {
        check_group(self.group, other.group)?;
        let depth = self.depth.max(other.depth);
        let (a, b) = (self.refine(depth)?, other.refine(depth)?);
        let sum: Rational = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
        Ok(sum * a.cell_measure())
    }

    /// `E[ψ | Σ_n]`, the conditional expectation on depth-`n` cylinders.
    /// For `n >= depth` this is a refinement.
    pub fn project(&self, n: usize) -> Result<BoundaryDensity> {
        if n == 0 {
            return Err(Error::InvalidParameter("projection depth must be >= 1".into()));
        }
        if n >= self.depth {
            return self.refine(n);
        }
        let b = block(self.group, n, self.depth);
        let scale = Rational::new(1.into(), b.into());
        let values = self.values.chunks(b).map(|c| c.iter().sum::<Rational>() * &scale).collect();
        Ok(BoundaryDensity { group: self.group, depth: n, values })
    }

    pub fn lq_norm(&self, q: Exponent) -> Norm {
        let cell = self.cell_measure();
        weighted_lq(self.values.iter().map(|v| (&cell, v.clone())), q)
    }

    /// `‖ψ − φ‖_q`, computed on the common refinement.
    pub fn lq_distance(&self, other: &BoundaryDensity, q: Exponent) -> Result<Norm> {
        check_group(self.group, other.group)?;
        let depth = self.depth.max(other.depth);
        let (a, b) = (self.refine(depth)?, other.refine(depth)?);
        let cell = a.cell_measure();
        Ok(weighted_lq(a.values.iter().zip(&b.values).map(|(x, y)| (&cell, x - y)), q))
    }

    /// Text dump: header `rank r depth m`, then `<word> <num>/<den>` per cell.
    pub fn dump(&self) -> String {
        let mut out = format!("rank {} depth {}\n", self.group.rank(), self.depth);
        for (w, v) in self.iter() {
            writeln!(out, "{w} {}", fmt_fraction(v)).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<BoundaryDensity> {
        let (group, header, body) = parse_header(text)?;
        let depth = match header.as_slice() {
            [("depth", m)] => *m,
            _ => return Err(Error::parse(1, 1, "expected header `rank r depth m`")),
        };
        let values = parse_table(group, depth, body)?;
        BoundaryDensity::new(group, depth, values)
    }
}

/// `ρ_w = χ_{O_w} / ν(O_w)`.
pub fn sector_density(w: &ReducedWord) -> Result<BoundaryDensity> {
    if w.is_empty() {
        return Err(Error::InvalidParameter("sector needs a nonempty word".into()));
    }
    let height = Rational::from_integer(w.group().sphere_size(w.len()).into());
    BoundaryDensity::from_fn(w.group(), w.len(), |v| if v == w { height.clone() } else { Rational::zero() })
}

/// Free-function form of [`BoundaryDensity::project`].
pub fn martingale_project(psi: &BoundaryDensity, n: usize) -> Result<BoundaryDensity> {
    psi.project(n)
}

/// A nonnegative measure on the sphere `S_n(e)` whose weight on a word
/// depends only on its first `depth` letters.
///
/// `weights[i]` is the weight of each single word of `S_n(e)` whose
/// depth-`depth` prefix is the `i`-th word of `S_depth(e)`. A full table is
/// the case `depth = radius`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SphereMeasure {
    group: FreeGroup,
    radius: usize,
    depth: usize,
    weights: Vec<Rational>,
}

impl SphereMeasure {
    pub fn new(group: FreeGroup, radius: usize, depth: usize, weights: Vec<Rational>) -> Result<SphereMeasure> {
        if depth > radius {
            return Err(Error::InvalidParameter(format!("prefix depth {depth} exceeds radius {radius}")));
        }
        let len = table_len(group, depth, DEFAULT_TABLE_CAP, "sphere measure table")?;
        if weights.len() != len {
            return Err(Error::InvalidParameter(format!(
                "depth-{depth} table needs {len} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::InvalidParameter("negative sphere weight".into()));
        }
        Ok(SphereMeasure { group, radius, depth, weights })
    }

    /// A full table from explicit `(word, weight)` pairs; unlisted words get 0.
    pub fn from_words<I>(group: FreeGroup, radius: usize, pairs: I) -> Result<SphereMeasure>
    where
        I: IntoIterator<Item = (ReducedWord, Rational)>,
    {
        let len = table_len(group, radius, DEFAULT_TABLE_CAP, "sphere measure table")?;
        let mut weights = vec![Rational::zero(); len];
        for (w, x) in pairs {
            check_group(group, w.group())?;
            if w.len() != radius {
                return Err(Error::InvalidParameter(format!("{w} is not on the sphere of radius {radius}")));
            }
            weights[group.sphere_index(&w)] += x;
        }
        SphereMeasure::new(group, radius, radius, weights)
    }

    /// `δ_g`.
    pub fn point_mass(g: &ReducedWord) -> Result<SphereMeasure> {
        SphereMeasure::from_words(g.group(), g.len(), [(g.clone(), Rational::one())])
    }

    /// Uniform probability on `S_n(e)`.
    pub fn uniform(group: FreeGroup, radius: usize) -> SphereMeasure {
        let w = Rational::new(1.into(), group.sphere_size(radius).into());
        SphereMeasure { group, radius, depth: 0, weights: vec![w] }
    }

    pub fn group(&self) -> FreeGroup {
        self.group
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// Number of sphere words sharing one depth-`depth` prefix.
    pub fn block_size(&self) -> u128 {
        if self.depth == 0 {
            self.group.sphere_len(self.radius).unwrap_or(u128::MAX)
        } else {
            (self.group.branching() as u128).pow((self.radius - self.depth) as u32)
        }
    }

    /// Weight of a single element; zero off the sphere.
    pub fn weight(&self, g: &ReducedWord) -> Rational {
        if g.group() != self.group || g.len() != self.radius {
            return Rational::zero();
        }
        self.weights[self.group.sphere_index(&g.prefix(self.depth))].clone()
    }

    /// Overwrites the weight of every word with the given prefix.
    pub fn set_weight(&mut self, prefix: &ReducedWord, w: Rational) -> Result<()> {
        check_group(self.group, prefix.group())?;
        if prefix.len() != self.depth {
            return Err(Error::InvalidParameter(format!("{prefix} is not a depth-{} prefix", self.depth)));
        }
        let i = self.group.sphere_index(prefix);
        self.weights[i] = w;
        Ok(())
    }

    /// `(prefix, weight per word)` over all prefixes.
    pub fn prefixes(&self) -> impl Iterator<Item = (ReducedWord, &Rational)> + '_ {
        self.group.sphere(self.depth).zip(&self.weights)
    }

    pub fn total_mass(&self) -> Rational {
        self.weights.iter().sum::<Rational>() * Rational::from_integer(self.block_size().into())
    }

    /// The same measure tabulated by longer prefixes.
    pub fn refine(&self, depth: usize) -> Result<SphereMeasure> {
        self.refine_capped(depth, DEFAULT_TABLE_CAP)
    }

    pub fn refine_capped(&self, depth: usize, cap: u128) -> Result<SphereMeasure> {
        if depth < self.depth || depth > self.radius {
            return Err(Error::InvalidParameter(format!(
                "cannot retabulate depth {} as depth {depth} on radius {}",
                self.depth, self.radius
            )));
        }
        let len = table_len(self.group, depth, cap, "sphere measure table")?;
        let weights = (0..len)
            .map(|j| self.weights[ancestor_index(self.group, j, self.depth, depth)].clone())
            .collect();
        Ok(SphereMeasure { group: self.group, radius: self.radius, depth, weights })
    }

    /// `π_∂(μ)`: the density `μ(g)/ν(O_g)` on each `O_g`. Returned at depth
    /// `max(depth, 1)`; refine it for a radius-depth table.
    pub fn pi_boundary(&self) -> BoundaryDensity {
        let scale = from_biguint(&self.group.sphere_size(self.radius));
        if self.depth == 0 {
            return BoundaryDensity::constant(self.group, &self.weights[0] * scale).unwrap();
        }
        let values = self.weights.iter().map(|w| w * &scale).collect();
        BoundaryDensity { group: self.group, depth: self.depth, values }
    }

    /// Text dump. The header is `rank r radius n` for a full table and
    /// `rank r radius n depth d` for a prefix table.
    pub fn dump(&self) -> String {
        let mut out = format!("rank {} radius {}", self.group.rank(), self.radius);
        if self.depth != self.radius {
            write!(out, " depth {}", self.depth).unwrap();
        }
        out.push('\n');
        for (w, v) in self.prefixes() {
            writeln!(out, "{w} {}", fmt_fraction(v)).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<SphereMeasure> {
        let (group, header, body) = parse_header(text)?;
        let (radius, depth) = match header.as_slice() {
            [("radius", n)] => (*n, *n),
            [("radius", n), ("depth", d)] => (*n, *d),
            _ => return Err(Error::parse(1, 1, "expected header `rank r radius n [depth d]`")),
        };
        if depth > radius {
            return Err(Error::parse(1, 1, "prefix depth exceeds radius"));
        }
        let weights = parse_table(group, depth, body)?;
        SphereMeasure::new(group, radius, depth, weights)
    }
}

/// Free-function form of [`SphereMeasure::pi_boundary`].
pub fn pi_boundary(mu: &SphereMeasure) -> BoundaryDensity {
    mu.pi_boundary()
}

type Header<'a> = (FreeGroup, Vec<(&'a str, usize)>, Vec<(usize, &'a str)>);

fn parse_header(text: &str) -> Result<Header<'_>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty input"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if !toks.len().is_multiple_of(2) || toks.first() != Some(&"rank") {
        return Err(Error::parse(hline, 1, "header must start with `rank r`"));
    }
    let mut pairs = Vec::new();
    for (k, kv) in toks.chunks(2).enumerate() {
        let v: usize = kv[1]
            .parse()
            .map_err(|_| Error::parse(hline, 1, format!("bad number {:?} in header", kv[1])))?;
        if k > 0 {
            pairs.push((kv[0], v));
        }
    }
    let rank: usize = toks[1].parse().unwrap();
    let group = FreeGroup::new(rank).map_err(|e| Error::parse(hline, 1, e.to_string()))?;
    Ok((group, pairs, lines.collect()))
}

fn parse_table(group: FreeGroup, depth: usize, body: Vec<(usize, &str)>) -> Result<Vec<Rational>> {
    let len = table_len(group, depth, DEFAULT_TABLE_CAP, "parsed table")?;
    let mut values: Vec<Option<Rational>> = vec![None; len];
    for (line, text) in body {
        let (word, value) = text
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(line, 1, "expected `<word> <num>/<den>`"))?;
        let value = value.trim_start();
        let col = text.len() - value.len() + 1;
        let w = group.parse_word(word).map_err(|e| match e {
            Error::Parse { column, message, .. } => Error::parse(line, column, message),
            other => Error::parse(line, 1, other.to_string()),
        })?;
        if w.len() != depth {
            return Err(Error::parse(line, 1, format!("{w} has length {}, expected {depth}", w.len())));
        }
        let slot = &mut values[group.sphere_index(&w)];
        if slot.is_some() {
            return Err(Error::parse(line, 1, format!("duplicate entry for {w}")));
        }
        *slot = Some(parse_rational(value, line, col)?);
    }
    Ok(values.into_iter().map(|v| v.unwrap_or_else(Rational::zero)).collect())
}

/// `∫_{O_w} ψ dν` for every `w` of length `k`, in lexicographic order.
pub fn cylinder_integrals(psi: &BoundaryDensity, k: usize) -> Result<Vec<Rational>> {
    let group = psi.group;
    let len = table_len(group, k, DEFAULT_TABLE_CAP, "cylinder integrals")?;
    let cell_k = Rational::new(1.into(), len.into());
    if k >= psi.depth {
        let b = block(group, psi.depth, k);
        return Ok((0..len).map(|j| &psi.values[j / b] * &cell_k).collect());
    }
    let b = block(group, k, psi.depth);
    let cell_m = psi.cell_measure();
    Ok(psi.values.chunks(b).map(|c| c.iter().sum::<Rational>() * &cell_m).collect())
}

/// `μ_n^ψ(g) = ∫_{O_g} ψ dν` on `S_n(e)`.
///
/// For `n >= depth(ψ)` the result is a prefix table of depth `depth(ψ)`;
/// below that it is a full table.
pub fn mu_from_density(psi: &BoundaryDensity, n: usize) -> Result<SphereMeasure> {
    let group = psi.group;
    if n >= psi.depth {
        let cell_n = Rational::new(1.into(), group.sphere_size(n).into());
        let weights = psi.values.iter().map(|v| v * &cell_n).collect();
        return SphereMeasure::new(group, n, psi.depth, weights);
    }
    let weights = if n == 0 { vec![psi.integral()] } else { cylinder_integrals(psi, n)? };
    SphereMeasure::new(group, n, n, weights)
}

/// `η_{2n}^ψ`: the weight of `g = t_1⋯t_{2n}` is
/// `(∫_{O(t_1⋯t_n)} ψ − ∫_{O(t_1⋯t_{n+1})} ψ) / ((2r−2)(2r−1)^{n−1})`.
/// It depends on the first `n + 1` letters, so it is returned as a prefix
/// table of that depth.
pub fn eta_from_density(psi: &BoundaryDensity, n: usize) -> Result<SphereMeasure> {
    if n == 0 {
        return Err(Error::InvalidParameter("eta needs n >= 1".into()));
    }
    let group = psi.group;
    let q = group.branching();
    let stems = cylinder_integrals(psi, n)?;
    let children = cylinder_integrals(psi, n + 1)?;
    let norm = Rational::new(1.into(), ((2 * group.rank() - 2) * q.pow(n as u32 - 1)).into());
    let weights = children.iter().enumerate().map(|(j, c)| (&stems[j / q] - c) * &norm).collect();
    SphereMeasure::new(group, 2 * n, n + 1, weights)
}

/// Largest pointwise gap between `π_∂(η)` and
/// `((2r−1)π_∂(μ_n^ψ) − π_∂(μ_{n+1}^ψ)) / (2r−2)`, compared on depth-`n+1`
/// cylinders (or deeper, if `η` is tabulated deeper). Zero when `η` is
/// [`eta_from_density`]`(ψ, n)`.
pub fn eta_mu_residual(eta: &SphereMeasure, psi: &BoundaryDensity, n: usize) -> Result<Rational> {
    check_group(eta.group, psi.group)?;
    if eta.radius != 2 * n {
        return Err(Error::InvalidParameter(format!("eta has radius {}, expected {}", eta.radius, 2 * n)));
    }
    let group = psi.group;
    let depth = (n + 1).max(eta.depth).max(psi.depth);
    let lhs = eta.pi_boundary().refine(depth)?;
    let a = mu_from_density(psi, n)?.pi_boundary().refine(depth)?;
    let b = mu_from_density(psi, n + 1)?.pi_boundary().refine(depth)?;
    let q = Rational::from_integer(group.branching().into());
    let d = Rational::new(1.into(), (2 * group.rank() - 2).into());
    Ok(lhs
        .values
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(l, (x, y))| (l - (&q * x - y) * &d).abs())
        .max()
        .unwrap_or_else(Rational::zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{cylinder_measure, AnnulusSet};
    use crate::rational::{int, ratio};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f2() -> FreeGroup {
        FreeGroup::new(2).unwrap()
    }

    fn w(s: &str) -> ReducedWord {
        f2().parse_word(s).unwrap()
    }

    #[test]
    fn pi_boundary_examples() {
        let d = SphereMeasure::point_mass(&w("a1")).unwrap().pi_boundary();
        assert_eq!(d.value(&w("a1")).unwrap(), &int(4));
        assert_eq!(d.value(&w("a2")).unwrap(), &int(0));
        for n in 0..5 {
            let u = SphereMeasure::uniform(f2(), n).pi_boundary();
            assert!(u.values().iter().all(|v| v.is_one()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let n = rng.gen_range(1..5);
            let psi = BoundaryDensity::random(f2(), n, &mut rng).unwrap();
            let mu = mu_from_density(&psi, n).unwrap();
            assert_eq!(mu.total_mass(), int(1));
            assert_eq!(mu.pi_boundary().lq_norm(Exponent::Finite(1.0)), Norm::Exact(int(1)));
        }
    }

    #[test]
    fn mu_examples() {
        let mu = mu_from_density(&BoundaryDensity::uniform(f2()), 3).unwrap();
        for g in f2().sphere(3) {
            assert_eq!(mu.weight(&g), ratio(1, 36));
        }
        let rho = sector_density(&w("a1")).unwrap();
        let mu = mu_from_density(&rho, 2).unwrap();
        for g in f2().sphere(2) {
            let expect = if g.first() == w("a1").first() { ratio(1, 3) } else { int(0) };
            assert_eq!(mu.weight(&g), expect);
        }
    }

    #[test]
    fn mu_below_depth_sums_refinements() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in 1..=3 {
            let psi = BoundaryDensity::random(f2(), m, &mut rng).unwrap();
            for n in 0..m {
                let mu = mu_from_density(&psi, n).unwrap();
                for g in f2().sphere(n) {
                    let direct: Rational = psi
                        .iter()
                        .filter(|(v, _)| v.letters().starts_with(g.letters()))
                        .map(|(v, x)| x * cylinder_measure(&v))
                        .sum();
                    assert_eq!(mu.weight(&g), direct);
                }
            }
        }
    }

    #[test]
    fn eta_examples() {
        let eta = eta_from_density(&BoundaryDensity::uniform(f2()), 1).unwrap();
        for g in f2().sphere(2) {
            assert_eq!(eta.weight(&g), ratio(1, 12));
        }
        assert_eq!(eta.weight(&w("a1")), int(0));
        assert_eq!(eta.weight(&w("a1a2a1")), int(0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let psi = BoundaryDensity::random(f2(), rng.gen_range(1..4), &mut rng).unwrap();
            for n in 1..=4 {
                assert_eq!(eta_from_density(&psi, n).unwrap().total_mass(), int(1));
            }
        }
    }

    #[test]
    fn eta_is_the_normalised_annulus_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = BoundaryDensity::random(f2(), 3, &mut rng).unwrap();
        let fine = psi.refine(5).unwrap();
        for n in 1..=2 {
            let eta = eta_from_density(&psi, n).unwrap();
            for g in f2().sphere(2 * n) {
                let a = AnnulusSet::of_even_word(&g).unwrap();
                let integral: Rational = fine
                    .iter()
                    .filter(|(v, _)| a.contains(&BoundaryPrefix::new(v.clone()).unwrap()).unwrap())
                    .map(|(_, x)| x * fine.cell_measure())
                    .sum();
                assert_eq!(eta.weight(&g), integral / int(2 * 3i64.pow(n as u32 - 1)));
            }
        }
    }

    #[test]
    fn eta_mu_identity_and_exact_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for r in 2..=3 {
            let g = FreeGroup::new(r).unwrap();
            for _ in 0..5 {
                let m = rng.gen_range(1..=3);
                let psi = BoundaryDensity::random(g, m, &mut rng).unwrap();
                for n in 1..=4 {
                    let eta = eta_from_density(&psi, n).unwrap();
                    assert!(eta_mu_residual(&eta, &psi, n).unwrap().is_zero());
                    if n >= m {
                        let d = eta.pi_boundary().lq_distance(&psi, Exponent::Infinity).unwrap();
                        assert!(d.is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn residual_detects_a_flipped_weight() {
        let psi = BoundaryDensity::uniform(f2());
        let mut eta = eta_from_density(&psi, 2).unwrap();
        eta.set_weight(&w("a1a2a1"), ratio(1, 7)).unwrap();
        assert!(!eta_mu_residual(&eta, &psi, 2).unwrap().is_zero());
    }

    #[test]
    fn projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let m = rng.gen_range(1..=4);
            let psi = BoundaryDensity::random(f2(), m, &mut rng).unwrap();
            assert_eq!(psi.project(m).unwrap(), psi);
            for n in 1..m {
                let tower = psi.project(n + 1).unwrap().project(n).unwrap();
                assert_eq!(tower, psi.project(n).unwrap());
            }
            for n in 1..=5 {
                let via_mu = mu_from_density(&psi, n).unwrap().pi_boundary().refine(n.max(m)).unwrap();
                assert_eq!(psi.project(n).unwrap().refine(n.max(m)).unwrap(), via_mu);
            }
        }
    }

    #[test]
    fn norms() {
        let one = BoundaryDensity::uniform(f2());
        for q in [Exponent::Finite(1.0), Exponent::Finite(2.5), Exponent::Finite(3.0), Exponent::Infinity] {
            assert_eq!(one.lq_norm(q).to_f64(), 1.0);
        }
        let rho = sector_density(&w("a1")).unwrap();
        assert_eq!(rho.integral(), int(1));
        assert_eq!(rho.lq_norm(Exponent::Finite(1.0)), Norm::Exact(int(1)));
        assert_eq!(rho.lq_norm(Exponent::Infinity), Norm::Exact(int(4)));
        // refinement invariance
        assert_eq!(rho.refine(4).unwrap().lq_norm(Exponent::Finite(2.0)), rho.lq_norm(Exponent::Finite(2.0)));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = BoundaryDensity::random(f2(), rng.gen_range(1..4), &mut rng).unwrap();
            let b = BoundaryDensity::random(f2(), rng.gen_range(1..4), &mut rng).unwrap();
            let p = rng.gen_range(1.0..4.0);
            let q = p / (p - 1.0);
            let lhs = crate::rational::to_f64(&a.pairing(&b).unwrap());
            let rhs = a.lq_norm(Exponent::Finite(p)).to_f64() * b.lq_norm(Exponent::Finite(q)).to_f64();
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sector_mu_is_uniform_on_the_sector() {
        for s in ["a1", "a1a2", "A2a1a1"] {
            let rho = sector_density(&w(s)).unwrap();
            for n in w(s).len()..=5 {
                let mu = mu_from_density(&rho, n).unwrap();
                let inside = f2().sphere(n).filter(|g| g.letters().starts_with(w(s).letters())).count();
                for g in f2().sphere(n) {
                    let expect = if g.letters().starts_with(w(s).letters()) {
                        ratio(1, inside as i64)
                    } else {
                        int(0)
                    };
                    assert_eq!(mu.weight(&g), expect);
                }
            }
        }
    }

    #[test]
    fn dump_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = BoundaryDensity::random(f2(), 2, &mut rng).unwrap();
        assert_eq!(BoundaryDensity::parse(&psi.dump()).unwrap(), psi);
        let eta = eta_from_density(&psi, 2).unwrap();
        assert!(eta.dump().starts_with("rank 2 radius 4 depth 3\n"));
        assert_eq!(SphereMeasure::parse(&eta.dump()).unwrap(), eta);
        let full = eta.refine(4).unwrap();
        assert!(full.dump().starts_with("rank 2 radius 4\n"));
        assert_eq!(SphereMeasure::parse(&full.dump()).unwrap(), full);
        assert!(matches!(
            BoundaryDensity::parse("rank 2 depth 1\na1 1/0\n"),
            Err(Error::Parse { line: 2, column: 4, .. })
        ));
        assert!(matches!(BoundaryDensity::parse("rank 2 depth 1\na1a1 1\n"), Err(Error::Parse { line: 2, .. })));
    }
}
