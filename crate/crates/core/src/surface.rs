//! The Bolza surface as a quotient `Gamma \ PSL(2,R)`.
//!
//! The fundamental domain is the regular hyperbolic octagon centred at `i`
//! with interior angles `pi/4`. Its opposite sides are paired by the
//! translations `g_k = R_{k pi/4} a_l R_{k pi/4}^{-1}`, `k = 0..3`, where
//! `R_theta` rotates about `i` and `a_l` is the geodesic element whose
//! translation length `l` equals twice the inradius. Generator indices
//! `0..4` are the `g_k`, indices `4..8` their inverses.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use rand::Rng;

use crate::calculus::ScalarField;
use crate::error::{Error, Result};
use crate::mobius::lorentz_dot;
use crate::quadrature;
use crate::sampling::{stream_rng, PhaseSampler, Weighted};
use crate::{GroupElement, HPoint};

pub const GENERATOR_COUNT: usize = 8;
/// Smallest distance decrease accepted as a descent step.
pub const DESCENT_THRESHOLD: f64 = 1e-13;
pub const MAX_REDUCTION_STEPS: usize = 10_000;
/// Entrywise tolerance for the defining relations.
pub const RELATION_TOL: f64 = 1e-10;
/// Hyperbolic area of the octagon, `(8 - 2) pi - 8 (pi / 4)`.
pub const OCTAGON_AREA: f64 = 4.0 * PI;

/// Largest tile radius the orbit enumeration will explore.
pub const MAX_ENUMERATION_RADIUS: f64 = 14.0;
/// Tail target for Poincare series truncation.
pub const SERIES_TAIL_TARGET: f64 = 1e-13;

/// `cosh` of the octagon inradius, from the closing condition
/// `cosh r = cos(pi/8) / sin(pi/8)` of the right triangle
/// (centre, side midpoint, vertex).
pub fn bolza_cosh_inradius() -> f64 {
    1.0 + SQRT_2
}

/// `cosh` of the octagon circumradius, `cot^2(pi/8)`.
pub fn bolza_cosh_circumradius() -> f64 {
    3.0 + 2.0 * SQRT_2
}

pub fn bolza_circumradius() -> f64 {
    bolza_cosh_circumradius().acosh()
}

/// Translation length of the side pairings.
pub fn bolza_translation_length() -> f64 {
    2.0 * bolza_cosh_inradius().acosh()
}

/// Orbit of the Dirichlet centre in the hyperboloid model, with BFS depth.
#[derive(Debug, Clone)]
pub struct Tile {
    pub element: GroupElement,
    pub center: [f64; 3],
    pub depth: usize,
}

#[derive(Debug, Default)]
struct TileCache {
    radius: f64,
    tiles: Arc<Vec<Tile>>,
}

/// A cocompact Fuchsian group given by its eight side pairings.
#[derive(Debug)]
pub struct FuchsianGroup {
    generators: [GroupElement; GENERATOR_COUNT],
    relation_word: Vec<usize>,
    vertex_word: Vec<usize>,
    circumradius: f64,
    tiles: Mutex<TileCache>,
}

/// A point of `Gamma \ PSL(2,R)` represented by a group element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub rep: GroupElement,
    pub reduced: bool,
}

impl PhasePoint {
    pub fn new(rep: GroupElement) -> Self {
        Self { rep, reduced: false }
    }

    /// Projection to the surface, `rep . i`.
    pub fn base(&self) -> HPoint {
        self.rep.base_point()
    }
}

/// Inverse of a generator index.
#[inline]
pub fn inverse_index(k: usize) -> usize {
    (k + 4) % GENERATOR_COUNT
}

/// The surface relation `[A1, B1][A2, B2]` with the symplectic basis
/// `A1 = g2, B1 = g3^-1, A2 = g3^-1 g2 g1^-1, B2 = g1 g0^-1`, expanded and
/// freely reduced.
pub const BOLZA_RELATION: [usize; 12] = [2, 7, 6, 3, 7, 2, 4, 1, 6, 3, 0, 5];
/// The vertex cycle of the octagon, `g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3`.
pub const BOLZA_VERTEX_CYCLE: [usize; 8] = [0, 5, 2, 7, 4, 1, 6, 3];

/// Words for the symplectic basis `A1, B1, A2, B2`.
pub fn bolza_symplectic_basis() -> [Vec<usize>; 4] {
    [vec![2], vec![7], vec![7, 2, 5], vec![1, 4]]
}

/// Builds the Bolza group and checks its relations.
pub fn build_bolza() -> Result<FuchsianGroup> {
    let half = bolza_translation_length() / 2.0;
    let a = GroupElement::new(half.exp(), 0.0, 0.0, (-half).exp())?;
    let mut gens = [GroupElement::identity(); 4];
    for (k, g) in gens.iter_mut().enumerate() {
        let r = GroupElement::rotation(k as f64 * PI / 4.0);
        *g = r * a * r.inverse();
    }
    FuchsianGroup::from_pairings(gens)
}

impl Clone for FuchsianGroup {
    fn clone(&self) -> Self {
        Self {
            generators: self.generators,
            relation_word: self.relation_word.clone(),
            vertex_word: self.vertex_word.clone(),
            circumradius: self.circumradius,
            tiles: Mutex::new(TileCache::default()),
        }
    }
}

impl FuchsianGroup {
    /// Group generated by four side pairings of the Bolza octagon.
    pub fn from_pairings(g: [GroupElement; 4]) -> Result<Self> {
        let generators = [
            g[0],
            g[1],
            g[2],
            g[3],
            g[0].inverse(),
            g[1].inverse(),
            g[2].inverse(),
            g[3].inverse(),
        ];
        let group = Self {
            generators,
            relation_word: BOLZA_RELATION.to_vec(),
            vertex_word: BOLZA_VERTEX_CYCLE.to_vec(),
            circumradius: bolza_circumradius(),
            tiles: Mutex::new(TileCache::default()),
        };
        group.validate()?;
        Ok(group)
    }

    fn validate(&self) -> Result<()> {
        for (k, g) in self.generators.iter().enumerate() {
            if g.trace().abs() <= 2.0 {
                return Err(Error::Construction(format!(
                    "generator {k} is not hyperbolic (trace {})",
                    g.trace()
                )));
            }
        }
        for k in 0..4 {
            let e = (self.generators[k] * self.generators[k + 4]).max_relative_diff(&GroupElement::identity());
            if e > RELATION_TOL {
                return Err(Error::Construction(format!(
                    "generator {} is not the inverse of generator {k} (error {e:e})",
                    k + 4
                )));
            }
        }
        for (name, word) in [
            ("surface relation", &self.relation_word),
            ("vertex cycle", &self.vertex_word),
        ] {
            let e = self.relation_error(word);
            if !(e <= RELATION_TOL) {
                return Err(Error::Construction(format!("{name} fails: entrywise error {e:e}")));
            }
        }
        Ok(())
    }

    pub fn generators(&self) -> &[GroupElement; GENERATOR_COUNT] {
        &self.generators
    }

    pub fn generator(&self, k: usize) -> GroupElement {
        self.generators[k]
    }

    pub fn relation_word(&self) -> &[usize] {
        &self.relation_word
    }

    pub fn vertex_word(&self) -> &[usize] {
        &self.vertex_word
    }

    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    /// Product of the generators named by `word`, left to right.
    pub fn evaluate(&self, word: &[usize]) -> GroupElement {
        word.iter()
            .fold(GroupElement::identity(), |acc, &k| acc * self.generators[k])
    }

    /// Entrywise distance of an evaluated word from the identity.
    pub fn relation_error(&self, word: &[usize]) -> f64 {
        self.evaluate(word).max_relative_diff(&GroupElement::identity())
    }

    /// One greedy step: the generator that lowers `d(g i, i)` the most, by
    /// more than [`DESCENT_THRESHOLD`], lowest index on ties.
    fn descent_step(&self, g: &GroupElement) -> Option<GroupElement> {
        let cur = g.frobenius_sq();
        let d_cur = (0.5 * cur).max(1.0).acosh();
        let mut best: Option<(f64, GroupElement)> = None;
        for gen in &self.generators {
            let h = *gen * *g;
            let fr = h.frobenius_sq();
            if fr >= cur {
                continue;
            }
            let d = (0.5 * fr).max(1.0).acosh();
            if d_cur - d > DESCENT_THRESHOLD && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, h));
            }
        }
        best.map(|(_, h)| h)
    }

    /// Canonical representative of the coset of `p`: greedy descent towards
    /// the Dirichlet centre by left multiplication with generators.
    pub fn reduce(&self, p: &PhasePoint) -> Result<PhasePoint> {
        let mut g = p.rep;
        for _ in 0..MAX_REDUCTION_STEPS {
            match self.descent_step(&g) {
                Some(h) => g = h,
                None => return Ok(PhasePoint { rep: g, reduced: true }),
            }
        }
        Err(Error::ReductionFailure(MAX_REDUCTION_STEPS))
    }

    /// Reduces a point of the plane into the octagon.
    pub fn reduce_point(&self, z: &HPoint) -> Result<HPoint> {
        let i = HPoint::i();
        let mut z = *z;
        for _ in 0..MAX_REDUCTION_STEPS {
            let d_cur = z.cosh_distance(&i).acosh();
            let mut best: Option<(f64, HPoint)> = None;
            for gen in &self.generators {
                let w = gen.act(&z)?;
                let d = w.cosh_distance(&i).max(1.0).acosh();
                if d_cur - d > DESCENT_THRESHOLD && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, w));
                }
            }
            match best {
                Some((_, w)) => z = w,
                None => return Ok(z),
            }
        }
        Err(Error::ReductionFailure(MAX_REDUCTION_STEPS))
    }

    /// True when no generator moves `z` closer to the centre.
    pub fn in_domain(&self, z: &HPoint) -> bool {
        let i = HPoint::i();
        let d_cur = z.cosh_distance(&i).acosh();
        self.generators.iter().all(|g| match g.act(z) {
            Ok(w) => d_cur - w.cosh_distance(&i).max(1.0).acosh() <= DESCENT_THRESHOLD,
            Err(_) => true,
        })
    }

    /// One sample from the normalized Liouville measure, using the stream
    /// `(seed, index)`.
    pub fn sample_one(&self, seed: u64, index: u64) -> PhasePoint {
        let mut rng = stream_rng(seed, index);
        let span = self.circumradius.cosh() - 1.0;
        loop {
            // area-uniform in the disk of radius R about i
            let u: f64 = rng.random();
            let r = (1.0 + u * span).acosh();
            let theta = rng.random::<f64>() * 2.0 * PI;
            let rho = (0.5 * r).tanh();
            let fiber = rng.random::<f64>() * 2.0 * PI;
            let Ok(z) = HPoint::from_disk(rho * theta.cos(), rho * theta.sin()) else {
                continue;
            };
            let rep = GroupElement::translate_i_to(&z) * GroupElement::rotation(fiber);
            if self.descent_step(&rep).is_none() {
                return PhasePoint { rep, reduced: true };
            }
        }
    }

    /// `n` samples distributed according to the invariant probability measure.
    pub fn sample_phase(&self, n: usize, seed: u64) -> Vec<PhasePoint> {
        (0..n as u64).map(|k| self.sample_one(seed, k)).collect()
    }

    /// All elements `gamma` with `d(i, gamma i) <= radius`.
    pub fn tiles(&self, radius: f64) -> Result<Arc<Vec<Tile>>> {
        let prune = radius + self.circumradius + 0.5;
        if prune > MAX_ENUMERATION_RADIUS {
            return Err(Error::Configuration(format!(
                "orbit enumeration radius {prune:.3} exceeds {MAX_ENUMERATION_RADIUS}"
            )));
        }
        let mut cache = self.tiles.lock().expect("tile cache poisoned");
        if cache.radius < radius || cache.tiles.is_empty() {
            cache.tiles = Arc::new(self.enumerate(prune));
            cache.radius = prune - self.circumradius - 0.5;
        }
        let ch = radius.cosh();
        Ok(Arc::new(
            cache.tiles.iter().filter(|t| t.center[0] <= ch).cloned().collect(),
        ))
    }

    fn enumerate(&self, prune: f64) -> Vec<Tile> {
        let cosh_prune = prune.cosh();
        let cell = 0.5;
        let key = |c: &[f64; 3]| ((c[1] / cell).floor() as i64, (c[2] / cell).floor() as i64);
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let root = Tile {
            element: GroupElement::identity(),
            center: HPoint::i().to_hyperboloid(),
            depth: 0,
        };
        buckets.entry(key(&root.center)).or_default().push(0);
        let mut tiles = vec![root];
        let mut head = 0;
        while head < tiles.len() {
            let (elem, depth) = (tiles[head].element, tiles[head].depth);
            head += 1;
            for gen in &self.generators {
                let g = elem * *gen;
                let c = g.base_point().to_hyperboloid();
                if c[0] > cosh_prune {
                    continue;
                }
                let (kx, ky) = key(&c);
                let seen = (-1..=1).any(|dx| {
                    (-1..=1).any(|dy| {
                        buckets
                            .get(&(kx + dx, ky + dy))
                            .is_some_and(|v| v.iter().any(|&j| lorentz_dot(&tiles[j].center, &c) < 1.5))
                    })
                });
                if seen {
                    continue;
                }
                buckets.entry((kx, ky)).or_default().push(tiles.len());
                tiles.push(Tile {
                    element: g,
                    center: c,
                    depth: depth + 1,
                });
            }
        }
        tiles
    }

    /// Plain-text export of all eight generators, one matrix per line.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# horoflow generators: a b c d per line, g0..g3 then inverses\n");
        for g in &self.generators {
            let [a, b, c, d] = g.entries();
            let _ = writeln!(s, "{a:.16e} {b:.16e} {c:.16e} {d:.16e}");
        }
        s
    }

    /// Parses the format written by [`to_text`](Self::to_text) and checks the
    /// relations. Matrices are rescaled to unit determinant.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut mats = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
            if v.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected 4 entries, found {}",
                    ln + 1,
                    v.len()
                )));
            }
            let det = v[0] * v[3] - v[1] * v[2];
            if !(det > 0.0) {
                return Err(Error::Construction(format!(
                    "line {}: determinant {det} is not positive",
                    ln + 1
                )));
            }
            let s = det.sqrt();
            mats.push(GroupElement::new(v[0] / s, v[1] / s, v[2] / s, v[3] / s)?);
        }
        if mats.len() != GENERATOR_COUNT {
            return Err(Error::Parse(format!(
                "expected {GENERATOR_COUNT} matrices, found {}",
                mats.len()
            )));
        }
        let group = Self {
            generators: mats.try_into().expect("length checked"),
            relation_word: BOLZA_RELATION.to_vec(),
            vertex_word: BOLZA_VERTEX_CYCLE.to_vec(),
            circumradius: bolza_circumradius(),
            tiles: Mutex::new(TileCache::default()),
        };
        group.validate()?;
        Ok(group)
    }
}

/// Invariant probability measure on the Bolza phase space.
#[derive(Debug, Clone)]
pub struct BolzaSampler {
    pub group: Arc<FuchsianGroup>,
}

impl PhaseSampler<PhasePoint> for BolzaSampler {
    fn sample(&self, seed: u64, index: u64) -> Weighted<PhasePoint> {
        Weighted {
            point: self.group.sample_one(seed, index),
            weight: 1.0,
        }
    }

    fn is_probability(&self) -> bool {
        true
    }
}

/// Distance from `i` to the octagon boundary in the disk direction `theta`.
pub fn octagon_boundary_radius(theta: f64) -> f64 {
    let tanh_in = (1.0 - bolza_cosh_inradius().powi(-2)).sqrt();
    let sector = PI / 4.0;
    let phi = (theta / sector).round() * sector;
    (tanh_in / (theta - phi).cos()).atanh()
}

/// Truncation limits for a Poincare series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesLimits {
    /// Cap on the radius of the orbit enumeration.
    pub max_radius: f64,
    /// Cap on the word length of retained group elements.
    pub max_word_length: usize,
}

impl Default for SeriesLimits {
    fn default() -> Self {
        Self {
            max_radius: MAX_ENUMERATION_RADIUS,
            max_word_length: 12,
        }
    }
}

/// Truncated Poincare series `u(z) = sum_gamma exp(-beta cosh d(z, gamma c))`.
#[derive(Debug, Clone)]
pub struct PoincareSeries {
    group: Arc<FuchsianGroup>,
    beta: f64,
    orbit: Vec<[f64; 3]>,
    cutoff: f64,
    tail: f64,
    max_depth: usize,
}

impl PoincareSeries {
    pub fn new(group: Arc<FuchsianGroup>, beta: f64, center: HPoint, limits: SeriesLimits) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Range {
                what: "beta",
                value: beta,
                allowed: "beta > 0",
            });
        }
        let big_r = group.circumradius();
        let c0 = group.reduce_point(&center)?;
        let weight = |d: f64| (-beta * (d - big_r).max(0.0).cosh()).exp();

        // analytic remainder beyond radius rho from the tile-area count
        // N(r) <= (cosh(r + 2R) - 1) / 2
        let remainder = |rho: f64| -> Result<f64> {
            let lo = rho.max(big_r);
            let hi = big_r + (800.0 / beta).max(1.0).acosh();
            if lo >= hi {
                return Ok(0.0);
            }
            let dens = |r: f64| {
                let x = r - big_r;
                0.5 * (r + 2.0 * big_r).cosh() * beta * x.sinh() * (-beta * x.cosh()).exp()
            };
            // sum_{d > rho} F(d) <= int_rho^inf N(r) (-F'(r)) dr
            quadrature::integrate(|r| Ok(dens(r)), lo, hi, SERIES_TAIL_TARGET * 1e-3)
        };

        let mut rho = big_r;
        while remainder(rho)? > SERIES_TAIL_TARGET * 0.1 {
            rho += 0.25;
            if rho + 2.0 * big_r + 0.5 > limits.max_radius.min(MAX_ENUMERATION_RADIUS) {
                return Err(Error::Configuration(format!(
                    "Poincare series with beta = {beta} needs an orbit radius beyond {}",
                    limits.max_radius
                )));
            }
        }
        let analytic = remainder(rho)?;

        let tiles = group.tiles(rho + big_r)?;
        let mut pts: Vec<(f64, [f64; 3], usize)> = tiles
            .iter()
            .filter_map(|t| {
                let z = t.element.act(&c0).ok()?;
                let d = z.distance(&HPoint::i());
                (d <= rho).then(|| (d, z.to_hyperboloid(), t.depth))
            })
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));

        // keep the shortest prefix whose complement is within target
        let mut tail = analytic;
        let mut keep = pts.len();
        while keep > 0 {
            let w = weight(pts[keep - 1].0);
            if tail + w > SERIES_TAIL_TARGET {
                break;
            }
            tail += w;
            keep -= 1;
        }
        pts.truncate(keep);
        let max_depth = pts.iter().map(|p| p.2).max().unwrap_or(0);
        if max_depth > limits.max_word_length {
            return Err(Error::Configuration(format!(
                "Poincare series needs words of length {max_depth} > {}",
                limits.max_word_length
            )));
        }
        Ok(Self {
            group,
            beta,
            orbit: pts.into_iter().map(|p| p.1).collect(),
            cutoff: 745.0 / beta,
            tail,
            max_depth,
        })
    }

    /// Evaluates the series at `z`, reducing it into the octagon first.
    pub fn eval(&self, z: &HPoint) -> Result<f64> {
        let z = self.group.reduce_point(z)?;
        let x = z.to_hyperboloid();
        Ok(self
            .orbit
            .iter()
            .map(|o| {
                let c = lorentz_dot(&x, o);
                if c < self.cutoff {
                    (-self.beta * c).exp()
                } else {
                    0.0
                }
            })
            .sum())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Upper bound on the omitted part of the series anywhere in the plane.
    pub fn tail_bound(&self) -> f64 {
        self.tail
    }

    pub fn orbit_size(&self) -> usize {
        self.orbit.len()
    }

    pub fn max_word_length(&self) -> usize {
        self.max_depth
    }

    /// The series as a field on phase space, evaluated at `rep . w0`.
    /// With `w0 = i` the field is constant along fibres.
    pub fn field(self: &Arc<Self>, w0: HPoint) -> ScalarField<PhasePoint> {
        let me = Arc::clone(self);
        let label = format!("poincare(beta={})", self.beta);
        // the series varies on the scale 1/sqrt(beta) in hyperbolic distance
        let scale = (1.0 / self.beta.sqrt()).min(1.0);
        let at_i = w0 == HPoint::i();
        ScalarField::real(label, scale, move |p: &PhasePoint| {
            let z = if at_i { Ok(p.base()) } else { p.rep.act(&w0) };
            z.and_then(|z| me.eval(&z)).unwrap_or(f64::NAN)
        })
    }
}

/// Gamma-invariant smooth field built from a truncated Poincare series
/// centred at `center`; `radius` caps the orbit enumeration.
pub fn periodic_function(
    group: Arc<FuchsianGroup>,
    beta: f64,
    radius: f64,
    center: HPoint,
) -> Result<ScalarField<PhasePoint>> {
    let limits = SeriesLimits {
        max_radius: radius,
        ..SeriesLimits::default()
    };
    let series = Arc::new(PoincareSeries::new(group, beta, center, limits)?);
    Ok(series.field(HPoint::i()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group() -> FuchsianGroup {
        build_bolza().unwrap()
    }

    #[test]
    fn relations_hold() {
        let g = group();
        assert!(g.relation_error(&BOLZA_RELATION) <= 1e-12);
        assert!(g.relation_error(&BOLZA_VERTEX_CYCLE) <= 1e-12);
        for gen in g.generators() {
            assert!(gen.trace().abs() > 2.0);
            assert!((gen.trace() - (2.0 + 2.0 * SQRT_2)).abs() < 1e-12);
        }
    }

    #[test]
    fn naive_commutator_is_not_a_relation() {
        let g = group();
        let w = [0, 1, 4, 5, 2, 3, 6, 7];
        assert!(g.relation_error(&w) > 1e-3);
    }

    #[test]
    fn symplectic_basis_spells_the_relation() {
        let g = group();
        let [a1, b1, a2, b2] = bolza_symplectic_basis().map(|w| g.evaluate(&w));
        let comm = |x: GroupElement, y: GroupElement| x * y * x.inverse() * y.inverse();
        let r = comm(a1, b1) * comm(a2, b2);
        assert!(r.max_relative_diff(&GroupElement::identity()) < 1e-12);
        assert!(g.evaluate(&BOLZA_RELATION).max_relative_diff(&r) < 1e-12);
    }

    #[test]
    fn rotational_symmetry() {
        let g = group();
        let r = GroupElement::rotation(PI / 4.0);
        for k in 0..3 {
            let conj = r * g.generator(k) * r.inverse();
            assert!(conj.max_relative_diff(&g.generator(k + 1)) <= 1e-12);
        }
    }

    #[test]
    fn identity_is_reduced() {
        let g = group();
        let p = g.reduce(&PhasePoint::new(GroupElement::identity())).unwrap();
        assert_eq!(p.rep, GroupElement::identity());
        assert!(p.reduced);
    }

    #[test]
    fn text_round_trip() {
        let g = group();
        let h = FuchsianGroup::from_text(&g.to_text()).unwrap();
        for k in 0..8 {
            assert!(g.generator(k).max_relative_diff(&h.generator(k)) < 1e-15);
        }
    }

    #[test]
    fn corrupted_text_is_rejected() {
        let g = group();
        let text = g.to_text();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        let mut v: Vec<f64> = lines[2].split_whitespace().map(|t| t.parse().unwrap()).collect();
        v[1] *= 1.001;
        lines[2] = format!("{} {} {} {}", v[0], v[1], v[2], v[3]);
        let err = FuchsianGroup::from_text(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, Error::Construction(_)), "{err}");
        assert!(FuchsianGroup::from_text("1 0 0").is_err());
    }

    #[test]
    fn boundary_radius_matches_constants() {
        let r_in = bolza_cosh_inradius().acosh();
        assert!((octagon_boundary_radius(0.0) - r_in).abs() < 1e-14);
        assert!((octagon_boundary_radius(PI / 8.0) - bolza_circumradius()).abs() < 1e-12);
    }

    #[test]
    fn tiles_are_distinct_and_complete_near_centre() {
        let g = group();
        // identity and the 8 side pairings
        assert_eq!(g.tiles(4.0).unwrap().len(), 9);
        let tiles = g.tiles(7.0).unwrap();
        // tile count is bounded by area: (cosh(r + R) - 1) / 2
        let bound = ((7.0 + bolza_circumradius()).cosh() - 1.0) / 2.0;
        assert!(tiles.len() > 9 && (tiles.len() as f64) < bound);
        for (a, ta) in tiles.iter().enumerate() {
            for tb in tiles.iter().skip(a + 1) {
                assert!(lorentz_dot(&ta.center, &tb.center) > 1.5);
            }
        }
        let l = bolza_translation_length();
        let near = tiles.iter().filter(|t| (t.center[0].acosh() - l).abs() < 1e-9).count();
        assert_eq!(near, 8);
    }

    #[test]
    fn series_lower_bound_at_centre() {
        let g = Arc::new(group());
        let c = HPoint::new(0.3, 1.2).unwrap();
        let s = PoincareSeries::new(g, 2.0, c, SeriesLimits::default()).unwrap();
        assert!(s.eval(&c).unwrap() >= (-2.0f64).exp());
        assert!(s.tail_bound() <= 1e-10);
        assert!(s.max_word_length() <= 12);
    }

    #[test]
    fn tiny_beta_is_a_configuration_error() {
        let g = Arc::new(group());
        let r = PoincareSeries::new(g, 1e-4, HPoint::i(), SeriesLimits::default());
        assert!(matches!(r, Err(Error::Configuration(_))));
    }
}
