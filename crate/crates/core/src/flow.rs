//! Straight-line flow on the double odd-gon: ray casting across identified
//! edges, sector normalisation, periodic-orbit search and the geometric
//! derivation (reading off which primed edges a trajectory crosses).

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::cylinder::{decompose_cylinders, primed_edges, reflecting_shear, PrimedEdge};
use crate::error::{Error, Result};
use crate::geometry::{line_intersection_params, Point, Segment, Tolerance};
use crate::surface::{Polygon, Surface};
use crate::veech::{veech_shear, ShearMatrix};

/// Where a trajectory starts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Start {
    /// On edge `S_edge` at parameter `t` along `P_U`'s copy of it. The ray
    /// enters whichever copy the direction points into.
    Edge { edge: usize, t: f64 },
    /// Strictly inside a polygon.
    Point { polygon: Polygon, point: Point },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossing {
    pub edge: usize,
    /// Polygon the trajectory leaves through this edge.
    pub polygon: Polygon,
    pub point: Point,
    /// Parameter along the (counter-clockwise) edge of `polygon`.
    pub param: f64,
    /// Flow time from the start.
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub n: usize,
    pub theta: f64,
    pub start: Start,
    pub start_polygon: Polygon,
    pub start_point: Point,
    pub crossings: Vec<Crossing>,
}

/// Distance within which a return to the first crossing counts as closing up.
pub const RETURN_TOL: f64 = 1e-9;

impl Trajectory {
    pub fn letters(&self) -> Vec<usize> {
        self.crossings.iter().map(|c| c.edge).collect()
    }

    pub fn direction(&self) -> Point {
        Point::polar(self.theta)
    }

    /// First return to the first crossing (same edge, same polygon, same
    /// point within [`RETURN_TOL`]), as a crossing count.
    pub fn period(&self) -> Option<usize> {
        let first = self.crossings.first()?;
        self.crossings.iter().enumerate().skip(1).find_map(|(i, c)| {
            (c.edge == first.edge && c.polygon == first.polygon && c.point.dist(first.point) < RETURN_TOL)
                .then_some(i)
        })
    }

    /// Straight pieces of the trajectory: piece `i` runs inside one polygon
    /// and ends at crossing `i`.
    pub fn pieces(&self, surface: &Surface) -> Vec<(Polygon, Segment)> {
        let mut out = Vec::with_capacity(self.crossings.len());
        let mut poly = self.start_polygon;
        let mut from = self.start_point;
        for c in &self.crossings {
            out.push((poly, Segment::new(from, c.point)));
            from = surface.identify(c.polygon, c.edge, c.point);
            poly = c.polygon.other();
        }
        out
    }
}

/// Resolves a start into a polygon and point, checking that it is usable.
pub fn resolve_start(surface: &Surface, start: Start, theta: f64, tol: Tolerance) -> Result<(Polygon, Point, Option<usize>)> {
    let d = Point::polar(theta);
    match start {
        Start::Edge { edge, t } => {
            if edge == 0 || edge > surface.n() {
                return Err(Error::InvalidStart(format!("no edge S{edge}")));
            }
            if !(t > tol.corner && t < 1.0 - tol.corner) {
                return Err(Error::InvalidStart(format!("parameter {t} is not strictly inside the edge")));
            }
            let up = surface.edge_segment(Polygon::Upper, edge);
            let c = up.vector().cross(d);
            if c.abs() < 1e-12 {
                return Err(Error::InvalidStart("direction is parallel to the start edge".into()));
            }
            let p = up.at(t);
            if c > 0.0 {
                Ok((Polygon::Upper, p, Some(edge)))
            } else {
                Ok((Polygon::Lower, surface.identify(Polygon::Upper, edge, p), Some(edge)))
            }
        }
        Start::Point { polygon, point } => {
            if !surface.contains(polygon, point, -tol.corner) {
                return Err(Error::InvalidStart(format!("{point} is not strictly inside the {} polygon", polygon.name())));
            }
            Ok((polygon, point, None))
        }
    }
}

/// First edge (other than `skip`) hit by the ray from `p` in direction `d`
/// inside `poly`, with the distance travelled.
pub fn cast(surface: &Surface, poly: Polygon, p: Point, d: Point, skip: Option<usize>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for k in 1..=surface.n() {
        if Some(k) == skip || !surface.is_exit_edge(poly, k, d) {
            continue;
        }
        let e = surface.edge_segment(poly, k);
        let v = e.vector();
        let t = (e.p0 - p).cross(v) / d.cross(v);
        if t > 0.0 && best.is_none_or(|(_, bt)| t < bt) {
            best = Some((k, t));
        }
    }
    best
}

/// Casts the ray and records the first `max_crossings` edge crossings.
pub fn trace(surface: &Surface, start: Start, theta: f64, max_crossings: usize, tol: Tolerance) -> Result<Trajectory> {
    let (start_polygon, start_point, entry) = resolve_start(surface, start, theta, tol)?;
    let d = Point::polar(theta);
    let mut crossings = Vec::with_capacity(max_crossings);
    let (mut poly, mut p, mut skip) = (start_polygon, start_point, entry);
    let mut time = 0.0;
    while crossings.len() < max_crossings {
        let (k, t) = cast(surface, poly, p, d, skip)
            .ok_or_else(|| Error::InvalidStart(format!("ray from {p} leaves the polygon nowhere")))?;
        let q = p + d * t;
        let e = surface.edge_segment(poly, k);
        let param = (q - e.p0).dot(e.vector()) / e.vector().dot(e.vector());
        if param < tol.corner || param > 1.0 - tol.corner {
            return Err(Error::CornerHit { point: q, crossings: crossings.len() });
        }
        time += t;
        crossings.push(Crossing { edge: k, polygon: poly, point: q, param, time });
        p = surface.identify(poly, k, q);
        poly = poly.other();
        skip = Some(k);
    }
    Ok(Trajectory { n: surface.n(), theta, start, start_polygon, start_point, crossings })
}

/// A direction rotated into the standard sector `[0, π/n)`, with the induced
/// relabelling of edges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorMap {
    pub n: usize,
    pub theta: f64,
    /// Number of `-π/n` rotation steps applied.
    pub steps: usize,
    /// `perm[k-1]` is the label edge `S_k` carries after normalisation.
    pub perm: Vec<usize>,
}

fn step_perm(surface: &Surface) -> Vec<usize> {
    let r = -PI / surface.n() as f64;
    (1..=surface.n())
        .map(|k| {
            let v = surface.edge_segment(Polygon::Upper, k).vector().rotate(r);
            (1..=surface.n())
                .find(|&j| surface.edge_segment(Polygon::Lower, j).vector().approx_eq(v, 1e-9))
                .expect("rotating a regular polygon by pi/n matches its half-turn")
        })
        .collect()
}

pub fn normalize_direction(theta: f64, surface: &Surface) -> SectorMap {
    let n = surface.n();
    let w = PI / n as f64;
    let full = theta.rem_euclid(2.0 * PI);
    let mut steps = (full / w).floor() as usize;
    let mut t = full - steps as f64 * w;
    if t >= w {
        steps += 1;
        t -= w;
    }
    steps %= 2 * n;
    let one = step_perm(surface);
    let mut perm: Vec<usize> = (1..=n).collect();
    for _ in 0..steps {
        perm = perm.iter().map(|&k| one[k - 1]).collect();
    }
    SectorMap { n, theta: t.max(0.0), steps, perm }
}

impl SectorMap {
    pub fn apply(&self, letters: &[usize]) -> Vec<usize> {
        letters.iter().map(|&k| self.perm[k - 1]).collect()
    }

    pub fn inverse_perm(&self) -> Vec<usize> {
        let mut inv = vec![0; self.n];
        for (i, &k) in self.perm.iter().enumerate() {
            inv[k - 1] = i + 1;
        }
        inv
    }

    /// Image of a point under the rotation, as a point of the target polygon.
    pub fn map_point(&self, surface: &Surface, poly: Polygon, p: Point) -> (Polygon, Point) {
        let r = -PI / self.n as f64;
        let (mut q, mut x) = (poly, p);
        for _ in 0..self.steps {
            let c = surface.centre(q);
            x = (x - c).rotate(r) + surface.centre(q.other());
            q = q.other();
        }
        (q, x)
    }
}

/// Holonomy direction of a closed word whose first crossing leaves `first`.
fn holonomy(surface: &Surface, word: &[usize], first: Polygon) -> Point {
    let mut poly = first;
    let mut total = Point::ORIGIN;
    for i in 1..=word.len() {
        total = total - surface.gluing(poly, word[i % word.len()]);
        poly = poly.other();
    }
    total
}

pub fn cyclic_equal(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && (a.is_empty() || (0..a.len()).any(|r| a.iter().cycle().skip(r).take(a.len()).eq(b.iter())))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub edge: usize,
    pub t: f64,
    pub theta: f64,
    pub period: usize,
}

/// Finds a periodic trajectory with the given cyclic cutting sequence: the
/// direction comes from the holonomy of the unfolded word (either sense,
/// restricted to `[0, π/n)` when `sector_only`), and the start is the
/// midpoint of the longest run of working parameters on `S_{word[0]}`.
pub fn find_periodic(surface: &Surface, word: &[usize], sector_only: bool, tol: Tolerance) -> Result<PeriodicOrbit> {
    if word.is_empty() {
        return Err(Error::InvalidStart("empty word".into()));
    }
    let len = word.len();
    let want: Vec<usize> = (1..=len).map(|i| word[i % len]).collect();
    let candidates = [Polygon::Upper, Polygon::Lower]
        .into_iter()
        .flat_map(|first| {
            let h = holonomy(surface, word, first);
            [(first, h), (first, -h)]
        })
        .filter(|(_, h)| h.norm() > 1e-9)
        .map(|(first, h)| (first, h.angle().rem_euclid(2.0 * PI)))
        .filter(|&(_, th)| !sector_only || th < surface.gon().half_alpha());
    for (first, theta) in candidates {
        const GRID: usize = 2000;
        let mut good = vec![false; GRID];
        for (i, g) in good.iter_mut().enumerate() {
            let t = (i as f64 + 0.5) / GRID as f64;
            let start = Start::Edge { edge: word[0], t };
            let Ok(tr) = trace(surface, start, theta, 2 * len, tol) else { continue };
            if tr.start_polygon != first || tr.letters()[..len] != want[..] {
                continue;
            }
            *g = tr.period() == Some(len);
        }
        let mut best: Option<(usize, usize)> = None;
        let mut i = 0;
        while i < GRID {
            if good[i] {
                let j = (i..GRID).find(|&j| !good[j]).unwrap_or(GRID);
                if best.is_none_or(|(a, b)| j - i > b - a) {
                    best = Some((i, j));
                }
                i = j;
            } else {
                i += 1;
            }
        }
        if let Some((a, b)) = best {
            let t = ((a + b) as f64 / 2.0) / GRID as f64;
            return Ok(PeriodicOrbit { edge: word[0], t, theta, period: len });
        }
    }
    Err(Error::InvalidStart("no periodic trajectory realises this word".into()))
}

/// Random sector-normalised trajectory with at least `crossings` crossings,
/// resampling on corner hits.
pub fn random_trajectory<R: Rng>(surface: &Surface, rng: &mut R, crossings: usize, tol: Tolerance) -> Trajectory {
    let w = surface.gon().half_alpha();
    loop {
        let polygon = if rng.gen_bool(0.5) { Polygon::Upper } else { Polygon::Lower };
        let vs = surface.vertices(polygon);
        let (lo, hi) = vs.iter().fold(
            (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
            |(a, b), v| (Point::new(a.x.min(v.x), a.y.min(v.y)), Point::new(b.x.max(v.x), b.y.max(v.y))),
        );
        let point = Point::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if !surface.contains(polygon, point, -1e-6) {
            continue;
        }
        let theta = rng.gen_range(0.0..w);
        if theta < 1e-9 {
            continue;
        }
        if let Ok(tr) = trace(surface, Start::Point { polygon, point }, theta, crossings, tol) {
            return tr;
        }
    }
}

/// One crossing of a primed edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrimedEvent {
    pub label: usize,
    pub time: f64,
    /// Trajectory piece the event lies on (see [`Trajectory::pieces`]).
    pub piece: usize,
    /// Index of the original letter it is attributed to, if any.
    pub index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedWindow {
    pub events: Vec<PrimedEvent>,
    /// Derived letters (primes removed) in time order.
    pub letters: Vec<usize>,
}

impl DerivedWindow {
    /// `(index, letter)` pairs attributed to original positions in `range`.
    pub fn aligned(&self, range: std::ops::Range<usize>) -> Vec<(usize, usize)> {
        self.events
            .iter()
            .filter_map(|e| e.index.filter(|i| range.contains(i)).map(|i| (i, e.label)))
            .collect()
    }

    /// Events on pieces `lo..hi` that could not be attributed to a letter.
    pub fn unattributed(&self, pieces: std::ops::Range<usize>) -> usize {
        self.events.iter().filter(|e| e.index.is_none() && pieces.contains(&e.piece)).count()
    }
}

/// Geometric derivation: the primed edges crossed by the trajectory, in order.
///
/// Primed edges that coincide with original edges are crossed exactly when
/// the original is. The others are intersected piece by piece; an event at
/// the very end of a piece is left to the next piece so junctions on the
/// polygon boundary count once.
pub fn derive_geometric(surface: &Surface, traj: &Trajectory) -> Result<DerivedWindow> {
    let primed = primed_edges(surface)?;
    Ok(derive_with(surface, traj, &primed))
}

/// [`derive_geometric`] for any direction: rotate into the sector, derive
/// there, and map the derived letters back through the inverse relabelling.
pub fn derive_geometric_any(surface: &Surface, traj: &Trajectory, tol: Tolerance) -> Result<(Trajectory, DerivedWindow)> {
    let map = normalize_direction(traj.theta, surface);
    let (q, x) = map.map_point(surface, traj.start_polygon, traj.start_point);
    let start = match traj.start {
        Start::Edge { edge, .. } => {
            let k = map.perm[edge - 1];
            let e = surface.edge_segment(Polygon::Upper, k);
            let t = if q == Polygon::Upper {
                (x - e.p0).dot(e.vector())
            } else {
                (surface.identify(Polygon::Lower, k, x) - e.p0).dot(e.vector())
            };
            Start::Edge { edge: k, t }
        }
        Start::Point { .. } => Start::Point { polygon: q, point: x },
    };
    let normal = trace(surface, start, map.theta, traj.crossings.len(), tol)?;
    let mut derived = derive_geometric(surface, &normal)?;
    let inv = map.inverse_perm();
    for e in derived.events.iter_mut() {
        e.label = inv[e.label - 1];
    }
    derived.letters = derived.events.iter().map(|e| e.label).collect();
    Ok((normal, derived))
}

/// One period of the geometric derivation of a periodic orbit, read off the
/// middle of three traced periods.
pub fn derive_periodic(surface: &Surface, orbit: &PeriodicOrbit, tol: Tolerance) -> Result<Vec<usize>> {
    let p = orbit.period;
    let traj = trace(surface, Start::Edge { edge: orbit.edge, t: orbit.t }, orbit.theta, 3 * p, tol)?;
    let (_, derived) = derive_geometric_any(surface, &traj, tol)?;
    let mut pairs = derived.aligned(p..2 * p);
    pairs.sort_unstable();
    Ok(pairs.into_iter().map(|(_, k)| k).collect())
}

/// Requires a sector-normalised direction.
pub fn derive_geometric_checked(surface: &Surface, traj: &Trajectory) -> Result<DerivedWindow> {
    if !(traj.theta >= 0.0 && traj.theta < surface.gon().half_alpha()) {
        return Err(Error::NotSectorNormalized(traj.theta));
    }
    derive_geometric(surface, traj)
}

pub fn derive_with(surface: &Surface, traj: &Trajectory, primed: &[PrimedEdge]) -> DerivedWindow {
    const END: f64 = 1e-9;
    let fixed: Vec<usize> = primed.iter().filter_map(|p| p.coincides_with).collect();
    let letters = traj.letters();
    let attribute = |piece: usize, label: usize| -> Option<usize> {
        if piece >= 1 && letters[piece - 1] == label {
            Some(piece - 1)
        } else if piece < letters.len() && letters[piece] == label {
            Some(piece)
        } else {
            None
        }
    };
    let mut events = Vec::new();
    let mut t0 = 0.0;
    for (i, (poly, seg)) in traj.pieces(surface).into_iter().enumerate() {
        let len = seg.length();
        let mut here: Vec<PrimedEvent> = Vec::new();
        for pe in primed.iter().filter(|p| p.coincides_with.is_none()) {
            for (q, piece) in &pe.pieces {
                if *q != poly {
                    continue;
                }
                if let Some((u, v)) = line_intersection_params(&seg, piece) {
                    if (-END..1.0 - END).contains(&u) && (-END..=1.0 + END).contains(&v) {
                        here.push(PrimedEvent {
                            label: pe.label,
                            time: t0 + u.max(0.0) * len,
                            piece: i,
                            index: attribute(i, pe.label),
                        });
                    }
                }
            }
        }
        let c = &traj.crossings[i];
        if fixed.contains(&c.edge) {
            here.push(PrimedEvent { label: c.edge, time: c.time, piece: i, index: Some(i) });
        }
        here.sort_by(|a, b| a.time.total_cmp(&b.time));
        events.extend(here);
        t0 = c.time;
    }
    let letters = events.iter().map(|e| e.label).collect();
    DerivedWindow { events, letters }
}

/// The image of the trajectory under the reflecting shear, traced as a new
/// straight line: its cutting sequence is the primed-crossing sequence of the
/// original from the image of `from_time` onwards.
pub fn derived_trajectory(surface: &Surface, traj: &Trajectory, max_crossings: usize, tol: Tolerance) -> Result<(Trajectory, f64)> {
    let cyls = decompose_cylinders(surface);
    let pieces = traj.pieces(surface);
    let (poly, seg) = pieces.first().ok_or_else(|| Error::InvalidStart("empty trajectory".into()))?;
    // start from a point of the first piece that is not on a bar
    let mut f = 0.5;
    let mut p = seg.at(f);
    while cyls.iter().all(|c| !c.holds(*poly, p, 1e-6)) {
        f *= 0.9;
        p = seg.at(f);
    }
    let (q, image) = reflecting_shear(surface, &cyls, *poly, p);
    let m: ShearMatrix = veech_shear(surface.n())?.mul(&ShearMatrix::FLIP);
    let d = m.apply(traj.direction());
    let tr = trace(surface, Start::Point { polygon: q, point: image }, d.angle(), max_crossings, tol)?;
    Ok((tr, f * seg.length()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_surface;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn horizontal_flow_keeps_height() {
        let s = build_surface(5).unwrap();
        let start = Start::Point { polygon: Polygon::Upper, point: Point::new(0.4, 0.3) };
        let tr = trace(&s, start, 0.0, 20, Tolerance::default()).unwrap();
        for c in &tr.crossings {
            let y = match c.polygon {
                Polygon::Upper => c.point.y,
                Polygon::Lower => s.identify(Polygon::Lower, c.edge, c.point).y,
            };
            assert!((y - 0.3).abs() < 1e-12 || (c.point.y - 0.3).abs() < 1e-12);
        }
        // only the two edges cut by the line y = 0.3 in the first cylinder
        let mut seen = tr.letters();
        seen.sort();
        seen.dedup();
        assert_eq!(seen, vec![2, 5]);
        assert_eq!(tr.period(), Some(2));
    }

    #[test]
    fn corner_hit_is_reported() {
        let s = build_surface(5).unwrap();
        let v = s.vertex(Polygon::Upper, 2);
        let p = Point::new(0.5, 0.2);
        let theta = (v - p).angle();
        let r = trace(&s, Start::Point { polygon: Polygon::Upper, point: p }, theta, 5, Tolerance::default());
        assert!(matches!(r, Err(Error::CornerHit { .. })));
    }

    #[test]
    fn identity_normalisation() {
        let s = build_surface(7).unwrap();
        let m = normalize_direction(0.2, &s);
        assert_eq!(m.steps, 0);
        assert_eq!(m.perm, (1..=7).collect::<Vec<_>>());
        assert_eq!(m.theta, 0.2);
    }

    #[test]
    fn normalisation_relabels_cutting_sequences() {
        let tol = Tolerance::default();
        for n in [5, 7] {
            let s = build_surface(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..30 {
                let theta = rng.gen_range(0.0..2.0 * PI);
                let polygon = if rng.gen_bool(0.5) { Polygon::Upper } else { Polygon::Lower };
                let point = s.centre(polygon) + Point::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
                let Ok(a) = trace(&s, Start::Point { polygon, point }, theta, 40, tol) else { continue };
                let map = normalize_direction(theta, &s);
                assert!(map.theta >= 0.0 && map.theta < PI / n as f64);
                let (q, x) = map.map_point(&s, polygon, point);
                let b = trace(&s, Start::Point { polygon: q, point: x }, map.theta, 40, tol).unwrap();
                assert_eq!(map.apply(&a.letters()), b.letters());
            }
        }
    }

    #[test]
    fn pentagon_one_step_permutation() {
        let s = build_surface(5).unwrap();
        let m = normalize_direction(PI / 5.0 + 0.1, &s);
        assert!((m.theta - 0.1).abs() < 1e-12);
        assert_eq!(m.steps, 1);
        assert_ne!(m.perm, vec![1, 2, 3, 4, 5]);
        let inv = m.inverse_perm();
        let round: Vec<usize> = m.perm.iter().map(|&k| inv[k - 1]).collect();
        assert_eq!(round, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn cyclic_equality() {
        assert!(cyclic_equal(&[2, 3], &[3, 2]));
        assert!(cyclic_equal(&[2, 5, 3, 5], &[3, 5, 2, 5]));
        assert!(!cyclic_equal(&[2, 5, 3, 5], &[2, 3, 5, 5]));
    }
}
