//! Combinatorial derivation: the "keep only sandwiched letters" operator, its
//! iteration, and the transition-diagram pipeline (arrows, augmented, dual,
//! primed) that realises it for a general double odd-gon.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cylinder::primed_edges;
use crate::error::{Error, Result};
use crate::flow::cast;
use crate::geometry::{proper_crossing, Point, Segment};
use crate::letter::{Alphabet, Letter};
use crate::surface::{auxiliary_edges, Polygon, Surface};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Window,
    Cyclic,
}

/// A finite window or one period of a periodic sequence.
#[derive(Clone, Debug, Serialize)]
pub struct Word<T = Letter> {
    pub letters: Vec<T>,
    pub topology: Topology,
}

impl<T: Clone + Ord> Word<T> {
    pub fn window(letters: Vec<T>) -> Self {
        Word { letters, topology: Topology::Window }
    }

    pub fn cyclic(letters: Vec<T>) -> Self {
        Word { letters, topology: Topology::Cyclic }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Least rotation for cyclic words; windows are returned as they are.
    pub fn canonical(&self) -> Word<T> {
        match self.topology {
            Topology::Window => self.clone(),
            Topology::Cyclic => {
                let l = self.letters.len();
                let best = (0..l)
                    .min_by(|&a, &b| {
                        let ra = self.letters[a..].iter().chain(&self.letters[..a]);
                        let rb = self.letters[b..].iter().chain(&self.letters[..b]);
                        ra.cmp(rb)
                    })
                    .unwrap_or(0);
                let mut letters = self.letters[best..].to_vec();
                letters.extend_from_slice(&self.letters[..best]);
                Word::cyclic(letters)
            }
        }
    }

    pub fn map<U, F: FnMut(&T) -> U>(&self, f: F) -> Word<U> {
        Word { letters: self.letters.iter().map(f).collect(), topology: self.topology }
    }
}

impl<T: Clone + Ord> PartialEq for Word<T> {
    fn eq(&self, other: &Self) -> bool {
        self.topology == other.topology && self.canonical().letters == other.canonical().letters
    }
}

impl<T: Clone + Ord> Eq for Word<T> {}

/// Positions kept by the sandwich rule.
pub fn sandwiched<T: PartialEq>(letters: &[T], topology: Topology) -> Vec<usize> {
    let l = letters.len();
    match topology {
        Topology::Window => (1..l.saturating_sub(1)).filter(|&i| letters[i - 1] == letters[i + 1]).collect(),
        Topology::Cyclic => (0..l).filter(|&i| letters[(i + l - 1) % l] == letters[(i + 1) % l]).collect(),
    }
}

/// Keeps exactly the letters whose two neighbours agree. Windows lose their
/// first and last letters.
pub fn ksl<T: Clone + Ord>(word: &Word<T>) -> Word<T> {
    let letters = sandwiched(&word.letters, word.topology).into_iter().map(|i| word.letters[i].clone()).collect();
    Word { letters, topology: word.topology }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureStatus {
    Empty,
    Fixed,
    Cycle,
    Truncated,
}

#[derive(Clone, Debug, Serialize)]
pub struct Closure<T = Letter> {
    pub orbit: Vec<Word<T>>,
    pub status: ClosureStatus,
}

impl<T: Clone + Ord> PartialEq for Closure<T> {
    fn eq(&self, other: &Self) -> bool {
        self.status == other.status && self.orbit == other.orbit
    }
}

/// Iterates the sandwich rule until the word empties, stops changing,
/// revisits an earlier word, or `max_iters` steps have run.
pub fn derivability_closure<T: Clone + Ord>(word: &Word<T>, max_iters: usize) -> Closure<T> {
    let mut orbit = vec![word.clone()];
    if word.is_empty() {
        return Closure { orbit, status: ClosureStatus::Empty };
    }
    for _ in 0..max_iters {
        let cur = orbit.last().expect("orbit is never empty");
        let next = ksl(cur);
        if next == *cur {
            return Closure { orbit, status: ClosureStatus::Fixed };
        }
        if orbit.contains(&next) {
            orbit.push(next);
            return Closure { orbit, status: ClosureStatus::Cycle };
        }
        let empty = next.is_empty();
        orbit.push(next);
        if empty {
            return Closure { orbit, status: ClosureStatus::Empty };
        }
    }
    Closure { orbit, status: ClosureStatus::Truncated }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Stage {
    Arrows,
    AugmentedArrows,
    Dual,
    Primed,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Arrows => "arrows",
            Stage::AugmentedArrows => "augmented",
            Stage::Dual => "dual",
            Stage::Primed => "primed",
        }
    }

    pub fn parse(s: &str) -> Result<Stage> {
        match s {
            "arrows" => Ok(Stage::Arrows),
            "augmented" => Ok(Stage::AugmentedArrows),
            "dual" => Ok(Stage::Dual),
            "primed" => Ok(Stage::Primed),
            _ => Err(Error::Usage(format!("unknown stage '{s}' (arrows|augmented|dual|primed)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arrow {
    pub from: Letter,
    pub to: Letter,
    pub label: Vec<Letter>,
    /// Polygon the transition happens in (arrows stages only).
    pub polygon: Option<Polygon>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionDiagram {
    pub n: usize,
    pub stage: Stage,
    pub nodes: Vec<Letter>,
    pub arrows: Vec<Arrow>,
}

impl TransitionDiagram {
    pub fn has_arrow(&self, from: Letter, to: Letter) -> bool {
        self.arrows.iter().any(|a| a.from == from && a.to == to)
    }

    pub fn skeleton(&self) -> Vec<(Letter, Letter)> {
        self.arrows.iter().map(|a| (a.from, a.to)).collect()
    }

    pub fn to_json(&self) -> DiagramJson {
        let ab = Alphabet::new(self.n);
        DiagramJson {
            stage: self.stage.name().to_string(),
            nodes: ab.names(&self.nodes),
            arrows: self
                .arrows
                .iter()
                .map(|a| ArrowJson {
                    from: ab.name(a.from),
                    to: ab.name(a.to),
                    label: (!a.label.is_empty()).then(|| ab.spell(&a.label)),
                    polygon: a.polygon.map(|p| p.name().to_string()),
                })
                .collect(),
        }
    }

    pub fn to_dot(&self) -> String {
        let ab = Alphabet::new(self.n);
        let mut s = format!("digraph {} {{\n", self.stage.name());
        for &node in &self.nodes {
            let _ = writeln!(s, "  \"{}\";", ab.name(node));
        }
        for a in &self.arrows {
            let mut attrs = Vec::new();
            if !a.label.is_empty() {
                attrs.push(format!("label=\"{}\"", ab.spell(&a.label)));
            }
            if a.polygon == Some(Polygon::Lower) {
                attrs.push("color=gray".to_string());
            }
            let attrs = if attrs.is_empty() { String::new() } else { format!(" [{}]", attrs.join(", ")) };
            let _ = writeln!(s, "  \"{}\" -> \"{}\"{attrs};", ab.name(a.from), ab.name(a.to));
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagramJson {
    pub stage: String,
    pub nodes: Vec<String>,
    pub arrows: Vec<ArrowJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArrowJson {
    pub from: String,
    pub to: String,
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polygon: Option<String>,
}

// chord sampling grid inside the sector; offsets keep samples off midpoints
const GRID: usize = 24;
const GRID_SHIFT: f64 = 0.382;
const CORNER: f64 = 1e-9;

/// Primed labels of dual arrows, keyed by (from, to, originals crossed).
pub type DualLabels = BTreeMap<(Letter, Letter, Vec<usize>), Vec<usize>>;

/// `(position, letter)` pairs kept by the derivation, and the positions it
/// can decide.
pub type Aligned = (Vec<(usize, usize)>, Vec<usize>);

/// Everything the diagram pipeline needs, computed once per surface.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub n: usize,
    /// `entry[k-1]`: polygon a sector trajectory enters through `S_k`.
    pub entry: Vec<Polygon>,
    /// Auxiliary and primed letters crossed along each transition, in order.
    pub events: BTreeMap<(usize, usize), Vec<Letter>>,
    pub nodes: Vec<Letter>,
    /// Dual arrow `(from, to, originals crossed)` to primed labels crossed.
    pub dual: DualLabels,
}

struct Geometry<'a> {
    surface: &'a Surface,
    aux: Vec<(Polygon, Letter, Segment)>,
    primed: Vec<(Polygon, usize, Segment)>,
    theta: (f64, f64),
}

impl Geometry<'_> {
    /// Exit edge and ordered interior events of the chord entering `poly`
    /// through `S_a` at parameter `s` with direction `theta`.
    fn chord(&self, poly: Polygon, a: usize, s: f64, theta: f64) -> Option<(usize, Vec<Letter>)> {
        let e = self.surface.edge_segment(poly, a);
        let p = e.at(s);
        let d = Point::polar(theta);
        let (b, t) = cast(self.surface, poly, p, d, Some(a))?;
        let q = p + d * t;
        let e_b = self.surface.edge_segment(poly, b);
        let param = (q - e_b.p0).dot(e_b.vector());
        if !(CORNER..1.0 - CORNER).contains(&param) {
            return None;
        }
        let chord = Segment::new(p, q);
        let mut hits: Vec<(f64, Letter)> = Vec::new();
        for &(q_poly, letter, seg) in &self.aux {
            if q_poly == poly {
                if let Some((u, _)) = proper_crossing(&chord, &seg, 1e-9) {
                    hits.push((u, letter));
                }
            }
        }
        hits.sort_by(|x, y| x.0.total_cmp(&y.0));
        Some((b, hits.into_iter().map(|h| h.1).collect()))
    }

    /// Follows a ray from `p` until it meets a node, collecting the original
    /// and primed edges crossed on the way.
    fn dual_walk(
        &self,
        nodes: &[Letter],
        mut poly: Polygon,
        mut p: Point,
        theta: f64,
        mut skip_edge: Option<usize>,
        mut skip_aux: Option<Letter>,
    ) -> Option<(Letter, Vec<usize>, Vec<usize>)> {
        let d = Point::polar(theta);
        let (mut originals, mut primed) = (Vec::new(), Vec::new());
        for _ in 0..4 * self.surface.n() {
            let (b, t) = cast(self.surface, poly, p, d, skip_edge)?;
            let q = p + d * t;
            let e_b = self.surface.edge_segment(poly, b);
            let param = (q - e_b.p0).dot(e_b.vector());
            if !(CORNER..1.0 - CORNER).contains(&param) {
                return None;
            }
            let chord = Segment::new(p, q);
            let mut hits: Vec<(f64, Letter)> = Vec::new();
            for &(q_poly, letter, seg) in &self.aux {
                if q_poly == poly && Some(letter) != skip_aux {
                    if let Some((u, _)) = proper_crossing(&chord, &seg, 1e-9) {
                        hits.push((u, letter));
                    }
                }
            }
            for &(q_poly, label, seg) in &self.primed {
                if q_poly == poly {
                    if let Some((u, _)) = proper_crossing(&chord, &seg, 1e-9) {
                        hits.push((u, Letter::Primed(label)));
                    }
                }
            }
            hits.sort_by(|x, y| x.0.total_cmp(&y.0));
            for (_, h) in hits {
                match h {
                    Letter::Primed(k) => primed.push(k),
                    node => return Some((node, originals, primed)),
                }
            }
            if nodes.contains(&Letter::Side(b)) {
                return Some((Letter::Side(b), originals, primed));
            }
            originals.push(b);
            p = self.surface.identify(poly, b, q);
            poly = poly.other();
            skip_edge = Some(b);
            skip_aux = None;
        }
        None
    }
}

impl Pipeline {
    pub fn new(surface: &Surface) -> Result<Pipeline> {
        let n = surface.n();
        let gon = surface.gon();
        let w = gon.half_alpha();
        let mid = Point::polar(0.5 * w);
        let entry: Vec<Polygon> = (1..=n)
            .map(|k| {
                if surface.edge_segment(Polygon::Upper, k).vector().cross(mid) > 0.0 {
                    Polygon::Upper
                } else {
                    Polygon::Lower
                }
            })
            .collect();
        let geo = Geometry {
            surface,
            aux: auxiliary_edges(surface).into_iter().map(|e| (e.polygon, e.letter, e.segment)).collect(),
            primed: primed_edges(surface)?
                .into_iter()
                .filter(|p| p.coincides_with.is_none())
                .flat_map(|p| p.pieces.into_iter().map(move |(poly, seg)| (poly, p.label, seg)))
                .collect(),
            theta: (0.0, w),
        };

        let mut events: BTreeMap<(usize, usize), Vec<Letter>> = BTreeMap::new();
        let mut reachable: BTreeSet<(usize, usize)> = BTreeSet::new();
        for a in 1..=n {
            let poly = entry[a - 1];
            // extreme chords find thin transitions near the sector boundary
            for s in [CORNER, 1.0 - CORNER] {
                for th in [geo.theta.0 + CORNER, geo.theta.1 - CORNER] {
                    if let Some((b, _)) = geo.chord(poly, a, s, th) {
                        reachable.insert((a, b));
                    }
                }
            }
            for i in 0..GRID {
                for j in 0..GRID {
                    let s = (i as f64 + GRID_SHIFT) / GRID as f64;
                    let th = geo.theta.0 + (j as f64 + 1.0 - GRID_SHIFT) / GRID as f64 * w;
                    let Some((b, ev)) = geo.chord(poly, a, s, th) else { continue };
                    reachable.insert((a, b));
                    match events.get(&(a, b)) {
                        None => {
                            events.insert((a, b), ev);
                        }
                        Some(prev) if *prev != ev => {
                            let ab = Alphabet::new(n);
                            return Err(Error::InconsistentDiagram(format!(
                                "transition {}{} crosses {} on one chord and {} on another",
                                ab.name(Letter::Side(a)),
                                ab.name(Letter::Side(b)),
                                ab.spell(prev),
                                ab.spell(&ev)
                            )));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        // transitions seen only at the extremes: sample a finer grid near them
        for &(a, b) in &reachable {
            if events.contains_key(&(a, b)) {
                continue;
            }
            let poly = entry[a - 1];
            let mut found = None;
            'outer: for i in 0..4 * GRID {
                for j in 0..4 * GRID {
                    let s = (i as f64 + GRID_SHIFT) / (4 * GRID) as f64;
                    let th = (j as f64 + 1.0 - GRID_SHIFT) / (4 * GRID) as f64 * w;
                    if let Some((bb, ev)) = geo.chord(poly, a, s, th) {
                        if bb == b {
                            found = Some(ev);
                            break 'outer;
                        }
                    }
                }
            }
            let ev = found.ok_or_else(|| {
                Error::InconsistentDiagram(format!("transition S{a} -> S{b} has no interior chord"))
            })?;
            events.insert((a, b), ev);
        }

        let mut nodes: Vec<Letter> = auxiliary_edges(surface).into_iter().map(|e| e.letter).collect();
        nodes.push(Letter::Side(1));
        nodes.push(Letter::Side(gon.sector_edge()));
        let mut p = Pipeline { n, entry, events, nodes, dual: BTreeMap::new() };
        let geometric = p.sample_dual(&geo)?;
        let skeleton = p.build_dual_skeleton()?;
        for key in &skeleton {
            let primed = geometric.get(key).ok_or_else(|| {
                Error::InconsistentDiagram(format!("dual arrow {key:?} is never realised by a chord"))
            })?;
            p.dual.insert(key.clone(), primed.clone());
        }
        if let Some(extra) = geometric.keys().find(|k| !skeleton.contains(*k)) {
            return Err(Error::InconsistentDiagram(format!("chord realises {extra:?} outside the dual diagram")));
        }
        Ok(p)
    }

    fn is_node(&self, l: Letter) -> bool {
        self.nodes.contains(&l)
    }

    /// Tokens seen after leaving `S_a` up to and including `S_b`.
    fn tokens(&self, a: usize, b: usize) -> impl Iterator<Item = Letter> + '_ {
        self.events[&(a, b)].iter().copied().chain(std::iter::once(Letter::Side(b)))
    }

    fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.events.keys().filter(move |(x, _)| *x == a).map(|&(_, y)| y)
    }

    /// Primed labels of dual arrows, read off chords that start on each node.
    fn sample_dual(&self, geo: &Geometry) -> Result<DualLabels> {
        let w = geo.theta.1;
        let mut out: DualLabels = BTreeMap::new();
        for &node in &self.nodes {
            let (poly, seg, skip_edge) = match node {
                Letter::Side(k) => {
                    let poly = self.entry[k - 1];
                    (poly, geo.surface.edge_segment(poly, k), Some(k))
                }
                Letter::Aux(poly, _) => {
                    let seg = geo.aux.iter().find(|a| a.1 == node).expect("auxiliary node has a segment").2;
                    (poly, seg, None)
                }
                Letter::Primed(_) => unreachable!("primed letters are never nodes"),
            };
            let skip_aux = node.is_aux().then_some(node);
            for i in 0..GRID {
                for j in 0..GRID {
                    let s = (i as f64 + GRID_SHIFT) / GRID as f64;
                    let th = (j as f64 + 1.0 - GRID_SHIFT) / GRID as f64 * w;
                    let Some((to, originals, primed)) =
                        geo.dual_walk(&self.nodes, poly, seg.at(s), th, skip_edge, skip_aux)
                    else {
                        continue;
                    };
                    let key = (node, to, originals);
                    match out.get(&key) {
                        Some(prev) if *prev != primed => {
                            return Err(Error::InconsistentDiagram(format!(
                                "dual arrow {key:?} crosses primed {prev:?} on one chord and {primed:?} on another"
                            )))
                        }
                        Some(_) => {}
                        None => {
                            out.insert(key, primed);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Dual arrows implied by the augmented transitions: maximal runs of
    /// original letters between consecutive nodes.
    fn build_dual_skeleton(&self) -> Result<BTreeSet<(Letter, Letter, Vec<usize>)>> {
        struct Walk {
            from: Letter,
            originals: Vec<usize>,
        }
        fn extend(
            p: &Pipeline,
            a: usize,
            b: usize,
            skip: usize,
            mut walk: Walk,
            depth: usize,
            out: &mut BTreeSet<(Letter, Letter, Vec<usize>)>,
        ) -> Result<()> {
            for tok in p.tokens(a, b).skip(skip) {
                if p.is_node(tok) {
                    out.insert((walk.from, tok, walk.originals));
                    return Ok(());
                }
                if let Letter::Side(k) = tok {
                    walk.originals.push(k);
                }
            }
            if depth > 4 * p.n {
                return Err(Error::InconsistentDiagram(format!("no node reached after S{a} -> S{b}")));
            }
            for c in p.successors(b).collect::<Vec<_>>() {
                let w = Walk { from: walk.from, originals: walk.originals.clone() };
                extend(p, b, c, 0, w, depth + 1, out)?;
            }
            Ok(())
        }
        let mut out = BTreeSet::new();
        for &(a, b) in self.events.keys() {
            for (i, tok) in self.tokens(a, b).enumerate() {
                if self.is_node(tok) {
                    extend(self, a, b, i + 1, Walk { from: tok, originals: Vec::new() }, 0, &mut out)?;
                }
            }
        }
        Ok(out)
    }

    pub fn has_transition(&self, a: usize, b: usize) -> bool {
        self.events.contains_key(&(a, b))
    }

    pub fn diagram(&self, stage: Stage) -> TransitionDiagram {
        let n = self.n;
        match stage {
            Stage::Arrows | Stage::AugmentedArrows => TransitionDiagram {
                n,
                stage,
                nodes: (1..=n).map(Letter::Side).collect(),
                arrows: self
                    .events
                    .iter()
                    .map(|(&(a, b), ev)| Arrow {
                        from: Letter::Side(a),
                        to: Letter::Side(b),
                        label: if stage == Stage::Arrows {
                            Vec::new()
                        } else {
                            ev.iter().copied().filter(|l| l.is_aux()).collect()
                        },
                        polygon: Some(self.entry[a - 1]),
                    })
                    .collect(),
            },
            Stage::Dual | Stage::Primed => TransitionDiagram {
                n,
                stage,
                nodes: self.nodes.clone(),
                arrows: self
                    .dual
                    .iter()
                    .map(|((from, to, originals), primed)| Arrow {
                        from: *from,
                        to: *to,
                        label: if stage == Stage::Dual {
                            originals.iter().map(|&k| Letter::Side(k)).collect()
                        } else {
                            primed.iter().map(|&k| Letter::Primed(k)).collect()
                        },
                        polygon: None,
                    })
                    .collect(),
            },
        }
    }

    fn validate(&self, word: &[usize], topology: Topology) -> Result<()> {
        let ab = Alphabet::new(self.n);
        if let Some(&k) = word.iter().find(|&&k| k == 0 || k > self.n) {
            return Err(Error::Parse(format!("S{k}")));
        }
        let l = word.len();
        let pairs = match topology {
            Topology::Window => l.saturating_sub(1),
            Topology::Cyclic => l,
        };
        for i in 0..pairs {
            let (a, b) = (word[i], word[(i + 1) % l]);
            if !self.has_transition(a, b) {
                return Err(Error::InvalidPath { from: ab.name(Letter::Side(a)), to: ab.name(Letter::Side(b)) });
            }
        }
        Ok(())
    }

    /// The word with auxiliary letters inserted (cyclic: one period, the
    /// letters crossed after the last original before the first are appended).
    pub fn augment(&self, word: &[usize], topology: Topology) -> Result<Vec<Letter>> {
        self.validate(word, topology)?;
        let l = word.len();
        let mut out = Vec::new();
        for i in 0..l {
            out.push(Letter::Side(word[i]));
            if topology == Topology::Cyclic || i + 1 < l {
                out.extend(self.events[&(word[i], word[(i + 1) % l])].iter().copied().filter(|t| t.is_aux()));
            }
        }
        Ok(out)
    }

    /// Derived letters attributed to original positions, through the dual
    /// and primed diagrams. Only positions bracketed by nodes on both sides
    /// are determined; the second value lists them.
    pub fn derive_aligned(&self, word: &[usize], topology: Topology) -> Result<Aligned> {
        self.validate(word, topology)?;
        let l = word.len();
        if l == 0 {
            return Ok((Vec::new(), Vec::new()));
        }
        // the stream of (letter, original position); cyclic words are written
        // three times and the middle copy read off
        let copies = if topology == Topology::Cyclic { 3 } else { 1 };
        let total = copies * l;
        let mut stream: Vec<(Letter, Option<usize>)> = Vec::new();
        for i in 0..total {
            stream.push((Letter::Side(word[i % l]), Some(i)));
            if i + 1 < total || topology == Topology::Cyclic && i + 1 < total {
                let next = word[(i + 1) % l];
                stream.extend(self.events[&(word[i % l], next)].iter().map(|&t| (t, None)));
            }
        }
        let node_pos: Vec<usize> = (0..stream.len()).filter(|&p| self.is_node(stream[p].0)).collect();
        if node_pos.is_empty() {
            return Ok((Vec::new(), Vec::new()));
        }
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for &p in &node_pos {
            if let (Letter::Side(k), Some(i)) = stream[p] {
                pairs.push((i, k));
            }
        }
        for w in node_pos.windows(2) {
            let (p, q) = (w[0], w[1]);
            let between: Vec<(usize, usize)> = stream[p + 1..q]
                .iter()
                .filter_map(|&(t, i)| match t {
                    Letter::Side(k) => Some((i.expect("originals carry positions"), k)),
                    _ => None,
                })
                .collect();
            let key = (stream[p].0, stream[q].0, between.iter().map(|b| b.1).collect::<Vec<_>>());
            let primed = self
                .dual
                .get(&key)
                .ok_or_else(|| Error::InconsistentDiagram(format!("walk uses a dual arrow not in the diagram: {key:?}")))?;
            for &k in primed {
                let &(i, _) = between.iter().find(|b| b.1 == k).ok_or_else(|| {
                    Error::InconsistentDiagram(format!("primed S{k} crossed with no S{k} between the nodes"))
                })?;
                pairs.push((i, k));
            }
        }
        let first = stream[node_pos[0]..].iter().find_map(|t| t.1).unwrap_or(total);
        let last = stream[..=node_pos[node_pos.len() - 1]].iter().rev().find_map(|t| t.1);
        let mut determined: Vec<usize> = match last {
            Some(last) if first <= last => (first..=last).collect(),
            _ => Vec::new(),
        };
        if topology == Topology::Cyclic {
            pairs.retain(|&(i, _)| (l..2 * l).contains(&i));
            pairs.iter_mut().for_each(|pr| pr.0 -= l);
            determined = determined.into_iter().filter(|i| (l..2 * l).contains(i)).map(|i| i - l).collect();
        }
        pairs.sort_unstable();
        Ok((pairs, determined))
    }
}

/// Full pipeline on a word of original edges: augment, walk the dual
/// diagram, read primed labels, drop auxiliaries, strip primes.
pub fn derive_via_diagrams(word: &Word<usize>, pipeline: &Pipeline) -> Result<Word<usize>> {
    let (pairs, _) = pipeline.derive_aligned(&word.letters, word.topology)?;
    Ok(Word { letters: pairs.into_iter().map(|p| p.1).collect(), topology: word.topology })
}

pub fn build_arrows_diagram(surface: &Surface) -> Result<TransitionDiagram> {
    Ok(Pipeline::new(surface)?.diagram(Stage::Arrows))
}

pub fn build_pipeline_diagrams(surface: &Surface) -> Result<(TransitionDiagram, TransitionDiagram, TransitionDiagram)> {
    let p = Pipeline::new(surface)?;
    Ok((p.diagram(Stage::AugmentedArrows), p.diagram(Stage::Dual), p.diagram(Stage::Primed)))
}

/// Compares the diagram derivation with the sandwich rule on the positions
/// the diagram determines. `None` when they agree.
pub fn compare_with_ksl(pipeline: &Pipeline, word: &[usize], topology: Topology) -> Result<Option<Mismatch>> {
    let (pairs, determined) = pipeline.derive_aligned(word, topology)?;
    let interior = |i: usize| topology == Topology::Cyclic || (i >= 1 && i + 1 < word.len());
    let scope: BTreeSet<usize> = determined.into_iter().filter(|&i| interior(i)).collect();
    let via: Vec<(usize, usize)> = pairs.into_iter().filter(|p| scope.contains(&p.0)).collect();
    let rule: Vec<(usize, usize)> =
        sandwiched(word, topology).into_iter().filter(|i| scope.contains(i)).map(|i| (i, word[i])).collect();
    Ok((via != rule).then(|| Mismatch { word: word.to_vec(), topology, diagram: via, ksl: rule }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mismatch {
    pub word: Vec<usize>,
    pub topology: Topology,
    pub diagram: Vec<(usize, usize)>,
    pub ksl: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub cyclic_walks: usize,
    pub random_windows: usize,
    pub mismatches: usize,
    pub first_counterexample: Option<Mismatch>,
    pub fragments: Vec<FragmentResult>,
    pub pass: bool,
}

/// Every closed walk of length `1..=max_len`, one representative per rotation.
pub fn cyclic_walks(pipeline: &Pipeline, max_len: usize) -> Vec<Vec<usize>> {
    fn grow(p: &Pipeline, path: &mut Vec<usize>, max_len: usize, out: &mut Vec<Vec<usize>>) {
        let first = path[0];
        let last = *path.last().expect("non-empty path");
        if p.has_transition(last, first) && is_least_rotation(path) {
            out.push(path.clone());
        }
        if path.len() == max_len {
            return;
        }
        for next in p.successors(last).collect::<Vec<_>>() {
            // the least rotation starts with its smallest letter
            if next < first {
                continue;
            }
            path.push(next);
            grow(p, path, max_len, out);
            path.pop();
        }
    }
    let starts: Vec<usize> = (1..=pipeline.n).collect();
    starts
        .par_iter()
        .flat_map_iter(|&s| {
            let mut out = Vec::new();
            grow(pipeline, &mut vec![s], max_len, &mut out);
            out
        })
        .collect()
}

fn is_least_rotation(w: &[usize]) -> bool {
    let l = w.len();
    (1..l).all(|r| w.iter().cmp(w[r..].iter().chain(&w[..r])) != std::cmp::Ordering::Greater)
}

/// A uniformly stepped random walk on the arrows diagram.
pub fn random_walk<R: Rng>(pipeline: &Pipeline, rng: &mut R, len: usize) -> Vec<usize> {
    let mut w = vec![rng.gen_range(1..=pipeline.n)];
    while w.len() < len {
        let next: Vec<usize> = pipeline.successors(*w.last().expect("non-empty")).collect();
        w.push(next[rng.gen_range(0..next.len())]);
    }
    w
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FragmentResult {
    pub fragment: String,
    /// `Some(true)` when the middle letter survives in every extension.
    pub kept: Option<bool>,
    pub extensions: usize,
}

/// Whether the middle letter of a three-letter walk survives the diagram
/// derivation, over all one- and two-letter extensions on either side that
/// determine it.
pub fn classify_fragment(pipeline: &Pipeline, fragment: &[usize]) -> Result<FragmentResult> {
    let ab = Alphabet::new(pipeline.n);
    let name = fragment.iter().map(|&k| ab.name(Letter::Side(k))).collect::<String>();
    pipeline.validate(fragment, Topology::Window)?;
    let mut prefixes: Vec<Vec<usize>> = Vec::new();
    let mut suffixes: Vec<Vec<usize>> = Vec::new();
    for a in 1..=pipeline.n {
        if pipeline.has_transition(a, fragment[0]) {
            prefixes.push(vec![a]);
            for b in 1..=pipeline.n {
                if pipeline.has_transition(b, a) {
                    prefixes.push(vec![b, a]);
                }
            }
        }
        if pipeline.has_transition(fragment[fragment.len() - 1], a) {
            suffixes.push(vec![a]);
            for b in pipeline.successors(a) {
                suffixes.push(vec![a, b]);
            }
        }
    }
    let mut verdicts = BTreeSet::new();
    let mut extensions = 0;
    for pre in &prefixes {
        for suf in &suffixes {
            let mut w = pre.clone();
            w.extend_from_slice(fragment);
            w.extend_from_slice(suf);
            let mid = pre.len() + 1;
            let (pairs, determined) = pipeline.derive_aligned(&w, Topology::Window)?;
            if determined.contains(&mid) {
                extensions += 1;
                verdicts.insert(pairs.iter().any(|&(i, _)| i == mid));
            }
        }
    }
    let kept = if verdicts.len() == 1 { verdicts.into_iter().next() } else { None };
    Ok(FragmentResult { fragment: name, kept, extensions })
}

/// Exhaustive closed walks up to `length_bound`, `random` random windows of
/// length 3..=`random_len`, and optional fragment classification.
pub fn sandwich_equivalence_check<R: Rng>(
    surface: &Surface,
    length_bound: usize,
    random: usize,
    random_len: usize,
    fragments: &[Vec<usize>],
    rng: &mut R,
) -> Result<EquivalenceReport> {
    let p = Pipeline::new(surface)?;
    let walks = cyclic_walks(&p, length_bound);
    let cyc: Vec<Option<Mismatch>> =
        walks.par_iter().map(|w| compare_with_ksl(&p, w, Topology::Cyclic)).collect::<Result<_>>()?;
    let windows: Vec<Vec<usize>> =
        (0..random)
            .map(|_| {
                let len = rng.gen_range(3..=random_len.max(3));
                random_walk(&p, rng, len)
            })
            .collect();
    let win: Vec<Option<Mismatch>> =
        windows.par_iter().map(|w| compare_with_ksl(&p, w, Topology::Window)).collect::<Result<_>>()?;
    let bad: Vec<Mismatch> = cyc.into_iter().chain(win).flatten().collect();
    let fragments = fragments.iter().map(|f| classify_fragment(&p, f)).collect::<Result<Vec<_>>>()?;
    Ok(EquivalenceReport {
        n: surface.n(),
        cyclic_walks: walks.len(),
        random_windows: windows.len(),
        mismatches: bad.len(),
        first_counterexample: bad.into_iter().next(),
        fragments,
        pass: false,
    }
    .finish())
}

impl EquivalenceReport {
    fn finish(mut self) -> Self {
        self.pass = self.mismatches == 0 && self.fragments.iter().all(|f| f.kept.is_some());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_surface;

    fn w(s: &str) -> Vec<Letter> {
        Alphabet::new(5).parse(s).unwrap()
    }

    #[test]
    fn ksl_examples() {
        let ab = Alphabet::new(5);
        let win = ksl(&Word::window(Alphabet::new(26).parse("ABCDCCCCBCBCDE").unwrap()));
        assert_eq!(Alphabet::new(26).spell(&win.letters), "DCCBCB");
        assert_eq!(ksl(&Word::cyclic(w("BECE"))), Word::cyclic(w("BC")));
        assert_eq!(ksl(&Word::cyclic(w("BC"))), Word::cyclic(w("CB")));
        assert!(ksl(&Word::cyclic(w("ABC"))).is_empty());
        assert_eq!(ab.spell(&ksl(&Word::cyclic(w("A"))).letters), "A");
    }

    #[test]
    fn closure_examples() {
        let c = derivability_closure(&Word::cyclic(w("BECE")), 10);
        assert_eq!(c.status, ClosureStatus::Fixed);
        assert_eq!(c.orbit, vec![Word::cyclic(w("BECE")), Word::cyclic(w("BC"))]);
        let c = derivability_closure(&Word::cyclic(w("ABC")), 10);
        assert_eq!(c.status, ClosureStatus::Empty);
        assert_eq!(c.orbit.len(), 2);
        let c = derivability_closure(&Word::cyclic(w("AA")), 10);
        assert_eq!((c.status, c.orbit.len()), (ClosureStatus::Fixed, 1));
    }

    #[test]
    fn canonical_rotation() {
        assert_eq!(Word::cyclic(vec![3, 1, 2]).canonical().letters, vec![1, 2, 3]);
        assert_eq!(Word::cyclic(vec![2, 1, 2, 1]).canonical().letters, vec![1, 2, 1, 2]);
    }

    #[test]
    fn pentagon_pipeline() {
        let s = build_surface(5).unwrap();
        let p = Pipeline::new(&s).unwrap();
        assert!(p.has_transition(1, 2));
        assert!(!p.has_transition(1, 3));
        let ab = Alphabet::new(5);
        let aug = p.augment(&[2, 5, 3, 5], Topology::Cyclic).unwrap();
        assert_eq!(ab.spell(&aug), "BgEhCfEi");
        let d = derive_via_diagrams(&Word::cyclic(vec![2, 5, 3, 5]), &p).unwrap();
        assert_eq!(d, Word::cyclic(vec![2, 3]));
    }
}
