//! The unit square torus: cutting sequences over `{A, B}` (A for the
//! horizontal edges, B for the vertical ones), its derivation rule, and the
//! geometric derivation by the shear `(1 1; 0 1)`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use serde::Serialize;

use crate::derivation::{Topology, Word};
use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TorusLetter {
    A,
    B,
}

impl fmt::Display for TorusLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TorusLetter::A => "A",
            TorusLetter::B => "B",
        })
    }
}

pub type TorusWord = Word<TorusLetter>;

pub fn parse_torus(text: &str) -> Result<Vec<TorusLetter>> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            'A' => Ok(TorusLetter::A),
            'B' => Ok(TorusLetter::B),
            _ => Err(Error::Parse(c.to_string())),
        })
        .collect()
}

pub fn spell_torus(letters: &[TorusLetter]) -> String {
    letters.iter().map(|l| l.to_string()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorusCrossing {
    pub letter: TorusLetter,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusTrajectory {
    pub theta: f64,
    pub start: Point,
    pub crossings: Vec<TorusCrossing>,
}

impl TorusTrajectory {
    pub fn letters(&self) -> Vec<TorusLetter> {
        self.crossings.iter().map(|c| c.letter).collect()
    }

    pub fn window(&self) -> TorusWord {
        Word::window(self.letters())
    }
}

/// Crossing times of `start + t·d` with the lines `coord = k` (k integer),
/// increasing and strictly positive.
struct LineHits {
    next: f64,
    step: f64,
}

impl LineHits {
    fn new(x0: f64, v: f64) -> Option<LineHits> {
        if v.abs() < 1e-15 {
            return None;
        }
        let target = if v > 0.0 { x0.floor() + 1.0 } else { x0.ceil() - 1.0 };
        Some(LineHits { next: (target - x0) / v, step: 1.0 / v.abs() })
    }

    fn peek(&self) -> f64 {
        self.next
    }

    fn advance(&mut self) {
        self.next += self.step;
    }
}

/// Merges the crossings of two line families in time order; `first` carries
/// letter A, `second` letter B.
fn merge(
    mut first: Option<LineHits>,
    mut second: Option<LineHits>,
    max_crossings: usize,
    max_time: f64,
    corner: f64,
    start: Point,
    d: Point,
) -> Result<Vec<TorusCrossing>> {
    let mut out = Vec::new();
    while out.len() < max_crossings {
        let ta = first.as_ref().map_or(f64::INFINITY, LineHits::peek);
        let tb = second.as_ref().map_or(f64::INFINITY, LineHits::peek);
        let t = ta.min(tb);
        if t >= max_time {
            break;
        }
        if (ta - tb).abs() < corner {
            return Err(Error::CornerHit { point: start + d * t, crossings: out.len() });
        }
        if ta < tb {
            out.push(TorusCrossing { letter: TorusLetter::A, time: ta });
            first.as_mut().expect("finite time").advance();
        } else {
            out.push(TorusCrossing { letter: TorusLetter::B, time: tb });
            second.as_mut().expect("finite time").advance();
        }
    }
    Ok(out)
}

fn check_start(start: Point, corner: f64) -> Result<()> {
    let inside = |v: f64| (0.0..1.0).contains(&v);
    if !inside(start.x) || !inside(start.y) {
        return Err(Error::InvalidStart(format!("{start} is not in the unit square")));
    }
    let frac = |v: f64| v.min(1.0 - v);
    if frac(start.x) < corner && frac(start.y) < corner {
        return Err(Error::CornerHit { point: start, crossings: 0 });
    }
    Ok(())
}

/// Cutting sequence of the line from `start` in direction `theta ∈ [0, π/2)`.
pub fn torus_trace(start: Point, theta: f64, max_crossings: usize, corner: f64) -> Result<TorusTrajectory> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::InvalidStart(format!("torus direction {theta} outside [0, pi/2)")));
    }
    check_start(start, corner)?;
    let d = Point::polar(theta);
    let horizontal = LineHits::new(start.y, d.y);
    let vertical = LineHits::new(start.x, d.x);
    let crossings = merge(horizontal, vertical, max_crossings, f64::INFINITY, corner, start, d)?;
    Ok(TorusTrajectory { theta, start, crossings })
}

/// Direction of slope `p/q`.
pub fn slope_angle(p: u64, q: u64) -> f64 {
    (p as f64).atan2(q as f64)
}

/// One B removed from every B-run lying between two consecutive A's. Windows
/// keep only the part from the first to the last A.
pub fn torus_derive_rule(word: &TorusWord) -> TorusWord {
    let w = &word.letters;
    let a_pos: Vec<usize> = (0..w.len()).filter(|&i| w[i] == TorusLetter::A).collect();
    if a_pos.is_empty() {
        return match word.topology {
            Topology::Cyclic => word.clone(),
            Topology::Window => Word::window(Vec::new()),
        };
    }
    let run = |from: usize, to: usize| -> usize { to - from - 1 };
    let mut out = Vec::new();
    let pairs: Vec<(usize, usize)> = match word.topology {
        Topology::Window => a_pos.windows(2).map(|p| (p[0], p[1])).collect(),
        Topology::Cyclic => {
            let mut v: Vec<(usize, usize)> = a_pos.windows(2).map(|p| (p[0], p[1])).collect();
            v.push((a_pos[a_pos.len() - 1], a_pos[0] + w.len()));
            v
        }
    };
    for (i, j) in pairs {
        out.push(TorusLetter::A);
        out.extend(std::iter::repeat_n(TorusLetter::B, run(i, j).saturating_sub(1)));
    }
    if word.topology == Topology::Window {
        out.push(TorusLetter::A);
    }
    Word { letters: out, topology: word.topology }
}

/// The shear `(1 1; 0 1)` is an automorphism of the torus; the derived word
/// is the cutting sequence of the image line under its inverse. Horizontal
/// lines are fixed by the inverse and vertical lines pull back to the
/// diagonals `x - y ∈ Z`, so the derived word reads A at horizontal crossings
/// and B at diagonal crossings along the original line.
pub fn torus_derive_geometric(traj: &TorusTrajectory, corner: f64) -> Result<TorusTrajectory> {
    if !(0.0..FRAC_PI_4).contains(&traj.theta) {
        return Err(Error::NotSectorNormalized(traj.theta));
    }
    let until = traj.crossings.last().map_or(0.0, |c| c.time) + corner;
    derived_crossings(traj.start, traj.theta, until, corner)
}

fn derived_crossings(start: Point, theta: f64, until: f64, corner: f64) -> Result<TorusTrajectory> {
    let d = Point::polar(theta);
    let horizontal = LineHits::new(start.y, d.y);
    let diagonal = LineHits::new(start.x - start.y, d.x - d.y);
    let crossings = merge(horizontal, diagonal, usize::MAX, until, corner, start, d)?;
    let image = Point::new((start.x - start.y).rem_euclid(1.0), start.y);
    Ok(TorusTrajectory { theta: d.y.atan2(d.x - d.y), start: image, crossings })
}

/// Letters of `derived` in the time span of `original`'s first and last A.
pub fn derived_between(original: &TorusTrajectory, derived: &TorusTrajectory, corner: f64) -> Vec<TorusLetter> {
    let a_times: Vec<f64> =
        original.crossings.iter().filter(|c| c.letter == TorusLetter::A).map(|c| c.time).collect();
    let (Some(&t0), Some(&t1)) = (a_times.first(), a_times.last()) else { return Vec::new() };
    derived
        .crossings
        .iter()
        .filter(|c| c.time >= t0 - corner && c.time <= t1 + corner)
        .map(|c| c.letter)
        .collect()
}

/// The periodic orbit of slope `p/q` (coprime, `p < q`) from a generic
/// start: one period of its cutting sequence and of its derived sequence.
pub fn torus_periodic(p: u64, q: u64, corner: f64) -> Result<(TorusWord, TorusWord)> {
    let theta = slope_angle(p, q);
    let start = Point::new(0.5, (0.5 * p as f64 / q as f64 + 0.37 / q as f64).fract());
    let traj = torus_trace(start, theta, (p + q) as usize, corner)?;
    let period_time = ((p * p + q * q) as f64).sqrt();
    let derived = derived_crossings(start, theta, period_time - 1e-9, corner)?;
    Ok((Word::cyclic(traj.letters()), Word::cyclic(derived.letters())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::ksl;

    fn cw(s: &str) -> TorusWord {
        Word::cyclic(parse_torus(s).unwrap())
    }

    #[test]
    fn slope_third_is_abbb() {
        let (w, derived) = torus_periodic(1, 3, 1e-12).unwrap();
        assert_eq!(w, cw("ABBB"));
        assert_eq!(derived, cw("ABB"));
        let (w, derived) = torus_periodic(1, 2, 1e-12).unwrap();
        assert_eq!((w, derived), (cw("ABB"), cw("AB")));
    }

    #[test]
    fn rule_examples() {
        assert_eq!(torus_derive_rule(&cw("ABBB")), cw("ABB"));
        assert_eq!(torus_derive_rule(&cw("AB")), cw("A"));
        assert_eq!(torus_derive_rule(&cw("AA")), cw("AA"));
        assert_eq!(torus_derive_rule(&cw("B")), cw("B"));
        assert_ne!(ksl(&cw("ABBB")), torus_derive_rule(&cw("ABBB")));
        assert_eq!(ksl(&cw("ABBB")), cw("AB"));
    }

    #[test]
    fn slope_one_alternates() {
        let t = torus_trace(Point::new(0.5, 0.0), FRAC_PI_4, 8, 1e-12).unwrap();
        assert_eq!(spell_torus(&t.letters()), "BABABABA");
    }

    #[test]
    fn horizontal_line_is_all_b_and_fixed() {
        let t = torus_trace(Point::new(0.3, 0.4), 0.0, 5, 1e-12).unwrap();
        assert_eq!(spell_torus(&t.letters()), "BBBBB");
        let d = torus_derive_geometric(&t, 1e-12).unwrap();
        assert_eq!(d.letters(), t.letters());
    }
}
