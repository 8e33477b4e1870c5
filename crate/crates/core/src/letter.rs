//! Letters over the edge alphabet and their textual names.
//!
//! Original edges are `S1..Sn` (or `A..Z` when `n <= 26`), auxiliary diagonals
//! are `U1..` / `L1..` (the pentagon uses `f, g, h, i`), and primed edges carry
//! a trailing `'`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::Polygon;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    /// Original edge `S_k`, 1-based.
    Side(usize),
    /// Auxiliary diagonal `U_i` / `L_i`, 1-based within its polygon.
    Aux(Polygon, usize),
    /// Primed edge `S_k'`.
    Primed(usize),
}

impl Letter {
    pub fn is_side(self) -> bool {
        matches!(self, Letter::Side(_))
    }

    pub fn is_aux(self) -> bool {
        matches!(self, Letter::Aux(..))
    }

    pub fn primed(self) -> Letter {
        match self {
            Letter::Side(k) | Letter::Primed(k) => Letter::Primed(k),
            aux => aux,
        }
    }

    pub fn unprimed(self) -> Letter {
        match self {
            Letter::Primed(k) | Letter::Side(k) => Letter::Side(k),
            aux => aux,
        }
    }
}

/// Naming context for letters on the double `n`-gon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Alphabet {
    n: usize,
}

// pentagon auxiliary names: (polygon, index) -> glyph
const PENTAGON_AUX: [(Polygon, usize, char); 4] = [
    (Polygon::Lower, 2, 'f'),
    (Polygon::Lower, 1, 'g'),
    (Polygon::Upper, 2, 'h'),
    (Polygon::Upper, 1, 'i'),
];

impl Alphabet {
    pub fn new(n: usize) -> Self {
        Alphabet { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self, letter: Letter) -> String {
        match letter {
            Letter::Side(k) => self.side_name(k),
            Letter::Primed(k) => format!("{}'", self.side_name(k)),
            Letter::Aux(poly, i) => {
                if self.n == 5 {
                    if let Some(&(_, _, c)) =
                        PENTAGON_AUX.iter().find(|&&(p, j, _)| p == poly && j == i)
                    {
                        return c.to_string();
                    }
                }
                match poly {
                    Polygon::Upper => format!("U{i}"),
                    Polygon::Lower => format!("L{i}"),
                }
            }
        }
    }

    fn side_name(&self, k: usize) -> String {
        if self.n <= 26 {
            char::from(b'A' + (k - 1) as u8).to_string()
        } else {
            format!("S{k}")
        }
    }

    /// Concatenated names, e.g. `BgEhCfEi`.
    pub fn spell(&self, letters: &[Letter]) -> String {
        letters.iter().map(|&l| self.name(l)).collect()
    }

    pub fn names(&self, letters: &[Letter]) -> Vec<String> {
        letters.iter().map(|&l| self.name(l)).collect()
    }

    /// Parses a letter sequence such as `BECE`, `S2 S5 S3 S5`, `BgEhCfEi`
    /// or `C'B'`. Whitespace and commas are ignored.
    pub fn parse(&self, text: &str) -> Result<Vec<Letter>> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() || c == ',' {
                i += 1;
                continue;
            }
            let rest: String = chars[i..].iter().collect();
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let digits: String = chars[i + 1..j].iter().collect();
            let mut letter = if !digits.is_empty() {
                let idx: usize = digits.parse().map_err(|_| Error::Parse(rest.clone()))?;
                match c {
                    'S' | 's' if (1..=self.n).contains(&idx) => Letter::Side(idx),
                    'U' | 'u' if (1..=self.n - 3).contains(&idx) => Letter::Aux(Polygon::Upper, idx),
                    'L' | 'l' if (1..=self.n - 3).contains(&idx) => Letter::Aux(Polygon::Lower, idx),
                    _ => return Err(Error::Parse(rest)),
                }
            } else if c.is_ascii_uppercase() && self.n <= 26 {
                let k = (c as u8 - b'A') as usize + 1;
                if k > self.n {
                    return Err(Error::Parse(rest));
                }
                Letter::Side(k)
            } else if self.n == 5 {
                match PENTAGON_AUX.iter().find(|&&(_, _, g)| g == c) {
                    Some(&(p, idx, _)) => Letter::Aux(p, idx),
                    None => return Err(Error::Parse(rest)),
                }
            } else {
                return Err(Error::Parse(rest));
            };
            i = j;
            if i < chars.len() && chars[i] == '\'' {
                if !letter.is_side() {
                    return Err(Error::Parse(rest));
                }
                letter = letter.primed();
                i += 1;
            }
            out.push(letter);
        }
        Ok(out)
    }
}

/// Display adapter for a single letter under an alphabet.
pub struct Named<'a>(pub &'a Alphabet, pub Letter);

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.name(self.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pentagon_names_round_trip() {
        let a = Alphabet::new(5);
        let w = a.parse("BgEhCfEi").unwrap();
        assert_eq!(a.spell(&w), "BgEhCfEi");
        assert_eq!(w[0], Letter::Side(2));
        assert_eq!(w[1], Letter::Aux(Polygon::Lower, 1));
    }

    #[test]
    fn indexed_tokens_and_primes() {
        let a = Alphabet::new(7);
        let w = a.parse("S3 U2 L1 C' S7'").unwrap();
        assert_eq!(
            w,
            vec![
                Letter::Side(3),
                Letter::Aux(Polygon::Upper, 2),
                Letter::Aux(Polygon::Lower, 1),
                Letter::Primed(3),
                Letter::Primed(7)
            ]
        );
    }

    #[test]
    fn large_n_uses_indexed_names() {
        let a = Alphabet::new(29);
        assert_eq!(a.name(Letter::Side(27)), "S27");
        assert_eq!(a.parse("S27S1").unwrap(), vec![Letter::Side(27), Letter::Side(1)]);
    }

    #[test]
    fn rejects_out_of_alphabet() {
        let a = Alphabet::new(5);
        assert!(a.parse("BF").is_err());
        assert!(a.parse("S6").is_err());
        assert!(a.parse("f'").is_err());
    }
}
