//! Gridworld builder.
//!
//! Text format, one row per line: `y` yellow, `r` red, `b` blue, `d` brown
//! (drying), `.` white and `@` the white start cell.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ProbabilisticAutomaton, StateId};
use crate::ptltl::Alphabet;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tile {
    White,
    Yellow,
    Red,
    Blue,
    Brown,
}

impl Tile {
    pub fn proposition(self) -> Option<&'static str> {
        match self {
            Tile::White => None,
            Tile::Yellow => Some("yellow"),
            Tile::Red => Some("red"),
            Tile::Blue => Some("blue"),
            Tile::Brown => Some("brown"),
        }
    }

    fn symbol(self) -> char {
        match self {
            Tile::White => '.',
            Tile::Yellow => 'y',
            Tile::Red => 'r',
            Tile::Blue => 'b',
            Tile::Brown => 'd',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::South, Direction::East, Direction::West];

    pub fn name(self) -> &'static str {
        match self {
            Direction::North => "N",
            Direction::South => "S",
            Direction::East => "E",
            Direction::West => "W",
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'N' => Some(Direction::North),
            'S' => Some(Direction::South),
            'E' => Some(Direction::East),
            'W' => Some(Direction::West),
            _ => None,
        }
    }

    /// Action index in automata produced by [`build_gridworld`].
    pub fn action(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridworldSpec {
    pub width: usize,
    pub height: usize,
    /// Row-major, row 0 at the top.
    pub tiles: Vec<Vec<Tile>>,
    /// `(row, col)`.
    pub start: (usize, usize),
    /// Probability that an action is replaced by a uniformly random one.
    pub slip_probability: f64,
}

impl GridworldSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut tiles = Vec::new();
        let mut start = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let mut row = Vec::new();
            for c in line.chars() {
                let tile = match c {
                    'y' => Tile::Yellow,
                    'r' => Tile::Red,
                    'b' => Tile::Blue,
                    'd' => Tile::Brown,
                    '.' => Tile::White,
                    '@' => {
                        if start.replace((tiles.len(), row.len())).is_some() {
                            return Err(Error::InvalidGrid("more than one start cell".into()));
                        }
                        Tile::White
                    }
                    other => {
                        return Err(Error::InvalidGrid(format!("unknown tile character `{other}`")))
                    }
                };
                row.push(tile);
            }
            tiles.push(row);
        }
        let start = start.ok_or_else(|| Error::InvalidGrid("no start cell `@`".into()))?;
        let spec = Self {
            width: tiles.first().map_or(0, Vec::len),
            height: tiles.len(),
            tiles,
            start,
            slip_probability: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_slip(mut self, slip_probability: f64) -> Self {
        self.slip_probability = slip_probability;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidGrid("grid must be nonempty".into()));
        }
        if self.tiles.len() != self.height || self.tiles.iter().any(|r| r.len() != self.width) {
            return Err(Error::InvalidGrid("rows must all have the declared width".into()));
        }
        if self.start.0 >= self.height || self.start.1 >= self.width {
            return Err(Error::InvalidGrid("start cell outside the grid".into()));
        }
        if !(0.0..1.0).contains(&self.slip_probability) {
            return Err(Error::InvalidGrid("slip probability must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn state(&self, row: usize, col: usize) -> StateId {
        row * self.width + col
    }

    pub fn cell(&self, s: StateId) -> (usize, usize) {
        (s / self.width, s % self.width)
    }

    /// Deterministic move; walls clamp the agent in place.
    pub fn step(&self, s: StateId, dir: Direction) -> StateId {
        let (r, c) = self.cell(s);
        let (r, c) = match dir {
            Direction::North => (r.saturating_sub(1), c),
            Direction::South => ((r + 1).min(self.height - 1), c),
            Direction::East => (r, (c + 1).min(self.width - 1)),
            Direction::West => (r, c.saturating_sub(1)),
        };
        self.state(r, c)
    }

    /// Follows a path of `N`/`S`/`E`/`W` moves from the start cell, producing
    /// a trace whose final action repeats the last move (or `N` when empty).
    pub fn trace_from_moves(&self, moves: &str) -> Result<super::Trace> {
        let dirs = moves
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| Direction::from_char(c).ok_or_else(|| Error::InvalidInput(format!("bad move `{c}`"))))
            .collect::<Result<Vec<_>>>()?;
        let mut s = self.state(self.start.0, self.start.1);
        let mut steps = Vec::with_capacity(dirs.len() + 1);
        for &d in &dirs {
            steps.push((s, d.action()));
            s = self.step(s, d);
        }
        steps.push((s, dirs.last().copied().unwrap_or(Direction::North).action()));
        super::Trace::new(steps)
    }
}

impl fmt::Display for GridworldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, row) in self.tiles.iter().enumerate() {
            for (c, tile) in row.iter().enumerate() {
                let ch = if (r, c) == self.start { '@' } else { tile.symbol() };
                write!(f, "{ch}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Cells become states, `N`/`S`/`E`/`W` the actions. With slip probability
/// `p` each action moves as intended with probability `1 - p` and as a
/// uniformly random action otherwise.
pub fn build_gridworld(g: &GridworldSpec) -> Result<ProbabilisticAutomaton> {
    g.validate()?;
    let n = g.width * g.height;
    let p = g.slip_probability;
    let transitions = (0..n)
        .map(|s| {
            Direction::ALL
                .iter()
                .map(|&intended| {
                    let mut dist = vec![(g.step(s, intended), 1.0 - p)];
                    if p > 0.0 {
                        dist.extend(Direction::ALL.iter().map(|&d| (g.step(s, d), p / 4.0)));
                    }
                    dist
                })
                .collect()
        })
        .collect();
    let labels = g
        .tiles
        .iter()
        .flatten()
        .map(|t| t.proposition().map(String::from).into_iter().collect::<BTreeSet<_>>())
        .collect();
    ProbabilisticAutomaton::new(
        n,
        g.state(g.start.0, g.start.1),
        Direction::ALL.iter().map(|d| d.name().to_string()).collect(),
        transitions,
        Alphabet::new(["yellow", "red", "blue", "brown"])?,
        labels,
    )
}
