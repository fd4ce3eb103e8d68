//! A reconstruction of the recharge-while-dry gridworld case study.
//!
//! The original layout and demonstration paths are only known from a
//! picture, so the world and demonstrations here are rebuilt from its
//! description: an 8×8 grid with lava (red), water (blue), drying (brown)
//! and recharge (yellow) tiles, and five demonstrations that avoid lava and
//! recharge, some of them getting wet and drying off first.

use crate::automaton::{build_gridworld, GridworldSpec};
use crate::concept::GrammarConfig;
use crate::ptltl::{parse, Formula};
use crate::{DemoSet, ProbabilisticAutomaton, Result};

/// Tile layout in the text format of [`GridworldSpec::parse`].
pub const GRIDWORLD: &str = include_str!("../data/gridworld.txt");

/// The five demonstrations as a demonstration-set JSON document.
pub const DEMOS: &str = include_str!("../data/demos.json");

/// Moves of each demonstration from the start cell. Leading `N` moves bump
/// into the top wall and pad the shorter paths to the common horizon.
pub const DEMO_MOVES: [&str; 5] = [
    "NEEEESSSESSWWW",
    "NEEEEESSSSSWWW",
    "NNNNNSSSSSEESS",
    "NNNNNNNSSSSSEE",
    "NNNNNSSSSSSEEN",
];

pub const HORIZON: usize = 15;

/// Known requirements conjoined to every candidate: avoid lava, recharge.
pub const CONTEXT: &str = "H(!red) & P(yellow)";

/// Do not recharge while wet.
pub const TARGET: &str = "H(yellow & P(blue) -> (!blue S brown))";

pub fn gridworld() -> GridworldSpec {
    GridworldSpec::parse(GRIDWORLD).expect("shipped gridworld parses")
}

pub fn automaton() -> ProbabilisticAutomaton {
    build_gridworld(&gridworld()).expect("shipped gridworld is valid")
}

pub fn demos() -> DemoSet {
    DemoSet::from_json(DEMOS).expect("shipped demonstrations parse")
}

pub fn context() -> Formula {
    parse(CONTEXT, automaton().alphabet()).expect("context parses")
}

pub fn target() -> Formula {
    parse(TARGET, automaton().alphabet()).expect("target parses")
}

pub fn grammar() -> GrammarConfig {
    GrammarConfig::case_study(automaton().alphabet().clone())
}

/// Checks the shipped JSON against the move strings.
pub fn demos_from_moves() -> Result<DemoSet> {
    let g = gridworld();
    let traces = DEMO_MOVES
        .iter()
        .map(|m| g.trace_from_moves(m))
        .collect::<Result<Vec<_>>>()?;
    DemoSet::new(HORIZON, traces)
}
