//! Reading worlds, demonstrations and concept classes from disk.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use specinfer::automaton::build_gridworld;
use specinfer::concept::{build_lattice, enumerate_grammar, BuildReport, GrammarCounts, LatticeOptions};
use specinfer::{Alphabet, ConceptLattice, DemoSet, Error, GrammarConfig, GridworldSpec, ProbabilisticAutomaton};

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub struct World {
    pub automaton: ProbabilisticAutomaton,
    /// Present when the world came from a gridworld text file.
    pub grid: Option<GridworldSpec>,
}

/// A world file is either automaton JSON or gridworld text.
pub fn load_world(path: &Path, slip: f64) -> Result<World> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        if slip != 0.0 {
            return Err(Error::InvalidInput("--slip only applies to gridworld files".into()).into());
        }
        let automaton = ProbabilisticAutomaton::from_json(&text)?;
        return Ok(World { automaton, grid: None });
    }
    let grid = GridworldSpec::parse(&text)?.with_slip(slip);
    let automaton = build_gridworld(&grid)?;
    Ok(World {
        automaton,
        grid: Some(grid),
    })
}

pub fn load_demos(path: &Path, m: &ProbabilisticAutomaton) -> Result<DemoSet> {
    let demos = DemoSet::from_json(&read(path)?)?;
    if demos.is_empty() {
        return Err(Error::InvalidInput("demonstration file holds no traces".into()).into());
    }
    for t in demos.traces() {
        m.valuation(t)?;
    }
    demos.validate(m)?;
    Ok(demos)
}

/// Counts reported for a concept class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub derivations: usize,
    pub syntactic: usize,
    pub non_false: usize,
    pub tautologies: usize,
    /// Semantic classes, `false` and `true` included.
    pub classes: usize,
    pub edges: usize,
}

/// On-disk concept class: the lattice plus how it was made.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassFile {
    pub alphabet: Alphabet,
    pub horizon: usize,
    pub grammar: GrammarConfig,
    pub counts: ClassCounts,
    pub lattice: serde_json::Value,
}

impl ClassFile {
    pub fn lattice(&self) -> Result<ConceptLattice> {
        Ok(ConceptLattice::from_json(&self.lattice.to_string(), &self.alphabet)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ClassFile = serde_json::from_str(&read(path)?)
            .map_err(Error::from)
            .with_context(|| format!("parsing concept class {}", path.display()))?;
        Ok(file)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub struct Generated {
    pub file: ClassFile,
    pub lattice: ConceptLattice,
    /// `None` when the class came from the cache.
    pub build: Option<BuildReport>,
    pub cache_path: Option<PathBuf>,
}

pub fn cache_path(dir: &Path, grammar: &GrammarConfig, horizon: usize) -> PathBuf {
    dir.join(format!("class-{:016x}-t{horizon}.json", grammar.digest()))
}

/// Enumerates and builds a concept class, reusing `cache_dir` when given.
pub fn generate(
    grammar: &GrammarConfig,
    horizon: usize,
    cache_dir: Option<&Path>,
    opts: &LatticeOptions,
) -> Result<Generated> {
    let path = cache_dir.map(|d| cache_path(d, grammar, horizon));
    if let Some(p) = path.as_ref().filter(|p| p.exists()) {
        let file = ClassFile::load(p)?;
        if file.grammar == *grammar && file.horizon == horizon {
            let lattice = file.lattice()?;
            return Ok(Generated {
                file,
                lattice,
                build: None,
                cache_path: path,
            });
        }
    }
    let (specs, GrammarCounts { derivations, syntactic }) = enumerate_grammar(grammar);
    let (lattice, report) = build_lattice(&specs, &grammar.alphabet, horizon, None, opts)?;
    let file = ClassFile {
        alphabet: grammar.alphabet.clone(),
        horizon,
        grammar: grammar.clone(),
        counts: ClassCounts {
            derivations,
            syntactic,
            non_false: report.non_false,
            tautologies: report.tautologies,
            classes: report.classes,
            edges: report.edges,
        },
        lattice: serde_json::from_str(&lattice.to_json()?)?,
    };
    if let Some(p) = &path {
        write(p, &file.to_json()?)?;
    }
    Ok(Generated {
        file,
        lattice,
        build: Some(report),
        cache_path: path,
    })
}
