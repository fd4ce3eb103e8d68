mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specinfer::automaton::{build_gridworld, GridworldSpec};
use specinfer::concept::subset_check;
use specinfer::infer::{
    brute_force_chain, brute_force_map, chain_inference, partial_order_inference, ChainView, DemoLanes,
    SearchOptions,
};
use specinfer::posterior::{j_score, BetaPriorConfig};
use specinfer::ptltl::{evaluate, parse, Monitor};
use specinfer::{Backend, ConceptLattice, Error, Formula, SatQueryEngine, ScoreMode, Valuation};

#[test]
fn bounds_only_lattice_picks_false() {
    let m = build_gridworld(&GridworldSpec::parse("@y").unwrap()).unwrap();
    let demos = specinfer::automaton::sample_random_traces(&m, 3, 4, 1).unwrap();
    let lanes = DemoLanes::new(&demos, &m).unwrap();
    let lattice = ConceptLattice::from_parts(vec![Formula::False, Formula::True], &[[0, 1]], None).unwrap();
    let mut engine = SatQueryEngine::new(&m, 3, Backend::DecisionDiagram).unwrap();
    let brute = brute_force_map(&lattice, &lanes, &mut engine, ScoreMode::Indicator, 5).unwrap();
    assert_eq!(brute.best_spec, Formula::False);
    assert_eq!(brute.best_score, 0.0);
    assert_eq!(brute.queries_issued, 2);
    let po = partial_order_inference(&lattice, &lanes, &mut engine, ScoreMode::Indicator, &SearchOptions::default())
        .unwrap();
    assert_eq!(po.best_spec, Formula::False);
    assert_eq!(po.best_score, 0.0);

    let chain = ChainView::new(vec![Formula::False, Formula::True], None).unwrap();
    let c = chain_inference(&chain, &lanes, &mut engine, ScoreMode::Indicator).unwrap();
    assert_eq!(c.best_spec, Formula::False);
    assert_eq!(c.best_score, 0.0);
    // partitions 0 (false) and |X| (true)
    assert_eq!(c.queries_issued, 2);
}

/// One-row world `@ y b`: with deterministic moves the random rates of
/// these specs are easy to count by hand.
#[test]
fn hand_scored_chain() {
    let g = GridworldSpec::parse("@yb").unwrap();
    let m = build_gridworld(&g).unwrap();
    let al = m.alphabet().clone();
    // τ = 3, so two moves matter: 16 equally likely pairs.
    // P(b) needs E,E: 1/16. P(y) needs E first or (stay, E): 4/16 + 3/16·... counted below.
    let specs = ["P(blue)", "P(yellow | blue)", "true"].map(|s| parse(s, &al).unwrap());
    let moves = ["EES", "EWS", "NNN"];
    let demos = specinfer::DemoSet::new(
        3,
        moves.iter().map(|mv| g.trace_from_moves(&mv[..2]).unwrap()).collect(),
    )
    .unwrap();
    let lanes = DemoLanes::new(&demos, &m).unwrap();
    let mut engine = SatQueryEngine::new(&m, 3, Backend::Enumeration { budget: 1 << 10 }).unwrap();
    // hand counts over the 16 first-two-action pairs (N, S, E, W each):
    // blue reached only by E,E; yellow or blue reached when the first move is
    // E (4 pairs) or the first move stays put and the second is E (3 pairs).
    let rates = [1.0 / 16.0, 7.0 / 16.0, 1.0];
    let ns = [1usize, 2, 3];
    for (f, &r) in specs.iter().zip(&rates) {
        assert_eq!(engine.query(f).unwrap(), r);
    }
    let scores: Vec<f64> = ns.iter().zip(&rates).map(|(&n, &r)| 3.0 * j_score(n, 3, r)).collect();
    let best = (0..3).max_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
    let chain = ChainView::new(specs.to_vec(), None).unwrap();
    let brute = brute_force_chain(&chain, &lanes, &mut engine, ScoreMode::Indicator).unwrap();
    let fast = chain_inference(&chain, &lanes, &mut engine, ScoreMode::Indicator).unwrap();
    assert_eq!(brute.best_spec, specs[best]);
    assert_eq!(fast.best_spec, specs[best]);
    assert!((brute.best_score - scores[best]).abs() < 1e-12);
}

#[test]
fn decreasing_chain_is_rejected() {
    let g = GridworldSpec::parse("@y").unwrap();
    let m = build_gridworld(&g).unwrap();
    let al = m.alphabet().clone();
    let demos = specinfer::DemoSet::new(2, vec![g.trace_from_moves("E").unwrap(); 3]).unwrap();
    let lanes = DemoLanes::new(&demos, &m).unwrap();
    let mut engine = SatQueryEngine::new(&m, 2, Backend::DecisionDiagram).unwrap();
    let chain = ChainView::new(
        vec![parse("P(yellow)", &al).unwrap(), Formula::False, Formula::True],
        None,
    )
    .unwrap();
    let err = chain_inference(&chain, &lanes, &mut engine, ScoreMode::Indicator).unwrap_err();
    assert!(matches!(err, Error::InvalidChain(_)), "{err}");
}

#[test]
fn beta_prior_needs_brute_force() {
    let m = build_gridworld(&GridworldSpec::parse("@y").unwrap()).unwrap();
    let demos = specinfer::automaton::sample_random_traces(&m, 2, 2, 0).unwrap();
    let lanes = DemoLanes::new(&demos, &m).unwrap();
    let lattice = ConceptLattice::from_parts(vec![Formula::False, Formula::True], &[[0, 1]], None).unwrap();
    let mut engine = SatQueryEngine::new(&m, 2, Backend::DecisionDiagram).unwrap();
    let beta = ScoreMode::Beta(BetaPriorConfig::new(2.0, 1.0).unwrap());
    assert!(partial_order_inference(&lattice, &lanes, &mut engine, beta, &SearchOptions::default()).is_err());
    assert!(brute_force_map(&lattice, &lanes, &mut engine, beta, 1).is_ok());
}

#[test]
fn lattice_edges_hold_on_sampled_valuations() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let al = common::props(3);
    for _ in 0..20 {
        let tau = rng.gen_range(2..=6);
        let lattice = common::random_lattice(&mut rng, &al, tau, 60);
        let monitors: Vec<Monitor> = lattice.specs().iter().map(|f| Monitor::compile(f, &al).unwrap()).collect();
        for _ in 0..200 {
            let v: Vec<u64> = (0..tau).map(|_| rng.gen_range(0..8)).collect();
            let truth: Vec<bool> = monitors.iter().map(|m| m.evaluate(&v)).collect();
            for [i, j] in lattice.edges() {
                assert!(!truth[i] || truth[j], "{} -> {}", lattice.name(i), lattice.name(j));
            }
        }
        // re-assembling from the reduced edges is a fixed point
        let again = ConceptLattice::from_parts(lattice.specs().to_vec(), &lattice.edges(), None).unwrap();
        assert_eq!(again, lattice);
    }
}

#[test]
fn lattice_order_matches_subset_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let al = common::props(2);
    for _ in 0..10 {
        let lattice = common::random_lattice(&mut rng, &al, 3, 25);
        // strict order: classes are pairwise inequivalent
        let closure = lattice.closure();
        for i in 0..lattice.len() {
            for j in (0..lattice.len()).filter(|&j| j != i) {
                let included = subset_check(
                    lattice.spec(i),
                    lattice.spec(j),
                    &al,
                    3,
                    specinfer::concept::SubsetBackend::Exhaustive,
                    16,
                )
                .unwrap();
                assert_eq!(closure[i].get(j), included, "{} ⊆ {}", lattice.name(i), lattice.name(j));
            }
        }
    }
}

#[test]
fn partition_maximum_sits_at_its_smallest_element() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let al = common::props(3);
    for _ in 0..100 {
        let m = common::random_automaton(&mut rng, 5, 3, &al, 2);
        let count = rng.gen_range(1..8);
        let demos = common::policy_demos(&mut rng, &m, 4, count);
        let lanes = DemoLanes::new(&demos, &m).unwrap();
        let len = rng.gen_range(1..=20);
        let chain = common::random_chain(&mut rng, &al, len);
        let mut engine = SatQueryEngine::new(&m, 4, Backend::DecisionDiagram).unwrap();
        let mut first_of: std::collections::BTreeMap<usize, f64> = Default::default();
        for f in &chain {
            let n = lanes.count(&Monitor::compile(f, &al).unwrap());
            let j = j_score(n, lanes.len(), engine.query(f).unwrap());
            let first = *first_of.entry(n).or_insert(j);
            assert!(j <= first + 1e-12, "{f}: {j} > {first}");
        }
    }
}

#[test]
fn lattice_search_is_independent_of_workers() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let al = common::props(3);
    for _ in 0..20 {
        let m = common::random_automaton(&mut rng, 5, 3, &al, 2);
        let demos = common::policy_demos(&mut rng, &m, 4, 6);
        let lanes = DemoLanes::new(&demos, &m).unwrap();
        let lattice = common::random_lattice(&mut rng, &al, 4, 120);
        let run = |workers| {
            let mut engine = SatQueryEngine::new(&m, 4, Backend::DecisionDiagram).unwrap();
            let opts = SearchOptions {
                workers,
                audit: true,
                ..SearchOptions::default()
            };
            let mut r = partial_order_inference(&lattice, &lanes, &mut engine, ScoreMode::Indicator, &opts).unwrap();
            r.wall_time = Default::default();
            r
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert!(one.audit.unwrap().violations.is_empty());
    }
}

#[test]
fn demo_lanes_match_single_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let al = common::props(3);
    let m = common::random_automaton(&mut rng, 6, 2, &al, 2);
    // more than one 64-lane chunk
    let demos = common::policy_demos(&mut rng, &m, 5, 150);
    let lanes = DemoLanes::new(&demos, &m).unwrap();
    let vals: Vec<Valuation> = demos.traces().iter().map(|t| m.valuation(t).unwrap()).collect();
    for _ in 0..50 {
        let f = common::random_formula(&mut rng, &al, 3);
        let direct = vals.iter().filter(|v| evaluate(&f, &al, v).unwrap()).count();
        assert_eq!(lanes.count(&Monitor::compile(&f, &al).unwrap()), direct);
    }
}
