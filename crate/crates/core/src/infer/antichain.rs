use crate::concept::{BitSet, ConceptLattice};

/// Size of the largest anti-chain: by Dilworth's theorem, the number of
/// nodes minus a maximum matching in the strict comparability graph.
pub fn max_antichain_width(lattice: &ConceptLattice) -> usize {
    let closure = lattice.closure();
    lattice.len() - max_matching(&closure)
}

/// Hopcroft–Karp on the bipartite graph `i → j` for `j ∈ up[i]`.
fn max_matching(up: &[BitSet]) -> usize {
    const NONE: usize = usize::MAX;
    let n = up.len();
    let adj: Vec<Vec<usize>> = up.iter().map(|b| b.iter().collect()).collect();
    let mut match_left = vec![NONE; n];
    let mut match_right = vec![NONE; n];
    let mut dist = vec![0usize; n];
    let mut matched = 0;
    loop {
        // layered search from free left vertices
        let mut queue = std::collections::VecDeque::new();
        for i in 0..n {
            if match_left[i] == NONE {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = NONE;
            }
        }
        let mut found = false;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                let k = match_right[j];
                if k == NONE {
                    found = true;
                } else if dist[k] == NONE {
                    dist[k] = dist[i] + 1;
                    queue.push_back(k);
                }
            }
        }
        if !found {
            return matched;
        }
        let mut next = vec![0usize; n];
        for i in 0..n {
            if match_left[i] == NONE && augment(i, &adj, &mut match_left, &mut match_right, &mut dist, &mut next) {
                matched += 1;
            }
        }
    }
}

fn augment(
    root: usize,
    adj: &[Vec<usize>],
    match_left: &mut [usize],
    match_right: &mut [usize],
    dist: &mut [usize],
    next: &mut [usize],
) -> bool {
    const NONE: usize = usize::MAX;
    // iterative DFS along the layered graph
    let mut path = vec![root];
    while let Some(&i) = path.last() {
        if next[i] == adj[i].len() {
            dist[i] = NONE;
            path.pop();
            continue;
        }
        let j = adj[i][next[i]];
        next[i] += 1;
        let k = match_right[j];
        if k == NONE {
            // flip the path
            let mut j = j;
            while let Some(i) = path.pop() {
                let prev = match_left[i];
                match_left[i] = j;
                match_right[j] = i;
                j = prev;
            }
            return true;
        }
        if dist[k] == dist[i] + 1 {
            path.push(k);
        }
    }
    false
}
