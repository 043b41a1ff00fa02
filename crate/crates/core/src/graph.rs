//! Small directed-graph helpers over implicit adjacency (successor
//! closures), sized for cell graphs and covering relations.

/// Strongly connected components, Tarjan's algorithm, iterative so deep
/// recursions on path-like graphs can't overflow the stack.
///
/// `comps` is emitted in reverse topological order: every edge u → v with
/// `comp_of[u] != comp_of[v]` has `comp_of[u] > comp_of[v]`.
pub struct SccResult {
    pub comp_of: Vec<usize>,
    pub comps: Vec<Vec<usize>>,
}

pub fn tarjan_scc<F, I>(n: usize, mut succ: F) -> SccResult
where
    F: FnMut(usize) -> I,
    I: Iterator<Item = usize>,
{
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut comp_of = vec![UNSET; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();

    // frame: (vertex, its remaining successor iterator)
    let mut frames: Vec<(usize, I)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, succ(root)));

        while let Some((v, it)) = frames.last_mut() {
            let v = *v;
            if let Some(w) = it.next() {
                if index[w] == UNSET {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, succ(w)));
                } else if on_stack[w] && index[w] < lowlink[v] {
                    lowlink[v] = index[w];
                }
            } else {
                frames.pop();
                if let Some((parent, _)) = frames.last() {
                    let p = *parent;
                    if lowlink[v] < lowlink[p] {
                        lowlink[p] = lowlink[v];
                    }
                }
                if lowlink[v] == index[v] {
                    let cid = comps.len();
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp_of[w] = cid;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    SccResult { comp_of, comps }
}

impl SccResult {
    /// A component all of whose out-edges stay inside it.
    pub fn is_terminal<F, I>(&self, cid: usize, mut succ: F) -> bool
    where
        F: FnMut(usize) -> I,
        I: Iterator<Item = usize>,
    {
        self.comps[cid]
            .iter()
            .all(|&v| succ(v).all(|w| self.comp_of[w] == cid))
    }

    /// Whether the component has an internal edge (distinguishes a genuine
    /// cycle from a trivial singleton without a self-loop).
    pub fn has_internal_edge<F, I>(&self, cid: usize, mut succ: F) -> bool
    where
        F: FnMut(usize) -> I,
        I: Iterator<Item = usize>,
    {
        self.comps[cid]
            .iter()
            .any(|&v| succ(v).any(|w| self.comp_of[w] == cid))
    }
}

/// BFS distance from `start`; `None` for unreachable vertices.
pub fn bfs_levels<F, I>(n: usize, mut succ: F, start: usize) -> Vec<Option<usize>>
where
    F: FnMut(usize) -> I,
    I: Iterator<Item = usize>,
{
    let mut level = vec![None; n];
    level[start] = Some(0);
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let lv = level[v].unwrap();
        for w in succ(v) {
            if level[w].is_none() {
                level[w] = Some(lv + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

/// Period (cyclic index) of a strongly connected graph: gcd over all edges
/// u → v of level(u) + 1 − level(v). Period 1 means aperiodic.
pub fn strongly_connected_period<F, I>(n: usize, mut succ: F) -> usize
where
    F: FnMut(usize) -> I + Copy,
    I: Iterator<Item = usize>,
{
    let level = bfs_levels(n, succ, 0);
    let mut g: i64 = 0;
    for u in 0..n {
        let lu = level[u].expect("graph must be strongly connected") as i64;
        for v in succ(u) {
            let lv = level[v].expect("graph must be strongly connected") as i64;
            g = gcd_i64(g, (lu + 1 - lv).abs());
        }
    }
    g.max(1) as usize
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd_i64(b, a % b)
    }
}

/// Recover one directed cycle inside a strongly connected component with at
/// least one internal edge. Returns the vertex sequence v0, v1, ..., vk with
/// an edge vi → vi+1 and vk → v0.
pub fn cycle_in_component<F, I>(comp: &[usize], mut succ: F) -> Vec<usize>
where
    F: FnMut(usize) -> I,
    I: Iterator<Item = usize>,
{
    let inside: std::collections::BTreeSet<usize> = comp.iter().copied().collect();
    let start = comp[0];
    // walk inside the component until a vertex repeats
    let mut seen_at = std::collections::BTreeMap::new();
    let mut path = vec![start];
    seen_at.insert(start, 0usize);
    loop {
        let v = *path.last().unwrap();
        let w = succ(v)
            .find(|w| inside.contains(w))
            .expect("strongly connected component has an internal successor");
        if let Some(&i) = seen_at.get(&w) {
            return path[i..].to_vec();
        }
        seen_at.insert(w, path.len());
        path.push(w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj(edges: &[(usize, usize)], n: usize) -> Vec<Vec<usize>> {
        let mut a = vec![Vec::new(); n];
        for &(u, v) in edges {
            a[u].push(v);
        }
        a
    }

    #[test]
    fn sccs_of_two_cycles_and_a_bridge() {
        // 0 <-> 1, 2 <-> 3, bridge 1 -> 2, isolated 4
        let a = adj(&[(0, 1), (1, 0), (2, 3), (3, 2), (1, 2)], 5);
        let r = tarjan_scc(5, |v| a[v].iter().copied());
        assert_eq!(r.comps.len(), 3);
        assert_eq!(r.comp_of[0], r.comp_of[1]);
        assert_eq!(r.comp_of[2], r.comp_of[3]);
        assert_ne!(r.comp_of[0], r.comp_of[2]);
        // reverse topological: the downstream cycle {2,3} is emitted first
        assert!(r.comp_of[2] < r.comp_of[0]);
        assert!(r.is_terminal(r.comp_of[2], |v| a[v].iter().copied()));
        assert!(!r.is_terminal(r.comp_of[0], |v| a[v].iter().copied()));
        assert!(!r.has_internal_edge(r.comp_of[4], |v| a[v].iter().copied()));
    }

    #[test]
    fn deep_path_does_not_overflow() {
        let n = 200_000;
        let r = tarjan_scc(n, |v| v + 1..n.min(v + 2));
        assert_eq!(r.comps.len(), n);
    }

    #[test]
    fn levels_and_period() {
        // directed 3-cycle: period 3
        let a = adj(&[(0, 1), (1, 2), (2, 0)], 3);
        assert_eq!(strongly_connected_period(3, |v| a[v].iter().copied()), 3);
        // 3-cycle with a chord (2 -> 1): gcd(3, 2) = 1
        let a = adj(&[(0, 1), (1, 2), (2, 0), (2, 1)], 3);
        assert_eq!(strongly_connected_period(3, |v| a[v].iter().copied()), 1);
        let lv = bfs_levels(3, |v| a[v].iter().copied(), 0);
        assert_eq!(lv, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn cycle_recovery() {
        let a = adj(&[(0, 1), (1, 2), (2, 0), (2, 1)], 3);
        let r = tarjan_scc(3, |v| a[v].iter().copied());
        let cyc = cycle_in_component(&r.comps[0], |v| a[v].iter().copied());
        // verify it is a genuine cycle
        for i in 0..cyc.len() {
            let u = cyc[i];
            let w = cyc[(i + 1) % cyc.len()];
            assert!(a[u].contains(&w), "{u} -> {w} missing");
        }
    }
}
