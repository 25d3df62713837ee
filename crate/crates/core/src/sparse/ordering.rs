use std::collections::BTreeSet;

/// Minimum-degree fill-reducing ordering on the graph of a symmetric pattern.
///
/// Operates on the explicit elimination graph: eliminating a vertex turns its
/// live neighbourhood into a clique. Ties go to the smallest vertex index, so
/// the result depends only on the pattern. Returns `perm` with
/// `perm[new] = old`.
pub fn minimum_degree(n: usize, col_ptr: &[usize], row_idx: &[usize]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            let mut nb: Vec<usize> = row_idx[col_ptr[j]..col_ptr[j + 1]]
                .iter()
                .copied()
                .filter(|&i| i != j)
                .collect();
            nb.sort_unstable();
            nb.dedup();
            nb
        })
        .collect();

    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut perm = Vec::with_capacity(n);
    let mut scratch = Vec::new();

    while let Some((_, v)) = queue.pop_first() {
        perm.push(v);
        let clique = std::mem::take(&mut adj[v]);
        for &u in &clique {
            queue.remove(&(adj[u].len(), u));
            merge_without(&adj[u], &clique, v, u, &mut scratch);
            std::mem::swap(&mut adj[u], &mut scratch);
            queue.insert((adj[u].len(), u));
        }
    }
    perm
}

/// `out = (a \ {drop_a}) ∪ (b \ {drop_b})` for sorted, deduplicated inputs.
fn merge_without(a: &[usize], b: &[usize], drop_a: usize, drop_b: usize, out: &mut Vec<usize>) {
    out.clear();
    let (mut p, mut q) = (0, 0);
    loop {
        while p < a.len() && a[p] == drop_a {
            p += 1;
        }
        while q < b.len() && b[q] == drop_b {
            q += 1;
        }
        match (a.get(p), b.get(q)) {
            (None, None) => break,
            (Some(&x), None) => {
                out.push(x);
                p += 1;
            }
            (None, Some(&y)) => {
                out.push(y);
                q += 1;
            }
            (Some(&x), Some(&y)) => {
                if x <= y {
                    out.push(x);
                    p += 1;
                    if x == y {
                        q += 1;
                    }
                } else {
                    out.push(y);
                    q += 1;
                }
            }
        }
    }
}
