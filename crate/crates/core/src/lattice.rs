//! Macronode-level coarse graining and hypercubic lattice verification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::comb::{compound_to_frequency, frequency_of, frequency_to_compound, CombWindow};
use crate::error::{Error, Result};
use crate::hgraph::{connected_components, MacronodePartition};
use crate::sparse::CsrMatrix;

/// Default relative threshold for keeping a coarse-grained edge.
pub const DEFAULT_REL_THRESHOLD: f64 = 1e-6;

const MAX_DIAGNOSTICS: usize = 20;

/// Undirected weighted graph over macronode indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacronodeGraph {
    /// Sorted macronode indices.
    pub nodes: Vec<i64>,
    /// `(m1, m2, weight)` with `m1 < m2`, sorted.
    pub edges: Vec<(i64, i64, f64)>,
}

impl MacronodeGraph {
    pub fn neighbors(&self) -> BTreeMap<i64, Vec<i64>> {
        let mut adj: BTreeMap<i64, Vec<i64>> = self.nodes.iter().map(|&m| (m, Vec::new())).collect();
        for &(a, b, _) in &self.edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        for list in adj.values_mut() {
            list.sort_unstable();
        }
        adj
    }

    pub fn edge_set(&self) -> BTreeSet<(i64, i64)> {
        self.edges.iter().map(|&(a, b, _)| (a, b)).collect()
    }

    /// Connected components as sorted lists of macronode indices.
    pub fn components(&self) -> Vec<Vec<i64>> {
        let pos = |m: i64| self.nodes.binary_search(&m).expect("edge endpoint is a node");
        let edges = self.edges.iter().map(|&(a, b, _)| (pos(a), pos(b)));
        connected_components(self.nodes.len(), edges)
            .into_iter()
            .map(|grp| grp.into_iter().map(|i| self.nodes[i]).collect())
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub diagnostics: Vec<String>,
}

impl Verdict {
    fn from_diagnostics(mut diagnostics: Vec<String>, total: usize) -> Self {
        if total > diagnostics.len() {
            diagnostics.push(format!("... and {} more", total - diagnostics.len()));
        }
        Self {
            pass: total == 0,
            diagnostics,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeReport {
    pub dimensionality: usize,
    pub offsets: Vec<i64>,
    /// Copy label `k` when this report covers one copy of a multi-copy lattice.
    pub copy: Option<i64>,
    pub interior_nodes: Vec<i64>,
    pub boundary_nodes: Vec<i64>,
    pub copy_components: usize,
    pub verdict: Verdict,
}

/// Collapse a qumode-level symmetric matrix onto macronodes.
///
/// Edge `(m1, m2)` is kept iff the largest `|entry|` between the two blocks
/// exceeds `rel_threshold` times the largest off-block `|entry|` overall.
pub fn coarse_grain(
    matrix: &CsrMatrix,
    partition: &MacronodePartition,
    rel_threshold: f64,
) -> Result<MacronodeGraph> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::BadPartition(format!(
            "relative threshold must lie in (0, 1), got {rel_threshold}"
        )));
    }
    let n = matrix.nrows();
    if matrix.ncols() != n || partition.num_modes() != n {
        return Err(Error::BadPartition(format!(
            "partition covers {} modes, matrix is {}x{}",
            partition.num_modes(),
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let mut seen = vec![false; n];
    for (b, slots) in partition.members.iter().enumerate() {
        for &i in slots {
            if i >= n || seen[i] || partition.owner[i] != b {
                return Err(Error::BadPartition(format!(
                    "mode {i} is assigned inconsistently"
                )));
            }
            seen[i] = true;
        }
    }
    if let Some(i) = seen.iter().position(|&s| !s) {
        return Err(Error::BadPartition(format!("mode {i} belongs to no macronode")));
    }

    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut global = 0.0f64;
    for (i, j, v) in matrix.triplets() {
        let (bi, bj) = (partition.owner[i], partition.owner[j]);
        if bi == bj {
            continue;
        }
        let key = (bi.min(bj), bi.max(bj));
        let w = weights.entry(key).or_insert(0.0);
        *w = w.max(v.abs());
        global = global.max(v.abs());
    }
    let cut = rel_threshold * global;
    let edges = weights
        .into_iter()
        .filter(|&(_, w)| w > cut)
        .map(|((a, b), w)| (partition.macronodes[a], partition.macronodes[b], w))
        .collect();
    Ok(MacronodeGraph {
        nodes: partition.macronodes.clone(),
        edges,
    })
}

/// Number of connected components of the macronode graph.
pub fn count_copies(mg: &MacronodeGraph) -> usize {
    mg.components().len()
}

fn check_offsets(offsets: &[i64]) -> Option<String> {
    if offsets.is_empty() {
        return Some("no lattice offsets given".into());
    }
    if offsets[0] <= 0 || offsets.windows(2).any(|w| w[1] <= w[0]) {
        return Some(format!("offsets {offsets:?} are not strictly increasing positive"));
    }
    None
}

/// Core check over an abstract node labelling with a presence test.
fn verify_labelled(
    nodes: &[i64],
    neighbors: &BTreeMap<i64, Vec<i64>>,
    offsets: &[i64],
    present: impl Fn(i64) -> bool,
) -> (Vec<i64>, Vec<i64>, Vec<String>, usize) {
    let mut diagnostics = Vec::new();
    let mut failures = 0usize;
    let mut note = |msg: String, diagnostics: &mut Vec<String>| {
        failures += 1;
        if diagnostics.len() < MAX_DIAGNOSTICS {
            diagnostics.push(msg);
        }
    };
    if let Some(msg) = check_offsets(offsets) {
        note(msg, &mut diagnostics);
        return (Vec::new(), nodes.to_vec(), diagnostics, failures);
    }
    let mut expected_offsets: Vec<i64> = offsets.iter().flat_map(|&o| [-o, o]).collect();
    expected_offsets.sort_unstable();

    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let empty = Vec::new();
    for &m in nodes {
        let nbrs = neighbors.get(&m).unwrap_or(&empty);
        let mut actual: Vec<i64> = nbrs.iter().map(|&x| x - m).collect();
        actual.sort_unstable();
        let is_interior = expected_offsets.iter().all(|&o| present(m + o));
        if is_interior {
            interior.push(m);
            if actual != expected_offsets {
                note(
                    format!("interior node {m}: neighbor offsets {actual:?}, expected {expected_offsets:?}"),
                    &mut diagnostics,
                );
            }
        } else {
            boundary.push(m);
            let allowed: Vec<i64> = expected_offsets
                .iter()
                .copied()
                .filter(|&o| present(m + o))
                .collect();
            if actual.iter().any(|o| !allowed.contains(o)) || actual.len() > allowed.len() {
                note(
                    format!("boundary node {m}: neighbor offsets {actual:?} exceed allowed {allowed:?}"),
                    &mut diagnostics,
                );
            }
        }
    }
    if interior.is_empty() {
        note("window too small: no interior nodes".into(), &mut diagnostics);
    }
    (interior, boundary, diagnostics, failures)
}

/// Check that every interior node has exactly the neighbor offsets
/// `{±offsets}` and that no node has an unexpected neighbor. A node is
/// interior when all of its expected neighbors lie in the window.
pub fn verify_hypercubic(mg: &MacronodeGraph, offsets: &[i64], window: CombWindow) -> LatticeReport {
    let neighbors = mg.neighbors();
    let (interior, boundary, diagnostics, failures) =
        verify_labelled(&mg.nodes, &neighbors, offsets, |m| window.contains_macronode(m));
    LatticeReport {
        dimensionality: offsets.len(),
        offsets: offsets.to_vec(),
        copy: None,
        interior_nodes: interior,
        boundary_nodes: boundary,
        copy_components: count_copies(mg),
        verdict: Verdict::from_diagnostics(diagnostics, failures),
    }
}

/// Verify each copy of an `M`-copy lattice in its own compound labelling.
///
/// Macronode `m` is relabelled `(m^(k), k)` from its frequency index; an
/// edge between different copies fails the report of the lower copy label.
pub fn verify_copies(
    mg: &MacronodeGraph,
    offsets: &[i64],
    window: CombWindow,
    copies: i64,
) -> Result<Vec<LatticeReport>> {
    let mut label = BTreeMap::new();
    for &m in &mg.nodes {
        label.insert(m, frequency_to_compound(frequency_of(m), copies)?);
    }
    let components = count_copies(mg);
    let mut reports = Vec::new();
    for k in 0..copies {
        let mut nodes: Vec<i64> = label.values().filter(|c| c.k == k).map(|c| c.m).collect();
        nodes.sort_unstable();
        let mut neighbors: BTreeMap<i64, Vec<i64>> = nodes.iter().map(|&m| (m, Vec::new())).collect();
        let mut crossing = Vec::new();
        for &(a, b, _) in &mg.edges {
            let (ca, cb) = (label[&a], label[&b]);
            if ca.k != cb.k {
                if ca.k.min(cb.k) == k {
                    crossing.push(format!("edge {a}-{b} joins copies {} and {}", ca.k, cb.k));
                }
                continue;
            }
            if ca.k == k {
                neighbors.entry(ca.m).or_default().push(cb.m);
                neighbors.entry(cb.m).or_default().push(ca.m);
            }
        }
        let present = |m: i64| {
            compound_to_frequency(crate::comb::CompoundIndex { m, k }, copies)
                .map(|n| window.contains(n))
                .unwrap_or(false)
        };
        let (interior, boundary, mut diagnostics, mut failures) =
            verify_labelled(&nodes, &neighbors, offsets, present);
        failures += crossing.len();
        diagnostics.extend(crossing.into_iter().take(MAX_DIAGNOSTICS));
        reports.push(LatticeReport {
            dimensionality: offsets.len(),
            offsets: offsets.to_vec(),
            copy: Some(k),
            interior_nodes: interior,
            boundary_nodes: boundary,
            copy_components: components,
            verdict: Verdict::from_diagnostics(diagnostics, failures),
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::OpoSpec;
    use crate::gaussian::conjugated_adjacency;
    use crate::hgraph::{build_hgraph, HGraph};
    use crate::interferometer::{build_block_interferometer, sylvester_splitter};

    fn graph(specs: &[OpoSpec], window: CombWindow) -> HGraph {
        build_hgraph(specs, window).unwrap()
    }

    fn coarse_entangled(g: &HGraph) -> MacronodeGraph {
        let r = build_block_interferometer(&sylvester_splitter(2 * g.num_opos()).unwrap(), g).unwrap();
        let k = conjugated_adjacency(g, &r).unwrap();
        coarse_grain(&k, r.partition(), DEFAULT_REL_THRESHOLD).unwrap()
    }

    fn singles(offsets: &[i64]) -> Vec<OpoSpec> {
        offsets.iter().map(|&d| OpoSpec::single(d).unwrap()).collect()
    }

    #[test]
    fn wire_is_a_path_with_equal_weights() {
        let w = CombWindow::symmetric(8);
        let mg = coarse_entangled(&graph(&singles(&[1]), w));
        let expected: Vec<(i64, i64)> = (-8..8).map(|m| (m, m + 1)).collect();
        assert_eq!(mg.edge_set().into_iter().collect::<Vec<_>>(), expected);
        let w0 = mg.edges[0].2;
        assert!(mg.edges.iter().all(|e| (e.2 - w0).abs() < 1e-15));
        let report = verify_hypercubic(&mg, &[1], w);
        assert!(report.verdict.pass, "{:?}", report.verdict);
        assert_eq!(report.boundary_nodes, vec![-8, 8]);
        assert_eq!(count_copies(&mg), 1);
    }

    #[test]
    fn vacuum_has_no_edges() {
        let g = graph(&singles(&[1]), CombWindow::symmetric(3));
        let part = g.macronode_partition().unwrap();
        let mg = coarse_grain(&CsrMatrix::identity(g.num_modes()), &part, DEFAULT_REL_THRESHOLD).unwrap();
        assert!(mg.edges.is_empty());
        assert_eq!(count_copies(&mg), 7);
    }

    #[test]
    fn square_lattice_neighbors() {
        let w = CombWindow::symmetric(35);
        let mg = coarse_entangled(&graph(&singles(&[1, 7]), w));
        let nbrs = mg.neighbors();
        assert_eq!(nbrs[&0], vec![-7, -1, 1, 7]);
        let report = verify_hypercubic(&mg, &[1, 7], w);
        assert!(report.verdict.pass, "{:?}", report.verdict);
        assert!(report.interior_nodes.contains(&0));
        assert_eq!(report.interior_nodes.len(), 71 - 14);
    }

    #[test]
    fn cubic_lattice_at_hgraph_level() {
        let w = CombWindow::symmetric(200);
        let g = graph(&singles(&[1, 7, 91]), w);
        let part = g.macronode_partition().unwrap();
        let mg = coarse_grain(&g.adjacency_matrix(), &part, DEFAULT_REL_THRESHOLD).unwrap();
        assert_eq!(mg.neighbors()[&0], vec![-91, -7, -1, 1, 7, 91]);
        assert!(verify_hypercubic(&mg, &[1, 7, 91], w).verdict.pass);
    }

    #[test]
    fn chains_and_copies() {
        let w = CombWindow::symmetric(10);
        let mg = coarse_entangled(&graph(&singles(&[3]), w));
        assert_eq!(count_copies(&mg), 3);
        assert!(verify_hypercubic(&mg, &[3], w).verdict.pass);

        let w = CombWindow::new(-30, 29).unwrap();
        let mg = coarse_entangled(&graph(&[OpoSpec::new(1, 3).unwrap()], w));
        assert_eq!(count_copies(&mg), 3);
        let reports = verify_copies(&mg, &[1], w, 3).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert!(r.verdict.pass, "{:?}", r.verdict);
        }
    }

    #[test]
    fn wrong_offsets_fail() {
        let w = CombWindow::symmetric(20);
        let mg = coarse_entangled(&graph(&singles(&[1, 3]), w));
        assert!(verify_hypercubic(&mg, &[1, 3], w).verdict.pass);
        let bad = verify_hypercubic(&mg, &[1, 5], w);
        assert!(!bad.verdict.pass);
        assert!(!verify_hypercubic(&mg, &[3, 1], w).verdict.pass);
        assert!(!verify_hypercubic(&mg, &[1], w).verdict.pass);
    }

    #[test]
    fn hgraph_and_entangled_coarse_graphs_agree() {
        for offsets in [vec![1], vec![3], vec![1, 7], vec![1, 3, 15, 105]] {
            let w = CombWindow::symmetric(120);
            let g = graph(&singles(&offsets), w);
            let part = g.macronode_partition().unwrap();
            let before = coarse_grain(&g.adjacency_matrix(), &part, DEFAULT_REL_THRESHOLD).unwrap();
            let after = coarse_entangled(&g);
            assert_eq!(before.edge_set(), after.edge_set(), "offsets {offsets:?}");
        }
    }

    #[test]
    fn bad_partition() {
        let g = graph(&singles(&[1]), CombWindow::symmetric(3));
        let part = g.macronode_partition().unwrap();
        assert!(coarse_grain(&CsrMatrix::identity(3), &part, 1e-6).is_err());
        assert!(coarse_grain(&g.adjacency_matrix(), &part, 0.0).is_err());
        assert!(coarse_grain(&g.adjacency_matrix(), &part, 1.0).is_err());
        let mut broken = part.clone();
        broken.members[0][0] = broken.members[1][0];
        assert!(matches!(
            coarse_grain(&g.adjacency_matrix(), &broken, 1e-6),
            Err(Error::BadPartition(_))
        ));
    }
}
