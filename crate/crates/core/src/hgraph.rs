//! The H-graph: which comb modes each OPO two-mode squeezes.
//!
//! With the single-copy or multi-copy pump prescriptions every mode takes
//! part in at most one interaction, so the adjacency matrix `G` is a weight-1
//! matching. Modes whose partner would fall outside the comb window stay in
//! the graph as vacuum modes so that each macronode keeps all `2D` members.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::comb::{
    frequency_of, pump_index, CombWindow, OpoSpec, Polarization, QumodeId,
};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug)]
pub struct HGraph {
    modes: Vec<QumodeId>,
    edges: Vec<(usize, usize)>,
    unmatched: Vec<usize>,
    opos: Vec<OpoSpec>,
    window: Option<CombWindow>,
    index: HashMap<QumodeId, usize>,
}

/// One H-graph edge described by its comb labels. `m1` is the odd endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub opo: usize,
    pub pol: Polarization,
    pub m1: i64,
    pub m2: i64,
    pub n1: i64,
    pub n2: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentLevel {
    Qumode,
    Macronode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Components {
    /// Lists of mode indices.
    Qumode(Vec<Vec<usize>>),
    /// Lists of macronode indices.
    Macronode(Vec<Vec<i64>>),
}

impl Components {
    pub fn len(&self) -> usize {
        match self {
            Components::Qumode(c) => c.len(),
            Components::Macronode(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Grouping of mode indices into macronodes, members ordered by block slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacronodePartition {
    /// Sorted macronode indices.
    pub macronodes: Vec<i64>,
    /// `members[b][slot]` is the mode index at `slot` of block `b`.
    pub members: Vec<Vec<usize>>,
    /// Block index of every mode.
    pub owner: Vec<usize>,
}

impl MacronodePartition {
    pub fn block_size(&self) -> usize {
        self.members.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.macronodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.macronodes.is_empty()
    }

    pub fn num_modes(&self) -> usize {
        self.owner.len()
    }

    pub fn macronode_of_mode(&self, mode: usize) -> i64 {
        self.macronodes[self.owner[mode]]
    }
}

/// Build the H-graph of a set of OPOs over a comb window.
///
/// For every OPO and polarization there is one edge per odd macronode `m`
/// whose partner `m + p` is in the window.
pub fn build_hgraph(specs: &[OpoSpec], window: CombWindow) -> Result<HGraph> {
    if specs.is_empty() {
        return Err(Error::NoOpos);
    }
    if window.is_empty() {
        return Err(Error::EmptyWindow {
            n_min: window.n_min,
            n_max: window.n_max,
        });
    }
    for spec in specs {
        spec.validate()?;
    }
    let width = window.len();
    let mut modes = Vec::with_capacity(2 * specs.len() * width);
    for opo in 1..=specs.len() {
        for pol in Polarization::ALL {
            modes.extend(window.frequencies().map(|n| QumodeId::new(opo, pol, n)));
        }
    }
    let idx = |opo: usize, pol: Polarization, n: i64| {
        ((opo - 1) * 2 + pol.slot_offset()) * width + (n - window.n_min) as usize
    };
    let odd_macronodes: Vec<i64> = window
        .macronodes()
        .into_iter()
        .filter(|m| m.rem_euclid(2) == 1)
        .collect();
    let mut edges = Vec::new();
    for (j, spec) in specs.iter().enumerate() {
        let opo = j + 1;
        for pol in Polarization::ALL {
            let p = pump_index(spec, pol)?;
            for &m in &odd_macronodes {
                let n1 = frequency_of(m);
                let n2 = frequency_of(m + p);
                if window.contains(n2) {
                    let (a, b) = (idx(opo, pol, n1), idx(opo, pol, n2));
                    edges.push((a.min(b), a.max(b)));
                }
            }
        }
    }
    edges.sort_unstable();
    let mut g = HGraph::from_parts(modes, edges);
    g.opos = specs.to_vec();
    g.window = Some(window);
    Ok(g)
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }

    /// Groups of element indices, each sorted, ordered by smallest member.
    fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..self.parent.len() {
            let r = self.find(x);
            by_root.entry(r).or_default().push(x);
        }
        by_root.into_values().collect()
    }
}

/// Connected components of an undirected graph on `n` vertices.
pub(crate) fn connected_components(
    n: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> Vec<Vec<usize>> {
    let mut dsu = DisjointSet::new(n);
    for (a, b) in edges {
        dsu.union(a, b);
    }
    dsu.groups()
}

impl HGraph {
    /// Graph over explicit modes and edges. Modes are kept in the given order;
    /// `unmatched` is derived as the modes incident to no edge.
    ///
    /// No matching property is enforced here; see [`matching_projector_check`].
    pub fn from_parts(modes: Vec<QumodeId>, edges: Vec<(usize, usize)>) -> Self {
        let mut degree = vec![0usize; modes.len()];
        for &(a, b) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let unmatched = (0..modes.len()).filter(|&i| degree[i] == 0).collect();
        let index = modes.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        Self {
            modes,
            edges,
            unmatched,
            opos: Vec::new(),
            window: None,
            index,
        }
    }

    pub fn modes(&self) -> &[QumodeId] {
        &self.modes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Vacuum modes whose partner lies outside the window.
    pub fn unmatched(&self) -> &[usize] {
        &self.unmatched
    }

    pub fn opos(&self) -> &[OpoSpec] {
        &self.opos
    }

    pub fn window(&self) -> Option<CombWindow> {
        self.window
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    /// Number of OPOs, taken as the largest OPO label present.
    pub fn num_opos(&self) -> usize {
        self.modes.iter().map(|q| q.opo).max().unwrap_or(0)
    }

    pub fn mode_index(&self, q: &QumodeId) -> Option<usize> {
        self.index.get(q).copied()
    }

    /// Partner of each mode under the matching (`None` for vacuum modes).
    /// Only meaningful when the graph is a matching.
    pub fn partners(&self) -> Vec<Option<usize>> {
        let mut partner = vec![None; self.modes.len()];
        for &(a, b) in &self.edges {
            partner[a] = Some(b);
            partner[b] = Some(a);
        }
        partner
    }

    /// Diagonal of the projector onto matched modes.
    pub fn matched_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.modes.len()];
        for &u in &self.unmatched {
            mask[u] = false;
        }
        mask
    }

    /// Comb labels of every edge, odd endpoint first.
    pub fn edge_records(&self) -> Vec<EdgeRecord> {
        self.edges
            .iter()
            .map(|&(a, b)| {
                let (qa, qb) = (self.modes[a], self.modes[b]);
                let (odd, even) = if qa.macronode().rem_euclid(2) == 1 {
                    (qa, qb)
                } else {
                    (qb, qa)
                };
                EdgeRecord {
                    opo: odd.opo,
                    pol: odd.pol,
                    m1: odd.macronode(),
                    m2: even.macronode(),
                    n1: odd.n,
                    n2: even.n,
                }
            })
            .collect()
    }

    /// Symmetric 0/1 adjacency matrix `G` in the canonical mode order.
    pub fn adjacency_matrix(&self) -> CsrMatrix {
        adjacency_matrix(self)
    }

    pub fn components(&self, level: ComponentLevel) -> Components {
        components(self, level)
    }

    /// Group modes into macronodes; every macronode must hold one mode per
    /// slot `0..2D`.
    pub fn macronode_partition(&self) -> Result<MacronodePartition> {
        let block = 2 * self.num_opos();
        let mut groups: BTreeMap<i64, Vec<Option<usize>>> = BTreeMap::new();
        for (i, q) in self.modes.iter().enumerate() {
            let slots = groups.entry(q.macronode()).or_insert_with(|| vec![None; block]);
            let slot = q.slot();
            if slots[slot].is_some() {
                return Err(Error::RaggedMacronode {
                    m: q.macronode(),
                    found: block + 1,
                    expected: block,
                });
            }
            slots[slot] = Some(i);
        }
        let mut macronodes = Vec::with_capacity(groups.len());
        let mut members = Vec::with_capacity(groups.len());
        let mut owner = vec![0usize; self.modes.len()];
        for (b, (m, slots)) in groups.into_iter().enumerate() {
            let found = slots.iter().flatten().count();
            if found != block {
                return Err(Error::RaggedMacronode {
                    m,
                    found,
                    expected: block,
                });
            }
            let slots: Vec<usize> = slots.into_iter().flatten().collect();
            for &i in &slots {
                owner[i] = b;
            }
            macronodes.push(m);
            members.push(slots);
        }
        Ok(MacronodePartition {
            macronodes,
            members,
            owner,
        })
    }
}

pub fn adjacency_matrix(g: &HGraph) -> CsrMatrix {
    let n = g.num_modes();
    let trips: Vec<_> = g
        .edges
        .iter()
        .flat_map(|&(a, b)| [(a, b, 1.0), (b, a, 1.0)])
        .collect();
    CsrMatrix::from_triplets(n, n, &trips)
}

/// Check `G^2 = P`, with `P` the diagonal projector onto matched modes.
///
/// Returns the number of modes incident to an edge and whether the identity
/// holds exactly (which also rules out self-loops and shared endpoints).
pub fn matching_projector_check(g: &HGraph) -> (usize, bool) {
    let adj = adjacency_matrix(g);
    let squared = adj.mul(&adj);
    let mask = g.matched_mask();
    let projector =
        CsrMatrix::from_diagonal(&mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect::<Vec<_>>());
    let incident = (0..g.num_modes()).filter(|&i| adj.row_nnz(i) > 0).count();
    let no_loops = g.edges.iter().all(|&(a, b)| a != b);
    (incident, no_loops && squared == projector)
}

pub fn components(g: &HGraph, level: ComponentLevel) -> Components {
    match level {
        ComponentLevel::Qumode => {
            Components::Qumode(connected_components(g.num_modes(), g.edges.iter().copied()))
        }
        ComponentLevel::Macronode => {
            let mut ids: Vec<i64> = g.modes.iter().map(QumodeId::macronode).collect();
            ids.sort_unstable();
            ids.dedup();
            let pos = |m: i64| ids.binary_search(&m).expect("macronode present");
            let edges: Vec<_> = g
                .edges
                .iter()
                .map(|&(a, b)| (pos(g.modes[a].macronode()), pos(g.modes[b].macronode())))
                .collect();
            let groups = connected_components(ids.len(), edges);
            Components::Macronode(
                groups
                    .into_iter()
                    .map(|grp| grp.into_iter().map(|i| ids[i]).collect())
                    .collect(),
            )
        }
    }
}
