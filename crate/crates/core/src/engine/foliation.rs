use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, ConditionSource};
use crate::linalg::{is_contraction, permute_factors, ComplexMatrix, ContractionReport};

use super::layout::WireTable;
use super::{EngineError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FoliationStrategy {
    /// Every node in the earliest admissible slice.
    Asap,
    /// Every node in the latest admissible slice.
    Alap,
    /// Groups of node labels, earliest first. A group may contain chains;
    /// it is refined into antichain slices.
    Given(Vec<Vec<String>>),
    /// A seeded random linear extension cut at random points.
    Random(u64),
}

/// An ordered covering of the circuit's wires by cuts.
///
/// `slices[i]` is an antichain of nodes taking `leaves[i]` to `leaves[i+1]`;
/// leaves list slot ids in canonical order. `groups` keeps the slicing as
/// requested, before chains were split.
#[derive(Clone, Debug)]
pub struct Foliation {
    table: WireTable,
    groups: Vec<Vec<usize>>,
    slices: Vec<Vec<usize>>,
    leaves: Vec<Vec<usize>>,
}

impl Foliation {
    pub fn table(&self) -> &WireTable {
        &self.table
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn slices(&self) -> &[Vec<usize>] {
        &self.slices
    }

    pub fn leaves(&self) -> &[Vec<usize>] {
        &self.leaves
    }

    pub fn group_labels(&self, c: &Circuit) -> Vec<Vec<String>> {
        labels(c, &self.groups)
    }

    pub fn slice_labels(&self, c: &Circuit) -> Vec<Vec<String>> {
        labels(c, &self.slices)
    }

    /// System labels carried by each leaf.
    pub fn leaf_systems(&self) -> Vec<Vec<String>> {
        self.leaves
            .iter()
            .map(|l| l.iter().map(|&s| self.table.slot(s).system.clone()).collect())
            .collect()
    }
}

fn labels(c: &Circuit, sets: &[Vec<usize>]) -> Vec<Vec<String>> {
    sets.iter()
        .map(|s| s.iter().map(|&n| c.node(n).label.clone()).collect())
        .collect()
}

/// Predecessors through wires, and the conditioning source if it is a node.
fn wire_preds(c: &Circuit, n: usize) -> Vec<usize> {
    c.wires()
        .iter()
        .filter(|w| w.to.0 == c.node(n).label)
        .map(|w| c.node_index(&w.from.0).expect("validated"))
        .collect()
}

fn cond_source(c: &Circuit, n: usize) -> Option<usize> {
    match c.condition_source(n) {
        Some(ConditionSource::Node(s)) => Some(s),
        _ => None,
    }
}

pub fn foliate(c: &Circuit, strategy: &FoliationStrategy) -> Result<Foliation> {
    let n = c.node_count();
    let preds: Vec<Vec<usize>> = (0..n).map(|i| wire_preds(c, i)).collect();
    let groups = match strategy {
        FoliationStrategy::Asap => {
            let mut level = vec![0usize; n];
            for &i in c.topological_order() {
                let w = preds[i].iter().map(|&p| level[p] + 1).max().unwrap_or(0);
                let s = cond_source(c, i).map_or(0, |s| level[s]);
                level[i] = w.max(s);
            }
            group_by_level(&level)
        }
        FoliationStrategy::Alap => {
            let mut rank = vec![0usize; n];
            for &i in c.topological_order().iter().rev() {
                let mut r = 0;
                for j in 0..n {
                    if preds[j].contains(&i) {
                        r = r.max(rank[j] + 1);
                    }
                    if cond_source(c, j) == Some(i) {
                        r = r.max(rank[j]);
                    }
                }
                rank[i] = r;
            }
            let top = rank.iter().copied().max().unwrap_or(0);
            group_by_level(&rank.iter().map(|r| top - r).collect::<Vec<_>>())
        }
        FoliationStrategy::Given(groups) => groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|l| {
                        c.node_index(l)
                            .ok_or_else(|| EngineError::InvalidFoliation(format!("unknown node `{l}`")))
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?,
        FoliationStrategy::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut done = vec![false; n];
            let mut order = Vec::with_capacity(n);
            while order.len() < n {
                let ready: Vec<usize> = (0..n)
                    .filter(|&i| {
                        !done[i]
                            && preds[i].iter().all(|&p| done[p])
                            && cond_source(c, i).is_none_or(|s| done[s])
                    })
                    .collect();
                let &pick = ready.choose(&mut rng).expect("a DAG always has a ready node");
                done[pick] = true;
                order.push(pick);
            }
            let mut groups = vec![Vec::new()];
            for (k, &i) in order.iter().enumerate() {
                if k > 0 && rng.random::<bool>() {
                    groups.push(Vec::new());
                }
                groups.last_mut().expect("nonempty").push(i);
            }
            groups
        }
    };
    from_groups(c, groups)
}

fn group_by_level(level: &[usize]) -> Vec<Vec<usize>> {
    let top = level.iter().copied().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); top];
    for (i, &l) in level.iter().enumerate() {
        groups[l].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

fn from_groups(c: &Circuit, mut groups: Vec<Vec<usize>>) -> Result<Foliation> {
    let n = c.node_count();
    let mut group_of = vec![usize::MAX; n];
    for (g, nodes) in groups.iter_mut().enumerate() {
        nodes.sort_unstable();
        for &i in nodes.iter() {
            if group_of[i] != usize::MAX {
                return Err(EngineError::InvalidFoliation(format!(
                    "node `{}` appears twice",
                    c.node(i).label
                )));
            }
            group_of[i] = g;
        }
    }
    if let Some(i) = group_of.iter().position(|&g| g == usize::MAX) {
        return Err(EngineError::InvalidFoliation(format!("node `{}` is not covered", c.node(i).label)));
    }
    for i in 0..n {
        for p in wire_preds(c, i) {
            if group_of[p] > group_of[i] {
                return Err(EngineError::InvalidFoliation(format!(
                    "wire from `{}` runs backwards into `{}`",
                    c.node(p).label,
                    c.node(i).label
                )));
            }
        }
        if let Some(s) = cond_source(c, i) {
            if group_of[s] > group_of[i] {
                return Err(EngineError::InvalidFoliation(format!(
                    "`{}` is conditioned on the later node `{}`",
                    c.node(i).label,
                    c.node(s).label
                )));
            }
        }
    }

    // Split chains inside a group into antichains.
    let mut slices = Vec::new();
    for g in &groups {
        let mut level = vec![0usize; n];
        for &i in c.topological_order().iter().filter(|i| g.contains(i)) {
            let w = wire_preds(c, i)
                .into_iter()
                .filter(|p| g.contains(p))
                .map(|p| level[p] + 1)
                .max()
                .unwrap_or(0);
            let s = cond_source(c, i).filter(|s| g.contains(s)).map_or(0, |s| level[s]);
            level[i] = w.max(s);
        }
        let depth = g.iter().map(|&i| level[i]).max().unwrap_or(0);
        for l in 0..=depth {
            slices.push(g.iter().copied().filter(|&i| level[i] == l).collect::<Vec<_>>());
        }
    }

    let table = WireTable::new(c);
    let mut slice_of = vec![0usize; n];
    for (k, s) in slices.iter().enumerate() {
        for &i in s {
            slice_of[i] = k;
        }
    }
    let leaves = (0..=slices.len())
        .map(|k| {
            (0..table.slots().len())
                .filter(|&s| {
                    let slot = table.slot(s);
                    let made = slot.producer.map_or(0, |(p, _)| slice_of[p] + 1);
                    let used = slot.consumer.map_or(usize::MAX, |(q, _)| slice_of[q]);
                    made <= k && k <= used
                })
                .collect()
        })
        .collect();
    Ok(Foliation {
        table,
        groups,
        slices,
        leaves,
    })
}

pub(crate) fn kraus_of<'a>(c: &'a Circuit, node: usize, assignment: &[usize]) -> Result<&'a ComplexMatrix> {
    let e = *assignment
        .get(node)
        .ok_or_else(|| EngineError::MissingOutcome(c.node(node).label.clone()))?;
    event_kraus(c, node, e)
}

pub(crate) fn event_kraus(c: &Circuit, node: usize, e: usize) -> Result<&ComplexMatrix> {
    let test = c.node(node);
    let event = test.events.get(e).ok_or_else(|| EngineError::BadOutcome {
        node: test.label.clone(),
        event: e,
    })?;
    match event.kraus.as_slice() {
        [k] => Ok(k),
        ks => Err(EngineError::NotAtomic {
            node: test.label.clone(),
            event: event.outcome.clone(),
            count: ks.len(),
        }),
    }
}

/// Operator of slice `index`: the tensor product of the chosen Kraus
/// operators and identities on passing wires, mapping `leaves[index]` to
/// `leaves[index + 1]`. `assignment[node]` is the event index of each node.
pub fn compile_slice(
    c: &Circuit,
    f: &Foliation,
    index: usize,
    assignment: &[usize],
    max_dim: usize,
) -> Result<ComplexMatrix> {
    let table = &f.table;
    let leaf_in = &f.leaves[index];
    let leaf_out = &f.leaves[index + 1];
    for l in [leaf_in, leaf_out] {
        let d = table.dim(l);
        if d > max_dim {
            return Err(EngineError::DimensionOverflow { dim: d, max: max_dim });
        }
    }
    let mut prod_in: Vec<usize> = Vec::new();
    let mut prod_out: Vec<usize> = Vec::new();
    let mut op = ComplexMatrix::identity(1);
    for &n in &f.slices[index] {
        op = op.kron(kraus_of(c, n, assignment)?);
        prod_in.extend(table.node_inputs(n));
        prod_out.extend(table.node_outputs(n));
    }
    let pass: Vec<usize> = leaf_in.iter().copied().filter(|s| !prod_in.contains(s)).collect();
    op = op.kron(&ComplexMatrix::identity(table.dim(&pass)));
    prod_in.extend(&pass);
    prod_out.extend(&pass);

    let expected: BTreeSet<usize> = leaf_out.iter().copied().collect();
    let got: BTreeSet<usize> = prod_out.iter().copied().collect();
    if expected != got || prod_in.len() != leaf_in.len() {
        return Err(EngineError::InvalidFoliation(format!("slice {index} does not connect its leaves")));
    }
    let position = |order: &[usize], s: usize| order.iter().position(|&x| x == s).expect("same set");
    let col_perm: Vec<usize> = leaf_in.iter().map(|&s| position(&prod_in, s)).collect();
    let row_perm: Vec<usize> = leaf_out.iter().map(|&s| position(&prod_out, s)).collect();
    let op = permute_factors(&op.transpose(), &table.dims(&prod_in), &col_perm)?.transpose();
    Ok(permute_factors(&op, &table.dims(&prod_out), &row_perm)?)
}

/// Ordered product of a foliation's slice operators, `Ω = O_n ⋯ O_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryOperator {
    pub operator: ComplexMatrix,
    pub factor_count: usize,
}

impl HistoryOperator {
    pub fn contraction(&self) -> ContractionReport {
        is_contraction(&self.operator)
    }
}

pub fn compile_history(c: &Circuit, f: &Foliation, assignment: &[usize], max_dim: usize) -> Result<HistoryOperator> {
    let mut op = ComplexMatrix::identity(f.table.dim(&f.leaves[0]));
    for k in 0..f.slices.len() {
        op = compile_slice(c, f, k, assignment, max_dim)?.matmul(&op)?;
    }
    Ok(HistoryOperator {
        operator: op,
        factor_count: f.slices.len(),
    })
}
