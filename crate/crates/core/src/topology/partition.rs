use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{PrefixPoint, PrefixSpace, ProcessId, ValidatedAdversary, Valence, Value};
use crate::ptgraph::{singleton_shapes, ViewShape};
use crate::topology::broadcast::BroadcastStatus;
use crate::topology::unionfind::UnionFind;

#[derive(Clone, Debug)]
pub struct Component {
    pub id: usize,
    /// Prefix indices into the partition's space, ascending.
    pub members: Vec<usize>,
    /// Values `v` such that some member is v-valent, in declared order.
    pub valences: Vec<Value>,
    pub broadcast: Option<BroadcastStatus>,
}

impl Component {
    pub fn is_valence_clean(&self) -> bool {
        self.valences.len() <= 1
    }
}

/// Connected components of the relation "some process has the same view at
/// time `t`" over all admissible depth-`t` prefixes (the `2^-t`
/// approximations of the connected components).
#[derive(Clone, Debug)]
pub struct ComponentPartition {
    space: PrefixSpace,
    n: usize,
    values: Vec<Value>,
    shapes: Vec<ViewShape>,
    /// `shape_ids[word * n + p]`.
    shape_ids: Vec<u32>,
    /// Per input vector: positional digit weights already applied, per process.
    digit_codes: Vec<Vec<u64>>,
    component_of: Vec<u32>,
    components: Vec<Component>,
}

/// Builds the depth-`t` component partition.
pub fn epsilon_components(adv: &ValidatedAdversary, t: usize, budget: u64) -> Result<ComponentPartition> {
    let mut partition = ComponentPartition::skeleton(adv, t, budget)?;
    let mut uf = UnionFind::new(partition.space.len());
    for members in partition.view_groups().into_values() {
        for &m in &members[1..] {
            uf.union(members[0], m);
        }
    }
    let (labels, _) = uf.labels();
    partition.set_labels(labels);
    Ok(partition)
}

impl ComponentPartition {
    fn skeleton(adv: &ValidatedAdversary, t: usize, budget: u64) -> Result<Self> {
        let space = adv.prefix_space(t, budget)?;
        let n = adv.n();
        let per_word: Vec<Vec<ViewShape>> = space
            .words
            .par_iter()
            .map(|w| {
                let rounds: Vec<_> = w.0.iter().map(|&l| adv.graph(l)).collect();
                singleton_shapes(&rounds, n)
            })
            .collect();
        let mut intern: HashMap<ViewShape, u32> = HashMap::new();
        let mut shapes = Vec::new();
        let mut shape_ids = Vec::with_capacity(per_word.len() * n);
        for word_shapes in per_word {
            for shape in word_shapes {
                let id = *intern.entry(shape.clone()).or_insert_with(|| {
                    shapes.push(shape);
                    (shapes.len() - 1) as u32
                });
                shape_ids.push(id);
            }
        }
        let k = adv.values().len() as u64;
        let digit_codes = space
            .inputs
            .iter()
            .map(|x| {
                x.iter()
                    .enumerate()
                    .map(|(q, v)| {
                        let d = adv.values().iter().position(|u| u == v).expect("declared value") as u64;
                        d * k.pow((n - 1 - q) as u32)
                    })
                    .collect()
            })
            .collect();
        Ok(ComponentPartition {
            space,
            n,
            values: adv.values().to_vec(),
            shapes,
            shape_ids,
            digit_codes,
            component_of: Vec::new(),
            components: Vec::new(),
        })
    }

    /// A partition with caller-chosen component labels over the depth-`t`
    /// prefixes (labels indexed like the prefix space). Used to exercise
    /// consumers with partitions that are not view-closed.
    pub fn from_labels(adv: &ValidatedAdversary, t: usize, budget: u64, labels: Vec<u32>) -> Result<Self> {
        let mut partition = Self::skeleton(adv, t, budget)?;
        assert_eq!(labels.len(), partition.space.len(), "one label per prefix");
        partition.set_labels(labels);
        Ok(partition)
    }

    fn set_labels(&mut self, labels: Vec<u32>) {
        let count = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut components: Vec<Component> = (0..count)
            .map(|id| Component {
                id,
                members: Vec::new(),
                valences: Vec::new(),
                broadcast: None,
            })
            .collect();
        for (i, &l) in labels.iter().enumerate() {
            let c = &mut components[l as usize];
            c.members.push(i);
            if let Valence::Valent(v) = self.space.valence(i) {
                if !c.valences.contains(&v) {
                    c.valences.push(v);
                }
            }
        }
        for c in &mut components {
            c.valences.sort_by_key(|v| self.values.iter().position(|u| u == v));
        }
        self.component_of = labels;
        self.components = components;
    }

    /// Groups of prefixes sharing the view of one process, keyed by
    /// `(shape id, restricted input code)`; a shape determines its process.
    fn view_groups(&self) -> HashMap<(u32, u64), Vec<usize>> {
        let mut groups: HashMap<(u32, u64), Vec<usize>> = HashMap::new();
        for i in 0..self.space.len() {
            for p in 0..self.n {
                groups.entry(self.group_key(i, p)).or_default().push(i);
            }
        }
        groups
    }

    fn group_key(&self, i: usize, p: usize) -> (u32, u64) {
        let (x, w) = self.space.split(i);
        let sid = self.shape_ids[w * self.n + p];
        let heard = self.shapes[sid as usize].heard_mask();
        let code = self.digit_codes[x]
            .iter()
            .enumerate()
            .filter(|(q, _)| heard >> q & 1 == 1)
            .map(|(_, c)| c)
            .sum();
        (sid, code)
    }

    pub fn depth(&self) -> usize {
        self.space.depth
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn space(&self) -> &PrefixSpace {
        &self.space
    }

    pub fn point(&self, i: usize) -> PrefixPoint {
        self.space.point(i)
    }

    pub fn find(&self, point: &PrefixPoint) -> Option<usize> {
        self.space.find(point)
    }

    pub fn component_of(&self, i: usize) -> usize {
        self.component_of[i] as usize
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, id: usize) -> &Component {
        &self.components[id]
    }

    pub fn set_broadcast(&mut self, id: usize, status: BroadcastStatus) {
        self.components[id].broadcast = Some(status);
    }

    /// View shape of process `p` at the end of prefix `i`.
    pub fn shape(&self, i: usize, p: ProcessId) -> &ViewShape {
        let (_, w) = self.space.split(i);
        &self.shapes[self.shape_ids[w * self.n + p.index()] as usize]
    }

    /// Prefix pairs that share the view of at least one process, with the
    /// processes that witness it. Quadratic in group size; meant for export
    /// of small partitions.
    pub fn share_edges(&self) -> Vec<(usize, usize, Vec<ProcessId>)> {
        let mut edges: HashMap<(usize, usize), Vec<ProcessId>> = HashMap::new();
        for ((sid, _), members) in self.view_groups() {
            let p = self.shape_owner(sid);
            for (a_pos, &a) in members.iter().enumerate() {
                for &b in &members[a_pos + 1..] {
                    edges.entry((a, b)).or_default().push(p);
                }
            }
        }
        let mut out: Vec<_> = edges
            .into_iter()
            .map(|((a, b), mut ps)| {
                ps.sort();
                ps.dedup();
                (a, b, ps)
            })
            .collect();
        out.sort();
        out
    }

    fn shape_owner(&self, sid: u32) -> ProcessId {
        ProcessId::from_index(self.shapes[sid as usize].owners().trailing_zeros() as usize)
    }
}

/// A component holding valent members of two different values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValenceConflict {
    pub component: usize,
    pub size: usize,
    pub first: PrefixPoint,
    pub second: PrefixPoint,
    pub values: (Value, Value),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionSets {
    /// Decision value per component id.
    Assigned(Vec<Value>),
    Conflict(ValenceConflict),
}

/// Assigns every component a decision value: the value of its valent
/// members, or the first value of `default_order` when it has none.
pub fn assign_decision_sets(partition: &ComponentPartition, default_order: &[Value]) -> DecisionSets {
    let fallback = default_order[0];
    let mut out = Vec::with_capacity(partition.components.len());
    for c in &partition.components {
        match c.valences.as_slice() {
            [] => out.push(fallback),
            [v] => out.push(*v),
            [v, w, ..] => {
                let valent_member = |value: Value| {
                    c.members
                        .iter()
                        .copied()
                        .find(|&i| partition.space.valence(i) == Valence::Valent(value))
                        .map(|i| partition.point(i))
                        .expect("valence comes from a member")
                };
                return DecisionSets::Conflict(ValenceConflict {
                    component: c.id,
                    size: c.members.len(),
                    first: valent_member(*v),
                    second: valent_member(*w),
                    values: (*v, *w),
                });
            }
        }
    }
    DecisionSets::Assigned(out)
}
