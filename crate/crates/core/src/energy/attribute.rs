use super::{delta_unchecked, EnergyParams, MergeState};
use crate::tree::{NodeId, NodeInfo, RegionDecomposition, ShapeTree, ROOT};

/// Non-root nodes by increasing mean boundary gradient S_∇/L, ties by node id.
pub fn gradient_order(tree: &ShapeTree, info: &NodeInfo) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = (1..tree.len() as NodeId).collect();
    order.sort_by(|&a, &b| info.mean_gradient(a).total_cmp(&info.mean_gradient(b)).then(a.cmp(&b)));
    order
}

/// Transition value of λ at which removing each shape starts to lower the energy.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaAttribute {
    /// Value before any merge.
    pub initial: Vec<f64>,
    /// Value after the ordered merging pass (max-accumulated).
    pub values: Vec<f64>,
    /// `max(values) − values`; the root gets 0.
    pub inverted: Vec<f64>,
}

impl LambdaAttribute {
    /// `None` for the root, which carries no attribute.
    pub fn get(&self, v: NodeId) -> Option<f64> {
        (v != ROOT).then(|| self.values[v as usize])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().skip(1).copied().fold(0.0, f64::max)
    }
}

fn transition(tree: &ShapeTree, info: &NodeInfo, state: &MergeState, v: NodeId) -> f64 {
    let l = info.length[v as usize] as f64;
    state.merge_cost(tree, v) / l
}

/// Single ordered pass: each node's transition value is evaluated against its current live
/// parent, kept if larger than the pristine value, and the node is then merged away.
pub fn compute_lambda_attribute(
    tree: &ShapeTree,
    info: &NodeInfo,
    decomp: &RegionDecomposition,
    order: &[NodeId],
) -> LambdaAttribute {
    let n = tree.len();
    let mut state = MergeState::new(tree, decomp);
    let mut initial = vec![0.0; n];
    for v in 1..n as NodeId {
        initial[v as usize] = transition(tree, info, &state, v);
    }
    let mut values = initial.clone();
    for &v in order {
        let t = transition(tree, info, &state, v);
        let slot = &mut values[v as usize];
        *slot = slot.max(t);
        state.merge(tree, v);
    }
    let top = values.iter().skip(1).copied().fold(0.0, f64::max);
    let mut inverted: Vec<f64> = values.iter().map(|&a| top - a).collect();
    inverted[ROOT as usize] = 0.0;
    LambdaAttribute {
        initial,
        values,
        inverted,
    }
}

/// Result of a greedy simplification at fixed λ.
#[derive(Clone, Debug)]
pub struct Selection {
    pub state: MergeState,
    /// Surviving non-root nodes, ascending.
    pub kept: Vec<NodeId>,
    /// Removed nodes in removal order.
    pub removed: Vec<NodeId>,
}

impl Selection {
    pub(crate) fn from_state(state: MergeState, removed: Vec<NodeId>) -> Self {
        let kept = state.live_nodes().filter(|&v| v != ROOT).collect();
        Selection { state, kept, removed }
    }
}

/// Sweeps the order repeatedly, removing every node whose removal strictly lowers the energy,
/// until a full sweep removes nothing.
pub fn simplify_fixed_lambda(
    tree: &ShapeTree,
    info: &NodeInfo,
    decomp: &RegionDecomposition,
    params: EnergyParams,
    order: &[NodeId],
) -> Selection {
    let mut state = MergeState::new(tree, decomp);
    let mut removed = Vec::new();
    loop {
        let before = removed.len();
        for &v in order {
            if state.is_live(v) && delta_unchecked(tree, info, &state, v, params.lambda) < 0.0 {
                state.merge(tree, v);
                removed.push(v);
            }
        }
        if removed.len() == before {
            break;
        }
    }
    Selection::from_state(state, removed)
}
