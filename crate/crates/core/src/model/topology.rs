use std::collections::HashMap;

use super::{validate, ActionId, LinkKind, ModelError, SystemModel};
use crate::time::Time;

#[derive(Debug, Clone, Copy)]
struct Edge {
    sub: usize,
    kind: LinkKind,
    /// Target on child edges, source on parent edges.
    other: usize,
}

/// Indexed view of a valid model with the derived relations.
///
/// Actions are addressed by their position in `model.actions`; the
/// id-based methods are thin wrappers over the index-based ones.
#[derive(Debug, Clone)]
pub struct Topology<'m> {
    model: &'m SystemModel,
    index: HashMap<&'m str, usize>,
    txn_of: Vec<usize>,
    children: Vec<Vec<Edge>>,
    parent: Vec<Option<Edge>>,
    sync_cost: Vec<Time>,
    /// `reach[a]` lists every `b` with `a ∝ b`, including `a` itself.
    reach: Vec<Vec<bool>>,
}

impl<'m> Topology<'m> {
    pub fn new(model: &'m SystemModel) -> Result<Self, ModelError> {
        let violations = validate(model);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }

        let n = model.actions.len();
        let index: HashMap<&str, usize> =
            model.actions.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
        let txn_index: HashMap<&str, usize> =
            model.transactions.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
        let txn_of = model.actions.iter().map(|a| txn_index[a.transaction.as_str()]).collect();

        let mut children = vec![Vec::new(); n];
        let mut parent = vec![None; n];
        for (i, a) in model.actions.iter().enumerate() {
            for (j, sub) in a.sub_actions.iter().enumerate() {
                if let Some(link) = &sub.generates {
                    let t = index[link.target.as_str()];
                    children[i].push(Edge { sub: j, kind: link.kind, other: t });
                    parent[t] = Some(Edge { sub: j, kind: link.kind, other: i });
                }
            }
        }

        let mut topo = Topology {
            model,
            index,
            txn_of,
            children,
            parent,
            sync_cost: Vec::new(),
            reach: Vec::new(),
        };
        topo.sync_cost = topo.compute_sync_costs();
        topo.reach = (0..n).map(|a| topo.compute_reach(a)).collect();
        Ok(topo)
    }

    fn compute_sync_costs(&self) -> Vec<Time> {
        // Children before parents: reverse post-order over call edges.
        let n = self.model.actions.len();
        let mut cost: Vec<Option<Time>> = vec![None; n];
        for start in 0..n {
            let mut stack = vec![(start, false)];
            while let Some((a, expanded)) = stack.pop() {
                if cost[a].is_some() {
                    continue;
                }
                if expanded {
                    let callees: Time = self
                        .calls(a)
                        .map(|e| cost[e.other].expect("callee cost computed first"))
                        .sum();
                    cost[a] = Some(self.model.actions[a].exec_time() + callees);
                } else {
                    stack.push((a, true));
                    stack.extend(self.calls(a).map(|e| (e.other, false)));
                }
            }
        }
        cost.into_iter().map(|c| c.unwrap_or_default()).collect()
    }

    fn compute_reach(&self, a: usize) -> Vec<bool> {
        let mut seen = vec![false; self.model.actions.len()];
        let mut stack = vec![a];
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut seen[x], true) {
                continue;
            }
            stack.extend(self.children[x].iter().map(|e| e.other));
        }
        seen
    }

    fn calls(&self, a: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.children[a].iter().filter(|e| e.kind == LinkKind::CallSync)
    }

    pub fn model(&self) -> &'m SystemModel {
        self.model
    }

    pub fn len(&self) -> usize {
        self.model.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.model.actions.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize, ModelError> {
        self.index.get(id).copied().ok_or_else(|| ModelError::UnknownAction(id.into()))
    }

    pub fn id(&self, a: usize) -> &'m ActionId {
        &self.model.actions[a].id
    }

    /// Position of the action's transaction in `model.transactions`.
    pub fn transaction_of(&self, a: usize) -> usize {
        self.txn_of[a]
    }

    pub fn is_sync_called(&self, a: usize) -> bool {
        matches!(self.parent[a], Some(Edge { kind: LinkKind::CallSync, .. }))
    }

    pub fn causes_idx(&self, a: usize, b: usize) -> bool {
        self.reach[a][b]
    }

    /// `a ∝ b`: `b` is `a` or is reachable from `a` through generated events.
    pub fn causes(&self, a: &str, b: &str) -> Result<bool, ModelError> {
        Ok(self.causes_idx(self.index_of(a)?, self.index_of(b)?))
    }

    pub fn synchronous_set_idx(&self, a: usize) -> Vec<usize> {
        let mut out = vec![a];
        let mut i = 0;
        while i < out.len() {
            let x = out[i];
            out.extend(self.calls(x).map(|e| e.other));
            i += 1;
        }
        out
    }

    /// `Υ(a)`: `a` and every action it calls synchronously, transitively.
    /// The root comes first; the rest follow in call order.
    pub fn synchronous_set(&self, a: &str) -> Result<Vec<ActionId>, ModelError> {
        let a = self.index_of(a)?;
        Ok(self.synchronous_set_idx(a).into_iter().map(|x| self.id(x).clone()).collect())
    }

    pub fn sync_set_cost_idx(&self, a: usize) -> Time {
        self.sync_cost[a]
    }

    /// `C(Υ(a))`.
    pub fn sync_set_cost(&self, a: &str) -> Result<Time, ModelError> {
        Ok(self.sync_set_cost_idx(self.index_of(a)?))
    }

    pub fn async_root_idx(&self, a: usize) -> usize {
        let mut x = a;
        while let Some(Edge { kind: LinkKind::CallSync, other, .. }) = self.parent[x] {
            x = other;
        }
        x
    }

    /// The signal- or externally-triggered action whose synchronous set
    /// contains `a`.
    pub fn async_root(&self, a: &str) -> Result<ActionId, ModelError> {
        Ok(self.id(self.async_root_idx(self.index_of(a)?)).clone())
    }

    /// Work done inside `Υ(root)` before `member` starts: along the call
    /// chain from `root` to `member`, every sub-action up to and including
    /// the one issuing the next call, plus the full synchronous sets of
    /// calls completed earlier on the chain.
    pub fn partial_chain_cost_idx(&self, root: usize, member: usize) -> Option<Time> {
        if root == member {
            return None;
        }
        let mut cost = Time::ZERO;
        let mut x = member;
        while x != root {
            let Some(Edge { kind: LinkKind::CallSync, other: caller, sub: h }) = self.parent[x]
            else {
                return None;
            };
            let caller_action = &self.model.actions[caller];
            cost += caller_action.sub_actions[..=h].iter().map(|s| s.exec_time).sum();
            cost += self
                .calls(caller)
                .filter(|e| e.sub < h)
                .map(|e| self.sync_cost[e.other])
                .sum();
            x = caller;
        }
        Some(cost)
    }

    pub fn partial_chain_cost(&self, root: &str, member: &str) -> Result<Time, ModelError> {
        let (r, m) = (self.index_of(root)?, self.index_of(member)?);
        self.partial_chain_cost_idx(r, m).ok_or_else(|| ModelError::NotSynchronouslyReachable {
            root: root.into(),
            action: member.into(),
        })
    }
}
