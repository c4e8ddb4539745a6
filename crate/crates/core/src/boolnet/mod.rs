//! Combinational Boolean networks with stuck-at faults and drug inhibition,
//! and the expression profiles they induce across an ensemble of faulty copies.

mod parse;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ExpressionProfile;

pub use parse::{parse_faults, parse_netlist, parse_stimulus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateOp {
    And,
    Or,
    Not,
    Buf,
}

impl GateOp {
    pub fn apply(self, fanin: impl IntoIterator<Item = bool>) -> bool {
        let mut it = fanin.into_iter();
        match self {
            GateOp::And => it.all(|b| b),
            GateOp::Or => it.any(|b| b),
            GateOp::Not => !it.next().unwrap_or(false),
            GateOp::Buf => it.next().unwrap_or(false),
        }
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateOp::And => "AND",
            GateOp::Or => "OR",
            GateOp::Not => "NOT",
            GateOp::Buf => "BUF",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Input,
    Gate { op: GateOp, fanin: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

/// Gate description before name resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateSpec {
    pub name: String,
    pub op: GateOp,
    pub fanin: Vec<String>,
}

/// A validated acyclic network. Node indices are stable and `order` is a
/// topological order over all nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BooleanNetwork {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    order: Vec<usize>,
}

impl BooleanNetwork {
    pub fn new(inputs: &[String], gates: &[GateSpec], outputs: &[String]) -> Result<Self> {
        let mut nodes = Vec::with_capacity(inputs.len() + gates.len());
        let mut index = HashMap::new();
        let mut declare = |name: &str, nodes: &mut Vec<Node>| -> Result<usize> {
            if index.contains_key(name) {
                return Err(Error::Graph(format!("node `{name}` declared twice")));
            }
            index.insert(name.to_string(), nodes.len());
            nodes.push(Node {
                name: name.to_string(),
                kind: NodeKind::Input,
            });
            Ok(nodes.len() - 1)
        };
        let input_ids = inputs
            .iter()
            .map(|n| declare(n, &mut nodes))
            .collect::<Result<Vec<_>>>()?;
        let gate_ids = gates
            .iter()
            .map(|g| declare(&g.name, &mut nodes))
            .collect::<Result<Vec<_>>>()?;
        let resolve = |name: &str| -> Result<usize> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Reference(format!("unknown node `{name}`")))
        };
        for (g, &id) in gates.iter().zip(&gate_ids) {
            let arity_ok = match g.op {
                GateOp::Not | GateOp::Buf => g.fanin.len() == 1,
                GateOp::And | GateOp::Or => !g.fanin.is_empty(),
            };
            if !arity_ok {
                return Err(Error::Graph(format!(
                    "{} gate `{}` has {} fan-in(s)",
                    g.op,
                    g.name,
                    g.fanin.len()
                )));
            }
            let fanin = g.fanin.iter().map(|n| resolve(n)).collect::<Result<Vec<_>>>()?;
            nodes[id].kind = NodeKind::Gate { op: g.op, fanin };
        }
        let output_ids = outputs.iter().map(|n| resolve(n)).collect::<Result<Vec<_>>>()?;
        let order = topological_order(&nodes)?;
        Ok(BooleanNetwork {
            nodes,
            index,
            inputs: input_ids,
            outputs: output_ids,
            order,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_id(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Reference(format!("unknown node `{name}`")))
    }

    pub fn inputs(&self) -> impl Iterator<Item = &str> {
        self.inputs.iter().map(|&i| self.nodes[i].name.as_str())
    }

    pub fn outputs(&self) -> impl Iterator<Item = &str> {
        self.outputs.iter().map(|&i| self.nodes[i].name.as_str())
    }

    /// Value of every node, indexed like [`BooleanNetwork::nodes`].
    pub fn evaluate_nodes(&self, fault: &FaultMap, stim: &Stimulus) -> Result<Vec<bool>> {
        let stuck = fault
            .overrides
            .iter()
            .map(|(n, &v)| Ok((self.node_id(n)?, v)))
            .collect::<Result<HashMap<_, _>>>()?;
        let drugged = stim
            .drugs
            .iter()
            .map(|n| self.node_id(n))
            .collect::<Result<BTreeSet<_>>>()?;
        for n in stim.assignment.keys() {
            let id = self.node_id(n)?;
            if self.nodes[id].kind != NodeKind::Input {
                return Err(Error::Reference(format!("`{n}` is not an input")));
            }
        }
        let mut value = vec![false; self.nodes.len()];
        for &id in &self.order {
            let node = &self.nodes[id];
            value[id] = if let Some(&v) = stuck.get(&id) {
                v
            } else if drugged.contains(&id) {
                false
            } else {
                match &node.kind {
                    NodeKind::Input => *stim
                        .assignment
                        .get(&node.name)
                        .ok_or_else(|| Error::Reference(format!("input `{}` is not set", node.name)))?,
                    NodeKind::Gate { op, fanin } => op.apply(fanin.iter().map(|&f| value[f])),
                }
            };
        }
        Ok(value)
    }

    /// Value of each declared output.
    pub fn evaluate(&self, fault: &FaultMap, stim: &Stimulus) -> Result<BTreeMap<String, bool>> {
        let value = self.evaluate_nodes(fault, stim)?;
        Ok(self
            .outputs
            .iter()
            .map(|&o| (self.nodes[o].name.clone(), value[o]))
            .collect())
    }
}

fn topological_order(nodes: &[Node]) -> Result<Vec<usize>> {
    let mut indegree = vec![0usize; nodes.len()];
    let mut fanout = vec![Vec::new(); nodes.len()];
    for (id, node) in nodes.iter().enumerate() {
        if let NodeKind::Gate { fanin, .. } = &node.kind {
            indegree[id] = fanin.len();
            for &f in fanin {
                fanout[f].push(id);
            }
        }
    }
    let mut ready: Vec<usize> = (0..nodes.len()).filter(|&i| indegree[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(id) = ready.pop() {
        order.push(id);
        for &next in &fanout[id] {
            indegree[next] -= 1;
            if indegree[next] == 0 {
                ready.push(next);
            }
        }
    }
    if order.len() != nodes.len() {
        let stuck: Vec<&str> = (0..nodes.len())
            .filter(|&i| indegree[i] > 0)
            .map(|i| nodes[i].name.as_str())
            .collect();
        return Err(Error::Graph(format!("cycle through {}", stuck.join(", "))));
    }
    Ok(order)
}

/// Stuck-at values for one faulty network.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultMap {
    pub overrides: BTreeMap<String, bool>,
}

impl FaultMap {
    pub fn none() -> Self {
        FaultMap::default()
    }

    pub fn stuck(mut self, node: &str, value: bool) -> Self {
        self.overrides.insert(node.to_string(), value);
        self
    }
}

/// Input assignment plus the set of inhibited nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimulus {
    pub assignment: BTreeMap<String, bool>,
    pub drugs: BTreeSet<String>,
}

impl Stimulus {
    pub fn set(mut self, input: &str, value: bool) -> Self {
        self.assignment.insert(input.to_string(), value);
        self
    }

    pub fn drug(mut self, node: &str) -> Self {
        self.drugs.insert(node.to_string());
        self
    }
}

/// One profile: the activity of `output` (reported as `gene`) under
/// stimulus number `stimulus`, across every network of the ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileRow {
    pub gene: String,
    pub stimulus: usize,
    pub profile: ExpressionProfile,
}

/// Evaluate the ensemble (one network per fault map) under each stimulus and
/// collect a profile per (stimulus, mapped output). Outputs missing from
/// `gene_map` are skipped; rows are ordered by stimulus, then by output
/// declaration order.
///
/// A single-network ensemble yields length-1 profiles, which the model
/// layer cannot use; callers decide whether that is an error.
pub fn profiles_for_ensemble(
    net: &BooleanNetwork,
    faults: &[FaultMap],
    stimuli: &[Stimulus],
    gene_map: &BTreeMap<String, String>,
) -> Result<Vec<ProfileRow>> {
    if faults.is_empty() {
        return Err(Error::EmptyInput("fault ensemble"));
    }
    for name in gene_map.keys() {
        let id = net.node_id(name)?;
        if !net.outputs.contains(&id) {
            return Err(Error::Reference(format!("`{name}` is not an output")));
        }
    }
    let mut rows = Vec::new();
    for (s, stim) in stimuli.iter().enumerate() {
        let per_net = faults
            .iter()
            .map(|f| net.evaluate_nodes(f, stim))
            .collect::<Result<Vec<_>>>()?;
        for &o in &net.outputs {
            let Some(gene) = gene_map.get(&net.nodes[o].name) else {
                continue;
            };
            let d: Vec<f64> = per_net.iter().map(|v| f64::from(u8::from(v[o]))).collect();
            rows.push(ProfileRow {
                gene: gene.clone(),
                stimulus: s,
                profile: ExpressionProfile::from_values(d)?,
            });
        }
    }
    Ok(rows)
}
