use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use super::NetworkError;
use crate::protection::CapBankParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub impedance: Complex64,
}

/// Series impedance behind an ideal off-nominal tap on the `from` side.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformer {
    pub from: usize,
    pub to: usize,
    pub impedance: Complex64,
    pub tap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapBank {
    pub id: String,
    pub node: usize,
    pub rated_kvar: f64,
    pub params: CapBankParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageLevel {
    pub name: String,
    pub base_kv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeederModel {
    pub base_mva: f64,
    pub voltage_levels: Vec<VoltageLevel>,
    pub nodes: Vec<String>,
    pub source_node: usize,
    pub branches: Vec<Branch>,
    pub transformers: Vec<Transformer>,
    pub cap_banks: Vec<CapBank>,
}

impl FeederModel {
    /// Builds a feeder and checks that it is a radial tree rooted at the source.
    pub fn new(
        base_mva: f64,
        voltage_levels: Vec<VoltageLevel>,
        nodes: Vec<String>,
        source_node: usize,
        branches: Vec<Branch>,
        transformers: Vec<Transformer>,
        cap_banks: Vec<CapBank>,
    ) -> Result<Self, NetworkError> {
        let feeder = FeederModel {
            base_mva,
            voltage_levels,
            nodes,
            source_node,
            branches,
            transformers,
            cap_banks,
        };
        let problems = feeder.violations();
        if problems.is_empty() {
            Ok(feeder)
        } else {
            Err(NetworkError::Topology(problems.join("; ")))
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    /// Shunt admittance of a switched-in capacitor bank on the system base.
    pub fn capbank_admittance(&self, k: usize) -> Complex64 {
        Complex64::new(0.0, self.cap_banks[k].rated_kvar / (self.base_mva * 1000.0))
    }

    fn edges(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.branches
            .iter()
            .map(|b| (b.from, b.to, b.impedance))
            .chain(
                self.transformers
                    .iter()
                    .map(|t| (t.from, t.to, t.impedance)),
            )
    }

    /// Parent of every node in the tree rooted at the source (`None` for the
    /// source and for unreachable nodes).
    pub fn parents(&self) -> Vec<Option<usize>> {
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for (f, t, _) in self.edges() {
            if f < n && t < n {
                adj[f].push(t);
                adj[t].push(f);
            }
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        if self.source_node >= n {
            return parent;
        }
        let mut queue = VecDeque::from([self.source_node]);
        seen[self.source_node] = true;
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    queue.push_back(w);
                }
            }
        }
        parent
    }

    /// Every structural problem with the feeder.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.nodes.len();
        if !(self.base_mva > 0.0) {
            out.push(format!("base_mva must be > 0 (got {})", self.base_mva));
        }
        if n == 0 {
            out.push("feeder has no nodes".to_string());
            return out;
        }
        for (i, id) in self.nodes.iter().enumerate() {
            if self.nodes[..i].contains(id) {
                out.push(format!("duplicate node id `{id}`"));
            }
        }
        if self.source_node >= n {
            out.push("source node is not a feeder node".to_string());
        }
        for (f, t, z) in self.edges() {
            if f >= n || t >= n {
                out.push(format!("edge {f}-{t} references a missing node"));
                continue;
            }
            if f == t {
                out.push(format!("edge at `{}` is a self loop", self.nodes[f]));
            }
            if z.re < 0.0 {
                out.push(format!(
                    "edge {}-{} has negative resistance",
                    self.nodes[f], self.nodes[t]
                ));
            }
            if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
                out.push(format!(
                    "edge {}-{} has zero or non-finite impedance",
                    self.nodes[f], self.nodes[t]
                ));
            }
        }
        for tr in &self.transformers {
            if !(tr.tap > 0.0) {
                out.push(format!("transformer tap must be > 0 (got {})", tr.tap));
            }
        }
        for cap in &self.cap_banks {
            if cap.node >= n {
                out.push(format!(
                    "capacitor bank `{}` references a missing node",
                    cap.id
                ));
            }
            if !(cap.rated_kvar >= 0.0) {
                out.push(format!("capacitor bank `{}` rating must be >= 0", cap.id));
            }
            if !(cap.params.v_max > cap.params.v_min) {
                out.push(format!("capacitor bank `{}` needs v_max > v_min", cap.id));
            }
        }
        let edge_count = self.branches.len() + self.transformers.len();
        if edge_count != n - 1 {
            out.push(format!(
                "a radial feeder with {n} nodes needs {} branches+transformers, found {edge_count}",
                n - 1
            ));
        }
        if self.source_node < n {
            let parents = self.parents();
            for (i, p) in parents.iter().enumerate() {
                if i != self.source_node && p.is_none() {
                    out.push(format!(
                        "node `{}` is not connected to the source",
                        self.nodes[i]
                    ));
                }
            }
        }
        out
    }
}

/// Nodal admittance matrix on the system base.
#[derive(Debug, Clone, PartialEq)]
pub struct Admittance(pub DMatrix<Complex64>);

impl Admittance {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }
}

/// Assembles the nodal admittance matrix. `capbank_on[k]` gates the shunt of
/// the k-th capacitor bank.
pub fn build_admittance(
    feeder: &FeederModel,
    capbank_on: &[bool],
) -> Result<Admittance, NetworkError> {
    if capbank_on.len() != feeder.cap_banks.len() {
        return Err(NetworkError::Topology(format!(
            "{} capacitor statuses for {} banks",
            capbank_on.len(),
            feeder.cap_banks.len()
        )));
    }
    let n = feeder.node_count();
    if feeder.source_node < n
        && feeder
            .parents()
            .iter()
            .enumerate()
            .any(|(i, p)| i != feeder.source_node && p.is_none())
    {
        return Err(NetworkError::Topology("disconnected node".to_string()));
    }
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for b in &feeder.branches {
        let yb = b.impedance.inv();
        y[(b.from, b.from)] += yb;
        y[(b.to, b.to)] += yb;
        y[(b.from, b.to)] -= yb;
        y[(b.to, b.from)] -= yb;
    }
    for t in &feeder.transformers {
        let yt = t.impedance.inv();
        y[(t.from, t.from)] += yt / (t.tap * t.tap);
        y[(t.to, t.to)] += yt;
        y[(t.from, t.to)] -= yt / t.tap;
        y[(t.to, t.from)] -= yt / t.tap;
    }
    for (k, cap) in feeder.cap_banks.iter().enumerate() {
        if capbank_on[k] {
            y[(cap.node, cap.node)] += feeder.capbank_admittance(k);
        }
    }
    Ok(Admittance(y))
}
