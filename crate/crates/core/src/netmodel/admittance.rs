use alloc::vec::Vec;

use num_complex::Complex64;

use super::PowerNetwork;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Node label of an admittance matrix row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Node {
    /// Network bus, by id.
    Bus(usize),
    /// Internal EMF node of a generator, by generator position.
    Internal(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    pub nodes: Vec<Node>,
    pub y: Matrix<Complex64>,
}

impl AdmittanceMatrix {
    pub fn new(nodes: Vec<Node>, y: Matrix<Complex64>) -> Result<Self> {
        if !y.is_square() || y.rows() != nodes.len() {
            return Err(Error::InvalidArgument("admittance matrix shape does not match node list".into()));
        }
        Ok(AdmittanceMatrix { nodes, y })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, node: Node) -> Option<usize> {
        self.nodes.iter().position(|&n| n == node)
    }

    pub fn get(&self, a: Node, b: Node) -> Option<Complex64> {
        Some(self.y[(self.index_of(a)?, self.index_of(b)?)])
    }

    /// Copy with `node` tied to ground: its row and column are dropped,
    /// which forces its voltage to zero.
    pub fn grounded(&self, node: Node) -> Result<Self> {
        let k = self
            .index_of(node)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("node {node:?} not in matrix")))?;
        let keep: Vec<usize> = (0..self.len()).filter(|&i| i != k).collect();
        Ok(AdmittanceMatrix {
            nodes: keep.iter().map(|&i| self.nodes[i]).collect(),
            y: self.y.select(&keep, &keep),
        })
    }

    /// Copy with an extra shunt admittance at `node`.
    pub fn with_shunt(&self, node: Node, shunt: Complex64) -> Result<Self> {
        let k = self
            .index_of(node)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("node {node:?} not in matrix")))?;
        let mut out = self.clone();
        out.y[(k, k)] += shunt;
        Ok(out)
    }
}

/// Bus admittance matrix from branch π-models, with every load converted
/// to the constant shunt `(P - jQ) / |V|²` at the given bus voltages.
///
/// `load_voltages` is indexed like [`PowerNetwork::buses`].
pub fn build_admittance(net: &PowerNetwork, load_voltages: &[Complex64]) -> Result<AdmittanceMatrix> {
    let buses = net.buses();
    if load_voltages.len() != buses.len() {
        return Err(Error::InvalidArgument("one voltage per bus is required".into()));
    }
    let mut y = Matrix::zeros(buses.len(), buses.len());
    for br in net.branches() {
        let z = Complex64::new(br.r, br.x);
        if z.norm() == 0.0 {
            return Err(Error::ZeroImpedance { from: br.from, to: br.to });
        }
        let series = z.inv();
        let half_charging = Complex64::new(0.0, br.b / 2.0);
        let i = net.bus_index(br.from).expect("validated");
        let j = net.bus_index(br.to).expect("validated");
        y[(i, i)] += series + half_charging;
        y[(j, j)] += series + half_charging;
        y[(i, j)] -= series;
        y[(j, i)] -= series;
    }
    for (k, bus) in buses.iter().enumerate() {
        if bus.p_load == 0.0 && bus.q_load == 0.0 {
            continue;
        }
        let v2 = load_voltages[k].norm_sqr();
        if v2 == 0.0 {
            return Err(Error::ZeroVoltage { bus: bus.id });
        }
        y[(k, k)] += Complex64::new(bus.p_load, -bus.q_load) / v2;
    }
    AdmittanceMatrix::new(buses.iter().map(|b| Node::Bus(b.id)).collect(), y)
}

/// Extends a bus admittance matrix with one internal node per generator,
/// tied to its terminal through `1 / (j x'_d)`. Internal nodes come first.
pub fn augment_generators(net: &PowerNetwork, y_bus: &AdmittanceMatrix) -> Result<AdmittanceMatrix> {
    let n_gen = net.generators().len();
    let n_bus = y_bus.len();
    let size = n_gen + n_bus;
    let mut y = Matrix::zeros(size, size);
    for i in 0..n_bus {
        for j in 0..n_bus {
            y[(n_gen + i, n_gen + j)] = y_bus.y[(i, j)];
        }
    }
    for (k, g) in net.generators().iter().enumerate() {
        let t = n_gen
            + y_bus
                .index_of(Node::Bus(g.bus))
                .ok_or_else(|| Error::InvalidArgument(alloc::format!("bus {} missing from matrix", g.bus)))?;
        let yg = Complex64::new(0.0, g.xd_prime).inv();
        y[(k, k)] += yg;
        y[(t, t)] += yg;
        y[(k, t)] -= yg;
        y[(t, k)] -= yg;
    }
    let nodes = (0..n_gen).map(Node::Internal).chain(y_bus.nodes.iter().copied()).collect();
    AdmittanceMatrix::new(nodes, y)
}
