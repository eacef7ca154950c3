use std::fmt;

use crate::algebra::{
    kraus_compose_limited, kraus_tensor_limited, CptniMap, Dim, FactorPermutation, Limits,
};
use crate::error::{Error, Result};

/// A tensor factor flowing through a string diagram. The derived order is
/// the canonical wire order: conditions by place, then pending negative
/// signal wires by event, then emitted positive signal wires by event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Wire {
    Cond(usize),
    HIn(usize),
    HOut(usize),
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wire::Cond(p) => write!(f, "c{p}"),
            Wire::HIn(e) => write!(f, "h-{e}"),
            Wire::HOut(e) => write!(f, "h+{e}"),
        }
    }
}

/// A channel whose input and output factors are labelled by wires.
#[derive(Clone, Debug)]
pub struct WiredChannel {
    pub map: CptniMap,
    pub inputs: Vec<Wire>,
    pub outputs: Vec<Wire>,
}

impl WiredChannel {
    pub fn new(map: CptniMap, inputs: Vec<Wire>, outputs: Vec<Wire>) -> Self {
        Self {
            map,
            inputs,
            outputs,
        }
    }

    pub fn identity(wires: Vec<Wire>, dim: &impl Fn(Wire) -> Dim) -> Self {
        let total = Dim::product(&wires.iter().map(|w| dim(*w)).collect::<Vec<_>>());
        Self {
            map: CptniMap::identity(total),
            inputs: wires.clone(),
            outputs: wires,
        }
    }

    /// Parallel composition; the wire lists are concatenated.
    pub fn tensor(&self, other: &WiredChannel, limits: &Limits) -> Result<Self> {
        Ok(Self {
            map: kraus_tensor_limited(&self.map, &other.map, limits)?,
            inputs: [self.inputs.clone(), other.inputs.clone()].concat(),
            outputs: [self.outputs.clone(), other.outputs.clone()].concat(),
        })
    }

    /// Feeds some of this channel's outputs into `next`; the remaining
    /// outputs pass through untouched and stay after `next`'s outputs.
    pub fn then(
        &self,
        next: &WiredChannel,
        dim: &impl Fn(Wire) -> Dim,
        limits: &Limits,
    ) -> Result<Self> {
        for w in &next.inputs {
            if !self.outputs.contains(w) {
                return Err(Error::DisconnectedRestriction(format!(
                    "wire {w} is consumed but never produced"
                )));
            }
        }
        let pass: Vec<Wire> = self
            .outputs
            .iter()
            .copied()
            .filter(|w| !next.inputs.contains(w))
            .collect();
        if let Some(w) = next.outputs.iter().find(|w| pass.contains(w)) {
            return Err(Error::DisconnectedRestriction(format!(
                "wire {w} is produced twice"
            )));
        }
        let order: Vec<Wire> = next.inputs.iter().chain(&pass).copied().collect();
        let reordered = self.permute_outputs(&order, dim)?;
        let layer = kraus_tensor_limited(
            &next.map,
            &WiredChannel::identity(pass.clone(), dim).map,
            limits,
        )?;
        Ok(Self {
            map: kraus_compose_limited(&layer, &reordered.map, limits)?,
            inputs: self.inputs.clone(),
            outputs: next.outputs.iter().chain(&pass).copied().collect(),
        })
    }

    /// Same channel with outputs listed in `order` (a permutation of them).
    pub fn permute_outputs(&self, order: &[Wire], dim: &impl Fn(Wire) -> Dim) -> Result<Self> {
        let dims: Vec<Dim> = self.outputs.iter().map(|w| dim(*w)).collect();
        let p = FactorPermutation::between(dims, &self.outputs, order)
            .map_err(|_| Error::DisconnectedRestriction("output wires do not match".into()))?;
        Ok(Self {
            map: self.map.with_output_permutation(&p)?,
            inputs: self.inputs.clone(),
            outputs: order.to_vec(),
        })
    }

    /// Same channel accepting its inputs in `order` (a permutation of them).
    pub fn permute_inputs(&self, order: &[Wire], dim: &impl Fn(Wire) -> Dim) -> Result<Self> {
        let dims: Vec<Dim> = order.iter().map(|w| dim(*w)).collect();
        let p = FactorPermutation::between(dims, order, &self.inputs)
            .map_err(|_| Error::DisconnectedRestriction("input wires do not match".into()))?;
        Ok(Self {
            map: self.map.with_input_permutation(&p)?,
            inputs: order.to_vec(),
            outputs: self.outputs.clone(),
        })
    }

    /// Sorts both wire lists into canonical order.
    pub fn canonical(&self, dim: &impl Fn(Wire) -> Dim) -> Result<Self> {
        let mut ins = self.inputs.clone();
        ins.sort();
        let mut outs = self.outputs.clone();
        outs.sort();
        self.permute_inputs(&ins, dim)?.permute_outputs(&outs, dim)
    }
}
