//! Backends and recorded circuits of reversible functions.

use std::sync::Arc;

use crate::error::{ErrorCode, RuntimeError};

use super::gates::{Control, Gate};

/// Target of evaluation: a live statevector or a circuit recorder.
pub trait Backend {
    /// A fresh qubit in `|0⟩`.
    fn alloc(&mut self) -> Result<usize, RuntimeError>;
    /// Releases a qubit that must be in `|0⟩`.
    fn free_zero(&mut self, q: usize) -> Result<(), RuntimeError>;
    fn gate(&mut self, g: &Gate, targets: &[usize], controls: &[Control]) -> Result<(), RuntimeError>;
    /// Measures in the computational basis and releases the qubits.
    fn measure(&mut self, qs: &[usize]) -> Result<Vec<bool>, RuntimeError>;
    fn discard(&mut self, q: usize) -> Result<(), RuntimeError>;
}

#[derive(Debug, Clone)]
pub enum Instr {
    Alloc(usize),
    Free(usize),
    Gate { gate: Gate, targets: Vec<usize>, controls: Vec<Control> },
}

/// Straight-line circuit over numbered wires.
#[derive(Debug, Clone, Default)]
pub struct Circuit {
    pub wires: usize,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub instrs: Vec<Instr>,
}

impl Circuit {
    /// Empty circuit on `n` wires, outputs equal to inputs.
    pub fn identity(n: usize) -> Circuit {
        Circuit { wires: n, inputs: (0..n).collect(), outputs: (0..n).collect(), instrs: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate, targets: Vec<usize>, controls: Vec<Control>) {
        self.instrs.push(Instr::Gate { gate, targets, controls });
    }

    pub fn adjoint(&self) -> Circuit {
        let instrs = self
            .instrs
            .iter()
            .rev()
            .map(|i| match i {
                Instr::Alloc(w) => Instr::Free(*w),
                Instr::Free(w) => Instr::Alloc(*w),
                Instr::Gate { gate, targets, controls } => {
                    Instr::Gate { gate: gate.adjoint(), targets: targets.clone(), controls: controls.clone() }
                }
            })
            .collect();
        Circuit { wires: self.wires, inputs: self.outputs.clone(), outputs: self.inputs.clone(), instrs }
    }

    /// Runs the circuit on `inputs`, adding `extra` controls to every gate,
    /// and returns the qubits holding the outputs.
    pub fn replay<B: Backend + ?Sized>(
        &self,
        b: &mut B,
        inputs: &[usize],
        extra: &[Control],
    ) -> Result<Vec<usize>, RuntimeError> {
        if inputs.len() != self.inputs.len() {
            return Err(RuntimeError::new(
                ErrorCode::StuckExpression,
                format!("circuit expects {} qubits, got {}", self.inputs.len(), inputs.len()),
            ));
        }
        let mut map: Vec<Option<usize>> = vec![None; self.wires];
        for (w, q) in self.inputs.iter().zip(inputs) {
            map[*w] = Some(*q);
        }
        let get = |map: &[Option<usize>], w: usize| {
            map[w].ok_or_else(|| RuntimeError::new(ErrorCode::DeadQubit, format!("wire {w} is not live")))
        };
        for i in &self.instrs {
            match i {
                Instr::Alloc(w) => map[*w] = Some(b.alloc()?),
                Instr::Free(w) => {
                    b.free_zero(get(&map, *w)?)?;
                    map[*w] = None;
                }
                Instr::Gate { gate, targets, controls } => {
                    let t = targets.iter().map(|w| get(&map, *w)).collect::<Result<Vec<_>, _>>()?;
                    let mut cs = Vec::with_capacity(controls.len() + extra.len());
                    for c in controls {
                        let wires = c.wires.iter().map(|w| get(&map, *w)).collect::<Result<Vec<_>, _>>()?;
                        cs.push(Control { wires, kind: c.kind.clone() });
                    }
                    cs.extend(extra.iter().cloned());
                    b.gate(gate, &t, &cs)?;
                }
            }
        }
        self.outputs.iter().map(|w| get(&map, *w)).collect()
    }
}

/// Backend that records instead of executing. Measurement is rejected:
/// only reversible functions can be traced.
#[derive(Debug, Default)]
pub struct Tracer {
    pub next: usize,
    pub instrs: Vec<Instr>,
}

impl Tracer {
    pub fn new(inputs: usize) -> Self {
        Tracer { next: inputs, instrs: Vec::new() }
    }

    pub fn finish(self, inputs: Vec<usize>, outputs: Vec<usize>) -> Arc<Circuit> {
        Arc::new(Circuit { wires: self.next, inputs, outputs, instrs: self.instrs })
    }
}

fn not_reversible(what: &str) -> RuntimeError {
    RuntimeError::new(ErrorCode::NotReversible, format!("{what} inside a reversed or predicated function"))
}

impl Backend for Tracer {
    fn alloc(&mut self) -> Result<usize, RuntimeError> {
        let w = self.next;
        self.next += 1;
        self.instrs.push(Instr::Alloc(w));
        Ok(w)
    }

    fn free_zero(&mut self, q: usize) -> Result<(), RuntimeError> {
        self.instrs.push(Instr::Free(q));
        Ok(())
    }

    fn gate(&mut self, g: &Gate, targets: &[usize], controls: &[Control]) -> Result<(), RuntimeError> {
        self.instrs.push(Instr::Gate { gate: g.clone(), targets: targets.to_vec(), controls: controls.to_vec() });
        Ok(())
    }

    fn measure(&mut self, _qs: &[usize]) -> Result<Vec<bool>, RuntimeError> {
        Err(not_reversible("measurement"))
    }

    fn discard(&mut self, _q: usize) -> Result<(), RuntimeError> {
        Err(not_reversible("discard"))
    }
}
