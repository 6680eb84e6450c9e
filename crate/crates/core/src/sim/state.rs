//! Statevector backend.
//!
//! Qubit `i` of an `n`-qubit state is bit `n - 1 - i` of the amplitude
//! index, so the first qubit is the most significant. New qubits are
//! appended as the least significant bit. Measured, discarded and freed
//! qubits are reset to `|0⟩` and parked in an ancilla pool that later
//! allocations draw from, lowest index first.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{ErrorCode, RuntimeError};
use crate::linalg::{C64, ONE, ZERO};

use super::circuit::Backend;
use super::gates::{Control, ControlKind, Gate};

pub const DEFAULT_MAX_QUBITS: usize = 20;

#[derive(Debug, Clone)]
pub struct State {
    n: usize,
    amps: Vec<C64>,
    live: Vec<bool>,
    pool: BTreeSet<usize>,
    pub max_qubits: usize,
    pub tol: f64,
    rng: Option<ChaCha12Rng>,
    /// Applications of labelled gates (classical embeddings), by label.
    pub calls: BTreeMap<String, u64>,
    scratch: Vec<C64>,
}

fn err(code: ErrorCode, msg: impl Into<String>) -> RuntimeError {
    RuntimeError::new(code, msg)
}

impl State {
    /// The empty state `|⟩`.
    pub fn new(max_qubits: usize, tol: f64, rng: Option<ChaCha12Rng>) -> Self {
        State {
            n: 0,
            amps: vec![ONE],
            live: Vec::new(),
            pool: BTreeSet::new(),
            max_qubits,
            tol,
            rng,
            calls: BTreeMap::new(),
            scratch: Vec::new(),
        }
    }

    /// `m` live qubits in computational basis state `k`.
    pub fn basis(m: usize, k: usize) -> Self {
        let mut s = State::new(m.max(DEFAULT_MAX_QUBITS), 1e-9, None);
        s.n = m;
        s.amps = vec![ZERO; 1 << m];
        s.amps[k] = ONE;
        s.live = vec![true; m];
        s
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn live_qubits(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.live[q]).collect()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn pos(&self, q: usize) -> usize {
        self.n - 1 - q
    }

    /// Index offsets of every value of `qs`, most significant first.
    fn offsets(&self, qs: &[usize]) -> Vec<usize> {
        let m = qs.len();
        (0..1usize << m)
            .map(|v| {
                qs.iter()
                    .enumerate()
                    .filter(|(i, _)| (v >> (m - 1 - i)) & 1 == 1)
                    .map(|(_, q)| 1usize << self.pos(*q))
                    .sum()
            })
            .collect()
    }

    fn value_of(&self, idx: usize, qs: &[usize]) -> usize {
        qs.iter().fold(0, |acc, q| (acc << 1) | ((idx >> self.pos(*q)) & 1))
    }

    fn mask(&self, qs: &[usize]) -> usize {
        qs.iter().map(|q| 1usize << self.pos(*q)).sum()
    }

    fn check_live(&self, qs: &[usize], seen: &mut BTreeSet<usize>) -> Result<(), RuntimeError> {
        for &q in qs {
            if q >= self.n || !self.live[q] {
                return Err(err(ErrorCode::DeadQubit, format!("qubit {q} is not live")));
            }
            if !seen.insert(q) {
                return Err(err(ErrorCode::IndexCollision, format!("qubit {q} is used twice in one operation")));
            }
        }
        Ok(())
    }

    /// Amplitudes over `qs` (most significant first). Every other qubit
    /// must be free.
    pub fn amplitudes_of(&self, qs: &[usize]) -> Result<Vec<C64>, RuntimeError> {
        let mut seen = BTreeSet::new();
        self.check_live(qs, &mut seen)?;
        if let Some(q) = self.live_qubits().into_iter().find(|q| !seen.contains(q)) {
            return Err(err(ErrorCode::StuckExpression, format!("qubit {q} is still live")));
        }
        Ok(self.offsets(qs).into_iter().map(|o| self.amps[o]).collect())
    }

    fn release(&mut self, q: usize) {
        self.live[q] = false;
        self.pool.insert(q);
        while self.n > 0 && self.pool.contains(&(self.n - 1)) {
            let q = self.n - 1;
            self.pool.remove(&q);
            self.live.pop();
            let half = self.amps.len() / 2;
            for i in 0..half {
                self.amps[i] = self.amps[2 * i];
            }
            self.amps.truncate(half);
            self.n -= 1;
        }
    }

    /// Moves the qubits' amplitude at value `v` to value 0; all other
    /// values must already be zero.
    fn reset_from(&mut self, qs: &[usize], v: usize, scale: f64) {
        let mask = self.mask(qs);
        let off = self.offsets(qs)[v];
        for idx in 0..self.amps.len() {
            if idx & mask == 0 {
                self.amps[idx] = self.amps[idx | off] * scale;
            } else {
                self.amps[idx] = ZERO;
            }
        }
    }

    fn comp_ok(&self, idx: usize, comp: &[(Vec<usize>, &Vec<bool>)]) -> bool {
        comp.iter().all(|(qs, allowed)| allowed[self.value_of(idx, qs)])
    }
}

fn tensor_vectors(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    a.iter().flat_map(|x| b.iter().map(move |y| crate::linalg::kron_vec(x, y))).collect()
}

impl Backend for State {
    fn alloc(&mut self) -> Result<usize, RuntimeError> {
        if let Some(q) = self.pool.pop_first() {
            self.live[q] = true;
            return Ok(q);
        }
        if self.n >= self.max_qubits {
            return Err(err(
                ErrorCode::CapacityExceeded,
                format!("more than {} qubits are needed", self.max_qubits),
            ));
        }
        let old = std::mem::take(&mut self.amps);
        let mut amps = vec![ZERO; old.len() * 2];
        for (i, a) in old.into_iter().enumerate() {
            amps[2 * i] = a;
        }
        self.amps = amps;
        self.live.push(true);
        self.n += 1;
        Ok(self.n - 1)
    }

    fn free_zero(&mut self, q: usize) -> Result<(), RuntimeError> {
        self.check_live(&[q], &mut BTreeSet::new())?;
        let bit = 1usize << self.pos(q);
        let mass: f64 = self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum();
        if mass >= self.tol {
            return Err(err(ErrorCode::DirtyDiscardZ, format!("qubit {q} has |1⟩ weight {mass:.3e}")));
        }
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a = ZERO;
            }
        }
        self.release(q);
        Ok(())
    }

    fn gate(&mut self, g: &Gate, targets: &[usize], controls: &[Control]) -> Result<(), RuntimeError> {
        let mut seen = BTreeSet::new();
        self.check_live(targets, &mut seen)?;
        for c in controls {
            self.check_live(&c.wires, &mut seen)?;
        }
        if g.qubits() != targets.len() {
            return Err(err(
                ErrorCode::StuckExpression,
                format!("gate on {} qubits applied to {}", g.qubits(), targets.len()),
            ));
        }
        if let Some(l) = g.label() {
            *self.calls.entry(l.to_string()).or_default() += 1;
        }
        let mut comp = Vec::new();
        let mut proj_wires = Vec::new();
        let mut proj_vectors: Option<Vec<Vec<C64>>> = None;
        for c in controls {
            match &c.kind {
                ControlKind::Comp(allowed) => comp.push((c.wires.clone(), &**allowed)),
                ControlKind::Proj(vs) => {
                    proj_wires.extend(c.wires.iter().copied());
                    proj_vectors = Some(match proj_vectors {
                        None => (**vs).clone(),
                        Some(acc) => tensor_vectors(&acc, vs),
                    });
                }
            }
        }
        let tmask = self.mask(targets);
        let toff = self.offsets(targets);
        let mut scratch = std::mem::take(&mut self.scratch);
        let mut v = vec![ZERO; toff.len()];
        match proj_vectors {
            None => {
                for base in 0..self.amps.len() {
                    if base & tmask != 0 || !self.comp_ok(base, &comp) {
                        continue;
                    }
                    for (x, o) in v.iter_mut().zip(&toff) {
                        *x = self.amps[base | o];
                    }
                    g.apply_vec(&mut v, &mut scratch);
                    for (x, o) in v.iter().zip(&toff) {
                        self.amps[base | o] = *x;
                    }
                }
            }
            Some(pv) => {
                let pmask = self.mask(&proj_wires);
                let poff = self.offsets(&proj_wires);
                let mut block = vec![ZERO; poff.len() * toff.len()];
                let mut r = vec![ZERO; toff.len()];
                for base in 0..self.amps.len() {
                    if base & (tmask | pmask) != 0 || !self.comp_ok(base, &comp) {
                        continue;
                    }
                    for (c, po) in poff.iter().enumerate() {
                        for (t, to) in toff.iter().enumerate() {
                            block[c * toff.len() + t] = self.amps[base | po | to];
                        }
                    }
                    for p in &pv {
                        for (t, rt) in r.iter_mut().enumerate() {
                            *rt = (0..poff.len()).map(|c| p[c].conj() * block[c * toff.len() + t]).sum();
                        }
                        v.copy_from_slice(&r);
                        g.apply_vec(&mut v, &mut scratch);
                        for (c, pc) in p.iter().enumerate() {
                            if pc.norm_sqr() == 0.0 {
                                continue;
                            }
                            for t in 0..toff.len() {
                                block[c * toff.len() + t] += pc * (v[t] - r[t]);
                            }
                        }
                    }
                    for (c, po) in poff.iter().enumerate() {
                        for (t, to) in toff.iter().enumerate() {
                            self.amps[base | po | to] = block[c * toff.len() + t];
                        }
                    }
                }
            }
        }
        self.scratch = scratch;
        Ok(())
    }

    fn measure(&mut self, qs: &[usize]) -> Result<Vec<bool>, RuntimeError> {
        self.check_live(qs, &mut BTreeSet::new())?;
        let m = qs.len();
        let mut p = vec![0.0f64; 1 << m];
        for (idx, a) in self.amps.iter().enumerate() {
            p[self.value_of(idx, qs)] += a.norm_sqr();
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(err(ErrorCode::DegenerateState, format!("outcome probabilities sum to {total}")));
        }
        let rng = self
            .rng
            .as_mut()
            .ok_or_else(|| err(ErrorCode::StuckExpression, "measurement without a random stream"))?;
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = p.iter().rposition(|x| *x > 0.0).unwrap_or(0);
        for (v, pv) in p.iter().enumerate() {
            acc += pv;
            if u < acc && *pv > 0.0 {
                pick = v;
                break;
            }
        }
        self.reset_from(qs, pick, 1.0 / p[pick].sqrt());
        for &q in qs {
            self.release(q);
        }
        Ok((0..m).map(|i| (pick >> (m - 1 - i)) & 1 == 1).collect())
    }

    fn discard(&mut self, q: usize) -> Result<(), RuntimeError> {
        self.measure(&[q]).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::gates::prep_gate;
    use rand::SeedableRng;

    fn state() -> State {
        State::new(20, 1e-9, Some(ChaCha12Rng::seed_from_u64(7)))
    }

    #[test]
    fn literal_order_is_msb_first() {
        let mut s = state();
        let a = s.alloc().unwrap();
        let _b = s.alloc().unwrap();
        s.gate(&prep_gate('1').unwrap(), &[a], &[]).unwrap();
        assert_eq!(s.amplitudes()[2], ONE);
    }

    #[test]
    fn measure_collapses_and_frees() {
        let mut s = state();
        let a = s.alloc().unwrap();
        let b = s.alloc().unwrap();
        s.gate(&prep_gate('+').unwrap(), &[a], &[]).unwrap();
        let cnot = Control { wires: vec![a], kind: ControlKind::Comp(std::sync::Arc::new(vec![false, true])) };
        s.gate(&prep_gate('1').unwrap(), &[b], &[cnot]).unwrap();
        let r = s.measure(&[a]).unwrap();
        let r2 = s.measure(&[b]).unwrap();
        assert_eq!(r, r2);
        assert_eq!(s.qubits(), 0);
    }

    #[test]
    fn discardz_checks_weight() {
        let mut s = state();
        let a = s.alloc().unwrap();
        s.gate(&prep_gate('+').unwrap(), &[a], &[]).unwrap();
        assert_eq!(s.free_zero(a).unwrap_err().code, ErrorCode::DirtyDiscardZ);
        let b = s.alloc().unwrap();
        s.free_zero(b).unwrap();
        assert_eq!(s.live_qubits(), vec![a]);
    }

    #[test]
    fn capacity() {
        let mut s = State::new(2, 1e-9, None);
        s.alloc().unwrap();
        s.alloc().unwrap();
        assert_eq!(s.alloc().unwrap_err().code, ErrorCode::CapacityExceeded);
    }

    #[test]
    fn projector_control_matches_dense() {
        let mut s = state();
        let a = s.alloc().unwrap();
        let b = s.alloc().unwrap();
        s.gate(&prep_gate('-').unwrap(), &[a], &[]).unwrap();
        let plus = crate::basis::symbol_state('+').to_vec();
        let c = Control { wires: vec![a], kind: ControlKind::Proj(std::sync::Arc::new(vec![plus])) };
        s.gate(&prep_gate('1').unwrap(), &[b], std::slice::from_ref(&c)).unwrap();
        assert!((s.amplitudes()[0].re - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        let mut t = state();
        let a = t.alloc().unwrap();
        let b = t.alloc().unwrap();
        t.gate(&prep_gate('+').unwrap(), &[a], &[]).unwrap();
        t.gate(&prep_gate('1').unwrap(), &[b], &[c]).unwrap();
        assert!((t.amplitudes()[1].re - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }
}
