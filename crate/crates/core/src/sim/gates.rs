//! Gates, controls and their action on a small target vector.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::basis::{family_symbols, symbol_state, Factor, Family, TOL};
use crate::linalg::{inner, Matrix, C64, ONE, ZERO};

#[derive(Clone)]
pub enum Gate {
    Dense(Arc<Matrix>),
    /// `U = I + Σ_k (|to_k⟩ - |from_k⟩)⟨from_k|`: maps each `from_k` to
    /// `to_k` and fixes the orthogonal complement of their common span.
    Subspace { from: Arc<Vec<Vec<C64>>>, to: Arc<Vec<Vec<C64>>> },
    /// `std[n] >> fourier[n]`, or its inverse.
    Qft { n: usize, inverse: bool, plus: Arc<dyn Fft<f64>>, minus: Arc<dyn Fft<f64>> },
    /// Basis-state permutation: the amplitude at `i` moves to `map[i]`.
    Perm { map: Arc<Vec<usize>>, inv: Arc<Vec<usize>>, label: Option<Arc<str>> },
    /// Sign flip on the marked basis states.
    PhaseMask { mask: Arc<Vec<bool>>, label: Option<Arc<str>> },
    /// `e^{iθ}` on zero targets; observable only under controls.
    GlobalPhase(f64),
}

impl fmt::Debug for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Dense(m) => write!(f, "Dense({}x{})", m.dim, m.dim),
            Gate::Subspace { from, .. } => write!(f, "Subspace({} vectors)", from.len()),
            Gate::Qft { n, inverse, .. } => write!(f, "Qft(n={n}, inverse={inverse})"),
            Gate::Perm { map, label, .. } => write!(f, "Perm({}, {label:?})", map.len()),
            Gate::PhaseMask { mask, label } => write!(f, "PhaseMask({}, {label:?})", mask.len()),
            Gate::GlobalPhase(t) => write!(f, "GlobalPhase({t})"),
        }
    }
}

impl Gate {
    pub fn qft(n: usize, inverse: bool) -> Gate {
        let mut planner = FftPlanner::new();
        let len = 1usize << n;
        Gate::Qft { n, inverse, plus: planner.plan_fft_inverse(len), minus: planner.plan_fft_forward(len) }
    }

    pub fn perm(map: Vec<usize>, label: Option<Arc<str>>) -> Gate {
        let mut inv = vec![0; map.len()];
        for (i, &j) in map.iter().enumerate() {
            inv[j] = i;
        }
        Gate::Perm { map: Arc::new(map), inv: Arc::new(inv), label }
    }

    pub fn subspace(from: Vec<Vec<C64>>, to: Vec<Vec<C64>>) -> Gate {
        Gate::Subspace { from: Arc::new(from), to: Arc::new(to) }
    }

    /// Number of target qubits.
    pub fn qubits(&self) -> usize {
        let log = |n: usize| n.trailing_zeros() as usize;
        match self {
            Gate::Dense(m) => log(m.dim),
            Gate::Subspace { from, .. } => from.first().map_or(0, |v| log(v.len())),
            Gate::Qft { n, .. } => *n,
            Gate::Perm { map, .. } => log(map.len()),
            Gate::PhaseMask { mask, .. } => log(mask.len()),
            Gate::GlobalPhase(_) => 0,
        }
    }

    pub fn label(&self) -> Option<&Arc<str>> {
        match self {
            Gate::Perm { label, .. } | Gate::PhaseMask { label, .. } => label.as_ref(),
            _ => None,
        }
    }

    pub fn adjoint(&self) -> Gate {
        match self {
            Gate::Dense(m) => Gate::Dense(Arc::new(m.adjoint())),
            Gate::Subspace { from, to } => Gate::Subspace { from: to.clone(), to: from.clone() },
            Gate::Qft { n, inverse, plus, minus } => {
                Gate::Qft { n: *n, inverse: !inverse, plus: plus.clone(), minus: minus.clone() }
            }
            Gate::Perm { map, inv, label } => Gate::Perm { map: inv.clone(), inv: map.clone(), label: label.clone() },
            Gate::PhaseMask { .. } => self.clone(),
            Gate::GlobalPhase(t) => Gate::GlobalPhase(-t),
        }
    }

    /// Applies the gate to a vector over its targets, most significant
    /// target first.
    pub fn apply_vec(&self, v: &mut [C64], scratch: &mut Vec<C64>) {
        match self {
            Gate::Dense(m) => {
                scratch.clear();
                scratch.extend_from_slice(v);
                for (r, out) in v.iter_mut().enumerate() {
                    let row = &m.data[r * m.dim..(r + 1) * m.dim];
                    *out = row.iter().zip(scratch.iter()).map(|(a, b)| a * b).sum();
                }
            }
            Gate::Subspace { from, to } => {
                scratch.clear();
                scratch.extend_from_slice(v);
                for (f, t) in from.iter().zip(to.iter()) {
                    let c = inner(f, scratch);
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    for ((x, a), b) in v.iter_mut().zip(t).zip(f) {
                        *x += c * (a - b);
                    }
                }
            }
            Gate::Qft { n, inverse, plus, minus } => {
                let fft = if *inverse { minus } else { plus };
                fft.process(v);
                let s = 1.0 / ((1usize << n) as f64).sqrt();
                v.iter_mut().for_each(|x| *x *= s);
            }
            Gate::Perm { map, .. } => {
                scratch.clear();
                scratch.extend_from_slice(v);
                for (i, &j) in map.iter().enumerate() {
                    v[j] = scratch[i];
                }
            }
            Gate::PhaseMask { mask, .. } => {
                for (x, m) in v.iter_mut().zip(mask.iter()) {
                    if *m {
                        *x = -*x;
                    }
                }
            }
            Gate::GlobalPhase(t) => {
                let p = C64::from_polar(1.0, *t);
                v.iter_mut().for_each(|x| *x *= p);
            }
        }
    }

    /// Dense matrix of the gate, built column by column.
    pub fn matrix(&self) -> Matrix {
        let dim = 1usize << self.qubits();
        let mut m = Matrix::zeros(dim);
        let mut scratch = Vec::new();
        for c in 0..dim {
            let mut v = vec![ZERO; dim];
            v[c] = ONE;
            self.apply_vec(&mut v, &mut scratch);
            for (r, x) in v.into_iter().enumerate() {
                m.set(r, c, x);
            }
        }
        m
    }
}

/// Restriction of an operation to a subspace of some control qubits.
#[derive(Debug, Clone)]
pub enum ControlKind {
    /// Allowed computational basis values of the control wires.
    Comp(Arc<Vec<bool>>),
    /// Orthonormal vectors spanning the control subspace.
    Proj(Arc<Vec<Vec<C64>>>),
}

#[derive(Debug, Clone)]
pub struct Control {
    pub wires: Vec<usize>,
    pub kind: ControlKind,
}

impl Control {
    pub fn remap(&self, map: impl Fn(usize) -> usize) -> Control {
        Control { wires: self.wires.iter().map(|w| map(*w)).collect(), kind: self.kind.clone() }
    }
}

fn one_qubit(cols: [[C64; 2]; 2]) -> Gate {
    let mut m = Matrix::zeros(2);
    for (c, col) in cols.iter().enumerate() {
        for (r, x) in col.iter().enumerate() {
            m.set(r, c, *x);
        }
    }
    Gate::Dense(Arc::new(m))
}

/// Unitary taking `|0⟩` to the state of `symbol`.
pub fn prep_gate(symbol: char) -> Option<Gate> {
    if symbol == '0' {
        return None;
    }
    let s = symbol_state(symbol);
    Some(one_qubit([s, [-s[1].conj(), s[0].conj()]]))
}

/// Computational-basis index of a vector that is a phased basis state.
fn computational_index(v: &[C64]) -> Option<usize> {
    let k = v.iter().position(|x| x.norm() > 0.5)?;
    ((v[k].norm() - 1.0).abs() < TOL && v.iter().enumerate().all(|(i, x)| i == k || x.norm() < TOL)).then_some(k)
}

/// Gate mapping the factor's vectors onto `std` vectors in order, phases
/// included, or `None` when that is the identity. Requires a full-span
/// factor.
pub fn to_std_gate(f: &Factor) -> Option<Gate> {
    Some(match f {
        Factor::Builtin(Family::Std) => return None,
        Factor::Builtin(fam) => {
            let [a, b] = family_symbols(*fam);
            one_qubit([symbol_state(a), symbol_state(b)]).adjoint()
        }
        Factor::Fourier(0) => return None,
        Factor::Fourier(n) => Gate::qft(*n, true),
        Factor::Literal { vectors, .. } => {
            let dim = vectors.len();
            let std = (0..dim)
                .map(|k| {
                    let mut e = vec![ZERO; dim];
                    e[k] = ONE;
                    e
                })
                .collect();
            if vectors.iter().all(|v| computational_index(v).is_some()) {
                let mut map = vec![0; dim];
                let mut phases = Vec::with_capacity(dim);
                for (k, v) in vectors.iter().enumerate() {
                    let i = computational_index(v).unwrap();
                    map[i] = k;
                    phases.push(v[i]);
                }
                if phases.iter().all(|p| (p - ONE).norm() < TOL) {
                    if map.iter().enumerate().all(|(i, j)| i == *j) {
                        return None;
                    }
                    return Some(Gate::perm(map, None));
                }
            }
            Gate::subspace(vectors.clone(), std)
        }
    })
}

/// Control restricting to the span of a non-full factor.
pub fn factor_control(f: &Factor, wires: Vec<usize>) -> Control {
    let vectors = f.vectors();
    let comp: Option<Vec<usize>> = vectors.iter().map(|v| computational_index(v)).collect();
    let kind = match comp {
        Some(idx) => {
            let mut allowed = vec![false; 1 << f.qubits()];
            idx.into_iter().for_each(|i| allowed[i] = true);
            ControlKind::Comp(Arc::new(allowed))
        }
        None => ControlKind::Proj(Arc::new(vectors)),
    };
    Control { wires, kind }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qft_matches_fourier_vectors() {
        let g = Gate::qft(2, false).matrix();
        let f = crate::basis::fourier_vectors(2);
        for (c, col) in f.iter().enumerate() {
            for (r, x) in col.iter().enumerate() {
                assert!((g.get(r, c) - x).norm() < 1e-12);
            }
        }
        let back = Gate::qft(2, false).adjoint().matrix().mul(&g);
        assert!(back.max_abs_diff(&Matrix::identity(4)) < 1e-12);
    }

    #[test]
    fn prep_gates_send_zero_to_symbol() {
        for s in ['1', '+', '-', 'i', 'j'] {
            let m = prep_gate(s).unwrap().matrix();
            let st = symbol_state(s);
            assert!((m.get(0, 0) - st[0]).norm() < 1e-12 && (m.get(1, 0) - st[1]).norm() < 1e-12);
            assert!(m.unitarity_error() < 1e-12);
        }
    }

    #[test]
    fn to_std_maps_vectors_in_order() {
        let f = Factor::Builtin(Family::Ij);
        let m = to_std_gate(&f).unwrap().matrix();
        let v = m.apply(&symbol_state('j'));
        assert!((v[1] - ONE).norm() < 1e-12);
    }
}
