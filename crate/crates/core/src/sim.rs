//! Small dense statevector simulator.
//!
//! Wire `k` is bit `k` of the basis index. A two-qubit matrix applied to
//! `(a, b)` treats wire `a` as the high bit of its 4×4 block.

use num_complex::Complex64;

use crate::gates::{Mat4, C64};

#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on `n` wires.
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut s = StateVector {
            n,
            amps: vec![C64::new(0.0, 0.0); 1 << n],
        };
        s.amps[index] = C64::new(1.0, 0.0);
        s
    }

    pub fn num_wires(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn apply2(&mut self, u: &Mat4, a: usize, b: usize) {
        debug_assert!(a != b && a < self.n && b < self.n);
        let (ma, mb) = (1usize << a, 1usize << b);
        for base in 0..self.amps.len() {
            if base & ma != 0 || base & mb != 0 {
                continue;
            }
            let idx = [base, base | mb, base | ma, base | ma | mb];
            let v = idx.map(|k| self.amps[k]);
            for (r, &k) in idx.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, vc) in v.iter().enumerate() {
                    acc += u[(r, c)] * vc;
                }
                self.amps[k] = acc;
            }
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// A 2ⁿ×2ⁿ unitary stored column-major as statevectors.
#[derive(Clone, Debug)]
pub struct Unitary {
    cols: Vec<StateVector>,
}

impl Unitary {
    pub fn identity(n: usize) -> Self {
        Unitary {
            cols: (0..1 << n).map(|k| StateVector::basis(n, k)).collect(),
        }
    }

    pub fn apply2(&mut self, u: &Mat4, a: usize, b: usize) {
        for col in &mut self.cols {
            col.apply2(u, a, b);
        }
    }

    /// Moves wire `k` to wire `perm[k]`.
    pub fn permute_wires(&mut self, perm: &[usize]) {
        for col in &mut self.cols {
            let mut out = vec![C64::new(0.0, 0.0); col.amps.len()];
            for (idx, amp) in col.amps.iter().enumerate() {
                out[permute_index(idx, perm)] = *amp;
            }
            col.amps = out;
        }
    }

    /// The permutation matrix sending wire `k` to `perm[k]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let mut u = Unitary::identity(perm.len());
        u.permute_wires(perm);
        u
    }

    /// Product `self · other` as linear maps (apply `other` first).
    pub fn compose_after(&self, other: &Unitary) -> Unitary {
        let dim = self.cols.len();
        let n = self.cols[0].n;
        let cols = other
            .cols
            .iter()
            .map(|oc| {
                let mut amps = vec![C64::new(0.0, 0.0); dim];
                for (k, coef) in oc.amps.iter().enumerate() {
                    if coef.norm_sqr() == 0.0 {
                        continue;
                    }
                    for (r, a) in self.cols[k].amps.iter().enumerate() {
                        amps[r] += coef * a;
                    }
                }
                StateVector { n, amps }
            })
            .collect();
        Unitary { cols }
    }

    /// Largest entrywise deviation between `self` and `other` after
    /// aligning global phase.
    pub fn distance_up_to_phase(&self, other: &Unitary) -> f64 {
        let mut overlap = C64::new(0.0, 0.0);
        for (a, b) in self.cols.iter().zip(&other.cols) {
            for (x, y) in a.amps.iter().zip(&b.amps) {
                overlap += x.conj() * y;
            }
        }
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut worst: f64 = 0.0;
        for (a, b) in self.cols.iter().zip(&other.cols) {
            for (x, y) in a.amps.iter().zip(&b.amps) {
                worst = worst.max((x * phase - y).norm());
            }
        }
        worst
    }
}

fn permute_index(idx: usize, perm: &[usize]) -> usize {
    let mut out = 0;
    for (k, &to) in perm.iter().enumerate() {
        if idx >> k & 1 == 1 {
            out |= 1 << to;
        }
    }
    out
}
