//! Dense pure states with deferred normalization.
//!
//! Every gate used by the protocols here (Hadamard, Pauli flips, parity
//! projections, Z/X measurements) has real matrix entries, so amplitudes stay
//! real and the generic scalar type carries them directly. Normalization
//! factors are all powers of `1/sqrt(2)`; instead of multiplying them in, the
//! state tracks `scale_log2` with the convention
//!
//! ```text
//! |psi|^2 = (sum of squared amplitudes) / 2^scale_log2
//! ```
//!
//! so probabilities stay inside the scalar field and rational runs are exact.

use crate::pattern::full_mask;
use crate::scalar::Scalar;
use crate::{Error, Result};
use num_traits::Zero;

/// Unnormalized real-amplitude state over `n_qubits` qubits.
///
/// Qubit `q` (0-based) maps to bit `n_qubits - 1 - q` of the basis index, so
/// indices read left-to-right in qubit order.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T = f64> {
    n_qubits: usize,
    amps: Vec<T>,
    scale_log2: u32,
}

impl<T: Scalar> PureState<T> {
    /// The computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(index < 1 << n_qubits);
        let mut amps = vec![T::zero(); 1 << n_qubits];
        amps[index] = T::one();
        PureState { n_qubits, amps, scale_log2: 0 }
    }

    /// GHZ-diagonal basis state `(|pattern> +/- |~pattern>)/sqrt(2)`.
    pub fn ghz(n: u8, pattern: u16, plus: bool) -> Self {
        let dim = 1usize << n;
        let pattern = usize::from(pattern);
        assert!(pattern < dim);
        let mut amps = vec![T::zero(); dim];
        amps[pattern] = T::one();
        let partner = pattern ^ usize::from(full_mask(n));
        amps[partner] = if plus { T::one() } else { T::zero() - T::one() };
        PureState { n_qubits: usize::from(n), amps, scale_log2: 1 }
    }

    /// Equal superposition of all basis states with even (`plus`) or odd
    /// flip-count, the two-weight basis used by phase purification.
    pub fn parity_superposition(n: u8, plus: bool) -> Self {
        let dim = 1usize << n;
        let want = usize::from(!plus);
        let amps = (0..dim)
            .map(|x| if x.count_ones() as usize % 2 == want { T::one() } else { T::zero() })
            .collect();
        PureState { n_qubits: usize::from(n), amps, scale_log2: u32::from(n) - 1 }
    }

    /// Tensor product; `self`'s qubits come first.
    pub fn kron(&self, other: &Self) -> Self {
        let dim_b = other.amps.len();
        let mut amps = vec![T::zero(); self.amps.len() * dim_b];
        for (xa, a) in self.amps.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (xb, b) in other.amps.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                amps[xa * dim_b + xb] = a.clone() * b.clone();
            }
        }
        PureState {
            n_qubits: self.n_qubits + other.n_qubits,
            amps,
            scale_log2: self.scale_log2 + other.scale_log2,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amps
    }

    pub fn scale_log2(&self) -> u32 {
        self.scale_log2
    }

    fn bit(&self, q: usize) -> usize {
        assert!(q < self.n_qubits);
        1 << (self.n_qubits - 1 - q)
    }

    /// Squared norm with the scale folded in; equals the branch probability
    /// for states derived from a normalized input by projective ops.
    pub fn norm_sq(&self) -> T {
        let s = self
            .amps
            .iter()
            .fold(T::zero(), |acc, a| acc + a.clone() * a.clone());
        s * pow2_inv::<T>(self.scale_log2)
    }

    pub fn is_vanishing(&self) -> bool {
        self.amps.iter().all(Zero::is_zero)
    }

    /// Hadamard on qubit `q`, deferred normalization (`scale_log2 += 1`).
    pub fn apply_h(&mut self, q: usize) {
        let bit = self.bit(q);
        for x in 0..self.amps.len() {
            if x & bit == 0 {
                let a0 = self.amps[x].clone();
                let a1 = self.amps[x | bit].clone();
                self.amps[x] = a0.clone() + a1.clone();
                self.amps[x | bit] = a0 - a1;
            }
        }
        self.scale_log2 += 1;
    }

    pub fn apply_x(&mut self, q: usize) {
        let bit = self.bit(q);
        for x in 0..self.amps.len() {
            if x & bit == 0 {
                self.amps.swap(x, x | bit);
            }
        }
    }

    pub fn apply_z(&mut self, q: usize) {
        let bit = self.bit(q);
        for (x, a) in self.amps.iter_mut().enumerate() {
            if x & bit != 0 {
                *a = T::zero() - a.clone();
            }
        }
    }

    /// Projects onto the even (`odd = false`) or odd subspace of qubits
    /// `a, b`; a nondestructive parity check outcome.
    pub fn project_parity(&self, a: usize, b: usize, odd: bool) -> Self {
        let (ba, bb) = (self.bit(a), self.bit(b));
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(x, v)| {
                if ((x & ba != 0) ^ (x & bb != 0)) == odd { v.clone() } else { T::zero() }
            })
            .collect();
        PureState { n_qubits: self.n_qubits, amps, scale_log2: self.scale_log2 }
    }

    /// Z-measurement outcome `v` on qubit `q`; the qubit stays in `|v>`.
    pub fn project_z(&self, q: usize, v: bool) -> Self {
        let bit = self.bit(q);
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(x, a)| if (x & bit != 0) == v { a.clone() } else { T::zero() })
            .collect();
        PureState { n_qubits: self.n_qubits, amps, scale_log2: self.scale_log2 }
    }

    /// X-measurement outcome `+` (`minus = false`) or `-` on qubit `q`. The
    /// projected qubit is reset to `|0>`; the record keeps the outcome.
    pub fn project_x(&self, q: usize, minus: bool) -> Self {
        let bit = self.bit(q);
        let mut amps = vec![T::zero(); self.amps.len()];
        for x in 0..self.amps.len() {
            if x & bit == 0 {
                let a0 = self.amps[x].clone();
                let a1 = self.amps[x | bit].clone();
                amps[x] = if minus { a0 - a1 } else { a0 + a1 };
            }
        }
        PureState { n_qubits: self.n_qubits, amps, scale_log2: self.scale_log2 + 1 }
    }

    /// Fixed basis value of qubit `q` across every nonzero amplitude, if any.
    fn fixed_bit(&self, q: usize) -> Option<bool> {
        let bit = self.bit(q);
        let mut seen: Option<bool> = None;
        for (x, a) in self.amps.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let v = x & bit != 0;
            match seen {
                None => seen = Some(v),
                Some(w) if w != v => return None,
                _ => {}
            }
        }
        seen.or(Some(false))
    }

    /// GHZ-diagonal weight readout on `subset` (0-based qubits, ascending).
    ///
    /// Requires every other qubit to hold a fixed basis value (true after the
    /// protocols measure them). Returns, per canonical pattern index of the
    /// subset, the probability weights on the `+` and `-` GHZ basis states.
    /// The weights are absolute: summed over patterns and signs they equal
    /// this state's `norm_sq`.
    pub fn ghz_weights(&self, subset: &[usize]) -> Result<Vec<(u16, T, T)>> {
        let k = subset.len();
        assert!((2..=self.n_qubits).contains(&k));
        let mut fixed = 0usize;
        for q in 0..self.n_qubits {
            if subset.contains(&q) {
                continue;
            }
            let v = self.fixed_bit(q).ok_or_else(|| {
                Error::Parse(format!("qubit {q} is still entangled with the readout subset"))
            })?;
            if v {
                fixed |= self.bit(q);
            }
        }
        let scale = pow2_inv::<T>(self.scale_log2 + 1);
        let mut out = Vec::with_capacity(1 << (k - 1));
        for m in 0..(1u16 << (k - 1)) {
            let mut x = fixed;
            for (pos, &q) in subset.iter().enumerate() {
                if m >> (k - 1 - pos) & 1 == 1 {
                    x |= self.bit(q);
                }
            }
            let mut xc = fixed;
            for (pos, &q) in subset.iter().enumerate() {
                if m >> (k - 1 - pos) & 1 == 0 {
                    xc |= self.bit(q);
                }
            }
            let (a, b) = (self.amps[x].clone(), self.amps[xc].clone());
            let plus = a.clone() + b.clone();
            let minus = a - b;
            out.push((m, plus.clone() * plus * scale.clone(), minus.clone() * minus * scale.clone()));
        }
        Ok(out)
    }
}

fn pow2_inv<T: Scalar>(e: u32) -> T {
    assert!(e < 63);
    T::from_ratio(1, 1i64 << e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    #[test]
    fn ghz_state_is_normalized() {
        let s: PureState = PureState::ghz(3, 0b010, true);
        assert!((s.norm_sq() - 1.0).abs() < 1e-15);
        let r: PureState<BigRational> = PureState::ghz(3, 0b010, false);
        assert_eq!(r.norm_sq(), BigRational::from_ratio(1, 1));
    }

    #[test]
    fn gates_preserve_norm() {
        let mut s: PureState = PureState::ghz(3, 0b001, true);
        s.apply_h(0);
        s.apply_x(1);
        s.apply_z(2);
        s.apply_h(0);
        assert!((s.norm_sq() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn double_hadamard_is_identity_up_to_scale() {
        let mut s: PureState = PureState::basis(2, 0b10);
        s.apply_h(0);
        s.apply_h(0);
        assert_eq!(s.amplitudes()[0b10], 2.0);
        assert_eq!(s.scale_log2(), 2);
        assert!((s.norm_sq() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn x_measurement_on_plus_state_is_deterministic() {
        let mut s: PureState = PureState::basis(1, 0);
        s.apply_h(0);
        let plus = s.project_x(0, false);
        let minus = s.project_x(0, true);
        assert!((plus.norm_sq() - 1.0).abs() < 1e-15);
        assert!(minus.is_vanishing());
    }

    #[test]
    fn parity_projection_splits_ghz_against_itself() {
        let s: PureState = PureState::ghz(2, 0, true);
        let pair = s.kron(&s);
        let mut even_checked = pair.project_parity(0, 2, false);
        even_checked = even_checked.project_parity(1, 3, false);
        assert!((even_checked.norm_sq() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ghz_weights_recover_the_input_pattern() {
        let s: PureState = PureState::ghz(3, 0b010, true);
        let w = s.ghz_weights(&[0, 1, 2]).unwrap();
        for (m, plus, minus) in w {
            let expect = if m == 0b010 { 1.0 } else { 0.0 };
            assert!((plus - expect).abs() < 1e-15);
            assert!(minus.abs() < 1e-15);
        }
    }

    #[test]
    fn ghz_weights_demand_disentangled_rest() {
        let s: PureState = PureState::ghz(3, 0, true);
        assert!(s.ghz_weights(&[0, 1]).is_err());
        let collapsed = s.project_z(2, false);
        let w = collapsed.ghz_weights(&[0, 1]).unwrap();
        // |000> has weight 1/2 within the GHZ pair basis on qubits {0,1}:
        // the + and - components each carry 1/4.
        assert!((w[0].1 - 0.25).abs() < 1e-15);
        assert!((w[0].2 - 0.25).abs() < 1e-15);
    }
}
