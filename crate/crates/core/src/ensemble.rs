//! GHZ-diagonal ensembles: dense weight vectors over canonical error patterns.

use crate::pattern::{check_photon_count, pattern_count, ErrorPattern};
use crate::scalar::Scalar;
use crate::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

/// Probability distribution over the `2^(n-1)` canonical error patterns of an
/// `n`-photon GHZ-diagonal state.
///
/// The weight at index 0 is the fidelity to the error-free state. A
/// normalized ensemble sums to 1; unnormalized ensembles carry intermediate
/// branch weights whose total equals the branch probability.
#[derive(Debug, Clone, PartialEq)]
pub struct GhzDiagonalEnsemble<T = f64> {
    n: u8,
    weights: Vec<T>,
    normalized: bool,
}

impl<T: Scalar> GhzDiagonalEnsemble<T> {
    /// Normalized ensemble from a dense weight vector indexed by canonical
    /// pattern index.
    pub fn new(n: u8, weights: Vec<T>) -> Result<Self> {
        let e = Self::new_unnormalized(n, weights)?;
        let total = e.total();
        if !T::close(&total, &T::one()) {
            return Err(Error::NotNormalized { got: total.to_f64() });
        }
        Ok(GhzDiagonalEnsemble { normalized: true, ..e })
    }

    /// Unnormalized ensemble (weights only need to be nonnegative).
    pub fn new_unnormalized(n: u8, weights: Vec<T>) -> Result<Self> {
        check_photon_count(n)?;
        let expected = usize::from(pattern_count(n));
        if weights.len() != expected {
            return Err(Error::WeightLength { got: weights.len(), expected });
        }
        if let Some(i) = weights.iter().position(|w| w < &T::zero()) {
            return Err(Error::NegativeWeight(i));
        }
        Ok(GhzDiagonalEnsemble { n, weights, normalized: false })
    }

    /// Symmetric ensemble: weight `f0` on the error-free pattern and the
    /// remainder spread evenly over the other patterns.
    pub fn symmetric(n: u8, f0: T) -> Result<Self> {
        check_photon_count(n)?;
        if f0 < T::zero() || f0 > T::one() {
            return Err(Error::ProbabilityRange(f0.to_f64()));
        }
        let count = usize::from(pattern_count(n));
        let rest = (T::one() - f0.clone()) / T::from_ratio(count as i64 - 1, 1);
        let mut weights = vec![rest; count];
        weights[0] = f0;
        Ok(GhzDiagonalEnsemble { n, weights, normalized: true })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, index: u16) -> &T {
        &self.weights[usize::from(index)]
    }

    /// Weight of the error-free pattern.
    pub fn fidelity(&self) -> &T {
        &self.weights[0]
    }

    pub fn total(&self) -> T {
        self.weights.iter().fold(T::zero(), |acc, w| acc + w.clone())
    }

    /// Rescales to total weight 1. Errors when the total is zero.
    pub fn normalize(&self) -> Result<(Self, T)> {
        let total = self.total();
        if total.is_zero() {
            return Err(Error::DegenerateBranch);
        }
        let weights = self.weights.iter().map(|w| w.clone() / total.clone()).collect();
        Ok((GhzDiagonalEnsemble { n: self.n, weights, normalized: true }, total))
    }

    /// Applies bit flips to the listed photons: weights are permuted by
    /// `pattern -> canonicalize(pattern XOR flips)`. `flips` is an `n`-bit
    /// mask in photon order and need not be canonical.
    pub fn relabel(&self, flips: u16) -> Result<Self> {
        let eff = ErrorPattern::canonicalize(self.n, flips)?.index();
        let mut weights = vec![T::zero(); self.weights.len()];
        for (m, w) in self.weights.iter().enumerate() {
            weights[m ^ usize::from(eff)] = w.clone();
        }
        Ok(GhzDiagonalEnsemble { n: self.n, weights, normalized: self.normalized })
    }

    /// Relabels so the heaviest pattern moves to index 0 and returns the flip
    /// mask used. Ties pick the smallest canonical index, so an ensemble that
    /// is already heaviest at 0 returns the empty mask.
    pub fn argmax_to_zero(&self) -> (Self, ErrorPattern) {
        let mut best = 0usize;
        for (m, w) in self.weights.iter().enumerate() {
            if w > &self.weights[best] {
                best = m;
            }
        }
        let mask = ErrorPattern::from_index(self.n, best as u16).expect("index in range");
        let relabeled = self.relabel(mask.bits()).expect("canonical mask");
        (relabeled, mask)
    }

    /// Converts the weight arithmetic, e.g. `f64` to exact rationals.
    pub fn map_scalar<S: Scalar>(&self) -> GhzDiagonalEnsemble<S> {
        GhzDiagonalEnsemble {
            n: self.n,
            weights: self.weights.iter().map(|w| S::from_f64(w.to_f64())).collect(),
            normalized: self.normalized,
        }
    }
}

/// One parity branch of a purification step: the probability of the outcome
/// and the normalized ensemble conditioned on it.
#[derive(Debug, Clone, PartialEq)]
pub struct PurifyOutcome<T = f64> {
    pub branch_probability: T,
    pub ensemble: GhzDiagonalEnsemble<T>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleRepr {
    n: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    symmetric: Option<bool>,
}

impl Serialize for GhzDiagonalEnsemble<f64> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = BTreeMap::new();
        for (m, w) in self.weights.iter().enumerate() {
            if *w != 0.0 {
                let p = ErrorPattern::from_index(self.n, m as u16).expect("index in range");
                map.insert(p.label(), *w);
            }
        }
        EnsembleRepr { n: self.n, weights: Some(map), f0: None, symmetric: None }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GhzDiagonalEnsemble<f64> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = EnsembleRepr::deserialize(deserializer)?;
        GhzDiagonalEnsemble::from_repr(repr).map_err(D::Error::custom)
    }
}

impl GhzDiagonalEnsemble<f64> {
    fn from_repr(repr: EnsembleRepr) -> Result<Self> {
        match (repr.weights, repr.f0, repr.symmetric) {
            (Some(map), None, None) => {
                check_photon_count(repr.n)?;
                let mut weights = vec![0.0; usize::from(pattern_count(repr.n))];
                for (label, w) in map {
                    let p = ErrorPattern::parse_label(&label)?;
                    if p.n() != repr.n {
                        return Err(Error::Parse(format!(
                            "pattern `{label}` has {} bits, ensemble has n = {}",
                            p.n(),
                            repr.n
                        )));
                    }
                    weights[usize::from(p.index())] = w;
                }
                let raw = Self::new_unnormalized(repr.n, weights)?;
                // Inputs may carry serialization rounding; renormalize small
                // drift, reject anything beyond 1e-9.
                let total = raw.total();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::NotNormalized { got: total });
                }
                let (norm, _) = raw.normalize()?;
                Ok(norm)
            }
            (None, Some(f0), Some(true)) => Self::symmetric(repr.n, f0),
            _ => Err(Error::Parse(
                "ensemble needs either `weights` or `f0` with `symmetric: true`".into(),
            )),
        }
    }

    /// Parses the JSON schema: `{"n": 3, "weights": {"010": 0.9, ...}}` or
    /// `{"n": 3, "f0": 0.8, "symmetric": true}`. Missing patterns weigh zero.
    pub fn from_json(s: &str) -> Result<Self> {
        // Deserialize the repr first so validation errors keep their variants
        // instead of being flattened through serde's custom-error path.
        let repr: EnsembleRepr =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_repr(repr)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }
}
