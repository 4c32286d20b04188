//! Canonical bit-flip error patterns for N-photon GHZ-diagonal states.
//!
//! A basis state of the GHZ-diagonal family is `(|b> + |~b>)/sqrt(2)` where
//! `b` is an N-bit string marking which photons carry a flip relative to the
//! leading photon. Since `b` and its bitwise complement `~b` describe the same
//! state, every pattern is stored in canonical form: the leading bit
//! (photon 1) is 0. The integer index of a canonical pattern is the value of
//! the remaining `N-1` bits, so indices run over `0..2^(N-1)` and index 0 is
//! the error-free state.
//!
//! Photon `i` (1-based) maps to bit position `n - i`, so a pattern prints
//! left-to-right in photon order. For n = 3, a flip on photon 1 canonicalizes
//! as `100 -> 011` (index 3), a flip on photon 2 stays `010` (index 2), and a
//! flip on photon 3 stays `001` (index 1).

use crate::{Error, Result, MAX_PHOTONS};

/// Canonical bit-flip pattern of an `n`-photon GHZ-diagonal basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ErrorPattern {
    n: u8,
    bits: u16,
}

impl ErrorPattern {
    /// Canonicalizes a raw `n`-bit pattern: complements it when the leading
    /// bit (photon 1) is set.
    pub fn canonicalize(n: u8, bits: u16) -> Result<Self> {
        check_photon_count(n)?;
        if u32::from(bits) >= 1u32 << n {
            return Err(Error::PatternWidth { bits, n });
        }
        let leading = 1u16 << (n - 1);
        let bits = if bits & leading != 0 { bits ^ full_mask(n) } else { bits };
        Ok(ErrorPattern { n, bits })
    }

    /// Pattern with canonical index `index` (the value of the trailing
    /// `n-1` bits).
    pub fn from_index(n: u8, index: u16) -> Result<Self> {
        check_photon_count(n)?;
        if index >= pattern_count(n) {
            return Err(Error::PatternIndex { index, n });
        }
        Ok(ErrorPattern { n, bits: index })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    /// Canonical bits; the leading bit is always 0, so this equals the index.
    pub fn bits(&self) -> u16 {
        self.bits
    }

    pub fn index(&self) -> u16 {
        self.bits
    }

    /// The non-canonical partner pattern (bitwise complement over `n` bits).
    pub fn complement_bits(&self) -> u16 {
        self.bits ^ full_mask(self.n)
    }

    /// True when photon `i` (1-based) carries a flip in the canonical form.
    pub fn flip_on(&self, photon: u8) -> bool {
        debug_assert!(photon >= 1 && photon <= self.n);
        self.bits >> (self.n - photon) & 1 == 1
    }

    /// Bit string in photon order, e.g. `011` for n = 3, index 3.
    pub fn label(&self) -> String {
        (1..=self.n)
            .map(|i| if self.flip_on(i) { '1' } else { '0' })
            .collect()
    }

    /// Parses a label produced by [`ErrorPattern::label`]; the string must
    /// already be canonical (leading `0`).
    pub fn parse_label(s: &str) -> Result<Self> {
        let n = s.len() as u8;
        check_photon_count(n)?;
        let mut bits = 0u16;
        for c in s.chars() {
            bits <<= 1;
            match c {
                '0' => {}
                '1' => bits |= 1,
                _ => return Err(Error::Parse(format!("bad pattern character `{c}` in `{s}`"))),
            }
        }
        if bits & (1 << (n - 1)) != 0 {
            return Err(Error::Parse(format!(
                "pattern `{s}` is not canonical (leading bit must be 0)"
            )));
        }
        Ok(ErrorPattern { n, bits })
    }
}

/// Parity outcome class of combining two patterns: the canonical form of
/// their XOR. Photons where the two patterns agree read even, the others odd;
/// the complement pair of outcomes is one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParityClass {
    pattern: ErrorPattern,
}

impl ParityClass {
    pub fn of(e: &ErrorPattern, f: &ErrorPattern) -> Result<Self> {
        if e.n != f.n {
            return Err(Error::PhotonMismatch(e.n, f.n));
        }
        // Both inputs are canonical (leading bit 0), so the XOR is too.
        Ok(ParityClass { pattern: ErrorPattern { n: e.n, bits: e.bits ^ f.bits } })
    }

    pub fn from_index(n: u8, index: u16) -> Result<Self> {
        Ok(ParityClass { pattern: ErrorPattern::from_index(n, index)? })
    }

    pub fn n(&self) -> u8 {
        self.pattern.n
    }

    pub fn index(&self) -> u16 {
        self.pattern.index()
    }

    pub fn pattern(&self) -> &ErrorPattern {
        &self.pattern
    }

    /// The all-even class produced by identical patterns.
    pub fn is_identity(&self) -> bool {
        self.pattern.bits == 0
    }

    /// Even/odd outcome label of the canonical representative, e.g. `eoe`
    /// for n = 3, index 2 (the complementary outcome `oeo` is the same class).
    pub fn label(&self) -> String {
        (1..=self.pattern.n)
            .map(|i| if self.pattern.flip_on(i) { 'o' } else { 'e' })
            .collect()
    }

    /// Photons (1-based) where the representative outcome is even.
    pub fn even_photons(&self) -> Vec<u8> {
        (1..=self.pattern.n).filter(|&i| !self.pattern.flip_on(i)).collect()
    }

    /// Photons (1-based) where the representative outcome is odd.
    pub fn odd_photons(&self) -> Vec<u8> {
        (1..=self.pattern.n).filter(|&i| self.pattern.flip_on(i)).collect()
    }
}

/// Number of canonical patterns (and parity classes) for `n` photons.
pub fn pattern_count(n: u8) -> u16 {
    1 << (n - 1)
}

pub(crate) fn full_mask(n: u8) -> u16 {
    ((1u32 << n) - 1) as u16
}

pub(crate) fn check_photon_count(n: u8) -> Result<()> {
    if !(2..=MAX_PHOTONS).contains(&n) {
        return Err(Error::PhotonCount(n, MAX_PHOTONS));
    }
    Ok(())
}

/// Restricts a canonical pattern to the 1-based photons in `keep` (ascending)
/// and canonicalizes the result over the smaller system.
pub fn restrict(pattern: &ErrorPattern, keep: &[u8]) -> Result<ErrorPattern> {
    let m = keep.len() as u8;
    let mut bits = 0u16;
    for &photon in keep {
        if photon < 1 || photon > pattern.n() {
            return Err(Error::BadKeepIndex { n: pattern.n() });
        }
        bits = bits << 1 | u16::from(pattern.flip_on(photon));
    }
    ErrorPattern::canonicalize(m, bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_complements_leading_one() {
        let p = ErrorPattern::canonicalize(3, 0b100).unwrap();
        assert_eq!(p.index(), 3);
        assert_eq!(p.label(), "011");
        let q = ErrorPattern::canonicalize(3, 0b010).unwrap();
        assert_eq!(q.index(), 2);
        let r = ErrorPattern::canonicalize(3, 0b001).unwrap();
        assert_eq!(r.index(), 1);
    }

    #[test]
    fn canonicalize_is_idempotent_and_complement_invariant() {
        for n in 2..=6u8 {
            for bits in 0..(1u16 << n) {
                let p = ErrorPattern::canonicalize(n, bits).unwrap();
                let q = ErrorPattern::canonicalize(n, p.bits()).unwrap();
                assert_eq!(p, q);
                let c = ErrorPattern::canonicalize(n, bits ^ full_mask(n)).unwrap();
                assert_eq!(p, c, "pattern and complement share a canonical form");
            }
        }
    }

    #[test]
    fn width_checks() {
        assert!(matches!(
            ErrorPattern::canonicalize(3, 0b1000),
            Err(Error::PatternWidth { .. })
        ));
        assert!(matches!(ErrorPattern::from_index(3, 4), Err(Error::PatternIndex { .. })));
        assert!(matches!(ErrorPattern::canonicalize(1, 0), Err(Error::PhotonCount(1, _))));
        assert!(matches!(ErrorPattern::canonicalize(13, 0), Err(Error::PhotonCount(13, _))));
    }

    #[test]
    fn parity_class_of_identical_patterns_is_identity() {
        let e = ErrorPattern::from_index(4, 5).unwrap();
        let c = ParityClass::of(&e, &e).unwrap();
        assert!(c.is_identity());
        assert_eq!(c.label(), "eeee");
    }

    #[test]
    fn parity_class_label_matches_xor() {
        let e = ErrorPattern::from_index(3, 0).unwrap();
        let f = ErrorPattern::from_index(3, 2).unwrap();
        let c = ParityClass::of(&e, &f).unwrap();
        assert_eq!(c.index(), 2);
        assert_eq!(c.label(), "eoe");
        assert_eq!(c.even_photons(), vec![1, 3]);
        assert_eq!(c.odd_photons(), vec![2]);
    }

    #[test]
    fn parity_class_is_symmetric_and_complement_safe() {
        for a in 0..8u16 {
            for b in 0..8u16 {
                let e = ErrorPattern::from_index(4, a).unwrap();
                let f = ErrorPattern::from_index(4, b).unwrap();
                let c1 = ParityClass::of(&e, &f).unwrap();
                let c2 = ParityClass::of(&f, &e).unwrap();
                assert_eq!(c1, c2);
            }
        }
    }

    #[test]
    fn labels_roundtrip() {
        let p = ErrorPattern::from_index(4, 5).unwrap();
        assert_eq!(p.label(), "0101");
        assert_eq!(ErrorPattern::parse_label("0101").unwrap(), p);
        assert!(ErrorPattern::parse_label("1101").is_err());
        assert!(ErrorPattern::parse_label("01x1").is_err());
    }

    #[test]
    fn restriction_canonicalizes() {
        // 0110 restricted to photons {1, 2} is 01; to {2, 3} is 11 -> 00.
        let p = ErrorPattern::canonicalize(4, 0b0110).unwrap();
        assert_eq!(restrict(&p, &[1, 2]).unwrap().label(), "01");
        assert_eq!(restrict(&p, &[2, 3]).unwrap().label(), "00");
        assert_eq!(restrict(&p, &[1, 4]).unwrap().label(), "00");
        assert!(restrict(&p, &[0, 2]).is_err());
    }
}
