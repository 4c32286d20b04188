//! Closed-form branch arithmetic checked against the pure-state circuit
//! oracle: symmetric fidelity grids, fixed random asymmetric ensembles, and
//! an exact-rational subset where agreement must be bit-for-bit.

use ghzpurify::bitflip::class_outcomes;
use ghzpurify::link::{extract_subsystem, link_extracts};
use ghzpurify::oracle::{oracle_bitflip, oracle_extract, oracle_link, oracle_phase};
use ghzpurify::pattern::pattern_count;
use ghzpurify::phaseflip::{phase_identity, phase_residual};
use ghzpurify::{Error, GhzDiagonalEnsemble, ParityClass, PhaseEnsemble, Scalar};
use num::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-12;
const SYMMETRIC_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

fn sym(n: u8, f: f64) -> GhzDiagonalEnsemble {
    GhzDiagonalEnsemble::symmetric(n, f).unwrap()
}

fn random_ensemble(n: u8, rng: &mut ChaCha8Rng) -> GhzDiagonalEnsemble {
    let len = usize::from(pattern_count(n));
    // Strictly positive weights keep every parity class populated.
    let raw: Vec<f64> = (0..len).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    GhzDiagonalEnsemble::new(n, raw.into_iter().map(|w| w / total).collect()).unwrap()
}

fn fixed_random_pairs(n: u8) -> Vec<(GhzDiagonalEnsemble, GhzDiagonalEnsemble)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5 + u64::from(n));
    (0..20).map(|_| (random_ensemble(n, &mut rng), random_ensemble(n, &mut rng))).collect()
}

fn assert_bitflip_matches(rho1: &GhzDiagonalEnsemble, rho2: &GhzDiagonalEnsemble) {
    let closed = class_outcomes(rho1, rho2).unwrap();
    let oracle = oracle_bitflip(rho1, rho2).unwrap();
    assert_eq!(closed.len(), oracle.len(), "branch lists differ in length");
    for ((class, out), branch) in closed.iter().zip(&oracle) {
        assert_eq!(class, &branch.class);
        assert!(
            (out.branch_probability - branch.probability).abs() < TOL,
            "class {} probability: closed {} vs oracle {}",
            class.label(),
            out.branch_probability,
            branch.probability
        );
        for (m, (a, b)) in out.ensemble.weights().iter().zip(branch.ensemble.weights()).enumerate()
        {
            assert!(
                (a - b).abs() < TOL,
                "class {} weight {m}: closed {a} vs oracle {b}",
                class.label()
            );
        }
    }
}

fn assert_extracts_match(rho1: &GhzDiagonalEnsemble, rho2: &GhzDiagonalEnsemble) {
    let n = rho1.n();
    for c in 1..pattern_count(n) {
        let class = ParityClass::from_index(n, c).unwrap();
        for side in [class.even_photons(), class.odd_photons()] {
            if side.len() < 2 {
                continue;
            }
            let closed = extract_subsystem(rho1, rho2, &class, &side).unwrap();
            let (probability, ensemble) = oracle_extract(rho1, rho2, &class, &side).unwrap();
            assert!((closed.branch_probability - probability).abs() < TOL);
            for (a, b) in closed.ensemble.weights().iter().zip(ensemble.weights()) {
                assert!(
                    (a - b).abs() < TOL,
                    "class {} keep {side:?}: closed {a} vs oracle {b}",
                    class.label()
                );
            }
        }
    }
}

#[test]
fn bitflip_branches_match_on_symmetric_grids() {
    for n in [3u8, 4] {
        for f1 in SYMMETRIC_GRID {
            for f2 in SYMMETRIC_GRID {
                assert_bitflip_matches(&sym(n, f1), &sym(n, f2));
            }
        }
    }
}

#[test]
fn bitflip_branches_match_on_fixed_random_ensembles() {
    for n in [3u8, 4] {
        for (a, b) in fixed_random_pairs(n) {
            assert_bitflip_matches(&a, &b);
        }
    }
}

#[test]
fn subsystem_extracts_match_the_oracle() {
    for n in [3u8, 4] {
        for f1 in SYMMETRIC_GRID {
            for f2 in SYMMETRIC_GRID {
                assert_extracts_match(&sym(n, f1), &sym(n, f2));
            }
        }
        for (a, b) in fixed_random_pairs(n).into_iter().take(5) {
            assert_extracts_match(&a, &b);
        }
    }
}

#[test]
fn linked_triples_match_the_oracle() {
    let class1 = ParityClass::from_index(3, 1).unwrap();
    let class2 = ParityClass::from_index(3, 2).unwrap();
    let mut pairs = fixed_random_pairs(3);
    pairs.truncate(5);
    for f1 in SYMMETRIC_GRID {
        for f2 in SYMMETRIC_GRID {
            pairs.push((sym(3, f1), sym(3, f2)));
        }
    }
    for (a, b) in pairs {
        // Photon 3 is odd under class 001, photon 2 under 010; both extracts
        // keep party 1, so fusing on it regenerates a three-photon system.
        let e1 = extract_subsystem(&a, &b, &class1, &[1, 2]).unwrap();
        let e2 = extract_subsystem(&a, &b, &class2, &[1, 3]).unwrap();
        let (parties, fused) = link_extracts(&e1, &e2).unwrap();
        assert_eq!(parties, vec![1, 2, 3]);
        assert!((fused.branch_probability - 1.0).abs() < TOL, "linking is deterministic");

        let (_, o1) = oracle_extract(&a, &b, &class1, &[1, 2]).unwrap();
        let (_, o2) = oracle_extract(&a, &b, &class2, &[1, 3]).unwrap();
        let reference = oracle_link(&o1, &o2, 0, 0).unwrap();
        for (x, y) in fused.ensemble.weights().iter().zip(reference.weights()) {
            assert!((x - y).abs() < TOL, "fused weight: closed {x} vs oracle {y}");
        }
    }
}

#[test]
fn phase_branches_match_the_oracle() {
    let grid = [0.0, 0.25, 0.4, 0.6, 0.8, 1.0];
    for n in [2u8, 3, 4, 5] {
        for p1 in grid {
            for p2 in grid {
                let a = PhaseEnsemble::new(n, p1).unwrap();
                let b = PhaseEnsemble::new(n, p2).unwrap();
                let [(y_id, id), (y_cross, cross)] = oracle_phase(&a, &b).unwrap();
                match phase_identity(&a, &b) {
                    Ok(out) => {
                        assert!((out.branch_probability - y_id).abs() < TOL);
                        assert!((out.ensemble.p0() - id.p0()).abs() < TOL);
                    }
                    Err(Error::DegenerateBranch) => assert!(y_id.abs() < TOL),
                    Err(e) => panic!("unexpected error {e}"),
                }
                match phase_residual(&a, &b) {
                    Ok(out) => {
                        assert!((out.branch_probability - y_cross).abs() < TOL);
                        assert!((out.ensemble.p0() - cross.p0()).abs() < TOL);
                    }
                    Err(Error::DegenerateBranch) => assert!(y_cross.abs() < TOL),
                    Err(e) => panic!("unexpected error {e}"),
                }
            }
        }
    }
}

#[test]
fn exact_rational_pairs_agree_bit_for_bit() {
    let r = |num, den| BigRational::from_ratio(num, den);
    let pairs = [
        (
            vec![r(3, 4), r(1, 12), r(1, 12), r(1, 12)],
            vec![r(1, 2), r(1, 6), r(1, 6), r(1, 6)],
        ),
        (
            vec![r(2, 5), r(3, 10), r(1, 5), r(1, 10)],
            vec![r(1, 2), r(1, 4), r(1, 8), r(1, 8)],
        ),
    ];
    for (w1, w2) in pairs {
        let a = GhzDiagonalEnsemble::new(3, w1).unwrap();
        let b = GhzDiagonalEnsemble::new(3, w2).unwrap();
        let closed = class_outcomes(&a, &b).unwrap();
        let oracle = oracle_bitflip(&a, &b).unwrap();
        assert_eq!(closed.len(), oracle.len());
        for ((class, out), branch) in closed.iter().zip(&oracle) {
            assert_eq!(class, &branch.class);
            assert_eq!(out.branch_probability, branch.probability);
            assert_eq!(out.ensemble.weights(), branch.ensemble.weights());
        }
        for c in 1..pattern_count(3) {
            let class = ParityClass::from_index(3, c).unwrap();
            for side in [class.even_photons(), class.odd_photons()] {
                if side.len() < 2 {
                    continue;
                }
                let closed = extract_subsystem(&a, &b, &class, &side).unwrap();
                let (probability, ensemble) = oracle_extract(&a, &b, &class, &side).unwrap();
                assert_eq!(closed.branch_probability, probability);
                assert_eq!(closed.ensemble.weights(), ensemble.weights());
            }
        }
    }
}
