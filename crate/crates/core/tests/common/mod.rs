//! Shared test helpers: an independent branch-enumeration oracle for the
//! two-time correlator, and random-state generators.

use lgi_core::{ComplexMatrix, DensityOperator, DichotomousObservable, UpdateRule};
use num_complex::Complex64 as C64;
use rand::Rng;

/// Correlator computed the slow way: enumerate every first-measurement
/// branch, normalize it, evolve it, and accumulate q_i * q_j times the joint
/// probability. This never touches the unnormalized trace formula the
/// engine uses, so agreement is a genuine cross-check.
pub fn oracle_correlator(
    rho0: &DensityOperator,
    u_first: &ComplexMatrix,
    u_second: &ComplexMatrix,
    obs: &DichotomousObservable,
    rule: UpdateRule,
) -> f64 {
    let rho1 = rho0
        .matrix()
        .conjugate_by(u_first)
        .expect("consistent dims");
    let first_set = projector_set(obs, rule);
    let second_set = projector_set(obs, rule);

    let mut acc = 0.0;
    for (p_first, q_first) in &first_set {
        let branch = p_first
            .mul(&rho1)
            .unwrap()
            .mul(p_first)
            .unwrap();
        let p1 = branch.trace().re;
        if p1 <= 0.0 {
            continue;
        }
        // normalize, evolve, measure again
        let normalized = branch.scale(C64::new(1.0 / p1, 0.0));
        let rho2 = normalized.conjugate_by(u_second).unwrap();
        for (p_second, q_second) in &second_set {
            let p2 = p_second
                .mul(&rho2)
                .unwrap()
                .mul(p_second)
                .unwrap()
                .trace()
                .re;
            acc += q_first * q_second * p1 * p2;
        }
    }
    acc
}

fn projector_set(obs: &DichotomousObservable, rule: UpdateRule) -> Vec<(ComplexMatrix, f64)> {
    match rule {
        UpdateRule::Luders => [-1i8, 1]
            .iter()
            .map(|&o| {
                (
                    obs.eigenspace_projector(o).unwrap().clone(),
                    f64::from(o),
                )
            })
            .collect(),
        UpdateRule::VonNeumann => (0..obs.dim())
            .map(|k| {
                (
                    obs.rank1_projector(k).unwrap(),
                    f64::from(obs.q_values()[k]),
                )
            })
            .collect(),
    }
}

/// Random density operator from a normalized Wishart-style product A A^dag.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> DensityOperator {
    let a = ComplexMatrix::from_fn(dim, |_, _| {
        C64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
    })
    .unwrap();
    let prod = a.mul(&a.dagger()).unwrap();
    let tr = prod.trace().re;
    let rho = prod.scale(C64::new(1.0 / tr, 0.0));
    // symmetrize rounding residue before validation
    let herm = rho.add(&rho.dagger()).unwrap().scale(C64::new(0.5, 0.0));
    DensityOperator::new(herm).expect("normalized PSD by construction")
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(dim).unwrap();
    for r in 0..dim {
        h.set(r, r, C64::new(rng.gen::<f64>() * 2.0 - 1.0, 0.0));
        for c in (r + 1)..dim {
            let z = C64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
            h.set(r, c, z);
            h.set(c, r, z.conj());
        }
    }
    h
}
