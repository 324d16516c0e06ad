//! Shared generators for the integration suites.
// each suite uses its own subset of these helpers
#![allow(dead_code)]

use qsteer::linalg::{c, Matrix2, Matrix4, C64};
use qsteer::state::{PureQubit, TwoQubitState};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_pure(rng: &mut ChaCha8Rng) -> PureQubit {
    loop {
        let a0 = c(normal(rng), normal(rng));
        let a1 = c(normal(rng), normal(rng));
        if let Ok(q) = PureQubit::from_amplitudes(a0, a1) {
            return q;
        }
    }
}

/// Haar-ish random SU(2) from a normalized complex Gaussian pair.
pub fn random_su2(rng: &mut ChaCha8Rng) -> Matrix2 {
    let q = random_pure(rng);
    let [a, b] = q.amplitudes();
    Matrix2::from_rows([[a, -b.conj()], [b, a.conj()]])
}

/// Pieces of a canonical-form state: weights, Bob's pure conditionals for
/// Alice's z outcomes, and the coupling block.
pub struct CanonicalPieces {
    pub weights: [f64; 2],
    pub phis: [PureQubit; 2],
    pub m: Matrix2,
}

impl CanonicalPieces {
    pub fn assemble(&self) -> Matrix4 {
        let p0 = self.phis[0].projector().scale(self.weights[0]);
        let p1 = self.phis[1].projector().scale(self.weights[1]);
        Matrix4::from_blocks([[p0, self.m], [self.m.adjoint(), p1]])
    }

    pub fn state(&self) -> TwoQubitState {
        TwoQubitState::new(self.assemble()).expect("canonical pieces form a valid state")
    }

    pub fn m_norm(&self) -> f64 {
        self.m.frobenius_norm()
    }
}

fn outer(u: &PureQubit, v: &PureQubit) -> Matrix2 {
    Matrix2::outer(&u.amplitudes(), &v.amplitudes())
}

/// Random valid canonical-form state. Positivity of the block matrix forces
/// the coupling block onto c |phi_0><phi_1| with |c| <= sqrt(w0 w1); the
/// generator stays strictly inside that disc (or at zero for `entangled =
/// false`) and keeps the conditionals well separated.
pub fn random_canonical(rng: &mut ChaCha8Rng, entangled: bool) -> CanonicalPieces {
    let w0: f64 = rng.gen_range(0.1..0.9);
    let weights = [w0, 1.0 - w0];
    let (phi0, phi1) = loop {
        let a = random_pure(rng);
        let b = random_pure(rng);
        if a.fidelity(&b) < 0.9 {
            break (a, b);
        }
    };
    let m = if entangled {
        let t: f64 = rng.gen_range(0.3..0.999);
        let phase: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        let cmag = t * (weights[0] * weights[1]).sqrt();
        outer(&phi0, &phi1).scale_c(C64::from_polar(cmag, phase))
    } else {
        Matrix2::zeros()
    };
    CanonicalPieces {
        weights,
        phis: [phi0, phi1],
        m,
    }
}
