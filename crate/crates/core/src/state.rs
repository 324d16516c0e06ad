//! Two-qubit density matrices: validation, named state families, random
//! state generation, and the PPT separability test.
//!
//! Basis ordering is |00>, |01>, |10>, |11> with Alice's qubit first.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    c, eigensystem_hermitian2, eigenvalues_hermitian4, fix_vector_phase, inner2,
    partial_trace_a, partial_trace_b, partial_transpose_b, BlochVector, Matrix2, Matrix4, C64,
};

/// Validation tolerance for Hermiticity, positivity, and unit trace.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("matrix is not Hermitian: ||rho - rho'|| = {residual:.3e}")]
    NotHermitian { residual: f64 },
    #[error("matrix is not positive semidefinite: smallest eigenvalue = {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("trace is {trace:.12}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("parameter {name} = {value} is outside [{lo}, {hi}]")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("non-finite entry in state matrix")]
    NonFinite,
    #[error("unknown state family \"{0}\" (expected \"test_state\" or \"color_noise\")")]
    UnknownFamily(String),
}

// ---------------------------------------------------------------------------
// Pure qubit states
// ---------------------------------------------------------------------------

/// Normalized single-qubit pure state; the first nonzero amplitude is kept
/// real non-negative so equal rays compare equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureQubit {
    amps: [C64; 2],
}

impl PureQubit {
    pub fn from_amplitudes(a0: C64, a1: C64) -> Result<Self, StateError> {
        if !(a0.re.is_finite() && a0.im.is_finite() && a1.re.is_finite() && a1.im.is_finite()) {
            return Err(StateError::NonFinite);
        }
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if norm < 1e-12 {
            return Err(StateError::NotPositive {
                min_eigenvalue: 0.0,
            });
        }
        Ok(PureQubit {
            amps: fix_vector_phase(&[a0 / norm, a1 / norm]),
        })
    }

    pub fn basis0() -> Self {
        PureQubit {
            amps: [c(1.0, 0.0), c(0.0, 0.0)],
        }
    }

    pub fn basis1() -> Self {
        PureQubit {
            amps: [c(0.0, 0.0), c(1.0, 0.0)],
        }
    }

    /// |n> = cos(theta/2)|0> + sin(theta/2) e^{i phi}|1>.
    pub fn from_bloch(n: &BlochVector) -> Self {
        let (theta, phi) = n.angles();
        PureQubit {
            amps: fix_vector_phase(&[
                c((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), phi),
            ]),
        }
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.amps
    }

    pub fn projector(&self) -> Matrix2 {
        Matrix2::outer(&self.amps, &self.amps)
    }

    /// The orthogonal state, in canonical phase.
    pub fn orthogonal(&self) -> PureQubit {
        PureQubit {
            amps: fix_vector_phase(&[-(self.amps[1].conj()), self.amps[0].conj()]),
        }
    }

    pub fn overlap(&self, other: &PureQubit) -> C64 {
        inner2(&self.amps, &other.amps)
    }

    /// |<self|other>|^2.
    pub fn fidelity(&self, other: &PureQubit) -> f64 {
        self.overlap(other).norm_sqr()
    }

    pub fn bloch(&self) -> BlochVector {
        let cross = self.amps[0].conj() * self.amps[1];
        BlochVector::from_components(
            2.0 * cross.re,
            2.0 * cross.im,
            self.amps[0].norm_sqr() - self.amps[1].norm_sqr(),
        )
        .expect("normalized amplitudes give a unit Bloch vector")
    }
}

// ---------------------------------------------------------------------------
// Qubit density matrices
// ---------------------------------------------------------------------------

/// Validated single-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    matrix: Matrix2,
}

impl QubitState {
    pub fn new(matrix: Matrix2) -> Result<Self, StateError> {
        if !matrix.is_finite() {
            return Err(StateError::NonFinite);
        }
        let residual = matrix.hermiticity_residual();
        if residual > STATE_TOL {
            return Err(StateError::NotHermitian { residual });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(StateError::TraceNotOne { trace });
        }
        let es = eigensystem_hermitian2(&matrix).map_err(|_| StateError::NotHermitian {
            residual,
        })?;
        if es.eigenvalues[1] < -STATE_TOL {
            return Err(StateError::NotPositive {
                min_eigenvalue: es.eigenvalues[1],
            });
        }
        Ok(QubitState { matrix })
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.re_trace_product(&self.matrix)
    }
}

// ---------------------------------------------------------------------------
// Two-qubit density matrices
// ---------------------------------------------------------------------------

/// Validated two-qubit density matrix (Hermitian, PSD, unit trace within
/// [`STATE_TOL`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    matrix: Matrix4,
}

impl TwoQubitState {
    /// Validates and wraps a raw 4x4 matrix.
    pub fn new(matrix: Matrix4) -> Result<Self, StateError> {
        if !matrix.is_finite() {
            return Err(StateError::NonFinite);
        }
        let residual = matrix.hermiticity_residual();
        if residual > STATE_TOL {
            return Err(StateError::NotHermitian { residual });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(StateError::TraceNotOne { trace });
        }
        let eigenvalues =
            eigenvalues_hermitian4(&matrix).map_err(|_| StateError::NotHermitian { residual })?;
        if eigenvalues[3] < -STATE_TOL {
            return Err(StateError::NotPositive {
                min_eigenvalue: eigenvalues[3],
            });
        }
        Ok(TwoQubitState { matrix })
    }

    pub fn matrix(&self) -> &Matrix4 {
        &self.matrix
    }

    /// Bob's reduced state tr_A(rho).
    pub fn reduced_b(&self) -> Matrix2 {
        partial_trace_a(&self.matrix)
    }

    /// Alice's reduced state tr_B(rho).
    pub fn reduced_a(&self) -> Matrix2 {
        partial_trace_b(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        self.matrix.re_trace_product(&self.matrix)
    }
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), StateError> {
    if !value.is_finite() || value < lo || value > hi {
        return Err(StateError::ParamOutOfRange {
            name,
            value,
            lo,
            hi,
        });
    }
    Ok(())
}

/// V |Psi(theta)><Psi(theta)| + (1-V) |Phi(theta)><Phi(theta)| with
/// Psi = cos t |00> + sin t |11> and Phi = cos t |10> + sin t |01>.
pub fn family_test_state(v: f64, theta: f64) -> Result<TwoQubitState, StateError> {
    check_range("V", v, 0.0, 1.0)?;
    check_range("theta", theta, 0.0, std::f64::consts::FRAC_PI_2)?;
    let (ct, st) = (theta.cos(), theta.sin());
    let psi = [c(ct, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(st, 0.0)];
    let phi = [c(0.0, 0.0), c(st, 0.0), c(ct, 0.0), c(0.0, 0.0)];
    let m = Matrix4::outer(&psi, &psi)
        .scale(v)
        .add(&Matrix4::outer(&phi, &phi).scale(1.0 - v));
    TwoQubitState::new(m)
}

/// V |Psi(theta)><Psi(theta)| + (1-V)(|00><00| + |11><11|)/2.
pub fn family_color_noise(v: f64, theta: f64) -> Result<TwoQubitState, StateError> {
    check_range("V", v, 0.0, 1.0)?;
    if !theta.is_finite() {
        return Err(StateError::ParamOutOfRange {
            name: "theta",
            value: theta,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        });
    }
    let (ct, st) = (theta.cos(), theta.sin());
    let psi = [c(ct, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(st, 0.0)];
    let noise = Matrix4::diag([0.5, 0.0, 0.0, 0.5]);
    let m = Matrix4::outer(&psi, &psi)
        .scale(v)
        .add(&noise.scale(1.0 - v));
    TwoQubitState::new(m)
}

/// Ginibre-ensemble random state of the given rank, deterministic in the seed.
pub fn random_state(seed: u64, rank: usize) -> TwoQubitState {
    assert!((1..=4).contains(&rank), "rank must be 1..=4");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = [[C64::default(); 4]; 4];
    for row in g.iter_mut().take(4) {
        for col in row.iter_mut().take(rank) {
            *col = c(standard_normal(&mut rng), standard_normal(&mut rng));
        }
    }
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = C64::default();
            for k in 0..rank {
                acc += g[i][k] * g[j][k].conj();
            }
            m.e[i][j] = acc;
        }
    }
    let trace = m.trace().re;
    let m = m.scale(1.0 / trace).hermitized();
    TwoQubitState::new(m).expect("Ginibre construction yields a valid state")
}

/// Box-Muller standard normal draw.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Peres-Horodecki test: true iff the partial transpose over Bob has no
/// eigenvalue below -1e-10. Exact separability criterion for two qubits.
pub fn is_ppt_separable(rho: &TwoQubitState) -> bool {
    let pt = partial_transpose_b(rho.matrix());
    let vals = eigenvalues_hermitian4(&pt).expect("partial transpose stays Hermitian");
    vals[3] >= -1e-10
}

// ---------------------------------------------------------------------------
// JSON interchange
// ---------------------------------------------------------------------------

/// On-disk state description: either a raw matrix (row-major, entries as
/// [re, im] pairs, basis |00>,|01>,|10>,|11>) or a named family.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
#[allow(clippy::large_enum_variant)] // the matrix payload is 256 bytes, fine for a config type
pub enum StateInput {
    Family {
        family: String,
        #[serde(rename = "V")]
        v: f64,
        theta: f64,
    },
    Raw {
        matrix: [[[f64; 2]; 4]; 4],
    },
}

impl StateInput {
    pub fn build(&self) -> Result<TwoQubitState, StateError> {
        match self {
            StateInput::Family { family, v, theta } => match family.as_str() {
                "test_state" => family_test_state(*v, *theta),
                "color_noise" => family_color_noise(*v, *theta),
                other => Err(StateError::UnknownFamily(other.to_string())),
            },
            StateInput::Raw { matrix } => {
                let mut m = Matrix4::zeros();
                for i in 0..4 {
                    for j in 0..4 {
                        m.e[i][j] = c(matrix[i][j][0], matrix[i][j][1]);
                    }
                }
                TwoQubitState::new(m)
            }
        }
    }
}

/// Serializes a state into the raw-matrix JSON form.
pub fn state_to_json(rho: &TwoQubitState) -> String {
    let mut matrix = [[[0.0f64; 2]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            matrix[i][j] = [rho.matrix().e[i][j].re, rho.matrix().e[i][j].im];
        }
    }
    serde_json::to_string_pretty(&StateInput::Raw { matrix }).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tensor;

    fn bell_phi_plus() -> TwoQubitState {
        family_test_state(1.0, std::f64::consts::FRAC_PI_4).unwrap()
    }

    #[test]
    fn make_state_maximally_mixed() {
        assert!(TwoQubitState::new(Matrix4::identity().scale(0.25)).is_ok());
    }

    #[test]
    fn make_state_bell() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        assert!(TwoQubitState::new(Matrix4::outer(&v, &v)).is_ok());
    }

    #[test]
    fn make_state_rejects_negative_eigenvalue() {
        let m = Matrix4::diag([1.0 / 0.9, 0.0, 0.0, -0.1 / 0.9]);
        match TwoQubitState::new(m) {
            Err(StateError::NotPositive { min_eigenvalue }) => {
                assert!(min_eigenvalue < -1e-3);
            }
            other => panic!("expected NotPositive, got {other:?}"),
        }
    }

    #[test]
    fn make_state_rejects_bad_trace_and_hermiticity() {
        assert!(matches!(
            TwoQubitState::new(Matrix4::identity()),
            Err(StateError::TraceNotOne { .. })
        ));
        let mut m = Matrix4::identity().scale(0.25);
        m.e[0][1] = c(0.1, 0.0);
        assert!(matches!(
            TwoQubitState::new(m),
            Err(StateError::NotHermitian { .. })
        ));
    }

    #[test]
    fn test_state_at_v1_quarter_pi_is_bell() {
        let rho = bell_phi_plus();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        let bell = Matrix4::outer(&v, &v);
        assert!(rho.matrix().sub(&bell).frobenius_norm() < 1e-14);
    }

    #[test]
    fn test_state_separable_at_half() {
        for &theta in &[0.3, 0.9, 1.4] {
            let rho = family_test_state(0.5, theta).unwrap();
            assert!(is_ppt_separable(&rho));
        }
    }

    #[test]
    fn test_state_entangled_at_example_point() {
        let rho = family_test_state(0.6, std::f64::consts::FRAC_PI_8).unwrap();
        assert!(!is_ppt_separable(&rho));
    }

    #[test]
    fn test_state_rejects_out_of_range() {
        assert!(family_test_state(1.2, 0.3).is_err());
        assert!(family_test_state(0.5, -0.1).is_err());
    }

    #[test]
    fn color_noise_pure_noise() {
        let rho = family_color_noise(0.0, 0.77).unwrap();
        let expected = Matrix4::diag([0.5, 0.0, 0.0, 0.5]);
        assert!(rho.matrix().sub(&expected).frobenius_norm() < 1e-14);
    }

    #[test]
    fn color_noise_bell_limit() {
        let rho = family_color_noise(1.0, std::f64::consts::FRAC_PI_4).unwrap();
        assert!(rho.matrix().sub(bell_phi_plus().matrix()).frobenius_norm() < 1e-14);
    }

    #[test]
    fn color_noise_z_conditional_weights() {
        // conditioning on Alice's z outcomes leaves |0><0| and |1><1| with
        // weights V cos^2 t + (1-V)/2 and V sin^2 t + (1-V)/2
        let (v, theta) = (0.5, std::f64::consts::FRAC_PI_8);
        let rho = family_color_noise(v, theta).unwrap();
        let p0 = Matrix2::diag(c(1.0, 0.0), c(0.0, 0.0));
        let p1 = Matrix2::diag(c(0.0, 0.0), c(1.0, 0.0));
        let cond0 = partial_trace_a(&tensor(&p0, &Matrix2::identity()).mul(rho.matrix()));
        let cond1 = partial_trace_a(&tensor(&p1, &Matrix2::identity()).mul(rho.matrix()));
        let w0 = v * theta.cos().powi(2) + (1.0 - v) / 2.0;
        let w1 = v * theta.sin().powi(2) + (1.0 - v) / 2.0;
        assert!(cond0.sub(&p0.scale(w0)).frobenius_norm() < 1e-12);
        assert!(cond1.sub(&p1.scale(w1)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn random_state_is_deterministic() {
        let a = random_state(42, 4);
        let b = random_state(42, 4);
        assert_eq!(a.matrix().e, b.matrix().e);
        let d = random_state(43, 4);
        assert!(a.matrix().sub(d.matrix()).frobenius_norm() > 1e-6);
    }

    #[test]
    fn random_state_rank_one_is_pure() {
        for seed in 0..20 {
            let rho = random_state(seed, 1);
            assert!((rho.purity() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn random_state_purity_range() {
        for seed in 0..200 {
            let rho = random_state(seed, 1 + (seed % 4) as usize);
            let p = rho.purity();
            assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&p), "purity {p}");
        }
    }

    #[test]
    fn ppt_known_cases() {
        assert!(!is_ppt_separable(&bell_phi_plus()));
        let product = TwoQubitState::new(tensor(
            &Matrix2::diag(c(0.8, 0.0), c(0.2, 0.0)),
            &Matrix2::diag(c(0.3, 0.0), c(0.7, 0.0)),
        ))
        .unwrap();
        assert!(is_ppt_separable(&product));
    }

    #[test]
    fn json_round_trip() {
        let rho = family_test_state(0.6, 0.4).unwrap();
        let json = state_to_json(&rho);
        let parsed: StateInput = serde_json::from_str(&json).unwrap();
        let rho2 = parsed.build().unwrap();
        assert!(rho.matrix().sub(rho2.matrix()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn json_family_form() {
        let parsed: StateInput =
            serde_json::from_str(r#"{"family": "test_state", "V": 0.6, "theta": 0.3927}"#).unwrap();
        assert!(parsed.build().is_ok());
        let bad: StateInput =
            serde_json::from_str(r#"{"family": "nope", "V": 0.6, "theta": 0.1}"#).unwrap();
        assert!(matches!(bad.build(), Err(StateError::UnknownFamily(_))));
    }
}
