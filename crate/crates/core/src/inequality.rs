//! Steering inequalities.
//!
//! Two detectors live here. The first is the inequality tailored to a
//! direction with pure, distinct conditionals: with witnesses
//! W_1 = P^n_0 (x) |phi_0^perp><phi_0^perp|, W_2 = P^n_1 (x) |phi_1^perp><phi_1^perp|
//! and W_3 = |+><+| (x) |n_B><n_B|, hidden-state models obey
//! <W_3> <= C_LHS whenever <W_1> = <W_2> = 0, and any nonzero coupling
//! block beats the bound. The second is the N-setting linear inequality
//! S_N = (1/N) sum_k <A_k sigma_k^B> - C_N <= 0 with a brute-forced C_N.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    eigensystem_hermitian2, partial_trace_a, tensor, BlochVector, Matrix2, C64,
};
use crate::optimize::nelder_mead_2d;
use crate::state::{PureQubit, TwoQubitState};
use crate::steering::{conditional_pair, SteeringError, Tolerances, WEIGHT_TOL};

#[derive(Debug, Error)]
pub enum InequalityError {
    #[error("direction set has {n} entries, supported range is 1..=20")]
    SettingCountOutOfRange { n: usize },
    #[error("direction {index} is invalid: {reason}")]
    BadDirection { index: usize, reason: String },
    #[error("directions {i} and {j} coincide up to sign")]
    DuplicateDirections { i: usize, j: usize },
    #[error("direction file malformed: {0}")]
    Parse(String),
    #[error(transparent)]
    Steering(#[from] SteeringError),
}

// ---------------------------------------------------------------------------
// Pure-conditional inequality
// ---------------------------------------------------------------------------

/// Evaluation of the pure-conditional steering inequality at one direction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AvnInequalityResult {
    /// <W_1>: weight on the complement of the first pure conditional.
    pub w1: f64,
    /// <W_2>: same for the second outcome.
    pub w2: f64,
    /// <W_3> maximized over Bob's direction.
    pub w3: f64,
    /// Hidden-state ceiling on <W_3> under the w1 = w2 = 0 constraint.
    pub c_lhs: f64,
    /// w3 - c_lhs; meaningful only when `constraint_satisfied`.
    pub violation: f64,
    /// True when w1 and w2 vanish within 1e-9.
    pub constraint_satisfied: bool,
    pub optimal_n_b: BlochVector,
}

/// Evaluates the inequality at direction `n` with w3 maximized over n_B.
///
/// Requires the normalized conditionals along `n` to be pure (within the
/// default purity tolerance) and distinct; an outcome of zero weight is
/// exempt since its witness term vanishes identically.
pub fn avn_inequality(
    rho: &TwoQubitState,
    n: &BlochVector,
) -> Result<AvnInequalityResult, InequalityError> {
    avn_inequality_impl(rho, n, None, 0.0)
}

/// Same, but with an explicit Bob direction instead of the maximization.
pub fn avn_inequality_with_nb(
    rho: &TwoQubitState,
    n: &BlochVector,
    n_b: &BlochVector,
) -> Result<AvnInequalityResult, InequalityError> {
    avn_inequality_impl(rho, n, Some(*n_b), 0.0)
}

/// The |+> state in W_3 carries an arbitrary relative phase between the two
/// eigenstates of the measured direction. This variant maximizes w3 over
/// that phase (coarse sweep plus refinement), making the reported violation
/// independent of amplitude-phase conventions.
pub fn avn_inequality_phase_max(
    rho: &TwoQubitState,
    n: &BlochVector,
) -> Result<AvnInequalityResult, InequalityError> {
    let base = avn_inequality_impl(rho, n, None, 0.0)?;
    let score = |chi: f64| -> f64 {
        avn_inequality_impl(rho, n, None, chi)
            .map(|r| r.w3)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let samples = 360;
    let mut best_chi = 0.0;
    let mut best_w3 = base.w3;
    for k in 0..samples {
        let chi = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let v = score(chi);
        if v > best_w3 {
            best_w3 = v;
            best_chi = chi;
        }
    }
    let (pt, neg) = nelder_mead_2d(|p| -score(p[0]), [best_chi, 0.0], 1e-3, 200);
    let refined_chi = if -neg > best_w3 { pt[0] } else { best_chi };
    avn_inequality_impl(rho, n, None, refined_chi)
}

fn avn_inequality_impl(
    rho: &TwoQubitState,
    n: &BlochVector,
    explicit_nb: Option<BlochVector>,
    plus_phase: f64,
) -> Result<AvnInequalityResult, InequalityError> {
    let tol = Tolerances::default();
    let pair = conditional_pair(rho, n);

    // <W_a>: project the unnormalized conditional onto the orthogonal
    // complement of its own pure direction
    let mut w = [0.0f64; 2];
    let mut kets: [Option<PureQubit>; 2] = [None, None];
    for a in 0..2 {
        if pair.weights[a] < WEIGHT_TOL {
            continue; // the witness term is identically zero
        }
        let normalized = pair.normalized(a).expect("weight checked above");
        let deficit = 1.0 - crate::steering::purity(&normalized);
        if deficit > tol.purity_tol {
            return Err(SteeringError::ConditionalsNotPure { deficit }.into());
        }
        let es = eigensystem_hermitian2(&normalized)
            .map_err(|_| SteeringError::ConditionalsNotPure { deficit })?;
        let v = es.eigenvectors[0];
        let ket = PureQubit::from_amplitudes(v[0], v[1]).expect("normalized eigenvector");
        w[a] = ket
            .orthogonal()
            .projector()
            .re_trace_product(&pair.unnormalized[a]);
        kets[a] = Some(ket);
    }
    if let (Some(k0), Some(k1)) = (&kets[0], &kets[1]) {
        if k0.fidelity(k1) >= 1.0 - tol.distinct_tol {
            return Err(SteeringError::ConditionalsIdentical.into());
        }
    }

    // C_LHS = lambda_max of the averaged conditionals
    let avg = pair.unnormalized[0].add(&pair.unnormalized[1]).scale(0.5);
    let c_lhs = eigensystem_hermitian2(&avg.hermitized())
        .expect("hermitized")
        .eigenvalues[0];

    // Bob's unnormalized conditional for Alice projecting onto
    // |+> = (|+n> + e^{i chi} |-n>)/sqrt(2)
    let plus = plus_state(n, plus_phase);
    let cond = partial_trace_a(&tensor(&plus.projector(), &Matrix2::identity()).mul(rho.matrix()))
        .hermitized();
    let (w3, optimal_n_b) = match explicit_nb {
        Some(nb) => {
            let p = PureQubit::from_bloch(&nb).projector();
            (p.re_trace_product(&cond), nb)
        }
        None => {
            let es = eigensystem_hermitian2(&cond).expect("hermitized");
            let v = es.eigenvectors[0];
            let nb = PureQubit::from_amplitudes(v[0], v[1])
                .expect("normalized eigenvector")
                .bloch();
            (es.eigenvalues[0], nb)
        }
    };

    let constraint_satisfied = w[0].abs() <= 1e-9 && w[1].abs() <= 1e-9;
    Ok(AvnInequalityResult {
        w1: w[0],
        w2: w[1],
        w3,
        c_lhs,
        violation: w3 - c_lhs,
        constraint_satisfied,
        optimal_n_b,
    })
}

/// Equal superposition of the two eigenstates of n.sigma with relative
/// phase `chi`.
fn plus_state(n: &BlochVector, chi: f64) -> PureQubit {
    let up = PureQubit::from_bloch(n).amplitudes();
    let down = PureQubit::from_bloch(&n.neg()).amplitudes();
    let phase = C64::from_polar(1.0, chi);
    PureQubit::from_amplitudes(up[0] + phase * down[0], up[1] + phase * down[1])
        .expect("eigenstates of n.sigma are linearly independent")
}

// ---------------------------------------------------------------------------
// N-setting linear inequality
// ---------------------------------------------------------------------------

/// Who measures the N settings.
pub use crate::lhs::SteeringParty;

#[derive(Debug, Clone, Serialize)]
pub struct LinearInequalityResult {
    pub n_settings: usize,
    pub directions: Vec<BlochVector>,
    pub quantum_value: f64,
    pub c_n: f64,
    pub violation: f64,
}

fn check_directions(directions: &[BlochVector]) -> Result<(), InequalityError> {
    let n = directions.len();
    if !(1..=20).contains(&n) {
        return Err(InequalityError::SettingCountOutOfRange { n });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if directions[i].dot(&directions[j]).abs() > 1.0 - 1e-9 {
                return Err(InequalityError::DuplicateDirections { i, j });
            }
        }
    }
    Ok(())
}

/// Hidden-state bound C_N = (1/N) max_{a in {±1}^N} |sum_k a_k u_k|.
///
/// Deterministic strategies assign a sign to each setting; the best hidden
/// state aligns with the signed sum, whose operator norm is the Euclidean
/// length. Global sign symmetry halves the enumeration.
pub fn linear_inequality_bound(directions: &[BlochVector]) -> Result<f64, InequalityError> {
    check_directions(directions)?;
    let n = directions.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << (n - 1)) {
        let mut s = [0.0f64; 3];
        for (k, u) in directions.iter().enumerate() {
            // setting 0 is fixed to +1 by the global sign symmetry
            let a = if k > 0 && (mask >> (k - 1)) & 1 == 1 {
                -1.0
            } else {
                1.0
            };
            s[0] += a * u.x;
            s[1] += a * u.y;
            s[2] += a * u.z;
        }
        best = best.max((s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt());
    }
    Ok(best / n as f64)
}

/// Correlation matrix T_ij = tr(rho sigma_i (x) sigma_j).
pub fn correlation_matrix(rho: &TwoQubitState) -> [[f64; 3]; 3] {
    let paulis = [Matrix2::pauli_x(), Matrix2::pauli_y(), Matrix2::pauli_z()];
    let mut t = [[0.0f64; 3]; 3];
    for (i, si) in paulis.iter().enumerate() {
        for (j, sj) in paulis.iter().enumerate() {
            t[i][j] = rho.matrix().re_trace_product(&tensor(si, sj));
        }
    }
    t
}

/// Quantum value of the linear inequality with optimal ±1 projective
/// observables on the measuring side: (1/N) sum_k |T u_k| for A-to-B,
/// with T transposed for B-to-A.
pub fn linear_inequality_value(
    rho: &TwoQubitState,
    directions: &[BlochVector],
    party: SteeringParty,
) -> Result<LinearInequalityResult, InequalityError> {
    let c_n = linear_inequality_bound(directions)?;
    let t = correlation_matrix(rho);
    let mut total = 0.0;
    for u in directions {
        let v = [u.x, u.y, u.z];
        let mut tu = [0.0f64; 3];
        for i in 0..3 {
            for j in 0..3 {
                tu[i] += match party {
                    SteeringParty::AToB => t[i][j] * v[j],
                    SteeringParty::BToA => t[j][i] * v[j],
                };
            }
        }
        total += (tu[0] * tu[0] + tu[1] * tu[1] + tu[2] * tu[2]).sqrt();
    }
    let quantum_value = total / directions.len() as f64;
    Ok(LinearInequalityResult {
        n_settings: directions.len(),
        directions: directions.to_vec(),
        quantum_value,
        c_n,
        violation: quantum_value - c_n,
    })
}

// ---------------------------------------------------------------------------
// Direction sets
// ---------------------------------------------------------------------------

/// Default 10-setting direction set: the vertices of a regular dodecahedron,
/// one representative per antipodal pair, scaled to unit length. Orientation:
/// the cube-vertex family (1,±1,±1) plus the three golden-rectangle families,
/// each with its first nonzero coordinate positive.
pub fn default_directions() -> Vec<BlochVector> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [[f64; 3]; 10] = [
        [1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, 1.0],
        [1.0, -1.0, -1.0],
        [0.0, 1.0 / phi, phi],
        [0.0, 1.0 / phi, -phi],
        [1.0 / phi, phi, 0.0],
        [1.0 / phi, -phi, 0.0],
        [phi, 0.0, 1.0 / phi],
        [phi, 0.0, -1.0 / phi],
    ];
    raw.iter()
        .map(|v| BlochVector::from_components(v[0], v[1], v[2]).expect("nonzero vertex"))
        .collect()
}

/// Parses a direction-set file: a JSON array of [x, y, z] unit triples.
/// Rejects non-unit entries and duplicates up to sign.
pub fn parse_directions(json: &str) -> Result<Vec<BlochVector>, InequalityError> {
    let raw: Vec<[f64; 3]> =
        serde_json::from_str(json).map_err(|e| InequalityError::Parse(e.to_string()))?;
    let mut out = Vec::with_capacity(raw.len());
    for (index, v) in raw.iter().enumerate() {
        let n = BlochVector::new(v[0], v[1], v[2]).map_err(|e| InequalityError::BadDirection {
            index,
            reason: e.to_string(),
        })?;
        out.push(n);
    }
    check_directions(&out)?;
    Ok(out)
}

/// Serializes a direction set in the same format `parse_directions` reads.
pub fn directions_to_json(directions: &[BlochVector]) -> String {
    let raw: Vec<[f64; 3]> = directions.iter().map(|n| [n.x, n.y, n.z]).collect();
    serde_json::to_string_pretty(&raw).expect("plain float arrays always serialize")
}

/// Serde helper mirroring the on-disk layout.
#[derive(Debug, Serialize, Deserialize)]
pub struct DirectionSet(pub Vec<[f64; 3]>);
