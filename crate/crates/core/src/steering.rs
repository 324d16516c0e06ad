//! Conditional-state machinery and the pure-conditional steerability
//! criterion: canonical block decomposition, Bloch-sphere direction search,
//! and the rule for picking the second measurement setting.

use serde::Serialize;
use thiserror::Error;

use crate::lhs::{assemblage_from_state, lhs_feasible, SteeringParty};
use crate::linalg::{
    direction_projector, eigensystem_hermitian2, partial_trace_a, rotation_to_z, tensor,
    BlochVector, Matrix2, Matrix4,
};
use crate::optimize::{fibonacci_hemisphere, nelder_mead_2d};
use crate::state::{is_ppt_separable, PureQubit, StateError, TwoQubitState};

/// Tolerances for the steerability criterion.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Allowed deficit 1 - tr(rho^2) for a conditional to count as pure.
    pub purity_tol: f64,
    /// Frobenius-norm threshold below which the coupling block counts as zero.
    pub m_tol: f64,
    /// Projector-fidelity margin below 1 required for distinct conditionals.
    pub distinct_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            purity_tol: 1e-7,
            m_tol: 1e-9,
            distinct_tol: 1e-9,
        }
    }
}

/// Weight below which a measurement outcome is treated as never occurring.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SteeringError {
    #[error("conditional states are not pure: purity deficit {deficit:.3e}")]
    ConditionalsNotPure { deficit: f64 },
    #[error("conditional states coincide (product-like along this direction)")]
    ConditionalsIdentical,
    #[error("outcome {outcome} has zero weight along this direction")]
    OutcomeWeightZero { outcome: u8 },
    #[error("coupling block vanishes: the state is separable and admits a hidden-state model")]
    MZero,
    #[error("decomposition does not reassemble the state: residual {residual:.3e}")]
    DecompositionInconsistent { residual: f64 },
    #[error(transparent)]
    State(#[from] StateError),
}

// ---------------------------------------------------------------------------
// Conditional states
// ---------------------------------------------------------------------------

/// Bob's two unnormalized conditional states for one of Alice's settings.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalPair {
    pub setting: BlochVector,
    /// Unnormalized post-measurement states, indexed by Alice's outcome.
    pub unnormalized: [Matrix2; 2],
    /// Outcome probabilities; traces of the unnormalized states.
    pub weights: [f64; 2],
}

impl ConditionalPair {
    /// Normalized conditional for outcome `a`, or None when its weight
    /// vanishes.
    pub fn normalized(&self, a: usize) -> Option<Matrix2> {
        if self.weights[a] < WEIGHT_TOL {
            None
        } else {
            Some(self.unnormalized[a].scale(1.0 / self.weights[a]))
        }
    }

    /// Purity of the normalized conditional for outcome `a`.
    pub fn purity(&self, a: usize) -> Option<f64> {
        self.normalized(a).map(|m| purity(&m))
    }
}

/// Bob's conditionals for Alice measuring along n:
/// rho~_a = tr_A[(P^n_a (x) 1) rho].
pub fn conditional_pair(rho: &TwoQubitState, n: &BlochVector) -> ConditionalPair {
    let mut unnormalized = [Matrix2::zeros(); 2];
    for a in 0..2 {
        let proj = tensor(&direction_projector(n, a as u8), &Matrix2::identity());
        unnormalized[a] = partial_trace_a(&proj.mul(rho.matrix())).hermitized();
    }
    ConditionalPair {
        setting: *n,
        weights: [unnormalized[0].trace().re, unnormalized[1].trace().re],
        unnormalized,
    }
}

/// tr(q^2) for a normalized Hermitian matrix; 1 iff pure.
pub fn purity(q: &Matrix2) -> f64 {
    q.re_trace_product(q)
}

// ---------------------------------------------------------------------------
// Canonical decomposition
// ---------------------------------------------------------------------------

/// Block form of the state after rotating Alice's measurement direction to z:
/// w0 |0><0| (x) |phi0><phi0| + w1 |1><1| (x) |phi1><phi1|
///   + |0><1| (x) M + |1><0| (x) M'.
#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    pub weights: [f64; 2],
    pub conditionals: [PureQubit; 2],
    pub m_block: Matrix2,
    /// Unitary applied on Alice's side to map the measured direction to z.
    pub alice_rotation: Matrix2,
}

impl CanonicalDecomposition {
    /// Frobenius norm of the coupling block.
    pub fn m_norm(&self) -> f64 {
        self.m_block.frobenius_norm()
    }

    /// Rebuilds the rotated-frame density matrix from the stored pieces.
    pub fn reassemble(&self) -> Matrix4 {
        let p0 = self.conditionals[0].projector().scale(self.weights[0]);
        let p1 = self.conditionals[1].projector().scale(self.weights[1]);
        Matrix4::from_blocks([[p0, self.m_block], [self.m_block.adjoint(), p1]])
    }
}

/// Conjugates the state by (U (x) 1) so the measured direction becomes z.
pub fn rotate_alice_to_z(rho: &TwoQubitState, n: &BlochVector) -> (Matrix4, Matrix2) {
    let u = rotation_to_z(n);
    let big = tensor(&u, &Matrix2::identity());
    let rotated = big.mul(rho.matrix()).mul(&big.adjoint()).hermitized();
    (rotated, u)
}

/// Extracts the canonical block decomposition along direction n.
///
/// Requires both of Bob's normalized conditionals along n to be pure within
/// `tol.purity_tol` and mutually distinct.
pub fn canonical_decomposition(
    rho: &TwoQubitState,
    n: &BlochVector,
    tol: &Tolerances,
) -> Result<CanonicalDecomposition, SteeringError> {
    let (rotated, u) = rotate_alice_to_z(rho, n);
    let blocks = [rotated.block(0, 0).hermitized(), rotated.block(1, 1).hermitized()];
    let m_block = rotated.block(0, 1);

    let mut weights = [0.0f64; 2];
    let mut conditionals = [PureQubit::basis0(); 2];
    let mut total_deficit = 0.0;
    for a in 0..2 {
        weights[a] = blocks[a].trace().re;
        if weights[a] < WEIGHT_TOL {
            return Err(SteeringError::OutcomeWeightZero { outcome: a as u8 });
        }
        let normalized = blocks[a].scale(1.0 / weights[a]);
        let deficit = 1.0 - purity(&normalized);
        if deficit > tol.purity_tol {
            return Err(SteeringError::ConditionalsNotPure { deficit });
        }
        total_deficit += deficit.max(0.0);
        let es = eigensystem_hermitian2(&normalized)
            .map_err(|_| SteeringError::ConditionalsNotPure { deficit })?;
        let v = es.eigenvectors[0];
        conditionals[a] =
            PureQubit::from_amplitudes(v[0], v[1]).expect("eigenvector is normalized");
    }

    if conditionals[0].fidelity(&conditionals[1]) >= 1.0 - tol.distinct_tol {
        return Err(SteeringError::ConditionalsIdentical);
    }

    let d = CanonicalDecomposition {
        weights,
        conditionals,
        m_block,
        alice_rotation: u,
    };
    // rank-one truncation of near-pure blocks costs O(deficit) in Frobenius norm
    let residual = d.reassemble().sub(&rotated).frobenius_norm();
    if residual > f64::max(1e-10, 50.0 * total_deficit) {
        return Err(SteeringError::DecompositionInconsistent { residual });
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Second-setting rule
// ---------------------------------------------------------------------------

/// Axis label for the second measurement of the two-setting protocol, in the
/// rotated frame where the first setting is z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SecondSetting {
    X,
    Y,
}

impl SecondSetting {
    pub fn direction(&self) -> BlochVector {
        match self {
            SecondSetting::X => BlochVector::x_axis(),
            SecondSetting::Y => BlochVector::y_axis(),
        }
    }
}

/// Residual of the least-squares projection of a Hermitian matrix onto the
/// real span of the two conditional projectors.
fn span_residual(h: &Matrix2, p0: &Matrix2, p1: &Matrix2) -> f64 {
    // Gram system over the real Hilbert-Schmidt pairing
    let g00 = p0.re_trace_product(p0);
    let g01 = p0.re_trace_product(p1);
    let g11 = p1.re_trace_product(p1);
    let b0 = p0.re_trace_product(h);
    let b1 = p1.re_trace_product(h);
    let det = g00 * g11 - g01 * g01;
    let (c0, c1) = if det.abs() < 1e-14 {
        (b0 / g00.max(1e-14), 0.0)
    } else {
        ((b0 * g11 - b1 * g01) / det, (b1 * g00 - b0 * g01) / det)
    };
    h.sub(&p0.scale(c0)).sub(&p1.scale(c1)).frobenius_norm()
}

/// Picks the second measurement axis: x when M + M' falls outside the real
/// span of the conditional projectors (the x-basis conditionals then expose
/// the contradiction), otherwise y. Errors with `MZero` when the block
/// vanishes; both spans can only absorb M simultaneously if M = 0.
pub fn choose_second_setting(
    d: &CanonicalDecomposition,
    tol: &Tolerances,
) -> Result<SecondSetting, SteeringError> {
    if d.m_norm() <= tol.m_tol {
        return Err(SteeringError::MZero);
    }
    let p0 = d.conditionals[0].projector();
    let p1 = d.conditionals[1].projector();
    let sym = d.m_block.add(&d.m_block.adjoint());
    if span_residual(&sym, &p0, &p1) > 1e-9 {
        Ok(SecondSetting::X)
    } else {
        Ok(SecondSetting::Y)
    }
}

// ---------------------------------------------------------------------------
// Direction search
// ---------------------------------------------------------------------------

/// Search parameters for the Bloch-sphere scan.
#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Fibonacci grid size before antipode deduplication.
    pub grid_points: usize,
    /// Number of best grid points refined with Nelder-Mead.
    pub refine_candidates: usize,
    pub tolerances: Tolerances,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid_points: 2048,
            refine_candidates: 5,
            tolerances: Tolerances::default(),
        }
    }
}

/// Outcome of the steerability search.
#[derive(Debug, Clone)]
pub struct SteeringVerdict {
    pub steerable: bool,
    /// Qualifying measurement direction for Alice (original frame).
    pub direction: Option<BlochVector>,
    /// Purities of the two normalized conditionals at the reported direction.
    pub conditional_purities: [f64; 2],
    pub decomposition: Option<CanonicalDecomposition>,
    /// Recommended second setting, in the rotated frame of the decomposition.
    pub second_setting: Option<SecondSetting>,
    /// Best min-purity score seen during the search.
    pub best_score: f64,
}

/// Score used by the grid scan: the smaller of the two conditional purities,
/// or -1 when an outcome never occurs along the direction.
fn min_purity_score(rho: &TwoQubitState, n: &BlochVector) -> f64 {
    let pair = conditional_pair(rho, n);
    match (pair.purity(0), pair.purity(1)) {
        (Some(p0), Some(p1)) => p0.min(p1),
        _ => -1.0,
    }
}

/// Searches the Bloch sphere for a direction along which both of Bob's
/// normalized conditionals are pure and distinct. Default configuration.
pub fn find_avn_direction(rho: &TwoQubitState) -> SteeringVerdict {
    find_avn_direction_with(rho, &SearchConfig::default())
}

pub fn find_avn_direction_with(rho: &TwoQubitState, cfg: &SearchConfig) -> SteeringVerdict {
    use rayon::prelude::*;

    // a steerable verdict certifies entanglement, so the exact two-qubit
    // separability test is a hard gate against false positives
    let separable = is_ppt_separable(rho);

    let grid = fibonacci_hemisphere(cfg.grid_points);
    let scores: Vec<f64> = grid.par_iter().map(|n| min_purity_score(rho, n)).collect();

    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));

    let tol = cfg.tolerances;
    let mut best_score = scores[order[0]];
    let mut not_steerable_purities = [f64::NAN; 2];

    for &i in order.iter().take(cfg.refine_candidates.min(order.len())) {
        let (theta0, phi0) = grid[i].angles();
        let (pt, neg) = nelder_mead_2d(
            |p| -min_purity_score(rho, &BlochVector::from_angles(p[0], p[1])),
            [theta0, phi0],
            0.05,
            400,
        );
        let score = -neg;
        let dir = BlochVector::from_angles(pt[0], pt[1]);
        if score > best_score {
            best_score = score;
        }
        if score < 1.0 - tol.purity_tol {
            continue;
        }
        let pair = conditional_pair(rho, &dir);
        let purities = [
            pair.purity(0).unwrap_or(f64::NAN),
            pair.purity(1).unwrap_or(f64::NAN),
        ];
        match canonical_decomposition(rho, &dir, &tol) {
            Ok(d) => {
                // the purity deficit grows quadratically with the angular
                // distance to an exactly-pure direction while a spurious
                // coupling block grows linearly, so the block must clear
                // an O(sqrt(deficit)) floor to count as genuine
                let deficit = (1.0 - score).max(0.0);
                let m_gate = tol.m_tol.max(10.0 * deficit.sqrt());
                if separable || d.m_norm() <= m_gate {
                    // no qualifying protocol along this direction
                    not_steerable_purities = purities;
                    continue;
                }
                let second = choose_second_setting(&d, &tol).ok();
                return SteeringVerdict {
                    steerable: true,
                    direction: Some(dir),
                    conditional_purities: purities,
                    decomposition: Some(d),
                    second_setting: second,
                    best_score,
                };
            }
            Err(_) => {
                // identical or degenerate conditionals: product-like direction
                not_steerable_purities = purities;
                continue;
            }
        }
    }

    SteeringVerdict {
        steerable: false,
        direction: None,
        conditional_purities: not_steerable_purities,
        decomposition: None,
        second_setting: None,
        best_score,
    }
}

// ---------------------------------------------------------------------------
// Equivalence chain
// ---------------------------------------------------------------------------

/// Agreement report for the three equivalent steerability indicators at a
/// direction with pure distinct conditionals: nonzero coupling block,
/// entanglement, and hidden-state infeasibility.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquivalenceReport {
    pub m_nonzero: bool,
    pub entangled: bool,
    pub lhs_infeasible: bool,
}

impl EquivalenceReport {
    pub fn all_agree(&self) -> bool {
        self.m_nonzero == self.entangled && self.entangled == self.lhs_infeasible
    }
}

/// Evaluates all three indicators at direction n. Errors if the conditionals
/// along n are not pure and distinct.
pub fn verify_equivalence_chain(
    rho: &TwoQubitState,
    n: &BlochVector,
    tol: &Tolerances,
) -> Result<EquivalenceReport, SteeringError> {
    let d = canonical_decomposition(rho, n, tol)?;
    let m_nonzero = d.m_norm() > tol.m_tol;
    let entangled = !is_ppt_separable(rho);

    let (rotated, _) = rotate_alice_to_z(rho, n);
    let rotated_state = TwoQubitState::new(rotated)?;
    let axis = match choose_second_setting(&d, tol) {
        Ok(s) => s.direction(),
        Err(SteeringError::MZero) => BlochVector::x_axis(),
        Err(e) => return Err(e),
    };
    let asm = assemblage_from_state(
        &rotated_state,
        &BlochVector::z_axis(),
        &axis,
        SteeringParty::AToB,
    )
    .expect("z and x/y are never degenerate");
    let lhs_infeasible = !lhs_feasible(&asm).feasible;

    Ok(EquivalenceReport {
        m_nonzero,
        entangled,
        lhs_infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::state::{family_color_noise, family_test_state, TwoQubitState};

    fn bell() -> TwoQubitState {
        family_test_state(1.0, std::f64::consts::FRAC_PI_4).unwrap()
    }

    fn product_state() -> TwoQubitState {
        let a = PureQubit::from_amplitudes(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        let b = PureQubit::from_amplitudes(c(0.8, 0.0), c(0.0, -0.6)).unwrap();
        TwoQubitState::new(tensor(&a.projector(), &b.projector())).unwrap()
    }

    #[test]
    fn product_state_conditionals_identical() {
        let rho = product_state();
        // a direction with both outcomes occurring
        let n = BlochVector::z_axis();
        let pair = conditional_pair(&rho, &n);
        assert!(pair.weights[0] > 0.01 && pair.weights[1] > 0.01);
        let m0 = pair.normalized(0).unwrap();
        let m1 = pair.normalized(1).unwrap();
        assert!(m0.sub(&m1).frobenius_norm() < 1e-12);
        assert!((purity(&m0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_state_x_conditionals_are_pure_projectors() {
        let theta = 0.5;
        let rho = family_test_state(0.7, theta).unwrap();
        let pair = conditional_pair(&rho, &BlochVector::x_axis());
        for a in 0..2 {
            assert!((pair.weights[a] - 0.5).abs() < 1e-12);
            let m = pair.normalized(a).unwrap();
            let sign = if a == 0 { 1.0 } else { -1.0 };
            let phi = PureQubit::from_amplitudes(c(theta.cos(), 0.0), c(sign * theta.sin(), 0.0))
                .unwrap();
            assert!(m.sub(&phi.projector()).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_conditionals() {
        let rho = TwoQubitState::new(Matrix4::identity().scale(0.25)).unwrap();
        let pair = conditional_pair(&rho, &BlochVector::from_components(1.0, 1.0, 1.0).unwrap());
        for a in 0..2 {
            assert!((pair.weights[a] - 0.5).abs() < 1e-12);
            // unnormalized conditional is identity/4
            assert!(pair.unnormalized[a]
                .sub(&Matrix2::identity().scale(0.25))
                .frobenius_norm()
                < 1e-12);
        }
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&Matrix2::diag(c(1.0, 0.0), c(0.0, 0.0))) - 1.0).abs() < 1e-15);
        assert!((purity(&Matrix2::identity().scale(0.5)) - 0.5).abs() < 1e-15);
        assert!((purity(&Matrix2::diag(c(0.75, 0.0), c(0.25, 0.0))) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn bell_decomposition_along_z() {
        let d = canonical_decomposition(&bell(), &BlochVector::z_axis(), &Tolerances::default())
            .unwrap();
        assert!((d.weights[0] - 0.5).abs() < 1e-12);
        assert!((d.weights[1] - 0.5).abs() < 1e-12);
        assert!(d.conditionals[0].fidelity(&PureQubit::basis0()) > 1.0 - 1e-12);
        assert!(d.conditionals[1].fidelity(&PureQubit::basis1()) > 1.0 - 1e-12);
        let mut expected = Matrix2::zeros();
        expected.e[0][1] = c(0.5, 0.0);
        assert!(d.m_block.sub(&expected).frobenius_norm() < 1e-12);
    }

    #[test]
    fn product_decomposition_fails_identical() {
        let b = PureQubit::from_amplitudes(c(0.8, 0.0), c(0.6, 0.0)).unwrap();
        let rho = TwoQubitState::new(tensor(
            &PureQubit::basis0().projector(),
            &b.projector(),
        ))
        .unwrap();
        // along x both outcomes occur and conditionals coincide
        let err = canonical_decomposition(&rho, &BlochVector::x_axis(), &Tolerances::default())
            .unwrap_err();
        assert!(matches!(err, SteeringError::ConditionalsIdentical));
    }

    #[test]
    fn color_noise_decomposition_m_block() {
        let (v, theta) = (0.6, 0.7);
        let rho = family_color_noise(v, theta).unwrap();
        let d = canonical_decomposition(&rho, &BlochVector::z_axis(), &Tolerances::default())
            .unwrap();
        let mut expected = Matrix2::zeros();
        expected.e[0][1] = c(v * theta.sin() * theta.cos(), 0.0);
        assert!(d.m_block.sub(&expected).frobenius_norm() < 1e-12);
    }

    #[test]
    fn second_setting_bell_is_x() {
        let d = canonical_decomposition(&bell(), &BlochVector::z_axis(), &Tolerances::default())
            .unwrap();
        assert_eq!(
            choose_second_setting(&d, &Tolerances::default()).unwrap(),
            SecondSetting::X
        );
    }

    #[test]
    fn second_setting_y_branch() {
        // M antisymmetric real: M + M' = 0 lies in the span, M - M' does not
        let mut m = Matrix2::zeros();
        m.e[0][1] = c(0.3, 0.0);
        m.e[1][0] = c(-0.3, 0.0);
        let d = CanonicalDecomposition {
            weights: [0.5, 0.5],
            conditionals: [PureQubit::basis0(), PureQubit::basis1()],
            m_block: m,
            alice_rotation: Matrix2::identity(),
        };
        assert_eq!(
            choose_second_setting(&d, &Tolerances::default()).unwrap(),
            SecondSetting::Y
        );
    }

    #[test]
    fn second_setting_m_zero_errors() {
        let d = CanonicalDecomposition {
            weights: [0.5, 0.5],
            conditionals: [PureQubit::basis0(), PureQubit::basis1()],
            m_block: Matrix2::zeros(),
            alice_rotation: Matrix2::identity(),
        };
        assert!(matches!(
            choose_second_setting(&d, &Tolerances::default()),
            Err(SteeringError::MZero)
        ));
    }

    #[test]
    fn find_direction_on_example_state() {
        let rho = family_test_state(0.6, std::f64::consts::FRAC_PI_8).unwrap();
        let verdict = find_avn_direction(&rho);
        assert!(verdict.steerable);
        let dir = verdict.direction.unwrap();
        assert!(dir.x.abs() > 0.99, "expected an x-like direction, got {dir:?}");
        assert!(verdict.conditional_purities[0] > 1.0 - 1e-7);
        assert!(verdict.conditional_purities[1] > 1.0 - 1e-7);
        assert!(verdict.second_setting.is_some());
    }

    #[test]
    fn find_direction_product_state_not_steerable() {
        let verdict = find_avn_direction(&product_state());
        assert!(!verdict.steerable);
    }

    #[test]
    fn find_direction_noisy_state_not_steerable() {
        // 30% isotropic noise kills the pure-conditional property
        let rho = family_test_state(0.6, std::f64::consts::FRAC_PI_8).unwrap();
        let mixed = rho
            .matrix()
            .scale(0.7)
            .add(&Matrix4::identity().scale(0.3 / 4.0));
        let rho = TwoQubitState::new(mixed).unwrap();
        let verdict = find_avn_direction(&rho);
        assert!(!verdict.steerable);
        assert!(verdict.best_score < 1.0 - 1e-6);
    }

    #[test]
    fn equivalence_chain_cases() {
        let tol = Tolerances::default();
        let x = BlochVector::x_axis();
        let r = verify_equivalence_chain(
            &family_test_state(0.6, std::f64::consts::FRAC_PI_8).unwrap(),
            &x,
            &tol,
        )
        .unwrap();
        assert!(r.m_nonzero && r.entangled && r.lhs_infeasible);
        assert!(r.all_agree());

        let r = verify_equivalence_chain(
            &family_test_state(0.5, std::f64::consts::FRAC_PI_8).unwrap(),
            &x,
            &tol,
        )
        .unwrap();
        assert!(!r.m_nonzero && !r.entangled && !r.lhs_infeasible);

        let r = verify_equivalence_chain(
            &family_color_noise(0.0, 0.4).unwrap(),
            &BlochVector::z_axis(),
            &tol,
        )
        .unwrap();
        assert!(!r.m_nonzero && !r.entangled && !r.lhs_infeasible);
    }
}
