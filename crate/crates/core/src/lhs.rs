//! Local-hidden-state feasibility for two-setting assemblages.
//!
//! A two-setting, two-outcome assemblage admits a hidden-state model iff
//! there are four PSD matrices sigma_ab (one per deterministic response
//! strategy) whose row sums reproduce the first setting's conditionals and
//! whose column sums reproduce the second's. Stochastic response maps add
//! nothing here: over two binary settings every stochastic strategy is a
//! convex mixture of the four deterministic ones, so the reduction is
//! lossless. Feasibility is decided by Dykstra-corrected alternating
//! projections between the marginal-constraint subspace and the PSD cone,
//! with a closed-form shortcut when one setting's conditionals are pure.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{
    direction_projector, eigensystem_hermitian2, partial_trace_a, partial_trace_b, tensor,
    BlochVector, Matrix2, C64,
};
use crate::state::{PureQubit, TwoQubitState};
use crate::steering::WEIGHT_TOL;

#[derive(Debug, Error)]
pub enum LhsError {
    #[error("settings are degenerate: |n1 . n2| = {dot:.9} exceeds 1 - 1e-9")]
    DegenerateSettings { dot: f64 },
    #[error("invalid assemblage: {0}")]
    InvalidAssemblage(String),
}

/// Which side performs the measurements (and thereby tries to steer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SteeringParty {
    AToB,
    BToA,
}

// ---------------------------------------------------------------------------
// Assemblages
// ---------------------------------------------------------------------------

/// Four unnormalized conditional states of a two-setting protocol,
/// indexed by (setting, outcome).
#[derive(Debug, Clone, Copy)]
pub struct Assemblage {
    pub settings: [BlochVector; 2],
    pub conditionals: [[Matrix2; 2]; 2],
}

impl Assemblage {
    /// Validates PSD Hermiticity of each member, consistency of the two
    /// reduced states, and unit total trace.
    pub fn new(
        settings: [BlochVector; 2],
        conditionals: [[Matrix2; 2]; 2],
    ) -> Result<Self, LhsError> {
        for (j, pair) in conditionals.iter().enumerate() {
            for (a, m) in pair.iter().enumerate() {
                let herm = m.hermiticity_residual();
                if herm > 1e-8 {
                    return Err(LhsError::InvalidAssemblage(format!(
                        "conditional ({j},{a}) not Hermitian: residual {herm:.3e}"
                    )));
                }
                let es = eigensystem_hermitian2(&m.hermitized()).expect("hermitized");
                if es.eigenvalues[1] < -1e-9 {
                    return Err(LhsError::InvalidAssemblage(format!(
                        "conditional ({j},{a}) not PSD: eigenvalue {:.3e}",
                        es.eigenvalues[1]
                    )));
                }
            }
        }
        let reduced0 = conditionals[0][0].add(&conditionals[0][1]);
        let reduced1 = conditionals[1][0].add(&conditionals[1][1]);
        let mismatch = reduced0.sub(&reduced1).frobenius_norm();
        if mismatch > 1e-10 {
            return Err(LhsError::InvalidAssemblage(format!(
                "reduced states of the two settings differ by {mismatch:.3e}"
            )));
        }
        let total = reduced0.trace().re;
        if (total - 1.0).abs() > 1e-9 {
            return Err(LhsError::InvalidAssemblage(format!(
                "total trace is {total:.12}, expected 1"
            )));
        }
        Ok(Assemblage {
            settings,
            conditionals,
        })
    }

    /// The shared reduced state sum_a conditionals[j][a].
    pub fn reduced(&self) -> Matrix2 {
        self.conditionals[0][0].add(&self.conditionals[0][1])
    }
}

/// Builds the assemblage a state produces under a two-setting protocol.
/// For `BToA` the roles are swapped: Bob measures, Alice's conditionals are
/// collected.
pub fn assemblage_from_state(
    rho: &TwoQubitState,
    n1: &BlochVector,
    n2: &BlochVector,
    party: SteeringParty,
) -> Result<Assemblage, LhsError> {
    let dot = n1.dot(n2);
    if dot.abs() > 1.0 - 1e-9 {
        return Err(LhsError::DegenerateSettings { dot });
    }
    let mut conditionals = [[Matrix2::zeros(); 2]; 2];
    for (j, n) in [n1, n2].into_iter().enumerate() {
        for a in 0..2 {
            let p = direction_projector(n, a as u8);
            conditionals[j][a] = match party {
                SteeringParty::AToB => {
                    partial_trace_a(&tensor(&p, &Matrix2::identity()).mul(rho.matrix()))
                }
                SteeringParty::BToA => {
                    partial_trace_b(&tensor(&Matrix2::identity(), &p).mul(rho.matrix()))
                }
            }
            .hermitized();
        }
    }
    Assemblage::new([*n1, *n2], conditionals)
}

// ---------------------------------------------------------------------------
// Hidden-state models and feasibility results
// ---------------------------------------------------------------------------

/// Witness model: sigma[a][b] collects the hidden states responding with
/// outcome a to the first setting and b to the second.
#[derive(Debug, Clone, Copy)]
pub struct LhsModel {
    pub components: [[Matrix2; 2]; 2],
}

impl LhsModel {
    /// Total constraint violation of this model against an assemblage:
    /// summed Frobenius norms of the marginal mismatches plus any PSD
    /// deficit.
    pub fn residual(&self, asm: &Assemblage) -> f64 {
        let mut r = marginal_residual(&self.components, asm);
        for row in &self.components {
            for m in row {
                let es = eigensystem_hermitian2(&m.hermitized()).expect("hermitized");
                r += (-es.eigenvalues[1]).max(0.0);
                r += m.hermiticity_residual();
            }
        }
        r
    }
}

/// Verdict of the feasibility solver.
#[derive(Debug, Clone)]
pub struct FeasibilityResult {
    pub feasible: bool,
    pub model: Option<LhsModel>,
    /// Constraint violation of the best candidate found.
    pub residual: f64,
    pub iterations: usize,
}

/// Solver parameters.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Feasibility threshold on the summed Frobenius residual.
    pub feas_tol: f64,
    pub max_iterations: usize,
    /// Window over which the residual must stagnate to declare infeasibility.
    pub plateau_window: usize,
    /// Relative residual decrease under which the iteration counts as stalled.
    pub plateau_rel_decrease: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-8,
            max_iterations: 100_000,
            plateau_window: 1000,
            plateau_rel_decrease: 1e-12,
        }
    }
}

fn marginal_residual(sigma: &[[Matrix2; 2]; 2], asm: &Assemblage) -> f64 {
    let mut r = 0.0;
    for a in 0..2 {
        let row = sigma[a][0].add(&sigma[a][1]);
        r += row.sub(&asm.conditionals[0][a]).frobenius_norm();
    }
    for b in 0..2 {
        let col = sigma[0][b].add(&sigma[1][b]);
        r += col.sub(&asm.conditionals[1][b]).frobenius_norm();
    }
    r
}

/// Orthogonal projection onto the affine subspace of matrix quadruples with
/// prescribed row and column sums. Closed form: the correction splits into a
/// row part, a column part, and a global part.
fn project_marginals(sigma: &[[Matrix2; 2]; 2], asm: &Assemblage) -> [[Matrix2; 2]; 2] {
    let rows = [
        sigma[0][0].add(&sigma[0][1]),
        sigma[1][0].add(&sigma[1][1]),
    ];
    let cols = [
        sigma[0][0].add(&sigma[1][0]),
        sigma[0][1].add(&sigma[1][1]),
    ];
    let total = rows[0].add(&rows[1]);
    let target_total = asm.reduced();
    let mut out = [[Matrix2::zeros(); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            out[a][b] = sigma[a][b]
                .add(&asm.conditionals[0][a].sub(&rows[a]).scale(0.5))
                .add(&asm.conditionals[1][b].sub(&cols[b]).scale(0.5))
                .add(&total.sub(&target_total).scale(0.25));
        }
    }
    out
}

/// Projection onto the PSD cone: clip negative eigenvalues.
fn project_psd(m: &Matrix2) -> Matrix2 {
    let h = m.hermitized();
    let es = eigensystem_hermitian2(&h).expect("hermitized input");
    let mut out = Matrix2::zeros();
    for k in 0..2 {
        let lam = es.eigenvalues[k].max(0.0);
        if lam > 0.0 {
            let v = es.eigenvectors[k];
            out = out.add(&Matrix2::outer(&v, &v).scale(lam));
        }
    }
    out
}

/// Decides hidden-state feasibility with default solver settings.
pub fn lhs_feasible(asm: &Assemblage) -> FeasibilityResult {
    lhs_feasible_with(asm, &SolverConfig::default())
}

pub fn lhs_feasible_with(asm: &Assemblage, cfg: &SolverConfig) -> FeasibilityResult {
    // fast path: exact rank-one model when one setting has pure conditionals
    if let Some(result) = pure_setting_shortcut(asm, cfg) {
        if result.feasible {
            return result;
        }
        // infeasible by the shortcut: fall through so the reported residual
        // is the solver's plateau value
    }
    dykstra_solve(asm, cfg)
}

fn dykstra_solve(asm: &Assemblage, cfg: &SolverConfig) -> FeasibilityResult {
    // independent-split initial guess
    let reduced = asm.reduced();
    let mut x = [[Matrix2::zeros(); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let w = asm.conditionals[1][b].trace().re;
            x[a][b] = asm.conditionals[0][a].scale(w.max(0.0));
        }
    }
    let _ = reduced;

    // Dykstra corrections, one per projection
    let mut p = [[Matrix2::zeros(); 2]; 2];
    let mut q = [[Matrix2::zeros(); 2]; 2];

    let mut best_residual = f64::INFINITY;
    let mut best = x;
    let mut history: Vec<f64> = Vec::with_capacity(cfg.max_iterations.min(1 << 16));

    for iter in 0..cfg.max_iterations {
        // affine projection with correction
        let mut y = [[Matrix2::zeros(); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                y[a][b] = x[a][b].add(&p[a][b]);
            }
        }
        let a_proj = project_marginals(&y, asm);
        for a in 0..2 {
            for b in 0..2 {
                p[a][b] = y[a][b].sub(&a_proj[a][b]);
            }
        }
        // cone projection with correction
        let mut z = [[Matrix2::zeros(); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                z[a][b] = a_proj[a][b].add(&q[a][b]);
            }
        }
        let mut b_proj = [[Matrix2::zeros(); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                b_proj[a][b] = project_psd(&z[a][b]);
                q[a][b] = z[a][b].sub(&b_proj[a][b]);
            }
        }
        x = b_proj;

        // x is PSD by construction; only the marginals can be violated
        let residual = marginal_residual(&x, asm);
        if residual < best_residual {
            best_residual = residual;
            best = x;
        }
        if residual <= cfg.feas_tol {
            return FeasibilityResult {
                feasible: true,
                model: Some(LhsModel { components: x }),
                residual,
                iterations: iter + 1,
            };
        }
        history.push(residual);
        if history.len() > cfg.plateau_window {
            let old = history[history.len() - 1 - cfg.plateau_window];
            let stalled = (old - residual) < cfg.plateau_rel_decrease * old.max(1e-300);
            if stalled && residual > 10.0 * cfg.feas_tol {
                return FeasibilityResult {
                    feasible: false,
                    model: None,
                    residual: best_residual,
                    iterations: iter + 1,
                };
            }
        }
    }

    FeasibilityResult {
        feasible: best_residual <= cfg.feas_tol,
        model: if best_residual <= cfg.feas_tol {
            Some(LhsModel { components: best })
        } else {
            None
        },
        residual: best_residual,
        iterations: cfg.max_iterations,
    }
}

// ---------------------------------------------------------------------------
// Pure-conditional shortcut
// ---------------------------------------------------------------------------

/// When one setting's conditionals are pure and distinct, any hidden state
/// must be one of those two projectors, so feasibility reduces to
/// nonnegative scalar coefficients: the other setting's conditionals must
/// decompose over the same two projectors. Returns None when no setting
/// qualifies or the decomposition is borderline.
pub fn pure_setting_shortcut(asm: &Assemblage, cfg: &SolverConfig) -> Option<FeasibilityResult> {
    for j in 0..2 {
        if let Some(result) = shortcut_for_setting(asm, j, cfg) {
            return Some(result);
        }
    }
    None
}

fn shortcut_for_setting(
    asm: &Assemblage,
    pure_j: usize,
    cfg: &SolverConfig,
) -> Option<FeasibilityResult> {
    let mut projectors = [Matrix2::zeros(); 2];
    let mut weights = [0.0f64; 2];
    let mut kets = [PureQubit::basis0(); 2];
    for a in 0..2 {
        let m = asm.conditionals[pure_j][a].hermitized();
        let w = m.trace().re;
        if w < WEIGHT_TOL {
            return None;
        }
        let normalized = m.scale(1.0 / w);
        if 1.0 - normalized.re_trace_product(&normalized) > 1e-10 {
            return None;
        }
        let es = eigensystem_hermitian2(&normalized).ok()?;
        let v = es.eigenvectors[0];
        kets[a] = PureQubit::from_amplitudes(v[0], v[1]).ok()?;
        projectors[a] = kets[a].projector();
        weights[a] = w;
    }
    let other = 1 - pure_j;
    let mut coeffs = [[0.0f64; 2]; 2]; // [hidden-state index][outcome of other setting]
    let mut worst = 0.0f64;
    if kets[0].fidelity(&kets[1]) > 1.0 - 1e-6 {
        // both outcomes point at the same pure state: rank-one span, all
        // hidden states are that single projector
        for b in 0..2 {
            let r = asm.conditionals[other][b].hermitized();
            let cb = projectors[0].re_trace_product(&r);
            let resid = r.sub(&projectors[0].scale(cb)).frobenius_norm();
            worst = worst.max(resid).max((-cb).max(0.0));
            // split the mass across the two rows by the pure setting's weights
            coeffs[0][b] = weights[0] * cb;
            coeffs[1][b] = weights[1] * cb;
        }
    } else {
        // decompose the other setting's conditionals over the two projectors
        let g00 = projectors[0].re_trace_product(&projectors[0]);
        let g01 = projectors[0].re_trace_product(&projectors[1]);
        let g11 = projectors[1].re_trace_product(&projectors[1]);
        let det = g00 * g11 - g01 * g01;
        for b in 0..2 {
            let r = asm.conditionals[other][b].hermitized();
            let b0 = projectors[0].re_trace_product(&r);
            let b1 = projectors[1].re_trace_product(&r);
            let c0 = (b0 * g11 - b1 * g01) / det;
            let c1 = (b1 * g00 - b0 * g01) / det;
            let resid = r
                .sub(&projectors[0].scale(c0))
                .sub(&projectors[1].scale(c1))
                .frobenius_norm();
            worst = worst.max(resid).max((-c0).max(0.0)).max((-c1).max(0.0));
            coeffs[0][b] = c0;
            coeffs[1][b] = c1;
        }
    }

    if worst > cfg.feas_tol {
        // the shortcut certifies infeasibility; the caller reruns the
        // iterative solver to attach a plateau residual
        return Some(FeasibilityResult {
            feasible: false,
            model: None,
            residual: worst,
            iterations: 0,
        });
    }

    // exact model: sigma_ab = c_ab P_a in (pure setting, other setting) order
    let mut components = [[Matrix2::zeros(); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let c_ab = coeffs[a][b].max(0.0);
            let m = projectors[a].scale(c_ab);
            if pure_j == 0 {
                components[a][b] = m;
            } else {
                components[b][a] = m;
            }
        }
    }
    let model = LhsModel { components };
    let residual = model.residual(asm);
    if residual > cfg.feas_tol {
        return None; // numerically borderline; let the solver decide
    }
    Some(FeasibilityResult {
        feasible: true,
        model: Some(model),
        residual,
        iterations: 0,
    })
}

// ---------------------------------------------------------------------------
// Asymmetric-steering scan
// ---------------------------------------------------------------------------

/// Feasibility in both steering directions for one setting pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairOutcome {
    pub n1: BlochVector,
    pub n2: BlochVector,
    pub a_to_b_feasible: bool,
    pub a_to_b_residual: f64,
    pub b_to_a_feasible: bool,
    pub b_to_a_residual: f64,
}

/// Summary of a scan over setting pairs.
#[derive(Debug, Clone, Serialize)]
pub struct AsymmetricScanReport {
    pub outcomes: Vec<PairOutcome>,
    pub any_a_to_b_infeasible: bool,
    pub all_b_to_a_feasible: bool,
    /// True when some protocol rules out a hidden-state model for Bob while
    /// every sampled protocol admits one for Alice.
    pub one_way_steering_witnessed: bool,
}

/// Runs both steering directions for every setting pair, in input order.
pub fn asymmetric_steering_scan(
    rho: &TwoQubitState,
    pairs: &[(BlochVector, BlochVector)],
) -> AsymmetricScanReport {
    asymmetric_steering_scan_with(rho, pairs, &SolverConfig::default())
}

pub fn asymmetric_steering_scan_with(
    rho: &TwoQubitState,
    pairs: &[(BlochVector, BlochVector)],
    cfg: &SolverConfig,
) -> AsymmetricScanReport {
    use rayon::prelude::*;
    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|(n1, n2)| {
            let run = |party| {
                assemblage_from_state(rho, n1, n2, party)
                    .map(|asm| lhs_feasible_with(&asm, cfg))
                    .unwrap_or(FeasibilityResult {
                        feasible: false,
                        model: None,
                        residual: f64::NAN,
                        iterations: 0,
                    })
            };
            let ab = run(SteeringParty::AToB);
            let ba = run(SteeringParty::BToA);
            PairOutcome {
                n1: *n1,
                n2: *n2,
                a_to_b_feasible: ab.feasible,
                a_to_b_residual: ab.residual,
                b_to_a_feasible: ba.feasible,
                b_to_a_residual: ba.residual,
            }
        })
        .collect();
    let any_a_to_b_infeasible = outcomes.iter().any(|o| !o.a_to_b_feasible);
    let all_b_to_a_feasible = outcomes.iter().all(|o| o.b_to_a_feasible);
    AsymmetricScanReport {
        any_a_to_b_infeasible,
        all_b_to_a_feasible,
        one_way_steering_witnessed: any_a_to_b_infeasible && all_b_to_a_feasible,
        outcomes,
    }
}

/// Deterministic sample of well-separated setting pairs, always including
/// {x, z} as the first entry.
pub fn sample_setting_pairs(count: usize, seed: u64) -> Vec<(BlochVector, BlochVector)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = vec![(BlochVector::x_axis(), BlochVector::z_axis())];
    while pairs.len() < count {
        let mut draw = || loop {
            let v = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let norm2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if norm2 > 1e-4 && norm2 <= 1.0 {
                return BlochVector::from_components(v[0], v[1], v[2]).unwrap();
            }
        };
        let n1 = draw();
        let n2 = draw();
        if n1.dot(&n2).abs() < 0.99 {
            pairs.push((n1, n2));
        }
    }
    pairs
}

#[allow(dead_code)]
fn unused_c64_marker(_: C64) {}
