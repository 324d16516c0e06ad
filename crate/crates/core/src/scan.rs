//! Parameter-grid scans over the built-in state families, with CSV output.

use serde::Serialize;
use thiserror::Error;

use crate::inequality::{
    avn_inequality, linear_inequality_value, InequalityError, SteeringParty,
};
use crate::lhs::{assemblage_from_state, lhs_feasible_with, SolverConfig};
use crate::linalg::BlochVector;
use crate::state::{
    family_color_noise, family_test_state, is_ppt_separable, StateError, TwoQubitState,
};
use crate::steering::{find_avn_direction_with, rotate_alice_to_z, SearchConfig, Tolerances};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid scan configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
}

/// Built-in state families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    TestState,
    ColorNoise,
}

impl Family {
    pub fn build(&self, v: f64, theta: f64) -> Result<TwoQubitState, StateError> {
        match self {
            Family::TestState => family_test_state(v, theta),
            Family::ColorNoise => family_color_noise(v, theta),
        }
    }

    /// Measurement axis along which the family's conditionals are pure,
    /// used for the fixed-direction inequality column.
    pub fn canonical_axis(&self) -> BlochVector {
        match self {
            Family::TestState => BlochVector::x_axis(),
            Family::ColorNoise => BlochVector::z_axis(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::TestState => "test_state",
            Family::ColorNoise => "color_noise",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ScanError> {
        match s {
            "test_state" => Ok(Family::TestState),
            "color_noise" => Ok(Family::ColorNoise),
            other => Err(ScanError::BadConfig(format!("unknown family '{other}'"))),
        }
    }
}

/// Per-grid-point analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    Avn,
    Ineq3,
    LinearN,
    Asym,
}

impl AnalysisKind {
    pub fn parse(s: &str) -> Result<Self, ScanError> {
        match s {
            "avn" => Ok(AnalysisKind::Avn),
            "ineq3" => Ok(AnalysisKind::Ineq3),
            "linearN" | "linearn" | "linear" => Ok(AnalysisKind::LinearN),
            "asym" => Ok(AnalysisKind::Asym),
            other => Err(ScanError::BadConfig(format!("unknown analysis '{other}'"))),
        }
    }
}

/// Scan description: family, grid resolution, analyses, knobs.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub family: Family,
    pub v_steps: usize,
    pub theta_steps: usize,
    pub analyses: Vec<AnalysisKind>,
    /// Direction set for the linear inequality; None picks the default set.
    pub directions: Option<Vec<BlochVector>>,
    pub tolerances: Tolerances,
    pub feas_tol: f64,
    /// Sphere-grid size of the steerability search.
    pub search_grid: usize,
    pub seed: u64,
}

impl ScanConfig {
    pub fn new(family: Family, v_steps: usize, theta_steps: usize) -> Self {
        ScanConfig {
            family,
            v_steps,
            theta_steps,
            analyses: vec![AnalysisKind::Avn, AnalysisKind::Ineq3],
            directions: None,
            tolerances: Tolerances::default(),
            feas_tol: 1e-8,
            search_grid: 2048,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), ScanError> {
        if self.v_steps < 2 || self.theta_steps < 2 {
            return Err(ScanError::BadConfig(
                "grid needs at least 2 steps per axis".into(),
            ));
        }
        if self.analyses.is_empty() {
            return Err(ScanError::BadConfig("no analyses requested".into()));
        }
        let t = &self.tolerances;
        if !(t.purity_tol > 0.0 && t.m_tol > 0.0 && t.distinct_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(ScanError::BadConfig("tolerances must be positive".into()));
        }
        if self.search_grid < 8 {
            return Err(ScanError::BadConfig("search grid too small".into()));
        }
        Ok(())
    }

    fn has(&self, kind: AnalysisKind) -> bool {
        self.analyses.contains(&kind)
    }
}

/// One grid point's outputs; absent analyses stay None and serialize as
/// empty CSV fields.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRecord {
    pub v: f64,
    pub theta: f64,
    pub avn_steerable: Option<bool>,
    pub avn_direction: Option<BlochVector>,
    pub ppt_entangled: Option<bool>,
    pub ineq3_violation: Option<f64>,
    pub linear_violation_a_to_b: Option<f64>,
    pub linear_violation_b_to_a: Option<f64>,
    pub lhs_residual_a_to_b: Option<f64>,
    pub lhs_residual_b_to_a: Option<f64>,
}

/// Evaluates the requested analyses on the full (V, theta) grid.
/// Grid points run in parallel; the returned order is by grid index.
pub fn run_scan(cfg: &ScanConfig) -> Result<Vec<ScanRecord>, ScanError> {
    use rayon::prelude::*;
    cfg.validate()?;
    let directions = match &cfg.directions {
        Some(d) => d.clone(),
        None => crate::inequality::default_directions(),
    };
    if cfg.has(AnalysisKind::LinearN) {
        // fail early on a bad direction set instead of per grid point
        crate::inequality::linear_inequality_bound(&directions)?;
    }

    let points: Vec<(f64, f64)> = grid_points(cfg.v_steps, cfg.theta_steps);
    let records: Vec<ScanRecord> = points
        .par_iter()
        .map(|&(v, theta)| evaluate_point(cfg, &directions, v, theta))
        .collect();
    Ok(records)
}

fn grid_points(v_steps: usize, theta_steps: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(v_steps * theta_steps);
    for i in 0..v_steps {
        let v = i as f64 / (v_steps - 1) as f64;
        for j in 0..theta_steps {
            let theta = std::f64::consts::FRAC_PI_2 * j as f64 / (theta_steps - 1) as f64;
            out.push((v, theta));
        }
    }
    out
}

fn evaluate_point(
    cfg: &ScanConfig,
    directions: &[BlochVector],
    v: f64,
    theta: f64,
) -> ScanRecord {
    let mut rec = ScanRecord {
        v,
        theta,
        avn_steerable: None,
        avn_direction: None,
        ppt_entangled: None,
        ineq3_violation: None,
        linear_violation_a_to_b: None,
        linear_violation_b_to_a: None,
        lhs_residual_a_to_b: None,
        lhs_residual_b_to_a: None,
    };
    let rho = match cfg.family.build(v, theta) {
        Ok(s) => s,
        Err(_) => return rec,
    };
    rec.ppt_entangled = Some(!is_ppt_separable(&rho));

    let needs_verdict = cfg.has(AnalysisKind::Avn) || cfg.has(AnalysisKind::Asym);
    let verdict = needs_verdict.then(|| {
        let search = SearchConfig {
            grid_points: cfg.search_grid,
            refine_candidates: 5,
            tolerances: cfg.tolerances,
        };
        find_avn_direction_with(&rho, &search)
    });

    if cfg.has(AnalysisKind::Avn) {
        let verdict = verdict.as_ref().expect("computed above");
        rec.avn_steerable = Some(verdict.steerable);
        rec.avn_direction = verdict.direction;
    }

    if cfg.has(AnalysisKind::Ineq3) {
        rec.ineq3_violation = avn_inequality(&rho, &cfg.family.canonical_axis())
            .ok()
            .filter(|r| r.constraint_satisfied)
            .map(|r| r.violation);
    }

    if cfg.has(AnalysisKind::LinearN) {
        if let Ok(r) = linear_inequality_value(&rho, directions, SteeringParty::AToB) {
            rec.linear_violation_a_to_b = Some(r.violation);
        }
        if let Ok(r) = linear_inequality_value(&rho, directions, SteeringParty::BToA) {
            rec.linear_violation_b_to_a = Some(r.violation);
        }
    }

    if cfg.has(AnalysisKind::Asym) {
        let verdict = verdict.as_ref().expect("computed above");
        // protocol: the found direction's frame with settings {z, second};
        // falls back to {x, z} when no qualifying direction exists
        let (state, n1, n2) = match (&verdict.direction, &verdict.second_setting) {
            (Some(dir), Some(second)) => {
                let (rotated, _) = rotate_alice_to_z(&rho, dir);
                match TwoQubitState::new(rotated) {
                    Ok(s) => (s, BlochVector::z_axis(), second.direction()),
                    Err(_) => (rho, BlochVector::x_axis(), BlochVector::z_axis()),
                }
            }
            _ => (rho, BlochVector::x_axis(), BlochVector::z_axis()),
        };
        let solver = SolverConfig {
            feas_tol: cfg.feas_tol,
            ..SolverConfig::default()
        };
        for party in [SteeringParty::AToB, SteeringParty::BToA] {
            let residual = assemblage_from_state(&state, &n1, &n2, party)
                .ok()
                .map(|asm| lhs_feasible_with(&asm, &solver).residual);
            match party {
                SteeringParty::AToB => rec.lhs_residual_a_to_b = residual,
                SteeringParty::BToA => rec.lhs_residual_b_to_a = residual,
            }
        }
    }
    rec
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

pub const CSV_COLUMNS: &str = "V,theta,avn_steerable,avn_direction_x,avn_direction_y,\
avn_direction_z,ppt_entangled,ineq3_violation,linearN_violation_AtoB,linearN_violation_BtoA,\
lhs_residual_AtoB,lhs_residual_BtoA";

/// 12 significant digits, locale-independent; NaN becomes an empty field.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.11e}")
    }
}

fn opt_real(x: &Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn opt_bool(x: &Option<bool>) -> String {
    match x {
        Some(true) => "1".into(),
        Some(false) => "0".into(),
        None => String::new(),
    }
}

/// Renders the whole scan to a CSV string: a `#` comment line with the tool
/// version and configuration, the column header, then one row per record.
pub fn render_csv(cfg: &ScanConfig, records: &[ScanRecord]) -> String {
    let mut out = String::new();
    let analyses: Vec<&str> = cfg
        .analyses
        .iter()
        .map(|a| match a {
            AnalysisKind::Avn => "avn",
            AnalysisKind::Ineq3 => "ineq3",
            AnalysisKind::LinearN => "linearN",
            AnalysisKind::Asym => "asym",
        })
        .collect();
    out.push_str(&format!(
        "# qsteer {} scan family={} grid={}x{} analyses={} seed={}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.family.name(),
        cfg.v_steps,
        cfg.theta_steps,
        analyses.join("+"),
        cfg.seed
    ));
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    for r in records {
        let (dx, dy, dz) = match &r.avn_direction {
            Some(n) => (fmt_real(n.x), fmt_real(n.y), fmt_real(n.z)),
            None => (String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_real(r.v),
            fmt_real(r.theta),
            opt_bool(&r.avn_steerable),
            dx,
            dy,
            dz,
            opt_bool(&r.ppt_entangled),
            opt_real(&r.ineq3_violation),
            opt_real(&r.linear_violation_a_to_b),
            opt_real(&r.linear_violation_b_to_a),
            opt_real(&r.lhs_residual_a_to_b),
            opt_real(&r.lhs_residual_b_to_a),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(family: Family, analyses: Vec<AnalysisKind>) -> ScanConfig {
        let mut cfg = ScanConfig::new(family, 5, 5);
        cfg.analyses = analyses;
        cfg.search_grid = 512;
        cfg
    }

    #[test]
    fn config_validation() {
        let mut cfg = ScanConfig::new(Family::ColorNoise, 1, 5);
        assert!(matches!(run_scan(&cfg), Err(ScanError::BadConfig(_))));
        cfg.v_steps = 5;
        cfg.analyses.clear();
        assert!(matches!(run_scan(&cfg), Err(ScanError::BadConfig(_))));
    }

    #[test]
    fn color_noise_ineq3_boundary_structure() {
        let cfg = small_cfg(Family::ColorNoise, vec![AnalysisKind::Ineq3]);
        let records = run_scan(&cfg).unwrap();
        assert_eq!(records.len(), 25);
        for r in &records {
            let violation = r.ineq3_violation.expect("ineq3 evaluates everywhere");
            let boundary = r.v == 0.0
                || r.theta == 0.0
                || (r.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15;
            if boundary {
                assert!(violation.abs() < 1e-9, "V={} theta={}", r.v, r.theta);
            } else {
                assert!(violation > 1e-9, "V={} theta={}", r.v, r.theta);
            }
        }
    }

    #[test]
    fn avn_scan_consistent_with_ppt() {
        let cfg = small_cfg(Family::TestState, vec![AnalysisKind::Avn]);
        let records = run_scan(&cfg).unwrap();
        for r in &records {
            if r.avn_steerable == Some(true) {
                assert_eq!(r.ppt_entangled, Some(true), "V={} theta={}", r.v, r.theta);
            }
        }
    }

    #[test]
    fn linear_scan_symmetric_under_v_flip() {
        let cfg = small_cfg(Family::TestState, vec![AnalysisKind::LinearN]);
        let records = run_scan(&cfg).unwrap();
        let (nv, nt) = (cfg.v_steps, cfg.theta_steps);
        for i in 0..nv {
            for j in 0..nt {
                let a = &records[i * nt + j];
                let b = &records[(nv - 1 - i) * nt + j];
                let va = a.linear_violation_a_to_b.unwrap();
                let vb = b.linear_violation_a_to_b.unwrap();
                assert!((va - vb).abs() < 1e-10, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn csv_deterministic_and_well_formed() {
        let cfg = small_cfg(Family::ColorNoise, vec![AnalysisKind::Ineq3]);
        let a = render_csv(&cfg, &run_scan(&cfg).unwrap());
        let b = render_csv(&cfg, &run_scan(&cfg).unwrap());
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert!(lines.next().unwrap().starts_with("# qsteer "));
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS);
        let expected_fields = CSV_COLUMNS.split(',').count();
        for line in lines {
            assert_eq!(line.split(',').count(), expected_fields);
            assert!(!line.contains("NaN") && !line.contains("nan"));
        }
    }

    #[test]
    fn fmt_real_significant_digits() {
        assert_eq!(fmt_real(0.25), "2.50000000000e-1");
        assert_eq!(fmt_real(f64::NAN), "");
        assert!(fmt_real(1.0 / 3.0).starts_with("3.33333333333e-1"));
    }
}
