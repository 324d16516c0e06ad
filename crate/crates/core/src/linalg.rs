//! Dense complex linear algebra for 2x2 and 4x4 matrices.
//!
//! Everything here is sized for two qubits: complex 2x2/4x4 arithmetic,
//! Kronecker products, partial traces, Hermitian eigendecompositions
//! (closed form for 2x2, Jacobi sweeps for 4x4), and Bloch-sphere geometry.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Shorthand complex constructor.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("vector ({x}, {y}, {z}) has norm {norm}, expected a unit vector")]
    NonUnitVector { x: f64, y: f64, z: f64, norm: f64 },
    #[error("matrix is not Hermitian: ||h - h'|| = {residual:.3e}")]
    NotHermitian { residual: f64 },
    #[error("non-finite component in input")]
    NonFinite,
}

// ---------------------------------------------------------------------------
// 2x2 complex matrices
// ---------------------------------------------------------------------------

/// General (not necessarily Hermitian) complex 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub e: [[C64; 2]; 2],
}

impl Matrix2 {
    pub fn zeros() -> Self {
        Matrix2 {
            e: [[C64::default(); 2]; 2],
        }
    }

    pub fn identity() -> Self {
        Matrix2::diag(c(1.0, 0.0), c(1.0, 0.0))
    }

    pub fn from_rows(e: [[C64; 2]; 2]) -> Self {
        Matrix2 { e }
    }

    pub fn diag(d0: C64, d1: C64) -> Self {
        let mut m = Matrix2::zeros();
        m.e[0][0] = d0;
        m.e[1][1] = d1;
        m
    }

    pub fn pauli_x() -> Self {
        Matrix2::from_rows([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]])
    }

    pub fn pauli_y() -> Self {
        Matrix2::from_rows([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]])
    }

    pub fn pauli_z() -> Self {
        Matrix2::diag(c(1.0, 0.0), c(-1.0, 0.0))
    }

    /// Outer product |u><v|.
    pub fn outer(u: &[C64; 2], v: &[C64; 2]) -> Self {
        let mut m = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m.e[i][j] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m.e[i][j] = self.e[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        self.e[0][0] + self.e[1][1]
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_c(c(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        let mut m = *self;
        for row in m.e.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        m
    }

    pub fn mul(&self, other: &Matrix2) -> Self {
        let mut m = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = C64::default();
                for k in 0..2 {
                    acc += self.e[i][k] * other.e[k][j];
                }
                m.e[i][j] = acc;
            }
        }
        m
    }

    pub fn add(&self, other: &Matrix2) -> Self {
        let mut m = *self;
        for i in 0..2 {
            for j in 0..2 {
                m.e[i][j] += other.e[i][j];
            }
        }
        m
    }

    pub fn sub(&self, other: &Matrix2) -> Self {
        let mut m = *self;
        for i in 0..2 {
            for j in 0..2 {
                m.e[i][j] -= other.e[i][j];
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|x| x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().flatten().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius_norm()
    }

    /// Hermitian part (self + adjoint)/2.
    pub fn hermitized(&self) -> Self {
        self.add(&self.adjoint()).scale(0.5)
    }

    pub fn apply(&self, v: &[C64; 2]) -> [C64; 2] {
        [
            self.e[0][0] * v[0] + self.e[0][1] * v[1],
            self.e[1][0] * v[0] + self.e[1][1] * v[1],
        ]
    }

    /// Re tr(self * other); the real Hilbert-Schmidt pairing.
    pub fn re_trace_product(&self, other: &Matrix2) -> f64 {
        let mut acc = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                acc += (self.e[i][k] * other.e[k][i]).re;
            }
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// 4x4 complex matrices
// ---------------------------------------------------------------------------

/// General complex 4x4 matrix in the |00>,|01>,|10>,|11> product basis
/// (first tensor factor is Alice).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix4 {
    pub e: [[C64; 4]; 4],
}

impl Matrix4 {
    pub fn zeros() -> Self {
        Matrix4 {
            e: [[C64::default(); 4]; 4],
        }
    }

    pub fn identity() -> Self {
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            m.e[i][i] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(e: [[C64; 4]; 4]) -> Self {
        Matrix4 { e }
    }

    pub fn diag(d: [f64; 4]) -> Self {
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            m.e[i][i] = c(d[i], 0.0);
        }
        m
    }

    /// Outer product |u><v| of two 4-vectors.
    pub fn outer(u: &[C64; 4], v: &[C64; 4]) -> Self {
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] = u[i] * v[j].conj();
            }
        }
        m
    }

    /// Assemble from 2x2 blocks indexed by Alice's basis labels.
    pub fn from_blocks(blocks: [[Matrix2; 2]; 2]) -> Self {
        let mut m = Matrix4::zeros();
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        m.e[2 * a + i][2 * b + j] = blocks[a][b].e[i][j];
                    }
                }
            }
        }
        m
    }

    /// The 2x2 block <a|_A m |b>_A.
    pub fn block(&self, a: usize, b: usize) -> Matrix2 {
        let mut m = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m.e[i][j] = self.e[2 * a + i][2 * b + j];
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] = self.e[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.e[i][i]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for row in m.e.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        m
    }

    pub fn mul(&self, other: &Matrix4) -> Self {
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = C64::default();
                for k in 0..4 {
                    acc += self.e[i][k] * other.e[k][j];
                }
                m.e[i][j] = acc;
            }
        }
        m
    }

    pub fn add(&self, other: &Matrix4) -> Self {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] += other.e[i][j];
            }
        }
        m
    }

    pub fn sub(&self, other: &Matrix4) -> Self {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] -= other.e[i][j];
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|x| x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().flatten().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius_norm()
    }

    pub fn hermitized(&self) -> Self {
        self.add(&self.adjoint()).scale(0.5)
    }

    /// Re tr(self * other).
    pub fn re_trace_product(&self, other: &Matrix4) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            for k in 0..4 {
                acc += (self.e[i][k] * other.e[k][i]).re;
            }
        }
        acc
    }
}

/// Kronecker product a (x) b with Alice as the first factor.
pub fn tensor(a: &Matrix2, b: &Matrix2) -> Matrix4 {
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m.e[2 * i + k][2 * j + l] = a.e[i][j] * b.e[k][l];
                }
            }
        }
    }
    m
}

/// Trace out Alice: sum_a <a|_A m |a>_A.
pub fn partial_trace_a(m: &Matrix4) -> Matrix2 {
    let mut out = Matrix2::zeros();
    for a in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                out.e[i][j] += m.e[2 * a + i][2 * a + j];
            }
        }
    }
    out
}

/// Trace out Bob: out[a][b] = sum_i m[(a,i)][(b,i)].
pub fn partial_trace_b(m: &Matrix4) -> Matrix2 {
    let mut out = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            for i in 0..2 {
                out.e[a][b] += m.e[2 * a + i][2 * b + i];
            }
        }
    }
    out
}

/// Partial transpose over Bob's factor.
pub fn partial_transpose_b(m: &Matrix4) -> Matrix4 {
    let mut out = Matrix4::zeros();
    for a in 0..2 {
        for b in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out.e[2 * a + i][2 * b + j] = m.e[2 * a + j][2 * b + i];
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Bloch vectors
// ---------------------------------------------------------------------------

/// Unit direction on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    /// Accepts a vector whose norm deviates from 1 by at most 1e-6 and
    /// stores it renormalized to machine precision.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, LinalgError> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let norm = (x * x + y * y + z * z).sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(LinalgError::NonUnitVector { x, y, z, norm });
        }
        Ok(BlochVector {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    pub fn from_components(x: f64, y: f64, z: f64) -> Result<Self, LinalgError> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let norm = (x * x + y * y + z * z).sqrt();
        if norm < 1e-12 {
            return Err(LinalgError::NonUnitVector { x, y, z, norm });
        }
        Ok(BlochVector {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Polar angle theta in [0, pi], azimuth phi in (-pi, pi].
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        BlochVector {
            x: theta.sin() * phi.cos(),
            y: theta.sin() * phi.sin(),
            z: theta.cos(),
        }
    }

    pub fn angles(&self) -> (f64, f64) {
        (self.z.clamp(-1.0, 1.0).acos(), self.y.atan2(self.x))
    }

    pub fn x_axis() -> Self {
        BlochVector { x: 1.0, y: 0.0, z: 0.0 }
    }

    pub fn y_axis() -> Self {
        BlochVector { x: 0.0, y: 1.0, z: 0.0 }
    }

    pub fn z_axis() -> Self {
        BlochVector { x: 0.0, y: 0.0, z: 1.0 }
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn neg(&self) -> Self {
        BlochVector {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// n . sigma for a Bloch direction n.
pub fn n_dot_sigma(n: &BlochVector) -> Matrix2 {
    Matrix2::from_rows([
        [c(n.z, 0.0), c(n.x, -n.y)],
        [c(n.x, n.y), c(-n.z, 0.0)],
    ])
}

/// Projector P^n_a = [1 + (-1)^a n.sigma]/2 onto the outcome-a eigenstate.
pub fn direction_projector(n: &BlochVector, outcome: u8) -> Matrix2 {
    let sign = if outcome == 0 { 1.0 } else { -1.0 };
    Matrix2::identity()
        .add(&n_dot_sigma(n).scale(sign))
        .scale(0.5)
}

/// Unitary U with U (n.sigma) U' = sigma_z, phase-fixed so the first
/// nonzero column entry is real non-negative.
///
/// At the antipode n = -z the rotation axis is ill-defined; the x axis is
/// used there.
pub fn rotation_to_z(n: &BlochVector) -> Matrix2 {
    let s_perp = (n.x * n.x + n.y * n.y).sqrt();
    if s_perp < 1e-15 {
        return if n.z > 0.0 {
            Matrix2::identity()
        } else {
            // pi rotation about x
            fix_unitary_phase(&Matrix2::from_rows([
                [c(0.0, 0.0), c(0.0, -1.0)],
                [c(0.0, -1.0), c(0.0, 0.0)],
            ]))
        };
    }
    // axis (n x z)/|n x z| = (n_y, -n_x, 0)/s_perp
    let ux = n.y / s_perp;
    let uy = -n.x / s_perp;
    // half-angle functions from the well-conditioned one of 1 +- n_z:
    // near a pole the other difference cancels catastrophically while
    // s_perp stays accurate, and sin(theta) = 2 sh ch = s_perp
    let z = n.z.clamp(-1.0, 1.0);
    let (ch, sh) = if z >= 0.0 {
        let ch = ((1.0 + z) / 2.0).sqrt();
        (ch, s_perp / (2.0 * ch))
    } else {
        let sh = ((1.0 - z) / 2.0).sqrt();
        (s_perp / (2.0 * sh), sh)
    };
    // exp(-i theta/2 u.sigma)
    let axis = Matrix2::from_rows([
        [c(0.0, 0.0), c(ux, -uy)],
        [c(ux, uy), c(0.0, 0.0)],
    ]);
    let m = Matrix2::identity()
        .scale(ch)
        .sub(&axis.scale_c(c(0.0, sh)));
    fix_unitary_phase(&m)
}

/// Multiplies by a global phase so the first nonzero entry, scanning
/// column-major, becomes real non-negative.
pub fn fix_unitary_phase(u: &Matrix2) -> Matrix2 {
    for j in 0..2 {
        for i in 0..2 {
            let x = u.e[i][j];
            if x.norm() > 1e-14 {
                return u.scale_c(x.conj() / x.norm());
            }
        }
    }
    *u
}

// ---------------------------------------------------------------------------
// Eigendecompositions
// ---------------------------------------------------------------------------

/// Eigendecomposition of a Hermitian 2x2 matrix, eigenvalues descending,
/// eigenvectors orthonormal with the first nonzero amplitude real non-negative.
#[derive(Debug, Clone, Copy)]
pub struct EigenSystem2 {
    pub eigenvalues: [f64; 2],
    pub eigenvectors: [[C64; 2]; 2],
}

/// Closed-form eigendecomposition of a Hermitian 2x2 matrix.
pub fn eigensystem_hermitian2(h: &Matrix2) -> Result<EigenSystem2, LinalgError> {
    let residual = h.hermiticity_residual();
    if residual > 1e-10 {
        return Err(LinalgError::NotHermitian { residual });
    }
    let m = h.hermitized();
    let a = m.e[0][0].re;
    let cc = m.e[1][1].re;
    let b = m.e[0][1];
    let half_diff = (a - cc) / 2.0;
    let d = (half_diff * half_diff + b.norm_sqr()).sqrt();
    let mean = (a + cc) / 2.0;
    let l1 = mean + d;
    let l2 = mean - d;

    let (v1, v2) = if d < 1e-15 {
        // degenerate: canonical basis, deterministic
        ([c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)])
    } else {
        // candidate eigenvector for l1; pick the numerically larger form
        let cand_a = [b, c(l1 - a, 0.0)];
        let cand_b = [c(l1 - cc, 0.0), b.conj()];
        let na = cand_a[0].norm_sqr() + cand_a[1].norm_sqr();
        let nb = cand_b[0].norm_sqr() + cand_b[1].norm_sqr();
        let raw = if na >= nb { cand_a } else { cand_b };
        let norm = (raw[0].norm_sqr() + raw[1].norm_sqr()).sqrt();
        let v1 = [raw[0] / norm, raw[1] / norm];
        let v2 = [-(v1[1].conj()), v1[0].conj()];
        (v1, v2)
    };
    Ok(EigenSystem2 {
        eigenvalues: [l1, l2],
        eigenvectors: [fix_vector_phase(&v1), fix_vector_phase(&v2)],
    })
}

/// Phase-fix a 2-vector: first amplitude above threshold becomes real >= 0.
pub fn fix_vector_phase(v: &[C64; 2]) -> [C64; 2] {
    for i in 0..2 {
        if v[i].norm() > 1e-12 {
            let phase = v[i].conj() / v[i].norm();
            return [v[0] * phase, v[1] * phase];
        }
    }
    *v
}

const JACOBI_OFFDIAG_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Eigenvalues of a Hermitian 4x4 matrix, sorted descending.
///
/// Cyclic complex Jacobi sweeps in fixed (p, q) order; converges once the
/// off-diagonal Frobenius norm drops below 1e-12.
pub fn eigenvalues_hermitian4(h: &Matrix4) -> Result<[f64; 4], LinalgError> {
    let residual = h.hermiticity_residual();
    if residual > 1e-8 {
        return Err(LinalgError::NotHermitian { residual });
    }
    let mut a = h.hermitized().e;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                if p != q {
                    off += a[p][q].norm_sqr();
                }
            }
        }
        if off.sqrt() < JACOBI_OFFDIAG_TOL {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a[p][q];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = a[p][p].re;
                let aqq = a[q][q].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                // G_pp = c, G_pq = s, G_qp = -s e^{-i phi}, G_qq = c e^{-i phi}
                let g_qp = -phase.conj() * sth;
                let g_qq = phase.conj() * cth;
                // column update: A <- A G
                for i in 0..4 {
                    let x = a[i][p];
                    let y = a[i][q];
                    a[i][p] = x * cth + y * g_qp;
                    a[i][q] = x * sth + y * g_qq;
                }
                // row update: A <- G' A
                for j in 0..4 {
                    let x = a[p][j];
                    let y = a[q][j];
                    a[p][j] = x * cth + y * g_qp.conj();
                    a[q][j] = x * sth + y * g_qq.conj();
                }
            }
        }
    }
    let mut vals = [a[0][0].re, a[1][1].re, a[2][2].re, a[3][3].re];
    vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(vals)
}

/// Inner product <u|v> of two 2-vectors.
pub fn inner2(u: &[C64; 2], v: &[C64; 2]) -> C64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}
