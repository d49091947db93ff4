//! Dense complex matrices of fixed small size, Bloch vectors and a real 3×3
//! matrix type with its singular-value decomposition.
//!
//! Two-qubit operators use the basis order `|Hh⟩, |Hv⟩, |Vh⟩, |Vv⟩`, i.e. the
//! row/column index of `a ⊗ b` is `2·(polarization index) + mode index`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance for matrix equality checks.
pub const TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix of dimension `N`, stored row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat<const N: usize>(pub [[C64; N]; N]);

pub type CMat2 = Mat<2>;
pub type CMat4 = Mat<4>;
pub type CMat8 = Mat<8>;

impl<const N: usize> Mat<N> {
    pub fn zeros() -> Self {
        Mat([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_diag(d: [C64; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn from_real(rows: [[f64; N]; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = C64::new(rows[i][j], 0.0);
            }
        }
        m
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[C64; N], b: &[C64; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = a[i] * b[j].conj();
            }
        }
        m
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z *= s);
        m
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius distance `‖self − other‖_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).frobenius_norm()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `‖m − m†‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.distance(&self.dagger())
    }

    /// `‖m†m − I‖_F`.
    pub fn unitarity_residual(&self) -> f64 {
        (self.dagger() * *self).distance(&Self::identity())
    }

    pub fn apply(&self, v: &[C64; N]) -> [C64; N] {
        let mut out = [ZERO; N];
        for i in 0..N {
            out[i] = (0..N).map(|j| self.0[i][j] * v[j]).sum();
        }
        out
    }

    /// Similarity transform `self · m · self†`.
    pub fn conjugate(&self, m: &Self) -> Self {
        *self * *m * self.dagger()
    }

    /// Eigen-decomposition of a Hermitian matrix. Eigenvalues are returned in
    /// ascending order, each with a unit-norm eigenvector.
    ///
    /// 2×2 inputs are solved in closed form, larger ones by cyclic Jacobi
    /// rotations.
    pub fn eig_hermitian(&self) -> Result<Vec<(f64, [C64; N])>> {
        let scale = self.frobenius_norm().max(1.0);
        let residual = self.hermiticity_residual();
        if residual > TOL * scale {
            return Err(Error::NotHermitian(residual));
        }
        let mut pairs = if N == 2 {
            eig2(self)
        } else {
            jacobi_eig(self)
        };
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(pairs)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig_hermitian()?[0].0)
    }
}

fn eig2<const N: usize>(m: &Mat<N>) -> Vec<(f64, [C64; N])> {
    debug_assert_eq!(N, 2);
    let a = m.0[0][0].re;
    let d = m.0[1][1].re;
    // average the off-diagonal pair so tiny Hermiticity defects do not bias the vectors
    let b = (m.0[0][1] + m.0[1][0].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let r = (half_gap * half_gap + b.norm_sqr()).sqrt();
    let (lo, hi) = (mean - r, mean + r);
    let basis = |k: usize| {
        let mut v = [ZERO; N];
        v[k] = ONE;
        v
    };
    if b.norm() <= 1e-300 {
        let (e0, e1) = (basis(0), basis(1));
        return vec![(a, e0), (d, e1)];
    }
    let vec_for = |lambda: f64| {
        // (A − λ)v = 0 ⇒ v ∝ (b, λ − a), or (λ − d, b*) for numerical stability
        let (x, y) = if (lambda - a).abs() >= (lambda - d).abs() {
            (b, C64::new(lambda - a, 0.0))
        } else {
            (C64::new(lambda - d, 0.0), b.conj())
        };
        let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let mut v = [ZERO; N];
        v[0] = x / n;
        v[1] = y / n;
        v
    };
    vec![(lo, vec_for(lo)), (hi, vec_for(hi))]
}

fn jacobi_eig<const N: usize>(m: &Mat<N>) -> Vec<(f64, [C64; N])> {
    let mut a = *m;
    let mut v = Mat::<N>::identity();
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.0[i][j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let b = a.0[p][q];
                let bn = b.norm();
                if bn <= 1e-300 {
                    continue;
                }
                let phase = b / bn;
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                let tau = (aqq - app) / (2.0 * bn);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = diag(1, conj(phase)) · [[c, s], [−s, c]] restricted to (p, q)
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                // A ← A J
                for k in 0..N {
                    let akp = a.0[k][p];
                    let akq = a.0[k][q];
                    a.0[k][p] = akp * jpp + akq * jqp;
                    a.0[k][q] = akp * jpq + akq * jqq;
                    let vkp = v.0[k][p];
                    let vkq = v.0[k][q];
                    v.0[k][p] = vkp * jpp + vkq * jqp;
                    v.0[k][q] = vkp * jpq + vkq * jqq;
                }
                // A ← J† A
                for k in 0..N {
                    let apk = a.0[p][k];
                    let aqk = a.0[q][k];
                    a.0[p][k] = jpp.conj() * apk + jqp.conj() * aqk;
                    a.0[q][k] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a.0[p][q] = ZERO;
                a.0[q][p] = ZERO;
            }
        }
    }
    (0..N)
        .map(|k| {
            let mut col = [ZERO; N];
            for i in 0..N {
                col[i] = v.0[i][k];
            }
            (a.0[k][k].re, col)
        })
        .collect()
}

impl<const N: usize> Default for Mat<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Index<(usize, usize)> for Mat<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Mat<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Mul for Mat<N> {
    type Output = Mat<N>;
    fn mul(self, rhs: Mat<N>) -> Mat<N> {
        let mut m = Mat::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

impl<const N: usize> Add for Mat<N> {
    type Output = Mat<N>;
    fn add(mut self, rhs: Mat<N>) -> Mat<N> {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Mat<N> {
    type Output = Mat<N>;
    fn sub(mut self, rhs: Mat<N>) -> Mat<N> {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for Mat<N> {
    type Output = Mat<N>;
    fn neg(self) -> Mat<N> {
        self.scale_re(-1.0)
    }
}

impl<const N: usize> fmt::Debug for Mat<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for row in &self.0 {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `a ⊗ b`; `C` must equal `A·B`.
pub fn kron<const A: usize, const B: usize, const C: usize>(a: &Mat<A>, b: &Mat<B>) -> Mat<C> {
    assert_eq!(A * B, C, "kron output dimension mismatch");
    let mut m = Mat::<C>::zeros();
    for i in 0..A {
        for j in 0..A {
            for k in 0..B {
                for l in 0..B {
                    m.0[i * B + k][j * B + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    m
}

/// Two-qubit operator `a ⊗ b` in (polarization ⊗ mode) order.
pub fn tensor(a: &CMat2, b: &CMat2) -> CMat4 {
    kron(a, b)
}

impl CMat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat([[a, b], [c, d]])
    }

    pub fn pauli_x() -> Self {
        Self::from_real([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn pauli_y() -> Self {
        Mat([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::from_real([[1.0, 0.0], [0.0, -1.0]])
    }

    /// Quarter-wave retarder with its fast axis horizontal, `diag(1, i)`.
    pub fn q0() -> Self {
        Self::from_diag([ONE, I])
    }

    /// Half-wave retarder (and mirror action) with horizontal axis, `diag(1, −1)`.
    pub fn h0() -> Self {
        Self::pauli_z()
    }

    /// Real rotation `[[cos θ, −sin θ], [sin θ, cos θ]]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_real([[c, -s], [s, c]])
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Frobenius distance minimised over a global phase, `√(4 − 2|Tr(u†v)|)`.
    ///
    /// Evaluated as `‖u − e^{iφ}v‖_F` at the optimal phase `φ = −arg Tr(u†v)`,
    /// which avoids the cancellation in the square-root form near zero.
    pub fn phase_invariant_distance(&self, other: &CMat2) -> Result<f64> {
        for m in [self, other] {
            let r = m.unitarity_residual();
            if r > 1e-8 {
                return Err(Error::NotUnitary(r));
            }
        }
        let overlap = (self.dagger() * *other).trace();
        let phase = if overlap.norm() > 1e-300 {
            overlap.conj() / overlap.norm()
        } else {
            ONE
        };
        Ok(self.distance(&other.scale(phase)))
    }

    /// Pauli coefficients `(Tr ρσx, Tr ρσy, Tr ρσz)`.
    pub fn bloch(&self) -> BlochVec {
        BlochVec::new(
            (self.0[0][1] + self.0[1][0]).re,
            (I * (self.0[0][1] - self.0[1][0])).re,
            (self.0[0][0] - self.0[1][1]).re,
        )
    }
}

/// Pauli vector `r` of a qubit state `ρ = ½(I + r·σ)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BlochVec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVec {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVec { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        BlochVec::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &BlochVec) -> f64 {
        BlochVec::new(self.x - other.x, self.y - other.y, self.z - other.z).norm()
    }

    pub fn scaled(&self, s: f64) -> BlochVec {
        BlochVec::new(self.x * s, self.y * s, self.z * s)
    }

    /// `½(I + r·σ)`.
    pub fn density(&self) -> CMat2 {
        let h = 0.5;
        CMat2::new(
            C64::new(h * (1.0 + self.z), 0.0),
            C64::new(h * self.x, -h * self.y),
            C64::new(h * self.x, h * self.y),
            C64::new(h * (1.0 - self.z), 0.0),
        )
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.norm() <= 1.0 + tol
    }
}

/// Real 3×3 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RMat3(pub [[f64; 3]; 3]);

impl RMat3 {
    pub fn identity() -> Self {
        RMat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn diag(d: [f64; 3]) -> Self {
        RMat3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        RMat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn frobenius_distance(&self, other: &RMat3) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += (self.0[i][j] - other.0[i][j]).powi(2);
            }
        }
        acc.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    fn column(&self, j: usize) -> [f64; 3] {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    fn set_column(&mut self, j: usize, c: [f64; 3]) {
        for i in 0..3 {
            self.0[i][j] = c[i];
        }
    }
}

impl Mul for RMat3 {
    type Output = RMat3;
    fn mul(self, rhs: RMat3) -> RMat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        RMat3(m)
    }
}

/// Singular-value decomposition with proper rotations.
#[derive(Clone, Copy, Debug)]
pub struct Svd3 {
    pub left: RMat3,
    pub singular: [f64; 3],
    pub right: RMat3,
}

impl Svd3 {
    pub fn reconstruct(&self) -> RMat3 {
        self.left * RMat3::diag(self.singular) * self.right.transpose()
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize3(a: [f64; 3]) -> Option<[f64; 3]> {
    let n = dot3(a, a).sqrt();
    (n > 1e-300).then(|| [a[0] / n, a[1] / n, a[2] / n])
}

/// Factor `t = L · diag(s) · Rᵀ` with `det L = det R = +1`.
///
/// One-sided (Hestenes) Jacobi on the columns of `t`. Singular values keep the
/// column order of the input; a reflection in either factor is absorbed by
/// negating the smallest-magnitude singular value, so entries of `s` may be
/// negative.
pub fn svd3(t: &RMat3) -> Svd3 {
    let mut w = *t;
    let mut v = RMat3::identity();
    let scale = t.0.iter().flatten().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..2 {
            for q in (p + 1)..3 {
                let cp = w.column(p);
                let cq = w.column(q);
                let alpha = dot3(cp, cp);
                let beta = dot3(cq, cq);
                let gamma = dot3(cp, cq);
                if gamma.abs() <= 1e-17 * scale || gamma.abs() <= 1e-16 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let tt = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let tt = if zeta == 0.0 { 1.0 } else { tt };
                let c = 1.0 / (1.0 + tt * tt).sqrt();
                let s = c * tt;
                for i in 0..3 {
                    let (a, b) = (w.0[i][p], w.0[i][q]);
                    w.0[i][p] = c * a - s * b;
                    w.0[i][q] = s * a + c * b;
                    let (a, b) = (v.0[i][p], v.0[i][q]);
                    v.0[i][p] = c * a - s * b;
                    v.0[i][q] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut s = [0.0; 3];
    let mut left = RMat3::default();
    let max_norm = (0..3).map(|j| dot3(w.column(j), w.column(j)).sqrt()).fold(0.0, f64::max);
    let mut filled = [false; 3];
    for j in 0..3 {
        let col = w.column(j);
        let n = dot3(col, col).sqrt();
        s[j] = n;
        if n > 1e-13 * max_norm.max(1e-300) {
            left.set_column(j, [col[0] / n, col[1] / n, col[2] / n]);
            filled[j] = true;
        }
    }
    // complete the left basis for (near-)null columns
    for j in 0..3 {
        if filled[j] {
            continue;
        }
        let others: Vec<[f64; 3]> = (0..3).filter(|&k| k != j && filled[k]).map(|k| left.column(k)).collect();
        let c = match others.as_slice() {
            [a, b] => cross3(*a, *b),
            _ => {
                let a = others.first().copied();
                let mut pick = [0.0; 3];
                for e in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
                    let mut cand = e;
                    if let Some(a) = a {
                        let d = dot3(cand, a);
                        cand = [cand[0] - d * a[0], cand[1] - d * a[1], cand[2] - d * a[2]];
                    }
                    if dot3(cand, cand) > 0.1 {
                        pick = cand;
                        break;
                    }
                }
                pick
            }
        };
        left.set_column(j, normalize3(c).unwrap_or([0.0, 0.0, 1.0]));
        filled[j] = true;
    }

    let smallest = (0..3)
        .min_by(|&a, &b| s[a].abs().total_cmp(&s[b].abs()))
        .unwrap_or(2);
    if left.det() < 0.0 {
        let c = left.column(smallest);
        left.set_column(smallest, [-c[0], -c[1], -c[2]]);
        s[smallest] = -s[smallest];
    }
    if v.det() < 0.0 {
        let c = v.column(smallest);
        v.set_column(smallest, [-c[0], -c[1], -c[2]]);
        s[smallest] = -s[smallest];
    }
    Svd3 {
        left,
        singular: s,
        right: v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn arb_c() -> impl Strategy<Value = C64> {
        (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
    }

    fn arb_mat2() -> impl Strategy<Value = CMat2> {
        proptest::array::uniform4(arb_c()).prop_map(|e| CMat2::new(e[0], e[1], e[2], e[3]))
    }

    fn arb_unitary() -> impl Strategy<Value = CMat2> {
        (0.0..PI, -PI..PI, -PI..PI, -PI..PI).prop_map(|(x, a, b, g)| {
            let u = C64::from_polar(x.cos(), a);
            let w = C64::from_polar(x.sin(), b);
            CMat2::new(u, -w.conj(), w, u.conj()).scale(C64::from_polar(1.0, g))
        })
    }

    fn random_rotation(a: f64, b: f64, g: f64) -> RMat3 {
        let rz = |t: f64| RMat3([[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]]);
        let ry = |t: f64| RMat3([[t.cos(), 0.0, t.sin()], [0.0, 1.0, 0.0], [-t.sin(), 0.0, t.cos()]]);
        rz(a) * ry(b) * rz(g)
    }

    #[test]
    fn tensor_examples() {
        let id = CMat2::identity();
        assert!(tensor(&id, &id).approx_eq(&CMat4::identity(), 0.0));
        let hh = tensor(&CMat2::h0(), &CMat2::h0());
        let expect = CMat4::from_real([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]);
        assert!(hh.approx_eq(&expect, 0.0));
        let xi = tensor(&CMat2::pauli_x(), &id);
        let expect = CMat4::from_real([
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ]);
        assert!(xi.approx_eq(&expect, 0.0));
    }

    #[test]
    fn dagger_examples() {
        assert_eq!(CMat2::identity().dagger(), CMat2::identity());
        assert_eq!(CMat2::q0().dagger(), CMat2::from_diag([ONE, -I]));
        let k1 = CMat2::from_real([[0.0, 0.5], [0.0, 0.0]]);
        assert_eq!(k1.dagger(), CMat2::from_real([[0.0, 0.0], [0.5, 0.0]]));
    }

    #[test]
    fn phase_distance_examples() {
        let id = CMat2::identity();
        assert!(id.phase_invariant_distance(&id).unwrap() < 1e-12);
        assert!(id.phase_invariant_distance(&(-id)).unwrap() < 1e-12);
        let d = id.phase_invariant_distance(&CMat2::pauli_x()).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        let bad = CMat2::from_real([[1.0, 0.0], [0.0, 2.0]]);
        assert!(matches!(id.phase_invariant_distance(&bad), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn eig_examples() {
        let e = CMat2::pauli_z().eig_hermitian().unwrap();
        assert!((e[0].0 + 1.0).abs() < 1e-14 && (e[1].0 - 1.0).abs() < 1e-14);
        let plus = (CMat2::identity() + CMat2::pauli_x()).scale_re(0.5);
        let e = plus.eig_hermitian().unwrap();
        assert!(e[0].0.abs() < 1e-14 && (e[1].0 - 1.0).abs() < 1e-14);
        assert!(matches!(
            CMat2::from_real([[0.0, 1.0], [0.0, 0.0]]).eig_hermitian(),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn eig4_degenerate_and_diagonal() {
        let d = CMat4::from_diag([c(3.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
        let e = d.eig_hermitian().unwrap();
        let vals: Vec<f64> = e.iter().map(|p| p.0).collect();
        assert_eq!(vals, vec![-1.0, 0.5, 0.5, 3.0]);
    }

    #[test]
    fn svd3_examples() {
        let s = svd3(&RMat3::identity());
        assert_eq!(s.singular, [1.0, 1.0, 1.0]);
        assert!(s.left.frobenius_distance(&RMat3::identity()) < 1e-15);
        let t = RMat3::diag([0.5, 0.5, 1.0]);
        let s = svd3(&t);
        assert_eq!(s.singular, [0.5, 0.5, 1.0]);
        assert!(s.reconstruct().frobenius_distance(&t) <= 1e-12);
        let r = random_rotation(0.3, 1.1, -2.0);
        let t = r * RMat3::diag([0.9, -0.4, 0.2]) * r.transpose();
        let s = svd3(&t);
        let mut got: Vec<f64> = s.singular.iter().map(|x| x.abs()).collect();
        got.sort_by(f64::total_cmp);
        assert!((got[0] - 0.2).abs() < 1e-12 && (got[1] - 0.4).abs() < 1e-12 && (got[2] - 0.9).abs() < 1e-12);
        let prod: f64 = s.singular.iter().product();
        assert!((prod - 0.9 * -0.4 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn svd3_rank_deficient() {
        let r = random_rotation(1.0, 0.2, 0.7);
        for d in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.7, 0.0, -0.3]] {
            let t = r * RMat3::diag(d);
            let s = svd3(&t);
            assert!(s.reconstruct().frobenius_distance(&t) <= 1e-10, "{d:?}");
            assert!((s.left.det() - 1.0).abs() < 1e-10);
            assert!((s.right.det() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bloch_roundtrip() {
        let r = BlochVec::new(0.3, -0.2, 0.5);
        assert!(r.density().bloch().distance(&r) < 1e-15);
        assert!((r.density().trace().re - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn tensor_mixed_product(a in arb_mat2(), b in arb_mat2(), cc in arb_mat2(), d in arb_mat2()) {
            let lhs = tensor(&a, &b) * tensor(&cc, &d);
            let rhs = tensor(&(a * cc), &(b * d));
            prop_assert!(lhs.distance(&rhs) <= 1e-12);
        }

        #[test]
        fn phase_distance_ignores_global_phase(u in arb_unitary(), phi in -PI..PI) {
            let v = u.scale(C64::from_polar(1.0, phi));
            prop_assert!(u.phase_invariant_distance(&v).unwrap() <= 1e-10);
        }

        #[test]
        fn eig2_reconstruction(a in arb_mat2()) {
            let h = (a + a.dagger()).scale_re(0.5);
            check_reconstruction(&h)?;
        }

        #[test]
        fn eig4_reconstruction(e in proptest::array::uniform16(arb_c())) {
            let mut a = CMat4::zeros();
            for i in 0..4 { for j in 0..4 { a.0[i][j] = e[4 * i + j]; } }
            let h = (a + a.dagger()).scale_re(0.5);
            check_reconstruction(&h)?;
        }

        #[test]
        fn svd3_proper_reconstruction(e in proptest::array::uniform9(-1.0..1.0f64)) {
            let t = RMat3([[e[0], e[1], e[2]], [e[3], e[4], e[5]], [e[6], e[7], e[8]]]);
            let s = svd3(&t);
            prop_assert!(s.reconstruct().frobenius_distance(&t) <= 1e-10);
            prop_assert!((s.left.det() - 1.0).abs() <= 1e-10);
            prop_assert!((s.right.det() - 1.0).abs() <= 1e-10);
            prop_assert!((s.left.transpose() * s.left).frobenius_distance(&RMat3::identity()) <= 1e-10);
        }
    }

    fn check_reconstruction<const N: usize>(h: &Mat<N>) -> std::result::Result<(), TestCaseError> {
        let pairs = h.eig_hermitian().unwrap();
        let mut sum = Mat::<N>::zeros();
        for w in pairs.windows(2) {
            prop_assert!(w[0].0 <= w[1].0);
        }
        for (i, (l, v)) in pairs.iter().enumerate() {
            sum = sum + Mat::outer(v, v).scale_re(*l);
            for (_, u) in pairs.iter().skip(i + 1) {
                let ip: C64 = (0..N).map(|k| u[k].conj() * v[k]).sum();
                prop_assert!(ip.norm() <= 1e-10);
            }
        }
        prop_assert!(sum.distance(h) <= 1e-10);
        Ok(())
    }
}
