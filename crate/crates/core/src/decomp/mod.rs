//! Two-branch quasiextreme decomposition of single-qubit channels.
//!
//! A channel is written as `ℰ = p·ℰₐ + (1 − p)·ℰ_b` where each branch has the
//! Kraus pair `Mᵢ = U Kᵢ U′` built from
//! `K₀ = diag(cos β, cos α)` and `K₁ = [[0, sin α], [sin β, 0]]`.
//! Each branch is realised on the optical bench by two ancilla rotations with
//! angles `γ₁ = π/2 − α + β` and `γ₂ = α + β − π/2`.

mod fit;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::channels::{check_lambda, AffineRep, ChannelKind, KrausChannel};
use crate::error::{Error, Result};
use crate::mat::{CMat2, I};

pub use fit::{fit_plan, fit_plan_with, FitOptions, FitOutcome};

/// Tolerance for the angle and unitarity invariants of a branch.
pub const PLAN_TOL: f64 = 1e-10;

/// Wraps an angle into `(−π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Smallest signed difference between two angles.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

/// Quasiextreme Kraus pair `(K₀, K₁)`.
pub fn kraus_from_angles(alpha: f64, beta: f64) -> (CMat2, CMat2) {
    let k0 = CMat2::from_real([[beta.cos(), 0.0], [0.0, alpha.cos()]]);
    let k1 = CMat2::from_real([[0.0, alpha.sin()], [beta.sin(), 0.0]]);
    (k0, k1)
}

/// Ancilla rotation angles realising the branch `(α, β)`.
pub fn gammas_from_angles(alpha: f64, beta: f64) -> (f64, f64) {
    (FRAC_PI_2 - alpha + beta, alpha + beta - FRAC_PI_2)
}

/// `diag(−i, i)`, the pre-/post-rotation of the bit-phase-flip branch.
pub fn u_bpf() -> CMat2 {
    CMat2::from_diag([-I, I])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasiExtremeBranch {
    pub alpha: f64,
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Applied after the conditional flip.
    pub u: CMat2,
    /// Applied to the system before the first controlled gate.
    pub u_prime: CMat2,
    /// `false` removes the ancilla-controlled σx (phase-damping variant).
    pub conditional_x: bool,
}

impl QuasiExtremeBranch {
    pub fn new(alpha: f64, beta: f64) -> Self {
        let (alpha, beta) = (normalize_angle(alpha), normalize_angle(beta));
        let (g1, g2) = gammas_from_angles(alpha, beta);
        QuasiExtremeBranch {
            alpha,
            beta,
            gamma1: normalize_angle(g1),
            gamma2: normalize_angle(g2),
            u: CMat2::identity(),
            u_prime: CMat2::identity(),
            conditional_x: true,
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn with_unitaries(mut self, u: CMat2, u_prime: CMat2) -> Self {
        self.u = u;
        self.u_prime = u_prime;
        self
    }

    pub fn without_conditional_x(mut self) -> Self {
        self.conditional_x = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (g1, g2) = gammas_from_angles(self.alpha, self.beta);
        for (name, got, want) in [("gamma1", self.gamma1, g1), ("gamma2", self.gamma2, g2)] {
            if !got.is_finite() || angle_diff(got, want) > PLAN_TOL {
                return Err(Error::InvalidPlan(format!(
                    "{name} = {got} inconsistent with alpha/beta (expected {want})"
                )));
            }
        }
        for m in [&self.u, &self.u_prime] {
            let r = m.unitarity_residual();
            if !m.is_finite() || r > PLAN_TOL {
                return Err(Error::NotUnitary(r));
            }
        }
        Ok(())
    }

    /// Branch Kraus operators `U Kᵢ U′`. Without the conditional flip the
    /// second operator becomes `diag(sin β, sin α)`.
    pub fn kraus(&self) -> [CMat2; 2] {
        let (k0, k1) = kraus_from_angles(self.alpha, self.beta);
        let k1 = if self.conditional_x {
            k1
        } else {
            CMat2::pauli_x() * k1
        };
        [self.u * k0 * self.u_prime, self.u * k1 * self.u_prime]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecompositionPlan {
    pub branch_a: QuasiExtremeBranch,
    pub branch_b: Option<QuasiExtremeBranch>,
    /// Weight of `branch_a`.
    pub p: f64,
}

impl DecompositionPlan {
    pub fn single(branch: QuasiExtremeBranch) -> Self {
        DecompositionPlan {
            branch_a: branch,
            branch_b: None,
            p: 1.0,
        }
    }

    pub fn mixed(a: QuasiExtremeBranch, b: QuasiExtremeBranch, p: f64) -> Self {
        DecompositionPlan {
            branch_a: a,
            branch_b: Some(b),
            p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidPlan(format!("p = {} outside [0, 1]", self.p)));
        }
        if self.p < 1.0 && self.branch_b.is_none() {
            return Err(Error::InvalidPlan("p < 1 requires a second branch".into()));
        }
        self.branch_a.validate()?;
        if let Some(b) = &self.branch_b {
            b.validate()?;
        }
        Ok(())
    }

    /// `(weight, branch)` pairs, skipping an absent second branch.
    pub fn weighted_branches(&self) -> Vec<(f64, &QuasiExtremeBranch)> {
        let mut v = vec![(self.p, &self.branch_a)];
        if let Some(b) = &self.branch_b {
            v.push((1.0 - self.p, b));
        }
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PlanFile::from(self)).expect("plan serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: PlanFile = serde_json::from_str(s)?;
        let plan = DecompositionPlan::try_from(file)?;
        plan.validate()?;
        Ok(plan)
    }
}

/// Kraus list `{√p·Mᵢᵃ, √(1−p)·Mᵢᵇ}` with zero operators dropped.
pub fn plan_to_channel(plan: &DecompositionPlan) -> Result<KrausChannel> {
    plan.validate()?;
    Ok(plan_to_channel_unchecked(plan))
}

pub(crate) fn plan_to_channel_unchecked(plan: &DecompositionPlan) -> KrausChannel {
    let ops = plan
        .weighted_branches()
        .into_iter()
        .flat_map(|(w, b)| b.kraus().map(|k| k.scale_re(w.max(0.0).sqrt())))
        .collect();
    KrausChannel::new("plan", ops)
}

/// Closed-form plan for a named channel.
pub fn closed_form_plan(kind: ChannelKind, lambda: f64) -> Result<DecompositionPlan> {
    check_lambda(lambda)?;
    let theta = lambda.sqrt().asin();
    let plan = match kind {
        ChannelKind::AmplitudeDamping => DecompositionPlan::single(QuasiExtremeBranch::new(theta, 0.0)),
        ChannelKind::PhaseDamping => {
            DecompositionPlan::single(QuasiExtremeBranch::new(theta, 0.0).without_conditional_x())
        }
        ChannelKind::BitFlip => DecompositionPlan::single(QuasiExtremeBranch::new(theta, theta)),
        ChannelKind::PhaseFlip => DecompositionPlan::mixed(
            QuasiExtremeBranch::new(PI, 0.0),
            QuasiExtremeBranch::identity(),
            lambda,
        ),
        ChannelKind::BitPhaseFlip => DecompositionPlan::mixed(
            QuasiExtremeBranch::new(FRAC_PI_2, FRAC_PI_2).with_unitaries(u_bpf(), CMat2::identity()),
            QuasiExtremeBranch::identity(),
            lambda,
        ),
    };
    Ok(plan)
}

/// Angles `(ν, μ)` of a quasiextreme affine map
/// `T = diag(cos ν, cos μ, cos ν cos μ)`, `t = (0, 0, sin ν sin μ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleNuMu {
    pub nu: f64,
    pub mu: f64,
}

impl AngleNuMu {
    /// `(α, β) = ((μ + ν)/2, (μ − ν)/2)`.
    pub fn alpha_beta(&self) -> (f64, f64) {
        (0.5 * (self.mu + self.nu), 0.5 * (self.mu - self.nu))
    }

    pub fn affine(&self) -> AffineRep {
        let (cn, cm) = (self.nu.cos(), self.mu.cos());
        AffineRep {
            distortion: crate::mat::RMat3::diag([cn, cm, cn * cm]),
            displacement: [0.0, 0.0, self.nu.sin() * self.mu.sin()],
        }
    }
}

const QE_TOL: f64 = 1e-8;

/// Recovers `(ν, μ)` from a diagonal quasiextreme affine map.
///
/// `ν = arccos T₁₁ ∈ [0, π]`; `μ = ±arccos T₂₂` with the sign chosen to
/// match the displacement.
pub fn extract_nu_mu(aff: &AffineRep) -> Result<AngleNuMu> {
    let t = &aff.distortion.0;
    for i in 0..3 {
        for j in 0..3 {
            if i != j && t[i][j].abs() > QE_TOL {
                return Err(Error::NotQuasiExtreme(format!("T[{i}][{j}] = {:.3e} off-diagonal", t[i][j])));
            }
        }
    }
    let d = aff.displacement;
    if d[0].abs() > QE_TOL || d[1].abs() > QE_TOL {
        return Err(Error::NotQuasiExtreme("transverse displacement".into()));
    }
    let (c1, c2) = (t[0][0], t[1][1]);
    if c1.abs() > 1.0 + QE_TOL || c2.abs() > 1.0 + QE_TOL {
        return Err(Error::NotQuasiExtreme("|T_ii| > 1".into()));
    }
    let nu = c1.clamp(-1.0, 1.0).acos();
    let mu_abs = c2.clamp(-1.0, 1.0).acos();
    let product = nu.sin() * mu_abs.sin();
    let mu = if (d[2] + product).abs() < (d[2] - product).abs() {
        -mu_abs
    } else {
        mu_abs
    };
    let angles = AngleNuMu { nu, mu };
    let expect = angles.affine();
    if (expect.distortion.0[2][2] - t[2][2]).abs() > QE_TOL {
        return Err(Error::NotQuasiExtreme(format!(
            "T33 = {} but cos ν cos μ = {}",
            t[2][2],
            expect.distortion.0[2][2]
        )));
    }
    if (expect.displacement[2] - d[2]).abs() > QE_TOL {
        return Err(Error::NotQuasiExtreme(format!(
            "t_z = {} but sin ν sin μ = {}",
            d[2], expect.displacement[2]
        )));
    }
    Ok(angles)
}

#[derive(Serialize, Deserialize)]
struct BranchFile {
    alpha: f64,
    beta: f64,
    gamma1: f64,
    gamma2: f64,
    #[serde(rename = "U", with = "crate::serial::opt_mat2", default)]
    u: Option<CMat2>,
    #[serde(rename = "Uprime", with = "crate::serial::opt_mat2", default)]
    u_prime: Option<CMat2>,
    #[serde(default = "default_true")]
    conditional_x: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    p: f64,
    branches: Vec<BranchFile>,
}

fn non_identity(m: &CMat2) -> Option<CMat2> {
    (!m.approx_eq(&CMat2::identity(), 0.0)).then_some(*m)
}

impl From<&QuasiExtremeBranch> for BranchFile {
    fn from(b: &QuasiExtremeBranch) -> Self {
        BranchFile {
            alpha: b.alpha,
            beta: b.beta,
            gamma1: b.gamma1,
            gamma2: b.gamma2,
            u: non_identity(&b.u),
            u_prime: non_identity(&b.u_prime),
            conditional_x: b.conditional_x,
        }
    }
}

impl From<BranchFile> for QuasiExtremeBranch {
    fn from(f: BranchFile) -> Self {
        QuasiExtremeBranch {
            alpha: f.alpha,
            beta: f.beta,
            gamma1: f.gamma1,
            gamma2: f.gamma2,
            u: f.u.unwrap_or_else(CMat2::identity),
            u_prime: f.u_prime.unwrap_or_else(CMat2::identity),
            conditional_x: f.conditional_x,
        }
    }
}

impl From<&DecompositionPlan> for PlanFile {
    fn from(p: &DecompositionPlan) -> Self {
        let mut branches = vec![BranchFile::from(&p.branch_a)];
        if let Some(b) = &p.branch_b {
            branches.push(BranchFile::from(b));
        }
        PlanFile { p: p.p, branches }
    }
}

impl TryFrom<PlanFile> for DecompositionPlan {
    type Error = Error;

    fn try_from(f: PlanFile) -> Result<Self> {
        let mut it = f.branches.into_iter();
        let a = it
            .next()
            .ok_or_else(|| Error::InvalidPlan("plan has no branches".into()))?;
        let b = it.next();
        if it.next().is_some() {
            return Err(Error::InvalidPlan("at most two branches are supported".into()));
        }
        Ok(DecompositionPlan {
            branch_a: a.into(),
            branch_b: b.map(Into::into),
            p: f.p,
        })
    }
}
