//! Single-qubit channels in Kraus form, with conversions to the affine Bloch
//! representation and to the Choi matrix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{BlochVec, CMat2, CMat4, RMat3, C64, I, ONE, ZERO};

/// Trace-preservation and complete-positivity tolerance.
pub const CPTP_TOL: f64 = 1e-8;
/// Kraus operators with Frobenius norm below this are dropped.
pub const ZERO_OP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausChannel {
    pub label: String,
    #[serde(rename = "kraus", with = "crate::serial::vec_mat2")]
    pub ops: Vec<CMat2>,
}

/// The five named channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    #[serde(rename = "AD")]
    AmplitudeDamping,
    #[serde(rename = "PD")]
    PhaseDamping,
    #[serde(rename = "BF")]
    BitFlip,
    #[serde(rename = "PF")]
    PhaseFlip,
    #[serde(rename = "BPF")]
    BitPhaseFlip,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 5] = [
        ChannelKind::AmplitudeDamping,
        ChannelKind::PhaseDamping,
        ChannelKind::BitFlip,
        ChannelKind::PhaseFlip,
        ChannelKind::BitPhaseFlip,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            ChannelKind::AmplitudeDamping => "AD",
            ChannelKind::PhaseDamping => "PD",
            ChannelKind::BitFlip => "BF",
            ChannelKind::PhaseFlip => "PF",
            ChannelKind::BitPhaseFlip => "BPF",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AD" | "AMPLITUDE_DAMPING" => Ok(ChannelKind::AmplitudeDamping),
            "PD" | "PHASE_DAMPING" => Ok(ChannelKind::PhaseDamping),
            "BF" | "BIT_FLIP" => Ok(ChannelKind::BitFlip),
            "PF" | "PHASE_FLIP" => Ok(ChannelKind::PhaseFlip),
            "BPF" | "BIT_PHASE_FLIP" => Ok(ChannelKind::BitPhaseFlip),
            other => Err(Error::Parse(format!("unknown channel kind `{other}`"))),
        }
    }
}

pub fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::LambdaOutOfRange(lambda))
    }
}

/// Kraus operators of a named channel at decoherence parameter `lambda`.
pub fn builtin(kind: ChannelKind, lambda: f64) -> Result<KrausChannel> {
    check_lambda(lambda)?;
    let keep = (1.0 - lambda).sqrt();
    let flip = lambda.sqrt();
    let id = CMat2::identity();
    let ops = match kind {
        ChannelKind::AmplitudeDamping => vec![
            CMat2::from_real([[1.0, 0.0], [0.0, keep]]),
            CMat2::from_real([[0.0, flip], [0.0, 0.0]]),
        ],
        ChannelKind::PhaseDamping => vec![
            CMat2::from_real([[1.0, 0.0], [0.0, keep]]),
            CMat2::from_real([[0.0, 0.0], [0.0, flip]]),
        ],
        ChannelKind::BitFlip => vec![id.scale_re(keep), CMat2::pauli_x().scale_re(flip)],
        ChannelKind::PhaseFlip => vec![id.scale_re(keep), CMat2::pauli_z().scale_re(flip)],
        ChannelKind::BitPhaseFlip => vec![id.scale_re(keep), CMat2::pauli_y().scale_re(flip)],
    };
    Ok(KrausChannel::new(format!("{kind}({lambda})"), ops))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CptpReport {
    pub trace_residual: f64,
    pub min_choi_eig: f64,
    pub ok: bool,
}

/// Affine action `r ↦ T r + t` on Bloch vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineRep {
    pub distortion: RMat3,
    pub displacement: [f64; 3],
}

impl AffineRep {
    pub fn map(&self, r: &BlochVec) -> BlochVec {
        let v = self.distortion.apply(r.to_array());
        BlochVec::new(
            v[0] + self.displacement[0],
            v[1] + self.displacement[1],
            v[2] + self.displacement[2],
        )
    }

    /// Checks that the unit sphere is mapped into the closed unit ball on a
    /// Fibonacci lattice of `samples` points.
    pub fn maps_ball_into_ball(&self, samples: usize) -> bool {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..samples.max(1)).all(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / samples as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            let r = BlochVec::new(rho * phi.cos(), rho * phi.sin(), z);
            self.map(&r).norm() <= 1.0 + CPTP_TOL
        })
    }
}

/// Validates that `rho` is a qubit density matrix.
pub fn check_density(rho: &CMat2) -> Result<()> {
    if !rho.is_finite() {
        return Err(Error::InvalidState("non-finite entries".into()));
    }
    let herm = rho.hermiticity_residual();
    if herm > 1e-10 {
        return Err(Error::InvalidState(format!("not Hermitian (residual {herm:.2e})")));
    }
    let tr = rho.trace();
    if (tr - ONE).norm() > 1e-10 {
        return Err(Error::InvalidState(format!("trace {} ≠ 1", tr.re)));
    }
    let min = rho.min_eigenvalue()?;
    if min < -1e-9 {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:.2e}")));
    }
    Ok(())
}

impl KrausChannel {
    /// Builds a channel, dropping operators that are numerically zero.
    pub fn new(label: impl Into<String>, ops: Vec<CMat2>) -> Self {
        let mut ops: Vec<CMat2> = ops.into_iter().filter(|k| k.frobenius_norm() >= ZERO_OP_TOL).collect();
        if ops.is_empty() {
            ops.push(CMat2::zeros());
        }
        KrausChannel { label: label.into(), ops }
    }

    pub fn identity() -> Self {
        KrausChannel::new("identity", vec![CMat2::identity()])
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ch: KrausChannel = serde_json::from_str(s)?;
        if ch.ops.is_empty() {
            return Err(Error::InvalidChannel("no Kraus operators".into()));
        }
        if ch.ops.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidChannel("non-finite Kraus entry".into()));
        }
        Ok(ch)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel serialization is infallible")
    }

    /// `‖Σ Kᵢ†Kᵢ − I‖_F`.
    pub fn trace_residual(&self) -> f64 {
        let sum = self
            .ops
            .iter()
            .fold(CMat2::zeros(), |acc, k| acc + k.dagger() * *k);
        sum.distance(&CMat2::identity())
    }

    pub fn validate(&self) -> CptpReport {
        let trace_residual = self.trace_residual();
        let min_choi_eig = self
            .to_choi()
            .min_eigenvalue()
            .unwrap_or(f64::NEG_INFINITY);
        CptpReport {
            trace_residual,
            min_choi_eig,
            ok: trace_residual <= CPTP_TOL && min_choi_eig >= -CPTP_TOL,
        }
    }

    /// `Σ Kᵢ ρ Kᵢ†` without input validation.
    pub fn apply_unchecked(&self, rho: &CMat2) -> CMat2 {
        self.ops.iter().fold(CMat2::zeros(), |acc, k| acc + k.conjugate(rho))
    }

    pub fn apply(&self, rho: &CMat2) -> Result<CMat2> {
        check_density(rho)?;
        Ok(self.apply_unchecked(rho))
    }

    /// `T_ij = ½ Tr[σᵢ ℰ(σⱼ)]`, `tᵢ = ½ Tr[σᵢ ℰ(I)]`.
    pub fn to_affine(&self) -> AffineRep {
        let paulis = [CMat2::pauli_x(), CMat2::pauli_y(), CMat2::pauli_z()];
        let mut t = RMat3::default();
        for (j, sj) in paulis.iter().enumerate() {
            let out = self.apply_unchecked(sj);
            for (i, si) in paulis.iter().enumerate() {
                t.0[i][j] = 0.5 * (*si * out).trace().re;
            }
        }
        let out = self.apply_unchecked(&CMat2::identity());
        let mut disp = [0.0; 3];
        for (i, si) in paulis.iter().enumerate() {
            disp[i] = 0.5 * (*si * out).trace().re;
        }
        AffineRep {
            distortion: t,
            displacement: disp,
        }
    }

    /// Choi matrix `J = Σᵢⱼ |i⟩⟨j| ⊗ ℰ(|i⟩⟨j|)`, trace 2 for trace-preserving input.
    pub fn to_choi(&self) -> CMat4 {
        choi_of(&self.ops)
    }

    /// Frobenius distance between the Choi matrices of two channels.
    pub fn choi_distance(&self, other: &KrausChannel) -> f64 {
        self.to_choi().distance(&other.to_choi())
    }
}

/// Choi matrix of a Kraus list, accumulated as `Σₖ |vₖ⟩⟨vₖ|` with
/// `vₖ = Σᵢ |i⟩ ⊗ Kₖ|i⟩`.
pub fn choi_of(ops: &[CMat2]) -> CMat4 {
    let mut j = CMat4::zeros();
    for k in ops {
        let v = [k.0[0][0], k.0[1][0], k.0[0][1], k.0[1][1]];
        j = j + CMat4::outer(&v, &v);
    }
    j
}

/// Pure-state projector `|ψ⟩⟨ψ|` for normalised amplitudes.
pub fn pure_state(a: C64, b: C64) -> CMat2 {
    CMat2::outer(&[a, b], &[a, b])
}

/// Common polarization states.
pub mod states {
    use super::*;

    pub fn h() -> CMat2 {
        pure_state(ONE, ZERO)
    }

    pub fn v() -> CMat2 {
        pure_state(ZERO, ONE)
    }

    pub fn plus() -> CMat2 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(C64::new(s, 0.0), C64::new(s, 0.0))
    }

    pub fn minus() -> CMat2 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(C64::new(s, 0.0), C64::new(-s, 0.0))
    }

    pub fn left() -> CMat2 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(C64::new(s, 0.0), I * s)
    }

    pub fn mixed() -> CMat2 {
        CMat2::identity().scale_re(0.5)
    }
}
