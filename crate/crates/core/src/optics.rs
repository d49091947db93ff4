//! Jones-calculus models of waveplates and Dove prisms, and the maps between
//! SU(2) operators, Euler angles, waveplate triples and Dove-prism pairs.
//!
//! All rotations use `R(θ) = [[cos θ, −sin θ], [sin θ, cos θ]]`. Angles are in
//! radians and measured from the horizontal.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::mat::{CMat2, C64, ONE};

/// Quarter-wave plate with fast axis at `eta`.
pub fn qwp(eta: f64) -> CMat2 {
    CMat2::rotation(eta) * CMat2::q0() * CMat2::rotation(-eta)
}

/// Half-wave plate with fast axis at `tau`.
pub fn hwp(tau: f64) -> CMat2 {
    CMat2::rotation(tau) * CMat2::h0() * CMat2::rotation(-tau)
}

/// Dove prism rotated by `gamma`, acting on first-order transverse modes.
pub fn dove(gamma: f64) -> CMat2 {
    let (s, c) = (2.0 * gamma).sin_cos();
    CMat2::from_real([[c, s], [s, -c]])
}

/// `QWP(η₁) · HWP(τ) · QWP(η₂)`; light meets the `η₂` plate first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveplateTriple {
    pub eta1: f64,
    pub tau: f64,
    pub eta2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub xi: f64,
    pub zeta: f64,
}

/// Rotation `e^{−iψ n̂·σ}` about the axis with polar angle `theta` and azimuth `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle {
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
}

/// Pair of Dove prisms: the first fixed at 0, the second at `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DovePair {
    pub delta: f64,
}

impl DovePair {
    pub fn matrix(&self) -> CMat2 {
        dove(self.delta) * dove(0.0)
    }
}

fn su2(u: C64, w: C64) -> CMat2 {
    CMat2::new(u, -w.conj(), w, u.conj())
}

impl WaveplateTriple {
    pub fn new(eta1: f64, tau: f64, eta2: f64) -> Self {
        WaveplateTriple { eta1, tau, eta2 }
    }

    pub fn unitary(&self) -> CMat2 {
        qwp(self.eta1) * hwp(self.tau) * qwp(self.eta2)
    }

    /// Closed-form `(u, w)` of the composed operator.
    pub fn coefficients(&self) -> (C64, C64) {
        let lam = 2.0 * self.tau - self.eta1 - self.eta2;
        let ep = self.eta1 + self.eta2;
        let em = self.eta1 - self.eta2;
        let u = C64::new(lam.cos() * em.cos(), -lam.sin() * ep.sin());
        let w = C64::new(lam.cos() * em.sin(), lam.sin() * ep.cos());
        (u, w)
    }
}

pub fn triple_to_unitary(w: &WaveplateTriple) -> CMat2 {
    w.unitary()
}

/// `R(φ) · diag(e^{iξ}, e^{−iξ}) · R(ζ)` built from its `(u, w)` entries.
pub fn su2_from_euler(e: &EulerAngles) -> CMat2 {
    let (sx, cx) = e.xi.sin_cos();
    let sum = e.phi + e.zeta;
    let diff = e.phi - e.zeta;
    let u = C64::new(cx * sum.cos(), sx * diff.cos());
    let w = C64::new(cx * sum.sin(), sx * diff.sin());
    su2(u, w)
}

pub fn su2_from_axis_angle(a: &AxisAngle) -> CMat2 {
    let (sp, cp) = a.psi.sin_cos();
    let u = C64::new(cp, -a.theta.cos() * sp);
    let w = C64::new(0.0, -a.theta.sin() * sp) * C64::from_polar(1.0, a.phi);
    su2(u, w)
}

pub fn waveplates_from_euler(e: &EulerAngles) -> WaveplateTriple {
    WaveplateTriple {
        eta1: e.phi - FRAC_PI_4,
        eta2: -e.zeta - FRAC_PI_4,
        tau: 0.5 * (e.phi + e.xi - e.zeta) - FRAC_PI_4,
    }
}

/// Inverse of [`su2_from_euler`] up to global phase.
///
/// Writing `u = cos ξ cos A + i sin ξ cos B`, `w = cos ξ sin A + i sin ξ sin B`
/// with `A = φ + ζ`, `B = φ − ζ`, the real parts of `(u, w)` give `cos ξ·e^{iA}`
/// and the imaginary parts `sin ξ·e^{iB}`. When either factor vanishes the
/// free angle is chosen so that `ζ = 0`.
pub fn euler_from_su2(m: &CMat2) -> EulerAngles {
    let det = m.det();
    let norm = if det.norm() > 1e-300 { det.sqrt() } else { ONE };
    let u = m.0[0][0] / norm;
    let w = m.0[1][0] / norm;
    let real = C64::new(u.re, w.re);
    let imag = C64::new(u.im, w.im);
    let xi = imag.norm().atan2(real.norm());
    const EPS: f64 = 1e-14;
    let (a, b) = match (real.norm() > EPS, imag.norm() > EPS) {
        (true, true) => (real.arg(), imag.arg()),
        (true, false) => (real.arg(), real.arg()),
        (false, true) => (imag.arg(), imag.arg()),
        (false, false) => (0.0, 0.0),
    };
    EulerAngles {
        phi: 0.5 * (a + b),
        xi,
        zeta: 0.5 * (a - b),
    }
}

/// Waveplate settings realising `m` up to global phase.
pub fn waveplates_for(m: &CMat2) -> WaveplateTriple {
    waveplates_from_euler(&euler_from_su2(m))
}

/// SU(2) rotation about y with the half-angle convention used on the ancilla.
pub fn ry_rotation(gamma: f64) -> CMat2 {
    CMat2::rotation(0.5 * gamma)
}

/// Dove pair whose product equals [`ry_rotation`]`(gamma)`.
///
/// `dove(δ)·dove(0) = R(2δ)`, so the half-angle rotation needs `δ = γ/4`.
pub fn dove_pair_for_ry(gamma: f64) -> DovePair {
    DovePair { delta: 0.25 * gamma }
}

/// The pair `DP(γ/2)·DP(0)` taken literally; rotates by the full angle `γ`.
pub fn dove_pair_full_angle(gamma: f64) -> CMat2 {
    dove(0.5 * gamma) * dove(0.0)
}

/// Optical elements of a compiled branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Element {
    Qwp,
    Hwp,
    #[serde(rename = "DP")]
    Dove,
    Cnot,
    Tbs,
    #[serde(rename = "CONDX")]
    CondX,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Pol,
    Mode,
    Both,
}

/// One element of a gate list; `angle` is the physical element orientation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub element: Element,
    pub angle: Option<f64>,
    pub target: Target,
}

impl Gate {
    pub fn qwp(angle: f64) -> Self {
        Gate { element: Element::Qwp, angle: Some(angle), target: Target::Pol }
    }

    pub fn hwp(angle: f64) -> Self {
        Gate { element: Element::Hwp, angle: Some(angle), target: Target::Pol }
    }

    pub fn dove(angle: f64) -> Self {
        Gate { element: Element::Dove, angle: Some(angle), target: Target::Mode }
    }

    pub fn cnot() -> Self {
        Gate { element: Element::Cnot, angle: None, target: Target::Both }
    }

    pub fn tbs() -> Self {
        Gate { element: Element::Tbs, angle: None, target: Target::Mode }
    }

    pub fn cond_x() -> Self {
        Gate { element: Element::CondX, angle: None, target: Target::Pol }
    }

    /// Jones matrix for single-degree-of-freedom elements.
    pub fn jones(&self) -> Option<CMat2> {
        let a = self.angle.unwrap_or(0.0);
        match self.element {
            Element::Qwp => Some(qwp(a)),
            Element::Hwp => Some(hwp(a)),
            Element::Dove => Some(dove(a)),
            Element::CondX => Some(hwp(FRAC_PI_4)),
            Element::Cnot | Element::Tbs => None,
        }
    }
}

/// Elements in the order light traverses them for a waveplate triple.
pub fn triple_gates(w: &WaveplateTriple) -> [Gate; 3] {
    [Gate::qwp(w.eta2), Gate::hwp(w.tau), Gate::qwp(w.eta1)]
}

pub fn dove_gates(pair: &DovePair) -> [Gate; 2] {
    [Gate::dove(0.0), Gate::dove(pair.delta)]
}

pub fn gates_to_json(gates: &[Gate]) -> String {
    serde_json::to_string_pretty(gates).expect("gate serialization is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{I, ZERO};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn arb_unitary() -> impl Strategy<Value = CMat2> {
        (0.0..PI, -PI..PI, -PI..PI, -PI..PI).prop_map(|(x, a, b, g)| {
            let u = C64::from_polar(x.cos(), a);
            let w = C64::from_polar(x.sin(), b);
            su2(u, w).scale(C64::from_polar(1.0, g))
        })
    }

    fn phase_dist(a: &CMat2, b: &CMat2) -> f64 {
        a.phase_invariant_distance(b).unwrap()
    }

    #[test]
    fn element_examples() {
        assert!(qwp(0.0).approx_eq(&CMat2::q0(), 0.0));
        assert!(hwp(FRAC_PI_4).approx_eq(&CMat2::pauli_x(), 1e-15));
        assert!((dove(0.0) * dove(0.0)).approx_eq(&CMat2::identity(), 0.0));
    }

    #[test]
    fn triple_examples() {
        assert!(WaveplateTriple::new(0.0, 0.0, 0.0).unitary().approx_eq(&CMat2::identity(), 1e-15));
        let ubpf = WaveplateTriple::new(-FRAC_PI_2, FRAC_PI_2, 0.0).unitary();
        assert!(ubpf.approx_eq(&CMat2::from_diag([-I, I]), 1e-15));
    }

    #[test]
    fn su2_examples() {
        let e = EulerAngles { phi: 0.0, xi: 0.0, zeta: 0.0 };
        assert!(su2_from_euler(&e).approx_eq(&CMat2::identity(), 0.0));
        let a = AxisAngle { psi: FRAC_PI_2, theta: FRAC_PI_2, phi: 0.0 };
        assert!(su2_from_axis_angle(&a).approx_eq(&CMat2::pauli_x().scale(-I), 1e-15));
    }

    #[test]
    fn euler_matches_rotation_product() {
        let e = EulerAngles { phi: 0.4, xi: -1.3, zeta: 2.2 };
        let rz = CMat2::from_diag([C64::from_polar(1.0, e.xi), C64::from_polar(1.0, -e.xi)]);
        let direct = CMat2::rotation(e.phi) * rz * CMat2::rotation(e.zeta);
        assert!(su2_from_euler(&e).approx_eq(&direct, 1e-14));
    }

    #[test]
    fn waveplates_from_euler_examples() {
        let w = waveplates_from_euler(&EulerAngles { phi: 0.0, xi: 0.0, zeta: 0.0 });
        assert_eq!(w, WaveplateTriple::new(-FRAC_PI_4, -FRAC_PI_4, -FRAC_PI_4));
        assert!(phase_dist(&w.unitary(), &CMat2::identity()) < 1e-10);

        let ubpf = CMat2::from_diag([-I, I]);
        let w = waveplates_for(&ubpf);
        let reference = WaveplateTriple::new(-FRAC_PI_2, FRAC_PI_2, 0.0).unitary();
        assert!(phase_dist(&w.unitary(), &reference) < 1e-10);
    }

    #[test]
    fn euler_from_su2_examples() {
        let e = euler_from_su2(&CMat2::identity());
        assert_eq!((e.phi, e.xi, e.zeta), (0.0, 0.0, 0.0));
        let ubpf = CMat2::from_diag([-I, I]);
        assert!(phase_dist(&su2_from_euler(&euler_from_su2(&ubpf)), &ubpf) < 1e-10);
        // degenerate branches: pure rotation and pure phase
        for m in [CMat2::rotation(0.7), CMat2::pauli_x(), CMat2::pauli_y(), CMat2::pauli_z()] {
            assert!(phase_dist(&su2_from_euler(&euler_from_su2(&m)), &m) < 1e-10, "{m:?}");
        }
    }

    #[test]
    fn ry_examples() {
        assert!(ry_rotation(0.0).approx_eq(&CMat2::identity(), 0.0));
        let v = ry_rotation(PI).apply(&[ONE, ZERO]);
        assert!((v[0].norm() < 1e-15) && ((v[1] - ONE).norm() < 1e-15));
        // the literal DP(γ/2)·DP(0) pair rotates by the full angle
        assert!(dove_pair_full_angle(0.8).approx_eq(&CMat2::rotation(0.8), 1e-15));
    }

    #[test]
    fn gate_json_shape() {
        let gates = [Gate::qwp(0.5), Gate::cnot(), Gate::cond_x(), Gate::dove(0.1)];
        let v: serde_json::Value = serde_json::from_str(&gates_to_json(&gates)).unwrap();
        assert_eq!(v[0]["element"], "QWP");
        assert_eq!(v[0]["target"], "pol");
        assert_eq!(v[1]["element"], "CNOT");
        assert!(v[1]["angle"].is_null());
        assert_eq!(v[1]["target"], "both");
        assert_eq!(v[2]["element"], "CONDX");
        assert_eq!(v[3]["element"], "DP");
        assert_eq!(v[3]["target"], "mode");
        let back: Vec<Gate> = serde_json::from_value(v).unwrap();
        assert_eq!(back, gates);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn triple_coefficients_match_product(e1 in -PI..PI, t in -PI..PI, e2 in -PI..PI) {
            let w = WaveplateTriple::new(e1, t, e2);
            let m = w.unitary();
            let (u, ww) = w.coefficients();
            prop_assert!((m.0[0][0] - u).norm() <= 1e-12);
            prop_assert!((m.0[1][0] - ww).norm() <= 1e-12);
            prop_assert!((u.norm_sqr() + ww.norm_sqr() - 1.0).abs() <= 1e-12);
            prop_assert!(m.unitarity_residual() <= 1e-10);
        }

        #[test]
        fn waveplates_realise_euler(phi in -PI..PI, xi in -PI..PI, zeta in -PI..PI) {
            let e = EulerAngles { phi, xi, zeta };
            let u = su2_from_euler(&e);
            prop_assert!((u.det() - ONE).norm() <= 1e-12);
            prop_assert!(phase_dist(&waveplates_from_euler(&e).unitary(), &u) <= 1e-10);
        }

        #[test]
        fn euler_roundtrip(u in arb_unitary()) {
            prop_assert!(phase_dist(&su2_from_euler(&euler_from_su2(&u)), &u) <= 1e-10);
            prop_assert!(phase_dist(&waveplates_for(&u).unitary(), &u) <= 1e-10);
        }

        #[test]
        fn axis_angle_matches_euler(psi in 0.0..PI, theta in 0.0..PI, phi in 0.0..2.0 * PI) {
            let u = su2_from_axis_angle(&AxisAngle { psi, theta, phi });
            prop_assert!((u.det() - ONE).norm() <= 1e-12);
            let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            let direct = CMat2::identity().scale_re(psi.cos())
                - (CMat2::pauli_x().scale_re(n[0]) + CMat2::pauli_y().scale_re(n[1]) + CMat2::pauli_z().scale_re(n[2]))
                    .scale(I * psi.sin());
            prop_assert!(u.approx_eq(&direct, 1e-12));
            prop_assert!(phase_dist(&su2_from_euler(&euler_from_su2(&u)), &u) <= 1e-10);
        }

        #[test]
        fn dove_pair_gives_half_angle_ry(g in -4.0 * PI..4.0 * PI) {
            prop_assert!(dove_pair_for_ry(g).matrix().approx_eq(&ry_rotation(g), 1e-12));
        }

        #[test]
        fn dove_is_hwp(g in -PI..PI) {
            prop_assert!(dove(g).approx_eq(&hwp(g), 1e-14));
        }

        #[test]
        fn retarder_powers(a in -PI..PI) {
            prop_assert!((hwp(a) * hwp(a)).approx_eq(&CMat2::identity(), 1e-12));
            let q = qwp(a);
            let q4 = q * q * q * q;
            prop_assert!(phase_dist(&q4, &CMat2::identity()) <= 1e-10);
        }
    }
}
