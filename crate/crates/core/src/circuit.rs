//! Exact simulation of a branch on the polarization ⊗ transverse-mode bench.
//!
//! Basis order is `|Hh⟩, |Hv⟩, |Vh⟩, |Vv⟩`. The system qubit is carried by
//! polarization and the ancilla by the first-order transverse mode, which
//! starts in `|h⟩`. After the mode sorter both output ports are kept and the
//! mode is traced out, so the result is the non-selective branch output.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::channels::check_density;
use crate::decomp::{DecompositionPlan, QuasiExtremeBranch};
use crate::error::{Error, Result};
use crate::mat::{kron, tensor, CMat2, CMat4, CMat8, C64};
use crate::optics::{
    dove_gates, dove_pair_for_ry, triple_gates, waveplates_for, Element, Gate,
};

/// Density operator on polarization ⊗ transverse mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinOrbitState {
    pub rho: CMat4,
}

impl SpinOrbitState {
    /// `ρ ⊗ |h⟩⟨h|`.
    pub fn from_system(rho: &CMat2) -> Self {
        let h = CMat2::from_real([[1.0, 0.0], [0.0, 0.0]]);
        SpinOrbitState { rho: tensor(rho, &h) }
    }

    /// Reduced polarization state, tracing out the mode.
    pub fn system(&self) -> CMat2 {
        partial_trace_mode(&self.rho)
    }

    /// Checks Hermiticity, trace `expected_trace` and positivity.
    pub fn check(&self, expected_trace: f64) -> Result<()> {
        let herm = self.rho.hermiticity_residual();
        if herm > 1e-9 {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.rho.trace();
        if (tr - C64::new(expected_trace, 0.0)).norm() > 1e-9 {
            return Err(Error::InvalidState(format!("trace {} ≠ {expected_trace}", tr.re)));
        }
        let min = self.rho.min_eigenvalue()?;
        if min < -1e-9 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.2e}")));
        }
        Ok(())
    }
}

pub fn partial_trace_mode(rho: &CMat4) -> CMat2 {
    let mut out = CMat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            out.0[i][j] = rho.0[2 * i][2 * j] + rho.0[2 * i + 1][2 * j + 1];
        }
    }
    out
}

/// `(cos 2φ |H⟩ + sin 2φ |V⟩) ⊗ |h⟩`, the state after the input half-wave plate.
pub fn prepare_initial(phi: f64) -> SpinOrbitState {
    let (s, c) = (2.0 * phi).sin_cos();
    let psi = [C64::new(c, 0.0), C64::new(s, 0.0)];
    SpinOrbitState::from_system(&CMat2::outer(&psi, &psi))
}

/// Polarization-controlled mode flip: `|V⟩` reflects through a Dove prism at 45°.
pub fn cnot_pol_controls_mode() -> CMat4 {
    CMat4::from_real([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
}

fn beam_splitter() -> CMat2 {
    CMat2::from_real([[1.0, -1.0], [1.0, 1.0]]).scale_re(FRAC_1_SQRT_2)
}

/// Arm operators of the mode sorter: two mirrors on the reflected arm, a
/// half-wave plate at 0° plus one mirror and the piezo phase on the other.
fn tbs_arms(delta: f64) -> (CMat4, CMat4) {
    let mirror = tensor(&CMat2::h0(), &CMat2::h0());
    let hwp0 = tensor(&CMat2::h0(), &CMat2::identity());
    let reflected = mirror * mirror;
    let transmitted = (mirror * hwp0).scale(C64::from_polar(1.0, delta));
    (reflected, transmitted)
}

fn block_diag(a: &CMat4, b: &CMat4) -> CMat8 {
    let mut m = CMat8::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m.0[i][j] = a.0[i][j];
            m.0[i + 4][j + 4] = b.0[i][j];
        }
    }
    m
}

fn block(m: &CMat8, bi: usize, bj: usize) -> CMat4 {
    let mut out = CMat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            out.0[i][j] = m.0[4 * bi + i][4 * bj + j];
        }
    }
    out
}

/// Full path ⊗ polarization ⊗ mode transfer of the sorter, input on path `a`.
fn tbs_unitary(delta: f64) -> CMat8 {
    let bs = kron::<2, 4, 8>(&beam_splitter(), &CMat4::identity());
    let (reflected, transmitted) = tbs_arms(delta);
    bs * block_diag(&reflected, &transmitted) * bs
}

/// Output-port operators `(K, Λ)` of the mode sorter for piezo phase `delta`.
///
/// At `delta = 0`, `K` keeps the `|h⟩` component and `Λ` the `|v⟩` component,
/// each with its polarization untouched.
pub fn tbs_transfer(delta: f64) -> (CMat4, CMat4) {
    let u = tbs_unitary(delta);
    (block(&u, 1, 0), block(&u, 0, 0))
}

/// Port states of the sorter with the two arms' mutual coherence scaled by `visibility`.
pub fn tbs_ports(rho: &CMat4, delta: f64, visibility: f64) -> [CMat4; 2] {
    let bs = kron::<2, 4, 8>(&beam_splitter(), &CMat4::identity());
    let (reflected, transmitted) = tbs_arms(delta);
    let mut input = CMat8::zeros();
    for i in 0..4 {
        for j in 0..4 {
            input.0[i][j] = rho.0[i][j];
        }
    }
    let inside = block_diag(&reflected, &transmitted) * bs;
    let mut rho8 = inside.conjugate(&input);
    dephase_blocks(&mut rho8, visibility);
    let out = bs.conjugate(&rho8);
    [block(&out, 1, 1), block(&out, 0, 0)]
}

fn dephase_blocks(rho8: &mut CMat8, v: f64) {
    for i in 0..4 {
        for j in 4..8 {
            rho8.0[i][j] *= v;
            rho8.0[j][i] *= v;
        }
    }
}

/// Imperfections of the two interferometers and of the detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub visibility: f64,
    /// Relative standard deviation of detected intensities.
    pub intensity_sigma: f64,
    pub rng_seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            visibility: 1.0,
            intensity_sigma: 0.0,
            rng_seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::Parse(format!("visibility {} outside [0, 1]", self.visibility)));
        }
        if !(self.intensity_sigma >= 0.0 && self.intensity_sigma.is_finite()) {
            return Err(Error::Parse(format!("intensity sigma {} must be ≥ 0", self.intensity_sigma)));
        }
        Ok(())
    }
}

/// Scales the coherence between the `|H⟩` and `|V⟩` arms of the
/// polarizing interferometer by `v`.
pub fn apply_noise(state: &SpinOrbitState, v: f64) -> SpinOrbitState {
    let mut rho = state.rho;
    for i in 0..4 {
        for j in 0..4 {
            if (i >> 1) != (j >> 1) {
                rho.0[i][j] *= v;
            }
        }
    }
    SpinOrbitState { rho }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchConfig {
    pub branch: QuasiExtremeBranch,
    pub noise: Option<NoiseParams>,
    /// Piezo phase of the mode sorter.
    pub tbs_phase: f64,
}

impl BranchConfig {
    pub fn new(branch: QuasiExtremeBranch) -> Self {
        BranchConfig {
            branch,
            noise: None,
            tbs_phase: 0.0,
        }
    }

    pub fn with_noise(mut self, noise: Option<NoiseParams>) -> Self {
        self.noise = noise;
        self
    }

    fn visibility(&self) -> f64 {
        self.noise.map_or(1.0, |n| n.visibility)
    }
}

/// Ordered optical elements realising a branch.
pub fn compile_branch(branch: &QuasiExtremeBranch) -> Vec<Gate> {
    let mut gates = Vec::with_capacity(16);
    if !branch.u_prime.approx_eq(&CMat2::identity(), 0.0) {
        gates.extend(triple_gates(&waveplates_for(&branch.u_prime)));
    }
    gates.extend(dove_gates(&dove_pair_for_ry(branch.gamma1)));
    gates.push(Gate::cnot());
    gates.extend(dove_gates(&dove_pair_for_ry(branch.gamma2)));
    gates.push(Gate::tbs());
    if branch.conditional_x {
        gates.push(Gate::cond_x());
    }
    if !branch.u.approx_eq(&CMat2::identity(), 0.0) {
        gates.extend(triple_gates(&waveplates_for(&branch.u)));
    }
    gates
}

/// Port states after each gate; one port before the sorter, two after it.
pub type Trace = Vec<(Gate, Vec<SpinOrbitState>)>;

fn step(ports: &mut Vec<CMat4>, gate: &Gate, cfg: &BranchConfig) -> Result<()> {
    match gate.element {
        Element::Qwp | Element::Hwp => {
            let op = tensor(&gate.jones().expect("waveplate"), &CMat2::identity());
            ports.iter_mut().for_each(|p| *p = op.conjugate(p));
        }
        Element::Dove => {
            let op = tensor(&CMat2::identity(), &gate.jones().expect("prism"));
            ports.iter_mut().for_each(|p| *p = op.conjugate(p));
        }
        Element::Cnot => {
            let op = cnot_pol_controls_mode();
            let v = cfg.visibility();
            for p in ports.iter_mut() {
                let out = SpinOrbitState { rho: op.conjugate(p) };
                *p = apply_noise(&out, v).rho;
            }
        }
        Element::Tbs => {
            let [input] = ports.as_slice() else {
                return Err(Error::InvalidPlan("mode sorter needs a single input beam".into()));
            };
            let out = tbs_ports(input, cfg.tbs_phase, cfg.visibility());
            *ports = out.to_vec();
        }
        Element::CondX => {
            if ports.len() != 2 {
                return Err(Error::InvalidPlan("conditional flip needs the sorter outputs".into()));
            }
            let op = tensor(&gate.jones().expect("flip plate"), &CMat2::identity());
            ports[1] = op.conjugate(&ports[1]);
        }
    }
    Ok(())
}

fn execute(rho_in: &CMat2, cfg: &BranchConfig, mut trace: Option<&mut Trace>) -> Result<CMat2> {
    check_density(rho_in)?;
    cfg.branch.validate()?;
    if let Some(n) = &cfg.noise {
        n.validate()?;
    }
    let mut ports = vec![SpinOrbitState::from_system(rho_in).rho];
    for gate in compile_branch(&cfg.branch) {
        step(&mut ports, &gate, cfg)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push((gate, ports.iter().map(|&rho| SpinOrbitState { rho }).collect()));
        }
    }
    Ok(ports
        .iter()
        .map(partial_trace_mode)
        .fold(CMat2::zeros(), |acc, p| acc + p))
}

/// Output of one branch with both sorter ports recombined.
pub fn run_branch(rho_in: &CMat2, cfg: &BranchConfig) -> Result<CMat2> {
    execute(rho_in, cfg, None)
}

/// Like [`run_branch`], also returning the port states after every element.
pub fn run_branch_traced(rho_in: &CMat2, cfg: &BranchConfig) -> Result<(CMat2, Trace)> {
    let mut trace = Vec::new();
    let out = execute(rho_in, cfg, Some(&mut trace))?;
    Ok((out, trace))
}

/// `p·ℰₐ(ρ) + (1 − p)·ℰ_b(ρ)` evaluated on the simulated bench.
pub fn simulate_channel(
    rho_in: &CMat2,
    plan: &DecompositionPlan,
    noise: Option<&NoiseParams>,
) -> Result<CMat2> {
    plan.validate()?;
    let mut out = CMat2::zeros();
    for (w, branch) in plan.weighted_branches() {
        let cfg = BranchConfig::new(*branch).with_noise(noise.copied());
        out = out + run_branch(rho_in, &cfg)?.scale_re(w);
    }
    Ok(out)
}

/// State file contents `{rho, bloch}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    #[serde(with = "crate::serial::mat2")]
    pub rho: CMat2,
    pub bloch: [f64; 3],
}

impl StateFile {
    pub fn new(rho: &CMat2) -> Self {
        StateFile {
            rho: *rho,
            bloch: rho.bloch().to_array(),
        }
    }
}
