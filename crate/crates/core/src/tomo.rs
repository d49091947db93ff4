//! Three-basis polarization tomography, fidelity and coherence measures.
//!
//! Each basis is selected by a quarter-wave plate followed by a half-wave
//! plate in front of a polarizing beam splitter. Port `A` collects `H`, `+`
//! and `L`; port `B` collects `V`, `−` and `R`.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channels::check_density;
use crate::circuit::NoiseParams;
use crate::error::{Error, Result};
use crate::mat::{BlochVec, CMat2};
use crate::optics::{hwp, qwp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    HV,
    DA,
    LR,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::HV, Basis::DA, Basis::LR];

    pub fn name(self) -> &'static str {
        match self {
            Basis::HV => "HV",
            Basis::DA => "DA",
            Basis::LR => "LR",
        }
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HV" => Ok(Basis::HV),
            "DA" => Ok(Basis::DA),
            "LR" => Ok(Basis::LR),
            other => Err(Error::Parse(format!("unknown basis '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementSetting {
    pub theta_q: f64,
    pub theta_h: f64,
    pub basis: Basis,
}

impl MeasurementSetting {
    pub fn for_basis(basis: Basis) -> Self {
        let (theta_q, theta_h) = match basis {
            Basis::HV => (0.0, 0.0),
            Basis::DA => (FRAC_PI_4, FRAC_PI_8),
            Basis::LR => (FRAC_PI_4, 0.0),
        };
        MeasurementSetting { theta_q, theta_h, basis }
    }

    /// Jones matrix of the analyser plates; light meets the quarter-wave plate first.
    pub fn analyser(&self) -> CMat2 {
        hwp(self.theta_h) * qwp(self.theta_q)
    }

    /// Born probability of port `A` (transmitted `H` after the analyser).
    pub fn probability_a(&self, rho: &CMat2) -> f64 {
        let out = self.analyser().conjugate(rho);
        out.0[0][0].re / rho.trace().re
    }
}

/// Port intensities `(I_A, I_B)` for the HV, DA and LR bases, in that order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TomographyRecord {
    pub intensities: [(f64, f64); 3],
}

impl TomographyRecord {
    pub fn get(&self, basis: Basis) -> (f64, f64) {
        self.intensities[basis as usize]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("basis,I_A,I_B\n");
        for b in Basis::ALL {
            let (a, bb) = self.get(b);
            let _ = writeln!(s, "{},{:.12},{:.12}", b.name(), a, bb);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty tomography file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["basis", "I_A", "I_B"] {
            return Err(Error::Parse(format!("unexpected header '{header}'")));
        }
        let mut seen: [Option<(f64, f64)>; 3] = [None; 3];
        for line in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let [b, a, bb] = f.as_slice() else {
                return Err(Error::Parse(format!("expected 3 fields in '{line}'")));
            };
            let basis: Basis = b.parse()?;
            let num = |x: &str| {
                x.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad intensity '{x}': {e}")))
            };
            let slot = &mut seen[basis as usize];
            if slot.is_some() {
                return Err(Error::Parse(format!("basis {} listed twice", basis.name())));
            }
            *slot = Some((num(a)?, num(bb)?));
        }
        let mut intensities = [(0.0, 0.0); 3];
        for (i, s) in seen.iter().enumerate() {
            intensities[i] = s.ok_or_else(|| Error::Parse(format!("missing basis {}", Basis::ALL[i].name())))?;
        }
        Ok(TomographyRecord { intensities })
    }
}

/// Intensities the analyser would record for `rho`, with optional
/// multiplicative Gaussian detector noise clamped at zero.
pub fn forward_intensities(rho: &CMat2, total_power: f64, noise: Option<&NoiseParams>) -> Result<TomographyRecord> {
    check_density(rho)?;
    if !(total_power > 0.0 && total_power.is_finite()) {
        return Err(Error::Parse(format!("total power {total_power} must be positive")));
    }
    let mut intensities = [(0.0, 0.0); 3];
    for b in Basis::ALL {
        let p = MeasurementSetting::for_basis(b).probability_a(rho).clamp(0.0, 1.0);
        intensities[b as usize] = (total_power * p, total_power * (1.0 - p));
    }
    if let Some(n) = noise.filter(|n| n.intensity_sigma > 0.0) {
        n.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(n.rng_seed);
        let normal = Normal::new(0.0, n.intensity_sigma).map_err(|e| Error::Parse(e.to_string()))?;
        for (a, b) in intensities.iter_mut() {
            *a = (*a * (1.0 + normal.sample(&mut rng))).max(0.0);
            *b = (*b * (1.0 + normal.sample(&mut rng))).max(0.0);
        }
    }
    Ok(TomographyRecord { intensities })
}

/// `(P_A, P_B)` for each basis.
pub fn probabilities(rec: &TomographyRecord) -> Result<[(f64, f64); 3]> {
    let mut out = [(0.0, 0.0); 3];
    for b in Basis::ALL {
        let (a, bb) = rec.get(b);
        let total = a + bb;
        if total.is_nan() || total <= 0.0 || a < 0.0 || bb < 0.0 {
            return Err(Error::ZeroIntensity(b.name()));
        }
        let pa = a / total;
        out[b as usize] = (pa, 1.0 - pa);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reconstruction {
    pub rho: CMat2,
    pub bloch: BlochVec,
    /// `true` when `‖r‖ > 1` was rescaled onto the sphere.
    pub clamped: bool,
}

impl Reconstruction {
    /// `Tr ρ² = (1 + ‖r‖²)/2`.
    pub fn purity(&self) -> f64 {
        0.5 * (1.0 + self.bloch.norm().powi(2))
    }

    pub fn to_json(&self) -> String {
        let file = ReconstructionFile {
            rho: self.rho,
            bloch: self.bloch.to_array(),
            purity: self.purity(),
            clamped: self.clamped,
        };
        serde_json::to_string_pretty(&file).expect("reconstruction serialization is infallible")
    }
}

#[derive(Serialize, Deserialize)]
struct ReconstructionFile {
    #[serde(with = "crate::serial::mat2")]
    rho: CMat2,
    bloch: [f64; 3],
    purity: f64,
    clamped: bool,
}

/// Linear Stokes inversion: `r = (P₊ − P₋, P_L − P_R, P_H − P_V)`.
pub fn reconstruct(rec: &TomographyRecord) -> Result<Reconstruction> {
    let p = probabilities(rec)?;
    let diff = |b: Basis| p[b as usize].0 - p[b as usize].1;
    let mut r = BlochVec::new(diff(Basis::DA), diff(Basis::LR), diff(Basis::HV));
    let norm = r.norm();
    let clamped = norm > 1.0;
    if clamped {
        r = r.scaled(1.0 / norm);
        while r.norm() > 1.0 {
            r = r.scaled(1.0 - f64::EPSILON);
        }
    }
    Ok(Reconstruction {
        rho: r.density(),
        bloch: r,
        clamped,
    })
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, via the qubit identity
/// `F = Tr(ρσ) + 2√(det ρ · det σ)`.
pub fn fidelity(rho: &CMat2, sigma: &CMat2) -> Result<f64> {
    check_density(rho)?;
    check_density(sigma)?;
    let overlap = (*rho * *sigma).trace().re;
    let dets = (rho.det().re.max(0.0) * sigma.det().re.max(0.0)).sqrt();
    Ok((overlap + 2.0 * dets).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherencePair {
    pub c_l1: f64,
    pub c_max: f64,
}

/// `c_l1 = 2|ρ₀₁|` and `c_max = ‖r‖`, capped at 1 against rounding.
pub fn coherence(rho: &CMat2) -> CoherencePair {
    CoherencePair {
        c_l1: (2.0 * rho.0[0][1].norm()).min(1.0),
        c_max: rho.bloch().norm().min(1.0),
    }
}
