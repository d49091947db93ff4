//! Numerical two-branch fit of an arbitrary channel.
//!
//! Parameters are `(α_a, β_a, α_b, β_b, θ)` with `p = sin²θ`, followed by the
//! Euler angles of `U_a, U′_a, U_b, U′_b`. The residual vector is the real and
//! imaginary parts of the Choi-matrix difference, minimised by damped
//! Gauss-Newton (Levenberg-Marquardt) from many seeded starting points.

use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{plan_to_channel_unchecked, DecompositionPlan, QuasiExtremeBranch};
use crate::channels::{choi_of, KrausChannel};
use crate::error::{Error, Result};
use crate::mat::{CMat2, CMat4};
use crate::optics::{su2_from_euler, EulerAngles};

const NP: usize = 17;
const NR: usize = 32;

type Params = SVector<f64, NP>;
type Resid = SVector<f64, NR>;
type Jac = SMatrix<f64, NR, NP>;

/// Residual above which a fit is reported as not converged.
pub const CONVERGENCE_LIMIT: f64 = 1e-4;

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    /// Starts per round; rounds continue until `target` is met or `max_starts` is used.
    pub starts: usize,
    pub max_starts: usize,
    pub max_iterations: usize,
    pub target: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            starts: 32,
            max_starts: 256,
            max_iterations: 400,
            target: 1e-11,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub plan: DecompositionPlan,
    /// Frobenius distance between the Choi matrices of the plan and the target.
    pub residual: f64,
    pub converged: bool,
    pub starts_used: usize,
}

/// Fits a two-branch plan with default options.
pub fn fit_plan(ch: &KrausChannel) -> Result<FitOutcome> {
    fit_plan_with(ch, &FitOptions::default())
}

pub fn fit_plan_with(ch: &KrausChannel, opts: &FitOptions) -> Result<FitOutcome> {
    let report = ch.validate();
    if !report.ok {
        return Err(Error::InvalidChannel(format!(
            "trace residual {:.3e}, min Choi eigenvalue {:.3e}",
            report.trace_residual, report.min_choi_eig
        )));
    }
    let target = ch.to_choi();
    let starts = opts.starts.max(1);
    let mut best: Option<(f64, usize, Params)> = None;
    let mut used = 0;
    while used < opts.max_starts.max(starts) {
        let round: Vec<(f64, usize, Params)> = (used..used + starts)
            .into_par_iter()
            .map(|k| {
                let x0 = initial_point(opts.seed, k);
                let x = levenberg_marquardt(&target, x0, opts.max_iterations, opts.target);
                (residual_norm(&target, &x), k, x)
            })
            .collect();
        used += starts;
        for cand in round {
            let better = match &best {
                None => true,
                Some((r, k, _)) => cand.0 < *r || (cand.0 == *r && cand.1 < *k),
            };
            if better {
                best = Some(cand);
            }
        }
        if best.as_ref().is_some_and(|b| b.0 <= opts.target) {
            break;
        }
    }
    let (_, _, x) = best.expect("at least one start");
    let plan = plan_from_params(&x);
    let residual = plan_to_channel_unchecked(&plan).to_choi().distance(&target);
    Ok(FitOutcome {
        plan,
        residual,
        converged: residual <= CONVERGENCE_LIMIT,
        starts_used: used,
    })
}

fn initial_point(seed: u64, k: usize) -> Params {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    Params::from_fn(|_, _| rng.random_range(-PI..PI))
}

fn euler(x: &Params, at: usize) -> CMat2 {
    su2_from_euler(&EulerAngles {
        phi: x[at],
        xi: x[at + 1],
        zeta: x[at + 2],
    })
}

fn plan_from_params(x: &Params) -> DecompositionPlan {
    let a = QuasiExtremeBranch::new(x[0], x[1]).with_unitaries(euler(x, 5), euler(x, 8));
    let b = QuasiExtremeBranch::new(x[2], x[3]).with_unitaries(euler(x, 11), euler(x, 14));
    DecompositionPlan::mixed(a, b, x[4].sin().powi(2))
}

fn model_choi(x: &Params) -> CMat4 {
    let plan = plan_from_params(x);
    let ops: Vec<CMat2> = plan
        .weighted_branches()
        .into_iter()
        .flat_map(|(w, b)| b.kraus().map(|k| k.scale_re(w.sqrt())))
        .collect();
    choi_of(&ops)
}

fn residuals(target: &CMat4, x: &Params) -> Resid {
    let d = model_choi(x) - *target;
    Resid::from_fn(|k, _| {
        let z = d.0[(k / 2) / 4][(k / 2) % 4];
        if k % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

fn residual_norm(target: &CMat4, x: &Params) -> f64 {
    model_choi(x).distance(target)
}

fn jacobian(target: &CMat4, x: &Params) -> Jac {
    const H: f64 = 1e-6;
    let mut j = Jac::zeros();
    for c in 0..NP {
        let mut xp = *x;
        let mut xm = *x;
        xp[c] += H;
        xm[c] -= H;
        let col = (residuals(target, &xp) - residuals(target, &xm)) / (2.0 * H);
        j.set_column(c, &col);
    }
    j
}

fn levenberg_marquardt(target: &CMat4, mut x: Params, max_iter: usize, tol: f64) -> Params {
    let mut r = residuals(target, &x);
    let mut cost = r.norm_squared();
    let mut mu = -1.0;
    let mut nu = 2.0;
    for _ in 0..max_iter {
        if cost.sqrt() <= 0.1 * tol {
            break;
        }
        let j = jacobian(target, &x);
        let a = j.transpose() * j;
        let g = j.transpose() * r;
        if mu < 0.0 {
            mu = 1e-3 * (0..NP).map(|i| a[(i, i)]).fold(0.0, f64::max).max(1e-12);
        }
        let mut damped = a;
        for i in 0..NP {
            damped[(i, i)] += mu;
        }
        let Some(step) = damped.cholesky().map(|c| c.solve(&(-g))) else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        if step.norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
        let xn = x + step;
        let rn = residuals(target, &xn);
        let cn = rn.norm_squared();
        let predicted = -(step.dot(&g) * 2.0 + (j * step).norm_squared());
        let gain = if predicted > 0.0 { (cost - cn) / predicted } else { -1.0 };
        if cn < cost {
            x = xn;
            r = rn;
            cost = cn;
            let f = 1.0 - (2.0 * gain - 1.0).powi(3);
            mu *= f.clamp(1.0 / 3.0, 1.0);
            nu = 2.0;
        } else {
            mu *= nu;
            nu *= 2.0;
            if mu > 1e30 {
                break;
            }
        }
    }
    x
}
