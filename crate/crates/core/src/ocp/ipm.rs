//! Dense primal-dual interior-point engine (Mehrotra predictor-corrector)
//! for convex QPs in the form `min ½ zᵀHz + fᵀz, Gz <= h, Az = b`.
//!
//! States are eliminated before problems reach this module, so every solve is
//! a dense factorization of the reduced KKT system
//! `[[H + GᵀDG, Aᵀ], [A, 0]]` with `D = diag(λ/s)`.

use super::{KktResiduals, QpProblem, SolveStatus, MAX_ITERS, TAU_KKT};
use nalgebra::{DMatrix, DVector};

/// Strictly feasible-ish starting point supplied by a formulation that knows
/// one (epigraph and phase-1 problems construct theirs directly).
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub z: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct IpmOutcome {
    pub status: SolveStatus,
    pub z: DVector<f64>,
    pub ineq_duals: DVector<f64>,
    pub eq_duals: DVector<f64>,
    pub iterations: usize,
    pub failure: Option<&'static str>,
}

pub fn minimize(p: &QpProblem, warm: Option<&WarmStart>) -> IpmOutcome {
    let mi = p.g_ineq.nrows();
    if mi == 0 {
        direct_equality_solve(p)
    } else {
        mehrotra(p, warm)
    }
}

/// No inequalities: one saddle-point solve of `[[H, Aᵀ], [A, 0]]`.
fn direct_equality_solve(p: &QpProblem) -> IpmOutcome {
    let d = p.dim();
    let me = p.a_eq.nrows();
    let mut k = DMatrix::zeros(d + me, d + me);
    k.view_mut((0, 0), (d, d)).copy_from(&p.hess);
    if me > 0 {
        k.view_mut((0, d), (d, me)).copy_from(&p.a_eq.transpose());
        k.view_mut((d, 0), (me, d)).copy_from(&p.a_eq);
    }
    let mut rhs = DVector::zeros(d + me);
    rhs.rows_mut(0, d).copy_from(&(-&p.lin));
    if me > 0 {
        rhs.rows_mut(d, me).copy_from(&p.b_eq);
    }
    let reg = 1e-12 * (1.0 + p.hess.amax());
    let mut attempt_reg = 0.0;
    for _ in 0..3 {
        let mut kk = k.clone();
        for i in 0..d {
            kk[(i, i)] += attempt_reg;
        }
        for i in d..d + me {
            kk[(i, i)] -= attempt_reg;
        }
        if let Some(sol) = kk.full_piv_lu().solve(&rhs) {
            let z = sol.rows(0, d).into_owned();
            let y = if me > 0 {
                sol.rows(d, me).into_owned()
            } else {
                DVector::zeros(0)
            };
            let res = KktResiduals::compute(p, &z, &DVector::zeros(0), &y);
            if res.max() <= TAU_KKT {
                return IpmOutcome {
                    status: SolveStatus::Optimal,
                    z,
                    ineq_duals: DVector::zeros(0),
                    eq_duals: y,
                    iterations: 1,
                    failure: None,
                };
            }
        }
        attempt_reg = if attempt_reg == 0.0 {
            reg
        } else {
            attempt_reg * 1e3
        };
    }
    IpmOutcome {
        status: SolveStatus::MaxIterations,
        z: DVector::zeros(d),
        ineq_duals: DVector::zeros(0),
        eq_duals: DVector::zeros(me),
        iterations: 1,
        failure: Some("singular equality KKT system"),
    }
}

fn mehrotra(p: &QpProblem, warm: Option<&WarmStart>) -> IpmOutcome {
    let d = p.dim();
    let mi = p.g_ineq.nrows();
    let me = p.a_eq.nrows();

    // Starting point.
    let mut z = match warm {
        Some(w) => w.z.clone(),
        None => {
            let mut hp = p.hess.clone();
            for i in 0..d {
                hp[(i, i)] += 1.0;
            }
            hp.full_piv_lu()
                .solve(&(-&p.lin))
                .unwrap_or_else(|| DVector::zeros(d))
        }
    };
    let s_raw = &p.h_ineq - &p.g_ineq * &z;
    let floor = if warm.is_some() { 1e-3 } else { 1.0 };
    let mut s = s_raw.map(|v| v.max(floor));
    let mut lam = DVector::from_element(mi, 1.0);
    let mut y = DVector::zeros(me);

    let hmax = p.hess.amax().max(1.0);
    let static_reg = 1e-11 * hmax;

    let mut best_merit = f64::INFINITY;
    let mut stall = 0usize;

    for iter in 0..MAX_ITERS {
        let res = KktResiduals::compute(p, &z, &lam, &y);
        let mu = lam.dot(&s) / mi as f64;
        if res.max() <= TAU_KKT && mu.abs() <= 1e-6 {
            return IpmOutcome {
                status: SolveStatus::Optimal,
                z,
                ineq_duals: lam,
                eq_duals: y,
                iterations: iter,
                failure: None,
            };
        }

        // Stall detection: no meaningful merit reduction over a window.
        let merit = res.max().max(mu);
        if merit < best_merit * 0.999 {
            best_merit = merit;
            stall = 0;
        } else {
            stall += 1;
            if stall > 40 {
                return IpmOutcome {
                    status: SolveStatus::MaxIterations,
                    z,
                    ineq_duals: lam,
                    eq_duals: y,
                    iterations: iter,
                    failure: Some("progress stalled"),
                };
            }
        }

        let r_d = &p.hess * &z + &p.lin + p.g_ineq.transpose() * &lam + p.a_eq.transpose() * &y;
        let r_p = &p.g_ineq * &z + &s - &p.h_ineq;
        let r_e = &p.a_eq * &z - &p.b_eq;

        // Reduced KKT matrix.
        let dvec = DVector::from_fn(mi, |i, _| lam[i] / s[i]);
        // Gᵀ with columns scaled by D, so GᵀDG = gtd * G.
        let mut gtd = p.g_ineq.transpose();
        for j in 0..mi {
            gtd.column_mut(j).scale_mut(dvec[j]);
        }
        let mut k = DMatrix::zeros(d + me, d + me);
        {
            let gtdg = &gtd * &p.g_ineq;
            let mut top = p.hess.clone() + gtdg;
            for i in 0..d {
                top[(i, i)] += static_reg;
            }
            k.view_mut((0, 0), (d, d)).copy_from(&top);
        }
        if me > 0 {
            k.view_mut((0, d), (d, me)).copy_from(&p.a_eq.transpose());
            k.view_mut((d, 0), (me, d)).copy_from(&p.a_eq);
            for i in d..d + me {
                k[(i, i)] -= static_reg;
            }
        }
        let lu = k.full_piv_lu();

        // Predictor (affine) direction: complementarity residual ΛSe.
        type Direction = (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>);
        let solve_direction = |rc_over_s: &DVector<f64>| -> Option<Direction> {
            // rc_over_s = S⁻¹ r_c.
            let mut rhs = DVector::zeros(d + me);
            let top = -&r_d + p.g_ineq.transpose() * (rc_over_s - dvec.component_mul(&r_p));
            rhs.rows_mut(0, d).copy_from(&top);
            if me > 0 {
                rhs.rows_mut(d, me).copy_from(&(-&r_e));
            }
            let sol = lu.solve(&rhs)?;
            let dz = sol.rows(0, d).into_owned();
            let dy = if me > 0 {
                sol.rows(d, me).into_owned()
            } else {
                DVector::zeros(0)
            };
            let ds = -&r_p - &p.g_ineq * &dz;
            let dlam =
                -rc_over_s + dvec.component_mul(&r_p) + dvec.component_mul(&(&p.g_ineq * &dz));
            Some((dz, dy, ds, dlam))
        };

        let rc_aff_over_s = lam.clone();
        let Some((_dz_a, _dy_a, ds_a, dlam_a)) = solve_direction(&rc_aff_over_s) else {
            return IpmOutcome {
                status: SolveStatus::MaxIterations,
                z,
                ineq_duals: lam,
                eq_duals: y,
                iterations: iter,
                failure: Some("singular KKT factorization"),
            };
        };
        let alpha_p_aff = max_step(&s, &ds_a);
        let alpha_d_aff = max_step(&lam, &dlam_a);
        let mu_aff = (0..mi)
            .map(|i| (s[i] + alpha_p_aff * ds_a[i]) * (lam[i] + alpha_d_aff * dlam_a[i]))
            .sum::<f64>()
            / mi as f64;
        let sigma = (mu_aff / mu).max(0.0).powi(3).min(1.0);

        // Corrector: r_c = ΛSe + ΔΛΔSe − σμe, divided by s.
        let rc_over_s = DVector::from_fn(mi, |i, _| {
            lam[i] + (dlam_a[i] * ds_a[i] - sigma * mu) / s[i]
        });
        let Some((dz, dy, ds, dlam)) = solve_direction(&rc_over_s) else {
            return IpmOutcome {
                status: SolveStatus::MaxIterations,
                z,
                ineq_duals: lam,
                eq_duals: y,
                iterations: iter,
                failure: Some("singular KKT factorization"),
            };
        };

        let eta = if mu > 1e-5 { 0.995 } else { 0.9999 };
        let alpha_p = (eta * max_step(&s, &ds)).min(1.0);
        let alpha_d = (eta * max_step(&lam, &dlam)).min(1.0);

        z += &dz * alpha_p;
        s += &ds * alpha_p;
        y += &dy * alpha_d;
        lam += &dlam * alpha_d;

        if !(z.iter().all(|v| v.is_finite())
            && s.iter().all(|v| v.is_finite() && *v > 0.0)
            && lam.iter().all(|v| v.is_finite() && *v > 0.0))
        {
            return IpmOutcome {
                status: SolveStatus::MaxIterations,
                z,
                ineq_duals: lam,
                eq_duals: y,
                iterations: iter,
                failure: Some("iterates diverged"),
            };
        }
    }

    IpmOutcome {
        status: SolveStatus::MaxIterations,
        z,
        ineq_duals: lam,
        eq_duals: y,
        iterations: MAX_ITERS,
        failure: None,
    }
}

/// Largest step in `(0, 1]` keeping `v + α dv > 0`.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut alpha = 1.0_f64;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            alpha = alpha.min(-v[i] / dv[i]);
        }
    }
    alpha
}
