//! Construction of desired steady states.
//!
//! A desired steady state carries no aggregates below the feed and no solids
//! above it, with a froth layer in the upper zone that does not reach the
//! feed. The construction proceeds from the effluent fraction through the
//! feed jump condition, the froth interface height (by quadrature of the
//! reciprocal froth ODE) and the solids jump condition; feasibility is the
//! conjunction of five inequalities evaluated with signed margins.

use serde::{Deserialize, Serialize};

use crate::column::{ColumnGeometry, OperatingPoint};
use crate::constitutive::{critical_points, ConstitutiveParams, FluxKind};
use crate::error::{Error, Result};
use crate::numeric::bisect;
use crate::quadrature::{adaptive_simpson, integrate_sqrt_endpoint};

/// Denominator threshold below which the froth ODE endpoint is treated as an
/// integrable singularity.
const MARGINAL_DENOMINATOR: f64 = 1e-14;

/// Outcome of the froth-interface computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrothInterface {
    /// Interface height; `None` when the froth layer would extend below the
    /// vessel (the integral exceeds the column height).
    pub z: Option<f64>,
    /// Set when the top-boundary denominator is marginally small and the
    /// endpoint transformation was applied.
    pub marginal: bool,
}

/// Effluent aggregate fraction phi_E = Q_F phi_F / (Q_W + Q_F - Q_U).
pub fn effluent_fraction(op: &OperatingPoint) -> Result<f64> {
    let q_e = op.effluent_flow();
    if q_e <= 0.0 {
        return Err(Error::NonPositiveEffluentFlow { q_e });
    }
    Ok(op.q_f * op.phi_f / q_e)
}

fn zone2_flux(phi: f64, q2: f64, p: &ConstitutiveParams) -> f64 {
    q2 * phi + p.batch_flux_unchecked(phi)
}

/// Smallest non-negative root of the feed jump condition
/// j_2(phi; q_2) = s_F on [0, phi_2^M], where j_2 is increasing.
pub fn solve_feed_jump(
    op: &OperatingPoint,
    geom: &ColumnGeometry,
    p: &ConstitutiveParams,
) -> Result<f64> {
    let q2 = op.velocity_zone2(geom);
    let s_f = op.feed_mass_flux(geom);
    if s_f == 0.0 {
        return Ok(0.0);
    }
    let cp = critical_points(q2, p, FluxKind::Aggregate);
    let j_max = zone2_flux(cp.local_max, q2, p);
    if s_f > j_max {
        return Err(Error::NoRoot { s_f, j_max });
    }
    Ok(bisect(
        |phi| zone2_flux(phi, q2, p) - s_f,
        0.0,
        cp.local_max,
    ))
}

/// Pulp-froth interface height from the change-of-variables integral
/// z_fr = z_E - int_{phi_c}^{phi_E} d(phi) / (j_2(phi) - s_F) dphi.
///
/// The integration runs left to right in panels so that it can stop early
/// once the froth provably fills the column. A non-positive denominator at
/// any sampled point means no increasing froth branch exists.
pub fn froth_interface(
    op: &OperatingPoint,
    p: &ConstitutiveParams,
    geom: &ColumnGeometry,
) -> Result<FrothInterface> {
    let phi_e = effluent_fraction(op)?;
    if phi_e <= p.phi_c || phi_e > 1.0 {
        return Err(Error::PhiEOutOfRange { phi_e });
    }
    let q2 = op.velocity_zone2(geom);
    let s_f = op.feed_mass_flux(geom);

    let denom = |phi: f64| zone2_flux(phi, q2, p) - s_f;

    use std::cell::Cell;
    let bad_phi: Cell<Option<f64>> = Cell::new(None);
    let integrand = |phi: f64| {
        let d = denom(phi);
        if d <= 0.0 {
            if bad_phi.get().is_none() {
                bad_phi.set(Some(phi));
            }
            return 0.0;
        }
        p.capillary_diffusion_unchecked(phi) / d
    };

    // coarse positivity scan ahead of the quadrature
    for k in 0..=256 {
        let phi = p.phi_c + (phi_e - p.phi_c) * k as f64 / 256.0;
        if denom(phi) <= 0.0 && phi < phi_e {
            return Err(Error::FrothConditionViolated { phi });
        }
    }
    let marginal = denom(phi_e) < MARGINAL_DENOMINATOR;

    let panels = 32usize;
    let tol = 1e-5 / panels as f64;
    let height = geom.height();
    let mut integral = 0.0;
    for k in 0..panels {
        let a = p.phi_c + (phi_e - p.phi_c) * k as f64 / panels as f64;
        let b = p.phi_c + (phi_e - p.phi_c) * (k + 1) as f64 / panels as f64;
        integral += if marginal && k == panels - 1 {
            integrate_sqrt_endpoint(&integrand, a, b, tol)
        } else {
            adaptive_simpson(&integrand, a, b, tol)
        };
        if let Some(phi) = bad_phi.get() {
            if phi < phi_e {
                return Err(Error::FrothConditionViolated { phi });
            }
        }
        if integral > height {
            return Ok(FrothInterface { z: None, marginal });
        }
    }
    Ok(FrothInterface {
        z: Some(geom.z_e - integral),
        marginal,
    })
}

/// Sampled strictly increasing froth branch phi(z) on [z_fr, z_E], obtained
/// by accumulating the same reciprocal-ODE integral on a fine phi grid and
/// returning (height, fraction) pairs.
pub fn froth_profile(
    op: &OperatingPoint,
    p: &ConstitutiveParams,
    geom: &ColumnGeometry,
    n_samples: usize,
) -> Result<Vec<(f64, f64)>> {
    let phi_e = effluent_fraction(op)?;
    if phi_e <= p.phi_c || phi_e > 1.0 {
        return Err(Error::PhiEOutOfRange { phi_e });
    }
    let interface = froth_interface(op, p, geom)?;
    let z_fr = interface.z.ok_or(Error::Infeasible {
        failed: "froth layer extends below the vessel".into(),
    })?;
    let q2 = op.velocity_zone2(geom);
    let s_f = op.feed_mass_flux(geom);
    let integrand = |phi: f64| {
        let d = zone2_flux(phi, q2, p) - s_f;
        p.capillary_diffusion_unchecked(phi) / d
    };

    let n = n_samples.max(2);
    let mut out = Vec::with_capacity(n);
    out.push((z_fr, p.phi_c));
    let mut z = z_fr;
    for k in 1..n {
        let a = p.phi_c + (phi_e - p.phi_c) * (k - 1) as f64 / (n - 1) as f64;
        let b = p.phi_c + (phi_e - p.phi_c) * k as f64 / (n - 1) as f64;
        z += adaptive_simpson(&integrand, a, b, 1e-9);
        out.push((z.min(geom.z_e), b));
    }
    // the accumulated landing point matches z_E up to quadrature tolerance;
    // pin the endpoint exactly
    if let Some(last) = out.last_mut() {
        *last = (geom.z_e, phi_e);
    }
    Ok(out)
}

/// Zone-1 solids fraction and underflow solids fraction from the solids jump
/// condition Q_F psi_F = A_U f_1(varphi_1, 0; q_1).
pub fn solve_solids_jump(
    op: &OperatingPoint,
    geom: &ColumnGeometry,
    p: &ConstitutiveParams,
) -> Result<(f64, f64)> {
    if op.q_u == 0.0 {
        if op.psi_f > 0.0 {
            return Err(Error::ZeroUnderflow { psi_f: op.psi_f });
        }
        return Ok((0.0, 0.0));
    }
    if op.psi_f == 0.0 {
        return Ok((0.0, 0.0));
    }
    let q1 = op.velocity_zone1(geom);
    // zone-1 settling flux at phi = 0 in downward orientation: f_b(x) - q_1 x
    let flux = |x: f64| p.settling_flux_unchecked(x) - q1 * x;
    let cp = critical_points(-q1, p, FluxKind::Solids);
    let limiting_point = cp.local_min.expect("q >= 0 has a limiting point");
    let capacity = geom.a_u * flux(limiting_point);
    let load = op.q_f * op.psi_f;
    if load > capacity {
        return Err(Error::SolidsOverload {
            load,
            limit: capacity,
        });
    }
    let bracket_hi = cp.local_min_match.expect("matched low value exists");
    let varphi_1 = bisect(|x| geom.a_u * flux(x) - load, 0.0, bracket_hi);
    let varphi_u = varphi_1 + geom.a_u * p.settling_flux_unchecked(varphi_1) / op.q_u;
    Ok((varphi_1, varphi_u))
}

/// Feasibility of a desired steady state: the five inequalities with signed
/// margins, the constructed state quantities, and the overall verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Zone-2 plateau value stays at or below the zone-1 flux zero.
    pub fib_ok: bool,
    /// Solids feed within the zone-1 limiting flux.
    pub fias_ok: bool,
    /// Effluent fraction lands in (phi_c, 1].
    pub froth1_ok: bool,
    /// Froth interface above the feed level.
    pub froth2_ok: bool,
    /// Zone-2 flux stays above the feed flux across the froth range.
    pub froth3_ok: bool,
    /// All five conditions hold.
    pub feasible: bool,
    /// The froth ODE endpoint denominator was near-singular.
    pub marginal: bool,
    #[serde(rename = "phi_E")]
    pub phi_e: Option<f64>,
    pub phi_bar2: Option<f64>,
    pub z_fr: Option<f64>,
    pub varphi_1: Option<f64>,
    #[serde(rename = "varphi_U")]
    pub varphi_u: Option<f64>,
    /// Signed distance phi_Z - phi_bar2 (dimensionless).
    pub fib_margin: f64,
    /// Signed capacity surplus A_U f_1(varphi_M) - Q_F psi_F (m3/s).
    pub fias_margin: f64,
    /// min of the two flow inequalities around the effluent fraction (m3/s).
    pub froth1_margin: f64,
    /// Signed distance z_fr - z_F (m); absent without a froth interface.
    pub froth2_margin: Option<f64>,
    /// Signed flux surplus of zone 2 over the feed flux (m/s).
    pub froth3_margin: f64,
}

/// Evaluate all five steady-state inequalities. Never fails: out-of-range
/// operating points simply produce negative margins. `op` may violate the
/// usual operating-point invariants (used when sweeping charts).
pub fn check_conditions(
    op: &OperatingPoint,
    p: &ConstitutiveParams,
    geom: &ColumnGeometry,
) -> FeasibilityReport {
    let q_e_flow = op.effluent_flow();
    let phi_e = if q_e_flow > 0.0 {
        Some(op.q_f * op.phi_f / q_e_flow)
    } else {
        None
    };

    // (Froth1): Q_F (1 - phi_F/phi_c) < Q_U - Q_W <= Q_F (1 - phi_F)
    let delta = op.q_u - op.q_w;
    let froth1_left = delta - op.q_f * (1.0 - op.phi_f / p.phi_c);
    let froth1_right = op.q_f * (1.0 - op.phi_f) - delta;
    let froth1_margin = froth1_left.min(froth1_right);
    let froth1_ok = froth1_left > 0.0 && froth1_right >= 0.0;

    let q1 = op.velocity_zone1(geom);
    let q2 = op.velocity_zone2(geom);
    let s_f = op.feed_mass_flux(geom);

    // feed jump condition, extended continuously past its existence range
    let cp2 = critical_points(q2, p, FluxKind::Aggregate);
    let j2_max = zone2_flux(cp2.local_max, q2, p);
    let phi_bar2 = if s_f <= j2_max {
        Some(bisect(
            |phi| zone2_flux(phi, q2, p) - s_f,
            0.0,
            cp2.local_max,
        ))
    } else {
        None
    };
    let phi_bar2_eff = phi_bar2.unwrap_or(cp2.local_max);

    // (FIb): phi_bar2 <= phi_Z(q_1); for a closed underflow the zone-1 flux
    // is non-negative everywhere so the constraint is vacuous
    let phi_z_eff = if q1 == 0.0 {
        1.0
    } else if q1 <= -p.v_term {
        0.0
    } else {
        critical_points(q1, p, FluxKind::Aggregate)
            .flux_zero
            .unwrap_or(0.0)
    };
    let fib_margin = phi_z_eff - phi_bar2_eff;
    let fib_ok = fib_margin >= 0.0;

    // (FIas): A_U f_1(varphi_M, 0; q_1) >= Q_F psi_F
    let cps = critical_points(-q1, p, FluxKind::Solids);
    let limiting = cps.local_min.expect("downward bulk has a limiting point");
    let capacity = geom.a_u * (p.settling_flux_unchecked(limiting) - q1 * limiting);
    let fias_margin = capacity - op.q_f * op.psi_f;
    let fias_ok = fias_margin >= 0.0;

    // (Froth3): s_F below the zone-2 flux across the froth range, with the
    // local minimum pinned to the top when zone 2 flows downward
    let phi_2m = cp2.local_min.unwrap_or(1.0);
    let (froth3_margin, froth3_ok) = match phi_e {
        Some(pe) if phi_2m >= pe && pe <= 1.0 => {
            let m = zone2_flux(pe.min(1.0), q2, p) - s_f;
            let ok = m > 0.0 || (m == 0.0 && phi_2m == pe);
            (m, ok)
        }
        _ => {
            // covers phi_2m < phi_E and the no-effluent limit (phi_E -> inf)
            let m = zone2_flux(phi_2m, q2, p) - s_f;
            (m, m > 0.0)
        }
    };

    // (Froth2): z_F < z_fr, computable only when a froth branch exists
    let mut marginal = false;
    let (z_fr, froth2_margin) = match phi_e {
        Some(pe) if pe > p.phi_c && pe <= 1.0 && froth3_ok => {
            match froth_interface(op, p, geom) {
                Ok(fi) => {
                    marginal = fi.marginal;
                    match fi.z {
                        Some(z) => (Some(z), Some(z - geom.z_f)),
                        None => (None, Some(geom.z_u - geom.z_f)),
                    }
                }
                Err(_) => (None, None),
            }
        }
        _ => (None, None),
    };
    let froth2_ok = matches!(froth2_margin, Some(m) if m > 0.0);

    let feasible = fib_ok && fias_ok && froth1_ok && froth2_ok && froth3_ok;

    // solids construction, reported when the capacity allows it
    let (varphi_1, varphi_u) = if fias_ok {
        match solve_solids_jump(op, geom, p) {
            Ok((v1, vu)) => (Some(v1), Some(vu)),
            Err(_) => (None, None),
        }
    } else {
        (None, None)
    };

    FeasibilityReport {
        fib_ok,
        fias_ok,
        froth1_ok,
        froth2_ok,
        froth3_ok,
        feasible,
        marginal,
        phi_e,
        phi_bar2,
        z_fr,
        varphi_1,
        varphi_u,
        fib_margin,
        fias_margin,
        froth1_margin,
        froth2_margin,
        froth3_margin,
    }
}

/// A constructed steady-state profile sampled on a uniform height grid.
#[derive(Debug, Clone, Serialize)]
pub struct SteadyProfile {
    /// Sample heights (m), spanning [z_U, z_E].
    pub grid: Vec<f64>,
    /// Aggregate fraction per height.
    pub phi: Vec<f64>,
    /// Solids fraction per height (psi = varphi (1 - phi)).
    pub psi: Vec<f64>,
    #[serde(rename = "phi_E")]
    pub phi_e: f64,
    #[serde(rename = "varphi_U")]
    pub varphi_u: f64,
    pub z_fr: Option<f64>,
}

/// Assemble the desired steady state on an `n`-point grid.
///
/// Fails with [`Error::Infeasible`] if any of the five conditions is
/// violated.
pub fn desired_steady_state(
    op: &OperatingPoint,
    p: &ConstitutiveParams,
    geom: &ColumnGeometry,
    n: usize,
) -> Result<SteadyProfile> {
    let report = check_conditions(op, p, geom);
    if !report.feasible {
        let mut failed = Vec::new();
        if !report.fib_ok {
            failed.push("FIb");
        }
        if !report.fias_ok {
            failed.push("FIas");
        }
        if !report.froth1_ok {
            failed.push("Froth1");
        }
        if !report.froth2_ok {
            failed.push("Froth2");
        }
        if !report.froth3_ok {
            failed.push("Froth3");
        }
        return Err(Error::Infeasible {
            failed: failed.join(", "),
        });
    }
    let phi_e = report.phi_e.expect("feasible implies effluent fraction");
    let phi_bar2 = report.phi_bar2.expect("feasible implies feed jump root");
    let z_fr = report.z_fr.expect("feasible implies froth interface");
    let (varphi_1, varphi_u) = (
        report.varphi_1.expect("feasible implies solids root"),
        report.varphi_u.expect("feasible implies underflow value"),
    );

    let n = n.max(2);
    let branch = froth_profile(op, p, geom, 512)?;
    let grid = crate::numeric::linspace(geom.z_u, geom.z_e, n);
    let mut phi = Vec::with_capacity(n);
    let mut psi = Vec::with_capacity(n);
    for &z in &grid {
        let (ph, varphi) = if z < geom.z_f {
            (0.0, varphi_1)
        } else if z < z_fr {
            (phi_bar2, 0.0)
        } else {
            (interp_branch(&branch, z), 0.0)
        };
        phi.push(ph);
        psi.push(varphi * (1.0 - ph));
    }
    Ok(SteadyProfile {
        grid,
        phi,
        psi,
        phi_e,
        varphi_u,
        z_fr: Some(z_fr),
    })
}

fn interp_branch(branch: &[(f64, f64)], z: f64) -> f64 {
    match branch.binary_search_by(|(zb, _)| zb.partial_cmp(&z).unwrap()) {
        Ok(i) => branch[i].1,
        Err(0) => branch[0].1,
        Err(i) if i >= branch.len() => branch[branch.len() - 1].1,
        Err(i) => {
            let (z0, p0) = branch[i - 1];
            let (z1, p1) = branch[i];
            if z1 == z0 {
                p1
            } else {
                p0 + (p1 - p0) * (z - z0) / (z1 - z0)
            }
        }
    }
}
