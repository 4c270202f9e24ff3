//! Explicit monotone finite-volume scheme for the coupled aggregate/solids
//! system.
//!
//! The vessel is covered with N-2 cells plus one cell below and one above
//! for the outlet fractions. The aggregate update upwinds the bulk term,
//! takes the drift term as phi(below) * v(phi(above)) and differences the
//! integrated diffusion; the solids update adds an Engquist-Osher settling
//! flux relative to the suspension. Under the CFL bound both updates are
//! monotone and keep 0 <= phi <= 1 and 0 <= psi <= 1 - phi.
//!
//! Boundary bulk flows are taken zone-exact (the flow below the feed cell is
//! always -Q_U and the feed enters as a source), so the per-cell bulk
//! balance used by the boundedness proofs holds to rounding even when the
//! feed sits on a cell boundary.

use crate::column::{ColumnGeometry, OperatingPoint, ONE_MINUS_PHI_GUARD};
use crate::constitutive::ConstitutiveParams;
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Computational grid with precomputed areas and ratios.
#[derive(Debug, Clone)]
pub struct Grid {
    /// Total cell count, including the two outlet cells.
    pub n: usize,
    /// Cell width (m), H / (N - 2).
    pub dz: f64,
    /// Physical heights of the N + 1 cell boundaries; index 1 is z_U and
    /// index N - 1 is z_E.
    pub z_bounds: Vec<f64>,
    /// Cell-averaged areas (length N).
    pub cell_area: Vec<f64>,
    /// Boundary areas averaged over the staggered intervals (length N + 1).
    pub bound_area: Vec<f64>,
    /// Index of the cell containing the feed level.
    pub feed_cell: usize,
    /// max over cells of (adjacent boundary area) / (cell area).
    pub m1: f64,
    /// max over cells of (sum of adjacent boundary areas) / (cell area).
    pub m2: f64,
    /// Smallest of all cell and boundary areas.
    pub a_min: f64,
}

impl Grid {
    /// True when boundary `i` lies inside the vessel, where drift and
    /// capillary diffusion act.
    #[inline]
    pub fn interior(&self, i: usize) -> bool {
        i >= 1 && i + 2 <= self.n
    }

    /// Height of the centre of cell `j`.
    pub fn cell_center(&self, j: usize) -> f64 {
        self.z_bounds[j] + 0.5 * self.dz
    }

    /// Net upward volumetric flow across boundary `i` (m3/s). Zone-exact:
    /// below and at the feed cell's lower boundary the flow is -Q_U, above
    /// it -Q_U + Q_F, and from the effluent level on -Q_U + Q_F + Q_W.
    #[inline]
    pub fn boundary_flow(&self, op: &OperatingPoint, i: usize) -> f64 {
        if i <= self.feed_cell {
            -op.q_u
        } else if i + 2 <= self.n {
            -op.q_u + op.q_f
        } else {
            -op.q_u + op.q_f + op.q_w
        }
    }
}

/// Build the grid for `geom` with `n` cells (at least 4).
pub fn build_grid(geom: &ColumnGeometry, n: usize) -> Result<Grid> {
    geom.validate()?;
    if n < 4 {
        return Err(Error::GridTooCoarse { n });
    }
    let dz = geom.height() / (n - 2) as f64;
    let z_bounds: Vec<f64> = (0..=n)
        .map(|i| geom.z_u + (i as f64 - 1.0) * dz)
        .collect();

    // average of the two-piece area over [a, b)
    let avg_area = |a: f64, b: f64| -> f64 {
        let below = (geom.z_f - a).clamp(0.0, b - a);
        (geom.a_u * below + geom.a_e * ((b - a) - below)) / (b - a)
    };

    let cell_area: Vec<f64> = (0..n)
        .map(|j| avg_area(z_bounds[j], z_bounds[j + 1]))
        .collect();
    let bound_area: Vec<f64> = (0..=n)
        .map(|i| avg_area(z_bounds[i] - 0.5 * dz, z_bounds[i] + 0.5 * dz))
        .collect();

    let mut feed_cell = (((geom.z_f - geom.z_u) / dz).floor() as usize + 1).min(n - 2);
    while feed_cell > 1 && geom.z_f < z_bounds[feed_cell] {
        feed_cell -= 1;
    }
    while feed_cell < n - 2 && geom.z_f >= z_bounds[feed_cell + 1] {
        feed_cell += 1;
    }

    let mut m1: f64 = 0.0;
    let mut m2: f64 = 0.0;
    for j in 0..n {
        m1 = m1
            .max(bound_area[j] / cell_area[j])
            .max(bound_area[j + 1] / cell_area[j]);
        m2 = m2.max((bound_area[j] + bound_area[j + 1]) / cell_area[j]);
    }
    let a_min = cell_area
        .iter()
        .chain(bound_area.iter())
        .fold(f64::INFINITY, |m, &a| m.min(a));

    Ok(Grid {
        n,
        dz,
        z_bounds,
        cell_area,
        bound_area,
        feed_cell,
        m1,
        m2,
        a_min,
    })
}

/// Cell-averaged volume fractions at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub t: f64,
}

impl State {
    /// Vessel initially filled with water only.
    pub fn water(n: usize) -> Self {
        State {
            phi: vec![0.0; n],
            psi: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phi.len() != self.psi.len() {
            return Err(Error::InvalidScenario {
                reason: "phi and psi arrays differ in length".into(),
            });
        }
        for (j, (&ph, &ps)) in self.phi.iter().zip(&self.psi).enumerate() {
            if !(0.0..=1.0).contains(&ph) {
                return Err(Error::Domain {
                    name: "phi",
                    value: ph,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
            if ps < 0.0 || ps > 1.0 - ph {
                return Err(Error::Domain {
                    name: "psi",
                    value: self.psi[j],
                    lo: 0.0,
                    hi: 1.0 - ph,
                });
            }
        }
        Ok(())
    }
}

/// Constants of the CFL bound and the resulting largest stable step.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CflData {
    pub m1: f64,
    pub m2: f64,
    pub a_min: f64,
    pub q_sup: f64,
    pub norm_v: f64,
    pub norm_vprime: f64,
    pub norm_d: f64,
    pub vhs0: f64,
    pub norm_vhs_prime: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub dt_max: f64,
}

/// Largest time step allowed by the CFL condition for in/out flows bounded
/// by `q_sup` = max over the horizon of Q_F + Q_W. Sup norms come from the
/// closed-form branch-wise extrema of the constitutive functions.
pub fn cfl_dt(grid: &Grid, p: &ConstitutiveParams, q_sup: f64) -> CflData {
    let norm_v = p.sup_aggregate_velocity();
    let norm_vprime = p.sup_aggregate_velocity_deriv();
    let norm_d = p.sup_capillary_diffusion();
    let vhs0 = p.v_inf;
    let norm_vhs_prime = p.sup_settling_velocity_deriv();
    let beta1 = grid.m1 * norm_v + grid.m2 * norm_d / grid.dz;
    let beta2 = grid.m1 * vhs0.max(norm_vhs_prime)
        + grid.m2 * (1.0 - p.phi_c) * norm_d / grid.dz;
    let dt_max =
        grid.dz / (2.0 * q_sup / grid.a_min + grid.m1 * norm_vprime + beta1.max(beta2));
    CflData {
        m1: grid.m1,
        m2: grid.m2,
        a_min: grid.a_min,
        q_sup,
        norm_v,
        norm_vprime,
        norm_d,
        vhs0,
        norm_vhs_prime,
        beta1,
        beta2,
        dt_max,
    }
}

fn check_cfl(grid: &Grid, op: &OperatingPoint, p: &ConstitutiveParams, dt: f64) -> Result<()> {
    let dt_max = cfl_dt(grid, p, op.q_f + op.q_w).dt_max;
    if dt > dt_max * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, dt_max });
    }
    Ok(())
}

/// Area-weighted numerical aggregate fluxes A_i Phi_i at all N + 1 cell
/// boundaries (m3/s), built from time-level-n data.
pub fn aggregate_boundary_flows(
    phi: &[f64],
    grid: &Grid,
    op: &OperatingPoint,
    p: &ConstitutiveParams,
) -> Vec<f64> {
    let n = grid.n;
    // per-cell constitutive values, evaluated once
    let vel: Vec<f64> = phi.iter().map(|&x| p.aggregate_velocity_unchecked(x)).collect();
    let dint: Vec<f64> = phi
        .iter()
        .map(|&x| p.capillary_diffusion_integral_unchecked(x))
        .collect();
    let mut flows = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let phi_below = if i == 0 { 0.0 } else { phi[i - 1] };
        let phi_above = if i == n { 0.0 } else { phi[i] };
        let q = grid.boundary_flow(op, i);
        let mut flow = phi_below * q.max(0.0) + phi_above * q.min(0.0);
        if grid.interior(i) {
            // both neighbours are real cells here
            flow += grid.bound_area[i]
                * (phi_below * vel[i] - (dint[i] - dint[i - 1]) / grid.dz);
        }
        flows.push(flow);
    }
    flows
}

/// Numerical total aggregate flux Phi_i (m/s) at boundary `i`.
pub fn aggregate_flux(
    state: &State,
    grid: &Grid,
    op: &OperatingPoint,
    p: &ConstitutiveParams,
    i: usize,
) -> Result<f64> {
    if i > grid.n {
        return Err(Error::IndexOutOfRange { i, n: grid.n });
    }
    let flows = aggregate_boundary_flows(&state.phi, grid, op, p);
    Ok(flows[i] / grid.bound_area[i])
}

fn conservative_update(
    values: &[f64],
    flows: &[f64],
    feed: f64,
    grid: &Grid,
    dt: f64,
) -> Vec<f64> {
    let lambda = dt / grid.dz;
    values
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let source = if j == grid.feed_cell { feed } else { 0.0 };
            v + lambda / grid.cell_area[j] * (flows[j] - flows[j + 1] + source)
        })
        .collect()
}

/// One explicit aggregate update. Fails if `dt` exceeds the CFL bound for
/// the current flows.
pub fn step_phi(
    state: &State,
    grid: &Grid,
    op: &OperatingPoint,
    p: &ConstitutiveParams,
    dt: f64,
) -> Result<Vec<f64>> {
    check_cfl(grid, op, p, dt)?;
    let flows = aggregate_boundary_flows(&state.phi, grid, op, p);
    Ok(conservative_update(
        &state.phi,
        &flows,
        op.q_f * op.phi_f,
        grid,
        dt,
    ))
}

#[inline]
fn suspension_ratio(psi: f64, phi: f64) -> f64 {
    let eps = 1.0 - phi;
    if eps < ONE_MINUS_PHI_GUARD {
        0.0
    } else {
        psi / eps
    }
}

#[inline]
fn truncated_settling_flux(x: f64, psi_max: f64, p: &ConstitutiveParams) -> f64 {
    if x >= psi_max {
        0.0
    } else {
        x * p.settling_velocity_unchecked(x / psi_max)
    }
}

pub(crate) fn eo_flux_unchecked(
    psi_below: f64,
    psi_above: f64,
    phi_below: f64,
    phi_above: f64,
    p: &ConstitutiveParams,
) -> f64 {
    let psi_max = 1.0 - phi_below.max(phi_above);
    if psi_max <= 0.0 {
        return 0.0;
    }
    let f = |x: f64| truncated_settling_flux(x, psi_max, p);
    let psi_hat = psi_max / (1.0 + p.n_rz);
    if psi_below <= psi_hat {
        if psi_above <= psi_hat {
            f(psi_above)
        } else {
            f(psi_hat)
        }
    } else if psi_above <= psi_hat {
        f(psi_below) + f(psi_above) - f(psi_hat)
    } else {
        f(psi_below)
    }
}

/// Engquist-Osher settling flux across one boundary, positive downwards.
/// The settling law is evaluated relative to the space left by the
/// aggregates on both sides, psi_max = 1 - max(phi_below, phi_above).
pub fn eo_flux(
    psi_below: f64,
    psi_above: f64,
    phi_below: f64,
    phi_above: f64,
    p: &ConstitutiveParams,
) -> Result<f64> {
    for (name, v) in [
        ("psi_below", psi_below),
        ("psi_above", psi_above),
        ("phi_below", phi_below),
        ("phi_above", phi_above),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain {
                name,
                value: v,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    Ok(eo_flux_unchecked(psi_below, psi_above, phi_below, phi_above, p))
}

/// Area-weighted numerical solids fluxes A_i Psi_i at all boundaries
/// (m3/s), from time-level-n `psi` and `phi`.
pub fn solids_boundary_flows(
    psi: &[f64],
    phi: &[f64],
    grid: &Grid,
    op: &OperatingPoint,
    p: &ConstitutiveParams,
) -> Vec<f64> {
    let n = grid.n;
    let vel: Vec<f64> = phi.iter().map(|&x| p.aggregate_velocity_unchecked(x)).collect();
    let dint: Vec<f64> = phi
        .iter()
        .map(|&x| p.capillary_diffusion_integral_unchecked(x))
        .collect();
    let mut flows = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let (psi_below, phi_below) = if i == 0 { (0.0, 0.0) } else { (psi[i - 1], phi[i - 1]) };
        let (psi_above, phi_above) = if i == n { (0.0, 0.0) } else { (psi[i], phi[i]) };
        let q = grid.boundary_flow(op, i);
        let mut flow = psi_below * q.max(0.0) + psi_above * q.min(0.0);
        if grid.interior(i) {
            let dd = dint[i] - dint[i - 1];
            let settle = eo_flux_unchecked(psi_below, psi_above, phi_below, phi_above, p);
            let lifted = suspension_ratio(psi_above, phi_above)
                * (phi_below * vel[i] - dd.min(0.0) / grid.dz);
            let drained = suspension_ratio(psi_below, phi_below) * dd.max(0.0) / grid.dz;
            flow -= grid.bound_area[i] * (settle + lifted - drained);
        }
        flows.push(flow);
    }
    flows
}

/// One explicit solids update using the aggregate field of the SAME time
/// level (advance `psi` before overwriting `phi`).
pub fn step_psi(
    state: &State,
    grid: &Grid,
    op: &OperatingPoint,
    p: &ConstitutiveParams,
    dt: f64,
) -> Result<Vec<f64>> {
    check_cfl(grid, op, p, dt)?;
    let flows = solids_boundary_flows(&state.psi, &state.phi, grid, op, p);
    Ok(conservative_update(
        &state.psi,
        &flows,
        op.q_f * op.psi_f,
        grid,
        dt,
    ))
}

/// Outlet volume fractions: cell averages of the cell below z_U and the
/// cell above z_E.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outlets {
    pub phi_u: f64,
    pub phi_e: f64,
    pub psi_u: f64,
    pub psi_e: f64,
}

pub fn outlets(state: &State, grid: &Grid) -> Outlets {
    let last = grid.n - 1;
    Outlets {
        phi_u: state.phi[0],
        phi_e: state.phi[last],
        psi_u: state.psi[0],
        psi_e: state.psi[last],
    }
}

/// Relative defect of the discrete per-step mass balance
/// A_j (new - old) dz / dt = F_j - F_{j+1} + feed_j, summed over cells and
/// scaled by the total flux magnitude.
pub fn mass_balance_residual(
    old: &[f64],
    new: &[f64],
    flows: &[f64],
    feed: f64,
    grid: &Grid,
    dt: f64,
) -> f64 {
    let n = grid.n;
    let defect = compensated_sum((0..n).map(|j| {
        let source = if j == grid.feed_cell { feed } else { 0.0 };
        grid.cell_area[j] * (new[j] - old[j]) * grid.dz / dt
            - (flows[j] - flows[j + 1] + source)
    }));
    let scale = compensated_sum(flows.iter().map(|f| f.abs())) + feed.abs() + f64::MIN_POSITIVE;
    (defect / scale).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn setup(n: usize) -> (ColumnGeometry, Grid, OperatingPoint, ConstitutiveParams) {
        let geom = ColumnGeometry::default();
        let grid = build_grid(&geom, n).unwrap();
        let op = OperatingPoint::new(5.85e-5, 8.846e-5, 2.0e-6, 0.3, 0.2).unwrap();
        (geom, grid, op, ConstitutiveParams::default())
    }

    #[test]
    fn grid_geometry_invariants() {
        let (geom, grid, _, _) = setup(100);
        assert_eq!(grid.z_bounds.len(), 101);
        assert_abs_diff_eq!(grid.z_bounds[1], geom.z_u);
        assert_abs_diff_eq!(grid.z_bounds[grid.n - 1], geom.z_e, epsilon = 1e-12);
        assert_abs_diff_eq!(grid.dz, geom.height() / 98.0);
        // feed cell contains z_F
        assert!(grid.z_bounds[grid.feed_cell] <= geom.z_f);
        assert!(geom.z_f < grid.z_bounds[grid.feed_cell + 1]);
        // gamma: zero outside, one inside
        assert!(!grid.interior(0));
        assert!(grid.interior(1));
        assert!(grid.interior(grid.n - 2));
        assert!(!grid.interior(grid.n - 1));
        assert!(!grid.interior(grid.n));
    }

    #[test]
    fn grid_minimum_size_and_coarse_layout() {
        let geom = ColumnGeometry::default();
        assert!(matches!(
            build_grid(&geom, 3),
            Err(Error::GridTooCoarse { .. })
        ));
        let grid = build_grid(&geom, 4).unwrap();
        assert_abs_diff_eq!(grid.dz, 0.5);
        // internal coordinates shifted so z_U maps to the first boundary
        assert_abs_diff_eq!(grid.z_bounds[1] - grid.z_bounds[0], grid.dz);
    }

    #[test]
    fn uniform_area_ratios() {
        let geom = ColumnGeometry {
            a_u: 7.0e-3,
            a_e: 7.0e-3,
            ..ColumnGeometry::default()
        };
        let grid = build_grid(&geom, 50).unwrap();
        assert_relative_eq!(grid.m1, 1.0);
        assert_relative_eq!(grid.m2, 2.0);
        assert_relative_eq!(grid.a_min, 7.0e-3);
    }

    #[test]
    fn feed_on_cell_boundary_assigned_above() {
        // H = 1, n = 6 -> dz = 0.25; choose z_F = 0.5 exactly on a boundary
        let geom = ColumnGeometry {
            z_f: 0.5,
            ..ColumnGeometry::default()
        };
        let grid = build_grid(&geom, 6).unwrap();
        assert_eq!(grid.z_bounds[grid.feed_cell], 0.5);
        // lower boundary of the feed cell still carries the zone-1 flow
        let op = OperatingPoint::new(2.0e-5, 8.0e-5, 1.0e-6, 0.3, 0.1).unwrap();
        assert_eq!(grid.boundary_flow(&op, grid.feed_cell), -op.q_u);
        assert_eq!(
            grid.boundary_flow(&op, grid.feed_cell + 1),
            -op.q_u + op.q_f
        );
    }

    #[test]
    fn cfl_scales_linearly_without_capillarity() {
        let (geom, _, _, p) = setup(100);
        let mut p0 = p;
        p0.d_cap = 0.0;
        let g1 = build_grid(&geom, 102).unwrap();
        let g2 = build_grid(&geom, 202).unwrap();
        let dt1 = cfl_dt(&g1, &p0, 1e-4).dt_max;
        let dt2 = cfl_dt(&g2, &p0, 1e-4).dt_max;
        assert_relative_eq!(dt1 / dt2, g1.dz / g2.dz, max_relative = 1e-12);
        // with capillarity, halving dz less-than-halves dt
        let dt1c = cfl_dt(&g1, &p, 1e-4).dt_max;
        let dt2c = cfl_dt(&g2, &p, 1e-4).dt_max;
        assert!(dt2c < 0.5 * dt1c);
    }

    #[test]
    fn cfl_closed_forms_match_sampled_sup_norms() {
        let (_, grid, op, p) = setup(100);
        let cfl = cfl_dt(&grid, &p, op.q_f + op.q_w);
        let samples = 1_000_000;
        let mut v_max: f64 = 0.0;
        let mut vp_max: f64 = 0.0;
        let mut d_max: f64 = 0.0;
        let mut vhsp_max: f64 = 0.0;
        for k in 0..=samples {
            let phi = k as f64 / samples as f64;
            v_max = v_max.max(p.aggregate_velocity_unchecked(phi));
            let vp = if phi <= p.phi_c {
                p.n_b * p.v_term * (1.0 - phi).powf(p.n_b - 1.0)
            } else {
                (2.0 * p.n_s + 1.0) * p.v_drain * (1.0 - phi).powf(2.0 * p.n_s)
            };
            vp_max = vp_max.max(vp);
            d_max = d_max.max(p.capillary_diffusion_unchecked(phi));
            vhsp_max = vhsp_max.max(p.n_rz * p.v_inf * (1.0 - phi).powf(p.n_rz - 1.0));
        }
        assert_relative_eq!(cfl.norm_v, v_max, max_relative = 1e-6);
        assert_relative_eq!(cfl.norm_vprime, vp_max, max_relative = 1e-6);
        // the diffusion peak sits right at phi_c+, approached from above
        assert_relative_eq!(cfl.norm_d, d_max, max_relative = 1e-4);
        assert_relative_eq!(cfl.norm_vhs_prime, vhsp_max, max_relative = 1e-6);
        // independent reassembly of the bound
        let beta1 = cfl.m1 * v_max + cfl.m2 * d_max / grid.dz;
        let beta2 =
            cfl.m1 * p.v_inf.max(vhsp_max) + cfl.m2 * (1.0 - p.phi_c) * d_max / grid.dz;
        let dt = grid.dz
            / (2.0 * (op.q_f + op.q_w) / cfl.a_min + cfl.m1 * vp_max + beta1.max(beta2));
        assert_relative_eq!(cfl.dt_max, dt, max_relative = 1e-4);
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let (_, grid, op, p) = setup(60);
        let mut op0 = op;
        op0.phi_f = 0.0;
        op0.psi_f = 0.0;
        let state = State::water(grid.n);
        let dt = cfl_dt(&grid, &p, op.q_f + op.q_w).dt_max;
        let flows = aggregate_boundary_flows(&state.phi, &grid, &op0, &p);
        assert!(flows.iter().all(|&f| f == 0.0));
        assert!(step_phi(&state, &grid, &op0, &p, dt).unwrap().iter().all(|&x| x == 0.0));
        assert!(step_psi(&state, &grid, &op0, &p, dt).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn uniform_interior_flux_reduces_to_drift() {
        // uniform area, no bulk flow: interior flux is c * v(c)
        let geom = ColumnGeometry {
            a_u: 7.0e-3,
            a_e: 7.0e-3,
            ..ColumnGeometry::default()
        };
        let grid = build_grid(&geom, 40).unwrap();
        let p = ConstitutiveParams::default();
        let op = OperatingPoint {
            q_u: 0.0,
            q_f: 0.0,
            q_w: 0.0,
            phi_f: 0.0,
            psi_f: 0.0,
        };
        let c = 0.37;
        let state = State {
            phi: vec![c; grid.n],
            psi: vec![0.0; grid.n],
            t: 0.0,
        };
        for i in 0..=grid.n {
            let flux = aggregate_flux(&state, &grid, &op, &p, i).unwrap();
            if grid.interior(i) {
                assert_relative_eq!(flux, c * p.aggregate_velocity_unchecked(c));
            } else {
                assert_eq!(flux, 0.0);
            }
        }
        assert!(aggregate_flux(&state, &grid, &op, &p, grid.n + 1).is_err());
    }

    #[test]
    fn riemann_flux_matches_hand_formula() {
        let (_, grid, op, p) = setup(40);
        // single interface: low state below, froth above
        let (lo, hi) = (0.4, 0.9);
        let mut phi = vec![lo; grid.n];
        phi[grid.n / 2..].fill(hi);
        let state = State {
            phi,
            psi: vec![0.0; grid.n],
            t: 0.0,
        };
        let i = grid.n / 2; // interior boundary with phi jump
        assert!(grid.interior(i));
        let q = grid.boundary_flow(&op, i) / grid.bound_area[i];
        let expected = lo * q.max(0.0)
            + hi * q.min(0.0)
            + lo * p.aggregate_velocity_unchecked(hi)
            - (p.capillary_diffusion_integral_unchecked(hi)
                - p.capillary_diffusion_integral_unchecked(lo))
                / grid.dz;
        let flux = aggregate_flux(&state, &grid, &op, &p, i).unwrap();
        assert_relative_eq!(flux, expected, max_relative = 1e-12);
    }

    #[test]
    fn full_vessel_is_preserved_without_wash_water() {
        let (_, grid, _, p) = setup(50);
        let op = OperatingPoint::new(2.0e-5, 8.0e-5, 0.0, 1.0, 0.0).unwrap();
        let state = State {
            phi: vec![1.0; grid.n],
            psi: vec![0.0; grid.n],
            t: 0.0,
        };
        let dt = cfl_dt(&grid, &p, op.q_f + op.q_w).dt_max;
        let new = step_phi(&state, &grid, &op, &p, dt).unwrap();
        for (j, &x) in new.iter().enumerate() {
            assert_abs_diff_eq!(x, 1.0, epsilon = 1e-14);
            let _ = j;
        }
        // with wash water the top interior cell dilutes but never exceeds 1
        let op_w = OperatingPoint::new(2.0e-5, 8.0e-5, 3.0e-6, 1.0, 0.0).unwrap();
        let dt = cfl_dt(&grid, &p, op_w.q_f + op_w.q_w).dt_max;
        let new = step_phi(&state, &grid, &op_w, &p, dt).unwrap();
        assert!(new.iter().all(|&x| x <= 1.0 + 1e-15));
        assert!(new[grid.n - 2] < 1.0);
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let (_, grid, op, p) = setup(50);
        let dt = cfl_dt(&grid, &p, op.q_f + op.q_w).dt_max;
        let state = State::water(grid.n);
        assert!(step_phi(&state, &grid, &op, &p, dt * 1.01).is_err());
        assert!(step_psi(&state, &grid, &op, &p, dt * 1.01).is_err());
        assert!(step_phi(&state, &grid, &op, &p, dt).is_ok());
    }

    #[test]
    fn clean_suspension_stays_clean() {
        // psi = 0 with psi_F = 0 is a fixed point whatever the aggregates do
        let (_, grid, op, p) = setup(50);
        let mut op = op;
        op.psi_f = 0.0;
        let phi: Vec<f64> = (0..grid.n).map(|j| (j as f64 / grid.n as f64) * 0.9).collect();
        let state = State {
            phi,
            psi: vec![0.0; grid.n],
            t: 0.0,
        };
        let dt = cfl_dt(&grid, &p, op.q_f + op.q_w).dt_max;
        let new = step_psi(&state, &grid, &op, &p, dt).unwrap();
        assert!(new.iter().all(|&x| x == 0.0));
        let out = outlets(&state, &grid);
        assert_eq!((out.psi_u, out.psi_e), (0.0, 0.0));
    }

    #[test]
    fn eo_flux_consistency_and_domain() {
        let p = ConstitutiveParams::default();
        for a in [0.02, 0.1, 0.3, 0.55] {
            let g = eo_flux(a, a, 0.2, 0.2, &p).unwrap();
            let psi_max: f64 = 0.8;
            let expect = if a >= psi_max {
                0.0
            } else {
                a * p.settling_velocity_unchecked(a / psi_max)
            };
            assert_relative_eq!(g, expect, max_relative = 1e-14);
        }
        assert!(eo_flux(1.2, 0.0, 0.0, 0.0, &p).is_err());
    }

    #[test]
    fn eo_flux_vanishes_on_saturated_suspension() {
        // G(1 - phi_below, 1 - phi_above) = 0 exactly
        let p = ConstitutiveParams::default();
        for (pl, pr) in [(0.0, 0.0), (0.2, 0.6), (0.75, 0.3), (0.95, 0.99), (1.0, 0.4)] {
            let g = eo_flux(1.0 - pl, 1.0 - pr, pl, pr, &p).unwrap();
            assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn saturated_state_tracks_complement_of_phi() {
        // psi = 1 - phi propagates to psi' = 1 - phi' except for the wash
        // water dilution of the top interior cell
        let (_, grid, op, p) = setup(60);
        let mut rng = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut op = op;
        op.phi_f = 0.4;
        op.psi_f = 0.6;
        let dt = cfl_dt(&grid, &p, op.q_f + op.q_w).dt_max;
        for _ in 0..20 {
            let phi: Vec<f64> = (0..grid.n).map(|_| 0.9 * next()).collect();
            let psi: Vec<f64> = phi.iter().map(|&x| 1.0 - x).collect();
            let state = State { phi, psi, t: 0.0 };
            let new_phi = step_phi(&state, &grid, &op, &p, dt).unwrap();
            let new_psi = step_psi(&state, &grid, &op, &p, dt).unwrap();
            for j in 0..grid.n {
                let expected = if j == grid.n - 2 {
                    // boundary bulk difference leaves -Q_W here
                    1.0 - new_phi[j] - dt / grid.dz * op.q_w / grid.cell_area[j]
                } else {
                    1.0 - new_phi[j]
                };
                assert_abs_diff_eq!(new_psi[j], expected, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn mass_balance_residual_is_tiny() {
        let (_, grid, op, p) = setup(80);
        let mut state = State::water(grid.n);
        let dt = cfl_dt(&grid, &p, op.q_f + op.q_w).dt_max;
        for _ in 0..200 {
            let flows_phi = aggregate_boundary_flows(&state.phi, &grid, &op, &p);
            let flows_psi = solids_boundary_flows(&state.psi, &state.phi, &grid, &op, &p);
            let new_phi = step_phi(&state, &grid, &op, &p, dt).unwrap();
            let new_psi = step_psi(&state, &grid, &op, &p, dt).unwrap();
            let r_phi = mass_balance_residual(
                &state.phi,
                &new_phi,
                &flows_phi,
                op.q_f * op.phi_f,
                &grid,
                dt,
            );
            let r_psi = mass_balance_residual(
                &state.psi,
                &new_psi,
                &flows_psi,
                op.q_f * op.psi_f,
                &grid,
                dt,
            );
            assert!(r_phi < 1e-13, "phi residual {r_phi}");
            assert!(r_psi < 1e-13, "psi residual {r_psi}");
            state.phi = new_phi;
            state.psi = new_psi;
            state.t += dt;
        }
        // by now the column carries material and outlets respond
        let out = outlets(&state, &grid);
        assert!(out.psi_u > 0.0);
        assert!(out.phi_e >= 0.0);
    }

    #[test]
    fn first_order_consistency_on_smooth_data() {
        // uniform area, feed far below the test window; compare the one-step
        // discrete time derivative with the exact PDE right-hand side
        let geom = ColumnGeometry {
            z_f: 0.05,
            a_u: 7.0e-3,
            a_e: 7.0e-3,
            ..ColumnGeometry::default()
        };
        let p = ConstitutiveParams::default();
        let op = OperatingPoint::new(1.0e-5, 3.0e-5, 1.0e-6, 0.0, 0.0).unwrap();
        let err = |n: usize| -> f64 {
            let grid = build_grid(&geom, n).unwrap();
            let profile = |z: f64| 0.3 + 0.1 * (2.0 * std::f64::consts::PI * z).sin();
            let state = State {
                phi: (0..grid.n).map(|j| profile(grid.cell_center(j))).collect(),
                psi: vec![0.0; grid.n],
                t: 0.0,
            };
            let dt = 1e-4;
            let new = step_phi(&state, &grid, &op, &p, dt).unwrap();
            let q2 = op.velocity_zone2(&geom);
            let mut worst: f64 = 0.0;
            for (j, &new_j) in new.iter().enumerate() {
                let z = grid.cell_center(j);
                if !(0.3..=0.8).contains(&z) {
                    continue;
                }
                let phi = profile(z);
                let dphi_dz =
                    0.2 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * z).cos();
                let exact = -(q2 + p.batch_flux_deriv_unchecked(phi)) * dphi_dz;
                let discrete = (new_j - state.phi[j]) / dt;
                worst = worst.max((discrete - exact).abs());
            }
            worst
        };
        let e1 = err(202);
        let e2 = err(402);
        assert!(
            e2 < 0.75 * e1,
            "no first-order decay: err({}) = {e1}, err({}) = {e2}",
            202,
            402
        );
    }
}
