//! Cross-checks of the steady-state construction against independent
//! numerical routes and across the operating plane.

use approx::assert_abs_diff_eq;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use flotcol::{
    check_conditions, desired_steady_state, effluent_fraction, froth_interface,
    solve_feed_jump, solve_solids_jump, ColumnGeometry, ConstitutiveParams, OperatingPoint,
};

fn defaults() -> (ColumnGeometry, ConstitutiveParams) {
    (ColumnGeometry::default(), ConstitutiveParams::default())
}

/// Independent oracle: integrate dz/dphi = d(phi) / (j_2(phi) - s_F)
/// backwards from (phi_E, z_E) with fixed-step RK4, using the high-branch
/// diffusion formula directly.
fn z_fr_by_backward_rk4(
    op: &OperatingPoint,
    p: &ConstitutiveParams,
    geom: &ColumnGeometry,
    steps: usize,
) -> f64 {
    let phi_e = effluent_fraction(op).unwrap();
    let q2 = op.velocity_zone2(geom);
    let s_f = op.feed_mass_flux(geom);
    let g = |phi: f64| {
        let d = p.v_drain * p.d_cap * phi * (1.0 - phi).powf(p.n_s);
        let j2 = q2 * phi + p.v_drain * phi * (1.0 - phi).powf(2.0 * p.n_s + 1.0);
        d / (j2 - s_f)
    };
    let h = (phi_e - p.phi_c) / steps as f64;
    let mut z = geom.z_e;
    let mut phi = phi_e;
    for _ in 0..steps {
        // RK4 for a right-hand side independent of z collapses to Simpson
        let k1 = g(phi);
        let k_mid = g(phi - 0.5 * h);
        let k4 = g(phi - h);
        z -= h / 6.0 * (k1 + 4.0 * k_mid + k4);
        phi -= h;
    }
    z
}

#[test]
fn quadrature_matches_backward_ode_on_random_feasible_points() {
    let (geom, p) = defaults();
    let mut rng = StdRng::seed_from_u64(7);
    let mut found = 0;
    let mut attempts = 0;
    while found < 50 && attempts < 20_000 {
        attempts += 1;
        let op = OperatingPoint {
            q_u: rng.random_range(5.7e-5..6.03e-5),
            q_f: rng.random_range(8.9e-5..9.05e-5),
            q_w: 2.0e-6,
            phi_f: rng.random_range(0.28..0.32),
            psi_f: 0.2,
        };
        if op.validate().is_err() {
            continue;
        }
        let report = check_conditions(&op, &p, &geom);
        if !report.feasible {
            continue;
        }
        found += 1;
        let z_quad = froth_interface(&op, &p, &geom).unwrap().z.unwrap();
        let z_ode = z_fr_by_backward_rk4(&op, &p, &geom, 40_000);
        assert_abs_diff_eq!(z_quad, z_ode, epsilon = 1e-4);
        assert_abs_diff_eq!(z_quad, report.z_fr.unwrap(), epsilon = 1e-12);
    }
    assert_eq!(found, 50, "only {found} feasible samples in {attempts} draws");
}

#[test]
fn reference_profile_family_reproduced() {
    // four underflow settings and their reference effluent fractions
    let (geom, p) = defaults();
    let cases = [
        (5.9972e-5, 0.8443),
        (6.0083e-5, 0.8472),
        (6.0155e-5, 0.8491),
        (6.0171e-5, 0.8495),
    ];
    let mut prev_z_fr = f64::INFINITY;
    for (q_u, phi_e_ref) in cases {
        let op = OperatingPoint::new(q_u, 8.9927e-5, 2.0e-6, 0.3, 0.2).unwrap();
        let prof = desired_steady_state(&op, &p, &geom, 3200).unwrap();
        assert_abs_diff_eq!(prof.phi_e, phi_e_ref, epsilon = 5e-4);
        let z_fr = prof.z_fr.unwrap();
        assert!(
            z_fr < prev_z_fr,
            "froth deepens as underflow increases"
        );
        prev_z_fr = z_fr;
        // solids plateau matches the jump construction
        let (varphi_1, varphi_u) = solve_solids_jump(&op, &geom, &p).unwrap();
        let below_feed = prof
            .grid
            .iter()
            .zip(&prof.psi)
            .filter(|(&z, _)| z < geom.z_f)
            .map(|(_, &psi)| psi);
        for psi in below_feed {
            assert_abs_diff_eq!(psi, varphi_1, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(prof.varphi_u, varphi_u);
        // aggregate plateau sits below the froth chain:
        // phi_bar2 < local max <= inflection < phi_c
        let phi_bar2 = solve_feed_jump(&op, &geom, &p).unwrap();
        let cp = flotcol::critical_points(
            op.velocity_zone2(&geom),
            &p,
            flotcol::FluxKind::Aggregate,
        );
        assert!(phi_bar2 < cp.local_max);
        assert!(cp.local_max <= cp.inflection);
        assert!(cp.inflection < p.phi_c);
    }
}

#[test]
fn margins_vary_continuously_along_an_underflow_sweep() {
    let (geom, p) = defaults();
    let n = 400;
    // spans the wedge's left boundary (~5.547e-5) and the froth collapse
    let q_lo = 5.4e-5;
    let q_hi = 6.2e-5;
    let mut prev: Option<flotcol::FeasibilityReport> = None;
    let mut froth1_flips = 0;
    let mut fib_flips = 0;
    for k in 0..=n {
        let q_u = q_lo + (q_hi - q_lo) * k as f64 / n as f64;
        let op = OperatingPoint {
            q_u,
            q_f: 8.9927e-5,
            q_w: 2.0e-6,
            phi_f: 0.3,
            psi_f: 0.2,
        };
        let r = check_conditions(&op, &p, &geom);
        if let Some(ref prev) = prev {
            // scalar margins move by amounts proportional to the sweep step
            // (2e-8 m3/s here, amplified by the 1/A and derivative scales)
            assert!((r.froth1_margin - prev.froth1_margin).abs() < 5e-8);
            assert!((r.fias_margin - prev.fias_margin).abs() < 5e-8);
            assert!((r.fib_margin - prev.fib_margin).abs() < 2e-3);
            assert!((r.froth3_margin - prev.froth3_margin).abs() < 5e-6);
            if (r.froth1_margin > 0.0) != (prev.froth1_margin > 0.0) {
                froth1_flips += 1;
            }
            if (r.fib_margin >= 0.0) != (prev.fib_margin >= 0.0) {
                fib_flips += 1;
            }
        }
        prev = Some(r);
    }
    // the sweep crosses the flow wedge boundary exactly once from below
    assert_eq!(froth1_flips, 1);
    assert!(fib_flips <= 1);
}

#[test]
fn froth1_sign_change_brackets_the_analytic_wedge_line() {
    let (geom, p) = defaults();
    let q_f = 8.9927e-5;
    let q_w = 2.0e-6;
    let phi_f = 0.3;
    // analytic left boundary: Q_U = Q_W + Q_F (1 - phi_F / phi_c)
    let q_star = q_w + q_f * (1.0 - phi_f / p.phi_c);
    let margin = |q_u: f64| {
        let op = OperatingPoint {
            q_u,
            q_f,
            q_w,
            phi_f,
            psi_f: 0.2,
        };
        check_conditions(&op, &p, &geom).froth1_margin
    };
    let below = q_star - 1e-9;
    let above = q_star + 1e-9;
    assert!(margin(below) < 0.0);
    assert!(margin(above) > 0.0);
    let _ = geom;
}
