//! Constitutive functions of the two-phase closures.
//!
//! Aggregates (particle-loaded bubbles) rise with a power-law hindered
//! velocity below the critical packing fraction `phi_c`; above it the froth
//! drains and a degenerate capillary diffusion switches on. Solids settle
//! within the suspension with a Richardson-Zaki hindered velocity. All
//! functions here are closed forms; root finds use bracketing bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect;

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

fn require_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

/// Material constants of the fluid, bubbles and channel-radius fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Fluid density (kg/m3).
    pub rho_f: f64,
    /// Fluid viscosity (Pa s).
    pub mu: f64,
    /// Bubble radius (m).
    pub r_b: f64,
    /// Plateau-border drag coefficient (-).
    #[serde(rename = "C_PB")]
    pub c_pb: f64,
    /// Surface tension (N/m).
    pub gamma_w: f64,
    /// Gravity (m/s2).
    pub g: f64,
    /// Channel-radius fit coefficient (-).
    pub m_fit: f64,
    /// Channel-radius fit exponent (-), in (0, 1).
    #[serde(rename = "n_S")]
    pub n_s: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("rho_f", self.rho_f)?;
        require_positive("mu", self.mu)?;
        require_positive("r_b", self.r_b)?;
        require_positive("C_PB", self.c_pb)?;
        require_positive("gamma_w", self.gamma_w)?;
        require_positive("g", self.g)?;
        require_positive("m_fit", self.m_fit)?;
        require_positive("n_S", self.n_s)?;
        if self.n_s >= 1.0 {
            return Err(Error::Domain {
                name: "n_S",
                value: self.n_s,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(())
    }

    /// Capillarity-to-gravity length d_cap = n_S gamma_w / (m r_b rho_f g).
    pub fn capillary_length(&self) -> f64 {
        self.n_s * self.gamma_w / (self.m_fit * self.r_b * self.rho_f * self.g)
    }

    /// Drainage velocity from the Plateau-border force balance,
    /// m^2 C^2 r_b^2 rho_f g / (3 C_PB mu) with C^2 = sqrt(3) - pi/2.
    ///
    /// Diagnostic only: the model enforces continuity of the batch flux at
    /// `phi_c` instead, see [`ConstitutiveParams::derive`].
    pub fn drainage_velocity_force_balance(&self) -> f64 {
        let c_sq = 3f64.sqrt() - std::f64::consts::FRAC_PI_2;
        self.m_fit * self.m_fit * c_sq * self.r_b * self.r_b * self.rho_f * self.g
            / (3.0 * self.c_pb * self.mu)
    }
}

impl Default for PhysicalParams {
    /// Lab-scale air/water column defaults.
    fn default() -> Self {
        PhysicalParams {
            rho_f: 1.0e3,
            mu: 1.0e-3,
            r_b: 4.13e-4,
            c_pb: 50.0,
            gamma_w: 3.5e-2,
            g: 9.81,
            m_fit: 1.28,
            n_s: 0.46,
        }
    }
}

/// All constants entering the flux and diffusion closures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstitutiveParams {
    /// Terminal rise velocity of a single bubble (m/s).
    pub v_term: f64,
    /// Bubble hindrance exponent (-), at least 1 + 2 n_S.
    pub n_b: f64,
    /// Drainage exponent (-), in (0, 1).
    #[serde(rename = "n_S")]
    pub n_s: f64,
    /// Critical aggregate fraction at which froth forms (-).
    pub phi_c: f64,
    /// Drainage velocity (m/s); tied to `v_term` by flux continuity at `phi_c`.
    pub v_drain: f64,
    /// Capillarity-to-gravity length (m).
    pub d_cap: f64,
    /// Stokes settling velocity of a single solid particle (m/s).
    pub v_inf: f64,
    /// Richardson-Zaki exponent (-), greater than 1.
    #[serde(rename = "n_RZ")]
    pub n_rz: f64,
}

impl Default for ConstitutiveParams {
    fn default() -> Self {
        ConstitutiveParams::derive(&PhysicalParams::default(), 2.7e-2, 2.5, 0.74, 5.0e-3, 1.5)
            .expect("default parameter set is valid")
    }
}

impl ConstitutiveParams {
    /// Derive the closure constants from material data.
    ///
    /// `d_cap` comes from the Plateau-border force balance; `v_drain` is fixed
    /// by continuity of the batch flux across `phi_c`,
    /// v_drain = v_term (1 - phi_c)^(n_b - 1 - 2 n_S).
    pub fn derive(
        phys: &PhysicalParams,
        v_term: f64,
        n_b: f64,
        phi_c: f64,
        v_inf: f64,
        n_rz: f64,
    ) -> Result<Self> {
        phys.validate()?;
        require_positive("v_term", v_term)?;
        require_positive("v_inf", v_inf)?;
        require_positive("phi_c", phi_c)?;
        if phi_c >= 1.0 {
            return Err(Error::Domain {
                name: "phi_c",
                value: phi_c,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if n_rz <= 1.0 {
            return Err(Error::NonPositiveParameter {
                name: "n_RZ - 1",
                value: n_rz - 1.0,
            });
        }
        let min_nb = 1.0 + 2.0 * phys.n_s;
        if n_b < min_nb {
            return Err(Error::HindranceExponentTooSmall { n_b, min: min_nb });
        }
        let v_drain = v_term * (1.0 - phi_c).powf(n_b - 1.0 - 2.0 * phys.n_s);
        Ok(ConstitutiveParams {
            v_term,
            n_b,
            n_s: phys.n_s,
            phi_c,
            v_drain,
            d_cap: phys.capillary_length(),
            v_inf,
            n_rz,
        })
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("v_term", self.v_term)?;
        require_positive("v_drain", self.v_drain)?;
        require_positive("d_cap", self.d_cap)?;
        require_positive("v_inf", self.v_inf)?;
        require_positive("phi_c", self.phi_c)?;
        require_positive("n_S", self.n_s)?;
        if self.phi_c >= 1.0 || self.n_s >= 1.0 {
            return Err(Error::Domain {
                name: if self.phi_c >= 1.0 { "phi_c" } else { "n_S" },
                value: if self.phi_c >= 1.0 {
                    self.phi_c
                } else {
                    self.n_s
                },
                lo: 0.0,
                hi: 1.0,
            });
        }
        if self.n_rz <= 1.0 {
            return Err(Error::NonPositiveParameter {
                name: "n_RZ - 1",
                value: self.n_rz - 1.0,
            });
        }
        let min_nb = 1.0 + 2.0 * self.n_s;
        if self.n_b < min_nb {
            return Err(Error::HindranceExponentTooSmall {
                n_b: self.n_b,
                min: min_nb,
            });
        }
        // continuity of the batch flux across phi_c
        let compat = self.v_term * (1.0 - self.phi_c).powf(self.n_b - 1.0 - 2.0 * self.n_s);
        if (self.v_drain - compat).abs() > 1e-12 * compat.abs() {
            return Err(Error::Domain {
                name: "v_drain (flux continuity at phi_c)",
                value: self.v_drain,
                lo: compat,
                hi: compat,
            });
        }
        Ok(())
    }

    // ---- aggregate phase -------------------------------------------------

    /// Swarm velocity of the aggregates; hindered rise below `phi_c`,
    /// drainage law above.
    pub fn aggregate_velocity(&self, phi: f64) -> Result<f64> {
        require_unit("phi", phi)?;
        Ok(self.aggregate_velocity_unchecked(phi))
    }

    #[inline]
    pub(crate) fn aggregate_velocity_unchecked(&self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, 1.0);
        if phi <= self.phi_c {
            self.v_term * (1.0 - phi).powf(self.n_b)
        } else {
            self.v_drain * (1.0 - phi).powf(2.0 * self.n_s + 1.0)
        }
    }

    /// Batch drift flux phi * v(phi).
    pub fn batch_flux(&self, phi: f64) -> Result<f64> {
        require_unit("phi", phi)?;
        Ok(self.batch_flux_unchecked(phi))
    }

    #[inline]
    pub(crate) fn batch_flux_unchecked(&self, phi: f64) -> f64 {
        phi.clamp(0.0, 1.0) * self.aggregate_velocity_unchecked(phi)
    }

    /// Derivative of the batch flux; `phi_c` uses the low branch.
    pub fn batch_flux_deriv(&self, phi: f64) -> Result<f64> {
        require_unit("phi", phi)?;
        Ok(self.batch_flux_deriv_unchecked(phi))
    }

    #[inline]
    pub(crate) fn batch_flux_deriv_unchecked(&self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, 1.0);
        if phi <= self.phi_c {
            self.batch_flux_deriv_low(phi)
        } else {
            self.batch_flux_deriv_high(phi)
        }
    }

    /// Low-branch flux derivative formula, valid for phi <= phi_c; at `phi_c`
    /// it is the one-sided value from below.
    pub fn batch_flux_deriv_low(&self, phi: f64) -> f64 {
        self.v_term * (1.0 - phi).powf(self.n_b - 1.0) * (1.0 - (1.0 + self.n_b) * phi)
    }

    /// High-branch flux derivative formula; at `phi_c` it is the one-sided
    /// value from above.
    pub fn batch_flux_deriv_high(&self, phi: f64) -> f64 {
        self.v_drain
            * (1.0 - phi).powf(2.0 * self.n_s)
            * (1.0 - (2.0 + 2.0 * self.n_s) * phi)
    }

    /// Capillary diffusion density d(phi): zero up to `phi_c`, then
    /// v_drain d_cap phi (1 - phi)^n_S.
    pub fn capillary_diffusion(&self, phi: f64) -> Result<f64> {
        require_unit("phi", phi)?;
        Ok(self.capillary_diffusion_unchecked(phi))
    }

    #[inline]
    pub(crate) fn capillary_diffusion_unchecked(&self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, 1.0);
        if phi <= self.phi_c {
            0.0
        } else {
            self.v_drain * self.d_cap * phi * (1.0 - phi).powf(self.n_s)
        }
    }

    fn omega(&self, phi: f64) -> f64 {
        (1.0 - phi).powf(self.n_s + 1.0) * ((self.n_s + 1.0) * phi + 1.0)
    }

    /// Integrated diffusion D(phi) = int_0^phi d(s) ds, evaluated in closed
    /// form; strongly degenerate (identically zero) on [0, phi_c].
    pub fn capillary_diffusion_integral(&self, phi: f64) -> Result<f64> {
        require_unit("phi", phi)?;
        Ok(self.capillary_diffusion_integral_unchecked(phi))
    }

    #[inline]
    pub(crate) fn capillary_diffusion_integral_unchecked(&self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, 1.0);
        if phi <= self.phi_c {
            0.0
        } else {
            self.v_drain * self.d_cap * (self.omega(self.phi_c) - self.omega(phi))
                / ((self.n_s + 1.0) * (self.n_s + 2.0))
        }
    }

    // ---- solids phase ----------------------------------------------------

    /// Hindered settling velocity v_inf (1 - varphi)^n_RZ.
    pub fn settling_velocity(&self, varphi: f64) -> Result<f64> {
        require_unit("varphi", varphi)?;
        Ok(self.settling_velocity_unchecked(varphi))
    }

    #[inline]
    pub(crate) fn settling_velocity_unchecked(&self, varphi: f64) -> f64 {
        let varphi = varphi.clamp(0.0, 1.0);
        self.v_inf * (1.0 - varphi).powf(self.n_rz)
    }

    /// Batch settling flux varphi * v_hs(varphi), positive downwards.
    pub fn settling_flux(&self, varphi: f64) -> Result<f64> {
        require_unit("varphi", varphi)?;
        Ok(self.settling_flux_unchecked(varphi))
    }

    #[inline]
    pub(crate) fn settling_flux_unchecked(&self, varphi: f64) -> f64 {
        varphi.clamp(0.0, 1.0) * self.settling_velocity_unchecked(varphi)
    }

    #[inline]
    pub(crate) fn settling_flux_deriv_unchecked(&self, varphi: f64) -> f64 {
        let x = varphi.clamp(0.0, 1.0);
        self.v_inf * (1.0 - x).powf(self.n_rz - 1.0) * (1.0 - (1.0 + self.n_rz) * x)
    }

    // ---- sup norms used by the CFL bound ----------------------------------

    /// max |v(phi)| on [0, 1]; attained at phi = 0.
    pub fn sup_aggregate_velocity(&self) -> f64 {
        self.v_term
    }

    /// max |v'(phi)| on [0, 1]: branch-wise one-sided suprema.
    pub fn sup_aggregate_velocity_deriv(&self) -> f64 {
        let low = self.n_b * self.v_term;
        let high =
            (2.0 * self.n_s + 1.0) * self.v_drain * (1.0 - self.phi_c).powf(2.0 * self.n_s);
        low.max(high)
    }

    /// max d(phi) on [0, 1]. The maximizer of phi (1 - phi)^n_S is
    /// 1/(1 + n_S); when it falls below `phi_c` the supremum is the limit
    /// from above at `phi_c`.
    pub fn sup_capillary_diffusion(&self) -> f64 {
        let peak = (1.0 / (1.0 + self.n_s)).max(self.phi_c);
        self.v_drain * self.d_cap * peak * (1.0 - peak).powf(self.n_s)
    }

    /// max |v_hs'(varphi)| on [0, 1]; attained at varphi = 0 for n_RZ > 1.
    pub fn sup_settling_velocity_deriv(&self) -> f64 {
        self.n_rz * self.v_inf
    }
}

/// Which batch flux family the critical points refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxKind {
    /// Rising aggregates: flux j(phi; q) = j_b(phi) + q phi.
    Aggregate,
    /// Settling solids in downward orientation: f(x; q) = f_b(x) + q x.
    Solids,
}

/// Critical points of a zone flux x -> flux_b(x) + q x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoints {
    /// Inflection point of the batch flux (independent of q).
    pub inflection: f64,
    /// Location of the local maximum on [0, inflection]; 0 when the flux is
    /// decreasing, `inflection` when it is increasing everywhere.
    pub local_max: f64,
    /// Positive zero of the flux; present only for q between `q_decreasing`
    /// and 0.
    pub flux_zero: Option<f64>,
    /// Location of the local minimum above the inflection; present for
    /// q >= 0, pinned to `inflection` once q >= `q_increasing`.
    pub local_min: Option<f64>,
    /// The low value on [0, inflection] whose flux matches the local minimum.
    pub local_min_match: Option<f64>,
    /// Bulk velocity below which the zone flux is monotonically decreasing.
    pub q_decreasing: f64,
    /// Bulk velocity above which the zone flux is monotonically increasing.
    pub q_increasing: f64,
}

/// Critical points of the zone flux with linear bulk term `q`.
///
/// For `FluxKind::Solids` the construction applies to the settling flux in
/// its own downward-positive orientation, so the caller passes the linear
/// coefficient in that orientation (e.g. +Q_U/A_U for zone 1).
pub fn critical_points(q: f64, p: &ConstitutiveParams, kind: FluxKind) -> CriticalPoints {
    type Curve<'a> = Box<dyn Fn(f64) -> f64 + 'a>;
    let (flux, deriv, velocity, inflection): (Curve, Curve, Curve, f64) = match kind {
        FluxKind::Aggregate => (
            Box::new(|x| p.batch_flux_unchecked(x)),
            Box::new(|x| p.batch_flux_deriv_unchecked(x)),
            Box::new(|x| p.aggregate_velocity_unchecked(x)),
            2.0 / (p.n_b + 1.0),
        ),
        FluxKind::Solids => (
            Box::new(|x| p.settling_flux_unchecked(x)),
            Box::new(|x| p.settling_flux_deriv_unchecked(x)),
            Box::new(|x| p.settling_velocity_unchecked(x)),
            2.0 / (p.n_rz + 1.0),
        ),
    };

    let q_decreasing = -deriv(0.0);
    let q_increasing = -deriv(inflection);

    let local_max = if q <= q_decreasing {
        0.0
    } else if q < q_increasing {
        // deriv is strictly decreasing on (0, inflection)
        bisect(|x| -(deriv(x) + q), 0.0, inflection)
    } else {
        inflection
    };

    let flux_zero = if q > q_decreasing && q < 0.0 {
        // velocity decreases from v(0) to 0, so v(x) + q changes sign once
        Some(bisect(|x| -(velocity(x) + q), 0.0, 1.0))
    } else {
        None
    };

    let local_min = if q < 0.0 {
        None
    } else if q < q_increasing {
        // deriv increases on (inflection, 1) (with an upward jump at phi_c
        // for the aggregate flux); bisection lands on the kink if the target
        // falls inside the jump
        Some(bisect(|x| deriv(x) + q, inflection, 1.0))
    } else {
        Some(inflection)
    };

    let local_min_match = local_min.map(|xm| {
        let target = flux(xm) + q * xm;
        bisect(|x| flux(x) + q * x - target, 0.0, inflection)
    });

    CriticalPoints {
        inflection,
        local_max,
        flux_zero,
        local_min,
        local_min_match,
        q_decreasing,
        q_increasing,
    }
}

/// Inputs for deriving [`ConstitutiveParams`] from material data: the
/// physical constants plus the velocity-law exponents and scales.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivationInputs {
    #[serde(flatten)]
    pub physical: PhysicalParams,
    pub v_term: f64,
    pub n_b: f64,
    pub phi_c: f64,
    pub v_inf: f64,
    #[serde(rename = "n_RZ")]
    pub n_rz: f64,
}

impl DerivationInputs {
    pub fn derive(&self) -> Result<ConstitutiveParams> {
        ConstitutiveParams::derive(
            &self.physical,
            self.v_term,
            self.n_b,
            self.phi_c,
            self.v_inf,
            self.n_rz,
        )
    }
}
