//! Vessel geometry, zone structure, bulk velocities and zone flux functions.
//!
//! The column occupies [z_U, z_E] with feed at z_F; the real line splits into
//! four zones (underflow, below feed, above feed, effluent), each carrying
//! its own bulk velocity and convective flux. Zone membership uses half-open
//! intervals closed at the lower boundary.

use serde::{Deserialize, Serialize};

use crate::constitutive::ConstitutiveParams;
use crate::error::{Error, Result};

/// Guard below which 1 - phi is treated as zero in suspension ratios.
pub(crate) const ONE_MINUS_PHI_GUARD: f64 = 1e-12;

/// Vessel dimensions: outlet heights and cross-sectional areas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnGeometry {
    /// Underflow level (m).
    #[serde(rename = "z_U")]
    pub z_u: f64,
    /// Feed level (m).
    #[serde(rename = "z_F")]
    pub z_f: f64,
    /// Effluent level (m); wash water is sprinkled here.
    #[serde(rename = "z_E")]
    pub z_e: f64,
    /// Cross-sectional area below the feed (m2).
    #[serde(rename = "A_U")]
    pub a_u: f64,
    /// Cross-sectional area at and above the feed (m2).
    #[serde(rename = "A_E")]
    pub a_e: f64,
}

impl ColumnGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_u < self.z_f && self.z_f < self.z_e) {
            return Err(Error::Domain {
                name: "z_F",
                value: self.z_f,
                lo: self.z_u,
                hi: self.z_e,
            });
        }
        if self.a_u <= 0.0 {
            return Err(Error::NonPositiveParameter {
                name: "A_U",
                value: self.a_u,
            });
        }
        if self.a_e <= 0.0 {
            return Err(Error::NonPositiveParameter {
                name: "A_E",
                value: self.a_e,
            });
        }
        Ok(())
    }

    /// Column height H = z_E - z_U.
    pub fn height(&self) -> f64 {
        self.z_e - self.z_u
    }

    /// Cross-sectional area at height `z` (two-piece, jump at the feed).
    pub fn area(&self, z: f64) -> f64 {
        if z >= self.z_f {
            self.a_e
        } else {
            self.a_u
        }
    }
}

impl Default for ColumnGeometry {
    /// Lab-scale column defaults: 1 m tall, feed at 0.33 m.
    fn default() -> Self {
        ColumnGeometry {
            z_u: 0.0,
            z_f: 0.33,
            z_e: 1.0,
            a_u: 8.365e-3,
            a_e: 7.225e-3,
        }
    }
}

/// Volumetric flows and feed compositions at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Underflow draw (m3/s), non-negative.
    #[serde(rename = "Q_U")]
    pub q_u: f64,
    /// Feed flow (m3/s), positive.
    #[serde(rename = "Q_F")]
    pub q_f: f64,
    /// Wash water flow (m3/s), non-negative.
    #[serde(rename = "Q_W")]
    pub q_w: f64,
    /// Aggregate volume fraction in the feed.
    #[serde(rename = "phi_F")]
    pub phi_f: f64,
    /// Solids volume fraction in the feed.
    #[serde(rename = "psi_F")]
    pub psi_f: f64,
}

impl OperatingPoint {
    pub fn new(q_u: f64, q_f: f64, q_w: f64, phi_f: f64, psi_f: f64) -> Result<Self> {
        let op = OperatingPoint {
            q_u,
            q_f,
            q_w,
            phi_f,
            psi_f,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_u < 0.0 {
            return Err(Error::NonPositiveParameter {
                name: "Q_U",
                value: self.q_u,
            });
        }
        if self.q_f <= 0.0 {
            return Err(Error::NonPositiveParameter {
                name: "Q_F",
                value: self.q_f,
            });
        }
        if self.q_w < 0.0 {
            return Err(Error::NonPositiveParameter {
                name: "Q_W",
                value: self.q_w,
            });
        }
        let q_e = self.effluent_flow();
        if q_e <= 0.0 {
            return Err(Error::NonPositiveEffluentFlow { q_e });
        }
        if !(0.0..=1.0).contains(&self.phi_f) {
            return Err(Error::Domain {
                name: "phi_F",
                value: self.phi_f,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if !(0.0..=1.0).contains(&self.psi_f) || self.phi_f + self.psi_f > 1.0 {
            return Err(Error::Domain {
                name: "psi_F",
                value: self.psi_f,
                lo: 0.0,
                hi: 1.0 - self.phi_f,
            });
        }
        Ok(())
    }

    /// Q_E = Q_W + Q_F - Q_U, assumed positive for a full vessel.
    pub fn effluent_flow(&self) -> f64 {
        -self.q_u + self.q_f + self.q_w
    }

    /// Bulk velocity below the feed, q_1 = -Q_U / A_U.
    pub fn velocity_zone1(&self, geom: &ColumnGeometry) -> f64 {
        -self.q_u / geom.a_u
    }

    /// Bulk velocity between feed and effluent, q_2 = (-Q_U + Q_F) / A_E.
    pub fn velocity_zone2(&self, geom: &ColumnGeometry) -> f64 {
        (-self.q_u + self.q_f) / geom.a_e
    }

    /// Bulk velocity above the effluent, q_E = (-Q_U + Q_F + Q_W) / A_E.
    pub fn velocity_effluent(&self, geom: &ColumnGeometry) -> f64 {
        (-self.q_u + self.q_f + self.q_w) / geom.a_e
    }

    /// Feed mass flux per unit area, s_F = Q_F phi_F / A_E.
    pub fn feed_mass_flux(&self, geom: &ColumnGeometry) -> f64 {
        self.q_f * self.phi_f / geom.a_e
    }
}

/// The four axial regions of the one-dimensional model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    Underflow,
    BelowFeed,
    AboveFeed,
    Effluent,
}

/// Zone containing height `z`; intervals are closed at the lower boundary.
pub fn zone_of(z: f64, geom: &ColumnGeometry) -> Zone {
    if z >= geom.z_e {
        Zone::Effluent
    } else if z >= geom.z_f {
        Zone::AboveFeed
    } else if z >= geom.z_u {
        Zone::BelowFeed
    } else {
        Zone::Underflow
    }
}

/// Bulk (volume-average) velocity of the mixture at height `z`.
pub fn bulk_velocity(z: f64, geom: &ColumnGeometry, op: &OperatingPoint) -> f64 {
    if z >= geom.z_e {
        op.velocity_effluent(geom)
    } else if z >= geom.z_f {
        op.velocity_zone2(geom)
    } else {
        op.velocity_zone1(geom)
    }
}

fn zone_bulk(zone: Zone, geom: &ColumnGeometry, op: &OperatingPoint) -> f64 {
    match zone {
        Zone::Effluent => op.velocity_effluent(geom),
        Zone::AboveFeed => op.velocity_zone2(geom),
        Zone::BelowFeed | Zone::Underflow => op.velocity_zone1(geom),
    }
}

/// Convective aggregate flux in `zone` (positive upwards): the bulk carries
/// everything in the outlet zones, drift is added inside the column.
pub fn aggregate_zone_flux(
    phi: f64,
    zone: Zone,
    op: &OperatingPoint,
    geom: &ColumnGeometry,
    p: &ConstitutiveParams,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::Domain {
            name: "phi",
            value: phi,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let q = zone_bulk(zone, geom, op);
    Ok(match zone {
        Zone::Effluent | Zone::Underflow => q * phi,
        Zone::AboveFeed | Zone::BelowFeed => q * phi + p.batch_flux_unchecked(phi),
    })
}

/// Zone settling flux for the solids (positive in the settling direction,
/// i.e. downwards). `varphi` is the solids fraction within the suspension.
pub fn solids_zone_flux(
    varphi: f64,
    phi: f64,
    zone: Zone,
    op: &OperatingPoint,
    geom: &ColumnGeometry,
    p: &ConstitutiveParams,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&varphi) {
        return Err(Error::Domain {
            name: "varphi",
            value: varphi,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::Domain {
            name: "phi",
            value: phi,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let q = zone_bulk(zone, geom, op);
    Ok(match zone {
        Zone::Effluent | Zone::Underflow => -(1.0 - phi) * q * varphi,
        Zone::AboveFeed | Zone::BelowFeed => {
            (1.0 - phi) * p.settling_flux_unchecked(varphi)
                + (p.batch_flux_unchecked(phi) - (1.0 - phi) * q) * varphi
        }
    })
}
