//! Scalar-diffraction field ratio of a single absorbing sheet.
//!
//! The received field in the presence of an opaque sheet is computed
//! relative to free space by summing the Huygens sources the sheet
//! removes:
//!
//! ```text
//! E/E0 = 1 - j (d/λ) Σ ΔT / (r1 r2) · exp(-j 2π/λ (r1 + r2 - d))
//! ```
//!
//! where `r1`, `r2` are the distances from a sheet element to TX and RX.
//! The sum is a midpoint rule over a rectangular grid that tiles the sheet.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{effective_width, TargetParams};

/// |ratio| floor used by composed pipelines (120 dB).
pub const MIN_FIELD_MAGNITUDE: f64 = 1e-6;

/// Signed distances below this are treated as "on the sheet plane".
const PLANE_EPS: f64 = 1e-9;

pub type Point3 = [f64; 3];

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Point3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// A straight TX-RX radio link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub tx_position: Point3,
    pub rx_position: Point3,
    pub length_d: f64,
}

impl LinkGeometry {
    pub fn new(tx_position: Point3, rx_position: Point3) -> Result<Self> {
        let length_d = norm(sub(rx_position, tx_position));
        if !(length_d > 0.0) || !length_d.is_finite() {
            return Err(Error::DegenerateGeometry(
                "link endpoints coincide".to_string(),
            ));
        }
        Ok(Self {
            tx_position,
            rx_position,
            length_d,
        })
    }

    /// Endpoints swapped.
    pub fn reversed(&self) -> Self {
        Self {
            tx_position: self.rx_position,
            rx_position: self.tx_position,
            length_d: self.length_d,
        }
    }

    /// Azimuth of the horizontal TX->RX projection, radians.
    pub fn azimuth(&self) -> f64 {
        let dx = self.rx_position[0] - self.tx_position[0];
        let dy = self.rx_position[1] - self.tx_position[1];
        dy.atan2(dx)
    }
}

/// A vertical, rectangular, perfectly absorbing sheet.
///
/// The sheet spans `center ± width/2` along its horizontal in-plane axis and
/// `center.z ± height/2` vertically. Its plane normal is horizontal with
/// azimuth `normal_azimuth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingSheet {
    pub center: Point3,
    pub width: f64,
    pub height: f64,
    pub normal_azimuth: f64,
}

impl AbsorbingSheet {
    /// Sheet standing on the floor (z = 0 .. height).
    pub fn standing(x: f64, y: f64, width: f64, height: f64, normal_azimuth: f64) -> Self {
        Self {
            center: [x, y, 0.5 * height],
            width,
            height,
            normal_azimuth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Grid step as a fraction of the wavelength.
    pub step_fraction: f64,
    /// Refuse grids larger than this.
    pub max_elements: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            step_fraction: 0.125,
            max_elements: 4_000_000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_fraction > 0.0 && self.step_fraction <= 0.25) {
            return Err(Error::InvalidArgument(format!(
                "step_fraction must be in (0, 0.25], got {}",
                self.step_fraction
            )));
        }
        if self.max_elements < 10_000 {
            return Err(Error::InvalidArgument(format!(
                "max_elements must be >= 10000, got {}",
                self.max_elements
            )));
        }
        Ok(())
    }
}

/// Received field relative to the free-space field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRatio {
    pub value: Complex64,
}

impl FieldRatio {
    pub const UNOBSTRUCTED: FieldRatio = FieldRatio {
        value: Complex64::new(1.0, 0.0),
    };

    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// Field ratio behind `sheet` for `link` at `wavelength`.
///
/// A sheet whose plane does not separate TX from RX blocks nothing and
/// yields exactly 1. A plane through either endpoint is rejected.
pub fn field_ratio(
    link: &LinkGeometry,
    sheet: &AbsorbingSheet,
    wavelength: f64,
    quad: &QuadratureConfig,
) -> Result<FieldRatio> {
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    quad.validate()?;
    if sheet.width < 0.0 || sheet.height < 0.0 {
        return Err(Error::InvalidArgument("negative sheet dimension".into()));
    }

    let (sin_a, cos_a) = sheet.normal_azimuth.sin_cos();
    let normal = [cos_a, sin_a, 0.0];
    let side = |p: Point3| {
        let v = sub(p, sheet.center);
        v[0] * normal[0] + v[1] * normal[1]
    };
    let s_tx = side(link.tx_position);
    let s_rx = side(link.rx_position);
    if s_tx.abs() < PLANE_EPS || s_rx.abs() < PLANE_EPS {
        return Err(Error::DegenerateGeometry(
            "sheet plane contains a link endpoint".into(),
        ));
    }
    if s_tx.signum() == s_rx.signum() {
        return Ok(FieldRatio::UNOBSTRUCTED);
    }

    let step = quad.step_fraction * wavelength;
    let nu = (sheet.width / step).ceil() as usize;
    let nv = (sheet.height / step).ceil() as usize;
    let required = nu.saturating_mul(nv);
    if required > quad.max_elements {
        return Err(Error::QuadratureOverflow {
            required,
            cap: quad.max_elements,
        });
    }
    if required == 0 {
        return Ok(FieldRatio::UNOBSTRUCTED);
    }

    let du = sheet.width / nu as f64;
    let dv = sheet.height / nv as f64;
    let area = du * dv;
    let d = link.length_d;
    let k = 2.0 * PI / wavelength;
    // in-plane horizontal axis
    let tangent = [-sin_a, cos_a];
    let u0 = -0.5 * sheet.width + 0.5 * du;
    let v0 = sheet.center[2] - 0.5 * sheet.height + 0.5 * dv;
    let [tx, rx] = [link.tx_position, link.rx_position];

    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..nu {
        let u = u0 + i as f64 * du;
        let px = sheet.center[0] + u * tangent[0];
        let py = sheet.center[1] + u * tangent[1];
        let (ax, ay) = (px - tx[0], py - tx[1]);
        let (bx, by) = (px - rx[0], py - rx[1]);
        let h1 = ax * ax + ay * ay;
        let h2 = bx * bx + by * by;
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..nv {
            let z = v0 + j as f64 * dv;
            let z1 = z - tx[2];
            let z2 = z - rx[2];
            let r1 = (h1 + z1 * z1).sqrt();
            let r2 = (h2 + z2 * z2).sqrt();
            let (s, c) = (-k * (r1 + r2 - d)).sin_cos();
            let w = 1.0 / (r1 * r2);
            row.re += w * c;
            row.im += w * s;
        }
        acc += row;
    }
    let integral = acc * area;
    // 1 - j (d/λ) I
    let scale = d / wavelength;
    let value = Complex64::new(1.0 + scale * integral.im, -scale * integral.re);
    Ok(FieldRatio { value })
}

/// Attenuation in dB, `-10 log10 |ratio|^2`. A fully blocked field gives
/// `f64::INFINITY`; see [`attenuation_db_clamped`] for pipelines.
pub fn attenuation_db(ratio: FieldRatio) -> f64 {
    let m2 = ratio.value.norm_sqr();
    if m2 == 0.0 {
        return f64::INFINITY;
    }
    -10.0 * m2.log10()
}

/// Same as [`attenuation_db`] with `|ratio|` floored at [`MIN_FIELD_MAGNITUDE`].
pub fn attenuation_db_clamped(ratio: FieldRatio) -> f64 {
    let m = ratio.magnitude().max(MIN_FIELD_MAGNITUDE);
    -20.0 * m.log10()
}

/// Sheet a body presents to a link: perpendicular to the horizontal LOS,
/// standing at the body position, as wide as the body's projection.
pub fn body_sheet(link: &LinkGeometry, target: &TargetParams) -> AbsorbingSheet {
    let azimuth = link.azimuth();
    AbsorbingSheet::standing(
        target.position[0],
        target.position[1],
        effective_width(target, azimuth),
        target.height,
        azimuth,
    )
}

/// Attenuation (dB, >= 0) of `link` caused by one body.
///
/// Constructive interference (|ratio| > 1) is reported as 0 dB.
pub fn single_target_attenuation(
    link: &LinkGeometry,
    target: &TargetParams,
    wavelength: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let sheet = body_sheet(link, target);
    let ratio = field_ratio(link, &sheet, wavelength, quad)?;
    Ok(attenuation_db_clamped(ratio).max(0.0))
}

/// Fresnel-Kirchhoff parameter of an edge at signed clearance `offset`
/// (positive = LOS obstructed) located `d1`, `d2` from the terminals.
pub fn fresnel_parameter(offset: f64, d1: f64, d2: f64, wavelength: f64) -> f64 {
    offset * (2.0 * (d1 + d2) / (wavelength * d1 * d2)).sqrt()
}

/// Fresnel integrals `(C(x), S(x))` with the `π t²/2` convention.
pub fn fresnel_integrals(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let (c, s) = if ax <= 1.5 {
        fresnel_series(ax)
    } else {
        fresnel_continued_fraction(ax)
    };
    if x < 0.0 {
        (-c, -s)
    } else {
        (c, s)
    }
}

fn fresnel_series(x: f64) -> (f64, f64) {
    // C = Σ (-1)^n (π/2)^{2n} x^{4n+1} / ((2n)! (4n+1))
    // S = Σ (-1)^n (π/2)^{2n+1} x^{4n+3} / ((2n+1)! (4n+3))
    let t = FRAC_PI_2 * x * x;
    let mut c = 0.0;
    let mut s = 0.0;
    // term_m = t^m / m!, times x
    let mut term = x;
    for m in 0..200 {
        let contrib = term / (2 * m + 1) as f64;
        match m % 4 {
            0 => c += contrib,
            1 => s += contrib,
            2 => c -= contrib,
            _ => s -= contrib,
        }
        term *= t / (m + 1) as f64;
        if term.abs() < 1e-18 && m > 4 {
            break;
        }
    }
    (c, s)
}

fn fresnel_continued_fraction(x: f64) -> (f64, f64) {
    // complementary error function continued fraction, modified Lentz
    const TINY: f64 = 1e-300;
    let pix2 = PI * x * x;
    let mut b = Complex64::new(1.0, -pix2);
    let mut cc = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    let mut n = -1.0;
    for _ in 2..200 {
        n += 2.0;
        let a = -n * (n + 1.0);
        b += 4.0;
        d = (d * a + b).inv();
        cc = b + cc.inv() * a;
        let del = cc * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    h *= Complex64::new(x, -x);
    let (sn, cs) = (0.5 * pix2).sin_cos();
    let r = Complex64::new(0.5, 0.5) * (Complex64::new(1.0, 0.0) - Complex64::new(cs, sn) * h);
    (r.re, r.im)
}

/// Classical knife-edge diffraction loss (dB) at Fresnel parameter `nu`.
///
/// Independent of the sheet quadrature; used to validate it.
pub fn knife_edge_oracle(nu: f64) -> f64 {
    if nu == f64::NEG_INFINITY {
        return 0.0;
    }
    let (c, s) = fresnel_integrals(nu);
    let tail = Complex64::new(0.5 - c, -(0.5 - s));
    let field = Complex64::new(0.5, 0.5) * tail;
    -20.0 * field.norm().log10()
}
