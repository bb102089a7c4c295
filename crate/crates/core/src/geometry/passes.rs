use super::{link_geometry, propagate, EarthRotation, GeometryError, PlatformKind, PlatformSpec};

/// Rise/set times are refined by bisection to this tolerance.
const REFINE_TOL_S: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PassWindow {
    pub rise_s: f64,
    pub set_s: f64,
    pub max_elevation_rad: f64,
    pub duration_s: f64,
}

/// Elevation of `orbit` above the local horizon of `site` at time `t`.
pub fn elevation_at(
    orbit: &PlatformSpec,
    site: &PlatformSpec,
    t: f64,
    rotation: EarthRotation,
) -> Result<f64, GeometryError> {
    let s = propagate(site, t, rotation)?;
    let o = propagate(orbit, t, rotation)?;
    Ok(link_geometry(&s, &o)?.elevation_rad)
}

/// Visibility windows of a circular-orbit platform above `min_elevation`
/// from a ground or HAPS site, scanning `[t0, t1]` every `step` seconds.
///
/// Windows that are already open at `t0` or still open at `t1` are clipped
/// to the scan window.
pub fn predict_passes(
    orbit: &PlatformSpec,
    site: &PlatformSpec,
    rotation: EarthRotation,
    min_elevation: f64,
    window: (f64, f64),
    step: f64,
) -> Result<Vec<PassWindow>, GeometryError> {
    if orbit.kind() != PlatformKind::LeoCircular {
        return Err(GeometryError::InvalidArgument(format!(
            "pass prediction needs a LEO_CIRCULAR orbit, got {}",
            orbit.kind().as_str()
        )));
    }
    if !matches!(site.kind(), PlatformKind::GroundSite | PlatformKind::Haps) {
        return Err(GeometryError::InvalidArgument(format!(
            "pass prediction needs a GROUND_SITE or HAPS site, got {}",
            site.kind().as_str()
        )));
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "scan step {step} s must be in (0, 1]"
        )));
    }
    let (t0, t1) = window;
    if !(t1 > t0) || min_elevation >= std::f64::consts::FRAC_PI_2 {
        return Ok(Vec::new());
    }

    let above = |t: f64| -> Result<f64, GeometryError> {
        Ok(elevation_at(orbit, site, t, rotation)? - min_elevation)
    };
    let crossing = |mut lo: f64, mut hi: f64, rising: bool| -> Result<f64, GeometryError> {
        while hi - lo > REFINE_TOL_S {
            let mid = 0.5 * (lo + hi);
            let up = above(mid)? >= 0.0;
            if up == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let mut passes = Vec::new();
    let mut prev_t = t0;
    let mut prev_up = above(t0)? >= 0.0;
    let mut rise = prev_up.then_some(t0);
    let mut best = (f64::NEG_INFINITY, t0);
    if prev_up {
        best = (above(t0)?, t0);
    }
    let n = ((t1 - t0) / step).ceil() as usize;
    for k in 1..=n {
        let t = (t0 + k as f64 * step).min(t1);
        let v = above(t)?;
        let up = v >= 0.0;
        if up && !prev_up {
            rise = Some(crossing(prev_t, t, true)?);
            best = (f64::NEG_INFINITY, t);
        }
        if up && v > best.0 {
            best = (v, t);
        }
        if !up && prev_up {
            let set = crossing(prev_t, t, false)?;
            if let Some(r) = rise.take() {
                push_pass(&mut passes, orbit, site, rotation, r, set, best.1, step)?;
            }
        }
        prev_t = t;
        prev_up = up;
    }
    if let Some(r) = rise {
        push_pass(&mut passes, orbit, site, rotation, r, t1, best.1, step)?;
    }
    Ok(passes)
}

#[allow(clippy::too_many_arguments)]
fn push_pass(
    out: &mut Vec<PassWindow>,
    orbit: &PlatformSpec,
    site: &PlatformSpec,
    rotation: EarthRotation,
    rise: f64,
    set: f64,
    t_peak: f64,
    step: f64,
) -> Result<(), GeometryError> {
    let duration = set - rise;
    if !(duration > 0.0) {
        return Ok(());
    }
    // Golden-section search for the culmination around the best sample.
    let el = |t: f64| elevation_at(orbit, site, t, rotation);
    let (mut a, mut b) = ((t_peak - step).max(rise), (t_peak + step).min(set));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (el(c)?, el(d)?);
    while b - a > 1e-4 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = el(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = el(d)?;
        }
    }
    let max_el = el(0.5 * (a + b))?.max(el(t_peak)?);
    out.push(PassWindow {
        rise_s: rise,
        set_s: set,
        max_elevation_rad: max_el,
        duration_s: duration,
    });
    Ok(())
}
