//! Sampling-rate planning: bandpass windows with the unlimited-sampling cap,
//! alias-free checks for multiband carriers and the rate condition of the
//! recovery theorem.

use std::f64::consts::{E, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filter::reduce_carrier;

/// Which upper bound closes a window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitedBy {
    BandpassUpper,
    UsfUpper,
}

/// Closed interval of admissible sample periods for one bandpass zone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateWindow {
    pub t_min: f64,
    pub t_max: f64,
    pub zone_index: u32,
    pub limited_by: LimitedBy,
}

impl RateWindow {
    pub fn contains(&self, t: f64) -> bool {
        self.t_min <= t && t <= self.t_max
    }
}

/// `1 / (4 Ω_B e)`, the largest period for a real bandpass signal.
pub fn usf_bandpass_cap(halfwidth: f64) -> f64 {
    1.0 / (4.0 * halfwidth * E)
}

/// Admissible sample periods for a real bandpass signal with center `ω₀` and
/// half-width `Ω_B`, both in rad/s:
///
/// `π(z-1)/(ω₀-Ω_B) ≤ T ≤ min{πz/(ω₀+Ω_B), 1/(4Ω_B e)}` for zones
/// `z = 1 ..= ⌊(ω₀+Ω_B)/(2Ω_B)⌋`. Empty zones are dropped. A band touching
/// DC (`ω₀ ≤ Ω_B`) only has the first zone.
pub fn bandpass_windows(center: f64, halfwidth: f64) -> Vec<RateWindow> {
    if !(halfwidth > 0.0) || !center.is_finite() || !(center > 0.0) {
        return Vec::new();
    }
    let cap = usf_bandpass_cap(halfwidth);
    let upper_edge = center + halfwidth;
    let lower_edge = center - halfwidth;
    let zones = if lower_edge > 0.0 {
        (upper_edge / (2.0 * halfwidth)).floor().max(1.0) as u32
    } else {
        1
    };
    let mut out = Vec::new();
    for z in 1..=zones {
        let t_min = if z == 1 {
            0.0
        } else {
            PI * (z - 1) as f64 / lower_edge
        };
        let bandpass = PI * z as f64 / upper_edge;
        let (t_max, limited_by) = if cap < bandpass {
            (cap, LimitedBy::UsfUpper)
        } else {
            (bandpass, LimitedBy::BandpassUpper)
        };
        if t_min <= t_max {
            out.push(RateWindow {
                t_min,
                t_max,
                zone_index: z,
                limited_by,
            });
        }
    }
    out
}

/// Outcome of an alias check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AliasReport {
    pub alias_free: bool,
    /// Index pairs `(p, q)`, `p < q`, whose aliased bands overlap.
    pub collisions: Vec<(usize, usize)>,
}

/// Reduces every band `[ω_p-Ω_B, ω_p+Ω_B]` modulo `Ω_S = 2π/T` and checks
/// pairwise disjointness on the circle. Touching bands count as disjoint.
pub fn alias_free_check(carriers: &[f64], halfwidth: f64, sample_period: f64) -> Result<AliasReport> {
    if !(halfwidth > 0.0) || !(sample_period > 0.0) {
        return Err(invalid("alias check needs positive Ω_B and T_S"));
    }
    let ws = TAU / sample_period;
    if 2.0 * halfwidth > ws {
        return Err(Error::BandTooWide {
            band_width: 2.0 * halfwidth,
            sampling_rate: ws,
        });
    }
    let reduced: Vec<f64> = carriers
        .iter()
        .map(|&w| reduce_carrier(w, sample_period))
        .collect();
    let mut collisions = Vec::new();
    for p in 0..reduced.len() {
        for q in p + 1..reduced.len() {
            let d = (reduced[p] - reduced[q]).rem_euclid(ws);
            let circ = d.min(ws - d);
            if circ < 2.0 * halfwidth {
                collisions.push((p, q));
            }
        }
    }
    Ok(AliasReport {
        alias_free: collisions.is_empty(),
        collisions,
    })
}

/// Rate condition of the recovery theorem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsfCheck {
    pub admissible: bool,
    /// `1 / (2^{P-1} Ω_B e)`; admissible periods lie strictly below it.
    pub max_sample_period: f64,
    /// `1 / (2^P Ω_B e)`, the stricter variant; for `P = 2` it equals the
    /// bandpass cap `1 / (4 Ω_B e)`.
    pub conservative_max_sample_period: f64,
}

pub fn usf_rate_check(band_count: usize, halfwidth: f64, sample_period: f64) -> UsfCheck {
    let cap = 1.0 / (2f64.powi(band_count as i32 - 1) * halfwidth * E);
    UsfCheck {
        admissible: sample_period < cap,
        max_sample_period: cap,
        conservative_max_sample_period: 0.5 * cap,
    }
}

/// One cell of the achievability map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub f_u_hz: f64,
    pub t_s_seconds: f64,
    pub achievable: bool,
}

/// Inclusive linear grid of `count` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Span {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count }
    }

    pub fn point(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.start
        } else {
            self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.point(i))
    }
}

/// Classifies every `(f_U, T_S)` pair of the grid against
/// [`bandpass_windows`] with `ω₀ = 2π f_U - Ω_B`. Rows are ordered by `f_U`
/// then `T_S`.
pub fn achievability_map(f_upper: Span, periods: Span, halfwidth: f64) -> Vec<MapPoint> {
    use rayon::prelude::*;
    (0..f_upper.count)
        .into_par_iter()
        .flat_map_iter(|i| {
            let f_u = f_upper.point(i);
            let windows = bandpass_windows(TAU * f_u - halfwidth, halfwidth);
            periods.points().map(move |t| MapPoint {
                f_u_hz: f_u,
                t_s_seconds: t,
                achievable: windows.iter().any(|w| w.contains(t)),
            }).collect::<Vec<_>>()
        })
        .collect()
}

/// Planner summary for a carrier set and a candidate sample period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Nyquist period of the occupied span `[min ω_p - Ω_B, max ω_p + Ω_B]`.
    pub nyquist_span_period: f64,
    /// Bandpass windows for the occupied positive-frequency span.
    pub windows: Vec<RateWindow>,
    pub sample_period: f64,
    pub alias_free: bool,
    pub collisions: Vec<(usize, usize)>,
    pub usf_ok: bool,
    pub usf_max_sample_period: f64,
    /// `T_S / T_NS`; above 1 means sub-Nyquist sampling of the span.
    pub nyquist_ratio: f64,
}

/// Runs every check for `carriers` (rad/s) with half-width `Ω_B` at period
/// `sample_period`.
pub fn plan(carriers: &[f64], halfwidth: f64, sample_period: f64) -> Result<FeasibilityReport> {
    if carriers.is_empty() {
        return Err(invalid("carrier set is empty"));
    }
    let lo = carriers.iter().cloned().fold(f64::INFINITY, f64::min) - halfwidth;
    let hi = carriers.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + halfwidth;
    let nyquist_span_period = TAU / (hi - lo);
    let pos_lo = carriers
        .iter()
        .map(|w| w.abs())
        .fold(f64::INFINITY, f64::min)
        - halfwidth;
    let pos_hi = carriers.iter().map(|w| w.abs()).fold(0.0, f64::max) + halfwidth;
    let span_center = 0.5 * (pos_lo.max(0.0) + pos_hi);
    let span_half = 0.5 * (pos_hi - pos_lo.max(0.0));
    let windows = bandpass_windows(span_center, span_half);
    let alias = alias_free_check(carriers, halfwidth, sample_period)?;
    let usf = usf_rate_check(carriers.len(), halfwidth, sample_period);
    Ok(FeasibilityReport {
        nyquist_span_period,
        windows,
        sample_period,
        alias_free: alias.alias_free,
        collisions: alias.collisions,
        usf_ok: usf.admissible,
        usf_max_sample_period: usf.max_sample_period,
        nyquist_ratio: sample_period / nyquist_span_period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_zone_starts_at_zero() {
        let (w0, wb) = (TAU * 100.0, TAU * 10.0);
        let ws = bandpass_windows(w0, wb);
        assert_eq!(ws[0].zone_index, 1);
        assert_eq!(ws[0].t_min, 0.0);
        assert_eq!(ws[0].t_max, (PI / (w0 + wb)).min(usf_bandpass_cap(wb)));
    }

    #[test]
    fn windows_are_sorted_disjoint_and_capped() {
        let (w0, wb) = (TAU * 1000.0, TAU * 1.0);
        let ws = bandpass_windows(w0, wb);
        assert!(ws.len() > 1);
        for pair in ws.windows(2) {
            assert!(pair[0].t_max < pair[1].t_min);
        }
        let cap = usf_bandpass_cap(wb);
        assert!(ws.iter().all(|w| w.t_max <= cap && w.t_min <= w.t_max));
    }

    #[test]
    fn wide_band_collapses_to_first_zone() {
        let ws = bandpass_windows(TAU * 10.0, TAU * 9.99);
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].zone_index, 1);
    }

    #[test]
    fn usf_examples() {
        let (p, wb) = (3, 50.0);
        let cap = 1.0 / (4.0 * wb * E);
        assert!(usf_rate_check(p, wb, 0.5 * cap).admissible);
        let at = usf_rate_check(p, wb, cap);
        assert!(!at.admissible);
        assert_eq!(at.max_sample_period, cap);
        assert_eq!(
            usf_rate_check(2, wb, 0.0).conservative_max_sample_period,
            usf_bandpass_cap(wb)
        );
    }

    #[test]
    fn alias_examples() {
        let t = 1e-3;
        assert!(alias_free_check(&[100.0], 10.0, t).unwrap().alias_free);
        let ws = TAU / t;
        let r = alias_free_check(&[100.0, 100.0 + 3.0 * ws], 10.0, t).unwrap();
        assert_eq!(r.collisions, vec![(0, 1)]);
        assert!(matches!(
            alias_free_check(&[0.0], ws, t),
            Err(Error::BandTooWide { .. })
        ));
    }

    #[test]
    fn map_agrees_with_windows() {
        let wb = TAU * 5.0;
        let map = achievability_map(Span::new(20.0, 200.0, 19), Span::new(1e-4, 0.02, 40), wb);
        assert_eq!(map.len(), 19 * 40);
        for p in &map {
            if p.t_s_seconds > usf_bandpass_cap(wb) {
                assert!(!p.achievable);
            }
            let ws = bandpass_windows(TAU * p.f_u_hz - wb, wb);
            assert_eq!(p.achievable, ws.iter().any(|w| w.contains(p.t_s_seconds)));
        }
    }

    #[test]
    fn plan_reports_sub_nyquist() {
        let c: Vec<f64> = [25.64, 79.77, 182.34]
            .iter()
            .flat_map(|f| [TAU * f, -TAU * f])
            .collect();
        let r = plan(&c, PI * 22.04, 1.3e-3).unwrap();
        assert!(r.alias_free);
        let t_ns = 1.0 / (2.0 * (182.34 + 11.02));
        assert!((r.nyquist_span_period - t_ns).abs() < 1e-12);
        assert!(!r.usf_ok);
    }
}
