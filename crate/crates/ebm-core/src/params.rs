//! Physical and dimensionless model parameters, insolation, albedo functions,
//! source terms and continent geometry.
//!
//! Every solver module works in dimensionless variables; conversion between
//! dimensional and dimensionless quantities lives here and nowhere else.
//! Temperatures convert as `T_dim = T_s * T`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{EbmError, Result};

/// Which medium a latitude belongs to. Parameters that differ between ocean
/// and continent (heat capacity, albedo, critical ice temperature) switch on
/// this tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Surface {
    Water,
    Land,
}

/// Dimensional model parameters.
///
/// Heat capacities are stored as the dimensionless multiples of `B * t0`
/// they are quoted as (the timescale cancels when forming `gamma`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalParams {
    /// Outgoing-radiation offset (W m^-2).
    pub a: f64,
    /// Outgoing-radiation slope (W m^-2 per degree C).
    pub b: f64,
    /// Diffusion coefficient (W m^-2 per degree C).
    pub d: f64,
    /// Ocean heat capacity as a multiple of B * t0.
    pub c_water: f64,
    /// Continent heat capacity as a multiple of B * t0.
    pub c_land: f64,
    /// Timescale (years).
    pub t0: f64,
    /// Magnitude of the ocean ice-formation temperature (degrees C); the
    /// threshold itself is -T_s.
    pub t_s: f64,
    /// Magnitude of the continent ice-formation temperature (degrees C).
    pub t_s_land: f64,
    /// Ocean albedo without ice cover.
    pub a1: f64,
    /// Ocean albedo with ice cover.
    pub a2: f64,
    /// Continent albedo without ice cover.
    pub a1_land: f64,
    /// Continent albedo with ice cover.
    pub a2_land: f64,
    /// Insolation distribution offset.
    pub s0: f64,
    /// Insolation distribution amplitude.
    pub s1: f64,
    /// Slope of the smooth albedo ramp.
    pub sigma: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            a: 203.0,
            b: 2.09,
            d: 0.208 * 2.09,
            c_water: 4.7,
            c_land: 0.16,
            t0: 1.0,
            t_s: 10.0,
            t_s_land: 1.0,
            a1: 0.06,
            a2: 0.6,
            a1_land: 0.3,
            a2_land: 0.6,
            s0: 0.523,
            s1: 0.716,
            sigma: 50.0,
        }
    }
}

impl PhysicalParams {
    /// Check the structural invariants (positivity, albedo ordering).
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("B", self.b),
            ("D", self.d),
            ("C_water", self.c_water),
            ("C_land", self.c_land),
            ("t0", self.t0),
            ("T_s", self.t_s),
            ("T_s_land", self.t_s_land),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(EbmError::InvalidParameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if !(0.0 <= self.a1 && self.a1 < self.a2 && self.a2 <= 1.0) {
            return Err(EbmError::InvalidParameter(format!(
                "ocean albedos must satisfy 0 <= a1 < a2 <= 1, got a1={}, a2={}",
                self.a1, self.a2
            )));
        }
        if !(0.0 <= self.a1_land && self.a1_land < self.a2_land && self.a2_land <= 1.0) {
            return Err(EbmError::InvalidParameter(format!(
                "land albedos must satisfy 0 <= a1 < a2 <= 1, got a1={}, a2={}",
                self.a1_land, self.a2_land
            )));
        }
        Ok(())
    }
}

/// The scaled coefficients driving every dimensionless equation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_water: f64,
    pub gamma_land: f64,
    pub eta: f64,
    /// Continent critical temperature in units of T_s: T_c = T_s_land / T_s.
    pub t_c: f64,
}

/// Scale the dimensional parameters at solar constant `q` (W m^-2).
pub fn nondimensionalize(p: &PhysicalParams, q: f64) -> Result<DimensionlessParams> {
    p.validate()?;
    if !(q > 0.0) {
        return Err(EbmError::InvalidParameter(format!("Q must be positive, got {q}")));
    }
    Ok(DimensionlessParams {
        alpha: p.a / (p.t_s * p.d),
        beta: p.b / p.d,
        // C = multiple * B * t0, so gamma = C / (t0 * D) = multiple * B / D.
        gamma_water: p.c_water * p.b / p.d,
        gamma_land: p.c_land * p.b / p.d,
        eta: q / (p.t_s * p.d),
        t_c: p.t_s_land / p.t_s,
    })
}

impl DimensionlessParams {
    /// Dimensionless ice threshold for a surface: -1 on water, -T_c on land.
    pub fn threshold(&self, surface: Surface) -> f64 {
        match surface {
            Surface::Water => -1.0,
            Surface::Land => -self.t_c,
        }
    }

    pub fn gamma(&self, surface: Surface) -> f64 {
        match surface {
            Surface::Water => self.gamma_water,
            Surface::Land => self.gamma_land,
        }
    }
}

/// Latitudinal insolation distribution s(theta) = s0 + s1 cos^2(theta - pi/2).
pub fn insolation(theta: f64, p: &PhysicalParams) -> f64 {
    let c = (theta - PI / 2.0).cos();
    p.s0 + p.s1 * c * c
}

fn step_albedos(p: &PhysicalParams, surface: Surface) -> (f64, f64) {
    match surface {
        Surface::Water => (p.a1, p.a2),
        Surface::Land => (p.a1_land, p.a2_land),
    }
}

/// Step-function albedo in dimensionless temperature.
///
/// The threshold value itself is ambiguous; threshold crossings are
/// represented explicitly as critical latitudes by the stationary solver, so
/// no caller should ever land exactly on it.
pub fn albedo_step(t: f64, surface: Surface, p: &PhysicalParams, dp: &DimensionlessParams) -> Result<f64> {
    let thr = dp.threshold(surface);
    let (a_warm, a_ice) = step_albedos(p, surface);
    if t == thr {
        return Err(EbmError::AmbiguousAlbedo {
            temperature: t,
            surface: match surface {
                Surface::Water => "water",
                Surface::Land => "land",
            },
        });
    }
    Ok(if t > thr { a_warm } else { a_ice })
}

/// Smooth tanh ramp replicating the step albedo, slope `sigma`.
pub fn albedo_smooth(t: f64, surface: Surface, p: &PhysicalParams, dp: &DimensionlessParams) -> f64 {
    let thr = dp.threshold(surface);
    let (a_warm, a_ice) = step_albedos(p, surface);
    a_warm + 0.5 * (a_ice - a_warm) * (1.0 + (-p.sigma * (t - thr)).tanh())
}

/// Derivative of the smooth albedo with respect to temperature.
pub fn albedo_smooth_dt(t: f64, surface: Surface, p: &PhysicalParams, dp: &DimensionlessParams) -> f64 {
    let thr = dp.threshold(surface);
    let (a_warm, a_ice) = step_albedos(p, surface);
    let sech = 1.0 / (p.sigma * (t - thr)).cosh();
    -0.5 * p.sigma * (a_ice - a_warm) * sech * sech
}

/// Source term h_j(theta) = eta s(theta) (1 - a) - alpha, with the step
/// albedo selected by the (ice, surface) pair. The four branches are the
/// h_1..h_4 of the stationary formulation.
pub fn source_term(
    theta: f64,
    ice: bool,
    surface: Surface,
    dp: &DimensionlessParams,
    p: &PhysicalParams,
) -> f64 {
    let (g0, g1) = source_coeffs(ice, surface, dp, p);
    let s = theta.sin();
    g0 + g1 * s * s
}

/// The source branch written as g0 + g1 sin^2(theta); since
/// s(theta) = s0 + s1 sin^2(theta), every h_j is of this form.
pub fn source_coeffs(
    ice: bool,
    surface: Surface,
    dp: &DimensionlessParams,
    p: &PhysicalParams,
) -> (f64, f64) {
    let (a_warm, a_ice) = step_albedos(p, surface);
    let a = if ice { a_ice } else { a_warm };
    let co_albedo = 1.0 - a;
    (
        dp.eta * co_albedo * p.s0 - dp.alpha,
        dp.eta * co_albedo * p.s1,
    )
}

/// Kind of planet geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Aquaplanet,
    Continent,
}

/// Zonally symmetric continent geometry (or its absence).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContinentConfig {
    pub kind: GeometryKind,
    /// Angular extent of the continent (radians); 0 for an aquaplanet.
    pub l: f64,
    /// Northward shift of the continent (radians); 0 preserves meridional
    /// symmetry.
    pub epsilon: f64,
    /// Northern continent edge.
    pub theta_l1: f64,
    /// Southern continent edge.
    pub theta_l2: f64,
}

impl ContinentConfig {
    pub fn aquaplanet() -> Self {
        Self {
            kind: GeometryKind::Aquaplanet,
            l: 0.0,
            epsilon: 0.0,
            theta_l1: f64::NAN,
            theta_l2: f64::NAN,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.kind == GeometryKind::Aquaplanet || self.epsilon == 0.0
    }

    /// Surface type at a latitude.
    pub fn surface_at(&self, theta: f64) -> Surface {
        match self.kind {
            GeometryKind::Aquaplanet => Surface::Water,
            GeometryKind::Continent => {
                if theta >= self.theta_l1 && theta <= self.theta_l2 {
                    Surface::Land
                } else {
                    Surface::Water
                }
            }
        }
    }
}

/// Continent placed with extent `l` and shift `epsilon`:
/// theta_l1 = pi/2 - l/2 - epsilon, theta_l2 = pi/2 + l/2 - epsilon.
pub fn continent_config(l: f64, epsilon: f64) -> Result<ContinentConfig> {
    if !(l > 0.0 && l < PI) {
        return Err(EbmError::InvalidGeometry(format!(
            "continent extent must lie in (0, pi), got {l}"
        )));
    }
    let theta_l1 = PI / 2.0 - l / 2.0 - epsilon;
    let theta_l2 = PI / 2.0 + l / 2.0 - epsilon;
    if !(theta_l1 > 0.0 && theta_l2 < PI) {
        return Err(EbmError::InvalidGeometry(format!(
            "shifted continent [{theta_l1}, {theta_l2}] leaves (0, pi)"
        )));
    }
    Ok(ContinentConfig {
        kind: GeometryKind::Continent,
        l,
        epsilon,
        theta_l1,
        theta_l2,
    })
}

/// On-disk run configuration: physical parameters plus solar constant and
/// continent placement. Missing keys fall back to the defaults above.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub physical: PhysicalParams,
    pub q: f64,
    pub continent: ContinentSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinentSpec {
    pub kind: GeometryKind,
    pub l: f64,
    pub epsilon: f64,
}

impl Default for ContinentSpec {
    fn default() -> Self {
        Self {
            kind: GeometryKind::Aquaplanet,
            l: PI / 4.0,
            epsilon: 0.0,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            physical: PhysicalParams::default(),
            q: 300.0,
            continent: ContinentSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| EbmError::InvalidParameter(format!("config parse error: {e}")))?;
        cfg.physical.validate()?;
        // Force geometry construction so bounds problems surface at load time.
        cfg.continent_config()?;
        Ok(cfg)
    }

    pub fn continent_config(&self) -> Result<ContinentConfig> {
        match self.continent.kind {
            GeometryKind::Aquaplanet => Ok(ContinentConfig::aquaplanet()),
            GeometryKind::Continent => continent_config(self.continent.l, self.continent.epsilon),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> (PhysicalParams, DimensionlessParams) {
        let p = PhysicalParams::default();
        let dp = nondimensionalize(&p, 247.0).unwrap();
        (p, dp)
    }

    #[test]
    fn nondimensional_defaults() {
        let (_, dp) = defaults();
        assert!((dp.beta - 1.0 / 0.208).abs() < 1e-12);
        assert!((dp.beta - 4.807692).abs() < 1e-6);
        assert!((dp.gamma_water - 4.7 / 0.208).abs() < 1e-12);
        assert!((dp.gamma_water - 22.59615).abs() < 1e-5);
        assert!((dp.gamma_land - 0.16 / 0.208).abs() < 1e-12);
        assert!((dp.gamma_land - 0.769231).abs() < 1e-6);
        assert!((dp.eta - 247.0 / (10.0 * 0.43472)).abs() < 1e-12);
        assert!((dp.eta - 56.8182).abs() < 1e-4);
        assert!((dp.t_c - 0.1).abs() < 1e-15);
    }

    #[test]
    fn beta_is_one_when_d_equals_b() {
        let mut p = PhysicalParams::default();
        p.d = p.b;
        let dp = nondimensionalize(&p, 300.0).unwrap();
        assert_eq!(dp.beta, 1.0);
    }

    #[test]
    fn nondimensionalize_rejects_bad_input() {
        let p = PhysicalParams::default();
        assert!(nondimensionalize(&p, 0.0).is_err());
        let mut bad = p.clone();
        bad.d = 0.0;
        assert!(nondimensionalize(&bad, 247.0).is_err());
        let mut bad = p;
        bad.a1 = 0.7; // a1 >= a2
        assert!(nondimensionalize(&bad, 247.0).is_err());
    }

    #[test]
    fn insolation_values_and_symmetry() {
        let (p, _) = defaults();
        assert!((insolation(0.0, &p) - 0.523).abs() < 1e-12);
        assert!((insolation(PI / 2.0, &p) - 1.239).abs() < 1e-12);
        for k in 0..50 {
            let theta = PI * (k as f64 + 0.5) / 50.0;
            assert!((insolation(theta, &p) - insolation(PI - theta, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn step_albedo_branches() {
        let (p, dp) = defaults();
        assert_eq!(albedo_step(0.0, Surface::Water, &p, &dp).unwrap(), 0.06);
        assert_eq!(albedo_step(-2.0, Surface::Water, &p, &dp).unwrap(), 0.6);
        assert_eq!(albedo_step(0.0, Surface::Land, &p, &dp).unwrap(), 0.3);
        assert!(albedo_step(-1.0, Surface::Water, &p, &dp).is_err());
        assert!(albedo_step(-dp.t_c, Surface::Land, &p, &dp).is_err());
    }

    #[test]
    fn smooth_albedo_midpoints_and_limits() {
        let (p, dp) = defaults();
        let mid_w = albedo_smooth(-1.0, Surface::Water, &p, &dp);
        assert!((mid_w - 0.33).abs() < 1e-12);
        let mid_l = albedo_smooth(-dp.t_c, Surface::Land, &p, &dp);
        assert!((mid_l - 0.45).abs() < 1e-12);
        assert!((albedo_smooth(10.0, Surface::Water, &p, &dp) - 0.06).abs() < 1e-8);
        assert!((albedo_smooth(-10.0, Surface::Water, &p, &dp) - 0.6).abs() < 1e-8);
    }

    #[test]
    fn smooth_albedo_tracks_step_away_from_threshold() {
        let (p, dp) = defaults();
        // sigma = 50, delta = 0.5 from the threshold.
        for surface in [Surface::Water, Surface::Land] {
            let thr = dp.threshold(surface);
            for t in [thr + 0.5, thr + 1.3, thr - 0.5, thr - 1.3] {
                let step = albedo_step(t, surface, &p, &dp).unwrap();
                let smooth = albedo_smooth(t, surface, &p, &dp);
                assert!(
                    (step - smooth).abs() < 1e-6,
                    "surface {surface:?}, T = {t}: |{step} - {smooth}| too large"
                );
            }
        }
    }

    #[test]
    fn smooth_albedo_derivative_matches_differences() {
        let (p, dp) = defaults();
        for t in [-1.5, -1.0, -0.6, 0.2] {
            let eps = 1e-6;
            let fd = (albedo_smooth(t + eps, Surface::Water, &p, &dp)
                - albedo_smooth(t - eps, Surface::Water, &p, &dp))
                / (2.0 * eps);
            let an = albedo_smooth_dt(t, Surface::Water, &p, &dp);
            assert!((fd - an).abs() < 1e-4 * (1.0 + an.abs()), "T = {t}: {fd} vs {an}");
        }
    }

    #[test]
    fn source_term_branches() {
        let (p, dp) = defaults();
        let h1_eq = source_term(PI / 2.0, false, Surface::Water, &dp, &p);
        assert!((h1_eq - 19.47).abs() < 0.01, "h1(pi/2) = {h1_eq}");
        let h2_pole = source_term(0.0, true, Surface::Water, &dp, &p);
        assert!((h2_pole - (-34.81)).abs() < 0.01, "h2(0) = {h2_pole}");
        // h2 < h1 wherever s > 0.
        for k in 0..40 {
            let theta = PI * (k as f64 + 0.5) / 40.0;
            assert!(
                source_term(theta, true, Surface::Water, &dp, &p)
                    < source_term(theta, false, Surface::Water, &dp, &p)
            );
        }
    }

    #[test]
    fn continent_placement() {
        let c = continent_config(PI / 4.0, 0.0).unwrap();
        assert!((c.theta_l1 - 3.0 * PI / 8.0).abs() < 1e-15);
        assert!((c.theta_l2 - 5.0 * PI / 8.0).abs() < 1e-15);
        assert!((c.theta_l1 + c.theta_l2 - PI).abs() < 1e-15);

        let shifted = continent_config(PI / 4.0, 0.1).unwrap();
        assert!((shifted.theta_l1 - (3.0 * PI / 8.0 - 0.1)).abs() < 1e-15);
        assert!((shifted.theta_l2 - (5.0 * PI / 8.0 - 0.1)).abs() < 1e-15);

        assert!(continent_config(0.0, 0.0).is_err());
        assert!(continent_config(PI / 4.0, 2.0).is_err());
    }

    #[test]
    fn config_roundtrip_and_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg.q, 300.0);
        assert_eq!(cfg.physical.a, 203.0);

        let cfg = RunConfig::from_json(
            r#"{"q": 247.0, "continent": {"kind": "continent", "l": 0.7853981633974483, "epsilon": 0.1}}"#,
        )
        .unwrap();
        assert_eq!(cfg.q, 247.0);
        let geom = cfg.continent_config().unwrap();
        assert_eq!(geom.kind, GeometryKind::Continent);
        assert!((geom.epsilon - 0.1).abs() < 1e-15);

        assert!(RunConfig::from_json("{\"q\": \"oops\"}").is_err());
    }

    proptest::proptest! {
        #[test]
        fn nondimensionalize_is_homogeneous_in_q(q in 1.0f64..2000.0, c in 0.1f64..50.0) {
            let p = PhysicalParams::default();
            let d1 = nondimensionalize(&p, q).unwrap();
            let d2 = nondimensionalize(&p, c * q).unwrap();
            proptest::prop_assert!((d2.eta - c * d1.eta).abs() <= 1e-9 * d1.eta.abs() * c.max(1.0));
            proptest::prop_assert_eq!(d1.alpha, d2.alpha);
            proptest::prop_assert_eq!(d1.beta, d2.beta);
            proptest::prop_assert_eq!(d1.gamma_water, d2.gamma_water);
            proptest::prop_assert_eq!(d1.gamma_land, d2.gamma_land);
        }

        #[test]
        fn smooth_albedo_is_monotone_decreasing(t in -3.0f64..1.0, dt in 1e-4f64..0.5) {
            let p = PhysicalParams::default();
            let dp = nondimensionalize(&p, 300.0).unwrap();
            let hi = albedo_smooth(t, Surface::Water, &p, &dp);
            let lo = albedo_smooth(t + dt, Surface::Water, &p, &dp);
            proptest::prop_assert!(lo <= hi);
        }
    }
}
