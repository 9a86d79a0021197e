//! Case catalogue: every admissible arrangement of critical latitudes and
//! ice cover for a given geometry.
//!
//! A case is a list of interior landmarks (critical latitudes and continent
//! edges, in ascending order) together with one source branch per region
//! between them. Critical-latitude positions are unknowns of the stationary
//! problem; edge positions come from the geometry.
//!
//! For the meridionally symmetric continent the four- and six-critical-
//! latitude states are posed on the truncated domain [0, pi/2] with a
//! symmetry plane at the equator.

use std::f64::consts::PI;

use crate::error::{EbmError, Result};
use crate::params::{ContinentConfig, GeometryKind, Surface};

/// Ice state of one region; selects the source branch h_1..h_4 together with
/// the surface type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceBranch {
    pub surface: Surface,
    pub ice: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeId {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandmarkKind {
    /// Unknown critical latitude on the given surface.
    Crit(Surface),
    /// Continent edge at a fixed position.
    Edge(EdgeId),
}

/// Right end of the computational domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RightEnd {
    /// theta = pi, a pole with vanishing boundary terms.
    Pole,
    /// theta = pi/2 on the truncated symmetric domain; T'(pi/2) = 0 and
    /// T(pi/2) is an unknown.
    SymmetryPlane,
}

/// One admissible ice arrangement.
#[derive(Debug, Clone)]
pub struct CaseSpec {
    pub geometry: GeometryKind,
    pub landmarks: Vec<LandmarkKind>,
    pub sources: Vec<SourceBranch>,
    pub right_end: RightEnd,
    pub name: String,
}

/// A concrete region of the partition.
#[derive(Debug, Clone, Copy)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
    pub source: SourceBranch,
}

/// Minimum admissible separation between moving landmarks and their
/// neighbours.
pub const MIN_SEP: f64 = 1e-4;

impl CaseSpec {
    /// Number of unknown critical latitudes (on the computational domain).
    pub fn crit_count(&self) -> usize {
        self.landmarks
            .iter()
            .filter(|l| matches!(l, LandmarkKind::Crit(_)))
            .count()
    }

    /// Number of critical latitudes of the physical solution (mirrored
    /// count for truncated cases).
    pub fn full_crit_count(&self) -> usize {
        match self.right_end {
            RightEnd::Pole => self.crit_count(),
            RightEnd::SymmetryPlane => 2 * self.crit_count(),
        }
    }

    pub fn domain_end(&self) -> f64 {
        match self.right_end {
            RightEnd::Pole => PI,
            RightEnd::SymmetryPlane => PI / 2.0,
        }
    }

    /// Landmark positions for a given critical-latitude vector.
    pub fn positions(&self, config: &ContinentConfig, theta_c: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.landmarks.len());
        let mut it = theta_c.iter();
        for lm in &self.landmarks {
            out.push(match lm {
                LandmarkKind::Crit(_) => *it.next().expect("theta_c shorter than crit count"),
                LandmarkKind::Edge(EdgeId::L1) => config.theta_l1,
                LandmarkKind::Edge(EdgeId::L2) => config.theta_l2,
            });
        }
        out
    }

    /// Fixed bracket each critical latitude must stay inside (bounded by
    /// the poles, the continent edges and the domain end; other critical
    /// latitudes enforce ordering separately).
    pub fn crit_bracket(&self, crit_index: usize, config: &ContinentConfig) -> (f64, f64) {
        let fixed_pos = |lm: &LandmarkKind| -> Option<f64> {
            match lm {
                LandmarkKind::Crit(_) => None,
                LandmarkKind::Edge(EdgeId::L1) => Some(config.theta_l1),
                LandmarkKind::Edge(EdgeId::L2) => Some(config.theta_l2),
            }
        };
        let mut count = 0usize;
        for (i, lm) in self.landmarks.iter().enumerate() {
            if matches!(lm, LandmarkKind::Crit(_)) {
                if count == crit_index {
                    let lo = self.landmarks[..i]
                        .iter()
                        .rev()
                        .find_map(fixed_pos)
                        .unwrap_or(0.0);
                    let hi = self.landmarks[i + 1..]
                        .iter()
                        .find_map(fixed_pos)
                        .unwrap_or(self.domain_end());
                    return (lo, hi);
                }
                count += 1;
            }
        }
        panic!("crit index {crit_index} out of range");
    }

    /// Feasibility of a critical-latitude vector: each inside its bracket,
    /// ascending, with minimum separation.
    pub fn feasible(&self, config: &ContinentConfig, theta_c: &[f64]) -> bool {
        if theta_c.len() != self.crit_count() {
            return false;
        }
        for (i, &tc) in theta_c.iter().enumerate() {
            let (lo, hi) = self.crit_bracket(i, config);
            if !(tc > lo + MIN_SEP && tc < hi - MIN_SEP) {
                return false;
            }
            if i > 0 && tc - theta_c[i - 1] < MIN_SEP {
                return false;
            }
        }
        true
    }

    /// Partition of the computational domain for a feasible theta_c.
    pub fn regions(&self, config: &ContinentConfig, theta_c: &[f64]) -> Result<Vec<Region>> {
        if !self.feasible(config, theta_c) {
            return Err(EbmError::InfeasibleConfiguration(format!(
                "theta_c {theta_c:?} infeasible for case {}",
                self.name
            )));
        }
        let pos = self.positions(config, theta_c);
        let mut bounds = Vec::with_capacity(pos.len() + 2);
        bounds.push(0.0);
        bounds.extend_from_slice(&pos);
        bounds.push(self.domain_end());
        Ok(bounds
            .windows(2)
            .zip(&self.sources)
            .map(|(w, &source)| Region {
                lo: w[0],
                hi: w[1],
                source,
            })
            .collect())
    }
}

fn branch(surface: Surface, ice: bool) -> SourceBranch {
    SourceBranch { surface, ice }
}

/// Systematic name for a continent pattern: crit distribution over the
/// three fixed intervals plus leading ice state per interval.
fn continent_case_name(dist: [usize; 3], start_ice: [bool; 3]) -> String {
    let states: String = start_ice.iter().map(|&s| if s { 'i' } else { 'w' }).collect();
    let k: usize = dist.iter().sum();
    match (dist, start_ice) {
        ([0, 0, 0], [false, false, false]) => "cont-no-crit-all-warm".into(),
        ([0, 0, 0], [true, true, true]) => "cont-no-crit-all-ice".into(),
        ([0, 0, 0], [false, true, false]) => "cont-no-crit-ice-continent-only".into(),
        ([0, 0, 0], [true, true, false]) => "cont-no-crit-north+continent-ice".into(),
        ([1, 0, 0], [true, false, false]) => "cont-one-crit-north-ocean".into(),
        ([0, 1, 0], [true, true, false]) => "cont-one-crit-continent".into(),
        ([0, 0, 1], [true, true, false]) => "cont-one-crit-south-ocean".into(),
        ([1, 0, 1], [true, false, false]) => "cont-two-crit-oceans".into(),
        ([1, 0, 1], [true, true, false]) => "cont-two-crit-oceans-ice-continent".into(),
        ([0, 0, 2], [true, true, false]) => "cont-two-crit-south-ocean".into(),
        ([1, 1, 0], [true, true, false]) => "cont-two-crit-continent+north".into(),
        _ => format!("cont-{k}crit-d{}{}{}-{states}", dist[0], dist[1], dist[2]),
    }
}

/// Expand (distribution, leading states) into a full-domain continent case.
fn continent_case(dist: [usize; 3], start_ice: [bool; 3]) -> CaseSpec {
    let mut landmarks = Vec::new();
    let mut sources = Vec::new();
    let surfaces = [Surface::Water, Surface::Land, Surface::Water];
    for (i, &surface) in surfaces.iter().enumerate() {
        let mut ice = start_ice[i];
        sources.push(branch(surface, ice));
        for _ in 0..dist[i] {
            landmarks.push(LandmarkKind::Crit(surface));
            ice = !ice;
            sources.push(branch(surface, ice));
        }
        if i == 0 {
            landmarks.push(LandmarkKind::Edge(EdgeId::L1));
        } else if i == 1 {
            landmarks.push(LandmarkKind::Edge(EdgeId::L2));
        }
    }
    CaseSpec {
        geometry: GeometryKind::Continent,
        landmarks,
        sources,
        right_end: RightEnd::Pole,
        name: continent_case_name(dist, start_ice),
    }
}

/// End state of an interval that starts in `start` and contains `n` crits.
fn end_state(start: bool, n: usize) -> bool {
    start ^ (n % 2 == 1)
}

/// A continent edge cannot separate warm land from icy ocean: that would
/// need T >= -T_c and T <= -1 at the same latitude.
fn edge_consistent(dist: [usize; 3], start_ice: [bool; 3]) -> bool {
    let ocean_north_end = end_state(start_ice[0], dist[0]);
    let land_start = start_ice[1];
    let land_end = end_state(start_ice[1], dist[1]);
    let ocean_south_start = start_ice[2];
    !(ocean_north_end && !land_start) && !(!land_end && ocean_south_start)
}

const W_ICE: SourceBranch = SourceBranch {
    surface: Surface::Water,
    ice: true,
};
const W_WARM: SourceBranch = SourceBranch {
    surface: Surface::Water,
    ice: false,
};
const L_ICE: SourceBranch = SourceBranch {
    surface: Surface::Land,
    ice: true,
};
const L_WARM: SourceBranch = SourceBranch {
    surface: Surface::Land,
    ice: false,
};

fn symmetric_truncated_cases() -> Vec<CaseSpec> {
    let four = |sources: Vec<SourceBranch>, name: &str| CaseSpec {
        geometry: GeometryKind::Continent,
        landmarks: vec![
            LandmarkKind::Crit(Surface::Water),
            LandmarkKind::Edge(EdgeId::L1),
            LandmarkKind::Crit(Surface::Land),
        ],
        sources,
        right_end: RightEnd::SymmetryPlane,
        name: name.into(),
    };
    let six = |sources: Vec<SourceBranch>, name: &str| CaseSpec {
        geometry: GeometryKind::Continent,
        landmarks: vec![
            LandmarkKind::Crit(Surface::Water),
            LandmarkKind::Edge(EdgeId::L1),
            LandmarkKind::Crit(Surface::Land),
            LandmarkKind::Crit(Surface::Land),
        ],
        sources,
        right_end: RightEnd::SymmetryPlane,
        name: name.into(),
    };
    vec![
        four(vec![W_ICE, W_WARM, L_ICE, L_WARM], "cont-sym4-edge-ice"),
        four(vec![W_ICE, W_WARM, L_WARM, L_ICE], "cont-sym4-equator-ice"),
        six(vec![W_ICE, W_WARM, L_WARM, L_ICE, L_WARM], "cont-sym6-center-ice"),
        six(vec![W_ICE, W_WARM, L_ICE, L_WARM, L_ICE], "cont-sym6-edge-ice"),
    ]
}

/// All cases attempted for a geometry. Aquaplanet states are the uniform
/// ones plus the polar-cap pair; continent states cover every
/// edge-consistent pattern with up to three critical latitudes plus the
/// symmetry-truncated four- and six-latitude states when epsilon = 0.
pub fn cases_for(config: &ContinentConfig) -> Vec<CaseSpec> {
    match config.kind {
        GeometryKind::Aquaplanet => vec![
            CaseSpec {
                geometry: GeometryKind::Aquaplanet,
                landmarks: vec![],
                sources: vec![W_WARM],
                right_end: RightEnd::Pole,
                name: "aqua-all-water".into(),
            },
            CaseSpec {
                geometry: GeometryKind::Aquaplanet,
                landmarks: vec![],
                sources: vec![W_ICE],
                right_end: RightEnd::Pole,
                name: "aqua-all-ice".into(),
            },
            CaseSpec {
                geometry: GeometryKind::Aquaplanet,
                landmarks: vec![
                    LandmarkKind::Crit(Surface::Water),
                    LandmarkKind::Crit(Surface::Water),
                ],
                sources: vec![W_ICE, W_WARM, W_ICE],
                right_end: RightEnd::Pole,
                name: "aqua-two-edges".into(),
            },
        ],
        GeometryKind::Continent => {
            let mut cases = Vec::new();
            for k in 0..=3usize {
                for n1 in 0..=k.min(2) {
                    for n2 in 0..=(k - n1).min(2) {
                        let n3 = k - n1 - n2;
                        if n3 > 2 {
                            continue;
                        }
                        let dist = [n1, n2, n3];
                        for bits in 0..8u8 {
                            let start_ice =
                                [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
                            if edge_consistent(dist, start_ice) {
                                cases.push(continent_case(dist, start_ice));
                            }
                        }
                    }
                }
            }
            if config.epsilon == 0.0 {
                cases.extend(symmetric_truncated_cases());
            }
            cases
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::continent_config;

    #[test]
    fn aquaplanet_two_edge_partition() {
        let config = ContinentConfig::aquaplanet();
        let cases = cases_for(&config);
        assert_eq!(cases.len(), 3);
        let two = cases.iter().find(|c| c.name == "aqua-two-edges").unwrap();
        let regions = two.regions(&config, &[0.8, 2.3]).unwrap();
        assert_eq!(regions.len(), 3);
        assert!(regions[0].source.ice && !regions[1].source.ice && regions[2].source.ice);
        assert_eq!(regions[0].lo, 0.0);
        assert!((regions[0].hi - 0.8).abs() < 1e-15);
        assert!((regions[2].lo - 2.3).abs() < 1e-15);
        assert_eq!(regions[2].hi, PI);
    }

    #[test]
    fn single_region_for_uniform_states() {
        let config = ContinentConfig::aquaplanet();
        let cases = cases_for(&config);
        let all_water = cases.iter().find(|c| c.name == "aqua-all-water").unwrap();
        let regions = all_water.regions(&config, &[]).unwrap();
        assert_eq!(regions.len(), 1);
        assert!(!regions[0].source.ice);
    }

    #[test]
    fn infeasible_theta_rejected() {
        let config = ContinentConfig::aquaplanet();
        let cases = cases_for(&config);
        let two = cases.iter().find(|c| c.name == "aqua-two-edges").unwrap();
        assert!(two.regions(&config, &[2.3, 0.8]).is_err()); // descending
        assert!(two.regions(&config, &[0.0, 2.3]).is_err()); // at pole
    }

    #[test]
    fn continent_catalogue_contains_named_patterns() {
        let config = continent_config(PI / 4.0, 0.1).unwrap();
        let cases = cases_for(&config);
        for name in [
            "cont-no-crit-all-warm",
            "cont-no-crit-all-ice",
            "cont-no-crit-ice-continent-only",
            "cont-no-crit-north+continent-ice",
            "cont-one-crit-north-ocean",
            "cont-one-crit-continent",
            "cont-one-crit-south-ocean",
            "cont-two-crit-oceans",
            "cont-two-crit-oceans-ice-continent",
            "cont-two-crit-south-ocean",
            "cont-two-crit-continent+north",
        ] {
            assert!(cases.iter().any(|c| c.name == name), "missing {name}");
        }
        // No symmetry-truncated cases off the symmetric configuration.
        assert!(cases.iter().all(|c| c.right_end == RightEnd::Pole));

        let sym = continent_config(PI / 4.0, 0.0).unwrap();
        let sym_cases = cases_for(&sym);
        assert!(sym_cases.iter().any(|c| c.name == "cont-sym4-edge-ice"));
        assert!(sym_cases.iter().any(|c| c.name == "cont-sym6-center-ice"));
        let four = sym_cases.iter().find(|c| c.name == "cont-sym4-edge-ice").unwrap();
        assert_eq!(four.full_crit_count(), 4);
        assert_eq!(four.crit_count(), 2);
        assert!((four.domain_end() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn paper_one_crit_continent_sources() {
        // Ice on the northern ocean and the continent edge, warm continent
        // interior and southern ocean: h2, h4, h3, h1.
        let config = continent_config(PI / 4.0, 0.1).unwrap();
        let cases = cases_for(&config);
        let c = cases.iter().find(|c| c.name == "cont-one-crit-continent").unwrap();
        assert_eq!(
            c.sources,
            vec![W_ICE, L_ICE, L_WARM, W_WARM]
        );
        let regions = c.regions(&config, &[1.5]).unwrap();
        assert_eq!(regions.len(), 4);
        assert!((regions[1].lo - config.theta_l1).abs() < 1e-15);
        assert!((regions[1].hi - 1.5).abs() < 1e-15);
    }

    #[test]
    fn edge_rule_prunes_impossible_states() {
        // Warm land next to icy ocean with no separating crit is impossible.
        assert!(!edge_consistent([0, 0, 0], [true, false, false]));
        assert!(!edge_consistent([0, 0, 0], [false, false, true]));
        assert!(edge_consistent([0, 0, 0], [true, true, false]));
    }

    #[test]
    fn crit_brackets_respect_fixed_landmarks() {
        let config = continent_config(PI / 4.0, 0.0).unwrap();
        let cases = cases_for(&config);
        let c = cases.iter().find(|c| c.name == "cont-two-crit-oceans").unwrap();
        assert_eq!(c.crit_bracket(0, &config), (0.0, config.theta_l1));
        assert_eq!(c.crit_bracket(1, &config), (config.theta_l2, PI));

        let six = cases.iter().find(|c| c.name == "cont-sym6-center-ice").unwrap();
        assert_eq!(six.crit_bracket(0, &config), (0.0, config.theta_l1));
        assert_eq!(six.crit_bracket(1, &config), (config.theta_l1, PI / 2.0));
        assert_eq!(six.crit_bracket(2, &config), (config.theta_l1, PI / 2.0));
    }
}
