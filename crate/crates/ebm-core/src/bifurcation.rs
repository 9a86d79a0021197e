//! Sweeps over the solar constant: equilibrium enumeration per Q with warm
//! starts, stability classification, branch assembly and fold detection.

use serde::Serialize;

use crate::bim::{enumerate_equilibria, EnumerateOpts, StationarySolution, WarmSeeds};
use crate::error::Result;
use crate::fdm::Grid;
use crate::greenfn::GreenKernel;
use crate::params::{nondimensionalize, ContinentConfig, PhysicalParams};
use crate::stability::{classify_profile_fast, slope_classify, Verdict, TOL_ZERO};

/// One equilibrium of the diagram.
#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub q: f64,
    /// Area-weighted mean temperature in degrees C.
    pub t_mean_c: f64,
    pub case_name: String,
    pub theta_c: Vec<f64>,
    /// Computational-domain critical latitudes (warm-start seeds).
    pub theta_c_reduced: Vec<f64>,
    pub n_crit: usize,
    pub stability: Verdict,
    pub max_real_eig: f64,
    pub residual: f64,
}

/// A chained branch: indices into `Diagram::points`, ordered along the
/// curve.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub id: usize,
    pub case_name: String,
    pub point_indices: Vec<usize>,
    /// Set when the greedy chaining saw two candidates within the bound.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fold {
    pub branch_id: usize,
    pub q_fold: f64,
    pub t_mean_fold: f64,
}

/// Sweep metadata and results.
#[derive(Debug, Clone, Serialize)]
pub struct Diagram {
    pub config: ContinentConfig,
    pub q_min: f64,
    pub q_max: f64,
    pub n_steps: usize,
    pub seed_density: usize,
    pub stability_grid_n: usize,
    pub points: Vec<BranchPoint>,
    pub branches: Vec<Branch>,
    pub folds: Vec<Fold>,
}

/// Area-weighted mean dimensional temperature of a solution (degrees C);
/// weight sin(theta)/2 integrates to one on the sphere.
pub fn mean_temperature(sol: &StationarySolution, p: &PhysicalParams) -> f64 {
    p.t_s * sol.t_mean
}

#[derive(Debug, Clone)]
pub struct SweepOpts {
    pub enumerate: EnumerateOpts,
    /// Grid size for the eigen classification of each equilibrium.
    pub stability_grid_n: usize,
}

impl Default for SweepOpts {
    fn default() -> Self {
        Self {
            enumerate: EnumerateOpts::default(),
            // Fine enough to resolve the sigma = 50 albedo ramp under the
            // steepest critical-latitude crossings.
            stability_grid_n: 1600,
        }
    }
}

/// Interpolate a solution profile onto a uniform grid (the profile always
/// contains the landmarks, so linear interpolation keeps the kinks).
pub fn profile_on_grid(sol: &StationarySolution, grid: &Grid) -> Vec<f64> {
    grid.theta
        .iter()
        .map(|&th| {
            let i = sol
                .profile
                .partition_point(|&(x, _)| x < th)
                .clamp(1, sol.profile.len() - 1);
            let (x0, y0) = sol.profile[i - 1];
            let (x1, y1) = sol.profile[i];
            if x1 == x0 {
                y0
            } else {
                y0 + (y1 - y0) * (th - x0) / (x1 - x0)
            }
        })
        .collect()
}

/// Classify one solution through the perturbation eigenproblem on a fresh
/// grid: verdict from the rightmost eigenvalue of H, evaluated by the
/// banded solver so that layer-resolving grids stay affordable.
pub fn classify_solution(
    sol: &StationarySolution,
    p: &PhysicalParams,
    config: &ContinentConfig,
    grid_n: usize,
) -> Result<(Verdict, f64)> {
    let dp = nondimensionalize(p, sol.q)?;
    let grid = Grid::new(grid_n)?;
    let t0 = profile_on_grid(sol, &grid);
    classify_profile_fast(&t0, &grid, config, &dp, p, TOL_ZERO)
}

/// Run the sweep: per Q, multi-start enumeration (warm-started from the
/// previous Q's roots) plus eigen classification; then branch assembly and
/// fold detection. Per-Q failures are skipped, not fatal.
pub fn sweep(
    p: &PhysicalParams,
    config: &ContinentConfig,
    q_min: f64,
    q_max: f64,
    n_steps: usize,
    opts: &SweepOpts,
) -> Result<Diagram> {
    assert!(q_min < q_max && n_steps >= 2);
    let beta = nondimensionalize(p, q_min)?.beta;
    let kernel = GreenKernel::new(beta)?;
    let mut points: Vec<BranchPoint> = Vec::new();
    let mut warm: WarmSeeds = Vec::new();
    for i in 0..=n_steps {
        let q = q_min + (q_max - q_min) * i as f64 / n_steps as f64;
        let sols = match enumerate_equilibria(p, config, q, &kernel, &opts.enumerate, &warm) {
            Ok(s) => s,
            Err(_) => continue,
        };
        warm = sols
            .iter()
            .map(|s| (s.case_name.clone(), s.theta_c_reduced.clone()))
            .collect();
        for sol in &sols {
            let (stability, max_eig) =
                match classify_solution(sol, p, config, opts.stability_grid_n) {
                    Ok(v) => v,
                    Err(_) => (Verdict::Marginal, f64::NAN),
                };
            points.push(BranchPoint {
                q,
                t_mean_c: mean_temperature(sol, p),
                case_name: sol.case_name.clone(),
                theta_c: sol.theta_c.clone(),
                theta_c_reduced: sol.theta_c_reduced.clone(),
                n_crit: sol.theta_c.len(),
                stability,
                max_real_eig: max_eig,
                residual: sol.residual_norm,
            });
        }
    }
    points.sort_by(|a, b| {
        a.case_name
            .cmp(&b.case_name)
            .then(a.q.partial_cmp(&b.q).unwrap())
            .then(a.t_mean_c.partial_cmp(&b.t_mean_c).unwrap())
    });
    let step = (q_max - q_min) / n_steps as f64;
    let branches = assemble_branches(&points, step);
    let folds = branches
        .iter()
        .flat_map(|b| detect_folds(b, &points))
        .collect();
    Ok(Diagram {
        config: *config,
        q_min,
        q_max,
        n_steps,
        seed_density: opts.enumerate.seed_density,
        stability_grid_n: opts.stability_grid_n,
        points,
        branches,
        folds,
    })
}

fn scaled_delta(a: &BranchPoint, b: &BranchPoint, step: f64) -> Vec<f64> {
    let sq = step.max(1e-9);
    let st = 4.0;
    let sth = 0.12;
    let mut v = vec![(b.q - a.q) / sq, (b.t_mean_c - a.t_mean_c) / st];
    for (x, y) in a.theta_c_reduced.iter().zip(&b.theta_c_reduced) {
        v.push((y - x) / sth);
    }
    v
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn chain_distance(a: &BranchPoint, b: &BranchPoint, step: f64) -> f64 {
    norm(&scaled_delta(a, b, step))
}

/// Distance weighted by how well the candidate continues the chain's
/// current heading: straight continuation is favoured, doubling back is
/// penalised.
fn effective_distance(prev: Option<&BranchPoint>, end: &BranchPoint, cand: &BranchPoint, step: f64) -> f64 {
    let v = scaled_delta(end, cand, step);
    let d = norm(&v);
    match prev {
        None => d,
        Some(p) => {
            let u = scaled_delta(p, end, step);
            let nu = norm(&u);
            if nu < 1e-12 || d < 1e-12 {
                return d;
            }
            let cos = u
                .iter()
                .zip(&v)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / (nu * d);
            d * (1.25 - 0.75 * cos)
        }
    }
}

/// Greedy nearest-neighbour chaining of same-case points into branches.
pub fn assemble_branches(points: &[BranchPoint], step: f64) -> Vec<Branch> {
    let bound = 1.8;
    let mut case_names: Vec<&str> = points.iter().map(|p| p.case_name.as_str()).collect();
    case_names.sort();
    case_names.dedup();
    let mut branches = Vec::new();
    for name in case_names {
        let idx: Vec<usize> = (0..points.len())
            .filter(|&i| points[i].case_name == name)
            .collect();
        let mut used = vec![false; idx.len()];
        loop {
            // Seed the chain with the unused point of smallest (q, t).
            let start = match (0..idx.len())
                .filter(|&i| !used[i])
                .min_by(|&a, &b| {
                    let (pa, pb) = (&points[idx[a]], &points[idx[b]]);
                    (pa.q, pa.t_mean_c)
                        .partial_cmp(&(pb.q, pb.t_mean_c))
                        .unwrap()
                }) {
                Some(s) => s,
                None => break,
            };
            used[start] = true;
            let mut chain = std::collections::VecDeque::new();
            chain.push_back(start);
            let mut ambiguous = false;
            // Extend at the tail, then at the head.
            for head in [false, true] {
                loop {
                    let (end, prev) = if head {
                        let mut it = chain.iter();
                        let end = *it.next().unwrap();
                        (end, it.next().copied())
                    } else {
                        let mut it = chain.iter().rev();
                        let end = *it.next().unwrap();
                        (end, it.next().copied())
                    };
                    let prev_pt = prev.map(|i| &points[idx[i]]);
                    let mut candidates: Vec<(f64, f64, usize)> = (0..idx.len())
                        .filter(|&i| !used[i])
                        .map(|i| {
                            let raw = chain_distance(&points[idx[end]], &points[idx[i]], step);
                            let eff =
                                effective_distance(prev_pt, &points[idx[end]], &points[idx[i]], step);
                            (eff, raw, i)
                        })
                        .filter(|&(_, raw, _)| raw <= bound)
                        .collect();
                    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                    match candidates.first() {
                        Some(&(_, _, next)) => {
                            if candidates.len() > 1 && candidates[1].1 <= 0.7 * bound {
                                ambiguous = true;
                            }
                            used[next] = true;
                            if head {
                                chain.push_front(next);
                            } else {
                                chain.push_back(next);
                            }
                        }
                        None => break,
                    }
                }
            }
            branches.push(Branch {
                id: 0,
                case_name: name.to_string(),
                point_indices: chain.into_iter().map(|i| idx[i]).collect(),
                ambiguous,
            });
        }
    }
    branches.sort_by(|a, b| {
        a.case_name.cmp(&b.case_name).then_with(|| {
            points[a.point_indices[0]]
                .q
                .partial_cmp(&points[b.point_indices[0]].q)
                .unwrap()
        })
    });
    for (i, b) in branches.iter_mut().enumerate() {
        b.id = i;
    }
    branches
}

/// Folds: sign changes of delta-Q along the ordered branch; the fold Q is
/// refined by a three-point parabolic fit.
pub fn detect_folds(branch: &Branch, points: &[BranchPoint]) -> Vec<Fold> {
    let idx = &branch.point_indices;
    if idx.len() < 3 {
        return Vec::new();
    }
    let q_at = |w: usize| points[idx[w]].q;
    let t_at = |w: usize| points[idx[w]].t_mean_c;
    let mut folds = Vec::new();
    // Walk along the chain tracking the last nonzero direction of Q; a
    // reversal marks a fold (zero steps come from same-Q point pairs that
    // straddle the turning point).
    let mut last_dir = 0i32;
    for w in 0..idx.len() - 1 {
        let d = q_at(w + 1) - q_at(w);
        if d.abs() < 1e-12 {
            continue;
        }
        let dir = if d > 0.0 { 1 } else { -1 };
        if last_dir != 0 && dir != last_dir && w >= 1 {
            // Parabola through the reversal neighbourhood (-1, 0, 1) ->
            // chain indices (w-1, w, w+1).
            let (q0, q1, q2) = (q_at(w - 1), q_at(w), q_at(w + 1));
            let a = 0.5 * (q0 + q2) - q1;
            let b = 0.5 * (q2 - q0);
            let (q_fold, s_star) = if a.abs() > 1e-12 {
                let s = (-b / (2.0 * a)).clamp(-1.0, 1.0);
                (q1 + b * s + a * s * s, s)
            } else {
                (q1, 0.0)
            };
            let (t0, t1, t2) = (t_at(w - 1), t_at(w), t_at(w + 1));
            let ta = 0.5 * (t0 + t2) - t1;
            let tb = 0.5 * (t2 - t0);
            let t_fold = t1 + tb * s_star + ta * s_star * s_star;
            folds.push(Fold {
                branch_id: branch.id,
                q_fold,
                t_mean_fold: t_fold,
            });
        }
        last_dir = dir;
    }
    folds
}

/// Agreement between the eigen verdicts and the slope-stability theorem
/// over every branch: (agreeing points, comparable points). Marginal
/// verdicts on either side are excluded.
pub fn cross_validation(diagram: &Diagram) -> (usize, usize) {
    let mut agree = 0usize;
    let mut total = 0usize;
    for branch in &diagram.branches {
        if branch.point_indices.len() < 3 {
            continue;
        }
        let pts: Vec<(f64, f64)> = branch
            .point_indices
            .iter()
            .map(|&i| (diagram.points[i].q, diagram.points[i].t_mean_c))
            .collect();
        let Ok(slope_verdicts) = slope_classify(&pts, 5e-3) else {
            continue;
        };
        for (k, &i) in branch.point_indices.iter().enumerate() {
            let eigen = diagram.points[i].stability;
            let slope = slope_verdicts[k];
            if eigen == Verdict::Marginal || slope == Verdict::Marginal {
                continue;
            }
            total += 1;
            if eigen == slope {
                agree += 1;
            }
        }
    }
    (agree, total)
}

/// Largest number of coexisting equilibria at any swept Q.
pub fn max_coexisting(diagram: &Diagram) -> (usize, f64) {
    use std::collections::BTreeMap;
    let mut by_q: BTreeMap<u64, usize> = BTreeMap::new();
    for pt in &diagram.points {
        *by_q.entry(pt.q.to_bits()).or_insert(0) += 1;
    }
    by_q.into_iter()
        .map(|(qb, n)| (n, f64::from_bits(qb)))
        .max_by(|a, b| a.0.cmp(&b.0))
        .unwrap_or((0, f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mk_point(q: f64, t: f64, case: &str) -> BranchPoint {
        BranchPoint {
            q,
            t_mean_c: t,
            case_name: case.into(),
            theta_c: vec![],
            theta_c_reduced: vec![],
            n_crit: 0,
            stability: Verdict::Stable,
            max_real_eig: -1.0,
            residual: 0.0,
        }
    }

    #[test]
    fn monotone_points_form_one_branch_without_folds() {
        let points: Vec<BranchPoint> = (0..20)
            .map(|i| mk_point(240.0 + i as f64, -10.0 + i as f64, "case-a"))
            .collect();
        let branches = assemble_branches(&points, 1.0);
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].point_indices.len(), 20);
        assert!(detect_folds(&branches[0], &points).is_empty());
    }

    #[test]
    fn s_curve_yields_two_folds() {
        // Q goes up, folds back, then up again: two turning points.
        let mut points = Vec::new();
        for i in 0..10 {
            points.push(mk_point(240.0 + i as f64, i as f64, "case-a"));
        }
        for i in 0..5 {
            points.push(mk_point(249.0 - i as f64, 10.0 + i as f64, "case-a"));
        }
        for i in 0..10 {
            points.push(mk_point(245.0 + i as f64, 15.0 + i as f64, "case-a"));
        }
        let branches = assemble_branches(&points, 1.0);
        assert_eq!(branches.len(), 1, "chained into {} branches", branches.len());
        let folds = detect_folds(&branches[0], &points);
        assert_eq!(folds.len(), 2, "folds: {folds:?}");
        assert!((folds[0].q_fold - 249.5).abs() < 1.0);
        assert!((folds[1].q_fold - 244.5).abs() < 1.0);
    }

    #[test]
    fn separate_cases_never_chain() {
        let mut points: Vec<BranchPoint> = (0..5)
            .map(|i| mk_point(240.0 + i as f64, 0.0, "case-a"))
            .collect();
        points.extend((0..5).map(|i| mk_point(240.0 + i as f64, 0.1, "case-b")));
        let branches = assemble_branches(&points, 1.0);
        assert_eq!(branches.len(), 2);
    }
}
