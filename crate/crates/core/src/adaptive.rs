//! The solve → estimate → mark → refine loop, with Dörfler bulk marking and
//! a uniform-refinement comparison mode.

use std::time::Instant;

use crate::assembly::{build_global_system, Discretization};
use crate::error::{Error, Result};
use crate::estimator::{
    aggregate_indicators, compute_exact_errors, compute_local_estimators, global_estimates,
    AggregateRule, EstimatorKind, LocalEstimatorField,
};
use crate::mesh::{build_initial_mesh, refine_red_green, CoarseMesh, Diagonal};
use crate::mortar::MortarRule;
use crate::problems::ProblemSpec;
use crate::solver::{solve, SolutionFields};
use crate::space::SpaceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Adaptive,
    Uniform,
}

/// Driver configuration. `grid` overrides the problem's default initial
/// resolution when set.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveConfig {
    pub k: usize,
    pub theta: f64,
    pub mode: RunMode,
    pub estimator: EstimatorKind,
    pub max_levels: usize,
    pub max_dofs: usize,
    pub grid: Option<usize>,
    pub diagonal: Diagonal,
    pub mortar_rule: MortarRule,
    pub aggregate_rule: AggregateRule,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            k: 1,
            theta: 0.5,
            mode: RunMode::Adaptive,
            estimator: EstimatorKind::Eta2,
            max_levels: 40,
            max_dofs: 100_000,
            grid: None,
            diagonal: Diagonal::default(),
            mortar_rule: MortarRule::FinerSide,
            aggregate_rule: AggregateRule::Children,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_levels < 1 {
            return Err(Error::InvalidArgument("max_levels must be at least 1".into()));
        }
        if self.mode == RunMode::Adaptive && !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "theta = {} outside (0, 1) in adaptive mode",
                self.theta
            )));
        }
        SpaceConfig::new(self.k).map(|_| ())
    }
}

/// Per-level convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub level: usize,
    pub n_coarse: usize,
    pub n_fine: usize,
    pub n_dof: usize,
    pub err_l2: f64,
    pub err_energy: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eff1: f64,
    pub eff2: f64,
    pub n_marked: usize,
    pub wall_ms: u64,
}

/// Full run output: per-level records plus the last solved level's state
/// (for field and estimator dumps).
pub struct RunHistory {
    pub levels: Vec<LevelReport>,
    pub final_disc: Discretization,
    pub final_fields: SolutionFields,
    pub final_local: LocalEstimatorField,
}

/// A failed run, keeping the records of the completed levels.
#[derive(Debug)]
pub struct RunFailure {
    pub level: usize,
    pub partial: Vec<LevelReport>,
    pub source: Error,
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Error {
        Error::Solver {
            stage: format!("adaptive level {}", f.level),
            message: f.source.to_string(),
        }
    }
}

/// Minimal-cardinality Dörfler marking: the smallest set of coarse elements
/// whose squared indicators reach θ times the total, built from the
/// descending sort with ties broken toward smaller element ids.
pub fn doerfler_mark(xi_sq: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "Dörfler parameter {theta} outside [0, 1)"
        )));
    }
    let total: f64 = xi_sq.iter().sum();
    if theta == 0.0 || total <= 0.0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..xi_sq.len()).collect();
    order.sort_by(|&a, &b| xi_sq[b].total_cmp(&xi_sq[a]).then(a.cmp(&b)));
    let threshold = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for id in order {
        acc += xi_sq[id];
        marked.push(id);
        if acc >= threshold {
            break;
        }
    }
    marked.sort_unstable();
    Ok(marked)
}

/// Run the adaptive (or uniform) refinement loop.
pub fn run_loop(
    problem: &ProblemSpec,
    cfg: &AdaptiveConfig,
) -> std::result::Result<RunHistory, RunFailure> {
    let fail = |level: usize, partial: &[LevelReport], source: Error| RunFailure {
        level,
        partial: partial.to_vec(),
        source,
    };
    cfg.validate().map_err(|e| fail(0, &[], e))?;
    let grid = cfg.grid.unwrap_or(problem.default_grid);
    let grids = vec![grid; problem.partition.n_subdomains()];
    let mut coarse =
        build_initial_mesh(&problem.partition, &grids, cfg.diagonal).map_err(|e| fail(0, &[], e))?;

    let space = SpaceConfig::new(cfg.k).map_err(|e| fail(0, &[], e))?;
    let mut levels: Vec<LevelReport> = Vec::new();
    let mut last_state: Option<(Discretization, SolutionFields, LocalEstimatorField)> = None;

    for level in 0..cfg.max_levels {
        let t0 = Instant::now();
        let disc = Discretization::build(
            &problem.partition,
            &coarse,
            space,
            cfg.mortar_rule,
            &*problem.g,
        )
        .map_err(|e| fail(level, &levels, e))?;
        let n_dof = disc.dofs.n_fields();
        if level > 0 && n_dof > cfg.max_dofs {
            break;
        }
        let sys = build_global_system(&disc, &*problem.f, &problem.singular_points)
            .map_err(|e| fail(level, &levels, e))?;
        let fields = solve(&sys).map_err(|e| fail(level, &levels, e))?;
        let local = compute_local_estimators(&disc, &fields, &problem.partition.rho, &*problem.f)
            .map_err(|e| fail(level, &levels, e))?;
        let (eta1, eta2) = global_estimates(&local);
        let (err_l2, err_energy) = match &problem.exact {
            Some(exact) => compute_exact_errors(
                &disc,
                &fields,
                &*exact.u,
                &*exact.grad,
                &problem.partition.rho,
                &problem.singular_points,
            ),
            None => (f64::NAN, f64::NAN),
        };

        // marking for the next level
        let last_level = level + 1 >= cfg.max_levels;
        let marked: Vec<usize> = if last_level {
            Vec::new()
        } else {
            match cfg.mode {
                RunMode::Uniform => (0..disc.n_coarse_tris()).collect(),
                RunMode::Adaptive => {
                    let indicators =
                        aggregate_indicators(&local, cfg.estimator, &disc, cfg.aggregate_rule);
                    doerfler_mark(&indicators.xi_sq, cfg.theta)
                        .map_err(|e| fail(level, &levels, e))?
                }
            }
        };

        levels.push(LevelReport {
            level,
            n_coarse: disc.n_coarse_tris(),
            n_fine: disc.n_fine_tris(),
            n_dof,
            err_l2,
            err_energy,
            eta1,
            eta2,
            eff1: eta1 / err_l2,
            eff2: eta2 / err_energy,
            n_marked: marked.len(),
            wall_ms: t0.elapsed().as_millis() as u64,
        });
        let offsets: Vec<usize> = {
            let mut acc = 0;
            let mut v = Vec::with_capacity(coarse.len() + 1);
            for m in &coarse {
                v.push(acc);
                acc += m.n_tris();
            }
            v.push(acc);
            v
        };
        last_state = Some((disc, fields, local));
        if last_level || marked.is_empty() {
            break;
        }

        // refine per subdomain
        let mut next = Vec::with_capacity(coarse.len());
        for (s, mesh) in coarse.iter().enumerate() {
            let local_marks: Vec<usize> = marked
                .iter()
                .filter(|&&g| g >= offsets[s] && g < offsets[s + 1])
                .map(|&g| g - offsets[s])
                .collect();
            next.push(
                refine_red_green(mesh, &local_marks).map_err(|e| fail(level, &levels, e))?,
            );
        }
        coarse = next;
    }

    let (final_disc, final_fields, final_local) = last_state.ok_or_else(|| RunFailure {
        level: 0,
        partial: levels.clone(),
        source: Error::Internal("no level was solved".into()),
    })?;
    Ok(RunHistory { levels, final_disc, final_fields, final_local })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::SubdomainPartition;
    use crate::problems::{builtin_problems, ExactSolution, ProblemSpec};
    use std::sync::Arc;

    fn patch_problem() -> ProblemSpec {
        ProblemSpec {
            name: "patch".into(),
            partition: SubdomainPartition::two_halves([1.0, 1.0]).unwrap(),
            default_grid: 1,
            f: Arc::new(|_| 0.0),
            g: Arc::new(|x| x[0]),
            exact: Some(ExactSolution {
                u: Arc::new(|x| x[0]),
                grad: Arc::new(|_| [1.0, 0.0]),
            }),
            singular_points: vec![],
        }
    }

    #[test]
    fn doerfler_examples() {
        // brute-force confirmed: {4} reaches 0.4·10
        let marked = doerfler_mark(&[4.0, 3.0, 2.0, 1.0], 0.4).unwrap();
        assert_eq!(marked, vec![0]);
        // θ = 0 marks nothing
        assert!(doerfler_mark(&[4.0, 3.0], 0.0).unwrap().is_empty());
        // ties broken toward smaller ids: prefix sums 1,2,3 vs 2.4
        let marked = doerfler_mark(&[1.0, 1.0, 1.0, 1.0], 0.6).unwrap();
        assert_eq!(marked, vec![0, 1, 2]);
        // θ outside range rejected
        assert!(doerfler_mark(&[1.0], 1.0).is_err());
    }

    #[test]
    fn doerfler_matches_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let n = rng.gen_range(1..=10);
            let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            for theta in [0.3, 0.5, 0.7] {
                let marked = doerfler_mark(&xi, theta).unwrap();
                let total: f64 = xi.iter().sum();
                let sum: f64 = marked.iter().map(|&i| xi[i]).sum();
                assert!(sum >= theta * total);
                // exhaustive minimal cardinality
                let mut best = n;
                for mask in 0u32..(1 << n) {
                    let s: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| xi[i]).sum();
                    if s >= theta * total {
                        best = best.min(mask.count_ones() as usize);
                    }
                }
                assert_eq!(marked.len(), best, "xi={xi:?} theta={theta}");
            }
        }
    }

    #[test]
    fn single_level_run_leaves_mesh_alone() {
        let problem = patch_problem();
        let cfg = AdaptiveConfig { max_levels: 1, ..Default::default() };
        let history = run_loop(&problem, &cfg).unwrap();
        assert_eq!(history.levels.len(), 1);
        assert_eq!(history.final_disc.coarse[0].level, 0);
        assert_eq!(history.levels[0].n_marked, 0);
    }

    #[test]
    fn uniform_patch_run_stays_exact() {
        let problem = patch_problem();
        let cfg = AdaptiveConfig {
            mode: RunMode::Uniform,
            max_levels: 3,
            ..Default::default()
        };
        let history = run_loop(&problem, &cfg).unwrap();
        assert_eq!(history.levels.len(), 3);
        for (i, report) in history.levels.iter().enumerate() {
            assert!(report.err_l2 <= 1e-9, "level {i}: {}", report.err_l2);
            assert!(report.err_energy <= 1e-9);
            assert!(report.eta1 <= 1e-8);
            assert!(report.eta2 <= 1e-8);
            if i > 0 {
                // uniform refinement quadruples the coarse count
                assert_eq!(report.n_coarse, 4 * history.levels[i - 1].n_coarse);
                assert!(report.n_dof > history.levels[i - 1].n_dof);
            }
        }
    }

    #[test]
    fn adaptive_run_on_smooth_problem_shrinks_error() {
        let problem = builtin_problems("example1").unwrap();
        let cfg = AdaptiveConfig {
            estimator: EstimatorKind::Eta2,
            max_levels: 4,
            max_dofs: 30_000,
            ..Default::default()
        };
        let history = run_loop(&problem, &cfg).unwrap();
        assert!(history.levels.len() >= 2);
        let first = &history.levels[0];
        let last = &history.levels[history.levels.len() - 1];
        assert!(last.err_energy < first.err_energy);
        assert!(last.eta2 < first.eta2);
        // dof counts strictly increase
        for w in history.levels.windows(2) {
            assert!(w[1].n_dof > w[0].n_dof);
        }
    }

    #[test]
    fn determinism_of_histories() {
        let problem = builtin_problems("example1").unwrap();
        let cfg = AdaptiveConfig { max_levels: 3, ..Default::default() };
        let h1 = run_loop(&problem, &cfg).unwrap();
        let h2 = run_loop(&problem, &cfg).unwrap();
        for (a, b) in h1.levels.iter().zip(&h2.levels) {
            assert_eq!(a.n_coarse, b.n_coarse);
            assert_eq!(a.n_dof, b.n_dof);
            assert_eq!(a.n_marked, b.n_marked);
            assert_eq!(a.err_l2.to_bits(), b.err_l2.to_bits());
            assert_eq!(a.eta1.to_bits(), b.eta1.to_bits());
            assert_eq!(a.eta2.to_bits(), b.eta2.to_bits());
        }
    }
}
