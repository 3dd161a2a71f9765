//! Solve, estimate, mark, refine.

use std::time::Instant;

use crate::assembly::{assemble_inhomogeneous, assemble_load, assemble_stiffness, impose_boundary, BoundaryCondition};
use crate::error::{Error, Result};
use crate::estimator::{
    error_norm, estimate, lambda_gap, prolongate, q1_from_jumps, q2, BoundaryData, Entity, EstimatorReport, Truth,
};
use crate::mesh::Mesh;
use crate::problems::{BoundaryMode, ProblemSpec};
use crate::space::DofMap;
use crate::vi_solver::{complementarity_report, pdas, ComplementarityReport, DiscreteSolution, PdasOptions, WarmStart};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineMode {
    Adaptive,
    Uniform,
}

#[derive(Debug, Clone)]
pub struct AdaptConfig {
    pub degree: usize,
    pub sigma: f64,
    pub theta: f64,
    /// Levels are solved while their dof count does not exceed this.
    pub max_dof: usize,
    pub mode: RefineMode,
    pub pdas: PdasOptions,
    /// Solve once more on a uniform refinement of the last mesh to measure
    /// errors when no exact solution is known.
    pub reference_error: bool,
    /// Keep every level's mesh and solution in the result.
    pub keep_levels: bool,
}

impl AdaptConfig {
    pub fn new(degree: usize, sigma: f64, mode: RefineMode, max_dof: usize) -> AdaptConfig {
        AdaptConfig {
            degree,
            sigma,
            theta: 0.5,
            max_dof,
            mode,
            pdas: PdasOptions::default(),
            reference_error: false,
            keep_levels: false,
        }
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub level: usize,
    pub ndof: usize,
    pub h_max: f64,
    pub eta: f64,
    pub err_h: Option<f64>,
    pub q1: f64,
    pub q2: f64,
    pub lambda_mass: f64,
    /// Gap to the previous level's multiplier mass.
    pub lambda_gap: Option<f64>,
    pub pdas_iters: usize,
    pub wall_ms: f64,
}

/// Discrete optimality diagnostics of one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub complementarity: ComplementarityReport,
    /// `||(A u - b - lambda)|| / rhs_scale` over the free dofs.
    pub stationarity: f64,
    pub b_norm: f64,
    /// `max(||b||, ||lambda||)`; the load vanishes when the obstacle alone
    /// drives the solution.
    pub rhs_scale: f64,
    pub u_norm: f64,
    /// `max |psi|` over constrained vertices, the scale of feasibility.
    pub psi_scale: f64,
    /// `||A u - b - lambda|| / (|| |A| |u| || + ||b|| + ||lambda||)`, the
    /// residual measured against its roundoff floor.
    pub backward_error: f64,
}

/// Everything computed on one mesh.
#[derive(Debug, Clone)]
pub struct LevelSolution {
    pub mesh: Mesh,
    pub dofmap: DofMap,
    /// Full coefficient vector, boundary values included.
    pub u: Vec<f64>,
    /// Multiplier per mesh vertex (zero on the boundary).
    pub vertex_lambda: Vec<f64>,
    pub solution: DiscreteSolution,
    pub report: EstimatorReport,
    pub q1: f64,
    pub q2: f64,
    pub kkt: KktReport,
}

#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub history: Vec<LevelRecord>,
    pub kkt: Vec<KktReport>,
    /// All levels when `keep_levels` is set, otherwise only the last.
    pub levels: Vec<LevelSolution>,
}

impl AdaptiveRun {
    pub fn last(&self) -> &LevelSolution {
        self.levels.last().expect("at least one level is solved")
    }
}

/// Dörfler marking: the shortest prefix of the indicators sorted by
/// decreasing value (ties by entity) whose sum reaches `theta` times the
/// total. `values` are squared indicators.
pub fn dorfler_mark(values: &[(Entity, f64)], theta: f64) -> Result<Vec<Entity>> {
    if values.is_empty() {
        return Err(Error::EmptyIndicators);
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Config(vec![format!("theta must lie in (0, 1), got {theta}")]));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let total: f64 = sorted.iter().map(|v| v.1).sum();
    let goal = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for (e, v) in sorted {
        if acc >= goal || v <= 0.0 {
            break;
        }
        acc += v;
        marked.push(e);
    }
    Ok(marked)
}

/// Least-squares slope of `log(values)` against `log(ndofs)` over the final
/// `window` entries.
pub fn fit_rate(ndofs: &[usize], values: &[f64], window: usize) -> Result<f64> {
    let have = ndofs.len().min(values.len());
    if window < 3 || have < window {
        return Err(Error::InsufficientLevels {
            needed: window.max(3),
            have,
        });
    }
    let xs: Vec<f64> = ndofs[have - window..have].iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values[have - window..have].iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / window as f64;
    let my = ys.iter().sum::<f64>() / window as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Assembles and solves the obstacle problem on one mesh, then evaluates
/// the estimator and monitors. `warm` is the previous level on a coarser
/// nested mesh.
pub fn solve_level(
    problem: &ProblemSpec,
    mesh: Mesh,
    degree: usize,
    sigma: f64,
    warm: Option<&LevelSolution>,
    opts: &PdasOptions,
) -> Result<LevelSolution> {
    let dofmap = DofMap::new(&mesh, degree)?;
    let a = assemble_stiffness(&mesh, &dofmap, sigma);
    let mut b = assemble_load(&mesh, &dofmap, problem.load.as_ref());
    let exact = problem.exact.as_deref();
    let g;
    let bc = match (problem.boundary, exact) {
        (BoundaryMode::Interpolated, Some(u)) => {
            let extra = assemble_inhomogeneous(&mesh, &dofmap, u, sigma);
            for (bi, ei) in b.iter_mut().zip(&extra) {
                *bi += ei;
            }
            g = dofmap.interpolate(|p| u.value(p));
            BoundaryCondition::Interpolated(&g)
        }
        _ => BoundaryCondition::Homogeneous,
    };
    let red = impose_boundary(&a, &b, &dofmap, bc);
    let vertices = dofmap.interior_vertices().to_vec();
    let constrained: Vec<usize> = vertices.iter().map(|&v| red.full_to_free[v]).collect();
    let psi: Vec<f64> = vertices.iter().map(|&v| (problem.obstacle)(mesh.vertices()[v])).collect();

    let start = match warm {
        Some(prev) => {
            let full = prolongate(&prev.mesh, &prev.dofmap, &prev.u, &mesh, &dofmap)?;
            let lambda = vertices
                .iter()
                .map(|&v| prev.vertex_lambda.get(v).copied().unwrap_or(0.0))
                .collect();
            Some(WarmStart {
                x: red.restrict(&full),
                lambda,
            })
        }
        None => None,
    };
    let sol = pdas(&red.matrix, &red.rhs, &psi, &constrained, start.as_ref(), opts)?;
    let u = red.expand(&sol.x);
    let mut vertex_lambda = vec![0.0; mesh.num_vertices()];
    for (j, &v) in vertices.iter().enumerate() {
        vertex_lambda[v] = sol.lambda[j];
    }

    let ax = red.matrix.matvec(&sol.x);
    let mut station = ax.iter().zip(&red.rhs).map(|(x, y)| x - y).collect::<Vec<_>>();
    for (j, &p) in constrained.iter().enumerate() {
        station[p] -= sol.lambda[j];
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let b_norm = norm(&red.rhs);
    let rhs_scale = b_norm.max(norm(&sol.lambda));
    let abs_ax: Vec<f64> = (0..red.matrix.dim())
        .map(|i| red.matrix.row(i).map(|(j, v)| (v * sol.x[j]).abs()).sum())
        .collect();
    let floor = norm(&abs_ax) + b_norm + norm(&sol.lambda);
    let kkt = KktReport {
        complementarity: complementarity_report(&sol, &psi),
        stationarity: norm(&station) / if rhs_scale > 0.0 { rhs_scale } else { 1.0 },
        b_norm,
        rhs_scale,
        u_norm: norm(&sol.x),
        psi_scale: psi.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        backward_error: norm(&station) / if floor > 0.0 { floor } else { 1.0 },
    };

    let bdata = match (problem.boundary, exact) {
        (BoundaryMode::Interpolated, Some(u)) => BoundaryData::Exact(u),
        _ => BoundaryData::Homogeneous,
    };
    let report = estimate(&mesh, &dofmap, &u, problem.load.as_ref(), sigma, bdata)?;
    let jumps: Vec<f64> = (0..mesh.num_edges())
        .map(|e| report.eta_e1[e] * mesh.edge_length(e).sqrt() / sigma)
        .collect();
    let q1 = q1_from_jumps(&mesh, &jumps);
    let q2 = q2(&mesh, &dofmap, &u, problem.obstacle.as_ref())?;
    Ok(LevelSolution {
        mesh,
        dofmap,
        u,
        vertex_lambda,
        solution: sol,
        report,
        q1,
        q2,
        kkt,
    })
}

/// Runs the adaptive (or uniform) loop from the initial mesh of the
/// problem's domain.
pub fn adaptive_solve(problem: &ProblemSpec, cfg: &AdaptConfig) -> Result<AdaptiveRun> {
    if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
        return Err(Error::Config(vec![format!("theta must lie in (0, 1), got {}", cfg.theta)]));
    }
    let mut mesh = Mesh::build_initial(problem.domain);
    let mut history: Vec<LevelRecord> = Vec::new();
    let mut kkt = Vec::new();
    let mut levels: Vec<LevelSolution> = Vec::new();
    loop {
        let ndof = DofMap::new(&mesh, cfg.degree)?.num_dofs();
        if let Some(prev) = history.last() {
            if ndof <= prev.ndof {
                return Err(Error::NonIncreasingDofs(history.len()));
            }
            if ndof > cfg.max_dof {
                break;
            }
        }
        let start = Instant::now();
        let level = solve_level(problem, mesh.clone(), cfg.degree, cfg.sigma, levels.last(), &cfg.pdas)?;
        let lam = level.solution.lambda_mass();
        let err_h = match problem.exact.as_deref() {
            Some(u) => Some(error_norm(&level.mesh, &level.dofmap, &level.u, Truth::Exact(u), cfg.sigma)?),
            None => None,
        };
        let next = match cfg.mode {
            RefineMode::Uniform => mesh.uniform_refine(),
            RefineMode::Adaptive => {
                let marked = dorfler_mark(&level.report.indicators(), cfg.theta)?;
                let tris: Vec<usize> = marked.iter().filter_map(|e| if let Entity::Triangle(t) = e { Some(*t) } else { None }).collect();
                let edges: Vec<usize> = marked.iter().filter_map(|e| if let Entity::Edge(t) = e { Some(*t) } else { None }).collect();
                mesh.refine(&tris, &edges)?
            }
        };
        history.push(LevelRecord {
            level: history.len(),
            ndof,
            h_max: level.mesh.h_max(),
            eta: level.report.total,
            err_h,
            q1: level.q1,
            q2: level.q2,
            lambda_mass: lam,
            lambda_gap: history.last().map(|p| lambda_gap(p.lambda_mass, lam)),
            pdas_iters: level.solution.iterations,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        kkt.push(level.kkt);
        if !cfg.keep_levels {
            levels.clear();
        }
        levels.push(level);
        if ndof > cfg.max_dof {
            break;
        }
        mesh = next;
    }

    if cfg.reference_error && problem.exact.is_none() {
        let last = levels.last().expect("one level solved");
        let fine = last.mesh.uniform_refine();
        let reference = solve_level(problem, fine, cfg.degree, cfg.sigma, Some(last), &cfg.pdas)?;
        let truth = Truth::Reference {
            mesh: &reference.mesh,
            dofmap: &reference.dofmap,
            u: &reference.u,
        };
        if cfg.keep_levels {
            for (rec, lvl) in history.iter_mut().zip(&levels) {
                rec.err_h = Some(error_norm(&lvl.mesh, &lvl.dofmap, &lvl.u, truth, cfg.sigma)?);
            }
        } else if let Some(rec) = history.last_mut() {
            rec.err_h = Some(error_norm(&last.mesh, &last.dofmap, &last.u, truth, cfg.sigma)?);
        }
    }
    Ok(AdaptiveRun { history, kkt, levels })
}
