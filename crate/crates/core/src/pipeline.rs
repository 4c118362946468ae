//! End-to-end synthesis: pick an encoding, sweep the horizon, solve, extract
//! and verify the result with the oracle.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{
    build_cltl_problem, build_cont_problem, build_robust_problem, decompose_flows_with,
    extract_continuous, extract_trajectories, ContinuousOptions, ContinuousTrajectory, EncodeError,
    Encoded, TieBreak,
};
use crate::formula::{check_fragment, OuterFormula};
use crate::ilp::{export_lp, IlpError, ModelStats, Solution, SolveStatus};
use crate::oracle::{
    check_robust, collision_violations, eval_outer, CollectiveExecution, Counterexample, RobustBudget,
    Verdict, VerdictStatus,
};
use crate::solver::{solve_bnb_with_stats, solve_external, SearchStats, SolverConfig, SolverError};
use crate::system::{CollisionMode, ContinuousSystem, LoadedModel, MultiRobotInstance, SystemError};
use crate::trajectory::{LabeledLasso, LassoTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Aggregate counts when the formula is cLTL, robots are identical, τ = 0
    /// and collisions are off; per-robot otherwise.
    #[default]
    Auto,
    CltlPlus,
    Cltl,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Bundled,
    /// Shell command with `{lp}` and `{sol}` placeholders.
    External { cmd: String, workdir: PathBuf },
}

#[derive(Debug, Clone)]
pub struct SynthRequest {
    pub engine: Engine,
    pub h_min: usize,
    pub h_max: usize,
    pub tau: usize,
    pub backend: Backend,
    pub solver: SolverConfig,
    /// Write the model of the last horizon tried here.
    pub export_lp: Option<PathBuf>,
    pub check: RobustBudget,
    pub eps: f64,
}

impl SynthRequest {
    pub fn new(h: usize, tau: usize) -> Self {
        SynthRequest {
            engine: Engine::Auto,
            h_min: h,
            h_max: h,
            tau,
            backend: Backend::Bundled,
            solver: SolverConfig::default(),
            export_lp: None,
            check: RobustBudget::new(h + tau + 1),
            eps: ContinuousOptions::default().eps,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Ilp(#[from] IlpError),
    #[error("engine `{0:?}` cannot handle this request: {1}")]
    Engine(Engine, String),
    #[error("horizon range {0}..={1} is empty")]
    EmptyRange(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Feasible and the oracle found no violation.
    Verified,
    /// No horizon in the sweep was feasible.
    Infeasible,
    /// Some horizon ran out of solver budget before a feasible one was found.
    Unknown,
    /// The solver returned trajectories the oracle rejects.
    Falsified,
}

/// The trajectory file: `{"robots": [...]}` in either flavor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Trajectories {
    Discrete { robots: Vec<LassoTrajectory> },
    Continuous { robots: Vec<ContinuousTrajectory> },
}

#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    pub horizon: usize,
    pub status: SolveStatus,
    pub model: ModelStats,
    pub search: Option<SearchStats>,
    /// Wall-clock time, kept out of serialized output so runs compare equal.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthOutcome {
    pub outcome: Outcome,
    pub engine: Engine,
    pub horizon: Option<usize>,
    pub tau: usize,
    pub trajectories: Option<Trajectories>,
    pub verdict: Option<Verdict>,
    /// Collision violations found in the extracted trajectories.
    pub collisions: Vec<String>,
    pub warnings: Vec<String>,
    pub attempts: Vec<Attempt>,
}

/// Engine actually used for `model` under `req`.
pub fn resolve_engine(model: &LoadedModel, mu: &OuterFormula, req: &SynthRequest) -> Result<Engine, PipelineError> {
    let inst = match model {
        LoadedModel::Continuous(_) => {
            return match req.engine {
                Engine::Auto | Engine::Continuous => Ok(Engine::Continuous),
                e => Err(PipelineError::Engine(e, "the model is continuous".into())),
            }
        }
        LoadedModel::Discrete(inst) => inst,
    };
    let cltl_blocker = cltl_blocker(inst, mu, req.tau);
    match req.engine {
        Engine::Continuous => Err(PipelineError::Engine(Engine::Continuous, "the model is discrete".into())),
        Engine::CltlPlus => Ok(Engine::CltlPlus),
        Engine::Cltl => match cltl_blocker {
            Some(why) => Err(PipelineError::Engine(Engine::Cltl, why)),
            None => Ok(Engine::Cltl),
        },
        Engine::Auto => Ok(if cltl_blocker.is_none() {
            Engine::Cltl
        } else {
            Engine::CltlPlus
        }),
    }
}

fn cltl_blocker(inst: &MultiRobotInstance, mu: &OuterFormula, tau: usize) -> Option<String> {
    if tau > 0 {
        return Some("the aggregate encoding has no robust variant".into());
    }
    if !check_fragment(mu).is_cltl {
        return Some("the formula is not in the cLTL fragment".into());
    }
    if mu.tcps().iter().any(|t| t.group.is_some()) {
        return Some("robot groups need individual robots".into());
    }
    if inst.collision != CollisionMode::Off {
        return Some("collision avoidance needs individual robots".into());
    }
    if !inst.identical_dynamics() {
        return Some("robots do not share their dynamics".into());
    }
    None
}

fn solve(enc: &Encoded, req: &SynthRequest) -> Result<(Solution, Option<SearchStats>), PipelineError> {
    if let Some(p) = &req.export_lp {
        export_lp(&enc.model, p)?;
    }
    Ok(match &req.backend {
        Backend::Bundled => {
            let (s, st) = solve_bnb_with_stats(&enc.model, &req.solver)?;
            (s, Some(st))
        }
        Backend::External { cmd, workdir } => (solve_external(&enc.model, cmd, workdir)?, None),
    })
}

/// Label traces of continuous trajectories, with membership tolerance 1e-6.
pub fn labeled_continuous(sys: &ContinuousSystem, trajs: &[ContinuousTrajectory]) -> Vec<LabeledLasso> {
    trajs
        .iter()
        .map(|t| LabeledLasso {
            labels: t.labels(sys, 1e-6),
            loop_start: t.loop_start,
        })
        .collect()
}

/// Truth under the synchronous execution only. Global stutters are left out
/// on purpose: they would change the meaning of outer next.
pub fn synchronous_verdict(pi: &[LabeledLasso], mu: &OuterFormula) -> Verdict {
    let k = CollectiveExecution::synchronous(pi.len());
    let ok = eval_outer(pi, &k, 0, mu);
    Verdict {
        status: if ok {
            VerdictStatus::VerifiedBounded
        } else {
            VerdictStatus::Falsified
        },
        counterexample: (!ok).then_some(Counterexample { execution: k, time: 0 }),
        executions: 1,
        exhaustive: true,
    }
}

/// Synchronous truth at τ = 0, the bounded robust search otherwise.
pub fn verify(pi: &[LabeledLasso], mu: &OuterFormula, tau: usize, budget: &RobustBudget) -> Verdict {
    if tau == 0 {
        synchronous_verdict(pi, mu)
    } else {
        check_robust(pi, mu, tau, budget)
    }
}

/// Verdicts with the anchor placed at `0..times`. Only the future matters,
/// so anchor `t` is anchor 0 of the lassos shifted by `t`.
pub fn anchor_verdicts(
    pi: &[LabeledLasso],
    mu: &OuterFormula,
    tau: usize,
    budget: &RobustBudget,
    times: usize,
) -> Vec<Verdict> {
    (0..times)
        .map(|t| {
            let shifted: Vec<LabeledLasso> = pi.iter().map(|l| l.shifted(t)).collect();
            verify(&shifted, mu, tau, budget)
        })
        .collect()
}

/// Runs the horizon sweep and verifies the first feasible result.
pub fn synthesize(model: &LoadedModel, mu: &OuterFormula, req: &SynthRequest) -> Result<SynthOutcome, PipelineError> {
    if req.h_min == 0 || req.h_min > req.h_max {
        return Err(PipelineError::EmptyRange(req.h_min, req.h_max));
    }
    let engine = resolve_engine(model, mu, req)?;
    let mut out = SynthOutcome {
        outcome: Outcome::Infeasible,
        engine,
        horizon: None,
        tau: req.tau,
        trajectories: None,
        verdict: None,
        collisions: Vec::new(),
        warnings: Vec::new(),
        attempts: Vec::new(),
    };
    let mut saw_unknown = false;
    for h in req.h_min..=req.h_max {
        let started = std::time::Instant::now();
        let enc = match (engine, model) {
            (Engine::Continuous, LoadedModel::Continuous(sys)) => {
                build_cont_problem(sys, mu, h, req.tau, &ContinuousOptions { eps: req.eps })?
            }
            (Engine::Cltl, LoadedModel::Discrete(inst)) => build_cltl_problem(&inst.aggregate_view()?, mu, h)?,
            (_, LoadedModel::Discrete(inst)) => build_robust_problem(inst, mu, h, req.tau)?,
            _ => unreachable!("engine resolved against the model kind"),
        };
        for w in &enc.warnings {
            if !out.warnings.contains(w) {
                out.warnings.push(w.clone());
            }
        }
        let (sol, search) = solve(&enc, req)?;
        out.attempts.push(Attempt {
            horizon: h,
            status: sol.status,
            model: enc.model.stats(),
            search,
            seconds: started.elapsed().as_secs_f64(),
        });
        match sol.status {
            SolveStatus::Infeasible => continue,
            SolveStatus::Unknown => {
                saw_unknown = true;
                continue;
            }
            SolveStatus::Feasible => {}
        }
        out.horizon = Some(h);
        let budget = RobustBudget {
            max_t: req.check.max_t.max(h + req.tau + 1),
            ..req.check
        };
        let (pi, trajs) = match model {
            LoadedModel::Discrete(inst) => {
                let lassos = if engine == Engine::Cltl {
                    decompose_flows_with(
                        &inst.aggregate_view()?,
                        &enc.layout,
                        &sol,
                        Some(&inst.initial_states),
                        TieBreak::LowestIndex,
                    )?
                } else {
                    extract_trajectories(&enc.layout, &sol)?
                };
                for (n, (t, ts)) in lassos.iter().zip(&inst.systems).enumerate() {
                    if let Err(e) = t.check(ts) {
                        out.collisions.push(format!("robot {n}: {e}"));
                    }
                }
                out.collisions
                    .extend(collision_violations(&lassos, inst.collision, req.tau));
                let pi: Vec<LabeledLasso> = lassos.iter().zip(&inst.systems).map(|(t, s)| t.labeled(s)).collect();
                (pi, Trajectories::Discrete { robots: lassos })
            }
            LoadedModel::Continuous(sys) => {
                let c = extract_continuous(sys, &enc.layout, &sol)?;
                (labeled_continuous(sys, &c), Trajectories::Continuous { robots: c })
            }
        };
        let verdict = verify(&pi, mu, req.tau, &budget);
        out.outcome = if verdict.is_verified() && out.collisions.is_empty() {
            Outcome::Verified
        } else {
            Outcome::Falsified
        };
        out.verdict = Some(verdict);
        out.trajectories = Some(trajs);
        return Ok(out);
    }
    if saw_unknown {
        out.outcome = Outcome::Unknown;
    }
    Ok(out)
}
