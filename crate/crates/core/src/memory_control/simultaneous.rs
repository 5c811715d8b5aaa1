//! Simultaneous endpoint control of state and memory for the full model.
//! The state equation can read the memory through its gates but the memory
//! equation reads only the state, so every strategy here pairs a memory
//! coordinate with a state coordinate and drives the pair with the scalar
//! controller, time-slicing the horizon into one window per sub-problem:
//!
//! * `d == d_p`: one window per pair (x^(k), p^(k)).
//! * `d > d_p`: pair windows for the first d_p - 1 coordinates, then one
//!   window controlling the surplus state block together with the last
//!   memory coordinate.
//! * `d < d_p`: the first half of the horizon parks each surplus memory
//!   using x^(1) as a helper (restoring it), then the d == d_p plan runs
//!   on the second half.

use serde::{Deserialize, Serialize};

use super::exact::{self, State};
use super::pairwise::{PairTargets, PairwiseCall};
use crate::dynamics::types::{
    Activation, ControlSchedule, ControlValues, ModelSpec, PhasePoint,
};
use crate::error::{CoreError, Result};

/// Endpoint control problem: drive N distinct (state, memory) points to N
/// distinct target points over the horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryControlProblem {
    pub d: usize,
    pub d_p: usize,
    pub initials: Vec<PhasePoint>,
    pub targets: Vec<PhasePoint>,
    pub t_final: f64,
}

impl MemoryControlProblem {
    pub fn new(
        d: usize,
        d_p: usize,
        initials: Vec<PhasePoint>,
        targets: Vec<PhasePoint>,
        t_final: f64,
    ) -> Result<Self> {
        let problem = MemoryControlProblem {
            d,
            d_p,
            initials,
            targets,
            t_final,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d_p == 0 {
            return Err(CoreError::InvalidSpec(
                "state and memory dimensions must be at least 1".into(),
            ));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(CoreError::InvalidSpec(format!(
                "horizon must be positive, got {}",
                self.t_final
            )));
        }
        if self.initials.is_empty() || self.initials.len() != self.targets.len() {
            return Err(CoreError::InvalidSpec(format!(
                "need matching nonempty point sets, got {} initials and {} targets",
                self.initials.len(),
                self.targets.len()
            )));
        }
        let spec = ModelSpec::memory(self.d, self.d_p, Activation::Relu);
        for pt in self.initials.iter().chain(&self.targets) {
            pt.validate(&spec)?;
        }
        let dist = |a: &PhasePoint, b: &PhasePoint| {
            a.x.iter()
                .zip(&b.x)
                .chain(a.p.iter().zip(&b.p))
                .map(|(u, v)| (u - v).abs())
                .fold(0.0_f64, f64::max)
        };
        for i in 0..self.initials.len() {
            for j in (i + 1)..self.initials.len() {
                if dist(&self.initials[i], &self.initials[j]) == 0.0 {
                    return Err(CoreError::InvalidSpec(format!(
                        "initial points {i} and {j} coincide"
                    )));
                }
                if dist(&self.targets[i], &self.targets[j]) == 0.0 {
                    return Err(CoreError::InfeasibleProblem {
                        reason: format!(
                            "target points {i} and {j} coincide; by uniqueness of \
                             solutions two points can reach a shared target only \
                             approximately: perturb one of them"
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One time-sliced sub-problem of the case dispatch.
enum Window {
    /// Drive (x^(sx), p^(sp)) to the given per-point targets.
    Pair {
        sx: usize,
        sp: usize,
        targets: PairTargetsKind,
    },
    /// Drive the state block `q` and the memory coordinate `mp` jointly.
    Block { q: Vec<usize>, mp: usize },
}

enum PairTargetsKind {
    /// Final targets of the named coordinates.
    Final,
    /// Memory target of coordinate `sp`, with the state restored to its
    /// value at window entry (helper use of the state coordinate).
    SurplusMemory,
}

pub fn memory_simultaneous_control(problem: &MemoryControlProblem) -> Result<ControlSchedule> {
    problem.validate()?;
    let (d, d_p) = (problem.d, problem.d_p);
    let spec = ModelSpec::memory(d, d_p, Activation::Relu);
    let mut states: Vec<State> = problem
        .initials
        .iter()
        .map(|pt| (pt.x.clone(), pt.p.clone()))
        .collect();

    let mut plan: Vec<(Window, f64)> = Vec::new();
    if d == d_p {
        for k in 0..d {
            plan.push((
                Window::Pair {
                    sx: k,
                    sp: k,
                    targets: PairTargetsKind::Final,
                },
                problem.t_final / d as f64,
            ));
        }
    } else if d > d_p {
        for k in 0..d_p - 1 {
            plan.push((
                Window::Pair {
                    sx: k,
                    sp: k,
                    targets: PairTargetsKind::Final,
                },
                problem.t_final / d_p as f64,
            ));
        }
        plan.push((
            Window::Block {
                q: (d_p - 1..d).collect(),
                mp: d_p - 1,
            },
            problem.t_final / d_p as f64,
        ));
    } else {
        let m = d_p - d;
        for k in 0..m {
            plan.push((
                Window::Pair {
                    sx: 0,
                    sp: d + k,
                    targets: PairTargetsKind::SurplusMemory,
                },
                0.5 * problem.t_final / m as f64,
            ));
        }
        for k in 0..d {
            plan.push((
                Window::Pair {
                    sx: k,
                    sp: k,
                    targets: PairTargetsKind::Final,
                },
                0.5 * problem.t_final / d as f64,
            ));
        }
    }

    let mut schedule = ControlSchedule::new(spec.clone(), 0.0, problem.t_final);
    for (window, span) in plan {
        let mut segs: Vec<(f64, ControlValues)> = Vec::new();
        match window {
            Window::Pair { sx, sp, targets } => {
                separate_pairs(&spec, &mut states, sx, sp, &mut segs)?;
                let tg = match targets {
                    PairTargetsKind::Final => PairTargets {
                        y: problem.targets.iter().map(|t| t.x[sx]).collect(),
                        phi: problem.targets.iter().map(|t| t.p[sp]).collect(),
                    },
                    PairTargetsKind::SurplusMemory => PairTargets {
                        y: states.iter().map(|s| s.0[sx]).collect(),
                        phi: problem.targets.iter().map(|t| t.p[sp]).collect(),
                    },
                };
                PairwiseCall::new(&spec, sx, sp, &mut states, &mut segs).run(&tg)?;
            }
            Window::Block { q, mp } => {
                control_block(&spec, &mut states, &q, mp, &problem.targets, &mut segs)?;
            }
        }
        exact::rescale(&mut segs, span);
        for (t, cv) in segs {
            schedule.push(t, cv);
        }
    }
    schedule.validate()?;
    Ok(schedule)
}

/// Scalar-pair problem on the plane system (d = 1, d_p = 1), exposed as its
/// own operation.
pub fn pairwise_simultaneous_control(problem: &MemoryControlProblem) -> Result<ControlSchedule> {
    if problem.d != 1 || problem.d_p != 1 {
        return Err(CoreError::InvalidSpec(format!(
            "pairwise control is the d = 1, d_p = 1 case; got d = {}, d_p = {}",
            problem.d, problem.d_p
        )));
    }
    memory_simultaneous_control(problem)
}

/// Joint control of a state block and one memory coordinate. The memory is
/// first parked on distinct staging values so every pair call afterwards
/// has separated pairs and separated targets, then each block coordinate
/// lands through pair calls that restore the staging, and the memory is
/// swept to its true target last, behind planes over a projection of the
/// (now final) block states.
fn control_block(
    spec: &ModelSpec,
    states: &mut Vec<State>,
    q: &[usize],
    mp: usize,
    targets: &[PhasePoint],
    segs: &mut Vec<(f64, ControlValues)>,
) -> Result<()> {
    let n = states.len();
    let stage: Vec<f64> = (0..n).map(|i| i as f64).collect();

    separate_pairs(spec, states, q[0], mp, segs)?;
    let hold = PairTargets {
        y: states.iter().map(|s| s.0[q[0]]).collect(),
        phi: stage.clone(),
    };
    PairwiseCall::new(spec, q[0], mp, states, segs).run(&hold)?;
    for &qr in &q[1..] {
        PairwiseCall::new(spec, qr, mp, states, segs).run(&PairTargets {
            y: targets.iter().map(|t| t.x[qr]).collect(),
            phi: stage.clone(),
        })?;
    }
    PairwiseCall::new(spec, q[0], mp, states, segs).run(&PairTargets {
        y: targets.iter().map(|t| t.x[q[0]]).collect(),
        phi: stage.clone(),
    })?;

    // Memory sweep over a projection of the block states that separates the
    // points; the states are final, so the projections are what they will
    // remain. Axis directions are tried first, then moment vectors.
    let scale = targets
        .iter()
        .flat_map(|t| t.x.iter().chain(&t.p))
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let thresh = 1e-9 * (1.0 + scale);
    let proj_of = |g: &[f64]| -> Vec<f64> {
        states
            .iter()
            .map(|s| g.iter().zip(q).map(|(gv, &qc)| gv * s.0[qc]).sum())
            .collect()
    };
    let mut chosen: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut candidates: Vec<Vec<f64>> = (0..q.len())
        .map(|r| {
            let mut g = vec![0.0; q.len()];
            g[r] = 1.0;
            g
        })
        .collect();
    for t in 1..=64u32 {
        candidates.push((0..q.len()).map(|r| (t as f64).powi(r as i32)).collect());
    }
    for g in candidates {
        let proj = proj_of(&g);
        if min_pair_gap(&proj) > thresh {
            chosen = Some((g, proj));
            break;
        }
    }
    let Some((g, proj)) = chosen else {
        return Err(CoreError::InfeasibleProblem {
            reason: "block states coincide after landing, so the memory sweep \
                     cannot separate the points; the targets differ only in \
                     memory and admit only approximate control here"
                .into(),
        });
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| proj[i].total_cmp(&proj[j]));
    let eps3 = if n > 1 {
        order
            .windows(2)
            .map(|w| proj[w[1]] - proj[w[0]])
            .fold(f64::INFINITY, f64::min)
            / 4.0
    } else {
        0.25
    };
    // Plane-pair shifts along the projection: each pair adds a constant to
    // every memory above its plane and nothing below, so planes between
    // consecutive projections telescope to the per-point amounts.
    let desired: Vec<f64> = (0..n).map(|i| targets[i].p[mp] - states[i].1[mp]).collect();
    let mut plans: Vec<(f64, f64)> = Vec::with_capacity(n);
    plans.push((proj[order[0]] - 1.0, desired[order[0]]));
    for k in 0..n - 1 {
        let mid = 0.5 * (proj[order[k]] + proj[order[k + 1]]);
        plans.push((mid, desired[order[k + 1]] - desired[order[k]]));
    }
    let (d, d_p) = (spec.d, spec.d_p);
    let mut dv = vec![0.0; d];
    for (gv, &qc) in g.iter().zip(q) {
        dv[qc] = *gv;
    }
    for (plane, amount) in plans {
        if amount == 0.0 {
            continue;
        }
        for (rate, f) in [(amount / eps3, -plane + eps3), (-amount / eps3, -plane)] {
            let mut u = vec![0.0; d_p];
            u[mp] = rate;
            let cv = ControlValues::memory_rank_one(
                d,
                d_p,
                &vec![0.0; d],
                &vec![0.0; d],
                &vec![0.0; d_p],
                0.0,
                &u,
                &dv,
                f,
            );
            exact::apply(spec, &cv, 1.0, states);
            segs.push((1.0, cv));
        }
    }
    Ok(())
}

/// Shears the state coordinate until every (x^(sx), p^(sp)) pair is
/// distinct, gating on some coordinate where the tied points differ. The
/// gate offset keeps every point active, so rates are the gated coordinate
/// plus a constant and the tied pair separates at their difference.
fn separate_pairs(
    spec: &ModelSpec,
    states: &mut Vec<State>,
    sx: usize,
    sp: usize,
    segs: &mut Vec<(f64, ControlValues)>,
) -> Result<()> {
    let scale = states
        .iter()
        .flat_map(|s| s.0.iter().chain(&s.1))
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let thresh = 1e-9 * (1.0 + scale);
    let pair_tied = |states: &[State], i: usize, j: usize| {
        (states[i].0[sx] - states[j].0[sx]).abs() <= thresh
            && (states[i].1[sp] - states[j].1[sp]).abs() <= thresh
    };
    let mut guard = 0;
    'outer: loop {
        guard += 1;
        if guard > states.len() * states.len() + 8 {
            return Err(CoreError::InfeasibleProblem {
                reason: "pair separation failed to terminate".into(),
            });
        }
        let mut tied: Option<(usize, usize)> = None;
        for i in 0..states.len() {
            for j in (i + 1)..states.len() {
                if pair_tied(states, i, j) {
                    tied = Some((i, j));
                    break;
                }
            }
        }
        let Some((i, j)) = tied else { break 'outer };

        // Find a coordinate where the tied points currently differ.
        let (d, d_p) = (spec.d, spec.d_p);
        let mut gate: Option<(bool, usize)> = None;
        for r in 0..d {
            if (states[i].0[r] - states[j].0[r]).abs() > thresh {
                gate = Some((true, r));
                break;
            }
        }
        if gate.is_none() {
            for r in 0..d_p {
                if (states[i].1[r] - states[j].1[r]).abs() > thresh {
                    gate = Some((false, r));
                    break;
                }
            }
        }
        let Some((on_state, r)) = gate else {
            return Err(CoreError::InfeasibleProblem {
                reason: format!(
                    "points {i} and {j} coincide in every coordinate when their \
                     control window begins; the windowed strategy cannot \
                     separate them"
                ),
            });
        };

        let vals: Vec<f64> = states
            .iter()
            .map(|s| if on_state { s.0[r] } else { s.1[r] })
            .collect();
        let b = 1.0 + vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let xs: Vec<f64> = states.iter().map(|s| s.0[sx]).collect();
        let pp: Vec<f64> = states.iter().map(|s| s.1[sp]).collect();
        let mut duration = None;
        for k in 1..=2000u32 {
            let t = 1.0 / k as f64;
            let ok = (0..states.len()).all(|a| {
                ((a + 1)..states.len()).all(|c| {
                    let dx = (xs[a] + t * (vals[a] + b)) - (xs[c] + t * (vals[c] + b));
                    dx.abs() > thresh || (pp[a] - pp[c]).abs() > thresh
                })
            });
            if ok {
                duration = Some(t);
                break;
            }
        }
        let Some(t) = duration else {
            return Err(CoreError::InfeasibleProblem {
                reason: "no collision-free shear duration found while separating \
                         control pairs"
                    .into(),
            });
        };

        let mut w = vec![0.0; d];
        w[sx] = 1.0;
        let mut a = vec![0.0; d];
        let mut c = vec![0.0; d_p];
        if on_state {
            a[r] = 1.0;
        } else {
            c[r] = 1.0;
        }
        let cv = ControlValues::memory_rank_one(
            d,
            d_p,
            &w,
            &a,
            &c,
            b,
            &vec![0.0; d_p],
            &vec![0.0; d],
            0.0,
        );
        exact::apply(spec, &cv, t, states);
        segs.push((t, cv));
    }
    Ok(())
}

fn min_pair_gap(vals: &[f64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..vals.len() {
        for j in (i + 1)..vals.len() {
            g = g.min((vals[i] - vals[j]).abs());
        }
    }
    g
}
