//! Simultaneous control of one (state coordinate, memory coordinate) pair
//! across N points. The pair system is
//!
//! ```text
//!   x' = w sigma(a x + c p + b),    p' = u sigma(d x + f)
//! ```
//!
//! with every control scalar and piecewise constant. The construction runs
//! in three phases: make the state values usable as labels (separating
//! coincidences with memory-gated shears, applying the same fix to targets
//! through time-reversed segments), land each state exactly on its target
//! behind a memory isolation plane, then move the memories. Memory moves
//! use pairs of state-plane segments whose net effect is an exact constant
//! shift for every point above the plane and zero below; a stack of planes
//! between consecutive states therefore realizes arbitrary per-point
//! shifts while every intermediate value stays within a fixed band of the
//! data. Each segment freezes its own gate, so the builder tracks the true
//! states in closed form and the whole move list can be rescaled into any
//! window.

use super::exact::{self, State};
use crate::dynamics::types::{ControlValues, ModelSpec};
use crate::error::{CoreError, Result};

/// Margin by which every other memory must clear the working point before
/// the state move; memories are lifted to twice this above the working one
/// and the isolation plane sits in the middle.
const MEMORY_CLEARANCE: f64 = 1.0;

/// Candidate durations for separation shears: scanning 1, 1/2, 1/3, ...
/// dodges the finitely many collision instants a shear can produce.
const SHEAR_CANDIDATES: usize = 2000;

pub(crate) struct PairTargets {
    pub y: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Scalar controls of one pair segment, before lifting.
struct Move {
    w: f64,
    a: f64,
    c: f64,
    b: f64,
    u: f64,
    dh: f64,
    f: f64,
    duration: f64,
}

pub(crate) struct PairwiseCall<'a> {
    spec: &'a ModelSpec,
    sx: usize,
    sp: usize,
    states: &'a mut [State],
    out: &'a mut Vec<(f64, ControlValues)>,
}

impl<'a> PairwiseCall<'a> {
    pub fn new(
        spec: &'a ModelSpec,
        sx: usize,
        sp: usize,
        states: &'a mut [State],
        out: &'a mut Vec<(f64, ControlValues)>,
    ) -> Self {
        PairwiseCall {
            spec,
            sx,
            sp,
            states,
            out,
        }
    }

    fn lift(&self, mv: &Move) -> ControlValues {
        let (d, d_p) = (self.spec.d, self.spec.d_p);
        let mut w = vec![0.0; d];
        let mut a = vec![0.0; d];
        let mut c = vec![0.0; d_p];
        let mut u = vec![0.0; d_p];
        let mut dv = vec![0.0; d];
        w[self.sx] = mv.w;
        a[self.sx] = mv.a;
        c[self.sp] = mv.c;
        u[self.sp] = mv.u;
        dv[self.sx] = mv.dh;
        ControlValues::memory_rank_one(d, d_p, &w, &a, &c, mv.b, &u, &dv, mv.f)
    }

    fn emit(&mut self, mv: Move) {
        let cv = self.lift(&mv);
        exact::apply(self.spec, &cv, mv.duration, self.states);
        self.out.push((mv.duration, cv));
    }

    fn xs(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.0[self.sx]).collect()
    }

    fn ps(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.1[self.sp]).collect()
    }

    /// Adds `desired[k]` to point k's memory, exactly. Two segments per
    /// plane: a plane shifted by the margin and its unshifted twin with the
    /// opposite rate add a constant to every memory above the plane and
    /// nothing below it, so planes between consecutive states realize the
    /// per-point amounts by telescoping. Requires pairwise distinct states.
    fn shift_memories(&mut self, desired: &[f64]) {
        let xs = self.xs();
        let n = xs.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
        let eps = if n > 1 {
            order
                .windows(2)
                .map(|w| xs[w[1]] - xs[w[0]])
                .fold(f64::INFINITY, f64::min)
                / 4.0
        } else {
            0.25
        };
        let mut plans: Vec<(f64, f64)> = Vec::with_capacity(n);
        plans.push((xs[order[0]] - 1.0, desired[order[0]]));
        for k in 0..n - 1 {
            let mid = 0.5 * (xs[order[k]] + xs[order[k + 1]]);
            plans.push((mid, desired[order[k + 1]] - desired[order[k]]));
        }
        for (plane, amount) in plans {
            if amount == 0.0 {
                continue;
            }
            for (rate, f) in [(amount / eps, -plane + eps), (-amount / eps, -plane)] {
                self.emit(Move {
                    w: 0.0,
                    a: 0.0,
                    c: 0.0,
                    b: 0.0,
                    u: rate,
                    dh: 1.0,
                    f,
                    duration: 1.0,
                });
            }
        }
    }

    /// Drives every point's pair to its target exactly. Requires pairwise
    /// distinct current pairs and pairwise distinct target pairs.
    pub fn run(&mut self, targets: &PairTargets) -> Result<()> {
        let n = self.states.len();
        assert_eq!(targets.y.len(), n);
        let scale = self
            .xs()
            .iter()
            .chain(self.ps().iter())
            .chain(targets.y.iter())
            .chain(targets.phi.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let thresh = 1e-9 * (1.0 + scale);

        for i in 0..n {
            for j in (i + 1)..n {
                let dx = (self.states[i].0[self.sx] - self.states[j].0[self.sx]).abs();
                let dp = (self.states[i].1[self.sp] - self.states[j].1[self.sp]).abs();
                if dx <= thresh && dp <= thresh {
                    return Err(CoreError::InfeasibleProblem {
                        reason: format!(
                            "points {i} and {j} coincide in the controlled pair; \
                             exact simultaneous control needs distinct pairs"
                        ),
                    });
                }
                let dy = (targets.y[i] - targets.y[j]).abs();
                let dphi = (targets.phi[i] - targets.phi[j]).abs();
                if dy <= thresh && dphi <= thresh {
                    return Err(CoreError::InfeasibleProblem {
                        reason: format!(
                            "targets {i} and {j} coincide in the controlled pair; \
                             coinciding targets admit only approximate control: \
                             perturb one of them"
                        ),
                    });
                }
            }
        }

        // Phase 1a: separate coincident state values; memory planes give the
        // tied points different shear speeds because their memories differ.
        let mut guard = 0;
        while let Some((i, j)) = first_tie(&self.xs(), thresh) {
            guard += 1;
            if guard > n * n + 8 {
                return Err(CoreError::InfeasibleProblem {
                    reason: "state separation failed to terminate".into(),
                });
            }
            let ps = self.ps();
            let b = -0.5 * (ps[i] + ps[j]);
            let xs = self.xs();
            let vel: Vec<f64> = ps.iter().map(|p| (p + b).max(0.0)).collect();
            let t = pick_duration(|t| {
                let moved: Vec<f64> = xs.iter().zip(&vel).map(|(x, v)| x + t * v).collect();
                (moved[i] - moved[j]).abs() > thresh
                    && no_new_ties(&xs, &moved, thresh)
                    && clears_targets(&moved, &targets.y, thresh)
            })?;
            self.emit(Move {
                w: 1.0,
                a: 0.0,
                c: 1.0,
                b,
                u: 0.0,
                dh: 0.0,
                f: 0.0,
                duration: t,
            });
        }

        // Phase 1b: the same fix for coincident target states, realized
        // backward: control to pre-images and restore with the forward
        // segment afterwards. Restores stack in reverse construction order.
        let mut ty = targets.y.clone();
        let tp = targets.phi.clone();
        let mut restores: Vec<Move> = Vec::new();
        let mut guard = 0;
        while let Some((i, j)) = first_tie(&ty, thresh) {
            guard += 1;
            if guard > n * n + 8 {
                return Err(CoreError::InfeasibleProblem {
                    reason: "target separation failed to terminate".into(),
                });
            }
            let b = -0.5 * (tp[i] + tp[j]);
            let vel: Vec<f64> = tp.iter().map(|p| (p + b).max(0.0)).collect();
            let ty0 = ty.clone();
            let xs = self.xs();
            let t = pick_duration(|t| {
                let back: Vec<f64> = ty0.iter().zip(&vel).map(|(y, v)| y - t * v).collect();
                (back[i] - back[j]).abs() > thresh
                    && no_new_ties(&ty0, &back, thresh)
                    && clears_targets(&xs, &back, thresh)
            })?;
            for (y, v) in ty.iter_mut().zip(&vel) {
                *y -= t * v;
            }
            restores.push(Move {
                w: 1.0,
                a: 0.0,
                c: 1.0,
                b,
                u: 0.0,
                dh: 0.0,
                f: 0.0,
                duration: t,
            });
        }

        // Phase 1c: shift states off the (possibly modified) target values
        // they would collide with mid-construction. One all-active shear
        // with a collision-free duration restores the invariant.
        {
            let xs = self.xs();
            if !clears_targets(&xs, &ty, thresh) {
                let ps = self.ps();
                let b = 1.0 + ps.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
                let vel: Vec<f64> = ps.iter().map(|p| p + b).collect();
                let ty0 = ty.clone();
                let t = pick_duration(|t| {
                    let moved: Vec<f64> = xs.iter().zip(&vel).map(|(x, v)| x + t * v).collect();
                    no_new_ties(&xs, &moved, thresh) && clears_targets(&moved, &ty0, thresh)
                })?;
                self.emit(Move {
                    w: 1.0,
                    a: 0.0,
                    c: 1.0,
                    b,
                    u: 0.0,
                    dh: 0.0,
                    f: 0.0,
                    duration: t,
                });
            }
        }

        // Phase 2: land states one point at a time. Plane-pair shifts lift
        // every other point's memory a fixed clearance above the working
        // one, a memory plane then isolates it, and one gated segment moves
        // it exactly.
        for i in 0..n {
            let ps = self.ps();
            let lift = 2.0 * MEMORY_CLEARANCE;
            let desired: Vec<f64> = (0..n)
                .map(|j| {
                    if j == i {
                        0.0
                    } else {
                        (ps[i] + lift - ps[j]).max(0.0)
                    }
                })
                .collect();
            self.shift_memories(&desired);
            let p_cur = self.states[i].1[self.sp];
            self.emit(Move {
                w: (ty[i] - self.states[i].0[self.sx]) / MEMORY_CLEARANCE,
                a: 0.0,
                c: -1.0,
                b: p_cur + MEMORY_CLEARANCE,
                u: 0.0,
                dh: 0.0,
                f: 0.0,
                duration: 1.0,
            });
        }

        // Phase 3: all memories shift to their targets in one pass.
        let ps = self.ps();
        let desired: Vec<f64> = (0..n).map(|r| tp[r] - ps[r]).collect();
        self.shift_memories(&desired);

        for mv in restores.into_iter().rev() {
            self.emit(mv);
        }

        if cfg!(debug_assertions) {
            for (st, (y, phi)) in self.states.iter().zip(targets.y.iter().zip(&targets.phi)) {
                debug_assert!(
                    (st.0[self.sx] - y).abs() <= 1e-7 * (1.0 + scale)
                        && (st.1[self.sp] - phi).abs() <= 1e-7 * (1.0 + scale),
                    "pair controller missed its target"
                );
            }
        }
        Ok(())
    }
}

fn first_tie(vals: &[f64], thresh: f64) -> Option<(usize, usize)> {
    for i in 0..vals.len() {
        for j in (i + 1)..vals.len() {
            if (vals[i] - vals[j]).abs() <= thresh {
                return Some((i, j));
            }
        }
    }
    None
}

/// True when every pair distinct in `before` is still distinct in `after`;
/// pairs that were already tied may stay tied (later shears handle them).
fn no_new_ties(before: &[f64], after: &[f64], thresh: f64) -> bool {
    for i in 0..before.len() {
        for j in (i + 1)..before.len() {
            if (before[i] - before[j]).abs() > thresh && (after[i] - after[j]).abs() <= thresh {
                return false;
            }
        }
    }
    true
}

/// True when no state sits on another point's target value.
fn clears_targets(xs: &[f64], ty: &[f64], thresh: f64) -> bool {
    for (i, x) in xs.iter().enumerate() {
        for (k, y) in ty.iter().enumerate() {
            if k != i && (x - y).abs() <= thresh {
                return false;
            }
        }
    }
    true
}

fn pick_duration(ok: impl Fn(f64) -> bool) -> Result<f64> {
    for k in 1..=SHEAR_CANDIDATES {
        let t = 1.0 / k as f64;
        if ok(t) {
            return Ok(t);
        }
    }
    Err(CoreError::InfeasibleProblem {
        reason: "no collision-free shear duration found; the configuration is \
                 too degenerate to separate cleanly"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate::reference_endpoint;
    use crate::dynamics::types::{Activation, ControlSchedule, PhasePoint};

    fn run_pairwise(
        initials: &[(f64, f64)],
        targets: &[(f64, f64)],
    ) -> (Vec<State>, Vec<(f64, ControlValues)>) {
        let spec = ModelSpec::memory(1, 1, Activation::Relu);
        let mut states: Vec<State> = initials
            .iter()
            .map(|&(x, p)| (vec![x], vec![p]))
            .collect();
        let mut out = Vec::new();
        let tg = PairTargets {
            y: targets.iter().map(|t| t.0).collect(),
            phi: targets.iter().map(|t| t.1).collect(),
        };
        PairwiseCall::new(&spec, 0, 0, &mut states, &mut out)
            .run(&tg)
            .unwrap();
        (states, out)
    }

    fn oracle_endpoints(
        initials: &[(f64, f64)],
        segs: &[(f64, ControlValues)],
        t_final: f64,
    ) -> Vec<(f64, f64)> {
        let spec = ModelSpec::memory(1, 1, Activation::Relu);
        let total: f64 = segs.iter().map(|(t, _)| t).sum();
        let mut schedule = ControlSchedule::new(spec, 0.0, t_final.max(total));
        for (t, cv) in segs {
            schedule.push(*t, cv.clone());
        }
        initials
            .iter()
            .map(|&(x, p)| {
                let end =
                    reference_endpoint(&schedule, &PhasePoint::new(vec![x], vec![p]), 10.0)
                        .unwrap();
                (end.x[0], end.p[0])
            })
            .collect()
    }

    #[test]
    fn single_point_reaches_its_pair_target() {
        let initials = [(0.0, 0.0)];
        let (states, segs) = run_pairwise(&initials, &[(1.0, 1.0)]);
        assert!((states[0].0[0] - 1.0).abs() < 1e-12);
        assert!((states[0].1[0] - 1.0).abs() < 1e-12);
        let ends = oracle_endpoints(&initials, &segs, 0.0);
        assert!((ends[0].0 - 1.0).abs() < 1e-6);
        assert!((ends[0].1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn identity_targets_verify_under_the_oracle() {
        let initials = [(0.0, 0.5), (1.0, -0.25), (-2.0, 0.0)];
        let (_, segs) = run_pairwise(&initials, &initials);
        for ((x, p), (ix, ip)) in oracle_endpoints(&initials, &segs, 0.0)
            .iter()
            .zip(&initials)
        {
            assert!((x - ix).abs() < 1e-6 && (p - ip).abs() < 1e-6);
        }
    }

    #[test]
    fn coincident_states_separate_before_the_landing_phases() {
        // Two points share a state value; the first emitted segment must be
        // a memory-gated shear that makes all states distinct.
        let spec = ModelSpec::memory(1, 1, Activation::Relu);
        let initials = [(0.0, 1.0), (0.0, -1.0), (2.0, 0.0)];
        let mut states: Vec<State> =
            initials.iter().map(|&(x, p)| (vec![x], vec![p])).collect();
        let mut out = Vec::new();
        let tg = PairTargets {
            y: vec![3.0, 4.0, 5.0],
            phi: vec![0.0, 0.0, 0.0],
        };
        PairwiseCall::new(&spec, 0, 0, &mut states, &mut out)
            .run(&tg)
            .unwrap();

        let mut schedule = ControlSchedule::new(spec, 0.0, out[0].0);
        schedule.push(out[0].0, out[0].1.clone());
        let after: Vec<f64> = initials
            .iter()
            .map(|&(x, p)| {
                reference_endpoint(&schedule, &PhasePoint::new(vec![x], vec![p]), 10.0)
                    .unwrap()
                    .x[0]
            })
            .collect();
        for i in 0..after.len() {
            for j in (i + 1)..after.len() {
                assert!(
                    (after[i] - after[j]).abs() > 1e-10,
                    "phase 1 left states {i} and {j} coincident"
                );
            }
        }
    }

    #[test]
    fn crossing_problem_with_duplicate_targets_is_rejected() {
        let spec = ModelSpec::memory(1, 1, Activation::Relu);
        let mut states: Vec<State> = vec![(vec![0.0], vec![0.0]), (vec![1.0], vec![0.0])];
        let mut out = Vec::new();
        let tg = PairTargets {
            y: vec![2.0, 2.0],
            phi: vec![3.0, 3.0],
        };
        let err = PairwiseCall::new(&spec, 0, 0, &mut states, &mut out)
            .run(&tg)
            .unwrap_err();
        assert!(err.to_string().contains("approximate"));
    }

    #[test]
    fn random_five_point_problems_land_under_the_oracle() {
        // Deterministic pseudo-random values; pairs kept well separated.
        let mut s = 0x9e3779b97f4a7c15_u64;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        for _ in 0..5 {
            let initials: Vec<(f64, f64)> = (0..5).map(|_| (next(), next())).collect();
            let targets: Vec<(f64, f64)> = (0..5).map(|_| (next(), next())).collect();
            let (_, segs) = run_pairwise(&initials, &targets);
            for ((x, p), (tx, tpp)) in oracle_endpoints(&initials, &segs, 0.0)
                .iter()
                .zip(&targets)
            {
                assert!(
                    (x - tx).abs() < 1e-6 && (p - tpp).abs() < 1e-6,
                    "missed target: got ({x}, {p}), wanted ({tx}, {tpp})"
                );
            }
        }
    }
}
