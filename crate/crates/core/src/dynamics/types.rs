use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Scalar activation applied inside every perceptron field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative used by reverse-mode training. ReLU takes the subgradient 0
    /// at the kink, so the derivative is 0 for z <= 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
        }
    }
}

/// Which continuous-depth model the schedule drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// x' = w sigma(<a,x> + b); no auxiliary states.
    FirstOrder,
    /// eps x'' + x' = w sigma(<a,x> + b); p is the velocity, d_p = d.
    Momentum,
    /// x' = W sigma_vec(Ax + Cp + b1) + b2, p' = u sigma(<d,x> + f).
    Memory,
}

/// Dimensions, activation, and damping shared by a whole schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub d: usize,
    pub d_p: usize,
    pub activation: Activation,
    /// Momentum mass; ignored by the other architectures. Synthesis routines
    /// require 1 because their closed forms hardcode the e^{-t} kernel.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn first_order(d: usize, activation: Activation) -> Self {
        ModelSpec {
            architecture: Architecture::FirstOrder,
            d,
            d_p: 0,
            activation,
            epsilon: 1.0,
        }
    }

    pub fn momentum(d: usize, activation: Activation) -> Self {
        ModelSpec {
            architecture: Architecture::Momentum,
            d,
            d_p: d,
            activation,
            epsilon: 1.0,
        }
    }

    pub fn memory(d: usize, d_p: usize, activation: Activation) -> Self {
        ModelSpec {
            architecture: Architecture::Memory,
            d,
            d_p,
            activation,
            epsilon: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(CoreError::InvalidSpec("state dimension d must be >= 1".into()));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(CoreError::InvalidSpec(format!(
                "epsilon must be a positive finite real, got {}",
                self.epsilon
            )));
        }
        match self.architecture {
            Architecture::FirstOrder => {
                if self.d_p != 0 {
                    return Err(CoreError::InvalidSpec(format!(
                        "first-order model has no auxiliary states; d_p must be 0, got {}",
                        self.d_p
                    )));
                }
            }
            Architecture::Momentum => {
                if self.d_p != self.d {
                    return Err(CoreError::InvalidSpec(format!(
                        "momentum model pairs each state with a velocity; d_p must equal d = {}, got {}",
                        self.d, self.d_p
                    )));
                }
            }
            Architecture::Memory => {
                if self.d_p == 0 {
                    return Err(CoreError::InvalidSpec(
                        "memory model requires d_p >= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A point of the extended phase space: state x plus velocity/memory p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Self {
        PhasePoint { x, p }
    }

    /// State-only point (first-order model).
    pub fn state_only(x: Vec<f64>) -> Self {
        PhasePoint { x, p: Vec::new() }
    }

    /// State with zero velocity/memory of the spec's d_p.
    pub fn resting(x: Vec<f64>, d_p: usize) -> Self {
        PhasePoint {
            x,
            p: vec![0.0; d_p],
        }
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.x.len() != spec.d {
            return Err(CoreError::ShapeMismatch {
                context: "PhasePoint.x",
                expected: spec.d,
                got: self.x.len(),
            });
        }
        if self.p.len() != spec.d_p {
            return Err(CoreError::ShapeMismatch {
                context: "PhasePoint.p",
                expected: spec.d_p,
                got: self.p.len(),
            });
        }
        if !self.x.iter().chain(self.p.iter()).all(|v| v.is_finite()) {
            return Err(CoreError::InvalidSpec(
                "phase point contains a non-finite entry".into(),
            ));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }

    /// Largest absolute entry across state and auxiliary components.
    pub fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .chain(self.p.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Constant control values held on one segment; the tagged union mirrors the
/// three vector fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "architecture", rename_all = "snake_case")]
pub enum ControlValues {
    FirstOrder {
        w: Vec<f64>,
        a: Vec<f64>,
        b: f64,
    },
    Momentum {
        w: Vec<f64>,
        a: Vec<f64>,
        b: f64,
    },
    /// Matrices are stored flat in row-major order: `w`, `a` are d x d,
    /// `c` is d x d_p.
    Memory {
        w: Vec<f64>,
        a: Vec<f64>,
        c: Vec<f64>,
        b1: Vec<f64>,
        b2: Vec<f64>,
        u: Vec<f64>,
        d_vec: Vec<f64>,
        f: f64,
    },
}

impl ControlValues {
    pub fn architecture(&self) -> Architecture {
        match self {
            ControlValues::FirstOrder { .. } => Architecture::FirstOrder,
            ControlValues::Momentum { .. } => Architecture::Momentum,
            ControlValues::Memory { .. } => Architecture::Memory,
        }
    }

    /// Zero controls (frozen dynamics for first-order/memory, free damped
    /// motion for momentum).
    pub fn zero(spec: &ModelSpec) -> Self {
        match spec.architecture {
            Architecture::FirstOrder => ControlValues::FirstOrder {
                w: vec![0.0; spec.d],
                a: vec![0.0; spec.d],
                b: 0.0,
            },
            Architecture::Momentum => ControlValues::Momentum {
                w: vec![0.0; spec.d],
                a: vec![0.0; spec.d],
                b: 0.0,
            },
            Architecture::Memory => ControlValues::Memory {
                w: vec![0.0; spec.d * spec.d],
                a: vec![0.0; spec.d * spec.d],
                c: vec![0.0; spec.d * spec.d_p],
                b1: vec![0.0; spec.d],
                b2: vec![0.0; spec.d],
                u: vec![0.0; spec.d_p],
                d_vec: vec![0.0; spec.d],
                f: 0.0,
            },
        }
    }

    /// Memory controls of rank one: x' = w sigma(<a,x> + <c,p> + b),
    /// p' = u sigma(<d,x> + f). Exact embedding into the matrix form for
    /// ReLU, where the d-1 zero gate rows contribute sigma(0) = 0.
    #[allow(clippy::too_many_arguments)]
    pub fn memory_rank_one(
        d: usize,
        d_p: usize,
        w: &[f64],
        a: &[f64],
        c: &[f64],
        b: f64,
        u: &[f64],
        d_vec: &[f64],
        f: f64,
    ) -> Self {
        assert_eq!(w.len(), d);
        assert_eq!(a.len(), d);
        assert_eq!(c.len(), d_p);
        assert_eq!(u.len(), d_p);
        assert_eq!(d_vec.len(), d);
        let mut wm = vec![0.0; d * d];
        let mut am = vec![0.0; d * d];
        let mut cm = vec![0.0; d * d_p];
        // Gate sits in row 0 of the componentwise activation; w fills column 0.
        for (i, &wi) in w.iter().enumerate() {
            wm[i * d] = wi;
        }
        am[..d].copy_from_slice(a);
        cm[..d_p].copy_from_slice(c);
        let mut b1 = vec![0.0; d];
        b1[0] = b;
        ControlValues::Memory {
            w: wm,
            a: am,
            c: cm,
            b1,
            b2: vec![0.0; d],
            u: u.to_vec(),
            d_vec: d_vec.to_vec(),
            f,
        }
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.architecture() != spec.architecture {
            return Err(CoreError::InvalidSpec(format!(
                "control values are for {:?} but the model is {:?}",
                self.architecture(),
                spec.architecture
            )));
        }
        let check = |context: &'static str, v: &[f64], expected: usize| -> Result<()> {
            if v.len() != expected {
                return Err(CoreError::ShapeMismatch {
                    context,
                    expected,
                    got: v.len(),
                });
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(CoreError::InvalidSpec(format!(
                    "non-finite entry in control field {context}"
                )));
            }
            Ok(())
        };
        match self {
            ControlValues::FirstOrder { w, a, b } | ControlValues::Momentum { w, a, b } => {
                check("controls.w", w, spec.d)?;
                check("controls.a", a, spec.d)?;
                if !b.is_finite() {
                    return Err(CoreError::InvalidSpec("non-finite control offset b".into()));
                }
            }
            ControlValues::Memory {
                w,
                a,
                c,
                b1,
                b2,
                u,
                d_vec,
                f,
            } => {
                check("controls.w", w, spec.d * spec.d)?;
                check("controls.a", a, spec.d * spec.d)?;
                check("controls.c", c, spec.d * spec.d_p)?;
                check("controls.b1", b1, spec.d)?;
                check("controls.b2", b2, spec.d)?;
                check("controls.u", u, spec.d_p)?;
                check("controls.d_vec", d_vec, spec.d)?;
                if !f.is_finite() {
                    return Err(CoreError::InvalidSpec("non-finite control offset f".into()));
                }
            }
        }
        Ok(())
    }

    /// Largest absolute control entry, used against the magnitude cap.
    pub fn max_abs(&self) -> f64 {
        let fold = |vs: &[&[f64]], scalars: &[f64]| -> f64 {
            let m = vs
                .iter()
                .flat_map(|v| v.iter())
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            scalars.iter().fold(m, |m, v| m.max(v.abs()))
        };
        match self {
            ControlValues::FirstOrder { w, a, b } | ControlValues::Momentum { w, a, b } => {
                fold(&[w, a], &[*b])
            }
            ControlValues::Memory {
                w,
                a,
                c,
                b1,
                b2,
                u,
                d_vec,
                f,
            } => fold(&[w, a, c, b1, b2, u, d_vec], &[*f]),
        }
    }
}

/// Time-varying part of a segment's scalar offset. The offset rides on top of
/// the static `b` (first-order/momentum) or `f` (memory gate): the integrator
/// re-evaluates it at every step, so a single segment can hold a hyperplane at
/// a fixed distance from a moving point or sweep it at a constant rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MovingOffset {
    /// offset(t) = slope * (t - t_start of the segment).
    Ramp { slope: f64 },
    /// offset(t) = x^(coord) of the tracked point (index into the schedule's
    /// `tracked_points`), co-integrated alongside the main trajectory.
    TrackPoint { point: usize, coord: usize },
}

/// One constant-control slab of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSegment {
    pub t_start: f64,
    pub duration: f64,
    pub params: ControlValues,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<MovingOffset>,
}

impl ControlSegment {
    pub fn new(t_start: f64, duration: f64, params: ControlValues) -> Self {
        ControlSegment {
            t_start,
            duration,
            params,
            offset: None,
        }
    }

    pub fn with_offset(mut self, offset: MovingOffset) -> Self {
        self.offset = Some(offset);
        self
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }
}

/// Shortest segment accepted by schedule validation.
pub const MIN_SEGMENT_DURATION: f64 = 1e-12;

/// Relative slack allowed when checking segment contiguity.
const CONTIGUITY_TOL: f64 = 1e-9;

/// A piecewise-constant control law over [t0, t_final], the artifact every
/// synthesis routine produces and every integrator consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub model: ModelSpec,
    pub t0: f64,
    pub t_final: f64,
    /// Reference trajectories for `MovingOffset::TrackPoint`; initial states
    /// at t0, co-integrated with whatever trajectory the schedule drives.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tracked_points: Vec<PhasePoint>,
    pub segments: Vec<ControlSegment>,
}

impl ControlSchedule {
    pub fn new(model: ModelSpec, t0: f64, t_final: f64) -> Self {
        ControlSchedule {
            model,
            t0,
            t_final,
            tracked_points: Vec::new(),
            segments: Vec::new(),
        }
    }

    /// Appends a segment at the current end of the schedule.
    pub fn push(&mut self, duration: f64, params: ControlValues) {
        let t_start = self
            .segments
            .last()
            .map(|s| s.t_end())
            .unwrap_or(self.t0);
        self.segments
            .push(ControlSegment::new(t_start, duration, params));
    }

    pub fn push_with_offset(&mut self, duration: f64, params: ControlValues, offset: MovingOffset) {
        self.push(duration, params);
        self.segments.last_mut().unwrap().offset = Some(offset);
    }

    pub fn end_time(&self) -> f64 {
        self.segments
            .last()
            .map(|s| s.t_end())
            .unwrap_or(self.t0)
    }

    pub fn switch_count(&self) -> usize {
        self.segments.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.t_final > self.t0) {
            return Err(CoreError::InvalidSpec(format!(
                "horizon must satisfy t_final > t0, got [{}, {}]",
                self.t0, self.t_final
            )));
        }
        for tp in &self.tracked_points {
            tp.validate(&self.model)?;
        }
        if self.segments.is_empty() {
            return Err(CoreError::InvalidSpec(
                "schedule must contain at least one segment".into(),
            ));
        }
        let span = self.t_final - self.t0;
        let tol = CONTIGUITY_TOL * span.max(1.0);
        let mut expected = self.t0;
        for (index, seg) in self.segments.iter().enumerate() {
            if !(seg.duration.is_finite() && seg.duration >= MIN_SEGMENT_DURATION) {
                return Err(CoreError::InvalidSpec(format!(
                    "segment {index} duration {} below minimum {MIN_SEGMENT_DURATION}",
                    seg.duration
                )));
            }
            if (seg.t_start - expected).abs() > tol {
                return Err(CoreError::NonContiguousSchedule {
                    index,
                    expected,
                    got: seg.t_start,
                });
            }
            seg.params.validate(&self.model)?;
            if let Some(off) = &seg.offset {
                match off {
                    MovingOffset::Ramp { slope } => {
                        if !slope.is_finite() {
                            return Err(CoreError::InvalidSpec(format!(
                                "segment {index} ramp slope is non-finite"
                            )));
                        }
                    }
                    MovingOffset::TrackPoint { point, coord } => {
                        if *point >= self.tracked_points.len() {
                            return Err(CoreError::InvalidSpec(format!(
                                "segment {index} tracks point {point} but only {} tracked points exist",
                                self.tracked_points.len()
                            )));
                        }
                        if *coord >= self.model.d {
                            return Err(CoreError::InvalidSpec(format!(
                                "segment {index} tracks coordinate {coord} but d = {}",
                                self.model.d
                            )));
                        }
                    }
                }
            }
            expected = seg.t_end();
        }
        if (expected - self.t_final).abs() > tol {
            return Err(CoreError::NonContiguousSchedule {
                index: self.segments.len(),
                expected: self.t_final,
                got: expected,
            });
        }
        Ok(())
    }
}

/// Time-stamped result of integrating one initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
}

impl Trajectory {
    pub fn endpoint(&self) -> &PhasePoint {
        self.points.last().expect("trajectory is never empty")
    }

    /// State value at the grid node closest to `t`.
    pub fn state_at(&self, t: f64) -> &PhasePoint {
        let idx = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(i) => {
                if i == 0 {
                    0
                } else if i >= self.times.len() {
                    self.times.len() - 1
                } else if (self.times[i] - t).abs() < (t - self.times[i - 1]).abs() {
                    i
                } else {
                    i - 1
                }
            }
        };
        &self.points[idx]
    }

    /// CSV export: header `t,x_1..x_d,p_1..p_dp`, one row per grid node.
    pub fn to_csv(&self) -> String {
        let d = self.points.first().map(|p| p.x.len()).unwrap_or(0);
        let d_p = self.points.first().map(|p| p.p.len()).unwrap_or(0);
        let mut out = String::from("t");
        for j in 1..=d {
            out.push_str(&format!(",x_{j}"));
        }
        for j in 1..=d_p {
            out.push_str(&format!(",p_{j}"));
        }
        out.push('\n');
        for (t, pt) in self.times.iter().zip(self.points.iter()) {
            out.push_str(&format!("{t}"));
            for v in pt.x.iter().chain(pt.p.iter()) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Drops the auxiliary components, keeping the observable state.
pub fn project_state(pt: &PhasePoint) -> Vec<f64> {
    pt.x.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn momentum_spec() -> ModelSpec {
        ModelSpec::momentum(2, Activation::Relu)
    }

    #[test]
    fn activation_matches_definitions() {
        assert_eq!(Activation::Relu.value(-3.0), 0.0);
        assert_eq!(Activation::Relu.value(0.0), 0.0);
        assert_eq!(Activation::Relu.value(2.5), 2.5);
        assert_eq!(Activation::Sigmoid.value(0.0), 0.5);
        assert!(Activation::Sigmoid.value(40.0) > 0.999_999);
        assert!(Activation::Sigmoid.value(-40.0) < 1e-6);
    }

    #[test]
    fn relu_derivative_is_zero_at_kink() {
        assert_eq!(Activation::Relu.derivative(0.0), 0.0);
        assert_eq!(Activation::Relu.derivative(-1.0), 0.0);
        assert_eq!(Activation::Relu.derivative(1.0), 1.0);
    }

    #[test]
    fn model_spec_dimension_rules() {
        assert!(ModelSpec::first_order(2, Activation::Relu).validate().is_ok());
        assert!(ModelSpec::momentum(3, Activation::Relu).validate().is_ok());
        assert!(ModelSpec::memory(1, 2, Activation::Relu).validate().is_ok());

        let mut bad = ModelSpec::first_order(2, Activation::Relu);
        bad.d_p = 1;
        assert!(bad.validate().is_err());

        let mut bad = momentum_spec();
        bad.d_p = 3;
        assert!(bad.validate().is_err());

        let mut bad = momentum_spec();
        bad.epsilon = 0.0;
        assert!(bad.validate().is_err());

        let bad = ModelSpec::memory(2, 0, Activation::Relu);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn schedule_requires_contiguity() {
        let spec = momentum_spec();
        let mut sched = ControlSchedule::new(spec.clone(), 0.0, 2.0);
        sched.push(1.0, ControlValues::zero(&spec));
        sched.push(1.0, ControlValues::zero(&spec));
        assert!(sched.validate().is_ok());

        sched.segments[1].t_start = 1.5;
        match sched.validate() {
            Err(CoreError::NonContiguousSchedule { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected contiguity error, got {other:?}"),
        }
    }

    #[test]
    fn schedule_rejects_gap_at_horizon_end() {
        let spec = momentum_spec();
        let mut sched = ControlSchedule::new(spec.clone(), 0.0, 2.0);
        sched.push(1.0, ControlValues::zero(&spec));
        assert!(sched.validate().is_err());
    }

    #[test]
    fn schedule_rejects_degenerate_duration() {
        let spec = momentum_spec();
        let mut sched = ControlSchedule::new(spec.clone(), 0.0, 1.0);
        sched.push(1e-13, ControlValues::zero(&spec));
        sched.push(1.0 - 1e-13, ControlValues::zero(&spec));
        assert!(sched.validate().is_err());
    }

    #[test]
    fn schedule_rejects_dangling_tracked_point() {
        let spec = momentum_spec();
        let mut sched = ControlSchedule::new(spec.clone(), 0.0, 1.0);
        sched.push_with_offset(
            1.0,
            ControlValues::zero(&spec),
            MovingOffset::TrackPoint { point: 0, coord: 0 },
        );
        assert!(sched.validate().is_err());

        sched
            .tracked_points
            .push(PhasePoint::resting(vec![0.0, 0.0], 2));
        assert!(sched.validate().is_ok());
    }

    #[test]
    fn control_values_shape_checked() {
        let spec = momentum_spec();
        let bad = ControlValues::Momentum {
            w: vec![1.0],
            a: vec![0.0, 0.0],
            b: 0.0,
        };
        assert!(bad.validate(&spec).is_err());

        let mismatched = ControlValues::FirstOrder {
            w: vec![0.0, 0.0],
            a: vec![0.0, 0.0],
            b: 0.0,
        };
        assert!(mismatched.validate(&spec).is_err());
    }

    #[test]
    fn rank_one_memory_embedding_shapes() {
        let cv = ControlValues::memory_rank_one(
            2,
            3,
            &[1.0, 2.0],
            &[0.5, 0.0],
            &[0.0, 1.0, 0.0],
            7.0,
            &[0.0, 0.0, 4.0],
            &[1.0, 0.0],
            -2.0,
        );
        let spec = ModelSpec::memory(2, 3, Activation::Relu);
        cv.validate(&spec).unwrap();
        match cv {
            ControlValues::Memory { w, a, c, b1, .. } => {
                // Only column 0 of W carries the gate output.
                assert_eq!(w, vec![1.0, 0.0, 2.0, 0.0]);
                assert_eq!(&a[..2], &[0.5, 0.0]);
                assert_eq!(&a[2..], &[0.0, 0.0]);
                assert_eq!(&c[..3], &[0.0, 1.0, 0.0]);
                assert_eq!(&c[3..], &[0.0, 0.0, 0.0]);
                assert_eq!(b1, vec![7.0, 0.0]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn trajectory_csv_header_and_rows() {
        let traj = Trajectory {
            times: vec![0.0, 0.5],
            points: vec![
                PhasePoint::new(vec![1.0, 2.0], vec![3.0, 4.0]),
                PhasePoint::new(vec![1.5, 2.5], vec![3.5, 4.5]),
            ],
        };
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x_1,x_2,p_1,p_2");
        assert_eq!(lines.next().unwrap(), "0,1,2,3,4");
        assert_eq!(lines.next().unwrap(), "0.5,1.5,2.5,3.5,4.5");
    }

    #[test]
    fn schedule_json_round_trip() {
        let spec = ModelSpec::memory(1, 2, Activation::Relu);
        let mut sched = ControlSchedule::new(spec.clone(), -1.0, 2.0);
        sched.push(
            1.5,
            ControlValues::memory_rank_one(
                1,
                2,
                &[1.0],
                &[0.25],
                &[0.5, -0.5],
                0.125,
                &[1.0, 2.0],
                &[1.0],
                -0.75,
            ),
        );
        sched.push_with_offset(
            1.5,
            ControlValues::zero(&spec),
            MovingOffset::Ramp { slope: 0.3 },
        );
        sched.validate().unwrap();

        let json = serde_json::to_string_pretty(&sched).unwrap();
        let back: ControlSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(sched, back);

        let reserialized = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(json, reserialized);
    }

    #[test]
    fn project_state_drops_auxiliary() {
        let pt = PhasePoint::new(vec![1.0, 2.0], vec![9.0, 9.0]);
        assert_eq!(project_state(&pt), vec![1.0, 2.0]);
    }
}
