//! Tracking of a whole domain: map approximation via cell compression.
//!
//! A box domain is cut into a uniform grid of cells, each carrying the
//! curve its representative should follow. First-order flows (realized in
//! the memory model with C = 0 and a frozen memory bank) squeeze every
//! cell toward a point: one attracting plane per grid slab compresses the
//! slab's material onto its lower edge, and a second pass of planes placed
//! just below each compressed slab image shrinks the images relative to
//! the gaps between them, which plain one-sided flows cannot do in one
//! step because they scale an image and its surrounding gaps equally. A
//! thin strip at each slab's lower edge is sacrificed: its material ends
//! up between neighboring images and tracks a mixture of their curves,
//! contributing only its small measure to the L2 error. After compression
//! the tracking controller follows each cell's curve from the cell's image
//! point, and nearby points ride along by continuity.

use super::surrogate::{build_surrogate, SampledCurve, SurrogateReport};
use super::tracking::tracking_control;
use crate::dynamics::integrate::integrate_rk4;
use crate::dynamics::types::{
    Activation, ControlSchedule, ControlValues, ModelSpec, PhasePoint,
};
use crate::error::{CoreError, Result};

/// Fraction of each cell's width sacrificed at its lower edge.
const STRIP_FRACTION: f64 = 1e-3;

/// Per-slab contraction factor of the first compression pass.
const PASS_FACTOR: f64 = 0.5;

/// Image radii are repaired to at most this fraction of the neighboring
/// gap, so points of one image cannot be confused with a neighbor's.
const RADIUS_SAFETY: f64 = 0.05;

/// Target image half-width relative to the cell width when there is a
/// single slab and no gap to compare against.
const LONE_RADIUS: f64 = 1e-3;

/// A map-approximation problem: a box, a uniform grid over it, one curve
/// per cell (row-major over the grid), and the surrogate settings used for
/// the tracking stage.
#[derive(Debug, Clone)]
pub struct UniversalProblem {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells_per_axis: Vec<usize>,
    pub curves: Vec<SampledCurve>,
    pub n_t: usize,
    pub eps_h: f64,
    pub d_p: usize,
}

#[derive(Debug, Clone)]
pub struct UniversalReport {
    /// Image of each cell's center after compression; the tracking sources.
    pub sources: Vec<Vec<f64>>,
    pub surrogate: SurrogateReport,
    /// Length of the compression prefix prepended before the warmup.
    pub compression_duration: f64,
    /// Largest image half-width after compression, over cells and axes.
    pub max_image_radius: f64,
}

/// One attracting plane on one coordinate: `up` pulls the region above the
/// plane toward it, the mirror pulls the region below.
struct Squeeze {
    coord: usize,
    plane: f64,
    up: bool,
    factor: f64,
}

impl Squeeze {
    fn apply(&self, x: f64) -> f64 {
        if self.up {
            if x > self.plane {
                self.plane + self.factor * (x - self.plane)
            } else {
                x
            }
        } else if x < self.plane {
            self.plane - self.factor * (self.plane - x)
        } else {
            x
        }
    }

    fn controls(&self, spec: &ModelSpec) -> (f64, ControlValues) {
        let (d, d_p) = (spec.d, spec.d_p);
        let mut w = vec![0.0; d * d];
        let mut a = vec![0.0; d * d];
        let mut b1 = vec![0.0; d];
        let c = self.coord;
        // Signed distance to the plane scales by e^{rate * t}, so a
        // contraction (factor < 1) needs the decaying sign and an
        // expansion (factor > 1) the growing one.
        let rate = if self.factor < 1.0 { -1.0 } else { 1.0 };
        if self.up {
            w[c * d + c] = rate;
            a[c * d + c] = 1.0;
            b1[c] = -self.plane;
        } else {
            w[c * d + c] = -rate;
            a[c * d + c] = -1.0;
            b1[c] = self.plane;
        }
        let cv = ControlValues::Memory {
            w,
            a,
            c: vec![0.0; d * d_p],
            b1,
            b2: vec![0.0; d],
            u: vec![0.0; d_p],
            d_vec: vec![0.0; d],
            f: 0.0,
        };
        (self.factor.ln().abs(), cv)
    }
}

pub fn universal_tracking(problem: &UniversalProblem) -> Result<(ControlSchedule, UniversalReport)> {
    let d = problem.lo.len();
    if d == 0
        || problem.hi.len() != d
        || problem.cells_per_axis.len() != d
        || problem.cells_per_axis.iter().any(|&s| s == 0)
    {
        return Err(CoreError::InvalidSpec(
            "domain needs matching lo/hi/cell counts with at least one cell per axis".into(),
        ));
    }
    if problem.lo.iter().zip(&problem.hi).any(|(l, h)| !(h > l)) {
        return Err(CoreError::InvalidSpec(
            "domain box must have positive extent on every axis".into(),
        ));
    }
    let n_cells: usize = problem.cells_per_axis.iter().product();
    if problem.curves.len() != n_cells {
        return Err(CoreError::InvalidSpec(format!(
            "expected one curve per cell ({n_cells}), got {}",
            problem.curves.len()
        )));
    }

    // Compression plan per coordinate. Slab intervals transform affinely
    // under every squeeze, so the builder tracks interval endpoints and
    // places each plane from the current geometry.
    let mut squeezes: Vec<Squeeze> = Vec::new();
    // Per coordinate: the current [low, high] of each slab's retained part.
    let mut slabs: Vec<Vec<(f64, f64)>> = Vec::with_capacity(d);
    for c in 0..d {
        let s_count = problem.cells_per_axis[c];
        let width = (problem.hi[c] - problem.lo[c]) / s_count as f64;
        let strip = STRIP_FRACTION * width;
        let mut intervals: Vec<(f64, f64)> = (0..s_count)
            .map(|s| {
                let l = problem.lo[c] + s as f64 * width;
                (l + strip, l + width)
            })
            .collect();
        let mut push = |sq: Squeeze, intervals: &mut Vec<(f64, f64)>| {
            for iv in intervals.iter_mut() {
                *iv = (sq.apply(iv.0), sq.apply(iv.1));
            }
            squeezes.push(sq);
        };

        // Pass 1, top down: compress each slab onto its lower edge. Slabs
        // below a plane are untouched; images above ride along.
        for s in (0..s_count).rev() {
            push(
                Squeeze {
                    coord: c,
                    plane: intervals[s].0,
                    up: true,
                    factor: if s_count == 1 {
                        2.0 * LONE_RADIUS
                    } else {
                        PASS_FACTOR
                    },
                },
                &mut intervals,
            );
        }

        // Pass 2, top down: shrink each image relative to the gap below it
        // with a plane inside that gap. A contraction alone also crushes
        // every gap above the plane, and the factors would compound into
        // gaps beneath float resolution, so each contraction is undone by
        // the exact inverse expansion around a plane just above the
        // shrunken image: the composition is a pure translation for the
        // stack above (it settles down by the freed space) and leaves only
        // the one image compressed. The mirrored plane handles the bottom
        // image, which has nothing beneath it to disturb.
        for s in (1..s_count).rev() {
            let gap_below = intervals[s].0 - intervals[s - 1].1;
            let gap_above = if s + 1 < s_count {
                intervals[s + 1].0 - intervals[s].1
            } else {
                gap_below
            };
            let radius = 0.5 * (intervals[s].1 - intervals[s].0);
            let factor = (RADIUS_SAFETY * gap_above.min(gap_below) / radius).min(1.0);
            if factor < 1.0 {
                push(
                    Squeeze {
                        coord: c,
                        plane: intervals[s].0 - 0.5 * gap_below,
                        up: true,
                        factor,
                    },
                    &mut intervals,
                );
                if s + 1 < s_count {
                    push(
                        Squeeze {
                            coord: c,
                            plane: 0.5 * (intervals[s].1 + intervals[s + 1].0),
                            up: true,
                            factor: 1.0 / factor,
                        },
                        &mut intervals,
                    );
                }
            }
        }
        if s_count > 1 {
            let gap_above = intervals[1].0 - intervals[0].1;
            let radius = 0.5 * (intervals[0].1 - intervals[0].0);
            let factor = (RADIUS_SAFETY * gap_above / (2.0 * radius)).min(1.0);
            if factor < 1.0 {
                push(
                    Squeeze {
                        coord: c,
                        plane: intervals[0].1 + 0.25 * gap_above,
                        up: false,
                        factor,
                    },
                    &mut intervals,
                );
            }
        }
        slabs.push(intervals);
    }

    // Sources: image of each cell center = midpoint of its slab images.
    let mut sources: Vec<Vec<f64>> = Vec::with_capacity(n_cells);
    for cell in 0..n_cells {
        let mut idx = cell;
        let mut src = vec![0.0; d];
        for c in (0..d).rev() {
            let s = idx % problem.cells_per_axis[c];
            idx /= problem.cells_per_axis[c];
            src[c] = 0.5 * (slabs[c][s].0 + slabs[c][s].1);
        }
        sources.push(src);
    }
    let max_image_radius = slabs
        .iter()
        .flatten()
        .map(|iv| 0.5 * (iv.1 - iv.0))
        .fold(0.0_f64, f64::max);

    let (targets, surrogate) =
        build_surrogate(&problem.curves, &sources, problem.n_t, problem.eps_h)?;
    let tracking = tracking_control(&targets, problem.d_p)?;

    // Assemble: compression prefix, then the tracking schedule (warmup
    // included) with its segment order and moving offsets preserved.
    let spec = ModelSpec::memory(d, problem.d_p, Activation::Relu);
    let compression_duration: f64 = squeezes
        .iter()
        .map(|sq| sq.controls(&spec).0)
        .sum();
    let warmup = targets[0].warmup;
    let mut schedule = ControlSchedule::new(
        spec.clone(),
        -warmup - compression_duration,
        tracking.t_final,
    );
    for sq in &squeezes {
        let (dur, cv) = sq.controls(&spec);
        schedule.push(dur, cv);
    }
    for seg in &tracking.segments {
        match &seg.offset {
            Some(off) => schedule.push_with_offset(seg.duration, seg.params.clone(), off.clone()),
            None => schedule.push(seg.duration, seg.params.clone()),
        }
    }
    schedule.validate()?;
    Ok((
        schedule,
        UniversalReport {
            sources,
            surrogate,
            compression_duration,
            max_image_radius,
        },
    ))
}

/// Monte-Carlo style measurement on a fixed probe grid: sup over recorded
/// times in the curves' domain of the root-mean-square (over probes) of
/// the Euclidean deviation from the true map.
pub fn measured_sup_l2(
    schedule: &ControlSchedule,
    probes: &[Vec<f64>],
    truth: impl Fn(&[f64], f64) -> Vec<f64>,
    t_range: (f64, f64),
    n_per_unit: f64,
) -> Result<f64> {
    if probes.is_empty() {
        return Err(CoreError::InvalidSpec("no probe points".into()));
    }
    let d_p = schedule.model.d_p;
    let mut sq_sum: Vec<f64> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    for probe in probes {
        let start = PhasePoint::new(probe.clone(), vec![0.0; d_p]);
        let traj = integrate_rk4(schedule, &start, n_per_unit)?;
        if sq_sum.is_empty() {
            sq_sum = vec![0.0; traj.times.len()];
            times = traj.times.clone();
        }
        for ((t, pt), acc) in traj.times.iter().zip(&traj.points).zip(&mut sq_sum) {
            let want = truth(probe, *t);
            *acc += pt
                .x
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
    }
    let n = probes.len() as f64;
    let mut sup = 0.0_f64;
    for (t, acc) in times.iter().zip(&sq_sum) {
        if *t >= t_range.0 - 1e-12 && *t <= t_range.1 + 1e-12 {
            sup = sup.max((acc / n).sqrt());
        }
    }
    Ok(sup)
}
