//! Classifier evaluation on a regular lattice: L1 error against a truth
//! indicator and marching-squares extraction of the decision boundary.

use serde::{Deserialize, Serialize};

use crate::dynamics::types::Activation;
use crate::error::{CoreError, Result};
use crate::par::batch_map;
use crate::training::{forward_sample, TrainGrid, TrainableParams};

/// Classifier threshold separating the two predicted classes.
pub const CLASS_THRESHOLD: f64 = 0.5;

/// Readout values of a trained classifier on a res x res lattice over
/// [-1, 1]^2. `raw[iy * res + ix]` belongs to (coords[ix], coords[iy]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierGrid {
    pub res: usize,
    pub coords: Vec<f64>,
    pub raw: Vec<f64>,
}

impl ClassifierGrid {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.raw[iy * self.res + ix]
    }

    /// Thresholded classes, same layout as `raw`.
    pub fn binary(&self) -> Vec<bool> {
        self.raw.iter().map(|v| *v >= CLASS_THRESHOLD).collect()
    }
}

/// Runs the trained model over the lattice. Rows evaluate in parallel;
/// each row is filled in order, so the layout is deterministic.
pub fn classifier_grid(
    params: &TrainableParams,
    grid: &TrainGrid,
    activation: Activation,
    res: usize,
) -> Result<ClassifierGrid> {
    if res < 2 {
        return Err(CoreError::InvalidSpec(format!(
            "lattice needs at least 2 points per axis, got {res}"
        )));
    }
    if params.d != 2 {
        return Err(CoreError::ShapeMismatch {
            context: "planar classifier lattice",
            expected: 2,
            got: params.d,
        });
    }
    let readout = params
        .readout
        .as_ref()
        .ok_or_else(|| CoreError::InvalidSpec("classifier needs a readout".into()))?;
    let coords: Vec<f64> = (0..res)
        .map(|k| -1.0 + 2.0 * k as f64 / (res - 1) as f64)
        .collect();
    let rows: Vec<usize> = (0..res).collect();
    let raw_rows = batch_map(&rows, |iy| -> Result<Vec<f64>> {
        let y = coords[*iy];
        let mut row = Vec::with_capacity(res);
        for &x in &coords {
            let hist = forward_sample(params, grid, activation, &[x, y])?;
            let xt = hist.final_state();
            row.push(readout.p[0] * xt[0] + readout.p[1] * xt[1] + readout.c0);
        }
        Ok(row)
    });
    let mut raw = Vec::with_capacity(res * res);
    for row in raw_rows {
        raw.extend(row?);
    }
    Ok(ClassifierGrid { res, coords, raw })
}

/// Mean over the lattice of |thresholded prediction - truth|: the L1
/// distance under Lebesgue measure normalized to the unit square's area.
pub fn l1_generalization_error(
    grid: &ClassifierGrid,
    truth: impl Fn(f64, f64) -> bool,
) -> f64 {
    let mut wrong = 0usize;
    for (iy, &y) in grid.coords.iter().enumerate() {
        for (ix, &x) in grid.coords.iter().enumerate() {
            let predicted = grid.value(ix, iy) >= CLASS_THRESHOLD;
            if predicted != truth(x, y) {
                wrong += 1;
            }
        }
    }
    wrong as f64 / (grid.res * grid.res) as f64
}

/// Extracts the level set `raw = level` as line segments, one cell at a
/// time. Saddle cells are split by the cell-center average. Segments are
/// emitted in row-major cell order, endpoints as [x0, y0, x1, y1].
pub fn marching_squares(grid: &ClassifierGrid, level: f64) -> Vec<[f64; 4]> {
    let res = grid.res;
    let mut segments = Vec::new();
    // Interpolated crossing between two lattice corners.
    let cross = |xa: f64, ya: f64, va: f64, xb: f64, yb: f64, vb: f64| -> (f64, f64) {
        let t = if (vb - va).abs() < f64::EPSILON {
            0.5
        } else {
            ((level - va) / (vb - va)).clamp(0.0, 1.0)
        };
        (xa + t * (xb - xa), ya + t * (yb - ya))
    };
    for iy in 0..res - 1 {
        for ix in 0..res - 1 {
            let (x0, x1) = (grid.coords[ix], grid.coords[ix + 1]);
            let (y0, y1) = (grid.coords[iy], grid.coords[iy + 1]);
            let v00 = grid.value(ix, iy);
            let v10 = grid.value(ix + 1, iy);
            let v11 = grid.value(ix + 1, iy + 1);
            let v01 = grid.value(ix, iy + 1);
            let code = usize::from(v00 >= level)
                | usize::from(v10 >= level) << 1
                | usize::from(v11 >= level) << 2
                | usize::from(v01 >= level) << 3;
            // Edge midpoints by interpolation: bottom, right, top, left.
            let eb = || cross(x0, y0, v00, x1, y0, v10);
            let er = || cross(x1, y0, v10, x1, y1, v11);
            let et = || cross(x0, y1, v01, x1, y1, v11);
            let el = || cross(x0, y0, v00, x0, y1, v01);
            let mut push = |a: (f64, f64), b: (f64, f64)| {
                segments.push([a.0, a.1, b.0, b.1]);
            };
            match code {
                0 | 15 => {}
                1 | 14 => push(el(), eb()),
                2 | 13 => push(eb(), er()),
                3 | 12 => push(el(), er()),
                4 | 11 => push(er(), et()),
                6 | 9 => push(eb(), et()),
                7 | 8 => push(el(), et()),
                5 | 10 => {
                    // Saddle: connect according to the center sample.
                    let center = 0.25 * (v00 + v10 + v11 + v01);
                    let center_hot = center >= level;
                    if (code == 5) == center_hot {
                        push(el(), et());
                        push(eb(), er());
                    } else {
                        push(el(), eb());
                        push(er(), et());
                    }
                }
                _ => unreachable!("4-bit case"),
            }
        }
    }
    segments
}
