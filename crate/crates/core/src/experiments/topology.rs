//! Coarse topology of a binary decision picture: does the boundary close
//! up strictly inside the square, reach its border, or not exist at all?

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTopology {
    /// Both classes occur and the border ring is single-class: the
    /// decision boundary is confined to the interior.
    ClosedInInterior,
    /// Both classes reach the border ring, so the boundary hits the edge.
    TouchesBorder,
    /// Only one class is present; there is no boundary.
    Degenerate,
}

/// Classifies a row-major binary grid of `rows` x `cols` cells.
pub fn boundary_topology_probe(
    binary: &[bool],
    rows: usize,
    cols: usize,
) -> Result<BoundaryTopology> {
    if rows < 2 || cols < 2 || binary.len() != rows * cols {
        return Err(CoreError::InvalidSpec(format!(
            "grid must be at least 2x2 with matching data, got {rows}x{cols} with {} cells",
            binary.len()
        )));
    }
    let any_true = binary.iter().any(|b| *b);
    let any_false = binary.iter().any(|b| !*b);
    if !(any_true && any_false) {
        return Ok(BoundaryTopology::Degenerate);
    }
    let mut ring_true = false;
    let mut ring_false = false;
    for r in 0..rows {
        for c in 0..cols {
            if r == 0 || r == rows - 1 || c == 0 || c == cols - 1 {
                if binary[r * cols + c] {
                    ring_true = true;
                } else {
                    ring_false = true;
                }
            }
        }
    }
    Ok(if ring_true && ring_false {
        BoundaryTopology::TouchesBorder
    } else {
        BoundaryTopology::ClosedInInterior
    })
}
