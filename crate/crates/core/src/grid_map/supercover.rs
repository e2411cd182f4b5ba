/// Every grid cell touched by the closed segment `a`–`b`, in traversal order.
///
/// Cells are unit squares `[c, c+1) x [r, r+1)`. When the segment passes exactly
/// through a lattice corner, both cells adjacent to the corner on the near side are
/// reported as well as the diagonal cell, so corner-cutting is always detected.
/// Coordinates may be negative; callers filter against their grid bounds.
pub fn supercover(a: (f64, f64), b: (f64, f64)) -> Vec<(i64, i64)> {
    let mut cells = Vec::new();
    for_each_cell(a, b, |c| {
        cells.push(c);
        true
    });
    cells
}

/// Crossing times closer than this count as one lattice corner. Erring toward the
/// corner only adds cells, which keeps collision checks conservative.
const CORNER_EPS: f64 = 1e-9;

/// Visits the supercover cells of `a`–`b` until `visit` returns `false`.
/// Returns `false` iff the visitor stopped early.
pub fn for_each_cell(
    a: (f64, f64),
    b: (f64, f64),
    mut visit: impl FnMut((i64, i64)) -> bool,
) -> bool {
    let (ax, ay) = a;
    let (bx, by) = b;
    let mut cx = ax.floor() as i64;
    let mut cy = ay.floor() as i64;
    let ex = bx.floor() as i64;
    let ey = by.floor() as i64;

    let dx = bx - ax;
    let dy = by - ay;
    let step_x: i64 = if dx > 0.0 {
        1
    } else if dx < 0.0 {
        -1
    } else {
        0
    };
    let step_y: i64 = if dy > 0.0 {
        1
    } else if dy < 0.0 {
        -1
    } else {
        0
    };

    // Parametric position (t in [0, 1]) of the next vertical / horizontal grid line,
    // recomputed from the cell index each step so rounding never accumulates.
    let next_x = |cx: i64| {
        if step_x == 0 {
            f64::INFINITY
        } else {
            let boundary = if step_x > 0 { cx + 1 } else { cx } as f64;
            (boundary - ax) / dx
        }
    };
    let next_y = |cy: i64| {
        if step_y == 0 {
            f64::INFINITY
        } else {
            let boundary = if step_y > 0 { cy + 1 } else { cy } as f64;
            (boundary - ay) / dy
        }
    };

    if !visit((cx, cy)) {
        return false;
    }
    // Each step moves one axis strictly toward the end cell, so the walk is bounded.
    while cx != ex || cy != ey {
        let x_done = cx == ex;
        let y_done = cy == ey;
        let (tx, ty) = (next_x(cx), next_y(cy));
        if !x_done && !y_done && (tx - ty).abs() <= CORNER_EPS {
            // Corner crossing (up to rounding): report both side cells, then move diagonally.
            if !visit((cx + step_x, cy)) || !visit((cx, cy + step_y)) {
                return false;
            }
            cx += step_x;
            cy += step_y;
        } else if !x_done && (y_done || tx < ty) {
            cx += step_x;
        } else {
            cy += step_y;
        }
        if !visit((cx, cy)) {
            return false;
        }
    }
    true
}
