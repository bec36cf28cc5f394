//! Numerical certification of activation properties: global minima,
//! monotone pieces, boundedness, saturation and kinks at zero.

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};

/// Grid size for the coarse minimum scan.
pub const MIN_SCAN_POINTS: usize = 10_001;
/// Bracket width at which refinement stops.
pub const X_TOL: f64 = 1e-9;
/// Window used by [`classify`].
pub const CLASSIFY_WINDOW: (f64, f64) = (-50.0, 50.0);
/// Left/right derivative gap above which x = 0 counts as a kink.
pub const KINK_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneInterval {
    pub lo: f64,
    pub hi: f64,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: f64,
    pub f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub kind: ActivationKind,
    pub global_min_x: f64,
    pub global_min_f: f64,
    pub bounded_below: bool,
    pub bounded_above: bool,
    pub monotonic: bool,
    pub saturates_above: bool,
    pub kink_at_zero: bool,
}

fn check_window(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::argument(format!("window [{lo}, {hi}] must be finite")));
    }
    if lo >= hi {
        return Err(Error::argument(format!("need lo < hi, got [{lo}, {hi}]")));
    }
    Ok(())
}

/// (f(x+h) - f(x-h)) / 2h.
pub fn central_diff(kind: ActivationKind, x: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::argument(format!("step must be > 0, got {h}")));
    }
    let (a, b) = (x + h, x - h);
    if !(x.is_finite() && a.is_finite() && b.is_finite()) {
        return Err(Error::argument(format!("x = {x}, h = {h} leaves the finite range")));
    }
    Ok((kind.value(a) - kind.value(b)) / (2.0 * h))
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i == n - 1 { hi } else { lo + step * i as f64 })
}

/// Global minimum on [lo, hi]: a 10 001-point scan, golden-section search on
/// the cell around the best grid point, then bisection on the derivative sign
/// when that cell holds a stationary point. Ties keep the leftmost grid point.
pub fn global_minimum(kind: ActivationKind, lo: f64, hi: f64) -> Result<Minimum> {
    check_window(lo, hi)?;
    let f = |x: f64| kind.value(x);
    let grid: Vec<f64> = linspace(lo, hi, MIN_SCAN_POINTS).collect();

    let mut best = 0;
    let mut best_f = f(grid[0]);
    for (i, &x) in grid.iter().enumerate().skip(1) {
        let v = f(x);
        if v < best_f {
            best = i;
            best_f = v;
        }
    }

    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let mut x = golden_section(&f, a, b);

    // the sign change of f' pins the minimizer below the resolution of f
    let (da, db) = (kind.slope(a), kind.slope(b));
    if da < 0.0 && db > 0.0 {
        x = bisect_sign(|t| kind.slope(t), a, b, -1.0);
    }

    let fx = f(x);
    if fx < best_f {
        Ok(Minimum { x, f: fx })
    } else {
        Ok(Minimum {
            x: grid[best],
            f: best_f,
        })
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > X_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [a, mid, b]
        .into_iter()
        .min_by(|p, q| f(*p).total_cmp(&f(*q)))
        .unwrap()
}

/// Bisects [a, b] where `g` has sign `left_sign` at `a` and the opposite at `b`.
/// Zeros count as the right-hand side.
fn bisect_sign(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, left_sign: f64) -> f64 {
    while b - a > X_TOL {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m) * left_sign > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Maximal monotone pieces of `kind` on [lo, hi] from the sign of the analytic
/// derivative on an `n`-point grid. Zero derivative joins the neighbouring
/// piece; each sign change is refined by bisection.
pub fn monotonic_intervals(
    kind: ActivationKind,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<Vec<MonotoneInterval>> {
    check_window(lo, hi)?;
    if n < 2 {
        return Err(Error::argument(format!("grid needs n >= 2 points, got {n}")));
    }
    let sign = |v: f64| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    };

    let mut breaks = Vec::new();
    let mut current = 0.0;
    let mut last_x = lo;
    let mut first_sign = 0.0;
    for x in linspace(lo, hi, n) {
        let s = sign(kind.slope(x));
        if s == 0.0 {
            continue;
        }
        if current == 0.0 {
            first_sign = s;
        } else if s != current {
            breaks.push(bisect_sign(|t| kind.slope(t), last_x, x, current));
        }
        current = s;
        last_x = x;
    }

    let dir = |s: f64| {
        if s < 0.0 {
            Direction::Decreasing
        } else {
            Direction::Increasing
        }
    };
    let mut out = Vec::with_capacity(breaks.len() + 1);
    let mut start = lo;
    let mut s = first_sign;
    for b in breaks {
        out.push(MonotoneInterval {
            lo: start,
            hi: b,
            direction: dir(s),
        });
        start = b;
        s = -s;
    }
    out.push(MonotoneInterval {
        lo: start,
        hi,
        direction: dir(s),
    });
    Ok(out)
}

/// Certifies the property-table entries for one activation.
pub fn classify(kind: ActivationKind) -> PropertyReport {
    let f = |x: f64| kind.value(x);
    let (lo, hi) = CLASSIFY_WINDOW;
    let min = global_minimum(kind, lo, hi).expect("fixed window is valid");

    let unbounded_below = f(-200.0) < f(-100.0) - 1.0;
    let unbounded_above = f(100.0) > f(50.0) + 1.0 && f(200.0) > f(100.0) + 1.0;
    let bounded_above = !unbounded_above;
    let saturates_above =
        bounded_above && (f(200.0) - f(100.0)).abs() < 1e-6 && kind.slope(200.0).abs() < 1e-6;

    let monotonic = monotonic_intervals(kind, lo, hi, MIN_SCAN_POINTS)
        .expect("fixed window is valid")
        .len()
        == 1;

    let h = 1e-8;
    let left = central_diff(kind, -1e-7, h).expect("finite");
    let right = central_diff(kind, 1e-7, h).expect("finite");

    PropertyReport {
        kind,
        global_min_x: min.x,
        global_min_f: min.f,
        bounded_below: min.f.is_finite() && !unbounded_below,
        bounded_above,
        monotonic,
        saturates_above,
        kink_at_zero: (left - right).abs() > KINK_TOL,
    }
}
