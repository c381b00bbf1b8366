//! Adaptive Gauss-Kronrod (7/15 point) integration.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub abs_tol: f64,
    pub max_evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * half, ((k - g) * half).abs())
}

impl Integrator {
    pub fn new(abs_tol: f64) -> Self {
        Self { abs_tol, max_evaluations: 200_000 }
    }

    pub fn with_max_evaluations(mut self, max_evaluations: usize) -> Self {
        self.max_evaluations = max_evaluations;
        self
    }

    /// Integrates `f` over `[a, b]`, repeatedly bisecting the segment with the
    /// largest error estimate until the summed estimate is below `abs_tol`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<Estimate> {
        if a == b {
            return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
        }
        let (value, error) = kronrod(&mut f, a, b);
        let mut evaluations = 15;
        let mut heap = BinaryHeap::new();
        heap.push(Segment { a, b, value, error });
        let (mut total, mut total_err) = (value, error);
        while total_err > self.abs_tol {
            if !total.is_finite() || evaluations + 30 > self.max_evaluations {
                return Err(Error::Numerical {
                    what: format!("adaptive quadrature on [{a}, {b}]"),
                    estimate: total_err,
                    tolerance: self.abs_tol,
                    evaluations,
                });
            }
            let worst = heap.pop().expect("non-empty");
            let mid = 0.5 * (worst.a + worst.b);
            let (lv, le) = kronrod(&mut f, worst.a, mid);
            let (rv, re) = kronrod(&mut f, mid, worst.b);
            evaluations += 30;
            total += lv + rv - worst.value;
            total_err += le + re - worst.error;
            heap.push(Segment { a: worst.a, b: mid, value: lv, error: le });
            heap.push(Segment { a: mid, b: worst.b, value: rv, error: re });
            if heap.len() % 64 == 0 {
                // refresh running sums to limit drift
                total = heap.iter().map(|s| s.value).sum();
                total_err = heap.iter().map(|s| s.error).sum();
            }
        }
        let value = heap.iter().map(|s| s.value).sum();
        let error = heap.iter().map(|s| s.error).sum();
        Ok(Estimate { value, error, evaluations })
    }

    /// Nested integral of `f(u, v)` over `[a, b] x [c, d]`. The inner integral
    /// uses a tolerance tightened by the outer interval length.
    pub fn integrate_2d<F: Fn(f64, f64) -> f64>(&self, f: F, (a, b): (f64, f64), (c, d): (f64, f64)) -> Result<Estimate> {
        let inner = Integrator { abs_tol: self.abs_tol / (4.0 * (b - a).abs().max(1.0)), ..*self };
        let mut failure = None;
        let mut evaluations = 0;
        let outer = self.integrate(
            |u| match inner.integrate(|v| f(u, v), c, d) {
                Ok(e) => {
                    evaluations += e.evaluations;
                    e.value
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            a,
            b,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let outer = outer?;
        Ok(Estimate { evaluations, ..outer })
    }
}
