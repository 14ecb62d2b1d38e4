//! Explicit Runge–Kutta steppers over dynamic state vectors: the
//! Dormand–Prince 5(4) pair with PI step control and its 4th-order
//! continuous extension, plus a fixed-step classical RK4 with cubic
//! Hermite dense output for drift studies. Both integrate in either
//! parameter direction.

use nalgebra::DVector;

use crate::error::{Error, Result};

// Dormand-Prince tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; 0 selects it automatically.
    pub h_init: f64,
    /// Step cap; 0 means the span length.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 0.0,
            h_max: 0.0,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub fevals: usize,
}

/// One accepted step's interpolant.
#[derive(Debug, Clone)]
pub enum DenseSegment {
    /// 4th-order continuous extension of the Dormand–Prince pair.
    Dopri {
        s0: f64,
        h: f64,
        cont: [DVector<f64>; 5],
    },
    /// Cubic Hermite on the step endpoints.
    Hermite {
        s0: f64,
        h: f64,
        y0: DVector<f64>,
        y1: DVector<f64>,
        f0: DVector<f64>,
        f1: DVector<f64>,
    },
}

impl DenseSegment {
    fn start(&self) -> f64 {
        match self {
            Self::Dopri { s0, .. } | Self::Hermite { s0, .. } => *s0,
        }
    }

    pub fn eval(&self, s: f64) -> DVector<f64> {
        match self {
            Self::Dopri { s0, h, cont } => {
                let th = (s - s0) / h;
                let th1 = 1.0 - th;
                &cont[0]
                    + (&cont[1] + (&cont[2] + (&cont[3] + &cont[4] * th1) * th) * th1) * th
            }
            Self::Hermite { s0, h, y0, y1, f0, f1 } => {
                let th = (s - s0) / h;
                let th2 = th * th;
                let th3 = th2 * th;
                y0 * (2.0 * th3 - 3.0 * th2 + 1.0)
                    + f0 * ((th3 - 2.0 * th2 + th) * *h)
                    + y1 * (-2.0 * th3 + 3.0 * th2)
                    + f1 * ((th3 - th2) * *h)
            }
        }
    }
}

/// Integration result: accepted nodes, a dense interpolant over the
/// whole span, and step statistics.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub nodes: Vec<(f64, DVector<f64>)>,
    pub segments: Vec<DenseSegment>,
    pub stats: StepStats,
    posneg: f64,
}

impl OdeSolution {
    pub fn span(&self) -> (f64, f64) {
        let a = self.nodes.first().expect("solution has nodes").0;
        let b = self.nodes.last().expect("solution has nodes").0;
        (a, b)
    }

    pub fn last(&self) -> (f64, &DVector<f64>) {
        let (s, y) = self.nodes.last().expect("solution has nodes");
        (*s, y)
    }

    /// Dense evaluation; `s` must lie inside the integrated span (a
    /// relative slack of ~1e-9 of the span absorbs round-off at the
    /// endpoints).
    pub fn eval(&self, s: f64) -> DVector<f64> {
        let (a, b) = self.span();
        if self.segments.is_empty() {
            return self.nodes[0].1.clone();
        }
        let slack = 1e-9 * (b - a).abs().max(1.0);
        debug_assert!(
            (s - a) * self.posneg >= -slack && (b - s) * self.posneg >= -slack,
            "dense eval at {s} outside span [{a}, {b}]"
        );
        let s = if (s - a) * self.posneg < 0.0 {
            a
        } else if (b - s) * self.posneg < 0.0 {
            b
        } else {
            s
        };
        // Binary search for the segment containing s.
        let pn = self.posneg;
        let mut lo = 0usize;
        let mut hi = self.segments.len();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if (s - self.segments[mid].start()) * pn >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.segments[lo].eval(s)
    }
}

/// Called after each accepted step; may adjust the state (returning
/// `true` refreshes the cached derivative) or abort the integration.
pub type PostStep<'a> = &'a mut dyn FnMut(f64, &mut DVector<f64>) -> Result<bool>;

fn error_norm(err: &DVector<f64>, y0: &DVector<f64>, y1: &DVector<f64>, opts: &OdeOptions) -> f64 {
    let n = err.len();
    let mut acc = 0.0;
    for i in 0..n {
        let sk = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sk;
        acc += e * e;
    }
    (acc / n as f64).sqrt()
}

fn initial_step(
    f: &mut impl FnMut(f64, &DVector<f64>, &mut DVector<f64>),
    s0: f64,
    y0: &DVector<f64>,
    f0: &DVector<f64>,
    posneg: f64,
    h_cap: f64,
    opts: &OdeOptions,
    stats: &mut StepStats,
) -> f64 {
    let n = y0.len();
    let sk: Vec<f64> = (0..n).map(|i| opts.atol + opts.rtol * y0[i].abs()).collect();
    let rms = |v: &DVector<f64>| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            let e = v[i] / sk[i];
            acc += e * e;
        }
        (acc / n as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(h_cap);
    let y1 = y0 + f0 * (h0 * posneg);
    let mut f1 = DVector::zeros(n);
    f(s0 + h0 * posneg, &y1, &mut f1);
    stats.fevals += 1;
    let d2 = rms(&(&f1 - f0)) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    (100.0 * h0).min(h1).min(h_cap)
}

/// Adaptive Dormand–Prince 5(4) from `s0` to `s_end` (either direction).
pub fn integrate_dopri5(
    mut f: impl FnMut(f64, &DVector<f64>, &mut DVector<f64>),
    s0: f64,
    y0: DVector<f64>,
    s_end: f64,
    opts: &OdeOptions,
    mut post: Option<PostStep>,
) -> Result<OdeSolution> {
    let n = y0.len();
    let posneg = if s_end >= s0 { 1.0 } else { -1.0 };
    let span = (s_end - s0).abs();
    let mut stats = StepStats::default();

    if span == 0.0 {
        return Ok(OdeSolution {
            nodes: vec![(s0, y0)],
            segments: vec![],
            stats,
            posneg,
        });
    }

    let h_cap = if opts.h_max > 0.0 {
        opts.h_max.min(span)
    } else {
        span
    };

    let mut k: Vec<DVector<f64>> = (0..7).map(|_| DVector::zeros(n)).collect();
    let mut s = s0;
    let mut y = y0;
    f(s, &y, &mut k[0]);
    stats.fevals += 1;

    let mut h = if opts.h_init > 0.0 {
        opts.h_init.min(h_cap)
    } else {
        initial_step(&mut f, s, &y, &k[0], posneg, h_cap, opts, &mut stats)
    };

    let mut nodes = vec![(s, y.clone())];
    let mut segments = Vec::new();
    let mut facold: f64 = 1e-4;
    let mut last = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepLimit {
                s,
                max_steps: opts.max_steps,
            });
        }
        if (s + 1.01 * h * posneg - s_end) * posneg > 0.0 {
            h = (s_end - s) * posneg;
            last = true;
        }
        let hs = h * posneg;

        // Stages 2..7.
        for stage in 0..6 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let a = A[stage][j];
                if a != 0.0 {
                    yi += kj * (a * hs);
                }
            }
            let si = s + C[stage] * hs;
            f(si, &yi, &mut k[stage + 1]);
        }
        stats.fevals += 6;

        // k[6] is f at the 5th-order solution (FSAL).
        let y_new = {
            let mut acc = y.clone();
            for (j, kj) in k.iter().enumerate().take(6) {
                let b = A[5][j];
                if b != 0.0 {
                    acc += kj * (b * hs);
                }
            }
            acc
        };
        // y_new equals the stage-7 argument; k[6] = f(s+h, y_new) was just
        // computed above as the last stage.
        let mut err_vec = DVector::zeros(n);
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err_vec += kj * (E[j] * hs);
            }
        }
        let err = error_norm(&err_vec, &y, &y_new, opts);

        let fac11 = err.powf(0.2);
        let fac = (fac11 / facold.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let h_new = (h / fac).min(h_cap);

        if err <= 1.0 {
            facold = err.max(1e-4);
            // Dense output coefficients for this step.
            let ydiff = &y_new - &y;
            let bspl = &k[0] * hs - &ydiff;
            let mut dsum = DVector::zeros(n);
            for (j, kj) in k.iter().enumerate() {
                if D[j] != 0.0 {
                    dsum += kj * D[j];
                }
            }
            let cont = [
                y.clone(),
                ydiff.clone(),
                bspl.clone(),
                -&k[6] * hs + ydiff - bspl,
                dsum * hs,
            ];
            segments.push(DenseSegment::Dopri { s0: s, h: hs, cont });

            stats.accepted += 1;
            s += hs;
            y = y_new;
            k[0] = k[6].clone();

            if let Some(cb) = post.as_mut() {
                if cb(s, &mut y)? {
                    f(s, &y, &mut k[0]);
                    stats.fevals += 1;
                }
            }

            nodes.push((s, y.clone()));
            if last || (s - s_end) * posneg >= 0.0 {
                break;
            }
            h = h_new;
        } else {
            stats.rejected += 1;
            last = false;
            h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }

    Ok(OdeSolution {
        nodes,
        segments,
        stats,
        posneg,
    })
}

/// Classical fixed-step RK4 with cubic Hermite dense output. `h` is the
/// unsigned step length; the final step is shortened to land on `s_end`.
pub fn integrate_rk4(
    mut f: impl FnMut(f64, &DVector<f64>, &mut DVector<f64>),
    s0: f64,
    y0: DVector<f64>,
    s_end: f64,
    h: f64,
    opts: &OdeOptions,
    mut post: Option<PostStep>,
) -> Result<OdeSolution> {
    let n = y0.len();
    let posneg = if s_end >= s0 { 1.0 } else { -1.0 };
    let span = (s_end - s0).abs();
    let mut stats = StepStats::default();
    if span == 0.0 {
        return Ok(OdeSolution {
            nodes: vec![(s0, y0)],
            segments: vec![],
            stats,
            posneg,
        });
    }
    if h <= 0.0 {
        return Err(Error::InvalidConfig(
            "fixed-step integration requires h_init > 0".into(),
        ));
    }

    let mut s = s0;
    let mut y = y0;
    let mut f0 = DVector::zeros(n);
    f(s, &y, &mut f0);
    stats.fevals += 1;
    let mut nodes = vec![(s, y.clone())];
    let mut segments = Vec::new();

    while (s_end - s) * posneg > 1e-14 * span {
        if stats.accepted >= opts.max_steps {
            return Err(Error::StepLimit {
                s,
                max_steps: opts.max_steps,
            });
        }
        let hs = h.min((s_end - s) * posneg) * posneg;
        let mut k2 = DVector::zeros(n);
        let mut k3 = DVector::zeros(n);
        let mut k4 = DVector::zeros(n);
        f(s + 0.5 * hs, &(&y + &f0 * (0.5 * hs)), &mut k2);
        f(s + 0.5 * hs, &(&y + &k2 * (0.5 * hs)), &mut k3);
        f(s + hs, &(&y + &k3 * hs), &mut k4);
        let y_new = &y + (&f0 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (hs / 6.0);
        let mut f1 = DVector::zeros(n);
        f(s + hs, &y_new, &mut f1);
        stats.fevals += 4;

        segments.push(DenseSegment::Hermite {
            s0: s,
            h: hs,
            y0: y.clone(),
            y1: y_new.clone(),
            f0: f0.clone(),
            f1: f1.clone(),
        });

        stats.accepted += 1;
        s += hs;
        y = y_new;
        f0 = f1;

        if let Some(cb) = post.as_mut() {
            if cb(s, &mut y)? {
                f(s, &y, &mut f0);
                stats.fevals += 1;
            }
        }
        nodes.push((s, y.clone()));
    }

    Ok(OdeSolution {
        nodes,
        segments,
        stats,
        posneg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn harmonic(_s: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn dopri5_harmonic_oscillator() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let opts = OdeOptions::default();
        let sol = integrate_dopri5(harmonic, 0.0, y0, std::f64::consts::TAU, &opts, None).unwrap();
        let (s, y) = sol.last();
        assert_relative_eq!(s, std::f64::consts::TAU, epsilon = 1e-14);
        assert_relative_eq!(y[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(y[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn dopri5_dense_output_accuracy() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let opts = OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            ..Default::default()
        };
        let sol = integrate_dopri5(harmonic, 0.0, y0, 10.0, &opts, None).unwrap();
        for i in 0..=100 {
            let s = 10.0 * i as f64 / 100.0;
            let y = sol.eval(s);
            assert!((y[0] - s.cos()).abs() < 1e-8, "dense error at s={s}");
        }
    }

    #[test]
    fn dopri5_backward_integration() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let opts = OdeOptions::default();
        let sol = integrate_dopri5(harmonic, 0.0, y0, -3.0, &opts, None).unwrap();
        let (s, y) = sol.last();
        assert_relative_eq!(s, -3.0, epsilon = 1e-14);
        assert_relative_eq!(y[0], 3.0f64.cos(), epsilon = 1e-9);
        assert_relative_eq!(y[1], 3.0f64.sin(), epsilon = 1e-9);
        let y = sol.eval(-1.5);
        assert_relative_eq!(y[0], 1.5f64.cos(), epsilon = 1e-8);
    }

    #[test]
    fn dopri5_respects_step_limit() {
        let opts = OdeOptions {
            max_steps: 5,
            ..Default::default()
        };
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let err = integrate_dopri5(harmonic, 0.0, y0, 1e6, &opts, None);
        assert!(matches!(err, Err(Error::StepLimit { .. })));
    }

    #[test]
    fn rk4_matches_exact_solution() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let opts = OdeOptions::default();
        let sol = integrate_rk4(harmonic, 0.0, y0, 1.0, 1e-3, &opts, None).unwrap();
        let (_, y) = sol.last();
        assert_relative_eq!(y[0], 1.0f64.cos(), epsilon = 1e-11);
        let y = sol.eval(0.37);
        assert_relative_eq!(y[0], 0.37f64.cos(), epsilon = 1e-9);
    }

    #[test]
    fn post_step_can_abort() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let opts = OdeOptions::default();
        let mut guard = |s: f64, _y: &mut DVector<f64>| -> Result<bool> {
            if s > 1.0 {
                Err(Error::VertexApproach {
                    s,
                    t: 0.0,
                    limit: 0.0,
                })
            } else {
                Ok(false)
            }
        };
        let err = integrate_dopri5(harmonic, 0.0, y0, 10.0, &opts, Some(&mut guard));
        assert!(matches!(err, Err(Error::VertexApproach { .. })));
    }
}
