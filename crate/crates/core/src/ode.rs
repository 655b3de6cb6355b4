//! Adaptive Dormand–Prince 5(4) integrator for small autonomous-size systems.
//!
//! Used by the shooting solvers and the elliptic barrier construction. The
//! state is a fixed-size array so the hot loop never allocates.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` picks `1e-3` of the span.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, h_init: None, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy)]
pub enum Stop<const N: usize> {
    /// The end time was reached with this state.
    Reached([f64; N]),
    /// The event function crossed from positive to non-positive.
    Event { t: f64, y: [f64; N] },
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// One Dormand–Prince step. Returns the 5th-order solution and the
/// embedded error estimate.
fn dopri_step<const N: usize, F>(rhs: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    k[0] = rhs(t, y);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = rhs(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for s in 0..7 {
        for i in 0..N {
            y5[i] += h * B[s] * k[s][i];
            err[i] += h * E[s] * k[s][i];
        }
    }
    (y5, err)
}

fn error_norm<const N: usize>(y: &[f64; N], y_new: &[f64; N], err: &[f64; N], o: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * y[i].abs().max(y_new[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1 > t0`.
pub fn integrate<const N: usize, F>(rhs: F, t0: f64, y0: [f64; N], t1: f64, opts: &OdeOptions) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    match integrate_with_event(rhs, t0, y0, t1, opts, |_, _| 1.0)? {
        Stop::Reached(y) => Ok(y),
        Stop::Event { .. } => unreachable!("constant event never fires"),
    }
}

/// Integrates until `t1` or until `event(t, y)` crosses from `> 0` to `<= 0`.
/// The crossing is located by bisection on the final step size.
pub fn integrate_with_event<const N: usize, F, G>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &OdeOptions,
    mut event: G,
) -> Result<Stop<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: FnMut(f64, &[f64; N]) -> f64,
{
    let span = t1 - t0;
    if span < 0.0 {
        return Err(Error::Integration(format!("backward span {t0} -> {t1}")));
    }
    if span == 0.0 {
        return Ok(Stop::Reached(y0));
    }
    let h_min = 1e-14 * span.max(t0.abs()).max(1.0);
    let mut h = opts.h_init.unwrap_or(1e-3 * span).min(opts.h_max).min(span);
    let mut t = t0;
    let mut y = y0;
    let mut g_prev = event(t, &y);
    for _ in 0..opts.max_steps {
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let (y_new, err) = dopri_step(&rhs, t, &y, h);
        let finite = y_new.iter().chain(err.iter()).all(|v| v.is_finite());
        let en = if finite { error_norm(&y, &y_new, &err, opts) } else { f64::INFINITY };
        if en <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            let g = event(t_new, &y_new);
            if g_prev > 0.0 && g <= 0.0 {
                return Ok(locate_event(&rhs, &mut event, t, &y, h));
            }
            t = t_new;
            y = y_new;
            g_prev = g;
            if last {
                return Ok(Stop::Reached(y));
            }
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(opts.h_max);
        } else {
            let fac = if en.is_finite() { (0.9 * en.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h *= fac;
            if h < h_min {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
    }
    Err(Error::Integration(format!("exceeded {} steps", opts.max_steps)))
}

fn locate_event<const N: usize, F, G>(rhs: &F, event: &mut G, t: f64, y: &[f64; N], h: f64) -> Stop<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: FnMut(f64, &[f64; N]) -> f64,
{
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut y_hi = dopri_step(rhs, t, y, h).0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (ym, _) = dopri_step(rhs, t, y, mid * h);
        if event(t + mid * h, &ym) <= 0.0 {
            hi = mid;
            y_hi = ym;
        } else {
            lo = mid;
        }
        if (hi - lo) * h <= 1e-15 * (1.0 + t.abs()) {
            break;
        }
    }
    Stop::Event { t: t + hi * h, y: y_hi }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let y = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, &OdeOptions::default()).unwrap();
        assert!((y[0] - 10f64.sin()).abs() < 1e-8);
        assert!((y[1] - 10f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn event_locates_first_zero_of_cosine() {
        let stop = integrate_with_event(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            10.0,
            &OdeOptions::default(),
            |_, y| y[1],
        )
        .unwrap();
        match stop {
            Stop::Event { t, .. } => assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-9),
            Stop::Reached(_) => panic!("event missed"),
        }
    }
}
