//! Adaptive Dormand–Prince 5(4) integrator for small real systems.

use crate::error::{Error, Result};

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
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-10, atol: 1e-12, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(t, y)` and returns `y` at each output time.
///
/// Output times must be non-decreasing and start at or after `t0`; steps are
/// clipped to land on them exactly.
pub fn integrate<F>(f: F, t0: f64, y0: &[f64], outputs: &[f64], tol: Tolerance) -> Result<(Vec<Vec<f64>>, Stats)>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut stats = Stats::default();
    let span = outputs.last().map_or(0.0, |&e| (e - t0).abs());
    let mut h = if span > 0.0 { span * 1e-3 } else { 1e-3 };
    let mut out = Vec::with_capacity(outputs.len());
    f(t, &y, &mut k[0]);
    for &target in outputs {
        if target < t {
            return Err(Error::Integration(format!("output time {target} precedes {t}")));
        }
        while t < target {
            if stats.accepted + stats.rejected >= tol.max_steps {
                return Err(Error::Integration(format!(
                    "step budget exhausted at t = {t} ({} accepted, {} rejected)",
                    stats.accepted, stats.rejected
                )));
            }
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += step * A[s][j] * kj[i];
                    }
                    tmp[i] = acc;
                }
                f(t + C[s] * step, &tmp, &mut k[s]);
            }
            let mut err = 0.0f64;
            for i in 0..n {
                let mut hi = y[i];
                let mut lo = y[i];
                for s in 0..7 {
                    hi += step * B5[s] * k[s][i];
                    lo += step * B4[s] * k[s][i];
                }
                y5[i] = hi;
                let sc = tol.atol + tol.rtol * y[i].abs().max(hi.abs());
                err = err.max(((hi - lo) / sc).abs());
            }
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite state at t = {t}")));
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y.copy_from_slice(&y5);
                // first-same-as-last: stage 7 was evaluated at the new point
                k.swap(0, 6);
                stats.accepted += 1;
            } else {
                stats.rejected += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let next = step * factor;
            // keep the pre-clipping step after a short landing step
            h = if last && err <= 1.0 { h.max(next) } else { next };
            if h < 1e-14 * span.max(1.0) {
                return Err(Error::Integration(format!("step size underflow at t = {t} (h = {h:e})")));
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let ts: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let (ys, _) = integrate(
            |_, y, d| {
                d[0] = y[1];
                d[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            &ts,
            Tolerance::default(),
        )
        .unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "{t}: {}", y[0]);
        }
    }

    #[test]
    fn exponential_decay() {
        let (ys, _) = integrate(|_, y, d| d[0] = -2.0 * y[0], 0.0, &[1.0], &[0.0, 0.5, 3.0], Tolerance::default()).unwrap();
        assert_eq!(ys[0][0], 1.0);
        assert!((ys[1][0] - (-1.0f64).exp()).abs() < 1e-10);
        assert!((ys[2][0] - (-6.0f64).exp()).abs() < 1e-11);
    }
}
