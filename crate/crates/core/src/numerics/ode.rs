use super::{NumericsError, TimeGrid, Tolerance};

const MAX_STEPS: usize = 1_000_000;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Fifth-order minus embedded fourth-order weights (seven stages, FSAL).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// Continuous extension: y(t + θh) = y + h Σ_i k_i Σ_j P[i][j] θ^{j+1}.
const P: [[f64; 4]; 7] = [
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
];

struct Stepper<'a, F> {
    rhs: &'a mut F,
    tol: Tolerance,
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
}

impl<F> Stepper<'_, F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    fn call(&mut self, t: f64, y_idx: usize) -> Result<(), NumericsError> {
        let (stage, k) = (&self.stage, &mut self.k[y_idx]);
        (self.rhs)(t, stage, k);
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(NumericsError::NonFiniteState { t })
        }
    }

    fn combine(&mut self, y: &[f64], h: f64, coeffs: &[f64]) {
        for (i, (out, yi)) in self.stage.iter_mut().zip(y).enumerate() {
            let acc: f64 = coeffs.iter().zip(&self.k).map(|(c, k)| c * k[i]).sum();
            *out = yi + h * acc;
        }
    }

    /// Interpolate inside the last accepted step `(t, t + h]` at fraction `theta`.
    fn dense(&self, y: &[f64], h: f64, theta: f64) -> Vec<f64> {
        let w: [f64; 7] = std::array::from_fn(|i| {
            let p = &P[i];
            theta * (p[0] + theta * (p[1] + theta * (p[2] + theta * p[3])))
        });
        (0..y.len())
            .map(|i| y[i] + h * (0..7).map(|j| w[j] * self.k[j][i]).sum::<f64>())
            .collect()
    }

    /// Attempt one step from (t, y) of size h, assuming k[0] = f(t, y).
    /// Writes the candidate into `y_new` and returns the scaled error norm.
    fn attempt(&mut self, t: f64, y: &[f64], h: f64, y_new: &mut [f64]) -> Result<f64, NumericsError> {
        let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, row) in rows.iter().enumerate() {
            self.combine(y, h, row);
            self.call(t + C[s + 1] * h, s + 1)?;
        }
        self.combine(y, h, &B);
        y_new.copy_from_slice(&self.stage);
        self.call(t + h, 6)?;

        let mut sum = 0.0;
        for i in 0..y.len() {
            let err: f64 = h * (0..7).map(|j| E[j] * self.k[j][i]).sum::<f64>();
            let scale = self.tol.abs_tol + self.tol.rel_tol * y[i].abs().max(y_new[i].abs());
            let ratio = if scale > 0.0 {
                err / scale
            } else if err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            sum += ratio * ratio;
        }
        Ok((sum / y.len() as f64).sqrt())
    }
}

fn initial_step(y: &[f64], f0: &[f64], span: f64, tol: &Tolerance) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y.len() {
        let sc = tol.abs_tol + tol.rel_tol * y[i].abs();
        if sc > 0.0 {
            d0 += (y[i] / sc).powi(2);
            d1 += (f0[i] / sc).powi(2);
        }
    }
    let n = y.len() as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(f64::EPSILON * span)
}

/// Integrate `y' = rhs(t, y)` from `grid.t_start()` and return the state at
/// every grid point (the first entry is `y0`).
///
/// Adaptive Dormand-Prince 5(4). Step sizes follow the error control only;
/// interior grid points come from the fourth-order continuous extension and
/// the last step is clipped to end exactly on the final grid point. `rhs` writes the derivative into its third argument; a
/// non-finite derivative aborts the run.
pub fn integrate_ode<F>(
    mut rhs: F,
    y0: &[f64],
    grid: &TimeGrid,
    tol: &Tolerance,
) -> Result<Vec<Vec<f64>>, NumericsError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    tol.validate()?;
    let t0 = grid.t_start();
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFiniteState { t: t0 });
    }
    let dim = y0.len();
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0.to_vec());
    if grid.len() == 1 || dim == 0 {
        out.resize(grid.len(), y0.to_vec());
        return Ok(out);
    }

    let mut stepper = Stepper {
        rhs: &mut rhs,
        tol: *tol,
        k: std::array::from_fn(|_| vec![0.0; dim]),
        stage: y0.to_vec(),
    };

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; dim];
    stepper.call(t, 0)?;
    let span = grid.t_end() - t0;
    let mut h = initial_step(&y, &stepper.k[0], span, tol);
    let mut steps = 0usize;

    let points = grid.points();
    let t_end = grid.t_end();
    let mut next = 1;
    while next < points.len() {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(NumericsError::StepLimitExceeded { t, max_steps: MAX_STEPS });
        }
        let min_h = 16.0 * f64::EPSILON * t.abs().max(span);
        if h < min_h {
            return Err(NumericsError::StepSizeUnderflow { t, h });
        }
        let remaining = t_end - t;
        let hits_end = h >= remaining * (1.0 - 1e-12);
        let h_try = if hits_end { remaining } else { h };

        let err = stepper.attempt(t, &y, h_try, &mut y_new)?;
        if err <= 1.0 {
            let t_new = if hits_end { t_end } else { t + h_try };
            while next < points.len() && points[next] <= t_new {
                if points[next] == t_new {
                    out.push(y_new.clone());
                } else {
                    out.push(stepper.dense(&y, h_try, (points[next] - t) / h_try));
                }
                next += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            stepper.k.swap(0, 6);
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            // A clipped step says nothing about the attainable step size.
            if !hits_end || h_try * factor > h {
                h = h_try * factor;
            }
        } else {
            h = h_try * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
    }
    Ok(out)
}
