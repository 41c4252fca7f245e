//! Adaptive Dormand-Prince 5(4) integration with cubic Hermite dense output.
//!
//! The integrator works on first-order systems `y' = f(t, y)` with a state
//! predicate ("still inside the chart"). A trial step whose stages leave the
//! admissible set is rejected and shortened, so the solution approaches the
//! boundary geometrically and stops within `h_min` of the exit time.

use crate::Vector;

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TimeEnd,
    ChartExit,
    StepFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::TimeEnd => "time_end",
            Termination::ChartExit => "chart_exit",
            Termination::StepFailure => "step_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step before giving up, relative to the time span.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-9,
            h_min_rel: 1e-12,
            max_steps: 200_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

/// Accepted steps of an integration with dense output.
#[derive(Debug, Clone)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub derivatives: Vec<Vector>,
    pub terminated_by: Termination,
    pub rejected_steps: usize,
}

impl Solution {
    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("non-empty solution")
    }

    pub fn last_state(&self) -> &Vector {
        self.states.last().expect("non-empty solution")
    }

    /// Index `i` with `times[i] <= t <= times[i + 1]`.
    fn segment(&self, t: f64) -> usize {
        let n = self.times.len();
        if n < 2 || t <= self.times[0] {
            return 0;
        }
        match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// State at time `t`, clamped to the integrated interval.
    pub fn eval(&self, t: f64) -> Vector {
        if self.times.len() == 1 {
            return self.states[0].clone();
        }
        let t = t.clamp(self.t_start(), self.t_end());
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (&self.states[i], &self.states[i + 1]);
        let (f0, f1) = (&self.derivatives[i], &self.derivatives[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        y0 * h00 + f0 * (h10 * h) + y1 * h01 + f1 * (h11 * h)
    }

    /// Time derivative of the dense output at `t`.
    pub fn eval_derivative(&self, t: f64) -> Vector {
        if self.times.len() == 1 {
            return self.derivatives[0].clone();
        }
        let t = t.clamp(self.t_start(), self.t_end());
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (&self.states[i], &self.states[i + 1]);
        let (f0, f1) = (&self.derivatives[i], &self.derivatives[i + 1]);
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        y0 * d00 + f0 * d10 + y1 * d01 + f1 * d11
    }
}

// Dormand-Prince coefficients.
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
// Fifth-order weights equal the last row of A; these are fifth minus fourth.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

enum StageFailure {
    Outside,
    NonFinite,
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1 > t0`.
///
/// `inside` is checked on every stage state; `rhs` returning `None` (or a
/// non-finite vector) counts as a failed stage.
pub fn integrate<F, P>(mut rhs: F, inside: P, y0: &Vector, t0: f64, t1: f64, opts: &OdeOptions) -> Solution
where
    F: FnMut(f64, &Vector) -> Option<Vector>,
    P: Fn(&Vector) -> bool,
{
    let mut eval = |t: f64, y: &Vector| -> Result<Vector, StageFailure> {
        if !inside(y) {
            return Err(StageFailure::Outside);
        }
        match rhs(t, y) {
            Some(f) if f.iter().all(|c| c.is_finite()) => Ok(f),
            _ => Err(StageFailure::NonFinite),
        }
    };

    let mut sol = Solution {
        times: vec![t0],
        states: vec![y0.clone()],
        derivatives: Vec::new(),
        terminated_by: Termination::TimeEnd,
        rejected_steps: 0,
    };
    let f0 = match eval(t0, y0) {
        Ok(f) => f,
        Err(StageFailure::Outside) => {
            sol.derivatives.push(Vector::zeros(y0.len()));
            sol.terminated_by = Termination::ChartExit;
            return sol;
        }
        Err(StageFailure::NonFinite) => {
            sol.derivatives.push(Vector::zeros(y0.len()));
            sol.terminated_by = Termination::StepFailure;
            return sol;
        }
    };
    sol.derivatives.push(f0.clone());
    if t1 <= t0 {
        return sol;
    }

    let span = t1 - t0;
    let h_min = opts.h_min_rel * span.max(1.0);
    let scale0 = y0.iter().fold(0.0_f64, |m, c| m.max(c.abs())) * opts.rtol + opts.atol;
    let fnorm = f0.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let mut h = if fnorm > 0.0 {
        (0.01 * scale0.powf(0.2) / fnorm.max(1e-300) * 10.0).min(0.1 * span)
    } else {
        0.1 * span
    };
    h = h.max(1e-6 * span).min(span);

    let mut t = t0;
    let mut y = y0.clone();
    let mut f = f0;
    let n = y.len();
    let mut k: Vec<Vector> = vec![Vector::zeros(n); 7];

    for _ in 0..opts.max_steps {
        if t >= t1 {
            return sol;
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        k[0] = f.clone();
        let mut failure: Option<StageFailure> = None;
        let mut y_new = y.clone();
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    ys.axpy(h * a, kj, 1.0);
                }
            }
            match eval(t + C[s] * h, &ys) {
                Ok(val) => k[s] = val,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
            if s == 6 {
                y_new = ys;
            }
        }
        if let Some(fail) = failure {
            sol.rejected_steps += 1;
            h *= 0.5;
            if h < h_min {
                sol.terminated_by = if matches!(fail, StageFailure::Outside) {
                    Termination::ChartExit
                } else {
                    Termination::StepFailure
                };
                return sol;
            }
            continue;
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((h * e).abs() / sc);
        }
        if !err.is_finite() {
            sol.rejected_steps += 1;
            h *= 0.25;
            if h < h_min {
                sol.terminated_by = Termination::StepFailure;
                return sol;
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            f = k[6].clone();
            sol.times.push(t);
            sol.states.push(y.clone());
            sol.derivatives.push(f.clone());
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            sol.rejected_steps += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < h_min {
                sol.terminated_by = Termination::StepFailure;
                return sol;
            }
        }
    }
    sol.terminated_by = Termination::StepFailure;
    sol
}
