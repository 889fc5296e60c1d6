//! Dormand–Prince 5(4) for planar autonomous systems, with an optional
//! projection applied after every accepted step and cubic Hermite dense
//! output built from the accepted states and slopes.

pub type State = [f64; 2];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (first-same-as-last row of A).
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

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub y: Vec<State>,
    pub dy: Vec<State>,
}

impl Trajectory {
    pub fn last_x(&self) -> f64 {
        *self.x.last().unwrap_or(&0.0)
    }

    /// Hermite interpolation; `None` outside the integrated range.
    pub fn eval(&self, x: f64) -> Option<State> {
        let n = self.x.len();
        if n == 0 || x < self.x[0] || x > self.x[n - 1] {
            return None;
        }
        let i = match self.x.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => return Some(self.y[i]),
            Err(i) => i - 1,
        };
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let mut out = [0.0; 2];
        for c in 0..2 {
            out[c] = h00 * self.y[i][c]
                + h10 * h * self.dy[i][c]
                + h01 * self.y[i + 1][c]
                + h11 * h * self.dy[i + 1][c];
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { rtol: 1e-12, h0: 1e-3, h_max: 0.05, max_steps: 2_000_000 }
    }
}

pub enum Flow {
    Continue,
    Stop,
    Abort(String),
}

/// Integrates y' = f(y) from x0 toward x_end. The error is measured relative
/// to the state magnitude, which keeps relative accuracy on decaying tails.
/// `project` runs on every accepted state; `monitor` can stop or abort.
pub fn integrate<F, P, Mo>(
    f: F,
    mut project: P,
    mut monitor: Mo,
    x0: f64,
    y0: State,
    x_end: f64,
    ctl: StepControl,
) -> Result<Trajectory, String>
where
    F: Fn(&State) -> State,
    P: FnMut(&mut State),
    Mo: FnMut(f64, &State) -> Flow,
{
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut traj = Trajectory { x: vec![x], y: vec![y], dy: vec![k1] };
    let mut h = ctl.h0.min(ctl.h_max);
    let norm = |s: &State| s[0].abs().max(s[1].abs());
    for _ in 0..ctl.max_steps {
        if x >= x_end {
            return Ok(traj);
        }
        let last = x + h >= x_end;
        if last {
            h = x_end - x;
        }
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    ys[0] += h * a * kj[0];
                    ys[1] += h * a * kj[1];
                }
            }
            k[s] = f(&ys);
        }
        let mut y5 = y;
        let mut e = [0.0; 2];
        for s in 0..7 {
            for c in 0..2 {
                y5[c] += h * B5[s] * k[s][c];
                e[c] += h * (B5[s] - B4[s]) * k[s][c];
            }
        }
        let scale = ctl.rtol * norm(&y).max(norm(&y5)).max(1e-300);
        let err = norm(&e) / scale;
        if !err.is_finite() {
            h *= 0.25;
            if h < 1e-14 {
                return Err(format!("step size underflow at x = {x}"));
            }
            continue;
        }
        if err <= 1.0 {
            x = if last { x_end } else { x + h };
            y = y5;
            project(&mut y);
            k1 = f(&y);
            traj.x.push(x);
            traj.y.push(y);
            traj.dy.push(k1);
            match monitor(x, &y) {
                Flow::Continue => {}
                Flow::Stop => return Ok(traj),
                Flow::Abort(msg) => return Err(msg),
            }
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).min(ctl.h_max);
        if h < 1e-14 {
            return Err(format!("step size underflow at x = {x}"));
        }
    }
    Err("step budget exhausted".into())
}
