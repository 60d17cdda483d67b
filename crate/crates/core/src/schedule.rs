//! Annealing schedules.
//!
//! A [`Schedule`] maps dimensionless time `s in [0, 1]` to control values
//! `(A, B, C, lambda)` and carries the total time `T`. The controls are
//! dimensionless numbers in `[0, 1]`; energy scales live in the Hamiltonian.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Instantaneous control values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub lambda: f64,
}

impl Controls {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b, c: 0.0, lambda: 1.0 }
    }

    pub const ZERO: Controls = Controls { a: 0.0, b: 0.0, c: 0.0, lambda: 0.0 };
}

/// One scalar control function of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "representation", content = "params", rename_all = "snake_case")]
pub enum ControlFunction {
    Constant { value: f64 },
    /// Linear interpolation through `(s, value)` pairs spanning `[0, 1]`.
    PiecewiseLinear { points: Vec<(f64, f64)> },
    /// `values[k]` on `[edges[k], edges[k+1])`; the last interval is closed.
    PiecewiseConstant { edges: Vec<f64>, values: Vec<f64> },
    /// `offset + slope s + sum_k sine[k] sin((k+1) pi s)`, clamped to `[0, 1]`.
    Fourier { offset: f64, slope: f64, sine: Vec<f64> },
    /// `peak sin^2(pi s)`.
    SinSquared { peak: f64 },
}

impl ControlFunction {
    pub fn linear(start: f64, end: f64) -> Self {
        ControlFunction::Fourier { offset: start, slope: end - start, sine: Vec::new() }
    }

    pub fn piecewise_linear(points: Vec<(f64, f64)>) -> Result<Self> {
        let f = ControlFunction::PiecewiseLinear { points };
        f.validate()?;
        Ok(f)
    }

    pub fn piecewise_constant(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let f = ControlFunction::PiecewiseConstant { edges, values };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let increasing = |xs: &[f64]| {
            xs.first() == Some(&0.0) && xs.last() == Some(&1.0) && xs.windows(2).all(|w| w[0] < w[1])
        };
        match self {
            ControlFunction::Constant { value } => ensure(value.is_finite(), || "non-finite constant".into()),
            ControlFunction::PiecewiseLinear { points } => {
                let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
                ensure(points.len() >= 2 && increasing(&xs), || {
                    "breakpoints must be strictly increasing from 0 to 1".into()
                })?;
                ensure(points.iter().all(|p| p.1.is_finite()), || "non-finite breakpoint value".into())
            }
            ControlFunction::PiecewiseConstant { edges, values } => {
                ensure(!values.is_empty() && edges.len() == values.len() + 1, || {
                    "piecewise-constant control needs len(edges) = len(values) + 1".into()
                })?;
                ensure(increasing(edges), || "edges must be strictly increasing from 0 to 1".into())?;
                ensure(values.iter().all(|v| v.is_finite()), || "non-finite segment value".into())
            }
            ControlFunction::Fourier { offset, slope, sine } => ensure(
                offset.is_finite() && slope.is_finite() && sine.iter().all(|c| c.is_finite()),
                || "non-finite Fourier coefficient".into(),
            ),
            ControlFunction::SinSquared { peak } => ensure(peak.is_finite(), || "non-finite peak".into()),
        }
    }

    fn fourier_raw(offset: f64, slope: f64, sine: &[f64], s: f64, order: u32) -> f64 {
        let mut v = match order {
            0 => offset + slope * s,
            1 => slope,
            _ => 0.0,
        };
        for (k, &c) in sine.iter().enumerate() {
            let w = (k + 1) as f64 * PI;
            v += c * match order {
                0 => (w * s).sin(),
                1 => w * (w * s).cos(),
                _ => -w * w * (w * s).sin(),
            };
        }
        v
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ControlFunction::Constant { value } => *value,
            ControlFunction::PiecewiseLinear { points } => {
                let s = s.clamp(0.0, 1.0);
                let k = points.partition_point(|p| p.0 <= s).clamp(1, points.len() - 1);
                let (x0, y0) = points[k - 1];
                let (x1, y1) = points[k];
                if s >= x1 {
                    y1
                } else {
                    y0 + (y1 - y0) * (s - x0) / (x1 - x0)
                }
            }
            ControlFunction::PiecewiseConstant { edges, values } => {
                let k = edges.partition_point(|&e| e <= s).clamp(1, values.len());
                values[k - 1]
            }
            ControlFunction::Fourier { offset, slope, sine } => {
                Self::fourier_raw(*offset, *slope, sine, s, 0).clamp(0.0, 1.0)
            }
            ControlFunction::SinSquared { peak } => peak * (PI * s).sin().powi(2),
        }
    }

    /// `d^order f / ds^order` for `order` in `{1, 2}`.
    pub fn derivative(&self, s: f64, order: u32, name: &str) -> Result<f64> {
        match self {
            ControlFunction::Constant { .. } => Ok(0.0),
            ControlFunction::PiecewiseLinear { .. } | ControlFunction::PiecewiseConstant { .. } => {
                Err(Error::NotDifferentiable(name.to_string()))
            }
            ControlFunction::Fourier { offset, slope, sine } => {
                let raw = Self::fourier_raw(*offset, *slope, sine, s, 0);
                if !(0.0..=1.0).contains(&raw) {
                    return Ok(0.0);
                }
                Ok(Self::fourier_raw(*offset, *slope, sine, s, order))
            }
            ControlFunction::SinSquared { peak } => Ok(match order {
                1 => peak * PI * (2.0 * PI * s).sin(),
                _ => 2.0 * peak * PI * PI * (2.0 * PI * s).cos(),
            }),
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, ControlFunction::PiecewiseLinear { .. } | ControlFunction::PiecewiseConstant { .. })
    }

    /// Interior points where the function has a kink or a jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ControlFunction::PiecewiseLinear { points } => {
                points[1..points.len() - 1].iter().map(|p| p.0).collect()
            }
            ControlFunction::PiecewiseConstant { edges, .. } => edges[1..edges.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }
}

/// A hold of all controls at `s_pause` lasting `fraction * T` of the original time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pause {
    pub s_pause: f64,
    pub fraction: f64,
}

impl Pause {
    /// Map the paused schedule's `s'` to the original schedule's `s`.
    fn warp(&self, s: f64) -> f64 {
        let scale = 1.0 + self.fraction;
        let start = self.s_pause / scale;
        let end = (self.s_pause + self.fraction) / scale;
        if s <= start {
            s * scale
        } else if s < end {
            self.s_pause
        } else {
            (s * scale - self.fraction).min(1.0)
        }
    }

    /// Map an original `s` to the first paused-schedule `s'` reaching it.
    fn unwarp(&self, s: f64) -> f64 {
        let scale = 1.0 + self.fraction;
        if s <= self.s_pause {
            s / scale
        } else {
            (s + self.fraction) / scale
        }
    }
}

/// Named controls plus total time.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub a: ControlFunction,
    pub b: ControlFunction,
    pub c: Option<ControlFunction>,
    pub lambda: Option<ControlFunction>,
    total_time: f64,
    pub label: String,
    pauses: Vec<Pause>,
    /// Consumed by the iterated reverse-annealing driver.
    pub reinitialize: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedControl {
    pub name: String,
    #[serde(flatten)]
    pub function: ControlFunction,
}

/// On-disk schedule: `{"controls": [{"name", "representation", "params"}], "T": ..}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub controls: Vec<NamedControl>,
    #[serde(rename = "T")]
    pub total_time: f64,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pauses: Vec<Pause>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reinitialize: Option<bool>,
}

fn check_time(t: f64) -> Result<()> {
    ensure(t > 0.0 && t.is_finite(), || format!("total time must be positive, got {t}"))
}

impl Schedule {
    pub fn new(a: ControlFunction, b: ControlFunction, total_time: f64) -> Result<Self> {
        check_time(total_time)?;
        a.validate()?;
        b.validate()?;
        Ok(Self {
            a,
            b,
            c: None,
            lambda: None,
            total_time,
            label: String::new(),
            pauses: Vec::new(),
            reinitialize: None,
        })
    }

    pub fn with_c(mut self, c: ControlFunction) -> Result<Self> {
        c.validate()?;
        self.c = Some(c);
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: ControlFunction) -> Result<Self> {
        lambda.validate()?;
        self.lambda = Some(lambda);
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same controls, different total time.
    pub fn with_total_time(&self, total_time: f64) -> Result<Self> {
        check_time(total_time)?;
        let mut s = self.clone();
        s.total_time = total_time;
        Ok(s)
    }

    /// `A(s) = 1 - s`, `B(s) = s`.
    pub fn linear_forward(total_time: f64) -> Result<Self> {
        Ok(Self::new(ControlFunction::linear(1.0, 0.0), ControlFunction::linear(0.0, 1.0), total_time)?
            .with_label("linear"))
    }

    /// `A = clamp(g)`, `B = clamp(1 - g)` with `g(s) = 1 - s + sum_k c_k sin(k pi s)`.
    pub fn fourier(coefficients: &[f64], total_time: f64) -> Result<Self> {
        let a = ControlFunction::Fourier { offset: 1.0, slope: -1.0, sine: coefficients.to_vec() };
        let b = ControlFunction::Fourier {
            offset: 0.0,
            slope: 1.0,
            sine: coefficients.iter().map(|c| -c).collect(),
        };
        Ok(Self::new(a, b, total_time)?.with_label("fourier"))
    }

    /// Piecewise-linear D-Wave style reverse anneal from `s = 1` down to
    /// `s_target`, an optional hold there, and back to `s = 1`.
    pub fn reverse_dwave(s_target: f64, pause_fraction: f64, reinitialize: bool, total_time: f64) -> Result<Self> {
        ensure(s_target > 0.0 && s_target < 1.0, || format!("s_target = {s_target} outside (0, 1)"))?;
        ensure((0.0..1.0).contains(&pause_fraction), || format!("pause fraction {pause_fraction} outside [0, 1)"))?;
        let ramp = (1.0 - pause_fraction) / 2.0;
        let knots: Vec<(f64, f64)> = if pause_fraction == 0.0 {
            vec![(0.0, 1.0), (0.5, s_target), (1.0, 1.0)]
        } else {
            vec![(0.0, 1.0), (ramp, s_target), (ramp + pause_fraction, s_target), (1.0, 1.0)]
        };
        let a = ControlFunction::piecewise_linear(knots.iter().map(|&(t, s)| (t, 1.0 - s)).collect())?;
        let b = ControlFunction::piecewise_linear(knots)?;
        let mut sched = Self::new(a, b, total_time)?.with_label("reverse-dwave");
        sched.reinitialize = Some(reinitialize);
        Ok(sched)
    }

    /// Sombrero reverse anneal: `A = peak sin^2(pi s)`, `B = s`, `C = 1 - s`.
    pub fn sombrero(total_time: f64, peak_height: f64) -> Result<Self> {
        ensure(peak_height >= 0.0, || format!("peak height must be nonnegative, got {peak_height}"))?;
        Self::new(ControlFunction::SinSquared { peak: peak_height }, ControlFunction::linear(0.0, 1.0), total_time)?
            .with_c(ControlFunction::linear(1.0, 0.0))
            .map(|s| s.with_label("sombrero"))
    }

    /// `A = u`, `B = 1 - u` for a piecewise-constant `u` on equal slices.
    pub fn from_control_vector(u: &[f64], total_time: f64) -> Result<Self> {
        ensure(!u.is_empty(), || "empty control vector".into())?;
        let m = u.len();
        let edges: Vec<f64> = (0..=m).map(|k| if k == m { 1.0 } else { k as f64 / m as f64 }).collect();
        let a = ControlFunction::piecewise_constant(edges.clone(), u.to_vec())?;
        let b = ControlFunction::piecewise_constant(edges, u.iter().map(|x| 1.0 - x).collect())?;
        Ok(Self::new(a, b, total_time)?.with_label("control-vector"))
    }

    /// Hold every control at `s_pause` for `pause_fraction * T`; the total
    /// time becomes `(1 + pause_fraction) T`.
    pub fn with_pause(&self, s_pause: f64, pause_fraction: f64) -> Result<Self> {
        ensure(s_pause > 0.0 && s_pause < 1.0, || format!("pause point {s_pause} outside (0, 1)"))?;
        ensure(pause_fraction >= 0.0 && pause_fraction.is_finite(), || {
            format!("pause fraction must be nonnegative, got {pause_fraction}")
        })?;
        if pause_fraction == 0.0 {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        out.pauses.push(Pause { s_pause, fraction: pause_fraction });
        out.total_time = self.total_time * (1.0 + pause_fraction);
        Ok(out)
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn pauses(&self) -> &[Pause] {
        &self.pauses
    }

    fn warp(&self, s: f64) -> f64 {
        self.pauses.iter().rev().fold(s, |acc, p| p.warp(acc))
    }

    pub fn controls(&self, s: f64) -> Controls {
        let s = self.warp(s);
        Controls {
            a: self.a.eval(s),
            b: self.b.eval(s),
            c: self.c.as_ref().map_or(0.0, |f| f.eval(s)),
            lambda: self.lambda.as_ref().map_or(1.0, |f| f.eval(s)),
        }
    }

    /// First (`order = 1`) or second (`order = 2`) derivatives of the controls in `s`.
    pub fn control_derivatives(&self, s: f64, order: u32) -> Result<Controls> {
        ensure(order == 1 || order == 2, || format!("derivative order {order} not supported"))?;
        if !self.pauses.is_empty() {
            return Err(Error::NotDifferentiable("paused schedule".into()));
        }
        let d = |f: &ControlFunction, name: &str| f.derivative(s, order, name);
        Ok(Controls {
            a: d(&self.a, "A")?,
            b: d(&self.b, "B")?,
            c: self.c.as_ref().map_or(Ok(0.0), |f| d(f, "C"))?,
            lambda: self.lambda.as_ref().map_or(Ok(0.0), |f| d(f, "lambda"))?,
        })
    }

    pub fn is_smooth(&self) -> bool {
        self.pauses.is_empty()
            && self.a.is_smooth()
            && self.b.is_smooth()
            && self.c.as_ref().is_none_or(ControlFunction::is_smooth)
            && self.lambda.as_ref().is_none_or(ControlFunction::is_smooth)
    }

    /// Interior `s` values where some control is not smooth, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = [Some(&self.a), Some(&self.b), self.c.as_ref(), self.lambda.as_ref()]
            .into_iter()
            .flatten()
            .flat_map(ControlFunction::breakpoints)
            .collect();
        for p in self.pauses.iter() {
            pts = pts.into_iter().map(|s| p.unwarp(s)).collect();
            let scale = 1.0 + p.fraction;
            pts.push(p.s_pause / scale);
            pts.push((p.s_pause + p.fraction) / scale);
        }
        pts.retain(|&s| s > 0.0 && s < 1.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        pts
    }

    pub fn to_doc(&self) -> ScheduleDoc {
        let mut controls = vec![
            NamedControl { name: "A".into(), function: self.a.clone() },
            NamedControl { name: "B".into(), function: self.b.clone() },
        ];
        if let Some(c) = &self.c {
            controls.push(NamedControl { name: "C".into(), function: c.clone() });
        }
        if let Some(l) = &self.lambda {
            controls.push(NamedControl { name: "lambda".into(), function: l.clone() });
        }
        ScheduleDoc {
            controls,
            total_time: self.total_time,
            label: self.label.clone(),
            pauses: self.pauses.clone(),
            reinitialize: self.reinitialize,
        }
    }

    pub fn from_doc(doc: &ScheduleDoc) -> Result<Self> {
        let find = |name: &str| doc.controls.iter().find(|c| c.name == name).map(|c| c.function.clone());
        for c in &doc.controls {
            ensure(["A", "B", "C", "lambda"].contains(&c.name.as_str()), || {
                format!("unknown control name `{}`", c.name)
            })?;
        }
        let a = find("A").ok_or_else(|| Error::Contract("schedule is missing control A".into()))?;
        let b = find("B").ok_or_else(|| Error::Contract("schedule is missing control B".into()))?;
        let mut s = Schedule::new(a, b, doc.total_time)?.with_label(doc.label.clone());
        if let Some(c) = find("C") {
            s = s.with_c(c)?;
        }
        if let Some(l) = find("lambda") {
            s = s.with_lambda(l)?;
        }
        for p in &doc.pauses {
            ensure(p.s_pause > 0.0 && p.s_pause < 1.0 && p.fraction >= 0.0, || "invalid pause".into())?;
        }
        s.pauses = doc.pauses.clone();
        s.reinitialize = doc.reinitialize;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(text)?)
    }
}

/// How a [`BreakpointSchedule`] is turned into a continuous control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    /// `f` held constant over each layer window.
    Hold,
    /// `f` linearly interpolated between layer midpoints.
    Linear,
}

/// Sampled control `f(t_i)` for `H(t) = f H_X + (1 - f) H_Z`, as obtained from QAOA angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointSchedule {
    /// Layer midpoints `t_i` in `[0, T]`.
    pub times: Vec<f64>,
    /// Control samples `f_i`.
    pub values: Vec<f64>,
    /// Layer durations `|gamma_i| + |beta_i|`.
    pub widths: Vec<f64>,
    /// Signed angles the schedule came from, kept for the digitized realization.
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub total_time: f64,
    pub interpolation: Interpolation,
}

/// Conversion from QAOA angles: `T = sum(|g| + |b|)`, layer midpoints
/// `t_i`, and `f_i = gamma_i / (|gamma_i| + |beta_i|)`.
pub fn qaoa_to_schedule(gammas: &[f64], betas: &[f64]) -> Result<BreakpointSchedule> {
    ensure(!gammas.is_empty(), || "empty angle lists".into())?;
    ensure(gammas.len() == betas.len(), || {
        format!("{} gammas but {} betas", gammas.len(), betas.len())
    })?;
    let mut times = Vec::with_capacity(gammas.len());
    let mut values = Vec::with_capacity(gammas.len());
    let mut widths = Vec::with_capacity(gammas.len());
    let mut elapsed = 0.0;
    for (i, (&g, &b)) in gammas.iter().zip(betas).enumerate() {
        let w = g.abs() + b.abs();
        if w == 0.0 {
            return Err(Error::DegenerateLayer(i));
        }
        elapsed += w;
        times.push(elapsed - 0.5 * w);
        values.push(g / w);
        widths.push(w);
    }
    Ok(BreakpointSchedule {
        times,
        values,
        widths,
        gammas: gammas.to_vec(),
        betas: betas.to_vec(),
        total_time: elapsed,
        interpolation: Interpolation::Hold,
    })
}

impl BreakpointSchedule {
    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn layers(&self) -> usize {
        self.values.len()
    }

    /// `A = f`, `B = 1 - f` per the selected interpolation.
    pub fn to_schedule(&self) -> Result<Schedule> {
        let t = self.total_time;
        let clamp01 = |f: f64| f.clamp(0.0, 1.0);
        match self.interpolation {
            Interpolation::Hold => {
                let mut edges = vec![0.0];
                let mut acc = 0.0;
                for w in &self.widths {
                    acc += w;
                    edges.push(acc / t);
                }
                *edges.last_mut().unwrap() = 1.0;
                let f: Vec<f64> = self.values.iter().map(|&v| clamp01(v)).collect();
                Schedule::from_pieces(edges, f, t)
            }
            Interpolation::Linear => {
                let mut pts: Vec<(f64, f64)> = vec![(0.0, clamp01(self.values[0]))];
                for (&ti, &fi) in self.times.iter().zip(&self.values) {
                    pts.push((ti / t, clamp01(fi)));
                }
                pts.push((1.0, clamp01(*self.values.last().unwrap())));
                pts.dedup_by(|a, b| a.0 <= b.0);
                let a = ControlFunction::piecewise_linear(pts.clone())?;
                let b = ControlFunction::piecewise_linear(pts.iter().map(|&(s, f)| (s, 1.0 - f)).collect())?;
                Ok(Schedule::new(a, b, t)?.with_label("qaoa-linear"))
            }
        }
    }

    /// Bang-bang realization of the circuit: each layer becomes an `H_Z` bang
    /// of duration `|gamma_i|` followed by an `H_X` bang of duration `|beta_i|`.
    /// The returned `u` segments (`u = 1` means pure `H_X`) and durations skip
    /// zero-length bangs. Because the circuit applies `exp(+i angle H)`, this
    /// forward-time evolution reproduces the circuit state up to complex
    /// conjugation when all angles are nonnegative.
    pub fn digitized(&self) -> (Vec<f64>, Vec<f64>) {
        let mut u = Vec::new();
        let mut dur = Vec::new();
        for (&g, &b) in self.gammas.iter().zip(&self.betas) {
            if g != 0.0 {
                u.push(0.0);
                dur.push(g.abs());
            }
            if b != 0.0 {
                u.push(1.0);
                dur.push(b.abs());
            }
        }
        (u, dur)
    }

    /// Schedule of the bang-bang realization.
    pub fn digitized_schedule(&self) -> Result<Schedule> {
        let (u, dur) = self.digitized();
        let t: f64 = dur.iter().sum();
        let mut edges = vec![0.0];
        let mut acc = 0.0;
        for d in &dur {
            acc += d;
            edges.push(acc / t);
        }
        *edges.last_mut().unwrap() = 1.0;
        Ok(Schedule::from_pieces(edges, u, t)?.with_label("qaoa-bang-bang"))
    }
}

impl Schedule {
    /// `A = u_k`, `B = 1 - u_k` on arbitrary slices `[edges[k], edges[k+1])`.
    pub fn from_pieces(edges: Vec<f64>, u: Vec<f64>, total_time: f64) -> Result<Schedule> {
        let a = ControlFunction::piecewise_constant(edges.clone(), u.clone())?;
        let b = ControlFunction::piecewise_constant(edges, u.iter().map(|x| 1.0 - x).collect())?;
        Ok(Schedule::new(a, b, total_time)?.with_label("piecewise"))
    }
}
