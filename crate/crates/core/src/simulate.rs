//! Euler simulation of `(X, σ)` on a regular grid augmented with the exact
//! jump times.

use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{JumpLaw, ModelSpec, ScheduledJump};
use crate::rng::{stream, Stream};

/// Regular grid `t_i = i·Δ`, `i = 0..=n`, `Δ = T/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
    delta: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self {
            horizon,
            n_steps,
            delta: horizon / n_steps as f64,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Node time; the last node is exactly the horizon.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.delta
        }
    }

    /// Step `i ≥ 1` with `t_{i-1} < t ≤ t_i`.
    pub fn host_step(&self, t: f64) -> usize {
        let mut i = ((t / self.delta).ceil() as usize).clamp(1, self.n_steps);
        while i > 1 && self.node(i - 1) >= t {
            i -= 1;
        }
        while i < self.n_steps && self.node(i) < t {
            i += 1;
        }
        i
    }
}

/// One jump of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub size: Vec<f64>,
    /// `X_{T−}`.
    pub x_pre: Vec<f64>,
    /// `σ_{T−}`, `d×m` row-major.
    pub sigma_pre: Vec<f64>,
    /// `σ_T`.
    pub sigma_post: Vec<f64>,
    /// Step `i` with `t_{i−1} < T ≤ t_i`.
    pub host_step: usize,
}

/// One simulated trajectory.
///
/// Node arrays are row-major with one row per node (`n + 1` rows); step
/// arrays have one row per step (`n` rows, row `i − 1` for step `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub grid: TimeGrid,
    pub d: usize,
    pub m: usize,
    pub l: usize,
    pub x: Vec<f64>,
    pub sigma: Vec<f64>,
    pub dw: Vec<f64>,
    pub dv: Vec<f64>,
    pub jumps: Vec<JumpEvent>,
}

impl PathRecord {
    pub fn n_steps(&self) -> usize {
        self.grid.n_steps()
    }

    pub fn x_at(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn sigma_at(&self, i: usize) -> &[f64] {
        let w = self.d * self.m;
        &self.sigma[i * w..(i + 1) * w]
    }

    /// Brownian increment of step `i` (`1 ≤ i ≤ n`).
    pub fn dw_step(&self, i: usize) -> &[f64] {
        &self.dw[(i - 1) * self.m..i * self.m]
    }

    pub fn dv_step(&self, i: usize) -> &[f64] {
        &self.dv[(i - 1) * self.l..i * self.l]
    }

    /// `x[i] − x[i−1]`.
    pub fn increment(&self, i: usize, out: &mut [f64]) {
        let (a, b) = (self.x_at(i - 1), self.x_at(i));
        for ((o, x1), x0) in out.iter_mut().zip(b).zip(a) {
            *o = x1 - x0;
        }
    }

    /// Jumps hosted by each step, as index ranges into `jumps`.
    pub fn jumps_by_step(&self) -> Vec<std::ops::Range<usize>> {
        let n = self.n_steps();
        let mut ranges = vec![0..0; n + 1];
        let mut p = 0;
        for (i, range) in ranges.iter_mut().enumerate().skip(1) {
            let start = p;
            while p < self.jumps.len() && self.jumps[p].host_step == i {
                p += 1;
            }
            *range = start..p;
        }
        ranges
    }

    /// `x[i] − x[i−1]` minus the jumps inside step `i`.
    pub fn continuous_increment(&self, i: usize, hosted: &[JumpEvent], out: &mut [f64]) {
        self.increment(i, out);
        for j in hosted {
            for (o, s) in out.iter_mut().zip(&j.size) {
                *o -= s;
            }
        }
    }

    /// Node CSV: `t, x_1..x_d, sigma_11..sigma_dm`.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.d).map(|j| format!("x_{j}")));
        header.extend(sigma_names("sigma", self.d, self.m));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..=self.n_steps() {
            let mut row = vec![fmt_f64(self.grid.node(i))];
            row.extend(self.x_at(i).iter().map(|v| fmt_f64(*v)));
            row.extend(self.sigma_at(i).iter().map(|v| fmt_f64(*v)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Jump ledger CSV: `T_p, dx_1..dx_d, sigma_pre_*, sigma_post_*`.
    pub fn write_jumps_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        let mut header = vec!["T_p".to_string()];
        header.extend((1..=self.d).map(|j| format!("dx_{j}")));
        header.extend(sigma_names("sigma_pre", self.d, self.m));
        header.extend(sigma_names("sigma_post", self.d, self.m));
        writeln!(w, "{}", header.join(","))?;
        for j in &self.jumps {
            let mut row = vec![fmt_f64(j.time)];
            row.extend(j.size.iter().map(|v| fmt_f64(*v)));
            row.extend(j.sigma_pre.iter().map(|v| fmt_f64(*v)));
            row.extend(j.sigma_post.iter().map(|v| fmt_f64(*v)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn sigma_names(prefix: &str, d: usize, m: usize) -> Vec<String> {
    (1..=d)
        .flat_map(|j| (1..=m).map(move |k| format!("{prefix}_{j}{k}")))
        .collect()
}

/// Shortest representation that round-trips.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Clone)]
enum EventKind {
    X(Vec<f64>),
    Sigma(Vec<f64>),
}

#[derive(Debug, Clone)]
struct Event {
    time: f64,
    kind: EventKind,
}

fn poisson_events(
    rng: &mut ChaCha8Rng,
    intensity: f64,
    law: &JumpLaw,
    horizon: f64,
    wrap: fn(Vec<f64>) -> EventKind,
) -> Vec<Event> {
    let mut out = Vec::new();
    if intensity <= 0.0 {
        return out;
    }
    let exp = Exp::new(intensity).expect("positive intensity");
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t > horizon {
            break;
        }
        let mut size = vec![0.0; law.dim()];
        law.sample(rng, &mut size);
        out.push(Event {
            time: t,
            kind: wrap(size),
        });
    }
    out
}

fn scheduled_events(
    jumps: &[ScheduledJump],
    horizon: f64,
    wrap: fn(Vec<f64>) -> EventKind,
) -> Vec<Event> {
    jumps
        .iter()
        .filter(|j| j.time <= horizon)
        .map(|j| Event {
            time: j.time,
            kind: wrap(j.size.clone()),
        })
        .collect()
}

struct Stepper<'a> {
    model: &'a ModelSpec,
    noise: ChaCha8Rng,
    x: Vec<f64>,
    sigma: Vec<f64>,
    drift: Vec<f64>,
    sigma_drift: Vec<f64>,
    sigma_w: Vec<f64>,
    sigma_v: Vec<f64>,
    dw: Vec<f64>,
    dv: Vec<f64>,
    dynamic_vol: bool,
}

impl Stepper<'_> {
    /// One Euler step of length `dt` starting at `t`; adds the Brownian
    /// increments used to `dw_acc`/`dv_acc`.
    fn advance(&mut self, t: f64, dt: f64, dw_acc: &mut [f64], dv_acc: &mut [f64]) -> Result<()> {
        let (d, m, l) = (self.model.d(), self.model.m(), self.model.l());
        let sd = dt.sqrt();
        for w in self.dw.iter_mut() {
            *w = sd * Distribution::<f64>::sample(&StandardNormal, &mut self.noise);
        }
        for v in self.dv.iter_mut() {
            *v = sd * Distribution::<f64>::sample(&StandardNormal, &mut self.noise);
        }
        self.model.drift_prime(t, &self.x, &mut self.drift);
        if self.dynamic_vol {
            let vol = self.model.vol();
            vol.drift.eval(t, &self.sigma, &mut self.sigma_drift);
            vol.vol_of_vol.eval(t, &self.sigma, &mut self.sigma_w);
            vol.indep_loading.eval(t, &self.sigma, &mut self.sigma_v);
        }
        for j in 0..d {
            let diffusion: f64 = (0..m).map(|k| self.sigma[j * m + k] * self.dw[k]).sum();
            self.x[j] += self.drift[j] * dt + diffusion;
        }
        if self.dynamic_vol {
            for e in 0..d * m {
                let w: f64 = (0..m).map(|r| self.sigma_w[e * m + r] * self.dw[r]).sum();
                let v: f64 = (0..l).map(|r| self.sigma_v[e * l + r] * self.dv[r]).sum();
                self.sigma[e] += self.sigma_drift[e] * dt + w + v;
            }
        }
        if self.x.iter().chain(&self.sigma).any(|v| !v.is_finite())
            || self.drift.iter().any(|v| !v.is_finite())
        {
            let mut state = self.x.clone();
            state.extend_from_slice(&self.sigma);
            return Err(Error::NonFinite {
                what: "in Euler step".into(),
                time: t,
                state,
            });
        }
        for (a, w) in dw_acc.iter_mut().zip(&self.dw) {
            *a += w;
        }
        for (a, v) in dv_acc.iter_mut().zip(&self.dv) {
            *a += v;
        }
        Ok(())
    }
}

/// Simulates one trajectory. Deterministic in `(model, grid, seed)`.
///
/// Poisson jump times and marks of `X` come from stream
/// [`Stream::XJumps`], those of `σ` from [`Stream::SigmaJumps`], Brownian
/// increments from [`Stream::StepNoise`]. Inside a step that hosts jumps the
/// Euler scheme is split at every jump time; at a jump time the jump of `σ`
/// is applied before the jump of `X`, and the ledger records both `σ_{T−}`
/// and `σ_T`.
pub fn simulate_path(model: &ModelSpec, grid: &TimeGrid, seed: u64) -> Result<PathRecord> {
    let (d, m, l) = (model.d(), model.m(), model.l());
    let n = grid.n_steps();
    let horizon = grid.horizon();

    let mut events = Vec::new();
    if let Some(j) = model.jumps() {
        let mut rng = stream(seed, Stream::XJumps);
        if let Some(law) = &j.law {
            events.extend(poisson_events(&mut rng, j.intensity, law, horizon, EventKind::X));
        }
        events.extend(scheduled_events(&j.scheduled, horizon, EventKind::X));
    }
    let vol_jumps = model.vol().jumps.as_ref();
    if let Some(vj) = vol_jumps {
        let mut rng = stream(seed, Stream::SigmaJumps);
        if let Some(law) = &vj.law {
            events.extend(poisson_events(&mut rng, vj.intensity, law, horizon, EventKind::Sigma));
        }
        events.extend(scheduled_events(&vj.scheduled, horizon, EventKind::Sigma));
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    let at_x_jumps = vol_jumps.and_then(|v| v.at_x_jumps.as_deref());

    let mut stepper = Stepper {
        model,
        noise: stream(seed, Stream::StepNoise),
        x: model.x0().to_vec(),
        sigma: model.vol().sigma0.clone(),
        drift: vec![0.0; d],
        sigma_drift: vec![0.0; d * m],
        sigma_w: vec![0.0; d * m * m],
        sigma_v: vec![0.0; d * m * l],
        dw: vec![0.0; m],
        dv: vec![0.0; l],
        dynamic_vol: model.has_dynamic_vol(),
    };

    let mut xs = Vec::with_capacity((n + 1) * d);
    let mut sigmas = Vec::with_capacity((n + 1) * d * m);
    let mut dws = vec![0.0; n * m];
    let mut dvs = vec![0.0; n * l];
    let mut ledger = Vec::new();
    xs.extend_from_slice(&stepper.x);
    sigmas.extend_from_slice(&stepper.sigma);

    let mut next = 0;
    for i in 1..=n {
        let (t0, t1) = (grid.node(i - 1), grid.node(i));
        let dw_acc = &mut dws[(i - 1) * m..i * m];
        let dv_acc = &mut dvs[(i - 1) * l..i * l];
        let mut s = t0;
        while next < events.len() && events[next].time <= t1 {
            let tau = events[next].time;
            if tau > s {
                stepper.advance(s, tau - s, dw_acc, dv_acc)?;
                s = tau;
            }
            let mut x_jump: Option<Vec<f64>> = None;
            let mut sigma_jump: Option<Vec<f64>> = None;
            while next < events.len() && events[next].time == tau {
                let (acc, size) = match &events[next].kind {
                    EventKind::X(size) => (&mut x_jump, size),
                    EventKind::Sigma(size) => (&mut sigma_jump, size),
                };
                match acc {
                    Some(a) => a.iter_mut().zip(size).for_each(|(a, v)| *a += v),
                    None => *acc = Some(size.clone()),
                }
                next += 1;
            }
            let sigma_pre = stepper.sigma.clone();
            if let (Some(_), Some(c)) = (&x_jump, at_x_jumps) {
                let acc = sigma_jump.get_or_insert_with(|| vec![0.0; d * m]);
                acc.iter_mut().zip(c).for_each(|(a, v)| *a += v);
            }
            if let Some(js) = &sigma_jump {
                stepper.sigma.iter_mut().zip(js).for_each(|(s, v)| *s += v);
            }
            if let Some(size) = x_jump.filter(|s| s.iter().any(|v| *v != 0.0)) {
                let x_pre = stepper.x.clone();
                stepper.x.iter_mut().zip(&size).for_each(|(x, v)| *x += v);
                ledger.push(JumpEvent {
                    time: tau,
                    size,
                    x_pre,
                    sigma_pre,
                    sigma_post: stepper.sigma.clone(),
                    host_step: i,
                });
            }
        }
        if t1 > s {
            stepper.advance(s, t1 - s, dw_acc, dv_acc)?;
        }
        xs.extend_from_slice(&stepper.x);
        sigmas.extend_from_slice(&stepper.sigma);
    }

    Ok(PathRecord {
        grid: *grid,
        d,
        m,
        l,
        x: xs,
        sigma: sigmas,
        dw: dws,
        dv: dvs,
        jumps: ledger,
    })
}

/// Restricts a path to every `factor`-th node. Brownian increments are
/// summed over blocks and jumps are re-hosted to the coarse steps.
pub fn subsample(path: &PathRecord, factor: usize) -> Result<PathRecord> {
    let n = path.n_steps();
    if factor == 0 || !n.is_multiple_of(factor) {
        return Err(Error::InvalidArgument(format!(
            "coarsening factor {factor} does not divide n = {n}"
        )));
    }
    if factor == 1 {
        return Ok(path.clone());
    }
    let nc = n / factor;
    let grid = TimeGrid::new(path.grid.horizon(), nc)?;
    let (d, m, l) = (path.d, path.m, path.l);
    let mut x = Vec::with_capacity((nc + 1) * d);
    let mut sigma = Vec::with_capacity((nc + 1) * d * m);
    for k in 0..=nc {
        x.extend_from_slice(path.x_at(k * factor));
        sigma.extend_from_slice(path.sigma_at(k * factor));
    }
    let block_sum = |src: &[f64], width: usize| -> Vec<f64> {
        let mut out = vec![0.0; nc * width];
        for i in 0..n {
            let k = i / factor;
            for c in 0..width {
                out[k * width + c] += src[i * width + c];
            }
        }
        out
    };
    let jumps = path
        .jumps
        .iter()
        .map(|j| JumpEvent {
            host_step: (j.host_step - 1) / factor + 1,
            ..j.clone()
        })
        .collect();
    Ok(PathRecord {
        grid,
        d,
        m,
        l,
        x,
        sigma,
        dw: block_sum(&path.dw, m),
        dv: block_sum(&path.dv, l),
        jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coefficient, JumpSpec, VolJumps, VolSpec};

    #[test]
    fn host_step_boundaries() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(g.host_step(0.25), 1);
        assert_eq!(g.host_step(0.2500001), 2);
        assert_eq!(g.host_step(1.0), 4);
        assert_eq!(g.host_step(1e-9), 1);
        let g = TimeGrid::new(1.0, 3).unwrap();
        for i in 1..=3 {
            assert_eq!(g.host_step(g.node(i)), i);
        }
    }

    #[test]
    fn grid_invariants() {
        let g = TimeGrid::new(2.5, 7).unwrap();
        assert!((g.delta() * 7.0 - 2.5).abs() <= 1e-12 * 2.5);
        assert_eq!(g.node(7), 2.5);
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn zero_dynamics() {
        let model = ModelSpec::builder(1, 1).x0(vec![5.0]).build().unwrap();
        let p = simulate_path(&model, &TimeGrid::new(1.0, 16).unwrap(), 1).unwrap();
        assert!(p.x.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn pure_drift() {
        let model = ModelSpec::builder(1, 1)
            .x0(vec![2.0])
            .drift(Coefficient::Constant(vec![1.0]))
            .build()
            .unwrap();
        let p = simulate_path(&model, &TimeGrid::new(1.0, 1000).unwrap(), 1).unwrap();
        assert!((p.x_at(1000)[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pure_scheduled_jump() {
        let model = ModelSpec::builder(1, 1)
            .x0(vec![1.0])
            .jumps(JumpSpec::scheduled(vec![ScheduledJump::new(0.5, vec![2.0])]))
            .build()
            .unwrap();
        let p = simulate_path(&model, &TimeGrid::new(1.0, 8).unwrap(), 3).unwrap();
        assert_eq!(p.jumps.len(), 1);
        let j = &p.jumps[0];
        assert_eq!(j.x_pre, vec![1.0]);
        assert_eq!(j.host_step, 4);
        for i in 0..=8 {
            let expected = if p.grid.node(i) >= 0.5 { 3.0 } else { 1.0 };
            assert_eq!(p.x_at(i)[0], expected);
        }
    }

    #[test]
    fn jump_free_steps_are_single_euler_steps() {
        let model = ModelSpec::builder(2, 2)
            .x0(vec![0.5, -1.0])
            .drift(Coefficient::Affine {
                offset: vec![0.1, 0.0],
                linear: vec![-0.5, 0.0, 0.2, -0.3],
            })
            .vol(VolSpec {
                sigma0: vec![1.0, 0.2, 0.0, 0.8],
                drift: Coefficient::Constant(vec![0.1, 0.0, 0.0, -0.1]),
                vol_of_vol: Coefficient::Constant(vec![0.1; 8]),
                indep_loading: Coefficient::Constant(vec![0.0; 0]),
                jumps: None,
            })
            .jumps(JumpSpec::poisson(5.0, JumpLaw::gaussian(vec![0.2, 0.0, 0.0, 0.2]).unwrap()))
            .build()
            .unwrap();
        let p = simulate_path(&model, &TimeGrid::new(1.0, 256).unwrap(), 11).unwrap();
        let hosted = p.jumps_by_step();
        let mut b = vec![0.0; 2];
        let mut inc = vec![0.0; 2];
        let mut checked = 0;
        for i in 1..=256 {
            if !hosted[i].is_empty() {
                continue;
            }
            checked += 1;
            model.drift_prime(p.grid.node(i - 1), p.x_at(i - 1), &mut b);
            p.increment(i, &mut inc);
            let s = p.sigma_at(i - 1);
            let w = p.dw_step(i);
            for j in 0..2 {
                let euler = b[j] * p.grid.delta() + s[j * 2] * w[0] + s[j * 2 + 1] * w[1];
                assert!((inc[j] - euler).abs() < 1e-12);
            }
        }
        assert!(checked > 200);
        for pair in p.jumps.windows(2) {
            assert!(pair[0].time < pair[1].time);
        }
        assert!(p.jumps.iter().all(|j| j.time > 0.0 && j.time <= 1.0));
    }

    #[test]
    fn brownian_increment_variance_band() {
        let model = ModelSpec::brownian(1, 1.0);
        let g = TimeGrid::new(1.0, 512).unwrap();
        let p = simulate_path(&model, &g, 5).unwrap();
        let scaled: Vec<f64> = p.dw.iter().map(|w| w / g.delta().sqrt()).collect();
        let mean = scaled.iter().sum::<f64>() / 512.0;
        let var = scaled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 511.0;
        assert!((0.5..=1.5).contains(&var));
    }

    #[test]
    fn sigma_jump_applied_before_x_jump() {
        let model = ModelSpec::builder(1, 1)
            .vol(VolSpec {
                jumps: Some(VolJumps {
                    at_x_jumps: Some(vec![0.5]),
                    ..Default::default()
                }),
                ..VolSpec::constant(vec![1.0], 1, 1, 0)
            })
            .jumps(JumpSpec::scheduled(vec![ScheduledJump::new(0.3, vec![1.0])]))
            .build()
            .unwrap();
        let p = simulate_path(&model, &TimeGrid::new(1.0, 10).unwrap(), 2).unwrap();
        let j = &p.jumps[0];
        assert_eq!(j.sigma_pre, vec![1.0]);
        assert_eq!(j.sigma_post, vec![1.5]);
        assert_eq!(p.sigma_at(10), &[1.5]);
    }

    #[test]
    fn non_finite_coefficient_is_reported() {
        let model = ModelSpec::builder(1, 1)
            .drift(Coefficient::custom(1, |t, _, out| {
                out[0] = if t > 0.5 { f64::NAN } else { 0.0 }
            }))
            .build()
            .unwrap();
        let err = simulate_path(&model, &TimeGrid::new(1.0, 8).unwrap(), 0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { time, .. } if time > 0.5));
    }

    #[test]
    fn subsample_contracts() {
        let model = ModelSpec::builder(1, 1)
            .sigma(vec![1.0])
            .jumps(JumpSpec::poisson(4.0, JumpLaw::Constant(vec![0.3])))
            .build()
            .unwrap();
        let fine = simulate_path(&model, &TimeGrid::new(1.0, 8).unwrap(), 9).unwrap();
        assert_eq!(subsample(&fine, 1).unwrap(), fine);
        assert!(subsample(&fine, 3).is_err());
        let coarse = subsample(&fine, 2).unwrap();
        assert_eq!(coarse.n_steps(), 4);
        assert_eq!(coarse.x_at(4), fine.x_at(8));
        let (mut a, mut b, mut c) = ([0.0], [0.0], [0.0]);
        for k in 1..=4 {
            coarse.increment(k, &mut a);
            fine.increment(2 * k - 1, &mut b);
            fine.increment(2 * k, &mut c);
            assert!((a[0] - (b[0] + c[0])).abs() < 1e-15);
            assert_eq!(coarse.dw_step(k)[0], fine.dw_step(2 * k - 1)[0] + fine.dw_step(2 * k)[0]);
        }
        for (cj, fj) in coarse.jumps.iter().zip(&fine.jumps) {
            assert_eq!(cj.host_step, fj.host_step.div_ceil(2));
        }
    }

    #[test]
    fn csv_shapes() {
        let model = ModelSpec::builder(1, 1)
            .sigma(vec![1.0])
            .jumps(JumpSpec::scheduled(vec![ScheduledJump::new(0.5, vec![1.0])]))
            .build()
            .unwrap();
        let p = simulate_path(&model, &TimeGrid::new(1.0, 4).unwrap(), 0).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf, &["provenance".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# provenance");
        assert_eq!(lines[1], "t,x_1,sigma_11");
        assert_eq!(lines.len(), 2 + 5);
        let mut buf = Vec::new();
        p.write_jumps_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "T_p,dx_1,sigma_pre_11,sigma_post_11");
        assert_eq!(text.lines().count(), 2);
    }
}
