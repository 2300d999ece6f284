//! Time integration of the inverse curvature flow in graph form.
//!
//! The flow `dX/dt = F nu` with `F = ((n-2)/(2(n-1))) sigma_1/sigma_2`
//! reduces on radial graphs to the scalar parabolic equation `dr/dt = F v`
//! over `S^{n-1}`. Stepping is classical explicit RK4 with the parabolic cap
//! `dt = c_cfl d_rho^2`, step rejection with halving on two-convexity loss,
//! and monitor recording on a fixed sample grid (time steps are clipped so
//! samples land exactly on multiples of the sample interval, which keeps
//! reruns byte-identical and finite-difference checks clean).

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::hypgeom::curvature::{field_from_parts, CurvatureField};
use crate::hypgeom::functionals::{
    area_of_field, auxiliary_margins_of_field, main_margin_of_field, q_of, total_sigma_of_field,
};
use crate::hypgeom::grid::{d1_into, d2_into, extend_reflect_into, Grid, Representation};
use crate::hypgeom::{GeomError, RadialProfile, RADIUS_CAP};
use crate::report::{MonitorSample, MonitorSeries, RunMeta};
use crate::scalar::Scalar;
use crate::shapes::{self, ShapeSpec};

const MAX_HALVINGS: u32 = 10;

#[derive(Debug, thiserror::Error)]
pub enum FlowError<S: Scalar> {
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("flow speed undefined: sigma_2 at/below floor or sigma_1 <= 0 at {} node(s), first offenders {:?}", nodes.len(), nodes.iter().take(8).collect::<Vec<_>>())]
    TwoConvexityLoss { nodes: Vec<usize> },
    #[error("negative time step dt = {0}")]
    NegativeStep(S),
    #[error("step rejected at t = {t}: {kind} at node {node}")]
    StepRejected { t: S, node: usize, kind: StepFailKind },
    #[error("flow breakdown at t = {t} after {halvings} consecutive step halvings; last good state attached")]
    Breakdown {
        t: S,
        halvings: u32,
        last: Box<FlowState<S>>,
    },
    #[error("monitor series insufficient for this check: {0}")]
    InsufficientData(String),
    #[error("decay fit unreliable: {0}")]
    FitUnreliable(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepFailKind {
    RadiusOutOfBounds,
    ConvexityLoss,
    NonFinite,
}

impl std::fmt::Display for StepFailKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepFailKind::RadiusOutOfBounds => "radius left (0, cap)",
            StepFailKind::ConvexityLoss => "two-convexity loss",
            StepFailKind::NonFinite => "non-finite value",
        })
    }
}

/// Flow run configuration; deserializes from the run JSON document.
///
/// Defaults follow the standard run: n=5, N=400, cosine bump (1, 0.1, 2),
/// `c_cfl = 0.1`, `t_max = 10`, millisecond sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct FlowConfig<S> {
    pub n: usize,
    pub resolution: usize,
    #[serde(default = "default_c_cfl")]
    pub c_cfl: S,
    pub t_max: S,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: S,
    /// Stop once `max |kappa_i - 1|` falls below this (checked at samples).
    #[serde(default = "default_umbilic_tol")]
    pub umbilic_tol: S,
    /// Two-convexity guard: the speed is undefined once `sigma_2` reaches this.
    #[serde(default = "default_sigma2_floor")]
    pub sigma2_floor: S,
    pub shape: ShapeSpec,
    /// Flow states to capture, each at the first sample time reaching it.
    #[serde(default)]
    pub snapshot_times: Vec<S>,
}

fn default_c_cfl<S: Scalar>() -> S {
    S::cst(0.1)
}
fn default_sample_interval<S: Scalar>() -> S {
    S::cst(1e-3)
}
fn default_umbilic_tol<S: Scalar>() -> S {
    S::cst(1e-9)
}
fn default_sigma2_floor<S: Scalar>() -> S {
    S::cst(1e-12)
}

impl<S: Scalar> FlowConfig<S> {
    /// The standard perturbed-sphere run.
    pub fn default_run() -> Self {
        Self {
            n: 5,
            resolution: 400,
            c_cfl: default_c_cfl(),
            t_max: S::cst(10.0),
            sample_interval: default_sample_interval(),
            umbilic_tol: default_umbilic_tol(),
            sigma2_floor: default_sigma2_floor(),
            shape: ShapeSpec::CosineBump { r0: 1.0, eps: 0.1, k: 2 },
            snapshot_times: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), FlowError<S>> {
        if !crate::hypgeom::DIMENSION_RANGE.contains(&self.n) {
            return Err(FlowError::InvalidConfig(format!(
                "n = {} outside supported range 3..=8",
                self.n
            )));
        }
        if self.resolution < 50 {
            return Err(FlowError::InvalidConfig(format!(
                "resolution {} too small; need at least 50",
                self.resolution
            )));
        }
        if !(self.c_cfl > S::zero() && self.c_cfl <= S::cst(0.5)) {
            return Err(FlowError::InvalidConfig(format!(
                "c_cfl = {} outside (0, 0.5]",
                self.c_cfl
            )));
        }
        if !(self.t_max > S::zero()) {
            return Err(FlowError::InvalidConfig(format!(
                "t_max = {} must be positive",
                self.t_max
            )));
        }
        if !(self.sample_interval > S::zero()) {
            return Err(FlowError::InvalidConfig(format!(
                "sample_interval = {} must be positive",
                self.sample_interval
            )));
        }
        if !(self.umbilic_tol >= S::zero()) || !(self.sigma2_floor >= S::zero()) {
            return Err(FlowError::InvalidConfig(
                "tolerances must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Hex digest of the canonical config JSON; stamped into artifacts.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A point on a flow trajectory: time plus a validated two-convex profile.
#[derive(Clone, Debug)]
pub struct FlowState<S> {
    t: S,
    profile: RadialProfile<S>,
}

impl<S: Scalar> PartialEq for FlowState<S> {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t && self.profile == other.profile
    }
}

impl<S: Scalar> FlowState<S> {
    /// Validates `t >= 0` and strict two-convexity of the profile.
    pub fn new(t: S, profile: RadialProfile<S>) -> Result<Self, FlowError<S>> {
        if !(t >= S::zero() && t.is_finite()) {
            return Err(FlowError::InvalidConfig(format!(
                "flow time t = {t} must be finite and nonnegative"
            )));
        }
        let field = crate::hypgeom::curvature_from_profile(&profile)?;
        let nodes = field.two_convexity_violations();
        if !nodes.is_empty() {
            return Err(FlowError::Geometry(GeomError::NotTwoConvex { nodes }));
        }
        Ok(Self { t, profile })
    }

    pub fn t(&self) -> S {
        self.t
    }

    pub fn profile(&self) -> &RadialProfile<S> {
        &self.profile
    }

    pub fn into_profile(self) -> RadialProfile<S> {
        self.profile
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
struct FlowStateDoc<S> {
    t: S,
    profile: RadialProfile<S>,
}

impl<S: Scalar> Serialize for FlowState<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        FlowStateDoc { t: self.t, profile: self.profile.clone() }.serialize(serializer)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for FlowState<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = FlowStateDoc::<S>::deserialize(deserializer)?;
        FlowState::new(doc.t, doc.profile).map_err(D::Error::custom)
    }
}

/// Pointwise flow speed `F = ((n-2)/(2(n-1))) sigma_1/sigma_2`.
#[inline]
pub fn inverse_sigma_speed<S: Scalar>(n: usize, sigma1: S, sigma2: S) -> S {
    S::cst((n - 2) as f64 / (2.0 * (n - 1) as f64)) * sigma1 / sigma2
}

/// Per-node speed of a curvature field; errors if any node has `sigma_2` at
/// or below the floor or fails mean convexity.
pub fn speed<S: Scalar>(
    field: &CurvatureField<S>,
    sigma2_floor: S,
) -> Result<Vec<S>, FlowError<S>> {
    let n = field.ambient_dim();
    let mut out = vec![S::zero(); field.node_count()];
    let mut bad = Vec::new();
    for (j, o) in out.iter_mut().enumerate() {
        let s1 = field.sigma_at(j, 1);
        let s2 = field.sigma_at(j, 2);
        if !(s2 > sigma2_floor && s1 > S::zero()) {
            bad.push(j);
            continue;
        }
        *o = inverse_sigma_speed(n, s1, s2);
    }
    if !bad.is_empty() {
        return Err(FlowError::TwoConvexityLoss { nodes: bad });
    }
    Ok(out)
}

struct StepFail {
    node: usize,
    kind: StepFailKind,
}

/// Scalar constants of the fused axisymmetric right-hand side.
struct RhsConsts<S> {
    c_n: S,
    nm2: S,
    c2b: S,
    floor: S,
    cap: S,
    inv_12h: S,
    inv_12h2: S,
}

/// Fused right-hand side `F v` for axisymmetric profiles, with the
/// exponentials supplied by the caller.
///
/// Uses the algebraically equivalent division-lean form
/// `F v = c_n lambda v^4 (Qa + (n-2) Qb) / ((n-2) Qa Qb + C(n-2,2) Qb^2)`
/// with `Qa = v^2 lambda' - phi''`, `Qb = v^2 (lambda' - cot(rho) phi')`,
/// which needs no square root; the two-convexity guard compares the
/// denominator against `floor * lambda^2 v^6`. Guards are folded into a flag
/// and all buffers are walked by zipped iterators so the loop vectorizes;
/// offending nodes are located only on failure.
#[allow(clippy::too_many_arguments)]
fn axisym_rhs<S: Scalar>(
    c: &RhsConsts<S>,
    cot: &[S],
    r: &[S],
    ex: &[S],
    exq: &[S],
    ext: &mut Vec<S>,
    rp: &mut [S],
    rpp: &mut [S],
    out: &mut [S],
) -> Result<(), StepFail> {
    extend_reflect_into(r, ext);
    d1_into(ext, c.inv_12h, rp);
    d2_into(ext, c.inv_12h2, rpp);

    let half = S::cst(0.5);
    let one = S::one();
    let mut all_ok = true;
    for ((((o, (&e, &q)), &rp), &rpp), &cot) in out
        .iter_mut()
        .zip(ex.iter().zip(exq.iter()))
        .zip(rp.iter())
        .zip(rpp.iter())
        .zip(cot.iter())
    {
        let lam = half * (e - q);
        let lamp = half * (e + q);
        let ilam = lam.recip();
        let pp = rp * ilam;
        let v2 = one + pp * pp;
        let phi_pp = ilam * (rpp - lamp * rp * pp);
        let qa = v2 * lamp - phi_pp;
        let qb = v2 * (lamp - cot * pp);
        let s1p = qa + c.nm2 * qb;
        let den = c.nm2 * qa * qb + c.c2b * qb * qb;
        let val = c.c_n * lam * v2 * v2 * s1p / den;
        // sigma_2 = den / (lambda^2 v^6), sigma_1 has the sign of s1p
        all_ok &= (den > c.floor * lam * lam * v2 * v2 * v2)
            & (s1p > S::zero())
            & (val.abs() < S::infinity());
        *o = val;
    }
    if !all_ok {
        return Err(locate_rhs_failure(c, cot, ex, exq, rp, rpp, out));
    }
    Ok(())
}

#[cold]
fn locate_rhs_failure<S: Scalar>(
    c: &RhsConsts<S>,
    cot: &[S],
    ex: &[S],
    exq: &[S],
    rp: &[S],
    rpp: &[S],
    out: &[S],
) -> StepFail {
    let half = S::cst(0.5);
    for j in 0..ex.len() {
        let e = ex[j];
        let q = exq[j];
        let lam = half * (e - q);
        let lamp = half * (e + q);
        let ilam = lam.recip();
        let pp = rp[j] * ilam;
        let v2 = S::one() + pp * pp;
        let phi_pp = ilam * (rpp[j] - lamp * rp[j] * pp);
        let qa = v2 * lamp - phi_pp;
        let qb = v2 * (lamp - cot[j] * pp);
        let s1p = qa + c.nm2 * qb;
        let den = c.nm2 * qa * qb + c.c2b * qb * qb;
        if !(den > c.floor * lam * lam * v2 * v2 * v2 && s1p > S::zero()) {
            return StepFail { node: j, kind: StepFailKind::ConvexityLoss };
        }
        if !out[j].is_finite() {
            return StepFail { node: j, kind: StepFailKind::NonFinite };
        }
    }
    StepFail { node: 0, kind: StepFailKind::NonFinite }
}

/// Largest stage offset for which `exp(r + d)` is updated from `exp(r)` by a
/// cubic instead of recomputed; the truncation `d^4/24` is below 5e-18.
const EXP_UPDATE_LIMIT: f64 = 1e-4;

/// RK4 stepper for axisymmetric grids.
///
/// The base exponential `exp(r)` is computed once per step; the three inner
/// stages sit at offsets `O(dt)` from the base point, so their exponentials
/// are updated multiplicatively with a cubic Taylor factor (exact to far
/// below working precision at parabolic step sizes, with a fallback to the
/// full exponential for large offsets).
struct AxisymStepper<S> {
    consts: RhsConsts<S>,
    cot: Vec<S>,
    ext: Vec<S>,
    rp: Vec<S>,
    rpp: Vec<S>,
    ex_base: Vec<S>,
    exq_base: Vec<S>,
    ex_stage: Vec<S>,
    exq_stage: Vec<S>,
    ks: [Vec<S>; 4],
    stage: Vec<S>,
}

impl<S: Scalar> AxisymStepper<S> {
    fn new(grid: &Grid<S>, sigma2_floor: S) -> Self {
        let n = grid.ambient_dim();
        let len = grid.n_rho();
        Self {
            consts: RhsConsts {
                c_n: S::cst((n - 2) as f64 / (2.0 * (n - 1) as f64)),
                nm2: S::of_usize(n - 2),
                c2b: S::cst((n - 2) as f64 * (n - 3) as f64 / 2.0),
                floor: sigma2_floor,
                cap: S::cst(RADIUS_CAP),
                inv_12h: grid.inv_12h(),
                inv_12h2: grid.inv_12h2(),
            },
            cot: grid.cot_rho().to_vec(),
            ext: Vec::with_capacity(len + 4),
            rp: vec![S::zero(); len],
            rpp: vec![S::zero(); len],
            ex_base: vec![S::zero(); len],
            exq_base: vec![S::zero(); len],
            ex_stage: vec![S::zero(); len],
            exq_stage: vec![S::zero(); len],
            ks: std::array::from_fn(|_| vec![S::zero(); len]),
            stage: vec![S::zero(); len],
        }
    }

    /// Builds the stage point `r + a k`, its exponentials, and the stage
    /// bounds flag in one vectorized pass.
    fn prepare_stage(&mut self, r: &[S], a: S, k: &[S]) -> Result<(), StepFail> {
        let cap = self.consts.cap;
        let half = S::cst(0.5);
        let third = S::cst(1.0 / 3.0);
        let limit = S::cst(EXP_UPDATE_LIMIT);
        let mut in_bounds = true;
        let mut small_offset = true;
        for ((((s, (es, eqs)), &rv), &kv), (&eb, &eqb)) in self
            .stage
            .iter_mut()
            .zip(self.ex_stage.iter_mut().zip(self.exq_stage.iter_mut()))
            .zip(r.iter())
            .zip(k.iter())
            .zip(self.ex_base.iter().zip(self.exq_base.iter()))
        {
            let d = a * kv;
            let x = rv + d;
            *s = x;
            // exp(r +- d) = exp(+-r) (1 +- d (1 +- d/2 (1 +- d/3)))
            *es = eb * (S::one() + d * (S::one() + half * d * (S::one() + third * d)));
            *eqs = eqb * (S::one() - d * (S::one() - half * d * (S::one() - third * d)));
            in_bounds &= (x > S::zero()) & (x < cap);
            small_offset &= d.abs() <= limit;
        }
        if !in_bounds {
            let node = self
                .stage
                .iter()
                .position(|&x| !(x > S::zero() && x < cap))
                .unwrap_or(0);
            return Err(StepFail { node, kind: StepFailKind::RadiusOutOfBounds });
        }
        if !small_offset {
            for ((es, eqs), &x) in self
                .ex_stage
                .iter_mut()
                .zip(self.exq_stage.iter_mut())
                .zip(self.stage.iter())
            {
                let e = x.exp_radius_range();
                *es = e;
                *eqs = e.recip();
            }
        }
        Ok(())
    }

    /// One classical RK4 step; `r` is updated only when every stage succeeds.
    fn advance(&mut self, r: &mut [S], dt: S) -> Result<(), StepFail> {
        for (j, &x) in r.iter().enumerate() {
            if !(x > S::zero() && x < self.consts.cap) {
                return Err(StepFail { node: j, kind: StepFailKind::RadiusOutOfBounds });
            }
        }
        for ((e, eq), &x) in self
            .ex_base
            .iter_mut()
            .zip(self.exq_base.iter_mut())
            .zip(r.iter())
        {
            let v = x.exp_radius_range();
            *e = v;
            *eq = v.recip();
        }
        axisym_rhs(
            &self.consts,
            &self.cot,
            r,
            &self.ex_base,
            &self.exq_base,
            &mut self.ext,
            &mut self.rp,
            &mut self.rpp,
            &mut self.ks[0],
        )?;

        let half_dt = S::cst(0.5) * dt;
        for (i, a) in [half_dt, half_dt, dt].into_iter().enumerate() {
            let prev = std::mem::take(&mut self.ks[i]);
            let prepared = self.prepare_stage(r, a, &prev);
            self.ks[i] = prev;
            prepared?;
            let (stage, ex_stage, exq_stage) = (
                std::mem::take(&mut self.stage),
                std::mem::take(&mut self.ex_stage),
                std::mem::take(&mut self.exq_stage),
            );
            let res = axisym_rhs(
                &self.consts,
                &self.cot,
                &stage,
                &ex_stage,
                &exq_stage,
                &mut self.ext,
                &mut self.rp,
                &mut self.rpp,
                &mut self.ks[i + 1],
            );
            self.stage = stage;
            self.ex_stage = ex_stage;
            self.exq_stage = exq_stage;
            res?;
        }

        let w = dt / S::cst(6.0);
        let two = S::cst(2.0);
        for ((((rv, &a), &b), &c), &d) in r
            .iter_mut()
            .zip(self.ks[0].iter())
            .zip(self.ks[1].iter())
            .zip(self.ks[2].iter())
            .zip(self.ks[3].iter())
        {
            *rv += w * (a + two * (b + c) + d);
        }
        Ok(())
    }
}

/// General (allocating) right-hand side for any representation; drives the
/// full-sphere stepping path, which has no tight runtime budget.
struct GeneralRk4<S> {
    grid: Grid<S>,
    floor: S,
    k: [Vec<S>; 4],
    stage: Vec<S>,
}

impl<S: Scalar> GeneralRk4<S> {
    fn new(grid: &Grid<S>, floor: S) -> Self {
        let len = grid.node_count();
        Self {
            grid: grid.clone(),
            floor,
            k: std::array::from_fn(|_| vec![S::zero(); len]),
            stage: vec![S::zero(); len],
        }
    }

    fn eval(grid: &Grid<S>, floor: S, r: &[S], out: &mut [S]) -> Result<(), StepFail> {
        let field = field_from_parts(grid, r).map_err(|e| StepFail {
            node: match e {
                GeomError::RadiusOverflow { node, .. }
                | GeomError::NonFiniteCurvature { node }
                | GeomError::NonPositiveRadius { node, .. }
                | GeomError::NonFiniteRadius { node } => node,
                _ => 0,
            },
            kind: StepFailKind::RadiusOutOfBounds,
        })?;
        let f = speed(&field, floor).map_err(|e| StepFail {
            node: match e {
                FlowError::TwoConvexityLoss { ref nodes } => nodes[0],
                _ => 0,
            },
            kind: StepFailKind::ConvexityLoss,
        })?;
        for j in 0..r.len() {
            out[j] = f[j] * field.v[j];
        }
        Ok(())
    }

    fn advance(&mut self, r: &mut [S], dt: S) -> Result<(), StepFail> {
        let half_dt = S::cst(0.5) * dt;
        let mut stage = std::mem::take(&mut self.stage);
        let result = (|| {
            Self::eval(&self.grid, self.floor, r, &mut self.k[0])?;
            for j in 0..r.len() {
                stage[j] = r[j] + half_dt * self.k[0][j];
            }
            Self::eval(&self.grid, self.floor, &stage, &mut self.k[1])?;
            for j in 0..r.len() {
                stage[j] = r[j] + half_dt * self.k[1][j];
            }
            Self::eval(&self.grid, self.floor, &stage, &mut self.k[2])?;
            for j in 0..r.len() {
                stage[j] = r[j] + dt * self.k[2][j];
            }
            Self::eval(&self.grid, self.floor, &stage, &mut self.k[3])?;
            let w = dt / S::cst(6.0);
            let two = S::cst(2.0);
            for j in 0..r.len() {
                r[j] += w * (self.k[0][j] + two * (self.k[1][j] + self.k[2][j]) + self.k[3][j]);
            }
            Ok(())
        })();
        self.stage = stage;
        result
    }
}

enum Rk4<S> {
    Axisym(Box<AxisymStepper<S>>),
    General(Box<GeneralRk4<S>>),
}

impl<S: Scalar> Rk4<S> {
    fn new(grid: &Grid<S>, floor: S) -> Self {
        match grid.representation() {
            Representation::Axisymmetric => Rk4::Axisym(Box::new(AxisymStepper::new(grid, floor))),
            Representation::FullSphere => Rk4::General(Box::new(GeneralRk4::new(grid, floor))),
        }
    }

    fn advance(&mut self, r: &mut [S], dt: S) -> Result<(), StepFail> {
        match self {
            Rk4::Axisym(s) => s.advance(r, dt),
            Rk4::General(s) => s.advance(r, dt),
        }
    }
}

/// One explicit RK4 step of `dr/dt = F v`; the result is revalidated
/// (positivity, two-convexity) before a new state is returned.
pub fn step<S: Scalar>(
    state: &FlowState<S>,
    dt: S,
    sigma2_floor: S,
) -> Result<FlowState<S>, FlowError<S>> {
    if dt < S::zero() {
        return Err(FlowError::NegativeStep(dt));
    }
    if dt == S::zero() {
        return Ok(state.clone());
    }
    let grid = state.profile.grid();
    let mut r = state.profile.values().to_vec();
    let mut rk = Rk4::new(grid, sigma2_floor);
    rk.advance(&mut r, dt).map_err(|f| FlowError::StepRejected {
        t: state.t,
        node: f.node,
        kind: f.kind,
    })?;
    let profile = RadialProfile::with_grid(grid.clone(), r)?;
    FlowState::new(state.t + dt, profile)
}

/// Everything a run produces: the monitor series, the final state, and any
/// states captured at `snapshot_times`.
#[derive(Debug, Clone)]
pub struct RunOutput<S> {
    pub series: MonitorSeries<S>,
    pub final_state: FlowState<S>,
    pub snapshots: Vec<FlowState<S>>,
}

/// Integrates the configured initial shape, recording monitors every
/// `sample_interval`. Step size is `c_cfl d_rho^2`, halved on rejection (at
/// most ten consecutive times) and recovered geometrically after successes.
pub fn run<S: Scalar>(config: &FlowConfig<S>) -> Result<RunOutput<S>, FlowError<S>> {
    config.validate()?;
    let profile = shapes::build_profile(&config.shape, config.n, config.resolution)?;
    let state = FlowState::new(S::zero(), profile)?;
    run_from(config, state)
}

/// Resumes a run from a checkpoint state. The config supplies stepping and
/// stop parameters; its dimension and resolution must match the state.
pub fn run_from<S: Scalar>(
    config: &FlowConfig<S>,
    state: FlowState<S>,
) -> Result<RunOutput<S>, FlowError<S>> {
    config.validate()?;
    let grid = state.profile.grid().clone();
    if grid.ambient_dim() != config.n {
        return Err(FlowError::InvalidConfig(format!(
            "config n = {} but state has n = {}",
            config.n,
            grid.ambient_dim()
        )));
    }
    if grid.representation() == Representation::Axisymmetric && grid.n_rho() != config.resolution {
        return Err(FlowError::InvalidConfig(format!(
            "config resolution {} but state grid has {}",
            config.resolution,
            grid.n_rho()
        )));
    }
    let t0 = state.t;
    if !(config.t_max > t0) {
        return Err(FlowError::InvalidConfig(format!(
            "t_max = {} not beyond the state time {}",
            config.t_max, t0
        )));
    }

    let meta = RunMeta {
        config_hash: config.hash(),
        n: config.n,
        resolution: config.resolution,
        prng: shapes::PRNG_NAME.to_string(),
        seed: config.shape.seed(),
    };

    let mut r = state.profile.values().to_vec();
    let mut t = t0;
    let mut rk = Rk4::new(&grid, config.sigma2_floor);

    let dt0 = config.c_cfl * grid.d_rho() * grid.d_rho();
    let snap_slack = S::one() + S::cst(1e-9);
    let mut dt_cur = dt0;
    let mut halvings = 0u32;

    let mut series = MonitorSeries { meta, samples: Vec::new() };
    let mut snapshots: Vec<FlowState<S>> = Vec::new();
    let mut snapshot_times = config.snapshot_times.clone();
    snapshot_times.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));

    let record = |t: S,
                      r: &[S],
                      series: &mut MonitorSeries<S>,
                      snapshots: &mut Vec<FlowState<S>>|
     -> Result<S, FlowError<S>> {
        let sample = compute_sample(&grid, t, r, config.sigma2_floor)?;
        let dev = sample.umbilic_dev;
        series.samples.push(sample);
        while snapshots.len() < snapshot_times.len() && t >= snapshot_times[snapshots.len()] {
            let profile = RadialProfile::with_grid(grid.clone(), r.to_vec())?;
            snapshots.push(FlowState::new(t, profile)?);
        }
        Ok(dev)
    };

    let mut dev = record(t, &r, &mut series, &mut snapshots)?;
    let mut next_sample_index = 1usize;

    while !(dev < config.umbilic_tol) && t < config.t_max {
        let next_sample = t0 + S::of_usize(next_sample_index) * config.sample_interval;
        let target = next_sample.min(config.t_max);
        let remaining = target - t;
        let (dt, hits_target) = if remaining <= dt_cur * snap_slack {
            (remaining, true)
        } else {
            (dt_cur, false)
        };

        match rk.advance(&mut r, dt) {
            Ok(()) => {
                halvings = 0;
                dt_cur = (dt_cur + dt_cur).min(dt0);
                if hits_target {
                    t = target;
                    if target == next_sample {
                        next_sample_index += 1;
                    }
                    dev = record(t, &r, &mut series, &mut snapshots)?;
                } else {
                    t += dt;
                }
            }
            Err(_fail) => {
                halvings += 1;
                dt_cur *= S::cst(0.5);
                // give up on persistent rejection: either a long consecutive
                // streak, or failure even at the minimum step size (successes
                // at a tiny dt must not let the run creep forever toward a
                // convexity crossing)
                let dt_min = dt0 * S::cst(0.5).powi(MAX_HALVINGS as i32);
                if halvings > MAX_HALVINGS || dt_cur < dt_min {
                    let profile = RadialProfile::with_grid(grid.clone(), r)?;
                    let last = FlowState::new(t, profile)?;
                    return Err(FlowError::Breakdown { t, halvings, last: Box::new(last) });
                }
            }
        }
    }

    // make sure the stopping state is recorded even off the sample grid
    if series.samples.last().map(|s| s.t) != Some(t) {
        record(t, &r, &mut series, &mut snapshots)?;
    }

    let profile = RadialProfile::with_grid(grid.clone(), r)?;
    let final_state = FlowState::new(t, profile)?;
    Ok(RunOutput { series, final_state, snapshots })
}

fn compute_sample<S: Scalar>(
    grid: &Grid<S>,
    t: S,
    r: &[S],
    sigma2_floor: S,
) -> Result<MonitorSample<S>, FlowError<S>> {
    let field = field_from_parts(grid, r)?;
    let f = speed(&field, sigma2_floor)?;
    let area = area_of_field(grid, &field);
    let n = field.ambient_dim();
    let sigma = |m: usize| total_sigma_of_field(grid, &field, m);
    let f_sigma = |m: usize| {
        grid.integrate_round_with(|j| f[j] * field.sigma_at(j, m) * field.weight[j])
    };
    let sigma2 = sigma(2);
    let aux = auxiliary_margins_of_field(grid, &field)?;
    Ok(MonitorSample {
        t,
        area,
        sigma1: sigma(1),
        sigma2,
        sigma3: sigma(3),
        f_sigma0: f_sigma(0),
        f_sigma1: f_sigma(1),
        f_sigma2: f_sigma(2),
        f_sigma3: f_sigma(3),
        q: q_of(n, area, sigma2),
        umbilic_dev: field.max_umbilic_deviation(),
        main_margin: main_margin_of_field(grid, &field)?,
        minkowski_margin: aux.minkowski,
        mean_area_margin: aux.mean_area,
    })
}

/// Pointwise residual of the integral evolution identity
/// `d/dt int sigma_m dmu = (m+1) int F sigma_{m+1} dmu + (n-m) int F sigma_{m-1} dmu`
/// (the `m = 0` case is the area law `d|Sigma|/dt = int F sigma_1 dmu`, and
/// the `sigma_{m+1}` term drops at `m = n-1`).
#[derive(Clone, Copy, Debug)]
pub struct EvolutionResidual<S> {
    pub t: S,
    pub lhs: S,
    pub rhs: S,
    pub residual: S,
    pub relative: S,
}

pub fn evolution_identity_residual<S: Scalar>(
    series: &MonitorSeries<S>,
    m: usize,
) -> Result<Vec<EvolutionResidual<S>>, FlowError<S>> {
    let n = series.meta.n;
    let samples = &series.samples;
    if samples.len() < 3 {
        return Err(FlowError::InsufficientData(format!(
            "need at least 3 samples, have {}",
            samples.len()
        )));
    }
    if m > 3 {
        return Err(FlowError::InsufficientData(format!(
            "sigma_{m} integrals are not recorded (m <= 3)"
        )));
    }
    if m < n - 1 && m + 1 > 3 {
        return Err(FlowError::InsufficientData(format!(
            "identity at m = {m} needs int F sigma_{} which is not recorded",
            m + 1
        )));
    }
    let sigma_series = |s: &MonitorSample<S>, k: usize| match k {
        0 => s.area,
        1 => s.sigma1,
        2 => s.sigma2,
        _ => s.sigma3,
    };
    let f_sigma_series = |s: &MonitorSample<S>, k: usize| match k {
        0 => s.f_sigma0,
        1 => s.f_sigma1,
        2 => s.f_sigma2,
        _ => s.f_sigma3,
    };

    let mut out = Vec::with_capacity(samples.len().saturating_sub(2));
    for w in samples.windows(3) {
        let (h1, h2) = (w[1].t - w[0].t, w[2].t - w[1].t);
        let (f0, f1, f2) = (
            sigma_series(&w[0], m),
            sigma_series(&w[1], m),
            sigma_series(&w[2], m),
        );
        // second-order derivative on a possibly non-uniform three-point stencil
        let lhs = -f0 * h2 / (h1 * (h1 + h2)) + f1 * (h2 - h1) / (h1 * h2)
            + f2 * h1 / (h2 * (h1 + h2));
        let mut rhs = S::zero();
        if m < n - 1 {
            rhs += S::of_usize(m + 1) * f_sigma_series(&w[1], m + 1);
        }
        if m >= 1 {
            rhs += S::of_usize(n - m) * f_sigma_series(&w[1], m - 1);
        } else {
            rhs = f_sigma_series(&w[1], 1);
        }
        let residual = lhs - rhs;
        out.push(EvolutionResidual {
            t: w[1].t,
            lhs,
            rhs,
            residual,
            relative: residual.abs() / rhs.abs().max(S::cst(1e-300)),
        });
    }
    Ok(out)
}

/// Least-squares decay exponent of `log max|kappa_i - 1|` over the last half
/// of a series.
#[derive(Clone, Copy, Debug)]
pub struct DecayFit<S> {
    pub exponent: S,
    pub window: (S, S),
    pub samples_used: usize,
}

pub fn umbilic_decay_fit<S: Scalar>(series: &MonitorSeries<S>) -> Result<DecayFit<S>, FlowError<S>> {
    let n = series.meta.n;
    let samples = &series.samples;
    if samples.len() < 4 {
        return Err(FlowError::InsufficientData("need at least 4 samples".into()));
    }
    let t_first = samples[0].t;
    let t_last = samples[samples.len() - 1].t;
    let needed = S::cst(3.0 * (n - 1) as f64);
    if t_last - t_first < needed {
        return Err(FlowError::InsufficientData(format!(
            "series spans {}, need at least 3(n-1) = {needed}",
            t_last - t_first
        )));
    }
    let t_mid = t_first + S::cst(0.5) * (t_last - t_first);
    let noise_floor = S::cst(1e-13);
    let pts: Vec<(S, S)> = samples
        .iter()
        .filter(|s| s.t >= t_mid && s.umbilic_dev > noise_floor)
        .map(|s| (s.t, s.umbilic_dev.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(FlowError::FitUnreliable(
            "umbilic deviation is at machine noise over the fit window".into(),
        ));
    }
    let count = S::of_usize(pts.len());
    let (mut st, mut sy, mut stt, mut sty) = (S::zero(), S::zero(), S::zero(), S::zero());
    for &(t, y) in &pts {
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let denom = count * stt - st * st;
    if denom == S::zero() {
        return Err(FlowError::FitUnreliable("degenerate time window".into()));
    }
    Ok(DecayFit {
        exponent: (count * sty - st * sy) / denom,
        window: (t_mid, t_last),
        samples_used: pts.len(),
    })
}

/// Closed-form radius of the geodesic-sphere solution:
/// `sinh r(t) = sinh(r0) e^{t/(n-1)}`.
pub fn sphere_radius_closed_form<S: Scalar>(r0: S, n: usize, t: S) -> S {
    (r0.sinh() * (t / S::of_usize(n - 1)).exp()).asinh()
}

/// Adaptive Dormand-Prince 5(4) solve of the radius equation
/// `dr/dt = tanh(r)/(n-1)` to local tolerance 1e-12.
pub fn sphere_ode_oracle<S: Scalar>(r0: S, n: usize, t_end: S) -> S {
    assert!(r0 > S::zero(), "sphere radius must be positive");
    assert!(t_end >= S::zero(), "oracle integrates forward");
    let f = |r: S| r.tanh() / S::of_usize(n - 1);
    let tol = S::cst(1e-12);

    let mut t = S::zero();
    let mut y = r0;
    if t_end == S::zero() {
        return y;
    }
    let mut h = (t_end * S::cst(1e-3)).min(S::cst(0.1)).max(S::cst(1e-6));
    let a = |x: f64| S::cst(x);
    while t < t_end {
        h = h.min(t_end - t);
        let k1 = f(y);
        let k2 = f(y + h * a(1.0 / 5.0) * k1);
        let k3 = f(y + h * (a(3.0 / 40.0) * k1 + a(9.0 / 40.0) * k2));
        let k4 = f(y + h * (a(44.0 / 45.0) * k1 - a(56.0 / 15.0) * k2 + a(32.0 / 9.0) * k3));
        let k5 = f(y
            + h * (a(19372.0 / 6561.0) * k1 - a(25360.0 / 2187.0) * k2
                + a(64448.0 / 6561.0) * k3
                - a(212.0 / 729.0) * k4));
        let k6 = f(y
            + h * (a(9017.0 / 3168.0) * k1 - a(355.0 / 33.0) * k2 + a(46732.0 / 5247.0) * k3
                + a(49.0 / 176.0) * k4
                - a(5103.0 / 18656.0) * k5));
        let y5 = y
            + h * (a(35.0 / 384.0) * k1 + a(500.0 / 1113.0) * k3 + a(125.0 / 192.0) * k4
                - a(2187.0 / 6784.0) * k5
                + a(11.0 / 84.0) * k6);
        let k7 = f(y5);
        let y4 = y
            + h * (a(5179.0 / 57600.0) * k1 + a(7571.0 / 16695.0) * k3 + a(393.0 / 640.0) * k4
                - a(92097.0 / 339200.0) * k5
                + a(187.0 / 2100.0) * k6
                + a(1.0 / 40.0) * k7);
        let err = (y5 - y4).abs();
        let scale = tol * (S::one() + y.abs());
        if err <= scale {
            t += h;
            y = y5;
        }
        let ratio = if err > S::zero() {
            (scale / err).powf(S::cst(0.2))
        } else {
            S::cst(5.0)
        };
        h *= (S::cst(0.9) * ratio).max(S::cst(0.2)).min(S::cst(5.0));
    }
    y
}
