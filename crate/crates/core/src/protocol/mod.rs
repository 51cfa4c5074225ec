//! Trajectory drivers for the three monitoring protocols.
//!
//! All three start from the Néel state at `t = 0`, evolve one trajectory
//! sequentially and report entropy changes of the subsystem `A = {0, …, ℓ−1}`
//! (plus translated copies of it for QSD when asked to).

pub mod pm;
pub mod qj;
pub mod qsd;

use crate::error::{Error, Result};
use crate::evolve::Propagator;
use crate::lattice::Region;
use crate::linalg;
use crate::measure::Restoration;
use crate::scalar::Real;
use crate::state::{CorrelationMatrix, GaussianState};

/// Default QSD time step.
pub const DEFAULT_DT: f64 = 0.05;
/// Largest QSD time step accepted.
pub const MAX_DT: f64 = 0.1;
/// Spectral propagation skips re-orthonormalization; rounding drift is removed every this many updates.
pub const REORTHONORMALIZE_EVERY: u64 = 256;
/// Waiting times shorter than this are processed but excluded from rate statistics.
pub const SHORT_SEGMENT: f64 = 1e-12;

/// `τ = −ln(η) / (γ N)`: waiting time until the next jump.
///
/// With `L̂_j = √γ n̂_j` and `Σ_j n̂_j = N` conserved, the unnormalized norm decays
/// as `e^{−γNτ}`; solving for norm `η` gives a positive `τ`.
pub fn waiting_time<T: Real>(eta: T, gamma: T, particles: usize) -> Result<T> {
    if !(eta > T::zero() && eta <= T::one()) {
        return Err(Error::InvalidParameter(format!(
            "uniform draw {} outside (0, 1]",
            eta.as_f64()
        )));
    }
    if !(gamma > T::zero()) || particles == 0 {
        return Err(Error::InvalidParameter(
            "waiting times need gamma > 0 and at least one particle".into(),
        ));
    }
    Ok(-eta.ln() / (gamma * T::from_usize_lossy(particles)))
}

/// How measurement times are spaced in the projective protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WaitingTimes {
    /// Exponential waiting times with mean `1/(γN)`, as for quantum jumps.
    #[default]
    Exponential,
    /// Every waiting time equals the mean `1/(γN)`.
    Fixed,
}

/// Everything a single trajectory needs to know.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryParams<T> {
    pub size: usize,
    pub hopping: T,
    pub gamma: T,
    /// QSD time step; also the unit of `ee_stride` and `snapshot_stride`.
    pub dt: T,
    pub t_final: T,
    /// Collection window `[t_lo, t_hi]`.
    pub window: (T, T),
    /// `ℓ`, the size of `A = {0, …, ℓ−1}`.
    pub subsystem: usize,
    /// Number of evenly spaced translated copies of `A` sampled by QSD.
    pub qsd_cuts: usize,
    /// `S_A(t)` is sampled every `ee_stride · dt`; 0 disables the series.
    pub ee_stride: usize,
    /// Correlation snapshots every `snapshot_stride · dt` inside the window; 0 disables.
    pub snapshot_stride: usize,
    /// Inter-measurement unitary propagator for QJ and PM.
    pub propagator: Propagator,
    /// Integrator of the QSD step.
    pub qsd_integrator: Propagator,
    pub waiting_times: WaitingTimes,
    pub restoration: Restoration,
    /// Compute entropy changes for every event, not only those in the window.
    pub record_all: bool,
    /// Check orthonormality and the projector property after every update.
    pub full_audit: bool,
}

impl<T: Real> TrajectoryParams<T> {
    /// Defaults: `J = 1`, `dt = 0.05`, `t_final = 0.7 L`, window `[0.6 L, 0.7 L]`, `ℓ = L/2`.
    pub fn new(size: usize, gamma: T) -> Self {
        let l = T::from_usize_lossy(size);
        Self {
            size,
            hopping: T::one(),
            gamma,
            dt: T::lit(DEFAULT_DT),
            t_final: T::lit(0.7) * l,
            window: (T::lit(0.6) * l, T::lit(0.7) * l),
            subsystem: size / 2,
            qsd_cuts: 1,
            ee_stride: 10,
            snapshot_stride: 0,
            propagator: Propagator::Spectral,
            qsd_integrator: Propagator::Rk4,
            waiting_times: WaitingTimes::Exponential,
            restoration: Restoration::Orbital,
            record_all: false,
            full_audit: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.size < 4 || self.size % 2 != 0 {
            return Err(Error::InvalidLatticeSize(self.size));
        }
        if !(self.gamma >= T::zero()) {
            return bad(format!("gamma {} must be nonnegative", self.gamma.as_f64()));
        }
        if !(self.dt > T::zero() && self.dt <= T::lit(MAX_DT) + T::lit(1e-12)) {
            return bad(format!("dt {} outside (0, 0.1]", self.dt.as_f64()));
        }
        let (lo, hi) = self.window;
        if !(T::zero() <= lo && lo < hi && hi <= self.t_final) {
            return bad(format!(
                "window [{}, {}] must satisfy 0 <= t_lo < t_hi <= t_final = {}",
                lo.as_f64(),
                hi.as_f64(),
                self.t_final.as_f64()
            ));
        }
        if self.subsystem == 0 || self.subsystem >= self.size {
            return bad(format!("subsystem size {} outside [1, L-1]", self.subsystem));
        }
        if self.qsd_cuts == 0 || self.qsd_cuts > self.size / 2 {
            return bad(format!("qsd_cuts {} outside [1, L/2]", self.qsd_cuts));
        }
        Ok(())
    }

    pub fn particles(&self) -> usize {
        self.size / 2
    }

    pub fn region(&self) -> Region {
        Region::prefix(self.subsystem, self.size).expect("validated subsystem")
    }

    /// Translated copies of `A`, offsets even so each is equivalent to `A` under
    /// the two-site translation symmetry of the Néel ensemble.
    pub fn cut_regions(&self) -> Vec<Region> {
        (0..self.qsd_cuts)
            .map(|c| {
                let offset = (c * self.size / self.qsd_cuts) & !1;
                Region::contiguous(offset, self.subsystem, self.size).expect("validated subsystem")
            })
            .collect()
    }

    pub fn in_window(&self, t: T) -> bool {
        let slack = T::lit(1e-9);
        t >= self.window.0 - slack && t <= self.window.1 + slack
    }

    pub(crate) fn require_monitoring(&self) -> Result<()> {
        if !(self.gamma > T::zero()) {
            return Err(Error::InvalidParameter(
                "jump and projective protocols need gamma > 0".into(),
            ));
        }
        Ok(())
    }
}

/// `S_A(t)` sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeSample<T> {
    pub t: T,
    pub entropy: T,
}

/// Correlation matrix captured inside the collection window.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T: Real> {
    pub t: T,
    pub correlation: CorrelationMatrix<T>,
}

/// Orthonormality tolerance checked by the audit.
pub const AUDIT_ORTHONORMALITY: f64 = 1e-10;
/// Projector and trace tolerances checked by the audit.
pub const AUDIT_PROJECTOR: f64 = 1e-8;
pub const AUDIT_TRACE: f64 = 1e-8;

/// Running maxima of the state invariants over a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Audit {
    pub updates: u64,
    pub max_orthonormality: f64,
    pub max_projector: f64,
    pub max_trace: f64,
    pub violations: u64,
}

impl Audit {
    pub fn record<T: Real>(&mut self, state: &GaussianState<T>, full: bool) {
        self.updates += 1;
        let occ = state.occupations();
        let n = T::from_usize_lossy(state.particles());
        let trace = occ.iter().fold(T::zero(), |a, b| a + *b);
        let trace_defect = (trace - n).magnitude().as_f64();
        let slack = T::lit(1e-9);
        let mut bad = trace_defect > AUDIT_TRACE
            || occ.iter().any(|&x| x < -slack || x > T::one() + slack);
        self.max_trace = self.max_trace.max(trace_defect);
        if full {
            let ortho = linalg::orthonormality_defect(state.coefficients()).as_f64();
            let proj = state.correlation_matrix().projector_defect().as_f64();
            self.max_orthonormality = self.max_orthonormality.max(ortho);
            self.max_projector = self.max_projector.max(proj);
            bad |= ortho > AUDIT_ORTHONORMALITY || proj > AUDIT_PROJECTOR;
        }
        if bad {
            self.violations += 1;
        }
    }

    pub fn merge(&mut self, other: &Audit) {
        self.updates += other.updates;
        self.max_orthonormality = self.max_orthonormality.max(other.max_orthonormality);
        self.max_projector = self.max_projector.max(other.max_projector);
        self.max_trace = self.max_trace.max(other.max_trace);
        self.violations += other.violations;
    }
}

/// Uniform grid `k · spacing` for `k = 0, 1, …` up to `end`, consumed in order.
#[derive(Debug, Clone)]
pub(crate) struct Grid<T> {
    spacing: T,
    next: usize,
    end: T,
    enabled: bool,
}

impl<T: Real> Grid<T> {
    pub(crate) fn new(stride: usize, dt: T, end: T) -> Self {
        Self {
            spacing: dt * T::from_usize_lossy(stride.max(1)),
            next: 0,
            end,
            enabled: stride > 0,
        }
    }

    fn point(&self, k: usize) -> T {
        self.spacing * T::from_usize_lossy(k)
    }

    /// Next grid time strictly before `limit` (and not beyond `end`), advancing.
    pub(crate) fn pop_before(&mut self, limit: T) -> Option<T> {
        if !self.enabled {
            return None;
        }
        let t = self.point(self.next);
        let slack = T::lit(1e-9);
        if t < limit && t <= self.end + slack {
            self.next += 1;
            Some(t)
        } else {
            None
        }
    }
}


/// Shared bookkeeping of the jump and projective protocols: time, entropy chain,
/// grid samples taken from copies of the state, and the invariant audit.
pub(crate) struct EventDriver<'a, T: Real> {
    pub(crate) params: &'a TrajectoryParams<T>,
    hamiltonian: &'a crate::lattice::Hamiltonian<T>,
    region: Region,
    pub(crate) state: GaussianState<T>,
    /// Entropy of the current state, when known.
    entropy: Option<T>,
    ee_grid: Grid<T>,
    snap_grid: Grid<T>,
    pub(crate) ee: Vec<EeSample<T>>,
    pub(crate) snapshots: Vec<Snapshot<T>>,
    pub(crate) audit: Audit,
    pub(crate) short_segments: u64,
}

/// What happened over one inter-event interval, up to the measurement itself.
pub(crate) struct Interval<T> {
    pub(crate) t: T,
    pub(crate) tau: T,
    pub(crate) in_window: bool,
    /// `S(t⁻) − S(t_prev⁺)` when entropies are tracked for this event.
    pub(crate) ds_between: Option<T>,
    pub(crate) ds_between_rate: Option<T>,
    pub(crate) entropy_before: Option<T>,
}

impl<'a, T: Real> EventDriver<'a, T> {
    pub(crate) fn new(
        params: &'a TrajectoryParams<T>,
        hamiltonian: &'a crate::lattice::Hamiltonian<T>,
    ) -> Result<Self> {
        params.validate()?;
        params.require_monitoring()?;
        if hamiltonian.size() != params.size {
            return Err(Error::Dimension("Hamiltonian size differs from run size".into()));
        }
        Ok(Self {
            params,
            hamiltonian,
            region: params.region(),
            state: crate::state::neel_state(params.size)?,
            entropy: None,
            ee_grid: Grid::new(params.ee_stride, params.dt, params.t_final),
            snap_grid: Grid::new(params.snapshot_stride, params.dt, params.t_final),
            ee: Vec::new(),
            snapshots: Vec::new(),
            audit: Audit::default(),
            short_segments: 0,
        })
    }

    pub(crate) fn time(&self) -> T {
        self.state.time()
    }

    fn evolve(&self, state: &GaussianState<T>, duration: T) -> Result<GaussianState<T>> {
        crate::evolve::evolve_one_body(
            state,
            &crate::evolve::Generator::hopping(self.hamiltonian),
            duration,
            self.params.propagator,
        )
    }

    /// Grid samples at times in `[now, limit)` (or `[now, t_final]` when `inclusive`).
    fn sample_grids(&mut self, limit: T, inclusive: bool) -> Result<()> {
        let now = self.time();
        let bound = if inclusive {
            self.params.t_final + T::lit(1e-9)
        } else {
            limit
        };
        while let Some(g) = self.ee_grid.pop_before(bound) {
            let probe = self.evolve(&self.state, Self::offset(g, now))?;
            let s = probe.entropy(&self.region)?;
            self.ee.push(EeSample { t: g, entropy: s });
        }
        while let Some(g) = self.snap_grid.pop_before(bound) {
            if !self.params.in_window(g) {
                continue;
            }
            let probe = self.evolve(&self.state, Self::offset(g, now))?;
            self.snapshots.push(Snapshot {
                t: g,
                correlation: probe.correlation_matrix(),
            });
        }
        Ok(())
    }

    fn offset(g: T, now: T) -> T {
        if g > now {
            g - now
        } else {
            T::zero()
        }
    }

    /// Evolves by `tau` unless that passes `t_final`; `None` ends the trajectory.
    pub(crate) fn advance(&mut self, tau: T) -> Result<Option<Interval<T>>> {
        let start = self.time();
        let t = start + tau;
        if t > self.params.t_final {
            self.sample_grids(self.params.t_final, true)?;
            return Ok(None);
        }
        self.sample_grids(t, false)?;
        let in_window = self.params.in_window(t);
        let track = in_window || self.params.record_all;
        let before = if track {
            Some(match self.entropy {
                Some(s) => s,
                None => self.state.entropy(&self.region)?,
            })
        } else {
            None
        };
        let mut next = self.evolve(&self.state, tau)?;
        if self.params.propagator == Propagator::Spectral && (self.audit.updates + 1) % REORTHONORMALIZE_EVERY == 0 {
            next = crate::state::orthonormalize(next.coefficients().clone())?;
        }
        next.set_time(t);
        self.state = next;
        self.audit.record(&self.state, self.params.full_audit);
        self.entropy = None;
        let mut interval = Interval {
            t,
            tau,
            in_window,
            ds_between: None,
            ds_between_rate: None,
            entropy_before: None,
        };
        if let Some(s0) = before {
            let s1 = self.state.entropy(&self.region)?;
            let ds = s1 - s0;
            interval.ds_between = Some(ds);
            interval.entropy_before = Some(s1);
            if tau >= T::lit(SHORT_SEGMENT) {
                interval.ds_between_rate = Some(ds / tau);
            } else if in_window {
                self.short_segments += 1;
            }
        }
        Ok(Some(interval))
    }

    /// Replaces the state after a measurement; returns `S(t⁺) − S(t⁻)` when tracked.
    pub(crate) fn measured(
        &mut self,
        state: GaussianState<T>,
        interval: &Interval<T>,
    ) -> Result<Option<T>> {
        self.state = state;
        self.audit.record(&self.state, self.params.full_audit);
        match interval.entropy_before {
            Some(s_minus) => {
                let s_plus = self.state.entropy(&self.region)?;
                self.entropy = Some(s_plus);
                Ok(Some(s_plus - s_minus))
            }
            None => {
                self.entropy = None;
                Ok(None)
            }
        }
    }
}
