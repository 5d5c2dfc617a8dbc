use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::params::{random_init, CholeskyParams};
use crate::channel::{depolarizing, ChoiOperator};
use crate::error::{Error, Result};
use crate::fidelity::{average_fidelity_exact, fidelity_from_objective, penalty, protocol_objective_choi};
use crate::linalg;
use crate::math;
use crate::matrix::{partial_trace, BipartiteDims, ComplexMatrix, Subsystem, C64, ZERO};
use crate::par;
use crate::protocol::{average_operation, computational_dr_protocol, do_nothing_protocol, Branch, Protocol};

/// Simulated-annealing settings.
///
/// The temperature after `k` steps is `initial_temperature · cooling^k`.
/// Proposals perturb one factor entry by a complex Gaussian of width
/// `step_size · √d`; with `adaptive_step` the width is rescaled every
/// `ADAPT_WINDOW` steps to keep the acceptance rate between 0.2 and 0.4.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnealConfig {
    pub lambda: f64,
    pub restarts: usize,
    pub steps: usize,
    pub initial_temperature: f64,
    pub cooling: f64,
    pub step_size: f64,
    pub adaptive_step: bool,
    /// Penalty weight at the first step; it rises geometrically to `lambda`
    /// over the first `ramp_fraction` of the steps.
    pub lambda_start: f64,
    pub ramp_fraction: f64,
    /// Every this many steps the chain proposes a jump to the feasibility
    /// projection of its current point; zero disables the move.
    pub projection_interval: usize,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            lambda: 1e3,
            restarts: 100,
            steps: 20_000,
            initial_temperature: 1.0,
            cooling: 0.995,
            step_size: 0.05,
            adaptive_step: true,
            lambda_start: 0.1,
            ramp_fraction: 0.5,
            projection_interval: 500,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.into()));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling factor must lie in (0, 1)");
        }
        if self.restarts == 0 {
            return bad("at least one restart is required");
        }
        if self.steps == 0 {
            return bad("at least one step per restart is required");
        }
        if !(self.initial_temperature >= 0.0 && self.initial_temperature.is_finite()) {
            return bad("initial temperature must be finite and non-negative");
        }
        if !(self.lambda_start > 0.0 && self.lambda_start.is_finite()) {
            return bad("starting penalty weight must be positive");
        }
        if !(0.0..=1.0).contains(&self.ramp_fraction) {
            return bad("ramp fraction must lie in [0, 1]");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step size must be positive");
        }
        Ok(())
    }
}

const ADAPT_WINDOW: usize = 100;
const HISTORY_INTERVAL: usize = 100;
const RESYNC_INTERVAL: usize = 4096;

/// Result of one annealing run from one random start.
#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub restart: usize,
    /// Best parameters visited.
    pub params: CholeskyParams,
    /// `f − λP` at `params`.
    pub best_objective: f64,
    /// Best-so-far objective sampled every hundred steps.
    pub history: Vec<f64>,
}

/// Final result of an optimization.
#[derive(Clone, Debug)]
pub struct AnnealOutcome {
    /// Feasibility-projected protocol.
    pub protocol: Protocol,
    /// Exact average fidelity of `protocol`.
    pub fidelity: f64,
    /// `√P` of the selected annealing result before projection.
    pub penalty_residual: f64,
    /// `f` of the selected annealing result before projection.
    pub objective: f64,
    /// Index of the winning restart, `None` for closed-form results.
    pub restart: Option<usize>,
}

impl AnnealOutcome {
    pub fn is_exact(&self) -> bool {
        self.restart.is_none()
    }
}

struct Proposal {
    instrument: bool,
    branch: usize,
    i: usize,
    j: usize,
    delta: C64,
    df: f64,
    dpen: f64,
    gain: f64,
}

struct Engine<'a> {
    d: usize,
    n: usize,
    w: &'a ComplexMatrix,
    lambda: f64,
    freeze_instrument: bool,
    lc: Vec<ComplexMatrix>,
    li: Vec<ComplexMatrix>,
    c: Vec<ComplexMatrix>,
    i: Vec<ComplexMatrix>,
    /// K(I_ω): f_ω = Re Σ C_ω ∘ K(I_ω).
    k: Vec<ComplexMatrix>,
    /// G(C_ω): f_ω = Re Σ I_ω ∘ G(C_ω).
    g: Vec<ComplexMatrix>,
    mc: Vec<ComplexMatrix>,
    mi: ComplexMatrix,
    f: f64,
    pen_c: Vec<f64>,
    pen_i: f64,
    row: Vec<C64>,
    marg: ComplexMatrix,
}

fn gram(l: &ComplexMatrix) -> ComplexMatrix {
    l.matmul(&l.adjoint()).hermitian_part()
}

fn marginal(x: &ComplexMatrix, d: usize) -> ComplexMatrix {
    partial_trace(x, BipartiteDims::square(d).expect("d > 0"), Subsystem::A).expect("square")
}

fn defect(m: &ComplexMatrix) -> f64 {
    let d = m.rows();
    let mut s = 0.0;
    for a in 0..d {
        for b in 0..d {
            let target = if a == b { 1.0 } else { 0.0 };
            s += (m[(a, b)] - C64::new(target, 0.0)).norm_sqr();
        }
    }
    s
}

fn re_dot(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x * y).re).sum()
}

impl<'a> Engine<'a> {
    fn new(params: CholeskyParams, w: &'a ComplexMatrix, lambda: f64, freeze_instrument: bool) -> Self {
        let (d, lc, li) = params.into_parts();
        let n = d * d;
        let m = lc.len();
        let mut e = Self {
            d,
            n,
            w,
            lambda,
            freeze_instrument,
            lc,
            li,
            c: vec![ComplexMatrix::zeros(n, n); m],
            i: vec![ComplexMatrix::zeros(n, n); m],
            k: vec![ComplexMatrix::zeros(n, n); m],
            g: vec![ComplexMatrix::zeros(n, n); m],
            mc: vec![ComplexMatrix::zeros(d, d); m],
            mi: ComplexMatrix::zeros(d, d),
            f: 0.0,
            pen_c: vec![0.0; m],
            pen_i: 0.0,
            row: vec![ZERO; n],
            marg: ComplexMatrix::zeros(d, d),
        };
        e.resync();
        e
    }

    fn objective(&self) -> f64 {
        self.f - self.lambda * self.penalty()
    }

    fn penalty(&self) -> f64 {
        self.pen_c.iter().sum::<f64>() + self.pen_i
    }

    /// Recomputes every cache from the factors.
    fn resync(&mut self) {
        let d = self.d;
        let mut total = ComplexMatrix::zeros(d, d);
        self.f = 0.0;
        for w in 0..self.lc.len() {
            self.c[w] = gram(&self.lc[w]);
            self.i[w] = gram(&self.li[w]);
            self.k[w] = self.k_of(&self.i[w]);
            self.g[w] = self.g_of(&self.c[w]);
            self.mc[w] = marginal(&self.c[w], d);
            self.pen_c[w] = defect(&self.mc[w]);
            total += &marginal(&self.i[w], d);
            self.f += re_dot(&self.c[w], &self.k[w]);
        }
        self.pen_i = defect(&total);
        self.mi = total;
    }

    fn k_of(&self, i: &ComplexMatrix) -> ComplexMatrix {
        let mut k = ComplexMatrix::zeros(self.n, self.n);
        for x in 0..self.n {
            for y in 0..self.n {
                let v = i[(x, y)];
                if v != ZERO {
                    self.add_to_k(&mut k, x, y, v);
                }
            }
        }
        k
    }

    fn g_of(&self, c: &ComplexMatrix) -> ComplexMatrix {
        let mut g = ComplexMatrix::zeros(self.n, self.n);
        for x in 0..self.n {
            for y in 0..self.n {
                let v = c[(x, y)];
                if v != ZERO {
                    self.add_to_g(&mut g, x, y, v);
                }
            }
        }
        g
    }

    /// K[(c,b'),(c',b)] += v·W[(a',b'),(a,b)] for an instrument entry at
    /// ((a,c),(a',c')).
    fn add_to_k(&self, k: &mut ComplexMatrix, x: usize, y: usize, v: C64) {
        let d = self.d;
        let (a, c) = (x / d, x % d);
        let (ap, cp) = (y / d, y % d);
        for bp in 0..d {
            for b in 0..d {
                k[(c * d + bp, cp * d + b)] += v * self.w[(ap * d + bp, a * d + b)];
            }
        }
    }

    /// G[(a,c),(a',c')] += v·W[(a',b'),(a,b)] for a correction entry at
    /// ((c,b'),(c',b)).
    fn add_to_g(&self, g: &mut ComplexMatrix, x: usize, y: usize, v: C64) {
        let d = self.d;
        let (c, bp) = (x / d, x % d);
        let (cp, b) = (y / d, y % d);
        for a in 0..d {
            for ap in 0..d {
                g[(a * d + c, ap * d + cp)] += v * self.w[(ap * d + bp, a * d + b)];
            }
        }
    }

    /// Fills `self.row` with row `i` of ΔX for the move L[i,j] += δ. The
    /// column `i` of ΔX is the conjugate of the row.
    fn fill_row(&mut self, l: &ComplexMatrix, i: usize, j: usize, delta: C64) {
        for y in 0..self.n {
            self.row[y] = if y >= j { delta * l[(y, j)].conj() } else { ZERO };
        }
        self.row[i] = C64::new(2.0 * (delta * l[(i, j)].conj()).re + delta.norm_sqr(), 0.0);
    }

    /// Re Σ ΔX ∘ H for the rank-two change stored in `self.row`.
    fn contract(&self, h: &ComplexMatrix, i: usize) -> f64 {
        let mut s = 0.0;
        for y in 0..self.n {
            let r = self.row[y];
            s += (r * h[(i, y)]).re;
            if y != i {
                s += (r.conj() * h[(y, i)]).re;
            }
        }
        s
    }

    /// Writes base + ΔTr_A X into `self.marg` and returns its defect.
    fn shifted_defect(&mut self, base: &ComplexMatrix, i: usize) -> f64 {
        let d = self.d;
        let (ai, bi) = (i / d, i % d);
        self.marg.clone_from(base);
        for bp in 0..d {
            let y = ai * d + bp;
            self.marg[(bi, bp)] += self.row[y];
            if y != i {
                self.marg[(bp, bi)] += self.row[y].conj();
            }
        }
        defect(&self.marg)
    }

    fn apply_row(x: &mut ComplexMatrix, row: &[C64], i: usize) {
        for (y, r) in row.iter().enumerate() {
            x[(i, y)] += *r;
            if y != i {
                x[(y, i)] += r.conj();
            }
        }
    }

    fn propose<R: Rng + ?Sized>(&mut self, rng: &mut R, sigma: f64) -> Proposal {
        let m = self.lc.len();
        let which = if self.freeze_instrument {
            rng.random_range(0..m)
        } else {
            rng.random_range(0..2 * m)
        };
        let (instrument, w) = (which >= m, which % m);
        let mut t = rng.random_range(0..self.n * (self.n + 1) / 2);
        let mut i = 0;
        while t > i {
            t -= i + 1;
            i += 1;
        }
        let j = t;
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = if i == j { 0.0 } else { StandardNormal.sample(rng) };
        let delta = C64::new(re * sigma, im * sigma);

        let (df, dpen) = if instrument {
            let l = core::mem::take(&mut self.li[w]);
            self.fill_row(&l, i, j, delta);
            self.li[w] = l;
            let df = self.contract(&self.g[w], i);
            let base = core::mem::take(&mut self.mi);
            let new = self.shifted_defect(&base, i);
            self.mi = base;
            (df, new - self.pen_i)
        } else {
            let l = core::mem::take(&mut self.lc[w]);
            self.fill_row(&l, i, j, delta);
            self.lc[w] = l;
            let df = self.contract(&self.k[w], i);
            let base = core::mem::take(&mut self.mc[w]);
            let new = self.shifted_defect(&base, i);
            self.mc[w] = base;
            (df, new - self.pen_c[w])
        };
        Proposal {
            instrument,
            branch: w,
            i,
            j,
            delta,
            df,
            dpen,
            gain: df - self.lambda * dpen,
        }
    }

    /// Applies the most recent proposal.
    fn commit(&mut self, p: &Proposal) {
        let row = core::mem::take(&mut self.row);
        let (i, w) = (p.i, p.branch);
        if p.instrument {
            self.li[w][(i, p.j)] += p.delta;
            Self::apply_row(&mut self.i[w], &row, i);
            let mut k = core::mem::take(&mut self.k[w]);
            for (y, r) in row.iter().enumerate() {
                self.add_to_k(&mut k, i, y, *r);
                if y != i {
                    self.add_to_k(&mut k, y, i, r.conj());
                }
            }
            self.k[w] = k;
            self.mi.clone_from(&self.marg);
            self.pen_i += p.dpen;
        } else {
            self.lc[w][(i, p.j)] += p.delta;
            Self::apply_row(&mut self.c[w], &row, i);
            let mut g = core::mem::take(&mut self.g[w]);
            for (y, r) in row.iter().enumerate() {
                self.add_to_g(&mut g, i, y, *r);
                if y != i {
                    self.add_to_g(&mut g, y, i, r.conj());
                }
            }
            self.g[w] = g;
            self.mc[w].clone_from(&self.marg);
            self.pen_c[w] += p.dpen;
        }
        self.row = row;
        self.f += p.df;
    }

    fn params(&self) -> CholeskyParams {
        CholeskyParams::new(self.d, self.lc.clone(), self.li.clone()).expect("factors stay lower triangular")
    }
}

/// Runs one annealing chain from `start`, keeping the instrument fixed when
/// `freeze_instrument` is set.
fn run_chain<R: Rng + ?Sized>(
    config: &AnnealConfig,
    w: &ComplexMatrix,
    start: CholeskyParams,
    freeze_instrument: bool,
    rng: &mut R,
    restart: usize,
) -> RestartOutcome {
    let d = start.dim();
    let ramp_steps = ((config.steps as f64) * config.ramp_fraction) as usize;
    let lambda_start = if ramp_steps == 0 {
        config.lambda
    } else {
        config.lambda_start.min(config.lambda)
    };
    let mut engine = Engine::new(start, w, lambda_start, freeze_instrument);
    let base_sigma = config.step_size * math::sqrt(d as f64);
    let mut sigma = base_sigma;
    let mut temperature = config.initial_temperature;
    // objective at the target penalty weight, used for best tracking
    let target = |e: &Engine| e.f - config.lambda * e.penalty();
    let mut current = target(&engine);
    let mut best = current;
    let mut best_params: Option<CholeskyParams> = None;
    let mut current_is_best = true;
    let mut history = Vec::with_capacity(config.steps / HISTORY_INTERVAL + 1);
    let mut accepted_in_window = 0;
    let mut accepted_since_sync = 0;

    for step in 1..=config.steps {
        let p = engine.propose(rng, sigma);
        let accept = p.gain >= 0.0
            || (temperature > 0.0 && rng.random::<f64>() < math::exp(p.gain / temperature));
        if accept {
            let gain = p.df - config.lambda * p.dpen;
            if current_is_best && gain < 0.0 {
                best_params = Some(engine.params());
                current_is_best = false;
            }
            engine.commit(&p);
            current += gain;
            if current >= best {
                best = current;
                current_is_best = true;
            }
            accepted_in_window += 1;
            accepted_since_sync += 1;
        }
        if config.projection_interval > 0 && step % config.projection_interval == 0 {
            // a factorization failure only means the move is skipped
            let candidate = CholeskyParams::from_protocol(&project_feasible(&engine.params().to_protocol()))
                .map(|p| Engine::new(p, w, engine.lambda, freeze_instrument));
            if let Ok(candidate) = candidate {
                let gain = candidate.objective() - engine.objective();
                if gain >= 0.0 || (temperature > 0.0 && rng.random::<f64>() < math::exp(gain / temperature)) {
                    let new = target(&candidate);
                    if current_is_best && new < current {
                        best_params = Some(engine.params());
                        current_is_best = false;
                    }
                    engine = candidate;
                    current = new;
                    if current >= best {
                        best = current;
                        current_is_best = true;
                    }
                    accepted_since_sync = 0;
                }
            }
        }
        if accepted_since_sync >= RESYNC_INTERVAL {
            engine.resync();
            current = target(&engine);
            accepted_since_sync = 0;
        }
        if step % ADAPT_WINDOW == 0 {
            if config.adaptive_step {
                let rate = accepted_in_window as f64 / ADAPT_WINDOW as f64;
                if rate > 0.4 {
                    sigma = (sigma * 1.5).min(base_sigma * 100.0);
                } else if rate < 0.2 {
                    sigma = (sigma / 1.5).max(base_sigma * 1e-9);
                }
            }
            accepted_in_window = 0;
            engine.lambda = if step >= ramp_steps {
                config.lambda
            } else {
                lambda_start * math::pow(config.lambda / lambda_start, step as f64 / ramp_steps as f64)
            };
        }
        temperature *= config.cooling;
        if step % HISTORY_INTERVAL == 0 {
            history.push(best);
        }
    }

    let params = if current_is_best {
        engine.params()
    } else {
        best_params.expect("snapshot taken before leaving the best point")
    };
    // report the objective of the returned point without incremental drift
    let best_objective = Engine::new(params.clone(), w, config.lambda, freeze_instrument).objective();
    RestartOutcome {
        restart,
        params,
        best_objective,
        history,
    }
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// `(1 ⊗ X) · (1 ⊗ X)` sandwich with `X = M^{-1/2}` on the support of `M`,
/// plus the deficit `D = 1 − XMX` carried by `(1/d) ⊗ D`.
struct Normalizer {
    y: ComplexMatrix,
    deficit: Option<ComplexMatrix>,
}

impl Normalizer {
    fn new(marginal: &ComplexMatrix) -> Self {
        let d = marginal.rows();
        let cutoff = 1e-12 * marginal.max_abs().max(1.0);
        let x = linalg::inv_sqrt_psd(marginal, cutoff);
        let restored = x.matmul(marginal).matmul(&x);
        let deficit = (&ComplexMatrix::identity(d) - &restored).hermitian_part();
        let deficit = (deficit.max_abs() > 1e-13).then(|| {
            ComplexMatrix::identity(d)
                .scale_real(1.0 / d as f64)
                .kron(&deficit)
        });
        Self {
            y: ComplexMatrix::identity(d).kron(&x),
            deficit,
        }
    }

    fn apply(&self, c: &ChoiOperator, with_deficit: bool) -> ChoiOperator {
        let mut m = self.y.matmul(c.matrix()).matmul(&self.y);
        if with_deficit {
            if let Some(def) = &self.deficit {
                m += def;
            }
        }
        ChoiOperator::from_matrix_unchecked(c.dim(), m.hermitian_part())
    }
}

/// Maps a protocol with positive semidefinite Choi operators onto a valid
/// one: every correction is made trace preserving and the instrument is
/// normalized to sum to a trace-preserving map. Valid protocols are left
/// unchanged up to rounding.
pub fn project_feasible(p: &Protocol) -> Protocol {
    let instrument = Normalizer::new(&p.instrument_sum().input_marginal());
    let branches = p
        .branches()
        .iter()
        .enumerate()
        .map(|(w, b)| Branch {
            instrument: instrument.apply(&b.instrument, w == 0),
            correction: Normalizer::new(&b.correction.input_marginal()).apply(&b.correction, true),
        })
        .collect();
    Protocol::new(p.dim(), branches).expect("dimensions unchanged")
}

struct Candidate {
    restart: usize,
    protocol: Protocol,
    fidelity: f64,
    objective: f64,
    residual: f64,
}

fn evaluate(outcome: &RestartOutcome, noise: &ChoiOperator) -> Result<Candidate> {
    let raw = outcome.params.to_protocol();
    let protocol = project_feasible(&raw);
    let fidelity = average_fidelity_exact(&average_operation(&protocol, noise)?);
    Ok(Candidate {
        restart: outcome.restart,
        objective: protocol_objective_choi(&raw, noise)?,
        residual: math::sqrt(penalty(&raw)),
        protocol,
        fidelity,
    })
}

fn check_inputs(config: &AnnealConfig, noise: &ChoiOperator, m: usize) -> Result<()> {
    config.validate()?;
    if m == 0 {
        return Err(Error::InvalidArgument("branch count must be positive".into()));
    }
    if noise.dim() == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    Ok(())
}

fn chain(
    config: &AnnealConfig,
    noise: &ChoiOperator,
    w: &ComplexMatrix,
    m: usize,
    restart: usize,
    frozen_instrument: Option<&ComplexMatrix>,
) -> RestartOutcome {
    let d = noise.dim();
    let mut rng = restart_rng(config.seed, restart);
    let mut start = random_init(d, m, &mut rng);
    if let Some(l) = frozen_instrument {
        let (_, lc, _) = start.into_parts();
        start = CholeskyParams::new(d, lc, vec![l.clone(); m]).expect("shapes agree");
    }
    run_chain(config, w, start, frozen_instrument.is_some(), &mut rng, restart)
}

/// Single annealing chain; restart `r` uses stream `r` of the seeded
/// generator, so chains can be replayed individually.
pub fn anneal_restart(config: &AnnealConfig, noise: &ChoiOperator, m: usize, restart: usize) -> Result<RestartOutcome> {
    check_inputs(config, noise, m)?;
    Ok(chain(config, noise, &noise.swap_image(), m, restart, None))
}

fn anneal_impl(
    config: &AnnealConfig,
    noise: &ChoiOperator,
    m: usize,
    frozen_instrument: Option<&ComplexMatrix>,
) -> Result<AnnealOutcome> {
    check_inputs(config, noise, m)?;
    let w = noise.swap_image();
    let candidates = par::map_indexed(config.restarts, |r| {
        evaluate(&chain(config, noise, &w, m, r, frozen_instrument), noise)
    });
    let mut best: Option<Candidate> = None;
    for c in candidates {
        let c = c?;
        if best.as_ref().is_none_or(|b| c.fidelity > b.fidelity) {
            best = Some(c);
        }
    }
    let best = best.expect("at least one restart");
    Ok(AnnealOutcome {
        protocol: best.protocol,
        fidelity: best.fidelity,
        penalty_residual: best.residual,
        objective: best.objective,
        restart: Some(best.restart),
    })
}

/// Numerical optimization of an `m`-branch protocol against arbitrary noise.
/// The restart whose projected protocol has the highest exact average
/// fidelity wins; ties go to the lowest restart index.
pub fn anneal_noise(config: &AnnealConfig, noise: &ChoiOperator, m: usize) -> Result<AnnealOutcome> {
    anneal_impl(config, noise, m, None)
}

/// Optimization over a single trace-preserving correction applied after the
/// noise, with no measurement beforehand.
pub fn anneal_expost(config: &AnnealConfig, noise: &ChoiOperator) -> Result<AnnealOutcome> {
    let identity = super::params::cholesky_psd(ChoiOperator::identity(noise.dim()).matrix())?;
    anneal_impl(config, noise, 1, Some(&identity))
}

fn exact_outcome(protocol: Protocol, noise: &ChoiOperator) -> Result<AnnealOutcome> {
    let fidelity = average_fidelity_exact(&average_operation(&protocol, noise)?);
    Ok(AnnealOutcome {
        objective: protocol_objective_choi(&protocol, noise)?,
        penalty_residual: math::sqrt(penalty(&protocol)),
        protocol,
        fidelity,
        restart: None,
    })
}

/// Discriminate-and-reprepare padded with never-occurring branches.
fn padded_dr(d: usize, m: usize) -> Result<Option<Protocol>> {
    if m < d {
        return Ok(None);
    }
    let dr = computational_dr_protocol(d)?;
    let mut branches = dr.branches().to_vec();
    let zero = ChoiOperator::from_matrix_unchecked(d, ComplexMatrix::zeros(d * d, d * d));
    branches.extend((d..m).map(|_| Branch {
        instrument: zero.clone(),
        correction: ChoiOperator::identity(d),
    }));
    Protocol::new(d, branches).map(Some)
}

/// Optimal `m`-branch protocol against depolarizing noise of strength
/// `eps`. At `eps = 0` the do-nothing protocol and at `eps = 1` (with
/// `m ≥ d`) discriminate-and-reprepare are returned exactly; elsewhere the
/// annealer runs.
pub fn anneal(config: &AnnealConfig, d: usize, m: usize, eps: f64) -> Result<AnnealOutcome> {
    config.validate()?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument("noise strength must lie in [0, 1]".into()));
    }
    if d == 0 || m == 0 {
        return Err(Error::InvalidArgument("dimension and branch count must be positive".into()));
    }
    let noise = depolarizing(eps, d);
    if eps == 0.0 {
        return exact_outcome(do_nothing_protocol(d, m)?, &noise);
    }
    if eps == 1.0 {
        if let Some(p) = padded_dr(d, m)? {
            return exact_outcome(p, &noise);
        }
    }
    anneal_noise(config, &noise, m)
}

/// `(d + f) / (d(d+1))` for the selected pre-projection objective.
pub fn objective_fidelity(outcome: &AnnealOutcome) -> f64 {
    fidelity_from_objective(outcome.objective, outcome.protocol.dim())
}
