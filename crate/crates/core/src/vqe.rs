//! Sector-constrained variational optimization.
//!
//! The pipeline prepares a fixed-(S) initial state, applies the layered
//! equivariant ansatz, projects onto the requested momentum sector, and
//! minimizes the penalty-augmented cost E + lambda (1 - p_s)^2 with an
//! adaptive-moment gradient descent. The noiseless backend works on
//! statevectors with exact projection. The noisy backend runs the
//! transpiled register circuit (preparation plus ansatz) through the
//! density-matrix engine and post-selects the momentum branch exactly:
//! with A = (1 + e^{ik} T)/2 the reported energy is the conditional value
//! Tr(A rho A' H) / Tr(A rho A') and p_s = Tr(A'A rho) =
//! (1 + Re e^{ik} Tr(T rho))/2, the acceptance probability of the
//! one-ancilla LCU branch.
//!
//! Noisy minimization runs in two stages. A noiseless shaping stage picks,
//! out of the degenerate noiseless optima (the unpenalized sector energy
//! does not depend on p_s), the representative with p_s -> 1. A noisy
//! refinement stage then descends the penalized noisy cost from there with
//! a decaying step size. Inside the refinement loss the penalty weight is
//! scaled by the number of sites so that it competes on equal footing with
//! the extensive energy; reported costs always use the plain lambda.

use num_complex::Complex64 as C64;

use crate::ansatz::{
    build_ansatz_compact, hva_program, init_params_gaussian, prepare_singlet, prepare_triplet_w,
    CircuitIR, HvaConfig, HvaProgram, ParamVector,
};
use crate::error::{Error, Result};
use crate::noise::{noisy_execute, transpile, NoiseParams};
use crate::operators::{build_j1j2, SparseOperator, SpinChainSpec};
use crate::state::{MixedState, PureState};
use crate::symmetrize::{lcu_ancilla_circuit, MomentumSector};

/// Target symmetry sector: total spin selects the initial state, momentum
/// selects the LCU post-selection branch.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SectorSpec {
    /// Total spin, 0 or 1.
    pub spin: u32,
    /// Momentum in radians; only 0 and pi are supported.
    pub k: f64,
}

impl SectorSpec {
    pub fn new(spin: u32, k: f64) -> Result<Self> {
        if spin > 1 {
            return Err(Error::Config(format!("initial states exist for S = 0, 1; got {spin}")));
        }
        if k != 0.0 && k != std::f64::consts::PI {
            return Err(Error::Config(format!("momentum must be 0 or pi, got {k}")));
        }
        Ok(Self { spin, k })
    }

    pub const SINGLET_ZERO: Self = Self { spin: 0, k: 0.0 };
    pub const SINGLET_PI: Self = Self { spin: 0, k: std::f64::consts::PI };
    pub const TRIPLET_PI: Self = Self { spin: 1, k: std::f64::consts::PI };

    pub fn momentum(&self) -> MomentumSector {
        MomentumSector { k: self.k }
    }

    /// Index n of k = 2 pi n / N on the N-site momentum grid.
    pub fn momentum_index(&self, n_sites: usize) -> usize {
        if self.k == 0.0 {
            0
        } else {
            n_sites / 2
        }
    }
}

/// Simulation backend for energy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    Pure,
    Mixed { noise: NoiseParams },
}

/// How gradients are obtained.
///
/// The adjoint mode is exact (one reverse sweep instead of 2 x 2L circuit
/// evaluations) but exists only for the pure backend; finite differences and
/// the parameter-shift rule work everywhere.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum GradientMethod {
    FiniteDifference { h: f64 },
    ParameterShift,
    Adjoint,
}

impl Default for GradientMethod {
    fn default() -> Self {
        GradientMethod::FiniteDifference { h: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_steps: usize,
    pub learning_rate: f64,
    pub gradient: GradientMethod,
    pub restarts: usize,
    pub seed: u64,
    /// Stop when |Delta E| over `convergence_window` steps drops below this.
    pub convergence_tol: f64,
    pub convergence_window: usize,
    /// Penalty weight on (1 - p_s)^2.
    pub lambda: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_steps: 500,
            learning_rate: 0.02,
            gradient: GradientMethod::default(),
            restarts: 4,
            seed: 0,
            convergence_tol: 1e-8,
            convergence_window: 25,
            lambda: 0.0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_steps == 0 {
            return Err(Error::Config("need at least one restart and one step".into()));
        }
        if self.learning_rate <= 0.0 || self.lambda < 0.0 {
            return Err(Error::Config("learning rate must be > 0 and lambda >= 0".into()));
        }
        if let GradientMethod::FiniteDifference { h } = self.gradient {
            if h <= 0.0 {
                return Err(Error::Config(format!("finite-difference step {h} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Outcome of one sector optimization.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SectorResult {
    pub sector: SectorSpec,
    pub backend: Backend,
    pub theta_star: ParamVector,
    pub energy: f64,
    pub p_s: f64,
    pub cost: f64,
    pub energy_history: Vec<f64>,
    pub p_s_history: Vec<f64>,
    pub restart_index: usize,
    pub steps: usize,
}

/// One sector-constrained variational problem instance.
#[derive(Debug, Clone)]
pub struct SectorProblem {
    pub chain: SpinChainSpec,
    pub ansatz: HvaConfig,
    pub sector: SectorSpec,
    hamiltonian: SparseOperator,
    program: HvaProgram,
    initial: PureState,
    prep: CircuitIR,
    /// Inverse of the one-site translation on basis indices.
    tinv: Vec<usize>,
}

/// Penalty weight of the noiseless shaping stage; any positive value selects
/// the p_s = 1 representative, this one converges quickly.
const SHAPING_LAMBDA: f64 = 0.5;
/// Per-step learning-rate decay of the noisy refinement stage.
const REFINE_LR_DECAY: f64 = 0.985;

impl SectorProblem {
    pub fn new(chain: SpinChainSpec, ansatz: HvaConfig, sector: SectorSpec) -> Result<Self> {
        if chain.n_sites != ansatz.n_sites {
            return Err(Error::Config(format!(
                "chain has {} sites but the ansatz expects {}",
                chain.n_sites, ansatz.n_sites
            )));
        }
        let prep = match sector.spin {
            0 => prepare_singlet(chain.n_sites)?,
            _ => prepare_triplet_w(chain.n_sites)?,
        };
        let initial = prep.run()?;
        let n = chain.n_sites;
        let mut tinv = vec![0usize; 1 << n];
        for s in 0..(1usize << n) {
            tinv[crate::operators::translate_index(s, n)] = s;
        }
        Ok(Self {
            hamiltonian: build_j1j2(&chain),
            program: hva_program(&ansatz),
            chain,
            ansatz,
            sector,
            initial,
            prep,
            tinv,
        })
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.hamiltonian
    }

    /// The variational state before projection.
    pub fn ansatz_state(&self, theta: &ParamVector) -> Result<PureState> {
        let mut state = self.initial.clone();
        self.program.apply(theta, &mut state)?;
        Ok(state)
    }

    fn evaluate_pure(&self, theta: &ParamVector) -> Result<(f64, f64)> {
        let state = self.ansatz_state(theta)?;
        let (e, p, _) = projected_energy(&self.hamiltonian, &state, self.sector.momentum())?;
        Ok((e, p))
    }

    /// Full circuit including state preparation, gate-level ansatz, and the
    /// LCU ancilla block; this is what the noisy backend executes.
    pub fn full_circuit(&self, theta: &ParamVector) -> Result<CircuitIR> {
        Ok(lcu_ancilla_circuit(&self.register_circuit(theta)?))
    }

    /// Register circuit without the LCU block: preparation plus ansatz. Uses
    /// the compact bond synthesis, since this is the circuit the noisy
    /// backend pays gate errors for.
    pub fn register_circuit(&self, theta: &ParamVector) -> Result<CircuitIR> {
        let mut base = CircuitIR::new(self.chain.n_sites);
        base.extend(self.prep.gates().iter().cloned());
        base.mark_layer();
        let ansatz = build_ansatz_compact(&self.ansatz, theta)?;
        base.extend(ansatz.gates().iter().cloned());
        Ok(base)
    }

    /// Noisy evaluation: register noise, exact momentum post-selection.
    ///
    /// The register circuit runs on the n qubits; p_s is read off the
    /// register state as (1 + Re e^{ik} Tr(T rho))/2. The LCU branch map
    /// A = (1 + e^{ik} T)/2 is then applied in closed form, giving the
    /// post-selected conditional energy Tr(A rho A' H)/Tr(A rho A') without
    /// simulating the enlarged ancilla register. Note A is a projector only
    /// on the T^2-invariant subspace the noiseless circuit lives in; noise
    /// components with T^2 != 1 pass through it with reduced weight, which
    /// is exactly the physical post-selection statistics.
    fn evaluate_mixed(&self, theta: &ParamVector, noise: &NoiseParams) -> Result<(f64, f64)> {
        let n = self.chain.n_sites;
        let dim = 1usize << n;
        let register = transpile(&self.register_circuit(theta)?)?;
        let rho = noisy_execute(&register, noise, MixedState::zero(n))?;

        let c = self.sector.momentum().phase().re; // +1 or -1
        let mut tr_t = C64::new(0.0, 0.0);
        for s in 0..dim {
            tr_t += rho.entry(s, crate::operators::translate_index(s, n));
        }
        let p = 0.5 * (1.0 + c * tr_t.re);

        // column j of A rho A', then accumulate its trace and H-trace entry
        let mut tr = 0.0;
        let mut trh = 0.0;
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            let tj = self.tinv[j];
            for i in 0..dim {
                let ti = self.tinv[i];
                col[i] = 0.25
                    * (rho.entry(i, j)
                        + c * rho.entry(ti, j)
                        + c * rho.entry(i, tj)
                        + rho.entry(ti, tj));
            }
            tr += col[j].re;
            let hcol = self.hamiltonian.matvec(&col);
            trh += hcol[j].re;
        }
        if tr < 1e-12 {
            return Err(Error::SectorEmpty);
        }
        Ok((trh / tr, p))
    }

    /// Sector energy and success probability at fixed parameters.
    pub fn sector_energy(&self, theta: &ParamVector, backend: &Backend) -> Result<(f64, f64)> {
        match backend {
            Backend::Pure => self.evaluate_pure(theta),
            Backend::Mixed { noise } => self.evaluate_mixed(theta, noise),
        }
    }

    /// Penalty-augmented cost E + lambda (1 - p_s)^2.
    pub fn cost(&self, theta: &ParamVector, backend: &Backend, lambda: f64) -> Result<f64> {
        let (e, p) = self.sector_energy(theta, backend)?;
        Ok(e + lambda * (1.0 - p) * (1.0 - p))
    }

    pub fn gradient(
        &self,
        theta: &ParamVector,
        backend: &Backend,
        lambda: f64,
        method: GradientMethod,
    ) -> Result<Vec<f64>> {
        match method {
            GradientMethod::FiniteDifference { h } =>

                gradient_fd(|t| self.cost(t, backend, lambda), theta, h),
            GradientMethod::ParameterShift => match backend {
                Backend::Pure => self.gradient_parameter_shift(theta, lambda),
                Backend::Mixed { .. } => Err(Error::Config(
                    "parameter-shift gradients are implemented for the pure backend".into(),
                )),
            },
            GradientMethod::Adjoint => match backend {
                Backend::Pure => Ok(self.adjoint_cost_gradient(theta, lambda)?.3),
                Backend::Mixed { .. } => Err(Error::Config(
                    "adjoint gradients require the pure backend".into(),
                )),
            },
        }
    }

    /// Exact reverse-mode gradient of the penalized cost on the pure backend.
    ///
    /// Writing P for the momentum projector and |psi> = U(theta)|phi>, the
    /// cost is C = <psi|PHP|psi>/p + lambda (1 - p)^2 with p = <psi|P|psi>,
    /// so dC/dtheta_j = 2 Re <w| d_j psi> with
    /// |w> = PHP|psi>/p - (E/p + 2 lambda (1 - p)) P|psi>.
    /// The sweep walks the bond rotations backwards, accumulating
    /// 2 Re <w| i c S_a.S_b |psi> into the shared layer angle of each bond.
    ///
    /// Returns (cost, energy, p_s, gradient).
    pub fn adjoint_cost_gradient(
        &self,
        theta: &ParamVector,
        lambda: f64,
    ) -> Result<(f64, f64, f64, Vec<f64>)> {
        let mut psi = self.ansatz_state(theta)?;
        let (energy, p, p_psi) = projected_energy(&self.hamiltonian, &psi, self.sector.momentum())?;
        let cost = energy + lambda * (1.0 - p) * (1.0 - p);

        let hp = self.hamiltonian.matvec(p_psi.amplitudes());
        let php = project_vec(&hp, psi.n_qubits(), self.sector.momentum());
        let shift = energy / p + 2.0 * lambda * (1.0 - p);
        let w_amps: Vec<C64> = php
            .iter()
            .zip(p_psi.amplitudes())
            .map(|(m, q)| m / p - shift * q)
            .collect();
        let mut w = PureState::from_amplitudes(psi.n_qubits(), w_amps)?;

        let mut grad = vec![0.0; theta.len()];
        for op in self.program.bonds().iter().rev() {
            let t = heisenberg_bond_apply(psi.amplitudes(), op.a, op.b);
            let ov: C64 = w
                .amplitudes()
                .iter()
                .zip(&t)
                .map(|(x, y)| x.conj() * y)
                .sum();
            grad[op.param_idx] -= 2.0 * op.coeff * ov.im;
            let angle = -theta.0[op.param_idx] * op.coeff;
            psi.apply_bond_rotation(angle, op.a, op.b);
            w.apply_bond_rotation(angle, op.a, op.b);
        }
        Ok((cost, energy, p, grad))
    }

    /// Two-term parameter-shift gradient, summed over every circuit fragment
    /// carrying the parameter. Each XX/YY/ZZ fragment is exp(i u/4 sigma
    /// sigma) in its local angle u = theta c, a two-level generator, so a
    /// plain expectation obeys df/du = [f(u + pi) - f(u - pi)]/4. The
    /// post-selected energy is the quotient m/p of two such expectations
    /// (m = <PHP>, p = <P>), so the rule is applied to m and p separately
    /// and combined with the quotient rule; the penalty contributes
    /// -2 lambda (1 - p) dp.
    fn gradient_parameter_shift(&self, theta: &ParamVector, lambda: f64) -> Result<Vec<f64>> {
        let state = self.ansatz_state(theta)?;
        let (e0, p0, _) = projected_energy(&self.hamiltonian, &state, self.sector.momentum())?;
        let m0 = e0 * p0;

        let mut grad = vec![0.0; theta.len()];
        let bonds = self.program.bonds().to_vec();
        for target in 0..bonds.len() {
            for axis_slot in 0..3 {
                let mut dm = 0.0;
                let mut dp = 0.0;
                for (sign, delta) in [(1.0, std::f64::consts::PI), (-1.0, -std::f64::consts::PI)] {
                    let mut shifted = self.initial.clone();
                    for (i, op) in bonds.iter().enumerate() {
                        let u = theta.0[op.param_idx] * op.coeff;
                        if i == target {
                            // split into axis fragments and shift one of them
                            for (slot, axis) in
                                [crate::ansatz::Axis::X, crate::ansatz::Axis::Y, crate::ansatz::Axis::Z]
                                    .into_iter()
                                    .enumerate()
                            {
                                let angle = if slot == axis_slot { u + delta } else { u };
                                shifted.apply_axis_rotation(axis, angle, op.a, op.b);
                            }
                        } else {
                            shifted.apply_bond_rotation(u, op.a, op.b);
                        }
                    }
                    let (e, p, _) =
                        projected_energy(&self.hamiltonian, &shifted, self.sector.momentum())?;
                    dm += sign * e * p;
                    dp += sign * p;
                }
                let c = bonds[target].coeff;
                let dm_dtheta = c * dm / 4.0;
                let dp_dtheta = c * dp / 4.0;
                grad[bonds[target].param_idx] +=
                    (dm_dtheta * p0 - m0 * dp_dtheta) / (p0 * p0) - 2.0 * lambda * (1.0 - p0) * dp_dtheta;
            }
        }
        Ok(grad)
    }

    /// Minimization of the penalized sector cost.
    ///
    /// Pure backend: best-of-restarts adaptive gradient descent from seeded
    /// Gaussian initializations. Mixed backend: the same noiseless search
    /// first (with a fixed shaping penalty selecting the p_s -> 1
    /// representative of the degenerate optimum), then a noisy refinement
    /// stage from that warm start; the returned histories are those of the
    /// refinement stage.
    pub fn minimize(&self, backend: &Backend, opt: &OptimizerConfig) -> Result<SectorResult> {
        opt.validate()?;
        match backend {
            Backend::Pure => self.minimize_restarts(backend, opt),
            Backend::Mixed { noise } => {
                let shaping = OptimizerConfig { lambda: SHAPING_LAMBDA, ..*opt };
                let warm = self.minimize_restarts(&Backend::Pure, &shaping)?;
                self.refine_noisy(noise, opt, warm)
            }
        }
    }

    fn minimize_restarts(&self, backend: &Backend, opt: &OptimizerConfig) -> Result<SectorResult> {
        let mut best: Option<SectorResult> = None;
        let mut last_err: Option<Error> = None;
        for restart in 0..opt.restarts {
            let theta0 = init_params_gaussian(self.ansatz.layers, opt.seed.wrapping_add(restart as u64));
            match self.minimize_single(backend, opt, theta0, restart) {
                Ok(r) => {
                    let better = match &best {
                        None => true,
                        Some(b) => r.cost < b.cost,
                    };
                    if better {
                        best = Some(r);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Diverged("all restarts failed".into())))
    }

    /// Noisy refinement from a warm start.
    ///
    /// Descends E_noisy + N lambda (1 - p_s)^2 with finite-difference
    /// gradients and a geometrically decaying learning rate; the decay makes
    /// the total parameter travel finite, so the run is a local refinement
    /// rather than an unbounded drift along the noise-induced slope out of
    /// the symmetric valley.
    fn refine_noisy(
        &self,
        noise: &NoiseParams,
        opt: &OptimizerConfig,
        warm: SectorResult,
    ) -> Result<SectorResult> {
        let lam = opt.lambda * self.chain.n_sites as f64;
        let h = match opt.gradient {
            GradientMethod::FiniteDifference { h } => h,
            _ => 1e-4,
        };
        let mut theta = warm.theta_star.clone();
        let n_params = theta.len();
        let mut m = vec![0.0; n_params];
        let mut v = vec![0.0; n_params];
        let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
        let mut lr = opt.learning_rate;

        let mut energy_history = Vec::with_capacity(opt.max_steps);
        let mut p_s_history = Vec::with_capacity(opt.max_steps);
        let mut loss_history = Vec::with_capacity(opt.max_steps);
        let mut best_theta = theta.clone();
        let mut best_loss = f64::INFINITY;
        let mut best_energy = f64::NAN;
        let mut best_p = f64::NAN;
        let mut steps = 0;

        for step in 0..opt.max_steps {
            let (energy, p) = self.evaluate_mixed(&theta, noise)?;
            let loss = energy + lam * (1.0 - p) * (1.0 - p);
            if !loss.is_finite() {
                return Err(Error::Diverged("non-finite cost during optimization".into()));
            }
            energy_history.push(energy);
            p_s_history.push(p);
            loss_history.push(loss);
            if loss < best_loss {
                best_loss = loss;
                best_theta = theta.clone();
                best_energy = energy;
                best_p = p;
            }
            steps = step + 1;

            if step >= opt.convergence_window {
                let prev = loss_history[step - opt.convergence_window];
                if (loss - prev).abs() < opt.convergence_tol {
                    break;
                }
            }

            let grad = gradient_fd(
                |t| {
                    let (e, p) = self.evaluate_mixed(t, noise)?;
                    Ok(e + lam * (1.0 - p) * (1.0 - p))
                },
                &theta,
                h,
            )?;
            let t = (step + 1) as f64;
            for j in 0..n_params {
                m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
                let m_hat = m[j] / (1.0 - beta1.powf(t));
                let v_hat = v[j] / (1.0 - beta2.powf(t));
                theta.0[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            lr *= REFINE_LR_DECAY;
        }

        Ok(SectorResult {
            sector: self.sector,
            backend: Backend::Mixed { noise: *noise },
            theta_star: best_theta,
            energy: best_energy,
            p_s: best_p,
            cost: best_energy + opt.lambda * (1.0 - best_p) * (1.0 - best_p),
            energy_history,
            p_s_history,
            restart_index: warm.restart_index,
            steps,
        })
    }

    fn minimize_single(
        &self,
        backend: &Backend,
        opt: &OptimizerConfig,
        mut theta: ParamVector,
        restart: usize,
    ) -> Result<SectorResult> {
        let n_params = theta.len();
        let mut m = vec![0.0; n_params];
        let mut v = vec![0.0; n_params];
        let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);

        let mut energy_history = Vec::with_capacity(opt.max_steps);
        let mut p_s_history = Vec::with_capacity(opt.max_steps);
        let mut cost_history = Vec::with_capacity(opt.max_steps);
        let mut best_theta = theta.clone();
        let mut best_cost = f64::INFINITY;
        let mut best_energy = f64::NAN;
        let mut best_p = f64::NAN;
        let mut steps = 0;

        for step in 0..opt.max_steps {
            let (cost, energy, p, grad) = match (backend, opt.gradient) {
                (Backend::Pure, GradientMethod::Adjoint) => {
                    self.adjoint_cost_gradient(&theta, opt.lambda)?
                }
                _ => {
                    let (energy, p) = self.sector_energy(&theta, backend)?;
                    let cost = energy + opt.lambda * (1.0 - p) * (1.0 - p);
                    let grad = self.gradient(&theta, backend, opt.lambda, opt.gradient)?;
                    (cost, energy, p, grad)
                }
            };
            if !cost.is_finite() {
                return Err(Error::Diverged("non-finite cost during optimization".into()));
            }
            energy_history.push(energy);
            p_s_history.push(p);
            cost_history.push(cost);
            if cost < best_cost {
                best_cost = cost;
                best_theta = theta.clone();
                best_energy = energy;
                best_p = p;
            }
            steps = step + 1;

            if step >= opt.convergence_window {
                let prev = cost_history[step - opt.convergence_window];
                if (cost - prev).abs() < opt.convergence_tol {
                    break;
                }
            }

            let t = (step + 1) as f64;
            for j in 0..n_params {
                m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
                let m_hat = m[j] / (1.0 - beta1.powf(t));
                let v_hat = v[j] / (1.0 - beta2.powf(t));
                theta.0[j] -= opt.learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
        }

        Ok(SectorResult {
            sector: self.sector,
            backend: *backend,
            theta_star: best_theta,
            energy: best_energy,
            p_s: best_p,
            cost: best_cost,
            energy_history,
            p_s_history,
            restart_index: restart,
            steps,
        })
    }
}

/// One row of a lambda sweep.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub p_s: f64,
    pub energy: f64,
}

/// Run one minimization per penalty weight with a shared seed policy; the
/// table comes back sorted by lambda.
pub fn lambda_sweep(
    problem: &SectorProblem,
    backend: &Backend,
    opt: &OptimizerConfig,
    lambdas: &[f64],
) -> Result<Vec<LambdaPoint>> {
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let cfg = OptimizerConfig { lambda, ..*opt };
        let r = problem.minimize(backend, &cfg)?;
        out.push(LambdaPoint { lambda, p_s: r.p_s, energy: r.energy });
    }
    out.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    Ok(out)
}

/// Central finite-difference gradient of an arbitrary cost function.
pub fn gradient_fd(
    cost: impl Fn(&ParamVector) -> Result<f64>,
    theta: &ParamVector,
    h: f64,
) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; theta.len()];
    let mut probe = theta.clone();
    for j in 0..theta.len() {
        probe.0[j] = theta.0[j] + h;
        let up = cost(&probe)?;
        probe.0[j] = theta.0[j] - h;
        let down = cost(&probe)?;
        probe.0[j] = theta.0[j];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Diverged("non-finite cost during optimization".into()));
        }
        grad[j] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

/// Unnormalized momentum projection P|psi> = (|psi> + e^{ik} T|psi>)/2.
fn project_vec(amps: &[C64], n_qubits: usize, k: MomentumSector) -> Vec<C64> {
    let state = PureState::from_amplitudes(n_qubits, amps.to_vec()).unwrap();
    let t = state.translated();
    let phase = k.phase();
    amps.iter()
        .zip(t.amplitudes())
        .map(|(a, b)| 0.5 * (a + phase * b))
        .collect()
}

/// Projected Rayleigh quotient: energy of P|psi>/|P|psi>|, the success
/// probability p = <psi|P|psi>, and the unnormalized projected state.
fn projected_energy(
    h: &SparseOperator,
    psi: &PureState,
    k: MomentumSector,
) -> Result<(f64, f64, PureState)> {
    let proj = project_vec(psi.amplitudes(), psi.n_qubits(), k);
    let p: f64 = proj.iter().map(|a| a.norm_sqr()).sum();
    if p < 1e-12 {
        return Err(Error::SectorEmpty);
    }
    let p_psi = PureState::from_amplitudes(psi.n_qubits(), proj)?;
    let hp = h.matvec(p_psi.amplitudes());
    let e: C64 = p_psi
        .amplitudes()
        .iter()
        .zip(&hp)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok((e.re / p, p, p_psi))
}

/// (S_a . S_b)|v> without building the operator.
fn heisenberg_bond_apply(v: &[C64], a: usize, b: usize) -> Vec<C64> {
    let ma = 1usize << a;
    let mb = 1usize << b;
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (s, &x) in v.iter().enumerate() {
        if ((s & ma) == 0) == ((s & mb) == 0) {
            out[s] += 0.25 * x;
        } else {
            out[s] -= 0.25 * x;
            out[s ^ ma ^ mb] += 0.5 * x;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::Scheme;
    use crate::spectrum::lowest_in_sector;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn problem(n: usize, layers: usize, j2: f64, sector: SectorSpec) -> SectorProblem {
        let chain = SpinChainSpec::new(n, 1.0, j2).unwrap();
        let ansatz = HvaConfig::new(n, layers, Scheme::EvenOdd).unwrap();
        SectorProblem::new(chain, ansatz, sector).unwrap()
    }

    #[test]
    fn zero_angles_give_singlet_product_energy() {
        // |phi_0> pays -3/4 per even bond and nothing elsewhere at J2 = 0.
        // The raw expectation is -3; the dimer product is only T^2-invariant,
        // so the k = 0 projection mixes in the translated covering and the
        // post-selected pipeline energy sits below the product value.
        let p = problem(8, 1, 0.0, SectorSpec::SINGLET_ZERO);
        let theta = ParamVector::zeros(1);
        let state = p.ansatz_state(&theta).unwrap();
        assert_abs_diff_eq!(state.expectation(p.hamiltonian()).unwrap(), -3.0, epsilon = 1e-12);
        let (e, p_s) = p.sector_energy(&theta, &Backend::Pure).unwrap();
        assert!(p_s > 1e-6 && p_s < 1.0 - 1e-6);
        assert!(e <= -3.0 + 1e-12, "projected energy {e}");
    }

    #[test]
    fn cost_reduces_to_energy_when_lambda_zero() {
        let p = problem(4, 1, 0.2, SectorSpec::SINGLET_PI);
        let theta = init_params_gaussian(1, 11);
        let (e, _) = p.sector_energy(&theta, &Backend::Pure).unwrap();
        let c = p.cost(&theta, &Backend::Pure, 0.0).unwrap();
        assert_abs_diff_eq!(e, c, epsilon = 1e-14);
    }

    #[test]
    fn penalty_arithmetic() {
        // lambda 0.05, p_s 0.15 -> penalty 0.036125
        let lambda = 0.05_f64;
        let p_s = 0.15_f64;
        assert_abs_diff_eq!(lambda * (1.0 - p_s) * (1.0 - p_s), 0.036125, epsilon = 1e-12);
    }

    #[test]
    fn fd_gradient_of_quadratic_is_linear() {
        let theta = ParamVector(vec![0.3, -0.7, 1.1, 0.0]);
        let grad = gradient_fd(
            |t| Ok(t.0.iter().map(|x| x * x).sum()),
            &theta,
            1e-5,
        )
        .unwrap();
        for (g, x) in grad.iter().zip(&theta.0) {
            assert_abs_diff_eq!(*g, 2.0 * x, epsilon = 1e-8);
        }
        let zero = gradient_fd(|_| Ok(4.2), &theta, 1e-5).unwrap();
        assert!(zero.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn adjoint_gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for sector in [SectorSpec::SINGLET_ZERO, SectorSpec::TRIPLET_PI] {
            let p = problem(4, 2, 0.3, sector);
            let theta = ParamVector((0..4).map(|_| rng.gen::<f64>() - 0.5).collect());
            for lambda in [0.0, 0.07] {
                let (_, _, _, adj) = p.adjoint_cost_gradient(&theta, lambda).unwrap();
                let fd = p
                    .gradient(&theta, &Backend::Pure, lambda, GradientMethod::FiniteDifference { h: 1e-5 })
                    .unwrap();
                let norm: f64 = fd.iter().map(|g| g * g).sum::<f64>().sqrt();
                for (a, b) in adj.iter().zip(&fd) {
                    assert!((a - b).abs() < (1e-6_f64).max(1e-3 * norm), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn parameter_shift_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let p = problem(4, 1, 0.25, SectorSpec::SINGLET_PI);
        let theta = ParamVector((0..2).map(|_| rng.gen::<f64>() - 0.5).collect());
        let ps = p
            .gradient(&theta, &Backend::Pure, 0.02, GradientMethod::ParameterShift)
            .unwrap();
        let fd = p
            .gradient(&theta, &Backend::Pure, 0.02, GradientMethod::FiniteDifference { h: 1e-5 })
            .unwrap();
        let norm: f64 = fd.iter().map(|g| g * g).sum::<f64>().sqrt();
        for (a, b) in ps.iter().zip(&fd) {
            assert!((a - b).abs() < (1e-6_f64).max(1e-3 * norm), "{a} vs {b}");
        }
    }

    #[test]
    fn one_layer_reaches_sector_minima_at_n4() {
        let chain = SpinChainSpec::new(4, 1.0, 0.25).unwrap();
        let opt = OptimizerConfig {
            gradient: GradientMethod::Adjoint,
            seed: 3,
            ..Default::default()
        };
        for sector in [SectorSpec::SINGLET_ZERO, SectorSpec::TRIPLET_PI, SectorSpec::SINGLET_PI] {
            let p = problem(4, 1, 0.25, sector);
            let r = p.minimize(&Backend::Pure, &opt).unwrap();
            let exact = lowest_in_sector(&chain, sector.spin, sector.momentum_index(4)).unwrap();
            assert_abs_diff_eq!(r.energy, exact, epsilon = 1e-6);
            // variational bound
            assert!(r.energy >= exact - 1e-9);
        }
    }

    #[test]
    fn noiseless_mixed_backend_matches_pure() {
        let p = problem(4, 1, 0.2, SectorSpec::TRIPLET_PI);
        let theta = init_params_gaussian(1, 21);
        let (e_pure, p_pure) = p.sector_energy(&theta, &Backend::Pure).unwrap();
        let noise = NoiseParams { tau_factor: 0.0, ..Default::default() };
        let (e_mixed, p_mixed) = p
            .sector_energy(&theta, &Backend::Mixed { noise })
            .unwrap();
        assert_abs_diff_eq!(e_pure, e_mixed, epsilon = 1e-9);
        assert_abs_diff_eq!(p_pure, p_mixed, epsilon = 1e-9);
    }

    #[test]
    fn spin_is_preserved_through_optimization() {
        let opt = OptimizerConfig {
            gradient: GradientMethod::Adjoint,
            max_steps: 60,
            seed: 1,
            ..Default::default()
        };
        for (sector, expect) in [(SectorSpec::SINGLET_PI, 0.0), (SectorSpec::TRIPLET_PI, 2.0)] {
            let p = problem(4, 1, 0.3, sector);
            let r = p.minimize(&Backend::Pure, &opt).unwrap();
            let state = p.ansatz_state(&r.theta_star).unwrap();
            let s2 = crate::operators::build_total_spin_sq(4);
            assert_abs_diff_eq!(state.expectation(&s2).unwrap(), expect, epsilon = 1e-8);
        }
    }

    #[test]
    fn best_so_far_energy_trace_is_monotone() {
        let p = problem(4, 1, 0.2, SectorSpec::SINGLET_ZERO);
        let opt = OptimizerConfig {
            gradient: GradientMethod::Adjoint,
            max_steps: 80,
            restarts: 1,
            seed: 4,
            ..Default::default()
        };
        let r = p.minimize(&Backend::Pure, &opt).unwrap();
        let mut best = f64::INFINITY;
        let mut trace = Vec::new();
        for &e in &r.energy_history {
            best = best.min(e);
            trace.push(best);
        }
        assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(r.p_s_history.iter().all(|&p| (-1e-9..=1.0 + 1e-9).contains(&p)));
    }

    #[test]
    fn identical_seeds_reproduce_results() {
        let p = problem(4, 1, 0.25, SectorSpec::SINGLET_PI);
        let opt = OptimizerConfig {
            gradient: GradientMethod::Adjoint,
            max_steps: 40,
            seed: 17,
            ..Default::default()
        };
        let a = p.minimize(&Backend::Pure, &opt).unwrap();
        let b = p.minimize(&Backend::Pure, &opt).unwrap();
        assert_eq!(a.theta_star, b.theta_star);
        assert!((a.energy - b.energy).abs() < 1e-12);
    }

    #[test]
    fn single_lambda_sweep_has_one_row() {
        let p = problem(4, 1, 0.2, SectorSpec::SINGLET_ZERO);
        let opt = OptimizerConfig {
            gradient: GradientMethod::Adjoint,
            max_steps: 30,
            restarts: 1,
            ..Default::default()
        };
        let table = lambda_sweep(&p, &Backend::Pure, &opt, &[0.05]).unwrap();
        assert_eq!(table.len(), 1);
        assert_abs_diff_eq!(table[0].lambda, 0.05, epsilon = 0.0);
    }

    #[test]
    fn invalid_sectors_rejected() {
        assert!(SectorSpec::new(2, 0.0).is_err());
        assert!(SectorSpec::new(0, 1.0).is_err());
        assert!(SectorSpec::new(1, std::f64::consts::PI).is_ok());
    }

    #[test]
    fn noisy_survival_probability_is_physical() {
        let p = problem(4, 1, 0.15, SectorSpec::SINGLET_PI);
        let noise = NoiseParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4 {
            let theta = ParamVector((0..2).map(|_| 3.0 * (rng.gen::<f64>() - 0.5)).collect());
            let (e, ps) = p.sector_energy(&theta, &Backend::Mixed { noise }).unwrap();
            assert!(e.is_finite());
            assert!(ps > 0.0 && ps < 1.0, "p_s {ps}");
        }
    }

    #[test]
    fn penalty_steers_noisy_optimum_toward_high_survival() {
        let p = problem(4, 1, 0.15, SectorSpec::SINGLET_PI);
        let backend = Backend::Mixed { noise: NoiseParams::default() };
        let free = p.minimize(&backend, &OptimizerConfig { lambda: 0.0, ..Default::default() }).unwrap();
        let pinned =
            p.minimize(&backend, &OptimizerConfig { lambda: 0.1, ..Default::default() }).unwrap();
        assert!(pinned.p_s > 0.8, "penalized p_s {}", pinned.p_s);
        assert!(pinned.p_s > free.p_s + 0.3, "{} vs {}", pinned.p_s, free.p_s);
        // The unconstrained run trades survival for spuriously low energy.
        assert!(free.energy < pinned.energy);
    }

    #[test]
    fn noisy_result_reports_plain_penalized_cost() {
        let p = problem(4, 1, 0.15, SectorSpec::SINGLET_PI);
        let backend = Backend::Mixed { noise: NoiseParams::default() };
        let opt = OptimizerConfig { lambda: 0.05, max_steps: 40, ..Default::default() };
        let r = p.minimize(&backend, &opt).unwrap();
        let expect = r.energy + opt.lambda * (1.0 - r.p_s) * (1.0 - r.p_s);
        assert_abs_diff_eq!(r.cost, expect, epsilon = 1e-12);
        assert_eq!(r.energy_history.len(), r.steps);
        assert_eq!(r.p_s_history.len(), r.steps);
    }
}
