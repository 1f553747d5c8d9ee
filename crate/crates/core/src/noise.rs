//! Per-gate noise channels and transpilation to the native gate set.
//!
//! Every gate of duration tau is followed by a depolarizing channel composed
//! with thermal relaxation on each of its target qubits. Circuits are first
//! transpiled to {RZ, X, SX, CNOT} so the channel insertion matches the
//! hardware-level gate count. Readout is noiseless; idle qubits accrue no
//! noise during other qubits' gates.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::ansatz::CircuitIR;
use crate::error::{Error, Result};
use crate::state::{GateLabel, GateOp, KrausChannel, MixedState};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Hardware-inspired time scales. Defaults: t_g = 35 ns, T1 = T2 = T_d =
/// 100 us, CNOTs ten times longer than single-qubit gates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Single-qubit gate time in seconds.
    pub t_g: f64,
    /// Dimensionless noise scale tau / t_g; 0 is the ideal limit.
    pub tau_factor: f64,
    pub t1: f64,
    pub t2: f64,
    pub t_d: f64,
    pub cnot_duration_factor: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            t_g: 3.5e-8,
            tau_factor: 1.0,
            t1: 1e-4,
            t2: 1e-4,
            t_d: 1e-4,
            cnot_duration_factor: 10.0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_g <= 0.0 || self.t1 <= 0.0 || self.t2 <= 0.0 || self.t_d <= 0.0 {
            return Err(Error::InvalidNoiseParams("all time scales must be positive".into()));
        }
        if self.tau_factor < 0.0 {
            return Err(Error::InvalidNoiseParams("tau_factor must be >= 0".into()));
        }
        if self.t2 > 2.0 * self.t1 + 1e-18 {
            return Err(Error::InvalidNoiseParams(format!(
                "T2 = {} exceeds 2 T1 = {}",
                self.t2,
                2.0 * self.t1
            )));
        }
        if self.cnot_duration_factor < 0.0 {
            return Err(Error::InvalidNoiseParams("cnot_duration_factor must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_tau_factor(mut self, tau_factor: f64) -> Self {
        self.tau_factor = tau_factor;
        self
    }

    fn gate_duration_factor(&self, gate: &GateOp) -> f64 {
        match gate.label {
            GateLabel::Cnot => self.cnot_duration_factor,
            _ => gate.duration_factor,
        }
    }
}

/// Bit-flip weight p_tau = 1 - e^{-tau/T_d} of the depolarizing channel.
pub fn depolarizing_probability(tau: f64, t_d: f64) -> f64 {
    1.0 - (-tau / t_d).exp()
}

/// E^D_tau(rho) = (1 - 3p/4) rho + (p/4)(X rho X + Y rho Y + Z rho Z).
pub fn depolarizing_kraus(tau: f64, t_d: f64) -> Result<KrausChannel> {
    if tau < 0.0 || t_d <= 0.0 {
        return Err(Error::InvalidNoiseParams(format!("bad depolarizing times tau={tau}, T_d={t_d}")));
    }
    let p = depolarizing_probability(tau, t_d);
    let s0 = C64::new((1.0 - 3.0 * p / 4.0).sqrt(), 0.0);
    let sp = (p / 4.0).sqrt();
    let spc = C64::new(sp, 0.0);
    KrausChannel::new(
        1,
        vec![
            vec![s0, ZERO, ZERO, s0],
            vec![ZERO, spc, spc, ZERO],
            vec![ZERO, C64::new(0.0, -sp), C64::new(0.0, sp), ZERO],
            vec![spc, ZERO, ZERO, -spc],
        ],
    )
}

/// Amplitude-damping probability p1 and dephasing weight pz of the thermal
/// relaxation channel: p1 = 1 - e^{-tau/T1}, pz = (1 - p1)(1 - e^{-tau/T_pd})
/// with T_pd = T1 T2 / (2 T1 - T2).
pub fn thermal_probabilities(tau: f64, t1: f64, t2: f64) -> (f64, f64) {
    let p1 = 1.0 - (-tau / t1).exp();
    let denom = 2.0 * t1 - t2;
    let p_pd = if denom > 0.0 {
        1.0 - (-tau * denom / (t1 * t2)).exp()
    } else {
        0.0 // T2 = 2 T1: pure dephasing time diverges
    };
    (p1, (1.0 - p1) * p_pd)
}

/// E^R_tau with Kraus set {sqrt(1-p1-pz) 1, sqrt(p1) sigma^-, sqrt(pz) Z,
/// sqrt(p1) P0}.
pub fn thermal_relaxation_kraus(tau: f64, t1: f64, t2: f64) -> Result<KrausChannel> {
    if tau < 0.0 || t1 <= 0.0 || t2 <= 0.0 {
        return Err(Error::InvalidNoiseParams(format!("bad relaxation times tau={tau}, T1={t1}, T2={t2}")));
    }
    if t2 > 2.0 * t1 + 1e-18 {
        return Err(Error::InvalidNoiseParams(format!("T2 = {t2} exceeds 2 T1 = {}", 2.0 * t1)));
    }
    let (p1, pz) = thermal_probabilities(tau, t1, t2);
    let k0 = C64::new((1.0 - p1 - pz).sqrt(), 0.0);
    let k1 = C64::new(p1.sqrt(), 0.0);
    let kz = C64::new(pz.sqrt(), 0.0);
    KrausChannel::new(
        1,
        vec![
            vec![k0, ZERO, ZERO, k0],
            vec![ZERO, k1, ZERO, ZERO], // sigma^- = |0><1|
            vec![kz, ZERO, ZERO, -kz],
            vec![k1, ZERO, ZERO, ZERO], // P0 = |0><0|
        ],
    )
}

/// Single-qubit composed channel E^D o E^R at duration tau.
pub fn gate_noise_channel(tau: f64, params: &NoiseParams) -> Result<KrausChannel> {
    let depol = depolarizing_kraus(tau, params.t_d)?;
    let relax = thermal_relaxation_kraus(tau, params.t1, params.t2)?;
    KrausChannel::compose(&depol, &relax)
}

/// Full noise channel of a gate: the single-qubit composed channel at
/// tau = tau_factor * t_g * duration_factor, tensored over the gate's qubits.
pub fn composed_gate_channel(params: &NoiseParams, gate: &GateOp) -> Result<KrausChannel> {
    params.validate()?;
    let tau = params.tau_factor * params.t_g * params.gate_duration_factor(gate);
    let single = gate_noise_channel(tau, params)?;
    let mut out = single.clone();
    for _ in 1..gate.n_targets() {
        out = KrausChannel::tensor(&out, &single)?;
    }
    Ok(out)
}

/// Circuit restricted to the native set {RZ, X, SX, CNOT}.
#[derive(Debug, Clone)]
pub struct TranspiledCircuit {
    pub n_qubits: usize,
    gates: Vec<GateOp>,
    pub ancilla: Option<usize>,
}

impl TranspiledCircuit {
    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g.label, GateLabel::Cnot)).count()
    }
}

/// Map an angle to (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// ZSX Euler decomposition in time order, using as few SX pulses as the gate
/// allows: diagonal gates become a bare RZ, antidiagonal ones RZ-X,
/// |u00| = 1/sqrt(2) gates RZ-SX-RZ (the Hadamard case of the native set),
/// and the generic gate RZ-SX-RZ-SX-RZ; all up to global phase.
fn euler_zsx(matrix: &[C64], q: usize) -> Vec<GateOp> {
    let (u00, u01, u10) = (matrix[0], matrix[1], matrix[2]);
    let u11 = matrix[3];
    const EPS: f64 = 1e-12;
    if u10.norm() < EPS {
        return vec![GateOp::rz(q, normalize_angle((u11 / u00).arg()))];
    }
    if u00.norm() < EPS {
        // U = e^{i phase} RZ(b) X RZ(a): X e^{-i a Z/2} -> entries fix a, b
        let a = (u01 / u10).arg();
        return vec![GateOp::rz(q, normalize_angle(a)), GateOp::x(q)];
    }
    if (u00.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < EPS {
        // single-pulse form RZ(b) SX RZ(a); ratios against the SX entries
        let s00 = C64::new(0.5, 0.5);
        let s01 = C64::new(0.5, -0.5);
        let a = ((u01 / u00) * (s00 / s01)).arg();
        let b = ((u10 / u00) * (s00 / s01)).arg();
        return vec![
            GateOp::rz(q, normalize_angle(a)),
            GateOp::sx(q),
            GateOp::rz(q, normalize_angle(b)),
        ];
    }
    let theta = 2.0 * u10.norm().atan2(u00.norm());
    let phi = (u10 / u00).arg();
    let lambda = (-(u01 / u00)).arg();
    vec![
        GateOp::rz(q, normalize_angle(lambda)),
        GateOp::sx(q),
        GateOp::rz(q, normalize_angle(theta + PI)),
        GateOp::sx(q),
        GateOp::rz(q, normalize_angle(phi + PI)),
    ]
}

/// Toffoli(c1, c2; t) with T rotations realized as RZ(pi/4) (global phase
/// differs from the textbook T gate; irrelevant at the channel level).
fn toffoli(c1: usize, c2: usize, t: usize) -> Vec<GateOp> {
    let tg = |q| GateOp::rz(q, PI / 4.0);
    let tdg = |q| GateOp::rz(q, -PI / 4.0);
    vec![
        GateOp::h(t),
        GateOp::cnot(c2, t),
        tdg(t),
        GateOp::cnot(c1, t),
        tg(t),
        GateOp::cnot(c2, t),
        tdg(t),
        GateOp::cnot(c1, t),
        tg(c2),
        tg(t),
        GateOp::h(t),
        GateOp::cnot(c1, c2),
        tg(c1),
        tdg(c2),
        GateOp::cnot(c1, c2),
    ]
}

/// Lower one source gate to {CNOT + arbitrary 1q gates}.
fn lower_gate(gate: &GateOp) -> Result<Vec<GateOp>> {
    match (&gate.label, gate.targets()) {
        (GateLabel::Cnot, _) => Ok(vec![gate.clone()]),
        (GateLabel::Swap, &[a, b]) => Ok(vec![GateOp::cnot(a, b), GateOp::cnot(b, a), GateOp::cnot(a, b)]),
        (GateLabel::Cswap, &[c, a, b]) => {
            let mut v = vec![GateOp::cnot(b, a)];
            v.extend(toffoli(c, a, b));
            v.push(GateOp::cnot(b, a));
            Ok(v)
        }
        (GateLabel::CRy(angle), &[c, t]) => Ok(vec![
            GateOp::cnot(c, t),
            GateOp::ry(t, -angle / 2.0),
            GateOp::cnot(c, t),
            GateOp::ry(t, angle / 2.0),
        ]),
        (_, &[_]) => Ok(vec![gate.clone()]),
        (label, _) => Err(Error::UnsupportedGate(label.to_string())),
    }
}

/// Rewrite a circuit into the native gate set; the action equals the source
/// circuit up to a global phase.
pub fn transpile(circuit: &CircuitIR) -> Result<TranspiledCircuit> {
    let mut gates = Vec::new();
    for gate in circuit.gates() {
        for g in lower_gate(gate)? {
            match g.label {
                GateLabel::Cnot | GateLabel::X | GateLabel::Sx | GateLabel::Rz(_) => gates.push(g),
                _ => {
                    let q = g.targets()[0];
                    gates.extend(euler_zsx(g.matrix(), q));
                }
            }
        }
    }
    Ok(TranspiledCircuit { n_qubits: circuit.n_qubits, gates, ancilla: circuit.ancilla })
}

/// Execute a transpiled circuit on a density matrix, inserting the composed
/// noise channel after each gate on each of its target qubits.
///
/// The per-qubit sequential application equals the tensored channel of
/// `composed_gate_channel`: single-qubit channels on distinct qubits commute.
pub fn noisy_execute(circuit: &TranspiledCircuit, params: &NoiseParams, mut rho: MixedState) -> Result<MixedState> {
    params.validate()?;
    if rho.n_qubits() != circuit.n_qubits {
        return Err(Error::DimensionMismatch { expected: circuit.n_qubits, got: rho.n_qubits() });
    }
    let noiseless = params.tau_factor == 0.0;
    let s_1q = if noiseless {
        None
    } else {
        Some(gate_noise_channel(params.tau_factor * params.t_g, params)?.superop_1q()?)
    };
    let s_cnot = if noiseless {
        None
    } else {
        Some(
            gate_noise_channel(params.tau_factor * params.t_g * params.cnot_duration_factor, params)?
                .superop_1q()?,
        )
    };
    for gate in circuit.gates() {
        rho.apply_gate(gate)?;
        let s = match gate.label {
            GateLabel::Cnot => &s_cnot,
            // RZ is virtual on the reference hardware: zero duration, no error
            GateLabel::Rz(_) => &None,
            _ => &s_1q,
        };
        if let Some(s) = s {
            for &q in gate.targets() {
                rho.apply_superop_1q(s, q)?;
            }
        }
    }
    Ok(rho)
}
