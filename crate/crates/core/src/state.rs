//! Dense pure-state and density-matrix simulation backends.
//!
//! Basis ordering is little-endian (see `operators`): qubit r is bit r of the
//! basis index. Gates are applied in place with bit-masked strides; no 2^N x
//! 2^N matrices are ever materialized.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operators::{translate_index, SparseOperator};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Symbolic gate names, used by the transpiler and the text serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum GateLabel {
    X,
    Sx,
    H,
    Rz(f64),
    Ry(f64),
    CRy(f64),
    Cnot,
    Swap,
    Cswap,
    /// One- or two-qubit unitary identified only by its matrix.
    Custom(&'static str),
}

impl std::fmt::Display for GateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GateLabel::X => write!(f, "X"),
            GateLabel::Sx => write!(f, "SX"),
            GateLabel::H => write!(f, "H"),
            GateLabel::Rz(a) => write!(f, "RZ({a})"),
            GateLabel::Ry(a) => write!(f, "RY({a})"),
            GateLabel::CRy(a) => write!(f, "CRY({a})"),
            GateLabel::Cnot => write!(f, "CNOT"),
            GateLabel::Swap => write!(f, "SWAP"),
            GateLabel::Cswap => write!(f, "CSWAP"),
            GateLabel::Custom(name) => write!(f, "{name}"),
        }
    }
}

/// A k-qubit unitary (k <= 3) acting on an ordered list of target qubits.
///
/// Matrix indices are little-endian in the target list: `targets[0]` is the
/// least significant bit of the matrix row/column index.
#[derive(Debug, Clone)]
pub struct GateOp {
    pub label: GateLabel,
    matrix: Vec<C64>,
    targets: Vec<usize>,
    /// Gate duration in multiples of the single-qubit gate time.
    pub duration_factor: f64,
}

fn unitarity_residual(matrix: &[C64], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let mut acc = ZERO;
            for k in 0..d {
                acc += matrix[k * d + i].conj() * matrix[k * d + j];
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - expect).norm());
        }
    }
    worst
}

impl GateOp {
    pub fn new(label: GateLabel, matrix: Vec<C64>, targets: Vec<usize>, duration_factor: f64) -> Result<Self> {
        let d = 1usize << targets.len();
        if matrix.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: matrix.len() });
        }
        let mut sorted = targets.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != targets.len() || targets.is_empty() || targets.len() > 3 {
            return Err(Error::BadTargets { n_qubits: 0, targets });
        }
        let residual = unitarity_residual(&matrix, d);
        if residual > 1e-10 {
            return Err(Error::NonUnitary { residual });
        }
        Ok(Self { label, matrix, targets, duration_factor })
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn matrix(&self) -> &[C64] {
        &self.matrix
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    /// Remap target qubit indices through `f` (used when embedding circuits).
    pub fn map_targets(mut self, f: impl Fn(usize) -> usize) -> Self {
        for t in &mut self.targets {
            *t = f(*t);
        }
        self
    }

    pub fn dagger(&self) -> Self {
        let d = 1usize << self.targets.len();
        let mut m = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = self.matrix[j * d + i].conj();
            }
        }
        Self {
            label: GateLabel::Custom("DAGGER"),
            matrix: m,
            targets: self.targets.clone(),
            duration_factor: self.duration_factor,
        }
    }

    // ---- constructors for the common gates ----

    pub fn x(q: usize) -> Self {
        Self::new(GateLabel::X, vec![ZERO, C64::new(1.0, 0.0), C64::new(1.0, 0.0), ZERO], vec![q], 1.0).unwrap()
    }

    pub fn sx(q: usize) -> Self {
        let a = C64::new(0.5, 0.5);
        let b = C64::new(0.5, -0.5);
        Self::new(GateLabel::Sx, vec![a, b, b, a], vec![q], 1.0).unwrap()
    }

    pub fn h(q: usize) -> Self {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(GateLabel::H, vec![s, s, s, -s], vec![q], 1.0).unwrap()
    }

    pub fn rz(q: usize, angle: f64) -> Self {
        let e0 = C64::from_polar(1.0, -angle / 2.0);
        let e1 = C64::from_polar(1.0, angle / 2.0);
        Self::new(GateLabel::Rz(angle), vec![e0, ZERO, ZERO, e1], vec![q], 1.0).unwrap()
    }

    pub fn ry(q: usize, angle: f64) -> Self {
        let c = C64::new((angle / 2.0).cos(), 0.0);
        let s = C64::new((angle / 2.0).sin(), 0.0);
        Self::new(GateLabel::Ry(angle), vec![c, -s, s, c], vec![q], 1.0).unwrap()
    }

    /// Diagonalizing gate for YY rotations: U with U Z U^dagger = Y.
    pub fn uy(q: usize) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = C64::new(h, 0.0);
        let b = C64::new(0.0, h);
        Self::new(GateLabel::Custom("UY"), vec![a, b, b, a], vec![q], 1.0).unwrap()
    }

    pub fn uy_dagger(q: usize) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = C64::new(h, 0.0);
        let b = C64::new(0.0, -h);
        Self::new(GateLabel::Custom("UYDG"), vec![a, b, b, a], vec![q], 1.0).unwrap()
    }

    /// CNOT with control `c`, target `t`.
    pub fn cnot(c: usize, t: usize) -> Self {
        let one = C64::new(1.0, 0.0);
        // targets = [c, t]; index m = bit(c) + 2*bit(t)
        let mut m = vec![ZERO; 16];
        m[0] = one; // |c=0,t=0> -> same
        m[2 * 4 + 2] = one; // |c=0,t=1> -> same
        m[3 * 4 + 1] = one; // |c=1,t=0> -> |c=1,t=1>
        m[4 + 3] = one; // |c=1,t=1> -> |c=1,t=0>
        Self::new(GateLabel::Cnot, m, vec![c, t], 10.0).unwrap()
    }

    pub fn swap(a: usize, b: usize) -> Self {
        let one = C64::new(1.0, 0.0);
        let mut m = vec![ZERO; 16];
        m[0] = one;
        m[4 + 2] = one;
        m[2 * 4 + 1] = one;
        m[3 * 4 + 3] = one;
        Self::new(GateLabel::Swap, m, vec![a, b], 30.0).unwrap()
    }

    /// Controlled swap (Fredkin): control `c`, swapped pair `a`, `b`.
    pub fn cswap(c: usize, a: usize, b: usize) -> Self {
        let one = C64::new(1.0, 0.0);
        // targets = [c, a, b]; index m = bit(c) + 2*bit(a) + 4*bit(b)
        let mut m = vec![ZERO; 64];
        for idx in 0..8usize {
            let out = if idx & 1 == 1 {
                // control set: swap bits 1 and 2
                (idx & 1) | ((idx >> 1) & 1) << 2 | ((idx >> 2) & 1) << 1
            } else {
                idx
            };
            m[out * 8 + idx] = one;
        }
        Self::new(GateLabel::Cswap, m, vec![c, a, b], 70.0).unwrap()
    }

    /// Controlled RY(angle): control `c`, target `t`.
    pub fn cry(c: usize, t: usize, angle: f64) -> Self {
        let one = C64::new(1.0, 0.0);
        let cth = C64::new((angle / 2.0).cos(), 0.0);
        let sth = C64::new((angle / 2.0).sin(), 0.0);
        // targets = [c, t]; index m = bit(c) + 2*bit(t)
        let mut m = vec![ZERO; 16];
        m[0] = one;
        m[2 * 4 + 2] = one;
        m[4 + 1] = cth;
        m[3 * 4 + 1] = sth;
        m[4 + 3] = -sth;
        m[3 * 4 + 3] = cth;
        Self::new(GateLabel::CRy(angle), m, vec![c, t], 20.0).unwrap()
    }

    pub fn custom_1q(name: &'static str, matrix: [C64; 4], q: usize) -> Result<Self> {
        Self::new(GateLabel::Custom(name), matrix.to_vec(), vec![q], 1.0)
    }
}

/// Apply a k-qubit matrix to the amplitudes reachable through
/// `offset + i * stride` for basis index i of an n-qubit register.
fn apply_matrix_strided(
    buf: &mut [C64],
    n_qubits: usize,
    matrix: &[C64],
    targets: &[usize],
    conjugate: bool,
    offset: usize,
    stride: usize,
) {
    let k = targets.len();
    let d = 1usize << k;
    let dim = 1usize << n_qubits;
    let mut sorted = targets.to_vec();
    sorted.sort_unstable();

    let mut local = [ZERO; 8];
    let mut idx = [0usize; 8];
    for base_compact in 0..(dim >> k) {
        // expand the compact index by inserting zero bits at the target positions
        let mut base = base_compact;
        for &t in &sorted {
            let low = base & ((1 << t) - 1);
            base = ((base >> t) << (t + 1)) | low;
        }
        for m in 0..d {
            let mut full = base;
            for (j, &t) in targets.iter().enumerate() {
                full |= ((m >> j) & 1) << t;
            }
            idx[m] = offset + full * stride;
            local[m] = buf[idx[m]];
        }
        for (row, slot) in idx.iter().enumerate().take(d) {
            let mut acc = ZERO;
            for col in 0..d {
                let mut mv = matrix[row * d + col];
                if conjugate {
                    mv = mv.conj();
                }
                acc += mv * local[col];
            }
            buf[*slot] = acc;
        }
    }
}

/// Complex amplitude vector over the 2^n computational basis.
#[derive(Debug, Clone)]
pub struct PureState {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl PureState {
    /// |0...0>
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch { expected: 1 << n_qubits, got: amps.len() });
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for a in &mut self.amps {
                *a *= inv;
            }
        }
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        if targets.iter().any(|&t| t >= self.n_qubits) {
            return Err(Error::BadTargets { n_qubits: self.n_qubits, targets: targets.to_vec() });
        }
        Ok(())
    }

    /// |psi> <- U |psi>
    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<()> {
        self.check_targets(gate.targets())?;
        apply_matrix_strided(&mut self.amps, self.n_qubits, gate.matrix(), gate.targets(), false, 0, 1);
        Ok(())
    }

    /// Fast path for exp(i theta S_a . S_b); equal to the three two-local
    /// rotations XX, YY, ZZ with the same angle.
    pub fn apply_bond_rotation(&mut self, theta: f64, a: usize, b: usize) {
        debug_assert!(a != b && a < self.n_qubits && b < self.n_qubits);
        let dim = self.amps.len();
        let phase_eq = C64::from_polar(1.0, theta / 4.0);
        let pref = C64::from_polar(1.0, -theta / 4.0);
        let c = pref * C64::new((theta / 2.0).cos(), 0.0);
        let s = pref * C64::new(0.0, (theta / 2.0).sin());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mask_a = 1usize << a;
        let mask_b = 1usize << b;
        for base_compact in 0..(dim >> 2) {
            let low = base_compact & ((1 << lo) - 1);
            let mid = ((base_compact >> lo) << (lo + 1)) | low;
            let low2 = mid & ((1 << hi) - 1);
            let base = ((mid >> hi) << (hi + 1)) | low2;

            let i00 = base;
            let i01 = base | mask_a;
            let i10 = base | mask_b;
            let i11 = base | mask_a | mask_b;
            self.amps[i00] *= phase_eq;
            self.amps[i11] *= phase_eq;
            let x = self.amps[i01];
            let y = self.amps[i10];
            self.amps[i01] = c * x + s * y;
            self.amps[i10] = s * x + c * y;
        }
    }

    /// Single-axis bond rotation exp(i theta S^alpha_a S^alpha_b).
    pub fn apply_axis_rotation(&mut self, axis: crate::ansatz::Axis, theta: f64, a: usize, b: usize) {
        let m = crate::ansatz::axis_rotation_matrix(axis, theta);
        apply_matrix_strided(&mut self.amps, self.n_qubits, &m, &[a, b], false, 0, 1);
    }

    /// T |psi>: one-site translation of the register.
    pub fn translated(&self) -> PureState {
        let mut out = vec![ZERO; self.amps.len()];
        for (s, &a) in self.amps.iter().enumerate() {
            out[translate_index(s, self.n_qubits)] = a;
        }
        PureState { n_qubits: self.n_qubits, amps: out }
    }

    /// <self|other>
    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// <psi| O |psi> for Hermitian O; the imaginary residual is checked.
    pub fn expectation(&self, op: &SparseOperator) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: op.dim() });
        }
        let y = op.matvec(&self.amps);
        let val: C64 = self.amps.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        if val.im.abs() > 1e-9 {
            return Err(Error::NonHermitian { residual: val.im.abs() });
        }
        Ok(val.re)
    }

    /// Born probability of `outcome` when measuring `ancilla` in `basis`, and
    /// the renormalized post-measurement state (ancilla projected in place).
    pub fn measure_ancilla(&self, ancilla: usize, basis: MeasureBasis, outcome: usize) -> Result<(f64, PureState)> {
        self.check_targets(&[ancilla])?;
        let (v0, v1) = basis.vector(outcome);
        let mask = 1usize << ancilla;
        let mut prob = 0.0;
        let mut post = self.clone();
        for i0 in 0..self.amps.len() {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            let a = v0.conj() * self.amps[i0] + v1.conj() * self.amps[i1];
            prob += a.norm_sqr();
            post.amps[i0] = v0 * a;
            post.amps[i1] = v1 * a;
        }
        if prob < 1e-12 {
            return Err(Error::ImprobableOutcome(prob));
        }
        let inv = 1.0 / prob.sqrt();
        for a in &mut post.amps {
            *a *= inv;
        }
        Ok((prob, post))
    }

    /// Drop an ancilla known to be in a product state after projection.
    pub fn remove_ancilla(&self, ancilla: usize) -> Result<PureState> {
        self.check_targets(&[ancilla])?;
        let mask = 1usize << ancilla;
        let low = mask - 1;
        let half = self.amps.len() / 2;
        let expand = |i: usize| ((i & !low) << 1) | (i & low);
        // the ancilla factors out after projection, so one ancilla column is a
        // consistent scalar multiple of the register state; pick the heavier one
        let norm0: f64 = (0..half).map(|i| self.amps[expand(i)].norm_sqr()).sum();
        let norm1: f64 = (0..half).map(|i| self.amps[expand(i) | mask].norm_sqr()).sum();
        let bit = if norm0 >= norm1 { 0 } else { mask };
        let out: Vec<C64> = (0..half).map(|i| self.amps[expand(i) | bit]).collect();
        let mut st = PureState { n_qubits: self.n_qubits - 1, amps: out };
        st.normalize();
        Ok(st)
    }

    /// |psi><psi|
    pub fn density(&self) -> MixedState {
        let dim = self.dim();
        let mut rho = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                rho[i * dim + j] = self.amps[i] * self.amps[j].conj();
            }
        }
        MixedState { n_qubits: self.n_qubits, rho }
    }
}

/// Measurement basis for single-qubit projective measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureBasis {
    PlusMinus,
    ZeroOne,
}

impl MeasureBasis {
    /// Basis vector (component on |0>, component on |1>) for the outcome.
    fn vector(self, outcome: usize) -> (C64, C64) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match (self, outcome) {
            (MeasureBasis::PlusMinus, 0) => (C64::new(h, 0.0), C64::new(h, 0.0)),
            (MeasureBasis::PlusMinus, 1) => (C64::new(h, 0.0), C64::new(-h, 0.0)),
            (MeasureBasis::ZeroOne, 0) => (C64::new(1.0, 0.0), ZERO),
            (MeasureBasis::ZeroOne, 1) => (ZERO, C64::new(1.0, 0.0)),
            _ => panic!("outcome must be 0 or 1"),
        }
    }
}

/// Completely positive trace preserving map given by Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    n_qubits: usize,
    ops: Vec<Vec<C64>>,
}

impl KrausChannel {
    /// Checks the completeness relation sum_i K_i^dagger K_i = 1.
    pub fn new(n_qubits: usize, ops: Vec<Vec<C64>>) -> Result<Self> {
        let d = 1usize << n_qubits;
        for k in &ops {
            if k.len() != d * d {
                return Err(Error::DimensionMismatch { expected: d * d, got: k.len() });
            }
        }
        let ch = Self { n_qubits, ops };
        let residual = ch.completeness_residual();
        if residual > 1e-10 {
            return Err(Error::IncompleteChannel { residual });
        }
        Ok(ch)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn kraus_ops(&self) -> &[Vec<C64>] {
        &self.ops
    }

    /// Dense superoperator of a single-qubit channel: the 4x4 matrix acting
    /// on vec(rho) with index a*2 + b for the entry rho_{a b}.
    pub fn superop_1q(&self) -> Result<[C64; 16]> {
        if self.n_qubits != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.n_qubits });
        }
        let mut s = [ZERO; 16];
        for k in &self.ops {
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        for d in 0..2 {
                            s[(a * 2 + b) * 4 + (c * 2 + d)] += k[a * 2 + c] * k[b * 2 + d].conj();
                        }
                    }
                }
            }
        }
        Ok(s)
    }

    pub fn completeness_residual(&self) -> f64 {
        let d = 1usize << self.n_qubits;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut acc = ZERO;
                for k in &self.ops {
                    for l in 0..d {
                        acc += k[l * d + i].conj() * k[l * d + j];
                    }
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - expect).norm());
            }
        }
        worst
    }

    /// E_B o E_A: apply A first, then B. Kraus set {B_i A_j}.
    pub fn compose(after: &KrausChannel, before: &KrausChannel) -> Result<KrausChannel> {
        if after.n_qubits != before.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: after.n_qubits,
                got: before.n_qubits,
            });
        }
        let d = 1usize << after.n_qubits;
        let mut ops = Vec::with_capacity(after.ops.len() * before.ops.len());
        for b in &after.ops {
            for a in &before.ops {
                let mut m = vec![ZERO; d * d];
                for i in 0..d {
                    for j in 0..d {
                        let mut acc = ZERO;
                        for k in 0..d {
                            acc += b[i * d + k] * a[k * d + j];
                        }
                        m[i * d + j] = acc;
                    }
                }
                ops.push(m);
            }
        }
        KrausChannel::new(after.n_qubits, ops)
    }

    /// Tensor product channel E_a (on high qubit) (x) E_b (on low qubit).
    pub fn tensor(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
        let n = a.n_qubits + b.n_qubits;
        let da = 1usize << a.n_qubits;
        let db = 1usize << b.n_qubits;
        let d = da * db;
        let mut ops = Vec::with_capacity(a.ops.len() * b.ops.len());
        for ka in &a.ops {
            for kb in &b.ops {
                let mut m = vec![ZERO; d * d];
                for ia in 0..da {
                    for ja in 0..da {
                        for ib in 0..db {
                            for jb in 0..db {
                                // little-endian: b occupies the low bits
                                let row = (ia << b.n_qubits) | ib;
                                let col = (ja << b.n_qubits) | jb;
                                m[row * d + col] = ka[ia * da + ja] * kb[ib * db + jb];
                            }
                        }
                    }
                }
                ops.push(m);
            }
        }
        KrausChannel::new(n, ops)
    }

    pub fn identity(n_qubits: usize) -> KrausChannel {
        let d = 1usize << n_qubits;
        let mut m = vec![ZERO; d * d];
        for i in 0..d {
            m[i * d + i] = C64::new(1.0, 0.0);
        }
        KrausChannel { n_qubits, ops: vec![m] }
    }
}

/// Density matrix over the 2^n computational basis (row-major storage).
#[derive(Debug, Clone)]
pub struct MixedState {
    n_qubits: usize,
    rho: Vec<C64>,
}

impl MixedState {
    pub fn zero(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut rho = vec![ZERO; dim * dim];
        rho[0] = C64::new(1.0, 0.0);
        Self { n_qubits, rho }
    }

    pub fn from_matrix(n_qubits: usize, rho: Vec<C64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if rho.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: rho.len() });
        }
        Ok(Self { n_qubits, rho })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn matrix(&self) -> &[C64] {
        &self.rho
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.rho[i * self.dim() + j]
    }

    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        (0..dim).map(|i| self.rho[i * dim + i]).sum()
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho
        self.rho.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                worst = worst.max((self.rho[i * dim + j] - self.rho[j * dim + i].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue; test-only positivity scan.
    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.dim();
        let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| self.rho[i * dim + j]);
        let eig = m.symmetric_eigen();
        eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        if targets.iter().any(|&t| t >= self.n_qubits) {
            return Err(Error::BadTargets { n_qubits: self.n_qubits, targets: targets.to_vec() });
        }
        Ok(())
    }

    /// Apply an arbitrary (not necessarily unitary) k-qubit matrix as
    /// rho <- M rho M^dagger.
    fn conjugate_by(&mut self, matrix: &[C64], targets: &[usize]) {
        let dim = self.dim();
        // rows: rho[., j] transforms with M for every column j
        for j in 0..dim {
            apply_matrix_strided(&mut self.rho, self.n_qubits, matrix, targets, false, j, dim);
        }
        // columns: rho[i, .] transforms with conj(M)
        for i in 0..dim {
            apply_matrix_strided(&mut self.rho, self.n_qubits, matrix, targets, true, i * dim, 1);
        }
    }

    /// rho <- U rho U^dagger
    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<()> {
        self.check_targets(gate.targets())?;
        self.conjugate_by(gate.matrix(), gate.targets());
        Ok(())
    }

    /// Extend with one fresh ancilla qubit in |0> as the new highest bit.
    pub fn with_ancilla(&self) -> MixedState {
        let d = self.dim();
        let dim = 2 * d;
        let mut rho = vec![ZERO; dim * dim];
        for i in 0..d {
            for j in 0..d {
                rho[i * dim + j] = self.rho[i * d + j];
            }
        }
        MixedState { n_qubits: self.n_qubits + 1, rho }
    }

    /// rho <- S rho for a precomputed single-qubit superoperator; one pass
    /// over the matrix instead of one conjugation per Kraus operator.
    pub fn apply_superop_1q(&mut self, s: &[C64; 16], q: usize) -> Result<()> {
        self.check_targets(&[q])?;
        let dim = self.dim();
        let mq = 1usize << q;
        for i0 in 0..dim {
            if i0 & mq != 0 {
                continue;
            }
            for j0 in 0..dim {
                if j0 & mq != 0 {
                    continue;
                }
                let idx = [
                    i0 * dim + j0,
                    i0 * dim + (j0 | mq),
                    (i0 | mq) * dim + j0,
                    (i0 | mq) * dim + (j0 | mq),
                ];
                let x = [self.rho[idx[0]], self.rho[idx[1]], self.rho[idx[2]], self.rho[idx[3]]];
                for (row, &slot) in idx.iter().enumerate() {
                    let mut acc = ZERO;
                    for (col, &xv) in x.iter().enumerate() {
                        acc += s[row * 4 + col] * xv;
                    }
                    self.rho[slot] = acc;
                }
            }
        }
        Ok(())
    }

    /// rho <- sum_i K_i rho K_i^dagger on the target subsystem.
    pub fn apply_channel(&mut self, channel: &KrausChannel, targets: &[usize]) -> Result<()> {
        self.check_targets(targets)?;
        if targets.len() != channel.n_qubits() {
            return Err(Error::DimensionMismatch { expected: channel.n_qubits(), got: targets.len() });
        }
        let mut acc = vec![ZERO; self.rho.len()];
        let original = self.rho.clone();
        for k in channel.kraus_ops() {
            self.rho.copy_from_slice(&original);
            self.conjugate_by(k, targets);
            for (a, b) in acc.iter_mut().zip(&self.rho) {
                *a += *b;
            }
        }
        self.rho = acc;
        Ok(())
    }

    /// Tr(rho O) for Hermitian O; the imaginary residual is checked.
    pub fn expectation(&self, op: &SparseOperator) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: op.dim() });
        }
        let dim = self.dim();
        let mut val = ZERO;
        for (r, c, v) in op.entries() {
            // Tr(rho O) = sum_{r,c} O_{rc} rho_{cr}
            val += v * self.rho[c * dim + r];
        }
        if val.im.abs() > 1e-9 {
            return Err(Error::NonHermitian { residual: val.im.abs() });
        }
        Ok(val.re)
    }

    /// Born probability and renormalized post-measurement state.
    pub fn measure_ancilla(&self, ancilla: usize, basis: MeasureBasis, outcome: usize) -> Result<(f64, MixedState)> {
        self.check_targets(&[ancilla])?;
        let (v0, v1) = basis.vector(outcome);
        // projector |v><v| on the ancilla
        let proj = vec![
            v0 * v0.conj(),
            v0 * v1.conj(),
            v1 * v0.conj(),
            v1 * v1.conj(),
        ];
        let mut post = self.clone();
        post.conjugate_by(&proj, &[ancilla]);
        let prob = post.trace().re;
        if prob < 1e-12 {
            return Err(Error::ImprobableOutcome(prob));
        }
        let inv = 1.0 / prob;
        for v in &mut post.rho {
            *v *= inv;
        }
        Ok((prob, post))
    }

    /// Partial trace over a single qubit.
    pub fn trace_out(&self, qubit: usize) -> Result<MixedState> {
        self.check_targets(&[qubit])?;
        let dim = self.dim();
        let half = dim / 2;
        let mask = 1usize << qubit;
        let low = mask - 1;
        let expand = |i: usize, bit: usize| ((i & !low) << 1) | (i & low) | (bit * mask);
        let mut rho = vec![ZERO; half * half];
        for i in 0..half {
            for j in 0..half {
                let mut acc = ZERO;
                for bit in 0..2 {
                    acc += self.rho[expand(i, bit) * dim + expand(j, bit)];
                }
                rho[i * half + j] = acc;
            }
        }
        Ok(MixedState { n_qubits: self.n_qubits - 1, rho })
    }

    /// Fidelity with a pure state: <psi| rho |psi>.
    pub fn fidelity_with_pure(&self, psi: &PureState) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: psi.dim() });
        }
        let dim = self.dim();
        let mut acc = ZERO;
        for i in 0..dim {
            for j in 0..dim {
                acc += psi.amplitudes()[i].conj() * self.rho[i * dim + j] * psi.amplitudes()[j];
            }
        }
        Ok(acc.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn superop_path_matches_kraus_path() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        // amplitude damping, a non-unital channel with off-diagonal action
        let g = 0.23_f64;
        let k0: Vec<C64> = vec![c(1.0, 0.0), ZERO, ZERO, c((1.0 - g).sqrt(), 0.0)];
        let k1 = vec![ZERO, c(g.sqrt(), 0.0), ZERO, ZERO];
        let ch = KrausChannel::new(1, vec![k0, k1]).unwrap();
        let s = ch.superop_1q().unwrap();

        for q in 0..3 {
            let mut psi = PureState::zero(3);
            for amp in psi.amplitudes_mut() {
                *amp = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
            psi.normalize();
            let mut a = psi.density();
            let mut b = psi.density();
            a.apply_channel(&ch, &[q]).unwrap();
            b.apply_superop_1q(&s, q).unwrap();
            for (x, y) in a.matrix().iter().zip(b.matrix()) {
                assert!((x - y).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn x_flips_zero_to_one() {
        let mut s = PureState::zero(1);
        s.apply_gate(&GateOp::x(0)).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_gate_leaves_state_unchanged() {
        let mut s = PureState::zero(2);
        s.apply_gate(&GateOp::h(0)).unwrap();
        let before = s.clone();
        let id = GateOp::custom_1q("ID", [c(1.0, 0.0), ZERO, ZERO, c(1.0, 0.0)], 1).unwrap();
        s.apply_gate(&id).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn bell_pair_from_h_and_cnot() {
        let mut s = PureState::zero(2);
        s.apply_gate(&GateOp::h(0)).unwrap();
        s.apply_gate(&GateOp::cnot(0, 1)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amplitudes()[0].re, h, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[3].re, h, epsilon = 1e-12);
        assert!(s.amplitudes()[1].norm() < 1e-12);
        assert!(s.amplitudes()[2].norm() < 1e-12);
    }

    #[test]
    fn gate_then_dagger_restores_input() {
        let mut s = PureState::zero(3);
        for g in [GateOp::h(0), GateOp::sx(1), GateOp::cnot(0, 2), GateOp::ry(1, 0.83)] {
            s.apply_gate(&g).unwrap();
        }
        let before = s.clone();
        let g = GateOp::cswap(0, 1, 2);
        s.apply_gate(&g).unwrap();
        s.apply_gate(&g.dagger()).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn non_unitary_matrix_rejected() {
        let bad = GateOp::new(
            GateLabel::Custom("BAD"),
            vec![c(1.0, 0.0), ZERO, ZERO, c(2.0, 0.0)],
            vec![0],
            1.0,
        );
        assert!(matches!(bad, Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn bond_rotation_matches_three_axis_fragments() {
        use crate::ansatz::{two_local_rotation, Axis};
        let theta = 0.7311;
        let mut a = PureState::zero(3);
        a.apply_gate(&GateOp::h(0)).unwrap();
        a.apply_gate(&GateOp::cnot(0, 2)).unwrap();
        a.apply_gate(&GateOp::ry(1, 0.4)).unwrap();
        let mut b = a.clone();

        a.apply_bond_rotation(theta, 0, 2);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            for g in two_local_rotation(axis, theta, 0, 2).unwrap() {
                b.apply_gate(&g).unwrap();
            }
        }
        let ov = a.overlap(&b).unwrap();
        assert!((ov.norm() - 1.0).abs() < 1e-10, "overlap {ov}");
    }

    #[test]
    fn expectation_of_z_on_plus_is_zero() {
        let spec_z = SparseOperator::from_rows(2, true, |row, out| {
            out.push((row, c(if row == 0 { 1.0 } else { -1.0 }, 0.0)));
        });
        let mut s = PureState::zero(1);
        s.apply_gate(&GateOp::h(0)).unwrap();
        assert_abs_diff_eq!(s.expectation(&spec_z).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ancilla_in_plus_measures_plus_with_certainty() {
        let mut s = PureState::zero(2);
        s.apply_gate(&GateOp::h(1)).unwrap();
        let (p, post) = s.measure_ancilla(1, MeasureBasis::PlusMinus, 0).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        let ov = post.overlap(&s).unwrap();
        assert_abs_diff_eq!(ov.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ancilla_in_zero_measures_plus_half_the_time() {
        let s = PureState::zero(2);
        let (p, _) = s.measure_ancilla(1, MeasureBasis::PlusMinus, 0).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn impossible_outcome_refused() {
        let mut s = PureState::zero(1);
        s.apply_gate(&GateOp::h(0)).unwrap(); // |+>
        let r = s.measure_ancilla(0, MeasureBasis::PlusMinus, 1);
        assert!(matches!(r, Err(Error::ImprobableOutcome(_))));
    }

    #[test]
    fn orthogonal_basis_states_have_zero_overlap() {
        let a = PureState::zero(1);
        let mut b = PureState::zero(1);
        b.apply_gate(&GateOp::x(0)).unwrap();
        assert!(a.overlap(&b).unwrap().norm() < 1e-15);
        assert_abs_diff_eq!(a.overlap(&a).unwrap().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mixed_gate_application_matches_pure() {
        let mut pure = PureState::zero(2);
        let mut mixed = MixedState::zero(2);
        for g in [GateOp::h(0), GateOp::cnot(0, 1), GateOp::rz(1, 0.3)] {
            pure.apply_gate(&g).unwrap();
            mixed.apply_gate(&g).unwrap();
        }
        let target = pure.density();
        for (a, b) in mixed.matrix().iter().zip(target.matrix()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_abs_diff_eq!(mixed.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn full_depolarization_reaches_maximally_mixed() {
        let p = 1.0;
        let ops = depolarizing_ops(p);
        let ch = KrausChannel::new(1, ops).unwrap();
        let mut rho = MixedState::zero(1);
        rho.apply_gate(&GateOp::h(0)).unwrap();
        rho.apply_channel(&ch, &[0]).unwrap();
        assert_abs_diff_eq!(rho.entry(0, 0).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entry(1, 1).re, 0.5, epsilon = 1e-12);
        assert!(rho.entry(0, 1).norm() < 1e-12);
    }

    #[test]
    fn zero_probability_channel_is_identity() {
        let ch = KrausChannel::new(1, depolarizing_ops(0.0)).unwrap();
        let mut rho = MixedState::zero(1);
        rho.apply_gate(&GateOp::sx(0)).unwrap();
        let before = rho.clone();
        rho.apply_channel(&ch, &[0]).unwrap();
        for (a, b) in rho.matrix().iter().zip(before.matrix()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    fn depolarizing_ops(p: f64) -> Vec<Vec<C64>> {
        let s0 = (1.0 - 3.0 * p / 4.0).sqrt();
        let sp = (p / 4.0).sqrt();
        vec![
            vec![c(s0, 0.0), ZERO, ZERO, c(s0, 0.0)],
            vec![ZERO, c(sp, 0.0), c(sp, 0.0), ZERO],
            vec![ZERO, c(0.0, -sp), c(0.0, sp), ZERO],
            vec![c(sp, 0.0), ZERO, ZERO, c(-sp, 0.0)],
        ]
    }

    #[test]
    fn incomplete_channel_rejected() {
        let ops = vec![vec![c(0.5, 0.0), ZERO, ZERO, c(0.5, 0.0)]];
        assert!(matches!(KrausChannel::new(1, ops), Err(Error::IncompleteChannel { .. })));
    }

    #[test]
    fn trace_out_bell_gives_maximally_mixed() {
        let mut s = PureState::zero(2);
        s.apply_gate(&GateOp::h(0)).unwrap();
        s.apply_gate(&GateOp::cnot(0, 1)).unwrap();
        let reduced = s.density().trace_out(1).unwrap();
        assert_abs_diff_eq!(reduced.entry(0, 0).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(reduced.entry(1, 1).re, 0.5, epsilon = 1e-12);
        assert!(reduced.entry(0, 1).norm() < 1e-12);
    }
}
