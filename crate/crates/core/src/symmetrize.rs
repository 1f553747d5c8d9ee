//! Momentum projection by linear combination of unitaries.
//!
//! The two-site-translation-invariant ansatz states are split into momentum
//! sectors k = 0, pi of the one-site translation T by the projector
//! (1 + e^{ik} T)/2, realized either exactly on the state vector or through
//! an ancilla circuit with a controlled translation. The general cyclic
//! symmetrizer Gamma_G = sum_a conj(chi_a) g_a covers higher group orders.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};

use crate::ansatz::{hva_program, init_params_gaussian, prepare_triplet_w, CircuitIR, HvaConfig, Scheme};
use crate::error::{Error, Result};
use crate::operators::{translation_trace, SparseOperator};
use crate::state::{GateOp, MeasureBasis, PureState};

/// Momentum label; for the order-2 translation family only k = 0 and k = pi
/// appear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumSector {
    pub k: f64,
}

impl MomentumSector {
    pub const ZERO: Self = Self { k: 0.0 };
    pub const PI: Self = Self { k: std::f64::consts::PI };

    /// k = 2 pi n / order
    pub fn new(n: i64, order: usize) -> Self {
        Self { k: 2.0 * std::f64::consts::PI * n as f64 / order as f64 }
    }

    pub fn phase(&self) -> C64 {
        C64::from_polar(1.0, self.k)
    }
}

fn t2_residual(state: &PureState) -> f64 {
    let t2 = state.translated().translated();
    state
        .amplitudes()
        .iter()
        .zip(t2.amplitudes())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// p_{s,k} = (1 + e^{ik} <T>)/2 for a pure state.
pub fn success_probability(state: &PureState, k: MomentumSector) -> Result<f64> {
    let t = state.translated();
    let ov = state.overlap(&t)?;
    let p = 0.5 * (1.0 + (k.phase() * ov).re);
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(Error::Config(format!("success probability {p} out of range")));
    }
    Ok(p)
}

/// Exact state-level projection onto the momentum-k sector of T.
///
/// Returns the normalized state (|psi> + e^{ik} T|psi>)/norm and the success
/// probability of the corresponding LCU measurement.
pub fn project_momentum_exact(state: &PureState, k: MomentumSector) -> Result<(PureState, f64)> {
    let residual = t2_residual(state);
    if residual > 1e-8 {
        return Err(Error::NotTranslationInvariant(residual));
    }
    let p = success_probability(state, k)?;
    if p < 1e-12 {
        return Err(Error::SectorEmpty);
    }
    let t = state.translated();
    let eik = k.phase();
    let amps: Vec<C64> = state
        .amplitudes()
        .iter()
        .zip(t.amplitudes())
        .map(|(a, b)| a + eik * b)
        .collect();
    let mut out = PureState::from_amplitudes(state.n_qubits(), amps)?;
    out.normalize();
    Ok((out, p))
}

/// Gate sequence for the translation T on `n` register qubits controlled by
/// `ancilla`: N-1 controlled swaps of adjacent sites.
pub fn controlled_translation(n: usize, ancilla: usize) -> Vec<GateOp> {
    (0..n - 1).rev().map(|r| GateOp::cswap(ancilla, r, r + 1)).collect()
}

/// Append the LCU machinery to a state-preparation circuit: one extra ancilla
/// in |+>, a controlled translation, and a pending {|+>, |->} measurement
/// (outcome "+" selects k = 0, "-" selects k = pi).
pub fn lcu_ancilla_circuit(base: &CircuitIR) -> CircuitIR {
    let n = base.n_qubits;
    let mut c = CircuitIR::new(n + 1);
    c.extend(base.gates().iter().cloned());
    c.mark_layer();
    c.push(GateOp::h(n));
    c.extend(controlled_translation(n, n));
    c.ancilla = Some(n);
    c
}

/// Extend a register state with one fresh ancilla qubit in |0> (highest bit).
pub fn with_ancilla(state: &PureState) -> PureState {
    let n = state.n_qubits();
    let mut amps = vec![C64::new(0.0, 0.0); 1 << (n + 1)];
    amps[..1 << n].copy_from_slice(state.amplitudes());
    PureState::from_amplitudes(n + 1, amps).unwrap()
}

/// Run the noiseless LCU projection through the ancilla circuit: returns the
/// ancilla outcome probability and the post-selected register state.
pub fn lcu_project_via_circuit(state: &PureState, k: MomentumSector) -> Result<(f64, PureState)> {
    let n = state.n_qubits();
    let mut full = with_ancilla(state);
    full.apply_gate(&GateOp::h(n))?;
    for g in controlled_translation(n, n) {
        full.apply_gate(&g)?;
    }
    let outcome = if k.phase().re > 0.0 { 0 } else { 1 };
    let (p, post) = full.measure_ancilla(n, MeasureBasis::PlusMinus, outcome)?;
    Ok((p, post.remove_ancilla(n)?))
}

/// Cyclic LCU symmetrizer Gamma_G = sum_a conj(chi_a) g_a with characters
/// chi_a = e^{-ika}.
#[derive(Debug, Clone)]
pub struct GroupSymmetrizer {
    order: usize,
    characters: Vec<C64>,
    unitaries: Vec<SparseOperator>,
}

impl GroupSymmetrizer {
    pub fn new(characters: Vec<C64>, unitaries: Vec<SparseOperator>) -> Result<Self> {
        if characters.is_empty() || characters.len() != unitaries.len() {
            return Err(Error::Config("characters and unitaries must have equal nonzero length".into()));
        }
        if characters.iter().any(|c| c.norm() > 1.0 + 1e-12) {
            return Err(Error::Config("characters must have modulus <= 1".into()));
        }
        let dim = unitaries[0].dim();
        if unitaries.iter().any(|u| u.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: 0 });
        }
        Ok(Self { order: characters.len(), characters, unitaries })
    }

    /// Group {T^a : a < order} with chi_a = e^{-ika}, k = 2 pi n_k / order.
    pub fn cyclic_translation(n_sites: usize, order: usize, k: f64) -> Result<Self> {
        if order < 1 || order > n_sites {
            return Err(Error::Config(format!("group order {order} invalid for {n_sites} sites")));
        }
        let dim = 1usize << n_sites;
        let mut characters = Vec::with_capacity(order);
        let mut unitaries = Vec::with_capacity(order);
        for a in 0..order {
            characters.push(C64::from_polar(1.0, -k * a as f64));
            let t_pow = SparseOperator::from_rows(dim, false, |row, out| {
                // T^a e_s = e_{rot^a(s)}; row r receives column s with rot^a(s) = r
                let mut src = row;
                for _ in 0..a {
                    // inverse rotation
                    let mask = dim - 1;
                    src = ((src >> 1) | (src << (n_sites - 1))) & mask;
                }
                out.push((src, C64::new(1.0, 0.0)));
            });
            unitaries.push(t_pow);
        }
        Self::new(characters, unitaries)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn characters(&self) -> &[C64] {
        &self.characters
    }

    pub fn unitaries(&self) -> &[SparseOperator] {
        &self.unitaries
    }

    pub fn ancilla_count(&self) -> usize {
        usize::BITS as usize - (self.order - 1).leading_zeros() as usize
    }

    /// First column of the ancilla preparation R: amplitude
    /// sqrt(conj(chi_a) / sum |chi|) on |a>, zero elsewhere, normalized.
    /// Only this column is contracted; any unitary completion is acceptable.
    pub fn r_hat_first_column(&self) -> Vec<C64> {
        let total: f64 = self.characters.iter().map(|c| c.norm()).sum();
        let mut col = vec![C64::new(0.0, 0.0); 1 << self.ancilla_count()];
        for (a, chi) in self.characters.iter().enumerate() {
            col[a] = (chi.conj() / total).sqrt();
        }
        let norm: f64 = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut col {
            *c /= norm;
        }
        col
    }
}

/// Apply the group symmetrizer: returns Gamma_G |psi> normalized and the LCU
/// success probability
/// p_s = [sum |chi_a|^2 + 2 sum_{b>a} Re(chi_a conj(chi_b) <g_a psi|g_b psi>)]
///       / (sum |chi_a|)^2.
pub fn general_symmetrize(sym: &GroupSymmetrizer, state: &PureState) -> Result<(PureState, f64)> {
    let dim = state.dim();
    if sym.unitaries[0].dim() != dim {
        return Err(Error::DimensionMismatch { expected: sym.unitaries[0].dim(), got: dim });
    }
    let images: Vec<Vec<C64>> = sym.unitaries.iter().map(|u| u.matvec(state.amplitudes())).collect();

    let mut numer: f64 = sym.characters.iter().map(|c| c.norm_sqr()).sum();
    for a in 0..sym.order {
        for b in a + 1..sym.order {
            let ov: C64 = images[a].iter().zip(&images[b]).map(|(x, y)| x.conj() * y).sum();
            numer += 2.0 * (sym.characters[a] * sym.characters[b].conj() * ov).re;
        }
    }
    let total: f64 = sym.characters.iter().map(|c| c.norm()).sum();
    let p_s = numer / (total * total);

    let mut gamma = vec![C64::new(0.0, 0.0); dim];
    for (chi, img) in sym.characters.iter().zip(&images) {
        let w = chi.conj();
        for (g, v) in gamma.iter_mut().zip(img) {
            *g += w * v;
        }
    }
    let norm: f64 = gamma.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::SectorEmpty);
    }
    for g in &mut gamma {
        *g /= norm;
    }
    Ok((PureState::from_amplitudes(state.n_qubits(), gamma)?, p_s))
}

/// Analytic ensemble average of the LCU success probability under the
/// unitary 1-design approximation:
/// p_bar = 1/A + sum_{b>a} cos[k(b-a)] Tr(T^{b-a}) / (2^{N-1} A^2).
pub fn analytic_mean_success(order: usize, n_sites: usize, k: f64) -> f64 {
    let a = order as f64;
    let mut p = 1.0 / a;
    for m in 1..order {
        let pairs = (order - m) as f64;
        let tr = translation_trace(n_sites, m);
        p += pairs * (k * m as f64).cos() * tr / (2f64.powi(n_sites as i32 - 1) * a * a);
    }
    p
}

/// Monte-Carlo estimate of the mean success probability over
/// Gaussian-initialized ansatz states (triplet preparation, k = pi), with
/// the analytic 1-design prediction alongside.
#[derive(Debug, Clone, Copy)]
pub struct MeanSuccess {
    pub mean: f64,
    pub stderr: f64,
    pub analytic: f64,
}

pub fn mean_success_probability(order: usize, n_sites: usize, n_samples: usize, seed: u64) -> Result<MeanSuccess> {
    if n_samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let k = std::f64::consts::PI;
    let layers = n_sites / 2;
    let config = HvaConfig::new(n_sites, layers, Scheme::EvenOdd)?;
    let program = hva_program(&config);
    let base = prepare_triplet_w(n_sites)?.run()?;

    let mut seeder = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    let mut acc2 = 0.0;
    for _ in 0..n_samples {
        let params = init_params_gaussian(layers, seeder.gen());
        let mut state = base.clone();
        program.apply(&params, &mut state)?;

        // p_s via powers of T applied to the state directly
        let a = order as f64;
        let mut p = 1.0 / a;
        let mut shifted = state.clone();
        for m in 1..order {
            shifted = shifted.translated();
            let ov = state.overlap(&shifted)?;
            let pairs = (order - m) as f64;
            p += 2.0 * pairs * (C64::from_polar(1.0, k * m as f64) * ov).re / (a * a);
        }
        acc += p;
        acc2 += p * p;
    }
    let mean = acc / n_samples as f64;
    let var = (acc2 / n_samples as f64 - mean * mean).max(0.0);
    let stderr = (var / n_samples as f64).sqrt();
    Ok(MeanSuccess { mean, stderr, analytic: analytic_mean_success(order, n_sites, k) })
}
