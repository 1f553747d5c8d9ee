//! Sparse Hamiltonians and symmetry operators of the frustrated spin chain.
//!
//! All operators act on the 2^N dimensional Hilbert space of N spin-1/2 sites
//! with periodic boundary conditions. Basis ordering is little-endian: site r
//! occupies bit r of the basis index, so |q_{N-1} ... q_1 q_0> maps to the
//! integer sum_r q_r 2^r. Bit value 0 means spin up.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Model parameters for the J1-J2 Heisenberg ring.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpinChainSpec {
    /// Number of sites (= qubits). Must be even and >= 4.
    pub n_sites: usize,
    pub j1: f64,
    pub j2: f64,
}

impl SpinChainSpec {
    pub fn new(n_sites: usize, j1: f64, j2: f64) -> Result<Self> {
        if n_sites < 4 || n_sites % 2 != 0 {
            return Err(Error::OddChainLength(n_sites));
        }
        if j1 < 0.0 || j2 < 0.0 {
            return Err(Error::Config(format!(
                "antiferromagnetic couplings must be >= 0, got J1={j1}, J2={j2}"
            )));
        }
        Ok(Self { n_sites, j1, j2 })
    }

    pub fn ratio(&self) -> f64 {
        self.j2 / self.j1
    }
}

/// Compressed sparse row operator on 2^n basis states.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Build row by row. `fill` pushes (col, value) pairs for the given row;
    /// duplicates are merged and zeros dropped.
    pub fn from_rows<F>(dim: usize, hermitian: bool, mut fill: F) -> Self
    where
        F: FnMut(usize, &mut Vec<(usize, C64)>),
    {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols: Vec<u32> = Vec::new();
        let mut vals: Vec<C64> = Vec::new();
        let mut scratch: Vec<(usize, C64)> = Vec::new();
        row_ptr.push(0);
        for row in 0..dim {
            scratch.clear();
            fill(row, &mut scratch);
            scratch.sort_unstable_by_key(|e| e.0);
            let mut i = 0;
            while i < scratch.len() {
                let col = scratch[i].0;
                let mut v = scratch[i].1;
                let mut j = i + 1;
                while j < scratch.len() && scratch[j].0 == col {
                    v += scratch[j].1;
                    j += 1;
                }
                if v.norm_sqr() > 0.0 {
                    cols.push(col as u32);
                    vals.push(v);
                }
                i = j;
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals, hermitian }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for row in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for idx in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.vals[idx] * x[self.cols[idx] as usize];
            }
            y[row] = acc;
        }
    }

    /// Real matvec; valid for operators with purely real entries.
    pub fn matvec_f64(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        for row in 0..self.dim {
            let mut acc = 0.0;
            for idx in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.vals[idx].re * x[self.cols[idx] as usize];
            }
            y[row] = acc;
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |row| {
            (self.row_ptr[row]..self.row_ptr[row + 1])
                .map(move |idx| (row, self.cols[idx] as usize, self.vals[idx]))
        })
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let mut m = nalgebra::DMatrix::from_element(self.dim, self.dim, C64::new(0.0, 0.0));
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn to_dense_real(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            debug_assert!(v.im == 0.0);
            m[(r, c)] += v.re;
        }
        m
    }

    /// Max |A - B| over all entries.
    pub fn max_abs_diff(&self, other: &SparseOperator) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut map: std::collections::HashMap<(usize, usize), C64> = std::collections::HashMap::new();
        for (r, c, v) in self.entries() {
            *map.entry((r, c)).or_insert(C64::new(0.0, 0.0)) += v;
        }
        for (r, c, v) in other.entries() {
            *map.entry((r, c)).or_insert(C64::new(0.0, 0.0)) -= v;
        }
        map.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Hermiticity residual max |A - A^dagger|; used by validation tests.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut map: std::collections::HashMap<(usize, usize), C64> = std::collections::HashMap::new();
        for (r, c, v) in self.entries() {
            *map.entry((r, c)).or_insert(C64::new(0.0, 0.0)) += v;
            *map.entry((c, r)).or_insert(C64::new(0.0, 0.0)) -= v.conj();
        }
        map.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// One-site translation of basis index `s`: bit r moves to bit r+1 (mod n).
#[inline]
pub fn translate_index(s: usize, n: usize) -> usize {
    let mask = (1usize << n) - 1;
    ((s << 1) & mask) | (s >> (n - 1))
}

/// Number of basis states invariant under translation by `m` sites,
/// i.e. Tr(T^m) = 2^gcd(m, n).
pub fn translation_trace(n: usize, m: usize) -> f64 {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    let g = gcd(m % n, n);
    let g = if g == 0 { n } else { g };
    (1u64 << g) as f64
}

/// Heisenberg bond list: (site_a, site_b, coupling). Duplicate pairs merge.
fn canonical_bonds(bonds: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut map: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
    for &(a, b, c) in bonds {
        let key = (a.min(b), a.max(b));
        *map.entry(key).or_insert(0.0) += c;
    }
    map.into_iter().map(|((a, b), c)| (a, b, c)).collect()
}

/// Sum of Heisenberg exchange terms c_ab * S_a . S_b plus a diagonal shift.
pub fn build_heisenberg_bonds(n: usize, bonds: &[(usize, usize, f64)], diag_shift: f64) -> SparseOperator {
    let dim = 1usize << n;
    let bonds = canonical_bonds(bonds);
    SparseOperator::from_rows(dim, true, |row, out| {
        let mut diag = diag_shift;
        for &(a, b, c) in &bonds {
            let ba = (row >> a) & 1;
            let bb = (row >> b) & 1;
            if ba == bb {
                diag += 0.25 * c;
            } else {
                diag -= 0.25 * c;
                // flip-flop term: (S+ S- + S- S+)/2 with amplitude 1/2
                let flipped = row ^ ((1 << a) | (1 << b));
                out.push((flipped, C64::new(0.5 * c, 0.0)));
            }
        }
        if diag != 0.0 {
            out.push((row, C64::new(diag, 0.0)));
        }
    })
}

fn nearest_bonds(n: usize, j: f64) -> Vec<(usize, usize, f64)> {
    (0..n).map(|r| (r, (r + 1) % n, j)).collect()
}

fn next_nearest_bonds(n: usize, j: f64) -> Vec<(usize, usize, f64)> {
    (0..n).map(|r| (r, (r + 2) % n, j)).collect()
}

/// Full J1-J2 Hamiltonian of the ring.
pub fn build_j1j2(spec: &SpinChainSpec) -> SparseOperator {
    let mut bonds = nearest_bonds(spec.n_sites, spec.j1);
    bonds.extend(next_nearest_bonds(spec.n_sites, spec.j2));
    build_heisenberg_bonds(spec.n_sites, &bonds, 0.0)
}

/// Even-bond half of the nearest-neighbor term: sum over pairs (0,1), (2,3), ...
pub fn build_even(spec: &SpinChainSpec) -> Result<SparseOperator> {
    let n = spec.n_sites;
    if n % 2 != 0 {
        return Err(Error::OddChainLength(n));
    }
    let bonds: Vec<_> = (0..n / 2).map(|r| (2 * r, 2 * r + 1, 1.0)).collect();
    Ok(build_heisenberg_bonds(n, &bonds, 0.0))
}

/// Odd-bond half: sum over pairs (1,2), (3,4), ..., (N-1,0).
pub fn build_odd(spec: &SpinChainSpec) -> Result<SparseOperator> {
    let n = spec.n_sites;
    if n % 2 != 0 {
        return Err(Error::OddChainLength(n));
    }
    let bonds: Vec<_> = (0..n / 2).map(|r| (2 * r + 1, (2 * r + 2) % n, 1.0)).collect();
    Ok(build_heisenberg_bonds(n, &bonds, 0.0))
}

/// Majumdar-Ghosh Hamiltonian: the J1-J2 model at J2 = J1/2.
pub fn build_mg(spec: &SpinChainSpec) -> Result<SparseOperator> {
    let mg = SpinChainSpec::new(spec.n_sites, spec.j1, spec.j1 / 2.0)?;
    Ok(build_j1j2(&mg))
}

/// Next-nearest-neighbor term sum_r S_r . S_{r+2} with unit coupling.
pub fn build_nnn(spec: &SpinChainSpec) -> Result<SparseOperator> {
    if spec.n_sites % 2 != 0 {
        return Err(Error::OddChainLength(spec.n_sites));
    }
    Ok(build_heisenberg_bonds(spec.n_sites, &next_nearest_bonds(spec.n_sites, 1.0), 0.0))
}

/// Total spin squared S^2 = (sum_r S_r)^2 = 3N/4 + 2 sum_{i<j} S_i . S_j.
pub fn build_total_spin_sq(n: usize) -> SparseOperator {
    assert!(n >= 2);
    let mut bonds = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            bonds.push((i, j, 2.0));
        }
    }
    build_heisenberg_bonds(n, &bonds, 0.75 * n as f64)
}

/// One-site translation operator as a permutation matrix: T e_s = e_{rot(s)}.
pub fn build_translation(n: usize) -> SparseOperator {
    assert!(n >= 2);
    let dim = 1usize << n;
    // row rot(s) has a 1 in column s; invert the rotation to fill by row
    SparseOperator::from_rows(dim, false, |row, out| {
        let mask = dim - 1;
        let src = ((row >> 1) | (row << (n - 1))) & mask;
        out.push((src, C64::new(1.0, 0.0)));
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translate_index_rotates_bits() {
        // 4 sites: |0001> (site 0 down) -> |0010> (site 1 down)
        assert_eq!(translate_index(0b0001, 4), 0b0010);
        assert_eq!(translate_index(0b1000, 4), 0b0001);
        assert_eq!(translate_index(0b1010, 4), 0b0101);
    }

    #[test]
    fn translation_matrix_matches_index_map() {
        let n = 4;
        let t = build_translation(n);
        for s in 0..(1usize << n) {
            let mut x = vec![C64::new(0.0, 0.0); 1 << n];
            x[s] = C64::new(1.0, 0.0);
            let y = t.matvec(&x);
            for (i, v) in y.iter().enumerate() {
                let expect = if i == translate_index(s, n) { 1.0 } else { 0.0 };
                assert!((v.re - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn translation_has_order_n() {
        let n = 6;
        let t = build_translation(n);
        let dim = 1usize << n;
        for s in 0..dim {
            let mut x = vec![C64::new(0.0, 0.0); dim];
            x[s] = C64::new(1.0, 0.0);
            for _ in 0..n {
                x = t.matvec(&x);
            }
            assert!((x[s].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_couplings_give_zero_operator() {
        let spec = SpinChainSpec::new(4, 0.0, 0.0).unwrap();
        let h = build_j1j2(&spec);
        assert_eq!(h.nnz(), 0);
    }

    #[test]
    fn even_plus_odd_equals_nearest_neighbor_part() {
        let spec = SpinChainSpec::new(6, 1.0, 0.0).unwrap();
        let h = build_j1j2(&spec);
        let he = build_even(&spec).unwrap();
        let ho = build_odd(&spec).unwrap();
        let sum = SparseOperator::from_rows(h.dim(), true, |row, out| {
            for (r, c, v) in he.entries().chain(ho.entries()) {
                if r == row {
                    out.push((c, v));
                }
            }
        });
        assert!(h.max_abs_diff(&sum) < 1e-14);
    }

    #[test]
    fn mg_decomposition_identity() {
        // H_{J1-J2} = H_MG + (J2 - J1/2) H_nnn, checked elementwise
        let spec = SpinChainSpec::new(6, 1.0, 0.8).unwrap();
        let h = build_j1j2(&spec);
        let mg = build_mg(&spec).unwrap();
        let nnn = build_nnn(&spec).unwrap();
        let coeff = spec.j2 - spec.j1 / 2.0;
        let combo = SparseOperator::from_rows(h.dim(), true, |row, out| {
            for (r, c, v) in mg.entries() {
                if r == row {
                    out.push((c, v));
                }
            }
            for (r, c, v) in nnn.entries() {
                if r == row {
                    out.push((c, v * coeff));
                }
            }
        });
        assert!(h.max_abs_diff(&combo) < 1e-12);
    }

    #[test]
    fn nnn_equals_j1j2_with_swapped_couplings() {
        let spec = SpinChainSpec::new(4, 1.0, 0.0).unwrap();
        let nnn = build_nnn(&spec).unwrap();
        let alt = build_j1j2(&SpinChainSpec::new(4, 0.0, 1.0).unwrap());
        assert!(nnn.max_abs_diff(&alt) < 1e-15);
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let spec = SpinChainSpec::new(6, 1.0, 0.3).unwrap();
        for op in [
            build_j1j2(&spec),
            build_even(&spec).unwrap(),
            build_odd(&spec).unwrap(),
            build_mg(&spec).unwrap(),
            build_total_spin_sq(6),
        ] {
            assert!(op.hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn translation_trace_counts_fixed_points() {
        // brute-force oracle: count basis states invariant under T^m
        for n in [4usize, 6] {
            for m in 1..n {
                let mut count = 0u64;
                for s in 0..(1usize << n) {
                    let mut t = s;
                    for _ in 0..m {
                        t = translate_index(t, n);
                    }
                    if t == s {
                        count += 1;
                    }
                }
                assert_eq!(count as f64, translation_trace(n, m), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn odd_size_rejected() {
        assert!(SpinChainSpec::new(5, 1.0, 0.0).is_err());
        assert!(SpinChainSpec::new(2, 1.0, 0.0).is_err());
    }
}
