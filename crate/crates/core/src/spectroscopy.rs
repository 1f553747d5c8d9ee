//! Frustration-ratio scans and level-crossing detection.
//!
//! The phase transition of the ring shows up at small N as a crossing
//! between the lowest singlet and triplet excitations at momentum pi: the
//! triplet lies lower in the fluid phase, the singlet in the dimerized
//! phase. A scan runs one pipeline (exact diagonalization, noiseless VQE,
//! noisy VQE, or mitigated VQE) over a grid of J2/J1 values and the sector
//! list, and the crossing is read off from the sign change of the gap.
//!
//! Noisy cells pick their penalty weight per ratio: the smallest lambda
//! from a short grid whose optimum keeps the survival probability above a
//! floor. That mirrors hardware practice, where the weight is tuned until
//! post-selection stops discarding the run.

use sha2::{Digest, Sha256};

use crate::ansatz::{HvaConfig, Scheme};
use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::operators::SpinChainSpec;
use crate::spectrum::lowest_in_sector;
use crate::vqe::{Backend, OptimizerConfig, SectorProblem, SectorResult, SectorSpec};
use crate::zne::{mitigate, ZneConfig};

/// Thermodynamic-limit critical ratio used as the reference for deviations.
pub const CRITICAL_RATIO_REFERENCE: f64 = 0.24116;

/// Which pipeline produced a scan row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Ed,
    Vqe,
    Noisy,
    Zne,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Mode::Ed => "ed",
            Mode::Vqe => "vqe",
            Mode::Noisy => "noisy",
            Mode::Zne => "zne",
        };
        f.write_str(s)
    }
}

/// Shared settings for every cell of a scan.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub n_sites: usize,
    pub layers: usize,
    pub scheme: Scheme,
    pub optimizer: OptimizerConfig,
    pub noise: NoiseParams,
    pub zne: ZneConfig,
    /// Candidate penalty weights for noisy cells, tried in ascending order.
    pub lambda_grid: Vec<f64>,
    /// Smallest acceptable final survival probability for a noisy cell.
    pub survival_floor: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_sites: 4,
            layers: 1,
            scheme: Scheme::EvenOdd,
            optimizer: OptimizerConfig::default(),
            noise: NoiseParams::default(),
            zne: ZneConfig::default(),
            lambda_grid: vec![0.01, 0.05, 0.1],
            survival_floor: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScanRow {
    pub ratio: f64,
    pub sector: SectorSpec,
    pub mode: Mode,
    pub energy: f64,
    pub p_s: f64,
    /// Penalty weight the cell settled on; 0 outside noisy pipelines.
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScanFailure {
    pub ratio: f64,
    pub sector: SectorSpec,
    pub message: String,
}

/// Reproducibility stamp: hash of the full scan request plus the base seed.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub failures: Vec<ScanFailure>,
    pub provenance: Provenance,
}

impl ScanTable {
    /// Rows of one sector and mode, sorted by ratio.
    pub fn series(&self, sector: SectorSpec, mode: Mode) -> Vec<ScanRow> {
        let mut out: Vec<ScanRow> = self
            .rows
            .iter()
            .filter(|r| r.mode == mode && r.sector == sector)
            .copied()
            .collect();
        out.sort_by(|a, b| a.ratio.partial_cmp(&b.ratio).unwrap());
        out
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CrossingEstimate {
    pub ratio_star: f64,
    pub method: Mode,
    /// Grid interval whose endpoints bracket the sign change.
    pub bracket: (f64, f64),
    pub reference: f64,
    /// |ratio_star - reference| / reference.
    pub relative_deviation: f64,
}

fn hash_request(grid: &[f64], sectors: &[SectorSpec], mode: Mode, config: &ScanConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{grid:?}|{sectors:?}|{mode:?}|{config:?}"));
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Run one noisy cell: smallest lambda from the grid that keeps the final
/// survival probability above the floor, falling back to the largest.
fn noisy_cell(
    problem: &SectorProblem,
    config: &ScanConfig,
) -> Result<(SectorResult, f64)> {
    let backend = Backend::Mixed { noise: config.noise };
    let mut lambdas = config.lambda_grid.clone();
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut last: Option<(SectorResult, f64)> = None;
    for lambda in lambdas {
        let opt = OptimizerConfig { lambda, ..config.optimizer };
        let r = problem.minimize(&backend, &opt)?;
        let good = r.p_s >= config.survival_floor;
        last = Some((r, lambda));
        if good {
            break;
        }
    }
    last.ok_or_else(|| Error::Config("empty lambda grid for noisy scan".into()))
}

fn scan_cell(
    ratio: f64,
    sector: SectorSpec,
    mode: Mode,
    config: &ScanConfig,
) -> Result<ScanRow> {
    let chain = SpinChainSpec::new(config.n_sites, 1.0, ratio)?;
    if let Mode::Ed = mode {
        let energy = lowest_in_sector(&chain, sector.spin, sector.momentum_index(config.n_sites))?;
        return Ok(ScanRow { ratio, sector, mode, energy, p_s: 1.0, lambda: 0.0 });
    }
    let ansatz = HvaConfig::new(config.n_sites, config.layers, config.scheme)?;
    let problem = SectorProblem::new(chain, ansatz, sector)?;
    match mode {
        Mode::Ed => unreachable!(),
        Mode::Vqe => {
            let r = problem.minimize(&Backend::Pure, &config.optimizer)?;
            Ok(ScanRow { ratio, sector, mode, energy: r.energy, p_s: r.p_s, lambda: config.optimizer.lambda })
        }
        Mode::Noisy => {
            let (r, lambda) = noisy_cell(&problem, config)?;
            Ok(ScanRow { ratio, sector, mode, energy: r.energy, p_s: r.p_s, lambda })
        }
        Mode::Zne => {
            let (r, lambda) = noisy_cell(&problem, config)?;
            let fit = mitigate(&problem, &r.theta_star, &config.noise, &config.zne)?;
            Ok(ScanRow { ratio, sector, mode, energy: fit.extrapolated, p_s: r.p_s, lambda })
        }
    }
}

/// Scan the ratio grid across the sector list with one pipeline.
///
/// Cell failures do not abort the scan; they are recorded in the table so a
/// long sweep survives isolated non-convergence.
pub fn scan(
    grid: &[f64],
    sectors: &[SectorSpec],
    mode: Mode,
    config: &ScanConfig,
) -> Result<ScanTable> {
    if grid.is_empty() {
        return Err(Error::Config("scan grid is empty".into()));
    }
    config.optimizer.validate()?;
    let provenance = Provenance {
        config_hash: hash_request(grid, sectors, mode, config),
        seed: config.optimizer.seed,
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &ratio in grid {
        for &sector in sectors {
            match scan_cell(ratio, sector, mode, config) {
                Ok(row) => rows.push(row),
                Err(e) => failures.push(ScanFailure { ratio, sector, message: e.to_string() }),
            }
        }
    }
    Ok(ScanTable { rows, failures, provenance })
}

/// Locate the sign change of E_a - E_b and interpolate linearly inside the
/// bracketing grid interval.
pub fn find_crossing(
    table: &ScanTable,
    mode: Mode,
    sector_a: SectorSpec,
    sector_b: SectorSpec,
) -> Result<CrossingEstimate> {
    let a = table.series(sector_a, mode);
    let b = table.series(sector_b, mode);
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Config("crossing needs both sectors at >= 2 ratios".into()));
    }
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    for ra in &a {
        if let Some(rb) = b.iter().find(|rb| rb.ratio == ra.ratio) {
            gaps.push((ra.ratio, ra.energy - rb.energy));
        }
    }
    if gaps.len() < 2 {
        return Err(Error::Config("sectors share fewer than 2 grid ratios".into()));
    }
    for w in gaps.windows(2) {
        let (r0, g0) = w[0];
        let (r1, g1) = w[1];
        if g0 == 0.0 {
            return Ok(estimate(r0, (r0, r1), mode));
        }
        if g0 * g1 < 0.0 {
            let ratio_star = r0 - g0 * (r1 - r0) / (g1 - g0);
            return Ok(estimate(ratio_star, (r0, r1), mode));
        }
    }
    if let Some(&(r, g)) = gaps.last() {
        if g == 0.0 {
            let prev = gaps[gaps.len() - 2].0;
            return Ok(estimate(r, (prev, r), mode));
        }
    }
    Err(Error::NoCrossing)
}

fn estimate(ratio_star: f64, bracket: (f64, f64), method: Mode) -> CrossingEstimate {
    CrossingEstimate {
        ratio_star,
        method,
        bracket,
        reference: CRITICAL_RATIO_REFERENCE,
        relative_deviation: (ratio_star - CRITICAL_RATIO_REFERENCE).abs() / CRITICAL_RATIO_REFERENCE,
    }
}

/// Evenly spaced ratio grid including both endpoints.
pub fn ratio_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::Config("grid needs stop >= start and step > 0".into()));
    }
    let n = ((stop - start) / step).round() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vqe::GradientMethod;
    use approx::assert_abs_diff_eq;

    fn synthetic_table(gap: impl Fn(f64) -> f64, grid: &[f64]) -> ScanTable {
        let mut rows = Vec::new();
        for &ratio in grid {
            rows.push(ScanRow {
                ratio,
                sector: SectorSpec::SINGLET_PI,
                mode: Mode::Ed,
                energy: gap(ratio),
                p_s: 1.0,
                lambda: 0.0,
            });
            rows.push(ScanRow {
                ratio,
                sector: SectorSpec::TRIPLET_PI,
                mode: Mode::Ed,
                energy: 0.0,
                p_s: 1.0,
                lambda: 0.0,
            });
        }
        ScanTable {
            rows,
            failures: Vec::new(),
            provenance: Provenance { config_hash: String::new(), seed: 0 },
        }
    }

    #[test]
    fn synthetic_linear_gap_crosses_exactly() {
        let grid = ratio_grid(0.0, 0.4, 0.1).unwrap();
        let table = synthetic_table(|r| r - 0.2, &grid);
        let c = find_crossing(&table, Mode::Ed, SectorSpec::SINGLET_PI, SectorSpec::TRIPLET_PI)
            .unwrap();
        assert_abs_diff_eq!(c.ratio_star, 0.2, epsilon = 1e-12);
        assert!(c.bracket.0 <= c.ratio_star && c.ratio_star <= c.bracket.1);
    }

    #[test]
    fn monotone_gap_without_sign_change_reports_no_crossing() {
        let grid = ratio_grid(0.0, 0.4, 0.1).unwrap();
        let table = synthetic_table(|r| r + 1.0, &grid);
        let e = find_crossing(&table, Mode::Ed, SectorSpec::SINGLET_PI, SectorSpec::TRIPLET_PI);
        assert!(matches!(e, Err(Error::NoCrossing)));
    }

    #[test]
    fn empty_sector_list_gives_empty_table() {
        let table = scan(&[0.2], &[], Mode::Ed, &ScanConfig::default()).unwrap();
        assert!(table.rows.is_empty());
        assert!(table.failures.is_empty());
        assert!(scan(&[], &[SectorSpec::SINGLET_PI], Mode::Ed, &ScanConfig::default()).is_err());
    }

    #[test]
    fn ed_scan_has_single_sign_change_and_known_crossing() {
        let grid = ratio_grid(0.15, 0.35, 0.01).unwrap();
        let sectors = [SectorSpec::SINGLET_PI, SectorSpec::TRIPLET_PI];
        let table = scan(&grid, &sectors, Mode::Ed, &ScanConfig::default()).unwrap();
        assert!(table.failures.is_empty());
        assert_eq!(table.rows.len(), grid.len() * 2);

        let a = table.series(SectorSpec::SINGLET_PI, Mode::Ed);
        let b = table.series(SectorSpec::TRIPLET_PI, Mode::Ed);
        let gaps: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.energy - y.energy).collect();
        let sign_changes = gaps.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert_eq!(sign_changes, 1);

        let c = find_crossing(&table, Mode::Ed, SectorSpec::SINGLET_PI, SectorSpec::TRIPLET_PI)
            .unwrap();
        assert!((c.ratio_star - 0.25).abs() <= 0.005, "ratio_star {}", c.ratio_star);
        assert!((c.relative_deviation - 0.036).abs() < 0.01, "dev {}", c.relative_deviation);
    }

    #[test]
    fn ed_crossing_invariant_under_grid_refinement() {
        let sectors = [SectorSpec::SINGLET_PI, SectorSpec::TRIPLET_PI];
        let mut stars = Vec::new();
        for step in [0.005, 0.0025] {
            let grid = ratio_grid(0.2, 0.3, step).unwrap();
            let table = scan(&grid, &sectors, Mode::Ed, &ScanConfig::default()).unwrap();
            let c = find_crossing(&table, Mode::Ed, SectorSpec::SINGLET_PI, SectorSpec::TRIPLET_PI)
                .unwrap();
            stars.push(c.ratio_star);
        }
        assert!((stars[0] - stars[1]).abs() < 1e-3);
    }

    #[test]
    fn noiseless_vqe_cells_match_ed() {
        let config = ScanConfig {
            optimizer: OptimizerConfig {
                gradient: GradientMethod::Adjoint,
                ..Default::default()
            },
            ..Default::default()
        };
        let grid = [0.15, 0.25, 0.35];
        let sectors = [SectorSpec::SINGLET_ZERO, SectorSpec::SINGLET_PI, SectorSpec::TRIPLET_PI];
        let vqe = scan(&grid, &sectors, Mode::Vqe, &config).unwrap();
        let ed = scan(&grid, &sectors, Mode::Ed, &config).unwrap();
        assert!(vqe.failures.is_empty());
        for (v, e) in vqe.rows.iter().zip(&ed.rows) {
            assert_eq!(v.ratio, e.ratio);
            let rel = ((v.energy - e.energy) / e.energy).abs();
            assert!(rel <= 1e-4, "ratio {} sector {:?}: rel {}", v.ratio, v.sector, rel);
        }
    }

    #[test]
    fn provenance_hash_tracks_the_request() {
        let config = ScanConfig::default();
        let t1 = scan(&[0.2], &[SectorSpec::SINGLET_PI], Mode::Ed, &config).unwrap();
        let t2 = scan(&[0.2], &[SectorSpec::SINGLET_PI], Mode::Ed, &config).unwrap();
        let t3 = scan(&[0.21], &[SectorSpec::SINGLET_PI], Mode::Ed, &config).unwrap();
        assert_eq!(t1.provenance.config_hash, t2.provenance.config_hash);
        assert_ne!(t1.provenance.config_hash, t3.provenance.config_hash);
        assert_eq!(t1.provenance.config_hash.len(), 64);
    }
}
