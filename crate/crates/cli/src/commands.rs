//! Subcommand implementations.
//!
//! Every command computes its full result in memory first and only then
//! writes files, so a failed run leaves no partial outputs. All outputs
//! carry the config hash and the effective seed; identical config and seed
//! give byte-identical files.
//!
//! The run seed propagates into the optimizer and the Monte-Carlo sampler,
//! overriding any seed in the [optimizer] section; one number reproduces
//! the whole run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use levelcross::ansatz::HvaConfig;
use levelcross::operators::SpinChainSpec;
use levelcross::spectroscopy::{
    find_crossing, scan, CrossingEstimate, Mode, ScanConfig, ScanTable,
};
use levelcross::spectrum::{exact_spectrum, lowest_in_sector};
use levelcross::symmetrize::mean_success_probability;
use levelcross::vqe::{Backend, OptimizerConfig, SectorProblem, SectorResult, SectorSpec};
use levelcross::zne::{mitigate, ZneResult};
use levelcross::{Error, Result};

use crate::config::RunConfig;

pub struct Ctx {
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub verbose: bool,
}

impl Ctx {
    fn csv_header(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }

    fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig { seed: self.seed, ..self.config.optimizer }
    }

    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("{msg}");
        }
    }

    fn write(&self, name: &str, content: &str) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| Error::Config(format!("cannot create {}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        self.log(&format!("wrote {}", path.display()));
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, data: &T) -> Result<()> {
        let wrapped = serde_json::json!({
            "provenance": { "config_hash": self.config_hash, "seed": self.seed },
            "data": data,
        });
        let text = serde_json::to_string_pretty(&wrapped)
            .map_err(|e| Error::Config(format!("serialize {name}: {e}")))?;
        self.write(name, &(text + "\n"))
    }

    fn sectors(&self) -> Result<Vec<SectorSpec>> {
        let specs = self.config.sector_specs()?;
        if specs.is_empty() {
            return Err(Error::Config("this command needs at least one [[sectors]] entry".into()));
        }
        Ok(specs)
    }

    fn problem(&self, j2: f64, sector: SectorSpec) -> Result<SectorProblem> {
        let ansatz = self.config.ansatz_section()?;
        let chain = SpinChainSpec::new(self.config.model.n_sites, self.config.model.j1, j2)?;
        let hva = HvaConfig::new(self.config.model.n_sites, ansatz.layers, ansatz.scheme)?;
        SectorProblem::new(chain, hva, sector)
    }
}

pub fn cmd_ed(ctx: &Ctx) -> Result<()> {
    let grid = ctx.config.ratio_grid()?;
    let mut out = ctx.csv_header();
    out.push_str("ratio,level,energy,spin,momentum_index,momentum,degeneracy\n");
    for &ratio in &grid {
        let chain = SpinChainSpec::new(ctx.config.model.n_sites, ctx.config.model.j1, ratio)?;
        let levels = exact_spectrum(&chain, ctx.config.ed.n_levels)?;
        for (i, l) in levels.iter().enumerate() {
            writeln!(
                out,
                "{ratio},{i},{},{},{},{},{}",
                l.energy, l.spin, l.momentum_index, l.momentum, l.degeneracy
            )
            .unwrap();
        }
    }
    ctx.write("ed.csv", &out)
}

pub fn cmd_vqe(ctx: &Ctx) -> Result<()> {
    let j2 = ctx.config.single_j2()?;
    let backend = ctx.config.backend.to_backend();
    let opt = ctx.optimizer();
    let sectors = ctx.sectors()?;
    let results: Vec<SectorResult> = sectors
        .par_iter()
        .map(|&sector| {
            ctx.log(&format!("vqe sector S={} k_index={}", sector.spin, sector.momentum_index(ctx.config.model.n_sites)));
            ctx.problem(j2, sector)?.minimize(&backend, &opt)
        })
        .collect::<Result<_>>()?;
    ctx.write_json("vqe.json", &results)
}

fn scan_config(ctx: &Ctx) -> Result<ScanConfig> {
    let ansatz = if ctx.config.scan.mode == Mode::Ed {
        None
    } else {
        Some(ctx.config.ansatz_section()?)
    };
    let defaults = ScanConfig::default();
    Ok(ScanConfig {
        n_sites: ctx.config.model.n_sites,
        layers: ansatz.map_or(defaults.layers, |a| a.layers),
        scheme: ansatz.map_or(defaults.scheme, |a| a.scheme),
        optimizer: ctx.optimizer(),
        noise: ctx.config.backend.noise(),
        zne: ctx.config.zne.clone(),
        lambda_grid: ctx.config.scan.lambda_grid.clone(),
        survival_floor: ctx.config.scan.survival_floor,
    })
}

#[derive(Serialize)]
#[serde(untagged)]
enum CrossingOutput {
    Found(CrossingEstimate),
    None { crossing: Option<()>, note: String },
}

pub fn cmd_scan(ctx: &Ctx) -> Result<()> {
    let grid = ctx.config.ratio_grid()?;
    let sectors = ctx.sectors()?;
    let config = scan_config(ctx)?;
    let mode = ctx.config.scan.mode;
    let table: ScanTable = scan(&grid, &sectors, mode, &config)?;

    let mut out = ctx.csv_header();
    out.push_str("ratio,spin,momentum_index,mode,energy,p_s,lambda\n");
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.ratio,
            r.sector.spin,
            r.sector.momentum_index(config.n_sites),
            r.mode,
            r.energy,
            r.p_s,
            r.lambda
        )
        .unwrap();
    }
    for f in &table.failures {
        writeln!(out, "# failed ratio={} spin={}: {}", f.ratio, f.sector.spin, f.message).unwrap();
    }

    let singlet = SectorSpec::SINGLET_PI;
    let triplet = SectorSpec::TRIPLET_PI;
    let crossing = if sectors.contains(&singlet) && sectors.contains(&triplet) {
        match find_crossing(&table, mode, singlet, triplet) {
            Ok(c) => CrossingOutput::Found(c),
            Err(Error::NoCrossing) => CrossingOutput::None {
                crossing: None,
                note: "no sign change of the singlet-triplet gap in the scanned interval".into(),
            },
            Err(e) => return Err(e),
        }
    } else {
        CrossingOutput::None {
            crossing: None,
            note: "crossing detection needs both (S=0, k=pi) and (S=1, k=pi) sectors".into(),
        }
    };

    ctx.write("scan.csv", &out)?;
    ctx.write_json("crossing.json", &crossing)
}

#[derive(Serialize)]
struct ZneRecord {
    sector: SectorSpec,
    lambda: f64,
    energy: f64,
    p_s: f64,
    fit: ZneResult,
}

pub fn cmd_zne(ctx: &Ctx) -> Result<()> {
    let j2 = ctx.config.single_j2()?;
    let noise = ctx.config.backend.noise();
    let opt = ctx.optimizer();
    let sectors = ctx.sectors()?;
    let records: Vec<ZneRecord> = sectors
        .par_iter()
        .map(|&sector| {
            let problem = ctx.problem(j2, sector)?;
            let r = problem.minimize(&Backend::Mixed { noise }, &opt)?;
            let fit = mitigate(&problem, &r.theta_star, &noise, &ctx.config.zne)?;
            Ok(ZneRecord { sector, lambda: opt.lambda, energy: r.energy, p_s: r.p_s, fit })
        })
        .collect::<Result<_>>()?;
    ctx.write_json("zne.json", &records)
}

pub fn cmd_psbar(ctx: &Ctx) -> Result<()> {
    let p = &ctx.config.psbar;
    let rows: Vec<(usize, levelcross::symmetrize::MeanSuccess)> = p
        .sizes
        .par_iter()
        .map(|&n| Ok((n, mean_success_probability(p.order, n, p.samples, ctx.seed)?)))
        .collect::<Result<_>>()?;
    let mut out = ctx.csv_header();
    out.push_str("n_sites,mean,stderr,analytic\n");
    for (n, r) in rows {
        writeln!(out, "{n},{},{},{}", r.mean, r.stderr, r.analytic).unwrap();
    }
    ctx.write("psbar.csv", &out)
}

pub fn cmd_layers(ctx: &Ctx) -> Result<()> {
    let section = ctx
        .config
        .layers
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs a [layers] section".into()))?;
    let ansatz = ctx.config.ansatz_section()?;
    let sectors = ctx.sectors()?;
    let opt = ctx.optimizer();
    let n = ctx.config.model.n_sites;

    let mut cells = Vec::new();
    for &ratio in &section.ratios {
        for l in 1..=section.max_layers {
            for &sector in &sectors {
                cells.push((ratio, l, sector));
            }
        }
    }
    let rows: Vec<(f64, usize, SectorSpec, f64, f64)> = cells
        .par_iter()
        .map(|&(ratio, l, sector)| {
            ctx.log(&format!("layers ratio={ratio} L={l} S={}", sector.spin));
            let chain = SpinChainSpec::new(n, ctx.config.model.j1, ratio)?;
            let hva = HvaConfig::new(n, l, ansatz.scheme)?;
            let problem = SectorProblem::new(chain, hva, sector)?;
            let r = problem.minimize(&Backend::Pure, &opt)?;
            let exact = lowest_in_sector(&chain, sector.spin, sector.momentum_index(n))?;
            Ok((ratio, l, sector, r.energy, exact))
        })
        .collect::<Result<_>>()?;

    let mut out = ctx.csv_header();
    out.push_str("ratio,layers,spin,momentum_index,energy,exact,rel_error\n");
    for (ratio, l, sector, energy, exact) in rows {
        let rel = ((energy - exact) / exact).abs();
        writeln!(
            out,
            "{ratio},{l},{},{},{energy},{exact},{rel}",
            sector.spin,
            sector.momentum_index(n)
        )
        .unwrap();
    }
    ctx.write("layers.csv", &out)
}

pub fn out_dir(config: &RunConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&config.out_dir))
}
