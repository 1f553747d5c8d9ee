use levelcross::spectroscopy::{find_crossing, ratio_grid, scan, Mode, ScanConfig};
use levelcross::vqe::SectorSpec;

fn main() {
    let config = ScanConfig::default();
    let sectors = [SectorSpec::SINGLET_PI, SectorSpec::TRIPLET_PI];
    let ed_grid = ratio_grid(0.15, 0.35, 0.01).unwrap();
    let ed = scan(&ed_grid, &sectors, Mode::Ed, &config).unwrap();
    let ced = find_crossing(&ed, Mode::Ed, sectors[0], sectors[1]).unwrap();
    println!("ed crossing {:.5} dev {:.4}", ced.ratio_star, ced.relative_deviation);

    let grid = ratio_grid(0.2, 0.3, 0.025).unwrap();
    for mode in [Mode::Noisy, Mode::Zne] {
        let t = scan(&grid, &sectors, mode, &config).unwrap();
        for f in &t.failures {
            println!("  FAIL {} {:?}: {}", f.ratio, f.sector, f.message);
        }
        for r in &t.rows {
            println!(
                "  {} ratio {:.3} S={} E {:+.5} p {:.3} lam {}",
                r.mode, r.ratio, r.sector.spin, r.energy, r.p_s, r.lambda
            );
        }
        let c = find_crossing(&t, mode, sectors[0], sectors[1]).unwrap();
        println!(
            "{} crossing {:.5} |delta_ed| {:.5}",
            mode,
            c.ratio_star,
            (c.ratio_star - ced.ratio_star).abs()
        );
    }
}
