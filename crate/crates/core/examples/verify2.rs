use levelcross::ansatz::{HvaConfig, Scheme};
use levelcross::noise::NoiseParams;
use levelcross::operators::SpinChainSpec;
use levelcross::spectrum::lowest_in_sector;
use levelcross::vqe::{Backend, OptimizerConfig, SectorProblem, SectorSpec};

fn main() {
    let chain = SpinChainSpec::new(4, 1.0, 0.15).unwrap();
    let ansatz = HvaConfig::new(4, 1, Scheme::EvenOdd).unwrap();
    let problem = SectorProblem::new(chain, ansatz, SectorSpec::SINGLET_PI).unwrap();
    let exact = lowest_in_sector(&chain, 0, 2).unwrap();
    println!("exact {exact:.5}");
    let noise = NoiseParams::default();
    let backend = Backend::Mixed { noise };
    let shaping = OptimizerConfig { lambda: 0.5, ..OptimizerConfig::default() };
    let warm = problem.minimize(&Backend::Pure, &shaping).unwrap();
    println!("warm theta {:?} E {:.5} p {:.4}", warm.theta_star.0, warm.energy, warm.p_s);
    for lambda in [0.0, 0.01, 0.05, 0.1] {
        let opt = OptimizerConfig { lambda, ..OptimizerConfig::default() };
        let r = problem.minimize(&backend, &opt).unwrap();
        let err = ((r.energy - exact) / exact).abs();
        println!(
            "lambda {lambda:>5}: E {:.5} err {:.2}% p_s {:.4} steps {} cost {:.5}",
            r.energy,
            100.0 * err,
            r.p_s,
            r.steps,
            r.cost
        );
        // tau sweep at theta*
        let mut es = Vec::new();
        for i in 0..5 {
            let tau = 1.0 + 0.5 * i as f64;
            let b = Backend::Mixed { noise: noise.with_tau_factor(tau) };
            let (e, _) = problem.sector_energy(&r.theta_star, &b).unwrap();
            es.push(e);
        }
        let mono = es.windows(2).all(|w| w[1] >= w[0]) || es.windows(2).all(|w| w[1] <= w[0]);
        // linear fit at tau = 0
        let xs: Vec<f64> = (0..5).map(|i| 1.0 + 0.5 * i as f64).collect();
        let n = 5.0;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = es.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&es).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icept = (sy - slope * sx) / n;
        let zerr = ((icept - exact) / exact).abs();
        println!("   tau curve {es:?} mono={mono} zne {icept:.5} zne_err {:.2}%", 100.0 * zerr);
    }
}
