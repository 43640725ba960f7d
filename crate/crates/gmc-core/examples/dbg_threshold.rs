use gmc_core::{derive_stream, ConeSpec};
fn main() {
    let mut stream = derive_stream(2026, 0);
    for i in 0..200 {
        let p = 1.0 + 2.0 * stream.next_uniform();
        let q = if stream.next_uniform() < 0.25 { f64::INFINITY } else { p + 0.25 + 4.0 * stream.next_uniform() };
        let k = 1.05 + 3.0 * stream.next_uniform();
        let cone = ConeSpec::new(p, q, k).unwrap();
        let d = gmc_core::bernoulli_threshold_instance(&cone);
        if !d.in_cone(&cone) {
            let kappa = d.kappa(p, q).unwrap();
            let a = match &d { gmc_core::Distribution::Discrete { atoms } => atoms[1].1, _ => 0.0 };
            println!("FAIL i={i} p={p} q={q} K={k} a={a} kappa={kappa} kappa/K={}", kappa/k);
        }
    }
    println!("done");
}
