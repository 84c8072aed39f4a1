use std::time::Instant;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use zkpcp_core::field::{field_create, FieldSpec, FieldElem};
use zkpcp_core::ldt::Line;
use zkpcp_core::osat::tau::{osat_prove, OSatSystem, OSatVerifier};
use zkpcp_core::osat::{ArithMode, Lit, OSatInstance};
use zkpcp_core::seeds::seed_from_u64;

fn main() {
    let f = field_create(&FieldSpec::binary_with_subfield(6, 1)).unwrap();
    let h = f.subfield_elements().unwrap();
    let inst = OSatInstance::new(0, 1, vec![
        [Lit::pos(0), Lit::pos(0), Lit::pos(3)],
        [Lit::neg(0), Lit::pos(3), Lit::pos(3)],
    ]).unwrap();
    let sys = OSatSystem::new(&f, h, inst, 1, ArithMode::Multilinear).unwrap();
    let proof = osat_prove(&sys, &[true, true], seed_from_u64(7)).unwrap();
    let verifier = OSatVerifier::new(&sys).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let m_sum = sys.sum_instance().unwrap().m;

    // bundle new
    let t0 = Instant::now();
    let tau: Vec<FieldElem> = (0..sys.params.big_m()).map(|_| f.random(&mut rng)).collect();
    let mut b = proof.tau_bundle(&tau).unwrap();
    println!("bundle new: {:?}", t0.elapsed());

    // axis prefetch
    let prefix: Vec<FieldElem> = (0..m_sum-1).map(|_| f.random(&mut rng)).collect();
    let t0 = Instant::now();
    b.prefetch_p_axis_last(&prefix);
    println!("axis prefetch: {:?}", t0.elapsed());

    // general line prefetch
    let line = Line::sample(&f, m_sum, &mut rng);
    let t0 = Instant::now();
    b.prefetch_p_line(&line);
    println!("line prefetch: {:?}", t0.elapsed());

    // sigma column (g univariates)
    let t0 = Instant::now();
    for alpha in f.elements() {
        let mut idx = prefix[..m_sum-2].to_vec();
        idx.push(alpha);
        let _ = b.sigma_symbol(&idx);
    }
    println!("sigma column: {:?}", t0.elapsed());

    // full verify
    let n = 10;
    let t0 = Instant::now();
    for _ in 0..n {
        let coins = verifier.coins_from_rng(&mut rng).unwrap();
        let mut pi_c = proof.pi_c_oracle();
        let mut accessor = |tau: &[FieldElem]| proof.tau_bundle(tau);
        let out = verifier.verify(&mut pi_c, &mut accessor, &coins).unwrap();
        assert!(out.accept);
    }
    println!("verify avg: {:?}", t0.elapsed() / n);
}
