use hamshift::sweep::*;
use hamshift::aluthge::*;
use hamshift::measure::*;
use hamshift::recursion::recover_charge;
use hamshift::scalar::Scalar;
use std::time::Instant;

#[test]
#[ignore]
fn profile_four_atom_pipeline() {
    let mut rng = seeded_rng(1002);
    let mus = gen_four_atom_measures(&mut rng, 6);
    for (i, mu) in mus.iter().enumerate() {
        let w = shift_of_measure(mu, 13).unwrap();
        let gamma = w.moments(13).unwrap();
        let t0 = Instant::now();
        let beta: Vec<Scalar> = (0..=12).map(|m| &(&gamma[m] * &gamma[m+1]) / &gamma[1]).collect();
        let rho = recover_charge(&beta);
        let t_rho = t0.elapsed();
        let t1 = Instant::now();
        let base = recover_charge(&gamma);
        let t_base = t1.elapsed();
        let t2 = Instant::now();
        let sq = match (&rho, &base) {
            (Ok(Some(r)), Ok(Some(b))) if r.is_measure() => {
                let c = conv_square_root(r, &abs_support(b));
                format!("{:?} -> {:?}", t2.elapsed(), c.map(|o| o.map(|n| n.len())))
            }
            _ => "skipped".into(),
        };
        let t3 = Instant::now();
        let res = aluthge_classify(&w, 4, 12).unwrap();
        eprintln!("mu{i}: rho={t_rho:?} base={t_base:?} sqrt=[{sq}] classify={:?} hamb={}",
            t3.elapsed(), res.classification.hamburger_truncated());
    }
}
