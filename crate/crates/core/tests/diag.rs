use cbrl_core::corpus;
use cbrl_core::ordinals::OrdinalNotation;
use cbrl_core::topology::*;

#[test]
fn diag_dynjoin() {
    let master = corpus::master_script();
    let class = ClassDescriptor::DynJoin { master, kind: DynKind::Unit };
    let t0 = std::time::Instant::now();
    let pts = enumerate_points(&class, 16, 2048).unwrap();
    println!("dynjoin: {} points in {:?}", pts.len(), t0.elapsed());
    let t1 = std::time::Instant::now();
    let rounds = derivative_rounds(&pts, 64).unwrap();
    println!("rounds in {:?}", t1.elapsed());
    for (p, r) in pts.iter().zip(&rounds) {
        let s = structural_rank(&class, &p.input, 2048);
        println!(
            "{:<16} limit={} closed={} round={:?} structural={:?}",
            p.id,
            p.is_limit_form(),
            p.witness_closed,
            r,
            s.map(|x| x.to_string())
        );
    }
}

#[test]
fn diag_theta_omega() {
    let master = corpus::master_script();
    let class = ClassDescriptor::Theta { script: master, notation: OrdinalNotation::omega(64) };
    let t0 = std::time::Instant::now();
    let pts = enumerate_points(&class, 8, 2048).unwrap();
    println!("theta-w: {} points in {:?}", pts.len(), t0.elapsed());
    for p in pts.iter().take(40) {
        let s = structural_rank(&class, &p.input, 2048);
        let d = decomposition_rank(&class, &p.bits, 2048);
        println!(
            "{:<18} limit={} s={:?} d={:?}",
            p.id,
            p.is_limit_form(),
            s.map(|x| x.to_string()),
            d.map(|x| x.to_string())
        );
    }
}
