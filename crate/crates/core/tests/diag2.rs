use cbrl_core::corpus;
use cbrl_core::functionals::*;
use cbrl_core::ordinals::OrdinalNotation;

#[test]
fn diag_theta_b() {
    let master = corpus::master_script();
    let family = ComponentFamily::ThetaComponents { master: master.clone(), limit: OrdinalNotation::omega(64) };
    for j in 0..4usize {
        let input = SymbolicInput::Components {
            explicit: vec![SymbolicInput::Designated; j],
            rest: RestKind::Zeros,
        };
        match dyn_join_symbolic(&family, &input, 2048, 2048) {
            Ok((out, state)) => println!("thetaB^{j}: bits={} supply={:?} stalled={:?} phase={}",
                out.bits.len(), out.zeros_beyond, state.stalled, state.phase),
            Err(e) => println!("thetaB^{j} ERR: {e:?}"),
        }
    }
    // individual components on zeros
    for i in 0..6usize {
        let comp = family.component(i).unwrap();
        match eval_symbolic(&comp, &SymbolicInput::zeros(), 2048 >> i, 2048) {
            Ok(o) => println!("comp{i}(0^w): bits={} supply={:?}", o.bits.len(), o.zeros_beyond),
            Err(e) => println!("comp{i}(0^w) ERR: {e:?}"),
        }
        match eval_symbolic(&comp, &SymbolicInput::Designated, 2048 >> i, 2048) {
            Ok(o) => println!("comp{i}(A): bits={} supply={:?}", o.bits.len(), o.zeros_beyond),
            Err(e) => println!("comp{i}(A) ERR: {e:?}"),
        }
    }
}
