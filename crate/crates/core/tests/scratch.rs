use sbp_core::construct::solve_closure;
use sbp_core::existence::{exists_sbp, min_closure_search, SbpParameters};
use std::time::Instant;

#[test]
fn scratch_table1_heavy() {
    for (s, expect_r, expect_dofp) in [(5usize, 11usize, 1usize), (6, 14, 2), (7, 19, 5), (8, 23, 7)]
    {
        let t0 = Instant::now();
        let (r, rep) = min_closure_search(s, s, None).unwrap();
        println!(
            "s={s}: r={r} dof_p={} eta={} ({:?})",
            rep.dof_p,
            rep.eta_decimal(),
            t0.elapsed()
        );
        assert_eq!(r, expect_r);
        assert_eq!(rep.dof_p, expect_dofp);
    }
}

#[test]
fn scratch_exact_fraction() {
    let rep = exists_sbp(SbpParameters::new(8, 8, 23).unwrap()).unwrap();
    let target = "83852077150009258297147/299027329581685985280000";
    let found = rep
        .norm
        .as_ref()
        .unwrap()
        .weights
        .iter()
        .position(|w| w.to_string() == target);
    println!("eta = {}", rep.eta_decimal());
    for (i, w) in rep.norm.as_ref().unwrap().weights.iter().enumerate().take(4) {
        println!("w[{i}] = {w}");
    }
    println!("component with target value: {found:?}");
    assert!(found.is_some());
}

#[test]
fn scratch_closure_dofs() {
    for (s, r, expect) in [(3usize, 6usize, 1usize), (4, 8, 3), (5, 11, 10)] {
        let p = SbpParameters::new(s, s, r).unwrap();
        let rep = exists_sbp(p).unwrap();
        let t0 = Instant::now();
        let man = solve_closure(p, rep.norm.as_ref().unwrap()).unwrap();
        println!("s={s}: dof_D={} ({:?})", man.dof(), t0.elapsed());
        assert_eq!(man.dof(), expect);
    }
}

#[test]
fn scratch_closure_dof_heavy() {
    for (s, r, expect) in [(6usize, 14usize, 21usize), (7, 19, 55), (8, 23, 91)] {
        let p = SbpParameters::new(s, s, r).unwrap();
        let rep = exists_sbp(p).unwrap();
        let t0 = Instant::now();
        let man = solve_closure(p, rep.norm.as_ref().unwrap()).unwrap();
        println!("s={s}: dof_D={} ({:?})", man.dof(), t0.elapsed());
        assert_eq!(man.dof(), expect);
    }
}
