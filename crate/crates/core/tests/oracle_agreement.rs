use origami_entropy::lattice::{equilateral_matrix, f_truncated, UnimodularMap};
use origami_entropy::oracle::{
    check_multiplicities, connection_sum, count_paths, count_paths_weighted,
    enumerate_singular_connections,
};
use origami_entropy::solver::entropy;
use origami_entropy::surface::{builtin_surface, check_hypothesis, Family};

#[test]
fn traced_connections_reproduce_the_lattice_sum() {
    let base = UnimodularMap::shear(0.3).mul(&UnimodularMap::diag(-0.2));
    for fam in [Family::L, Family::EW] {
        let x = builtin_surface(fam, 0).unwrap();
        let info = check_hypothesis(&x).unwrap();
        for m in [equilateral_matrix(), UnimodularMap::identity(), base] {
            let recs = enumerate_singular_connections(&x, &m, 3).unwrap();
            let rep = check_multiplicities(&recs, info.n, 3, info.k + 1);
            assert!(rep.passed(), "{fam}: {:?}", rep.violations);
            assert!(recs.iter().all(|r| r.closed));
            for t in [3.0, 5.0] {
                let traced = connection_sum(&recs, t);
                let f = f_truncated(&m, info.sigma, t, 3).unwrap().value;
                let w = info.n_squares() as f64;
                assert!(
                    (traced - w * f).abs() <= 1e-12,
                    "{fam} t={t}: {traced} vs {}",
                    w * f
                );
            }
        }
    }
}

#[test]
fn wollmilchsau_totals_per_holonomy() {
    let x = builtin_surface(Family::EW, 0).unwrap();
    let recs = enumerate_singular_connections(&x, &equilateral_matrix(), 2).unwrap();
    let rep = check_multiplicities(&recs, 4, 2, 2);
    assert!(rep.passed());
    for hol in origami_entropy::lattice::lattice_points(2) {
        assert_eq!(recs.iter().filter(|r| r.holonomy == hol).count(), 8);
    }
}

#[test]
fn other_families_obey_the_multiplicity_law() {
    for (fam, k) in [(Family::O, 3), (Family::St, 3), (Family::O, 4)] {
        let x = builtin_surface(fam, k).unwrap();
        let Ok(info) = check_hypothesis(&x) else {
            continue;
        };
        let recs = enumerate_singular_connections(&x, &equilateral_matrix(), 4).unwrap();
        let rep = check_multiplicities(&recs, info.n, 4, info.k + 1);
        assert!(
            rep.passed(),
            "{fam}{k}: {:?}",
            &rep.violations[..rep.violations.len().min(5)]
        );
    }
}

#[test]
fn path_counts_first_generation_and_no_continuation() {
    let x = builtin_surface(Family::L, 0).unwrap();
    let info = check_hypothesis(&x).unwrap();
    let e = equilateral_matrix();
    let t_max = 3.0;
    let table = count_paths(&info, &e, t_max, 1e-3).unwrap();
    let inside = origami_entropy::lattice::lattice_points(20)
        .filter(|&(a, b)| e.norm_of(a, b) / info.sigma <= t_max)
        .count() as f64;
    assert_eq!(table.seed_total(), info.n_squares() as f64 * inside);

    let bare = count_paths_weighted(&info, &e, t_max, 1e-3, 0.0).unwrap();
    let recs = enumerate_singular_connections(&x, &e, 20).unwrap();
    let traced = recs.iter().filter(|r| r.length <= t_max).count() as f64;
    assert_eq!(bare.total(), traced);
}

#[test]
fn path_count_growth_approaches_entropy() {
    let info = check_hypothesis(&builtin_surface(Family::L, 0).unwrap()).unwrap();
    let e = equilateral_matrix();
    let h = entropy(&info, &e, 1e-10).unwrap().midpoint();
    let err = |t_max: f64| {
        let slope = count_paths(&info, &e, t_max, 1e-3)
            .unwrap()
            .growth_rate()
            .unwrap();
        eprintln!("T_max = {t_max}: slope {slope}");
        (slope - h).abs() / h
    };
    let (e4, e8) = (err(4.0), err(8.0));
    assert!(e8 < e4);
    assert!(e8 < 0.05);
}
