mod oracle;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stnmf::linalg::{frobenius_sq, truncated_svd};
use stnmf::metrics::{accuracy_exhaustive, accuracy_hungarian, assignment_accuracy};
use stnmf::stnmf::{
    discrete_errors, harden, init_s, nndsvd_init, objective_adaptive, objective_reg, random_init, step_adaptive,
    step_fixed, Relation, Summarization,
};
use stnmf::synthetic::{add_noise, generate_dips, measure_noise, DipsSpec, NoiseConfig};
use stnmf::{parse_edge_list, solve, DirectedGraph, Edge, FactorPair, HardenOptions, Matrix, Scheme, SolverConfig};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = DirectedGraph> {
    (3..=max_n, any::<u64>(), 0.2f64..0.9).prop_map(|(n, seed, d)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        oracle::random_graph(&mut rng, n, d)
    })
}

fn random_factors(n: usize, k: usize, seed: u64) -> FactorPair<f64> {
    FactorPair::new(random_init(n, k, seed), init_s(k).unwrap()).unwrap()
}

fn permute_graph(g: &DirectedGraph, perm: &[usize]) -> DirectedGraph {
    let edges = g
        .edges()
        .iter()
        .map(|e| Edge {
            src: perm[e.src],
            dst: perm[e.dst],
            weight: e.weight,
        })
        .collect();
    DirectedGraph::new(g.n(), edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn skew_and_asymmetric_identities(g in graph_strategy(12)) {
        let t: Matrix<f64> = g.to_skew();
        let a: Matrix<f64> = g.to_asymmetric();
        prop_assert_eq!(t.add(&t.transpose()).max_abs(), 0.0);
        prop_assert_eq!(a.sub(&a.transpose()), t.clone());
        prop_assert_eq!(t.abs(), g.symmetrize::<f64>());
        prop_assert!((frobenius_sq(&t) - 2.0 * frobenius_sq(&a)).abs() < 1e-12);
    }

    #[test]
    fn edge_list_round_trip(g in graph_strategy(12)) {
        let back = parse_edge_list(&g.to_edge_list()).unwrap();
        prop_assert_eq!(back.n(), g.n());
        prop_assert_eq!(back.canonical_edges(), g.canonical_edges());
    }

    #[test]
    fn steps_keep_structure(g in graph_strategy(10), seed in any::<u64>(), k in 2usize..4, zero in any::<u64>()) {
        let t: Matrix<f64> = g.to_skew();
        let n = g.n();
        let k = k.min(n);
        let mut f = random_factors(n, k, seed);
        let (zi, zj) = ((zero % n as u64) as usize, (zero / 7 % k as u64) as usize);
        f.u[(zi, zj)] = 0.0;
        let lambda = Matrix::filled(k, k, 1.0);
        let mut fixed = f.clone();
        let mut adaptive = f;
        for _ in 0..20 {
            fixed = match step_fixed(&t, &fixed, &lambda) { Ok(x) => x, Err(_) => break };
            prop_assert!(fixed.s.add(&fixed.s.transpose()).max_abs() <= 1e-12);
            prop_assert!(fixed.u.min_value() >= 0.0);
            prop_assert_eq!(fixed.u[(zi, zj)], 0.0);
        }
        for _ in 0..20 {
            adaptive = match step_adaptive(&t, &adaptive) { Ok(x) => x, Err(_) => break };
            prop_assert!(adaptive.s.add(&adaptive.s.transpose()).max_abs() <= 1e-12);
            prop_assert!(adaptive.u.min_value() >= 0.0);
            prop_assert_eq!(adaptive.u[(zi, zj)], 0.0);
        }
    }

    #[test]
    fn svd_matches_dense_oracle(g in graph_strategy(9)) {
        let a: Matrix<f64> = g.to_asymmetric();
        let rows: Vec<Vec<f64>> = (0..a.rows()).map(|i| a.row(i).to_vec()).collect();
        let (sigma, _, _) = oracle::dense_svd(&rows);
        let k = 3.min(g.n());
        let ours = truncated_svd(&a, k, 5).unwrap();
        for (t, s) in ours.iter().zip(&sigma) {
            prop_assert!((t.sigma - s).abs() <= 1e-8 * sigma[0].max(1.0));
        }
    }

    #[test]
    fn skew_singular_values_pair_up(g in graph_strategy(9)) {
        let t: Matrix<f64> = g.to_skew();
        let rows: Vec<Vec<f64>> = (0..t.rows()).map(|i| t.row(i).to_vec()).collect();
        let (sigma, _, _) = oracle::dense_svd(&rows);
        for pair in sigma.chunks(2).filter(|c| c.len() == 2) {
            prop_assert!((pair[0] - pair[1]).abs() <= 1e-8 * sigma[0].max(1.0));
        }
    }

    #[test]
    fn hungarian_equals_exhaustive(seed in any::<u64>(), k in 1usize..7, n in 1usize..30) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let pred: Vec<Option<usize>> = (0..n)
            .map(|_| if rng.gen::<f64>() < 0.1 { None } else { Some(rng.gen_range(0..k)) })
            .collect();
        prop_assert_eq!(
            accuracy_hungarian(&pred, &truth, k).unwrap(),
            accuracy_exhaustive(&pred, &truth, k).unwrap()
        );
    }

    #[test]
    fn accuracy_is_symmetric_and_relabel_invariant(seed in any::<u64>(), k in 1usize..6, n in 1usize..25) {
        use rand::{seq::SliceRandom, Rng};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let some = |v: &[usize]| v.iter().map(|&x| Some(x)).collect::<Vec<_>>();
        let ab = assignment_accuracy(&some(&a), &b, k).unwrap();
        prop_assert_eq!(ab, assignment_accuracy(&some(&b), &a, k).unwrap());
        let mut relabel: Vec<usize> = (0..k).collect();
        relabel.shuffle(&mut rng);
        let a2: Vec<usize> = a.iter().map(|&x| relabel[x]).collect();
        prop_assert_eq!(ab, assignment_accuracy(&some(&a2), &b, k).unwrap());
    }

    #[test]
    fn discrete_errors_match_brute_force(g in graph_strategy(10), seed in any::<u64>(), k in 2usize..4) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.n();
        let mut assignment: Vec<Option<usize>> = (0..n).map(|i| Some(if i < k { i } else { rng.gen_range(0..k) })).collect();
        if n > k && rng.gen::<bool>() {
            assignment[n - 1] = None;
        }
        let relations = oracle::random_pattern(&mut rng, k)
            .into_iter()
            .map(|(from, to)| Relation { from, to, weight: 1.0 })
            .collect();
        let s = Summarization { k, assignment, relations };
        let (w, d) = discrete_errors(&g, &s).unwrap();
        let (bw, bd) = oracle::brute_force_errors(&g, &s);
        prop_assert!((w - bw).abs() <= 1e-12 * bw.max(1.0));
        prop_assert!((d - bd).abs() <= 1e-12);
    }
}

#[test]
fn relabeling_vertices_relabels_the_summary() {
    let spec = DipsSpec::new(vec![4, 6, 5], vec![(0, 1), (1, 2), (0, 2)]);
    let lg = generate_dips(&spec, 3).unwrap();
    let n = lg.graph.n();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    let pg = permute_graph(&lg.graph, &perm);
    let cfg = SolverConfig::new(3, Scheme::Adaptive);
    let base = harden(&solve(&lg.graph.to_skew::<f64>(), &cfg).unwrap().factors, &HardenOptions::default());
    let moved = harden(&solve(&pg.to_skew::<f64>(), &cfg).unwrap().factors, &HardenOptions::default());
    let pulled: Vec<Option<usize>> = (0..n).map(|i| moved.assignment[perm[i]]).collect();
    let truth: Vec<usize> = base.assignment.iter().map(|x| x.unwrap()).collect();
    assert_eq!(assignment_accuracy(&pulled, &truth, 3).unwrap(), 1.0);
    assert_eq!(assignment_accuracy(&base.assignment, &lg.truth, 3).unwrap(), 1.0);
}

#[test]
fn objectives_relate_through_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = oracle::random_graph(&mut rng, 12, 0.5);
    let t: Matrix<f64> = g.to_skew();
    let mut f = random_factors(12, 3, 1);
    f.s = f.u.t_matmul(&t.matmul(&f.u));
    let lambda = stnmf::stnmf::kkt_lambda(&t, &f).unwrap();
    let l6 = objective_reg(&t, &f, &lambda).unwrap();
    let l7 = objective_adaptive(&t, &f).unwrap();
    assert!((l7 - (l6 - frobenius_sq(&t) + lambda.trace())).abs() <= 1e-9 * l6.abs().max(1.0));
}

#[test]
fn noise_is_measured_as_requested() {
    let spec = DipsSpec::new(vec![6, 6, 6], vec![(0, 1), (1, 2)]);
    let lg = generate_dips(&spec, 1).unwrap();
    for &(b, d) in &[(0.0, 0.0), (0.1, 0.1), (0.2, 0.25)] {
        let noisy = add_noise(&lg, &NoiseConfig { gamma_b: b, gamma_d: d, seed: 4 }).unwrap();
        let (mb, md) = measure_noise(&noisy).unwrap();
        let quantum = 1.0 / 72.0;
        assert!(mb >= b && mb < b + quantum + 1e-12, "gamma_b {mb} for {b}");
        assert!(md >= d && md <= d + 2.0 * quantum, "gamma_d {md} for {d}");
    }
}

#[test]
fn nndsvd_is_nonnegative_and_seed_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = oracle::random_graph(&mut rng, 15, 0.4);
    let t: Matrix<f64> = g.to_skew();
    let (u, _) = nndsvd_init(&t, 3, 8).unwrap();
    assert!(u.min_value() >= 0.0);
    assert!(u.col_norms().iter().all(|&c| c > 0.0));
    assert_eq!(nndsvd_init(&t, 3, 8).unwrap().0, u);
}

#[test]
fn single_precision_path_recovers_blocks() {
    let lg = generate_dips(&DipsSpec::new(vec![5, 7], vec![(1, 0)]), 0).unwrap();
    let t: Matrix<f32> = lg.graph.to_skew();
    let r = solve(&t, &SolverConfig::new(2, Scheme::Adaptive)).unwrap();
    let s = harden(&r.factors, &HardenOptions::default());
    assert_eq!(assignment_accuracy(&s.assignment, &lg.truth, 2).unwrap(), 1.0);
    assert_eq!(s.relations.len(), 1);
    let (from, to) = (s.relations[0].from, s.relations[0].to);
    let group_of = |v: usize| s.assignment[v].unwrap();
    assert_eq!((from, to), (group_of(5), group_of(0)));
}
