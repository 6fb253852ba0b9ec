use facloc::instance::gen_euclidean;
use facloc::io::{memory_path, solution_from_str, solution_to_string, Params};
use facloc::lp_rounding::LpSolution;
use facloc::oracle::exact_facloc;
use facloc::primitives::{DenseMatrix, ReduceOp};
use facloc::runner::{solve, verify_solution, Algo};
use facloc::Ctx;
use proptest::prelude::*;

fn params(algo: Algo, seed: u64) -> Params {
    Params {
        eps: None,
        alpha: None,
        k: algo.needs_k().then_some(2),
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solution_files_survive_serialization(seed in 0u64..10_000, n_f in 1usize..6, n_c in 2usize..9) {
        let ctx = Ctx::default();
        let inst = gen_euclidean(n_f, n_c, 2, (0.05, 1.5), seed).unwrap();
        let lp = LpSolution::from_open_set(&inst, &exact_facloc(&inst).unwrap().set).unwrap();
        for algo in Algo::ALL {
            let sol = solve(&ctx, &inst, algo, &params(algo, seed), Some(&lp)).unwrap();
            let back = solution_from_str(&solution_to_string(&sol), &memory_path()).unwrap();
            prop_assert_eq!(&back, &sol);
            prop_assert!(verify_solution(&ctx, &inst, &back).is_ok(), "{}", algo);
        }
    }

    #[test]
    fn reductions_ignore_the_worker_count(values in prop::collection::vec(-1e6f64..1e6, 1..400)) {
        let one = Ctx::with_workers(1).unwrap();
        let many = Ctx::with_workers(8).unwrap();
        let m = DenseMatrix::new(1, values.len(), values.clone()).unwrap();
        for op in [ReduceOp::Sum, ReduceOp::Min, ReduceOp::Max] {
            prop_assert_eq!(one.reduce(&values, op).unwrap().to_bits(), many.reduce(&values, op).unwrap().to_bits());
            prop_assert_eq!(one.reduce_rows(&m, op).unwrap(), many.reduce_rows(&m, op).unwrap());
        }
    }
}

#[test]
fn call_counts_ignore_the_worker_count() {
    let inst = gen_euclidean(5, 12, 2, (0.1, 1.0), 3).unwrap();
    let counts: Vec<u64> = [1, 4, 8]
        .iter()
        .map(|&w| {
            let ctx = Ctx::with_workers(w).unwrap();
            solve(&ctx, &inst, Algo::Greedy, &params(Algo::Greedy, 1), None).unwrap();
            ctx.calls()
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
}
