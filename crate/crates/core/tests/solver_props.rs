mod common;

use common::{brute_force_step, random_game, random_space, rng, rows_of};
use gtg::solver::{replicator_step, replicator_step_with, run_game, GameConfig, StrategySpace};
use gtg::Execution;
use rand::Rng;

#[test]
fn simplex_and_labeled_rows_preserved() {
    let mut r = rng(11);
    for _ in 0..40 {
        let n = r.random_range(12..32);
        let game = random_game(&mut r, n, 4, 5);
        let (g, a) = (game.graph(), game.assignment());
        let start = StrategySpace::from_rows(random_space(&mut r, &game)).unwrap();
        let mut s = start.clone();
        for _ in 0..200 {
            s = replicator_step(&s, &g, &a);
            for i in 0..n {
                let row = s.row(i);
                assert!(row.iter().all(|&v| v >= 0.0));
                assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                if a.label(i).is_some() {
                    assert_eq!(row, start.row(i));
                }
            }
        }
    }
}

#[test]
fn zero_entries_stay_zero() {
    let mut r = rng(5);
    for _ in 0..30 {
        let game = random_game(&mut r, 10, 3, 4);
        let (g, a) = (game.graph(), game.assignment());
        let mut rows = random_space(&mut r, &game);
        // knock out one strategy of every unlabeled player
        for (i, row) in rows.iter_mut().enumerate() {
            if game.labels[i].is_none() {
                let h = i % 3;
                let lost = row[h];
                row[h] = 0.0;
                row[(h + 1) % 3] += lost;
            }
        }
        let mut s = StrategySpace::from_rows(rows).unwrap();
        for _ in 0..100 {
            s = replicator_step(&s, &g, &a);
            for i in 0..10 {
                if game.labels[i].is_none() {
                    assert_eq!(s.row(i)[i % 3], 0.0);
                }
            }
        }
    }
}

#[test]
fn matches_brute_force_on_small_games() {
    let mut r = rng(99);
    for _ in 0..300 {
        let n = r.random_range(2..=5);
        let m = r.random_range(1..=3.min(n - 1));
        let game = random_game(&mut r, n, m, n - 1);
        let rows = random_space(&mut r, &game);
        let s = StrategySpace::from_rows(rows.clone()).unwrap();
        let got = rows_of(&replicator_step(&s, &game.graph(), &game.assignment()));
        let want = brute_force_step(&rows, &game.neighbors, &game.labels);
        for (a, b) in got.iter().flatten().zip(want.iter().flatten()) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn weight_scaling_leaves_trajectory_unchanged() {
    let mut r = rng(3);
    for _ in 0..20 {
        let game = random_game(&mut r, 25, 5, 6);
        let a = game.assignment();
        let g = game.graph();
        for c in [1e-3, 1e3] {
            let gc = g.with_scaled_weights(c);
            let mut s = gtg::solver::init_strategy_space(&a);
            let mut sc = s.clone();
            for _ in 0..50 {
                s = replicator_step(&s, &g, &a);
                sc = replicator_step(&sc, &gc, &a);
                assert!(s.values().iter().zip(sc.values()).all(|(x, y)| (x - y).abs() <= 1e-12));
            }
        }
    }
}

#[test]
fn converged_games_are_near_equilibrium() {
    let mut r = rng(8);
    let cfg = GameConfig { max_iters: 1000, ..GameConfig::default() };
    let mut checked = 0;
    for _ in 0..50 {
        let game = random_game(&mut r, 20, 3, 4);
        let (g, a) = (game.graph(), game.assignment());
        if a.unlabeled().next().is_none() {
            continue;
        }
        let result = run_game(&g, &a, &cfg).unwrap();
        assert_eq!(result.residuals.len(), result.iterations);
        if result.converged {
            checked += 1;
            let next = replicator_step(&result.final_space, &g, &a);
            assert!(next.distance(&result.final_space) <= cfg.epsilon);
        }
        for p in &result.predictions {
            let row = result.final_space.row(p.player);
            assert!(row.iter().all(|&v| v <= row[p.class]));
        }
    }
    assert!(checked > 25);
}

#[test]
fn results_independent_of_parallelism() {
    let mut r = rng(21);
    for _ in 0..10 {
        let game = random_game(&mut r, 200, 6, 8);
        let (g, a) = (game.graph(), game.assignment());
        let seq = GameConfig { execution: Execution::Sequential, ..GameConfig::default() };
        let par = GameConfig { execution: Execution::Parallel, ..GameConfig::default() };
        assert_eq!(run_game(&g, &a, &seq).unwrap(), run_game(&g, &a, &par).unwrap());
        let s = gtg::solver::init_strategy_space(&a);
        assert_eq!(
            replicator_step_with(&s, &g, &a, Execution::Sequential),
            replicator_step_with(&s, &g, &a, Execution::Parallel)
        );
    }
}
