use std::f64::consts::PI;

use borel_unfold::acceptance::{squared_forcing_system, upper_direction_range};
use borel_unfold::applications::StripChoice;
use borel_unfold::series_core::{eval_truncated, formal_borel, formal_solution};
use borel_unfold::solver::{apply_g, build_omega_grid, solve_fixed_point, weighted_sup_diff};
use borel_unfold::{CenterManifold, DirectionRange, OmegaSolution, SheetPoint, Side, SqrtEps, C64};

const TOL: f64 = 1e-12;

fn solve(s: SqrtEps, dr: DirectionRange, dirs: usize, n: usize) -> OmegaSolution {
    let spec = squared_forcing_system();
    let grid = build_omega_grid(&spec, s, dr, 1.0, dirs, 8.0, n).unwrap();
    solve_fixed_point(&spec, &grid, TOL, 200).unwrap()
}

fn grid_norm(sol: &OmegaSolution) -> f64 {
    let zero: Vec<_> = sol.values.iter().map(|v| v.zeros_like(1).unwrap()).collect();
    weighted_sup_diff(&sol.values, &zero, sol.grid.lambda)
}

#[test]
fn converged_solution_is_a_fixed_point() {
    let sol = solve(SqrtEps::new(0.1, 0.0), upper_direction_range(), 3, 1025);
    let next = apply_g(&squared_forcing_system(), &sol.grid, Side::Plus, &sol.values).unwrap();
    let r = weighted_sup_diff(&next, &sol.values, sol.grid.lambda);
    assert!(r <= 10.0 * TOL, "fixed-point residual {r:.3e}");
}

#[test]
fn grid_norm_is_stable_under_refinement() {
    let s = SqrtEps::new(0.1, 0.0);
    let coarse = grid_norm(&solve(s, upper_direction_range(), 3, 1025));
    let fine = grid_norm(&solve(s, upper_direction_range(), 3, 2049));
    assert!(coarse.is_finite() && fine > 0.0);
    assert!((coarse - fine).abs() < 0.01 * fine, "{coarse} vs {fine}");
}

#[test]
fn adjacent_directions_continue_each_other() {
    let s = SqrtEps::new(0.1, 0.0);
    let sol = solve(s, upper_direction_range(), 3, 1025);
    let cm = CenterManifold::new(&sol).unwrap();
    let mut compared = 0;
    for t in [C64::new(3.0, -3.0), C64::new(1.0, -4.0), C64::new(5.0, -6.0), C64::new(2.0, -2.5)] {
        let mut vals = Vec::new();
        for (dir, &a) in sol.grid.directions.iter().enumerate() {
            let r = (C64::from_polar(1.0, a) * t).re;
            let margin = (r - sol.grid.lambda).min(s.strip_width(a) - sol.grid.lambda - r);
            // the truncated Laplace tail is ~e^{−margin·T}; keep it well below the check
            if margin > 2.0 {
                vals.push(cm.eval_with(StripChoice { dir, side: Side::Plus, margin, t }).unwrap()[0]);
            }
        }
        for w in vals.windows(2) {
            assert!((w[0] - w[1]).norm() < 1e-9, "{} vs {} at t = {t}", w[0], w[1]);
            compared += 1;
        }
    }
    assert!(compared >= 3);
}

#[test]
fn reflected_pipeline_gives_the_same_function() {
    let s = SqrtEps::new(0.1, 0.0);
    let cm_sol = solve(s, upper_direction_range(), 3, 1025);
    let mirrored = DirectionRange::new(PI / 4.0 + PI, 3.0 * PI / 4.0 + PI, 0.1, 0.5).unwrap();
    let refl_sol = solve(SqrtEps(-s.value()), mirrored, 3, 1025);
    let (a, b) = (CenterManifold::new(&cm_sol).unwrap(), CenterManifold::new(&refl_sol).unwrap());
    for x in [C64::new(0.05, 0.2), C64::new(-0.05, 0.3), C64::new(0.2, -0.1), C64::new(0.0, -0.3), C64::new(-0.3, 0.05)] {
        let (u, v) = (a.eval(SheetPoint::new(x)).unwrap()[0], b.eval(SheetPoint::new(x)).unwrap()[0]);
        assert!((u - v).norm() < 1e-8, "{u} vs {v} at {x}");
    }
}

#[test]
fn ray_solution_matches_formal_borel_series_near_origin() {
    let sol = solve(SqrtEps::zero(), upper_direction_range(), 1, 2049);
    let phi = formal_borel(&formal_solution(&squared_forcing_system(), 14).unwrap().eps0_series(0)).unwrap();
    let alpha = sol.grid.directions[0];
    for u in [0.02, 0.05, 0.1] {
        let got = sol.eval_line(0, 0, u).unwrap()[0];
        let series = phi.eval(C64::from_polar(u, alpha));
        assert!((got - series).norm() < 1e-9, "{got} vs {series} at u = {u}");
    }
}

#[test]
fn borel_sum_is_asymptotic_to_the_formal_solution() {
    let spec = squared_forcing_system();
    let sol = solve(SqrtEps::zero(), upper_direction_range(), 1, 2049);
    let cm = CenterManifold::new(&sol).unwrap();
    let alpha = sol.grid.directions[0];
    for order in 1..=4usize {
        let truncated = formal_solution(&spec, order).unwrap();
        let ratios: Vec<f64> = (3..=6)
            .map(|j| {
                let r = 0.5f64.powi(j);
                let x = C64::from_polar(r, alpha);
                let y = cm.eval(SheetPoint::new(x)).unwrap()[0];
                let e = (y - eval_truncated(&truncated, x, C64::new(0.0, 0.0))[0]).norm();
                e / r.powi(order as i32 + 3)
            })
            .collect();
        // fitted C_N settles as r halves
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(lo > 0.0 && hi / lo < 1.5, "order {order}: {ratios:?}");
    }
}
