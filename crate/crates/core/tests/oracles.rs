//! Known values, each recomputed here from first principles rather than
//! through the library routine under test.

use std::f64::consts::{LN_2, PI, SQRT_2};

use revlab::analyze::{
    asymptotic_variance, eigentime_by_hitting, expected_hitting, laplace_hitting, peskun_dominates, spectral_report,
    HittingQuery,
};
use revlab::chain::{is_irreducible, is_reversible, is_stationary, pi_dual, stationary_distribution};
use revlab::divergence::{f_divergence, renyi_divergence, DivergenceSpec};
use revlab::linalg::{kahan_sum, solve_linear, symmetric_eigen, DenseMatrix};
use revlab::project::{regularized_projection, Direction, ProjectionProblem};
use revlab::reversiblize::{
    balanced, dual_mean, log_mean, named_difference, power_mean, BalancingFunction, Framework, MeanFunction, Named,
    ReversiblizeError, ReversiblizationKind,
};
use revlab::{Distribution, Generator};

fn three_cycle() -> (Generator, Distribution) {
    let l = Generator::from_fn(3, |x, y| if y == (x + 1) % 3 { 1.0 } else { 0.0 }).unwrap();
    (l, Distribution::uniform(3).unwrap())
}

fn two_state() -> (Generator, Distribution) {
    let m = Generator::new(DenseMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap()).unwrap();
    (m, Distribution::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap())
}

/// A 2-state chain with L(0,1) = a, L(1,0) = b under uniform π, so the
/// π-dual of edge (0,1) is b.
fn edge_pair(a: f64, b: f64) -> (Generator, Distribution) {
    let l = Generator::new(DenseMatrix::from_rows(&[vec![-a, a], vec![b, -b]]).unwrap()).unwrap();
    (l, Distribution::uniform(2).unwrap())
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn circulant_spectrum() {
    // eigenvalues of circ(c0, c1, c2) are c0 + c1 ω^k + c2 ω^{2k}
    let s = DenseMatrix::from_rows(&[
        vec![1.0, -0.5, -0.5],
        vec![-0.5, 1.0, -0.5],
        vec![-0.5, -0.5, 1.0],
    ])
    .unwrap();
    let mut expected: Vec<f64> = (0..3)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 3.0;
            1.0 - 0.5 * (t.cos() + (2.0 * t).cos())
        })
        .collect();
    expected.sort_by(f64::total_cmp);
    let e = symmetric_eigen(&s).unwrap();
    for (a, b) in e.eigenvalues.iter().zip(&expected) {
        close(*a, *b, 1e-12);
    }
    close(expected[1], 1.5, 1e-15);
}

#[test]
fn small_solve_and_sum() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
    let x = solve_linear(&a, &[2.0, 0.0]).unwrap();
    close(x[0], 1.0, 1e-15);
    close(x[1], 1.0, 1e-15);
    let s = kahan_sum(std::iter::repeat(0.1).take(1_000_000));
    assert!((s - 1e5).abs() <= 1e-9);
}

#[test]
fn chain_basics() {
    let pi = Distribution::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
    let (sym, _) = edge_pair(1.0, 1.0);
    let d = pi_dual(&sym, &pi).unwrap();
    close(d.rate(0, 1), (1.0 / 3.0) * 1.0 / (2.0 / 3.0), 1e-15);
    close(d.rate(1, 0), (2.0 / 3.0) * 1.0 / (1.0 / 3.0), 1e-15);
    assert!(!is_stationary(&sym, &pi, 1e-10).unwrap());

    let (cyc, uni) = three_cycle();
    let c = is_reversible(&cyc, &uni, 1e-10).unwrap();
    assert!(!c.reversible);
    close(c.max_violation, 1.0 / 3.0, 1e-15);
    assert!(is_stationary(&cyc, &uni, 1e-12).unwrap());

    let (m, _) = two_state();
    let st = stationary_distribution(&m).unwrap();
    close(st[0], 2.0 / 3.0, 1e-12);
    close(st[1], 1.0 / 3.0, 1e-12);
}

#[test]
fn power_mean_examples() {
    let (cyc, uni) = three_cycle();
    let p1 = power_mean(&cyc, &uni, 1.0).unwrap();
    for x in 0..3 {
        for y in 0..3 {
            if x != y {
                close(p1.rate(x, y), 0.5, 1e-15);
            }
        }
    }
    let min = power_mean(&cyc, &uni, f64::NEG_INFINITY).unwrap();
    assert!(!is_irreducible(&min));
    assert_eq!(min.rates().max_abs(), 0.0);

    let pi = Distribution::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
    let (sym, _) = edge_pair(1.0, 1.0);
    let p0 = power_mean(&sym, &pi, 0.0).unwrap();
    close(p0.rate(0, 1), (0.5f64).sqrt(), 1e-15);
    close(p0.rate(1, 0), SQRT_2, 1e-15);
    close((2.0 / 3.0) * p0.rate(0, 1), (1.0 / 3.0) * p0.rate(1, 0), 1e-15);
}

#[test]
fn barker_is_harmonic() {
    let pi = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
    let l = Generator::from_fn(3, |x, y| 0.3 + ((x * 5 + y * 2) % 4) as f64 * 0.4).unwrap();
    let barker = balanced(&l, &pi, &BalancingFunction::barker(), Framework::Fg).unwrap();
    let lp = pi_dual(&l, &pi).unwrap();
    for x in 0..3 {
        for y in 0..3 {
            if x != y {
                let (a, b) = (l.rate(x, y), lp.rate(x, y));
                close(barker.rate(x, y), 2.0 * a * b / (a + b), 1e-14);
            }
        }
    }
}

#[test]
fn cauchy_log_and_dual_edges() {
    // C_{3,1}(1, 0) = √(1/3)
    let (l, pi) = edge_pair(1.0, 0.0);
    let c = "cauchy:p=3,q=1".parse::<ReversiblizationKind>().unwrap().apply(&l, &pi).unwrap();
    close(c.rate(0, 1), (1.0f64 / 3.0).sqrt(), 1e-15);

    let (l, pi) = edge_pair(1.0, 0.5);
    let lm = log_mean(&l, &pi, 1.0).unwrap();
    close(lm.rate(0, 1), 0.5 / LN_2, 1e-14);
    let d = dual_mean(&l, &pi, &MeanFunction::arithmetic()).unwrap();
    close(d.rate(0, 1), 2.0 / 3.0, 1e-15);

    let (l, pi) = edge_pair(1.0, 0.0);
    let tv = named_difference(&l, &pi, Named::Tv).unwrap();
    close(tv.rate(0, 1), 1.0, 1e-15);
    assert!(matches!(
        named_difference(&l, &pi, Named::Jeffrey),
        Err(ReversiblizeError::UnboundedRate { .. })
    ));
}

#[test]
fn chi2_and_renyi_on_the_cycle() {
    let (cyc, uni) = three_cycle();
    let p2 = power_mean(&cyc, &uni, 2.0).unwrap();
    // brute force over the six ordered pairs with f(t) = (t − 1)²
    let mut chi2 = 0.0;
    for x in 0..3 {
        for y in 0..3 {
            if x != y {
                let (v, w) = (cyc.rate(x, y), 1.0 / SQRT_2);
                chi2 += (1.0 / 3.0) * w * (v / w - 1.0).powi(2);
            }
        }
    }
    close(chi2, 2.0 * SQRT_2 - 2.0, 1e-15);
    close(f_divergence(&cyc, &p2, &uni, &DivergenceSpec::chi2()).unwrap(), chi2, 1e-14);

    // f₂(t) = (t − 1)²/2, so R₂ = ln(1 + 2·D₂) = ln(1 + χ²)
    let r2 = renyi_divergence(&cyc, &p2, &uni, 2.0).unwrap();
    close(r2, (1.0 + chi2).ln(), 1e-14);
}

#[test]
fn projection_examples() {
    let (cyc, uni) = three_cycle();
    let kl_first = ProjectionProblem::new(Direction::MIsFirstArg, DivergenceSpec::kl(), vec![cyc.clone()], uni.clone(), 0.0)
        .unwrap()
        .solve()
        .unwrap();
    assert_eq!(kl_first.minimizer.rates().max_abs(), 0.0);

    let p2 = power_mean(&cyc, &uni, 2.0).unwrap();
    let reg = regularized_projection(&cyc, &uni, &DivergenceSpec::chi2(), Direction::MIsSecondArg, 0.0).unwrap();
    assert!(reg.minimizer.max_off_diagonal_diff(&p2) <= 1e-8);
}

#[test]
fn two_state_functionals() {
    let (m, pi) = two_state();
    close(spectral_report(&m, &pi).unwrap().lambda2, 1.0 + 2.0, 1e-12);
    // from state 1 the wait for state 2 is Exp(1): E τ = 1, E e^{−τ} = 1/2
    let q = HittingQuery::new([1], 2, 0.0).unwrap();
    close(expected_hitting(&m, &pi, &q).unwrap(), (2.0 / 3.0) * 1.0, 1e-12);
    let q = HittingQuery::new([1], 2, 1.0).unwrap();
    close(laplace_hitting(&m, &pi, &q).unwrap(), (2.0 / 3.0) * 0.5 + 1.0 / 3.0, 1e-12);
    // g = (−1/3, 2/3) solves Mg = h with π(g) = 0
    let h = [1.0, -2.0];
    let g = [-1.0 / 3.0, 2.0 / 3.0];
    let inner = (2.0 / 3.0) * h[0] * g[0] + (1.0 / 3.0) * h[1] * g[1];
    close(asymptotic_variance(&m, &pi, &h).unwrap(), -2.0 * inner, 1e-12);
}

#[test]
fn additive_cycle_functionals() {
    let (cyc, uni) = three_cycle();
    let p1 = power_mean(&cyc, &uni, 1.0).unwrap();
    let r = spectral_report(&p1, &uni).unwrap();
    close(r.lambda2, 1.5, 1e-12);
    close(r.t_av, 2.0 / 1.5, 1e-12);
    close(eigentime_by_hitting(&p1, &uni).unwrap(), 4.0 / 3.0, 1e-12);
    // (−P₁)h = 1 on {1, 2}: h(1) = h(2) = 2
    let q = HittingQuery::new([0], 3, 0.0).unwrap();
    close(expected_hitting(&p1, &uni, &q).unwrap(), (2.0 + 2.0) / 3.0, 1e-12);
}

#[test]
fn peskun_witness() {
    let pi = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
    let l = Generator::from_fn(3, |x, y| 0.2 + ((x + 2 * y) % 3) as f64 * 0.5).unwrap();
    let p1 = power_mean(&l, &pi, 1.0).unwrap();
    let p2 = power_mean(&l, &pi, 2.0).unwrap();
    let out = peskun_dominates(&p1, &p2).unwrap();
    assert!(!out.dominates);
    let (x, y) = out.witness.unwrap();
    assert!(p1.rate(x, y) < p2.rate(x, y));
}
