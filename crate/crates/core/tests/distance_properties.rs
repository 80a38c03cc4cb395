mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svcnav::scenes::paper_corridor;
use svcnav::{Ball, Environment, Obstacle, Point, Vector};

fn corridor() -> Environment {
    paper_corridor(-12.0, 15.0, 0.5).unwrap()
}

fn ball_world() -> (Environment, Vec<(Vec<f64>, f64)>) {
    let balls = vec![
        (vec![2.0, 2.0], 1.0),
        (vec![-3.0, 1.0], 0.5),
        (vec![0.5, -4.0], 1.5),
    ];
    let env = Environment::new(
        Some(Ball::new([0.0, 0.0], 8.0)),
        balls.iter().map(|(c, r)| Obstacle::ball(c.clone(), *r)).collect(),
    );
    (env, balls)
}

fn free_point(env: &Environment, rng: &mut ChaCha8Rng, lo: [f64; 2], hi: [f64; 2]) -> Point {
    loop {
        let p = Point::from([rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])]);
        if env.contains(&p).unwrap() {
            return p;
        }
    }
}

#[test]
fn corridor_distance_at_the_reference_pose() {
    // Closest point lies on the upper wall near x₁ ≈ 0.4845; the value was
    // obtained by root-finding the squared distance in high precision.
    let q = corridor().boundary_query(&Point::from([0.0, 3.0])).unwrap();
    assert!(
        (q.distance - 0.503_479_646_896_381_1).abs() < 1e-9,
        "{}",
        q.distance
    );
    assert!((q.distance - common::corridor_distance_oracle([0.0, 3.0])).abs() < 1e-6);
}

#[test]
fn implicit_distance_matches_boundary_sampling() {
    let env = corridor();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let p = free_point(&env, &mut rng, [-9.0, -5.0], [12.0, 5.0]);
        let d = env.boundary_query(&p).unwrap().distance;
        let oracle = common::corridor_distance_oracle([p[0], p[1]]);
        assert!((d - oracle).abs() <= 1e-3, "at {p:?}: {d} vs {oracle}");
        assert!(
            d <= oracle + 1e-9,
            "sampling can only overestimate: {d} vs {oracle}"
        );
    }
}

#[test]
fn closest_point_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for env in [corridor(), ball_world().0] {
        for _ in 0..300 {
            let p = free_point(&env, &mut rng, [-8.0, -5.0], [8.0, 5.0]);
            let q = env.boundary_query(&p).unwrap();
            if q.distance <= 0.0 {
                continue;
            }
            let c = q.closest_point.unwrap();
            let g = q.gradient.unwrap();
            assert!(((&p - &c).norm() - q.distance).abs() <= 1e-9);
            assert!((g.dot(&(&p - &c)) - q.distance).abs() <= 1e-9);
            assert!((g.norm() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    // The corridor troughs have curvature radius 1/4, so points are kept
    // within 0.2 of the boundary where the closest point is unique.
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (env, band) in [(corridor(), 0.2), (ball_world().0, 0.4)] {
        let mut checked = 0;
        while checked < 200 {
            let p = free_point(&env, &mut rng, [-8.0, -5.0], [8.0, 5.0]);
            let q = env.boundary_query(&p).unwrap();
            if !(q.distance > 1e-3 && q.distance < band) {
                continue;
            }
            let g = q.gradient.unwrap();
            for axis in 0..2 {
                let e = Vector::basis(2, axis);
                let plus = env.boundary_query(&p.add_scaled(h, &e)).unwrap().distance;
                let minus = env.boundary_query(&p.add_scaled(-h, &e)).unwrap().distance;
                let fd = (plus - minus) / (2.0 * h);
                assert!(
                    (fd - g[axis]).abs() <= 1e-4,
                    "at {p:?} axis {axis}: {fd} vs {}",
                    g[axis]
                );
            }
            checked += 1;
        }
    }
}

#[test]
fn distance_is_one_lipschitz() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for env in [corridor(), ball_world().0] {
        for _ in 0..5_000 {
            let a = free_point(&env, &mut rng, [-8.0, -5.0], [8.0, 5.0]);
            let b = free_point(&env, &mut rng, [a[0] - 1.0, a[1] - 1.0], [a[0] + 1.0, a[1] + 1.0]);
            let da = env.boundary_query(&a).unwrap().distance;
            let db = env.boundary_query(&b).unwrap().distance;
            assert!((da - db).abs() <= a.distance(&b) + 1e-12, "{a:?} {b:?}");
        }
    }
}

#[test]
fn saturated_rays_return_the_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for env in [corridor(), ball_world().0] {
        let mut checked = 0;
        while checked < 300 {
            let p = free_point(&env, &mut rng, [-8.0, -5.0], [8.0, 5.0]);
            let d = env.boundary_query(&p).unwrap().distance;
            let range = rng.gen_range(0.05..2.0);
            if d <= range {
                continue;
            }
            let a: f64 = rng.gen_range(-3.2..3.2);
            assert_eq!(
                env.ray_cast(&p, &Vector::from([a.cos(), a.sin()]), range)
                    .unwrap(),
                range
            );
            checked += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn ball_worlds_match_the_analytic_distance(x in -7.9..7.9f64, y in -7.9..7.9f64) {
        let (env, balls) = ball_world();
        let p = Point::from([x, y]);
        prop_assume!(env.contains(&p).unwrap());
        let analytic = common::sphere_world_distance(&[x, y], Some((&[0.0, 0.0], 8.0)), &balls);
        prop_assert!((env.boundary_query(&p).unwrap().distance - analytic).abs() <= 1e-12);
    }

    #[test]
    fn three_dimensional_balls_match(c in prop::collection::vec(-3.0..3.0f64, 3), r in 0.2..2.0f64,
                                     x in prop::collection::vec(-6.0..6.0f64, 3)) {
        let env = Environment::new(None, vec![Obstacle::ball(c.clone(), r)]);
        let p = Point::from(x.clone());
        prop_assume!(env.contains(&p).unwrap());
        let analytic = common::sphere_world_distance(&x, None, &[(c, r)]);
        prop_assert!((env.boundary_query(&p).unwrap().distance - analytic).abs() <= 1e-12);
    }
}
