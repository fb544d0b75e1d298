//! The reflection heuristic: an atom trapped on the wrong side of the plane
//! spanned by three well-placed neighbors is mirrored back when that strictly
//! reduces its own stress terms.

use mdgp::{plane_reflection, reflect_improve, stress, Conformation, MdgpInstance};

fn main() {
    // a mirrored point and its image are both consistent with three coplanar
    // anchors; the fourth off-plane neighbor disambiguates
    let p = [0.5, 0.5, -1.0];
    let reflected = plane_reflection(
        p,
        [0.0, 0.0, 0.0],
        [1.5, 0.0, 0.0],
        [0.0, 1.5, 0.0],
    )
    .unwrap();
    println!("reflection of {p:?} across z = 0: {reflected:?}");

    let points: [[f64; 3]; 5] = [
        [0.0, 0.0, 0.0],
        [1.5, 0.0, 0.0],
        [0.0, 1.5, 0.0],
        [0.4, 0.4, 1.2],
        [0.5, 0.5, 1.0],
    ];
    let dist = |i: usize, j: usize| -> f64 {
        (0..3)
            .map(|k| (points[i][k] - points[j][k]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let pairs: Vec<(usize, usize, f64)> = [
        (0, 1),
        (0, 2),
        (1, 2),
        (0, 3),
        (3, 4),
        (0, 4),
        (1, 4),
        (2, 4),
    ]
    .iter()
    .map(|&(i, j)| (i, j, dist(i, j)))
    .collect();
    let truth = Conformation::new(3, points.iter().flatten().copied().collect()).unwrap();
    let instance = MdgpInstance::new(3, 5, pairs, Some(truth)).unwrap();

    let mut x = instance.ground_truth().unwrap().clone();
    x.coords_mut()[4 * 3 + 2] = -1.0; // mirror atom 4 below the plane
    println!("stress with the mirrored atom : {:.3e}", stress(&instance, &x));
    let changed = reflect_improve(&instance, &mut x, 200).unwrap();
    println!("reflection applied: {changed}");
    println!("stress after the repair       : {:.3e}", stress(&instance, &x));
    assert!(changed);
    assert!(stress(&instance, &x) < 1e-20);
}
