//! Classical-scaling initialization on a gedanken instance: points with
//! complete exact distances are recovered up to a rigid motion, and sparse
//! distance sets degrade gracefully through the shortest-path completion.

use mdgp::{
    fang_oleary_init, procrustes_error, shortest_path_completion, CompletionAlgorithm,
    Conformation, MdgpInstance,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn build(points: &[[f64; 3]], cutoff: f64) -> MdgpInstance {
    let n = points.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = (0..3)
                .map(|k| (points[i][k] - points[j][k]).powi(2))
                .sum::<f64>()
                .sqrt();
            if d <= cutoff {
                pairs.push((i, j, d));
            }
        }
    }
    let truth = Conformation::new(3, points.iter().flatten().copied().collect()).unwrap();
    MdgpInstance::new(3, n, pairs, Some(truth)).unwrap()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let points: Vec<[f64; 3]> = (0..25)
        .map(|_| [0; 3].map(|_| rng.gen_range(-4.0..4.0)))
        .collect();

    // complete data: exact recovery
    let complete = build(&points, f64::INFINITY);
    let init = fang_oleary_init(&complete).unwrap();
    let align = procrustes_error(init.coords(), complete.ground_truth().unwrap().coords()).unwrap();
    println!("complete distances : E = {:.3e}", align.max_error);
    assert!(align.max_error <= 1e-6);

    // sparse data: completion by shortest paths, recovery only approximate
    let sparse = build(&points, 5.0);
    println!(
        "sparse instance    : {} of {} pairs kept",
        sparse.pairs().len(),
        complete.pairs().len()
    );
    let completed = shortest_path_completion(&sparse, CompletionAlgorithm::Dijkstra).unwrap();
    let fw = shortest_path_completion(&sparse, CompletionAlgorithm::FloydWarshall).unwrap();
    let max_gap = completed
        .as_slice()
        .iter()
        .zip(fw.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("dijkstra vs floyd-warshall max gap: {max_gap:.1e}");
    assert!(max_gap <= 1e-12);

    let init = fang_oleary_init(&sparse).unwrap();
    let align = procrustes_error(init.coords(), sparse.ground_truth().unwrap().coords()).unwrap();
    println!("sparse distances   : E = {:.3e} (approximate, as expected)", align.max_error);
}
