//! Certifying a K-means output, repairing it with one move, and comparing
//! against the exhaustive optimum.

use lokmeans::harness::counterexample_dataset;
use lokmeans::{
    brute_force_best, certify_c_local, certify_d_local, cluster_stats, d_lo_step, optimal_centers, Assignment,
    Divergence, Tolerances,
};

fn main() -> lokmeans::Result<()> {
    let data = counterexample_dataset();
    let div = Divergence::SquaredEuclidean;
    let mut p = Assignment::new(vec![0, 0, 0, 1, 1], 2)?;
    let mut centers = optimal_centers(&data, &p)?;

    let c = certify_c_local(&data, &p, &centers, &div, &Tolerances::default())?;
    let d = certify_d_local(&data, &p, &div, 0.0)?;
    println!("k-means output: c-local {:?} ({} tie), d-local {:?}", c.kind, c.tie_count, d.kind);
    if let Some(w) = d.witness {
        println!("  best move: point {} to cluster {}, loss change {:.6}", w.point, w.to_cluster, w.delta);
    }

    let mut stats = cluster_stats(&data, &p);
    while let Some(mv) = d_lo_step(&data, &mut p, &mut stats, &mut centers, &div, 0.0) {
        println!("applied move of point {} (change {:.6})", mv.point, mv.delta);
        centers = optimal_centers(&data, &p)?;
    }
    let d = certify_d_local(&data, &p, &div, 1e-12)?;
    println!("after moves: labels {:?}, d-local {:?}", p.labels(), d.kind);

    let (best, loss) = brute_force_best(&data, 2, &div)?;
    println!("global optimum {:?} with loss {loss:.6}", best.labels());
    Ok(())
}
