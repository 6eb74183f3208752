// temporary probe — will be deleted
use feas_core::generators::{elasticity2d_assembly, ElasticityBarSpec};
use feas_core::eig::sym_eig;

fn probe(spec: &ElasticityBarSpec, label: &str) {
    let (a, _) = elasticity2d_assembly(spec).unwrap();
    let k = a.assemble();
    let n = a.n();
    let mut worst = f64::INFINITY;
    let mut singular = 0usize;
    let mut total = 0usize;
    for x in 0..n { for y in (x+1)..n { for z in (y+1)..n {
        total += 1;
        let keep: Vec<usize> = (0..n).filter(|&i| i != x && i != y && i != z).collect();
        let sub = k.principal_submatrix(&keep).unwrap();
        let eig = sym_eig(&sub.to_dense(), 1e-10).unwrap();
        let min = *eig.values.last().unwrap();
        let rel = min / eig.values[0];
        if rel < worst { worst = rel; }
        if eig.rank < keep.len() { singular += 1; }
    }}}
    println!("{label}: n={n} m={} subsets={total} singular={singular} worst rel min eig={worst:.3e}", a.m());
}

#[test]
fn probe_mrd() {
    probe(&ElasticityBarSpec { bars: 1, nx: 1, ny: 1, ..Default::default() }, "1x1 jittered");
    probe(&ElasticityBarSpec { bars: 1, nx: 2, ny: 1, ..Default::default() }, "2x1 jittered");
    probe(&ElasticityBarSpec { bars: 2, nx: 2, ny: 1, ..Default::default() }, "2 bars 2x1 jittered");
}
