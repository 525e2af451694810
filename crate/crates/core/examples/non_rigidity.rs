//! A C0 limit of Poisson maps that sends one coisotropic submanifold onto another
//! but does not send characteristic leaves to characteristic leaves.

use poissonlab::c0lab::{char_leaf_image_analysis, leaf_mapping_check, leafwise_symplectic_check};
use poissonlab::chart::Grid;
use poissonlab::poisson::TOL_RANK;
use poissonlab::scenarios::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("translation-cubic")?.compile()?;
    let pi = &model.poisson;
    let c = &model.submanifolds[0];
    let fam = &model.families[0];
    let tau = model.maps.iter().find(|(n, _)| n == "tau").unwrap().1.at(0.0)?;

    let member = fam.member(1e4)?;
    let probes = Grid::new(vec![-0.5; 3], vec![0.5; 3], vec![4; 3]).nodes();
    println!("member n = 1e4: leafwise symplectic residual {:.3e}", leafwise_symplectic_check(pi, &member, &probes, TOL_RANK)?);
    let groups = vec![vec![vec![0.0, 0.0, 0.5], vec![0.5, -0.3, 0.5]], vec![vec![0.2, 0.2, 0.9], vec![-0.4, 0.1, 0.9]]];
    let lm = leaf_mapping_check(pi, &member, &model.atlas, &groups, TOL_RANK)?;
    println!("member n = 1e4: leaves preserved {}", lm.preserved());

    let images = char_leaf_image_analysis(pi, c, c, &tau, &[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 1.0]], 0.8, TOL_RANK)?;
    for im in images {
        println!(
            "seed {:?}: source dims {:?}, image dims {:?}, residual {:.1e}, jump {}, drop {}",
            im.seed, dedup(&im.source_dims), dedup(&im.image_dims), im.max_residual, im.jump, im.drop
        );
    }
    Ok(())
}

fn dedup(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}
