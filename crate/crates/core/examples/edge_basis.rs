//! Evaluate the lowest- and second-order edge bases and push them to a
//! physical tetrahedron with the covariant Piola map.

use edgefem::mesh::AffineMap;
use edgefem::reference_element::{piola_push, CurlBasis};
use nalgebra::{Matrix3, Vector3};

fn main() -> edgefem::error::Result<()> {
    let p = Vector3::new(0.2, 0.3, 0.1);
    let map = AffineMap::new(Vector3::new(1.0, 0.0, 0.0), Matrix3::new(2.0, 0.5, 0.0, 0.0, 1.0, 0.3, 0.0, 0.0, 0.5))?;
    for k in [1, 2] {
        let basis = CurlBasis::new(k)?;
        let (values, curls) = basis.eval_both(&p);
        let (pv, pc) = piola_push(&values, &curls, map.jacobian())?;
        println!("k = {k}: {} DOFs, DOF matrix condition {:.1}", basis.n_dofs(), basis.dof_matrix_condition());
        for (i, (v, c)) in pv.iter().zip(&pc).enumerate().take(6) {
            println!("  phi_{i} = [{:+.4}, {:+.4}, {:+.4}]  curl = [{:+.4}, {:+.4}, {:+.4}]", v.x, v.y, v.z, c.x, c.y, c.z);
        }
    }
    Ok(())
}
