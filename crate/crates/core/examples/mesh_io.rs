//! Build a structured Kuhn mesh, report its metrics and round-trip it
//! through the Gmsh 2.2 ASCII format.

use edgefem::mesh::gmsh::{read_gmsh, write_gmsh};
use edgefem::mesh::{mesh_metrics, structured_cube_mesh};

fn main() -> edgefem::error::Result<()> {
    let mesh = structured_cube_mesh(4);
    let m = mesh_metrics(&mesh);
    println!(
        "{} vertices, {} tets, {} edges ({} on the boundary), {} faces",
        mesh.vertices().len(),
        mesh.n_tets(),
        mesh.edges().len(),
        mesh.boundary_edges().len(),
        mesh.faces().len()
    );
    println!("h = {:.4}, h_min = {:.4}, shape regularity = {:.3}", m.h, m.h_min, m.shape_regularity);
    let path = std::env::temp_dir().join("edgefem_cube4.msh");
    write_gmsh(&mesh, &path)?;
    let back = read_gmsh(&path)?;
    println!("re-read {} tets from {}", back.n_tets(), path.display());
    Ok(())
}
