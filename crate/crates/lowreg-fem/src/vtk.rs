//! Legacy ASCII VTK export of a simplicial mesh with an optional
//! cell-averaged vector field.

use std::io::Write;
use std::path::Path;

use crate::error::FemError;
use crate::geometry::Point;
use crate::mesh::SimplicialMesh;

/// Write the mesh as a legacy ASCII unstructured grid. `cell_vectors`, if
/// given, is attached as CELL_DATA and must have one vector per cell.
pub fn write_vtk(
    path: &Path,
    mesh: &SimplicialMesh,
    cell_vectors: Option<(&str, &[Point])>,
) -> Result<(), FemError> {
    if let Some((_, v)) = cell_vectors {
        if v.len() != mesh.n_cells() {
            return Err(FemError::InvalidParameter(format!(
                "cell data length {} does not match cell count {}",
                v.len(),
                mesh.n_cells()
            )));
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("lowreg-fem export\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");
    out.push_str(&format!("POINTS {} double\n", mesh.vertices.len()));
    for p in &mesh.vertices {
        out.push_str(&format!("{:.17e} {:.17e} {:.17e}\n", p[0], p[1], p[2]));
    }
    let nv = mesh.dim + 1;
    out.push_str(&format!(
        "CELLS {} {}\n",
        mesh.n_cells(),
        mesh.n_cells() * (nv + 1)
    ));
    for c in &mesh.cells {
        out.push_str(&c.len().to_string());
        for &v in c {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    let cell_type = if mesh.dim == 3 { 10 } else { 5 };
    out.push_str(&format!("CELL_TYPES {}\n", mesh.n_cells()));
    for _ in 0..mesh.n_cells() {
        out.push_str(&format!("{cell_type}\n"));
    }
    if let Some((name, vectors)) = cell_vectors {
        out.push_str(&format!("CELL_DATA {}\n", mesh.n_cells()));
        out.push_str(&format!("VECTORS {name} double\n"));
        for v in vectors {
            out.push_str(&format!("{:.17e} {:.17e} {:.17e}\n", v[0], v[1], v[2]));
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
