//! Legacy ASCII VTK export of meshes and vertex-sampled solution fields.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::fespace::FEFunction;
use crate::mesh::Mesh;

/// Writes an unstructured-grid VTK file with one point-data array per
/// field. Fields are sampled at mesh vertices (the leading nodes of every
/// space), so higher-order information is visualized linearly.
pub fn write_vtk<W: Write>(
    w: &mut W,
    mesh: &Mesh,
    fields: &[(&str, &FEFunction)],
) -> io::Result<()> {
    for (name, f) in fields {
        assert!(
            f.space.mesh.n_vertices() == mesh.n_vertices()
                && f.space.mesh.n_cells() == mesh.n_cells(),
            "field {name} lives on a different mesh"
        );
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "decfem solution")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for v in &mesh.vertices {
        writeln!(w, "{:.12e} {:.12e} 0.0", v[0], v[1])?;
    }
    writeln!(w, "CELLS {} {}", mesh.n_cells(), 4 * mesh.n_cells())?;
    for c in &mesh.cells {
        writeln!(w, "3 {} {} {}", c[0], c[1], c[2])?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.n_cells())?;
    for _ in 0..mesh.n_cells() {
        writeln!(w, "5")?;
    }
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
    for (name, f) in fields {
        let nc = f.space.ncomp();
        let at = |v: usize, c: usize| f.coeffs[v * nc + c];
        match nc {
            1 => {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in 0..mesh.n_vertices() {
                    writeln!(w, "{:.12e}", at(v, 0))?;
                }
            }
            2 => {
                writeln!(w, "VECTORS {name} double")?;
                for v in 0..mesh.n_vertices() {
                    writeln!(w, "{:.12e} {:.12e} 0.0", at(v, 0), at(v, 1))?;
                }
            }
            3 => {
                // Stored symmetric-tensor components as separate scalars.
                for (c, suffix) in ["_11", "_12", "_22"].iter().enumerate() {
                    writeln!(w, "SCALARS {name}{suffix} double 1")?;
                    writeln!(w, "LOOKUP_TABLE default")?;
                    for v in 0..mesh.n_vertices() {
                        writeln!(w, "{:.12e}", at(v, c))?;
                    }
                }
            }
            _ => unreachable!("unsupported component count {nc}"),
        }
    }
    Ok(())
}

pub fn write_vtk_file<P: AsRef<Path>>(
    path: P,
    mesh: &Mesh,
    fields: &[(&str, &FEFunction)],
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vtk(&mut w, mesh, fields)
}
