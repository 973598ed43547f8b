//! Text writers for fields and interfaces. Every float is printed with 17
//! significant digits, so that identical runs give identical bytes.

use std::io::Write;

use crate::error::Result;
use crate::grid::ScalarField;
use crate::levelset::InterfacePointSet;

/// `v` in scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        // Avoid "-0" so sign-of-zero noise does not leak into diffs.
        return "0.0000000000000000e0".into();
    }
    format!("{v:.16e}")
}

/// Legacy VTK `STRUCTURED_POINTS`, ASCII, x fastest.
pub fn write_vtk_field(mut w: impl Write, field: &ScalarField, name: &str, title: &str) -> Result<()> {
    let grid = field.grid();
    let d = grid.dims();
    let o = grid.origin();
    let h = grid.h();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", d[0], d[1], d[2])?;
    writeln!(w, "ORIGIN {} {} {}", fmt_f64(o[0]), fmt_f64(o[1]), fmt_f64(o[2]))?;
    writeln!(w, "SPACING {} {} {}", fmt_f64(h), fmt_f64(h), fmt_f64(h))?;
    writeln!(w, "POINT_DATA {}", grid.len())?;
    writeln!(w, "SCALARS {} double 1", sanitize(name))?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in field.data() {
        writeln!(w, "{}", fmt_f64(*v))?;
    }
    Ok(())
}

/// `i,j,k,x,y,z,value` with global lattice indices; zero entries are
/// skipped when `sparse`.
pub fn write_field_csv(mut w: impl Write, field: &ScalarField, sparse: bool) -> Result<()> {
    let grid = field.grid();
    writeln!(w, "i,j,k,x,y,z,value")?;
    for (l, &v) in field.data().iter().enumerate() {
        if sparse && v == 0.0 {
            continue;
        }
        let p = grid.lattice(grid.unravel(l));
        let x = grid.position(l);
        writeln!(w, "{},{},{},{},{},{},{}", p[0], p[1], p[2], fmt_f64(x[0]), fmt_f64(x[1]), fmt_f64(x[2]), fmt_f64(v))?;
    }
    Ok(())
}

pub const INTERFACE_CSV_HEADER: &str = "n,t,x,y,z,nx,ny,nz,m,dS,axis,refined";

/// One row per payload point, `axis` as 0, 1 or 2.
pub fn write_interface_csv(mut w: impl Write, set: &InterfacePointSet, header: bool) -> Result<()> {
    if header {
        writeln!(w, "{INTERFACE_CSV_HEADER}")?;
    }
    for p in &set.points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            set.n,
            fmt_f64(set.t),
            fmt_f64(p.x[0]),
            fmt_f64(p.x[1]),
            fmt_f64(p.x[2]),
            fmt_f64(p.normal[0]),
            fmt_f64(p.normal[1]),
            fmt_f64(p.normal[2]),
            fmt_f64(p.curvature),
            fmt_f64(p.area),
            p.axis.idx(),
            u8::from(set.refined)
        )?;
    }
    Ok(())
}

/// Point cloud as legacy VTK `POLYDATA` with normals, curvature and area
/// elements attached.
pub fn write_interface_vtk(mut w: impl Write, set: &InterfacePointSet, title: &str) -> Result<()> {
    let n = set.points.len();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {n} double")?;
    for p in &set.points {
        writeln!(w, "{} {} {}", fmt_f64(p.x[0]), fmt_f64(p.x[1]), fmt_f64(p.x[2]))?;
    }
    writeln!(w, "VERTICES {n} {}", 2 * n)?;
    for k in 0..n {
        writeln!(w, "1 {k}")?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "NORMALS normal double")?;
    for p in &set.points {
        writeln!(w, "{} {} {}", fmt_f64(p.normal[0]), fmt_f64(p.normal[1]), fmt_f64(p.normal[2]))?;
    }
    for (name, get) in [("curvature", 0usize), ("area", 1)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for p in &set.points {
            writeln!(w, "{}", fmt_f64(if get == 0 { p.curvature } else { p.area }))?;
        }
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if s.is_empty() {
        "field".into()
    } else {
        s
    }
}
